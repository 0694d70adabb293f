"""Shot-level simulation of the snippet-comparison verification protocol.

Each shot yields indices ``(x, y)``, a Bell-measurement outcome ``b`` in
``{-1, 0, +1}`` and a weight ``w' = |tau'_x / alpha'_x|^2 + |tau'_y / alpha'_y|^2``.
The fidelity estimate is ``mean(w' b) / mean(w' b^2)``.

Two versions are simulated:

* basic: a uniformly random ``v`` pairs ``x`` with ``y = x ^ v``; equivalent to
  the general version with a uniform auxiliary state and ``alpha'_x = 2^{-n/2}``;
* general: an auxiliary register in state ``alpha`` is swapped with the test
  register under a ``|+>`` control, importance-sampling the pairs.

Pairs are drawn without materializing the ``d x d`` joint table: a fair coin
decides which of ``x`` and ``y`` comes from ``|mu|^2``. The outcome ``b`` is
drawn from the exact conditional distribution of the two-ancilla Bell
measurement. Only the weights use oracle values, so the estimator sees the
same information a hardware run would.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .statevector import DiscreteSampler, StateVector

B_VALUES = np.array([-1, 0, 1], dtype=np.int8)


class InsufficientDataError(ValueError):
    """Raised when every trial has ``b = 0`` so no ratio can be formed."""


class SupportError(ValueError):
    """The auxiliary state vanishes where the target does not."""


class AmplitudeOracle:
    """Returns ``scale * amplitude(x)``: target amplitudes up to an unknown constant.

    ``scale`` is kept for tests; the protocol never reads it.
    """

    def __init__(self, query: Callable[[np.ndarray], np.ndarray], scale: complex = 1.0):
        self._query = query
        self.scale = scale

    @classmethod
    def from_state(cls, state: StateVector | np.ndarray, scale: complex = 1.0) -> AmplitudeOracle:
        amps = np.asarray(state, dtype=np.complex128)
        return cls(lambda x: amps[x], scale)

    @classmethod
    def uniform(cls, n_qubits: int, scale: complex = 1.0) -> AmplitudeOracle:
        value = 2.0 ** (-n_qubits / 2)
        return cls(lambda x: np.full(np.shape(x), value, dtype=np.complex128), scale)

    def __call__(self, x):
        return self.scale * np.asarray(self._query(x), dtype=np.complex128)


def _as_oracle(target) -> AmplitudeOracle:
    if isinstance(target, AmplitudeOracle):
        return target
    return AmplitudeOracle.from_state(target)


class TrialRecord(NamedTuple):
    x: int
    y: int
    b: int
    w: float


@dataclass
class Trials:
    """A batch of shots stored column-wise."""

    x: np.ndarray
    y: np.ndarray
    b: np.ndarray
    w: np.ndarray

    def __len__(self) -> int:
        return self.b.size

    def records(self):
        for x, y, b, w in zip(self.x, self.y, self.b, self.w):
            yield TrialRecord(int(x), int(y), int(b), float(w))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y", "b", "w"])
            for r in self.records():
                writer.writerow([r.x, r.y, r.b, repr(r.w)])

    @classmethod
    def from_csv(cls, path) -> Trials:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            np.array([int(r["x"]) for r in rows], dtype=np.int64),
            np.array([int(r["y"]) for r in rows], dtype=np.int64),
            np.array([int(r["b"]) for r in rows], dtype=np.int8),
            np.array([float(r["w"]) for r in rows]),
        )


# --------------------------------------------------------------------------
# Shot sampling
# --------------------------------------------------------------------------


def _bell_outcomes(a0, a1, c0, c1, rng: np.random.Generator) -> np.ndarray:
    """Sample ``b`` for ancilla states ``a0|0> + a1|1>`` and ``c0|0> + c1|1>``.

    Neither state needs to be normalized. ``P(Phi_+-) = |a0 c0 +- a1 c1|^2 / 2``
    after normalization; a zero second ancilla (both target amplitudes zero)
    always gives ``b = 0``, which carries zero weight anyway.
    """
    na = np.abs(a0) ** 2 + np.abs(a1) ** 2
    nc = np.abs(c0) ** 2 + np.abs(c1) ** 2
    if np.any(na == 0):
        raise FloatingPointError("sampled a pair with zero conditional norm")
    denom = 2.0 * na * np.where(nc > 0, nc, 1.0)
    p_plus = np.where(nc > 0, np.abs(a0 * c0 + a1 * c1) ** 2 / denom, 0.0)
    p_minus = np.where(nc > 0, np.abs(a0 * c0 - a1 * c1) ** 2 / denom, 0.0)
    u = rng.random(np.shape(a0))
    return np.where(u < p_plus, 1, np.where(u < p_plus + p_minus, -1, 0)).astype(np.int8)


def _ratio(tau_vals: np.ndarray, alpha_vals: np.ndarray) -> np.ndarray:
    bad = (alpha_vals == 0) & (tau_vals != 0)
    if np.any(bad):
        raise SupportError("auxiliary amplitude is zero where the target amplitude is not")
    safe = np.where(alpha_vals == 0, 1.0, alpha_vals)
    return np.where(alpha_vals == 0, 0.0, tau_vals / safe)


def sample_trials_general(
    mu: StateVector,
    alpha: StateVector,
    tau_oracle: AmplitudeOracle,
    alpha_oracle: AmplitudeOracle,
    n_trials: int,
    rng: np.random.Generator,
    mu_sampler: DiscreteSampler | None = None,
    alpha_sampler: DiscreteSampler | None = None,
) -> Trials:
    """Importance-sampled version with auxiliary state ``alpha``.

    ``alpha`` is the state physically loaded into the auxiliary register;
    ``alpha_oracle`` is what the experimenter believes it to be. They differ
    only when studying a mischaracterized auxiliary state.
    """
    if mu.n_qubits != alpha.n_qubits:
        raise ValueError("test and auxiliary registers differ in size")
    mu_sampler = mu_sampler or DiscreteSampler(mu.probabilities())
    alpha_sampler = alpha_sampler or DiscreteSampler(alpha.probabilities())
    from_mu = mu_sampler.sample(rng, n_trials)
    from_alpha = alpha_sampler.sample(rng, n_trials)
    heads = rng.random(n_trials) < 0.5
    x = np.where(heads, from_mu, from_alpha)
    y = np.where(heads, from_alpha, from_mu)

    m, a = mu.amplitudes, alpha.amplitudes
    rx = _ratio(tau_oracle(x), alpha_oracle(x))
    ry = _ratio(tau_oracle(y), alpha_oracle(y))
    w = np.abs(rx) ** 2 + np.abs(ry) ** 2
    b = _bell_outcomes(m[x] * a[y], m[y] * a[x], ry, rx, rng)
    return Trials(x, y, b, w)


def sample_trials_basic(
    mu: StateVector,
    tau_oracle: AmplitudeOracle,
    n_trials: int,
    rng: np.random.Generator,
    mu_sampler: DiscreteSampler | None = None,
) -> Trials:
    """Basic version: random ``v``, ``y = x ^ v``, ``alpha'_x = 2^{-n/2}``."""
    mu_sampler = mu_sampler or DiscreteSampler(mu.probabilities())
    d = mu.dim
    v = rng.integers(0, d, size=n_trials, dtype=np.int64)
    z = mu_sampler.sample(rng, n_trials)
    heads = rng.random(n_trials) < 0.5
    x = np.where(heads, z, z ^ v)
    y = x ^ v

    m = mu.amplitudes
    tx, ty = tau_oracle(x), tau_oracle(y)
    w = (np.abs(tx) ** 2 + np.abs(ty) ** 2) * float(d)
    b = _bell_outcomes(m[x], m[y], ty, tx, rng)
    return Trials(x, y, b, w)


def sample_trial_general(mu, alpha, tau_oracle, alpha_oracle, rng, mu_sampler=None, alpha_sampler=None) -> TrialRecord:
    t = sample_trials_general(mu, alpha, tau_oracle, alpha_oracle, 1, rng, mu_sampler, alpha_sampler)
    return next(t.records())


def sample_trial_basic(mu, tau_oracle, rng, mu_sampler=None) -> TrialRecord:
    return next(sample_trials_basic(mu, tau_oracle, 1, rng, mu_sampler).records())


# --------------------------------------------------------------------------
# Exact outcome distributions (small n oracles)
# --------------------------------------------------------------------------


@dataclass
class TrialDistribution:
    """``prob[k, x, y]`` for ``b = B_VALUES[k]`` and the normalized weight ``w[x, y]``."""

    prob: np.ndarray
    w: np.ndarray

    def expect(self, fn) -> float:
        """``sum_{x,y,b} p(x, y, b) fn(w, b)``."""
        total = 0.0
        for k, b in enumerate(B_VALUES):
            total += float(np.sum(self.prob[k] * fn(self.w, float(b))))
        return total


def trial_distribution_exact(mu: StateVector, tau: StateVector, alpha: StateVector | None = None) -> TrialDistribution:
    """Joint law of ``(x, y, b)`` for the general version (uniform ``alpha`` by default).

    ``p(x,y,+-1) = (|mu_x|^2|tau_y|^2 + |mu_y|^2|tau_x|^2 +- 2 Re(mu_x tau_y mu_y^* tau_x^*)) / (4 w_xy)``
    and ``b = 0`` takes the rest of ``p(x,y) = (|mu_x|^2|alpha_y|^2 + |mu_y|^2|alpha_x|^2) / 2``.
    """
    m = np.asarray(mu, dtype=complex)
    t = np.asarray(tau, dtype=complex)
    a = np.full(m.size, m.size**-0.5, dtype=complex) if alpha is None else np.asarray(alpha, dtype=complex)
    if m.size > 1 << 8:
        raise ValueError("exact distribution limited to n <= 8")
    pa, pm, pt = np.abs(a) ** 2, np.abs(m) ** 2, np.abs(t) ** 2
    if np.any((pa == 0) & (pt > 0)):
        raise SupportError("alpha lacks support on tau")
    r2 = np.where(pa > 0, pt / np.where(pa > 0, pa, 1.0), 0.0)
    w = r2[:, None] + r2[None, :]
    pair = 0.5 * (pm[:, None] * pa[None, :] + pm[None, :] * pa[:, None])
    direct = pm[:, None] * pt[None, :] + pm[None, :] * pt[:, None]
    cross = 2.0 * np.real(np.outer(m, t) * np.conj(np.outer(t, m)))
    safe_w = np.where(w > 0, 4.0 * w, 1.0)
    p_plus = np.where(w > 0, (direct + cross) / safe_w, 0.0)
    p_minus = np.where(w > 0, (direct - cross) / safe_w, 0.0)
    prob = np.stack([p_minus, pair - p_plus - p_minus, p_plus])
    return TrialDistribution(prob, w)


_PHI_PLUS = np.array([1, 0, 0, 1]) / np.sqrt(2)
_PHI_MINUS = np.array([1, 0, 0, -1]) / np.sqrt(2)


def basic_distribution_exact(mu: StateVector, tau: StateVector) -> np.ndarray:
    """``prob[k, x, v]`` for the basic version, built from the explicit ancilla pair.

    After the CNOT fan-out and measuring ``x``, ancilla 1 holds
    ``(mu_x|0> + mu_{x^v}|1>) / sqrt(2^{n+1})`` (joint with the ``1/2^n`` draw of
    ``v``); ancilla 2 is the normalized ``tau_{x^v}|0> + tau_x|1>``. The Bell
    projections are taken on the Kronecker product of the two.
    """
    m = np.asarray(mu, dtype=complex)
    t = np.asarray(tau, dtype=complex)
    d = m.size
    if d > 1 << 6:
        raise ValueError("basic exact distribution limited to n <= 6")
    prob = np.zeros((3, d, d))
    for x in range(d):
        for v in range(d):
            y = x ^ v
            anc1 = np.array([m[x], m[y]]) / np.sqrt(2.0 * d)
            anc2 = np.array([t[y], t[x]])
            nrm = np.linalg.norm(anc2)
            total = float(np.vdot(anc1, anc1).real)
            if nrm == 0:
                prob[1, x, v] = total
                continue
            pair = np.kron(anc1, anc2 / nrm)
            prob[2, x, v] = abs(np.vdot(_PHI_PLUS, pair)) ** 2
            prob[0, x, v] = abs(np.vdot(_PHI_MINUS, pair)) ** 2
            prob[1, x, v] = total - prob[2, x, v] - prob[0, x, v]
    return prob


# --------------------------------------------------------------------------
# Estimators
# --------------------------------------------------------------------------


@dataclass
class EstimateResult:
    f_simple: float
    f_corrected: float
    a_mean: float
    b_mean: float
    correction: float
    variance: float
    n_trials: int
    flag: str | None = None

    @property
    def infidelity(self) -> float:
        return 1.0 - self.f_corrected

    @property
    def infidelity_simple(self) -> float:
        return 1.0 - self.f_simple


def estimate_simple(trials: Trials) -> tuple[float, float, float]:
    """``(A~, B~, A~/B~)`` with ``A~ = mean(w b)`` and ``B~ = mean(w b^2)``."""
    if len(trials) < 1:
        raise InsufficientDataError("no trials")
    wb = trials.w * trials.b
    a = float(np.mean(wb))
    bm = float(np.mean(wb * trials.b))
    if bm == 0:
        raise InsufficientDataError("all trials gave b = 0")
    return a, bm, a / bm


def ratio_estimates(a_terms: np.ndarray, b_terms: np.ndarray) -> dict[str, np.ndarray]:
    """Simple and bias-corrected ratio estimates along the last axis.

    With ``a_i = A_i / A~`` and ``b_i = B_i / B~`` the relative correction is
    ``C~ = sum_i (a_i - b_i)(b_i - 1) / (N (N - 1))``, i.e. the sample
    estimate of ``Cov(A~, B~)/(A B) - Var(B~)/B^2``; the corrected value is
    ``(A~/B~)(1 + C~)``. It is evaluated as
    ``F + sum_i (A_i - F B_i)(b_i - 1) / (B~ N (N - 1))``, which stays finite
    as ``A~ -> 0``. Slices with ``B~ = 0`` give NaN throughout; slices with
    ``A~ = 0`` keep the simple estimate and NaN correction.
    """
    a_terms = np.asarray(a_terms, dtype=np.float64)
    b_terms = np.asarray(b_terms, dtype=np.float64)
    n = a_terms.shape[-1]
    if n < 2:
        raise InsufficientDataError("bias correction needs at least two trials")
    a_mean = a_terms.mean(axis=-1)
    b_mean = b_terms.mean(axis=-1)
    ok = b_mean != 0
    b_safe = np.where(ok, b_mean, 1.0)
    f = np.where(ok, a_mean / b_safe, np.nan)
    resid = a_terms - f[..., None] * b_terms
    rel_b = b_terms / b_safe[..., None] - 1.0
    shift = np.sum(resid * rel_b, axis=-1) / (b_safe * n * (n - 1))
    has_a = ok & (a_mean != 0)
    f_corr = np.where(has_a, f + shift, f)
    corr = np.where(has_a, shift / np.where(has_a, f, 1.0), np.nan)
    var = np.var(resid, axis=-1, ddof=1) / (n * b_safe**2)
    var = np.where(ok, var, np.nan)
    return {
        "a_mean": a_mean,
        "b_mean": b_mean,
        "f_simple": f,
        "f_corrected": f_corr,
        "correction": corr,
        "variance": var,
    }


def estimate_bias_corrected(trials: Trials) -> EstimateResult:
    """Both estimators, the relative correction and a plug-in variance.

    The variance is the delta-method value ``var(A_i - F B_i) / (N B~^2)``.
    """
    n = len(trials)
    if n < 2:
        raise InsufficientDataError("bias correction needs at least two trials")
    wb = trials.w * trials.b
    est = ratio_estimates(wb, wb * trials.b)
    vals = {k: float(v) for k, v in est.items()}
    flag = None
    if vals["b_mean"] == 0:
        flag = "insufficient-data"
    elif vals["a_mean"] == 0:
        flag = "correction-undefined"
    return EstimateResult(
        f_simple=vals["f_simple"],
        f_corrected=vals["f_corrected"],
        a_mean=vals["a_mean"],
        b_mean=vals["b_mean"],
        correction=vals["correction"],
        variance=vals["variance"],
        n_trials=n,
        flag=flag,
    )


def sample_trials(
    mu: StateVector,
    tau,
    n_trials: int,
    rng: np.random.Generator,
    alpha: StateVector | None = None,
    alpha_oracle: AmplitudeOracle | None = None,
    mu_sampler: DiscreteSampler | None = None,
) -> Trials:
    """Basic version when ``alpha`` is None, general version otherwise."""
    tau_oracle = _as_oracle(tau)
    if alpha is None:
        return sample_trials_basic(mu, tau_oracle, n_trials, rng, mu_sampler)
    alpha_oracle = alpha_oracle or AmplitudeOracle.from_state(alpha)
    return sample_trials_general(mu, alpha, tau_oracle, alpha_oracle, n_trials, rng, mu_sampler)


def run_verification(
    mu: StateVector,
    tau,
    n_trials: int,
    rng: np.random.Generator,
    alpha: StateVector | None = None,
    alpha_oracle: AmplitudeOracle | None = None,
) -> EstimateResult:
    """Run ``n_trials`` shots and return the fidelity estimates.

    ``tau`` may be a ``StateVector`` or any ``AmplitudeOracle``.
    """
    if n_trials < 2:
        raise ValueError("need at least two trials")
    trials = sample_trials(mu, tau, n_trials, rng, alpha, alpha_oracle)
    return estimate_bias_corrected(trials)

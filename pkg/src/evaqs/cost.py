"""Concentration measures, variance and cost predictors, robustness bounds.

Conventions: ``mu``, ``tau``, ``sigma`` are amplitude vectors (``StateVector``
or complex arrays). Auxiliary states enter only through their distribution,
so ``alpha_probs`` is a probability vector; ``None`` means uniform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FIDELITY_FLOOR = 1e-14


def _amps(state) -> np.ndarray:
    return np.asarray(state, dtype=np.complex128)


def _probs(p) -> np.ndarray:
    return np.asarray(p, dtype=np.float64)


def _alpha_probs(alpha_probs, dim: int) -> np.ndarray:
    if alpha_probs is None:
        return np.full(dim, 1.0 / dim)
    q = _probs(alpha_probs)
    if q.shape != (dim,):
        raise ValueError("alpha distribution has the wrong length")
    return q


# --------------------------------------------------------------------------
# Concentration
# --------------------------------------------------------------------------


def collision_probability(p) -> float:
    """``sum_x p_x^2``."""
    p = _probs(p)
    return float(np.dot(p, p))


def renyi2(p) -> float:
    """Renyi-2 entropy in bits."""
    return -math.log2(collision_probability(p))


def chi_square(p, q) -> float:
    """``sum_x (p_x - q_x)^2 / q_x``; ``inf`` if ``q`` misses part of ``p``'s support."""
    p, q = _probs(p), _probs(q)
    if np.any((q == 0) & (p > 0)):
        return math.inf
    nz = q > 0
    return float(np.sum((p[nz] - q[nz]) ** 2 / q[nz]))


@dataclass
class ConcentrationReport:
    p_coll: float
    d_eff: float
    h2: float
    d_p_coll: float
    n_qubits: int


def concentration_report(tau) -> ConcentrationReport:
    p = np.abs(_amps(tau)) ** 2
    pc = collision_probability(p)
    return ConcentrationReport(
        p_coll=pc,
        d_eff=1.0 / pc,
        h2=-math.log2(pc),
        d_p_coll=p.size * pc,
        n_qubits=int(p.size).bit_length() - 1,
    )


# --------------------------------------------------------------------------
# Error decomposition
# --------------------------------------------------------------------------


@dataclass
class ErrorDecomposition:
    """``mu = e^{i phi}(tau cos(theta) + sigma sin(theta))`` with ``<sigma|tau> = 0``.

    ``phi`` is None when ``F = 0`` (the phase is undefined); ``sigma`` is then
    the normalized ``mu`` itself and ``error`` is None.
    """

    phi: float | None
    theta: float
    fidelity: float
    sigma: np.ndarray
    error: np.ndarray | None

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity


def error_decomposition(mu, tau) -> ErrorDecomposition:
    m, t = _amps(mu), _amps(tau)
    overlap = complex(np.vdot(t, m))  # <tau|mu> = sqrt(F) e^{i phi}
    f = abs(overlap) ** 2
    if f <= FIDELITY_FLOOR:
        return ErrorDecomposition(None, math.pi / 2, f, m / np.linalg.norm(m), None)
    phi = math.atan2(overlap.imag, overlap.real)
    theta = math.acos(min(1.0, math.sqrt(f)))
    aligned = np.exp(-1j * phi) * m
    error = aligned - t
    ortho = aligned - math.sqrt(f) * t
    nrm = np.linalg.norm(ortho)
    sigma = ortho / nrm if nrm > 0 else np.zeros_like(t)
    return ErrorDecomposition(phi, theta, f, sigma, error)


# --------------------------------------------------------------------------
# Variance and cost
# --------------------------------------------------------------------------


def _importance(t: np.ndarray, q: np.ndarray) -> np.ndarray:
    pt = np.abs(t) ** 2
    if np.any((q == 0) & (pt > 0)):
        raise ValueError("alpha lacks support on tau")
    return np.where(q > 0, pt / np.where(q > 0, q, 1.0), 0.0)


def variance_exact(mu, tau, n_shots: float, alpha_probs=None) -> float:
    """Lowest-order ``Var F~ = (1/N) sum_x |tau_x|^2/|alpha_x|^2 Q_x`` with

    ``Q_x = (1 + F^2)(|mu_x|^2 + |tau_x|^2)
            - 2F (tau_x^* mu_x <mu|tau> + tau_x mu_x^* <tau|mu>)``.
    """
    m, t = _amps(mu), _amps(tau)
    q = _alpha_probs(alpha_probs, t.size)
    mt = complex(np.vdot(m, t))  # <mu|tau>
    f = abs(mt) ** 2
    cross = 2.0 * np.real(np.conj(t) * m * mt)
    qx = (1.0 + f * f) * (np.abs(m) ** 2 + np.abs(t) ** 2) - 2.0 * f * cross
    return float(np.sum(_importance(t, q) * qx)) / n_shots


def variance_small_infidelity(
    tau,
    infidelity: float,
    n_shots: float,
    alpha_probs=None,
    *,
    error=None,
    sigma=None,
) -> float:
    """Small-infidelity variance from either the phase-corrected error vector or ``sigma``.

    error form: ``(2/N) sum_x (I |tau_x|^4 + |tau_x|^2 |eps_x|^2) / |alpha_x|^2``
    sigma form: ``(2I/N) sum_x |tau_x|^2 (|tau_x|^2 + |sigma_x|^2) / |alpha_x|^2``
    """
    if (error is None) == (sigma is None):
        raise ValueError("pass exactly one of error= or sigma=")
    t = _amps(tau)
    q = _alpha_probs(alpha_probs, t.size)
    weight = _importance(t, q)
    pt = np.abs(t) ** 2
    if error is not None:
        return 2.0 / n_shots * float(np.sum(weight * (infidelity * pt + np.abs(_amps(error)) ** 2)))
    return 2.0 * infidelity / n_shots * float(np.sum(weight * (pt + np.abs(_amps(sigma)) ** 2)))


def cost_chi2(infidelity: float, precision: float, tau, alpha_probs=None) -> float:
    """Heuristic shot count ``4 I / eps^2 (1 + chi^2(|tau|^2, |alpha|^2))``."""
    p = np.abs(_amps(tau)) ** 2
    q = _alpha_probs(alpha_probs, p.size)
    return 4.0 * infidelity / precision**2 * (1.0 + chi_square(p, q))


def cost_uniform(infidelity: float, precision: float, tau) -> float:
    """Heuristic shot count ``4 I / eps^2 d p_coll`` for uniform sampling."""
    p = np.abs(_amps(tau)) ** 2
    return 4.0 * infidelity / precision**2 * p.size * collision_probability(p)


def optimal_alpha(tau, sigma) -> np.ndarray:
    """Distribution ``q_x ∝ sqrt(|tau_x|^2 (|tau_x|^2 + |sigma_x|^2))`` minimizing the variance."""
    pt = np.abs(_amps(tau)) ** 2
    score = np.sqrt(pt * (pt + np.abs(_amps(sigma)) ** 2))
    total = score.sum()
    if total == 0:
        raise ValueError("degenerate input: target is zero")
    return score / total


# --------------------------------------------------------------------------
# Robustness to a mischaracterized auxiliary state
# --------------------------------------------------------------------------


@dataclass
class RobustnessReport:
    perturbed_target: np.ndarray
    deltas: np.ndarray
    delta_rms: float
    bound: float

    @property
    def vacuous(self) -> bool:
        return not math.isfinite(self.bound)


def _relative_errors(tau, alpha, alpha_believed) -> np.ndarray:
    t, a, ab = _amps(tau), _amps(alpha), _amps(alpha_believed)
    on_support = np.abs(t) > 0
    if np.any(on_support & (ab == 0)):
        raise ValueError("believed auxiliary amplitude vanishes on the target support")
    safe = np.where(ab == 0, 1.0, ab)
    return np.where(on_support, (a - ab) / safe, 0.0)


def perturbed_target(tau, alpha, alpha_believed) -> np.ndarray:
    """``tau~_x ∝ tau_x alpha_x / alpha~_x``, normalized."""
    t = _amps(tau)
    raw = t * (1.0 + _relative_errors(tau, alpha, alpha_believed))
    return raw / np.linalg.norm(raw)


def delta_rms(tau, alpha, alpha_believed) -> float:
    """``sqrt(sum_x |tau_x|^2 |alpha_x / alpha~_x - 1|^2)``."""
    pt = np.abs(_amps(tau)) ** 2
    delta = _relative_errors(tau, alpha, alpha_believed)
    return float(np.sqrt(np.sum(pt * np.abs(delta) ** 2)))


def robustness_bound(d_rms: float) -> float:
    """Slack ``2 d / (1 - d)`` in ``F(mu, tau) >= F(mu, tau~) - slack``; inf when ``d >= 1``."""
    if d_rms < 0:
        raise ValueError("delta_rms must be nonnegative")
    if d_rms >= 1:
        return math.inf
    return 2.0 * d_rms / (1.0 - d_rms)


def target_fidelity_bound(d_rms: float) -> float:
    """Upper bound ``d^2 / (1 - d)^2`` on ``1 - F(tau, tau~)``."""
    if d_rms >= 1:
        return math.inf
    return d_rms**2 / (1.0 - d_rms) ** 2


def robustness_report(tau, alpha, alpha_believed) -> RobustnessReport:
    d = delta_rms(tau, alpha, alpha_believed)
    return RobustnessReport(
        perturbed_target(tau, alpha, alpha_believed),
        _relative_errors(tau, alpha, alpha_believed),
        d,
        robustness_bound(d),
    )

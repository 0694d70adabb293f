"""Noisy test states calibrated to a prescribed infidelity.

Three error models:

* angle noise on IQP circuits, ``theta_i -> theta_i + s * delta_i`` with the
  scalar ``s`` tuned so that ``1 - F(mu, tau)`` hits the requested value;
* output noise ``mu = sqrt(1 - eta) tau + sqrt(eta) eps`` with a mix of
  multiplicative and additive complex Gaussian errors in ``eps``;
* gate noise on supremacy-style circuits: a random ``exp(i(ex X + ey Y + ez Z))``
  after every single-qubit gate and jittered fSim angles.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .circuits import (
    IqpCircuit,
    SupremacyCircuit,
    _signed_sum,
    iqp_state,
    simulate_supremacy,
)
from .statevector import X, Y, Z, StateVector, fidelity, is_unitary

log = logging.getLogger(__name__)

ANGLE_TOL = 1e-6
OUTPUT_TOL = 1e-9
MAX_REDRAWS = 20

# default per-gate targets for supremacy circuits (mean process infidelity)
SINGLE_QUBIT_TARGET = 2e-4
TWO_QUBIT_TARGET = 2e-3


class CalibrationError(RuntimeError):
    pass


@dataclass
class AngleNoise:
    deltas: np.ndarray
    scale: float

    def perturbed(self, angles: np.ndarray) -> np.ndarray:
        return angles + self.scale * self.deltas


@dataclass
class OutputNoise:
    eta: float
    additive_scale: float
    error_state: np.ndarray


@dataclass
class GateNoise:
    """Standard deviations: ``sigma_1q`` for each of ex, ey, ez; ``sigma_2q`` for fSim angles."""

    sigma_1q: float
    sigma_2q: float

    def __post_init__(self):
        if self.sigma_1q < 0 or self.sigma_2q < 0:
            raise ValueError("noise strengths must be nonnegative")


def _check_infidelity(infidelity: float):
    if not 0 < infidelity < 1:
        raise ValueError("target infidelity must lie strictly between 0 and 1")


# --------------------------------------------------------------------------
# IQP angle noise
# --------------------------------------------------------------------------


def _angle_infidelity_curve(circuit: IqpCircuit, deltas: np.ndarray):
    # F(mu, tau) is basis independent, and in the Hadamard basis both states are
    # pure phases over a uniform distribution: F(s) = |mean_x exp(i s Phi_x)|^2
    shift = _signed_sum(circuit.masks, deltas, np.arange(1 << circuit.n, dtype=np.int64))

    def infidelity(s: float) -> float:
        return 1.0 - abs(np.mean(np.exp(1j * s * shift))) ** 2

    return infidelity


def _bracket_first_crossing(f, target: float, start: float = 1e-3, grow: float = 1.5, s_max: float = 50.0):
    lo, hi = 0.0, start
    while f(hi) < target:
        lo, hi = hi, hi * grow
        if hi > s_max:
            return None
    return lo, hi


def perturb_iqp(
    circuit: IqpCircuit,
    target_infidelity: float,
    rng: np.random.Generator,
    basis: str = "computational",
) -> tuple[StateVector, float, AngleNoise]:
    """Angle-perturbed IQP output with ``1 - F(mu, tau)`` within 1e-6 of the target.

    The direction ``delta ~ N(0, 1)^m`` is drawn once and only the global scale
    is searched, starting from zero and stopping at the first crossing. A
    direction that cannot reach the target is replaced by a fresh draw.
    """
    _check_infidelity(target_infidelity)
    for attempt in range(MAX_REDRAWS):
        deltas = rng.normal(size=circuit.m)
        f = _angle_infidelity_curve(circuit, deltas)
        bracket = _bracket_first_crossing(f, target_infidelity)
        if bracket is None:
            log.warning("angle-noise direction cannot reach I=%g, redrawing (attempt %d)", target_infidelity, attempt)
            continue
        s = brentq(lambda t: f(t) - target_infidelity, *bracket, xtol=1e-15, rtol=1e-15, maxiter=500)
        noise = AngleNoise(deltas, float(s))
        mu = iqp_state(circuit.with_angles(noise.perturbed(circuit.angles)), basis)
        achieved = 1.0 - fidelity(mu, iqp_state(circuit, basis))
        if abs(achieved - target_infidelity) <= ANGLE_TOL:
            return mu, achieved, noise
        log.warning("angle calibration missed (%g vs %g), redrawing", achieved, target_infidelity)
    raise CalibrationError(f"could not reach infidelity {target_infidelity} in {MAX_REDRAWS} draws")


# --------------------------------------------------------------------------
# Output-state noise
# --------------------------------------------------------------------------


def standard_complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Complex Gaussian with independent real/imag parts of variance 1/2."""
    return (rng.normal(size=size) + 1j * rng.normal(size=size)) / np.sqrt(2.0)


def _mix(tau: np.ndarray, eps: np.ndarray, eta: float) -> np.ndarray:
    mu = np.sqrt(1.0 - eta) * tau + np.sqrt(eta) * eps
    return mu / np.linalg.norm(mu)


def apply_output_noise(
    tau: StateVector,
    target_infidelity: float,
    rng: np.random.Generator,
) -> tuple[StateVector, OutputNoise]:
    """Mix ``tau`` with a normalized error state ``eps_x ~ xi'_x tau_x + lam xi''_x``.

    ``lam`` is the mean of ``|tau_x|`` so the multiplicative and additive parts
    have equal spread at an average-magnitude component. ``eps`` keeps its
    overlap with ``tau``; ``eta`` is root-solved so the renormalized mixture
    has exactly the requested fidelity.
    """
    _check_infidelity(target_infidelity)
    t = tau.amplitudes
    lam = float(np.mean(np.abs(t)))
    goal = 1.0 - target_infidelity
    for attempt in range(MAX_REDRAWS):
        eps = standard_complex_normal(rng, t.size) * t + lam * standard_complex_normal(rng, t.size)
        eps /= np.linalg.norm(eps)

        def fid(eta: float) -> float:
            return abs(np.vdot(t, _mix(t, eps, eta))) ** 2

        if fid(1.0) >= goal:
            log.warning("error state too close to target, redrawing (attempt %d)", attempt)
            continue
        eta = brentq(lambda e: fid(e) - goal, 0.0, 1.0, xtol=1e-15, rtol=1e-15, maxiter=500)
        mu = StateVector(_mix(t, eps, eta), tau.n_qubits)
        if abs(fidelity(mu, tau) - goal) <= OUTPUT_TOL:
            return mu, OutputNoise(float(eta), lam, eps)
    raise CalibrationError(f"could not reach infidelity {target_infidelity} in {MAX_REDRAWS} draws")


# --------------------------------------------------------------------------
# Gate noise for supremacy circuits
# --------------------------------------------------------------------------


def process_infidelity(u_ideal: np.ndarray, u_noisy: np.ndarray) -> float:
    """``1 - |Tr(U_ideal^dag U_noisy)|^2 / D^2`` for ``D x D`` unitaries."""
    u_ideal = np.asarray(u_ideal, dtype=complex)
    u_noisy = np.asarray(u_noisy, dtype=complex)
    if u_ideal.shape != u_noisy.shape or u_ideal.shape not in ((2, 2), (4, 4)):
        raise ValueError("expected two 2x2 or two 4x4 matrices")
    if not (is_unitary(u_ideal) and is_unitary(u_noisy)):
        raise ValueError("process infidelity needs unitary inputs")
    dim = u_ideal.shape[0]
    return 1.0 - abs(np.trace(u_ideal.conj().T @ u_noisy)) ** 2 / dim**2


def pauli_error_unitaries(coeffs: np.ndarray) -> np.ndarray:
    """``exp(i (c0 X + c1 Y + c2 Z))`` for each row of ``coeffs`` (closed form)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    flat = coeffs.reshape(-1, 3)
    r = np.linalg.norm(flat, axis=1)
    gen = np.einsum("ka,aij->kij", flat, np.stack([X, Y, Z]))
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(r > 0, np.sin(r) / np.where(r > 0, r, 1.0), 1.0)
    u = np.cos(r)[:, None, None] * np.eye(2) + 1j * sinc[:, None, None] * gen
    return u.reshape(coeffs.shape[:-1] + (2, 2))


def _mean_1q_infidelity(sigma: float, z: np.ndarray) -> float:
    # |Tr(exp(i c.sigma))|^2 / 4 = cos^2 |c|
    return float(np.mean(np.sin(sigma * np.linalg.norm(z, axis=1)) ** 2))


def fsim_jitter_infidelity(d_theta, d_phi) -> np.ndarray:
    """Process infidelity of ``fSim(theta + d_theta, phi + d_phi)`` against ``fSim(theta, phi)``.

    ``Tr(fSim(t, p)^dag fSim(t + a, p + b)) = 1 + 2 cos(a) + exp(-i b)`` for
    any nominal ``(t, p)``.
    """
    tr = 1.0 + 2.0 * np.cos(d_theta) + np.exp(-1j * np.asarray(d_phi))
    return 1.0 - np.abs(tr) ** 2 / 16.0


def _mean_2q_infidelity(sigma: float, z: np.ndarray) -> float:
    return float(np.mean(fsim_jitter_infidelity(sigma * z[:, 0], sigma * z[:, 1])))


def calibrate_gate_noise(
    rng: np.random.Generator,
    single_qubit_target: float = SINGLE_QUBIT_TARGET,
    two_qubit_target: float = TWO_QUBIT_TARGET,
    draws: int = 10_000,
) -> GateNoise:
    """Pick sigmas whose mean per-gate process infidelity matches the targets.

    The expectation is estimated over ``draws`` fixed standard-normal draws
    (common random numbers), which makes the mean a smooth increasing function
    of sigma near zero.
    """
    z1 = rng.normal(size=(draws, 3))
    z2 = rng.normal(size=(draws, 2))
    s1 = brentq(lambda s: _mean_1q_infidelity(s, z1) - single_qubit_target, 0.0, 0.5, xtol=1e-12)
    s2 = brentq(lambda s: _mean_2q_infidelity(s, z2) - two_qubit_target, 0.0, 0.5, xtol=1e-12)
    return GateNoise(float(s1), float(s2))


def perturb_supremacy(
    circuit: SupremacyCircuit, noise: GateNoise, rng: np.random.Generator
) -> StateVector:
    """Output of the circuit with i.i.d. gate errors drawn from ``noise``."""
    coeffs = noise.sigma_1q * rng.normal(size=(circuit.cycles, circuit.n, 3))
    errors = pauli_error_unitaries(coeffs) if circuit.cycles else None
    angles = [a + noise.sigma_2q * rng.normal(size=a.shape) for a in circuit.entangler_angles]
    return simulate_supremacy(circuit, single_qubit_errors=errors, entangler_angles=angles)

"""Fidelity estimation for anticoncentrated states by snippet comparison.

Statevector simulation of the basic and importance-sampled verification
protocols, the circuit families and noise models used to exercise them, and
the variance/cost/robustness formulas that predict their behaviour.
"""
from .statevector import DiscreteSampler, StateVector, fidelity
from .protocol import AmplitudeOracle, EstimateResult, Trials, run_verification

__all__ = [
    "AmplitudeOracle",
    "DiscreteSampler",
    "EstimateResult",
    "StateVector",
    "Trials",
    "fidelity",
    "run_verification",
]
__version__ = "0.1.0"

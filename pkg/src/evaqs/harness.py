"""Seeded study runner producing one CSV row per noisy circuit realization.

Seed splitting: cell ``(n, infidelity index j, circuit index c)`` of a study
of kind ``k`` uses ``SeedSequence([seed, KIND_CODES[k], n, j, c])`` and spawns
three children, used in order for the circuit, the noise draw and the shots.
Supremacy studies have no infidelity axis and use ``j = 0``; their gate-noise
calibration uses ``SeedSequence([seed, KIND_CODES[k], CALIBRATION_KEY])``.
Every row is therefore reproducible on its own, independent of worker count.

Percentiles in summaries use linear interpolation between closest ranks
(numpy's default ``"linear"`` method).
"""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import cost
from .circuits import (
    gen_iqp,
    gen_random_circuit,
    gen_supremacy_circuit,
    iqp_state,
    simulate_random,
    simulate_supremacy,
)
from .noise import apply_output_noise, calibrate_gate_noise, perturb_iqp, perturb_supremacy
from .protocol import AmplitudeOracle, run_verification
from .statevector import fidelity

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
KINDS = ("iqp-hadamard", "iqp-computational", "random", "supremacy")
KIND_CODES = {"iqp-hadamard": 1, "iqp-computational": 2, "random": 3, "supremacy": 4}
CALIBRATION_KEY = 999_999
DEFAULT_INFIDELITIES = (0.01, 0.03, 0.1, 0.3)

FULL_PRESETS = {
    "iqp-hadamard": {"qubits": list(range(4, 21, 2)), "circuits": 400},
    "iqp-computational": {"qubits": list(range(4, 21, 2)), "circuits": 400},
    "random": {"qubits": list(range(2, 21, 2)), "circuits": 300},
    "supremacy": {"qubits": [4, 9, 12, 16, 20], "circuits": 100},
}
DESK_PRESETS = {
    "iqp-hadamard": {"qubits": [4, 6, 8, 10, 12], "circuits": 50},
    "iqp-computational": {"qubits": [4, 6, 8, 10, 12], "circuits": 50},
    "random": {"qubits": [2, 4, 6, 8, 10, 12], "circuits": 50},
    "supremacy": {"qubits": [4, 9, 12], "circuits": 20},
}


@dataclass
class StudyConfig:
    kind: str
    qubits: list[int]
    infidelities: list[float] = field(default_factory=lambda: list(DEFAULT_INFIDELITIES))
    circuits: int = 50
    shots: int = 10_000
    seed: int = 0
    out: str | None = None
    threads: int = 1
    depth_factor: int = 3
    cycles: int = 16
    mean_weight: float = 2.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"study kind must be one of {KINDS}")
        self.qubits = [int(q) for q in self.qubits]
        self.infidelities = [float(i) for i in self.infidelities]
        if not self.qubits or min(self.qubits) < 1:
            raise ValueError("qubit list must contain positive counts")
        if self.circuits < 1 or self.shots < 2 or self.threads < 1 or self.depth_factor < 1:
            raise ValueError("circuits, shots, threads and depth factor must be positive (shots >= 2)")
        if self.kind != "supremacy" and not self.infidelities:
            raise ValueError("infidelity list is empty")
        if any(not 0 < i < 1 for i in self.infidelities):
            raise ValueError("infidelities must lie in (0, 1)")

    @classmethod
    def preset(cls, kind: str, paper_scale: bool = False, **overrides) -> StudyConfig:
        base = dict((FULL_PRESETS if paper_scale else DESK_PRESETS)[kind])
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(kind=kind, **base)


@dataclass
class StudyRow:
    schema_version: int
    study: str
    n: int
    circuit: int
    seed: int
    target_infidelity: float
    true_infidelity: float
    est_infidelity_simple: float
    est_infidelity: float
    est_variance: float
    predicted_variance: float
    exact_variance: float
    cost_empirical: float
    cost_exact: float
    cost_pred_chi2: float
    cost_pred_uniform: float
    p_coll: float
    chi2: float
    h2: float
    shots: int
    error: str = ""


CSV_COLUMNS = [f.name for f in fields(StudyRow)]


# --------------------------------------------------------------------------
# Cells
# --------------------------------------------------------------------------


def cell_rngs(seed: int, kind: str, n: int, infidelity_index: int, circuit: int):
    ss = np.random.SeedSequence([seed, KIND_CODES[kind], n, infidelity_index, circuit])
    return [np.random.default_rng(child) for child in ss.spawn(3)]


@lru_cache(maxsize=8)
def _gate_noise(seed: int):
    ss = np.random.SeedSequence([seed, KIND_CODES["supremacy"], CALIBRATION_KEY])
    return calibrate_gate_noise(np.random.default_rng(ss))


def prepare_states(config: StudyConfig, n: int, infidelity_index: int, circuit: int):
    """Ideal target and noisy test state for one cell."""
    circ_rng, noise_rng, _ = cell_rngs(config.seed, config.kind, n, infidelity_index, circuit)
    kind = config.kind
    if kind.startswith("iqp"):
        basis = "hadamard" if kind == "iqp-hadamard" else "computational"
        c = gen_iqp(n, config.depth_factor * n, circ_rng, config.mean_weight)
        tau = iqp_state(c, basis)
        mu, _, _ = perturb_iqp(c, config.infidelities[infidelity_index], noise_rng, basis)
    elif kind == "random":
        c = gen_random_circuit(n, config.depth_factor * n, circ_rng)
        tau = simulate_random(c)
        mu, _ = apply_output_noise(tau, config.infidelities[infidelity_index], noise_rng)
    else:
        c = gen_supremacy_circuit(n, config.cycles, circ_rng)
        tau = simulate_supremacy(c)
        mu = perturb_supremacy(c, _gate_noise(config.seed), noise_rng)
    return tau, mu


def run_cell(config: StudyConfig, n: int, infidelity_index: int, circuit: int) -> StudyRow:
    target = math.nan if config.kind == "supremacy" else config.infidelities[infidelity_index]
    try:
        tau, mu = prepare_states(config, n, infidelity_index, circuit)
        shot_rng = cell_rngs(config.seed, config.kind, n, infidelity_index, circuit)[2]
        est = run_verification(mu, AmplitudeOracle.from_state(tau), config.shots, shot_rng)
        true_i = 1.0 - fidelity(mu, tau)
        dec = cost.error_decomposition(mu, tau)
        probs = tau.probabilities()
        uniform = np.full(probs.size, 1.0 / probs.size)
        conc = cost.concentration_report(tau)
        exact_var = cost.variance_exact(mu, tau, config.shots)
        pred_var = (
            cost.variance_small_infidelity(tau, true_i, config.shots, error=dec.error)
            if dec.error is not None
            else math.nan
        )
        return StudyRow(
            schema_version=SCHEMA_VERSION,
            study=config.kind,
            n=n,
            circuit=circuit,
            seed=config.seed,
            target_infidelity=target,
            true_infidelity=true_i,
            est_infidelity_simple=est.infidelity_simple,
            est_infidelity=est.infidelity,
            est_variance=est.variance,
            predicted_variance=pred_var,
            exact_variance=exact_var,
            cost_empirical=config.shots * est.variance,
            cost_exact=config.shots * exact_var,
            cost_pred_chi2=cost.cost_chi2(true_i, 1.0, tau),
            cost_pred_uniform=cost.cost_uniform(true_i, 1.0, tau),
            p_coll=conc.p_coll,
            chi2=cost.chi_square(probs, uniform),
            h2=conc.h2,
            shots=config.shots,
            error=est.flag or "",
        )
    except Exception as exc:  # row-level failure marker, study continues
        log.error("cell %s n=%d j=%d c=%d failed: %s", config.kind, n, infidelity_index, circuit, exc)
        nan = math.nan
        return StudyRow(
            SCHEMA_VERSION, config.kind, n, circuit, config.seed, target,
            nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan,
            config.shots, f"{type(exc).__name__}: {exc}",
        )


def _run_task(args) -> StudyRow:
    return run_cell(*args)


def study_tasks(config: StudyConfig):
    n_levels = 1 if config.kind == "supremacy" else len(config.infidelities)
    for n in config.qubits:
        for j in range(n_levels):
            for c in range(config.circuits):
                yield (config, n, j, c)


def run_study(config: StudyConfig) -> list[StudyRow]:
    """Run every cell; rows come back in task order regardless of ``threads``.

    ``threads`` is the number of worker processes.
    """
    tasks = list(study_tasks(config))
    if config.threads == 1:
        rows = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            rows = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * config.threads))))
    if config.out:
        write_rows(rows, config.out)
    return rows


# --------------------------------------------------------------------------
# CSV I/O and summaries
# --------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        d = asdict(row)
        writer.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_rows(rows, path) -> None:
    try:
        Path(path).write_text(rows_to_csv(rows), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write study output to {path}: {exc}") from exc


def read_rows(path) -> list[StudyRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected CSV columns")
        out = []
        for rec in reader:
            if int(rec["schema_version"]) != SCHEMA_VERSION:
                raise ValueError(f"{path}: unsupported schema version {rec['schema_version']}")
            kw = {}
            for f in fields(StudyRow):
                raw = rec[f.name]
                if f.type in ("int",):
                    kw[f.name] = int(raw)
                elif f.type in ("float",):
                    kw[f.name] = math.nan if raw == "" else float(raw)
                else:
                    kw[f.name] = raw
            out.append(StudyRow(**kw))
    return out


SUMMARY_COLUMNS = [
    "study", "n", "target_infidelity", "rows",
    "true_infidelity_median",
    "est_infidelity_median", "est_infidelity_p10", "est_infidelity_p90",
    "cost_empirical_median", "cost_empirical_p10", "cost_empirical_p90",
    "cost_pred_median",
]


def percentiles(values) -> tuple[float, float, float]:
    """``(median, p10, p90)`` with linear interpolation between closest ranks."""
    v = np.asarray(values, dtype=np.float64)
    v = v[~np.isnan(v)]
    if v.size == 0:
        return math.nan, math.nan, math.nan
    med, p10, p90 = np.percentile(v, [50, 10, 90])
    return float(med), float(p10), float(p90)


def summarize(rows) -> list[dict]:
    """Median and 10th/90th percentiles per ``(study, n, target infidelity)`` cell."""
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to summarize")
    groups: dict[tuple, list[StudyRow]] = {}
    for r in rows:
        if r.error and math.isnan(r.true_infidelity):
            continue
        key = (r.study, r.n, -1.0 if math.isnan(r.target_infidelity) else r.target_infidelity)
        groups.setdefault(key, []).append(r)
    out = []
    for (study, n, target), members in sorted(groups.items()):
        est = percentiles([r.est_infidelity for r in members])
        cst = percentiles([r.cost_empirical for r in members])
        out.append({
            "study": study,
            "n": n,
            "target_infidelity": math.nan if target < 0 else target,
            "rows": len(members),
            "true_infidelity_median": percentiles([r.true_infidelity for r in members])[0],
            "est_infidelity_median": est[0],
            "est_infidelity_p10": est[1],
            "est_infidelity_p90": est[2],
            "cost_empirical_median": cst[0],
            "cost_empirical_p10": cst[1],
            "cost_empirical_p90": cst[2],
            "cost_pred_median": percentiles([r.cost_pred_chi2 for r in members])[0],
        })
    return out


def summary_to_csv(summary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for rec in summary:
        writer.writerow([_fmt(rec[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def with_overrides(config: StudyConfig, **kw) -> StudyConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None})

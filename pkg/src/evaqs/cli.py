"""Command line entry point: ``evaqs {verify,study,cost,summarize,generate}``."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import cost
from .circuits import (
    IqpCircuit,
    SupremacyCircuit,
    circuit_state,
    gen_iqp,
    gen_random_circuit,
    gen_supremacy_circuit,
    load_circuit,
    save_circuit,
)
from .harness import KINDS, StudyConfig, read_rows, run_study, summarize, summary_to_csv
from .noise import apply_output_noise, calibrate_gate_noise, perturb_iqp, perturb_supremacy
from .protocol import AmplitudeOracle, estimate_bias_corrected, sample_trials
from .statevector import fidelity

log = logging.getLogger("evaqs")

CONFIG_KEYS = {
    "qubits", "infidelity", "circuits", "shots", "seed", "out", "threads",
    "depth-factor", "cycles", "paper-scale",
}


def _int_list(text: str) -> list[int]:
    return [int(t) for t in str(text).split(",") if t.strip()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in str(text).split(",") if t.strip()]


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` comments; keys mirror the long flags."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _truthy(value: str) -> bool:
    return str(value).lower() in ("1", "true", "yes", "on")


def build_study_config(args) -> StudyConfig:
    file_cfg = read_config(args.config) if args.config else {}

    def pick(flag, key, convert):
        value = getattr(args, flag)
        if value is not None:
            return value
        if key in file_cfg:
            return convert(file_cfg[key])
        return None

    paper_scale = args.paper_scale or _truthy(file_cfg.get("paper-scale", "false"))
    return StudyConfig.preset(
        args.kind,
        paper_scale=paper_scale,
        qubits=pick("qubits", "qubits", _int_list),
        infidelities=pick("infidelity", "infidelity", _float_list),
        circuits=pick("circuits", "circuits", int),
        shots=pick("shots", "shots", int),
        seed=pick("seed", "seed", int),
        out=pick("out", "out", str),
        threads=pick("threads", "threads", int),
        depth_factor=pick("depth_factor", "depth-factor", int),
        cycles=pick("cycles", "cycles", int),
    )


def _noisy_state(circuit, infidelity, basis, rng):
    if isinstance(circuit, IqpCircuit):
        mu, _, _ = perturb_iqp(circuit, infidelity, rng, basis)
        return mu
    if isinstance(circuit, SupremacyCircuit):
        return perturb_supremacy(circuit, calibrate_gate_noise(rng), rng)
    return apply_output_noise(circuit_state(circuit), infidelity, rng)[0]


def cmd_verify(args) -> int:
    target = load_circuit(args.target)
    tau = circuit_state(target, args.basis)
    rng = np.random.default_rng(args.seed)
    if args.prepared:
        mu = circuit_state(load_circuit(args.prepared), args.basis)
    elif args.infidelity is not None:
        mu = _noisy_state(target, args.infidelity, args.basis, rng)
    else:
        raise ValueError("give --prepared FILE or --infidelity I")
    if mu.n_qubits != tau.n_qubits:
        raise ValueError("prepared and target circuits act on different qubit counts")
    trials = sample_trials(mu, AmplitudeOracle.from_state(tau), args.shots, rng)
    if args.trials_csv:
        trials.to_csv(args.trials_csv)
    est = estimate_bias_corrected(trials)
    true_i = 1.0 - fidelity(mu, tau)
    print(f"n_qubits            {tau.n_qubits}")
    print(f"shots               {est.n_trials}")
    print(f"true_infidelity     {true_i:.6g}")
    print(f"est_infidelity      {est.infidelity:.6g}")
    print(f"est_infidelity_raw  {est.infidelity_simple:.6g}")
    print(f"std_error           {math.sqrt(est.variance):.3g}")
    print(f"predicted_std_error {math.sqrt(cost.variance_exact(mu, tau, args.shots)):.3g}")
    if est.flag:
        print(f"flag                {est.flag}")
    return 0


def cmd_study(args) -> int:
    config = build_study_config(args)
    rows = run_study(config)
    failed = sum(1 for r in rows if r.error and math.isnan(r.true_infidelity))
    dest = config.out or "<not written>"
    print(f"{len(rows)} rows ({failed} failed) -> {dest}", file=sys.stderr)
    if not config.out:
        sys.stdout.write(summary_to_csv(summarize(rows)))
    return 0 if failed == 0 else 3


def cmd_cost(args) -> int:
    tau = circuit_state(load_circuit(args.circuit), args.basis)
    rep = cost.concentration_report(tau)
    p = tau.probabilities()
    chi2 = cost.chi_square(p, np.full(p.size, 1.0 / p.size))
    print(f"n_qubits      {rep.n_qubits}")
    print(f"p_coll        {rep.p_coll:.6g}")
    print(f"d_eff         {rep.d_eff:.6g}")
    print(f"renyi2_bits   {rep.h2:.6g}")
    print(f"d_p_coll      {rep.d_p_coll:.6g}")
    print(f"chi2_uniform  {chi2:.6g}")
    for i in args.infidelity:
        n_chi = cost.cost_chi2(i, args.precision, tau)
        n_uni = cost.cost_uniform(i, args.precision, tau)
        print(f"shots(I={i:g}, eps={args.precision:g})  chi2: {n_chi:.6g}  uniform: {n_uni:.6g}")
    return 0


def cmd_summarize(args) -> int:
    text = summary_to_csv(summarize(read_rows(args.csv)))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    n = args.qubits
    if args.family == "iqp":
        c = gen_iqp(n, args.depth or 3 * n, rng)
    elif args.family == "random":
        c = gen_random_circuit(n, args.depth or 3 * n, rng)
    else:
        c = gen_supremacy_circuit(n, args.cycles, rng)
    save_circuit(c, args.out)
    if args.perturb is not None:
        if not isinstance(c, IqpCircuit):
            raise ValueError("--perturb writes an angle-perturbed circuit and needs the iqp family")
        _, achieved, noise = perturb_iqp(c, args.perturb, rng)
        noisy_path = Path(args.out).with_suffix(".noisy" + Path(args.out).suffix)
        save_circuit(c.with_angles(noise.perturbed(c.angles)), noisy_path)
        print(f"wrote {noisy_path} (infidelity {achieved:.6g})", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evaqs", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="estimate the fidelity of one prepared/target pair")
    p.add_argument("--target", required=True, help="serialized target circuit")
    p.add_argument("--prepared", help="serialized circuit producing the test state")
    p.add_argument("--infidelity", type=float, help="synthesize the test state with this infidelity")
    p.add_argument("--basis", choices=("computational", "hadamard"), default="computational")
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials-csv", help="write the per-shot log (x, y, b, w) here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("study", help="run a simulation study and write CSV rows")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--qubits", type=_int_list)
    p.add_argument("--infidelity", type=_float_list)
    p.add_argument("--circuits", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--threads", type=int, help="worker processes")
    p.add_argument("--depth-factor", type=int, help="rotations/gates per qubit (default 3)")
    p.add_argument("--cycles", type=int, help="supremacy cycles (default 16)")
    p.add_argument("--config", help="key=value file mirroring these flags")
    p.add_argument("--paper-scale", action="store_true", help="full qubit grids and circuit counts")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("cost", help="concentration and predicted shot counts for a target")
    p.add_argument("--circuit", required=True)
    p.add_argument("--basis", choices=("computational", "hadamard"), default="computational")
    p.add_argument("--infidelity", type=_float_list, default=[0.01, 0.03, 0.1, 0.3])
    p.add_argument("--precision", type=float, default=0.01)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("summarize", help="median and 10-90 percentile bands of a study CSV")
    p.add_argument("csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("generate", help="write a random circuit in the text format")
    p.add_argument("family", choices=("iqp", "random", "supremacy"))
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--depth", type=int)
    p.add_argument("--cycles", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb", type=float, help="also write an angle-perturbed copy (iqp)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"evaqs: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

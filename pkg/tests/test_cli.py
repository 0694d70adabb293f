import subprocess
import sys

import pytest

from evaqs.cli import build_parser, build_study_config, main, read_config
from evaqs.harness import read_rows


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_generate_and_verify(tmp_path, capsys):
    target = tmp_path / "t.circ"
    code, _, err = run(["generate", "iqp", "--qubits", "5", "--seed", "2", "--perturb", "0.1", "--out", str(target)], capsys)
    assert code == 0 and "infidelity 0.1" in err
    noisy = tmp_path / "t.noisy.circ"
    trials = tmp_path / "trials.csv"
    code, out, _ = run(
        ["verify", "--target", str(target), "--prepared", str(noisy), "--shots", "5000", "--trials-csv", str(trials)],
        capsys,
    )
    assert code == 0
    fields = dict(line.split(None, 1) for line in out.splitlines())
    assert float(fields["true_infidelity"]) == pytest.approx(0.1, abs=1e-6)
    assert abs(float(fields["est_infidelity"]) - 0.1) < 0.05
    assert trials.read_text().startswith("x,y,b,w")


def test_verify_with_synthesized_noise(tmp_path, capsys):
    target = tmp_path / "r.circ"
    assert run(["generate", "random", "--qubits", "4", "--out", str(target)], capsys)[0] == 0
    code, out, _ = run(["verify", "--target", str(target), "--infidelity", "0.2", "--seed", "3"], capsys)
    assert code == 0 and "est_infidelity" in out


def test_verify_needs_a_test_state(tmp_path, capsys):
    target = tmp_path / "r.circ"
    run(["generate", "random", "--qubits", "3", "--out", str(target)], capsys)
    code, _, err = run(["verify", "--target", str(target)], capsys)
    assert code == 1 and "--prepared" in err


def test_missing_file_is_reported(capsys):
    code, _, err = run(["verify", "--target", "/nonexistent/circ", "--infidelity", "0.1"], capsys)
    assert code != 0 and err.startswith("evaqs: error:")


def test_cost_report(tmp_path, capsys):
    target = tmp_path / "s.circ"
    assert run(["generate", "supremacy", "--qubits", "4", "--out", str(target)], capsys)[0] == 0
    code, out, _ = run(["cost", "--circuit", str(target), "--infidelity", "0.1", "--precision", "0.01"], capsys)
    assert code == 0 and "p_coll" in out and "shots(I=0.1" in out


def test_study_writes_csv_and_summarize_reads_it(tmp_path, capsys):
    out = tmp_path / "rows.csv"
    code, _, err = run(
        ["study", "random", "--qubits", "3,4", "--infidelity", "0.1", "--circuits", "2", "--shots", "300", "--out", str(out)],
        capsys,
    )
    assert code == 0 and "4 rows (0 failed)" in err
    assert len(read_rows(out)) == 4
    summary = tmp_path / "summary.csv"
    assert run(["summarize", str(out), "--out", str(summary)], capsys)[0] == 0
    assert len(summary.read_text().splitlines()) == 3
    code, text, _ = run(["summarize", str(out)], capsys)
    assert code == 0 and text.startswith("study,n,")


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "study.cfg"
    cfg.write_text("# desk run\nqubits = 3,5\ninfidelity = 0.03, 0.3\ncircuits = 4\nshots = 123\nseed = 11\n")
    args = build_parser().parse_args(["study", "iqp-hadamard", "--config", str(cfg), "--shots", "999"])
    config = build_study_config(args)
    assert config.qubits == [3, 5] and config.infidelities == [0.03, 0.3]
    assert config.circuits == 4 and config.seed == 11 and config.shots == 999


def test_config_paper_scale_key(tmp_path):
    cfg = tmp_path / "study.cfg"
    cfg.write_text("paper-scale = true\n")
    config = build_study_config(build_parser().parse_args(["study", "random", "--config", str(cfg)]))
    assert config.circuits == 300


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("qubits = 4\ncolour = blue\n")
    with pytest.raises(ValueError):
        read_config(cfg)
    code, _, err = run(["study", "random", "--config", str(cfg)], capsys)
    assert code == 1 and "colour" in err


def test_bad_arguments_exit_nonzero():
    with pytest.raises(SystemExit) as exc:
        main(["study", "not-a-kind"])
    assert exc.value.code != 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "evaqs", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "verify" in proc.stdout

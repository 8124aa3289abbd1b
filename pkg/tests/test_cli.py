import subprocess
import sys

import pytest
import yaml

from solitongas import io as sio
from solitongas.cli import main


def _run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_toda_chain(capsys):
    code, out, _ = _run(["verify", "--suite", "toda-chain", "--n", "6", "--seed", "7"], capsys)
    assert code == 0
    rep = sio.read_report(out)
    assert rep["passed"] and all(c["relative"] <= 1e-10 for c in rep["checks"])


def test_limit_study_table(tmp_path, capsys):
    out = tmp_path / "lim.csv"
    code, _, _ = _run(["limit-study", "--r", "1e-2,1e-3,1e-4", "--out", str(out)], capsys)
    assert code == 0
    header, rows = sio.read_table(out)
    assert header[:4] == ["R", "log_tau", "log_Z", "deviation"]
    assert len(rows) == 3
    ratios = [float(r[4]) for r in rows[1:]]
    assert all(0.05 < q < 0.2 for q in ratios)
    meta = sio.read_report(str(out) + ".meta.yaml")
    assert meta["order"] >= 0.9 and "timestamp" in meta


def test_m_above_n_is_rejected(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"n": 3, "m": 5, "kind": "2DTL"}))
    code, _, err = _run(["correspond", "--config", str(cfg)], capsys)
    assert code == 1
    diag = yaml.safe_load(err)
    assert diag["error"] == "RangeError"


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"n": 3, "m": 5}))
    code, out, _ = _run(["correspond", "--config", str(cfg), "--m", "2"], capsys)
    assert code == 0 and sio.read_report(out)["n"] == 3


def test_failed_threshold_exits_2(capsys):
    code, out, _ = _run(["correspond", "--n", "5", "--tol", "1e-300"], capsys)
    assert code == 2
    assert sio.read_report(out)["passed"] is False


@pytest.mark.parametrize("args", [
    ["tau", "--n", "5"],
    ["tau", "--kind", "KP", "--a", "0.5,0.9", "--b", "0.6,1.0", "--t", "0.3i,-0.2i"],
    ["gas", "--n", "5", "--geometry", "quarter-plane"],
    ["correspond", "--n", "6", "--kind", "BKP"],
    ["nmm", "--lattice", "1,i,-1"],
    ["observables", "--n", "5", "--geometry", "joukowski"],
])
def test_commands_emit_parseable_output(args, capsys):
    code, out, _ = _run(args, capsys)
    assert code == 0
    if out.startswith("#"):
        sio.read_table(out)
    else:
        sio.read_report(out)


def test_worked_lattice_through_cli(capsys):
    code, out, _ = _run(["nmm", "--lattice", "1,i,-1", "--confine", "0", "--t", "0"], capsys)
    _, rows = sio.read_table(out)
    assert abs(float(rows[2][1]) - 2.0794415416798357) < 1e-12


def test_deterministic_output_is_byte_identical(tmp_path, capsys):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.yaml"
        assert main(["verify", "--suite", "oracle", "--seed", "3", "--deterministic", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_bad_values_exit_1(capsys):
    assert _run(["gas", "--beta", "-1"], capsys)[0] == 1
    assert _run(["tau", "--lattice", "1,2k"], capsys)[0] == 1
    assert _run(["tau", "--lattice", "/no/such/file.csv,3"], capsys)[0] == 1


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "solitongas", "verify", "--suite", "kp"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert sio.read_report(proc.stdout)["passed"]

import json
import math

import numpy as np
import pytest

from levlab.cli import main, resolve_config


def strip_timestamp(text):
    return "\n".join(ln for ln in text.splitlines() if "generated_at" not in ln)


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def load(out, name):
    return json.loads((out / name).read_text())


@pytest.mark.parametrize("psi, verdict", [("lin-log:1", "divergent"), ("lin-log:2", "convergent"),
                                          ("power:0.5", "convergent"), ("power:1", "divergent")])
def test_classify_builtins(tmp_path, psi, verdict):
    code, out = run(tmp_path, "classify", "--psi", psi)
    assert code == 0
    rep = load(out, "classify.json")
    assert rep["verdict"] == verdict
    assert rep["schema_version"] and rep["config_hash"] and rep["seed"] == 0


def test_classify_bad_descriptor(tmp_path):
    code, out = run(tmp_path, "classify", "--psi", "bogus")
    assert code == 1
    assert load(out, "classify-error.json")["error"]


def test_classify_needs_a_weight(tmp_path):
    assert run(tmp_path, "classify")[0] == 1


def test_malformed_table(tmp_path):
    table = tmp_path / "w.csv"
    table.write_text("r,psi\n1,0.5\n2,oops\n")
    assert run(tmp_path, "classify", "--table", str(table))[0] == 1


def test_unknown_flag_is_an_error(tmp_path):
    assert main(["classify", "--nonsense"]) == 1


def _undecided_table(tmp_path):
    r = np.linspace(2, 50, 200)
    table = tmp_path / "w.csv"
    rows = "".join(f"{a},{a / (1 + math.log(a))**1.5}\n" for a in r.tolist())
    table.write_text("r,psi\n" + rows)
    return table


def test_undecided_weight_exits_2_without_experiments(tmp_path):
    code, out = run(tmp_path, "dichotomy", "--table", str(_undecided_table(tmp_path)))
    assert code == 2
    assert load(out, "dichotomy.json")["status"] == "undecided"
    assert sorted(p.name for p in out.iterdir()) == ["dichotomy.json"]


@pytest.mark.parametrize("argv", [
    ("--op", "sft-roundtrip", "--space", "H3"),
    ("--op", "abel-roundtrip", "--space", "H3"),
    ("--op", "heat-mass", "--space", "H3"),
    ("--op", "fourier-roundtrip", "--d", "2"),
])
def test_transforms_pass(tmp_path, argv):
    code, out = run(tmp_path, "transform", *argv)
    rep = load(out, "residual.json")
    assert code == 0 and rep["passed"]
    assert rep["residual"] <= rep["tolerance"]


def test_zero_input_round_trip(tmp_path):
    code, out = run(tmp_path, "transform", "--op", "sft-roundtrip", "--zero")
    assert code == 0
    assert load(out, "residual.json")["residual"] == 0


def test_tolerance_breach_exits_3_and_reports(tmp_path):
    code, out = run(tmp_path, "transform", "--op", "sft-roundtrip", "--tol", "1e-20")
    assert code == 3
    rep = load(out, "residual.json")
    assert not rep["passed"] and rep["residual"] > 1e-20


def test_nonpositive_tolerance_rejected(tmp_path):
    assert run(tmp_path, "transform", "--tol", "0")[0] == 1


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"op": "heat-mass", "time": 0.5, "seed": 7}))
    resolved = resolve_config(["transform", "--config", str(cfg), "--time", "0.25"])
    assert resolved["op"] == "heat-mass" and resolved["time"] == 0.25 and resolved["seed"] == 7
    code, out = run(tmp_path, "transform", "--config", str(cfg), "--time", "0.25")
    rep = load(out, "residual.json")
    assert code == 0 and rep["config"]["time"] == 0.25 and rep["seed"] == 7


def test_csv_headers_carry_provenance(tmp_path):
    code, out = run(tmp_path, "transform", "--op", "sft-roundtrip")
    h = load(out, "residual.json")["config_hash"]
    for csv in out.glob("*.csv"):
        lines = csv.read_text().splitlines()
        assert "generated_at" in lines[0]
        assert lines[1] == f"# config_hash={h} seed=0"


def test_runs_are_deterministic(tmp_path):
    argv = ("transform", "--op", "abel-roundtrip")
    run(tmp_path, *argv, name="a")
    run(tmp_path, *argv, name="b")
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in files:
        assert (strip_timestamp((tmp_path / "a" / name).read_text())
                == strip_timestamp((tmp_path / "b" / name).read_text()))


def test_approx_certifies(tmp_path):
    code, out = run(tmp_path, "approx", "--level", "5")
    rep = load(out, "approx.json")
    assert code == 0 and rep["empirical_error"] <= rep["certified_bound"]


def test_approx_level_too_coarse(tmp_path):
    code, out = run(tmp_path, "approx", "--level", "2")
    rep = load(out, "approx.json")
    assert code == 1 and rep["status"] == "level-too-coarse"
    assert rep["minimal_level"] > 2


def test_divergent_dichotomy(tmp_path):
    code, out = run(tmp_path, "dichotomy", "--psi", "lin-log:1", "--space", "H3")
    assert code == 0
    rep = load(out, "dichotomy.json")
    assert rep["passed"]
    assert (out / "ladder.csv").exists() and (out / "decay.csv").exists()


def test_witness_real_line(tmp_path):
    code, out = run(tmp_path, "witness", "--psi", "power:0.5")
    assert code == 0 and load(out, "witness.json")["passed"]


def test_witness_rejects_divergent(tmp_path):
    assert run(tmp_path, "witness", "--psi", "lin-log:1")[0] != 0

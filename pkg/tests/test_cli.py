import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from gibbs1d.cli import main
from gibbs1d.model import shipped_model_path

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("GIBBS1D_REGEN_GOLDEN") == "1"


def model(name):
    return str(shipped_model_path(name))


# (golden file, argv without --out)
GOLDEN_CASES = [
    ("conditional_ising_nn.csv", ["conditional", "--model", model("ising_nn"), "--channel", "flip01", "--n", "3"]),
    ("conditional_fuzzy_potts.csv", ["conditional", "--model", model("fuzzy_potts"), "--n", "2"]),
    ("bounds_exponential.csv", ["bounds", "--model", model("exponential"), "--horizon", "16"]),
    ("kozlov_exponential.csv", ["kozlov-scan", "--model", model("exponential"), "--diameters", "6", "--n", "5"]),
    ("coupling_exponential.json", ["coupling", "--model", model("exponential"), "--n", "2", "--runs", "500",
                                   "--seed", "1"]),
    ("lemma_exponential.json", ["lemma-check", "--model", model("exponential"), "--n", "1", "--m", "2",
                                "--depth", "2"]),
]


@pytest.mark.parametrize("golden,argv", GOLDEN_CASES, ids=[c[0] for c in GOLDEN_CASES])
def test_golden_outputs(golden, argv, tmp_path):
    out = tmp_path / golden
    assert main(argv + ["--out", str(out)]) == 0
    produced = [out] + sorted(tmp_path.glob("*.fit.json"))
    for path in produced:
        ref = GOLDEN / path.name
        if REGEN:
            ref.write_bytes(path.read_bytes())
        assert path.read_bytes() == ref.read_bytes(), f"{path.name} differs from its golden copy"


def _csv_rows(path):
    lines = Path(path).read_text().splitlines()
    assert lines[0].startswith("# {")
    config = json.loads(lines[0][2:])
    header = lines[1].split(",")
    return config, [dict(zip(header, line.split(","))) for line in lines[2:]]


def test_conditional_independent_model_returns_kernel_row(tmp_path):
    doc = {"alphabet": ["+", "-"], "terms": [],
           "channel": {"type": "kernel", "target": ["+", "-"], "matrix": [[0.7, 0.3], [0.2, 0.8]]}}
    path = tmp_path / "ind.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "c.csv"
    assert main(["conditional", "--model", str(path), "--n", "2", "--out", str(out)]) == 0
    _, rows = _csv_rows(out)
    assert len(rows) == 2 * (8 + 32)
    for r in rows:
        want = 0.45 if r["xi_window"][len(r["xi_window"]) // 2] == "+" else 0.55
        assert float(r["value"]) == pytest.approx(want, abs=1e-15)


def test_config_embeds_seed_and_model(tmp_path):
    out = tmp_path / "c.json"
    main(["coupling", "--model", model("exponential"), "--n", "1", "--runs", "20", "--seed", "99", "--out", str(out)])
    report = json.loads(out.read_text())
    cfg = report["config"]
    assert cfg["seed"] == 99 and cfg["model"] == "exponential.json" and len(cfg["model_sha256"]) == 64
    labels = [r["boundaries"] for r in report["results"]]
    assert labels == ["+/+", "+/-"]


def test_coupling_twice_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["coupling", "--model", model("ising_nn"), "--n", "3", "--runs", "300", "--seed", "5"]
    main(argv + ["--out", str(a)])
    main(argv + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_dump_trajectories(tmp_path):
    out = tmp_path / "c.json"
    assert main(["coupling", "--model", model("ising_nn"), "--n", "1", "--runs", "3", "--out", str(out),
                 "--dump-trajectories"]) == 0
    traj = tmp_path / "c.trajectories.csv"
    lines = traj.read_text().splitlines()
    assert lines[0].startswith("# {")
    assert lines[1].startswith("boundaries,run,step")
    assert len(lines) == 2 + 2 * 3 * 2


def test_bounds_zero_potential(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bounds", "--model", model("independent"), "--horizon", "5", "--out", str(out)]) == 0
    _, rows = _csv_rows(out)
    for r in rows:
        assert float(r["f"]) == float(r["F"]) == float(r["gamma"]) == 0.0
    assert float(rows[0]["p_s0"]) == 1.0


def test_bounds_exponential_monotone(tmp_path):
    out = tmp_path / "b.csv"
    main(["bounds", "--model", model("exponential"), "--horizon", "32", "--out", str(out)])
    config, rows = _csv_rows(out)
    assert 0 < config["delta"] < 1
    for col in ("f", "F", "gamma"):
        vals = [float(r[col]) for r in rows]
        assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_kozlov_scan_reports_fit(tmp_path):
    out = tmp_path / "k.csv"
    assert main(["kozlov-scan", "--model", model("exponential"), "--diameters", "5", "--n", "6",
                 "--out", str(out)]) == 0
    fit = json.loads((tmp_path / "k.fit.json").read_text())
    assert fit["model"] == "exponential" and fit["rate_or_exponent"] > 0
    assert {"residual", "points_used", "config"} <= set(fit)


def test_kozlov_scan_power_law_exponent(tmp_path):
    out = tmp_path / "k.csv"
    assert main(["kozlov-scan", "--model", model("power_law"), "--diameters", "5", "--n", "5",
                 "--fit", "power-law", "--out", str(out)]) == 0
    fit = json.loads((tmp_path / "k.fit.json").read_text())
    assert fit["model"] == "power-law"
    assert "rate_or_exponent" in fit


def test_kozlov_scan_independent_warns(tmp_path, capsys):
    out = tmp_path / "k.csv"
    assert main(["kozlov-scan", "--model", model("independent"), "--diameters", "4", "--n", "3",
                 "--out", str(out)]) == 0
    assert "FitDegenerateError" in capsys.readouterr().err
    _, rows = _csv_rows(out)
    assert all(float(r["sup_abs_U"]) <= 1e-10 for r in rows)
    fit = json.loads((tmp_path / "k.fit.json").read_text())
    assert fit["rate_or_exponent"] is None and "error" in fit


def test_missing_model_exit_2(capsys):
    assert main(["bounds", "--model", "/nonexistent/model.json"]) == 2
    assert "model not found" in capsys.readouterr().err


def test_unknown_channel_exit_2(capsys):
    assert main(["conditional", "--model", model("ising_nn"), "--channel", "nope", "--n", "1"]) == 2
    assert "ModelError" in capsys.readouterr().err


def test_divergent_power_law_exit_3(tmp_path, capsys):
    doc = {"alphabet": ["+", "-"], "terms": [{"family": "power-law-pair", "coupling": 1.0, "exponent": 2.0}],
           "truncation": 10}
    path = tmp_path / "lr.json"
    path.write_text(json.dumps(doc))
    assert main(["bounds", "--model", str(path), "--horizon", "4"]) == 3
    err = capsys.readouterr().err
    assert "DivergenceError" in err and "sum_n f(n) < inf" in err


def test_enumeration_cap_exit_4(capsys):
    assert main(["conditional", "--model", model("ising_nn"), "--n", "12"]) == 4
    assert "EnumerationTooLargeError" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "gibbs1d", "bounds", "--model", model("independent"),
                          "--horizon", "2"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("# {")

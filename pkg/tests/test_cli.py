import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from spinrs.cli import main, parse_config, random_state
from spinrs.errors import ConfigError
from spinrs.matrixcore import check_alcove

SEEDED = """
# explicit n = 3 data
q = 2.0, 0.1, -2.1
p = 0.3, -0.1, -0.2
sigma_12 = 0.6, 0.2
sigma_23 = -0.4, 0.5
sigma_13 = 0.3, -0.3
"""


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def run_cli(tmp_path, command, text, *extra):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(text)
    out = tmp_path / command
    return main([command, "--config", str(cfg), "--out", str(out), "--quiet", *extra]), out


def test_defaults():
    cfg = parse_config("n = 4\n")
    assert (cfg.flow.dt, cfg.flow.t_end, cfg.flow.sample_stride, cfg.flow.regularity_tolerance) == (
        1e-3,
        1.0,
        10,
        1e-9,
    )
    assert cfg.initial == "random" and cfg.n == 4


def test_explicit_config():
    cfg = parse_config(SEEDED)
    assert cfg.initial == "explicit" and cfg.n == 3
    assert cfg.sigma[(0, 2)] == 0.3 - 0.3j
    assert parse_config("q = 1, 0, -1\np = 0, 0, 0\nsigma_1_3 = 0, 1\n").sigma == {(0, 2): 1j}


def test_all_violations_reported():
    with pytest.raises(ConfigError) as info:
        parse_config("q = 0.1, 2.0, -2.1\np = 0.3, 0.1, -0.2\nmystery = 1\ndt = -1\nmethod = euler\n")
    v = info.value.violations
    assert any("q_1 > q_2" in m for m in v)
    assert any("sum(p)" in m for m in v)
    assert any("mystery" in m for m in v)
    assert any("dt must be positive" in m for m in v)
    assert any("method" in m for m in v)


def test_malformed_lines():
    with pytest.raises(ConfigError) as info:
        parse_config("n = 3\nn = 4\nnonsense\nsigma_21 = 1, 0\nseed = x\n")
    assert len(info.value.violations) == 4


def test_random_state_distribution():
    rng = np.random.default_rng(5)
    for n in (2, 3, 6):
        for _ in range(50):
            s = random_state(rng, n)
            assert check_alcove(s.q) == []
            gaps = np.append(-np.diff(s.q), 2 * np.pi - (s.q[0] - s.q[-1]))
            assert gaps.min() >= 0.1 - 1e-12
            assert np.abs(s.p).max() <= 1 + 1e-12 and abs(s.p.sum()) < 1e-12
            assert np.abs(s.sigma).max() <= 1


def test_simulate_free_motion(tmp_path):
    code, out = run_cli(tmp_path, "simulate", "q = 1.0, 0.2, -1.2\np = 0.3, -0.1, -0.2\nt_end = 0.2\ndt = 0.01\n")
    assert code == 0
    header, data = read_csv(out / "trajectory.csv")
    assert header[:7] == ["t", "q_1", "q_2", "q_3", "p_1", "p_2", "p_3"]
    assert header[7:13] == ["re_sigma_12", "im_sigma_12", "re_sigma_13", "im_sigma_13", "re_sigma_23", "im_sigma_23"]
    np.testing.assert_allclose(data[:, 4:7] - data[0, 4:7], 0.0, atol=1e-14)
    slopes = np.diff(data[:, 1:4], axis=0) / np.diff(data[:, :1], axis=0)
    np.testing.assert_allclose(slopes - slopes[0], 0.0, atol=1e-10)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["termination"] == "completed"
    assert set(summary) >= {"config", "ledger_t0", "drift", "timings", "termination"}


def test_deterministic_csv(tmp_path):
    text = "n = 4\nseed = 11\nt_end = 0.1\n"
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    _, out1 = run_cli(tmp_path / "a", "simulate", text)
    _, out2 = run_cli(tmp_path / "b", "simulate", text)
    assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()


def test_compare(tmp_path):
    code, out = run_cli(tmp_path, "compare", SEEDED)
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["max_discrepancy"] < 1e-6
    _, data = read_csv(out / "comparison.csv")
    assert data.shape[0] == 101


def test_project_and_invariants(tmp_path):
    code, out = run_cli(tmp_path, "project", SEEDED + "t_end = 0.2\n")
    assert code == 0
    header, data = read_csv(out / "trajectory.csv")
    assert data.shape == (21, len(header))
    code, out = run_cli(tmp_path, "invariants", SEEDED)
    assert code == 0
    report = json.loads((out / "invariants.json").read_text())
    assert report["ledger"]["H_red"] == pytest.approx(3.8233767548980775, rel=1e-14)


def test_scaling_limit(tmp_path):
    code, out = run_cli(tmp_path, "scaling-limit", SEEDED)
    assert code == 0
    _, data = read_csv(out / "scaling.csv")
    for table in np.unique(data[:, 0]):
        err = data[data[:, 0] == table, 3]
        assert np.all(np.diff(err) < 0)
    summary = json.loads((out / "summary.json").read_text())
    assert all(0.8 <= s <= 1.2 for s in summary["slopes"].values())


def test_poisson_check(tmp_path):
    code, out = run_cli(tmp_path, "poisson-check", "n = 3\npoisson_samples = 5\n")
    assert code == 0
    report = json.loads((out / "poisson.json").read_text())
    assert report["jacobi_analytic_max"] < 1e-10
    assert report["jacobi_fd_max"] < 1e-6
    assert report["linearization_slope"] >= 1.8


def test_config_error_exit(tmp_path, capsys):
    code, out = run_cli(tmp_path, "simulate", "q = 0.1, 2.0, -2.1\np = 0, 0, 0\n")
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError"
    assert json.loads((out / "error.json").read_text()) == err


def test_wall_exit(tmp_path, capsys):
    code, out = run_cli(tmp_path, "simulate", "q = 0.5, -0.5\np = -1, 1\n")
    assert code == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "NonRegularTorus" and err["last_good_time"] < 0.07
    summary = json.loads((out / "summary.json").read_text())
    assert summary["termination"] == "NonRegularTorus"
    _, data = read_csv(out / "trajectory.csv")
    assert data[-1, 0] == err["last_good_time"]


def test_drift_bound_exit(tmp_path, capsys):
    code, _ = run_cli(tmp_path, "simulate", SEEDED + "dt = 0.05\nstride = 1\nmax_drift = 1e-14\n")
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"] == "ToleranceExceeded"


def test_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "spinrs", "invariants", "--out", str(tmp_path / "o"), "--quiet"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "o" / "invariants.json").exists()

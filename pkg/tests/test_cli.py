import json
import math

import numpy as np
import pytest

from bwaves import cli, functional as fn
from bwaves.cli import (
    ConfigError,
    MuSpec,
    build_config,
    load_config,
    parse_mu_spec,
    read_config_text,
)
from bwaves.grid import Field, Grid
from bwaves.wave import Wave, save_wave

BASE = """
coeff.a = -1.0
coeff.c = -1.0
mu = 2*mu0
grid.n = 1024
plots = false
"""


def write_conf(tmp_path, text, name="run.conf"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_read_config_basics():
    raw = read_config_text("# comment\ncoeff.a = -1 # inline\n\ncoeff.c = -2\n")
    assert raw == {"coeff.a": "-1", "coeff.c": "-2"}


def test_unknown_key_is_fatal():
    with pytest.raises(ConfigError):
        read_config_text("coeff.a = -1\ngrid.m = 12\n")


def test_duplicate_key_is_fatal():
    with pytest.raises(ConfigError):
        read_config_text("coeff.a = -1\ncoeff.a = -2\n")


def test_coefficients_xor_model():
    with pytest.raises(ConfigError):
        build_config({"coeff.a": "-1", "coeff.c": "-1", "model.theta": "0.5"})
    with pytest.raises(ConfigError):
        build_config({"mu": "1"})


def test_model_route_computes_coefficients():
    rc = build_config({"model.theta": "0", "model.tau_bond": "1"})
    assert rc.a == pytest.approx(-1.0 / 6.0)
    assert rc.c == pytest.approx(-0.5)


def test_mu_spec_forms():
    assert parse_mu_spec("3.5").resolve(10.0) == [3.5]
    assert parse_mu_spec("mu0").resolve(10.0) == [10.0]
    assert parse_mu_spec("4*mu0").resolve(10.0) == [40.0]
    geo = parse_mu_spec("geom:mu0:100*mu0:3")
    assert geo.is_sweep
    vals = geo.resolve(1.0)
    assert vals == pytest.approx([1.0, 10.0, 100.0])
    ari = parse_mu_spec("arith:1:3:3").resolve(0.0)
    assert ari == pytest.approx([1.0, 2.0, 3.0])
    with pytest.raises(ConfigError):
        parse_mu_spec("geom:1:10")
    with pytest.raises(ConfigError):
        parse_mu_spec("geom:1:10:x")


def test_env_override(tmp_path, monkeypatch):
    path = write_conf(tmp_path, BASE)
    monkeypatch.setenv("BW_GRID_N", "512")
    rc = load_config(path)
    assert rc.grid_n == 512


def test_unknown_env_override_is_fatal(tmp_path, monkeypatch):
    path = write_conf(tmp_path, BASE)
    monkeypatch.setenv("BW_GRID_M", "512")
    with pytest.raises(ConfigError):
        load_config(path)


def test_cli_minimize_end_to_end(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    conf = write_conf(tmp_path, BASE)
    out = tmp_path / "out"
    code = cli.main(["minimize", "--config", str(conf), "--out", str(out), "--trace"])
    assert code == 0
    report = json.loads((out / "pair.csv").exists() and (out / "report.json").read_text())
    assert report["minimize"]["flags"]["converged"] == "pass"
    assert report["minimize"]["flags"]["bound_sandwich"] == "pass"
    assert (out / "history.txt").exists()
    assert not (out / "pair.png").exists()  # plots disabled


def test_cli_minimize_renders_figures(tmp_path):
    conf = write_conf(tmp_path, BASE.replace("plots = false", "plots = true"))
    out = tmp_path / "out"
    code = cli.main(["minimize", "--config", str(conf), "--out", str(out)])
    assert code == 0
    assert (out / "pair.png").exists()
    assert (out / "history.png").exists()


def test_cli_minimize_rejects_regime(tmp_path):
    conf = write_conf(tmp_path, BASE.replace("coeff.a = -1.0", "coeff.a = 1.0"))
    out = tmp_path / "out"
    code = cli.main(["minimize", "--config", str(conf), "--out", str(out)])
    assert code == 3
    report = json.loads((out / "report.json").read_text())
    assert report["regime"]["violations"] == ["a>=0"]


def test_cli_minimize_non_convergence(tmp_path):
    conf = write_conf(tmp_path, BASE + "solver.max_iter = 1\n")
    out = tmp_path / "out"
    code = cli.main(["minimize", "--config", str(conf), "--out", str(out)])
    assert code == 2
    report = json.loads((out / "report.json").read_text())  # partial report written
    assert report["minimize"]["flags"]["converged"] == "fail"


def test_cli_wave_from_stored_pair_and_mirror(tmp_path):
    conf = write_conf(tmp_path, BASE)
    out = tmp_path / "out"
    assert cli.main(["minimize", "--config", str(conf), "--out", str(out)]) == 0
    code = cli.main(["wave", "--config", str(conf), "--out", str(out), "--mirror"])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["wave"]["flags"]["stationary_residual"] == "pass"
    assert report["mirror"]["omega"] > 0
    assert report["mirror"]["residual_matches_original"] is True
    assert (out / "wave_mirror.csv").exists()


def test_cli_wave_rejects_corrupted_header(tmp_path):
    conf = write_conf(tmp_path, BASE)
    out = tmp_path / "out"
    out.mkdir()
    (out / "pair.csv").write_text("# garbage header\n0 0 0\n")
    assert cli.main(["wave", "--config", str(conf), "--out", str(out)]) == 5


def test_cli_wave_rejects_nonnegative_multiplier(tmp_path):
    conf = write_conf(tmp_path, BASE)
    out = tmp_path / "out"
    out.mkdir()
    g = Grid(64, 10.0)
    body = "".join(f"{x} 0 0\n" for x in g.x)
    (out / "pair.csv").write_text(
        "# n=64 L=10\n# mu=1 lambda=0.5 m=-1 residual=0 a=-1 c=-1\n" + body
    )
    assert cli.main(["wave", "--config", str(conf), "--out", str(out)]) == 4


def test_cli_evolve_fresh_pipeline(tmp_path):
    conf = write_conf(tmp_path, BASE + "evolve.t_final = 0.2\nevolve.record_every = 20\n")
    out = tmp_path / "out"
    code = cli.main(["evolve", "--config", str(conf), "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["evolve"]["flags"]["propagation"] == "pass"
    assert report["evolve"]["flags"]["mass_conservation"] == "pass"
    assert (out / "diagnostics.csv").exists()


def test_cli_evolve_blowup_exit_code(tmp_path):
    conf = write_conf(
        tmp_path,
        BASE + "evolve.t_final = 40\nevolve.dt = 0.5\nevolve.dealias = false\n",
    )
    out = tmp_path / "out"
    out.mkdir()
    g = Grid(128, 10.0)
    amp = 2e2
    w = Wave(
        Field(g, amp * np.sin(2 * np.pi * g.x / g.length)),
        Field(g, amp * np.cos(2 * np.pi * g.x / g.length)),
        -1.0,
        1.0,
        -1.0,
    )
    save_wave(out / "wave.csv", w)
    assert cli.main(["evolve", "--config", str(conf), "--out", str(out)]) == 6


def test_cli_verify_default_suite(tmp_path):
    conf = write_conf(
        tmp_path,
        "coeff.a = -1\ncoeff.c = -1\nplots = false\n"
        "verify.fd_pairs = 25\nverify.rearrange_pairs = 25\nverify.sweep_mu_points = 2\n",
    )
    out = tmp_path / "vout"
    code = cli.main(["verify", "--config", str(conf), "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert all(v == "pass" for v in report["checks"].values())


def test_cli_verify_skips_below_threshold(tmp_path):
    conf = write_conf(
        tmp_path,
        "coeff.a = -1\ncoeff.c = -1\nplots = false\n"
        "verify.mu_factors = 0.5\nverify.theta_base_factor = 0\n"
        "verify.fd_pairs = 5\nverify.rearrange_pairs = 5\nverify.sweep_mu_points = 0\n",
    )
    out = tmp_path / "vout"
    code = cli.main(["verify", "--config", str(conf), "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    checks = report["checks"]
    assert checks["bound_sandwich"] == "skipped"
    assert checks["sub_homogeneity"] == "skipped"
    assert checks["l2_ratio_sup"] == "skipped"
    assert checks["gradient_fd"] == "pass"


def test_cli_sweep_continues_past_a_failed_point(tmp_path, monkeypatch):
    conf = write_conf(
        tmp_path,
        "coeff.a = -1\ncoeff.c = -1\nmu = geom:mu0:4*mu0:3\ngrid.n = 512\nplots = false\n",
    )
    out = tmp_path / "sout"
    real_minimize = cli.minimizer.minimize
    h = fn.seed_profile()
    mu0 = fn.mu0(-1.0, -1.0, fn.upper_bound_m(-1.0, -1.0, 1.0, h).c1)
    poisoned = 2.0 * mu0  # middle point of the progression

    def flaky(a, c, mu, grid, cfg=None, h=None):
        if math.isclose(mu, poisoned, rel_tol=1e-9):
            raise RuntimeError("synthetic failure")
        return real_minimize(a, c, mu, grid, cfg, h)

    monkeypatch.setattr(cli.minimizer, "minimize", flaky)
    code = cli.main(["sweep", "--config", str(conf), "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["n_ok"] == 2
    statuses = [p["status"] for p in report["points"]]
    assert sum(s == "ok" for s in statuses) == 2
    rows = [ln for ln in (out / "sweep.csv").read_text().splitlines() if not ln.startswith("#")]
    assert len(rows) == 2


def test_cli_sweep_all_failed_exit_code(tmp_path):
    conf = write_conf(
        tmp_path,
        "coeff.a = -1\ncoeff.c = -1\nmu = geom:mu0:2*mu0:2\ngrid.n = 512\n"
        "solver.max_iter = 1\nplots = false\n",
    )
    out = tmp_path / "sout"
    assert cli.main(["sweep", "--config", str(conf), "--out", str(out)]) == 8


def test_cli_sweep_single_point_matches_pipeline(tmp_path):
    conf = write_conf(
        tmp_path,
        "coeff.a = -1\ncoeff.c = -1\nmu = geom:2*mu0:2*mu0:1\ngrid.n = 1024\nplots = false\n",
    )
    out = tmp_path / "sout"
    assert cli.main(["sweep", "--config", str(conf), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["n_points"] == 1
    point = json.loads((out / "point_0" / "report.json").read_text())
    conf2 = write_conf(tmp_path, BASE, name="single.conf")
    out2 = tmp_path / "single"
    assert cli.main(["minimize", "--config", str(conf2), "--out", str(out2)]) == 0
    single = json.loads((out2 / "report.json").read_text())
    assert point["minimize"]["m"] == single["minimize"]["m"]
    assert point["minimize"]["lambda"] == single["minimize"]["lambda"]


def test_cli_config_error_exit_code(tmp_path):
    conf = write_conf(tmp_path, "coeff.a = -1\nbogus.key = 2\n")
    assert cli.main(["minimize", "--config", str(conf), "--out", str(tmp_path / "o")]) == 5


def test_mu_scalar_required_for_minimize(tmp_path):
    conf = write_conf(tmp_path, BASE.replace("mu = 2*mu0", "mu = geom:mu0:2*mu0:2"))
    assert cli.main(["minimize", "--config", str(conf), "--out", str(tmp_path / "o")]) == 5

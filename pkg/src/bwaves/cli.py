"""Command-line front end: flat-file configuration, the minimize -> wave ->
evolve pipeline, the inequality verification suite, and mass sweeps.

Config files are flat `key = value` lines with `#` comments and dot-namespaced
keys; unknown keys are fatal.  Every key can be overridden through an
environment variable BW_<KEY> with dots replaced by underscores, uppercased
(e.g. BW_GRID_N).  Reports are JSON with deterministic float formatting;
column data uses the plain text formats of the individual modules; figures are
rendered as PNG files next to the data unless plots are disabled.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import evolver, functional as fn, minimizer, params, rearrange, reporting
from . import wave as wv
from .grid import Field, FieldPair, FieldFormatError, Grid, inner, l2_norm_sq, lp_norm

EXIT_OK = 0
EXIT_NONCONVERGENCE = 2
EXIT_REGIME = 3
EXIT_BAD_MULTIPLIER = 4
EXIT_PARSE = 5
EXIT_BLOWUP = 6
EXIT_VERIFY = 7
EXIT_SWEEP = 8


class ConfigError(ValueError):
    """Bad configuration file, bad key, or malformed input data."""


# ---------------------------------------------------------------------------
# mu specifications: scalars or finite progressions, optionally in units of mu0


@dataclass(frozen=True)
class MuTerm:
    factor: float
    uses_mu0: bool

    def resolve(self, mu0_value: float) -> float:
        return self.factor * (mu0_value if self.uses_mu0 else 1.0)


@dataclass(frozen=True)
class MuSpec:
    kind: str  # scalar | geom | arith
    terms: tuple[MuTerm, ...]
    count: int = 1

    @property
    def is_sweep(self) -> bool:
        return self.kind != "scalar"

    def resolve(self, mu0_value: float) -> list[float]:
        vals = [t.resolve(mu0_value) for t in self.terms]
        if self.kind == "scalar":
            return vals
        lo, hi = vals
        if not (lo > 0 and hi > 0 and self.count >= 1):
            raise ConfigError(f"invalid mu progression [{lo}, {hi}] x {self.count}")
        if self.count == 1:
            return [lo]
        if self.kind == "geom":
            return list(np.geomspace(lo, hi, self.count))
        return list(np.linspace(lo, hi, self.count))


def _parse_mu_term(text: str) -> MuTerm:
    t = text.strip()
    if t == "mu0":
        return MuTerm(1.0, True)
    for sep in ("*mu0", "mu0*"):
        if sep == "*mu0" and t.endswith(sep):
            return MuTerm(_parse_float(t[: -len(sep)]), True)
        if sep == "mu0*" and t.startswith(sep):
            return MuTerm(_parse_float(t[len(sep) :]), True)
    return MuTerm(_parse_float(t), False)


def parse_mu_spec(text: str) -> MuSpec:
    t = text.strip()
    if t.startswith(("geom:", "arith:")):
        kind, *rest = t.split(":")
        if len(rest) != 3:
            raise ConfigError(f"mu progression needs `{kind}:<lo>:<hi>:<count>`, got {text!r}")
        lo, hi = _parse_mu_term(rest[0]), _parse_mu_term(rest[1])
        try:
            count = int(rest[2])
        except ValueError:
            raise ConfigError(f"bad point count in mu spec {text!r}") from None
        return MuSpec(kind, (lo, hi), count)
    return MuSpec("scalar", (_parse_mu_term(t),))


# ---------------------------------------------------------------------------
# configuration


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "on", "1", "yes"):
        return True
    if t in ("false", "off", "0", "no"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(_parse_float(tok) for tok in text.split(",") if tok.strip())


def _parse_coeff_pairs(text: str) -> tuple[tuple[float, float], ...]:
    pairs = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        comps = chunk.split(",")
        if len(comps) != 2:
            raise ConfigError(f"coefficient pair needs `a,c`, got {chunk!r}")
        pairs.append((_parse_float(comps[0]), _parse_float(comps[1])))
    return tuple(pairs)


@dataclass(frozen=True)
class VerifyParams:
    mu_factors: tuple[float, ...] = (1.0, 2.0)
    theta_factors: tuple[float, ...] = (1.5, 2.0)
    theta_base_factor: float = 4.0
    sweep_coeffs: tuple[tuple[float, float], ...] = ((-1.0, -1.0),)
    sweep_mu_points: int = 4
    sweep_mu_span: float = 10.0
    fd_pairs: int = 100
    rearrange_pairs: int = 100
    seed: int = 1234


@dataclass(frozen=True)
class RunConfig:
    a: float
    c: float
    mu_spec: MuSpec
    grid_n: int | None           # None = adapt to (a, c, mu)
    grid_length: float | None
    solver: minimizer.MinimizerConfig
    evolve_dt: float
    evolve_t_final: float | None  # None = one profile width, 1/|omega|
    evolve_dealias: bool
    evolve_record_every: int
    seed_profile: str
    plots: bool
    output_dir: str
    verify: VerifyParams
    model: params.ModelParams | None = None


_KNOWN_KEYS = (
    "coeff.a",
    "coeff.c",
    "model.theta",
    "model.lambda",
    "model.mu",
    "model.tau_bond",
    "mu",
    "grid.n",
    "grid.L",
    "solver.tol",
    "solver.max_iter",
    "solver.step0",
    "solver.rearrange_every",
    "solver.backtrack_factor",
    "solver.min_step",
    "solver.polish",
    "evolve.dt",
    "evolve.t_final",
    "evolve.dealias",
    "evolve.record_every",
    "seed_profile",
    "plots",
    "output_dir",
    "verify.mu_factors",
    "verify.theta_factors",
    "verify.theta_base_factor",
    "verify.sweep_coeffs",
    "verify.sweep_mu_points",
    "verify.sweep_mu_span",
    "verify.fd_pairs",
    "verify.rearrange_pairs",
    "verify.seed",
)

_ENV_PREFIX = "BW_"


def _env_name(key: str) -> str:
    return _ENV_PREFIX + key.upper().replace(".", "_")


def read_config_text(text: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected `key = value`, got {line.strip()!r}")
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def _apply_env_overrides(raw: dict[str, str], environ) -> None:
    known_env = {_env_name(k): k for k in _KNOWN_KEYS}
    for name, value in environ.items():
        if not name.startswith(_ENV_PREFIX):
            continue
        if name not in known_env:
            raise ConfigError(f"unknown environment override {name}")
        raw[known_env[name]] = value


def load_config(path, environ=None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    raw = read_config_text(text)
    _apply_env_overrides(raw, environ if environ is not None else os.environ)
    return build_config(raw)


def build_config(raw: dict[str, str]) -> RunConfig:
    has_coeff = "coeff.a" in raw or "coeff.c" in raw
    has_model = any(k.startswith("model.") for k in raw)
    if has_coeff and has_model:
        raise ConfigError("give either coeff.a/coeff.c or model.*, not both")
    if not has_coeff and not has_model:
        raise ConfigError("coefficients missing: set coeff.a/coeff.c or model.*")

    model = None
    if has_model:
        model = params.ModelParams(
            theta=_parse_float(raw.get("model.theta", "1")),
            lambda_model=_parse_float(raw.get("model.lambda", "1")),
            mu_model=_parse_float(raw.get("model.mu", "1")),
            tau_bond=_parse_float(raw.get("model.tau_bond", "0")),
        )
        co = params.abcd_from_model(model)
        a, c = co.a, co.c
    else:
        if "coeff.a" not in raw or "coeff.c" not in raw:
            raise ConfigError("both coeff.a and coeff.c are required")
        a = _parse_float(raw["coeff.a"])
        c = _parse_float(raw["coeff.c"])

    grid_n = None
    if raw.get("grid.n", "auto").strip().lower() != "auto":
        grid_n = _parse_int(raw["grid.n"])
        if grid_n < 16 or grid_n % 2:
            raise ConfigError(f"grid.n must be an even count >= 16, got {grid_n}")
    grid_length = None
    if raw.get("grid.L", "auto").strip().lower() != "auto":
        grid_length = _parse_float(raw["grid.L"])
        if not grid_length > 0:
            raise ConfigError(f"grid.L must be positive, got {grid_length}")

    try:
        solver = minimizer.MinimizerConfig(
            tol=_parse_float(raw.get("solver.tol", "1e-8")),
            max_iter=_parse_int(raw.get("solver.max_iter", "50000")),
            step0=_parse_float(raw.get("solver.step0", "1e-2")),
            rearrange_every=_parse_int(raw.get("solver.rearrange_every", "50")),
            backtrack_factor=_parse_float(raw.get("solver.backtrack_factor", "0.5")),
            min_step=_parse_float(raw.get("solver.min_step", "1e-12")),
            polish=_parse_bool(raw.get("solver.polish", "false")),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid solver settings: {exc}") from exc

    evolve_dt = _parse_float(raw.get("evolve.dt", "1e-3"))
    if not evolve_dt > 0:
        raise ConfigError(f"evolve.dt must be positive, got {evolve_dt}")
    record_every = _parse_int(raw.get("evolve.record_every", "10"))
    if record_every < 1:
        raise ConfigError(f"evolve.record_every must be >= 1, got {record_every}")
    t_final = None
    if raw.get("evolve.t_final", "auto").strip().lower() != "auto":
        t_final = _parse_float(raw["evolve.t_final"])
        if not t_final > 0:
            raise ConfigError(f"evolve.t_final must be positive, got {t_final}")

    verify = VerifyParams(
        mu_factors=_parse_float_list(raw.get("verify.mu_factors", "1,2")),
        theta_factors=_parse_float_list(raw.get("verify.theta_factors", "1.5,2")),
        theta_base_factor=_parse_float(raw.get("verify.theta_base_factor", "4")),
        sweep_coeffs=_parse_coeff_pairs(raw.get("verify.sweep_coeffs", "-1,-1")),
        sweep_mu_points=_parse_int(raw.get("verify.sweep_mu_points", "4")),
        sweep_mu_span=_parse_float(raw.get("verify.sweep_mu_span", "10")),
        fd_pairs=_parse_int(raw.get("verify.fd_pairs", "100")),
        rearrange_pairs=_parse_int(raw.get("verify.rearrange_pairs", "100")),
        seed=_parse_int(raw.get("verify.seed", "1234")),
    )

    seed_name = raw.get("seed_profile", "gaussian")
    if seed_name not in fn.SEED_PROFILES:
        raise ConfigError(f"unknown seed_profile {seed_name!r}")

    return RunConfig(
        a=a,
        c=c,
        mu_spec=parse_mu_spec(raw.get("mu", "1*mu0")),
        grid_n=grid_n,
        grid_length=grid_length,
        solver=solver,
        evolve_dt=_parse_float(raw.get("evolve.dt", "1e-3")),
        evolve_t_final=t_final,
        evolve_dealias=_parse_bool(raw.get("evolve.dealias", "true")),
        evolve_record_every=_parse_int(raw.get("evolve.record_every", "10")),
        seed_profile=seed_name,
        plots=_parse_bool(raw.get("plots", "true")),
        output_dir=raw.get("output_dir", "out"),
        verify=verify,
        model=model,
    )


def config_echo(rc: RunConfig) -> dict:
    echo = {
        "coeff.a": rc.a,
        "coeff.c": rc.c,
        "grid.n": rc.grid_n if rc.grid_n is not None else "auto",
        "grid.L": rc.grid_length if rc.grid_length is not None else "auto",
        "solver.tol": rc.solver.tol,
        "solver.max_iter": rc.solver.max_iter,
        "solver.step0": rc.solver.step0,
        "solver.rearrange_every": rc.solver.rearrange_every,
        "solver.backtrack_factor": rc.solver.backtrack_factor,
        "solver.min_step": rc.solver.min_step,
        "solver.polish": rc.solver.polish,
        "evolve.dt": rc.evolve_dt,
        "evolve.t_final": rc.evolve_t_final if rc.evolve_t_final is not None else "auto",
        "evolve.dealias": rc.evolve_dealias,
        "evolve.record_every": rc.evolve_record_every,
        "seed_profile": rc.seed_profile,
        "plots": rc.plots,
    }
    return echo


# ---------------------------------------------------------------------------
# shared pipeline stages


def regime_report(rc: RunConfig) -> params.RegimeReport:
    if rc.model is not None:
        co = params.abcd_from_model(rc.model)
    else:
        co = params.Coefficients(a=rc.a, b=0.0, c=rc.c, d=0.0)
    return params.validate_solver_regime(co)


def resolve_mu_values(rc: RunConfig) -> list[float]:
    h = fn.seed_profile(rc.seed_profile)
    mu0_value = fn.mu0(rc.a, rc.c, fn.upper_bound_m(rc.a, rc.c, 1.0, h).c1)
    return rc.mu_spec.resolve(mu0_value)


def scalar_mu(rc: RunConfig) -> float:
    if rc.mu_spec.is_sweep:
        raise ConfigError("this command needs a scalar mu, not a sweep specification")
    return resolve_mu_values(rc)[0]


def resolve_grid(rc: RunConfig, mu: float, h: Field) -> Grid:
    if rc.grid_n is not None and rc.grid_length is not None:
        return Grid(rc.grid_n, rc.grid_length)
    return minimizer.suggest_grid(
        rc.a, rc.c, mu, h=h, n=rc.grid_n, length=rc.grid_length
    )


def _bounds_fragment(b: fn.BoundsReport) -> dict:
    return {"m_lower": b.lower, "m_upper": b.upper, "c1": b.c1_constant, "mu0": b.mu0}


def _minimize_fragment(res: minimizer.MinimizerResult, bounds: fn.BoundsReport) -> dict:
    sandwich = bounds.lower <= res.m_value <= bounds.upper
    val = fn.tau(res.pair, res.a, res.c)
    identity_err = abs(res.lam * res.mu - (val.tau + 0.5 * val.cross)) / max(
        1.0, abs(res.lam * res.mu)
    )
    return {
        "mu": res.mu,
        "m": res.m_value,
        "lambda": res.lam,
        "residual": res.residual,
        "iterations": res.iterations,
        "lambda_gap": abs(res.lambda_f - res.lambda_g),
        "lagrange_identity_error": identity_err,
        "grid_n": res.pair.grid.n,
        "grid_L": res.pair.grid.length,
        "flags": {
            "converged": "pass" if res.converged else "fail",
            "bound_sandwich": "pass" if sandwich else "fail",
            "lambda_negative": "pass" if res.lam < 0 else "fail",
            "lagrange_identity": "pass" if identity_err <= 1e-6 else "fail",
            "below_mu0": "flagged" if "below_mu0_threshold" in res.flags else "no",
            "collapse_to_zero": "flagged" if "collapse_to_zero" in res.flags else "no",
        },
    }


def _wave_fragment(report: wv.WaveReport) -> dict:
    return {
        "residual": report.stationary_residual,
        "l2_size": report.l2_size,
        "l2_ratio": report.l2_bound_ratio,
        "omega": report.speed,
        "omega_bound": report.speed_bound,
        "alpha_phi": report.decay_alpha_phi,
        "alpha_psi": report.decay_alpha_psi,
        "decay_residual_phi": report.decay_residual_phi,
        "decay_residual_psi": report.decay_residual_psi,
        "boundary_leak": report.boundary_leak,
        "flags": dict(report.flags),
        "notes": list(report.notes),
    }


def _evolve_fragment(diag: evolver.EvolutionDiagnostics, cfg: evolver.EvolveConfig) -> dict:
    h0 = diag.h_values[0]
    h_drift = float(np.max(np.abs(diag.h_values - h0))) / max(abs(h0), 1e-300)
    mu_drift = float(np.max(np.abs(diag.mass_u - diag.mass_u[0])))
    me_drift = float(np.max(np.abs(diag.mass_eta - diag.mass_eta[0])))
    mom_drift = float(np.max(np.abs(diag.momentum - diag.momentum[0])))
    mass_tol_u = 1e-12 * (1.0 + abs(diag.mass_u[0]))
    mass_tol_e = 1e-12 * (1.0 + abs(diag.mass_eta[0]))
    has_ref = bool(np.any(np.isfinite(diag.propagation_error)))
    prop = float(np.nanmax(diag.propagation_error)) if has_ref else math.nan
    return {
        "dt": cfg.dt,
        "t_final": cfg.t_final,
        "dealias": cfg.dealias,
        "hamiltonian_drift": h_drift,
        "mass_u_drift": mu_drift,
        "mass_eta_drift": me_drift,
        "momentum_drift": mom_drift,
        "max_propagation_error": prop,
        "flags": {
            "hamiltonian_drift": "pass" if h_drift <= 1e-8 else "fail",
            "mass_conservation": "pass"
            if (mu_drift <= mass_tol_u and me_drift <= mass_tol_e)
            else "fail",
            "propagation": ("pass" if prop <= 1e-3 else "fail") if has_ref else "skipped",
        },
    }


def _write_report(out: Path, payload: dict) -> None:
    reporting.write_report(out / "report.json", payload)


def _write_timings(out: Path, timings: dict) -> None:
    # wall-clock data is inherently run-dependent, so it lives outside the
    # deterministic report
    reporting.write_report(out / "timings.json", timings)


def _print_flags(payload, prefix="") -> None:
    for key, val in payload.items():
        if isinstance(val, dict):
            if key == "flags":
                for name, state in val.items():
                    print(f"  [{state:>7}] {prefix}{name}")
            else:
                _print_flags(val, prefix=f"{key}.")


def _maybe_render(rc: RunConfig, fun, *args) -> None:
    if not rc.plots:
        return
    from . import plots

    fun_ = getattr(plots, fun)
    fun_(*args)


def _minimize_stage(rc: RunConfig, mu: float, out: Path, trace: bool):
    h = fn.seed_profile(rc.seed_profile)
    grid = resolve_grid(rc, mu, h)
    t0 = time.perf_counter()
    res = minimizer.minimize(rc.a, rc.c, mu, grid, rc.solver, h)
    elapsed = time.perf_counter() - t0
    bounds = fn.bounds_report(rc.a, rc.c, mu, h)
    minimizer.save_result(out / "pair.csv", res)
    if trace and len(res.history):
        with open(out / "history.txt", "w") as fh:
            fh.write("# tau residual\n")
            for tau_v, res_v in res.history:
                fh.write("%.17g %.17g\n" % (tau_v, res_v))
    _maybe_render(rc, "render_pair", res.pair, out / "pair.png")
    if len(res.history):
        _maybe_render(rc, "render_history", res.history, out / "history.png")
    return res, bounds, elapsed


def _wave_stage(rc: RunConfig, res: minimizer.MinimizerResult, out: Path, mirror_too: bool):
    h = fn.seed_profile(rc.seed_profile)
    c1 = fn.upper_bound_m(rc.a, rc.c, res.mu, h).c1
    w = wv.build_wave(res)
    report = wv.verify(w, rc.a, rc.c, c1)
    wv.save_wave(out / "wave.csv", w)
    _maybe_render(rc, "render_wave", w, out / "wave.png")
    mirror_fragment = None
    if mirror_too:
        m = wv.mirror(w)
        wv.save_wave(out / "wave_mirror.csv", m)
        mirror_fragment = {
            "omega": m.omega,
            "residual": wv.stationary_residual(m, rc.a, rc.c),
            "residual_matches_original": bool(
                abs(wv.stationary_residual(m, rc.a, rc.c) - report.stationary_residual)
                <= 1e-12 * max(report.stationary_residual, 1e-300)
            ),
        }
    return w, report, mirror_fragment


# ---------------------------------------------------------------------------
# commands


def cmd_minimize(rc: RunConfig, out: Path, trace: bool = False) -> int:
    regime = regime_report(rc)
    payload: dict = {"command": "minimize", "config": config_echo(rc)}
    if not regime.accepted:
        payload["regime"] = {"accepted": False, "violations": list(regime.violations)}
        _write_report(out, payload)
        print(f"regime rejected: {', '.join(regime.violations)}")
        return EXIT_REGIME
    mu = scalar_mu(rc)
    res, bounds, elapsed = _minimize_stage(rc, mu, out, trace)
    payload["bounds"] = _bounds_fragment(bounds)
    payload["minimize"] = _minimize_fragment(res, bounds)
    _write_report(out, payload)
    _write_timings(out, {"minimize_seconds": elapsed})
    _print_flags(payload)
    return EXIT_OK if res.converged else EXIT_NONCONVERGENCE


def cmd_wave(rc: RunConfig, out: Path, mirror_too: bool = False, trace: bool = False) -> int:
    payload: dict = {"command": "wave", "config": config_echo(rc)}
    pair_path = out / "pair.csv"
    if pair_path.exists():
        res = minimizer.load_result(pair_path)
    else:
        regime = regime_report(rc)
        if not regime.accepted:
            payload["regime"] = {"accepted": False, "violations": list(regime.violations)}
            _write_report(out, payload)
            print(f"regime rejected: {', '.join(regime.violations)}")
            return EXIT_REGIME
        mu = scalar_mu(rc)
        res, bounds, _ = _minimize_stage(rc, mu, out, trace)
        payload["bounds"] = _bounds_fragment(bounds)
        payload["minimize"] = _minimize_fragment(res, bounds)
    if res.lam >= 0:
        payload["error"] = f"loaded multiplier is not negative: {res.lam}"
        _write_report(out, payload)
        print(payload["error"])
        return EXIT_BAD_MULTIPLIER
    t0 = time.perf_counter()
    w, report, mirror_fragment = _wave_stage(rc, res, out, mirror_too)
    payload["wave"] = _wave_fragment(report)
    if mirror_fragment is not None:
        payload["mirror"] = mirror_fragment
    _write_report(out, payload)
    _write_timings(out, {"wave_seconds": time.perf_counter() - t0})
    _print_flags(payload)
    return EXIT_OK


def cmd_evolve(rc: RunConfig, out: Path, trace: bool = False) -> int:
    payload: dict = {"command": "evolve", "config": config_echo(rc)}
    wave_path = out / "wave.csv"
    if wave_path.exists():
        w = wv.load_wave(wave_path)
    else:
        regime = regime_report(rc)
        if not regime.accepted:
            payload["regime"] = {"accepted": False, "violations": list(regime.violations)}
            _write_report(out, payload)
            print(f"regime rejected: {', '.join(regime.violations)}")
            return EXIT_REGIME
        mu = scalar_mu(rc)
        res, bounds, _ = _minimize_stage(rc, mu, out, trace)
        payload["bounds"] = _bounds_fragment(bounds)
        payload["minimize"] = _minimize_fragment(res, bounds)
        if res.lam >= 0:
            payload["error"] = f"multiplier is not negative: {res.lam}"
            _write_report(out, payload)
            return EXIT_BAD_MULTIPLIER
        w, report, _ = _wave_stage(rc, res, out, False)
        payload["wave"] = _wave_fragment(report)
    t_final = rc.evolve_t_final
    if t_final is None:
        if w.omega == 0:
            raise ConfigError("cannot pick t_final automatically for a zero-speed wave")
        t_final = 1.0 / abs(w.omega)
    try:
        ecfg = evolver.EvolveConfig(
            dt=rc.evolve_dt,
            t_final=t_final,
            dealias=rc.evolve_dealias,
            record_every=rc.evolve_record_every,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid evolve settings: {exc}") from exc
    t0 = time.perf_counter()
    try:
        diag = evolver.evolve(FieldPair(w.phi, w.psi), rc.a, rc.c, ecfg, reference=w)
    except evolver.BlowupDetectedError as exc:
        payload["evolve"] = {"error": str(exc), "blowup_time": exc.t}
        _write_report(out, payload)
        print(str(exc))
        return EXIT_BLOWUP
    evolver.save_diagnostics(out / "diagnostics.csv", diag)
    payload["evolve"] = _evolve_fragment(diag, ecfg)
    _maybe_render(rc, "render_diagnostics", diag, out / "diagnostics.png")
    _write_report(out, payload)
    _write_timings(out, {"evolve_seconds": time.perf_counter() - t0})
    _print_flags(payload)
    flags = payload["evolve"]["flags"]
    ok = all(v in ("pass", "skipped") for v in flags.values())
    return EXIT_OK if ok else EXIT_NONCONVERGENCE


def _random_band_limited(rng, grid: Grid, modes: int = 12, amplitude: float = 1.0) -> Field:
    coeff = np.zeros(grid.n // 2 + 1, dtype=complex)
    coeff[1 : modes + 1] = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    samples = np.fft.irfft(coeff, grid.n)
    peak = np.max(np.abs(samples))
    if peak > 0:
        samples *= amplitude / peak
    return Field(grid, samples)


def _gradient_fd_suite(rc: RunConfig, rng, pairs: int) -> dict:
    grid = Grid(128, 20.0)
    eps = 1e-5
    worst = 0.0
    for _ in range(pairs):
        p = FieldPair(_random_band_limited(rng, grid), _random_band_limited(rng, grid))
        q = FieldPair(_random_band_limited(rng, grid), _random_band_limited(rng, grid))
        gradient = fn.grad(p, rc.a, rc.c)
        directional = inner(gradient.f, q.f) + inner(gradient.g, q.g)
        plus = FieldPair(
            Field(grid, p.f.samples + eps * q.f.samples),
            Field(grid, p.g.samples + eps * q.g.samples),
        )
        minus = FieldPair(
            Field(grid, p.f.samples - eps * q.f.samples),
            Field(grid, p.g.samples - eps * q.g.samples),
        )
        fd = (fn.tau(plus, rc.a, rc.c).tau - fn.tau(minus, rc.a, rc.c).tau) / (2 * eps)
        rel = abs(directional - fd) / max(abs(fd), 1e-30)
        worst = max(worst, rel)
    return {"pairs": pairs, "worst_relative_error": worst, "pass": worst < 1e-6}


def _rearrange_suite(rng, pairs: int, a: float, c: float) -> dict:
    grid = Grid(256, 40.0)
    norm_exact = True
    hl_ok = 0
    tau_ok = 0
    for _ in range(pairs):
        u = _random_band_limited(rng, grid, modes=20, amplitude=1.3)
        star = rearrange.symmetric_decreasing(u)
        for p in (2, 3, 4, np.inf):
            if not math.isclose(lp_norm(u, p), lp_norm(star, p), rel_tol=0, abs_tol=1e-13 * max(1.0, lp_norm(u, p))):
                norm_exact = False
        uf = Field(grid, np.abs(_random_band_limited(rng, grid, modes=16).samples))
        vg = Field(grid, np.abs(_random_band_limited(rng, grid, modes=16).samples))
        if inner(rearrange.symmetric_decreasing(uf), rearrange.symmetric_decreasing(vg)) >= inner(uf, vg) - 1e-12:
            hl_ok += 1
        p = FieldPair(
            _random_band_limited(rng, grid, modes=14, amplitude=1.1),
            _random_band_limited(rng, grid, modes=14, amplitude=1.1),
        )
        before = fn.tau(p, a, c).tau
        after = fn.tau(rearrange.project_pair(p), a, c).tau
        if after <= before + 1e-8 * abs(before):
            tau_ok += 1
    return {
        "pairs": pairs,
        "lp_norms_exact": norm_exact,
        "hardy_littlewood_ok": hl_ok,
        "tau_nonincrease_ok": tau_ok,
        "pass": norm_exact and hl_ok == pairs and tau_ok >= math.ceil(0.99 * pairs),
    }


def cmd_verify(rc: RunConfig, out: Path, trace: bool = False) -> int:
    payload: dict = {"command": "verify", "config": config_echo(rc)}
    regime = regime_report(rc)
    if not regime.accepted:
        payload["regime"] = {"accepted": False, "violations": list(regime.violations)}
        _write_report(out, payload)
        print(f"regime rejected: {', '.join(regime.violations)}")
        return EXIT_REGIME

    vp = rc.verify
    rng = np.random.default_rng(vp.seed)
    h = fn.seed_profile(rc.seed_profile)
    c1 = fn.upper_bound_m(rc.a, rc.c, 1.0, h).c1
    mu0_value = fn.mu0(rc.a, rc.c, c1)
    checks: dict[str, str] = {}
    details: dict = {"mu0": mu0_value, "c1": c1}
    t0 = time.perf_counter()

    fd = _gradient_fd_suite(rc, rng, vp.fd_pairs)
    details["gradient_fd"] = {k: v for k, v in fd.items() if k != "pass"}
    checks["gradient_fd"] = "pass" if fd["pass"] else "fail"

    ra = _rearrange_suite(rng, vp.rearrange_pairs, rc.a, rc.c)
    details["rearrange"] = {k: v for k, v in ra.items() if k != "pass"}
    checks["rearrange_suite"] = "pass" if ra["pass"] else "fail"

    # bound sandwich, multiplier identity, and wave checks per mass point
    sandwich_states = []
    identity_states = []
    wave_states = []
    speed_states = []
    points = []
    cache: dict[float, minimizer.MinimizerResult] = {}
    for factor in vp.mu_factors:
        mu = factor * mu0_value
        entry: dict = {"mu_factor": factor, "mu": mu}
        if factor < 1.0:
            entry["status"] = "skipped"
            sandwich_states.append("skipped")
            identity_states.append("skipped")
            wave_states.append("skipped")
            speed_states.append("skipped")
            points.append(entry)
            continue
        grid = resolve_grid(rc, mu, h)
        res = minimizer.minimize(rc.a, rc.c, mu, grid, rc.solver, h)
        cache[factor] = res
        bounds = fn.bounds_report(rc.a, rc.c, mu, h)
        entry["bounds"] = _bounds_fragment(bounds)
        entry["minimize"] = _minimize_fragment(res, bounds)
        ok_sandwich = (
            res.converged and bounds.lower <= res.m_value <= bounds.upper and res.residual <= rc.solver.tol
        )
        sandwich_states.append("pass" if ok_sandwich else "fail")
        ok_ident = (
            entry["minimize"]["lagrange_identity_error"] <= 1e-6 and res.lam < 0
        )
        identity_states.append("pass" if ok_ident else "fail")
        if res.lam < 0:
            w = wv.build_wave(res)
            wr = wv.verify(w, rc.a, rc.c, c1)
            entry["wave"] = _wave_fragment(wr)
            wave_bad = [
                k
                for k, v in wr.flags.items()
                if v == "fail" and k not in ("speed_in_bound", "speed_negative")
            ]
            wave_states.append("pass" if not wave_bad else "fail")
            speed_states.append(
                "pass"
                if wr.flags["speed_in_bound"] == "pass" and wr.flags["speed_negative"] == "pass"
                else "fail"
            )
        else:
            wave_states.append("fail")
            speed_states.append("fail")
        points.append(entry)
    details["mass_points"] = points

    def combine(states):
        if any(s == "fail" for s in states):
            return "fail"
        if all(s == "skipped" for s in states):
            return "skipped"
        return "pass"

    checks["bound_sandwich"] = combine(sandwich_states) if sandwich_states else "skipped"
    checks["lagrange_identity"] = combine(identity_states) if identity_states else "skipped"
    checks["wave_suite"] = combine(wave_states) if wave_states else "skipped"
    checks["speed_bound"] = combine(speed_states) if speed_states else "skipped"

    # sub-homogeneity m(theta mu) <= theta m(mu) around a base mass
    base_factor = vp.theta_base_factor
    if base_factor >= 1.0 and vp.theta_factors:
        base_mu = base_factor * mu0_value
        base = cache.get(base_factor)
        if base is None:
            base = minimizer.minimize(
                rc.a, rc.c, base_mu, resolve_grid(rc, base_mu, h), rc.solver, h
            )
        sub = []
        ok_all = base.converged
        for theta in vp.theta_factors:
            mu_t = theta * base_mu
            res_t = minimizer.minimize(
                rc.a, rc.c, mu_t, resolve_grid(rc, mu_t, h), rc.solver, h
            )
            ok = (
                res_t.converged
                and res_t.m_value <= theta * base.m_value + 1e-6 * abs(base.m_value)
            )
            ok_all = ok_all and ok
            sub.append(
                {
                    "theta": theta,
                    "m_base": base.m_value,
                    "m_scaled": res_t.m_value,
                    "margin": theta * base.m_value - res_t.m_value,
                    "ok": ok,
                }
            )
        details["sub_homogeneity"] = sub
        checks["sub_homogeneity"] = "pass" if ok_all else "fail"
    else:
        checks["sub_homogeneity"] = "skipped"

    # l2-ratio sup over a small coefficient/mass sweep
    if vp.sweep_mu_points > 0 and vp.sweep_coeffs:
        sup_ratio = 0.0
        rows = []
        ok_all = True
        for (aa, cc) in vp.sweep_coeffs:
            c1_s = fn.upper_bound_m(aa, cc, 1.0, h).c1
            mu0_s = fn.mu0(aa, cc, c1_s)
            for mu in np.geomspace(mu0_s, vp.sweep_mu_span * mu0_s, vp.sweep_mu_points):
                grid = minimizer.suggest_grid(aa, cc, mu, h=h, n=rc.grid_n)
                res = minimizer.minimize(aa, cc, mu, grid, rc.solver, h)
                if not (res.converged and res.lam < 0):
                    ok_all = False
                    rows.append({"a": aa, "c": cc, "mu": mu, "status": "fail"})
                    continue
                w = wv.build_wave(res)
                size = l2_norm_sq(w.phi) + l2_norm_sq(w.psi)
                ratio = size / math.sqrt(abs(aa) + abs(cc))
                sup_ratio = max(sup_ratio, ratio)
                bound = (1.0 / c1_s) * (abs(aa) + abs(cc)) ** (1.0 / 3.0) * mu ** (-2.0 / 3.0)
                ok_all = ok_all and math.isfinite(ratio) and abs(w.omega) <= bound
                rows.append(
                    {"a": aa, "c": cc, "mu": mu, "l2_ratio": ratio, "omega": w.omega}
                )
        details["l2_ratio_sweep"] = {"sup": sup_ratio, "rows": rows}
        checks["l2_ratio_sup"] = "pass" if ok_all and math.isfinite(sup_ratio) else "fail"
    else:
        checks["l2_ratio_sup"] = "skipped"

    payload["checks"] = checks
    payload["details"] = details
    _write_report(out, payload)
    _write_timings(out, {"verify_seconds": time.perf_counter() - t0})
    solved = [p for p in points if "minimize" in p]
    if solved:
        _maybe_render(
            rc,
            "render_bounds",
            [p["mu"] for p in solved],
            [p["bounds"]["m_lower"] for p in solved],
            [p["bounds"]["m_upper"] for p in solved],
            [p["minimize"]["m"] for p in solved],
            out / "bounds.png",
        )
    for name, state in checks.items():
        print(f"  [{state:>7}] {name}")
    failed = [k for k, v in checks.items() if v == "fail"]
    return EXIT_VERIFY if failed else EXIT_OK


def _sweep_point(args) -> dict:
    rc, mu, point_dir = args
    point_dir.mkdir(parents=True, exist_ok=True)
    h = fn.seed_profile(rc.seed_profile)
    row: dict = {"mu": mu, "dir": point_dir.name}
    try:
        grid = resolve_grid(rc, mu, h)
        res = minimizer.minimize(rc.a, rc.c, mu, grid, rc.solver, h)
        bounds = fn.bounds_report(rc.a, rc.c, mu, h)
        minimizer.save_result(point_dir / "pair.csv", res)
        payload = {
            "command": "sweep-point",
            "bounds": _bounds_fragment(bounds),
            "minimize": _minimize_fragment(res, bounds),
        }
        if not res.converged:
            row["status"] = "non_convergence"
            reporting.write_report(point_dir / "report.json", payload)
            return row
        c1 = bounds.c1_constant
        w = wv.build_wave(res)
        wr = wv.verify(w, rc.a, rc.c, c1)
        wv.save_wave(point_dir / "wave.csv", w)
        payload["wave"] = _wave_fragment(wr)
        reporting.write_report(point_dir / "report.json", payload)
        row.update(
            {
                "status": "ok",
                "m": res.m_value,
                "lambda": res.lam,
                "omega": w.omega,
                "l2_size": wr.l2_size,
                "l2_ratio": wr.l2_bound_ratio,
                "alpha_phi": wr.decay_alpha_phi,
            }
        )
    except Exception as exc:  # keep sweeping; the point is reported as failed
        row["status"] = f"error: {exc}"
    return row


def cmd_sweep(rc: RunConfig, out: Path, jobs: int = 1, trace: bool = False) -> int:
    payload: dict = {"command": "sweep", "config": config_echo(rc)}
    regime = regime_report(rc)
    if not regime.accepted:
        payload["regime"] = {"accepted": False, "violations": list(regime.violations)}
        _write_report(out, payload)
        print(f"regime rejected: {', '.join(regime.violations)}")
        return EXIT_REGIME
    mu_values = resolve_mu_values(rc)
    tasks = [
        (rc, mu, out / f"point_{i}") for i, mu in enumerate(mu_values)
    ]
    t0 = time.perf_counter()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    ok_rows = [r for r in rows if r.get("status") == "ok"]
    with open(out / "sweep.csv", "w") as fh:
        fh.write("# mu m lambda omega l2_size l2_ratio alpha_phi\n")
        for r in ok_rows:
            fh.write(
                " ".join(
                    "%.17g" % r[k]
                    for k in ("mu", "m", "lambda", "omega", "l2_size", "l2_ratio", "alpha_phi")
                )
                + "\n"
            )
    payload["points"] = rows
    payload["n_points"] = len(rows)
    payload["n_ok"] = len(ok_rows)
    if ok_rows:
        payload["l2_ratio_sup"] = max(r["l2_ratio"] for r in ok_rows)
        omegas = [abs(r["omega"]) for r in ok_rows]
        payload["omega_monotone_decreasing"] = all(
            b <= a * (1 + 1e-9) for a, b in zip(omegas, omegas[1:])
        )
    _write_report(out, payload)
    _write_timings(out, {"sweep_seconds": time.perf_counter() - t0})
    _maybe_render(rc, "render_sweep", ok_rows, out / "sweep.png")
    print(f"sweep: {len(ok_rows)}/{len(rows)} points converged")
    return EXIT_OK if ok_rows else EXIT_SWEEP


# ---------------------------------------------------------------------------
# entry point


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bwaves",
        description="Traveling waves of the two-component Boussinesq system via "
        "constrained minimization, with verification and evolution.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("minimize", "solve the constrained minimization and write pair.csv"),
        ("wave", "rescale a minimizer into a traveling wave and verify it"),
        ("evolve", "integrate the wave in time and check rigid propagation"),
        ("verify", "run the inequality suite"),
        ("sweep", "run the pipeline over a mass progression"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="flat key=value config file")
        p.add_argument("--out", default=None, help="output directory (default: config output_dir)")
        p.add_argument("--trace", action="store_true", help="write the solver history")
        if name == "wave":
            p.add_argument("--mirror", action="store_true", help="also write the mirror wave")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="concurrent sweep points")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        rc = load_config(args.config)
        out = Path(args.out) if args.out else Path(rc.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "minimize":
            return cmd_minimize(rc, out, trace=args.trace)
        if args.command == "wave":
            return cmd_wave(rc, out, mirror_too=args.mirror, trace=args.trace)
        if args.command == "evolve":
            return cmd_evolve(rc, out, trace=args.trace)
        if args.command == "verify":
            return cmd_verify(rc, out, trace=args.trace)
        if args.command == "sweep":
            return cmd_sweep(rc, out, jobs=args.jobs, trace=args.trace)
        raise AssertionError(args.command)
    except (ConfigError, FieldFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except evolver.BlowupDetectedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())

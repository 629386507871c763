import math

import numpy as np
import pytest

from bwaves import functional as fn
from bwaves.evolver import (
    BlowupDetectedError,
    EvolveConfig,
    _Stepper,
    evolve,
    save_diagnostics,
    step,
)
from bwaves.grid import Field, FieldPair, Grid
from bwaves.wave import Wave, mirror
from conftest import band_limited

A, C = -1.0, -2.0


def sech2_wave(grid: Grid) -> Wave:
    B = math.sqrt(3.0 / 8.0)
    S = 1.0 / np.cosh(B * grid.x) ** 2
    return Wave(Field(grid, 4.5 * S), Field(grid, -2.25 * S), 1.0, math.nan, 1.0)


def smooth_state(grid: Grid) -> FieldPair:
    return FieldPair(
        Field(grid, 0.8 * np.exp(-grid.x**2 / 4.0)),
        Field(grid, -0.5 * np.exp(-grid.x**2 / 6.0)),
    )


def spectral_roundtrip(state, a, c, dt, nsteps, dealias=True, nonlinear=True):
    st = _Stepper(state.grid, a, c, dt, dealias, nonlinear)
    uh = np.fft.rfft(state.f.samples)
    eh = np.fft.rfft(state.g.samples)
    for _ in range(nsteps):
        uh, eh = st.step_spectral(uh, eh)
    n = state.grid.n
    return np.fft.irfft(uh, n), np.fft.irfft(eh, n)


def test_zero_state_is_fixed():
    g = Grid(64, 10.0)
    zero = FieldPair(Field(g, np.zeros(64)), Field(g, np.zeros(64)))
    out = step(zero, A, C, 1e-2)
    assert np.all(out.f.samples == 0.0)
    assert np.all(out.g.samples == 0.0)


def test_linear_single_mode_matches_matrix_exponential():
    # nonlinearity disabled: each mode rotates with frequency sqrt(p q)
    g = Grid(128, 16.0)
    j = 3
    k = 2 * np.pi * j / g.length
    u0 = np.cos(k * (g.x + g.length / 2))
    state = FieldPair(Field(g, u0), Field(g, np.zeros(g.n)))
    dt, nsteps = 5e-3, 100
    u, e = spectral_roundtrip(state, A, C, dt, nsteps, nonlinear=False)
    p = k - C * k**3
    q = k - A * k**3
    s = math.sqrt(p * q)
    t = nsteps * dt
    # closed form: u stays cos-phased, eta acquires the coupled sine component
    u_exact = math.cos(s * t) * u0
    e_exact = (q / s) * math.sin(s * t) * np.sin(k * (g.x + g.length / 2))
    assert np.max(np.abs(u - u_exact)) < 1e-12
    assert np.max(np.abs(e - e_exact)) < 1e-12


def test_linear_quadratic_invariant_per_mode(rng):
    # q |uh|^2 + p |eh|^2 is conserved exactly by the rotation
    g = Grid(128, 16.0)
    state = FieldPair(band_limited(rng, g, 20), band_limited(rng, g, 20))
    st = _Stepper(g, A, C, 2e-3, dealias=False, nonlinear=False)
    k = g.wavenumbers()
    p = k - C * k**3
    q = k - A * k**3
    uh = np.fft.rfft(state.f.samples)
    eh = np.fft.rfft(state.g.samples)
    before = q * np.abs(uh) ** 2 + p * np.abs(eh) ** 2
    for _ in range(50):
        uh, eh = st.step_spectral(uh, eh)
    after = q * np.abs(uh) ** 2 + p * np.abs(eh) ** 2
    scale = np.max(np.abs(before)) + 1e-300
    assert np.max(np.abs(after - before)) / scale < 1e-12


def test_mass_conservation_is_exact():
    g = Grid(256, 30.0)
    state = smooth_state(g)
    diag = evolve(state, A, C, EvolveConfig(dt=1e-3, t_final=0.5, record_every=50))
    assert np.max(np.abs(diag.mass_u - diag.mass_u[0])) < 1e-13
    assert np.max(np.abs(diag.mass_eta - diag.mass_eta[0])) < 1e-13


def test_one_step_error_shrinks_sixteenfold():
    g = Grid(256, 30.0)
    state = smooth_state(g)
    dt = 2e-2
    ref = spectral_roundtrip(state, A, C, dt / 64, 64)
    full = spectral_roundtrip(state, A, C, dt, 1)
    halves = spectral_roundtrip(state, A, C, dt / 2, 2)
    e1 = np.max(np.abs(full[0] - ref[0])) + np.max(np.abs(full[1] - ref[1]))
    e2 = np.max(np.abs(halves[0] - ref[0])) + np.max(np.abs(halves[1] - ref[1]))
    assert e1 / e2 == pytest.approx(16.0, rel=0.35)


def test_global_convergence_order():
    g = Grid(256, 40.0)
    state = smooth_state(g)
    T = 0.5
    ref = spectral_roundtrip(state, A, C, T / 4096, 4096)
    errs = []
    for nsteps in (16, 32, 64, 128):
        u, e = spectral_roundtrip(state, A, C, T / nsteps, nsteps)
        errs.append(np.max(np.abs(u - ref[0])) + np.max(np.abs(e - ref[1])))
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    assert min(rates) >= 3.8


def test_time_reversal():
    g = Grid(256, 30.0)
    state = smooth_state(g)
    dt = 1e-3
    forward = step(state, A, C, dt)
    back = step(forward, A, C, -dt)
    scale = max(np.max(np.abs(state.f.samples)), np.max(np.abs(state.g.samples)))
    err = max(
        np.max(np.abs(back.f.samples - state.f.samples)),
        np.max(np.abs(back.g.samples - state.g.samples)),
    )
    assert err / scale < 1e-8


def test_exact_wave_propagates_rigidly():
    g = Grid(512, 60.0)
    w = sech2_wave(g)
    diag = evolve(
        FieldPair(w.phi, w.psi), A, C, EvolveConfig(dt=1e-3, t_final=1.0, record_every=100), w
    )
    assert np.nanmax(diag.propagation_error) < 1e-8
    h0 = diag.h_values[0]
    assert np.max(np.abs(diag.h_values - h0)) / abs(h0) < 1e-10


def test_mirror_wave_travels_the_other_way():
    g = Grid(512, 60.0)
    w = sech2_wave(g)
    m = mirror(w)
    diag = evolve(
        FieldPair(m.phi, m.psi), A, C, EvolveConfig(dt=1e-3, t_final=1.0, record_every=100), m
    )
    assert m.omega == -1.0
    assert np.nanmax(diag.propagation_error) < 1e-8


def test_momentum_and_energy_drift_shrink_at_fourth_order():
    # steps large enough that the drifts stay far above the rounding floor
    g = Grid(256, 30.0)
    state = FieldPair(
        Field(g, 1.9 * np.exp(-g.x**2 / 4.0)),
        Field(g, -1.3 * np.exp(-g.x**2 / 6.0)),
    )
    T = 0.4

    def drift(dt):
        diag = evolve(state, A, C, EvolveConfig(dt=dt, t_final=T, record_every=2))
        mom = np.max(np.abs(diag.momentum - diag.momentum[0]))
        ham = np.max(np.abs(diag.h_values - diag.h_values[0]))
        return mom, ham

    drifts = [drift(dt) for dt in (4e-2, 2e-2, 1e-2)]
    for idx in (0, 1):
        series = [d[idx] for d in drifts]
        rates = [math.log2(series[i] / series[i + 1]) for i in range(len(series) - 1)]
        assert min(rates) >= 3.8, (idx, series)


def test_blowup_detection():
    # a huge single-mode state with dealiasing off feeds the quadratic term
    # until the magnitude guard trips
    g = Grid(128, 10.0)
    amp = 2e2
    state = FieldPair(
        Field(g, amp * np.sin(2 * np.pi * g.x / g.length)),
        Field(g, amp * np.cos(2 * np.pi * g.x / g.length)),
    )
    with pytest.raises(BlowupDetectedError):
        evolve(state, A, C, EvolveConfig(dt=0.5, t_final=40.0, dealias=False, record_every=1))


def test_step_requires_focusing_regime():
    g = Grid(64, 10.0)
    zero = FieldPair(Field(g, np.zeros(64)), Field(g, np.zeros(64)))
    with pytest.raises(ValueError):
        step(zero, 1.0, -1.0, 1e-3)


def test_diagnostics_serialization(tmp_path):
    g = Grid(128, 20.0)
    state = smooth_state(g)
    diag = evolve(state, A, C, EvolveConfig(dt=1e-2, t_final=0.1, record_every=2))
    path = tmp_path / "diagnostics.csv"
    save_diagnostics(path, diag)
    lines = path.read_text().splitlines()
    assert lines[0] == "# t H mass_u mass_eta momentum prop_err"
    assert len(lines) == 1 + len(diag.times)

import math

import pytest

from bwaves.params import Coefficients, ModelParams, abcd_from_model, validate_solver_regime


def test_theta_one_zeroes_c_and_d():
    co = abcd_from_model(ModelParams(theta=1.0, lambda_model=1.0, mu_model=1.0, tau_bond=0.0))
    assert co.a == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert co.b == 0.0
    assert co.c == 0.0
    assert co.d == 0.0


def test_theta_zero_with_unit_bond():
    co = abcd_from_model(ModelParams(theta=0.0, lambda_model=1.0, mu_model=1.0, tau_bond=1.0))
    assert co.a == pytest.approx(-1.0 / 6.0, abs=1e-15)
    assert co.b == 0.0
    assert co.c == pytest.approx(-0.5, abs=1e-15)
    assert co.d == 0.0


def test_degenerate_corner_flagged_outside_regime():
    # theta^2 = 1/3 with bond number 1/3 collapses both dispersion coefficients
    co = abcd_from_model(
        ModelParams(theta=math.sqrt(1.0 / 3.0), lambda_model=1.0, mu_model=1.0, tau_bond=1.0 / 3.0)
    )
    assert co.a == pytest.approx(0.0, abs=1e-16)
    assert co.c == pytest.approx(0.0, abs=1e-16)
    assert not validate_solver_regime(co).accepted


def test_unit_modeling_parameters_zero_b_and_d_exactly():
    for theta in (0.0, 0.3, 0.5, 0.99, 1.0):
        for tau in (0.0, 0.2, 2.0):
            co = abcd_from_model(ModelParams(theta, 1.0, 1.0, tau))
            assert co.b == 0.0
            assert co.d == 0.0


@pytest.mark.parametrize("which", ["lambda_model", "mu_model", "tau_bond"])
def test_map_affine_in_modeling_parameters(which):
    # three-point interpolation: value at the midpoint equals the average
    base = {"theta": 0.4, "lambda_model": 0.7, "mu_model": 1.3, "tau_bond": 0.5}
    lo, hi = 0.2, 1.8
    vals = {}
    for point, name in ((lo, "lo"), (hi, "hi"), (0.5 * (lo + hi), "mid")):
        kw = dict(base)
        kw[which] = point
        vals[name] = abcd_from_model(ModelParams(**kw))
    for attr in "abcd":
        mid = 0.5 * (getattr(vals["lo"], attr) + getattr(vals["hi"], attr))
        assert getattr(vals["mid"], attr) == pytest.approx(mid, abs=1e-14)


def test_regime_accepts_focusing_corner():
    assert validate_solver_regime(Coefficients(-1.0, 0.0, -1.0, 0.0)).accepted


def test_regime_rejects_nonzero_b():
    report = validate_solver_regime(Coefficients(-1.0, 0.1, -1.0, 0.0))
    assert not report.accepted
    assert report.violations == ("b!=0",)


def test_regime_rejects_vanishing_a():
    report = validate_solver_regime(Coefficients(0.0, 0.0, -1.0, 0.0))
    assert not report.accepted
    assert "a>=0" in report.violations


def test_model_params_validate_ranges():
    with pytest.raises(ValueError):
        ModelParams(theta=1.5, lambda_model=1.0, mu_model=1.0, tau_bond=0.0)
    with pytest.raises(ValueError):
        ModelParams(theta=0.5, lambda_model=1.0, mu_model=1.0, tau_bond=-0.1)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import frozen_values as fv
from semismooth.core import DomainError
from semismooth.suzuki import _xi_array, log_s_values, maclaurin_integral, s_estimate, s_values, solve_xi


@pytest.mark.parametrize("u", sorted(fv.XI))
def test_xi_against_oracle(u):
    sol = solve_xi(u)
    assert sol.xi == pytest.approx(fv.XI[u], rel=1e-12)
    assert 1 - 1 / u <= sol.xi <= 2 * (u - 1)


def test_xi_vectorised_matches_scalar():
    u = np.array(sorted(fv.XI), dtype=float)
    np.testing.assert_allclose(_xi_array(u), [solve_xi(v).xi for v in u], rtol=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.0001, 1e8))
def test_xi_residual(u):
    sol = solve_xi(u)
    assert abs(math.expm1(sol.xi) - u * sol.xi) <= 1e-12 * (1 + u * sol.xi)


def test_xi_domain():
    with pytest.raises(DomainError):
        solve_xi(1.0)


@pytest.mark.parametrize("xi", sorted(fv.EIN))
def test_ein_against_midpoint_oracle(xi):
    assert maclaurin_integral(xi) == pytest.approx(fv.EIN[xi], rel=1e-9)


def test_ein_small_and_array():
    assert maclaurin_integral(0.0) == 0.0
    assert maclaurin_integral(1e-8) == pytest.approx(1e-8)
    xs = np.array([0.1, 1.0, 2.5])
    np.testing.assert_allclose(maclaurin_integral(xs), [maclaurin_integral(v) for v in xs], rtol=1e-15)
    with pytest.raises(DomainError):
        maclaurin_integral(-1.0)


def test_s_estimate_smooth_cell():
    import published_ratios as pub
    from semismooth.exact import load_fixture

    exact = load_fixture()[2**40, 2**16, 2**16]
    got = s_estimate(2.0**40, 2.0**16).value / exact
    assert got == pytest.approx(float(pub.SUZUKI[16, 16]), abs=5e-5)


def test_nonpositive_alpha_reports_zero():
    res = s_estimate(2.0**40, 16.0)
    assert res.value == 0.0
    assert res.diagnostics["alpha_s_nonpositive"]
    assert res.diagnostics["alpha_s"] < 0
    logs, alpha = log_s_values(np.array([2.0**40]), 16.0)
    assert alpha[0] < 0 and np.isfinite(logs[0])


def test_s_values_vectorised():
    xs = np.array([2.0**20, 2.0**30, 2.0**40])
    np.testing.assert_allclose(s_values(xs, 2.0**10), [s_values(x, 2.0**10) for x in xs], rtol=1e-14)
    with pytest.raises(DomainError):
        s_values(100.0, 1000.0)
    with pytest.raises(DomainError):
        s_estimate(100.0, 100.0)

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from segbubbles import potential as pot
from segbubbles.errors import ModelError, ParameterError
from segbubbles.expansions import A_BARE, A_EFF
from segbubbles.reduced import convention_constants, solve_reduced

GOLDEN = (1 + math.sqrt(5)) / 2
BRACKET = (0.5, 3.0)


def test_gaussian_bump_bare_constants():
    sol = solve_reduced(pot.gaussian_bump(), 4, BRACKET, "paper-bare")
    oracle = math.pi**2 / (3 * GOLDEN**2 * math.exp(-((GOLDEN - 1) ** 2)))
    assert abs(sol.rho - GOLDEN) < 1e-12
    assert sol.d == pytest.approx(oracle, rel=1e-10)
    assert sol.d == pytest.approx(1.8411490200883, rel=1e-12)


def test_log_delta_scales_with_k_squared():
    a = solve_reduced(pot.gaussian_bump(), 4, BRACKET)
    b = solve_reduced(pot.gaussian_bump(), 8, BRACKET)
    assert b.log_delta == 4 * a.log_delta


def test_convention_ratio():
    bare = solve_reduced(pot.gaussian_bump(), 4, BRACKET, "paper-bare")
    meas = solve_reduced(pot.gaussian_bump(), 4, BRACKET, "measured")
    assert bare.d / meas.d == pytest.approx(A_EFF / A_BARE, rel=1e-14)
    assert A_EFF / A_BARE == pytest.approx(2 * math.pi**2, rel=1e-15)


@given(lam=st.floats(0.01, 100), k=st.integers(1, 10**6))
def test_invariants(lam, k):
    V = pot.gaussian_bump()
    base = solve_reduced(V, k, BRACKET)
    sol = solve_reduced(V.scaled(lam), k, BRACKET)
    assert sol.rho == pytest.approx(base.rho, rel=1e-12)
    assert sol.d == pytest.approx(base.d / lam, rel=1e-10)
    assert abs(sol.balance_residual(V.scaled(lam))) < 1e-12
    assert sol.d > 0 and math.isfinite(sol.log_delta)


def test_tiny_delta_is_not_materialised():
    sol = solve_reduced(pot.gaussian_bump(), 1000, BRACKET)
    assert sol.log10_delta < -300
    with pytest.raises(ParameterError):
        sol.delta()
    assert solve_reduced(pot.gaussian_bump(), 4, BRACKET).delta() == pytest.approx(math.exp(-16 * solve_reduced(pot.gaussian_bump(), 4, BRACKET).d))


def test_negative_potential_is_a_model_error():
    with pytest.raises(ModelError):
        solve_reduced(pot.gaussian_bump(amplitude=-1.0), 4, BRACKET)


def test_unknown_convention():
    with pytest.raises(ParameterError):
        convention_constants("other")

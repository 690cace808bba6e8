import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from segbubbles import verify as vf
from segbubbles.bubbles import standard_bubble
from segbubbles.errors import ParameterError
from segbubbles.fields import ScalarField4


def test_app1_needs_alpha_below_both_exponents():
    with pytest.raises(ParameterError):
        vf.check_lemma_app1(1.0, 2.0, 1.5, n_samples=100)


def test_app1_midpoint_ratio_closed_form():
    # x at the midpoint of two centres a distance 2 apart
    r = vf._app1_ratio(np.zeros(4), np.array([1.0, 0, 0, 0]), np.array([-1.0, 0, 0, 0]), 2, 2, 1)
    assert r == pytest.approx(2**-4 / (2**-1 * 2 * 2**-3))


@given(st.floats(0.1, 3), st.floats(0.1, 3), st.floats(0.05, 1))
def test_app1_ratio_is_finite_and_positive(a1, a2, t):
    rng = np.random.default_rng(0)
    a = t * min(a1, a2)
    x, xi, xj = (rng.normal(size=(50, 4)) for _ in range(3))
    r = vf._app1_ratio(x, xi, xj, a1, a2, a)
    assert np.all(np.isfinite(r)) and np.all(r > 0)


def test_app1_constant_is_stable():
    r = vf.check_lemma_app1(2, 2, 1, n_samples=2000)
    assert r.passed
    assert r.measured["C"] >= r.measured["midpoint_ratio"]


def test_app1_invalid_alpha_is_unstable():
    r = vf.check_lemma_app1(1, 1, 2, n_samples=2000, enforce_precondition=False)
    assert not r.passed


def test_app1_is_deterministic():
    a = vf.check_lemma_app1(2, 2, 1, n_samples=500, seed=7).to_dict()
    b = vf.check_lemma_app1(2, 2, 1, n_samples=500, seed=7).to_dict()
    assert a == b


def test_app2_rejects_alpha_two():
    with pytest.raises(ParameterError):
        vf.check_lemma_app2(2.0)


def test_newton_integral_routes_agree():
    for r in (0.0, 0.3, 5.0, 100.0):
        assert vf.newton_integral_polar(r, 1.0) == pytest.approx(vf.newton_integral_radial(r, 1.0), rel=1e-10)


def test_newton_integral_decays_like_power_alpha():
    # (1 + |x|)^alpha times the integral levels off at large |x|
    alpha = 1.5
    far = [vf.newton_integral_polar(x, alpha) * (1 + x) ** alpha for x in (1e3, 1e4)]
    assert far[1] == pytest.approx(far[0], rel=0.1)


def test_app2_passes():
    r = vf.check_lemma_app2(1.0)
    assert r.passed
    assert r.measured["polar_vs_radial"] < 1e-10


def test_interaction_asymptotics_alpha_above_one():
    r = vf.check_interaction_asymptotics((2.0, 1.5, 1.0))
    assert r.passed


def test_bubble_and_eigen():
    assert vf.check_bubble_and_eigen(n_points=2000).passed


def test_symmetry_check_detects_displaced_bubble():
    U = standard_bubble()
    moved = ScalarField4(lambda b, o: U(b + o - np.array([0.3, 0.0, 0.0, 0.0])), name="U shifted")
    assert vf.check_symmetry_class(U, 4).passed
    assert not vf.check_symmetry_class(moved, 4).passed

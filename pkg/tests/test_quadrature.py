import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from segbubbles import geometry as geo
from segbubbles import quadrature as quad
from segbubbles.bubbles import C_BUBBLE, AnsatzConfig, BubbleParams, ansatz_W, bubble_field
from segbubbles.errors import IntegrandError, ParameterError
from segbubbles.fields import ScalarField4, constant_field, linear_combination, zero_field

U3_TOTAL = 8 * math.sqrt(2) * math.pi**2


def cfg8(**kw):
    base = dict(k=8, m=2, beta=1.0, delta=1e-3, rho=1.0, r0=1.0)
    base.update(kw)
    return AnsatzConfig.make(**base)


@given(n=st.integers(1, 12), data=st.data())
def test_gauss_legendre_exact_for_polynomials(n, data):
    deg = data.draw(st.integers(0, 2 * n - 1))
    x, w = quad.gauss_legendre(-0.5, 2.0, n)
    exact = (2.0 ** (deg + 1) - (-0.5) ** (deg + 1)) / (deg + 1)
    assert math.fsum(w * x**deg) == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_sphere_rule_moments():
    x, w = quad.sphere_rule(6, 12, shift=(0.3, -1.1))
    area = 2 * math.pi**2
    assert w.sum() == pytest.approx(area, rel=1e-14)
    np.testing.assert_allclose(np.linalg.norm(x, axis=1), 1.0, rtol=1e-14)
    assert np.sum(w * x[:, 0] ** 2) == pytest.approx(area / 4, rel=1e-13)
    assert np.sum(w * x[:, 0] ** 2 * x[:, 3] ** 2) == pytest.approx(area / 24, rel=1e-13)
    assert np.sum(w * x[:, 2] ** 4) == pytest.approx(area / 8, rel=1e-13)
    assert abs(np.sum(w * x[:, 1])) < 1e-13


@given(R=st.floats(1e-3, 10), t=st.floats(0, 1.5))
def test_ball_bump_shape(R, t):
    v = float(quad.ball_bump(np.array([t * R]), R)[0])
    assert 0 <= v <= 1
    if t <= quad.BUMP_INNER:
        assert v == 1
    if t >= 1:
        assert v == 0


def test_annulus_measure_of_constant():
    p = quad.plan_for_ansatz(cfg8())
    res = quad.integrate(constant_field(1.0), p)
    assert res.value / quad.annulus_measure(*p.annulus) - 1 == pytest.approx(0, abs=1e-5)


def test_partition_consistency_at_high_resolution():
    # balls plus background tile the annulus; f = 1 isolates the partition of unity
    p = quad.plan_for_ansatz(cfg8(), bg_nodes_per_ball=16, bg_nodes_per_panel=8)
    value = quad.integrate(constant_field(1.0), p, refine=False).value
    assert abs(value / quad.annulus_measure(*p.annulus) - 1) < 1e-8


def test_annulus_measure_oracle():
    lo, hi = 0.7, 1.3
    assert quad.annulus_measure(lo, hi) == pytest.approx(math.pi**2 / 2 * (hi**4 - lo**4), rel=1e-14)


def test_ball_integral_of_cubed_bubble():
    delta = 1e-3
    U = bubble_field(BubbleParams(delta))
    cube = ScalarField4(lambda b, o: U.value(b, o) ** 3)
    val = quad.ball_integral(cube, np.zeros(4), 0.1, delta)
    assert val == pytest.approx(delta * U3_TOTAL, rel=1e-3)


@pytest.mark.parametrize("delta", [1e-2, 1e-3, 1e-4])
def test_ball_integral_of_squared_bubble(delta):
    R = 0.1
    U = bubble_field(BubbleParams(delta))
    sq = ScalarField4(lambda b, o: U.value(b, o) ** 2)
    X = R / delta
    oracle = 2 * math.pi**2 * C_BUBBLE**2 * delta**2 * (0.5 * math.log(1 + X * X) + 0.5 / (1 + X * X) - 0.5)
    val = quad.ball_integral(sq, np.zeros(4), R, delta)
    assert val == pytest.approx(oracle, rel=1e-10)
    # the leading log: val / (delta^2 (ln(R/delta) - 1/2)) tends to 2 pi^2 c^2
    lead = val / (delta**2 * (math.log(X) - 0.5))
    assert lead == pytest.approx(2 * math.pi**2 * C_BUBBLE**2, rel=1e-2)


def test_integrate_is_linear():
    cfg = cfg8()
    p = quad.plan_for_ansatz(cfg)
    W = ansatz_W(cfg)
    f = ScalarField4(lambda b, o: W.value(b, o) ** 2, symmetries=W.symmetries, k=cfg.k, support=W.support)
    g = constant_field(1.0)
    h = linear_combination([(2.5, f), (-0.75, g)])
    rf, rg, rh = quad.integrate(f, p), quad.integrate(g, p), quad.integrate(h, p)
    gap = abs(rh.value - 2.5 * rf.value + 0.75 * rg.value)
    assert gap <= 2.5 * rf.error_estimate + 0.75 * rg.error_estimate + 1e-12 * abs(rh.value)


def test_serial_and_parallel_agree_bitwise():
    cfg = cfg8()
    W = ansatz_W(cfg)
    f = ScalarField4(lambda b, o: W.value(b, o) ** 2, symmetries=W.symmetries, k=cfg.k, support=W.support)
    p = quad.plan_for_ansatz(cfg, chunk=1 << 12)
    a = quad.integrate(f, p)
    b = quad.integrate(f, quad.plan_for_ansatz(cfg, chunk=1 << 12, workers=3))
    assert (a.value, a.error_estimate) == (b.value, b.error_estimate)


def test_sector_reduction_matches_full_grid():
    cfg = cfg8()
    W = ansatz_W(cfg)
    f = ScalarField4(lambda b, o: W.value(b, o) ** 2, symmetries=W.symmetries, k=cfg.k, support=W.support)
    p = quad.plan_for_ansatz(cfg)
    a = quad.integrate(f, p, refine=False).value
    b = quad.integrate(f, quad.plan_for_ansatz(cfg, use_symmetry=False), refine=False).value
    assert a == pytest.approx(b, rel=1e-12)


def test_rigid_rotation_invariance():
    cfg = cfg8()
    W0 = ansatz_W(cfg)
    rot = cfg.with_(phase=(0.7, -2.1))
    W1 = ansatz_W(rot)

    def sq(W, c):
        return ScalarField4(lambda b, o: W.value(b, o) ** 2, symmetries=W.symmetries, k=c.k, support=W.support)

    a = quad.integrate(sq(W0, cfg), quad.plan_for_ansatz(cfg), refine=False).value
    b = quad.integrate(sq(W1, rot), quad.plan_for_ansatz(rot), refine=False).value
    assert a == pytest.approx(b, rel=1e-8)


def test_non_finite_integrand_reports_location():
    p = quad.plan_for_ansatz(cfg8())
    bad = ScalarField4(lambda b, o: np.full(len(b), np.nan))
    with pytest.raises(IntegrandError) as err:
        quad.integrate(bad, p)
    assert err.value.location is not None


def test_plan_rejects_bad_annulus():
    lat = geo.peak_lattice(8, 1, 1.0)
    with pytest.raises(ParameterError):
        quad.PeakedIntegrationPlan(lat, 1e-3, 1.0, 0.0)
    with pytest.raises(ParameterError):
        quad.PeakedIntegrationPlan(lat, 1e-3, 0.5, 0.6)
    with pytest.raises(ParameterError):
        quad.PeakedIntegrationPlan(lat, 1e-3, 2.0, 0.2).R


def test_balls_are_disjoint_and_inside_annulus():
    p = quad.plan_for_ansatz(cfg8())
    c = p.lattice.flat
    d = np.linalg.norm(c[:, None] - c[None], axis=-1) + np.eye(len(c)) * 10
    assert d.min() > 2 * p.R
    lo, hi = p.annulus
    r = np.linalg.norm(c, axis=1)
    assert np.all(r - p.R > lo) and np.all(r + p.R < hi)


# -- weighted sup ---------------------------------------------------------------


def single_peak_plan(delta):
    lat = geo.peak_lattice(2, 1, 1.0)
    return quad.PeakedIntegrationPlan(lat, delta, 1.0, 0.3)


def test_weight_family_is_positive_and_finite():
    lat = geo.peak_lattice(8, 2, 1.0)
    x = np.concatenate([lat.flat, np.random.default_rng(0).normal(size=(50, 4)) * 3])
    for w in (quad.NormWeightFamily.star(lat, 1e-3), quad.NormWeightFamily.starstar(lat, 1e-3)):
        v = w(x)
        assert np.all(v > 0) and np.all(np.isfinite(v))


def test_sup_of_single_bubble_matches_radial_scan():
    delta = 1e-3
    p = single_peak_plan(delta)
    xi = p.lattice.point(1, 1)
    U = bubble_field(BubbleParams(delta, xi))
    w = quad.NormWeightFamily.star(p.lattice, delta)
    res = quad.weighted_sup(U, w, p, density=2.0)
    # dense scan along a ray through xi, away from the second peak
    s = np.concatenate([[0.0], np.geomspace(delta / 100, p.R, 20000)])
    ray = xi + s[:, None] * np.array([0.0, 0.0, 0.0, 1.0])
    scan = np.max(U(ray) / w(ray))
    assert res.value == pytest.approx(scan, rel=1e-2)
    assert res.value <= scan * (1 + 1e-9)


def test_sup_of_zero_is_zero():
    p = single_peak_plan(1e-3)
    w = quad.NormWeightFamily.starstar(p.lattice, 1e-3)
    assert quad.weighted_sup(zero_field(), w, p).value == 0.0


@given(scale=st.floats(0.0, 1.0), shift=st.floats(0.0, 1.0))
def test_sup_is_monotone_under_domination(scale, shift):
    delta = 1e-2
    p = single_peak_plan(delta)
    U = bubble_field(BubbleParams(delta, p.lattice.point(1, 1)))
    small = ScalarField4(lambda b, o: scale * U.value(b, o))
    big = ScalarField4(lambda b, o: U.value(b, o) + shift)
    w = quad.NormWeightFamily.starstar(p.lattice, delta)
    assert quad.weighted_sup(small, w, p).value <= quad.weighted_sup(big, w, p).value


def test_sup_density_refinement_is_small():
    delta = 1e-3
    p = single_peak_plan(delta)
    U = bubble_field(BubbleParams(delta, p.lattice.point(1, 1)))
    w = quad.NormWeightFamily.star(p.lattice, delta)
    a, b = quad.weighted_sup(U, w, p, 1.0).value, quad.weighted_sup(U, w, p, 2.0).value
    assert abs(a - b) / b < 0.02

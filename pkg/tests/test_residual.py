import numpy as np
import pytest

from segbubbles import potential as pot
from segbubbles import residual as res
from segbubbles.bubbles import AnsatzConfig, ansatz_W, cutoff_field, local_eigenfunction
from segbubbles.fields import linear_combination, product, scaled, zero_field
from segbubbles.verify import check_symmetry_class


def cfg(**kw):
    base = dict(k=8, m=2, beta=1.0, delta=1e-2, rho=1.0, r0=1.0)
    base.update(kw)
    return AnsatzConfig.make(**base)


def sample(c, rng, n=1000):
    """Half the points near peaks (all circles), half spread over the cut-off annulus."""
    peaks = c.lattice.flat
    near = peaks[rng.integers(len(peaks), size=n // 2)] + rng.normal(scale=3 * c.delta, size=(n // 2, 4))
    x = rng.normal(size=(n - n // 2, 4))
    x *= rng.uniform(c.cutoff.r0 - 2.5 * c.cutoff.sigma, c.cutoff.r0 + 2.5 * c.cutoff.sigma, (len(x), 1)) / np.linalg.norm(x, axis=1, keepdims=True)
    return np.concatenate([near, x])


def phi_field(c, amp=0.01):
    Z = local_eigenfunction(0, c.delta, c.centers[0])
    return scaled(product(Z, cutoff_field(c.cutoff)), amp)


def test_error_term_vanishes_outside_annulus(rng):
    c = cfg()
    x = rng.normal(size=(200, 4))
    x *= (c.cutoff.r0 + 2 * c.cutoff.sigma + rng.uniform(0.01, 1, (200, 1))) / np.linalg.norm(x, axis=1, keepdims=True)
    assert np.all(res.error_term(c)(x) == 0)


def test_error_term_of_isolated_bubble_is_tiny(rng):
    # k = 2 is the smallest lattice; the partner bubble contributes O(delta^2) relative to U^3
    c = cfg(k=2, m=1, beta=0.0, delta=1e-6, potential=pot.zero())
    x = c.centers[0] + rng.normal(scale=c.delta, size=(200, 4))
    E = res.error_term(c)(x)
    U3 = ansatz_W(c)(x) ** 3
    assert np.max(np.abs(E) / U3) < 1e-10


@pytest.mark.parametrize("beta", [1.0, -1.0])
def test_error_term_symmetry_class(beta):
    c = cfg(beta=beta)
    assert check_symmetry_class(res.error_term(c), c.k, scale=2.0).passed


@pytest.mark.parametrize("m", [1, 2, 3])
def test_residual_of_ansatz_is_minus_error(m, rng):
    c = cfg(m=m)
    x = sample(c, rng)
    R = res.nonlocal_residual(ansatz_W(c), c)(x)
    E = res.error_term(c)(x)
    assert np.max(np.abs(R + E)) <= 1e-10 * np.max(np.abs(E))


def test_residual_of_zero_is_zero(rng):
    c = cfg()
    assert np.all(res.nonlocal_residual(zero_field(), c)(sample(c, rng, 50)) == 0)
    assert np.all(res.linear_op(zero_field(), c)(sample(c, rng, 50)) == 0)
    assert np.all(res.nonlinear_op(zero_field(), c)(sample(c, rng, 50)) == 0)


@pytest.mark.parametrize("m,beta", [(1, 0.0), (2, 1.0), (3, -1.0)])
def test_operator_identity(m, beta, rng):
    # L(phi) - E - N(phi) equals the residual of W + phi, assembled independently
    c = cfg(m=m, beta=beta)
    phi = phi_field(c)
    u = linear_combination([(1.0, ansatz_W(c)), (1.0, phi)], name="W+phi")
    x = sample(c, rng, 50)
    lhs = res.linear_op(phi, c)(x) - res.error_term(c)(x) - res.nonlinear_op(phi, c)(x)
    rhs = res.nonlocal_residual(u, c)(x)
    assert np.max(np.abs(lhs - rhs)) <= 1e-8 * np.max(np.abs(rhs))


@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_nonlinear_part_is_quadratic(beta, rng):
    # 2 beta W sum W_q phi_q is linear in phi; the rest of N starts at order two
    c = cfg(m=2, beta=beta)
    x = c.centers[0] + rng.normal(scale=2 * c.delta, size=(10, 4))
    W = ansatz_W(c)
    Wq, = res.components(W, c)

    def rest(t):
        phi = phi_field(c, t)
        phi_q, = res.components(phi, c)
        return res.nonlinear_op(phi, c)(x) - 2 * beta * W(x) * Wq(x) * phi_q(x)

    ts = np.array([1e-2, 1e-3, 1e-4])
    norms = [np.max(np.abs(rest(t))) for t in ts]
    slope = np.polyfit(np.log(ts), np.log(norms), 1)[0]
    assert abs(slope - 2) < 0.05


def test_nonlocal_linear_term_of_n_is_linear(rng):
    c = cfg(m=2, beta=1.0)
    x = c.centers[0] + rng.normal(scale=2 * c.delta, size=(10, 4))
    t = 1e-6
    n1, n2 = (res.nonlinear_op(phi_field(c, s), c)(x) for s in (t, 2 * t))
    W = ansatz_W(c)
    Wq, = res.components(W, c)
    phi_q, = res.components(phi_field(c, t), c)
    expected = 2 * W(x) * Wq(x) * phi_q(x)
    np.testing.assert_allclose((4 * n1 - n2) / 2, expected, rtol=1e-6)


def test_operators_need_laplacian():
    c = cfg()
    no_lap = res.error_term(c)
    with pytest.raises(ValueError):
        res.nonlocal_residual(no_lap, c)
    with pytest.raises(ValueError):
        res.linear_op(no_lap, c)


def test_bundle_components(rng):
    c = cfg(m=3)
    b = res.residual_bundle(c)
    assert len(b.components) == 2
    x = sample(c, rng, 20)
    Sx = c.component_map(2).apply(x)
    np.testing.assert_allclose(b.components[0](x), b.W(Sx))


def test_error_norm_report_is_deterministic():
    c = cfg(delta=1e-3)
    a, b = res.error_norm_report(c), res.error_norm_report(c)
    assert a.to_dict() == b.to_dict()
    assert a.ratio == pytest.approx(a.norm / c.delta)
    assert len(a.argmax) == 4


def test_error_norm_ratio_is_insensitive_to_beta_sign():
    a = res.error_norm_report(cfg(delta=1e-3, beta=1.0))
    b = res.error_norm_report(cfg(delta=1e-3, beta=-1.0))
    assert abs(a.ratio - b.ratio) / a.ratio < 0.1

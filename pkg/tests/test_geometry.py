import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from segbubbles import geometry as geo
from segbubbles.errors import GeometryError, ParameterError

even_k = st.integers(1, 32).map(lambda n: 2 * n)
small_m = st.integers(1, 4)
radii = st.floats(0.1, 10.0)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
@pytest.mark.parametrize("k", [2, 4, 8, 16])
def test_half_turns_are_minus_identity(m, k):
    assert np.max(np.abs(geo.symmetry_s(m + 1, m).entries + np.eye(4))) <= 1e-15
    assert np.max(np.abs(geo.symmetry_r(k // 2 + 1, k).entries + np.eye(4))) <= 1e-15


@given(m=small_m, k=even_k, data=st.data())
def test_maps_are_orthogonal(m, k, data):
    q = data.draw(st.integers(1, m + 1))
    i = data.draw(st.integers(1, k))
    for M in (geo.symmetry_s(q, m), geo.symmetry_r(i, k), geo.symmetry_t(q, m), geo.swap_planes(), geo.reflect_even()):
        assert M.orthogonality_defect() < 1e-14


@given(m=small_m, data=st.data())
def test_s_maps_compose_additively(m, data):
    p = data.draw(st.integers(1, m))
    q = data.draw(st.integers(1, m + 1 - p + 1))
    lhs = geo.symmetry_s(p, m) @ geo.symmetry_s(q, m)
    rhs = geo.symmetry_s(p + q - 1, m) if p + q - 1 <= m + 1 else None
    if rhs is not None:
        np.testing.assert_allclose(lhs.entries, rhs.entries, atol=1e-14)


@given(k=even_k, m=small_m, rho=radii, data=st.data())
def test_closed_form_distances(k, m, rho, data):
    lat = geo.peak_lattice(k, m, rho)
    p, q = data.draw(st.integers(1, m)), data.draw(st.integers(1, m))
    j, i = data.draw(st.integers(1, k)), data.draw(st.integers(1, k))
    direct = float(np.sum((lat.point(p, j) - lat.point(q, i)) ** 2))
    closed = geo.closed_form_sq_distance(lat, p, j, q, i)
    assert abs(direct - closed) <= 1e-12 * max(closed, 1e-300) + 1e-13 * rho**2
    assert abs(lat.distances_from(p, j)[q - 1, i - 1] ** 2 - direct) <= 1e-12 * rho**2


@given(k=even_k, m=small_m, rho=radii)
def test_lattice_is_invariant_under_r(k, m, rho):
    lat = geo.peak_lattice(k, m, rho)
    pts = lat.flat
    moved = geo.symmetry_r(2, k).apply(pts)
    d = np.min(np.linalg.norm(moved[:, None] - pts[None], axis=-1), axis=1)
    assert np.max(d) < 1e-12 * rho


@given(k=even_k, m=st.integers(2, 4), rho=radii)
def test_components_are_rotated_circles(k, m, rho):
    lat = geo.peak_lattice(k, m, rho)
    for q in range(1, m + 1):
        back = geo.symmetry_s(q, m).apply(lat.circle(q))
        np.testing.assert_allclose(back, lat.circle(1), atol=1e-12 * rho)


@given(k=even_k, m=small_m, rho=radii)
def test_min_separation(k, m, rho):
    cross, same = geo.min_separation(geo.peak_lattice(k, m, rho))
    assert math.isclose(same, 2 * rho * math.sin(math.pi / k), rel_tol=1e-12)
    if m == 1:
        assert cross is None
    else:
        assert math.isclose(cross, 2 * rho * math.sin(math.pi / (2 * m)), rel_tol=1e-12)


@pytest.mark.parametrize("k", [4, 16, 64, 256, 1024])
def test_alpha2_same_circle_sum(k):
    rho = 1.3
    same, _ = geo.interaction_split(geo.peak_lattice(k, 2, rho), 2.0)
    assert abs(same - (k * k - 1) / (12 * rho**2)) <= 1e-12 * same


def test_interaction_sum_rejects_bad_alpha():
    with pytest.raises(ParameterError):
        geo.interaction_sum(geo.peak_lattice(4, 1, 1.0), 0.0)


def test_bad_lattice_parameters():
    for args in [(3, 1, 1.0), (4, 0, 1.0), (4, 1, -1.0)]:
        with pytest.raises(ParameterError):
            geo.peak_lattice(*args)


def test_phase_is_a_rigid_rotation():
    a = geo.peak_lattice(8, 2, 1.0)
    b = geo.peak_lattice(8, 2, 1.0, phase=(0.3, -0.7))
    np.testing.assert_allclose(np.linalg.norm(b.flat, axis=1), np.linalg.norm(a.flat, axis=1))
    da = np.linalg.norm(a.flat[:, None] - a.flat[None], axis=-1)
    db = np.linalg.norm(b.flat[:, None] - b.flat[None], axis=-1)
    np.testing.assert_allclose(da, db, atol=1e-13)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_circles_are_hopf_linked(m):
    rho = 1.0
    circles = [geo.great_circle(q, m, rho) for q in range(1, m + 1)]
    for p in range(m):
        for q in range(p + 1, m):
            raw = geo.linking_value(circles[p], circles[q])
            assert abs(abs(raw) - 1) < 1e-3


def test_unlinked_control():
    t = 2 * np.pi * np.arange(1024) / 1024
    ring = np.stack([np.cos(t), np.sin(t), 0 * t], axis=1)
    assert abs(geo.gauss_linking_integral(ring, ring + [5.0, 0, 0])) < 1e-3
    hopf = np.stack([1 + np.cos(t), 0 * t, np.sin(t)], axis=1)
    assert abs(abs(geo.gauss_linking_integral(ring, hopf)) - 1) < 1e-3


def test_linking_table_shape():
    table = geo.linking_table(3, 1.0)
    assert [table[i][i] for i in range(3)] == [None] * 3
    assert all(abs(table[i][j]) == 1 for i in range(3) for j in range(3) if i != j)


def test_coincident_circles_are_rejected():
    c = geo.great_circle(1, 2, 1.0)
    with pytest.raises(GeometryError):
        geo.linking_value(c, c)

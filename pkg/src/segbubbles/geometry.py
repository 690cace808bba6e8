"""Symmetry maps of R^4, blow-up point lattices and the linking of concentration circles."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, ParameterError


class LatticeMode(str, enum.Enum):
    S = "S"
    T = "T"


@dataclass(frozen=True)
class OrthogonalMap4:
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.shape != (4, 4):
            raise ParameterError(f"expected a 4x4 matrix, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def __matmul__(self, other: "OrthogonalMap4") -> "OrthogonalMap4":
        return OrthogonalMap4(self.entries @ other.entries)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Apply to a point (4,) or a batch of points (N, 4)."""
        x = np.asarray(x, dtype=float)
        return x @ self.entries.T

    @property
    def T(self) -> "OrthogonalMap4":
        return OrthogonalMap4(self.entries.T)

    def inverse(self) -> "OrthogonalMap4":
        return self.T

    def orthogonality_defect(self) -> float:
        return float(np.max(np.abs(self.entries.T @ self.entries - np.eye(4))))

    def det(self) -> float:
        return float(np.linalg.det(self.entries))


def _rot(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    # exact values at multiples of pi/2 keep -I and the identity entrywise exact
    c, s = _snap(c), _snap(s)
    return np.array([[c, -s], [s, c]])


def _snap(v: float) -> float:
    r = round(v)
    return float(r) if abs(v - r) < 1e-15 else v


def _block(upper: np.ndarray, lower: np.ndarray) -> OrthogonalMap4:
    m = np.zeros((4, 4))
    m[:2, :2] = upper
    m[2:, 2:] = lower
    return OrthogonalMap4(m)


def _check_q(q: int, m: int) -> None:
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    if not 1 <= q <= m + 1:
        raise ParameterError(f"q must lie in 1..{m + 1}, got {q}")


def s_angle(q: int, m: int, k: int | None = None, variant: str = "printed") -> float:
    if variant == "printed":
        return (q - 1) * math.pi / m
    if variant == "mk":
        if k is None:
            raise ParameterError("the 'mk' angle variant needs k")
        return (q - 1) * math.pi / (m * k)
    raise ParameterError(f"unknown angle variant {variant!r}")


def symmetry_s(q: int, m: int, k: int | None = None, variant: str = "printed") -> OrthogonalMap4:
    """Block rotation S_q: angle a in the (x1,x2) plane and -a in the (x3,x4) plane.

    ``variant="mk"`` uses the angle (q-1)pi/(mk) instead of (q-1)pi/m.
    """
    _check_q(q, m)
    a = s_angle(q, m, k, variant)
    return _block(_rot(a), _rot(-a))


def symmetry_r(i: int, k: int) -> OrthogonalMap4:
    """R_i: rotation by -2pi(i-1)/k in both coordinate planes."""
    if k < 2 or k % 2:
        raise ParameterError(f"k must be a positive even integer, got {k}")
    if not 1 <= i <= k:
        raise ParameterError(f"i must lie in 1..{k}, got {i}")
    a = 2 * math.pi * (i - 1) / k
    return _block(_rot(-a), _rot(-a))


def symmetry_t(q: int, m: int) -> OrthogonalMap4:
    _check_q(q, m)
    return _block(_rot((q - 1) * math.pi / m), np.eye(2))


def swap_planes() -> OrthogonalMap4:
    """(x1,x2,x3,x4) -> (x3,x4,x1,x2)."""
    m = np.zeros((4, 4))
    m[0, 2] = m[1, 3] = m[2, 0] = m[3, 1] = 1.0
    return OrthogonalMap4(m)


def reflect_even() -> OrthogonalMap4:
    """(x1,x2,x3,x4) -> (x1,-x2,x3,-x4)."""
    return OrthogonalMap4(np.diag([1.0, -1.0, 1.0, -1.0]))


@dataclass(frozen=True)
class PeakLattice:
    """The k*m blow-up points; ``points[q-1, i-1]`` is xi_i^q."""

    k: int
    m: int
    rho: float
    mode: LatticeMode = LatticeMode.S
    phase: tuple = (0.0, 0.0)  # rigid rotation of the whole lattice by these angles in the two planes
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.k < 2 or self.k % 2:
            raise ParameterError(f"k must be a positive even integer, got {self.k}")
        if self.m < 1:
            raise ParameterError(f"m must be >= 1, got {self.m}")
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise ParameterError(f"rho must be positive and finite, got {self.rho}")
        object.__setattr__(self, "mode", LatticeMode(self.mode))
        object.__setattr__(self, "phase", tuple(float(p) for p in self.phase))
        th, a = self._angles()
        p1, p2 = self.phase
        pts = np.zeros((self.m, self.k, 4))
        if self.mode is LatticeMode.S:
            r = self.rho / math.sqrt(2.0)
            pts[..., 0] = r * np.cos(th - a + p1)
            pts[..., 1] = r * np.sin(th - a + p1)
            pts[..., 2] = r * np.cos(th + a + p2)
            pts[..., 3] = r * np.sin(th + a + p2)
        else:
            pts[..., 0] = self.rho * np.cos(th - a + p1)
            pts[..., 1] = self.rho * np.sin(th - a + p1)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def _angles(self):
        th = 2 * np.pi * np.arange(self.k) / self.k
        a = np.pi * np.arange(self.m) / self.m
        return th[None, :], a[:, None]

    def point(self, q: int, i: int) -> np.ndarray:
        return self.points[q - 1, i - 1]

    @property
    def flat(self) -> np.ndarray:
        return self.points.reshape(-1, 4)

    def circle(self, q: int = 1) -> np.ndarray:
        """Peaks of component q only, shape (k, 4)."""
        return self.points[q - 1]

    def rescaled(self, delta: float) -> np.ndarray:
        """eta_i^q = xi_i^q / delta."""
        return self.points / delta

    def with_rho(self, rho: float) -> "PeakLattice":
        return PeakLattice(self.k, self.m, rho, self.mode, self.phase)

    def distances_from(self, p: int, j: int) -> np.ndarray:
        """|xi_j^p - xi_i^q| for all (q, i), shape (m, k), from cancellation-free trig forms."""
        dq = (p - 1) - np.arange(self.m)[:, None]
        di = (j - 1) - np.arange(self.k)[None, :]
        A = dq * np.pi / self.m
        B = di * 2 * np.pi / self.k
        if self.mode is LatticeMode.S:
            # 1 - cos A cos B = sin^2((A+B)/2) + sin^2((A-B)/2)
            d2 = 2 * self.rho**2 * (np.sin((A + B) / 2) ** 2 + np.sin((A - B) / 2) ** 2)
            return np.sqrt(d2)
        return 2 * self.rho * np.abs(np.sin((B - A) / 2))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "i", "x1", "x2", "x3", "x4"])
        for q in range(1, self.m + 1):
            for i in range(1, self.k + 1):
                w.writerow([q, i, *(repr(float(v)) for v in self.point(q, i))])
        return buf.getvalue()


def peak_lattice(k: int, m: int, rho: float, mode: LatticeMode | str = LatticeMode.S, phase=(0.0, 0.0)) -> PeakLattice:
    return PeakLattice(k, m, float(rho), LatticeMode(mode), tuple(phase))


def closed_form_sq_distance(lat: PeakLattice, p: int, j: int, q: int, i: int) -> float:
    """2 rho^2 (1 - cos((p-q)pi/m) cos(2pi(i-j)/k)), the S-lattice distance formula as printed."""
    return 2 * lat.rho**2 * (
        1 - math.cos((p - q) * math.pi / lat.m) * math.cos(2 * math.pi * (i - j) / lat.k)
    )


def interaction_sum(lat: PeakLattice, alpha: float, base: tuple[int, int] = (1, 1)) -> float:
    """Sum over all (q, i) != base of |xi_base - xi_i^q|^-alpha."""
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    p, j = base
    d = lat.distances_from(p, j)
    mask = np.ones_like(d, dtype=bool)
    mask[p - 1, j - 1] = False
    d = d[mask]
    if np.any(d == 0):
        raise GeometryError("two peaks of the lattice coincide")
    return float(np.sum(d ** (-alpha)))


def interaction_split(lat: PeakLattice, alpha: float, base: tuple[int, int] = (1, 1)) -> tuple[float, float]:
    """(same-circle part, cross-circle remainder) of :func:`interaction_sum`."""
    p, j = base
    d = lat.distances_from(p, j)
    same = np.delete(d[p - 1], j - 1)
    cross = np.delete(d, p - 1, axis=0).ravel()
    return float(np.sum(same ** (-alpha))), float(np.sum(cross ** (-alpha))) if cross.size else 0.0


def min_separation(lat: PeakLattice) -> tuple[float | None, float]:
    """(min cross-circle distance or None when m == 1, min same-circle distance)."""
    best_cross = math.inf
    best_same = math.inf
    # by the rotational symmetry every base point sees the same distance set
    d = lat.distances_from(1, 1)
    same = np.delete(d[0], 0)
    best_same = float(same.min())
    if lat.m >= 2:
        best_cross = float(d[1:].min())
        if lat.mode is LatticeMode.T:
            for p in range(2, lat.m + 1):
                dp = lat.distances_from(p, 1)
                best_cross = min(best_cross, float(np.delete(dp, p - 1, axis=0).min()))
    return (best_cross if lat.m >= 2 else None), best_same


@dataclass(frozen=True)
class GreatCircle:
    """Gamma_q: the great circle through the peaks of component q."""

    rho: float
    transform: OrthogonalMap4
    planar: bool = False

    def sample(self, n: int) -> np.ndarray:
        t = 2 * np.pi * np.arange(n) / n
        if self.planar:
            base = np.stack([np.cos(t), np.sin(t), 0 * t, 0 * t], axis=1) * self.rho
        else:
            r = self.rho / math.sqrt(2.0)
            base = np.stack([np.cos(t), np.sin(t), np.cos(t), np.sin(t)], axis=1) * r
        return self.transform.apply(base)


def great_circle(q: int, m: int, rho: float, mode: LatticeMode | str = LatticeMode.S) -> GreatCircle:
    mode = LatticeMode(mode)
    if mode is LatticeMode.S:
        return GreatCircle(rho, symmetry_s(q, m).inverse())
    return GreatCircle(rho, symmetry_t(q, m).inverse(), planar=True)


def stereographic(points: np.ndarray, pole: np.ndarray) -> np.ndarray:
    """Project points on the sphere |x| = |pole| in R^4 to R^3 from ``pole``."""
    rho = float(np.linalg.norm(pole))
    n = pole / rho
    # orthonormal basis of the complement of the pole direction
    q, _ = np.linalg.qr(np.column_stack([n, np.eye(4)]))
    basis = q[:, 1:4]
    h = points @ n
    denom = rho - h
    if np.any(denom <= 1e-12 * rho):
        raise GeometryError("projection pole lies on a curve")
    return rho * (points @ basis) / denom[:, None]


def choose_pole(curves: list[np.ndarray], rho: float, n_candidates: int = 24) -> np.ndarray:
    """Coarse search on the radius-rho sphere for the point farthest from all curves."""
    t = (np.arange(n_candidates) + 0.5) / n_candidates
    eta = np.arcsin(np.sqrt(t))
    phi = 2 * np.pi * np.arange(n_candidates) / n_candidates + 0.1234
    E, P1, P2 = np.meshgrid(eta, phi, phi + 0.377, indexing="ij")
    cand = np.stack(
        [np.cos(E) * np.cos(P1), np.cos(E) * np.sin(P1), np.sin(E) * np.cos(P2), np.sin(E) * np.sin(P2)],
        axis=-1,
    ).reshape(-1, 4) * rho
    score = np.full(len(cand), np.inf)
    for c in curves:
        sub = c[:: max(1, len(c) // 256)]
        d2 = np.min(np.sum((cand[:, None, :] - sub[None, :, :]) ** 2, axis=-1), axis=1)
        score = np.minimum(score, d2)
    return cand[int(np.argmax(score))]


def gauss_linking_integral(c1: np.ndarray, c2: np.ndarray, block: int = 512) -> float:
    """Midpoint-rule Gauss double integral over two closed polylines in R^3."""
    s1 = np.roll(c1, -1, axis=0) - c1
    m1 = c1 + 0.5 * s1
    s2 = np.roll(c2, -1, axis=0) - c2
    m2 = c2 + 0.5 * s2
    parts = []
    for start in range(0, len(m1), block):
        a, da = m1[start : start + block], s1[start : start + block]
        r = a[:, None, :] - m2[None, :, :]
        cr = np.cross(da[:, None, :], s2[None, :, :])
        num = np.sum(r * cr, axis=-1)
        den = np.sum(r * r, axis=-1) ** 1.5
        if np.any(den == 0):
            raise GeometryError("curves intersect")
        parts.append(np.sum(num / den))
    return math.fsum(parts) / (4 * math.pi)


def linking_value(
    c1: GreatCircle, c2: GreatCircle, n: int = 512, pole: np.ndarray | None = None, tol: float = 1e-4, max_n: int = 1 << 15
) -> float:
    """Pre-rounding Gauss linking integral, doubling n until successive values agree to ``tol``."""
    if not math.isclose(c1.rho, c2.rho, rel_tol=1e-12):
        raise GeometryError("circles must lie on a common sphere")
    coarse1, coarse2 = c1.sample(512), c2.sample(512)
    gap = np.min(np.sum((coarse1[:, None] - coarse2[None]) ** 2, axis=-1)) ** 0.5
    if gap < 1e-9 * c1.rho:
        raise GeometryError("circles intersect")
    if pole is None:
        pole = choose_pole([coarse1, coarse2], c1.rho)
    prev = None
    while True:
        val = gauss_linking_integral(stereographic(c1.sample(n), pole), stereographic(c2.sample(n), pole))
        if prev is not None and abs(val - prev) < tol:
            return val
        if n >= max_n:
            return val
        prev, n = val, 2 * n


def linking_number(c1: GreatCircle, c2: GreatCircle, n: int = 512, pole: np.ndarray | None = None) -> int:
    return int(round(linking_value(c1, c2, n=n, pole=pole)))


def linking_table(m: int, rho: float, n: int = 512) -> list[list[int | None]]:
    circles = [great_circle(q, m, rho) for q in range(1, m + 1)]
    table: list[list[int | None]] = [[None] * m for _ in range(m)]
    for p in range(m):
        for q in range(p + 1, m):
            lk = linking_number(circles[p], circles[q], n=n)
            table[p][q] = table[q][p] = lk
    return table

"""Integration of bubble-peaked integrands over annuli in R^4, and weighted sup-norms.

The domain D = {|r - r0| <= eps} is split with a smooth partition of unity:
each lattice peak carries a ball of radius R with a C-infinity bump psi
(psi = 1 on the inner half, 0 outside R), integrated in polar coordinates
about the peak with log-spaced radial panels; the rest, (1 - sum psi) f, is
integrated on a product grid in Hopf coordinates

    x = r (cos eta cos(u - v), cos eta sin(u - v), sin eta cos(u + v), sin eta sin(u + v)),
    dx = r^3 sin(eta) cos(eta) dr d eta du dv,   (u, v) in [0, 2 pi)^2 covering twice,

in which the S-lattice circles sit at eta = pi/4, v = (q - 1) pi / m and the
rotations R_i are shifts in u. Integrands invariant under the R_i are reduced
to one sector of width 2 pi / k.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import geometry as geo
from .errors import GeometryError, IntegrandError, ParameterError
from .fields import ScalarField4


def gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def composite_gauss(breaks, n: int) -> tuple[np.ndarray, np.ndarray]:
    xs, ws = zip(*(gauss_legendre(a, b, n) for a, b in zip(breaks[:-1], breaks[1:]) if b > a))
    return np.concatenate(xs), np.concatenate(ws)


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f0 = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        f1 = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1 - t, 1.0)), 0.0)
    return f0 / (f0 + f1)


BUMP_INNER = 0.25


def ball_bump(s, R):
    """psi(s): 1 for s <= R/4, 0 for s >= R."""
    a = BUMP_INNER * R
    return 1.0 - smooth_step((np.asarray(s) - a) / (R - a))


def sphere_rule(n_t: int, n_beta: int, shift=(0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Product rule on the unit S^3 (total weight 2 pi^2): Gauss in sin^2, trapezoid in both angles.

    ``shift`` rotates the node set by the given angles in the (x1,x2) and (x3,x4) planes.
    """
    t, wt = gauss_legendre(0.0, 1.0, n_t)
    beta = 2 * np.pi * (np.arange(n_beta) + 0.5) / n_beta
    wb = 2 * np.pi / n_beta
    T, B1, B2 = np.meshgrid(t, beta + shift[0], beta + shift[1], indexing="ij")
    ca, sa = np.sqrt(1 - T), np.sqrt(T)
    nodes = np.stack([ca * np.cos(B1), ca * np.sin(B1), sa * np.cos(B2), sa * np.sin(B2)], axis=-1)
    w = 0.5 * wt[:, None, None] * wb * wb * np.ones_like(T)
    return nodes.reshape(-1, 4), w.reshape(-1)


def _graded(n: int, period: float, centers_period: float, lam: float, offset: float = 0.0):
    """Periodic trapezoid nodes on [0, period) clustered at multiples of ``centers_period``.

    v = w + (lam * p / 2pi) sin(2 pi w / p) is a smooth periodic reparametrisation
    (p = centers_period) with density (1 - lam)^-1 at the cluster points.
    """
    w = offset + period * (np.arange(n) + 0.5) / n
    p = centers_period
    arg = 2 * np.pi * w / p
    v = w - lam * p / (2 * np.pi) * np.sin(arg)
    jac = 1 - lam * np.cos(arg)
    return v, jac * period / n


@dataclass(frozen=True)
class IntegrationResult:
    value: float
    error_estimate: float
    coarse_value: float
    nodes: int

    def converged(self, rel: float = 0.05) -> bool:
        return self.error_estimate <= rel * abs(self.value)


@dataclass(frozen=True)
class PeakedIntegrationPlan:
    lattice: geo.PeakLattice
    delta: float
    r0: float
    eps: float
    ball_radius: Optional[float] = None
    radial_breaks: tuple = ()
    # ball rule
    s_min_factor: float = 0.1
    ball_panel_ratio: float = 2.0
    ball_nodes_per_panel: int = 6
    inner_nodes: int = 6
    bump_panels: int = 6
    angular_t: int = 8
    angular_beta: int = 16
    # background rule
    bg_nodes_per_ball: float = 6.0
    bg_nodes_per_panel: int = 6
    grading: float = 0.5
    use_symmetry: bool = True
    # execution
    chunk: int = 1 << 15
    workers: int = 1

    def __post_init__(self):
        if not self.eps > 0:
            raise ParameterError("eps must be positive")
        if self.r0 - self.eps < 0:
            raise ParameterError("annulus must not contain the origin")

    @property
    def annulus(self) -> tuple[float, float]:
        return (self.r0 - self.eps, self.r0 + self.eps)

    @property
    def R(self) -> float:
        """Radius of the per-peak balls."""
        if self.ball_radius is not None:
            return self.ball_radius
        cross, same = geo.min_separation(self.lattice)
        sep = same if cross is None else min(cross, same)
        if sep <= 0:
            raise GeometryError("two peaks of the lattice coincide")
        room = self.eps - abs(self.lattice.rho - self.r0)
        if room <= 0:
            raise ParameterError("peaks lie outside the integration annulus")
        return min(sep / 3, 0.9 * room)

    def scaled(self, factor: float) -> "PeakedIntegrationPlan":
        """Resolution scaled by ``factor`` in every direction (2 = doubled)."""
        def sc(n, lo=2):
            return max(lo, int(round(n * factor)))
        return replace(
            self,
            ball_nodes_per_panel=sc(self.ball_nodes_per_panel),
            inner_nodes=sc(self.inner_nodes),
            angular_t=sc(self.angular_t),
            angular_beta=sc(self.angular_beta, 4),
            bg_nodes_per_ball=self.bg_nodes_per_ball * factor,
        )

    # -- node sets ---------------------------------------------------------

    def ball_radial_rule(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes s in [0, R] with weights including the s^3 Jacobian."""
        R = self.R
        s_min = min(self.s_min_factor * self.delta, 0.5 * R)
        s_in, w_in = gauss_legendre(0.0, s_min, self.inner_nodes)
        w_in = w_in * s_in**3
        s_bump = BUMP_INNER * R
        n_pan = max(1, math.ceil(math.log(s_bump / s_min) / math.log(self.ball_panel_ratio)))
        tau, wtau = composite_gauss(np.linspace(math.log(s_min), math.log(s_bump), n_pan + 1), self.ball_nodes_per_panel)
        s_log = np.exp(tau)
        # the bump transition gets linear panels
        s_lin, w_lin = composite_gauss(np.linspace(s_bump, R, self.bump_panels + 1), self.ball_nodes_per_panel)
        s = np.concatenate([s_in, s_log, s_lin])
        w = np.concatenate([w_in, wtau * s_log**4, w_lin * s_lin**3])
        return s, w

    @property
    def n_beta(self) -> int:
        """Angular trapezoid size, rounded up to a multiple of 2m so S_q maps the ball rule onto itself."""
        step = 2 * self.lattice.m
        return -(-self.angular_beta // step) * step

    def ball_centers(self, sector: bool) -> np.ndarray:
        if sector:
            return self.lattice.points[:, 0, :]
        return self.lattice.flat

    def background_axes(self, support=None, sector: bool = False):
        lo, hi = self.annulus
        if support is not None:
            lo, hi = max(lo, support[0]), min(hi, support[1])
        if hi <= lo:
            return None
        R = self.R
        rho = self.lattice.rho
        h = R / self.bg_nodes_per_ball
        npp = self.bg_nodes_per_panel
        lam = self.grading

        brks = sorted({lo, hi, *[b for b in self.radial_breaks if lo < b < hi]})
        edges = [lo]
        for a, b in zip(brks[:-1], brks[1:]):
            n = max(1, math.ceil((b - a) / (npp * h)))
            edges.extend(np.linspace(a, b, n + 1)[1:])
        r, wr = composite_gauss(np.array(edges), npp)

        # eta: clustered at the lattice latitude (pi/4 for S, 0 for T)
        s_mode = self.lattice.mode is geo.LatticeMode.S
        n_eta_pan = max(4, math.ceil(rho * (math.pi / 2) * (1 - lam) / (npp * h)))
        wgrid, ww = composite_gauss(np.linspace(0, math.pi / 2, n_eta_pan + 1), npp)
        if s_mode:
            eta = wgrid + lam / 4 * np.sin(4 * wgrid)
            jac = 1 + lam * np.cos(4 * wgrid)
        else:
            # cluster at eta = 0: eta = w - (lam/2) sin(2w) * ... keep monotone map onto [0, pi/2]
            eta = wgrid - lam / 2 * np.sin(2 * wgrid)
            jac = 1 - lam * np.cos(2 * wgrid)
        weta = ww * jac * np.sin(eta) * np.cos(eta)

        m, k = self.lattice.m, self.lattice.k
        # a rigid rotation of the lattice shifts (phi1, phi2), hence u and v
        p1, p2 = self.lattice.phase
        du, dv = 0.5 * (p1 + p2), 0.5 * (p2 - p1)
        # v: clustered where the circles sit
        n_v = max(8, math.ceil(2 * math.pi * rho * (1 - lam) / h))
        # a multiple of 2m keeps the grid invariant under the v-shifts S_q
        n_v = -(-n_v // (2 * m)) * (2 * m)
        if s_mode:
            v, wv = _graded(n_v, 2 * math.pi, math.pi / m, lam)
        else:
            v, wv = _graded(n_v, 2 * math.pi, 2 * math.pi, 0.0)
        v = v + dv
        # u: uniform; one sector or the full circle
        n_cell = max(4, math.ceil(2 * math.pi * rho / k / h))
        if sector:
            u = 2 * math.pi / k * (np.arange(n_cell) + 0.5) / n_cell
            wu = np.full(n_cell, 2 * math.pi / k / n_cell)
        else:
            n_u = n_cell * k
            u = 2 * math.pi * (np.arange(n_u) + 0.5) / n_u
            wu = np.full(n_u, 2 * math.pi / n_u)
        u = u + du
        # (u, v) over [0, 2pi)^2 covers the torus twice; Jacobian of (phi1, phi2) -> (u, v) is 2
        return (r, wr * r**3), (eta, weta), (u, wu), (v, wv)

    def size(self, sector: bool = False) -> int:
        axes = self.background_axes(sector=sector)
        n_bg = 0 if axes is None else math.prod(len(a[0]) for a in axes)
        s, _ = self.ball_radial_rule()
        return n_bg + len(self.ball_centers(sector)) * len(s) * self.angular_t * self.n_beta**2


def hopf_points(r, eta, u, v):
    ce, se = np.cos(eta), np.sin(eta)
    return np.stack(
        [r * ce * np.cos(u - v), r * ce * np.sin(u - v), r * se * np.cos(u + v), r * se * np.sin(u + v)], axis=-1
    )


def _bump_sum(x, centers, R):
    tot = np.zeros(len(x))
    for c in centers:
        d = np.sqrt(np.sum((x - c) ** 2, axis=-1))
        near = d < R
        if np.any(near):
            tot[near] += ball_bump(d[near], R)
    return tot


def _check_finite(vals, base, off):
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise IntegrandError("non-finite integrand sample", (base[i] + off[i]).tolist())


def _sector_ok(f: ScalarField4, plan: PeakedIntegrationPlan) -> bool:
    """True when f is invariant under the plan's rotations R_i, so one u-sector suffices."""
    return plan.use_symmetry and "sy55" in f.symmetries and (f.k is None or f.k % plan.lattice.k == 0)


def _integrate_once(f: ScalarField4, plan: PeakedIntegrationPlan) -> tuple[float, int]:
    sector = _sector_ok(f, plan)
    factor = plan.lattice.k if sector else 1
    R = plan.R
    all_centers = plan.lattice.flat

    tasks = []

    # balls
    s, ws = plan.ball_radial_rule()
    omega, wo = sphere_rule(plan.angular_t, plan.n_beta, plan.lattice.phase)
    psi = ball_bump(s, R)
    keep = psi > 0
    s, ws, psi = s[keep], ws[keep], psi[keep]
    off_all = (s[:, None, None] * omega[None, :, :]).reshape(-1, 4)
    w_all = ((ws * psi)[:, None] * wo[None, :]).reshape(-1)
    for c in plan.ball_centers(sector):
        for start in range(0, len(w_all), plan.chunk):
            tasks.append(("ball", c, start))

    axes = plan.background_axes(f.support, sector)
    n_bg = 0
    if axes is not None:
        (r, wr), (eta, weta), (u, wu), (v, wv) = axes
        shape = (len(r), len(eta), len(u), len(v))
        n_bg = math.prod(shape)
        for start in range(0, n_bg, plan.chunk):
            tasks.append(("bg", None, start))

    def run(task):
        kind, c, start = task
        if kind == "ball":
            off = off_all[start : start + plan.chunk]
            base = np.broadcast_to(c, off.shape).copy()
            vals = f.value(base, off)
            _check_finite(vals, base, off)
            return float(np.sum(vals * w_all[start : start + plan.chunk]))
        idx = np.arange(start, min(start + plan.chunk, n_bg))
        ir, ie, iu, iv = np.unravel_index(idx, shape)
        x = hopf_points(r[ir], eta[ie], u[iu], v[iv])
        weight = wr[ir] * weta[ie] * wu[iu] * wv[iv] * (1.0 - _bump_sum(x, all_centers, R))
        live = weight != 0
        if not np.any(live):
            return 0.0
        x, weight = x[live], weight[live]
        off = np.zeros_like(x)
        vals = f.value(x, off)
        _check_finite(vals, x, off)
        return float(np.sum(vals * weight))

    if plan.workers > 1:
        with ThreadPoolExecutor(plan.workers) as ex:
            parts = list(ex.map(run, tasks))
    else:
        parts = [run(t) for t in tasks]
    n_nodes = len(plan.ball_centers(sector)) * len(w_all) + n_bg
    return factor * math.fsum(parts), n_nodes


def integrate(f: ScalarField4, plan: PeakedIntegrationPlan, refine: bool = True) -> IntegrationResult:
    """Integral of f over the plan's annulus.

    The reported error estimate is the change against the same plan at half
    resolution in every direction.
    """
    value, n = _integrate_once(f, plan)
    if not refine:
        return IntegrationResult(value, math.nan, math.nan, n)
    coarse, _ = _integrate_once(f, plan.scaled(0.5))
    return IntegrationResult(value, abs(value - coarse), coarse, n)


def annulus_measure(lo: float, hi: float) -> float:
    """Lebesgue measure of {lo <= |x| <= hi} in R^4."""
    return 0.5 * math.pi**2 * (hi**4 - lo**4)


# -- weighted sup norms -----------------------------------------------------


@dataclass(frozen=True)
class NormWeightFamily:
    """weight(x) = sum over all peaks of (delta + |x - xi|)^-power; power 1 for ||.||_*, 3 for ||.||_**."""

    lattice: geo.PeakLattice
    delta: float
    power: int = 3

    @classmethod
    def star(cls, lattice, delta):
        return cls(lattice, delta, 1)

    @classmethod
    def starstar(cls, lattice, delta):
        return cls(lattice, delta, 3)

    def __call__(self, base, offset=None):
        base = np.atleast_2d(base)
        offset = np.zeros_like(base) if offset is None else offset
        tot = np.zeros(len(base))
        for c in self.lattice.flat:
            d = np.sqrt(np.sum(((base - c) + offset) ** 2, axis=-1))
            tot += (self.delta + d) ** (-float(self.power))
        return tot


@dataclass(frozen=True)
class SupResult:
    value: float
    argmax: list
    samples: int


def sup_samples(plan: PeakedIntegrationPlan, density: float = 1.0, sector: bool = False):
    """Structured sample set: log-radial shells times S^3 nodes around each peak, plus a coarse annulus grid.

    With ``sector`` only the peaks and background of one R_i-sector are sampled.
    """
    R = plan.R
    s = np.concatenate([[0.0], np.geomspace(plan.delta / 10, R, max(4, int(round(24 * density))))])
    omega, _ = sphere_rule(max(2, int(round(4 * density))), max(4, int(round(8 * density))), plan.lattice.phase)
    off = (s[:, None, None] * omega[None]).reshape(-1, 4)
    bases, offs = [], []
    for c in plan.ball_centers(sector):
        bases.append(np.broadcast_to(c, off.shape))
        offs.append(off)
    coarse = replace(plan, bg_nodes_per_ball=max(1.0, 2 * density), bg_nodes_per_panel=3)
    axes = coarse.background_axes(sector=sector)
    if axes is not None:
        (r, _), (eta, _), (u, _), (v, _) = axes
        R_, E_, U_, V_ = np.meshgrid(r, eta, u, v, indexing="ij")
        x = hopf_points(R_.ravel(), E_.ravel(), U_.ravel(), V_.ravel())
        bases.append(x)
        offs.append(np.zeros_like(x))
    return np.concatenate(bases), np.concatenate(offs)


def weighted_sup(f: ScalarField4, w: NormWeightFamily, plan: PeakedIntegrationPlan, density: float = 1.0) -> SupResult:
    sector = _sector_ok(f, plan)
    base, off = sup_samples(plan, density, sector)
    best, arg = -1.0, None
    for start in range(0, len(base), plan.chunk):
        b, o = base[start : start + plan.chunk], off[start : start + plan.chunk]
        ratio = np.abs(f.value(b, o)) / w(b, o)
        _check_finite(ratio, b, o)
        i = int(np.argmax(ratio))
        if ratio[i] > best:
            best, arg = float(ratio[i]), (b[i] + o[i]).tolist()
    return SupResult(best, arg, len(base))


def ball_integral(f: ScalarField4, center, radius: float, delta: float, radial_panels_ratio: float = 2.0,
                  nodes_per_panel: int = 8, angular_t: int = 8, angular_beta: int = 16) -> float:
    """Integral of f over the ball |x - center| <= radius, polar about the center with log-spaced panels."""
    center = np.asarray(center, dtype=float)
    s_min = min(0.1 * delta, 0.5 * radius)
    s_in, w_in = gauss_legendre(0.0, s_min, nodes_per_panel)
    n_pan = max(1, math.ceil(math.log(radius / s_min) / math.log(radial_panels_ratio)))
    tau, wtau = composite_gauss(np.linspace(math.log(s_min), math.log(radius), n_pan + 1), nodes_per_panel)
    s = np.concatenate([s_in, np.exp(tau)])
    ws = np.concatenate([w_in * s_in**3, wtau * np.exp(4 * tau)])
    omega, wo = sphere_rule(angular_t, angular_beta)
    off = (s[:, None, None] * omega[None]).reshape(-1, 4)
    w = (ws[:, None] * wo[None]).reshape(-1)
    base = np.broadcast_to(center, off.shape).copy()
    vals = f.value(base, off)
    _check_finite(vals, base, off)
    return math.fsum(vals * w)


def plan_for_ansatz(cfg, eps: Optional[float] = None, **overrides) -> PeakedIntegrationPlan:
    """Plan over D_eps for an ansatz config (default eps = 3 sigma), with panel edges at the cut-off kinks."""
    r0, sigma = cfg.cutoff.r0, cfg.cutoff.sigma
    eps = 3 * sigma if eps is None else eps
    breaks = tuple(r0 + t * sigma for t in (-2, -1, 1, 2))
    return PeakedIntegrationPlan(cfg.lattice, cfg.delta, r0, eps, radial_breaks=breaks, **overrides)

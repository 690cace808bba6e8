"""Bubbles, the radial cut-off, the ansatz W and its parameter derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import geometry as geo
from .errors import ParameterError
from .fields import SYMMETRIES, ScalarField4, positions, pullback
from .potential import RadialPotential, gaussian_bump

C_BUBBLE = 2.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class BubbleParams:
    delta: float
    center: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta >= 1e-300):
            raise ParameterError(f"delta must be positive and finite, got {self.delta}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(4))


def bubble_eval(p: BubbleParams, x) -> float | np.ndarray:
    """U_{delta,xi}(x) = c delta / (delta^2 + |x - xi|^2)."""
    return bubble_field(p)(x)


def bubble_field(p: BubbleParams) -> ScalarField4:
    d, c0 = p.delta, p.center

    def h_of(b, o):
        return (b - c0) + o

    def value(b, o):
        h = h_of(b, o)
        return C_BUBBLE * d / (d * d + np.sum(h * h, axis=-1))

    def grad(b, o):
        h = h_of(b, o)
        den = d * d + np.sum(h * h, axis=-1)
        return (-2 * C_BUBBLE * d / den**2)[..., None] * h

    def lap(b, o):
        h = h_of(b, o)
        den = d * d + np.sum(h * h, axis=-1)
        return -8 * C_BUBBLE * d**3 / den**3

    return ScalarField4(value, grad, lap, frozenset(), None, None, "U")


def standard_bubble() -> ScalarField4:
    return bubble_field(BubbleParams(1.0))


def d_delta_bubble(p: BubbleParams, x):
    """dU_{delta,xi}/d delta = c (s^2 - delta^2) / (delta^2 + s^2)^2."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    s2 = np.sum((x - p.center) ** 2, axis=-1)
    return C_BUBBLE * (s2 - p.delta**2) / (p.delta**2 + s2) ** 2


@dataclass(frozen=True)
class CutoffProfile:
    """chi(r) = 1 for |r - r0| <= sigma, 0 for |r - r0| >= 2 sigma, quintic smoothstep between."""

    r0: float
    sigma: float

    def __post_init__(self):
        if not (self.r0 > 0 and self.sigma > 0):
            raise ParameterError("cut-off needs r0 > 0 and sigma > 0")

    @property
    def support(self) -> tuple[float, float]:
        return (max(0.0, self.r0 - 2 * self.sigma), self.r0 + 2 * self.sigma)

    def __call__(self, r):
        return cutoff_eval(self, r)


def cutoff_eval(c: CutoffProfile, r):
    """(chi, chi', chi'') at radius r (scalar or array)."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ParameterError("radius must be nonnegative")
    z = r_arr - c.r0
    t = np.clip((np.abs(z) - c.sigma) / c.sigma, 0.0, 1.0)
    sgn = np.sign(z)
    S = t**3 * (10 - 15 * t + 6 * t * t)
    dS = 30 * t * t * (1 - t) ** 2
    d2S = 60 * t * (1 - t) * (1 - 2 * t)
    chi = 1 - S
    d1 = -dS * sgn / c.sigma
    d2 = -d2S / c.sigma**2
    if np.ndim(r) == 0:
        return float(chi), float(d1), float(d2)
    return chi, d1, d2


def cutoff_field(c: CutoffProfile) -> ScalarField4:
    def parts(b, o):
        x = positions(b, o)
        r = np.sqrt(np.sum(x * x, axis=-1))
        return x, r, cutoff_eval(c, r)

    def value(b, o):
        return parts(b, o)[2][0]

    def grad(b, o):
        x, r, (_, d1, _) = parts(b, o)
        return (d1 / np.where(r > 0, r, 1.0))[..., None] * x

    def lap(b, o):
        x, r, (_, d1, d2) = parts(b, o)
        return d2 + 3 * d1 / np.where(r > 0, r, 1.0)

    return ScalarField4(value, grad, lap, frozenset(SYMMETRIES), None, c.support, "chi")


@dataclass(frozen=True)
class AnsatzConfig:
    k: int
    m: int
    beta: float
    delta: float
    rho: float
    cutoff: CutoffProfile
    lattice_mode: geo.LatticeMode = geo.LatticeMode.S
    potential: RadialPotential = field(default_factory=gaussian_bump)
    window: float = 0.1
    angle_variant: str = "printed"
    phase: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "lattice_mode", geo.LatticeMode(self.lattice_mode))
        BubbleParams(self.delta)
        if self.k < 2 or self.k % 2:
            raise ParameterError(f"k must be a positive even integer, got {self.k}")
        if self.m < 1:
            raise ParameterError(f"m must be >= 1, got {self.m}")
        if not self.rho > 0:
            raise ParameterError(f"rho must be positive, got {self.rho}")
        if not self.cutoff.sigma < self.cutoff.r0 / 2:
            raise ParameterError("sigma must be below r0/2")

    @classmethod
    def make(cls, k, m, beta, delta, rho, r0, sigma=None, **kw) -> "AnsatzConfig":
        sigma = r0 / 10 if sigma is None else sigma
        return cls(k, m, beta, delta, rho, CutoffProfile(r0, sigma), **kw)

    @property
    def lattice(self) -> geo.PeakLattice:
        return geo.peak_lattice(self.k, self.m, self.rho, self.lattice_mode, self.phase)

    @property
    def centers(self) -> np.ndarray:
        """Peaks of W itself (the q = 1 circle)."""
        return self.lattice.circle(1)

    @property
    def symmetries(self) -> frozenset:
        if self.lattice_mode is geo.LatticeMode.S:
            return frozenset(SYMMETRIES)
        return frozenset({"sy22", "sy55"})

    def rho_in_window(self) -> bool:
        return abs(self.rho - self.cutoff.r0) < self.window

    def component_map(self, q: int) -> geo.OrthogonalMap4:
        if self.lattice_mode is geo.LatticeMode.T:
            return geo.symmetry_t(q, self.m)
        return geo.symmetry_s(q, self.m, self.k, self.angle_variant)

    def with_(self, **kw) -> "AnsatzConfig":
        return replace(self, **kw)


class _BubbleSum:
    """Per-point sums over the bubbles of W; every field of the ansatz is assembled from these."""

    def __init__(self, cfg: AnsatzConfig, centers: Optional[np.ndarray] = None):
        self.cfg = cfg
        self.C = cfg.centers if centers is None else centers
        self.delta = cfg.delta

    def bubbles(self, b, o):
        """(h, den, U) per center: shapes (N, K, 4), (N, K), (N, K)."""
        h = (b[:, None, :] - self.C[None, :, :]) + o[:, None, :]
        den = self.delta**2 + np.sum(h * h, axis=-1)
        return h, den, C_BUBBLE * self.delta / den

    def radial(self, b, o):
        x = positions(b, o)
        r = np.sqrt(np.sum(x * x, axis=-1))
        chi, d1, d2 = cutoff_eval(self.cfg.cutoff, r)
        return x, r, chi, d1, d2


def _exclusive_sums(U):
    """Sum over j != i of U_j without forming T - U_i."""
    pre = np.concatenate([np.zeros_like(U[:, :1]), np.cumsum(U[:, :-1], axis=1)], axis=1)
    suf = np.concatenate([np.cumsum(U[:, :0:-1], axis=1)[:, ::-1], np.zeros_like(U[:, :1])], axis=1)
    return pre + suf


def ansatz_W(cfg: AnsatzConfig) -> ScalarField4:
    """W(x) = chi(|x|) sum_i U_{delta, xi_i}(x) with analytic gradient and Laplacian."""
    bs = _BubbleSum(cfg)
    c, d = C_BUBBLE, cfg.delta

    def value(b, o):
        _, _, U = bs.bubbles(b, o)
        _, _, chi, _, _ = bs.radial(b, o)
        return chi * U.sum(axis=1)

    def grad(b, o):
        h, den, U = bs.bubbles(b, o)
        x, r, chi, d1, _ = bs.radial(b, o)
        gU = np.sum((-2 * c * d / den**2)[..., None] * h, axis=1)
        return (d1 * U.sum(axis=1) / np.where(r > 0, r, 1.0))[:, None] * x + chi[:, None] * gU

    def lap(b, o):
        h, den, U = bs.bubbles(b, o)
        x, r, chi, d1, d2 = bs.radial(b, o)
        rr = np.where(r > 0, r, 1.0)
        x_dot_gU = np.sum(-2 * c * d * np.einsum("nkj,nj->nk", h, x) / den**2, axis=1)
        lapU = np.sum(-8 * c * d**3 / den**3, axis=1)
        return (d2 + 3 * d1 / rr) * U.sum(axis=1) + 2 * (d1 / rr) * x_dot_gU + chi * lapU

    return ScalarField4(value, grad, lap, cfg.symmetries, cfg.k, cfg.cutoff.support, "W")


RESIDUAL_PARTS = ("interaction", "self_cubes", "cutoff")


def _residual_parts(bs, b, o):
    c, d = C_BUBBLE, bs.delta
    h, den, U = bs.bubbles(b, o)
    x, r, chi, d1, d2 = bs.radial(b, o)
    rr = np.where(r > 0, r, 1.0)
    T = U.sum(axis=1)
    O = _exclusive_sums(U)
    interaction = chi**3 * np.sum(U * O * (T[:, None] + U), axis=1)
    self_cubes = (chi**3 - chi) * np.sum(U**3, axis=1)
    x_dot_gU = np.sum(-2 * c * d * np.einsum("nkj,nj->nk", h, x) / den**2, axis=1)
    cutoff = (d2 + 3 * d1 / rr) * T + 2 * (d1 / rr) * x_dot_gU
    return {"interaction": interaction, "self_cubes": self_cubes, "cutoff": cutoff}


def bubble_residual_field(cfg: AnsatzConfig, part: Optional[str] = None) -> ScalarField4:
    """W^3 + Delta W, assembled without cancelling the leading U_i^3 terms.

    Uses Delta U_i = -U_i^3 and T^3 - sum U_i^3 = sum_i U_i O_i (T + U_i) with O_i = sum_{j != i} U_j.
    ``part`` selects one of the three pieces: bubble interaction, chi^3 - chi
    times the self cubes, and the terms carrying derivatives of the cut-off.
    """
    if part is not None and part not in RESIDUAL_PARTS:
        raise ParameterError(f"part must be one of {RESIDUAL_PARTS}, got {part!r}")
    bs = _BubbleSum(cfg)

    def value(b, o):
        parts = _residual_parts(bs, b, o)
        if part is not None:
            return parts[part]
        return parts["interaction"] + parts["self_cubes"] + parts["cutoff"]

    name = "W^3+ΔW" if part is None else f"W^3+ΔW[{part}]"
    return ScalarField4(value, None, None, cfg.symmetries, cfg.k, cfg.cutoff.support, name)


def ansatz_dW(cfg: AnsatzConfig, which: str) -> ScalarField4:
    """dW/d delta or dW/d rho (the cut-off depends on neither)."""
    bs = _BubbleSum(cfg)
    c, d, rho = C_BUBBLE, cfg.delta, cfg.rho
    if which == "d_delta":
        def value(b, o):
            h, den, U = bs.bubbles(b, o)
            _, _, chi, _, _ = bs.radial(b, o)
            s2 = den - d * d
            return chi * np.sum(c * (s2 - d * d) / den**2, axis=1)
    elif which == "d_rho":
        dxi = bs.C / rho

        def value(b, o):
            h, den, U = bs.bubbles(b, o)
            _, _, chi, _, _ = bs.radial(b, o)
            proj = np.einsum("nkj,kj->nk", h, dxi)
            return chi * np.sum(2 * c * d * proj / den**2, axis=1)
    else:
        raise ParameterError(f"which must be 'd_delta' or 'd_rho', got {which!r}")
    return ScalarField4(value, None, None, cfg.symmetries, cfg.k, cfg.cutoff.support, f"dW/{which[2:]}")


def component_field(u: ScalarField4, q: int, cfg: AnsatzConfig) -> ScalarField4:
    """u_q(x) = u(S_q x)."""
    M = cfg.component_map(q).entries
    return pullback(u, M, name=f"{u.name}_q{q}")


def eigenfunction_z(l: int) -> ScalarField4:
    """Kernel elements of -Delta - 3U^2: Z_0 = (1-|x|^2)/(1+|x|^2)^2, Z_l = x_l/(1+|x|^2)^2."""
    return local_eigenfunction(l, 1.0, np.zeros(4))


def local_eigenfunction(l: int, delta: float, center) -> ScalarField4:
    """x -> Z_l((x - center)/delta)."""
    if not 0 <= l <= 4:
        raise ParameterError(f"l must be in 0..4, got {l}")
    center = np.asarray(center, dtype=float)

    def y_of(b, o):
        return ((b - center) + o) / delta

    if l == 0:
        def value(b, o):
            y2 = np.sum(y_of(b, o) ** 2, axis=-1)
            return (1 - y2) / (1 + y2) ** 2

        def grad(b, o):
            y = y_of(b, o)
            y2 = np.sum(y * y, axis=-1)
            # d/dr of (1-r^2)/(1+r^2)^2 is 2r(r^2-3)/(1+r^2)^3
            return (2 * (y2 - 3) / (1 + y2) ** 3)[..., None] * y / delta

        def lap(b, o):
            y2 = np.sum(y_of(b, o) ** 2, axis=-1)
            return 24 * (y2 - 1) / (1 + y2) ** 4 / delta**2
    else:
        j = l - 1

        def value(b, o):
            y = y_of(b, o)
            return y[..., j] / (1 + np.sum(y * y, axis=-1)) ** 2

        def grad(b, o):
            y = y_of(b, o)
            g = 1 / (1 + np.sum(y * y, axis=-1)) ** 2
            out = (-4 * y[..., j] * g / (1 + np.sum(y * y, axis=-1)))[..., None] * y
            out[..., j] += g
            return out / delta

        def lap(b, o):
            y = y_of(b, o)
            return -24 * y[..., j] / (1 + np.sum(y * y, axis=-1)) ** 4 / delta**2

    return ScalarField4(value, grad, lap, frozenset(), None, None, f"Z{l}")

"""Radial trapping potentials and the critical points of r -> r^2 V(r)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import BracketError, ParameterError


@dataclass(frozen=True)
class RadialPotential:
    """V(r) with its first two radial derivatives, vectorised over r."""

    kind: str
    params: dict
    _fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]] = field(repr=False, compare=False)

    def __call__(self, r):
        return self._fn(np.asarray(r, dtype=float))[0]

    def derivs(self, r):
        return self._fn(np.asarray(r, dtype=float))

    def scaled(self, lam: float) -> "RadialPotential":
        fn = self._fn
        return RadialPotential(
            self.kind, {**self.params, "scale": lam * self.params.get("scale", 1.0)},
            lambda r: tuple(lam * v for v in fn(r)),
        )

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


def gaussian_bump(amplitude: float = 1.0, center: float = 1.0, width: float = 1.0) -> RadialPotential:
    """V(r) = A exp(-(r - c)^2 / w^2)."""
    A, c, w = float(amplitude), float(center), float(width)
    if w <= 0:
        raise ParameterError("width must be positive")

    def fn(r):
        z = (r - c) / w
        v = A * np.exp(-z * z)
        return v, v * (-2 * z / w), v * (4 * z * z - 2) / w**2

    return RadialPotential("gaussian-bump", {"amplitude": A, "center": c, "width": w}, fn)


def power_window(amplitude: float = 1.0, power: float = 2.0, width: float = 1.0) -> RadialPotential:
    """V(r) = A r^p exp(-r^2 / w^2); r^2 V has its critical point at r^2 = (p + 2) w^2 / 2."""
    A, p, w = float(amplitude), float(power), float(width)
    if w <= 0:
        raise ParameterError("width must be positive")

    def fn(r):
        v = A * r**p * np.exp(-((r / w) ** 2))
        g = p / r - 2 * r / w**2
        return v, v * g, v * (g * g - p / r**2 - 2 / w**2)

    return RadialPotential("power-window", {"amplitude": A, "power": p, "width": w}, fn)


def constant(value: float) -> RadialPotential:
    v0 = float(value)
    return RadialPotential(
        "constant", {"value": v0}, lambda r: (np.full_like(r, v0), np.zeros_like(r), np.zeros_like(r))
    )


def zero() -> RadialPotential:
    return constant(0.0)


def inverse_r(amplitude: float = 1.0) -> RadialPotential:
    A = float(amplitude)
    return RadialPotential("inverse-r", {"amplitude": A}, lambda r: (A / r, -A / r**2, 2 * A / r**3))


def tabulated(radii, values) -> RadialPotential:
    """Natural cubic spline through (radius, value) knots."""
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    if radii.ndim != 1 or radii.shape != values.shape or len(radii) < 4:
        raise ParameterError("tabulated potential needs matching 1-D radius/value columns (>= 4 knots)")
    if np.any(np.diff(radii) <= 0):
        raise ParameterError("tabulated radii must be strictly increasing")
    sp = CubicSpline(radii, values, bc_type="natural")
    d1, d2 = sp.derivative(1), sp.derivative(2)
    return RadialPotential(
        "tabulated-spline",
        {"radii": radii.tolist(), "values": values.tolist()},
        lambda r: (sp(r), d1(r), d2(r)),
    )


def from_spec(spec: dict) -> RadialPotential:
    """Build a potential from a ``{"kind": ..., **params}`` mapping."""
    spec = dict(spec)
    kind = spec.pop("kind")
    makers = {
        "gaussian-bump": gaussian_bump,
        "power-window": power_window,
        "constant": constant,
        "inverse-r": inverse_r,
        "tabulated-spline": tabulated,
    }
    if kind not in makers:
        raise ParameterError(f"unknown potential kind {kind!r}; expected one of {sorted(makers)}")
    try:
        return makers[kind](**spec)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for potential {kind!r}: {exc}") from None


def eval_v(V: RadialPotential, r: float) -> tuple[float, float, float]:
    if not r > 0:
        raise ParameterError(f"r must be positive, got {r}")
    v, d1, d2 = V.derivs(np.array([r]))
    return float(v[0]), float(d1[0]), float(d2[0])


def radial_moment(V: RadialPotential, r):
    """f(r) = r^2 V(r) and its first two derivatives."""
    r = np.asarray(r, dtype=float)
    v, d1, d2 = V.derivs(r)
    return r * r * v, 2 * r * v + r * r * d1, 2 * v + 4 * r * d1 + r * r * d2


@dataclass(frozen=True)
class CriticalPointReport:
    r0: float
    f_value: float
    f_first: float
    f_second: float
    nondegenerate: bool
    positive_at_r0: bool
    newton_residuals: tuple = ()

    def to_dict(self) -> dict:
        return {
            "r0": self.r0,
            "f_value": self.f_value,
            "f_first": self.f_first,
            "f_second": self.f_second,
            "nondegenerate": self.nondegenerate,
            "positive_at_r0": self.positive_at_r0,
        }


def find_r0(V: RadialPotential, bracket: tuple[float, float], bisect_width: float = 1e-6, degeneracy_tol: float = 1e-8) -> CriticalPointReport:
    """Critical point of r^2 V(r) in ``bracket``: bisection on f' down to ``bisect_width``, then Newton."""
    a, b = map(float, bracket)
    if not 0 < a < b:
        raise ParameterError(f"bracket must satisfy 0 < a < b, got {bracket}")

    def fp(r):
        return float(radial_moment(V, r)[1])

    fa, fb = fp(a), fp(b)
    if fa == 0:
        a = b = a
    elif fb == 0:
        a = b = b
    elif math.copysign(1, fa) == math.copysign(1, fb):
        raise BracketError(f"d/dr[r^2 V] has the same sign at both ends of [{a}, {b}]")
    while b - a > bisect_width:
        mid = 0.5 * (a + b)
        fm = fp(mid)
        if fm == 0:
            a = b = mid
            break
        if math.copysign(1, fm) == math.copysign(1, fa):
            a, fa = mid, fm
        else:
            b = mid
    lo, hi = a - bisect_width, b + bisect_width
    r = 0.5 * (a + b)
    residuals = [abs(fp(r))]
    for _ in range(50):
        _, f1, f2 = (float(t) for t in radial_moment(V, r))
        if f1 == 0 or f2 == 0:
            break
        step = f1 / f2
        r_new = r - step
        if not lo <= r_new <= hi:
            break
        r = r_new
        residuals.append(abs(fp(r)))
        if abs(step) <= 4 * np.finfo(float).eps * abs(r):
            break
    f0, f1, f2 = (float(t) for t in radial_moment(V, r))
    return CriticalPointReport(
        r0=r,
        f_value=f0,
        f_first=f1,
        f_second=f2,
        nondegenerate=abs(f2) > degeneracy_tol * abs(f0),
        positive_at_r0=float(V(r)) > 0,
        newton_residuals=tuple(residuals),
    )

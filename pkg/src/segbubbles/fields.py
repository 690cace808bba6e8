"""Scalar fields on R^4 evaluated at anchored points x = base + offset.

Quadrature nodes near a peak are generated as ``base = xi`` and a small
``offset``; keeping the two apart lets bubble terms form x - xi without
cancellation when |x - xi| is many orders of magnitude below |xi|.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]

SYMMETRIES = ("sy22", "sy33", "sy55")


@dataclass(frozen=True)
class ScalarField4:
    value: Evaluator
    gradient: Optional[Evaluator] = None
    laplacian: Optional[Evaluator] = None
    symmetries: frozenset = frozenset()
    k: Optional[int] = None  # order of the R_i group when "sy55" is claimed
    support: Optional[tuple[float, float]] = None  # radial interval outside which the field vanishes
    name: str = "field"
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, x, offset=None):
        return _apply(self.value, x, offset)

    def grad(self, x, offset=None):
        if self.gradient is None:
            raise NotImplementedError(f"{self.name} has no analytic gradient")
        return _apply(self.gradient, x, offset)

    def lap(self, x, offset=None):
        if self.laplacian is None:
            raise NotImplementedError(f"{self.name} has no analytic Laplacian")
        return _apply(self.laplacian, x, offset)

    def renamed(self, name: str) -> "ScalarField4":
        return replace(self, name=name)

    def without_symmetry(self) -> "ScalarField4":
        return replace(self, symmetries=frozenset(), k=None)


def _apply(fn, x, offset):
    x = np.asarray(x, dtype=float)
    base = np.atleast_2d(x)
    off = np.zeros_like(base) if offset is None else np.atleast_2d(np.asarray(offset, dtype=float))
    out = fn(base, off)
    return out[0] if x.ndim == 1 else out


def positions(base, offset):
    return np.asarray(base) + offset


def radius(base, offset):
    return np.sqrt(np.sum(positions(base, offset) ** 2, axis=-1))


def _merge_symmetry(*fields: ScalarField4):
    syms = frozenset.intersection(*(f.symmetries for f in fields))
    # k=None with "sy55" means invariant under every rotation group
    ks = {f.k for f in fields if "sy55" in f.symmetries and f.k is not None}
    if "sy55" in syms and len(ks) > 1:
        syms = syms - {"sy55"}
    k = next(iter(ks)) if "sy55" in syms and ks else None
    return syms, k


def _merge_support(*fields: ScalarField4, any_of: bool = False):
    sups = [f.support for f in fields]
    if any_of:
        if any(s is None for s in sups):
            return None
        return (min(s[0] for s in sups), max(s[1] for s in sups))
    sups = [s for s in sups if s is not None]
    if not sups:
        return None
    return (max(s[0] for s in sups), min(s[1] for s in sups))


def product(*fields: ScalarField4, name: str | None = None) -> ScalarField4:
    """Pointwise product; derivatives by the product rule when every factor provides them."""

    def value(b, o):
        out = fields[0].value(b, o)
        for f in fields[1:]:
            out = out * f.value(b, o)
        return out

    grad = lap = None
    if len(fields) == 2 and all(f.gradient is not None and f.laplacian is not None for f in fields):
        f, g = fields

        def grad(b, o):
            return f.gradient(b, o) * g.value(b, o)[..., None] + f.value(b, o)[..., None] * g.gradient(b, o)

        def lap(b, o):
            return (
                f.laplacian(b, o) * g.value(b, o)
                + 2 * np.sum(f.gradient(b, o) * g.gradient(b, o), axis=-1)
                + f.value(b, o) * g.laplacian(b, o)
            )

    syms, k = _merge_symmetry(*fields)
    return ScalarField4(
        value, grad, lap, syms, k, _merge_support(*fields), name or "*".join(f.name for f in fields)
    )


def linear_combination(terms: list[tuple[float, ScalarField4]], name: str = "combination") -> ScalarField4:
    fields = [f for _, f in terms]

    def value(b, o):
        return sum(c * f.value(b, o) for c, f in terms)

    grad = lap = None
    if all(f.gradient is not None for f in fields):
        def grad(b, o):
            return sum(c * f.gradient(b, o) for c, f in terms)
    if all(f.laplacian is not None for f in fields):
        def lap(b, o):
            return sum(c * f.laplacian(b, o) for c, f in terms)

    syms, k = _merge_symmetry(*fields)
    return ScalarField4(value, grad, lap, syms, k, _merge_support(*fields, any_of=True), name)


def scaled(f: ScalarField4, c: float) -> ScalarField4:
    return linear_combination([(c, f)], name=f"{c}*{f.name}")


def pullback(f: ScalarField4, M: np.ndarray, name: str | None = None, symmetries=frozenset(), k=None) -> ScalarField4:
    """x -> f(M x) for an orthogonal M; gradients by the chain rule, Laplacian unchanged."""
    M = np.asarray(M, dtype=float)

    def value(b, o):
        return f.value(b @ M.T, o @ M.T)

    grad = lap = None
    if f.gradient is not None:
        def grad(b, o):
            return f.gradient(b @ M.T, o @ M.T) @ M
    if f.laplacian is not None:
        def lap(b, o):
            return f.laplacian(b @ M.T, o @ M.T)

    return ScalarField4(value, grad, lap, frozenset(symmetries), k, f.support, name or f"{f.name}∘M")


def zero_field() -> ScalarField4:
    def z(b, o):
        return np.zeros(np.shape(b)[0])

    def zg(b, o):
        return np.zeros((np.shape(b)[0], 4))

    return ScalarField4(z, zg, z, frozenset(SYMMETRIES), None, None, "zero")


def constant_field(c: float) -> ScalarField4:
    def v(b, o):
        return np.full(np.shape(b)[0], float(c))

    def zg(b, o):
        return np.zeros((np.shape(b)[0], 4))

    def zl(b, o):
        return np.zeros(np.shape(b)[0])

    return ScalarField4(v, zg, zl, frozenset(SYMMETRIES), None, None, f"const{c}")

"""Pointwise error term, linearised and nonlinear operators, and the non-local residual.

With u = W + phi the non-local equation

    -Delta u + V u = u^3 + beta u sum_{q>=2} u^2(S_q x)

reads L(phi) - E - N(phi) = 0, where E is the error of the ansatz, L the
linearisation at W and N collects the quadratic and cubic terms in phi.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import quadrature as quad
from .bubbles import AnsatzConfig, ansatz_W, bubble_residual_field, component_field
from .fields import ScalarField4, _merge_symmetry, radius


def potential_field(cfg: AnsatzConfig) -> ScalarField4:
    V = cfg.potential

    def value(b, o):
        return V(radius(b, o))

    return ScalarField4(value, None, None, cfg.symmetries, None, None, "V")


def components(u: ScalarField4, cfg: AnsatzConfig) -> list[ScalarField4]:
    """u_q = u(S_q x) for q = 2..m."""
    return [component_field(u, q, cfg) for q in range(2, cfg.m + 1)]


def _sum_of_squares(fields, b, o):
    out = np.zeros(len(b))
    for f in fields:
        out = out + f.value(b, o) ** 2
    return out


@dataclass(frozen=True)
class ResidualBundle:
    cfg: AnsatzConfig
    W: ScalarField4
    components: tuple
    E: ScalarField4


def error_term(cfg: AnsatzConfig) -> ScalarField4:
    """E = W^3 + Delta W - V W + beta W sum_{q>=2} W^2(S_q x)."""
    W = ansatz_W(cfg)
    core = bubble_residual_field(cfg)
    Wq = components(W, cfg)
    V = cfg.potential
    beta = cfg.beta

    def value(b, o):
        w = W.value(b, o)
        out = core.value(b, o) - V(radius(b, o)) * w
        if Wq and beta != 0:
            out = out + beta * w * _sum_of_squares(Wq, b, o)
        return out

    return ScalarField4(value, None, None, cfg.symmetries, cfg.k, cfg.cutoff.support, "E")


def residual_bundle(cfg: AnsatzConfig) -> ResidualBundle:
    W = ansatz_W(cfg)
    return ResidualBundle(cfg, W, tuple(components(W, cfg)), error_term(cfg))


def nonlocal_residual(u: ScalarField4, cfg: AnsatzConfig) -> ScalarField4:
    """-Delta u + V u - u^3 - beta u sum_{q>=2} u^2(S_q x), using the analytic Laplacian of u."""
    if u.laplacian is None:
        raise ValueError(f"{u.name} needs an analytic Laplacian")
    uq = components(u, cfg)
    V = cfg.potential
    beta = cfg.beta

    def value(b, o):
        w = u.value(b, o)
        out = -u.laplacian(b, o) + V(radius(b, o)) * w - w**3
        if uq:
            out = out - beta * w * _sum_of_squares(uq, b, o)
        return out

    syms, k = _merge_symmetry(u)
    return ScalarField4(value, None, None, syms, k, None, f"R[{u.name}]")


def linear_op(phi: ScalarField4, cfg: AnsatzConfig) -> ScalarField4:
    """L(phi) = -Delta phi + V phi - 3 W^2 phi - beta phi sum_{q>=2} W^2(S_q x)."""
    if phi.laplacian is None:
        raise ValueError(f"{phi.name} needs an analytic Laplacian")
    W = ansatz_W(cfg)
    Wq = components(W, cfg)
    V = cfg.potential
    beta = cfg.beta

    def value(b, o):
        p = phi.value(b, o)
        w = W.value(b, o)
        out = -phi.laplacian(b, o) + V(radius(b, o)) * p - 3 * w * w * p
        if Wq:
            out = out - beta * p * _sum_of_squares(Wq, b, o)
        return out

    syms, k = _merge_symmetry(phi, W)
    return ScalarField4(value, None, None, syms, k, None, f"L[{phi.name}]")


def nonlinear_op(phi: ScalarField4, cfg: AnsatzConfig) -> ScalarField4:
    """N(phi): the cubic and quadratic terms in phi, local and non-local (six terms)."""
    W = ansatz_W(cfg)
    Wq = components(W, cfg)
    pq = components(phi, cfg)
    beta = cfg.beta

    def value(b, o):
        p = phi.value(b, o)
        w = W.value(b, o)
        out = p**3 + 3 * w * p * p
        if pq:
            pq_v = [f.value(b, o) for f in pq]
            wq_v = [f.value(b, o) for f in Wq]
            sq_p = sum(v * v for v in pq_v)
            cross = sum(a * c for a, c in zip(wq_v, pq_v))
            out = out + beta * p * sq_p + 2 * beta * p * cross + beta * w * sq_p + 2 * beta * w * cross
        return out

    syms, k = _merge_symmetry(phi, W)
    return ScalarField4(value, None, None, syms, k, None, f"N[{phi.name}]")


@dataclass(frozen=True)
class ErrorNormReport:
    k: int
    m: int
    beta: float
    delta: float
    rho: float
    norm: float
    ratio: float
    argmax: list
    refinement_change: float
    samples: int

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "m": self.m,
            "beta": self.beta,
            "delta": self.delta,
            "rho": self.rho,
            "norm": self.norm,
            "ratio": self.ratio,
            "argmax": self.argmax,
            "refinement_change": self.refinement_change,
            "samples": self.samples,
        }


def error_norm_report(cfg: AnsatzConfig, plan: Optional[quad.PeakedIntegrationPlan] = None, density: float = 1.0) -> ErrorNormReport:
    """||E||_** on structured samples, its ratio to delta, and the change under doubled sample density."""
    plan = plan or quad.plan_for_ansatz(cfg)
    E = error_term(cfg)
    w = quad.NormWeightFamily.starstar(cfg.lattice, cfg.delta)
    res = quad.weighted_sup(E, w, plan, density)
    fine = quad.weighted_sup(E, w, plan, 2 * density)
    return ErrorNormReport(
        cfg.k, cfg.m, cfg.beta, cfg.delta, cfg.rho,
        res.value, res.value / cfg.delta, res.argmax,
        abs(fine.value - res.value) / max(res.value, 1e-300), res.samples,
    )

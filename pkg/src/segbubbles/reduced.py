"""Leading-order reduced system for the concentration radius and blow-up rate.

    d/drho [rho^2 V(rho)] = 0,      a d V(rho) - b / rho^2 = 0,      delta = exp(-d k^2).

delta is kept in log form: for moderate k it underflows double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import expansions as ex
from .errors import ModelError, ParameterError
from .potential import CriticalPointReport, RadialPotential, find_r0

LOG_TINY = math.log(1e-300)


def convention_constants(convention: str = "measured") -> dict:
    """(a, b) pair: "paper-bare" uses a = c^2 = 8, "measured" the effective a = 2 pi^2 c^2."""
    b = ex.b_constant()
    if convention == "paper-bare":
        return {"a_eff": ex.A_BARE, "b": b}
    if convention == "measured":
        return {"a_eff": ex.A_EFF, "b": b}
    raise ParameterError(f"convention must be 'measured' or 'paper-bare', got {convention!r}")


@dataclass(frozen=True)
class ReducedSolution:
    rho: float
    d: float
    k: int
    constants_used: dict
    nondegeneracy: CriticalPointReport
    convention: str

    @property
    def log_delta(self) -> float:
        return -self.d * self.k**2

    @property
    def log10_delta(self) -> float:
        return self.log_delta / math.log(10)

    @property
    def degenerate(self) -> bool:
        return not self.nondegeneracy.nondegenerate

    def delta(self) -> float:
        """exp(log_delta); refuses when the value is below 1e-300."""
        if self.log_delta < LOG_TINY:
            raise ParameterError(f"delta = 10^{self.log10_delta:.6g} is not representable; pass an explicit delta")
        return math.exp(self.log_delta)

    def balance_residual(self, V: RadialPotential) -> float:
        """a d V(rho) - b / rho^2, relative to b / rho^2."""
        a, b = self.constants_used["a_eff"], self.constants_used["b"]
        return (a * self.d * float(V(self.rho)) - b / self.rho**2) / (b / self.rho**2)

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "d": self.d,
            "k": self.k,
            "log_delta": self.log_delta,
            "log10_delta": self.log10_delta,
            "constants_used": self.constants_used,
            "convention": self.convention,
            "degenerate": self.degenerate,
            "critical_point": self.nondegeneracy.to_dict(),
        }


def solve_reduced(V: RadialPotential, k: int, bracket: tuple[float, float], convention: str = "measured") -> ReducedSolution:
    if k < 1:
        raise ParameterError(f"k must be positive, got {k}")
    consts = convention_constants(convention)
    rep = find_r0(V, bracket)
    v0 = float(V(rep.r0))
    if not v0 > 0:
        raise ModelError(f"V(r0) = {v0} must be positive")
    d = consts["b"] / (consts["a_eff"] * rep.r0**2 * v0)
    return ReducedSolution(rep.r0, d, int(k), consts, rep, convention)

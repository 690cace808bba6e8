"""Command line entry point: ``segbubbles <subcommand> --config run.ini``.

Every run writes its report(s) and a ``manifest.json`` (config echo, versions,
seed) into the output directory. Reports are JSON with sorted keys and no
timestamps, so repeated runs with the same config are byte-identical.

Exit status: 0 success, 1 module error, 2 configuration error, 3 a report
was flagged unconverged under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from . import expansions as ex
from . import geometry as geo
from . import quadrature as quad
from . import residual as res
from . import verify as ver
from .bubbles import AnsatzConfig, CutoffProfile, _BubbleSum, ansatz_W
from .config import RunConfig, load_config, to_dict, to_text
from .errors import ConfigError, ParameterError, SegBubblesError
from .fields import ScalarField4
from .potential import from_spec, find_r0
from .reduced import convention_constants, solve_reduced

SUBCOMMANDS = ("reduced-solve", "residual", "constants", "pohozaev", "verify-lemmas", "export-field", "link-check")


@dataclass
class Outcome:
    reports: dict  # file name -> JSON-able object
    tables: dict = field(default_factory=dict)  # file name -> CSV text
    unconverged: list = field(default_factory=list)


# -- serialisation ------------------------------------------------------------


def plain(obj):
    """JSON-able copy: numpy scalars and arrays to Python, tuples to lists, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


# -- config resolution --------------------------------------------------------


@dataclass(frozen=True)
class Resolved:
    cfg: RunConfig
    potential: object
    r0: float
    rho: float
    sigma: float
    critical_point: dict


def resolve(cfg: RunConfig) -> Resolved:
    V = from_spec(cfg.potential)
    crit = find_r0(V, tuple(cfg.bracket))
    rho = crit.r0 if cfg.rho == "at-r0" else float(cfg.rho)
    sigma = crit.r0 / 10 if cfg.sigma is None else cfg.sigma
    return Resolved(cfg, V, crit.r0, rho, sigma, crit.to_dict())


def resolve_delta(cfg: RunConfig, rs: Resolved) -> float:
    if cfg.delta != "from-reduced":
        return float(cfg.delta)
    sol = solve_reduced(rs.potential, cfg.k, tuple(cfg.bracket), cfg.convention)
    try:
        return sol.delta()
    except ParameterError:
        raise ConfigError(
            f"delta = exp(-d k^2) = 10^{sol.log10_delta:.6g} underflows; set [run] delta to an explicit value"
        ) from None


def ansatz(cfg: RunConfig, rs: Optional[Resolved] = None) -> AnsatzConfig:
    rs = rs or resolve(cfg)
    delta = resolve_delta(cfg, rs)
    return AnsatzConfig(cfg.k, cfg.m, cfg.beta, delta, rs.rho, CutoffProfile(rs.r0, rs.sigma),
                        lattice_mode=cfg.lattice_mode, potential=rs.potential)


def plan(cfg: RunConfig, a: AnsatzConfig, workers: int, eps: Optional[float] = None) -> quad.PeakedIntegrationPlan:
    eps = cfg.quadrature.eps if eps is None else eps
    p = quad.plan_for_ansatz(a, eps, workers=workers)
    return p if cfg.quadrature.resolution == 1.0 else p.scaled(cfg.quadrature.resolution)


# -- subcommands --------------------------------------------------------------


def cmd_reduced_solve(cfg: RunConfig, workers: int) -> Outcome:
    V = from_spec(cfg.potential)
    sol = solve_reduced(V, cfg.k, tuple(cfg.bracket), cfg.convention)
    other = "paper-bare" if cfg.convention == "measured" else "measured"
    alt = solve_reduced(V, cfg.k, tuple(cfg.bracket), other)
    out = sol.to_dict()
    out["balance_residual"] = sol.balance_residual(V)
    out["delta"] = math.exp(sol.log_delta) if sol.log_delta >= math.log(1e-300) else None
    out["alternate_convention"] = {"convention": other, "d": alt.d, "log10_delta": alt.log10_delta}
    out["potential"] = cfg.potential
    return Outcome({"reduced_solution.json": out})


def cmd_residual(cfg: RunConfig, workers: int) -> Outcome:
    a = ansatz(cfg)
    rep = res.error_norm_report(a, plan(cfg, a, workers), cfg.quadrature.sup_density)
    return Outcome({"residual.json": rep.to_dict()})


def cmd_constants(cfg: RunConfig, workers: int) -> Outcome:
    out = ex.constants()
    out["conventions"] = {c: convention_constants(c) for c in ("measured", "paper-bare")}
    return Outcome({"constants.json": out})


def cmd_pohozaev(cfg: RunConfig, workers: int) -> Outcome:
    rs = resolve(cfg)
    a = ansatz(cfg, rs)
    flags = cfg.pohozaev
    p = plan(cfg, a, workers)
    conv = convention_constants(cfg.convention)
    reports, unconverged = {}, []

    def keep(r: ex.ExpansionReport):
        reports[r.name] = r.to_dict()
        if r.unconverged:
            unconverged.append(r.name)

    if flags.m1:
        keep(ex.m1_integral(a, p, conv["a_eff"]))
    if flags.m2:
        keep(ex.m2_integral(a, p, conv["b"], decompose=flags.decompose_m2))
    if flags.delta:
        keep(ex.pohozaev_delta(a, p, conv["a_eff"], conv["b"]))
    if flags.domain:
        keep(ex.pohozaev_domain(a, cfg.quadrature.eps, plan(cfg, a, workers), conv["a_eff"]))
    if flags.symmetry:
        reports["symmetry_identity"] = ex.symmetry_identity(a, cfg.quadrature.eps, p).to_dict()
    return Outcome({"pohozaev.json": {"reports": reports, "convention": cfg.convention}}, unconverged=unconverged)


def _negative(name: str, inner: ver.CheckResult) -> ver.CheckResult:
    """A control passes when the wrapped check fails."""
    return ver.CheckResult(f"negative_control:{name}", not inner.passed, inner.measured, inner.threshold,
                           inner.seed, inner.samples, {"wrapped": inner.name, **inner.details})


def lemma_checks(cfg: RunConfig) -> list:
    """Zero-argument callables, one per check, in report order."""
    v, seed = cfg.verify, cfg.seed
    a1, a2, al = v.app1_alphas
    W = ansatz_W(AnsatzConfig.make(8, 2, 1.0, 1e-2, 1.0, 1.0))
    broken = AnsatzConfig.make(8, 2, 1.0, 1e-2, 1.0, 1.0)
    shifted = broken.centers.copy()
    shifted[0] *= 1.05
    bs = _BubbleSum(broken, shifted)

    def broken_value(b, o):
        _, _, U = bs.bubbles(b, o)
        return U.sum(axis=1)

    broken_W = ScalarField4(broken_value, None, None, frozenset(), None, None, "W[one peak displaced]")
    E = res.error_term(AnsatzConfig.make(8, 2, 1.0, 1e-2, 1.0, 1.0))
    return [
        lambda: ver.check_lemma_app1(a1, a2, al, v.n_samples, seed),
        lambda: _negative("lemma_app1[alpha>min]", ver.check_lemma_app1(1.0, 1.0, 2.0, v.n_samples, seed, enforce_precondition=False)),
        lambda: ver.check_lemma_app2(v.app2_alpha, v.app2_radii, seed),
        lambda: ver.check_interaction_asymptotics(v.asymptotic_alphas),
        lambda: ver.check_bubble_and_eigen(seed=seed),
        lambda: ver.check_symmetry_class(W, 8, seed=seed),
        lambda: ver.check_symmetry_class(E, 8, seed=seed),
        lambda: _negative("symmetry_class[displaced]", ver.check_symmetry_class(broken_W, 8, seed=seed)),
    ]


def cmd_verify_lemmas(cfg: RunConfig, workers: int) -> Outcome:
    checks = lemma_checks(cfg)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda f: f(), checks))
    else:
        results = [f() for f in checks]
    return Outcome({"verify_lemmas.json": [r.to_dict() for r in results]})


def slice_points(extent: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid on the plane x3 = x1, x4 = x2, parametrised by (s, t) = (x1, x2)."""
    s = np.linspace(-extent, extent, n)
    S, T = np.meshgrid(s, s, indexing="ij")
    st = np.stack([S.ravel(), T.ravel()], axis=1)
    return st, np.concatenate([st, st], axis=1)


def ring_points(rho: float, k: int, per_gap: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """The circle of q = 1 peaks inside the slice, sampled including every peak angle."""
    theta = 2 * np.pi * np.arange(k * per_gap) / (k * per_gap)
    r = rho / math.sqrt(2.0)
    st = r * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return theta, np.concatenate([st, st], axis=1)


def _field_columns(cfg: RunConfig, a: AnsatzConfig):
    W = ansatz_W(a)
    cols = []
    if "W" in cfg.export.fields:
        cols.append(("W", W))
    if "E" in cfg.export.fields:
        cols.append(("E", res.error_term(a)))
    if "components" in cfg.export.fields:
        cols += [(f"u_{q}", f) for q, f in zip(range(2, a.m + 1), res.components(W, a))]
    return cols


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def cmd_export_field(cfg: RunConfig, workers: int) -> Outcome:
    a = ansatz(cfg)
    cols = _field_columns(cfg, a)
    st, x = slice_points(cfg.export.extent, cfg.export.n)
    vals = [f(x) for _, f in cols]
    grid = _csv(["s", "t", "x1", "x2", "x3", "x4", *[n for n, _ in cols]], np.column_stack([st, x, *vals]))
    theta, xr = ring_points(a.rho, a.k)
    rvals = [f(xr) for _, f in cols]
    ring = _csv(["theta", "x1", "x2", "x3", "x4", *[n for n, _ in cols]], np.column_stack([theta, xr, *rvals]))
    peaks = 2 * np.pi * np.arange(a.k) / a.k
    meta = {"slice": "x3 = x1, x4 = x2", "columns": [n for n, _ in cols], "peak_angles": peaks,
            "ring_radius_in_slice": a.rho / math.sqrt(2.0), "delta": a.delta, "rho": a.rho, "k": a.k, "m": a.m}
    return Outcome({"export_field.json": meta}, {"field_slice.csv": grid, "field_ring.csv": ring, "lattice.csv": a.lattice.to_csv()})


def cmd_link_check(cfg: RunConfig, workers: int) -> Outcome:
    rho = resolve(cfg).rho
    circles = [geo.great_circle(q, cfg.m, rho) for q in range(1, cfg.m + 1)]
    pairs = []
    for p in range(cfg.m):
        for q in range(p + 1, cfg.m):
            raw = geo.linking_value(circles[p], circles[q])
            pairs.append({"p": p + 1, "q": q + 1, "linking_number": int(round(raw)), "raw": raw,
                          "deviation": abs(raw - round(raw))})
    table = geo.linking_table(cfg.m, rho)
    rows = [[p + 1, q + 1, table[p][q] if table[p][q] is not None else 0] for p in range(cfg.m) for q in range(cfg.m)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "q", "linking_number"])
    w.writerows(rows)
    return Outcome({"link_check.json": {"m": cfg.m, "rho": rho, "table": table, "pairs": pairs}}, {"link_table.csv": buf.getvalue()})


COMMANDS = {
    "reduced-solve": cmd_reduced_solve,
    "residual": cmd_residual,
    "constants": cmd_constants,
    "pohozaev": cmd_pohozaev,
    "verify-lemmas": cmd_verify_lemmas,
    "export-field": cmd_export_field,
    "link-check": cmd_link_check,
}


# -- orchestration ------------------------------------------------------------


def versions() -> dict:
    return {"segbubbles": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def manifest(subcommand: str, cfg: RunConfig, outcome: Outcome) -> dict:
    return {
        "subcommand": subcommand,
        "config": to_dict(cfg),
        "config_text": to_text(cfg),
        "versions": versions(),
        "seeds": {"seed": cfg.seed},
        "outputs": sorted([*outcome.reports, *outcome.tables]),
        "unconverged": outcome.unconverged,
    }


def run(subcommand: str, cfg: RunConfig, out_dir: Optional[Path] = None, workers: int = 1) -> Outcome:
    if subcommand not in COMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}; expected one of {list(SUBCOMMANDS)}")
    out_dir = Path(cfg.output_dir if out_dir is None else out_dir)
    outcome = COMMANDS[subcommand](cfg, workers)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, obj in outcome.reports.items():
        (out_dir / name).write_text(dumps(obj))
    for name, text in outcome.tables.items():
        (out_dir / name).write_text(text)
    (out_dir / "manifest.json").write_text(dumps(manifest(subcommand, cfg, outcome)))
    (out_dir / "config.ini").write_text(to_text(cfg))
    return outcome


def _parse_overrides(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="segbubbles", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", "-c", help="sectioned key=value config file (defaults apply when omitted)")
    ap.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override one config value")
    ap.add_argument("--out", help="output directory (overrides [run] output_dir)")
    ap.add_argument("--workers", type=int, default=1, help="worker threads for quadrature and checks")
    ap.add_argument("--strict", action="store_true", help="exit 3 if any report is flagged unconverged")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = cfg.with_overrides(_parse_overrides(args.set)) if args.set else cfg
        if args.workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {args.workers}")
        outcome = run(args.subcommand, cfg, Path(args.out) if args.out else None, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SegBubblesError as exc:
        print(f"{args.subcommand} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if outcome.unconverged:
        print(f"unconverged: {', '.join(outcome.unconverged)}", file=sys.stderr)
        if args.strict:
            return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

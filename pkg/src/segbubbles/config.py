"""Run configuration: a sectioned ``key = value`` text file parsed with configparser.

Unknown sections and keys are rejected, every value is validated, and the
parsed config can be echoed back to text that reproduces the run.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

from .errors import ConfigError
from .geometry import LatticeMode

SECTIONS = ("run", "potential", "quadrature", "pohozaev", "verify", "export")


@dataclass(frozen=True)
class QuadratureSettings:
    resolution: float = 1.0  # multiplies every node count of the default plan
    sup_density: float = 1.0
    eps: Optional[float] = None  # half-width of the integration annulus; default 3 sigma


@dataclass(frozen=True)
class PohozaevSettings:
    m1: bool = True
    m2: bool = True
    delta: bool = True
    domain: bool = True
    symmetry: bool = True
    decompose_m2: bool = False


@dataclass(frozen=True)
class VerifySettings:
    n_samples: int = 10_000
    app1_alphas: tuple = (2.0, 2.0, 1.0)
    app2_alpha: float = 1.0
    app2_radii: int = 16
    asymptotic_alphas: tuple = (2.0, 1.5, 1.0, 0.5)


@dataclass(frozen=True)
class ExportSettings:
    fields: tuple = ("W", "E", "components")
    extent: float = 1.5  # slice coordinates run over [-extent, extent]^2
    n: int = 121


@dataclass(frozen=True)
class RunConfig:
    k: int = 8
    m: int = 2
    beta: float = 1.0
    delta: Union[float, str] = 1e-3  # number or "from-reduced"
    rho: Union[float, str] = "at-r0"  # number or "at-r0"
    sigma: Optional[float] = None  # default r0 / 10
    lattice_mode: str = "S"
    convention: str = "measured"
    bracket: tuple = (0.5, 3.0)
    output_dir: str = "out"
    seed: int = 0
    potential: dict = field(default_factory=lambda: {"kind": "gaussian-bump"})
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    pohozaev: PohozaevSettings = field(default_factory=PohozaevSettings)
    verify: VerifySettings = field(default_factory=VerifySettings)
    export: ExportSettings = field(default_factory=ExportSettings)

    def __post_init__(self):
        _validate(self)

    def with_overrides(self, overrides: dict) -> "RunConfig":
        """Apply ``{"section.key": "text"}`` overrides with the same parsing as the file."""
        text = to_text(self)
        cp = _parser()
        cp.read_string(text)
        for dotted, value in overrides.items():
            if "." not in dotted:
                raise ConfigError(f"override {dotted!r} must look like section.key=value")
            sec, key = dotted.split(".", 1)
            if sec not in SECTIONS:
                raise ConfigError(f"override {dotted!r}: unknown section {sec!r}")
            if sec == "potential" and key == "kind" and value != cp.get("potential", "kind", fallback=None):
                cp.remove_section("potential")
                cp.add_section("potential")
            if not cp.has_section(sec):
                cp.add_section(sec)
            cp.set(sec, key, str(value))
        return _from_parser(cp, "<overrides>")


# -- parsing ------------------------------------------------------------------


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    return cp


def _line_of(path_text: str, section: str, key: str) -> Optional[int]:
    current = None
    for n, line in enumerate(path_text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and "=" in s and s.split("=", 1)[0].strip() == key:
            return n
    return None


class _Reader:
    def __init__(self, cp, source: str, text: str = ""):
        self.cp, self.source, self.text = cp, source, text

    def where(self, sec, key):
        line = _line_of(self.text, sec, key)
        return f"{self.source}:{line}" if line else self.source

    def fail(self, sec, key, msg):
        raise ConfigError(f"{self.where(sec, key)}: [{sec}] {key}: {msg}")

    def get(self, sec, key, conv, default):
        if not self.cp.has_option(sec, key):
            return default
        raw = self.cp.get(sec, key).strip()
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            self.fail(sec, key, f"cannot parse {raw!r} ({exc})")


def _bool(s: str) -> bool:
    t = s.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _opt_float(s: str) -> Optional[float]:
    return None if s.lower() in ("", "none", "default") else float(s)


def _floats(s: str) -> tuple:
    return tuple(float(t) for t in s.replace(",", " ").split())


def _words(s: str) -> tuple:
    return tuple(t for t in s.replace(",", " ").split())


def _float_or(word: str):
    def conv(s: str):
        return word if s == word else float(s)
    return conv


_KEYS = {
    "run": {
        "k": int, "m": int, "beta": float, "delta": _float_or("from-reduced"), "rho": _float_or("at-r0"),
        "sigma": _opt_float, "lattice_mode": str, "convention": str, "bracket": _floats,
        "output_dir": str, "seed": int,
    },
    "quadrature": {"resolution": float, "sup_density": float, "eps": _opt_float},
    "pohozaev": {f.name: _bool for f in fields(PohozaevSettings)},
    "verify": {"n_samples": int, "app1_alphas": _floats, "app2_alpha": float, "app2_radii": int, "asymptotic_alphas": _floats},
    "export": {"fields": _words, "extent": float, "n": int},
}

_POTENTIAL_KEYS = {
    "gaussian-bump": {"amplitude", "center", "width"},
    "power-window": {"amplitude", "power", "width"},
    "constant": {"value"},
    "inverse-r": {"amplitude"},
    "tabulated-spline": {"radii", "values"},
}


def _from_parser(cp: configparser.ConfigParser, source: str, text: str = "") -> RunConfig:
    rd = _Reader(cp, source, text)
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"{source}: unknown section [{sec}]; expected one of {list(SECTIONS)}")
    for sec, keys in _KEYS.items():
        if cp.has_section(sec):
            for key in cp.options(sec):
                if key not in keys:
                    rd.fail(sec, key, f"unknown key; expected one of {sorted(keys)}")

    kw = {}
    for key, conv in _KEYS["run"].items():
        v = rd.get("run", key, conv, None)
        if v is not None:
            kw[key] = v
    subs = {"quadrature": QuadratureSettings, "pohozaev": PohozaevSettings, "verify": VerifySettings, "export": ExportSettings}
    for sec, cls in subs.items():
        vals = {}
        for key, conv in _KEYS[sec].items():
            v = rd.get(sec, key, conv, None)
            if v is not None:
                vals[key] = v
        kw[sec] = cls(**vals)

    if cp.has_section("potential"):
        pot = {}
        kind = cp.get("potential", "kind", fallback=None)
        if kind is None:
            rd.fail("potential", "kind", "missing")
        if kind not in _POTENTIAL_KEYS:
            rd.fail("potential", "kind", f"unknown kind {kind!r}; expected one of {sorted(_POTENTIAL_KEYS)}")
        pot["kind"] = kind
        for key in cp.options("potential"):
            if key == "kind":
                continue
            if key not in _POTENTIAL_KEYS[kind]:
                rd.fail("potential", key, f"unknown key for {kind}; expected one of {sorted(_POTENTIAL_KEYS[kind])}")
            conv = _floats if kind == "tabulated-spline" else float
            pot[key] = rd.get("potential", key, conv, None)
        kw["potential"] = pot

    try:
        return RunConfig(**kw)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return _from_parser(cp, source, text)


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))


# -- validation ---------------------------------------------------------------


def _validate(c: RunConfig) -> None:
    def need(ok, msg):
        if not ok:
            raise ConfigError(msg)

    need(c.k >= 2 and c.k % 2 == 0, f"[run] k must be a positive even integer, got {c.k}")
    need(c.m >= 1, f"[run] m must be >= 1, got {c.m}")
    need(math.isfinite(c.beta), "[run] beta must be finite")
    if isinstance(c.delta, str):
        need(c.delta == "from-reduced", f"[run] delta must be a number or 'from-reduced', got {c.delta!r}")
    else:
        need(0 < c.delta < 1, f"[run] delta must lie in (0, 1), got {c.delta}")
    if isinstance(c.rho, str):
        need(c.rho == "at-r0", f"[run] rho must be a number or 'at-r0', got {c.rho!r}")
    else:
        need(c.rho > 0, f"[run] rho must be positive, got {c.rho}")
    need(c.sigma is None or c.sigma > 0, f"[run] sigma must be positive, got {c.sigma}")
    need(c.lattice_mode in {m.value for m in LatticeMode}, f"[run] lattice_mode must be S or T, got {c.lattice_mode!r}")
    need(c.convention in ("measured", "paper-bare"), f"[run] convention must be 'measured' or 'paper-bare', got {c.convention!r}")
    need(len(c.bracket) == 2 and 0 < c.bracket[0] < c.bracket[1], f"[run] bracket must be 'lo, hi' with 0 < lo < hi, got {c.bracket}")
    need(c.seed >= 0, f"[run] seed must be non-negative, got {c.seed}")
    q = c.quadrature
    need(q.resolution > 0, f"[quadrature] resolution must be positive, got {q.resolution}")
    need(q.sup_density > 0, f"[quadrature] sup_density must be positive, got {q.sup_density}")
    need(q.eps is None or q.eps > 0, f"[quadrature] eps must be positive, got {q.eps}")
    v = c.verify
    need(v.n_samples >= 10, f"[verify] n_samples must be >= 10, got {v.n_samples}")
    need(len(v.app1_alphas) == 3, f"[verify] app1_alphas must be 'alpha1, alpha2, alpha', got {v.app1_alphas}")
    need(0 < v.app2_alpha < 2, f"[verify] app2_alpha must lie in (0, 2), got {v.app2_alpha}")
    need(v.app2_radii >= 2, f"[verify] app2_radii must be >= 2, got {v.app2_radii}")
    need(len(v.asymptotic_alphas) > 0 and all(a > 0 for a in v.asymptotic_alphas), "[verify] asymptotic_alphas must be positive")
    e = c.export
    need(set(e.fields) <= {"W", "E", "components"} and e.fields, f"[export] fields must be drawn from W, E, components, got {e.fields}")
    need(e.extent > 0 and e.n >= 2, "[export] need extent > 0 and n >= 2")
    need("kind" in c.potential, "[potential] kind is required")


# -- echo ---------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(_fmt(t) for t in v)
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "none"
    return str(v)


def to_text(c: RunConfig) -> str:
    """Config as text; parsing it gives back an equal RunConfig."""
    lines = ["[run]"]
    for f in fields(RunConfig):
        if f.name in SECTIONS:
            continue
        lines.append(f"{f.name} = {_fmt(getattr(c, f.name))}")
    lines += ["", "[potential]"]
    pot = c.potential
    lines.append(f"kind = {pot['kind']}")
    for k in sorted(pot):
        if k != "kind":
            lines.append(f"{k} = {_fmt(tuple(pot[k]) if isinstance(pot[k], (list, tuple)) else pot[k])}")
    for sec in ("quadrature", "pohozaev", "verify", "export"):
        lines += ["", f"[{sec}]"]
        for k, v in asdict(getattr(c, sec)).items():
            lines.append(f"{k} = {_fmt(tuple(v) if isinstance(v, list) else v)}")
    return "\n".join(lines) + "\n"


def to_dict(c: RunConfig) -> dict:
    d = asdict(c)
    d["potential"] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in c.potential.items()}
    return d


__all__ = ["RunConfig", "QuadratureSettings", "PohozaevSettings", "VerifySettings", "ExportSettings",
           "parse_config", "load_config", "to_text", "to_dict"]

"""
Problem configuration files.

INI-style text read with :mod:`configparser`.  Sections and keys::

    [problem]      dim, V, A, box (half width) | lower + upper, n | h, scheme
    [solver]       shifts, k, m, tol, max_restarts, polish, n_quad, richardson
    [certificate]  gamma1 (ladder), gamma2_cap, or fixed_gamma1 + fixed_gamma2
    [agmon]        eps, x0, enlarge
    [truncation]   radii, reference, h, k
    [verify]       samples, margin, deltas, mu
    [probe]        count, gap_min, gap_max
    [run]          seed

Expressions are quoted strings; lists are comma separated.  Validation errors
name the offending line.
"""

from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import asdict, dataclass, field

from . import expr as ex
from .assembly import SCHEMES
from .assumptions import DEFAULT_GAMMA1_LADDER, DEFAULT_GAMMA2_CAP

__all__ = ["ConfigError", "ProblemConfig", "load_config", "parse_config"]

SECTIONS = {
    "problem": {"dim", "v", "a", "box", "lower", "upper", "n", "h", "scheme"},
    "solver": {"shifts", "k", "m", "tol", "max_restarts", "polish", "n_quad", "richardson"},
    "certificate": {"gamma1", "gamma2_cap", "fixed_gamma1", "fixed_gamma2"},
    "agmon": {"eps", "x0", "enlarge"},
    "truncation": {"radii", "reference", "h", "k"},
    "verify": {"samples", "margin", "deltas", "mu"},
    "probe": {"count", "gap_min", "gap_max"},
    "run": {"seed"},
}


class ConfigError(ValueError):
    def __init__(self, message, line=None, path=None):
        where = f"{path or '<config>'}:{line}: " if line else f"{path or '<config>'}: "
        super().__init__(where + message)
        self.line = line


@dataclass
class ProblemConfig:
    dim: int
    V: str
    A: list | None
    lower: list
    upper: list
    n: list
    scheme: str | None = None
    shifts: list = field(default_factory=lambda: [0j])
    k: int = 4
    m: int | None = None
    tol: float = 1e-8
    max_restarts: int = 60
    polish: int = 1
    n_quad: int = 32
    richardson: bool = False
    gamma1: list = field(default_factory=lambda: list(DEFAULT_GAMMA1_LADDER))
    gamma2_cap: float = DEFAULT_GAMMA2_CAP
    fixed_gamma1: float | None = None
    fixed_gamma2: float | None = None
    eps: float = 0.1
    x0: list | None = None
    enlarge: float = 1.2
    radii: list | None = None
    reference: float | None = None
    trunc_h: float | None = None
    trunc_k: int = 3
    samples: int = 100
    margin: float = 0.1
    deltas: list = field(default_factory=lambda: [0.1, 1.0, 10.0])
    mu: complex = 0j
    probe_count: int = 20
    gap_min: float = 1.0
    gap_max: float = 100.0
    seed: int = 0
    text: str = field(default="", repr=False)

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("text")
        d["shifts"] = [[z.real, z.imag] for z in self.shifts]
        d["mu"] = [self.mu.real, self.mu.imag]
        return d


def _line_numbers(text):
    """Map ``(section, key)`` to its 1-based line number."""
    out = {}
    section = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            out[(section, None)] = no
            continue
        m = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\s*[=:]", line)
        if m and section is not None:
            out[(section, m.group(1).lower())] = no
    return out


def _unquote(s):
    s = s.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        return s[1:-1]
    return s


def _split(s):
    """Comma-separated items, ignoring commas inside quotes."""
    items, cur, quote = [], "", None
    for ch in s:
        if quote:
            cur += ch
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
            cur += ch
        elif ch == ",":
            items.append(cur.strip())
            cur = ""
        else:
            cur += ch
    if cur.strip():
        items.append(cur.strip())
    return items


def _boolean(s):
    v = s.strip().lower()
    if v in ("1", "yes", "true", "on"):
        return True
    if v in ("0", "no", "false", "off"):
        return False
    raise ValueError("expected yes or no")


def parse_config(text: str, path=None) -> ProblemConfig:
    lines = _line_numbers(text)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=str(path or "<config>"))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], line, path) from None

    def fail(sec, key, msg):
        raise ConfigError(msg, lines.get((sec, key)) or lines.get((sec, None)), path)

    for sec in cp.sections():
        if sec.lower() not in SECTIONS:
            fail(sec.lower(), None, f"unknown section [{sec}]")
        for key in cp[sec]:
            if key not in SECTIONS[sec.lower()]:
                fail(sec.lower(), key, f"unknown key {key!r} in [{sec}]")
    if not cp.has_section("problem"):
        raise ConfigError("missing [problem] section", None, path)

    def get(sec, key, conv, default=None, required=False):
        if not cp.has_option(sec, key):
            if required:
                fail(sec, None, f"missing required key {key!r} in [{sec}]")
            return default
        raw = cp.get(sec, key)
        try:
            return conv(raw)
        except (ValueError, ex.ExprError) as exc:
            fail(sec, key, f"bad value for {key!r}: {exc}")

    floats = lambda s: [float(_unquote(t)) for t in _split(s)]
    cplx = lambda s: [complex(_unquote(t).replace(" ", "").replace("i", "j")) for t in _split(s)]

    def posint(s):
        v = int(s)
        if v <= 0:
            raise ValueError("must be a positive integer")
        return v

    def posfloat(s):
        v = float(s)
        if not v > 0:
            raise ValueError("must be positive")
        return v

    dim = get("problem", "dim", int, required=True)
    if dim not in (1, 2):
        fail("problem", "dim", "dim must be 1 or 2")
    V = get("problem", "v", _unquote, required=True)
    get("problem", "v", lambda s: ex.parse(_unquote(s), dim))
    A = get("problem", "a", lambda s: [_unquote(t) for t in _split(s)])
    if A is not None:
        if len(A) != dim:
            fail("problem", "a", f"A needs {dim} components, got {len(A)}")
        for comp in A:
            try:
                ex.parse(comp, dim)
            except ex.ExprError as exc:
                fail("problem", "a", f"bad value for 'a': {exc}")
    box = get("problem", "box", posfloat)
    lower = get("problem", "lower", floats)
    upper = get("problem", "upper", floats)
    if box is not None:
        if lower is not None or upper is not None:
            fail("problem", "box", "give either box or lower/upper, not both")
        lower, upper = [-box] * dim, [box] * dim
    if lower is None or upper is None:
        fail("problem", None, "the box needs 'box' or both 'lower' and 'upper'")
    if len(lower) != dim or len(upper) != dim:
        fail("problem", "lower", f"lower and upper need {dim} values")
    if any(b <= a for a, b in zip(lower, upper)):
        fail("problem", "upper", "upper must exceed lower on every axis")
    n = get("problem", "n", lambda s: [int(t) for t in _split(s)])
    h = get("problem", "h", posfloat)
    if n is None and h is None:
        fail("problem", None, "give 'n' (interior nodes per axis) or 'h'")
    if n is None:
        n = [int(round((b - a) / h)) - 1 for a, b in zip(lower, upper)]
    if len(n) == 1 and dim == 2:
        n = n * 2
    if len(n) != dim or any(k < 3 for k in n):
        fail("problem", "n", "n needs one value per axis, each at least 3")
    scheme = get("problem", "scheme", str.strip)
    if scheme is not None and scheme not in SCHEMES:
        fail("problem", "scheme", f"scheme must be one of {SCHEMES}")

    cfg = ProblemConfig(dim=dim, V=V, A=A, lower=lower, upper=upper, n=n, scheme=scheme, text=text)
    cfg.shifts = get("solver", "shifts", cplx, cfg.shifts)
    cfg.k = get("solver", "k", posint, cfg.k)
    cfg.m = get("solver", "m", posint, cfg.m)
    cfg.tol = get("solver", "tol", posfloat, cfg.tol)
    cfg.max_restarts = get("solver", "max_restarts", int, cfg.max_restarts)
    cfg.polish = get("solver", "polish", int, cfg.polish)
    cfg.n_quad = get("solver", "n_quad", posint, cfg.n_quad)
    cfg.richardson = get("solver", "richardson", _boolean, cfg.richardson)
    if cfg.m is not None and cfg.m < cfg.k:
        fail("solver", "m", "m must be at least k")

    cfg.gamma1 = get("certificate", "gamma1", floats, cfg.gamma1)
    if any(g <= 0 for g in cfg.gamma1) or sorted(cfg.gamma1) != cfg.gamma1:
        fail("certificate", "gamma1", "gamma1 ladder must be positive and ascending")
    cfg.gamma2_cap = get("certificate", "gamma2_cap", float, cfg.gamma2_cap)
    cfg.fixed_gamma1 = get("certificate", "fixed_gamma1", posfloat)
    cfg.fixed_gamma2 = get("certificate", "fixed_gamma2", float)
    if (cfg.fixed_gamma1 is None) != (cfg.fixed_gamma2 is None):
        fail("certificate", "fixed_gamma1" if cfg.fixed_gamma1 is None else "fixed_gamma2",
             "fixed_gamma1 and fixed_gamma2 go together")

    cfg.eps = get("agmon", "eps", float, cfg.eps)
    if not 0 < cfg.eps < 1:
        fail("agmon", "eps", "eps must lie in (0, 1)")
    cfg.x0 = get("agmon", "x0", floats)
    if cfg.x0 is not None and len(cfg.x0) != dim:
        fail("agmon", "x0", f"x0 needs {dim} coordinates")
    cfg.enlarge = get("agmon", "enlarge", float, cfg.enlarge)
    if cfg.enlarge <= 1:
        fail("agmon", "enlarge", "enlarge must exceed 1")

    cfg.radii = get("truncation", "radii", floats)
    if cfg.radii is not None:
        if len(cfg.radii) < 3:
            fail("truncation", "radii", "need at least 3 radii")
        if any(b <= a for a, b in zip(cfg.radii, cfg.radii[1:])):
            fail("truncation", "radii", "radii must be strictly increasing")
    cfg.reference = get("truncation", "reference", posfloat)
    if cfg.reference is not None and cfg.radii is not None and cfg.reference < cfg.radii[-1]:
        fail("truncation", "reference", "reference radius must be at least the largest radius")
    cfg.trunc_h = get("truncation", "h", posfloat)
    cfg.trunc_k = get("truncation", "k", posint, cfg.trunc_k)

    cfg.samples = get("verify", "samples", posint, cfg.samples)
    cfg.margin = get("verify", "margin", float, cfg.margin)
    if not 0 < cfg.margin < 0.5:
        fail("verify", "margin", "margin must lie in (0, 0.5)")
    cfg.deltas = get("verify", "deltas", floats, cfg.deltas)
    if any(d <= 0 for d in cfg.deltas):
        fail("verify", "deltas", "deltas must be positive")
    cfg.mu = get("verify", "mu", lambda s: cplx(s)[0], cfg.mu)

    cfg.probe_count = get("probe", "count", posint, cfg.probe_count)
    cfg.gap_min = get("probe", "gap_min", posfloat, cfg.gap_min)
    cfg.gap_max = get("probe", "gap_max", posfloat, cfg.gap_max)
    if cfg.gap_max < cfg.gap_min:
        fail("probe", "gap_max", "gap_max must be at least gap_min")
    cfg.seed = get("run", "seed", int, cfg.seed)
    return cfg


def load_config(path) -> ProblemConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, path) from None
    return parse_config(text, path)

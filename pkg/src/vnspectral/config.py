"""Experiment configuration.

Configurations are INI files (:mod:`configparser`), or the name of a
built-in preset.  Grammar::

    [section]
    key = value            ; '#' and ';' start comments

Lists are comma separated.  Field values (potentials, endomorphisms,
weights) are expressions in ``x`` built from numbers, ``+ - * / **``, the
functions ``exp sqrt abs sin cos cosh`` and the generators below;
hyphenated generator names may be written with ``-`` or ``_``.

=====================================  ====================================
generator                              value at ``x``
=====================================  ====================================
``constant(c)``                        ``c``
``tanh(scale=1, width=1, center=0)``   ``scale * tanh((x - center) / width)``
``tanh-wall(height=2, offset=-1,       ``height * tanh(x / width)**2 + offset``
width=1)``
``gaussian-well(depth=1, width=1,      ``level - depth * exp(-x**2 / (2 width**2))``
level=0)``
``gaussian-bump(height=0.5, width=1,   ``level + height * exp(-x**2 / (2 width**2))``
level=1)``
``harmonic(k=1, center=0)``            ``k * (x - center)**2``
``inverse-square(scale=1)``            ``scale / (1 + x**2)``
``table("file")``                      one value per site, read from a text file
``matrix-diag(e1, ..., em)``           ``diag(e1(x), ..., em(x))`` (top level only)
=====================================  ====================================

Recognized sections and keys are listed in :data:`SCHEMA`; anything else is
rejected with a :class:`ConfigError` naming the key.
"""

from __future__ import annotations

import ast
import configparser
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .algebra import (
    FiniteGroup,
    GroupAlgebra,
    TracedAlgebra,
    cyclic_group,
    dihedral_group,
    group_algebra,
    load_group_table,
    symmetric_group,
)
from .callias import Potential, SiteField
from .covers import Z, CoverSpec, NeighbourOperator, cycle_callias, cycle_laplacian
from .lattice import LatticeModel

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SCHEMA",
    "PRESETS",
    "DEFAULT_PRESET",
    "load_config",
    "evaluate_field",
    "parse_group",
    "build_model",
    "build_algebra",
    "build_field",
    "build_potential",
    "build_cover",
]


class ConfigError(ValueError):
    """A malformed configuration; ``key`` is ``section.key`` or a section name."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key '{key}': {message}")


SCHEMA: dict[str, set[str]] = {
    "experiment": {"name", "seed"},
    "model": {"a", "b", "h", "compact", "mu", "metric", "r"},
    "algebra": {"blocks", "group"},
    "potential": {"v", "floor", "floor_region", "q"},
    "endomorphism": {"f", "f_control"},
    "sweep": {"lambdas", "lambda_min", "lambda_max", "lambda_points", "lengths", "ts", "perturbations",
              "amplitude", "support", "knots", "quadrature", "eigenvectors", "cutoffs", "lambda_probe",
              "sections"},
    "cover": {"deck", "sites", "cocycle", "closed", "operator", "weights", "f", "h", "length"},
    "tolerances": {"tol_ker", "epsilon", "index", "stabilize", "correspondence", "residual", "gap"},
}
# per-block endomorphisms: f.0, f.1, ...
_BLOCK_KEY = re.compile(r"^f\.(\d+)$")

PRESETS: dict[str, str] = {
    "tanh_scalar": """
        [experiment]
        name = tanh_scalar
        [model]
        a = -20
        b = 20
        h = 0.05
        compact = -6, 6
        [endomorphism]
        f = tanh()
        [sweep]
        lambda_min = 0
        lambda_max = 4
        lambda_points = 81
        [tolerances]
        epsilon = 0.5
        index = 1e-6
    """,
    "half_index": """
        [experiment]
        name = half_index
        [model]
        a = -20
        b = 20
        h = 0.05
        compact = -6, 6
        [algebra]
        blocks = 1:1/2, 1:1/2
        [endomorphism]
        f.0 = tanh()
        f.1 = constant(1)
        [sweep]
        lambda_min = 0
        lambda_max = 4
        lambda_points = 81
        [tolerances]
        epsilon = 0.5
        index = 1e-6
    """,
    "m2_index": """
        [experiment]
        name = m2_index
        [model]
        a = -20
        b = 20
        h = 0.05
        compact = -6, 6
        [algebra]
        blocks = 2:1/2
        [endomorphism]
        f = tanh()
        [tolerances]
        epsilon = 0.5
    """,
    "tanh_stability": """
        [experiment]
        name = tanh_stability
        seed = 20240611
        [model]
        a = -20
        b = 20
        h = 0.05
        compact = -6, 6
        [endomorphism]
        f = tanh()
        [sweep]
        ts = 0, 0.25, 0.5, 0.75, 1
        perturbations = 20
        amplitude = 3
        support = 5
        knots = 6
        [tolerances]
        epsilon = 0.1
        index = 1e-6
    """,
    "half_stability": """
        [experiment]
        name = half_stability
        seed = 7
        [model]
        a = -20
        b = 20
        h = 0.05
        compact = -6, 6
        [algebra]
        blocks = 1:1/2, 1:1/2
        [endomorphism]
        f.0 = tanh()
        f.1 = constant(1)
        [sweep]
        ts = 0, 0.5, 1
        perturbations = 4
        amplitude = 3
        support = 5
        knots = 6
        [tolerances]
        epsilon = 0.1
        index = 1e-6
    """,
    "tanh_wall": """
        [experiment]
        name = tanh_wall
        [model]
        h = 0.05
        [potential]
        v = tanh-wall(2, -1)
        floor = 0.9
        floor_region = -3, 3
        [sweep]
        lengths = 10, 15, 20, 25, 30
        lambdas = 0.5, 1.4
        lambda_min = -1
        lambda_max = 2
        lambda_points = 121
        [tolerances]
        stabilize = 1e-8
    """,
    "harmonic": """
        [experiment]
        name = harmonic
        seed = 1
        [model]
        a = -9.975
        b = 9.975
        h = 0.05
        compact = -3, 3
        [potential]
        v = harmonic()
        q = 1 + x**2
        [sweep]
        lambda_min = 0
        lambda_max = 12
        lambda_points = 121
        eigenvectors = 20
        sections = 8
        [tolerances]
        residual = 1e-10
    """,
    "fredholm_tanh": """
        [experiment]
        name = fredholm_tanh
        [model]
        h = 0.05
        compact = -6, 6
        [endomorphism]
        f = tanh()
        f_control = inverse-square()
        [sweep]
        lengths = 20, 25, 30, 35, 40
        lambda_probe = 0.25
        lambdas = 0.1, 1, 10
        lambda_min = 0
        lambda_max = 4
        lambda_points = 41
        [tolerances]
        gap = 0.5
    """,
    "z2_cover": """
        [experiment]
        name = z2_cover
        [cover]
        deck = Z/2
        sites = 12
        cocycle = twist
        operator = laplacian
        weights = 1 + 0.5*cos(x)
        [sweep]
        lambda_points = 50
        [tolerances]
        correspondence = 1e-10
    """,
    "z3_cover": """
        [experiment]
        name = z3_cover
        [cover]
        deck = Z/3
        sites = 12
        cocycle = twist
        operator = laplacian
        weights = 1 + 0.5*cos(x)
        [sweep]
        lambda_points = 50
        [tolerances]
        correspondence = 1e-10
    """,
    "z3_callias_cover": """
        [experiment]
        name = z3_callias_cover
        [cover]
        deck = Z/3
        closed = false
        cocycle = twist
        operator = callias
        f = 3*tanh()
        h = 0.1
        length = 10
        [sweep]
        lambda_points = 50
        [tolerances]
        correspondence = 1e-10
    """,
    "z_bloch": """
        [experiment]
        name = z_bloch
        [cover]
        deck = Z
        sites = 1
        cocycle = 1
        operator = laplacian
        [sweep]
        quadrature = 64, 256, 1024
        lambdas = 1
        [tolerances]
        correspondence = 1e-10
    """,
}

# preset used when a subcommand is run without --config
DEFAULT_PRESET = {
    "spectrum": "harmonic",
    "index": "tanh_scalar",
    "stability": "tanh_stability",
    "counting": "tanh_wall",
    "cover": "z3_cover",
    "fredholm": "fredholm_tanh",
    "diagnostic": "harmonic",
}


@dataclass
class ExperimentConfig:
    """Parsed configuration with typed, key-naming accessors."""

    source: str
    sections: dict[str, dict[str, str]]
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def name(self) -> str:
        return self.sections.get("experiment", {}).get("name", self.source)

    @property
    def seed(self) -> int:
        return self.get_int("experiment", "seed", 0)

    def set(self, section: str, key: str, value: str):
        _validate_key(section, key)
        self.sections.setdefault(section, {})[key] = value

    def has(self, section: str, key: str) -> bool:
        return key in self.sections.get(section, {})

    def raw(self, section: str, key: str, default=None) -> str | None:
        return self.sections.get(section, {}).get(key, default)

    def require(self, section: str, key: str) -> str:
        value = self.raw(section, key)
        if value is None:
            raise ConfigError(f"{section}.{key}", "required but missing")
        return value

    def _convert(self, section, key, default, fn, what):
        value = self.raw(section, key)
        if value is None:
            if default is _MISSING:
                raise ConfigError(f"{section}.{key}", "required but missing")
            return default
        try:
            return fn(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{section}.{key}", f"expected {what}, got {value!r}") from exc

    def get_float(self, section: str, key: str, default=None) -> float:
        default = _MISSING if default is None else default
        return self._convert(section, key, default, _number, "a number")

    def get_int(self, section: str, key: str, default=None) -> int:
        default = _MISSING if default is None else default
        return self._convert(section, key, default, int, "an integer")

    def get_bool(self, section: str, key: str, default: bool) -> bool:
        def parse(v):
            low = v.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(v)
        return self._convert(section, key, default, parse, "a boolean")

    def get_floats(self, section: str, key: str, default=None) -> list[float]:
        default = _MISSING if default is None else default
        out = self._convert(section, key, default, lambda v: [_number(p) for p in _split(v)], "a list of numbers")
        if not out:
            raise ConfigError(f"{section}.{key}", "list must be nonempty")
        return out

    def get_positive(self, section: str, key: str, default: float) -> float:
        value = self.get_float(section, key, default)
        if not value > 0:
            raise ConfigError(f"{section}.{key}", f"must be positive, got {value}")
        return value

    def lambda_grid(self, lo: float, hi: float, points: int = 50) -> np.ndarray:
        lo = self.get_float("sweep", "lambda_min", lo)
        hi = self.get_float("sweep", "lambda_max", hi)
        n = self.get_int("sweep", "lambda_points", points)
        if n < 1 or hi < lo:
            raise ConfigError("sweep.lambda_points", "grid must be nonempty with lambda_min <= lambda_max")
        return np.linspace(lo, hi, n)

    def to_dict(self) -> dict:
        return {s: dict(sorted(kv.items())) for s, kv in sorted(self.sections.items())}


_MISSING = object()


def _number(text: str) -> float:
    text = text.strip()
    if "/" in text:
        return float(Fraction(text))
    return float(text)


def _split(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _validate_key(section: str, key: str):
    if section not in SCHEMA:
        raise ConfigError(section, f"unknown section (expected one of {sorted(SCHEMA)})")
    if key not in SCHEMA[section] and not (section == "endomorphism" and _BLOCK_KEY.match(key)):
        raise ConfigError(f"{section}.{key}", "unknown key")


def load_config(spec: str | Path, overrides: list[str] | None = None, seed: int | None = None) -> ExperimentConfig:
    """Read a config file or preset name, then apply ``section.key=value`` overrides."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str  # keep key case
    path = Path(spec)
    try:
        if str(spec) in PRESETS:
            parser.read_string(_dedent(PRESETS[str(spec)]), source=str(spec))
            base = Path.cwd()
        elif path.is_file():
            parser.read(path)
            base = path.resolve().parent
        else:
            raise ConfigError("config", f"{spec!r} is neither a file nor a preset ({', '.join(sorted(PRESETS))})")
    except configparser.Error as exc:
        raise ConfigError("config", f"cannot parse: {exc}") from exc
    sections: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            _validate_key(section, key)
            sections.setdefault(section, {})[key] = value
    cfg = ExperimentConfig(str(spec), sections, base)
    for item in overrides or []:
        target, sep, value = item.partition("=")
        section, dot, key = target.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(item, "override must look like section.key=value")
        cfg.set(section, key.strip(), value.strip())
    if seed is not None:
        cfg.set("experiment", "seed", str(seed))
    if cfg.seed < 0:
        raise ConfigError("experiment.seed", "seed must be nonnegative")
    return cfg


def _dedent(text: str) -> str:
    return "\n".join(line.strip() for line in text.strip().splitlines()) + "\n"


# --------------------------------------------------------------------------
# Field expressions
# --------------------------------------------------------------------------

def _gauss(x, width):
    return np.exp(-0.5 * (x / width) ** 2)


_GENERATORS: dict[str, Callable] = {
    "constant": lambda x, c=0.0: np.full_like(x, c, dtype=float),
    "tanh": lambda x, scale=1.0, width=1.0, center=0.0: scale * np.tanh((x - center) / width),
    "tanh_wall": lambda x, height=2.0, offset=-1.0, width=1.0: height * np.tanh(x / width) ** 2 + offset,
    "gaussian_well": lambda x, depth=1.0, width=1.0, level=0.0: level - depth * _gauss(x, width),
    "gaussian_bump": lambda x, height=0.5, width=1.0, level=1.0: level + height * _gauss(x, width),
    "harmonic": lambda x, k=1.0, center=0.0: k * (x - center) ** 2,
    "inverse_square": lambda x, scale=1.0: scale / (1.0 + x ** 2),
}
_MATH = {"exp": np.exp, "sqrt": np.sqrt, "abs": np.abs, "sin": np.sin, "cos": np.cos, "cosh": np.cosh}
_HYPHENATED = ("tanh-wall", "gaussian-well", "gaussian-bump", "inverse-square", "matrix-diag")
_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide, ast.Pow: np.power}


@dataclass(frozen=True)
class MatrixDiag:
    entries: tuple[np.ndarray, ...]


def evaluate_field(expr: str, x: np.ndarray, key: str, base_dir: Path | None = None):
    """Evaluate a field expression on the site coordinates ``x``.

    Returns an array of shape ``x.shape`` or a :class:`MatrixDiag`.
    """
    src = expr.strip()
    for name in _HYPHENATED:
        src = src.replace(name, name.replace("-", "_"))
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(key, f"cannot parse expression {expr!r}") from exc
    base_dir = Path.cwd() if base_dir is None else base_dir
    body = tree.body
    if isinstance(body, ast.Call) and isinstance(body.func, ast.Name) and body.func.id == "matrix_diag":
        if body.keywords or not body.args:
            raise ConfigError(key, "matrix-diag takes one or more positional expressions")
        return MatrixDiag(tuple(_as_sites(_eval(a, x, key, base_dir), x) for a in body.args))
    return _as_sites(_eval(body, x, key, base_dir), x)


def _as_sites(value, x):
    return np.broadcast_to(np.asarray(value, dtype=float), x.shape).copy()


def _eval(node, x, key, base_dir):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id == "x":
            return x
        if node.id == "pi":
            return np.pi
        raise ConfigError(key, f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        value = _eval(node.operand, x, key, base_dir)
        return -value if isinstance(node.op, ast.USub) else value
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left, x, key, base_dir), _eval(node.right, x, key, base_dir))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        if name == "table":
            if len(node.args) != 1 or not isinstance(node.args[0], ast.Constant) \
                    or not isinstance(node.args[0].value, str):
                raise ConfigError(key, 'table expects one quoted file name, e.g. table("v.txt")')
            path = base_dir / node.args[0].value
            try:
                values = np.loadtxt(path, dtype=float, ndmin=1)
            except OSError as exc:
                raise ConfigError(key, f"cannot read table {str(path)!r}") from exc
            if values.shape != x.shape:
                raise ConfigError(key, f"table has {values.size} values for {x.size} sites")
            return values
        if name in _MATH:
            if len(node.args) != 1 or node.keywords:
                raise ConfigError(key, f"{name} takes exactly one argument")
            return _MATH[name](_eval(node.args[0], x, key, base_dir))
        if name in _GENERATORS:
            args = [_scalar_arg(a, key) for a in node.args]
            kwargs = {k.arg: _scalar_arg(k.value, key) for k in node.keywords}
            try:
                return _GENERATORS[name](x, *args, **kwargs)
            except TypeError as exc:
                raise ConfigError(key, f"bad arguments to {name}: {exc}") from exc
        if name == "matrix_diag":
            raise ConfigError(key, "matrix-diag is only allowed as the whole expression")
        raise ConfigError(key, f"unknown generator {name!r}")
    raise ConfigError(key, f"unsupported expression element {ast.dump(node)[:40]}")


def _scalar_arg(node, key) -> float:
    if any(isinstance(n, ast.Name) and n.id == "x" for n in ast.walk(node)):
        raise ConfigError(key, "generator parameters must be numbers")
    value = _eval(node, np.zeros(1), key, Path.cwd())
    arr = np.asarray(value, dtype=float)
    if arr.size != 1:
        raise ConfigError(key, "generator parameters must be numbers")
    return float(arr.reshape(-1)[0])


# --------------------------------------------------------------------------
# Builders
# --------------------------------------------------------------------------

_GROUP_NAME = re.compile(r"^(Z/|D|S)(\d+)$")


def parse_group(text: str, key: str = "algebra.group", base_dir: Path | None = None) -> FiniteGroup | str:
    """``Z/n``, ``Dn``, ``Sn``, ``Z`` or the path of a multiplication table."""
    text = text.strip()
    if text == Z:
        return Z
    m = _GROUP_NAME.match(text)
    if m:
        kind, n = m.group(1), int(m.group(2))
        if n < 1:
            raise ConfigError(key, "group size must be positive")
        return {"Z/": cyclic_group, "D": dihedral_group, "S": symmetric_group}[kind](n)
    path = (base_dir or Path.cwd()) / text
    if path.is_file():
        try:
            return load_group_table(path)
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from exc
    raise ConfigError(key, f"unknown group {text!r} (use Z/n, Dn, Sn, Z or a table file)")


def build_algebra(cfg: ExperimentConfig) -> tuple[TracedAlgebra, GroupAlgebra | None]:
    if cfg.has("algebra", "group") and cfg.has("algebra", "blocks"):
        raise ConfigError("algebra.group", "give either algebra.group or algebra.blocks, not both")
    if cfg.has("algebra", "group"):
        group = parse_group(cfg.raw("algebra", "group"), base_dir=cfg.base_dir)
        if group == Z:
            raise ConfigError("algebra.group", "Z has no finite block decomposition; use a [cover] section")
        ga = group_algebra(group)
        return ga.algebra, ga
    text = cfg.raw("algebra", "blocks")
    if text is None:
        return TracedAlgebra.scalars(), None
    blocks = []
    try:
        for part in _split(text):
            n, _, w = part.partition(":")
            blocks.append((int(n), _number(w)))
        return TracedAlgebra(tuple(blocks)), None
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError("algebra.blocks", f"expected 'n:w, n:w, ...' with sum w n = 1 ({exc})") from exc


def build_model(cfg: ExperimentConfig, half_length: float | None = None) -> LatticeModel:
    """Interval model from ``[model]``; ``half_length`` replaces ``a, b`` by ``-L, L``."""
    h = cfg.get_positive("model", "h", 0.05)
    if half_length is None:
        a, b = cfg.get_float("model", "a"), cfg.get_float("model", "b")
    else:
        a, b = -half_length, half_length
    if not b > a:
        raise ConfigError("model.b", "need b > a")
    compact = None
    if cfg.has("model", "compact"):
        compact = cfg.get_floats("model", "compact")
        if len(compact) != 2:
            raise ConfigError("model.compact", "expected 'lo, hi'")
    elif cfg.has("potential", "floor_region"):
        compact = cfg.get_floats("potential", "floor_region")
    weights = {}
    for name in ("mu", "metric"):
        text = cfg.raw("model", name)
        if text is None or text.strip() in ("uniform", "gaussian-bump"):
            weights[name] = None if text is None else text.strip()
        else:
            weights[name] = lambda x, t=text, k=f"model.{name}": evaluate_field(t, x, k, cfg.base_dir)
    try:
        return LatticeModel.interval(a, b, h, compact=tuple(compact) if compact else None,
                                     mu=weights["mu"], metric=weights["metric"])
    except ValueError as exc:
        raise ConfigError("model", str(exc)) from exc


def fiber_rank(cfg: ExperimentConfig) -> int:
    r = cfg.get_int("model", "r", 1)
    if r < 1:
        raise ConfigError("model.r", "fiber rank must be positive")
    return r


def _block_values(value, model: LatticeModel, n: int, r: int, key: str) -> np.ndarray:
    """Per-site ``(r n, r n)`` matrices from a scalar field or a matrix-diag over the fiber."""
    if isinstance(value, MatrixDiag):
        if len(value.entries) != r * n:
            raise ConfigError(key, f"matrix-diag has {len(value.entries)} entries for fiber size {r * n}")
        d = np.stack(value.entries, axis=1)
        return np.einsum("ij,jk->ijk", d, np.eye(r * n))
    return value[:, None, None] * np.eye(r * n)[None]


def build_field(cfg: ExperimentConfig, section: str, key: str, model: LatticeModel,
                algebra: TracedAlgebra, r: int) -> SiteField:
    """One expression for all algebra blocks (``key``) or one per block (``key.i``)."""
    per_block = {int(m.group(1)): v for k, v in cfg.sections.get(section, {}).items()
                 if (m := _BLOCK_KEY.match(k)) and key == "f"}
    if per_block and cfg.has(section, key):
        raise ConfigError(f"{section}.{key}", f"give either {key} or {key}.0, {key}.1, ... but not both")
    values = []
    for i, n in enumerate(algebra.dims):
        if per_block:
            if i not in per_block:
                raise ConfigError(f"{section}.{key}.{i}", "missing expression for this algebra block")
            text, full = per_block[i], f"{section}.{key}.{i}"
        else:
            text, full = cfg.require(section, key), f"{section}.{key}"
        values.append(_block_values(evaluate_field(text, model.x, full, cfg.base_dir), model, n, r, full))
    extra = set(per_block) - set(range(len(algebra)))
    if extra:
        raise ConfigError(f"{section}.{key}.{min(extra)}", "no such algebra block")
    return SiteField(model, algebra, r, tuple(values))


def build_potential(cfg: ExperimentConfig, model: LatticeModel, algebra: TracedAlgebra, r: int,
                    require_floor: bool = False) -> Potential:
    fld = build_field(cfg, "potential", "v", model, algebra, r)
    floor = None
    if cfg.has("potential", "floor"):
        c = cfg.get_float("potential", "floor")
        region = cfg.get_floats("potential", "floor_region")
        if len(region) != 2:
            raise ConfigError("potential.floor_region", "expected 'lo, hi'")
        x = model.x
        inside = np.flatnonzero((x >= region[0] - 1e-12) & (x <= region[1] + 1e-12))
        sites = (int(inside[0]), int(inside[-1]) + 1) if inside.size else (0, 0)
        floor = (c, sites)
    elif require_floor:
        raise ConfigError("potential.floor", "missing floor certificate (floor and floor_region)")
    q = None
    if cfg.has("potential", "q"):
        q = evaluate_field(cfg.raw("potential", "q"), model.x, "potential.q", cfg.base_dir)
        if isinstance(q, MatrixDiag):
            raise ConfigError("potential.q", "q must be a scalar function")
    try:
        return Potential(fld, floor, q)
    except ValueError as exc:
        raise ConfigError("potential.v", str(exc)) from exc


def build_cover(cfg: ExperimentConfig) -> tuple[CoverSpec, NeighbourOperator, LatticeModel | None]:
    """Cover and base operator from ``[cover]``.

    ``cocycle = twist`` puts the generator ``1`` on the last edge and the
    identity elsewhere; otherwise a comma list of element indices (finite
    groups) or windings (``Z``).
    """
    deck = parse_group(cfg.require("cover", "deck"), "cover.deck", cfg.base_dir)
    closed = cfg.get_bool("cover", "closed", True)
    kind = cfg.raw("cover", "operator", "laplacian").strip()
    model = None
    if kind == "laplacian":
        if not closed:
            raise ConfigError("cover.closed", "the laplacian cover operator lives on a cycle")
        n = cfg.get_int("cover", "sites")
        if n < 1:
            raise ConfigError("cover.sites", "need at least one site")
        x = np.arange(n, dtype=float) * (2 * np.pi / n)
        weights = evaluate_field(cfg.raw("cover", "weights", "1"), x, "cover.weights", cfg.base_dir)
        op = cycle_laplacian(n, weights)
    elif kind == "callias":
        h = cfg.get_positive("cover", "h", 0.1)
        if closed:
            n = cfg.get_int("cover", "sites")
            x = (np.arange(n) - n // 2) * h
            f = evaluate_field(cfg.require("cover", "f"), x, "cover.f", cfg.base_dir)
            op = cycle_callias(n, h, f)
        else:
            from .callias import callias_block
            from .lattice import dirac

            length = cfg.get_positive("cover", "length", 10.0)
            model = LatticeModel.interval(-length, length, h)
            f = evaluate_field(cfg.require("cover", "f"), model.x, "cover.f", cfg.base_dir)
            fld = SiteField(model, TracedAlgebra.scalars(), 1, (f[:, None, None].astype(complex),))
            op = NeighbourOperator.from_lattice_operator(callias_block(dirac(model), fld))
            n = model.N
    else:
        raise ConfigError("cover.operator", f"unknown operator {kind!r} (laplacian or callias)")
    n_edges = n if closed else n - 1
    text = cfg.raw("cover", "cocycle", "twist").strip()
    try:
        if text == "twist":
            identity = 0 if deck == Z else deck.identity_index
            cocycle = [identity] * n_edges
            if n_edges:
                cocycle[-1] = 1 if (deck == Z or deck.order > 1) else 0
        else:
            cocycle = [int(v) for v in _split(text)]
        spec = CoverSpec(n, deck, tuple(cocycle), closed, model)
    except ValueError as exc:
        raise ConfigError("cover.cocycle", str(exc)) from exc
    return spec, op, model

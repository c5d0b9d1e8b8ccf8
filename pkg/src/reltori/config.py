"""
Run configuration: TOML files validated against a JSON schema.

The schema is documented in ``docs/config.md``. Unknown keys are rejected
at every level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import jsonschema
import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from . import groups as gc
from .dynsys import DEFAULT_STEP, CoeffFunction, Lift, StatePoint, SystemSpec
from .freqs import DEFAULT_HEIGHT_BOUND, DEFAULT_TOL, ExactScalar, QBasis
from .verify import Tolerances


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


_RATIONAL = {"oneOf": [{"type": "integer"}, {"type": "string", "pattern": r"^\s*[-+]?\d+(\s*/\s*\d+)?\s*$"}]}
_EXACT = {"type": "array", "items": _RATIONAL, "minItems": 1}
_VECTOR = {"type": "array", "items": {"type": "number"}}
_TERM = {
    "type": "object",
    "additionalProperties": False,
    "required": ["mode"],
    "properties": {
        "mode": {"type": "array", "items": {"type": "integer"}},
        "cos": _VECTOR,
        "sin": _VECTOR,
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["system"],
    "properties": {
        "basis": {"type": "object", "additionalProperties": {"type": ["string", "number"]}},
        "system": {
            "type": "object",
            "additionalProperties": False,
            "required": ["group", "k", "omega"],
            "properties": {
                "group": {"type": "string"},
                "k": {"type": "integer", "minimum": 1},
                "omega": {"type": "array", "items": {"oneOf": [_EXACT, {"type": "number"}]}},
                "unit": {"enum": ["turn", "rad"]},
                "vertical": {"type": "array", "items": _TERM},
                "exact_mean": {"type": "array", "items": _EXACT},
                "lifts": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["direction"],
                        "properties": {
                            "direction": {"type": "integer", "minimum": 1},
                            "terms": {"type": "array", "items": _TERM},
                        },
                    },
                },
                "base_point": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"phi": _VECTOR, "g": _VECTOR},
                },
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["exact", "numeric"]},
                "step": {"type": "number", "exclusiveMinimum": 0},
                "height_bound": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {name: {"type": "number", "minimum": 0} for name in Tolerances().as_dict()},
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0},
                "sample_count": {"type": "integer", "minimum": 1},
                "t_max": {"type": "number", "minimum": 0},
                "t_grid": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "horizon": {"type": "number", "minimum": 0},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "invariants": {"type": "array", "items": _VECTOR},
                "frequencies": {"type": "boolean"},
            },
        },
    },
}


@dataclass(frozen=True)
class VerifyOptions:
    seed: int = 0
    sample_count: int = 20
    t_max: float = 5.0
    t_grid: tuple | None = None
    horizon: float = 20.0
    dt: float = 0.01
    invariants: tuple = ()
    frequencies: bool = True


@dataclass(frozen=True, eq=False)
class RunConfig:
    spec: SystemSpec
    mode: str = "exact"
    step: float = DEFAULT_STEP
    height_bound: int = DEFAULT_HEIGHT_BOUND
    tol: float = DEFAULT_TOL
    tolerances: Tolerances = field(default_factory=Tolerances)
    verify: VerifyOptions = field(default_factory=VerifyOptions)
    raw: dict = field(default_factory=dict)

    def with_overrides(self, **kw) -> RunConfig:
        kw = {k: v for k, v in kw.items() if v is not None}
        if not kw:
            return self
        raw = {**self.raw, "run": {**self.raw.get("run", {}), **kw}}
        return RunConfig(self.spec, kw.get("mode", self.mode), kw.get("step", self.step),
                         kw.get("height_bound", self.height_bound), kw.get("tol", self.tol),
                         self.tolerances, self.verify, raw)


def _rational(x) -> Fraction:
    return Fraction(x.replace(" ", "")) if isinstance(x, str) else Fraction(x)


def _exact(coeffs, basis: QBasis) -> ExactScalar:
    if len(coeffs) > len(basis):
        raise ConfigError(f"exact scalar {coeffs} has more coefficients than the basis {basis.labels}")
    return ExactScalar(tuple(_rational(c) for c in coeffs), basis)


def _terms(raw_terms, group, k, scale, where):
    dim = group.algebra_dim
    out = []
    for t in raw_terms:
        mode = t["mode"]
        if len(mode) != k:
            raise ConfigError(f"{where}: mode {mode} needs {k} entries")
        vecs = []
        for key in ("cos", "sin"):
            v = t.get(key, [0.0] * dim)
            if len(v) != dim:
                raise ConfigError(f"{where}: '{key}' needs {dim} entries for {group.name}")
            vecs.append(scale * np.asarray(v, dtype=float))
        out.append((tuple(mode), *vecs))
    return out


def parse_config(data: dict) -> RunConfig:
    """Validate a decoded TOML document and build the run configuration."""
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None
    try:
        basis = QBasis.from_mapping(data.get("basis", {}))
    except ValueError as exc:
        raise ConfigError(f"basis: {exc}") from None
    sysd = data["system"]
    try:
        group = gc.parse_group(sysd["group"])
    except ValueError as exc:
        raise ConfigError(f"system/group: {exc}") from None
    k = sysd["k"]
    if len(sysd["omega"]) != k:
        raise ConfigError(f"system/omega: expected {k} entries")
    omega = tuple(_exact(w, basis) if isinstance(w, list) else float(w) for w in sysd["omega"])
    unit = sysd.get("unit", "turn")
    if unit == "rad" and group.kind != "so3":
        raise ConfigError("system/unit: 'rad' only applies to SO(3)")
    scale = group.turn if unit == "turn" else 1.0
    terms = _terms(sysd.get("vertical", []), group, k, scale, "system/vertical")
    mean = None
    if "exact_mean" in sysd:
        if len(sysd["exact_mean"]) != group.algebra_dim:
            raise ConfigError(f"system/exact_mean: needs {group.algebra_dim} entries")
        mean = tuple(_exact(c, basis) for c in sysd["exact_mean"])
        # exact_mean is in turns; it fixes (or must agree with) the constant term
        const = np.array([float(x) for x in mean]) * group.turn
        zero = tuple([0] * k)
        given = [t for t in terms if not any(t[0])]
        if not given:
            terms.append((zero, const, np.zeros(group.algebra_dim)))
        elif not np.allclose(sum(t[1] for t in given), const, rtol=0.0, atol=1e-12):
            raise ConfigError("system/exact_mean disagrees with the constant vertical term")
    a = CoeffFunction.from_terms(group, k, terms, exact_mean=mean)
    lifts = []
    for i, L in enumerate(sysd.get("lifts", [])):
        d = L["direction"] - 1
        if d >= k:
            raise ConfigError(f"system/lifts/{i}: direction must be at most k = {k}")
        b = CoeffFunction.from_terms(group, k, _terms(L.get("terms", []), group, k, scale,
                                                      f"system/lifts/{i}"))
        lifts.append(Lift(d, b))
    if len({s.direction for s in lifts}) != len(lifts):
        raise ConfigError("system/lifts: repeated direction")
    bp = sysd.get("base_point", {})
    phi = bp.get("phi", [0.0] * k)
    if len(phi) != k:
        raise ConfigError(f"system/base_point/phi: needs {k} entries")
    g = bp.get("g", list(group.identity().payload))
    if len(g) != group.payload_dim:
        raise ConfigError(f"system/base_point/g: needs {group.payload_dim} entries")
    if group.kind == "so3" and not math.isclose(float(np.linalg.norm(g)), 1.0, abs_tol=1e-12):
        raise ConfigError("system/base_point/g: a unit quaternion is required")
    base = StatePoint(tuple(phi), gc.GroupElement(group, tuple(g)))
    try:
        spec = SystemSpec(group, k, omega, a, tuple(lifts), base, basis)
    except ValueError as exc:
        raise ConfigError(f"system: {exc}") from None
    run = data.get("run", {})
    try:
        tolerances = Tolerances.from_mapping(data.get("tolerances", {}))
    except ValueError as exc:
        raise ConfigError(f"tolerances: {exc}") from None
    v = data.get("verify", {})
    vopts = VerifyOptions(
        seed=v.get("seed", 0), sample_count=v.get("sample_count", 20), t_max=float(v.get("t_max", 5.0)),
        t_grid=tuple(v["t_grid"]) if "t_grid" in v else None, horizon=float(v.get("horizon", 20.0)),
        dt=float(v.get("dt", 0.01)), invariants=tuple(tuple(c) for c in v.get("invariants", [])),
        frequencies=v.get("frequencies", True))
    return RunConfig(spec, run.get("mode", "exact"), float(run.get("step", DEFAULT_STEP)),
                     int(run.get("height_bound", DEFAULT_HEIGHT_BOUND)), float(run.get("tol", DEFAULT_TOL)),
                     tolerances, vopts, data)


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data)

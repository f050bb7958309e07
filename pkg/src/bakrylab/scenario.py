"""Scenario files: a line-oriented ``key = value`` format with sections.

Example::

    name = flat-tcd
    check = tcd

    [model]
    n = 4
    warp = 1

    [model.fiber]
    curvature = 0

    [model.weight]
    temporal = 0

    [parameters]
    N = inf

``#`` starts a comment.  Values may be wrapped in double quotes.  Unknown
sections or keys are errors; omitted keys take the defaults listed in
:data:`SCHEMA`.  :func:`format_scenario` writes the canonical form, which
:func:`parse_scenario` reads back to an equal config.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Any, Callable

from .expr import Expr, ExpressionError, parse
from .geometry import ConstantCurvatureFiber, SpacetimeModel, SyntheticDimension, TabulatedFiber, WeightFunction

__all__ = [
    "ScenarioError",
    "ScenarioConfig",
    "ModelSpec",
    "SCHEMA",
    "CHECKS",
    "parse_scenario",
    "format_scenario",
    "schema_document",
]


class ScenarioError(ValueError):
    """One or more parse/validation errors, each tagged with a line number (0 = whole file)."""

    def __init__(self, errors: list[tuple[int, str]]):
        self.errors = list(errors)
        super().__init__("\n".join(f"line {ln}: {msg}" if ln else msg for ln, msg in self.errors))


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Kind:
    name: str
    parse: Callable[[str], Any]
    format: Callable[[Any], str]


def _float(s: str) -> float:
    v = float(s)
    if math.isnan(v):
        raise ValueError("NaN is not allowed")
    return v


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true/false, got {s!r}")


def _optfloat(s: str):
    return None if s.lower() == "none" else _float(s)


def _dim(s: str) -> SyntheticDimension:
    return SyntheticDimension.coerce(s)


def _dimlist(s: str) -> tuple:
    return tuple(_dim(p.strip()) for p in s.split(",") if p.strip())


def _floatlist(s: str) -> tuple:
    vals = tuple(_float(p.strip()) for p in s.split(",") if p.strip())
    if not vals:
        raise ValueError("empty list")
    return vals


def _expr_or_model(s: str):
    return "model" if s == "model" else parse(s)


def _choice(*options: str) -> Kind:
    def p(s: str) -> str:
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}; got {s!r}")
        return s
    return Kind("choice(" + "|".join(options) + ")", p, str)


FLOAT = Kind("float", _float, _fmt_float)
INT = Kind("int", int, str)
BOOL = Kind("bool", _bool, lambda v: "true" if v else "false")
OPTFLOAT = Kind("float|none", _optfloat, lambda v: "none" if v is None else _fmt_float(v))
DIM = Kind("N", _dim, lambda v: v.label())
DIMLIST = Kind("N-list", _dimlist, lambda v: ", ".join(d.label() for d in v))
FLOATLIST = Kind("float-list", _floatlist, lambda v: ", ".join(_fmt_float(x) for x in v))
EXPR = Kind("expression", parse, str)
EXPR_OR_MODEL = Kind("expression|model", _expr_or_model, str)
TEXT = Kind("string", str, str)

REQUIRED = object()
_EXPECT = _choice("yes", "no", "any")

# (kind, default) per key; REQUIRED marks keys without default
TOP_KEYS = {"name": (TEXT, REQUIRED), "check": (TEXT, REQUIRED), "output": (TEXT, None), "description": (TEXT, "")}
MODEL_KEYS = {"n": (INT, REQUIRED), "warp": (EXPR, "1")}
FIBER_KEYS = {
    "kind": (_choice("constant-curvature", "tabulated"), "constant-curvature"),
    "curvature": (FLOAT, "0"),
    "ricci_lower_bound": (OPTFLOAT, "none"),
}
WEIGHT_KEYS = {
    "temporal": (EXPR, "0"),
    "spatial": (EXPR, "0"),
    "joint": (TEXT, "none"),
    "convex_from": (OPTFLOAT, "none"),
}

CHECKS: dict[str, dict[str, tuple[Kind, Any]]] = {
    "tcd": {
        "N": (DIM, "inf"),
        "lambda": (EXPR, "0"),
        "t_min": (FLOAT, "0"),
        "t_max": (FLOAT, "1"),
        "t_points": (INT, "21"),
        "y_values": (FLOATLIST, "0"),
        "chi_max": (FLOAT, "5"),
        "chi_points": (INT, "51"),
        "h": (FLOAT, "0.001"),
        "tolerance": (FLOAT, "1e-9"),
        "method": (_choice("auto", "closed", "fd"), "auto"),
        "expect": (_choice("satisfied", "violated", "any"), "satisfied"),
    },
    "integrate": {
        "N": (DIM, "inf"),
        "x0": (FLOAT, REQUIRED),
        "surface_t": (FLOAT, "0"),
        "y": (FLOAT, "0"),
        "t_max": (FLOAT, "10"),
        "ric": (EXPR_OR_MODEL, "model"),
        "shear_sq": (EXPR, "0"),
        "rtol": (FLOAT, "1e-10"),
        "expect_blowup": (_EXPECT, "any"),
        "expected_t_blowup": (OPTFLOAT, "none"),
        "rel_tol": (FLOAT, "1e-6"),
    },
    "lemma-bound": {
        "bound": (_choice("nonneg", "finite-N", "desitter-conformal", "desitter-finite-N", "desitter-N"), REQUIRED),
        "N": (DIM, "inf"),
        "delta": (FLOAT, REQUIRED),
        "surface_t": (FLOAT, "0"),
        "y": (FLOAT, "0"),
        "horizon": (FLOAT, "10000"),
        "observe": (BOOL, "true"),
        "expect_applicable": (_EXPECT, "any"),
    },
    "theorem": {
        "theorem": (_choice("T1_4", "T1_6a", "T1_6b", "T1_7"), REQUIRED),
        "N": (DIM, "inf"),
        "surface_t": (FLOAT, "0"),
        "y_values": (FLOATLIST, "0"),
        "tcd_window": (FLOAT, "3"),
        "tcd_points": (INT, "61"),
        "k": (OPTFLOAT, "none"),
        "horizon": (FLOAT, "100"),
        "observe": (BOOL, "true"),
        "expect_applicable": (_EXPECT, "any"),
    },
    "mcflow": {
        "N": (DIM, "inf"),
        "lambda": (FLOAT, "0"),
        "surface_t": (FLOAT, "0"),
        "m": (INT, "16"),
        "length": (FLOAT, repr(2.0 * math.pi)),
        "dr_fraction": (FLOAT, "0.45"),
        "steps": (INT, "10"),
        "phi0": (EXPR, REQUIRED),
        "shear_sq": (EXPR, "0"),
        "ric": (EXPR_OR_MODEL, "model"),
        "f_prime": (EXPR_OR_MODEL, "model"),
        "expect": (_choice("dichotomy", "any"), "dichotomy"),
    },
    "rigidity": {
        "N": (DIM, "inf"),
        "lambda_case": (_choice("zero", "minus_n_minus_1", "minus_N_minus_1"), REQUIRED),
        "t": (FLOAT, "0.5"),
        "y": (FLOAT, "0"),
        "tolerance": (FLOAT, "1e-10"),
        "expect": (_choice("rigid", "not-rigid", "any"), "rigid"),
    },
    "example-1-5": {
        "N_values": (DIMLIST, "-2, 1, inf"),
        "t_min": (FLOAT, "0"),
        "t_max": (FLOAT, "3"),
        "t_points": (INT, "31"),
        "horizon": (FLOAT, "100"),
        "tolerance": (FLOAT, "1e-9"),
    },
    "example-1-8": {
        "lo": (FLOAT, "0"),
        "hi": (FLOAT, "2"),
        "bisect_tol": (FLOAT, "0.001"),
        "t_points": (INT, "401"),
        "chi_max": (FLOAT, "5"),
        "chi_points": (INT, "26"),
        "tolerance": (FLOAT, "1e-9"),
    },
}

SCHEMA = {
    "": TOP_KEYS,
    "model": MODEL_KEYS,
    "model.fiber": FIBER_KEYS,
    "model.weight": WEIGHT_KEYS,
}


# ---------------------------------------------------------------------------
# config types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    n: int
    warp: Expr
    fiber_kind: str = "constant-curvature"
    curvature: float = 0.0
    ricci_lower_bound: float | None = None
    temporal: Expr = field(default_factory=lambda: parse("0"))
    spatial: Expr = field(default_factory=lambda: parse("0"))
    joint: Expr | None = None
    convex_from: float | None = None

    def build(self) -> SpacetimeModel:
        if self.fiber_kind == "tabulated":
            fiber = TabulatedFiber(self.ricci_lower_bound)
        else:
            fiber = ConstantCurvatureFiber(self.curvature)
        if self.joint is not None:
            weight = WeightFunction.joint(self.joint, self.convex_from)
        else:
            weight = WeightFunction.separable(self.temporal, self.spatial, self.convex_from)
        return SpacetimeModel(self.n, self.warp, fiber, weight)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    check: str
    model: ModelSpec
    parameters: tuple[tuple[str, Any], ...]
    output: str
    description: str = ""

    @property
    def params(self) -> dict:
        return dict(self.parameters)

    def canonical_text(self) -> str:
        return format_scenario(self)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _strip_value(raw: str) -> str:
    v = raw.strip()
    if len(v) >= 2 and v[0] == v[-1] == '"':
        v = v[1:-1]
    return v


def _read_sections(text: str, errors: list) -> dict[str, dict[str, tuple[int, str]]]:
    sections: dict[str, dict[str, tuple[int, str]]] = {"": {}}
    current = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                errors.append((lineno, f"malformed section header {body!r}"))
                continue
            current = body[1:-1].strip()
            if current not in SCHEMA and current != "parameters":
                errors.append((lineno, f"unknown section [{current}]"))
            if current in sections and sections[current]:
                errors.append((lineno, f"duplicate section [{current}]"))
            sections.setdefault(current, {})
            continue
        if "=" not in body:
            errors.append((lineno, f"expected 'key = value', got {body!r}"))
            continue
        key, value = body.split("=", 1)
        key = key.strip()
        if not key:
            errors.append((lineno, "empty key"))
            continue
        if key in sections[current]:
            errors.append((lineno, f"duplicate key {key!r}"))
            continue
        sections[current][key] = (lineno, _strip_value(value))
    return sections


def _convert(section: str, schema: dict, entries: dict, errors: list) -> dict:
    out = {}
    for key, (lineno, _) in entries.items():
        if key not in schema:
            where = f"[{section}]" if section else "top level"
            errors.append((lineno, f"unknown key {key!r} in {where}"))
    for key, (kind, default) in schema.items():
        if key in entries:
            lineno, raw = entries[key]
        elif default is REQUIRED:
            where = f"[{section}]" if section else "top level"
            errors.append((0, f"missing required key {key!r} in {where}"))
            continue
        elif default is None:
            out[key] = None
            continue
        else:
            lineno, raw = 0, default
        try:
            out[key] = kind.parse(raw)
        except ExpressionError as exc:
            errors.append((lineno, f"{key}: {exc}"))
        except ValueError as exc:
            errors.append((lineno, f"{key}: {exc}"))
    return out


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and validate scenario text; raises :class:`ScenarioError` listing every problem."""
    errors: list[tuple[int, str]] = []
    sections = _read_sections(text, errors)
    top = _convert("", TOP_KEYS, sections.get("", {}), errors)
    model = _convert("model", MODEL_KEYS, sections.get("model", {}), errors)
    fiber = _convert("model.fiber", FIBER_KEYS, sections.get("model.fiber", {}), errors)
    weight = _convert("model.weight", WEIGHT_KEYS, sections.get("model.weight", {}), errors)
    if "model" not in sections:
        errors.append((0, "missing section [model]"))

    check = top.get("check")
    pentries = sections.get("parameters", {})
    params: dict = {}
    if check is not None and check not in CHECKS:
        ln = sections[""]["check"][0]
        errors.append((ln, f"unknown check {check!r}; expected one of {', '.join(CHECKS)}"))
    elif check is not None:
        params = _convert("parameters", CHECKS[check], pentries, errors)

    joint = None
    wsec = sections.get("model.weight", {})
    if weight.get("joint") not in (None, "none"):
        try:
            joint = parse(weight["joint"])
        except ExpressionError as exc:
            errors.append((wsec["joint"][0], f"joint: {exc}"))
        for key in ("temporal", "spatial"):
            if key in wsec:
                errors.append((wsec[key][0], f"{key!r} conflicts with 'joint'"))
    else:
        for key, var in (("temporal", "y"), ("spatial", "t")):
            e = weight.get(key)
            if e is not None and e.depends_on(var):
                errors.append((wsec.get(key, (0,))[0], f"{key} part must not depend on {var}"))

    if fiber.get("kind") == "tabulated" and fiber.get("ricci_lower_bound") is None:
        errors.append((0, "tabulated fiber needs ricci_lower_bound"))

    spec = None
    n = model.get("n")
    if n is not None and n < 2:
        errors.append((sections.get("model", {}).get("n", (0,))[0], "n must be >= 2"))
    if not errors:
        spec = ModelSpec(
            n=n, warp=model["warp"], fiber_kind=fiber["kind"], curvature=fiber["curvature"],
            ricci_lower_bound=fiber["ricci_lower_bound"], temporal=weight["temporal"],
            spatial=weight["spatial"], joint=joint, convex_from=weight["convex_from"],
        )
        _validate(check, spec, params, pentries, errors)
    if errors:
        raise ScenarioError(sorted(errors, key=lambda e: e[0]))
    name = top["name"]
    output = top["output"] or f"bakrylab-out/{name}"
    ordered = tuple((k, params[k]) for k in CHECKS[check])
    return ScenarioConfig(name, check, spec, ordered, output, top["description"])


def _validate(check: str, spec: ModelSpec, params: dict, pentries: dict, errors: list) -> None:
    n = spec.n

    def line(key):
        return pentries.get(key, (0,))[0]

    for key in ("N",):
        if key in params:
            try:
                params[key].validate(n)
            except ValueError as exc:
                errors.append((line(key), f"N: {exc}"))
                return
    if "N_values" in params:
        for d in params["N_values"]:
            try:
                d.validate(n)
            except ValueError as exc:
                errors.append((line("N_values"), f"N_values: {exc}"))
    N = params.get("N")
    if check == "lemma-bound":
        bound = params["bound"]
        if bound in ("finite-N", "desitter-finite-N", "desitter-N") and not N.exceeds(n):
            errors.append((line("N"), f"bound {bound!r} needs N > n = {n}, got N = {N.label()}"))
        if bound == "desitter-conformal" and not N.at_most_one_or_infinite():
            errors.append((line("N"), f"bound {bound!r} needs N <= 1 or N = inf"))
        if not params["delta"] > 0:
            errors.append((line("delta"), "delta must be positive"))
    if check == "rigidity" and params["lambda_case"] == "minus_N_minus_1" and not N.exceeds(n):
        errors.append((line("N"), "lambda_case minus_N_minus_1 needs N > n"))
    if check == "mcflow":
        if params["m"] < 3:
            errors.append((line("m"), "m must be >= 3"))
        if not 0 < params["dr_fraction"] <= 0.5:
            errors.append((line("dr_fraction"), "dr_fraction must lie in (0, 0.5] (explicit stability)"))
        if params["phi0"].depends_on("t"):
            errors.append((line("phi0"), "phi0 must depend on y only"))
    if check == "integrate" and not params["t_max"] > 0:
        errors.append((line("t_max"), "t_max must be positive"))
    if check in ("tcd", "example-1-5") and params["t_max"] < params["t_min"]:
        errors.append((line("t_max"), "t_max must be >= t_min"))


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------

def _line(key: str, kind: Kind, value) -> str:
    return f"{key} = {kind.format(value)}"


def format_scenario(cfg: ScenarioConfig) -> str:
    m = cfg.model
    lines = [
        _line("name", TEXT, cfg.name),
        _line("check", TEXT, cfg.check),
        _line("output", TEXT, cfg.output),
    ]
    if cfg.description:
        lines.append(_line("description", TEXT, cfg.description))
    lines += ["", "[model]", _line("n", INT, m.n), _line("warp", EXPR, m.warp)]
    lines += ["", "[model.fiber]", f"kind = {m.fiber_kind}"]
    if m.fiber_kind == "tabulated":
        lines.append(_line("ricci_lower_bound", FLOAT, m.ricci_lower_bound))
    else:
        lines.append(_line("curvature", FLOAT, m.curvature))
    lines += ["", "[model.weight]"]
    if m.joint is not None:
        lines.append(_line("joint", EXPR, m.joint))
    else:
        lines += [_line("temporal", EXPR, m.temporal), _line("spatial", EXPR, m.spatial)]
    lines.append(_line("convex_from", OPTFLOAT, m.convex_from))
    lines += ["", "[parameters]"]
    schema = CHECKS[cfg.check]
    for key, value in cfg.parameters:
        lines.append(_line(key, schema[key][0], value))
    return "\n".join(lines) + "\n"


def schema_document() -> dict:
    """JSON-serializable description of the scenario format."""
    def sec(keys):
        return {k: {"type": kind.name, "default": None if d is REQUIRED else d, "required": d is REQUIRED}
                for k, (kind, d) in keys.items()}
    return {
        "format": "line-oriented 'key = value'; '#' comments; [section] headers; optional double quotes",
        "expression_grammar": "numbers, pi, t, y, + - * /, unary -, exp sin cos tanh log pow(a, b), parentheses",
        "sections": {"(top level)": sec(TOP_KEYS), "model": sec(MODEL_KEYS), "model.fiber": sec(FIBER_KEYS),
                     "model.weight": sec(WEIGHT_KEYS)},
        "checks": {name: sec(keys) for name, keys in CHECKS.items()},
    }

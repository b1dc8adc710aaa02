"""Built-in parametrized surfaces and surface-spec loading."""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

from .expressions import Expression, Num, Var, cos, parse_expression, sin
from .geometry import Immersion, Interval

TWO_PI = 2.0 * math.pi


def _sphere_coordinates(m: int) -> list[Expression]:
    """Hyperspherical chart of the unit S^m: ``x1 = cos u1, x2 = sin u1 cos u2, ...``."""
    u = [Var(f"u{i + 1}") for i in range(m)]
    comps = []
    prefix: Expression | None = None
    for k in range(m):
        c = cos(u[k])
        comps.append(c if prefix is None else prefix * c)
        s = sin(u[k])
        prefix = s if prefix is None else prefix * s
    comps.append(prefix)
    return comps


def _sphere_domain(m: int) -> tuple[Interval, ...]:
    return tuple(Interval(0.0, math.pi) for _ in range(m - 1)) + (Interval(0.0, TWO_PI, True),)


def sphere(m: int = 2, r: float = 1.0) -> Immersion:
    """Round sphere of radius ``r`` in R^(m+1); its normal points outward (H = -1/r)."""
    m = int(m)
    comps = tuple(Num(float(r)) * c for c in _sphere_coordinates(m))
    return Immersion(m, m + 1, comps, _sphere_domain(m), name=f"sphere({m},{_fmt(r)})")


def ellipsoid(*semiaxes: float) -> Immersion:
    """Ellipsoid ``sum (x_k / a_k)^2 = 1`` in R^n with ``n = len(semiaxes)``."""
    if len(semiaxes) < 3:
        raise ValueError("an ellipsoid needs at least 3 semiaxes")
    m = len(semiaxes) - 1
    comps = tuple(Num(float(a)) * c for a, c in zip(semiaxes, _sphere_coordinates(m)))
    name = "ellipsoid(" + ",".join(_fmt(a) for a in semiaxes) + ")"
    return Immersion(m, m + 1, comps, _sphere_domain(m), name=name)


def torus(R: float = 2.0, r: float = 1.0) -> Immersion:
    """Torus of revolution in R^3 with core radius ``R`` and tube radius ``r``."""
    if not R > r > 0:
        raise ValueError("torus needs R > r > 0")
    u1, u2 = Var("u1"), Var("u2")
    ring = Num(float(R)) + Num(float(r)) * cos(u2)
    comps = (ring * cos(u1), ring * sin(u1), Num(float(r)) * sin(u2))
    dom = (Interval(0.0, TWO_PI, True), Interval(0.0, TWO_PI, True))
    return Immersion(2, 3, comps, dom, name=f"torus({_fmt(R)},{_fmt(r)})")


def clifford_torus(r: float = 1.0) -> Immersion:
    """Product of two circles of radius ``r/sqrt(2)`` in R^4."""
    u1, u2 = Var("u1"), Var("u2")
    a = Num(float(r) / math.sqrt(2.0))
    comps = (a * cos(u1), a * sin(u1), a * cos(u2), a * sin(u2))
    dom = (Interval(0.0, TWO_PI, True), Interval(0.0, TWO_PI, True))
    return Immersion(2, 4, comps, dom, name=f"clifford_torus({_fmt(r)})")


def graph(expr: str | Expression, m: int = 2, half_width: float = 1.0) -> Immersion:
    """Graph ``(u, z(u))`` over the square ``[-half_width, half_width]^m``."""
    variables = tuple(f"u{i + 1}" for i in range(m))
    z = expr if isinstance(expr, Expression) else parse_expression(expr, variables)
    comps = tuple(Var(v) for v in variables) + (z,)
    dom = tuple(Interval(-half_width, half_width) for _ in range(m))
    text = expr if isinstance(expr, str) else str(expr)
    return Immersion(m, m + 1, comps, dom, name=f"graph({text})")


BUILTINS = {
    "sphere": sphere,
    "ellipsoid": ellipsoid,
    "torus": torus,
    "clifford_torus": clifford_torus,
    "graph": graph,
}

_CALL = re.compile(r"^\s*([A-Za-z_]+)\s*\((.*)\)\s*$", re.S)


def _fmt(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def builtin_surface(text: str) -> Immersion:
    """Instantiate a built-in from call syntax such as ``"ellipsoid(1,1,1.5)"``."""
    match = _CALL.match(text)
    if match is None:
        raise ValueError(f"not a surface call: {text!r}")
    name, args = match.group(1), match.group(2).strip()
    if name not in BUILTINS:
        raise ValueError(f"unknown surface {name!r}; known: {', '.join(sorted(BUILTINS))}")
    if name == "graph":
        return graph(args)
    values = [float(a) for a in args.split(",")] if args else []
    if name == "sphere" and values:
        values[0] = int(values[0])
    return BUILTINS[name](*values)


def load_surface(spec) -> Immersion:
    """Resolve a surface from an Immersion, a dict, a JSON string/file or built-in call."""
    if isinstance(spec, Immersion):
        return spec
    if isinstance(spec, dict):
        return Immersion.from_dict(spec)
    text = str(spec).strip()
    if text.startswith("{"):
        return Immersion.from_dict(json.loads(text))
    path = Path(text)
    if text.endswith(".json") or (path.suffix and path.exists()):
        return Immersion.from_dict(json.loads(path.read_text()))
    return builtin_surface(text)

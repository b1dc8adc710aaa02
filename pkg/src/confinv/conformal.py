"""Conformal deformations, Moebius maps, transformation-law checks and the I-operator."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import MobiusError, WeightMismatchError
from .expressions import Expression, Num, Var, evaluate, parse_expression, to_text
from .geometry import (
    AmbientMetric,
    Immersion,
    ambient_variables,
    chart_variables,
    christoffel,
    conformal_curvature,
    frame_at,
    metric_derivatives,
    riemann_from_metric,
)
from .jets import Jet, seed_variables
from .quadrature import QuadratureGrid, build_grid, default_resolution, integrate
from .tensor_algebra import ContractionSum

# ---------------------------------------------------------------------------
# Moebius maps


@dataclass(frozen=True)
class Translation:
    vector: tuple

    def exprs(self, xs):
        return [x + Num(float(v)) for x, v in zip(xs, self.vector)]

    def points(self, x):
        return x + np.asarray(self.vector, dtype=float)

    def to_dict(self):
        return {"type": "translation", "vector": list(map(float, self.vector))}


@dataclass(frozen=True)
class Rotation:
    matrix: tuple

    def __post_init__(self):
        Q = np.asarray(self.matrix, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or not np.allclose(Q @ Q.T, np.eye(len(Q)), atol=1e-9):
            raise ValueError("rotation matrix must be orthogonal")

    def exprs(self, xs):
        Q = np.asarray(self.matrix, dtype=float)
        out = []
        for row in Q:
            acc = None
            for q, x in zip(row, xs):
                if q == 0.0:
                    continue
                term = Num(float(q)) * x
                acc = term if acc is None else acc + term
            out.append(acc if acc is not None else Num(0.0))
        return out

    def points(self, x):
        return x @ np.asarray(self.matrix, dtype=float).T

    def to_dict(self):
        return {"type": "rotation", "matrix": np.asarray(self.matrix, dtype=float).tolist()}


@dataclass(frozen=True)
class Dilation:
    factor: float

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError("dilation factor must be positive")

    def exprs(self, xs):
        return [Num(float(self.factor)) * x for x in xs]

    def points(self, x):
        return self.factor * x

    def to_dict(self):
        return {"type": "dilation", "factor": float(self.factor)}


@dataclass(frozen=True)
class Inversion:
    center: tuple
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("inversion radius must be positive")

    def exprs(self, xs):
        d = [x - Num(float(c)) for x, c in zip(xs, self.center)]
        sq = d[0] * d[0]
        for dk in d[1:]:
            sq = sq + dk * dk
        scale = Num(float(self.radius) ** 2) / sq
        return [Num(float(c)) + scale * dk for c, dk in zip(self.center, d)]

    def points(self, x):
        c = np.asarray(self.center, dtype=float)
        d = x - c
        return c + self.radius**2 * d / np.sum(d * d, axis=-1, keepdims=True)

    def to_dict(self):
        return {"type": "inversion", "center": list(map(float, self.center)), "radius": float(self.radius)}


_PRIMITIVES = {"translation": Translation, "rotation": Rotation, "dilation": Dilation, "inversion": Inversion}


@dataclass(frozen=True)
class MobiusMap:
    """Composition of primitives, applied first to last."""

    steps: tuple = ()

    @classmethod
    def from_json(cls, doc) -> "MobiusMap":
        steps = []
        for item in doc:
            item = dict(item)
            kind = item.pop("type")
            if kind not in _PRIMITIVES:
                raise ValueError(f"unknown Moebius primitive {kind!r}")
            if kind == "rotation":
                item["matrix"] = tuple(map(tuple, item["matrix"]))
            for key in ("vector", "center"):
                if key in item:
                    item[key] = tuple(float(v) for v in item[key])
            steps.append(_PRIMITIVES[kind](**item))
        return cls(tuple(steps))

    def to_json(self) -> list:
        return [s.to_dict() for s in self.steps]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        for s in self.steps:
            x = s.points(x)
        return x


def apply_mobius(f: Immersion, T: MobiusMap, grid: QuadratureGrid | None = None, min_distance: float = 1e-6) -> Immersion:
    """Compose ``f`` with ``T``; every inversion center must stay off the surface."""
    grid = grid or build_grid(f.domain, default_resolution(f.m))
    comps = list(f.components)
    pos = f.positions(grid.nodes)
    for pos_in_map, step in enumerate(T.steps):
        if isinstance(step, Inversion):
            if len(step.center) != f.n:
                raise ValueError(f"inversion center has dimension {len(step.center)}, need {f.n}")
            dist = np.linalg.norm(pos - np.asarray(step.center), axis=-1)
            k = int(np.argmin(dist))
            node, d = _closest_chart_point(f, MobiusMap(T.steps[:pos_in_map]), step, grid.nodes[k], dist[k])
            if d <= min_distance:
                raise MobiusError(
                    f"inversion center {list(step.center)} lies on the surface (distance {d:.3g})", node,
                )
        comps = step.exprs(comps)
        pos = step.points(pos)
    return Immersion(f.m, f.n, tuple(comps), f.domain, f.flip_normal, name=f"mobius({f.name})")


def _closest_chart_point(f: Immersion, prefix: MobiusMap, step, start, start_dist):
    """Polish the nearest node by a bounded local search; centers between nodes are caught too."""
    c = np.asarray(step.center, dtype=float)

    def dist2(u):
        return float(np.sum((prefix(f.positions(u[None]))[0] - c) ** 2))

    bounds = [(iv.min, iv.max) for iv in f.domain]
    res = minimize(dist2, np.asarray(start, dtype=float), method="L-BFGS-B", bounds=bounds,
                   options={"ftol": 1e-30, "gtol": 1e-14})
    d = math.sqrt(max(res.fun, 0.0))
    if d < start_dist:
        return res.x, d
    return np.asarray(start, dtype=float), float(start_dist)


def random_inversion(f: Immersion, rng, min_distance: float = 0.5, radius: float = 1.0) -> Inversion:
    """An inversion whose center is at least ``min_distance`` away from the surface nodes."""
    rng = np.random.default_rng(rng)
    pos = f.positions(build_grid(f.domain, 12 if f.m <= 2 else 6).nodes)
    lo, hi = pos.min(axis=0), pos.max(axis=0)
    span = hi - lo
    for _ in range(1000):
        c = rng.uniform(lo - span, hi + span)
        if np.min(np.linalg.norm(pos - c, axis=-1)) >= min_distance:
            return Inversion(tuple(map(float, c)), radius)
    raise MobiusError("could not place an inversion center off the surface")


# ---------------------------------------------------------------------------
# transformation laws


def _as_ambient_phi(phi, n: int) -> Expression:
    if isinstance(phi, Expression):
        return phi
    if isinstance(phi, str):
        return parse_expression(phi, ambient_variables(n))
    return Num(float(phi))


def h_transform_residual(f: Immersion, amb: AmbientMetric | None, phi, p) -> float:
    """Max residual of ``ho^ = e^phi ho`` and ``H^ = e^-phi (H - dphi(nu))``.

    Both frames are computed from scratch; the deformed normals are matched to
    the baseline ones through ``Q_ab = e^phi gbar(nu^_a, nu_b)``.
    """
    amb = amb or AmbientMetric.flat(f.n)
    phi = _as_ambient_phi(phi, f.n)
    base = frame_at(f, amb, p)
    hat = frame_at(f, amb.deformed(phi), p)
    deform = AmbientMetric(f.n, phi)
    val, grad, _ = deform.phi_jets(base.position)
    e2 = np.exp(2.0 * base.phi)
    ephi = np.exp(val)
    Q = ephi[..., None, None] * e2[..., None, None] * np.einsum("...an,...bn->...ab", hat.nu, base.nu)
    ho_pred = ephi[..., None, None, None] * np.einsum("...ab,...bij->...aij", Q, base.ho)
    dphi_nu = np.einsum("...an,...n->...a", base.nu, grad)
    H_pred = np.einsum("...ab,...b->...a", Q, (base.H - dphi_nu) / ephi[..., None])
    return float(max(np.max(np.abs(hat.ho - ho_pred)), np.max(np.abs(hat.H - H_pred))))


@dataclass(frozen=True)
class MetricChart:
    """A Riemannian metric given by a symmetric matrix of expressions in ``u1..ud``."""

    dim: int
    entries: tuple  # dim x dim expressions
    name: str = "metric"

    @classmethod
    def from_strings(cls, rows, name="metric") -> "MetricChart":
        d = len(rows)
        vs = chart_variables(d)
        entries = tuple(tuple(parse_expression(str(e), vs) for e in row) for row in rows)
        return cls(d, entries, name)

    @classmethod
    def flat(cls, d: int) -> "MetricChart":
        return cls.from_strings([["1" if i == j else "0" for j in range(d)] for i in range(d)], f"flat{d}")

    @classmethod
    def round_sphere(cls, d: int = 2) -> "MetricChart":
        """Round metric of S^d in hyperspherical coordinates."""
        rows = [["0"] * d for _ in range(d)]
        prefix = "1"
        for k in range(d):
            rows[k][k] = prefix
            prefix = f"{prefix}*sin(u{k + 1})^2" if k else f"sin(u{k + 1})^2"
        return cls.from_strings(rows, f"S{d}")

    @classmethod
    def random_polynomial(cls, d: int, rng, scale: float = 0.15) -> "MetricChart":
        """``I + scale * (symmetric quadratic polynomial matrix)``, SPD near the origin."""
        rng = np.random.default_rng(rng)
        vs = chart_variables(d)
        rows = [[None] * d for _ in range(d)]
        for i in range(d):
            for j in range(i, d):
                c0 = rng.uniform(-1, 1)
                lin = " + ".join(f"{rng.uniform(-1, 1):.6f}*{v}" for v in vs)
                quad = " + ".join(f"{rng.uniform(-1, 1):.6f}*{a}*{b}" for a, b in itertools.combinations_with_replacement(vs, 2))
                poly = f"{scale}*({c0:.6f} + {lin} + {quad})"
                rows[i][j] = rows[j][i] = (f"1 + {poly}" if i == j else poly)
        return cls.from_strings(rows, "random")

    def jets(self, points, order: int, phi: Expression | None = None):
        us = seed_variables(points, order)
        env = dict(zip(chart_variables(self.dim), us))
        scale = None
        if phi is not None:
            pv = evaluate(phi, env)
            scale = (2.0 * pv).exp() if isinstance(pv, Jet) else math.exp(2.0 * float(pv))
        out = []
        for row in self.entries:
            r = []
            for e in row:
                v = evaluate(e, env)
                v = v if isinstance(v, Jet) else us[0].lift(v)
                r.append(v * scale if scale is not None else v)
            out.append(r)
        return out


def curvature_transform_residual(metric: MetricChart, phi, p) -> float:
    """Max residual between ``R`` of ``e^{2 phi} g`` computed directly and by the transformation law."""
    phi = phi if isinstance(phi, Expression) else parse_expression(str(phi), chart_variables(metric.dim))
    p = np.atleast_2d(np.asarray(p, dtype=float))
    g, dg, ddg = metric_derivatives(metric.jets(p, 2))
    R = riemann_from_metric(g, dg, ddg)
    gh, dgh, ddgh = metric_derivatives(metric.jets(p, 2, phi))
    R_direct = riemann_from_metric(gh, dgh, ddgh)
    us = seed_variables(p, 2)
    pj = evaluate(phi, dict(zip(chart_variables(metric.dim), us)))
    if not isinstance(pj, Jet):
        pj = us[0].lift(pj)
    grad = np.moveaxis(pj.gradient(), 0, -1)
    hess = np.moveaxis(pj.hessian(), (0, 1), (-2, -1))
    cov_hess = hess - np.einsum("...kij,...k->...ij", christoffel(g, dg), grad)
    R_law = conformal_curvature(R, g, grad, cov_hess, pj.value)
    return float(np.max(np.abs(R_direct - R_law)))


# ---------------------------------------------------------------------------
# I-operator and sweeps


def _check_weight(P: ContractionSum, m: int):
    bad = sorted(w for w in P.weights() if w != -m)
    if bad:
        raise WeightMismatchError(f"I-operator needs weight {-m} terms, got weights {sorted(P.weights())}")


def I_operator(P: ContractionSum, phi, f: Immersion, amb: AmbientMetric | None, p) -> np.ndarray:
    """``e^{m phi(f(p))} P(frame under e^{2 phi} gbar) - P(frame under gbar)``."""
    amb = amb or AmbientMetric.flat(f.n)
    _check_weight(P, f.m)
    phi = _as_ambient_phi(phi, f.n)
    base = frame_at(f, amb, p)
    hat = frame_at(f, amb.deformed(phi), p)
    val, _, _ = AmbientMetric(f.n, phi).phi_jets(base.position)
    out = np.exp(f.m * val) * P.evaluate(hat) - P.evaluate(base)
    return out


@dataclass(frozen=True)
class SweepEntry:
    phi: str
    scale: float
    baseline: float
    deformed: float
    integral_I: float


@dataclass(frozen=True)
class InvarianceReport:
    P: str
    surface: str
    resolution: tuple
    area: float
    entries: tuple
    max_abs_integral: float
    tolerance: float
    falsify_threshold: float
    verdict: str  # "invariant" | "non-invariant" | "inconclusive"

    def to_dict(self) -> dict:
        return {
            "P": self.P,
            "surface": self.surface,
            "resolution": list(self.resolution),
            "area": self.area,
            "entries": [e.__dict__ for e in self.entries],
            "max_abs_integral": self.max_abs_integral,
            "tolerance": self.tolerance,
            "falsify_threshold": self.falsify_threshold,
            "verdict": self.verdict,
        }


LAMBDAS = (0.25, 0.5, 1.0, 2.0)


def phi_family(f: Immersion, grid: QuadratureGrid | None = None, sup: float = 0.3) -> list[Expression]:
    """Linear, square, product, rational-bump and cubic factors scaled to ``sup|phi| <= sup`` on the bounding box."""
    n = f.n
    x = [Var(v) for v in ambient_variables(n)]
    grid = grid or build_grid(f.domain, 16 if f.m <= 2 else 6)
    pos = f.positions(grid.nodes)
    lo, hi = pos.min(axis=0), pos.max(axis=0)
    center = 0.5 * (lo + hi)
    x0 = center + 0.3 * (hi - lo) * np.linspace(0.5, -0.5, n)
    weights = [1.0, -0.7, 0.45, 0.3, -0.2][:n]
    linear = None
    for w, xi in zip(weights, x):
        t = Num(w) * xi
        linear = t if linear is None else linear + t
    dist = None
    for xi, c in zip(x, x0):
        t = (xi - Num(float(c))) ** Num(2.0)
        dist = t if dist is None else dist + t
    rational = Num(1.0) / (Num(1.0) + dist)
    cubic = x[0] * x[1] * x[2] if n >= 3 else x[0] ** Num(3.0)
    family = [linear, x[0] ** Num(2.0), x[0] * x[1], rational, cubic]
    # sample the box on a lattice to bound sup|phi|
    axes = [np.linspace(a, b, 7) for a, b in zip(lo, hi)]
    box = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    env = {v: box[:, i] for i, v in enumerate(ambient_variables(n))}
    out = []
    for phi in family:
        m = float(np.max(np.abs(np.broadcast_to(evaluate(phi, env), (len(box),)))))
        out.append(Num(sup / m) * phi if m > 0 else phi)
    return out


def invariance_sweep(
    P: ContractionSum,
    f: Immersion,
    amb: AmbientMetric | None = None,
    phis=None,
    grid: QuadratureGrid | None = None,
    lambdas=LAMBDAS,
    tol: float = 1e-6,
    falsify: float = 1e-3,
) -> InvarianceReport:
    """Integrate the I-operator over ``f`` for every ``lambda * phi``.

    Verdict: ``invariant`` if every ``|int I|`` is at most ``tol * area``,
    ``non-invariant`` if some exceeds ``falsify``, otherwise ``inconclusive``.
    """
    amb = amb or AmbientMetric.flat(f.n)
    _check_weight(P, f.m)
    grid = grid or build_grid(f.domain, default_resolution(f.m))
    phis = phi_family(f) if phis is None else [_as_ambient_phi(p, f.n) for p in phis]
    area = integrate(f, amb, grid, lambda fr: 1.0)
    baseline = integrate(f, amb, grid, P.evaluate)
    entries = []
    for phi in phis:
        for lam in lambdas:
            scaled = Num(float(lam)) * phi
            deformed = integrate(f, amb.deformed(scaled), grid, P.evaluate)
            entries.append(SweepEntry(to_text(phi), float(lam), baseline, deformed, deformed - baseline))
    worst = max(abs(e.integral_I) for e in entries) if entries else 0.0
    if worst <= tol * area:
        verdict = "invariant"
    elif worst > falsify:
        verdict = "non-invariant"
    else:
        verdict = "inconclusive"
    return InvarianceReport(
        P=str(P), surface=f.name, resolution=grid.resolution, area=area, entries=tuple(entries),
        max_abs_integral=worst, tolerance=tol * area, falsify_threshold=falsify, verdict=verdict,
    )

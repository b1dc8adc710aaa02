"""Immersions into conformally flat space and their pointwise geometry.

Index conventions used throughout (batch axes first):

* ``g[..., i, j]``          induced metric, ``ginv`` its inverse
* ``nu[..., a, :]``         ambient components of the a-th unit normal
* ``h[..., a, i, j]``       second fundamental form along ``nu[a]``
* ``R[..., i, j, k, l]``    intrinsic curvature with ``R_1212 = K det g``
* ``Rperp[..., i, j, a, b]`` normal curvature ``<Rperp(d_i, d_j) nu_b, nu_a>``

With these conventions the Gauss equation reads
``Rbar_ijkl = R_ijkl + h_il.h_jk - h_ik.h_jl``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ImmersionError
from .expressions import (
    Expression,
    Num,
    as_expression,
    evaluate,
    free_variables,
    is_zero,
    parse_expression,
    to_text,
)
from .jets import Jet, seed_variables

RANK_TOL = 1e-8


@dataclass(frozen=True)
class Interval:
    min: float
    max: float
    periodic: bool = False

    @property
    def length(self) -> float:
        return self.max - self.min

    def to_dict(self) -> dict:
        return {"min": self.min, "max": self.max, "periodic": self.periodic}


def chart_variables(m: int) -> tuple[str, ...]:
    return tuple(f"u{i + 1}" for i in range(m))


def ambient_variables(n: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(n))


@dataclass(frozen=True)
class Immersion:
    """A parametrized immersion ``f: chart -> R^n`` of codimension 1 or 2."""

    m: int
    n: int
    components: tuple
    domain: tuple
    flip_normal: bool = False
    name: str = "immersion"

    def __post_init__(self):
        if self.m < 1 or self.n - self.m not in (1, 2):
            raise ValueError(f"need codimension 1 or 2, got m={self.m}, n={self.n}")
        if len(self.components) != self.n:
            raise ValueError(f"expected {self.n} components, got {len(self.components)}")
        if len(self.domain) != self.m:
            raise ValueError(f"expected {self.m} domain intervals, got {len(self.domain)}")
        allowed = set(self.chart_variables)
        for comp in self.components:
            extra = free_variables(comp) - allowed
            if extra:
                raise ValueError(f"component uses unknown variables {sorted(extra)}")

    @property
    def codim(self) -> int:
        return self.n - self.m

    @property
    def chart_variables(self) -> tuple[str, ...]:
        return chart_variables(self.m)

    @classmethod
    def from_strings(cls, components, domain, flip_normal=False, name="immersion"):
        m = len(domain)
        variables = chart_variables(m)
        comps = tuple(
            c if isinstance(c, Expression) else parse_expression(str(c), variables)
            for c in components
        )
        dom = tuple(d if isinstance(d, Interval) else Interval(**d) for d in domain)
        return cls(m, len(comps), comps, dom, flip_normal, name)

    @classmethod
    def from_dict(cls, doc: dict) -> "Immersion":
        imm = cls.from_strings(
            doc["components"],
            doc["domain"],
            flip_normal=bool(doc.get("flip_normal", False)),
            name=doc.get("name", "immersion"),
        )
        if "m" in doc and doc["m"] != imm.m:
            raise ValueError(f"m={doc['m']} disagrees with {imm.m} domain intervals")
        if "n" in doc and doc["n"] != imm.n:
            raise ValueError(f"n={doc['n']} disagrees with {imm.n} components")
        return imm

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "components": [to_text(c) for c in self.components],
            "domain": [d.to_dict() for d in self.domain],
            "flip_normal": self.flip_normal,
            "name": self.name,
        }

    def flipped(self) -> "Immersion":
        return replace(self, flip_normal=not self.flip_normal)

    def positions(self, points) -> np.ndarray:
        """Plain evaluation ``f(points)``; shape ``(..., n)``."""
        points = np.asarray(points, dtype=float)
        env = {v: points[..., i] for i, v in enumerate(self.chart_variables)}
        cols = [np.broadcast_to(np.asarray(evaluate(c, env), dtype=float), points.shape[:-1])
                for c in self.components]
        return np.stack(cols, axis=-1)

    def jets(self, points, order: int) -> list[Jet]:
        us = seed_variables(points, order)
        env = dict(zip(self.chart_variables, us))
        out = []
        for comp in self.components:
            v = evaluate(comp, env)
            out.append(v if isinstance(v, Jet) else us[0].lift(v))
        return out


@dataclass(frozen=True)
class AmbientMetric:
    """The metric ``exp(2 phi) * delta`` on R^n; flat when ``phi`` is zero."""

    n: int
    phi: Expression = field(default_factory=lambda: Num(0.0))

    def __post_init__(self):
        extra = free_variables(self.phi) - set(ambient_variables(self.n))
        if extra:
            raise ValueError(f"conformal factor uses unknown variables {sorted(extra)}")

    @classmethod
    def flat(cls, n: int) -> "AmbientMetric":
        return cls(n)

    @classmethod
    def from_text(cls, n: int, text: str) -> "AmbientMetric":
        return cls(n, parse_expression(text, ambient_variables(n)))

    @property
    def is_flat(self) -> bool:
        return is_zero(self.phi)

    @property
    def variables(self) -> tuple[str, ...]:
        return ambient_variables(self.n)

    def deformed(self, phi) -> "AmbientMetric":
        """The metric ``exp(2 phi) * self``."""
        phi = as_expression(phi)
        if is_zero(phi):
            return self
        if self.is_flat:
            return AmbientMetric(self.n, phi)
        return AmbientMetric(self.n, self.phi + phi)

    def phi_jets(self, positions, order: int = 2):
        """Value, gradient ``(..., n)`` and Hessian ``(..., n, n)`` of phi."""
        positions = np.asarray(positions, dtype=float)
        shape = positions.shape[:-1]
        n = self.n
        if self.is_flat:
            return np.zeros(shape), np.zeros(shape + (n,)), np.zeros(shape + (n, n))
        xs = seed_variables(positions, order)
        val = evaluate(self.phi, dict(zip(self.variables, xs)))
        if not isinstance(val, Jet):
            return np.broadcast_to(float(val), shape).copy(), np.zeros(shape + (n,)), np.zeros(shape + (n, n))
        grad = np.moveaxis(val.gradient(), 0, -1)
        hess = np.moveaxis(val.hessian(), (0, 1), (-2, -1))
        return val.value, grad, hess


@dataclass(frozen=True)
class PointFrame:
    """Geometric tensors of an immersion at one or more chart points."""

    g: np.ndarray
    ginv: np.ndarray
    h: np.ndarray
    H: np.ndarray
    ho: np.ndarray
    R: np.ndarray
    Rperp: np.ndarray
    vol: np.ndarray
    nu: np.ndarray | None = None
    Rbar: np.ndarray | None = None
    position: np.ndarray | None = None
    tangent: np.ndarray | None = None
    phi: np.ndarray | None = None
    dphi: np.ndarray | None = None

    @property
    def m(self) -> int:
        return self.g.shape[-1]

    @property
    def codim(self) -> int:
        return self.h.shape[-3]

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.g.shape[:-2]

    @property
    def gauss_curvature(self) -> np.ndarray:
        """Sectional curvature of the (1,2)-plane; the Gauss curvature when m = 2."""
        return self.R[..., 0, 1, 0, 1] / np.linalg.det(self.g)

    @property
    def normal_curvature(self) -> np.ndarray:
        """``K_perp = Rperp(e1, e2, e3, e4)`` in an oriented orthonormal frame (m = 2)."""
        if self.codim != 2:
            return np.zeros(self.batch_shape)
        return self.Rperp[..., 0, 1, 0, 1] / self.vol

    @property
    def ambient_sectional(self) -> np.ndarray:
        if self.Rbar is None:
            return np.zeros(self.batch_shape)
        return self.Rbar[..., 0, 1, 0, 1] / np.linalg.det(self.g)

    def rescaled(self, t: float) -> "PointFrame":
        """The frame of the same immersion under the homothety ``gbar -> t^2 gbar``."""
        t = float(t)
        return replace(
            self,
            g=self.g * t**2,
            ginv=self.ginv / t**2,
            h=self.h * t,
            H=self.H / t,
            ho=self.ho * t,
            R=self.R * t**2,
            vol=self.vol * t**self.m,
            nu=None if self.nu is None else self.nu / t,
            Rbar=None if self.Rbar is None else self.Rbar * t**2,
        )

    def take(self, index) -> "PointFrame":
        """Select batch entries with numpy indexing."""
        vals = {}
        for name in self.__dataclass_fields__:
            arr = getattr(self, name)
            vals[name] = None if arr is None else arr[index]
        return PointFrame(**vals)


def conformal_curvature(R, g, grad, hess, phi):
    """Curvature of ``exp(2 phi) g`` from that of ``g``.

    ``grad`` is d phi, ``hess`` the covariant Hessian of phi w.r.t. ``g``;
    all arrays carry the same leading batch axes.
    """
    ginv = np.linalg.inv(g)
    dphi2 = np.einsum("...ab,...a,...b->...", ginv, grad, grad)
    gg = np.einsum
    out = (
        R
        + gg("...ad,...bc->...abcd", hess, g)
        + gg("...bc,...ad->...abcd", hess, g)
        - gg("...ac,...bd->...abcd", hess, g)
        - gg("...bd,...ac->...abcd", hess, g)
        + gg("...a,...c,...bd->...abcd", grad, grad, g)
        + gg("...b,...d,...ac->...abcd", grad, grad, g)
        - gg("...a,...d,...bc->...abcd", grad, grad, g)
        - gg("...b,...c,...ad->...abcd", grad, grad, g)
        + dphi2[..., None, None, None, None] * (
            gg("...ad,...bc->...abcd", g, g) - gg("...ac,...bd->...abcd", g, g)
        )
    )
    return np.exp(2.0 * phi)[..., None, None, None, None] * out


def christoffel(g, dg):
    """Second-kind symbols ``Gamma[..., p, i, j]``; ``dg[..., a, i, j] = d_a g_ij``."""
    first = 0.5 * (
        np.einsum("...ijk->...kij", dg)  # d_i g_jk  -> [k, i, j]
        + np.einsum("...jik->...kij", dg)  # d_j g_ik
        - np.einsum("...kij->...kij", dg)  # d_k g_ij
    )
    return np.einsum("...pk,...kij->...pij", np.linalg.inv(g), first)


def riemann_from_metric(g, dg, ddg):
    """Riemann tensor of a metric from its first and second partial derivatives.

    ``ddg[..., a, b, i, j] = d_a d_b g_ij``. Returns ``R[..., i, j, k, l]`` with
    ``R_1212 = K det g``.
    """
    gam = christoffel(g, dg)
    second = 0.5 * (
        np.einsum("...jkil->...ijkl", ddg)
        + np.einsum("...iljk->...ijkl", ddg)
        - np.einsum("...ikjl->...ijkl", ddg)
        - np.einsum("...jlik->...ijkl", ddg)
    )
    quad = np.einsum("...pq,...pjk,...qil->...ijkl", g, gam, gam) - np.einsum(
        "...pq,...pik,...qjl->...ijkl", g, gam, gam
    )
    return second + quad


def metric_derivatives(entries: list[list[Jet]]):
    """Values, first and second derivatives of a symmetric matrix of jets."""
    d = len(entries)
    batch = entries[0][0].batch_shape
    g = np.empty(batch + (d, d))
    dg = np.empty(batch + (d, d, d))
    ddg = np.empty(batch + (d, d, d, d))
    for i in range(d):
        for j in range(d):
            jet = entries[i][j]
            g[..., i, j] = jet.value
            dg[..., :, i, j] = np.moveaxis(jet.gradient(), 0, -1)
            ddg[..., :, :, i, j] = np.moveaxis(jet.hessian(), (0, 1), (-2, -1))
    return g, dg, ddg


def _normal_frame(X, flip, pts):
    """Euclidean-orthonormal normals by Gram-Schmidt on the coordinate axes.

    At each point the axis with the largest rejection from the current span
    is taken next (lowest index on ties); the last normal is signed so that
    ``(X_1..X_m, nu_1..nu_c)`` is positively oriented.
    """
    N, m, n = X.shape
    c = n - m
    Q, _ = np.linalg.qr(np.swapaxes(X, -1, -2))
    P = np.eye(n) - Q @ np.swapaxes(Q, -1, -2)
    normals = []
    rows = np.arange(N)
    for _ in range(c):
        norms = np.linalg.norm(P, axis=-2)  # column norms
        k = np.argmax(norms, axis=-1)
        best = norms[rows, k]
        bad = np.flatnonzero(best < RANK_TOL)
        if bad.size:
            raise ImmersionError("degenerate normal complement", pts[bad[0]])
        v = P[rows, :, k] / best[:, None]
        normals.append(v)
        P = P - v[:, :, None] * v[:, None, :]
    nu = np.stack(normals, axis=1)
    orient = np.linalg.det(np.concatenate([X, nu], axis=1))
    sign = np.where(orient < 0, -1.0, 1.0)
    if flip:
        sign = -sign
    nu[:, -1, :] *= sign[:, None]
    return nu


def frame_at(f: Immersion, amb: AmbientMetric | None, points) -> PointFrame:
    """All geometric tensors of ``f`` at chart ``points`` (shape ``(m,)`` or ``(N, m)``)."""
    amb = amb or AmbientMetric.flat(f.n)
    if amb.n != f.n:
        raise ValueError(f"ambient dimension {amb.n} != immersion target dimension {f.n}")
    points = np.asarray(points, dtype=float)
    single = points.ndim == 1
    pts = np.atleast_2d(points)
    m, n = f.m, f.n

    comps = f.jets(pts, order=2)
    pos = np.stack([c.value for c in comps], axis=-1)
    X = np.stack([np.moveaxis(c.gradient(), 0, -1) for c in comps], axis=-1)  # (N, m, n)
    D2 = np.stack([np.moveaxis(c.hessian(), (0, 1), (-2, -1)) for c in comps], axis=-1)

    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(D2))):
        bad = np.flatnonzero(~np.isfinite(X).all(axis=(1, 2)) | ~np.isfinite(D2).all(axis=(1, 2, 3)))
        raise ImmersionError("non-finite derivatives", pts[bad[0]])
    phi, dphi, hphi = amb.phi_jets(pos, order=2)
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(hphi))):
        bad = np.flatnonzero(~np.isfinite(phi) | ~np.isfinite(hphi).all(axis=(1, 2)))
        raise ImmersionError("conformal factor is not finite", pts[bad[0]])
    e1 = np.exp(phi)
    e2 = e1**2

    G = X @ np.swapaxes(X, -1, -2)
    sv = np.linalg.svd(X, compute_uv=False)[:, -1]
    bad = np.flatnonzero(sv <= RANK_TOL)
    if bad.size:
        raise ImmersionError("differential is rank deficient", pts[bad[0]])
    g = e2[:, None, None] * G
    ginv = np.linalg.inv(g)
    vol = np.sqrt(np.linalg.det(g))

    nuE = _normal_frame(X, f.flip_normal, pts)
    nu = nuE / e1[:, None, None]

    dphi_n = np.einsum("nak,nk->na", nuE, dphi)
    hE = np.einsum("nijk,nak->naij", D2, nuE) - G[:, None] * dphi_n[:, :, None, None]
    h = e1[:, None, None, None] * hE
    H = np.einsum("nij,naij->na", ginv, h) / m
    ho = h - H[:, :, None, None] * g[:, None]

    c = n - m
    if amb.is_flat:
        Rbar_t = np.zeros((len(pts), m, m, m, m))
        Rbar_n = np.zeros((len(pts), m, m, c, c))
    else:
        eye = np.broadcast_to(np.eye(n), (len(pts), n, n))
        Rbar4 = conformal_curvature(np.zeros((len(pts), n, n, n, n)), eye, dphi, hphi, phi)
        Rbar_t = np.einsum("nabcd,nia,njb,nkc,nld->nijkl", Rbar4, X, X, X, X, optimize=True)
        Rbar_n = np.einsum("nabcd,nia,njb,npc,nqd->nijpq", Rbar4, X, X, nu, nu, optimize=True)

    R = (
        Rbar_t
        + np.einsum("naik,najl->nijkl", h, h)
        - np.einsum("nail,najk->nijkl", h, h)
    )
    if c == 2:
        Rperp = (
            Rbar_n
            + np.einsum("naik,nkl,nbjl->nijab", h, ginv, h)
            - np.einsum("nbik,nkl,najl->nijab", h, ginv, h)
        )
    else:
        Rperp = np.zeros((len(pts), m, m, 1, 1))

    frame = PointFrame(
        g=g, ginv=ginv, h=h, H=H, ho=ho, R=R, Rperp=Rperp, vol=vol, nu=nu,
        Rbar=Rbar_t, position=pos, tangent=X, phi=phi, dphi=dphi,
    )
    return frame.take(0) if single else frame


def intrinsic_curvature_direct(f: Immersion, amb: AmbientMetric | None, points) -> np.ndarray:
    """Riemann tensor of the induced metric computed from its Christoffel symbols.

    Independent of the second fundamental form; needs third derivatives of ``f``.
    """
    amb = amb or AmbientMetric.flat(f.n)
    points = np.asarray(points, dtype=float)
    single = points.ndim == 1
    pts = np.atleast_2d(points)
    comps = f.jets(pts, order=3)
    dX = [[c.derivative(i) for c in comps] for i in range(f.m)]
    if amb.is_flat:
        scale = None
    else:
        phi_f = evaluate(amb.phi, dict(zip(amb.variables, comps)))
        scale = (2.0 * phi_f).exp().truncate(2) if isinstance(phi_f, Jet) else np.exp(2.0 * float(phi_f))
    entries = []
    for i in range(f.m):
        row = []
        for j in range(f.m):
            gij = dX[i][0] * dX[j][0]
            for k in range(1, f.n):
                gij = gij + dX[i][k] * dX[j][k]
            if scale is not None:
                gij = gij * scale
            row.append(gij)
        entries.append(row)
    g, dg, ddg = metric_derivatives(entries)
    R = riemann_from_metric(g, dg, ddg)
    return R[0] if single else R

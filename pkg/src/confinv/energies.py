"""Willmore-type energies, their pointwise integrands and algebraic identity checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gamma

from .geometry import AmbientMetric, Immersion, PointFrame
from .quadrature import QuadratureGrid, build_grid, coarsened, default_resolution, integrate

# ---------------------------------------------------------------------------
# pointwise algebra on shape operators A = g^-1 h


def shape_operators(frame: PointFrame, normal: int = 0):
    """``A = g^-1 h`` and ``A0 = g^-1 ho`` along one normal."""
    A = frame.ginv @ frame.h[..., normal, :, :]
    A0 = frame.ginv @ frame.ho[..., normal, :, :]
    return A, A0


def _tr_pow(A, p):
    return np.trace(np.linalg.matrix_power(A, p), axis1=-2, axis2=-1)


def det_g(h, g=None):
    """``det(g^-1 h)``."""
    return np.linalg.det(h if g is None else np.linalg.solve(g, h))


def willmore_integrand(frame: PointFrame) -> np.ndarray:
    """``|H|^2 + Kbar`` with ``Kbar`` the ambient sectional curvature of the tangent plane."""
    return np.sum(frame.H**2, axis=-1) + frame.ambient_sectional


def ho_norm_sq(frame: PointFrame) -> np.ndarray:
    return np.einsum("...ij,...ajk,...kl,...ali->...", frame.ginv, frame.ho, frame.ginv, frame.ho)


def conformal_willmore_integrand(frame: PointFrame) -> np.ndarray:
    return 0.5 * ho_norm_sq(frame) + frame.gauss_curvature


def gauss_integrand(frame: PointFrame) -> np.ndarray:
    return frame.gauss_curvature


def normal_curvature_integrand(frame: PointFrame) -> np.ndarray:
    return frame.normal_curvature


def det_h_integrand(frame: PointFrame) -> np.ndarray:
    return np.linalg.det(shape_operators(frame)[0])


def p4_integrand(frame: PointFrame) -> np.ndarray:
    A, A0 = shape_operators(frame)
    return np.linalg.det(A) - np.linalg.det(A0)


def z_pab(A0, alpha: float, beta: float):
    """``1/4 Tr A0^4 + (1/(4 alpha) - 1/8) |A0|^4 + |Tr A0^3|^(4/3) / (4 beta^(1/3))``."""
    n2 = _tr_pow(A0, 2)
    return (
        0.25 * _tr_pow(A0, 4)
        + (0.25 / alpha - 0.125) * n2**2
        + np.abs(_tr_pow(A0, 3)) ** (4.0 / 3.0) / (4.0 * beta ** (1.0 / 3.0))
    )


def z_cnorm(A0, C: float, n: int):
    """``C |A0|^(2n)``."""
    return C * _tr_pow(A0, 2) ** n


def pab_pointwise(A, A0, alpha: float, beta: float):
    return np.linalg.det(A) + z_pab(A0, alpha, beta)


def pab_integrand(alpha: float, beta: float) -> Callable[[PointFrame], np.ndarray]:
    def integrand(frame):
        A, A0 = shape_operators(frame)
        return pab_pointwise(A, A0, alpha, beta)

    return integrand


def young_bound(A, alpha: float, beta: float):
    """``(1 - (3 alpha + beta)/12) H^4``, ``H = Tr(A)/4``."""
    H = np.trace(A, axis1=-2, axis2=-1) / 4.0
    return (1.0 - (3.0 * alpha + beta) / 12.0) * H**4


def _det4(A):
    """Permutation expansion of a 4x4 determinant; exact on diagonal input, unlike LU."""
    total = 0.0
    for perm in itertools.permutations(range(4)):
        sign = (-1) ** sum(perm[i] > perm[j] for i in range(4) for j in range(i + 1, 4))
        total = total + sign * A[..., 0, perm[0]] * A[..., 1, perm[1]] * A[..., 2, perm[2]] * A[..., 3, perm[3]]
    return total


def quartic_traceless_residual(ho, g=None, tol: float = 1e-10):
    """``Tr(A0^4) - |A0|^4 / 2 + 4 det(A0)`` for 4x4 traceless ``A0``; vanishes identically."""
    A0 = np.asarray(ho, dtype=float)
    if g is not None:
        A0 = np.linalg.solve(g, A0)
    if A0.shape[-2:] != (4, 4):
        raise ValueError("quartic identity needs 4x4 matrices")
    tr = np.trace(A0, axis1=-2, axis2=-1)
    scale = 1.0 + np.sqrt(np.abs(_tr_pow(A0, 2)))
    if np.any(np.abs(tr) >= tol * scale):
        raise ValueError(f"matrix is not traceless (trace {np.max(np.abs(tr)):.3g})")
    return _tr_pow(A0, 4) - 0.5 * _tr_pow(A0, 2) ** 2 + 4.0 * _det4(A0)


def newton_expansion_residuals(h, g):
    """Residuals of the three expansions of ``det_g(h)`` for 4x4 symmetric ``h``, SPD ``g``.

    r1: in ``H, |h|^2, Tr h^3, Tr h^4``; r2: in ``H`` and powers of ``ho``;
    r3: ``det_g(h) - det_g(ho)`` in ``H, |ho|^2, Tr ho^3``.
    """
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    if h.shape[-2:] != (4, 4) or g.shape[-2:] != (4, 4):
        raise ValueError("Newton expansions need 4x4 matrices")
    if not np.allclose(g, np.swapaxes(g, -1, -2)) or np.any(np.linalg.eigvalsh(g) <= 0):
        raise ValueError("g must be symmetric positive definite")
    A = np.linalg.solve(g, h)
    H = np.trace(A, axis1=-2, axis2=-1) / 4.0
    A0 = A - H[..., None, None] * np.eye(4)
    d = np.linalg.det(A)
    n2, t3, t4 = _tr_pow(A, 2), _tr_pow(A, 3), _tr_pow(A, 4)
    o2, o3, o4 = _tr_pow(A0, 2), _tr_pow(A0, 3), _tr_pow(A0, 4)
    r1 = d - (32.0 / 3.0 * H**4 - 4.0 * H**2 * n2 + 4.0 / 3.0 * H * t3 + n2**2 / 8.0 - t4 / 4.0)
    r2 = d - (H**4 - 0.5 * H**2 * o2 + H * o3 / 3.0 + o2**2 / 8.0 - o4 / 4.0)
    r3 = (d - np.linalg.det(A0)) - (H**4 - 0.5 * H**2 * o2 + H * o3 / 3.0)
    return r1, r2, r3


def principal_gap_exact(kappas) -> Fraction:
    """``det(h) - det(ho)`` for principal curvatures ``kappas`` in exact arithmetic."""
    ks = [Fraction(k) for k in kappas]
    H = sum(ks) / len(ks)
    return math.prod(ks) - math.prod(k - H for k in ks)


def pfaffian4(R, g):
    """``(|Rm|^2 - 4|Ric|^2 + S^2)/24``; integrates to ``(4 pi^2 / 3) chi`` in dimension 4."""
    R = np.asarray(R, dtype=float)
    g = np.asarray(g, dtype=float)
    if g.shape[-1] != 4:
        raise ValueError("pfaffian4 needs a 4-dimensional metric")
    gi = np.linalg.inv(g)
    Rup = np.einsum("...ia,...jb,...kc,...ld,...abcd->...ijkl", gi, gi, gi, gi, R, optimize=True)
    rm2 = np.einsum("...ijkl,...ijkl->...", Rup, R)
    ric = np.einsum("...ik,...ijkl->...jl", gi, R)
    ric_up = gi @ ric @ gi
    ric2 = np.einsum("...jl,...jl->...", ric_up, ric)
    S = np.einsum("...jl,...jl->...", gi, ric)
    return (rm2 - 4.0 * ric2 + S**2) / 24.0


def sphere_area(k: int) -> float:
    """Area of the unit sphere ``S^k`` in ``R^(k+1)``."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / gamma((k + 1) / 2.0)


# ---------------------------------------------------------------------------
# energies


ENERGY_KINDS = (
    "willmore", "conformal-willmore", "gauss-curvature", "normal-euler", "det-h", "P4", "Pab", "F",
)


@dataclass(frozen=True)
class EnergySpec:
    kind: str
    alpha: float = 2.0
    beta: float = 6.0
    z_kind: str = "pab-form"  # or "c-norm"
    C: float = 1.0

    def __post_init__(self):
        if self.kind not in ENERGY_KINDS:
            raise ValueError(f"unknown energy {self.kind!r}; choose from {', '.join(ENERGY_KINDS)}")
        if self.kind == "Pab" or (self.kind == "F" and self.z_kind == "pab-form"):
            if not (self.alpha > 0 and self.beta > 0):
                raise ValueError("Pab needs alpha > 0 and beta > 0")
        if self.kind == "F" and self.z_kind not in ("pab-form", "c-norm"):
            raise ValueError("Z kind must be 'pab-form' or 'c-norm'")
        if self.kind == "F" and self.z_kind == "c-norm" and not self.C > 0:
            raise ValueError("c-norm needs C > 0")

    @property
    def certified_positive(self) -> bool:
        return self.kind == "Pab" and 3.0 * self.alpha + self.beta <= 12.0

    def label(self) -> str:
        if self.kind == "Pab":
            return f"Pab(alpha={self.alpha!r},beta={self.beta!r})"
        if self.kind == "F":
            if self.z_kind == "c-norm":
                return f"F(c-norm,C={self.C!r})"
            return f"F(pab-form,alpha={self.alpha!r},beta={self.beta!r})"
        return self.kind

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha, "beta": self.beta, "z_kind": self.z_kind, "C": self.C}


@dataclass(frozen=True)
class EnergyReport:
    energy: str
    surface: str
    value: float
    resolution: tuple
    est_error: float
    min_integrand: float

    def to_dict(self) -> dict:
        return {
            "surface": self.surface,
            "energy": self.energy,
            "value": self.value,
            "resolution": list(self.resolution),
            "est_error": self.est_error,
            "min_integrand": self.min_integrand,
        }


def _integrand_for(spec: EnergySpec, f: Immersion, amb: AmbientMetric):
    m, c = f.m, f.codim
    kind = spec.kind
    if kind in ("willmore", "conformal-willmore", "gauss-curvature", "normal-euler") and m != 2:
        raise ValueError(f"{kind} needs a surface (m = 2), got m = {m}")
    if kind == "normal-euler" and c != 2:
        raise ValueError("normal Euler number needs codimension 2")
    if kind in ("det-h", "P4", "Pab", "F"):
        if c != 1:
            raise ValueError(f"{kind} needs a hypersurface (codimension 1)")
        if not amb.is_flat:
            raise ValueError(f"{kind} is defined for hypersurfaces of flat space")
        if kind in ("P4", "Pab") and m != 4:
            raise ValueError(f"{kind} needs m = 4, got m = {m}")
        if kind in ("det-h", "F") and m % 2:
            raise ValueError(f"{kind} needs even m, got m = {m}")
    if kind == "willmore":
        return willmore_integrand
    if kind == "conformal-willmore":
        return conformal_willmore_integrand
    if kind == "gauss-curvature":
        return gauss_integrand
    if kind == "normal-euler":
        return normal_curvature_integrand
    if kind == "det-h":
        return det_h_integrand
    if kind == "P4":
        return p4_integrand
    if kind == "Pab":
        return pab_integrand(spec.alpha, spec.beta)
    n = m // 2
    if spec.z_kind == "c-norm":
        def integrand(frame):
            A, A0 = shape_operators(frame)
            return np.linalg.det(A) + z_cnorm(A0, spec.C, n)
    else:
        if m != 4:
            raise ValueError("the pab-form Z is defined for m = 4")

        def integrand(frame):
            A, A0 = shape_operators(frame)
            return np.linalg.det(A) + z_pab(A0, spec.alpha, spec.beta)
    return integrand


def _grid(f: Immersion, grid) -> QuadratureGrid:
    if isinstance(grid, QuadratureGrid):
        return grid
    if grid is None:
        grid = default_resolution(f.m)
    return build_grid(f.domain, grid)


def energy(f: Immersion, spec: EnergySpec | str, amb: AmbientMetric | None = None, grid=None,
           estimate_error: bool = True) -> EnergyReport:
    """Integrate the energy on ``grid``; the error estimate compares with half resolution."""
    spec = EnergySpec(spec) if isinstance(spec, str) else spec
    amb = amb or AmbientMetric.flat(f.n)
    integrand = _integrand_for(spec, f, amb)
    grid = _grid(f, grid)
    value, values = integrate(f, amb, grid, integrand, return_values=True)
    est = 0.0
    if estimate_error:
        coarse = build_grid(f.domain, coarsened(grid.resolution))
        est = abs(value - integrate(f, amb, coarse, integrand))
    return EnergyReport(spec.label(), f.name, float(value), grid.resolution, float(est), float(np.min(values)))


def willmore(f, amb=None, grid=None) -> EnergyReport:
    return energy(f, EnergySpec("willmore"), amb, grid)


def conformal_willmore(f, amb=None, grid=None) -> EnergyReport:
    return energy(f, EnergySpec("conformal-willmore"), amb, grid)


def euler_from_K(f, amb=None, grid=None) -> float:
    """``(1/2 pi) int K``."""
    spec = EnergySpec("gauss-curvature")
    amb = amb or AmbientMetric.flat(f.n)
    return integrate(f, amb, _grid(f, grid), _integrand_for(spec, f, amb)) / (2.0 * math.pi)


def normal_euler_from_Kperp(f, grid=None, amb=None) -> float:
    """``(1/2 pi) int K_perp``."""
    spec = EnergySpec("normal-euler")
    amb = amb or AmbientMetric.flat(f.n)
    return integrate(f, amb, _grid(f, grid), _integrand_for(spec, f, amb)) / (2.0 * math.pi)


def energy_P4(f, grid=None) -> EnergyReport:
    return energy(f, EnergySpec("P4"), None, grid)


def energy_Pab(f, alpha: float, beta: float, grid=None) -> EnergyReport:
    return energy(f, EnergySpec("Pab", alpha=alpha, beta=beta), None, grid)


def energy_F(f, z_kind: str = "pab-form", grid=None, *, alpha=2.0, beta=6.0, C=1.0) -> EnergyReport:
    return energy(f, EnergySpec("F", alpha=alpha, beta=beta, z_kind=z_kind, C=C), None, grid)


def gauss_degree(f, grid=None) -> float:
    """Degree of the Gauss map: ``int det_g(h) / area(S^m)``."""
    spec = EnergySpec("det-h")
    amb = AmbientMetric.flat(f.n)
    return integrate(f, amb, _grid(f, grid), _integrand_for(spec, f, amb)) / sphere_area(f.m)


# ---------------------------------------------------------------------------
# optimal constant C(n)


@dataclass(frozen=True)
class CEstimate:
    n: int
    value: float
    eigenvalues: tuple
    shift: float
    samples: int
    seed: int


def _worst_shift(lam: np.ndarray, S: float = 1.0) -> tuple[float, float]:
    """``max_s -prod(lam + s)`` over ``s in [-S, S]`` (grid, then bounded polish)."""
    s = np.linspace(-S, S, 401)
    vals = -np.prod(lam[None, :] + s[:, None], axis=1)
    k = int(np.argmax(vals))
    lo, hi = s[max(k - 1, 0)], s[min(k + 1, len(s) - 1)]
    res = minimize_scalar(lambda t: np.prod(lam + t), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13})
    if -res.fun >= vals[k]:
        return float(-res.fun), float(res.x)
    return float(vals[k]), float(s[k])


def _normalize(lam: np.ndarray) -> np.ndarray:
    lam = lam - lam.mean()
    return lam / np.linalg.norm(lam)


def estimate_C(n: int, samples: int = 20000, seed: int = 42, S: float = 1.0, sweeps: int = 200) -> CEstimate:
    """Smallest sampled ``C`` with ``det(ho + s I) + C |ho|^(2n) >= 0``.

    By homogeneity ``|ho| = 1``; the worst sampled eigenvalue configuration is
    then polished by coordinate descent along trace-free pair directions.
    """
    n = int(n)
    m = 2 * n
    rng = np.random.Generator(np.random.Philox(seed))
    lam = rng.standard_normal((samples, m))
    lam -= lam.mean(axis=1, keepdims=True)
    lam /= np.linalg.norm(lam, axis=1, keepdims=True)
    s = np.linspace(-S, S, 81)
    best_val = -np.inf
    best = None
    for chunk in range(0, samples, 2048):
        block = lam[chunk:chunk + 2048]
        vals = -np.prod(block[:, None, :] + s[None, :, None], axis=2)
        k = np.unravel_index(np.argmax(vals), vals.shape)
        if vals[k] > best_val:
            best_val, best = vals[k], block[k[0]].copy()
    lam = best
    value, shift = _worst_shift(lam, S)
    for _ in range(sweeps):
        improved = False
        for i in range(m):
            for j in range(i + 1, m):
                d = np.zeros(m)
                d[i], d[j] = 1.0, -1.0

                def neg(t, lam=lam, d=d):
                    return -_worst_shift(_normalize(lam + t * d), S)[0]

                res = minimize_scalar(neg, bounds=(-0.25, 0.25), method="bounded", options={"xatol": 1e-12})
                if -res.fun > value + 1e-15:
                    lam = _normalize(lam + res.x * d)
                    value, shift = _worst_shift(lam, S)
                    improved = True
        if not improved:
            break
    order = np.sort(lam)
    return CEstimate(n, float(max(value, 0.0)), tuple(float(x) for x in order), float(shift), samples, seed)

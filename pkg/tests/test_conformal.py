import math

import numpy as np
import pytest

from confinv.conformal import (
    Dilation,
    I_operator,
    Inversion,
    MetricChart,
    MobiusMap,
    Rotation,
    Translation,
    apply_mobius,
    curvature_transform_residual,
    h_transform_residual,
    invariance_sweep,
    phi_family,
    random_inversion,
)
from confinv.energies import willmore
from confinv.errors import MobiusError, WeightMismatchError
from confinv.geometry import AmbientMetric, frame_at
from confinv.quadrature import build_grid
from confinv.surfaces import clifford_torus, ellipsoid, graph, sphere, torus
from confinv.tensor_algebra import (
    conformal_willmore_sum,
    gauss_curvature_sum,
    ho_norm_sq_sum,
    mean_curvature_sq_sum,
    parse_sum,
)

ELLIPSOID = ellipsoid(1, 1.3, 0.8)
BUMP = "0.2*x1*x2 - 0.1*x3^2 + 0.05*x1"


def random_points(f, rng, count):
    return np.column_stack([rng.uniform(iv.min + 0.2, iv.max - 0.2, count) for iv in f.domain])


def random_polynomial_phi(rng, n, scale=0.2):
    terms = [f"{rng.uniform(-1, 1):.5f}*x{i + 1}" for i in range(n)]
    terms += [f"{rng.uniform(-1, 1):.5f}*x{i + 1}*x{j + 1}" for i in range(n) for j in range(i, n)]
    return f"{scale}*({' + '.join(terms)})"


# ---------------------------------------------------------------------------
# Moebius maps


def test_inversion_maps_sphere_of_radius_two_to_radius_half():
    f = apply_mobius(sphere(2, 2), MobiusMap((Inversion((0.0, 0.0, 0.0), 1.0),)))
    grid = build_grid(f.domain, 10)
    np.testing.assert_allclose(np.linalg.norm(f.positions(grid.nodes), axis=1), 0.5, rtol=1e-14)
    # the image is again a round sphere: |H| = 2 everywhere
    fr = frame_at(f, None, grid.nodes)
    np.testing.assert_allclose(np.abs(fr.H[:, 0]), 2.0, rtol=1e-10)


def test_inversion_centered_on_surface_is_rejected():
    with pytest.raises(MobiusError) as info:
        apply_mobius(sphere(2, 1), MobiusMap((Inversion((0.0, 0.0, 1.0)),)), build_grid(sphere(2, 1).domain, 8))
    assert info.value.node is not None
    # the node where the check fired is the closest one to the center
    assert np.linalg.norm(sphere(2, 1).positions(info.value.node[None])[0] - [0, 0, 1]) < 0.3


def test_primitives_compose_and_serialize():
    Q = ((0.0, -1.0, 0.0), (1.0, 0.0, 0.0), (0.0, 0.0, 1.0))
    T = MobiusMap((Translation((1.0, 0.0, 0.0)), Rotation(Q), Dilation(2.0), Inversion((5.0, 5.0, 5.0), 2.0)))
    back = MobiusMap.from_json(T.to_json())
    x = np.array([[0.3, 0.1, -0.2], [1.0, 2.0, 3.0]])
    np.testing.assert_allclose(T(x), back(x))
    f = apply_mobius(torus(2, 1), T)
    p = np.array([[0.4, 1.1], [2.0, 5.0]])
    np.testing.assert_allclose(f.positions(p), T(torus(2, 1).positions(p)), rtol=1e-13)


def test_invalid_primitives():
    with pytest.raises(ValueError):
        Rotation(((1.0, 1.0), (0.0, 1.0)))
    with pytest.raises(ValueError):
        Dilation(-1.0)
    with pytest.raises(ValueError):
        Inversion((0.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        MobiusMap.from_json([{"type": "shear"}])


def test_willmore_of_torus_is_unchanged_by_inversion(rng):
    f = torus(2, 1)
    base = willmore(f).value
    for _ in range(2):
        g = apply_mobius(f, MobiusMap((random_inversion(f, rng, min_distance=1.0),)))
        assert willmore(g, grid=96).value == pytest.approx(base, rel=1e-6)


def test_random_inversion_stays_off_surface(rng):
    f = ELLIPSOID
    inv = random_inversion(f, rng, min_distance=0.5)
    pos = f.positions(build_grid(f.domain, 24).nodes)
    assert np.min(np.linalg.norm(pos - np.asarray(inv.center), axis=1)) > 0.4


# ---------------------------------------------------------------------------
# transformation laws


def test_h_transform_identity_and_homothety():
    p = [[0.7, 1.0], [2.0, 4.0]]
    assert h_transform_residual(ELLIPSOID, None, 0.0, p) < 1e-14
    assert h_transform_residual(ELLIPSOID, None, 0.7, p) < 1e-8


@pytest.mark.parametrize("f", [ELLIPSOID, torus(2, 1), clifford_torus(1.0), graph("u1^2 - 0.5*u1*u2")])
def test_h_transform_random_polynomials(f, rng):
    for _ in range(5):
        phi = random_polynomial_phi(rng, f.n)
        assert h_transform_residual(f, None, phi, random_points(f, rng, 4)) < 1e-6


def test_h_transform_in_curved_ambient(rng):
    amb = AmbientMetric.from_text(3, BUMP)
    assert h_transform_residual(ELLIPSOID, amb, "0.1*x1^2 - 0.2*x2", random_points(ELLIPSOID, rng, 5)) < 1e-6


def test_curvature_transform_identity():
    assert curvature_transform_residual(MetricChart.round_sphere(2), "0", [0.8, 0.3]) == 0.0


@pytest.mark.parametrize(
    "metric, lo, hi",
    [
        (MetricChart.flat(2), -1.0, 1.0),
        (MetricChart.flat(3), -1.0, 1.0),
        (MetricChart.round_sphere(2), 0.3, 2.8),
        (MetricChart.round_sphere(3), 0.3, 2.8),
    ],
)
def test_curvature_transform_law(metric, lo, hi, rng):
    vs = [f"u{i + 1}" for i in range(metric.dim)]
    for _ in range(5):
        phi = " + ".join(f"{rng.uniform(-0.5, 0.5):.4f}*{a}*{b}" for a in vs for b in vs) + f" + 0.3*sin({vs[0]})"
        p = rng.uniform(lo, hi, (3, metric.dim))
        assert curvature_transform_residual(metric, phi, p) < 1e-6


def test_curvature_transform_on_random_polynomial_metric(rng):
    for d in (2, 3):
        metric = MetricChart.random_polynomial(d, rng)
        p = rng.uniform(-0.3, 0.3, (4, d))
        assert curvature_transform_residual(metric, "0.4*u1*u2 - 0.2*u1^2", p) < 1e-6


def test_flat_metric_curvature_is_pure_phi_terms():
    """For flat g the deformed curvature comes from grad and hess of phi alone."""
    metric = MetricChart.flat(2)
    from confinv.geometry import metric_derivatives, riemann_from_metric
    from confinv.expressions import parse_expression

    phi = parse_expression("0.3*u1^2 + 0.1*u1*u2", ("u1", "u2"))
    p = np.array([[0.2, -0.4]])
    g, dg, ddg = metric_derivatives(metric.jets(p, 2, phi))
    R = riemann_from_metric(g, dg, ddg)
    # K of e^{2 phi} delta is -e^{-2 phi} lap(phi); R_1212 = K det g
    u1, u2 = p[0]
    lap = 0.6
    ephi2 = math.exp(2 * (0.3 * u1**2 + 0.1 * u1 * u2))
    assert R[0, 0, 1, 0, 1] == pytest.approx(-lap / ephi2 * ephi2**2, rel=1e-10)


# ---------------------------------------------------------------------------
# I-operator


def test_homothety_gives_zero_I():
    p = [[0.7, 1.0], [2.0, 4.0], [1.3, 0.2]]
    for P in (mean_curvature_sq_sum(2), conformal_willmore_sum(), gauss_curvature_sum()):
        np.testing.assert_allclose(I_operator(P, math.log(2.5), ELLIPSOID, None, p), 0.0, atol=1e-10)


def test_ho_norm_is_pointwise_invariant(rng):
    p = random_points(ELLIPSOID, rng, 20)
    for _ in range(3):
        I = I_operator(ho_norm_sq_sum(), random_polynomial_phi(rng, 3), ELLIPSOID, None, p)
        assert np.abs(I).max() < 1e-8


def test_mean_curvature_squared_is_not_pointwise_invariant():
    I = I_operator(mean_curvature_sq_sum(2), "0.3/(1 + (x1-0.2)^2 + x2^2 + x3^2)", ELLIPSOID, None, [[0.9, 1.7]])
    assert abs(I[0]) > 1e-4


def test_weight_mismatch_is_rejected():
    with pytest.raises(WeightMismatchError):
        I_operator(parse_sum("g-1(a,b) Hg(a,b)"), "x1", ELLIPSOID, None, [[1.0, 1.0]])
    with pytest.raises(WeightMismatchError):
        invariance_sweep(ho_norm_sq_sum(), sphere(4, 1))


def test_composed_deformations_match_sum():
    amb = AmbientMetric.flat(3)
    p = [[0.9, 1.7], [2.0, 0.5]]
    a = I_operator(conformal_willmore_sum(), "0.1*x1 + 0.2*x2^2", ELLIPSOID, amb, p)
    b = I_operator(conformal_willmore_sum(), "0.2*x2^2", ELLIPSOID, amb.deformed("0.1*x1"), p)
    c = I_operator(conformal_willmore_sum(), "0.1*x1", ELLIPSOID, amb, p)
    # e^{2phi}P^ - P telescopes: I(phi1+phi2) = e^{2 phi1} I_{phi1-ambient}(phi2) + I(phi1)
    pos = ELLIPSOID.positions(np.array(p))
    np.testing.assert_allclose(a, np.exp(2 * 0.1 * pos[:, 0]) * b + c, atol=1e-8)


# ---------------------------------------------------------------------------
# sweeps


def test_phi_family_is_bounded():
    f = ELLIPSOID
    pos = f.positions(build_grid(f.domain, 16).nodes)
    from confinv.expressions import evaluate

    fam = phi_family(f)
    assert len(fam) == 5
    for phi in fam:
        vals = np.broadcast_to(evaluate(phi, {f"x{i + 1}": pos[:, i] for i in range(3)}), (len(pos),))
        assert np.abs(vals).max() <= 0.3 + 1e-12


@pytest.mark.parametrize("P", [gauss_curvature_sum(), ho_norm_sq_sum(), conformal_willmore_sum()])
def test_sweep_reports_invariant(P):
    rep = invariance_sweep(P, ELLIPSOID)
    assert rep.verdict == "invariant"
    assert len(rep.entries) == 20
    assert rep.max_abs_integral < 1e-6 * rep.area


def test_sweep_reports_non_invariant_mean_curvature():
    rep = invariance_sweep(mean_curvature_sq_sum(2), ELLIPSOID, phis=[BUMP])
    assert rep.verdict == "non-invariant"
    assert rep.max_abs_integral > 1e-3


def test_sweep_verdict_is_stable_under_refinement():
    coarse = invariance_sweep(gauss_curvature_sum(), ELLIPSOID, grid=build_grid(ELLIPSOID.domain, 24))
    fine = invariance_sweep(gauss_curvature_sum(), ELLIPSOID, grid=build_grid(ELLIPSOID.domain, 48))
    assert coarse.verdict == fine.verdict == "invariant"
    assert fine.max_abs_integral < coarse.max_abs_integral
    bad = [invariance_sweep(mean_curvature_sq_sum(2), ELLIPSOID, phis=[BUMP], grid=build_grid(ELLIPSOID.domain, n))
           for n in (24, 48)]
    assert bad[0].verdict == bad[1].verdict == "non-invariant"


def test_report_serializes():
    rep = invariance_sweep(ho_norm_sq_sum(), torus(2, 1), phis=["0.1*x1*x2"], lambdas=(1.0,))
    d = rep.to_dict()
    assert d["verdict"] == "invariant"
    assert d["entries"][0]["scale"] == 1.0

"""Discrete curve geometry: curvature values, frames, projections,
convergence order, resampling, and the conformal cross-check."""

import numpy as np
import pytest

from solitonflow import (ConformalBackground, compute_geometry,
                         resample_by_arclength, shrinker_residual_pointwise)
from solitonflow.errors import (ChartDomainError, ConfigurationError,
                                DegenerateImmersionError)
from solitonflow.geometry import (DiscreteCurve, circle_curve, curve_length,
                                  cylinder_loop_curve, ellipse_curve,
                                  latitude_curve)


def test_curve_validation():
    with pytest.raises(ConfigurationError):
        DiscreteCurve(np.zeros((8, 2)))
    with pytest.raises(ConfigurationError):
        DiscreteCurve(np.full((32, 2), np.nan))
    with pytest.raises(ConfigurationError):
        circle_curve(64, -1.0)


def test_circle_curvature(gaussian2):
    geom = compute_geometry(circle_curve(256, 2.0), gaussian2)
    assert np.abs(geom.A_norm - 0.5).max() < 1e-4
    # points inward
    r_hat = geom.vertices / np.linalg.norm(geom.vertices, axis=1)[:, None]
    assert np.all(np.einsum("pa,pa->p", geom.H, r_hat) < 0)


def test_equator_is_geodesic(sphere):
    geom = compute_geometry(latitude_curve(256, np.pi / 2), sphere)
    assert geom.A_norm.max() < 1e-6


def test_latitude_curvature(sphere):
    geom = compute_geometry(latitude_curve(256, np.pi / 3), sphere)
    assert np.abs(geom.A_norm - 1.0 / np.sqrt(6.0)).max() < 1e-3


def test_tangency_and_curve_identity(gaussian2, sphere):
    for geom in (compute_geometry(ellipse_curve(128, 2.0, 1.0), gaussian2),
                 compute_geometry(latitude_curve(128, 1.1), sphere)):
        rel = np.abs(geom.inner(geom.H, geom.tangent)) \
            / np.maximum(geom.norm(geom.H) * geom.norm(geom.tangent), 1e-30)
        assert rel.max() < 1e-10
        # |A| = |H| for curves
        assert np.abs(geom.A_norm - geom.norm(geom.H)).max() < 1e-14


def test_frame_orthonormal_and_complete(gaussian3, cylinder):
    rng = np.random.default_rng(1)
    loop = cylinder_loop_curve(64, x0=0.5, theta_wobble=0.2, x_wobble=0.3)
    for soliton, curve in ((cylinder, loop),
                           (gaussian3, DiscreteCurve(np.column_stack([
                               2 * np.cos(2 * np.pi * np.arange(64) / 64),
                               2 * np.sin(2 * np.pi * np.arange(64) / 64),
                               0.3 * np.sin(4 * np.pi * np.arange(64) / 64)])))):
        geom = compute_geometry(curve, soliton)
        n = soliton.dim
        vectors = np.concatenate([geom.unit_tangent[:, None, :],
                                  geom.normal_frame], axis=1)
        gram = np.einsum("pab,pia,pjb->pij", geom.metric, vectors, vectors)
        assert np.abs(gram - np.eye(n)).max() < 1e-10


def test_normal_trace_matches_frame(cylinder):
    """Frame-based normal trace equals full trace minus the tangent part."""
    loop = cylinder_loop_curve(96, x0=0.2, theta_wobble=0.15, x_wobble=0.2)
    geom = compute_geometry(loop, cylinder)
    eta = cylinder.potential_hess_at(loop.vertices)
    via_frame = np.einsum("pja,pjb,pab->p", geom.normal_frame,
                          geom.normal_frame, eta)
    ginv = np.linalg.inv(geom.metric)
    full = np.einsum("pab,pab->p", ginv, eta)
    tang = np.einsum("pab,pa,pb->p", eta, geom.unit_tangent, geom.unit_tangent)
    assert np.abs(via_frame - (full - tang)).max() < 1e-10


def test_curvature_convergence_order(gaussian2):
    """Second-order convergence of |H| on the ellipse (coordinate circles
    are exact by construction, so the order is measured off-circle)."""
    errs = {}
    for n in (64, 128, 256):
        geom = compute_geometry(ellipse_curve(n, 2.0, 1.0), gaussian2)
        u = 2 * np.pi * np.arange(n) / n
        exact = 2.0 / (4 * np.sin(u)**2 + np.cos(u)**2) ** 1.5
        errs[n] = np.abs(geom.A_norm - exact).max()
    order1 = np.log2(errs[64] / errs[128])
    order2 = np.log2(errs[128] / errs[256])
    assert order1 > 1.9 and order2 > 1.9


def test_circle_and_latitude_are_exact(gaussian2, sphere):
    geom = compute_geometry(circle_curve(64, 1.3), gaussian2)
    assert np.abs(geom.A_norm - 1 / 1.3).max() < 1e-12
    geom = compute_geometry(latitude_curve(48, 0.9), sphere)
    expected = abs(1.0 / np.tan(0.9)) / np.sqrt(2.0)
    assert np.abs(geom.A_norm - expected).max() < 1e-12


def test_shrinker_residual_values(gaussian2, sphere):
    geom = compute_geometry(circle_curve(256, np.sqrt(2.0)), gaussian2)
    assert shrinker_residual_pointwise(geom, -1.0).max() < 1e-4
    geom2 = compute_geometry(circle_curve(256, 2.0), gaussian2)
    assert np.abs(shrinker_residual_pointwise(geom2, -1.0) - 0.5).max() < 1e-3
    eq = compute_geometry(latitude_curve(256, np.pi / 2), sphere)
    for lam in (-1.0, 0.0, 2.0):
        assert shrinker_residual_pointwise(eq, lam).max() < 1e-6


def test_degenerate_curve_raises(gaussian2):
    verts = np.zeros((32, 2))
    verts[:, 0] = 1.0   # constant curve: zero tangent
    with pytest.raises(DegenerateImmersionError):
        compute_geometry(DiscreteCurve(verts), gaussian2)


def test_outside_chart_raises(sphere):
    curve = latitude_curve(32, np.pi / 2)
    bad = curve.vertices.copy()
    bad[3, 0] = 1e-6
    with pytest.raises(ChartDomainError):
        compute_geometry(DiscreteCurve(bad), sphere)


# -- resampling -------------------------------------------------------

def test_resample_idempotent_on_uniform_circle(gaussian2):
    curve = circle_curve(128, 1.7)
    out = resample_by_arclength(curve, gaussian2, 128)
    assert np.abs(out.vertices - curve.vertices).max() < 1e-10


def test_resample_uniformizes_clustered_parametrization(gaussian2):
    u = 2 * np.pi * np.arange(256) / 256
    warped = u + 0.35 * np.sin(u)      # clustered parametrization
    curve = DiscreteCurve(np.column_stack([2 * np.cos(warped), 2 * np.sin(warped)]))
    out = resample_by_arclength(curve, gaussian2, 256)
    chords = np.linalg.norm(np.roll(out.vertices, -1, axis=0) - out.vertices, axis=1)
    assert (chords.max() - chords.min()) / chords.mean() < 1e-4


def test_resample_preserves_length(gaussian2):
    """Refined-quadrature lengths of the curve before and after
    resampling agree; plain chord sums only agree to O(1/N^2)."""
    def refined_length(c):
        return curve_length(resample_by_arclength(c, gaussian2, 4096), gaussian2)

    curve = ellipse_curve(64, 2.0, 1.0)
    before = refined_length(curve)
    out = resample_by_arclength(curve, gaussian2, 96)
    assert abs(refined_length(out) - before) / before < 1e-6


def test_resample_wraps_periodic_coordinates(sphere):
    curve = latitude_curve(64, 1.0)
    out = resample_by_arclength(curve, sphere, 80)
    assert out.n_vertices == 80
    assert np.abs(out.vertices[:, 0] - 1.0).max() < 1e-9
    # winding preserved: total phi span is one period
    dphi = np.diff(np.concatenate([out.vertices[:, 1], [out.vertices[0, 1] + 2 * np.pi]]))
    assert abs(dphi.sum() - 2 * np.pi) < 1e-9


def test_resample_rejects_small_target(gaussian2):
    with pytest.raises(ConfigurationError):
        resample_by_arclength(circle_curve(64, 1.0), gaussian2, 8)


# -- conformal cross-check ---------------------------------------------

def test_conformal_minimality_equivalence(gaussian2, sphere):
    """Mean curvature in the conformally rescaled metric matches the
    self-similar defect: |H_conf|_conf = exp(-lam f) |H - lam grad_f^n|,
    so zero defect in one picture is zero in the other."""
    lam = -1.0
    for soliton, curve, stationary in (
            (gaussian2, circle_curve(256, np.sqrt(2.0)), True),
            (gaussian2, circle_curve(256, 2.0), False),
            (sphere, latitude_curve(256, np.pi / 2), True)):
        conf = ConformalBackground(soliton, lam, m=1)
        geom_conf = compute_geometry(curve, conf)
        defect = shrinker_residual_pointwise(compute_geometry(curve, soliton), lam)
        f = soliton.potential_at(curve.vertices)
        expected = np.exp(-lam * f) * defect
        assert np.abs(geom_conf.norm(geom_conf.H) - expected).max() < 2e-3
        if stationary:
            assert geom_conf.norm(geom_conf.H).max() < 1e-3
            assert defect.max() < 1e-4

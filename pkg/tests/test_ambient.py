"""Background identities, curvature conventions, and the induced family."""

import numpy as np
import pytest

from solitonflow import (ConformalBackground, conformal_metric_at, flow_family,
                         identity_residuals, make_soliton)
from solitonflow.errors import ChartDomainError, ConfigurationError, DomainError

from conftest import sample_interior_points


def test_make_soliton_errors():
    with pytest.raises(ConfigurationError):
        make_soliton("torus")
    with pytest.raises(ConfigurationError):
        make_soliton("gaussian", {"dim": 1})
    with pytest.raises(ConfigurationError):
        make_soliton("sphere", {"radius": -1.0})
    with pytest.raises(ConfigurationError):
        make_soliton("sphere", {"radius": 1.0})
    with pytest.raises(ConfigurationError):
        make_soliton("cylinder", {"bogus": 3})


def test_potential_values(gaussian2, sphere, cylinder):
    assert gaussian2.potential_at([2.0, 0.0]) == pytest.approx(1.0, abs=1e-15)
    assert sphere.potential_at([1.0, 2.0]) == pytest.approx(1.0, abs=1e-15)
    assert cylinder.potential_at([1.0, 2.0, 2.0]) == pytest.approx(2.0, abs=1e-15)


def test_identity_residuals_at_named_points(gaussian2, sphere, cylinder):
    r1, r2 = identity_residuals(gaussian2, [3.7, -1.2])
    assert r1 <= 1e-12 and r2 <= 1e-12
    r1, r2 = identity_residuals(sphere, [1.0, 2.0])
    assert r1 <= 1e-10 and r2 <= 1e-10
    r1, r2 = identity_residuals(cylinder, [np.pi / 2, 0.0, 1.5])
    assert r1 <= 1e-10 and r2 <= 1e-10


def test_identity_residuals_random_sweep(all_solitons):
    rng = np.random.default_rng(42)
    for soliton in all_solitons.values():
        pts = sample_interior_points(soliton, rng, 1000)
        r1, r2 = identity_residuals(soliton, pts)
        assert r1.max() <= 1e-10
        assert r2.max() <= 1e-10


def test_scalar_nonnegative_and_gradient_bound(all_solitons):
    rng = np.random.default_rng(7)
    for soliton in all_solitons.values():
        pts = sample_interior_points(soliton, rng, 500)
        assert soliton.scalar_at(pts).min() >= -1e-14
        df = soliton.potential_dx_at(pts)
        ginv = np.linalg.inv(soliton.metric_at(pts))
        grad_sq = np.einsum("pab,pa,pb->p", ginv, df, df)
        assert np.max(grad_sq - soliton.potential_at(pts)) <= 1e-10


def test_domain_error_outside_chart(sphere):
    with pytest.raises(ChartDomainError):
        identity_residuals(sphere, [1e-5, 0.0])


def _fd_christoffel(soliton, p, eps=1e-6):
    """Christoffels from centered differences of the metric."""
    n = soliton.dim
    dg = np.zeros((n, n, n))
    for c in range(n):
        dp = np.zeros(n)
        dp[c] = eps
        dg[c] = (soliton.metric_at(p + dp) - soliton.metric_at(p - dp)) / (2 * eps)
    ginv = np.linalg.inv(soliton.metric_at(p))
    gamma = np.zeros((n, n, n))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                gamma[c, a, b] = 0.5 * sum(
                    ginv[c, d] * (dg[a][d, b] + dg[b][a, d] - dg[d][a, b])
                    for d in range(n))
    return gamma


def _fd_riemann(soliton, p, eps=1e-5):
    """Curvature from centered differences of the Christoffel symbols,
    in the convention R_abcd = g(e_a, Rm(e_c, e_d) e_b)."""
    n = soliton.dim
    gam = soliton.christoffel_at(p)
    dgam = np.zeros((n, n, n, n))
    for c in range(n):
        dp = np.zeros(n)
        dp[c] = eps
        dgam[c] = (soliton.christoffel_at(p + dp)
                   - soliton.christoffel_at(p - dp)) / (2 * eps)
    riem_up = np.zeros((n, n, n, n))   # R^a_{b c d}
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    val = dgam[c][a, d, b] - dgam[d][a, c, b]
                    for m in range(n):
                        val += gam[a, c, m] * gam[m, d, b] \
                            - gam[a, d, m] * gam[m, c, b]
                    riem_up[a, b, c, d] = val
    g = soliton.metric_at(p)
    return np.einsum("ae,ebcd->abcd", g, riem_up)


@pytest.mark.parametrize("name", ["gaussian", "sphere", "cylinder"])
def test_curvature_against_fd_oracle(name, all_solitons):
    soliton = all_solitons[name]
    rng = np.random.default_rng(3)
    for p in sample_interior_points(soliton, rng, 5):
        gamma_fd = _fd_christoffel(soliton, p)
        assert np.abs(gamma_fd - soliton.christoffel_at(p)).max() < 5e-8
        riem_fd = _fd_riemann(soliton, p)
        assert np.abs(riem_fd - soliton.riemann_at(p)).max() < 5e-6
        # contractions of the analytic tensor reproduce Ricci and scalar
        ginv = np.linalg.inv(soliton.metric_at(p))
        ric = np.einsum("bd,abcd->ac", ginv, soliton.riemann_at(p))
        assert np.abs(ric - soliton.ricci_at(p)).max() < 1e-12
        scal = np.einsum("ac,ac->", ginv, ric)
        assert abs(scal - soliton.scalar_at(p)) < 1e-12


def test_potential_hessian_against_fd(all_solitons):
    rng = np.random.default_rng(5)
    eps = 1e-5
    for soliton in all_solitons.values():
        for p in sample_interior_points(soliton, rng, 4):
            n = soliton.dim
            ddf = np.zeros((n, n))
            for a in range(n):
                da = np.zeros(n)
                da[a] = eps
                ddf[a] = (soliton.potential_dx_at(p + da)
                          - soliton.potential_dx_at(p - da)) / (2 * eps)
            gamma = soliton.christoffel_at(p)
            hess_fd = 0.5 * (ddf + ddf.T) - np.einsum(
                "cab,c->ab", gamma, soliton.potential_dx_at(p))
            assert np.abs(hess_fd - soliton.potential_hess_at(p)).max() < 1e-8


# -- induced family ---------------------------------------------------

def test_family_requires_time_below_horizon(gaussian2):
    fam = flow_family(gaussian2, 1.0)
    with pytest.raises(DomainError):
        fam.metric_at([0.0, 0.0], 1.0)
    with pytest.raises(ConfigurationError):
        flow_family(gaussian2, -2.0)


def test_family_initial_map_is_identity(all_solitons):
    rng = np.random.default_rng(11)
    for soliton in all_solitons.values():
        fam = flow_family(soliton, 2.5)
        pts = sample_interior_points(soliton, rng, 20)
        assert np.abs(fam.phi_at(pts, 0.0) - pts).max() == 0.0


def test_family_metric_closed_forms(gaussian2, sphere, cylinder):
    fam_g = flow_family(gaussian2, 1.0)
    g = fam_g.metric_at([0.3, -0.7], 0.5)
    assert np.abs(g - np.eye(2)).max() < 1e-15

    fam_s = flow_family(sphere, 1.0)
    p = np.array([1.1, 0.4])
    assert np.abs(fam_s.metric_at(p, 0.75) - 0.25 * sphere.metric_at(p)).max() < 1e-15

    fam_c = flow_family(cylinder, 1.0)
    q = np.array([1.0, 0.5, 1.0])
    mapped = fam_c.phi_at(q, 0.75)
    assert mapped[2] == pytest.approx(2.0, abs=1e-14)
    assert np.abs(mapped[:2] - q[:2]).max() == 0.0


def test_family_roundtrip_maps(all_solitons):
    rng = np.random.default_rng(13)
    for soliton in all_solitons.values():
        fam = flow_family(soliton, 1.7)
        pts = sample_interior_points(soliton, rng, 30)
        for t in (0.0, 0.4, 1.2):
            back = fam.phi_inv_at(fam.phi_at(pts, t), t)
            assert np.abs(back - pts).max() < 1e-12


def test_family_identities_at_sampled_times(all_solitons):
    rng = np.random.default_rng(17)
    for soliton in all_solitons.values():
        fam = flow_family(soliton, 1.0)
        pts = sample_interior_points(soliton, rng, 100)
        for t in (0.1, 0.5, 0.85):
            tau = 1.0 - t
            g_t = fam.metric_at(pts, t)
            hess = fam.potential_hess_at(pts, t)
            ric = fam.ricci_at(pts, t)
            assert np.abs(ric + hess - g_t / (2 * tau)).max() < 1e-10
            df = fam.potential_dx_at(pts, t)
            grad_sq = np.einsum("pab,pa,pb->p", np.linalg.inv(g_t), df, df)
            lhs = fam.scalar_at(pts, t) + grad_sq - fam.potential_at(pts, t) / tau
            assert np.abs(lhs).max() < 1e-10


def test_family_metric_motion_fd(all_solitons):
    rng = np.random.default_rng(19)
    eps = 1e-5
    for soliton in all_solitons.values():
        fam = flow_family(soliton, 1.0)
        pts = sample_interior_points(soliton, rng, 40)
        for t in (0.2, 0.7):
            dgdt = (fam.metric_at(pts, t + eps) - fam.metric_at(pts, t - eps)) / (2 * eps)
            assert np.abs(dgdt + 2.0 * fam.ricci_at(pts, t)).max() < 1e-9


def test_conjugate_heat_fd_residual_is_second_order(all_solitons):
    rng = np.random.default_rng(23)
    for soliton in all_solitons.values():
        fam = flow_family(soliton, 1.0)
        pts = sample_interior_points(soliton, rng, 40)
        t = 0.35
        res = {}
        for eps in (4e-4, 2e-4, 1e-4):
            drho = (fam.density_at(pts, t + eps)
                    - fam.density_at(pts, t - eps)) / (2 * eps)
            rhs = -fam.density_laplacian_at(pts, t) \
                + fam.scalar_at(pts, t) * fam.density_at(pts, t)
            res[eps] = np.abs(drho - rhs).max()
        order = np.log2(res[4e-4] / res[2e-4])
        assert order > 1.9
        assert res[1e-4] < 1e-6


# -- conformal layer ----------------------------------------------------

def test_conformal_metric_values(gaussian2, sphere):
    p = np.array([2.0, 0.0])
    assert np.abs(conformal_metric_at(gaussian2, 0.0, 1, p)
                  - gaussian2.metric_at(p)).max() == 0.0
    assert np.abs(conformal_metric_at(gaussian2, -1.0, 1, p)
                  - np.exp(-2.0) * np.eye(2)).max() < 1e-15
    q = np.array([0.9, 1.3])
    assert np.abs(conformal_metric_at(sphere, -1.0, 1, q)
                  - np.exp(-2.0) * sphere.metric_at(q)).max() < 1e-15


def test_conformal_christoffels_against_fd(sphere, cylinder):
    for soliton in (sphere, cylinder):
        conf = ConformalBackground(soliton, lam=-0.8, m=1)
        rng = np.random.default_rng(29)
        for p in sample_interior_points(soliton, rng, 3):
            gamma_fd = _fd_christoffel(conf, p)
            assert np.abs(gamma_fd - conf.christoffel_at(p)).max() < 1e-7

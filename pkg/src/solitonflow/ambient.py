"""Analytic soliton backgrounds and the geometric flows they generate.

Every background is a single global chart with closed-form metric,
Christoffel symbols, curvature tensors and potential.  All derivatives
are hand-coded so that the defining identities

    Ric(g) + Hess f - g/2 = 0        (soliton equation)
    R(g) + |grad f|^2 - f = 0        (potential normalization)

hold to machine precision, which the identity-audit tooling relies on.

Curvature sign convention: Rm(X,Y)Z = (D_X D_Y - D_Y D_X - D_[X,Y]) Z and
R_abcd = g(e_a, Rm(e_c, e_d) e_b), so Ric_ac = g^bd R_abcd is positive on
the round sphere.
"""

import numpy as np

from .errors import ChartDomainError, ConfigurationError, DomainError

POLE_MARGIN = 1e-3

GAUSSIAN, SPHERE, CYLINDER = 0, 1, 2


def as_points(pts):
    """Normalize a chart point or array of points to shape (N, n).

    Returns the (N, n) array and a flag telling whether the input was a
    single point (so callers can unsqueeze their output).
    """
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        return pts[None, :], True
    if pts.ndim != 2:
        raise ValueError(f"expected point array of shape (n,) or (N, n), got {pts.shape}")
    return pts, False


class Chart:
    """Coordinate validity data for one global chart.

    Per coordinate either an open interval (lo, hi), a period (for
    angular coordinates, any real value is valid), or a free line.
    """

    def __init__(self, periods, lo, hi):
        self.periods = np.asarray(periods, dtype=float)
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)

    @property
    def dim(self):
        return self.periods.size

    def contains(self, pts):
        pts, single = as_points(pts)
        ok = np.isfinite(pts).all(axis=1)
        for a in range(self.dim):
            if self.periods[a] == 0.0:
                ok &= (pts[:, a] > self.lo[a]) & (pts[:, a] < self.hi[a])
        return ok[0] if single else ok

    def require(self, pts):
        ok = self.contains(pts)
        if not np.all(ok):
            bad = np.asarray(pts, dtype=float).reshape(-1, self.dim)[~np.atleast_1d(ok)][0]
            raise ChartDomainError(f"point {bad} outside chart validity domain")

    def wrap_diff(self, delta):
        """Reduce coordinate differences of periodic coordinates to the
        principal branch (-P/2, P/2]."""
        delta = np.array(delta, dtype=float, copy=True)
        for a in range(self.dim):
            p = self.periods[a]
            if p > 0.0:
                delta[..., a] = delta[..., a] - p * np.round(delta[..., a] / p)
        return delta


class AmbientSoliton:
    """Base class: a complete background (N, g, f) with shrinking-soliton
    normalization, exposed as vectorized closed-form evaluators.

    Instances are immutable and safe to share across threads; every
    evaluator is a pure function of its arguments.
    """

    name = "abstract"
    code = -1

    def __init__(self, dim, chart):
        self.dim = dim
        self.chart = chart

    # -- metric layer -------------------------------------------------

    def metric_at(self, pts):
        pts, single = as_points(pts)
        out = self._metric(pts)
        return out[0] if single else out

    def inverse_metric_at(self, pts):
        pts, single = as_points(pts)
        out = np.linalg.inv(self._metric(pts))
        return out[0] if single else out

    def christoffel_at(self, pts):
        pts, single = as_points(pts)
        out = self._christoffel(pts)
        return out[0] if single else out

    def riemann_at(self, pts):
        pts, single = as_points(pts)
        out = self._riemann(pts)
        return out[0] if single else out

    def ricci_at(self, pts):
        pts, single = as_points(pts)
        out = self._ricci(pts)
        return out[0] if single else out

    def scalar_at(self, pts):
        pts, single = as_points(pts)
        out = self._scalar(pts)
        return out[0] if single else out

    # -- potential layer ----------------------------------------------

    def potential_at(self, pts):
        pts, single = as_points(pts)
        out = self._potential(pts)
        return out[0] if single else out

    def potential_dx_at(self, pts):
        """Covariant derivative (plain partials) of the potential."""
        pts, single = as_points(pts)
        out = self._potential_dx(pts)
        return out[0] if single else out

    def potential_grad_at(self, pts):
        """Contravariant gradient grad f = g^{-1} df."""
        pts, single = as_points(pts)
        df = self._potential_dx(pts)
        ginv = np.linalg.inv(self._metric(pts))
        out = np.einsum("pab,pb->pa", ginv, df)
        return out[0] if single else out

    def potential_hess_at(self, pts):
        """Covariant Hessian: ddf - Gamma^c df_c."""
        pts, single = as_points(pts)
        out = self._potential_hess(pts)
        return out[0] if single else out

    # -- subclass hooks (all take (N, n) arrays) ----------------------

    def _metric(self, P):
        raise NotImplementedError

    def _christoffel(self, P):
        raise NotImplementedError

    def _riemann(self, P):
        raise NotImplementedError

    def _ricci(self, P):
        raise NotImplementedError

    def _scalar(self, P):
        raise NotImplementedError

    def _potential(self, P):
        raise NotImplementedError

    def _potential_dx(self, P):
        raise NotImplementedError

    def _potential_hess(self, P):
        raise NotImplementedError


class GaussianSoliton(AmbientSoliton):
    """Flat R^n with potential |x|^2 / 4."""

    name = "gaussian"
    code = GAUSSIAN

    def __init__(self, dim=2):
        if dim < 2:
            raise ConfigurationError(f"gaussian soliton needs dim >= 2, got {dim}")
        n = int(dim)
        chart = Chart(np.zeros(n), -np.inf * np.ones(n), np.inf * np.ones(n))
        super().__init__(n, chart)

    def _metric(self, P):
        N, n = P.shape
        return np.broadcast_to(np.eye(n), (N, n, n)).copy()

    def _christoffel(self, P):
        N, n = P.shape
        return np.zeros((N, n, n, n))

    def _riemann(self, P):
        N, n = P.shape
        return np.zeros((N, n, n, n, n))

    def _ricci(self, P):
        N, n = P.shape
        return np.zeros((N, n, n))

    def _scalar(self, P):
        return np.zeros(P.shape[0])

    def _potential(self, P):
        return 0.25 * np.sum(P * P, axis=1)

    def _potential_dx(self, P):
        return 0.5 * P

    def _potential_hess(self, P):
        N, n = P.shape
        return np.broadcast_to(0.5 * np.eye(n), (N, n, n)).copy()


def _round_sphere_blocks(theta):
    """Metric, Christoffels and curvature of the radius-sqrt(2) round
    2-sphere in angle coordinates (theta, phi)."""
    N = theta.shape[0]
    s, c = np.sin(theta), np.cos(theta)
    g = np.zeros((N, 2, 2))
    g[:, 0, 0] = 2.0
    g[:, 1, 1] = 2.0 * s * s
    gamma = np.zeros((N, 2, 2, 2))
    gamma[:, 0, 1, 1] = -s * c            # Gamma^theta_{phi phi}
    cot = c / s
    gamma[:, 1, 0, 1] = cot               # Gamma^phi_{theta phi}
    gamma[:, 1, 1, 0] = cot
    return g, gamma


def _space_form_riemann(g, K, block):
    """R_abcd = K (g_db g_ca - g_cb g_da) restricted to a coordinate block."""
    N, n, _ = g.shape
    R = np.zeros((N, n, n, n, n))
    idx = list(block)
    for a in idx:
        for b in idx:
            for c in idx:
                for d in idx:
                    R[:, a, b, c, d] = K * (g[:, d, b] * g[:, c, a] - g[:, c, b] * g[:, d, a])
    return R


class SphereSoliton(AmbientSoliton):
    """Round 2-sphere of radius sqrt(2) (Einstein: Ric = g/2) with
    constant potential 1.  Chart: spherical angles with the poles
    excluded by a small margin."""

    name = "sphere"
    code = SPHERE

    def __init__(self):
        chart = Chart(
            periods=[0.0, 2.0 * np.pi],
            lo=[POLE_MARGIN, -np.inf],
            hi=[np.pi - POLE_MARGIN, np.inf],
        )
        super().__init__(2, chart)

    def _metric(self, P):
        g, _ = _round_sphere_blocks(P[:, 0])
        return g

    def _christoffel(self, P):
        _, gamma = _round_sphere_blocks(P[:, 0])
        return gamma

    def _riemann(self, P):
        g = self._metric(P)
        return _space_form_riemann(g, 0.5, (0, 1))

    def _ricci(self, P):
        return 0.5 * self._metric(P)

    def _scalar(self, P):
        return np.ones(P.shape[0])

    def _potential(self, P):
        return np.ones(P.shape[0])

    def _potential_dx(self, P):
        return np.zeros_like(P)

    def _potential_hess(self, P):
        N, n = P.shape
        return np.zeros((N, n, n))


class CylinderSoliton(AmbientSoliton):
    """Product of the radius-sqrt(2) sphere with a line, potential
    x^2/4 + 1 in the line coordinate.  Chart: (theta, phi, x)."""

    name = "cylinder"
    code = CYLINDER

    def __init__(self):
        chart = Chart(
            periods=[0.0, 2.0 * np.pi, 0.0],
            lo=[POLE_MARGIN, -np.inf, -np.inf],
            hi=[np.pi - POLE_MARGIN, np.inf, np.inf],
        )
        super().__init__(3, chart)

    def _metric(self, P):
        N = P.shape[0]
        g = np.zeros((N, 3, 3))
        gs, _ = _round_sphere_blocks(P[:, 0])
        g[:, :2, :2] = gs
        g[:, 2, 2] = 1.0
        return g

    def _christoffel(self, P):
        N = P.shape[0]
        gamma = np.zeros((N, 3, 3, 3))
        _, gs = _round_sphere_blocks(P[:, 0])
        gamma[:, :2, :2, :2] = gs
        return gamma

    def _riemann(self, P):
        g = self._metric(P)
        return _space_form_riemann(g, 0.5, (0, 1))

    def _ricci(self, P):
        ric = np.zeros((P.shape[0], 3, 3))
        gs, _ = _round_sphere_blocks(P[:, 0])
        ric[:, :2, :2] = 0.5 * gs
        return ric

    def _scalar(self, P):
        return np.ones(P.shape[0])

    def _potential(self, P):
        return 0.25 * P[:, 2] ** 2 + 1.0

    def _potential_dx(self, P):
        df = np.zeros_like(P)
        df[:, 2] = 0.5 * P[:, 2]
        return df

    def _potential_hess(self, P):
        h = np.zeros((P.shape[0], 3, 3))
        h[:, 2, 2] = 0.5
        return h


_BUILTINS = {"gaussian": GaussianSoliton, "sphere": SphereSoliton, "cylinder": CylinderSoliton}
_SQRT2 = np.sqrt(2.0)


def make_soliton(name, params=None):
    """Construct a built-in background by name.

    params: optional mapping; ``dim`` selects the gaussian dimension,
    ``radius`` (sphere/cylinder) is validated against the soliton value
    sqrt(2) since the defining equation pins it.
    """
    params = dict(params or {})
    if name not in _BUILTINS:
        raise ConfigurationError(f"unknown soliton {name!r}; choose from {sorted(_BUILTINS)}")
    radius = params.pop("radius", None)
    if radius is not None:
        if radius <= 0:
            raise ConfigurationError(f"radius must be positive, got {radius}")
        if abs(radius - _SQRT2) > 1e-12:
            raise ConfigurationError(
                f"{name} soliton requires radius sqrt(2); got {radius}")
    if name == "gaussian":
        dim = int(params.pop("dim", 2))
        if params:
            raise ConfigurationError(f"unknown soliton params {sorted(params)}")
        return GaussianSoliton(dim)
    dim = params.pop("dim", None)
    expected = 2 if name == "sphere" else 3
    if dim is not None and int(dim) != expected:
        raise ConfigurationError(f"{name} soliton has fixed dim {expected}, got {dim}")
    if params:
        raise ConfigurationError(f"unknown soliton params {sorted(params)}")
    return _BUILTINS[name]()


def identity_residuals(soliton, pts):
    """Pointwise residuals of the two defining identities.

    Returns (max-abs componentwise residual of Ric + Hess f - g/2,
    abs residual of R + |grad f|^2 - f); arrays when pts is (N, n).
    """
    P, single = as_points(pts)
    soliton.chart.require(P)
    g = soliton._metric(P)
    ric = soliton._ricci(P)
    hess = soliton._potential_hess(P)
    eq_structure = ric + hess - 0.5 * g
    r1 = np.abs(eq_structure).max(axis=(1, 2))
    df = soliton._potential_dx(P)
    ginv = np.linalg.inv(g)
    grad_sq = np.einsum("pab,pa,pb->p", ginv, df, df)
    r2 = np.abs(soliton._scalar(P) + grad_sq - soliton._potential(P))
    if single:
        return float(r1[0]), float(r2[0])
    return r1, r2


def conformal_metric_at(soliton, lam, m, pts):
    """Metric rescaled by exp(2 lam f / m); minimal immersions of an
    m-dimensional submanifold in this metric are exactly the self-similar
    immersions with coefficient lam in the original background."""
    if m < 1:
        raise ConfigurationError(f"m must be >= 1, got {m}")
    P, single = as_points(pts)
    factor = np.exp(2.0 * lam * soliton._potential(P) / m)
    out = factor[:, None, None] * soliton._metric(P)
    return out[0] if single else out


class ConformalBackground:
    """Metric provider for exp(2 phi) g with phi = lam f / m, including the
    transformed Christoffel symbols.  Used to cross-check the self-similar
    defect against mean curvature computed in the conformal metric."""

    def __init__(self, soliton, lam, m=1):
        if m < 1:
            raise ConfigurationError(f"m must be >= 1, got {m}")
        self.soliton = soliton
        self.lam = float(lam)
        self.m = int(m)
        self.chart = soliton.chart
        self.dim = soliton.dim

    def metric_at(self, pts):
        return conformal_metric_at(self.soliton, self.lam, self.m, pts)

    def christoffel_at(self, pts):
        P, single = as_points(pts)
        base = self.soliton._christoffel(P)
        dphi = (self.lam / self.m) * self.soliton._potential_dx(P)
        g = self.soliton._metric(P)
        ginv = np.linalg.inv(g)
        grad_phi = np.einsum("pab,pb->pa", ginv, dphi)
        n = self.dim
        eye = np.eye(n)
        corr = (
            np.einsum("ac,pb->pabc", eye, dphi)
            + np.einsum("ab,pc->pabc", eye, dphi)
            - np.einsum("pbc,pa->pabc", g, grad_phi)
        )
        out = base + corr
        return out[0] if single else out


class RicciFlowFamily:
    """Time-dependent data generated from a soliton and a horizon T.

    The diffeomorphisms are normalized so the time-zero map is the
    identity; they are generated by grad f / (T - t).  The metric family
    g_t = (T - t) (pullback of g) solves the Ricci flow, and the density
    rho_t = (4 pi (T-t))^(-n/2) exp(-f_t) solves the conjugate heat
    equation.  All evaluations require t < T.
    """

    def __init__(self, soliton, T):
        if not T > 0:
            raise ConfigurationError(f"horizon T must be positive, got {T}")
        self.soliton = soliton
        self.T = float(T)

    def _tau(self, t):
        tau = self.T - t
        if tau <= 0.0:
            raise DomainError(f"time {t} is not below the horizon T={self.T}")
        return tau

    def _stretch(self, t):
        # dilation factor of the flow map on flat directions
        return np.sqrt(self.T / self._tau(t))

    # -- flow map ------------------------------------------------------

    def phi_at(self, pts, t):
        tau = self._tau(t)
        P, single = as_points(pts)
        out = P.copy()
        c = self._stretch(t)
        code = self.soliton.code
        if code == GAUSSIAN:
            out *= c
        elif code == CYLINDER:
            out[:, 2] *= c
        return out[0] if single else out

    def phi_inv_at(self, pts, t):
        tau = self._tau(t)
        P, single = as_points(pts)
        out = P.copy()
        c = self._stretch(t)
        code = self.soliton.code
        if code == GAUSSIAN:
            out /= c
        elif code == CYLINDER:
            out[:, 2] /= c
        return out[0] if single else out

    # -- metric family -------------------------------------------------

    def metric_scales(self, t):
        """Block scale factors (curved block, flat block) of g_t relative
        to the base closed forms."""
        tau = self._tau(t)
        code = self.soliton.code
        if code == GAUSSIAN:
            return 1.0, self.T
        if code == SPHERE:
            return tau, 1.0
        return tau, self.T

    def metric_at(self, pts, t):
        sa, sb = self.metric_scales(t)
        P, single = as_points(pts)
        g = self.soliton._metric(P).copy()
        code = self.soliton.code
        if code == GAUSSIAN:
            g *= sb
        elif code == SPHERE:
            g *= sa
        else:
            g[:, :2, :2] *= sa
            g[:, 2, 2] *= sb
        return g[0] if single else g

    def christoffel_at(self, pts, t):
        # block-constant rescalings leave the symbols unchanged
        self._tau(t)
        return self.soliton.christoffel_at(pts)

    def ricci_at(self, pts, t):
        self._tau(t)
        return self.soliton.ricci_at(pts)

    def scalar_at(self, pts, t):
        return self.soliton.scalar_at(pts) / self._tau(t)

    # -- potential family ----------------------------------------------

    def potential_at(self, pts, t):
        P, single = as_points(pts)
        out = self.soliton._potential(self.phi_at(P, t))
        return out[0] if single else out

    def potential_dx_at(self, pts, t):
        """Plain partials of f_t: chain rule through the flow map."""
        P, single = as_points(pts)
        c = self._stretch(t)
        df = self.soliton._potential_dx(self.phi_at(P, t)).copy()
        code = self.soliton.code
        if code == GAUSSIAN:
            df *= c
        elif code == CYLINDER:
            df[:, 2] *= c
        return df[0] if single else df

    def potential_hess_at(self, pts, t):
        """Covariant Hessian of f_t, from the identity
        Hess f_t = g_t / (2 (T - t)) - Ric(g_t)."""
        tau = self._tau(t)
        P, single = as_points(pts)
        out = self.metric_at(P, t) / (2.0 * tau) - self.soliton._ricci(P)
        return out[0] if single else out

    def density_at(self, pts, t):
        tau = self._tau(t)
        n = self.soliton.dim
        P, single = as_points(pts)
        out = (4.0 * np.pi * tau) ** (-0.5 * n) * np.exp(-self.potential_at(P, t))
        return out[0] if single else out

    def density_laplacian_at(self, pts, t):
        """Analytic Laplacian of rho_t: rho (f - n/2) / (T - t)."""
        tau = self._tau(t)
        n = self.soliton.dim
        P, single = as_points(pts)
        out = self.density_at(P, t) * (self.potential_at(P, t) - 0.5 * n) / tau
        return out[0] if single else out

    def density_dt_at(self, pts, t):
        """Analytic time derivative of rho_t, equal to
        -Lap rho + R rho along the family."""
        P, single = as_points(pts)
        out = self.density_at(P, t) * self.scalar_at(P, t) - self.density_laplacian_at(P, t)
        return out[0] if single else out

    def at_time(self, t):
        """Frozen-time metric provider (metric_at / christoffel_at on
        points only), for curve geometry in g_t."""
        self._tau(t)
        return _FrozenFamilyMetric(self, t)


class _FrozenFamilyMetric:
    def __init__(self, family, t):
        self.family = family
        self.t = float(t)
        self.chart = family.soliton.chart
        self.dim = family.soliton.dim

    def metric_at(self, pts):
        return self.family.metric_at(pts, self.t)

    def christoffel_at(self, pts):
        return self.family.christoffel_at(pts, self.t)


def flow_family(soliton, T):
    """Build the induced time-dependent family with horizon T > 0."""
    return RicciFlowFamily(soliton, T)

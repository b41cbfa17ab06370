"""Weighted-volume functionals, their first variation, and path length
quantities for the induced metric family.

The central object is the weighted integral

    F(u, F, rho, g) = sum_i  u_i * rho(F_i) * dmu_i

over a discrete closed curve, where dmu is the chord-calibrated measure
in the metric g.  Its analytic first variation in a direction
(w, V, k, h) is evaluated term by term (first_variation_rhs) and checked
against a centered finite difference along the straight-line family
u+sw, F+sV, rho+sk, g+sh (finite_difference_variation).

Derivatives of the reference density enter the variation only through
grad f and Hess f with f = -log rho - (n/2) log(4 pi tau), so the result
does not depend on the time-scale choice tau.
"""

from dataclasses import dataclass

import numpy as np

from .ambient import RicciFlowFamily, as_points
from .errors import ConfigurationError, DomainError
from .geometry import compute_geometry

TRAPEZOID_PERIODIC = "trapezoid-periodic-uniform"


@dataclass
class FunctionalReport:
    """Value of one curve functional plus its per-vertex integrand."""

    value: float
    integrand: np.ndarray
    quadrature: str = TRAPEZOID_PERIODIC


@dataclass
class ScalarField:
    """Ambient scalar field given by closures: value, plain gradient,
    plain second derivatives.  Only `value` is required; derivative
    closures are needed when the field serves as a reference density."""

    value: callable
    dx: callable = None
    dxx: callable = None


@dataclass
class TensorField:
    """Ambient symmetric 2-tensor field given by a value closure."""

    value: callable


@dataclass
class VariationData:
    """Direction (w, V, k, h): per-vertex scalar, per-vertex ambient
    vector, ambient scalar field, ambient symmetric 2-tensor field.
    None entries mean zero."""

    w: np.ndarray | None = None
    V: np.ndarray | None = None
    k: ScalarField | None = None
    h: TensorField | None = None


# -- reference density fields -----------------------------------------

def potential_density_field(soliton, weight=1.0, tau=1.0, prefactor=None):
    """Density (4 pi tau)^(-n/2) exp(-weight * f) built from the soliton
    potential, with analytic first and second derivatives."""
    n = soliton.dim
    pref = (4.0 * np.pi * tau) ** (-0.5 * n) if prefactor is None else prefactor

    def value(pts):
        P, _ = as_points(pts)
        return pref * np.exp(-weight * soliton._potential(P))

    def dx(pts):
        P, _ = as_points(pts)
        rho = value(P)
        return -weight * rho[:, None] * soliton._potential_dx(P)

    def dxx(pts):
        P, _ = as_points(pts)
        rho = value(P)
        df = soliton._potential_dx(P)
        hess = soliton._potential_hess(P)
        gamma = soliton._christoffel(P)
        ddf = hess + np.einsum("pcab,pc->pab", gamma, df)
        outer = np.einsum("pa,pb->pab", df, df)
        return rho[:, None, None] * (weight**2 * outer - weight * ddf)

    return ScalarField(value=value, dx=dx, dxx=dxx)


def family_density_field(family, t):
    """The family density rho_t as a ScalarField with analytic
    derivatives."""
    n = family.soliton.dim

    def value(pts):
        P, _ = as_points(pts)
        return family.density_at(P, t)

    def dx(pts):
        P, _ = as_points(pts)
        rho = family.density_at(P, t)
        return -rho[:, None] * family.potential_dx_at(P, t)

    def dxx(pts):
        P, _ = as_points(pts)
        rho = family.density_at(P, t)
        df = family.potential_dx_at(P, t)
        hess = family.potential_hess_at(P, t)
        gamma = family.christoffel_at(P, t)
        ddf = hess + np.einsum("pcab,pc->pab", gamma, df)
        outer = np.einsum("pa,pb->pab", df, df)
        return rho[:, None, None] * (outer - ddf)

    return ScalarField(value=value, dx=dx, dxx=dxx)


def family_density_dt_field(family, t):
    """Time derivative of rho_t (value closure only)."""
    return ScalarField(value=lambda pts: family.density_dt_at(pts, t))


def ricci_direction_field(background, t=None, scale=-2.0):
    """Metric direction h = scale * Ric, the motion of the metric family."""
    if isinstance(background, RicciFlowFamily):
        return TensorField(value=lambda pts: scale * background.ricci_at(pts, t))
    return TensorField(value=lambda pts: scale * background.ricci_at(pts))


# -- measures and basic functionals ------------------------------------

def _chord_speeds(verts, chart, metric_at, du):
    """Chord lengths h_{i+1/2} and vertex speeds |dF/du| in a metric
    given by a value closure; raises if the metric degenerates."""
    fwd = chart.wrap_diff(np.roll(verts, -1, axis=0) - verts)
    mid = verts + 0.5 * fwd
    g_mid = metric_at(mid)
    chord_sq = np.einsum("pab,pa,pb->p", g_mid, fwd, fwd)
    if not np.isfinite(chord_sq).all() or chord_sq.min() <= 0.0:
        raise DomainError("perturbed metric is not positive along the curve")
    chord = np.sqrt(chord_sq)
    speed = (chord + np.roll(chord, 1)) / (2.0 * du)
    return chord, speed


def weighted_volume(geom, soliton=None):
    """Integral of exp(-f) over the curve; the monotone quantity of the
    normalized flow."""
    f = geom.f if geom.f is not None else soliton.potential_at(geom.vertices)
    integrand = np.exp(-f)
    return FunctionalReport(float(np.sum(integrand * geom.measure_weight)), integrand)


def stone_functional(geom, soliton=None):
    """Integral of exp(-f/2) over the curve; bounded uniformly along the
    normalized flow and used to control the second derivative of the
    weighted volume."""
    f = geom.f if geom.f is not None else soliton.potential_at(geom.vertices)
    integrand = np.exp(-0.5 * f)
    return FunctionalReport(float(np.sum(integrand * geom.measure_weight)), integrand)


def shrinker_residual_integral(geom, soliton=None):
    """Integral of |H + (grad f)^normal|^2 exp(-f); nonnegative, zero
    exactly on self-shrinkers, and the decay rate of the weighted
    volume."""
    if geom.shrinker_defect is None:
        raise ConfigurationError("geometry carries no potential data")
    f = geom.f
    defect_sq = geom.inner(geom.shrinker_defect, geom.shrinker_defect)
    integrand = defect_sq * np.exp(-f)
    return FunctionalReport(float(np.sum(integrand * geom.measure_weight)), integrand)


def general_functional(u, curve, rho, background):
    """F(u, F, rho, g): quadrature of u * rho(F) against the curve
    measure in the supplied metric."""
    u = np.broadcast_to(np.asarray(u, dtype=float), (curve.n_vertices,))
    verts = curve.vertices
    rho_vals = rho.value(verts)
    if np.min(rho_vals) <= 0.0:
        raise DomainError("density must be positive along the curve")
    _, speed = _chord_speeds(verts, background.chart, background.metric_at,
                             curve.param_spacing)
    integrand = u * rho_vals
    dmu = speed * curve.param_spacing
    return FunctionalReport(float(np.sum(integrand * dmu)), integrand)


# -- first variation ----------------------------------------------------

def _curve_laplacian(values, chord):
    """Nonuniform periodic 3-point Laplace-Beltrami of per-vertex values;
    chord[i] is the arclength of edge (i, i+1)."""
    vp = np.roll(values, -1)
    vm = np.roll(values, 1)
    hp = chord
    hm = np.roll(chord, 1)
    return ((vp - values) / hp - (values - vm) / hm) / (0.5 * (hp + hm))


def first_variation_rhs(u, curve, rho, background, v, tau=1.0):
    """Analytic first variation of the weighted functional at the base
    point (u, curve, rho, g) in the direction v = (w, V, k, h).

    The background must expose christoffel_at; the density must carry
    derivative closures.  tau fixes the bookkeeping split of rho into
    (4 pi tau)^(-n/2) exp(-f) and provably drops out of the result.
    """
    if tau <= 0.0:
        raise ConfigurationError(f"tau must be positive, got {tau}")
    if rho.dx is None or rho.dxx is None:
        raise ConfigurationError("reference density needs derivative closures")
    geom = compute_geometry(curve, background)
    verts = curve.vertices
    N = curve.n_vertices
    du = curve.param_spacing
    u = np.broadcast_to(np.asarray(u, dtype=float), (N,)).astype(float)

    rho_vals = rho.value(verts)
    if np.min(rho_vals) <= 0.0:
        raise DomainError("density must be positive along the curve")
    drho = rho.dx(verts)
    ddrho = rho.dxx(verts)
    gamma = background.christoffel_at(verts)
    hess_rho = ddrho - np.einsum("pcab,pc->pab", gamma, drho)
    ginv = np.linalg.inv(geom.metric)
    lap_rho = np.einsum("pab,pab->p", ginv, hess_rho)

    # f-layer: independent of tau by construction
    df = -drho / rho_vals[:, None]
    hess_f = -hess_rho / rho_vals[:, None, None] \
        + np.einsum("pa,pb->pab", drho, drho) / rho_vals[:, None, None] ** 2
    grad_f = np.einsum("pab,pb->pa", ginv, df)
    grad_f_perp = geom.normal_part(grad_f)
    that = geom.unit_tangent
    tr_hess_f = np.einsum("pab,pab->p", ginv, hess_f)
    tr_perp_hess_f = tr_hess_f - np.einsum("pab,pa,pb->p", hess_f, that, that)

    V = np.zeros_like(verts) if v.V is None else np.asarray(v.V, dtype=float)
    w_dir = np.zeros(N) if v.w is None else np.broadcast_to(
        np.asarray(v.w, dtype=float), (N,))
    k_vals = np.zeros(N) if v.k is None else v.k.value(verts)
    if v.h is not None:
        h_vals = v.h.value(verts)
        tr_h = np.einsum("pab,pab->p", ginv, h_vals)
        tr_perp_h = tr_h - np.einsum("pab,pa,pb->p", h_vals, that, that)
    else:
        tr_h = np.zeros(N)
        tr_perp_h = np.zeros(N)

    chord, _ = _chord_speeds(verts, background.chart, background.metric_at, du)
    lap_u = _curve_laplacian(u, chord)
    du_central = (np.roll(u, -1) - np.roll(u, 1)) / (2.0 * du)
    speed_sq = geom.speed**2
    push_grad_u = (du_central / speed_sq)[:, None] * geom.tangent

    dmu = geom.measure_weight
    defect = geom.H + grad_f_perp
    term_motion = -np.sum(
        u * geom.inner(V + grad_f_perp, defect) * rho_vals * dmu)
    term_ambient = np.sum(u * (lap_rho + k_vals + 0.5 * rho_vals * tr_h) * dmu)
    term_curve = np.sum(
        (w_dir - lap_u - geom.inner(V, push_grad_u)
         + u * (tr_perp_hess_f - 0.5 * tr_perp_h)) * rho_vals * dmu)
    return float(term_motion + term_ambient + term_curve)


def finite_difference_variation(u, curve, rho, background, v, eps=1e-5):
    """Centered finite-difference oracle for the first variation along
    the straight-line family u+sw, F+sV, rho+sk, g+sh."""
    if not (1e-7 <= eps <= 1e-3):
        raise ConfigurationError(f"eps must lie in [1e-7, 1e-3], got {eps}")
    N = curve.n_vertices
    du = curve.param_spacing
    verts = curve.vertices
    u = np.broadcast_to(np.asarray(u, dtype=float), (N,)).astype(float)
    V = np.zeros_like(verts) if v.V is None else np.asarray(v.V, dtype=float)
    w_dir = np.zeros(N) if v.w is None else np.broadcast_to(
        np.asarray(v.w, dtype=float), (N,))

    def evaluate(s):
        verts_s = verts + s * V
        rho_vals = rho.value(verts_s)
        if v.k is not None:
            rho_vals = rho_vals + s * v.k.value(verts_s)
        if np.min(rho_vals) <= 0.0:
            raise DomainError("perturbed density non-positive; reduce eps")
        if v.h is not None:
            def metric_at(pts):
                return background.metric_at(pts) + s * v.h.value(pts)
        else:
            metric_at = background.metric_at
        _, speed = _chord_speeds(verts_s, background.chart, metric_at, du)
        return np.sum((u + s * w_dir) * rho_vals * speed * du)

    return float((evaluate(eps) - evaluate(-eps)) / (2.0 * eps))


def monotonicity_direction(family, t, geom_t):
    """Base data and direction realizing the time derivative of the
    weighted functional along the coupled flow at time t: u is the
    codimension power of (4 pi (T-t)), the curve moves by H, the density
    by its time derivative, the metric by -2 Ric.

    Returns (u, rho_field, direction, tau)."""
    tau = family.T - t
    n = family.soliton.dim
    m = 1
    u_val = (4.0 * np.pi * tau) ** (0.5 * (n - m))
    u = np.full(geom_t.n_vertices, u_val)
    w = np.full(geom_t.n_vertices, -0.5 * (n - m) / tau * u_val)
    direction = VariationData(
        w=w,
        V=geom_t.H,
        k=family_density_dt_field(family, t),
        h=ricci_direction_field(family, t, scale=-2.0),
    )
    return u, family_density_field(family, t), direction, tau


# -- path length and reduced distance ----------------------------------

def l_length(points, times, family):
    """Length integral sqrt(t2 - t) (R + |dpath/dt|^2) dt of a space-time
    path sampled at strictly increasing times, in the family metric.

    Quadrature: the square-root weight is integrated exactly against the
    piecewise-linear interpolant of R + |dpath/dt|^2 on every panel
    (plain trapezoid loses half an order to the vanishing weight at the
    endpoint), keeping the rule second order."""
    pts = np.asarray(points, dtype=float)
    ts = np.asarray(times, dtype=float)
    if pts.ndim != 2 or pts.shape[0] != ts.shape[0]:
        raise ValueError("need matching (K, n) points and (K,) times")
    K = ts.shape[0]
    if K < 2:
        raise ValueError("need at least two samples")
    if np.any(np.diff(ts) <= 0.0):
        raise ValueError("times must be strictly increasing")
    t2 = ts[-1]
    if not t2 < family.T:
        raise DomainError(f"final time {t2} must lie below the horizon T={family.T}")

    # velocity: second-order stencils on the nonuniform grid
    vel = np.empty_like(pts)
    for k in range(K):
        if 0 < k < K - 1:
            hm = ts[k] - ts[k - 1]
            hp = ts[k + 1] - ts[k]
            vel[k] = (hm**2 * pts[k + 1] + (hp**2 - hm**2) * pts[k]
                      - hp**2 * pts[k - 1]) / (hm * hp * (hm + hp))
        elif k == 0:
            h1 = ts[1] - ts[0]
            h2 = ts[2] - ts[1] if K > 2 else h1
            if K > 2:
                vel[0] = (-(2 * h1 + h2) / (h1 * (h1 + h2)) * pts[0]
                          + (h1 + h2) / (h1 * h2) * pts[1]
                          - h1 / (h2 * (h1 + h2)) * pts[2])
            else:
                vel[0] = (pts[1] - pts[0]) / h1
        else:
            h1 = ts[-1] - ts[-2]
            h2 = ts[-2] - ts[-3] if K > 2 else h1
            if K > 2:
                vel[-1] = ((2 * h1 + h2) / (h1 * (h1 + h2)) * pts[-1]
                           - (h1 + h2) / (h1 * h2) * pts[-2]
                           + h1 / (h2 * (h1 + h2)) * pts[-3])
            else:
                vel[-1] = (pts[-1] - pts[-2]) / h1

    q = np.empty(K)
    for k in range(K):
        g = family.metric_at(pts[k], ts[k])
        q[k] = family.scalar_at(pts[k], ts[k]) + vel[k] @ g @ vel[k]

    # product integration: int sqrt(sigma) * (linear q) over each panel,
    # with sigma = t2 - t decreasing to zero at the path end
    sigma = np.maximum(t2 - ts, 0.0)
    s_hi, s_lo = sigma[:-1], sigma[1:]
    h = np.diff(ts)
    m32 = (2.0 / 3.0) * (s_hi**1.5 - s_lo**1.5)
    m52 = (2.0 / 5.0) * (s_hi**2.5 - s_lo**2.5)
    q_a, q_b = q[:-1], q[1:]
    panels = q_a * m32 + (q_b - q_a) / h * (s_hi * m32 - m52)
    return float(panels.sum())


def reduced_distance_gaussian(base, query):
    """Closed-form reduced distance of the trivial flat flow:
    |x - base|^2 / (4 (t2 - t1))."""
    (x2, t2) = base
    (x1, t1) = query
    if not t1 < t2:
        raise DomainError(f"need t1 < t2, got t1={t1}, t2={t2}")
    d = np.asarray(x2, dtype=float) - np.asarray(x1, dtype=float)
    return float(d @ d / (4.0 * (t2 - t1)))


def reduced_distance_path_bound(l_value, t1, t2):
    """Upper bound on the reduced distance from one path's length
    integral: L / (2 sqrt(t2 - t1))."""
    if not t1 < t2:
        raise DomainError(f"need t1 < t2, got t1={t1}, t2={t2}")
    return l_value / (2.0 * np.sqrt(t2 - t1))

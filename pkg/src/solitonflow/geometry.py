"""Discrete closed-curve immersions and their pointwise extrinsic geometry.

A curve is an ordered list of N chart points with uniform parameter
increment du = 1/N and periodic index arithmetic.  The tangent is the
wrap-aware central difference; the parameter speed |dF/du| is calibrated
from metric chord lengths at edge midpoints (second order, and exact on
coordinate circles, which the tight flow tolerances rely on); the mean
curvature vector is the normal projection of the covariant second
parameter derivative divided by the squared speed.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels
from .ambient import AmbientSoliton, _FrozenFamilyMetric
from .errors import (ChartDomainError, ConfigurationError,
                     DegenerateImmersionError)

MIN_VERTICES = 16
_COLLINEAR_TOL = 1e-8


@dataclass
class DiscreteCurve:
    """Closed polygonal immersion in an ambient chart."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        if v.ndim != 2:
            raise ConfigurationError(f"vertices must be (N, n), got shape {v.shape}")
        if v.shape[0] < MIN_VERTICES:
            raise ConfigurationError(
                f"need at least {MIN_VERTICES} vertices, got {v.shape[0]}")
        if not np.isfinite(v).all():
            raise ConfigurationError("vertices must be finite")
        self.vertices = v

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def ambient_dim(self):
        return self.vertices.shape[1]

    @property
    def param_spacing(self):
        return 1.0 / self.vertices.shape[0]


@dataclass
class CurveGeometry:
    """Per-vertex geometric data of a curve in one background metric.

    Potential-dependent fields (grad_f*, velocity_normalized,
    shrinker_defect) are None when the background carries no potential.
    """

    vertices: np.ndarray
    metric: np.ndarray            # (N, n, n)
    tangent: np.ndarray           # dF/du, central differences
    unit_tangent: np.ndarray
    speed: np.ndarray             # chord-calibrated |dF/du|
    measure_weight: np.ndarray    # speed * du
    normal_frame: np.ndarray      # (N, n-1, n), orthonormal, normal
    H: np.ndarray                 # mean curvature vector
    A_norm: np.ndarray            # |A| = |H| for curves
    A_uu: np.ndarray              # second fundamental form on (d_u, d_u)
    f: np.ndarray | None = None
    grad_f: np.ndarray | None = None          # contravariant
    grad_f_normal: np.ndarray | None = None
    velocity_normalized: np.ndarray | None = None   # H + grad f (full)
    shrinker_defect: np.ndarray | None = None       # H + grad f normal part

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    def length(self):
        return float(self.measure_weight.sum())

    def inner(self, u, w):
        """Pointwise metric inner product of two (N, n) vector fields."""
        return np.einsum("pab,pa,pb->p", self.metric, u, w)

    def norm(self, u):
        return np.sqrt(self.inner(u, u))

    def normal_part(self, u):
        coef = self.inner(u, self.unit_tangent)
        return u - coef[:, None] * self.unit_tangent


def _resolve_kernel_route(background):
    """(code, sa, sb) for backgrounds the jitted kernels understand."""
    if isinstance(background, AmbientSoliton):
        return background.code, 1.0, 1.0
    if isinstance(background, _FrozenFamilyMetric):
        fam = background.family
        sa, sb = fam.metric_scales(background.t)
        return fam.soliton.code, sa, sb
    return None


def _core_generic(verts, du, chart, background):
    """Stencil core through arbitrary metric providers (e.g. conformal
    rescalings); mirrors the kernel formulas."""
    fwd = chart.wrap_diff(np.roll(verts, -1, axis=0) - verts)
    bwd = np.roll(fwd, 1, axis=0)
    mid = verts + 0.5 * fwd
    g_mid = background.metric_at(mid)
    chord = np.sqrt(np.einsum("pab,pa,pb->p", g_mid, fwd, fwd))
    speed = (chord + np.roll(chord, 1)) / (2.0 * du)
    tangent = (fwd + bwd) / (2.0 * du)
    fuu = (fwd - bwd) / (du * du)
    g = background.metric_at(verts)
    gamma = background.christoffel_at(verts)
    acc = fuu + np.einsum("pcab,pa,pb->pc", gamma, tangent, tangent)
    tnorm_sq = np.einsum("pab,pa,pb->p", g, tangent, tangent)
    if tnorm_sq.min() < 1e-24:
        raise DegenerateImmersionError("discrete tangent has vanishing norm")
    coef = np.einsum("pab,pa,pb->p", g, acc, tangent) / tnorm_sq
    hvec = (acc - coef[:, None] * tangent) / speed[:, None] ** 2
    anorm = np.sqrt(np.einsum("pab,pa,pb->p", g, hvec, hvec))
    return tangent, speed, hvec, anorm, g


def _normal_frame(g, unit_tangent):
    """Gram-Schmidt frame of the normal bundle against the chart basis,
    taken in fixed coordinate order with a deterministic collinearity
    skip rule."""
    N, n = unit_tangent.shape
    frame = np.zeros((N, n - 1, n))
    basis = np.eye(n)
    for p in range(N):
        gp = g[p]
        have = [unit_tangent[p]]
        for a in range(n):
            if len(have) == n:
                break
            e = basis[a]
            e_norm = np.sqrt(gp[a, a])
            coll = abs(gp[a] @ unit_tangent[p]) / e_norm
            if len(have) == 1 and coll > 1.0 - _COLLINEAR_TOL:
                continue
            v = e.copy()
            for u in have:
                v = v - (u @ gp @ v) * u
            nrm = np.sqrt(v @ gp @ v)
            if nrm < 1e-10 * e_norm:
                continue
            v /= nrm
            have.append(v)
        if len(have) != n:
            raise DegenerateImmersionError(
                f"could not complete normal frame at vertex {p}")
        frame[p] = np.stack(have[1:])
    return frame


def compute_geometry(curve, background):
    """All pointwise extrinsic geometry of a curve in one background.

    background: an AmbientSoliton (fills the potential-dependent
    fields), a frozen-time family metric, or any provider with
    metric_at / christoffel_at.
    """
    verts = curve.vertices
    chart = background.chart
    if not np.all(chart.contains(verts)):
        raise ChartDomainError("curve has vertices outside the chart validity domain")
    du = curve.param_spacing

    route = _resolve_kernel_route(background)
    if route is not None:
        code, sa, sb = route
        tangent, speed, hvec, anorm, _, _, ok = _kernels.curve_arrays(
            code, sa, sb, chart.periods, verts, du)
        if not ok:
            raise DegenerateImmersionError("degenerate discrete tangent")
        g = background.metric_at(verts)
    else:
        tangent, speed, hvec, anorm, g = _core_generic(verts, du, chart, background)

    tnorm = np.sqrt(np.einsum("pab,pa,pb->p", g, tangent, tangent))
    unit_tangent = tangent / tnorm[:, None]
    frame = _normal_frame(g, unit_tangent)
    geom = CurveGeometry(
        vertices=verts,
        metric=g,
        tangent=tangent,
        unit_tangent=unit_tangent,
        speed=speed,
        measure_weight=speed * du,
        normal_frame=frame,
        H=hvec,
        A_norm=anorm,
        A_uu=hvec * speed[:, None] ** 2,
    )

    if hasattr(background, "potential_at"):
        geom.f = background.potential_at(verts)
        if hasattr(background, "potential_grad_at"):
            grad = background.potential_grad_at(verts)
        else:
            df = background.potential_dx_at(verts)
            grad = np.einsum("pab,pb->pa", np.linalg.inv(g), df)
        geom.grad_f = grad
        geom.grad_f_normal = geom.normal_part(grad)
        geom.velocity_normalized = geom.H + grad
        geom.shrinker_defect = geom.H + geom.grad_f_normal
    return geom


def shrinker_residual_pointwise(geom, lam):
    """Per-vertex |H - lam * (grad f)^normal| in the background metric."""
    if geom.grad_f_normal is None:
        raise ConfigurationError("geometry has no potential data")
    diff = geom.H - lam * geom.grad_f_normal
    return geom.norm(diff)


def curve_length(curve, background):
    """Total metric length from midpoint-metric chord sums."""
    chart = background.chart
    fwd = chart.wrap_diff(np.roll(curve.vertices, -1, axis=0) - curve.vertices)
    mid = curve.vertices + 0.5 * fwd
    g_mid = background.metric_at(mid)
    return float(np.sqrt(np.einsum("pab,pa,pb->p", g_mid, fwd, fwd)).sum())


def _arclength_table(curve, background):
    chart = background.chart
    fwd = chart.wrap_diff(np.roll(curve.vertices, -1, axis=0) - curve.vertices)
    mid = curve.vertices + 0.5 * fwd
    g_mid = background.metric_at(mid)
    chord = np.sqrt(np.einsum("pab,pa,pb->p", g_mid, fwd, fwd))
    s = np.concatenate([[0.0], np.cumsum(chord)])
    return s, fwd


def resample_by_arclength(curve, background, n_new):
    """Redistribute vertices uniformly in metric arclength.

    Periodic cubic interpolation of the (lifted) chart coordinates
    against the arclength table, anchored at vertex 0 so marked-vertex
    tracking survives remeshing.
    """
    if n_new < MIN_VERTICES:
        raise ConfigurationError(f"n_new must be >= {MIN_VERTICES}, got {n_new}")
    verts = curve.vertices
    N, n = verts.shape
    s, fwd = _arclength_table(curve, background)
    total = s[-1]
    if total <= 0.0:
        raise DegenerateImmersionError("curve has zero length")

    # lift periodic coordinates to a continuous branch
    lifted = np.empty((N + 1, n))
    lifted[0] = verts[0]
    lifted[1:] = verts[0] + np.cumsum(fwd, axis=0)
    winding = lifted[-1] - lifted[0]

    targets = total * np.arange(n_new) / n_new
    ramp = winding[None, :] * (s[:, None] / total)
    dev = lifted - ramp
    dev[-1] = dev[0]
    spline = CubicSpline(s, dev, bc_type="periodic")
    out = spline(targets) + winding[None, :] * (targets[:, None] / total)
    new = DiscreteCurve(out)
    background.chart.require(new.vertices)
    return new


# -- seed curves -----------------------------------------------------

def circle_curve(n_vertices, radius, center=(0.0, 0.0), dim=2):
    """Planar coordinate circle in the flat chart (first two axes)."""
    if radius <= 0:
        raise ConfigurationError(f"radius must be positive, got {radius}")
    u = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
    verts = np.zeros((n_vertices, dim))
    verts[:, 0] = center[0] + radius * np.cos(u)
    verts[:, 1] = center[1] + radius * np.sin(u)
    return DiscreteCurve(verts)


def ellipse_curve(n_vertices, a, b, center=(0.0, 0.0), dim=2):
    if a <= 0 or b <= 0:
        raise ConfigurationError("ellipse axes must be positive")
    u = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
    verts = np.zeros((n_vertices, dim))
    verts[:, 0] = center[0] + a * np.cos(u)
    verts[:, 1] = center[1] + b * np.sin(u)
    return DiscreteCurve(verts)


def latitude_curve(n_vertices, theta):
    """Latitude circle on the sphere chart at polar angle theta."""
    u = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
    verts = np.column_stack([np.full(n_vertices, float(theta)), u])
    return DiscreteCurve(verts)


def cylinder_loop_curve(n_vertices, x0=0.0, theta=0.5 * np.pi,
                        theta_wobble=0.0, x_wobble=0.0):
    """Closed loop around the spherical factor of the cylinder chart,
    optionally wobbled in the polar angle and the line coordinate."""
    u = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
    verts = np.column_stack([
        theta + theta_wobble * np.sin(2.0 * u),
        u,
        x0 + x_wobble * np.cos(u),
    ])
    return DiscreteCurve(verts)

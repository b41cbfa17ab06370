"""Pure-numpy implementation of the hot curve kernels.

Reference semantics for the jitted backend: same formulas, vectorized
with einsum instead of explicit loops.  Selected via
SOLITONFLOW_BACKEND=numpy.
"""

import numpy as np

GAUSSIAN, SPHERE, CYLINDER = 0, 1, 2
UNNORMALIZED, NORMALIZED, STATIC_MCF = 0, 1, 2

OK, CFL_STOP, DOMAIN_STOP, EXTINCT_STOP, DEGENERATE_STOP = 0, 1, 2, 3, 4

_DEGENERATE_TOL = 1e-12


def metric_scales(code, T, t):
    """Block scale factors (curved block, flat block) of the induced
    metric family at time t."""
    if code == GAUSSIAN:
        return 1.0, T
    if code == SPHERE:
        return T - t, 1.0
    return T - t, T


def _fields(code, sa, sb, P):
    """Scaled metric (N,n,n) and Christoffel symbols (N,n,n,n)."""
    N, n = P.shape
    g = np.zeros((N, n, n))
    gamma = np.zeros((N, n, n, n))
    if code == GAUSSIAN:
        idx = np.arange(n)
        g[:, idx, idx] = sb
    else:
        s = np.sin(P[:, 0])
        c = np.cos(P[:, 0])
        g[:, 0, 0] = 2.0 * sa
        g[:, 1, 1] = 2.0 * sa * s * s
        gamma[:, 0, 1, 1] = -s * c
        with np.errstate(divide="ignore", invalid="ignore"):
            cot = c / s
        gamma[:, 1, 0, 1] = cot
        gamma[:, 1, 1, 0] = cot
        if code == CYLINDER:
            g[:, 2, 2] = sb
    return g, gamma


def _grad_potential(code, P):
    """Contravariant potential gradient in the unscaled base metric."""
    gp = np.zeros_like(P)
    if code == GAUSSIAN:
        gp[:] = 0.5 * P
    elif code == CYLINDER:
        gp[:, 2] = 0.5 * P[:, 2]
    return gp


def _wrap(delta, periods):
    for a in range(delta.shape[1]):
        p = periods[a]
        if p > 0.0:
            delta[:, a] -= p * np.round(delta[:, a] / p)
    return delta


def curve_arrays(code, sa, sb, periods, verts, du):
    """Fused discrete geometry of a closed curve.

    Returns (tangent, speed, hvec, anorm, min_chord, length, ok):
    tangent is the wrap-aware central difference dF/du, speed the
    chord-calibrated |dF/du|_g, hvec the mean curvature vector, anorm its
    metric norm.  ok is False on NaN or a degenerate tangent.
    """
    fwd = _wrap(np.roll(verts, -1, axis=0) - verts, periods)
    bwd = np.roll(fwd, 1, axis=0)
    mid = verts + 0.5 * fwd
    g_mid, _ = _fields(code, sa, sb, mid)
    chord_sq = np.einsum("pab,pa,pb->p", g_mid, fwd, fwd)
    ok = bool(np.isfinite(chord_sq).all()) and bool((chord_sq > 0).all())
    if not ok:
        z = np.zeros_like(verts)
        return z, np.zeros(len(verts)), z, np.zeros(len(verts)), 0.0, 0.0, False
    chord = np.sqrt(chord_sq)
    speed = (chord + np.roll(chord, 1)) / (2.0 * du)
    length = float(chord.sum())
    tangent = (fwd + bwd) / (2.0 * du)
    fuu = (fwd - bwd) / (du * du)
    g, gamma = _fields(code, sa, sb, verts)
    acc = fuu + np.einsum("pcab,pa,pb->pc", gamma, tangent, tangent)
    tnorm_sq = np.einsum("pab,pa,pb->p", g, tangent, tangent)
    if not np.isfinite(acc).all() or tnorm_sq.min() < _DEGENERATE_TOL**2:
        z = np.zeros_like(verts)
        return z, speed, z, np.zeros(len(verts)), 0.0, length, False
    coef = np.einsum("pab,pa,pb->p", g, acc, tangent) / tnorm_sq
    hvec = (acc - coef[:, None] * tangent) / speed[:, None] ** 2
    anorm = np.sqrt(np.einsum("pab,pa,pb->p", g, hvec, hvec))
    return tangent, speed, hvec, anorm, float(chord.min()), length, True


def flow_velocity(code, sa, sb, periods, verts, du, kind):
    """Velocity field of one flow kind plus the step-guard quantities.

    Returns (vel, min_chord, max_asq, length, ok); the normalized kind
    adds the full (untrimmed) potential gradient to the mean curvature.
    """
    tangent, speed, hvec, anorm, min_chord, length, ok = curve_arrays(
        code, sa, sb, periods, verts, du)
    if not ok:
        return hvec, min_chord, 0.0, length, False
    vel = hvec
    if kind == NORMALIZED:
        vel = hvec + _grad_potential(code, verts)
    return vel, min_chord, float(np.max(anorm) ** 2), length, True


def _inside(lo, hi, periods, verts):
    if not np.isfinite(verts).all():
        return False
    for a in range(verts.shape[1]):
        if periods[a] == 0.0:
            col = verts[:, a]
            if col.min() <= lo[a] or col.max() >= hi[a]:
                return False
    return True


def advance(code, periods, lo, hi, verts, du, kind, T, clock, dt, nsteps,
            cfl, ext_len):
    """Classical 4-stage Runge-Kutta advance of up to nsteps steps.

    Guards evaluated before each step: parabolic CFL bound
    dt <= cfl * min_chord^2 / max(1, max|A|^2), horizon (unnormalized),
    extinction length.  Returns (verts, clock, steps_done, status).
    """
    v = verts.copy()
    for k in range(nsteps):
        if kind == UNNORMALIZED:
            if clock + dt >= T:
                return v, clock, k, CFL_STOP
            sa, sb = metric_scales(code, T, clock)
        else:
            sa, sb = 1.0, 1.0
        k1, min_chord, max_asq, length, ok = flow_velocity(
            code, sa, sb, periods, v, du, kind)
        if not ok:
            return v, clock, k, DEGENERATE_STOP
        if length < ext_len:
            return v, clock, k, EXTINCT_STOP
        if dt > cfl * min_chord * min_chord / max(1.0, max_asq):
            return v, clock, k, CFL_STOP

        if kind == UNNORMALIZED:
            sa2, sb2 = metric_scales(code, T, clock + 0.5 * dt)
            sa3, sb3 = metric_scales(code, T, clock + dt)
        else:
            sa2 = sa3 = 1.0
            sb2 = sb3 = 1.0
        k2, _, _, _, ok2 = flow_velocity(code, sa2, sb2, periods,
                                         v + 0.5 * dt * k1, du, kind)
        k3, _, _, _, ok3 = flow_velocity(code, sa2, sb2, periods,
                                         v + 0.5 * dt * k2, du, kind)
        k4, _, _, _, ok4 = flow_velocity(code, sa3, sb3, periods,
                                         v + dt * k3, du, kind)
        if not (ok2 and ok3 and ok4):
            return v, clock, k, DOMAIN_STOP
        cand = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not _inside(lo, hi, periods, cand):
            return v, clock, k, DOMAIN_STOP
        v = cand
        clock = clock + dt
    return v, clock, nsteps, OK

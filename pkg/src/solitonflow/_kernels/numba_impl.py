"""Numba-jitted implementation of the hot curve kernels.

Same contracts as numpy_impl; explicit per-vertex loops so the whole
RK4 advance runs inside one nopython region.
"""

import numpy as np
from numba import njit

GAUSSIAN, SPHERE, CYLINDER = 0, 1, 2
UNNORMALIZED, NORMALIZED, STATIC_MCF = 0, 1, 2

OK, CFL_STOP, DOMAIN_STOP, EXTINCT_STOP, DEGENERATE_STOP = 0, 1, 2, 3, 4

_DEGENERATE_TOL = 1e-12


@njit(cache=True)
def _metric_scales(code, T, t):
    if code == GAUSSIAN:
        return 1.0, T
    if code == SPHERE:
        return T - t, 1.0
    return T - t, T


def metric_scales(code, T, t):
    return _metric_scales(code, T, t)


@njit(cache=True, inline="always")
def _g_dot(code, sa, sb, p, u, w):
    """Inner product of u, w in the scaled metric at chart point p."""
    if code == GAUSSIAN:
        acc = 0.0
        for a in range(u.shape[0]):
            acc += u[a] * w[a]
        return sb * acc
    s = np.sin(p[0])
    acc = 2.0 * sa * (u[0] * w[0] + s * s * u[1] * w[1])
    if code == CYLINDER:
        acc += sb * u[2] * w[2]
    return acc


@njit(cache=True, inline="always")
def _gamma_quad(code, p, t, out):
    """out^c = Gamma^c_ab(p) t^a t^b (scale-invariant under block scalings)."""
    for a in range(out.shape[0]):
        out[a] = 0.0
    if code != GAUSSIAN:
        s = np.sin(p[0])
        c = np.cos(p[0])
        out[0] = -s * c * t[1] * t[1]
        out[1] = 2.0 * (c / s) * t[0] * t[1]


@njit(cache=True)
def _wrap_into(delta, periods):
    for i in range(delta.shape[0]):
        for a in range(delta.shape[1]):
            p = periods[a]
            if p > 0.0:
                delta[i, a] -= p * np.round(delta[i, a] / p)


@njit(cache=True)
def _curve_arrays(code, sa, sb, periods, verts, du):
    N, n = verts.shape
    tangent = np.zeros((N, n))
    speed = np.zeros(N)
    hvec = np.zeros((N, n))
    anorm = np.zeros(N)

    fwd = np.empty((N, n))
    for i in range(N):
        j = i + 1 if i + 1 < N else 0
        for a in range(n):
            fwd[i, a] = verts[j, a] - verts[i, a]
    _wrap_into(fwd, periods)

    chord = np.empty(N)
    mid = np.empty(n)
    for i in range(N):
        for a in range(n):
            mid[a] = verts[i, a] + 0.5 * fwd[i, a]
        csq = _g_dot(code, sa, sb, mid, fwd[i], fwd[i])
        if not np.isfinite(csq) or csq <= 0.0:
            return tangent, speed, hvec, anorm, 0.0, 0.0, False
        chord[i] = np.sqrt(csq)

    length = 0.0
    min_chord = chord[0]
    for i in range(N):
        length += chord[i]
        if chord[i] < min_chord:
            min_chord = chord[i]

    gq = np.empty(n)
    acc = np.empty(n)
    ok = True
    for i in range(N):
        ib = i - 1 if i > 0 else N - 1
        sp = (chord[i] + chord[ib]) / (2.0 * du)
        speed[i] = sp
        for a in range(n):
            tangent[i, a] = (fwd[i, a] + fwd[ib, a]) / (2.0 * du)
        _gamma_quad(code, verts[i], tangent[i], gq)
        for a in range(n):
            acc[a] = (fwd[i, a] - fwd[ib, a]) / (du * du) + gq[a]
        tsq = _g_dot(code, sa, sb, verts[i], tangent[i], tangent[i])
        if not np.isfinite(tsq) or tsq < _DEGENERATE_TOL * _DEGENERATE_TOL:
            ok = False
            break
        coef = _g_dot(code, sa, sb, verts[i], acc, tangent[i]) / tsq
        finite = True
        for a in range(n):
            hvec[i, a] = (acc[a] - coef * tangent[i, a]) / (sp * sp)
            if not np.isfinite(hvec[i, a]):
                finite = False
        if not finite:
            ok = False
            break
        anorm[i] = np.sqrt(_g_dot(code, sa, sb, verts[i], hvec[i], hvec[i]))
    return tangent, speed, hvec, anorm, min_chord, length, ok


def curve_arrays(code, sa, sb, periods, verts, du):
    return _curve_arrays(code, sa, sb, periods, np.ascontiguousarray(verts), du)


@njit(cache=True)
def _flow_velocity(code, sa, sb, periods, verts, du, kind):
    tangent, speed, hvec, anorm, min_chord, length, ok = _curve_arrays(
        code, sa, sb, periods, verts, du)
    N, n = verts.shape
    max_asq = 0.0
    if ok:
        for i in range(N):
            if anorm[i] * anorm[i] > max_asq:
                max_asq = anorm[i] * anorm[i]
        if kind == NORMALIZED:
            if code == GAUSSIAN:
                for i in range(N):
                    for a in range(n):
                        hvec[i, a] += 0.5 * verts[i, a]
            elif code == CYLINDER:
                for i in range(N):
                    hvec[i, 2] += 0.5 * verts[i, 2]
    return hvec, min_chord, max_asq, length, ok


def flow_velocity(code, sa, sb, periods, verts, du, kind):
    return _flow_velocity(code, sa, sb, periods, np.ascontiguousarray(verts), du, kind)


@njit(cache=True)
def _inside(lo, hi, periods, verts):
    for i in range(verts.shape[0]):
        for a in range(verts.shape[1]):
            x = verts[i, a]
            if not np.isfinite(x):
                return False
            if periods[a] == 0.0 and (x <= lo[a] or x >= hi[a]):
                return False
    return True


@njit(cache=True)
def _advance(code, periods, lo, hi, verts, du, kind, T, clock, dt, nsteps,
             cfl, ext_len):
    v = verts.copy()
    N, n = v.shape
    stage = np.empty((N, n))
    for k in range(nsteps):
        if kind == UNNORMALIZED:
            if clock + dt >= T:
                return v, clock, k, CFL_STOP
            sa, sb = _metric_scales(code, T, clock)
        else:
            sa, sb = 1.0, 1.0
        k1, min_chord, max_asq, length, ok = _flow_velocity(
            code, sa, sb, periods, v, du, kind)
        if not ok:
            return v, clock, k, DEGENERATE_STOP
        if length < ext_len:
            return v, clock, k, EXTINCT_STOP
        guard = 1.0 if max_asq < 1.0 else max_asq
        if dt > cfl * min_chord * min_chord / guard:
            return v, clock, k, CFL_STOP

        if kind == UNNORMALIZED:
            sa2, sb2 = _metric_scales(code, T, clock + 0.5 * dt)
            sa3, sb3 = _metric_scales(code, T, clock + dt)
        else:
            sa2 = 1.0
            sb2 = 1.0
            sa3 = 1.0
            sb3 = 1.0
        for i in range(N):
            for a in range(n):
                stage[i, a] = v[i, a] + 0.5 * dt * k1[i, a]
        k2, _, _, _, ok2 = _flow_velocity(code, sa2, sb2, periods, stage, du, kind)
        for i in range(N):
            for a in range(n):
                stage[i, a] = v[i, a] + 0.5 * dt * k2[i, a]
        k3, _, _, _, ok3 = _flow_velocity(code, sa2, sb2, periods, stage, du, kind)
        for i in range(N):
            for a in range(n):
                stage[i, a] = v[i, a] + dt * k3[i, a]
        k4, _, _, _, ok4 = _flow_velocity(code, sa3, sb3, periods, stage, du, kind)
        if not (ok2 and ok3 and ok4):
            return v, clock, k, DOMAIN_STOP
        cand = np.empty((N, n))
        for i in range(N):
            for a in range(n):
                cand[i, a] = v[i, a] + (dt / 6.0) * (
                    k1[i, a] + 2.0 * k2[i, a] + 2.0 * k3[i, a] + k4[i, a])
        if not _inside(lo, hi, periods, cand):
            return v, clock, k, DOMAIN_STOP
        v = cand
        clock = clock + dt
    return v, clock, nsteps, OK


def advance(code, periods, lo, hi, verts, du, kind, T, clock, dt, nsteps,
            cfl, ext_len):
    return _advance(code, periods, lo, hi, np.ascontiguousarray(verts), du,
                    kind, float(T), float(clock), float(dt), int(nsteps),
                    float(cfl), float(ext_len))

"""Condition monitors and identity-residual checks for flow runs.

Covers the curvature-scale (type-I) monitor, singular-time estimation
from curvature blow-up, the weighted-volume monotonicity audit, the
boundedness monitor of the potential at a marked vertex, and
finite-difference residuals of the induced-metric and curvature-norm
evolution identities.
"""

from dataclasses import dataclass, field

import numpy as np

from .ambient import GAUSSIAN
from .errors import ConfigurationError, NoBlowupSignal
from .flow import UNNORMALIZED, rescale_state, run_flow
from .functionals import (shrinker_residual_integral, stone_functional,
                          weighted_volume, _curve_laplacian, _chord_speeds)
from .geometry import compute_geometry


@dataclass
class TimeSeriesRecord:
    """Scalar diagnostics of one snapshot.  Functional columns always
    refer to the rescaled picture (the curve measured in the soliton
    metric); type_one and length are native to the run kind."""

    clock: float
    weighted_volume: float
    residual_integral: float
    stone: float
    type_one: float
    max_defect: float
    f_at_marked: float
    length: float

    COLUMNS = ("clock", "weighted_volume", "residual_integral", "stone",
               "type_one", "max_defect", "f_at_marked", "length")

    def astuple(self):
        return tuple(getattr(self, c) for c in self.COLUMNS)


@dataclass
class SingularTimeEstimate:
    T_hat: float
    fit_window: tuple
    fit_quality: float


@dataclass
class AuditReport:
    name: str
    passed: bool
    failures: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def as_dict(self):
        return {"audit": self.name, "pass": self.passed,
                "failures": self.failures, "stats": self.stats}


def type_one_monitor(state):
    """Scale-invariant curvature monitor: sqrt(T - t) max|A| for the
    unnormalized flow, max|A| of the rescaled picture otherwise.  The
    two representations agree identically for corresponding states."""
    geom = state.geometry()
    if state.kind == UNNORMALIZED:
        return float(np.sqrt(state.background.T - state.clock) * geom.A_norm.max())
    return float(geom.A_norm.max())


def record_from_state(state, marked_vertex=0):
    """Assemble the per-snapshot diagnostics row."""
    if state.kind == UNNORMALIZED:
        geom_native = state.geometry()
        tilde = rescale_state(state)
        geom = compute_geometry(tilde.curve, tilde.background)
        type_one = float(np.sqrt(state.background.T - state.clock)
                         * geom_native.A_norm.max())
        length = geom_native.length()
    else:
        geom = state.geometry()
        type_one = float(geom.A_norm.max())
        length = geom.length()
    marked = int(marked_vertex) % geom.n_vertices
    return TimeSeriesRecord(
        clock=float(state.clock),
        weighted_volume=weighted_volume(geom).value,
        residual_integral=shrinker_residual_integral(geom).value,
        stone=stone_functional(geom).value,
        type_one=type_one,
        max_defect=float(geom.norm(geom.shrinker_defect).max()),
        f_at_marked=float(geom.f[marked]),
        length=length,
    )


def estimate_singular_time(history):
    """Least-squares fit of 1/max|A|^2 against time; the root of the fit
    estimates the blow-up time.  For shrinking circles the law is
    exactly linear, so the estimate is exact up to integration error.

    history: array-like of (t, max|A|) rows, at least 10, with growing
    curvature.  Raises NoBlowupSignal when the history shows no growth.
    """
    h = np.asarray(history, dtype=float)
    if h.ndim != 2 or h.shape[1] != 2:
        raise ConfigurationError("history must be (K, 2) rows of (t, max|A|)")
    if h.shape[0] < 10:
        raise ConfigurationError(f"need at least 10 samples, got {h.shape[0]}")
    t, amax = h[:, 0], h[:, 1]
    if np.any(amax <= 0.0) or amax[-1] <= amax[0] * (1.0 + 1e-9):
        raise NoBlowupSignal("curvature history is not increasing")
    y = 1.0 / amax**2
    slope, intercept = np.polyfit(t, y, 1)
    if slope >= 0.0:
        raise NoBlowupSignal("inverse-square curvature is not decaying")
    T_hat = -intercept / slope
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    if not T_hat > t[-1]:
        raise NoBlowupSignal(
            f"fit root {T_hat:.6g} does not lie beyond the data window")
    return SingularTimeEstimate(T_hat=float(T_hat),
                                fit_window=(float(t[0]), float(t[-1])),
                                fit_quality=r2)


def _nonuniform_first_derivative(values, s):
    out = np.empty_like(values)
    hm = s[1:-1] - s[:-2]
    hp = s[2:] - s[1:-1]
    out[1:-1] = (hm**2 * values[2:] + (hp**2 - hm**2) * values[1:-1]
                 - hp**2 * values[:-2]) / (hm * hp * (hm + hp))
    out[0] = (values[1] - values[0]) / (s[1] - s[0])
    out[-1] = (values[-1] - values[-2]) / (s[-1] - s[-2])
    return out


def _nonuniform_second_derivative(values, s):
    hm = s[1:-1] - s[:-2]
    hp = s[2:] - s[1:-1]
    return 2.0 * ((values[2:] - values[1:-1]) / hp
                  - (values[1:-1] - values[:-2]) / hm) / (hp + hm)


def monotonicity_audit(records, s_values=None, c_prime=None,
                       slack=1e-8, derivative_rtol=0.01,
                       derivative_floor=None):
    """Audit the weighted-volume monotonicity along a recorded run.

    Checks: (i) the weighted volume never increases beyond the relative
    slack; (ii) its centered derivative in s matches minus the residual
    integral within derivative_rtol at interior samples; (iii) the
    discrete second derivative stays below c_prime (default: ten times
    the initial residual integral, floored at 1e-6).

    The derivative check compares against max(residual, floor); the
    default floor 1e-8 * max(1, WV_0) keeps differentiated roundoff of a
    stationary series from registering as a mismatch.
    """
    if len(records) < 3:
        raise ConfigurationError("need at least 3 records")
    wv = np.array([r.weighted_volume for r in records])
    resid = np.array([r.residual_integral for r in records])
    s = np.asarray(s_values, dtype=float) if s_values is not None \
        else np.array([r.clock for r in records])
    if np.any(np.diff(s) <= 0):
        raise ConfigurationError("records must have increasing clocks")
    if c_prime is None:
        c_prime = max(10.0 * resid[0], 1e-6)
    if derivative_floor is None:
        derivative_floor = 1e-8 * max(1.0, abs(wv[0]))

    failures = []
    increases = np.diff(wv) - slack * np.abs(wv[:-1])
    for i in np.nonzero(increases > 0)[0]:
        failures.append({"check": "non_increasing", "s": float(s[i + 1]),
                         "increase": float(np.diff(wv)[i])})

    dwv = _nonuniform_first_derivative(wv, s)
    mismatch = np.abs(dwv[1:-1] + resid[1:-1])
    denom = np.maximum(resid[1:-1], derivative_floor)
    for j in np.nonzero(mismatch > derivative_rtol * denom)[0]:
        failures.append({"check": "derivative_matches_residual",
                         "s": float(s[j + 1]),
                         "relative_error": float(mismatch[j] / denom[j])})

    d2 = _nonuniform_second_derivative(wv, s)
    for j in np.nonzero(np.abs(d2) > c_prime)[0]:
        failures.append({"check": "second_derivative_bound",
                         "s": float(s[j + 1]), "value": float(d2[j])})

    stats = {
        "initial_weighted_volume": float(wv[0]),
        "final_weighted_volume": float(wv[-1]),
        "max_derivative_mismatch": float((mismatch / denom).max()),
        "max_abs_second_derivative": float(np.abs(d2).max()) if d2.size else 0.0,
        "c_prime": float(c_prime),
    }
    return AuditReport("monotonicity", not failures, failures, stats)


def b2_boundedness_monitor(records, bound=None):
    """Track the potential at the marked vertex; flag divergence when it
    exceeds the bound (default: 10 * (initial value + 1))."""
    f_vals = np.array([r.f_at_marked for r in records])
    if bound is None:
        bound = float(10.0 * (abs(f_vals[0]) + 1.0))
    sup = float(f_vals.max())
    divergent = bool(sup > bound)
    failures = [{"check": "marked_potential_bounded", "sup": sup,
                 "bound": float(bound)}] if divergent else []
    return AuditReport("marked_potential_bound", not divergent, failures,
                       {"sup_f_at_marked": sup, "bound": float(bound),
                        "divergent": divergent})


# -- evolution-identity residuals --------------------------------------

def _probe_states(state, dt_probe, scheme, anchor_offset=None, substeps=32):
    """States used by the finite difference in time: (eval_state, pair)
    where pair brackets the derivative.

    Forward differences evaluate at the anchor (default: the given
    state); centered differences straddle it.  Since the parabolic flow
    cannot run backward, every bracket state is reached by a forward run
    from the given state, so the anchor sits at least dt_probe ahead.
    Refinement ladders should pass a fixed anchor_offset (>= the largest
    probe) so the evaluation state, and with it the spatial part of the
    residual, stays the same across the ladder.
    """
    fine = dt_probe / substeps
    if scheme == "forward":
        offset = 0.0 if anchor_offset is None else anchor_offset
        anchor = state if offset == 0.0 else run_flow(
            state, state.clock + offset, fine)
        hi = run_flow(anchor, anchor.clock + dt_probe, fine)
        return anchor, (anchor, hi, dt_probe)
    if scheme == "centered":
        offset = dt_probe if anchor_offset is None else anchor_offset
        if offset < dt_probe:
            raise ConfigurationError(
                f"anchor offset {offset} must cover the probe {dt_probe}")
        lo = run_flow(state, state.clock + offset - dt_probe, fine)
        anchor = run_flow(lo, state.clock + offset, fine)
        hi = run_flow(anchor, anchor.clock + dt_probe, fine)
        return anchor, (lo, hi, 2.0 * dt_probe)
    raise ConfigurationError(f"unknown scheme {scheme!r}")


def _induced_g_uu(state):
    geom = state.geometry()
    return np.einsum("pab,pa,pb->p", geom.metric, geom.tangent, geom.tangent)


def induced_metric_evolution_residual(state, dt_probe, scheme="centered",
                                      anchor_offset=None):
    """Max-norm residual of the induced-metric evolution identity
    d/dt g_uu = -2 (Ric(dF,dF) + g(H, A_uu)) along the unnormalized
    flow, with the time derivative taken by finite differences of
    substepped probe states."""
    if state.kind != UNNORMALIZED:
        raise ConfigurationError("induced-metric residual needs an unnormalized state")
    eval_state, (lo, hi, span) = _probe_states(state, dt_probe, scheme, anchor_offset)
    fd = (_induced_g_uu(hi) - _induced_g_uu(lo)) / span
    geom = eval_state.geometry()
    fam = eval_state.background
    ric = fam.ricci_at(geom.vertices, eval_state.clock)
    ric_uu = np.einsum("pab,pa,pb->p", ric, geom.tangent, geom.tangent)
    rhs = -2.0 * (ric_uu + geom.inner(geom.H, geom.A_uu))
    return float(np.abs(fd - rhs).max())


def curvature_evolution_residual_flat(state, dt_probe, scheme="centered",
                                      anchor_offset=None):
    """Max-norm residual of the flat-background curvature-norm identity
    d/dt |A|^2 = Lap |A|^2 - 2 |grad A|^2 + 2 |A|^4 along the
    unnormalized flow (plane-curve specialization)."""
    if state.soliton.code != GAUSSIAN:
        raise ConfigurationError("flat curvature identity needs the gaussian background")
    if state.kind != UNNORMALIZED:
        raise ConfigurationError("curvature residual needs an unnormalized state")
    eval_state, (lo, hi, span) = _probe_states(state, dt_probe, scheme, anchor_offset)
    asq_lo = lo.geometry().A_norm ** 2
    asq_hi = hi.geometry().A_norm ** 2
    fd = (asq_hi - asq_lo) / span

    geom = eval_state.geometry()
    asq = geom.A_norm**2
    chord, _ = _chord_speeds(geom.vertices, eval_state.soliton.chart,
                             eval_state.metric_background().metric_at,
                             1.0 / geom.n_vertices)
    lap_asq = _curve_laplacian(asq, chord)
    if geom.vertices.shape[1] == 2:
        # signed curvature against the rotated tangent: smooth through
        # inflection points, so (d kappa / ds)^2 is the right gradient term
        rot = np.column_stack([-geom.unit_tangent[:, 1], geom.unit_tangent[:, 0]])
        kappa = geom.inner(geom.H, rot)
    else:
        kappa = geom.A_norm
    dkappa = (np.roll(kappa, -1) - np.roll(kappa, 1)) / (np.roll(chord, 1) + chord)
    rhs = lap_asq - 2.0 * dkappa**2 + 2.0 * asq**2
    return float(np.abs(fd - rhs).max())

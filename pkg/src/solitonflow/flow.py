"""Time integration of the curve flows and the rescaling between them.

Two flow kinds share one integrator:

  unnormalized -- vertices move by the mean curvature vector computed in
      the time-dependent family metric; the clock t lives in [0, T).
  normalized -- vertices move by mean curvature plus the full potential
      gradient in the fixed soliton metric; the clock s starts at -log T.

Steps are classical 4-stage Runge-Kutta on all vertices with a parabolic
CFL guard; on a guard stop the driver halves the step size.  The exact
change of variables between the two kinds is exposed as rescale_state /
unrescale_state.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .ambient import AmbientSoliton, RicciFlowFamily
from .errors import (ChartDomainError, ConfigurationError,
                     DegenerateImmersionError, DomainError, ExtinctionSignal,
                     StepSizeError)
from .geometry import DiscreteCurve, compute_geometry, curve_length, resample_by_arclength

UNNORMALIZED = "unnormalized"
NORMALIZED = "normalized"
STATIC_MCF = "static_mcf"

DEFAULT_CFL = 0.4
DEFAULT_EXTINCTION_LENGTH = 1e-8
_MAX_HALVINGS = 60
_CHUNK_CAP = 20000


@dataclass
class FlowState:
    """A curve plus its clock and flow kind.  Value snapshot: stepping
    returns new states and never mutates."""

    curve: DiscreteCurve
    clock: float
    kind: str
    background: object           # RicciFlowFamily or AmbientSoliton
    step_count: int = 0
    last_dt: float = 0.0

    @property
    def soliton(self):
        if isinstance(self.background, RicciFlowFamily):
            return self.background.soliton
        return self.background

    @property
    def family(self):
        if self.kind == UNNORMALIZED:
            return self.background
        return None

    def metric_background(self):
        """Background providing the metric the flow currently sees."""
        if self.kind == UNNORMALIZED:
            return self.background.at_time(self.clock)
        return self.background

    def geometry(self):
        return compute_geometry(self.curve, self.metric_background())


def unnormalized_state(curve, family):
    if not isinstance(family, RicciFlowFamily):
        raise ConfigurationError("unnormalized flow needs a RicciFlowFamily")
    return FlowState(curve=curve, clock=0.0, kind=UNNORMALIZED, background=family)


def normalized_state(curve, soliton, T=1.0, clock=None):
    """Normalized flow state; the clock starts at -log T unless given."""
    if not isinstance(soliton, AmbientSoliton):
        raise ConfigurationError("normalized flow needs an AmbientSoliton")
    s0 = -np.log(T) if clock is None else float(clock)
    return FlowState(curve=curve, clock=s0, kind=NORMALIZED, background=soliton)


def static_mcf_state(curve, soliton):
    """Mean curvature flow in the fixed soliton metric, used by pilot
    runs that estimate the singular time (no horizon attached)."""
    if not isinstance(soliton, AmbientSoliton):
        raise ConfigurationError("static flow needs an AmbientSoliton")
    return FlowState(curve=curve, clock=0.0, kind=STATIC_MCF, background=soliton)


def _kernel_args(state):
    sol = state.soliton
    if state.kind == UNNORMALIZED:
        kind = _kernels.UNNORMALIZED
        T = state.background.T
    elif state.kind == NORMALIZED:
        kind = _kernels.NORMALIZED
        T = np.inf
    else:
        kind = _kernels.STATIC_MCF
        T = np.inf
    chart = sol.chart
    return sol.code, chart.periods, chart.lo, chart.hi, kind, T


def _raise_for_status(state, status, length_hint=None):
    if status == _kernels.DOMAIN_STOP:
        raise ChartDomainError(
            f"vertex left the chart domain at clock {state.clock:.6g}")
    if status == _kernels.DEGENERATE_STOP:
        raise DegenerateImmersionError(
            f"curve degenerated at clock {state.clock:.6g}")
    if status == _kernels.EXTINCT_STOP:
        length = length_hint
        if length is None:
            length = curve_length(state.curve, state.metric_background())
        raise ExtinctionSignal(state.clock, length)


def step(state, dt, cfl=DEFAULT_CFL, extinction_length=DEFAULT_EXTINCTION_LENGTH):
    """One RK4 step.  Raises StepSizeError when dt violates the CFL
    guard (halve and retry), ExtinctionSignal when the curve collapsed,
    and domain errors when vertices leave the chart."""
    if dt <= 0.0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if state.kind == UNNORMALIZED and state.clock + dt >= state.background.T:
        raise DomainError(
            f"step to t={state.clock + dt:.6g} reaches the horizon T={state.background.T}")
    code, periods, lo, hi, kind, T = _kernel_args(state)
    verts, clock, done, status = _kernels.advance(
        code, periods, lo, hi, state.curve.vertices, state.curve.param_spacing,
        kind, T, state.clock, dt, 1, cfl, extinction_length)
    if status == _kernels.CFL_STOP:
        raise StepSizeError(f"dt={dt:.3g} violates the CFL guard at clock {state.clock:.6g}")
    _raise_for_status(state, status)
    return replace(state, curve=DiscreteCurve(verts), clock=clock,
                   step_count=state.step_count + done, last_dt=dt)


def run_flow(state, end, dt, *, cfl=DEFAULT_CFL,
             extinction_length=DEFAULT_EXTINCTION_LENGTH,
             remesh_every=0, observer=None, observe_every=0,
             max_steps=5_000_000):
    """Drive a flow to the target clock with automatic step halving.

    observer(state) fires on the initial state, every observe_every
    steps, and on the final state.  remesh_every > 0 resamples to
    uniform arclength at that step cadence (anchored at vertex 0).
    Raises ExtinctionSignal / domain errors; the caller decides how to
    report them.  max_steps bounds the total step count so runs that
    crawl under the CFL guard near a collapse fail loudly.
    """
    if state.kind == UNNORMALIZED and end >= state.background.T:
        raise ConfigurationError(
            f"end clock {end} must stay below the horizon T={state.background.T}")
    if observer is not None:
        observer(state)
    halvings = 0
    start_count = state.step_count
    code, periods, lo, hi, kind, T = _kernel_args(state)

    # end tolerance grows with dt so step-accumulation roundoff never
    # triggers a spurious closing micro-step
    while state.clock < end - (1e-14 * max(1.0, abs(end)) + 1e-9 * dt):
        if state.step_count - start_count >= max_steps:
            raise StepSizeError(
                f"step budget {max_steps} exhausted at clock {state.clock:.6g} "
                f"(target {end:.6g}); the curve is likely collapsing")
        remaining = end - state.clock
        n_full = int(np.floor(remaining / dt + 1e-12))
        if n_full == 0:
            # closing partial step lands exactly on the end clock
            dt_eff = remaining
            n_target = 1
        else:
            dt_eff = dt
            boundaries = [_CHUNK_CAP, n_full]
            if observe_every > 0:
                boundaries.append(observe_every - state.step_count % observe_every)
            if remesh_every > 0:
                boundaries.append(remesh_every - state.step_count % remesh_every)
            n_target = max(1, min(boundaries))
        verts, clock, done, status = _kernels.advance(
            code, periods, lo, hi, state.curve.vertices,
            state.curve.param_spacing, kind, T, state.clock, dt_eff,
            n_target, cfl, extinction_length)
        if done > 0:
            state = replace(state, curve=DiscreteCurve(verts), clock=clock,
                            step_count=state.step_count + done, last_dt=dt_eff)
            if remesh_every > 0 and state.step_count % remesh_every == 0:
                resampled = resample_by_arclength(
                    state.curve, state.metric_background(), state.curve.n_vertices)
                state = replace(state, curve=resampled)
            if observer is not None and observe_every > 0 \
                    and state.step_count % observe_every == 0:
                observer(state)
        if status == _kernels.CFL_STOP:
            halvings += 1
            if halvings > _MAX_HALVINGS:
                raise StepSizeError(
                    f"CFL guard forced more than {_MAX_HALVINGS} halvings "
                    f"at clock {state.clock:.6g}")
            dt = dt / 2.0
            continue
        if status != _kernels.OK:
            _raise_for_status(state, status)
    if observer is not None and (observe_every <= 0 or state.step_count % observe_every != 0):
        observer(state)
    return state


# -- rescaling correspondence ----------------------------------------

def rescale_state(state, family=None):
    """Map an unnormalized state to the normalized picture: vertices
    through the flow map, clock to s = -log(T - t)."""
    if state.kind != UNNORMALIZED:
        raise ConfigurationError("rescale_state expects an unnormalized state")
    family = family or state.background
    t = state.clock
    verts = family.phi_at(state.curve.vertices, t)
    s = -np.log(family.T - t)
    return FlowState(curve=DiscreteCurve(verts), clock=s, kind=NORMALIZED,
                     background=family.soliton, step_count=state.step_count,
                     last_dt=state.last_dt)


def unrescale_state(state, family):
    """Inverse of rescale_state: t = T - exp(-s), vertices through the
    inverse flow map."""
    if state.kind != NORMALIZED:
        raise ConfigurationError("unrescale_state expects a normalized state")
    t = family.T - np.exp(-state.clock)
    verts = family.phi_inv_at(state.curve.vertices, t)
    return FlowState(curve=DiscreteCurve(verts), clock=t, kind=UNNORMALIZED,
                     background=family, step_count=state.step_count,
                     last_dt=state.last_dt)


def _aligned_distance(curve_a, curve_b, soliton, n_align=None):
    """Max metric distance between matching vertices after anchored
    arclength resampling of both curves."""
    n = n_align or curve_a.n_vertices
    a = resample_by_arclength(curve_a, soliton, n)
    b = resample_by_arclength(curve_b, soliton, n)
    delta = soliton.chart.wrap_diff(b.vertices - a.vertices)
    g = soliton.metric_at(a.vertices)
    return float(np.sqrt(np.einsum("pab,pa,pb->p", g, delta, delta)).max())


def correspondence_check(initial, family, t_end, dt, ds=None, align=True,
                         cfl=DEFAULT_CFL):
    """Advance the two flow kinds independently over matching windows
    and measure how far apart they land.

    Route A: unnormalized flow of `initial` to t_end, then rescaled.
    Route B: the rescaled initial state advanced by the normalized flow
    to s = -log(T - t_end).  Remeshing stays off so vertex identities
    persist; the final comparison optionally aligns both curves by
    arclength.

    Refinement studies should pick dt ladders below the CFL guard for
    the whole window: when the guard binds, both routes ride it and the
    measured gap stops responding to the requested dt.
    """
    if not t_end < family.T:
        raise ConfigurationError(f"t_end {t_end} must be below T={family.T}")
    ds = ds or dt
    state_a = unnormalized_state(initial, family)
    if t_end > 0.0:
        state_a = run_flow(state_a, t_end, dt, cfl=cfl)
    tilde_a = rescale_state(state_a)

    state_b = rescale_state(unnormalized_state(initial, family))
    s_end = -np.log(family.T - t_end)
    if s_end > state_b.clock:
        state_b = run_flow(state_b, s_end, ds, cfl=cfl)

    if align:
        return _aligned_distance(tilde_a.curve, state_b.curve, family.soliton)
    delta = family.soliton.chart.wrap_diff(state_b.curve.vertices - tilde_a.curve.vertices)
    g = family.soliton.metric_at(tilde_a.curve.vertices)
    return float(np.sqrt(np.einsum("pab,pa,pb->p", g, delta, delta)).max())

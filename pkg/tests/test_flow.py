"""Flow integration: exact laws, stationarity, rescaling, and the
correspondence between the two flow kinds."""

import numpy as np
import pytest

from solitonflow import flow_family
from solitonflow.errors import (ConfigurationError, DomainError,
                                ExtinctionSignal, StepSizeError)
from solitonflow.flow import (FlowState, correspondence_check,
                              normalized_state, rescale_state, run_flow, step,
                              static_mcf_state, unnormalized_state,
                              unrescale_state)
from solitonflow.geometry import circle_curve, ellipse_curve, latitude_curve


def mean_radius(state):
    return float(np.linalg.norm(state.curve.vertices, axis=1).mean())


def test_step_guards(gaussian2):
    fam = flow_family(gaussian2, 1.0)
    st = unnormalized_state(circle_curve(64, 1.0), fam)
    with pytest.raises(ConfigurationError):
        step(st, -1e-3)
    with pytest.raises(DomainError):
        step(st, 1.5)          # would reach the horizon
    with pytest.raises(StepSizeError):
        step(st, 0.05)         # violates the CFL guard
    out = step(st, 1e-4)
    assert out.step_count == 1 and out.clock == pytest.approx(1e-4)
    assert st.curve.vertices[0, 0] == 1.0   # input state untouched


def test_extinction_signal(gaussian2):
    fam = flow_family(gaussian2, 1.0)
    st = unnormalized_state(circle_curve(64, 0.05), fam)
    with pytest.raises(ExtinctionSignal):
        run_flow(st, 0.9, 1e-5, extinction_length=0.2)


def test_circle_law(gaussian2):
    fam = flow_family(gaussian2, 1.0)
    st = unnormalized_state(circle_curve(256, np.sqrt(2.0)), fam)
    st = run_flow(st, 0.5, 1e-4)
    assert mean_radius(st) == pytest.approx(1.0, abs=1e-4)


def test_equator_stationary(sphere):
    st = normalized_state(latitude_curve(64, np.pi / 2), sphere, T=1.0)
    st = run_flow(st, 10.0, 1e-3)
    assert st.step_count == 10000
    assert np.abs(st.curve.vertices[:, 0] - np.pi / 2).max() < 1e-6


def test_shrinker_circle_stationary(gaussian2):
    st = normalized_state(circle_curve(256, np.sqrt(2.0)), gaussian2, T=1.0)
    st = run_flow(st, 1.0, 4e-4)
    radii = np.linalg.norm(st.curve.vertices, axis=1)
    assert np.abs(radii - np.sqrt(2.0)).max() < 1e-5


def test_static_flow_matches_family_at_unit_horizon(gaussian2):
    fam = flow_family(gaussian2, 1.0)
    curve = ellipse_curve(64, 1.5, 1.0)
    a = run_flow(unnormalized_state(curve, fam), 0.2, 1e-4)
    b = run_flow(static_mcf_state(curve, gaussian2), 0.2, 1e-4)
    assert np.abs(a.curve.vertices - b.curve.vertices).max() < 1e-14


def test_rescale_values(gaussian2, cylinder):
    fam = flow_family(gaussian2, 1.0)
    st = FlowState(curve=circle_curve(64, 1.0), clock=0.75,
                   kind="unnormalized", background=fam)
    tilde = rescale_state(st)
    assert mean_radius(tilde) == pytest.approx(2.0, abs=1e-13)
    assert tilde.clock == pytest.approx(-np.log(0.25))

    famc = flow_family(cylinder, 1.0)
    from solitonflow.geometry import cylinder_loop_curve
    loop = cylinder_loop_curve(64, x0=1.0)
    stc = FlowState(curve=loop, clock=0.75, kind="unnormalized", background=famc)
    tc = rescale_state(stc)
    assert tc.curve.vertices[:, 2].mean() == pytest.approx(2.0, abs=1e-13)
    assert np.abs(tc.curve.vertices[:, :2] - loop.vertices[:, :2]).max() == 0.0


def test_rescale_roundtrip(gaussian2):
    fam = flow_family(gaussian2, 1.3)
    st = unnormalized_state(ellipse_curve(64, 1.2, 0.8), fam)
    st = run_flow(st, 0.37, 1e-4)
    back = unrescale_state(rescale_state(st), fam)
    assert np.abs(back.curve.vertices - st.curve.vertices).max() < 1e-12
    assert back.clock == pytest.approx(st.clock, abs=1e-12)


def test_rescale_at_time_zero_is_identity(gaussian2):
    fam = flow_family(gaussian2, 1.0)
    curve = ellipse_curve(64, 2.0, 1.0)
    tilde = rescale_state(unnormalized_state(curve, fam))
    assert np.abs(tilde.curve.vertices - curve.vertices).max() == 0.0
    assert tilde.clock == pytest.approx(0.0)


def test_correspondence_zero_window(gaussian2):
    fam = flow_family(gaussian2, 1.0)
    d = correspondence_check(ellipse_curve(64, 2.0, 1.0), fam, 0.0, 1e-4)
    assert d <= 1e-10


def test_correspondence_circle(gaussian2):
    fam = flow_family(gaussian2, 1.0)
    d = correspondence_check(circle_curve(128, np.sqrt(2.0)), fam, 0.5, 2e-4)
    assert d <= 1e-4


def test_correspondence_ellipse_and_refinement(gaussian2):
    fam = flow_family(gaussian2, 1.0)
    ell = ellipse_curve(64, 2.0, 1.0)
    d = correspondence_check(ell, fam, 0.3, 2.5e-4)
    assert d <= 5e-3
    # truncation-dominated ladder: guard-free window at N=32
    small = ellipse_curve(32, 2.0, 1.0)
    errs = [correspondence_check(small, fam, 0.1, dt, cfl=50.0)
            for dt in (8e-3, 4e-3, 2e-3)]
    orders = [np.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 1.9


def test_correspondence_on_sphere(sphere):
    fam = flow_family(sphere, 1.0)
    d = correspondence_check(latitude_curve(64, 1.2), fam, 0.3, 2e-4)
    assert d <= 1e-6


def test_determinism(gaussian2):
    fam = flow_family(gaussian2, 1.0)

    def trajectory():
        st = unnormalized_state(ellipse_curve(64, 2.0, 1.0), fam)
        st = run_flow(st, 0.2, 1e-4, remesh_every=50)
        return st.curve.vertices

    a, b = trajectory(), trajectory()
    assert np.array_equal(a, b)


def test_remeshing_keeps_circle_on_law(gaussian2):
    fam = flow_family(gaussian2, 1.0)
    st = unnormalized_state(circle_curve(128, np.sqrt(2.0)), fam)
    st = run_flow(st, 0.5, 2e-4, remesh_every=25)
    assert mean_radius(st) == pytest.approx(1.0, abs=1e-4)


def test_run_flow_rejects_end_past_horizon(gaussian2):
    fam = flow_family(gaussian2, 1.0)
    st = unnormalized_state(circle_curve(64, 1.0), fam)
    with pytest.raises(ConfigurationError):
        run_flow(st, 1.0, 1e-4)

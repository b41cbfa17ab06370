"""Scenario execution: configuration to artifacts on disk.

A scenario run builds the background and seed curve, optionally
estimates the singular horizon from a pilot run, drives the requested
flow while recording per-snapshot diagnostics, audits the series, and
writes four artifacts: the diagnostics CSV, rescaled-curve snapshots as
JSONL, the audit report JSONL, and a canonical echo of the effective
configuration.  Identical configuration and seed give byte-identical
artifacts.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from . import flow as flowmod
from . import functionals as fn
from .ambient import flow_family, identity_residuals, make_soliton
from .config import load_config, parse_config, serialize_config
from .errors import (AuditFailure, ChartDomainError, ConfigurationError,
                     DomainError, ExtinctionSignal, NoBlowupSignal,
                     StepSizeError)
from .geometry import (DiscreteCurve, circle_curve, compute_geometry,
                       cylinder_loop_curve, ellipse_curve, latitude_curve)

CSV_HEADER = ",".join(diag.TimeSeriesRecord.COLUMNS)


def _soliton_from_config(cfg):
    params = {}
    if cfg["soliton.name"] == "gaussian":
        params["dim"] = cfg["soliton.dim"]
    if cfg.get("soliton.params.radius", 0.0):
        params["radius"] = cfg["soliton.params.radius"]
    return make_soliton(cfg["soliton.name"], params)


@dataclass
class RunArtifacts:
    series_csv_path: Path
    snapshots_jsonl_path: Path
    audit_json_path: Path
    config_echo_path: Path
    audits: list = field(default_factory=list)
    termination: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    horizon: float = 0.0

    @property
    def passed(self):
        return all(a.get("pass", False) for a in self.audits)


def build_curve(cfg, soliton):
    """Seed curve from the curve.* configuration keys."""
    kind = cfg["curve.kind"]
    n = cfg["curve.N"]
    name = soliton.name
    if kind == "custom":
        pts = json.loads(Path(cfg["curve.custom.path"]).read_text())
        return DiscreteCurve(np.asarray(pts, dtype=float))
    if kind == "circle":
        if name == "gaussian":
            return circle_curve(n, cfg["curve.radius"],
                                center=(cfg["curve.center_x"], cfg["curve.center_y"]),
                                dim=soliton.dim)
        if name == "sphere":
            return latitude_curve(n, cfg["curve.theta"])
        return cylinder_loop_curve(n, x0=cfg["curve.x0"],
                                   theta_wobble=cfg["curve.theta_wobble"],
                                   x_wobble=cfg["curve.x_wobble"])
    if kind == "ellipse":
        if name != "gaussian":
            raise ConfigurationError("ellipse seeds need the gaussian background")
        return ellipse_curve(n, cfg["curve.a"], cfg["curve.b"],
                             center=(cfg["curve.center_x"], cfg["curve.center_y"]),
                             dim=soliton.dim)
    if kind == "latitude":
        if name != "sphere":
            raise ConfigurationError("latitude seeds need the sphere background")
        return latitude_curve(n, cfg["curve.theta"])
    raise ConfigurationError(f"unknown curve kind {kind!r}")


class _PilotDone(Exception):
    pass


def pilot_singular_time(soliton, curve, cfg):
    """Estimate the blow-up time from a mean curvature flow pilot in the
    fixed soliton metric, fitting the inverse-square curvature decay."""
    state = flowmod.static_mcf_state(curve, soliton)
    initial_length = state.geometry().length()
    history = []

    def observe(st):
        geom = st.geometry()
        history.append((st.clock, float(geom.A_norm.max())))
        if geom.length() < cfg["pilot.length_fraction"] * initial_length:
            raise _PilotDone

    try:
        flowmod.run_flow(state, cfg["pilot.max_duration"], cfg["pilot.dt"],
                         cfl=cfg["flow.cfl"], observer=observe,
                         observe_every=cfg["pilot.sample_every"])
    except (_PilotDone, ExtinctionSignal):
        pass
    if len(history) < 10:
        raise NoBlowupSignal("pilot run produced too few curvature samples")
    tail = history[len(history) // 2:]
    if len(tail) < 10:
        tail = history[-10:]
    return diag.estimate_singular_time(tail)


def _format_row(record):
    return ",".join("%.17g" % v for v in record.astuple())


def _snapshot_vertices(state):
    """Chart coordinates of the rescaled picture of the current curve."""
    if state.kind == flowmod.UNNORMALIZED:
        return state.background.phi_at(state.curve.vertices, state.clock)
    return state.curve.vertices


def run_scenario(config, out_dir, strict=False):
    """Execute one scenario and write its artifacts into out_dir.

    config: a mapping from parse_config/load_config, or a path.
    Raises AuditFailure in strict mode when an audit fails; domain and
    extinction endings keep partial artifacts and are recorded in the
    audit file.
    """
    if isinstance(config, (str, Path)):
        cfg = load_config(config)
    else:
        cfg = dict(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    soliton = _soliton_from_config(cfg)
    curve = build_curve(cfg, soliton)
    soliton.chart.require(curve.vertices)

    pilot_info = None
    if cfg["flow.T"] == "auto":
        estimate = pilot_singular_time(soliton, curve, cfg)
        horizon = estimate.T_hat
        pilot_info = {"T_hat": estimate.T_hat, "fit_window": list(estimate.fit_window),
                      "fit_quality": estimate.fit_quality}
    else:
        horizon = float(cfg["flow.T"])

    if cfg["flow.kind"] == "unnormalized":
        family = flow_family(soliton, horizon)
        state = flowmod.unnormalized_state(curve, family)
        end = cfg["flow.t_end"]
        if not end < horizon:
            raise ConfigurationError(
                f"flow.t_end {end} must stay below the horizon T={horizon:.6g}")
    else:
        state = flowmod.normalized_state(curve, soliton, T=horizon)
        end = state.clock + cfg["flow.s_end"]

    marked = cfg["diagnostics.marked_vertex"]
    records = []
    snapshots = []
    stop_residual = cfg["flow.stop_residual"]

    class _StopRun(Exception):
        pass

    def observe(st):
        rec = diag.record_from_state(st, marked)
        records.append(rec)
        snapshots.append({"clock": float(st.clock),
                          "vertices": np.asarray(_snapshot_vertices(st)).tolist()})
        if stop_residual > 0.0 and rec.residual_integral < stop_residual:
            raise _StopRun

    termination = {"reason": "completed"}
    try:
        state = flowmod.run_flow(
            state, end, cfg["flow.dt"], cfl=cfg["flow.cfl"],
            extinction_length=cfg["flow.extinction_length"],
            remesh_every=cfg["flow.remesh_every"],
            observer=observe, observe_every=cfg["output.snapshot_every"])
    except ExtinctionSignal as sig:
        termination = {"reason": "extinction", "clock": sig.clock,
                       "length": sig.length}
    except _StopRun:
        termination = {"reason": "residual_tolerance", "clock": float(records[-1].clock)}
    except ChartDomainError as exc:
        termination = {"reason": "domain_error", "detail": str(exc)}
    except StepSizeError as exc:
        termination = {"reason": "step_budget", "detail": str(exc)}

    # -- audits ---------------------------------------------------------
    audits = []
    if len(records) >= 3:
        if cfg["diagnostics.audit_monotonicity"]:
            if cfg["flow.kind"] == "unnormalized":
                s_vals = [-np.log(horizon - r.clock) for r in records]
            else:
                s_vals = [r.clock for r in records]
            c_prime = cfg["diagnostics.c_prime"] or None
            mono = diag.monotonicity_audit(
                records, s_values=s_vals, c_prime=c_prime,
                slack=cfg["diagnostics.monotonicity_slack"],
                derivative_rtol=cfg["diagnostics.derivative_rtol"])
            audits.append(mono.as_dict())
        b2 = diag.b2_boundedness_monitor(
            records, bound=cfg["diagnostics.b2_bound"] or None)
        audits.append(b2.as_dict())
    term_audit = {"audit": "termination",
                  "pass": termination["reason"] in
                  ("completed", "extinction", "residual_tolerance"),
                  **termination}
    audits.append(term_audit)

    # -- artifacts --------------------------------------------------------
    series = out / "series.csv"
    with series.open("w") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in records:
            fh.write(_format_row(rec) + "\n")
    snaps = out / "snapshots.jsonl"
    with snaps.open("w") as fh:
        for snap in snapshots:
            fh.write(json.dumps(snap, sort_keys=True) + "\n")
    audit_path = out / "audit.jsonl"
    with audit_path.open("w") as fh:
        if pilot_info is not None:
            fh.write(json.dumps({"audit": "pilot", "pass": True, **pilot_info},
                                sort_keys=True) + "\n")
        for a in audits:
            fh.write(json.dumps(a, sort_keys=True) + "\n")
    echo = out / "config_echo.cfg"
    echo.write_text(serialize_config(cfg))

    artifacts = RunArtifacts(series, snaps, audit_path, echo,
                             audits=audits, termination=termination,
                             records=records, horizon=horizon)
    if strict and not artifacts.passed:
        raise AuditFailure(f"audit failure in {out}: see {audit_path}")
    return artifacts


# -- identity checks ----------------------------------------------------

def _sample_points(soliton, rng, count):
    name = soliton.name
    if name == "gaussian":
        return rng.normal(0.0, 1.5, size=(count, soliton.dim))
    theta = rng.uniform(0.2, np.pi - 0.2, size=count)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=count)
    if name == "sphere":
        return np.column_stack([theta, phi])
    x = rng.normal(0.0, 1.5, size=count)
    return np.column_stack([theta, phi, x])


def check_identities(soliton_name, samples=1000, seed=0, horizon=1.0,
                     fd_eps=2e-5):
    """Max residuals of the defining identities at seeded random points,
    plus finite-difference checks of the metric-family motion and the
    conjugate heat equation.  Pass thresholds: 1e-10 analytic, 1e-6
    finite-difference."""
    if samples < 1:
        raise ConfigurationError("samples must be >= 1")
    soliton = make_soliton(soliton_name)
    rng = np.random.default_rng(seed)
    pts = _sample_points(soliton, rng, samples)
    ts = rng.uniform(0.05, 0.9, size=samples) * horizon

    r_structure, r_norm = identity_residuals(soliton, pts)
    g = soliton.metric_at(pts)
    ginv = np.linalg.inv(g)
    df = soliton.potential_dx_at(pts)
    grad_sq = np.einsum("pab,pa,pb->p", ginv, df, df)
    scalars = soliton.scalar_at(pts)
    potentials = soliton.potential_at(pts)

    fam = flow_family(soliton, horizon)
    tau = horizon - ts
    g_t = np.stack([fam.metric_at(pts[i], ts[i]) for i in range(samples)])
    hess_t = np.stack([fam.potential_hess_at(pts[i], ts[i]) for i in range(samples)])
    ric = soliton.ricci_at(pts)
    eq_structure_t = np.abs(ric + hess_t - g_t / (2.0 * tau)[:, None, None]).max()
    df_t = np.stack([fam.potential_dx_at(pts[i], ts[i]) for i in range(samples)])
    grad_sq_t = np.einsum("pab,pa,pb->p", np.linalg.inv(g_t), df_t, df_t)
    f_t = np.array([fam.potential_at(pts[i], ts[i]) for i in range(samples)])
    R_t = np.array([fam.scalar_at(pts[i], ts[i]) for i in range(samples)])
    eq_norm_t = np.abs(R_t + grad_sq_t - f_t / tau).max()

    fd_flow = 0.0
    fd_heat = 0.0
    for i in range(samples):
        t = ts[i]
        dgdt = (fam.metric_at(pts[i], t + fd_eps)
                - fam.metric_at(pts[i], t - fd_eps)) / (2.0 * fd_eps)
        fd_flow = max(fd_flow, float(np.abs(dgdt + 2.0 * ric[i]).max()))
        drho = (fam.density_at(pts[i], t + fd_eps)
                - fam.density_at(pts[i], t - fd_eps)) / (2.0 * fd_eps)
        rhs = -fam.density_laplacian_at(pts[i], t) \
            + fam.scalar_at(pts[i], t) * fam.density_at(pts[i], t)
        fd_heat = max(fd_heat, float(abs(drho - rhs)))

    report = {
        "soliton": soliton_name,
        "samples": int(samples),
        "seed": int(seed),
        "soliton_equation_residual": float(np.max(r_structure)),
        "normalization_residual": float(np.max(r_norm)),
        "family_soliton_equation_residual": float(eq_structure_t),
        "family_normalization_residual": float(eq_norm_t),
        "metric_motion_fd_residual": fd_flow,
        "conjugate_heat_fd_residual": fd_heat,
        "scalar_curvature_nonnegative": bool(np.min(scalars) >= -1e-12),
        "gradient_bound_holds": bool(np.max(grad_sq - potentials) <= 1e-10),
    }
    analytic = max(report["soliton_equation_residual"],
                   report["normalization_residual"],
                   report["family_soliton_equation_residual"],
                   report["family_normalization_residual"])
    report["pass"] = bool(analytic <= 1e-10 and fd_flow <= 1e-6
                          and fd_heat <= 1e-6
                          and report["scalar_curvature_nonnegative"]
                          and report["gradient_bound_holds"])
    return report


# -- variation testing ----------------------------------------------------

def _trig_profile(rng, n):
    u = np.arange(n) / n
    out = np.full(n, rng.normal())
    for m in range(1, 4):
        out += rng.normal() * np.cos(2 * np.pi * m * u) \
            + rng.normal() * np.sin(2 * np.pi * m * u)
    return out


def random_scalar_field(soliton, rng):
    """Seeded smooth ambient scalar usable as a density direction:
    periodic in angular coordinates, wavy in flat ones."""
    if soliton.name == "gaussian":
        kvecs = rng.normal(size=(3, soliton.dim))
        amps = rng.normal(size=3)
        phases = rng.uniform(0, 2 * np.pi, size=3)

        def value(pts):
            P = np.atleast_2d(np.asarray(pts, dtype=float))
            return sum(a * np.cos(P @ k + p)
                       for a, k, p in zip(amps, kvecs, phases))
        return fn.ScalarField(value=value)

    m = int(rng.integers(1, 4))
    a1, a2, a3 = rng.normal(size=3)
    phase = rng.uniform(0, 2 * np.pi)
    wav = rng.normal()
    has_line = soliton.name == "cylinder"

    def value(pts):
        P = np.atleast_2d(np.asarray(pts, dtype=float))
        out = a1 * np.cos(m * P[:, 1] + phase) * np.sin(P[:, 0]) \
            + a2 * np.cos(P[:, 0]) + a3
        if has_line:
            out = out + wav * np.cos(0.7 * P[:, 2])
        return out
    return fn.ScalarField(value=value)


def random_tensor_field(soliton, rng, scale=0.2):
    """Seeded smooth symmetric 2-tensor direction."""
    n = soliton.dim
    s_fields = [random_scalar_field(soliton, rng) for _ in range(2)]
    raw = rng.normal(size=(n, n))
    bases = [0.3 * (raw + raw.T), np.eye(n)]

    def value(pts):
        P = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.zeros((P.shape[0], n, n))
        for s_f, basis in zip(s_fields, bases):
            out += s_f.value(P)[:, None, None] * basis[None]
        return scale * out
    return fn.TensorField(value=value)


def random_direction(soliton, curve, rng):
    n_pts = curve.n_vertices
    return fn.VariationData(
        w=_trig_profile(rng, n_pts),
        V=0.5 * np.column_stack([_trig_profile(rng, n_pts)
                                 for _ in range(soliton.dim)]),
        k=random_scalar_field(soliton, rng),
        h=random_tensor_field(soliton, rng),
    )


DEFAULT_EPS_LADDER = (1e-3, 3e-4, 1e-4, 3e-5, 1e-5)


def variation_test(config, directions=20, eps_ladder=DEFAULT_EPS_LADDER,
                   tolerance=1e-5):
    """Compare the analytic first variation against the finite-difference
    oracle over seeded random directions on the configured base, check
    tau-invariance, and check the flow-direction identity against the
    defect integral.

    Returns a report dict; pass requires every direction's best-epsilon
    relative error at or below the tolerance."""
    if isinstance(config, (str, Path)):
        cfg = load_config(config)
    else:
        cfg = dict(config)
    soliton = _soliton_from_config(cfg)
    curve = build_curve(cfg, soliton)
    rng = np.random.default_rng(cfg["seed"])
    rho = fn.potential_density_field(soliton)

    rows = []
    worst = 0.0
    for index in range(directions):
        v = random_direction(soliton, curve, rng)
        u = 1.0 + 0.1 * _trig_profile(rng, curve.n_vertices)
        rhs = fn.first_variation_rhs(u, curve, rho, soliton, v, tau=1.0)
        best = np.inf
        best_eps = None
        for eps in eps_ladder:
            try:
                fd = fn.finite_difference_variation(u, curve, rho, soliton, v, eps)
            except DomainError:
                continue
            err = abs(rhs - fd) / max(1.0, abs(fd))
            if err < best:
                best, best_eps = err, eps
        if best_eps is None:
            raise DomainError("all epsilons produced degenerate perturbations")
        rows.append({"direction": index, "best_eps": best_eps,
                     "relative_error": float(best)})
        worst = max(worst, best)

    # zero direction is exactly stationary
    zero = fn.first_variation_rhs(1.0, curve, rho, soliton,
                                  fn.VariationData(), tau=1.0)
    fd_zero = fn.finite_difference_variation(1.0, curve, rho, soliton,
                                             fn.VariationData(), 1e-5)

    # tau-invariance of the analytic side
    v_probe = random_direction(soliton, curve, rng)
    rhs_tau1 = fn.first_variation_rhs(1.0, curve, rho, soliton, v_probe, tau=1.0)
    rhs_tau2 = fn.first_variation_rhs(1.0, curve, rho, soliton, v_probe, tau=2.75)
    tau_gap = abs(rhs_tau1 - rhs_tau2)

    # flow direction reproduces minus the defect integral
    family = flow_family(soliton, 1.0)
    frozen = family.at_time(0.0)
    geom_t = compute_geometry(curve, frozen)
    u_t, rho_t, direction, tau = fn.monotonicity_direction(family, 0.0, geom_t)
    rhs_flow = fn.first_variation_rhs(u_t, curve, rho_t, frozen, direction, tau=tau)
    rho_vals = rho_t.value(curve.vertices)
    df = family.potential_dx_at(curve.vertices, 0.0)
    grad = np.einsum("pab,pb->pa", np.linalg.inv(geom_t.metric), df)
    defect = geom_t.H + geom_t.normal_part(grad)
    defect_integral = float(np.sum(
        u_t * geom_t.inner(defect, defect) * rho_vals * geom_t.measure_weight))
    flow_rel = abs(rhs_flow + defect_integral) / max(defect_integral, 1e-12)

    report = {
        "base": {"soliton": cfg["soliton.name"], "curve": cfg["curve.kind"],
                 "N": cfg["curve.N"], "seed": cfg["seed"]},
        "directions": rows,
        "worst_relative_error": float(worst),
        "zero_direction": {"rhs": zero, "fd": fd_zero},
        "tau_invariance_gap": float(tau_gap),
        "flow_direction_relative_error": float(flow_rel),
        "pass": bool(worst <= tolerance and abs(zero) < 1e-7
                     and abs(fd_zero) < 1e-12
                     and tau_gap <= 1e-10 and flow_rel <= 0.01),
    }
    return report

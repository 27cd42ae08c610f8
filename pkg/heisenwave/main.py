"""
Command-line front end.

    python -m heisenwave <experiment> [--config run.json] [--out DIR] [--seed N]

Each experiment writes CSV/JSON artifacts plus summary.json into the output
directory. Exit codes: 0 every verdict holds, 1 a verdict failed or a numerical
self-check tripped, 2 the configuration or data could not be used.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from heisenwave.analytics.decay_analysis import (
    ANCHORS,
    DecayReport,
    EnvelopeKind,
    EnvelopeTag,
    decay_envelope,
    dominance_constant,
    fit_decay_slope,
    build_report,
    measure_decay,
    weak_envelope,
    zone_split_norm,
)
from heisenwave.analytics.estimate_oracle import (
    RatioReport,
    check_gn_family,
    gn_theta,
    riemann_lebesgue_report,
    standard_checks,
)
from heisenwave.data_families import CALIBRATION_WIDTHS, InitialData, build_initial_data, dilated_gaussian_family
from heisenwave.duhamel import (
    Theorem,
    WeightProfile,
    WeightTag,
    admissible_p_range,
    calibrate_epsilon,
    check_source_decay,
    coefficient_data_size,
    coupled_iterate,
    fixed_point_residual,
    fujita_exponent,
    linear_part,
    picard_iterate,
    quadrature_refinement_delta,
    source_norm_series,
    verify_nonlinear_decay,
)
from heisenwave.group_fourier import (
    TransformPlan,
    build_spectral_grid,
    calibrate_plancherel_constant,
    forward_transform,
    inverse_transform,
    physical_l2_norm,
    plancherel_norm,
    reference_plancherel_constant,
)
from heisenwave.models import ModelParams, PhysicalGrid, SpectralGrid
from heisenwave.reports import RunArtifacts, checks_frame
from heisenwave.run_config import EXPERIMENTS, RunConfig, parse_config, parse_config_text
from Runtime.activity_logging import get_logger, log_event
from Runtime.error_handling import EXIT_OK, EXIT_VERDICT_FAILED, InputError, register_error_handlers
from Runtime.metrics import get_event_snapshot, get_iteration_summary, set_feature_enabled
from Runtime.run_id import derive_run_id
from Runtime.runtime_config import RUNTIME_SETTINGS

logger = get_logger("main")

PLANCHEREL_TOLERANCE = 0.03
ORIGIN_TOLERANCE = 0.05
SYMMETRY_TOLERANCE = 1e-6
ENERGY_SLACK = 1e-6
LOW_FREQUENCY_SLOPE = -0.85
SYNTHETIC_SLOPE_TOLERANCE = 1e-6
SYMMETRIC_TOLERANCE = 1e-12
THEOREM_ANCHORS = {Theorem.T12: "Theorem 1.2", Theorem.T13: "Theorem 1.3", Theorem.T14: "Theorem 1.4",
                   Theorem.T51: "Theorem 5.1"}
SNAPSHOT_EVENTS = ["forward_transform", "inverse_on_grid", "evolve_field", "picard_iteration",
                   "coupled_iteration", "oracle_check", "artifact_written"]


def check(name: str, anchor: str, verdict: bool, **values) -> dict:
    return {"check": name, "anchor": anchor, "verdict": bool(verdict), **values}


def decay_check(name: str, report: DecayReport, drift_tolerance: float, split: float | None = None) -> dict:
    drift = report.window_drift(split)
    ok = bool(np.isfinite(report.dominance_constant) and drift < drift_tolerance)
    return check(name, report.anchor, ok, dominance_constant=report.dominance_constant,
                 window_drift=drift, fitted_slope=report.fitted_slope,
                 theoretical_slope=report.theoretical_slope, kind=report.kind)


# =========================================================
# SESSION
# =========================================================
@dataclass
class Session:
    config: RunConfig
    seed: int
    params: ModelParams
    pgrid: PhysicalGrid
    sgrid: SpectralGrid
    calibration: dict
    artifacts: RunArtifacts

    @property
    def run_id(self) -> str:
        return self.artifacts.run_id

    def initial_data(self, pgrid: PhysicalGrid | None = None, plan: TransformPlan | None = None) -> InitialData:
        data = self.config.data
        return build_initial_data(data.family, self.params, self.sgrid, pgrid or self.pgrid, width=data.width,
                                  amplitude=data.amplitude, u1_scale=data.u1_scale, path=data.path, plan=plan)


def open_session(config: RunConfig, seed: int | None = None, out: str | Path | None = None) -> Session:
    """Model parameters, grids, calibrated Plancherel constant and the artifact sink."""
    seed = int(seed if seed is not None else config.seed if config.seed is not None
               else RUNTIME_SETTINGS["DEFAULT_SEED"])
    params = config.model_params()
    pgrid = config.physical_grid()
    spectral = config.spectral
    sgrid = build_spectral_grid(params.n, spectral.max_degree, spectral.lambda_min, spectral.lambda_max,
                                spectral.node_count, spectral.lambda_map, spectral.plancherel_constant,
                                spectral.col_degree)
    calibration = {"plancherel_constant": sgrid.plancherel_constant,
                   "reference_constant": reference_plancherel_constant(params.n), "calibrated": False}
    if spectral.calibrate and spectral.plancherel_constant is None:
        sgrid, report = calibrate_plancherel_constant(sgrid, dilated_gaussian_family(pgrid))
        calibration = {**report.as_dict(), "calibrated": True}
    set_feature_enabled("plancherel_calibration", bool(calibration["calibrated"]))

    run_id = derive_run_id(config.canonical_json(), seed)
    artifacts = RunArtifacts(Path(out if out is not None else config.output_dir), run_id)
    log_event(logger, "session_open", run_id=run_id, experiment=config.experiment, seed=seed,
              plancherel_constant=sgrid.plancherel_constant)
    return Session(config, seed, params, pgrid, sgrid, calibration, artifacts)


# =========================================================
# EXPERIMENTS
# =========================================================
def run_roundtrip(session: Session) -> tuple[dict, list[dict]]:
    """Plancherel, origin inversion, Riemann–Lebesgue and λ-symmetry over the Gaussian family."""
    sgrid, pgrid = session.sgrid, session.pgrid
    origin = np.zeros(pgrid.dimension)
    rows, checks = [], []
    for width, f in zip(CALIBRATION_WIDTHS, dilated_gaussian_family(pgrid)):
        F = forward_transform(f, sgrid)
        physical = physical_l2_norm(f)
        spectral = plancherel_norm(F)
        relative = abs(spectral - physical) / physical
        centre = inverse_transform(F, origin).real
        origin_error = abs(centre - 1.0)
        mirror = F.values[::-1]
        scale = float(np.max(np.abs(F.values)))
        asymmetry = float(np.max(np.abs(mirror - np.conj(F.values)))) / scale if scale > 0 else 0.0
        rl = riemann_lebesgue_report(f, F, label=f"gaussian_{width:g}")
        rows.append({"width": width, "physical_l2": physical, "plancherel_l2": spectral,
                     "relative_error": relative, "origin_value": centre, "origin_error": origin_error,
                     "conjugate_asymmetry": asymmetry, "rl_ratio": rl.sup_ratio})
        checks += [
            check(f"plancherel_{width:g}", "(2.6)", relative <= PLANCHEREL_TOLERANCE, relative_error=relative),
            check(f"inverse_origin_{width:g}", "Fourier inversion", origin_error <= ORIGIN_TOLERANCE, value=centre),
            check(f"conjugate_symmetry_{width:g}", "(2.2)", asymmetry <= SYMMETRY_TOLERANCE, asymmetry=asymmetry),
            check(rl.check_id, rl.anchor, rl.verdict, sup_ratio=rl.sup_ratio),
        ]
    session.artifacts.write_frame("roundtrip.csv", pd.DataFrame(rows))
    return {"calibration": session.calibration}, checks


def _energy_bound(traj, F0) -> float:
    """max over t and modes of |û(t)| − |û0|(1+slack); nonpositive when the energy bound holds."""
    start = np.abs(F0.values) * (1.0 + ENERGY_SLACK)
    return float(max(np.max(np.abs(u.values) - start) for u, _ in traj.states))


def run_simulate_linear(session: Session) -> tuple[dict, list[dict]]:
    params = session.params
    data = session.initial_data()
    times = session.config.decay_times()
    traj = linear_part(times, data.F0, data.F1, params)
    frame = traj.norm_frame(params.alpha)
    split = [zone_split_norm(u, params) for u, _ in traj.states]
    frame["L2_low"] = [math.sqrt(low) for low, _ in split]
    frame["L2_high"] = [math.sqrt(high) for _, high in split]
    session.artifacts.write_frame("linear_norms.csv", frame)

    if not np.any(data.F1.values):
        excess = _energy_bound(traj, data.F0)
        checks = [check("modewise_energy", ANCHORS[EnvelopeTag.L2_MASS], excess <= 0.0, excess=excess)]
    else:
        kind = EnvelopeKind(EnvelopeTag.L2_MASS)
        envelope = [decay_envelope(float(t), kind, params, data.norms) for t in times]
        constant = dominance_constant(frame["L2"].to_numpy(), envelope)
        checks = [check("l2_mass_dominance", kind.anchor, bool(np.isfinite(constant)), dominance_constant=constant)]
    summary = {"data": data.label, "data_norms": data.norms.as_dict(), "samples": int(times.size)}
    return summary, checks


def _synthetic_decay(session: Session, rate: float) -> tuple[dict, list[dict]]:
    times = session.config.decay_times()
    series = (1.0 + times) ** -rate
    report = build_report(times, series, series, None)
    session.artifacts.write_frame("decay_synthetic.csv", report.to_frame())
    ok = abs(report.fitted_slope + rate) < SYNTHETIC_SLOPE_TOLERANCE
    return {"synthetic_rate": rate}, [check("synthetic_slope", "", ok, fitted_slope=report.fitted_slope,
                                            expected_slope=-rate)]


def _weak_estimate(session: Session, data: InitialData, times: np.ndarray) -> dict:
    """‖u(t)‖_{L²} against e^{−mt/2b}‖(u0,u1)‖_{L²}."""
    params = session.params
    kind = EnvelopeKind(EnvelopeTag.L2_MASS)
    measured = np.array([plancherel_norm(u) for u, _ in linear_part(times, data.F0, data.F1, params).states])
    envelope = np.array([weak_envelope(float(t), params, data.norms) for t in times])
    report = DecayReport(times=times, measured=measured, envelope=envelope,
                         fitted_slope=fit_decay_slope(times, measured, params),
                         theoretical_slope=fit_decay_slope(times, envelope, params),
                         dominance_constant=dominance_constant(measured, envelope),
                         kind=f"{kind.label}_weak", anchor="Remark 1.2 (1.9)")
    session.artifacts.write_frame("decay_weak_l2.csv", report.to_frame())
    return decay_check("weak_l2_estimate", report, session.config.decay.drift_tolerance,
                       session.config.decay.window_split)


def run_fit_decay(session: Session) -> tuple[dict, list[dict]]:
    decay = session.config.decay
    if decay.synthetic_rate is not None:
        return _synthetic_decay(session, decay.synthetic_rate)
    params = session.params
    data = session.initial_data()
    times = session.config.decay_times()
    checks, reports = [], {}
    for text in decay.kinds:
        kind = EnvelopeKind.parse(text)
        report = measure_decay(data.F0, data.F1, params, data.norms, times, kind)
        reports[kind.tag] = report
        session.artifacts.write_frame(f"decay_{kind.tag.value}.csv", report.to_frame())
        checks.append(decay_check(f"dominance_{kind.tag.value}", report, decay.drift_tolerance, decay.window_split))

    if params.m > 0:
        checks.append(_weak_estimate(session, data, times))
    elif EnvelopeTag.L2_MASS in reports:
        envelope = reports[EnvelopeTag.L2_MASS].envelope
        checks.append(check("massless_envelope_constant", ANCHORS[EnvelopeTag.L2_MASS],
                            bool(np.ptp(envelope) == 0.0), spread=float(np.ptp(envelope))))
    if params.m == 0 and session.config.data.family == "low-freq-spike" and EnvelopeTag.L2_L1 in reports:
        slope = reports[EnvelopeTag.L2_L1].fitted_slope
        checks.append(check("low_frequency_l2_slope", ANCHORS[EnvelopeTag.L2_L1], slope <= LOW_FREQUENCY_SLOPE,
                            fitted_slope=slope, theoretical_slope=-params.Q / (4.0 * params.alpha)))
    summary = {"data": data.label, "data_norms": data.norms.as_dict(),
               "decay": [report.summary() for report in reports.values()]}
    return summary, checks


def run_verify(session: Session) -> tuple[dict, list[dict]]:
    """Data-independent oracle suite plus Gagliardo–Nirenberg and Riemann–Lebesgue on fixtures."""
    params, pgrid, sgrid = session.params, session.pgrid, session.sgrid
    verify = session.config.verify
    reports: list[RatioReport] = standard_checks(params, seed=session.seed, sample_count=verify.sample_count,
                                                 t_grid=verify.t_grid)
    family = dilated_gaussian_family(pgrid)
    transforms = [forward_transform(f, sgrid) for f in family]
    s = min(params.alpha, 1.0)
    skipped = []
    for q in verify.gn_exponents:
        try:
            reports.append(check_gn_family(family, transforms, q, s, params))
        except InputError as exc:
            skipped.append({"q": q, "reason": str(exc)})
    for width, f, F in zip(CALIBRATION_WIDTHS, family, transforms):
        reports.append(riemann_lebesgue_report(f, F, label=f"gaussian_{width:g}"))
    if session.config.data.family in ("gaussian", "file"):
        data = session.initial_data()
        reports.append(riemann_lebesgue_report(data.u0, data.F0, label=data.label.replace("-", "_")))

    theta_cases = [(2.0, 0.0), (3.0, 2.0 / 3.0)]
    theta_ok = all(abs(gn_theta(q, 1.0, 2.0, 4) - expected) < 1e-12 for q, expected in theta_cases)
    records = [report.to_record() for report in reports]
    session.artifacts.write_json("checks.json", records)
    session.artifacts.write_frame("checks.csv", checks_frame(records))

    checks = [check(r.check_id, r.anchor, r.verdict, sup_ratio=r.sup_ratio) for r in reports]
    checks.append(check("gn_theta_values", "Theorem 2.2 (2.8)", theta_ok, cases=theta_cases))
    return {"gn_skipped": skipped, "check_count": len(records)}, checks


def _nonlinear_setup(session: Session):
    pgrid = session.config.reduced_grid()
    plan = TransformPlan(session.sgrid, pgrid)
    data = session.initial_data(pgrid, plan)
    if coefficient_data_size(data.F0, data.F1, session.params.alpha) == 0:
        raise InputError("the fixed-point experiments need nonzero initial data")
    return pgrid, plan, data


def _scaled_to(data: InitialData, size: float, alpha: float) -> InitialData:
    return data.scaled(size / coefficient_data_size(data.F0, data.F1, alpha))


def run_simulate_nonlinear(session: Session) -> tuple[dict, list[dict]]:
    params, fp = session.params, session.config.fixed_point
    artifacts = session.artifacts
    pgrid, plan, data = _nonlinear_setup(session)
    profile = WeightProfile(session.config.profile_tag(), params)
    theorem = Theorem(fp.theorem)

    calibration = None
    epsilon = fp.epsilon
    if epsilon is None:
        calibration = calibrate_epsilon(data.F0, data.F1, session.config.fixed_point_config(fp.calibration_start),
                                        profile, params, pgrid, start=fp.calibration_start)
        artifacts.write_json("epsilon_calibration.json", calibration.to_json())
        epsilon = calibration.epsilon
    config = session.config.fixed_point_config(epsilon)
    scaled = _scaled_to(data, epsilon, params.alpha)

    traj, report = picard_iterate(scaled.F0, scaled.F1, config, profile, params, pgrid, plan)
    residual = fixed_point_residual(traj, scaled.F0, scaled.F1, config, profile, params, pgrid, plan)
    if fp.refinement_check and report.converged:
        quadrature_refinement_delta(scaled.F0, scaled.F1, config, profile, params, pgrid, report, plan)
    artifacts.write_frame("convergence.csv", report.to_frame())
    artifacts.write_frame("trajectory_norms.csv", traj.norm_frame(params.alpha))

    checks = [
        check("picard_convergence", THEOREM_ANCHORS[theorem], report.verdict, iters=report.iters,
              final_x_norm=report.final_x_norm, a_emp=report.a_emp),
        check("fixed_point_residual", "Duhamel representation", report.converged and residual <= config.tol,
              residual=residual),
    ]
    decay = []
    if report.converged and theorem is not Theorem.T51:
        for item in verify_nonlinear_decay(traj, params, scaled.norms, theorem):
            suffix = item.kind.split(":")[-1].replace(",", "_")
            artifacts.write_frame(f"decay_{item.kind.split(':')[0]}_{suffix}.csv", item.to_frame())
            checks.append(decay_check(f"nonlinear_decay_{suffix}", item, session.config.decay.drift_tolerance))
            decay.append(item.summary())
        series = source_norm_series(traj, fp.p, pgrid, plan)
        artifacts.write_frame("source_norms.csv", series)
        for item in check_source_decay(series, report.final_x_norm, profile, fp.p):
            dominance = item.dominance_constant
            checks.append(check(item.kind.lower(), item.anchor, bool(np.isfinite(dominance)),
                                dominance_constant=dominance))
            decay.append(item.summary())

    window = admissible_p_range(theorem, params.Q, params.alpha)
    summary = {
        "theorem": theorem.value,
        "profile": profile.tag.value,
        "p": fp.p,
        "p_window": window.inequality("p"),
        "fujita_exponent": fujita_exponent(params.Q),
        "epsilon": epsilon,
        "epsilon_calibration": calibration.to_json() if calibration else None,
        "convergence": report.to_json(),
        "residual": residual,
        "data_norms": scaled.norms.as_dict(),
        "decay": decay,
    }
    return summary, checks


def _max_mode_gap(first, second) -> float:
    return float(max(max(np.max(np.abs(a.values - c.values)), np.max(np.abs(b.values - d.values)))
                     for (a, b), (c, d) in zip(first.states, second.states)))


def run_simulate_coupled(session: Session) -> tuple[dict, list[dict]]:
    params, fp = session.params, session.config.fixed_point
    artifacts = session.artifacts
    pgrid, plan, data = _nonlinear_setup(session)
    profile = WeightProfile(WeightTag.Z_MASS, params)
    partner_data = build_initial_data("gaussian", params, session.sgrid, pgrid, width=fp.v_width or
                                      session.config.data.width, amplitude=session.config.data.amplitude,
                                      u1_scale=session.config.data.u1_scale, plan=plan)

    calibration = None
    epsilon = fp.epsilon
    if epsilon is None:
        single = replace(session.config.fixed_point_config(fp.calibration_start), theorem=Theorem.T14)
        calibration = calibrate_epsilon(data.F0, data.F1, single, profile, params, pgrid, start=fp.calibration_start)
        artifacts.write_json("epsilon_calibration.json", calibration.to_json())
        epsilon = 0.5 * calibration.epsilon
    config = replace(session.config.fixed_point_config(epsilon), theorem=Theorem.T51)
    # data(u) + data(v) = ε
    share = epsilon / (1.0 + fp.v_scale)
    u_data = _scaled_to(data, share, params.alpha)
    if fp.v_scale > 0:
        v_data = _scaled_to(partner_data, fp.v_scale * share, params.alpha)
    else:
        v_data = partner_data.scaled(0.0)

    u, v, report = coupled_iterate(u_data.F0, u_data.F1, v_data.F0, v_data.F1, config, params, pgrid, plan)
    artifacts.write_frame("convergence.csv", report.to_frame())
    artifacts.write_frame("trajectory_u_norms.csv", u.norm_frame(params.alpha))
    artifacts.write_frame("trajectory_v_norms.csv", v.norm_frame(params.alpha))

    # v = u with q = p against the single equation in the Z norm, each copy at ε/2
    symmetric = replace(config, q=config.p)
    half = _scaled_to(data, 0.5 * epsilon, params.alpha)
    sym_u, _, sym_report = coupled_iterate(half.F0, half.F1, half.F0, half.F1, symmetric, params, pgrid, plan)
    single, single_report = picard_iterate(half.F0, half.F1, replace(symmetric, theorem=Theorem.T14), profile,
                                           params, pgrid, plan)
    gap = _max_mode_gap(sym_u, single)
    symmetric_ok = sym_report.iters == single_report.iters and gap <= SYMMETRIC_TOLERANCE

    checks = [
        check("coupled_convergence", "Theorem 5.1", report.verdict, iters=report.iters,
              final_x_norm=report.final_x_norm),
        check("symmetric_specialization", "Remark 5.3", symmetric_ok, max_mode_gap=gap,
              coupled_iters=sym_report.iters, single_iters=single_report.iters),
    ]
    summary = {
        "theorem": Theorem.T51.value,
        "p": config.p,
        "q": config.q_exponent,
        "epsilon": epsilon,
        "v_scale": fp.v_scale,
        "epsilon_calibration": calibration.to_json() if calibration else None,
        "convergence": report.to_json(),
        "symmetric_convergence": sym_report.to_json(),
    }
    return summary, checks


EXPERIMENT_RUNNERS: dict[str, Callable[[Session], tuple[dict, list[dict]]]] = {
    "roundtrip": run_roundtrip,
    "simulate-linear": run_simulate_linear,
    "fit-decay": run_fit_decay,
    "verify": run_verify,
    "simulate-nonlinear": run_simulate_nonlinear,
    "simulate-coupled": run_simulate_coupled,
}


# =========================================================
# DISPATCH
# =========================================================
def run(config: RunConfig, seed: int | None = None, out: str | Path | None = None) -> int:
    """Run the configured experiment; 0 when every verdict holds, 1 otherwise."""
    session = open_session(config, seed, out)
    summary, checks = EXPERIMENT_RUNNERS[config.experiment](session)
    passed = all(item["verdict"] for item in checks)
    session.artifacts.write_summary({
        "experiment": config.experiment,
        "seed": session.seed,
        "config": config.model_dump(mode="json"),
        "plancherel": session.calibration,
        "checks": checks,
        "passed": passed,
        **summary,
    })
    log_event(logger, "run_done", run_id=session.run_id, experiment=config.experiment, passed=passed,
              failed=sum(not item["verdict"] for item in checks))
    log_event(logger, "metrics_snapshot", run_id=session.run_id,
              **{k.replace("-", "_"): v for k, v in get_event_snapshot(SNAPSHOT_EVENTS).items()})
    for solver in ("picard", "coupled"):
        totals = get_iteration_summary(solver)
        if totals["runs"]:
            log_event(logger, "iteration_totals", run_id=session.run_id, solver=solver, **totals)
    return EXIT_OK if passed else EXIT_VERDICT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heisenwave",
                                     description="Damped fractional wave equation on the Heisenberg group.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        command = sub.add_parser(name)
        command.add_argument("--config", type=Path, default=None, help="JSON run configuration")
        command.add_argument("--out", type=Path, default=None, help="output directory")
        command.add_argument("--seed", type=int, default=None)
    return parser


def _dispatch(argv: Sequence[str] | None) -> int:
    args = build_parser().parse_args(argv)
    if args.config is not None:
        config = parse_config(args.config, experiment=args.experiment)
    else:
        config = parse_config_text("{}", "<defaults>", experiment=args.experiment)
    return run(config, args.seed, args.out)


def main(argv: Sequence[str] | None = None) -> int:
    return register_error_handlers(_dispatch, logger)(argv)


if __name__ == "__main__":
    sys.exit(main())

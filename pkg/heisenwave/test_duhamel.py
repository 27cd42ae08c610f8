"""
Exponent windows, Duhamel quadrature and the Picard iteration on tiny grids.
"""
import math

import numpy as np
import pytest
from scipy.integrate import quad

from heisenwave.data_families import gaussian, physical_from_coefficients, zero_field
from heisenwave.duhamel import (
    ConvergenceReport,
    FixedPointConfig,
    SourceHistory,
    Theorem,
    Trajectory,
    WeightProfile,
    WeightTag,
    admissible_p_range,
    calibrate_epsilon,
    check_source_decay,
    coefficient_data_size,
    coupled_iterate,
    duhamel_step,
    fixed_point_residual,
    fujita_exponent,
    linear_part,
    nonlinearity_transform,
    picard_iterate,
    quadrature_refinement_delta,
    require_exponent,
    source_envelope_rates,
    source_norm_series,
    time_grid,
    verify_nonlinear_decay,
    x_norm,
)
from heisenwave.group_fourier import TransformPlan, data_norms, forward_transform, mode_frequencies
from heisenwave.models import CoefficientField, ModelParams
from heisenwave.propagator import damped_multipliers
from Runtime.error_handling import ConfigurationError, DomainError, InputError, NonContractionError


def _small_data(sgrid, pgrid, size, alpha=1.0):
    F0 = forward_transform(gaussian(pgrid), sgrid)
    F1 = CoefficientField.zeros(sgrid)
    return F0.scaled(size / coefficient_data_size(F0, F1, alpha)), F1


def test_exponent_windows():
    window = admissible_p_range(Theorem.T12, 4, 1.0)
    assert window.contains(2.0) and not window.contains(2.5) and not window.contains(1.9)
    assert window.inequality() == "2 <= p <= 2"
    mass = admissible_p_range("T14", 4, 1.0)
    assert mass.contains(1.01) and mass.contains(2.0) and not mass.contains(1.0)
    assert mass.inequality("q") == "1 < q <= 2"
    t13 = admissible_p_range(Theorem.T13, 4, 1.5)
    assert t13.lower == pytest.approx(2.5) and t13.upper == pytest.approx(4.0)
    with pytest.raises(DomainError):
        admissible_p_range(Theorem.T13, 4, 1.0)
    with pytest.raises(DomainError):
        admissible_p_range(Theorem.T12, 6, 1.0)
    with pytest.raises(DomainError):
        admissible_p_range(Theorem.T14, 4, 2.0)


def test_fujita_exponent():
    assert fujita_exponent(4) == pytest.approx(1.5)
    assert fujita_exponent(6) == pytest.approx(4.0 / 3.0)


def test_require_exponent_names_the_window(params):
    assert require_exponent(Theorem.T12, 2.0, params).contains(2.0)
    with pytest.raises(DomainError, match="2 <= p <= 2"):
        require_exponent(Theorem.T12, 3.0, params)


def test_time_grid_and_config_validation():
    assert np.allclose(time_grid(4.0, 5), [0.0, 1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ConfigurationError):
        time_grid(4.0, 2)
    with pytest.raises(ConfigurationError):
        time_grid(0.0, 5)
    config = FixedPointConfig(p=2.0, epsilon=1e-3, horizon=4.0, time_nodes=9)
    assert config.refined().time_nodes == 17
    assert config.q_exponent == 2.0
    with pytest.raises(InputError):
        FixedPointConfig(p=2.0, epsilon=0.0)
    with pytest.raises(InputError):
        FixedPointConfig(p=1.0, epsilon=1e-3)
    with pytest.raises(ConfigurationError):
        FixedPointConfig(p=2.0, epsilon=1e-3, time_nodes=2)


def test_weight_profiles(params, massive_params):
    times = np.array([0.0, 1.0, 3.0])
    x_l1 = WeightProfile(WeightTag.X_L1, params).weights(times)
    assert x_l1.shape == (3, 3)
    assert np.allclose(x_l1[1], [0.5, 0.5 ** 1.5, 0.25])
    assert np.allclose(WeightProfile("X_L2", params).weights(times)[:, 0], 1.0)
    z = WeightProfile(WeightTag.Z_MASS, massive_params).weights(times)
    assert z[0, 2] == pytest.approx(1.0 + massive_params.m)
    assert z[2, 0] == pytest.approx(math.exp(-3.0 * massive_params.mass_rate))


def test_source_envelope_rates(params):
    assert source_envelope_rates(WeightProfile(WeightTag.X_L1, params), 2.0) == pytest.approx((2.0, 3.0))
    assert source_envelope_rates(WeightProfile(WeightTag.X_L2, params), 2.0) == pytest.approx((0.0, 1.0))


def test_trajectory_validation(tiny_sgrid):
    zero = CoefficientField.zeros(tiny_sgrid)
    with pytest.raises(InputError):
        Trajectory(np.array([0.5, 1.0]), ((zero, zero), (zero, zero)))
    with pytest.raises(InputError):
        Trajectory(np.array([0.0, 1.0]), ((zero, zero),))
    traj = Trajectory(np.array([0.0, 1.0]), ((zero, zero), (zero, zero)))
    assert list(traj.norm_frame(1.0).columns) == ["t", "L2", "Halpha", "dtL2"]
    with pytest.raises(InputError):
        traj - Trajectory(np.array([0.0, 2.0]), ((zero, zero), (zero, zero)))


def test_linear_part_starts_at_the_data(tiny_sgrid, tiny_pgrid, params):
    F0, F1 = _small_data(tiny_sgrid, tiny_pgrid, 1.0)
    lin = linear_part([0.0, 1.0, 2.0], F0, F1, params)
    assert lin.states[0][0] is F0
    assert x_norm(lin, WeightProfile(WeightTag.X_L2, params)) > 0


def test_duhamel_of_constant_source(tiny_sgrid, params):
    """u(t) = c∫₀ᵗ e₁ and ∂_t u(t) = c·e₁(t) per mode for a constant source c."""
    times = np.linspace(0.0, 10.0, 801)
    value = 0.3 + 0.1j
    source = CoefficientField(tiny_sgrid, np.full(tiny_sgrid.shape, value))
    history = SourceHistory(times, (source,) * times.size)
    u, du = duhamel_step(800, history, params)
    s = mode_frequencies(tiny_sgrid) ** params.alpha
    for li, row in ((0, 0), (5, 2), (7, 1)):
        kernel_integral, _ = quad(lambda tau: float(damped_multipliers(tau, s[li, row], params)[1]), 0.0, 10.0,
                                  epsabs=1e-13, epsrel=1e-12)
        end = float(damped_multipliers(10.0, s[li, row], params)[1])
        assert u.values[li, row, 0] == pytest.approx(value * kernel_integral, rel=1e-5, abs=1e-7)
        assert du.values[li, row, 1] == pytest.approx(value * end, abs=1e-6)
    first_u, first_du = duhamel_step(0, history, params)
    assert not np.any(first_u.values) and not np.any(first_du.values)
    with pytest.raises(InputError):
        duhamel_step(801, history, params)
    with pytest.raises(ConfigurationError):
        duhamel_step(1, SourceHistory(times[:2], (source, source)), params)


def test_nonlinearity_of_zero_state(tiny_sgrid, tiny_pgrid):
    zero = CoefficientField.zeros(tiny_sgrid)
    assert not np.any(nonlinearity_transform(zero, 2.0, tiny_pgrid).values)
    with pytest.raises(InputError):
        nonlinearity_transform(zero, 1.0, tiny_pgrid)


def test_zero_data_is_a_fixed_point(tiny_sgrid, tiny_pgrid, params):
    zero = CoefficientField.zeros(tiny_sgrid)
    config = FixedPointConfig(p=2.0, epsilon=1e-3, horizon=4.0, time_nodes=9)
    traj, report = picard_iterate(zero, zero, config, WeightProfile(WeightTag.X_L1, params), params, tiny_pgrid)
    assert report.converged and report.verdict
    assert report.iters == 1
    assert report.diffs == [0.0]
    assert traj.converged is True
    assert list(report.to_frame().columns) == ["iter", "x_diff", "ratio"]


def test_data_above_epsilon_is_refused(tiny_sgrid, tiny_pgrid, params):
    F0, F1 = _small_data(tiny_sgrid, tiny_pgrid, 1e-2)
    config = FixedPointConfig(p=2.0, epsilon=1e-3, horizon=4.0, time_nodes=9)
    with pytest.raises(InputError):
        picard_iterate(F0, F1, config, WeightProfile(WeightTag.X_L1, params), params, tiny_pgrid)


def test_exponent_outside_window_is_refused(tiny_sgrid, tiny_pgrid, params):
    F0, F1 = _small_data(tiny_sgrid, tiny_pgrid, 1e-4)
    config = FixedPointConfig(p=3.0, epsilon=1e-3, horizon=4.0, time_nodes=9)
    with pytest.raises(DomainError):
        picard_iterate(F0, F1, config, WeightProfile(WeightTag.X_L1, params), params, tiny_pgrid)


def test_small_data_contracts(tiny_sgrid, tiny_pgrid, params):
    F0, F1 = _small_data(tiny_sgrid, tiny_pgrid, 1e-3)
    config = FixedPointConfig(p=2.0, epsilon=1e-3, horizon=4.0, time_nodes=9)
    profile = WeightProfile(WeightTag.X_L1, params)
    plan = TransformPlan(tiny_sgrid, tiny_pgrid)
    traj, report = picard_iterate(F0, F1, config, profile, params, tiny_pgrid, plan)
    assert report.converged
    assert report.contracting
    assert all(b < b_prev for b, b_prev in zip(report.diffs[1:], report.diffs))
    residual = fixed_point_residual(traj, F0, F1, config, profile, params, tiny_pgrid, plan)
    assert residual < 10 * config.tol
    u0 = physical_from_coefficients(F0, tiny_pgrid, plan)
    norms = data_norms(u0, zero_field(tiny_pgrid), F0, F1, params)
    reports = verify_nonlinear_decay(traj, params, norms, Theorem.T12)
    assert [r.kind for r in reports] == ["NONLIN_L1:0,0", "NONLIN_L1:0,alpha", "NONLIN_L1:1,0"]
    with pytest.raises(InputError):
        verify_nonlinear_decay(traj, params, norms, Theorem.T51)
    with pytest.raises(InputError):
        verify_nonlinear_decay(traj.marked(False), params, norms, Theorem.T12)


def test_symmetric_coupled_run_reproduces_single_equation(tiny_sgrid, tiny_pgrid):
    params = ModelParams(n=1, b=2.0, m=0.2, alpha=1.0)
    F0, F1 = _small_data(tiny_sgrid, tiny_pgrid, 5e-4)
    config = FixedPointConfig(p=2.0, epsilon=1e-3, horizon=4.0, time_nodes=9, theorem=Theorem.T14)
    plan = TransformPlan(tiny_sgrid, tiny_pgrid)
    single, single_report = picard_iterate(F0, F1, config, WeightProfile(WeightTag.Z_MASS, params), params,
                                           tiny_pgrid, plan)
    u, v, report = coupled_iterate(F0, F1, F0, F1, config, params, tiny_pgrid, plan)
    assert report.iters == single_report.iters
    for (a, da), (b, db) in zip(u.states, single.states):
        assert np.allclose(a.values, b.values, rtol=0.0, atol=1e-12)
        assert np.allclose(da.values, db.values, rtol=0.0, atol=1e-12)
    for (a, _), (b, _) in zip(u.states, v.states):
        assert np.array_equal(a.values, b.values)


def test_coupled_system_needs_mass(tiny_sgrid, tiny_pgrid, params):
    zero = CoefficientField.zeros(tiny_sgrid)
    config = FixedPointConfig(p=2.0, epsilon=1e-3, horizon=4.0, time_nodes=9)
    with pytest.raises(DomainError):
        coupled_iterate(zero, zero, zero, zero, config, params, tiny_pgrid)


def test_coupled_data_size_is_the_sum_of_both_components(tiny_sgrid, tiny_pgrid):
    params = ModelParams(n=1, b=2.0, m=0.2, alpha=1.0)
    F0, F1 = _small_data(tiny_sgrid, tiny_pgrid, 6e-4)
    config = FixedPointConfig(p=2.0, epsilon=1e-3, horizon=4.0, time_nodes=9)
    with pytest.raises(InputError, match="exceeds epsilon"):
        coupled_iterate(F0, F1, F0, F1, config, params, tiny_pgrid)
    G0, G1 = _small_data(tiny_sgrid, tiny_pgrid, 4e-4)
    _, _, report = coupled_iterate(G0, G1, G0, G1, config, params, tiny_pgrid)
    assert report.a_emp * 8e-4 == pytest.approx(report.linear_x_norm)


def test_t14_needs_mass(tiny_sgrid, tiny_pgrid, params):
    F0, F1 = _small_data(tiny_sgrid, tiny_pgrid, 1e-4)
    config = FixedPointConfig(p=1.5, epsilon=1e-3, horizon=4.0, time_nodes=9, theorem=Theorem.T14)
    with pytest.raises(DomainError, match="m > 0"):
        picard_iterate(F0, F1, config, WeightProfile(WeightTag.Z_MASS, params), params, tiny_pgrid)


def test_overflowing_iterate_is_divergence(tiny_sgrid, tiny_pgrid, params, monkeypatch):
    F0, F1 = _small_data(tiny_sgrid, tiny_pgrid, 1e-4)

    def overflowing(traj, p, pgrid, plan=None):
        blown = np.full(tiny_sgrid.shape, np.inf, dtype=complex)
        return SourceHistory(traj.times, tuple(CoefficientField(tiny_sgrid, blown) for _ in traj.times))

    monkeypatch.setattr("heisenwave.duhamel.source_history", overflowing)
    config = FixedPointConfig(p=2.0, epsilon=1e-3, horizon=4.0, time_nodes=9)
    with pytest.raises(NonContractionError, match="non-finite"):
        picard_iterate(F0, F1, config, WeightProfile(WeightTag.X_L1, params), params, tiny_pgrid)


def test_halving_the_time_step_barely_moves_the_x_norm(tiny_sgrid, tiny_pgrid, params):
    F0, F1 = _small_data(tiny_sgrid, tiny_pgrid, 1e-3)
    config = FixedPointConfig(p=2.0, epsilon=1e-3, horizon=4.0, time_nodes=9)
    profile = WeightProfile(WeightTag.X_L1, params)
    plan = TransformPlan(tiny_sgrid, tiny_pgrid)
    _, report = picard_iterate(F0, F1, config, profile, params, tiny_pgrid, plan)
    delta = quadrature_refinement_delta(F0, F1, config, profile, params, tiny_pgrid, report, plan)
    assert 0.0 <= delta < 0.05
    assert report.quadrature_delta == delta
    assert report.verdict


def test_source_norms_are_dominated(tiny_sgrid, tiny_pgrid, params):
    F0, F1 = _small_data(tiny_sgrid, tiny_pgrid, 1e-3)
    config = FixedPointConfig(p=2.0, epsilon=1e-3, horizon=4.0, time_nodes=9)
    profile = WeightProfile(WeightTag.X_L1, params)
    plan = TransformPlan(tiny_sgrid, tiny_pgrid)
    traj, report = picard_iterate(F0, F1, config, profile, params, tiny_pgrid, plan)
    series = source_norm_series(traj, config.p, tiny_pgrid, plan)
    assert list(series.columns) == ["t", "lp_p", "l2p_p"]
    assert np.allclose(series["t"], config.times())
    assert (series[["lp_p", "l2p_p"]] > 0).all().all()
    reports = check_source_decay(series, report.final_x_norm, profile, config.p)
    assert [r.kind for r in reports] == ["SOURCE_LP_P", "SOURCE_L2P_P"]
    for decay in reports:
        assert np.isfinite(decay.dominance_constant) and decay.dominance_constant > 0
        assert decay.theoretical_slope < 0


@pytest.mark.slow
def test_ten_times_the_calibrated_epsilon_breaks_contraction(tiny_sgrid, tiny_pgrid, params):
    F0, F1 = _small_data(tiny_sgrid, tiny_pgrid, 1.0)
    config = FixedPointConfig(p=2.0, epsilon=1e-3, horizon=4.0, time_nodes=9, max_iters=30)
    profile = WeightProfile(WeightTag.X_L1, params)
    calibration = calibrate_epsilon(F0, F1, config, profile, params, tiny_pgrid, start=1e-2)
    assert calibration.breaking_scale is not None
    assert calibration.epsilon < calibration.breaking_scale
    large = 10.0 * calibration.epsilon
    trial = FixedPointConfig(p=2.0, epsilon=large, horizon=4.0, time_nodes=9, max_iters=30)
    try:
        _, report = picard_iterate(F0.scaled(large), F1, trial, profile, params, tiny_pgrid)
    except NonContractionError as exc:
        assert exc.epsilon == pytest.approx(large)
    else:
        assert not (report.converged and report.contracting)


def test_epsilon_calibration_needs_data(tiny_sgrid, tiny_pgrid, params):
    zero = CoefficientField.zeros(tiny_sgrid)
    config = FixedPointConfig(p=2.0, epsilon=1e-3, horizon=4.0, time_nodes=9)
    with pytest.raises(InputError):
        calibrate_epsilon(zero, zero, config, WeightProfile(WeightTag.X_L1, params), params, tiny_pgrid)


def test_convergence_report_frame():
    report = ConvergenceReport(iters=3, diffs=[1e-3, 1e-5, 1e-7], ratios=[1e-2, 1e-2], final_x_norm=1e-3,
                               converged=True, epsilon=1e-3, linear_x_norm=1e-3, a_emp=1.0, bound_ok=True)
    frame = report.to_frame()
    assert np.isnan(frame["ratio"].iloc[0])
    assert frame["ratio"].iloc[2] == pytest.approx(1e-2)
    assert report.verdict
    report.quadrature_delta = 0.2
    assert not report.verdict
    assert report.to_json()["quadrature_delta"] == 0.2

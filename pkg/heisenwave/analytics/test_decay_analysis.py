"""
Envelope selection, zone splitting and decay-rate fitting.
"""
import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisenwave.analytics.decay_analysis import (
    LINEAR_TAGS,
    EnvelopeKind,
    EnvelopeTag,
    build_report,
    decay_envelope,
    dominance_constant,
    fit_decay_slope,
    h_alpha_norm,
    log_spaced_times,
    measure_decay,
    sobolev_seminorm,
    weak_envelope,
    zone_split_norm,
    zone_threshold,
)
from heisenwave.data_families import gaussian
from heisenwave.group_fourier import data_norms, forward_transform, plancherel_norm
from heisenwave.models import CoefficientField, DataNorms, ModelParams
from Runtime.error_handling import InputError

NORMS = DataNorms(l1=2.0, l2=1.5, h_alpha_seminorm=0.8, l2_u0=1.0, l2_u1=0.5)


def test_kind_parsing_and_labels():
    kind = EnvelopeKind.parse("l2_l1")
    assert kind.tag is EnvelopeTag.L2_L1
    assert kind.label == "L2_L1"
    assert kind.anchor == "Theorem 1.1 (1.4)"
    dt = EnvelopeKind.parse("DT_MASS")
    assert dt.measures_time_derivative and not dt.measures_seminorm
    nonlinear = EnvelopeKind.parse("NONLIN_L1:0,alpha")
    assert nonlinear.label == "NONLIN_L1:0,alpha"
    assert nonlinear.j_value(0.7) == pytest.approx(0.7)
    with pytest.raises(InputError):
        EnvelopeKind.parse("NONLIN_L2:1,alpha")
    with pytest.raises(ValueError):
        EnvelopeKind.parse("L3_L1")


def test_synthetic_power_law_slope():
    times = log_spaced_times(100.0, 64)
    series = 3.0 * (1.0 + times) ** -1.0
    assert fit_decay_slope(times, series) == pytest.approx(-1.0, abs=1e-10)
    report = build_report(times, series, series, params=None)
    assert report.kind == "synthetic"
    assert report.dominance_constant == pytest.approx(1.0)
    assert report.theoretical_slope == pytest.approx(-1.0, abs=1e-10)


def test_mass_factor_is_removed_before_fitting(massive_params):
    times = log_spaced_times(50.0, 40)
    series = (1.0 + times) ** -0.75 * np.exp(-massive_params.mass_rate * times)
    assert fit_decay_slope(times, series, massive_params) == pytest.approx(-0.75, abs=1e-10)


def test_dominance_constant_edge_cases():
    assert dominance_constant([1.0, 2.0], [2.0, 2.0]) == pytest.approx(1.0)
    assert dominance_constant([0.0, 1.0], [1.0, 0.0]) == math.inf
    assert dominance_constant([0.0, 0.0], [0.0, 0.0]) == 0.0


def test_report_frame_and_window_drift():
    times = np.array([0.0, 1.0, 2.0, 3.0])
    report = build_report(times, [1.0, 0.5, 0.4, 0.3], [1.0, 1.0, 0.5, 0.5], params=None)
    frame = report.to_frame()
    assert list(frame.columns) == ["t", "measured", "envelope", "ratio"]
    assert isinstance(frame, pd.DataFrame)
    assert report.dominance_constant == pytest.approx(1.0)
    assert report.window_drift(split=1.0) == pytest.approx(0.0)
    assert set(report.summary()) >= {"anchor", "kind", "fitted_slope", "dominance_constant", "window_drift"}
    with pytest.raises(InputError):
        build_report(times, [1.0], [1.0], params=None)


def test_log_spaced_times():
    times = log_spaced_times(100.0, 5)
    assert times[0] == 0.0
    assert times[-1] == pytest.approx(100.0)
    assert np.allclose(np.diff(np.log1p(times)), math.log(101.0) / 4)
    with pytest.raises(InputError):
        log_spaced_times(0.0, 5)


def test_zone_threshold(params):
    assert zone_threshold((0,), params) == pytest.approx(0.5)
    assert zone_threshold((1,), params) == pytest.approx(0.5 / 3.0)
    half = ModelParams(n=1, b=2.0, m=0.0, alpha=0.5)
    assert zone_threshold((0,), half) == pytest.approx(0.25)


def test_zone_split_adds_up(small_sgrid, small_pgrid, params):
    F = forward_transform(gaussian(small_pgrid), small_sgrid, refine=1)
    low, high = zone_split_norm(F, params)
    assert low > 0 and high > 0
    assert low + high == pytest.approx(plancherel_norm(F) ** 2, rel=1e-12)


def test_sobolev_norms(small_sgrid, small_pgrid):
    F = forward_transform(gaussian(small_pgrid), small_sgrid, refine=1)
    assert sobolev_seminorm(F, 0.0) == pytest.approx(plancherel_norm(F))
    assert h_alpha_norm(F, 1.0) == pytest.approx(math.hypot(plancherel_norm(F), sobolev_seminorm(F, 1.0)))
    with pytest.raises(InputError):
        sobolev_seminorm(F, -1.0)


def test_massless_exponential_envelope_is_constant(params):
    kind = EnvelopeKind(EnvelopeTag.L2_MASS)
    values = [decay_envelope(t, kind, params, NORMS) for t in (0.0, 5.0, 500.0)]
    assert values == [NORMS.l2] * 3


def test_envelope_rates(params):
    """Q/4α for L2_L1, plus ½ for HALPHA_L1 and 1 for DT_L1, at m = 0, n = 1."""
    t = 99.0
    for tag, rate in ((EnvelopeTag.L2_L1, 1.0), (EnvelopeTag.HALPHA_L1, 1.5), (EnvelopeTag.DT_L1, 2.0)):
        value = decay_envelope(t, EnvelopeKind(tag), params, NORMS)
        data = NORMS.l1 + (NORMS.l2 if tag is EnvelopeTag.L2_L1 else NORMS.a_alpha)
        assert value == pytest.approx(100.0 ** -rate * data)
    with pytest.raises(InputError):
        decay_envelope(-1.0, EnvelopeKind(EnvelopeTag.L2_L1), params, NORMS)


def test_nonlinear_massless_envelopes_refuse_mass(massive_params):
    with pytest.raises(InputError):
        decay_envelope(1.0, EnvelopeKind(EnvelopeTag.NONLIN_L1), massive_params, NORMS)
    assert decay_envelope(0.0, EnvelopeKind(EnvelopeTag.NONLIN_MASS, 1, "0"), massive_params, NORMS) == \
        pytest.approx((1.0 + massive_params.m) * NORMS.a_alpha)


@settings(max_examples=200, deadline=None)
@given(
    b=st.floats(min_value=0.1, max_value=5.0),
    fraction=st.floats(min_value=0.0, max_value=0.999),
    t=st.floats(min_value=0.0, max_value=1e3),
)
def test_weak_envelope_dominates(b, fraction, t):
    params = ModelParams(n=1, b=b, m=fraction * b * b / 4.0, alpha=1.0)
    strong = decay_envelope(t, EnvelopeKind(EnvelopeTag.L2_MASS), params, NORMS)
    assert strong <= weak_envelope(t, params, NORMS) * (1.0 + 1e-9)


@pytest.mark.parametrize("tag", LINEAR_TAGS)
def test_measured_decay_is_dominated(small_sgrid, small_pgrid, massive_params, tag):
    u0 = gaussian(small_pgrid)
    u1 = gaussian(small_pgrid, amplitude=0.5)
    F0 = forward_transform(u0, small_sgrid, refine=1)
    F1 = forward_transform(u1, small_sgrid, refine=1)
    norms = data_norms(u0, u1, F0, F1, massive_params)
    times = log_spaced_times(30.0, 16)
    report = measure_decay(F0, F1, massive_params, norms, times, EnvelopeKind(tag))
    assert np.isfinite(report.dominance_constant)
    assert report.metadata["h_alpha_convention"]
    with pytest.raises(InputError):
        measure_decay(F0, F1, massive_params, norms, times[::-1], EnvelopeKind(tag))


def test_measured_decay_of_zero_data(small_sgrid, params):
    zero = CoefficientField.zeros(small_sgrid)
    norms = DataNorms(0.0, 0.0, 0.0)
    report = measure_decay(zero, zero, params, norms, log_spaced_times(10.0, 4), EnvelopeKind(EnvelopeTag.L2_L1))
    assert report.dominance_constant == 0.0
    assert np.isnan(report.fitted_slope)

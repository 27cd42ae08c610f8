"""
Mode evolution against a numerical ODE solve, plus regime and energy checks.
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from heisenwave.data_families import gaussian
from heisenwave.group_fourier import forward_transform
from heisenwave.models import CoefficientField, ModelParams
from heisenwave.propagator import (
    Regime,
    a0,
    a1,
    char_roots,
    classify_regime,
    damped_multipliers,
    evolve_coefficient,
    evolve_field,
    evolve_time_derivative,
    evolve_values,
    fractional_symbol,
    ode_residual,
)
from Runtime.error_handling import DomainError, InputError


def _reference(t, u0, u1, s, params):
    def rhs(_, y):
        return [y[1], -params.b * y[1] - (s + params.m) * y[0]]

    sol = solve_ivp(rhs, (0.0, t), [complex(u0), complex(u1)], method="DOP853", rtol=1e-11, atol=1e-13)
    return sol.y[0, -1], sol.y[1, -1]


def test_matches_numerical_solution_on_seeded_samples():
    rng = np.random.default_rng(20240601)
    for _ in range(50):
        b = rng.uniform(0.5, 3.0)
        m = rng.uniform(0.0, 0.9) * b * b / 4.0
        params = ModelParams(n=1, b=b, m=m, alpha=rng.uniform(0.3, 2.0))
        s = rng.uniform(0.0, 6.0)
        u0 = complex(rng.normal(), rng.normal())
        u1 = complex(rng.normal(), rng.normal())
        t = rng.uniform(0.1, 6.0)
        u, du = evolve_values(t, u0, u1, s, params)
        ref_u, ref_du = _reference(t, u0, u1, s, params)
        scale = abs(u0) + abs(u1)
        assert abs(complex(u) - ref_u) <= 1e-8 * scale
        assert abs(complex(du) - ref_du) <= 1e-8 * scale * (1.0 + s)


def test_multipliers_at_time_zero():
    params = ModelParams(n=1, b=2.0, m=0.3, alpha=1.0)
    e0, e1 = damped_multipliers(0.0, np.array([0.1, 0.7, 5.0]), params)
    assert np.allclose(e0, 1.0)
    assert np.allclose(e1, 0.0)


def test_multipliers_satisfy_mode_equation():
    """e1' = e0 − (b/2)e1 by central differences, in all three regimes."""
    params = ModelParams(n=1, b=2.0, m=0.0, alpha=1.0)
    h = 1e-4
    for s in (0.3, 1.0, 4.0):
        for t in (0.5, 2.0, 7.0):
            e0, e1 = damped_multipliers(t, s, params)
            _, e1_plus = damped_multipliers(t + h, s, params)
            _, e1_minus = damped_multipliers(t - h, s, params)
            derivative = (e1_plus - e1_minus) / (2 * h)
            assert derivative == pytest.approx(float(e0 - 0.5 * params.b * e1), abs=1e-7)


def test_regime_classification(params):
    assert classify_regime(0.5, params) is Regime.HYPERBOLIC
    assert classify_regime(1.0, params) is Regime.DEGENERATE
    assert classify_regime(2.0, params) is Regime.OSCILLATORY
    slow, fast = char_roots(0.75, params)
    assert slow == pytest.approx(-0.5)
    assert fast == pytest.approx(-1.5)
    left, right = char_roots(2.0, params)
    assert left == pytest.approx(complex(-1.0, 1.0))
    assert right == pytest.approx(complex(-1.0, -1.0))


def test_continuous_across_the_degenerate_point(params):
    """No jump where the roots merge."""
    for t in (0.1, 1.0, 10.0):
        centre = np.array(damped_multipliers(t, 1.0, params))
        for offset in (1e-12, 1e-9, 1e-6):
            above = np.array(damped_multipliers(t, 1.0 + offset, params))
            below = np.array(damped_multipliers(t, 1.0 - offset, params))
            assert np.allclose(above, centre, atol=10 * offset * (1 + t * t))
            assert np.allclose(below, centre, atol=10 * offset * (1 + t * t))


def test_no_overflow_at_long_times(params):
    s = np.geomspace(1e-8, 1e3, 40)
    e0, e1 = damped_multipliers(1e4, s, params)
    assert np.all(np.isfinite(e0)) and np.all(np.isfinite(e1))
    assert np.all(np.abs(e0) <= 1.0 + 1e-12)


def test_scalar_multipliers_agree_with_damped_ones():
    params = ModelParams(n=2, b=3.0, m=1.0, alpha=0.5)
    for s in (0.2, 1.25, 6.0):
        for t in (0.0, 0.8, 3.0):
            e0, e1 = damped_multipliers(t, s, params)
            damping = math.exp(-1.5 * t)
            assert float(e0) == pytest.approx(damping * a0(t, s, params), rel=1e-12, abs=1e-15)
            assert float(e1) == pytest.approx(damping * a1(t, s, params), rel=1e-12, abs=1e-15)


@settings(max_examples=300, deadline=None)
@given(
    s=st.floats(min_value=0.0, max_value=50.0),
    t=st.floats(min_value=0.0, max_value=200.0),
    m=st.floats(min_value=0.0, max_value=0.99),
)
def test_resting_data_never_grows(s, t, m):
    """With û₁ = 0 the mode energy bound gives |û(t)| ≤ |û₀|."""
    params = ModelParams(n=1, b=2.0, m=m, alpha=1.0)
    u, _ = evolve_values(t, 1.0, 0.0, s, params)
    assert abs(complex(u)) <= 1.0 + 1e-10


@settings(max_examples=200, deadline=None)
@given(
    s=st.floats(min_value=0.0, max_value=20.0),
    t=st.floats(min_value=0.0, max_value=50.0),
    u0=st.complex_numbers(max_magnitude=5.0),
    u1=st.complex_numbers(max_magnitude=5.0),
)
def test_mode_energy_is_nonincreasing(s, t, u0, u1):
    params = ModelParams(n=1, b=1.5, m=0.2, alpha=1.0)
    u, du = evolve_values(t, u0, u1, s, params)
    energy0 = abs(u1) ** 2 + (s + params.m) * abs(u0) ** 2
    energy = abs(complex(du)) ** 2 + (s + params.m) * abs(complex(u)) ** 2
    assert energy <= energy0 * (1 + 1e-9) + 1e-12


def test_ode_residual_is_small(params):
    for s in (0.1, 1.0, 9.0):
        assert ode_residual(2.5, 1.0 - 0.5j, 0.3j, s, params) < 1e-6
    with pytest.raises(InputError):
        ode_residual(0.0, 1.0, 0.0, 1.0, params)


def test_fractional_symbol(params):
    assert fractional_symbol(0.5, (1,), params) == pytest.approx(1.5)
    half = ModelParams(n=1, b=2.0, m=0.0, alpha=0.5)
    assert fractional_symbol(-4.0, (0,), half) == pytest.approx(2.0)
    with pytest.raises(InputError):
        fractional_symbol(0.0, (0,), params)
    with pytest.raises(InputError):
        fractional_symbol(1.0, (0, 0), params)


def test_field_evolution_starts_at_the_data(small_sgrid, small_pgrid, params):
    F0 = forward_transform(gaussian(small_pgrid), small_sgrid, refine=1)
    F1 = F0.scaled(0.25)
    u, du = evolve_field(0.0, F0, F1, params)
    assert np.allclose(u.values, F0.values)
    assert np.allclose(du.values, F1.values)
    later, _ = evolve_field(5.0, F0, CoefficientField.zeros(small_sgrid), params)
    assert np.all(np.abs(later.values) <= np.abs(F0.values) + 1e-14)


def test_negative_time_is_refused(params):
    with pytest.raises(InputError):
        damped_multipliers(-1.0, 0.5, params)


def test_mass_hypothesis_is_enforced():
    with pytest.raises(DomainError, match="b\\^2 > 4m"):
        ModelParams(n=1, b=1.0, m=1.0, alpha=1.0)


def test_scalar_evolution_matches_reference(massive_params):
    u0, u1, s, t = 1.0 - 0.5j, 0.25j, 2.3, 3.7
    ref_u, ref_du = _reference(t, u0, u1, s, massive_params)
    assert evolve_coefficient(t, u0, u1, s, massive_params) == pytest.approx(ref_u, rel=1e-8, abs=1e-10)
    assert evolve_time_derivative(t, u0, u1, s, massive_params) == pytest.approx(ref_du, rel=1e-8, abs=1e-10)
    assert isinstance(evolve_coefficient(0.0, 1.0, 0.0, s, massive_params), complex)


def test_off_diagonal_entries_follow_their_row_symbol(tiny_sgrid, params):
    rng = np.random.default_rng(11)
    values = rng.normal(size=tiny_sgrid.shape) + 1j * rng.normal(size=tiny_sgrid.shape)
    F0 = CoefficientField(tiny_sgrid, values)
    F1 = CoefficientField.zeros(tiny_sgrid)
    u, du = evolve_field(1.5, F0, F1, params)
    rows, cols = tiny_sgrid.rows.indices, tiny_sgrid.cols.indices
    for li in (1, tiny_sgrid.shape[0] - 2):
        lam = float(tiny_sgrid.lambda_nodes[li])
        for r, k in enumerate(rows):
            s = fractional_symbol(lam, k, params)
            for c, _ in enumerate(cols):
                expected = evolve_coefficient(1.5, values[li, r, c], 0.0, s, params)
                assert u.values[li, r, c] == pytest.approx(expected, rel=1e-12, abs=1e-14)
                assert du.values[li, r, c] == pytest.approx(
                    evolve_time_derivative(1.5, values[li, r, c], 0.0, s, params), rel=1e-12, abs=1e-14)

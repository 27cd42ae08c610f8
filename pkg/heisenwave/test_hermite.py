"""
Hermite functions: normalization, recurrence, eigen-equation and multi-index order.
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisenwave.hermite import (
    PI_QUARTER,
    corrected_weights,
    eigenvalue,
    eigenvalues,
    enumerate_multi_indices,
    gauss_hermite_rule,
    hermite_function,
    hermite_table,
)
from Runtime.error_handling import InputError


def test_orthonormal_under_gauss_hermite():
    """∫ h_j h_k = δ_jk for j, k ≤ 20 with a 64-point rule."""
    rule = gauss_hermite_rule(64)
    table = hermite_table(20, rule.nodes)
    gram = (table * corrected_weights(rule)) @ table.T
    assert np.allclose(gram, np.eye(21), atol=1e-12)


def test_ground_state_value():
    assert hermite_function(0, 0.0) == pytest.approx(math.pi ** -0.25, rel=1e-15)
    assert hermite_function(1, 0.0) == 0.0
    assert hermite_function(2, 0.0) == pytest.approx(-PI_QUARTER / math.sqrt(2.0), rel=1e-14)


def test_matches_explicit_polynomials():
    x = np.linspace(-3.0, 3.0, 13)
    gauss = np.exp(-0.5 * x * x)
    h3 = (8 * x ** 3 - 12 * x) * gauss / math.sqrt(8 * 6 * math.sqrt(math.pi))
    assert np.allclose(hermite_function(3, x), h3, atol=1e-14)


def test_eigen_equation_by_finite_differences():
    """(−d²/dx² + x²) h_k = (2k+1) h_k."""
    x = np.linspace(-4.0, 4.0, 41)
    step = 1e-3
    for k in range(6):
        second = (hermite_function(k, x + step) - 2 * hermite_function(k, x) + hermite_function(k, x - step)) / step ** 2
        lhs = -second + x * x * hermite_function(k, x)
        assert np.allclose(lhs, (2 * k + 1) * hermite_function(k, x), atol=1e-5)


@settings(max_examples=200, deadline=None)
@given(k=st.integers(min_value=0, max_value=40), x=st.floats(min_value=-30.0, max_value=30.0))
def test_bounded_by_ground_state_peak(k, x):
    assert abs(hermite_function(k, x)) <= PI_QUARTER + 1e-12


def test_eigenvalue():
    assert eigenvalue((1, 2), 2) == 8
    assert eigenvalue((0,), 1) == 1
    with pytest.raises(InputError):
        eigenvalue((1,), 2)
    with pytest.raises(InputError):
        eigenvalue((-1, 0), 2)


def test_multi_indices_graded_then_lexicographic():
    tset = enumerate_multi_indices(2, 2)
    assert tset.indices == ((0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0))
    assert tset.size == 6
    assert list(eigenvalues(tset)) == [2, 4, 4, 6, 6, 6]
    assert tset.position((1, 1)) == 4
    with pytest.raises(InputError):
        tset.position((3, 0))


def test_multi_index_count():
    """C(d+n, n) indices of degree ≤ d."""
    for n in (1, 2, 3):
        for degree in (0, 3, 5):
            assert enumerate_multi_indices(n, degree).size == math.comb(degree + n, n)


def test_rejects_bad_arguments():
    with pytest.raises(InputError):
        hermite_table(-1, 0.0)
    with pytest.raises(InputError):
        hermite_table(2, [0.0, float("nan")])
    with pytest.raises(InputError):
        hermite_function(1.5, 0.0)
    with pytest.raises(InputError):
        gauss_hermite_rule(1)
    with pytest.raises(InputError):
        gauss_hermite_rule(257)
    with pytest.raises(InputError):
        enumerate_multi_indices(0, 3)

"""
Normalized Hermite functions, multi-index bookkeeping and Gauss–Hermite rules.

h_k(x) = (2^k k! √π)^{-1/2} H_k(x) e^{-x²/2} is evaluated by the upward
recurrence on the normalized functions, so neither H_k nor k! is ever formed.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss

from heisenwave.models import MultiIndex, QuadratureRule, TruncationSet
from Runtime.error_handling import InputError

PI_QUARTER = math.pi ** -0.25


def hermite_table(max_k: int, x) -> np.ndarray:
    """Rows h_0..h_max_k evaluated at every point of x; shape (max_k+1, *x.shape)."""
    if max_k < 0:
        raise InputError(f"Hermite degree must be nonnegative, got {max_k}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InputError("Hermite functions need finite arguments")
    table = np.empty((max_k + 1,) + x.shape)
    table[0] = PI_QUARTER * np.exp(-0.5 * x * x)
    if max_k >= 1:
        table[1] = math.sqrt(2.0) * x * table[0]
    for k in range(1, max_k):
        table[k + 1] = math.sqrt(2.0 / (k + 1)) * x * table[k] - math.sqrt(k / (k + 1)) * table[k - 1]
    return table


def hermite_function(k: int, x):
    """h_k(x) for a scalar or array x."""
    if int(k) != k or k < 0:
        raise InputError(f"Hermite index must be a nonnegative integer, got {k}")
    values = hermite_table(int(k), x)[int(k)]
    return float(values) if np.ndim(values) == 0 else values


def eigenvalue(k: MultiIndex, n: int) -> int:
    """μ_k = 2|k| + n, the Hermite-operator eigenvalue of e_k."""
    if len(k) != n:
        raise InputError(f"multi-index {tuple(k)} has length {len(k)}, expected n={n}")
    if any(int(v) < 0 for v in k):
        raise InputError(f"multi-index {tuple(k)} has negative entries")
    return 2 * sum(int(v) for v in k) + n


def eigenvalues(tset: TruncationSet) -> np.ndarray:
    return 2 * tset.degrees() + tset.n


@lru_cache(maxsize=64)
def enumerate_multi_indices(n: int, max_degree: int) -> TruncationSet:
    """All k ∈ N₀ⁿ with |k| ≤ max_degree, graded by degree then lexicographic."""
    if n < 1:
        raise InputError(f"Heisenberg index must be positive, got {n}")
    if max_degree < 0:
        raise InputError(f"max_degree must be nonnegative, got {max_degree}")
    indices = []
    for degree in range(max_degree + 1):
        level = [k for k in itertools.product(range(degree + 1), repeat=n) if sum(k) == degree]
        indices.extend(sorted(level))
    return TruncationSet(indices=tuple(indices), max_degree=max_degree)


@lru_cache(maxsize=32)
def gauss_hermite_rule(count: int) -> QuadratureRule:
    """Rule for ∫ e^{-x²} p(x) dx, exact for deg p ≤ 2·count − 1."""
    if not 2 <= count <= 256:
        raise InputError(f"Gauss-Hermite point count must lie in [2, 256], got {count}")
    nodes, weights = hermgauss(count)
    return QuadratureRule(nodes=nodes, weights=weights)


def corrected_weights(rule: QuadratureRule) -> np.ndarray:
    """w·e^{x²}: turns the rule into one for plain ∫ g(x) dx with Gaussian-decaying g."""
    return rule.weights * np.exp(rule.nodes ** 2)

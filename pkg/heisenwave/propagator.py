"""
Exact Fourier-side evolution of the damped mode equation

    û'' + b û' + (s + m) û = 0,   s = |λ|^α μ_k^α.

With D = b²/4 − m − s the roots are −b/2 ± √D, and the solution is
e^{−bt/2}[A₀ û₀ + A₁ (b/2 û₀ + û₁)] where (A₀, A₁) is (cosh, sinh/√D),
(1, t) or (cos, sin/√−D) depending on the sign of D.

Everything below is vectorized over s and t; the scalar operations are thin
wrappers. Damped products e^{−bt/2}A_i are always formed from exponents that
are ≤ 0, so no intermediate overflows for large t.
"""
from __future__ import annotations

import math
from enum import Enum

import numpy as np

from heisenwave.group_fourier import mode_frequencies
from heisenwave.models import CoefficientField, ModelParams, MultiIndex
from Runtime.activity_logging import get_logger, log_event
from Runtime.error_handling import InputError

logger = get_logger("propagator")

SERIES_CUTOFF = 1e-4


class Regime(str, Enum):
    HYPERBOLIC = "HYPERBOLIC"
    DEGENERATE = "DEGENERATE"
    OSCILLATORY = "OSCILLATORY"


def degenerate_tolerance(params: ModelParams) -> float:
    return 1e-10 * (params.b * params.b / 4.0 + 1.0)


def fractional_symbol(lam: float, k: MultiIndex, params: ModelParams) -> float:
    """|λ|^α (2|k|+n)^α."""
    if lam == 0:
        raise InputError("fractional symbol is undefined at lambda = 0")
    if len(k) != params.n:
        raise InputError(f"multi-index {tuple(k)} does not match n={params.n}")
    return float(abs(lam) ** params.alpha * (2 * sum(k) + params.n) ** params.alpha)


def symbol_grid(F: CoefficientField, params: ModelParams) -> np.ndarray:
    """s on the (λ, k) grid of F; shape (L, R)."""
    return mode_frequencies(F.grid) ** params.alpha


def _discriminant(s, params: ModelParams) -> np.ndarray:
    return params.critical_gap - np.asarray(s, dtype=float)


def classify_regime(s: float, params: ModelParams) -> Regime:
    d = float(_discriminant(s, params))
    if abs(d) < degenerate_tolerance(params):
        return Regime.DEGENERATE
    return Regime.HYPERBOLIC if d > 0 else Regime.OSCILLATORY


def char_roots(s: float, params: ModelParams) -> tuple[complex, complex]:
    d = float(_discriminant(s, params))
    half_b = -params.b / 2.0
    regime = classify_regime(s, params)
    if regime is Regime.DEGENERATE:
        return complex(half_b), complex(half_b)
    if regime is Regime.HYPERBOLIC:
        r = math.sqrt(d)
        return complex(half_b + r), complex(half_b - r)
    w = math.sqrt(-d)
    return complex(half_b, w), complex(half_b, -w)


def _sinhc(x: np.ndarray) -> np.ndarray:
    small = np.abs(x) < SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 6.0, np.sinh(safe) / safe)


def _sinc(x: np.ndarray) -> np.ndarray:
    small = np.abs(x) < SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)


def damped_multipliers(t, s, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """(e^{−bt/2}A₀(t), e^{−bt/2}A₁(t)) broadcast over t and s."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InputError("time must be nonnegative")
    d = _discriminant(s, params)
    t, d = np.broadcast_arrays(t, d)
    half_b = params.b / 2.0
    tol = degenerate_tolerance(params)

    hyper = d >= tol
    osc = d <= -tol
    r = np.sqrt(np.where(hyper, d, 0.0))
    w = np.sqrt(np.where(osc, -d, 0.0))
    decay = np.exp(-half_b * t)

    # hyperbolic: ½(e^{(−b/2+r)t} + e^{(−b/2−r)t}) and e^{(−b/2−r)t}·expm1(2rt)/(2r)
    slow = np.exp((r - half_b) * t)
    fast = np.exp(-(r + half_b) * t)
    rt = r * t
    safe_r = np.where(rt < SERIES_CUTOFF, 1.0, r)
    e0_h = 0.5 * (slow + fast)
    near = fast * np.expm1(np.minimum(2.0 * rt, 1.0)) / (2.0 * safe_r)
    far = (slow - fast) / (2.0 * safe_r)
    e1_h = np.where(rt < SERIES_CUTOFF, decay * t * _sinhc(rt), np.where(rt < 0.5, near, far))

    e0_o = decay * np.cos(w * t)
    e1_o = decay * t * _sinc(w * t)

    e0 = np.where(hyper, e0_h, np.where(osc, e0_o, decay))
    e1 = np.where(hyper, e1_h, np.where(osc, e1_o, decay * t))
    return e0, e1


def a0(t: float, s: float, params: ModelParams) -> float:
    """A₀(t): cosh(√D t), 1 or cos(√−D t)."""
    if t < 0:
        raise InputError("time must be nonnegative")
    d = float(_discriminant(s, params))
    regime = classify_regime(s, params)
    if regime is Regime.HYPERBOLIC:
        return float(np.cosh(math.sqrt(d) * t))
    if regime is Regime.OSCILLATORY:
        return math.cos(math.sqrt(-d) * t)
    return 1.0


def a1(t: float, s: float, params: ModelParams) -> float:
    """A₁(t): sinh(√D t)/√D, t or sin(√−D t)/√−D."""
    if t < 0:
        raise InputError("time must be nonnegative")
    d = float(_discriminant(s, params))
    regime = classify_regime(s, params)
    if regime is Regime.HYPERBOLIC:
        return float(t * _sinhc(np.asarray(math.sqrt(d) * t)))
    if regime is Regime.OSCILLATORY:
        return float(t * _sinc(np.asarray(math.sqrt(-d) * t)))
    return float(t)


def evolve_values(t, u0, u1, s, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """(û(t), ∂_t û(t)) for arrays broadcasting against s."""
    e0, e1 = damped_multipliers(t, s, params)
    half_b = params.b / 2.0
    s = np.asarray(s, dtype=float)
    u = e0 * u0 + e1 * (half_b * u0 + u1)
    du = e0 * u1 - e1 * (half_b * u1 + (s + params.m) * u0)
    return u, du


def evolve_coefficient(t: float, u0: complex, u1: complex, s: float, params: ModelParams) -> complex:
    return complex(evolve_values(t, u0, u1, s, params)[0])


def evolve_time_derivative(t: float, u0: complex, u1: complex, s: float, params: ModelParams) -> complex:
    return complex(evolve_values(t, u0, u1, s, params)[1])


def evolve_field(
    t: float, F0: CoefficientField, F1: CoefficientField, params: ModelParams
) -> tuple[CoefficientField, CoefficientField]:
    """Apply the mode multipliers at time t; the column index ℓ is passive."""
    F0.require_same_grid(F1)
    if F0.grid.n != params.n:
        raise InputError(f"spectral grid has n={F0.grid.n}, model has n={params.n}")
    s = symbol_grid(F0, params)[:, :, None]
    u, du = evolve_values(t, F0.values, F1.values, s, params)
    log_event(logger, "evolve_field", t=float(t))
    return F0.with_values(u), F1.with_values(du)


def ode_residual(t: float, u0: complex, u1: complex, s: float, params: ModelParams, h: float = 1e-3) -> float:
    """|û'' + b û' + (s+m) û| with fourth-order central differences."""
    if t <= 0:
        raise InputError("ODE residual is evaluated at t > 0")
    h = min(h, t / 4.0)
    offsets = np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * h
    u = evolve_values(t + offsets, u0, u1, s, params)[0]
    second = (-u[0] + 16.0 * u[1] - 30.0 * u[2] + 16.0 * u[3] - u[4]) / (12.0 * h * h)
    first = (u[0] - 8.0 * u[1] + 8.0 * u[3] - u[4]) / (12.0 * h)
    return float(abs(second + params.b * first + (s + params.m) * u[2]))

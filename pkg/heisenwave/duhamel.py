"""
Duhamel–Picard solver for  u_tt + (−L)^α u + b u_t + m u = |u|^p  and for the
weakly coupled pair (u ← |v|^p, v ← |u|^q).

The iteration is global on the whole window [0, T]: every iterate is a full
Trajectory on the time grid, and convergence is measured in the weighted
sup-in-time norm of the selected WeightProfile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np
import pandas as pd
from scipy import integrate

from heisenwave.analytics.decay_analysis import (
    DecayReport,
    EnvelopeKind,
    EnvelopeTag,
    build_report,
    decay_envelope,
    dominance_constant,
    fit_decay_slope,
    h_alpha_norm,
    measured_norm,
    sobolev_seminorm,
)
from heisenwave.group_fourier import (
    TransformPlan,
    forward_transform,
    inverse_on_grid,
    lq_norm,
    plancherel_norm,
)
from heisenwave.models import CoefficientField, DataNorms, ModelParams, PhysicalField, PhysicalGrid
from heisenwave.propagator import damped_multipliers, evolve_field, symbol_grid
from Runtime.activity_logging import get_logger, log_event
from Runtime.error_handling import (
    ConfigurationError,
    ConsistencyError,
    DomainError,
    InputError,
    NonContractionError,
    NonFiniteValues,
)
from Runtime.metrics import observe_iterations

logger = get_logger("duhamel")

IMAGINARY_TOLERANCE = 0.10
DIVERGENCE_STREAK = 3


# =========================================================
# 1. EXPONENT WINDOWS
# =========================================================
class Theorem(str, Enum):
    T12 = "T12"
    T13 = "T13"
    T14 = "T14"
    T51 = "T51"


@dataclass(frozen=True)
class ExponentWindow:
    lower: float
    upper: float
    lower_open: bool

    def contains(self, p: float) -> bool:
        above = p > self.lower if self.lower_open else p >= self.lower
        return above and p <= self.upper + 1e-12

    def inequality(self, name: str = "p") -> str:
        relation = "<" if self.lower_open else "<="
        return f"{self.lower:.6g} {relation} {name} <= {self.upper:.6g}"


def fujita_exponent(Q: int) -> float:
    return 1.0 + 2.0 / Q


def admissible_p_range(theorem, Q: int, alpha: float) -> ExponentWindow:
    """Exponent window of the chosen global-existence theorem; structural hypotheses raise DomainError."""
    theorem = Theorem(theorem)
    if not Q > 2.0 * alpha:
        raise DomainError(f"{theorem.value} needs Q > 2 alpha, got Q={Q}, alpha={alpha}")
    upper = 1.0 + 2.0 * alpha / (Q - 2.0 * alpha)
    if theorem is Theorem.T12:
        if alpha < 1 or Q > 4.0 * alpha:
            raise DomainError(f"Theorem 1.2 needs alpha >= 1 and 2 alpha < Q <= 4 alpha, got Q={Q}, alpha={alpha}")
        return ExponentWindow(2.0, upper, lower_open=False)
    if theorem is Theorem.T13:
        if alpha <= 1 or Q >= 4.0 * alpha:
            raise DomainError(f"Theorem 1.3 needs alpha > 1 and 2 alpha < Q < 4 alpha, got Q={Q}, alpha={alpha}")
        return ExponentWindow(1.0 + 4.0 * alpha / Q, upper, lower_open=True)
    return ExponentWindow(1.0, upper, lower_open=True)


def require_exponent(theorem, p: float, params: ModelParams, name: str = "p") -> ExponentWindow:
    window = admissible_p_range(theorem, params.Q, params.alpha)
    if not window.contains(p):
        anchor = {"T12": "Theorem 1.2", "T13": "Theorem 1.3", "T14": "Theorem 1.4", "T51": "Theorem 5.1"}
        raise DomainError(f"{anchor[Theorem(theorem).value]} needs {window.inequality(name)}, got {name}={p}")
    return window


# =========================================================
# 2. WEIGHT PROFILES
# =========================================================
class WeightTag(str, Enum):
    X_L1 = "X_L1"
    X_L2 = "X_L2"
    Z_MASS = "Z_MASS"


@dataclass(frozen=True)
class WeightProfile:
    tag: WeightTag
    params: ModelParams

    def __post_init__(self):
        object.__setattr__(self, "tag", WeightTag(self.tag))

    def weights(self, times) -> np.ndarray:
        """(f₁, f₂, f₃) as columns of shape (T, 3)."""
        t = np.asarray(times, dtype=float)
        base = 1.0 + t
        if self.tag is WeightTag.X_L1:
            rate = self.params.Q / (4.0 * self.params.alpha)
            return np.stack([base ** -rate, base ** (-rate - 0.5), base ** (-rate - 1.0)], axis=-1)
        if self.tag is WeightTag.X_L2:
            return np.stack([np.ones_like(base), base ** -0.5, base ** -1.0], axis=-1)
        mass = np.exp(-self.params.mass_rate * t)
        return np.stack([mass, base ** -0.5 * mass, (1.0 / base + self.params.m) * mass], axis=-1)

    def sobolev_norm(self, F: CoefficientField) -> float:
        if self.tag is WeightTag.X_L2:
            return sobolev_seminorm(F, self.params.alpha)
        return h_alpha_norm(F, self.params.alpha)

    @property
    def polynomial_rate(self) -> float:
        return self.params.Q / (4.0 * self.params.alpha) if self.tag is WeightTag.X_L1 else 0.0


# =========================================================
# 3. TRAJECTORIES
# =========================================================
State = tuple[CoefficientField, CoefficientField]


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: tuple[State, ...]
    converged: bool | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise InputError("a trajectory needs at least one time")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise InputError("trajectory times must start at 0 and increase strictly")
        if len(self.states) != times.size:
            raise InputError("one state per time is required")
        first = self.states[0][0]
        for u, du in self.states:
            first.require_same_grid(u)
            first.require_same_grid(du)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", tuple(self.states))

    @property
    def grid(self):
        return self.states[0][0].grid

    def __len__(self) -> int:
        return int(self.times.size)

    def __add__(self, other: "Trajectory") -> "Trajectory":
        return self._combine(other, 1.0)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        return self._combine(other, -1.0)

    def _combine(self, other: "Trajectory", sign: float) -> "Trajectory":
        if not np.array_equal(self.times, other.times):
            raise InputError("trajectories live on different time grids")
        states = tuple(
            (u.with_values(u.values + sign * v.values), du.with_values(du.values + sign * dv.values))
            for (u, du), (v, dv) in zip(self.states, other.states)
        )
        return Trajectory(self.times, states)

    def marked(self, converged: bool) -> "Trajectory":
        return replace(self, converged=converged)

    def norm_frame(self, alpha: float) -> pd.DataFrame:
        """Columns t, L2, Halpha, dtL2."""
        return pd.DataFrame({
            "t": self.times,
            "L2": [plancherel_norm(u) for u, _ in self.states],
            "Halpha": [h_alpha_norm(u, alpha) for u, _ in self.states],
            "dtL2": [plancherel_norm(du) for _, du in self.states],
        })


@dataclass(frozen=True, eq=False)
class SourceHistory:
    """Transformed sources ŝ(τ) on a uniform time grid."""

    times: np.ndarray
    sources: tuple[CoefficientField, ...]

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if len(self.sources) != times.size:
            raise InputError("one source per time is required")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "sources", tuple(self.sources))

    def stacked(self) -> np.ndarray:
        return np.stack([s.values for s in self.sources])


def time_grid(horizon: float, nodes: int) -> np.ndarray:
    if nodes < 3:
        raise ConfigurationError(f"the Duhamel quadrature needs at least 3 time nodes, got {nodes}")
    if not horizon > 0:
        raise ConfigurationError(f"horizon must be positive, got {horizon}")
    return np.linspace(0.0, float(horizon), int(nodes))


def linear_part(times: Sequence[float], F0: CoefficientField, F1: CoefficientField,
                params: ModelParams) -> Trajectory:
    """u^lin sampled at each time."""
    times = np.asarray(times, dtype=float)
    states = tuple(evolve_field(float(t), F0, F1, params) if t > 0 else (F0, F1) for t in times)
    return Trajectory(times, states)


# =========================================================
# 4. NONLINEARITY AND DUHAMEL QUADRATURE
# =========================================================
def reconstruct_real(state: CoefficientField, pgrid: PhysicalGrid, plan: TransformPlan | None = None) -> np.ndarray:
    """Real part of the reconstruction; a large imaginary part means the truncation is too aggressive."""
    values = inverse_on_grid(state, pgrid, plan)
    scale = float(np.max(np.abs(values), initial=0.0))
    if scale > 0:
        leak = float(np.max(np.abs(values.imag)) / scale)
        if leak > IMAGINARY_TOLERANCE:
            raise ConsistencyError(
                f"reconstruction has imaginary part {leak:.3g} of its magnitude (limit {IMAGINARY_TOLERANCE})"
            )
    return values.real


def nonlinearity_transform(state: CoefficientField, p: float, pgrid: PhysicalGrid, sgrid=None,
                           plan: TransformPlan | None = None) -> CoefficientField:
    """Transform of |u|^p, with u reconstructed on pgrid."""
    if not p > 1:
        raise InputError(f"nonlinearity exponent must exceed 1, got {p}")
    sgrid = state.grid if sgrid is None else sgrid
    if not np.any(state.values):
        return CoefficientField.zeros(sgrid)
    real = reconstruct_real(state, pgrid, plan)
    source = PhysicalField(pgrid, np.abs(real) ** p)
    return forward_transform(source, sgrid, plan=plan)


def _duhamel_kernels(lags: np.ndarray, s: np.ndarray, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """e^{−bτ/2}A₁(τ) and e^{−bτ/2}(A₀ − (b/2)A₁)(τ) on (lag, λ, k)."""
    e0, e1 = damped_multipliers(lags[:, None, None], s[None, :, :], params)
    return e1, e0 - 0.5 * params.b * e1


def _time_integral(integrand: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    if nodes.size == 1:
        return np.zeros(integrand.shape[1:], dtype=integrand.dtype)
    if nodes.size == 2:
        return integrate.trapezoid(integrand, x=nodes, axis=0)
    return integrate.simpson(integrand, x=nodes, axis=0)


def duhamel_step(t_index: int, history: SourceHistory, params: ModelParams) -> State:
    """∫₀ᵗ K(t−τ) ŝ(τ) dτ per mode for u and for ∂_t u, t = history.times[t_index]."""
    if len(history.times) < 3:
        raise ConfigurationError("the Duhamel quadrature needs at least 3 time nodes")
    if not 0 <= t_index < len(history.times):
        raise InputError(f"t_index {t_index} outside the history of {len(history.times)} nodes")
    grid = history.sources[0].grid
    if t_index == 0:
        zero = CoefficientField.zeros(grid)
        return zero, zero
    nodes = history.times[: t_index + 1]
    lags = history.times[t_index] - nodes
    s = symbol_grid(history.sources[0], params)
    k_u, k_du = _duhamel_kernels(lags, s, params)
    window = history.stacked()[: t_index + 1]
    u = _time_integral(k_u[..., None] * window, nodes)
    du = _time_integral(k_du[..., None] * window, nodes)
    return CoefficientField(grid, u), CoefficientField(grid, du)


def duhamel_trajectory(history: SourceHistory, params: ModelParams) -> Trajectory:
    return Trajectory(history.times, tuple(duhamel_step(i, history, params) for i in range(len(history.times))))


def source_history(traj: Trajectory, p: float, pgrid: PhysicalGrid, plan: TransformPlan | None = None) -> SourceHistory:
    return SourceHistory(traj.times, tuple(nonlinearity_transform(u, p, pgrid, plan=plan) for u, _ in traj.states))


# =========================================================
# 5. SOLUTION-SPACE NORMS
# =========================================================
def weighted_norm_series(traj: Trajectory, profile: WeightProfile) -> np.ndarray:
    """Per-time (‖u‖/f₁, ‖u‖_{H}/f₂, ‖∂_t u‖/f₃); shape (T, 3)."""
    raw = np.array([[plancherel_norm(u), profile.sobolev_norm(u), plancherel_norm(du)] for u, du in traj.states])
    return raw / profile.weights(traj.times)


def x_norm(traj: Trajectory, profile: WeightProfile, alpha: float | None = None,
           partner: Trajectory | None = None) -> float:
    """sup over times of the weighted norm sum; a partner trajectory adds its terms at each time."""
    if alpha is not None and not math.isclose(alpha, profile.params.alpha):
        profile = WeightProfile(profile.tag, replace(profile.params, alpha=alpha))
    per_time = weighted_norm_series(traj, profile).sum(axis=1)
    if partner is not None:
        per_time = per_time + weighted_norm_series(partner, profile).sum(axis=1)
    return float(per_time.max())


def coefficient_data_size(F0: CoefficientField, F1: CoefficientField, alpha: float) -> float:
    """‖u0‖_{H^α} + ‖u1‖_{L²} computed on the Fourier side."""
    return h_alpha_norm(F0, alpha) + plancherel_norm(F1)


# =========================================================
# 6. PICARD ITERATION
# =========================================================
@dataclass(frozen=True)
class FixedPointConfig:
    p: float
    epsilon: float
    horizon: float = 40.0
    time_nodes: int = 41
    max_iters: int = 15
    tol: float = 1e-8
    r: float = 2.0
    theorem: Theorem = Theorem.T12
    q: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "theorem", Theorem(self.theorem))
        if not self.p > 1:
            raise InputError(f"p must exceed 1, got {self.p}")
        if self.q is not None and not self.q > 1:
            raise InputError(f"q must exceed 1, got {self.q}")
        if not self.epsilon > 0:
            raise InputError(f"epsilon must be positive, got {self.epsilon}")
        if not self.r > 1:
            raise InputError(f"contraction margin r must exceed 1, got {self.r}")
        if self.max_iters < 1 or not self.tol > 0:
            raise InputError("max_iters must be >= 1 and tol positive")
        time_grid(self.horizon, self.time_nodes)

    @property
    def q_exponent(self) -> float:
        return self.p if self.q is None else self.q

    def times(self) -> np.ndarray:
        return time_grid(self.horizon, self.time_nodes)

    def refined(self) -> "FixedPointConfig":
        """Same window with every time step halved."""
        return replace(self, time_nodes=2 * self.time_nodes - 1)


@dataclass
class ConvergenceReport:
    iters: int
    diffs: list[float]
    ratios: list[float]
    final_x_norm: float
    converged: bool
    epsilon: float
    linear_x_norm: float
    a_emp: float
    bound_ok: bool
    iterate_norms: list[float] = field(default_factory=list)
    lipschitz_estimates: list[float] = field(default_factory=list)
    tol: float = 0.0
    quadrature_delta: float | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def contracting(self) -> bool:
        return all(r < 1.0 for r in self.ratios)

    @property
    def verdict(self) -> bool:
        stable = self.quadrature_delta is None or self.quadrature_delta < 0.05
        return bool(self.converged and self.contracting and self.bound_ok and stable)

    def to_json(self) -> dict:
        return {
            "iters": self.iters,
            "diffs": list(self.diffs),
            "ratios": list(self.ratios),
            "final_x_norm": self.final_x_norm,
            "verdict": self.verdict,
            "converged": self.converged,
            "epsilon": self.epsilon,
            "tol": self.tol,
            "linear_x_norm": self.linear_x_norm,
            "a_emp": self.a_emp,
            "bound_ok": self.bound_ok,
            "lipschitz_estimates": list(self.lipschitz_estimates),
            "quadrature_delta": self.quadrature_delta,
            "flags": list(self.flags),
        }

    def to_frame(self) -> pd.DataFrame:
        ratios = [float("nan")] + list(self.ratios)
        return pd.DataFrame({"iter": np.arange(1, len(self.diffs) + 1), "x_diff": self.diffs,
                             "ratio": ratios[: len(self.diffs)]})


def _check_step(diffs: list[float], ratios: list[float], epsilon: float) -> None:
    last = diffs[-1]
    if not np.isfinite(last):
        raise NonContractionError(f"X-norm difference became non-finite at epsilon={epsilon:.6g}",
                                  epsilon=epsilon, diffs=diffs)
    tail = ratios[-DIVERGENCE_STREAK:]
    if len(tail) == DIVERGENCE_STREAK and all(r > 1.0 for r in tail):
        raise NonContractionError(
            f"difference ratio exceeded 1 for {DIVERGENCE_STREAK} consecutive iterations at epsilon={epsilon:.6g}",
            epsilon=epsilon, diffs=diffs,
        )


def _ratio(current: float, previous: float) -> float:
    if previous == 0:
        return 0.0 if current == 0 else float("inf")
    return float(current / previous)


def _lipschitz(diffs: list[float], norms: list[float], p: float) -> list[float]:
    """B_j = d_{j+1} / (d_j · 2·max(‖u^j‖, ‖u^{j−1}‖)^{p−1}); norms[0] is ‖u^lin‖."""
    out = []
    for j in range(1, len(diffs)):
        scale = 2.0 * max(norms[j], norms[j - 1]) ** (p - 1.0)
        denom = diffs[j - 1] * scale
        out.append(float(diffs[j] / denom) if denom > 0 else 0.0)
    return out


def _require_data_size(size: float, epsilon: float) -> None:
    if size > epsilon * (1.0 + 1e-9):
        raise InputError(f"data size {size:.6g} exceeds epsilon={epsilon:.6g}")


def _next_iterate(step, epsilon: float, diffs: list[float]):
    try:
        return step()
    except NonFiniteValues as exc:
        raise NonContractionError(f"iterate became non-finite at epsilon={epsilon:.6g}", epsilon=epsilon,
                                  diffs=diffs) from exc


def picard_iterate(
    F0: CoefficientField,
    F1: CoefficientField,
    config: FixedPointConfig,
    profile: WeightProfile,
    params: ModelParams,
    pgrid: PhysicalGrid,
    plan: TransformPlan | None = None,
) -> tuple[Trajectory, ConvergenceReport]:
    """u⁰ = u^lin, u^{j+1} = u^lin + Duhamel(|u^j|^p) on the whole window."""
    require_exponent(config.theorem, config.p, params)
    if config.theorem is Theorem.T14 and not params.m > 0:
        raise DomainError(f"Theorem 1.4 needs m > 0, got m={params.m}")
    size = coefficient_data_size(F0, F1, params.alpha)
    _require_data_size(size, config.epsilon)
    plan = plan if plan is not None else TransformPlan(F0.grid, pgrid)

    lin = linear_part(config.times(), F0, F1, params)
    lin_norm = x_norm(lin, profile)
    current = lin
    diffs: list[float] = []
    ratios: list[float] = []
    norms = [lin_norm]
    converged = False
    for iteration in range(1, config.max_iters + 1):
        following = _next_iterate(
            lambda: lin + duhamel_trajectory(source_history(current, config.p, pgrid, plan), params),
            config.epsilon, diffs,
        )
        diffs.append(x_norm(following - current, profile))
        if len(diffs) > 1:
            ratios.append(_ratio(diffs[-1], diffs[-2]))
        norms.append(x_norm(following, profile))
        log_event(logger, "picard_iteration", iter=iteration, x_diff=diffs[-1],
                  ratio=ratios[-1] if ratios else None, epsilon=config.epsilon)
        _check_step(diffs, ratios, config.epsilon)
        current = following
        if diffs[-1] < config.tol:
            converged = True
            break

    report = _build_report(diffs, ratios, norms, config, size, lin_norm, converged)
    observe_iterations("picard", report.iters)
    return current.marked(converged), report


def _build_report(diffs, ratios, norms, config: FixedPointConfig, size: float, lin_norm: float,
                  converged: bool) -> ConvergenceReport:
    a_emp = lin_norm / size if size > 0 else 0.0
    final = norms[-1]
    # ‖u‖_X ≤ 2R/r with R = r·A·ε
    bound_ok = final <= 2.0 * a_emp * config.epsilon * (1.0 + 1e-12)
    report = ConvergenceReport(
        iters=len(diffs), diffs=diffs, ratios=ratios, final_x_norm=final, converged=converged,
        epsilon=config.epsilon, linear_x_norm=lin_norm, a_emp=a_emp, bound_ok=bool(bound_ok),
        iterate_norms=list(norms), lipschitz_estimates=_lipschitz(diffs, norms, config.p), tol=config.tol,
    )
    log_event(logger, "picard_done", iters=report.iters, converged=converged, final_x_norm=final,
              bound_ok=report.bound_ok)
    return report


def fixed_point_residual(traj: Trajectory, F0: CoefficientField, F1: CoefficientField, config: FixedPointConfig,
                         profile: WeightProfile, params: ModelParams, pgrid: PhysicalGrid,
                         plan: TransformPlan | None = None) -> float:
    """x_norm(N(u) − u) for one further application of the Duhamel operator."""
    plan = plan if plan is not None else TransformPlan(F0.grid, pgrid)
    lin = linear_part(traj.times, F0, F1, params)
    image = lin + duhamel_trajectory(source_history(traj, config.p, pgrid, plan), params)
    return x_norm(image - traj, profile)


def quadrature_refinement_delta(
    F0: CoefficientField, F1: CoefficientField, config: FixedPointConfig, profile: WeightProfile,
    params: ModelParams, pgrid: PhysicalGrid, report: ConvergenceReport, plan: TransformPlan | None = None,
) -> float:
    """Relative change of the final X-norm when every time step is halved."""
    _, fine = picard_iterate(F0, F1, config.refined(), profile, params, pgrid, plan)
    if report.final_x_norm == 0:
        return 0.0 if fine.final_x_norm == 0 else float("inf")
    delta = abs(fine.final_x_norm - report.final_x_norm) / report.final_x_norm
    report.quadrature_delta = float(delta)
    return float(delta)


def coupled_iterate(
    F0u: CoefficientField,
    F1u: CoefficientField,
    F0v: CoefficientField,
    F1v: CoefficientField,
    config: FixedPointConfig,
    params: ModelParams,
    pgrid: PhysicalGrid,
    plan: TransformPlan | None = None,
) -> tuple[Trajectory, Trajectory, ConvergenceReport]:
    """u ← |v|^p and v ← |u|^q iterated together in the Z norm."""
    if not params.m > 0:
        raise DomainError("the coupled system is treated for m > 0")
    require_exponent(Theorem.T51, config.p, params, "p")
    require_exponent(Theorem.T51, config.q_exponent, params, "q")
    profile = WeightProfile(WeightTag.Z_MASS, params)
    size = coefficient_data_size(F0u, F1u, params.alpha) + coefficient_data_size(F0v, F1v, params.alpha)
    _require_data_size(size, config.epsilon)
    plan = plan if plan is not None else TransformPlan(F0u.grid, pgrid)

    times = config.times()
    lin_u = linear_part(times, F0u, F1u, params)
    lin_v = linear_part(times, F0v, F1v, params)
    lin_norm = x_norm(lin_u, profile, partner=lin_v)
    u, v = lin_u, lin_v
    diffs: list[float] = []
    ratios: list[float] = []
    norms = [lin_norm]
    converged = False
    for iteration in range(1, config.max_iters + 1):
        next_u, next_v = _next_iterate(
            lambda: (lin_u + duhamel_trajectory(source_history(v, config.p, pgrid, plan), params),
                     lin_v + duhamel_trajectory(source_history(u, config.q_exponent, pgrid, plan), params)),
            config.epsilon, diffs,
        )
        # the larger component difference drives stopping so v = u reproduces the single equation
        diffs.append(max(x_norm(next_u - u, profile), x_norm(next_v - v, profile)))
        if len(diffs) > 1:
            ratios.append(_ratio(diffs[-1], diffs[-2]))
        norms.append(x_norm(next_u, profile, partner=next_v))
        log_event(logger, "coupled_iteration", iter=iteration, x_diff=diffs[-1],
                  ratio=ratios[-1] if ratios else None, epsilon=config.epsilon)
        _check_step(diffs, ratios, config.epsilon)
        u, v = next_u, next_v
        if diffs[-1] < config.tol:
            converged = True
            break

    report = _build_report(diffs, ratios, norms, config, size, lin_norm, converged)
    observe_iterations("coupled", report.iters)
    return u.marked(converged), v.marked(converged), report


# =========================================================
# 7. NONLINEAR DECAY AND SOURCE BOUNDS
# =========================================================
_THEOREM_TAGS = {
    Theorem.T12: EnvelopeTag.NONLIN_L1,
    Theorem.T13: EnvelopeTag.NONLIN_L2,
    Theorem.T14: EnvelopeTag.NONLIN_MASS,
}
NONLINEAR_INDICES = ((0, "0"), (0, "alpha"), (1, "0"))


def verify_nonlinear_decay(traj: Trajectory, params: ModelParams, norms: DataNorms, theorem) -> list[DecayReport]:
    """One DecayReport per (i, j) ∈ {(0,0), (0,α), (1,0)}."""
    theorem = Theorem(theorem)
    if theorem not in _THEOREM_TAGS:
        raise InputError(f"no nonlinear envelope for {theorem.value}")
    if traj.converged is not True:
        raise InputError("nonlinear decay is verified on converged trajectories only")
    flags = []
    if theorem is Theorem.T13:
        # L²-only regime: l1 is dropped from the norms and envelopes
        norms = norms.without_l1()
        flags.append("l1_omitted")
    reports = []
    for i, j in NONLINEAR_INDICES:
        kind = EnvelopeKind(_THEOREM_TAGS[theorem], i, j)
        measured = [measured_norm(u, du, kind, params.alpha) for u, du in traj.states]
        envelope = [decay_envelope(float(t), kind, params, norms) for t in traj.times]
        report = build_report(traj.times, measured, envelope, params, kind,
                              metadata={"theorem": theorem.value, "flags": list(flags)})
        reports.append(report)
        log_event(logger, "nonlinear_decay", kind=kind.label, dominance=report.dominance_constant)
    return reports


def source_norm_series(traj: Trajectory, p: float, pgrid: PhysicalGrid,
                       plan: TransformPlan | None = None) -> pd.DataFrame:
    """Per time: ‖u‖_{L^p}^p and ‖u‖_{L^{2p}}^p of the reconstructed field."""
    plan = plan if plan is not None else TransformPlan(traj.grid, pgrid)
    lp, l2p = [], []
    for u, _ in traj.states:
        field_ = PhysicalField(pgrid, reconstruct_real(u, pgrid, plan))
        lp.append(lq_norm(field_, p) ** p)
        l2p.append(lq_norm(field_, 2.0 * p) ** p)
    return pd.DataFrame({"t": traj.times, "lp_p": lp, "l2p_p": l2p})


def source_envelope_rates(profile: WeightProfile, p: float) -> tuple[float, float]:
    """Polynomial decay rates of ‖u‖_{L^p}^p and ‖u‖_{L^{2p}}^p implied by the profile through GN."""
    Q, alpha = profile.params.Q, profile.params.alpha
    rates = []
    for q in (p, 2.0 * p):
        theta = min(max((0.5 - 1.0 / q) * Q / alpha, 0.0), 1.0)
        rates.append(p * (profile.polynomial_rate + 0.5 * theta))
    return rates[0], rates[1]


def check_source_decay(series: pd.DataFrame, x_norm_value: float, profile: WeightProfile,
                       p: float) -> list[DecayReport]:
    """Dominance of the source norms by (1+τ)^{−rate}·‖u‖_X^p (times e^{−pmτ/2b} for Z_MASS)."""
    times = series["t"].to_numpy(dtype=float)
    scale = x_norm_value ** p
    mass = np.exp(-p * profile.params.mass_rate * times) if profile.tag is WeightTag.Z_MASS else 1.0
    reports = []
    for column, rate, anchor in zip(("lp_p", "l2p_p"), source_envelope_rates(profile, p), ("(4.14)", "(4.15)")):
        measured = series[column].to_numpy(dtype=float)
        envelope = (1.0 + times) ** -rate * scale * mass
        reports.append(DecayReport(
            times=times, measured=measured, envelope=envelope,
            fitted_slope=fit_decay_slope(times, measured), theoretical_slope=-rate,
            dominance_constant=dominance_constant(measured, envelope),
            kind=f"SOURCE_{column.upper()}", anchor=f"Theorem 2.2 {anchor}",
            metadata={"profile": profile.tag.value, "p": p},
        ))
    return reports


# =========================================================
# 8. EPSILON CALIBRATION
# =========================================================
@dataclass
class EpsilonCalibration:
    epsilon: float
    breaking_scale: float | None
    attempts: list[dict]

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "breaking_scale": self.breaking_scale, "attempts": list(self.attempts)}


def _contracts(F0, F1, amplitude, config, profile, params, pgrid, plan) -> tuple[bool, dict]:
    size = coefficient_data_size(F0, F1, params.alpha)
    scale = amplitude / size
    trial = replace(config, epsilon=amplitude)
    try:
        _, report = picard_iterate(F0.scaled(scale), F1.scaled(scale), trial, profile, params, pgrid, plan)
    except NonContractionError as exc:
        return False, {"epsilon": amplitude, "contracts": False, "diffs": exc.diffs}
    ok = report.converged and report.contracting
    return ok, {"epsilon": amplitude, "contracts": ok, "iters": report.iters}


def calibrate_epsilon(
    F0: CoefficientField,
    F1: CoefficientField,
    config: FixedPointConfig,
    profile: WeightProfile,
    params: ModelParams,
    pgrid: PhysicalGrid,
    start: float = 1e-3,
    max_doublings: int = 12,
    bisections: int = 6,
) -> EpsilonCalibration:
    """Largest data amplitude with observed contraction, by doubling then bisection."""
    if coefficient_data_size(F0, F1, params.alpha) == 0:
        raise InputError("calibration needs nonzero data")
    plan = TransformPlan(F0.grid, pgrid)
    attempts = []
    good, bad = None, None
    amplitude = start
    for _ in range(max_doublings):
        ok, record = _contracts(F0, F1, amplitude, config, profile, params, pgrid, plan)
        attempts.append(record)
        if ok:
            good = amplitude
            amplitude *= 2.0
        else:
            bad = amplitude
            break
    if good is None:
        raise NonContractionError(f"no contraction even at epsilon={start:.6g}", epsilon=start)
    if bad is not None:
        for _ in range(bisections):
            middle = math.sqrt(good * bad)
            ok, record = _contracts(F0, F1, middle, config, profile, params, pgrid, plan)
            attempts.append(record)
            if ok:
                good = middle
            else:
                bad = middle
    log_event(logger, "epsilon_calibration", epsilon=good, breaking_scale=bad, attempts=len(attempts))
    return EpsilonCalibration(good, bad, attempts)

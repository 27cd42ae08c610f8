"""
Norms of evolved fields and their comparison with the theoretical decay envelopes.

Every envelope is evaluated with constant 1; the comparison is expressed as a
dominance constant sup(measured/envelope) over a time window, never as an
equality of rates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from heisenwave.group_fourier import mode_frequencies, plancherel_norm, weighted_plancherel_norm
from heisenwave.models import CoefficientField, DataNorms, ModelParams, MultiIndex
from heisenwave.propagator import evolve_field
from Runtime.activity_logging import get_logger, log_event
from Runtime.error_handling import DomainError, InputError

logger = get_logger("decay_analysis")

H_ALPHA_CONVENTION = "sqrt(L2^2 + Hdot_alpha^2)"


# =========================================================
# 1. ENVELOPE KINDS
# =========================================================
class EnvelopeTag(str, Enum):
    L2_MASS = "L2_MASS"
    HALPHA_MASS = "HALPHA_MASS"
    DT_MASS = "DT_MASS"
    L2_L1 = "L2_L1"
    HALPHA_L1 = "HALPHA_L1"
    DT_L1 = "DT_L1"
    NONLIN_L1 = "NONLIN_L1"
    NONLIN_L2 = "NONLIN_L2"
    NONLIN_MASS = "NONLIN_MASS"


ANCHORS = {
    EnvelopeTag.L2_MASS: "Theorem 1.1 (1.1)",
    EnvelopeTag.HALPHA_MASS: "Theorem 1.1 (1.2)",
    EnvelopeTag.DT_MASS: "Theorem 1.1 (1.3)",
    EnvelopeTag.L2_L1: "Theorem 1.1 (1.4)",
    EnvelopeTag.HALPHA_L1: "Theorem 1.1 (1.5)",
    EnvelopeTag.DT_L1: "Theorem 1.1 (1.6)",
    EnvelopeTag.NONLIN_L1: "Theorem 1.2",
    EnvelopeTag.NONLIN_L2: "Theorem 1.3",
    EnvelopeTag.NONLIN_MASS: "Theorem 1.4",
}

_LINEAR_INDICES = {
    EnvelopeTag.L2_MASS: (0, "0"),
    EnvelopeTag.HALPHA_MASS: (0, "alpha"),
    EnvelopeTag.DT_MASS: (1, "0"),
    EnvelopeTag.L2_L1: (0, "0"),
    EnvelopeTag.HALPHA_L1: (0, "alpha"),
    EnvelopeTag.DT_L1: (1, "0"),
}

LINEAR_TAGS = tuple(_LINEAR_INDICES)
NONLINEAR_TAGS = (EnvelopeTag.NONLIN_L1, EnvelopeTag.NONLIN_L2, EnvelopeTag.NONLIN_MASS)


@dataclass(frozen=True)
class EnvelopeKind:
    """Envelope selector; (i, j) picks ∂_t^i (−L)^{j/2}, with j stored as 0 or 'alpha'."""

    tag: EnvelopeTag
    i: int = 0
    j: str = "0"

    def __post_init__(self):
        object.__setattr__(self, "tag", EnvelopeTag(self.tag))
        if self.tag in _LINEAR_INDICES:
            object.__setattr__(self, "i", _LINEAR_INDICES[self.tag][0])
            object.__setattr__(self, "j", _LINEAR_INDICES[self.tag][1])
        if (self.i, self.j) not in {(0, "0"), (0, "alpha"), (1, "0")}:
            raise InputError(f"(i, j)=({self.i}, {self.j}) is not one of (0,0), (0,alpha), (1,0)")

    @classmethod
    def parse(cls, text: str) -> "EnvelopeKind":
        """'L2_L1' or 'NONLIN_L1:0,alpha'."""
        tag, _, rest = text.partition(":")
        if not rest:
            return cls(EnvelopeTag(tag.strip().upper()))
        i_text, _, j_text = rest.partition(",")
        return cls(EnvelopeTag(tag.strip().upper()), int(i_text), j_text.strip() or "0")

    @property
    def anchor(self) -> str:
        return ANCHORS[self.tag]

    @property
    def label(self) -> str:
        if self.tag in _LINEAR_INDICES:
            return self.tag.value
        return f"{self.tag.value}:{self.i},{self.j}"

    def j_value(self, alpha: float) -> float:
        return alpha if self.j == "alpha" else 0.0

    @property
    def measures_time_derivative(self) -> bool:
        return self.i == 1

    @property
    def measures_seminorm(self) -> bool:
        return self.j == "alpha"


# =========================================================
# 2. NORMS
# =========================================================
def sobolev_seminorm(F: CoefficientField, alpha: float) -> float:
    """‖(−L)^{α/2} f‖ via the multiplier (|λ|μ_k)^{α/2}."""
    if alpha < 0:
        raise InputError(f"Sobolev order must be nonnegative, got {alpha}")
    if alpha == 0:
        return plancherel_norm(F)
    return weighted_plancherel_norm(F, mode_frequencies(F.grid) ** (alpha / 2.0))


def h_alpha_norm(F: CoefficientField, alpha: float) -> float:
    return float(math.hypot(plancherel_norm(F), sobolev_seminorm(F, alpha)))


def zone_threshold(k: MultiIndex, params: ModelParams) -> float:
    """(1/μ_k)[½(b²/4 − m)]^{1/α}: modes with |λ| below it form the low zone."""
    gap = params.critical_gap
    if gap <= 0:
        raise DomainError("zone splitting needs b^2 > 4m")
    mu = 2 * sum(k) + params.n
    return float((0.5 * gap) ** (1.0 / params.alpha) / mu)


def zone_mask(F: CoefficientField, params: ModelParams) -> np.ndarray:
    """True on (λ, k) modes in the low zone; shape (L, R)."""
    if params.critical_gap <= 0:
        raise DomainError("zone splitting needs b^2 > 4m")
    mu = 2 * F.grid.rows.degrees() + F.grid.n
    thresholds = (0.5 * params.critical_gap) ** (1.0 / params.alpha) / mu
    return np.abs(F.grid.lambda_nodes)[:, None] < thresholds[None, :]


def zone_split_norm(F: CoefficientField, params: ModelParams) -> tuple[float, float]:
    """(low, high) parts of the squared Plancherel norm; they sum to the total."""
    energy = (np.abs(F.values) ** 2).sum(axis=2)
    weights = F.grid.measure()[:, None]
    mask = zone_mask(F, params)
    low = float(np.sum(weights * energy * mask))
    high = float(np.sum(weights * energy * ~mask))
    return low, high


def measured_norm(u: CoefficientField, du: CoefficientField, kind: EnvelopeKind, alpha: float) -> float:
    if kind.measures_time_derivative:
        return plancherel_norm(du)
    if kind.measures_seminorm:
        return sobolev_seminorm(u, alpha)
    return plancherel_norm(u)


# =========================================================
# 3. ENVELOPES
# =========================================================
def decay_envelope(t: float, kind: EnvelopeKind, params: ModelParams, norms: DataNorms) -> float:
    """Right-hand side of the selected estimate with implicit constant 1."""
    if t < 0:
        raise InputError("time must be nonnegative")
    b, m, alpha, Q = params.b, params.m, params.alpha, params.Q
    mass = math.exp(-params.mass_rate * t)
    base = 1.0 + t
    q_rate = Q / (4.0 * alpha)
    tag = kind.tag

    if tag is EnvelopeTag.L2_MASS:
        return math.exp((-b / 2.0 + math.sqrt(params.critical_gap)) * t) * norms.l2
    if tag is EnvelopeTag.HALPHA_MASS:
        return base ** -0.5 * mass * norms.a_alpha
    if tag is EnvelopeTag.DT_MASS:
        return (1.0 / base + m) * mass * norms.a_alpha
    if tag is EnvelopeTag.L2_L1:
        return base ** -q_rate * mass * (norms.l1 + norms.l2)
    if tag is EnvelopeTag.HALPHA_L1:
        return base ** (-q_rate - 0.5) * mass * (norms.l1 + norms.a_alpha)
    if tag is EnvelopeTag.DT_L1:
        return (base ** (-q_rate - 1.0) + m * base ** -q_rate) * mass * (norms.l1 + norms.a_alpha)

    j_rate = kind.j_value(alpha) / (2.0 * alpha)
    if tag is EnvelopeTag.NONLIN_L1:
        if m != 0:
            raise InputError("the L1-L2 nonlinear envelope is stated for the massless case m = 0")
        return base ** (-q_rate - j_rate - kind.i) * norms.b_alpha
    if tag is EnvelopeTag.NONLIN_L2:
        if m != 0:
            raise InputError("the L2 nonlinear envelope is stated for the massless case m = 0")
        return base ** (-j_rate - kind.i) * norms.a_alpha
    if tag is EnvelopeTag.NONLIN_MASS:
        return (base ** (-j_rate - kind.i) + m * kind.i) * mass * norms.a_alpha
    raise InputError(f"unknown envelope kind {tag}")


def weak_envelope(t: float, params: ModelParams, norms: DataNorms) -> float:
    """e^{−mt/2b}·‖(u0,u1)‖_{L²}, which dominates the L2_MASS envelope."""
    return math.exp(-params.mass_rate * t) * norms.l2


# =========================================================
# 4. REPORTS
# =========================================================
@dataclass
class DecayReport:
    times: np.ndarray
    measured: np.ndarray
    envelope: np.ndarray
    fitted_slope: float
    theoretical_slope: float
    dominance_constant: float
    kind: str = ""
    anchor: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.measured = np.asarray(self.measured, dtype=float)
        self.envelope = np.asarray(self.envelope, dtype=float)
        if not (self.times.shape == self.measured.shape == self.envelope.shape):
            raise InputError("decay report series must have equal length")

    @property
    def ratios(self) -> np.ndarray:
        return _ratios(self.measured, self.envelope)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.times, "measured": self.measured,
                             "envelope": self.envelope, "ratio": self.ratios})

    def window_constant(self, t_max: float) -> float:
        mask = self.times <= t_max
        return dominance_constant(self.measured[mask], self.envelope[mask])

    def window_drift(self, split: float | None = None) -> float:
        """Relative change of the dominance constant between [0, split] and the whole window."""
        split = float(self.times[-1] / 2.0) if split is None else split
        early = self.window_constant(split)
        if self.dominance_constant == 0:
            return 0.0
        return float(abs(self.dominance_constant - early) / self.dominance_constant)

    def summary(self) -> dict:
        return {
            "anchor": self.anchor,
            "kind": self.kind,
            "fitted_slope": self.fitted_slope,
            "theoretical_slope": self.theoretical_slope,
            "dominance_constant": self.dominance_constant,
            "window_drift": self.window_drift(),
            **self.metadata,
        }


def _ratios(measured: np.ndarray, envelope: np.ndarray) -> np.ndarray:
    measured = np.asarray(measured, dtype=float)
    envelope = np.asarray(envelope, dtype=float)
    out = np.zeros_like(measured)
    positive = envelope > 0
    out[positive] = measured[positive] / envelope[positive]
    out[~positive & (measured > 0)] = np.inf
    return out


def dominance_constant(measured, envelope) -> float:
    ratios = _ratios(measured, envelope)
    return float(ratios.max()) if ratios.size else 0.0


def fit_decay_slope(times, series, params: ModelParams | None = None) -> float:
    """Least-squares slope of log(series·e^{mt/2b}) against log(1+t) over the tail half."""
    times = np.asarray(times, dtype=float)
    series = np.asarray(series, dtype=float)
    if times.size < 2:
        return float("nan")
    tail = times >= times[0] + 0.5 * (times[-1] - times[0])
    if tail.sum() < 2:
        tail = np.zeros_like(tail)
        tail[-2:] = True
    rate = params.mass_rate if params is not None else 0.0
    values = series[tail] * np.exp(rate * times[tail])
    positive = values > 0
    if positive.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log1p(times[tail][positive]), np.log(values[positive]), 1)
    return float(slope)


def build_report(
    times: Sequence[float],
    measured: Sequence[float],
    envelope: Sequence[float],
    params: ModelParams | None,
    kind: EnvelopeKind | None = None,
    metadata: dict | None = None,
) -> DecayReport:
    times = np.asarray(times, dtype=float)
    measured = np.asarray(measured, dtype=float)
    envelope = np.asarray(envelope, dtype=float)
    return DecayReport(
        times=times,
        measured=measured,
        envelope=envelope,
        fitted_slope=fit_decay_slope(times, measured, params),
        theoretical_slope=fit_decay_slope(times, envelope, params),
        dominance_constant=dominance_constant(measured, envelope),
        kind=kind.label if kind else "synthetic",
        anchor=kind.anchor if kind else "",
        metadata=dict(metadata or {}),
    )


# =========================================================
# 5. MEASUREMENT
# =========================================================
def measure_decay(
    F0: CoefficientField,
    F1: CoefficientField,
    params: ModelParams,
    norms: DataNorms,
    times: Sequence[float],
    kind: EnvelopeKind,
    evolve: Callable = evolve_field,
) -> DecayReport:
    """Evolve to each time, measure the norm selected by kind and compare with its envelope."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise InputError("measure_decay needs at least one time")
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise InputError("times must be nonnegative and strictly increasing")

    measured = np.empty(times.size)
    envelope = np.empty(times.size)
    for idx, t in enumerate(times):
        u, du = evolve(float(t), F0, F1, params)
        measured[idx] = measured_norm(u, du, kind, params.alpha)
        envelope[idx] = decay_envelope(float(t), kind, params, norms)

    report = build_report(times, measured, envelope, params, kind,
                          metadata={"h_alpha_convention": H_ALPHA_CONVENTION})
    log_event(logger, "measure_decay", kind=kind.label, samples=times.size,
              fitted_slope=report.fitted_slope, dominance=report.dominance_constant)
    return report


def log_spaced_times(t_max: float, count: int, t_min: float = 0.0) -> np.ndarray:
    """count points from t_min to t_max, evenly spaced in log(1+t)."""
    if count < 1 or t_max <= t_min:
        raise InputError("need count >= 1 and t_max > t_min")
    return np.expm1(np.linspace(math.log1p(t_min), math.log1p(t_max), count))

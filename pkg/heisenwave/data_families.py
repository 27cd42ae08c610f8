"""
Named initial-data families and JSON ingestion of sampled data.

gaussian         separable Heisenberg-dilated Gaussian, exact factor functions kept
low-freq-spike   spectral data supported below every zone threshold
high-freq-spike  spectral data supported well above the zone thresholds
file             sampled u0 (and optionally u1) read from JSON

Spectral families are defined by their coefficients; the physical fields
needed for L¹ norms are their reconstructions on the physical grid.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from heisenwave.analytics.decay_analysis import zone_threshold
from heisenwave.group_fourier import TransformPlan, data_norms, forward_transform, inverse_on_grid
from heisenwave.models import (
    CoefficientField,
    DataNorms,
    ModelParams,
    PhysicalField,
    PhysicalGrid,
    SeparableField,
    SpectralGrid,
)
from Runtime.activity_logging import get_logger, log_event
from Runtime.error_handling import ConfigurationError, InputError

logger = get_logger("data_families")

FAMILIES = ("gaussian", "low-freq-spike", "high-freq-spike", "file")
CALIBRATION_WIDTHS = (0.85, 1.0, 1.2)


@dataclass(frozen=True, eq=False)
class InitialData:
    label: str
    u0: PhysicalField
    u1: PhysicalField
    F0: CoefficientField
    F1: CoefficientField
    norms: DataNorms

    def scaled(self, factor: float) -> "InitialData":
        return InitialData(
            self.label,
            PhysicalField(self.u0.grid, self.u0.values * factor),
            PhysicalField(self.u1.grid, self.u1.values * factor),
            self.F0.scaled(factor),
            self.F1.scaled(factor),
            DataNorms(*(abs(factor) * v for v in (self.norms.l1, self.norms.l2, self.norms.h_alpha_seminorm,
                                                  self.norms.l2_u0, self.norms.l2_u1))),
        )


# =========================================================
# 1. GAUSSIANS
# =========================================================
def gaussian_factors(n: int, width: float = 1.0, amplitude: float = 1.0) -> list:
    """exp(−(|x|²+|y|²)/2r² − t²/2r⁴): the unit Gaussian composed with the dilation δ_{1/r}."""
    if not width > 0:
        raise InputError(f"Gaussian width must be positive, got {width}")
    spatial = [lambda v, r=width: np.exp(-0.5 * (np.asarray(v) / r) ** 2) for _ in range(2 * n)]
    central = lambda v, r=width: amplitude * np.exp(-0.5 * (np.asarray(v) / (r * r)) ** 2)  # noqa: E731
    return spatial + [central]


def gaussian(pgrid: PhysicalGrid, width: float = 1.0, amplitude: float = 1.0) -> SeparableField:
    return SeparableField.from_functions(pgrid, gaussian_factors(pgrid.n, width, amplitude))


def dilated_gaussian_family(pgrid: PhysicalGrid, widths: Sequence[float] = CALIBRATION_WIDTHS) -> list[SeparableField]:
    return [gaussian(pgrid, w) for w in widths]


def zero_field(pgrid: PhysicalGrid) -> SeparableField:
    return SeparableField.from_functions(pgrid, [lambda v: np.zeros_like(np.asarray(v, dtype=float))] * pgrid.dimension)


# =========================================================
# 2. SPECTRAL SPIKES
# =========================================================
def _smooth_cutoff(x: np.ndarray, start: float, stop: float) -> np.ndarray:
    """1 below start, 0 above stop, cosine ramp between."""
    ramp = np.clip((x - start) / (stop - start), 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(math.pi * ramp))


def low_frequency_spike(sgrid: SpectralGrid, params: ModelParams, amplitude: float = 1.0) -> CoefficientField:
    """Constant (0,0) entry up to half the k=0 zone threshold, tapering to zero at the threshold."""
    threshold = zone_threshold((0,) * params.n, params)
    lam = np.abs(sgrid.lambda_nodes)
    profile = amplitude * _smooth_cutoff(lam, 0.5 * threshold, threshold * (1.0 - 1e-6))
    if not np.any(profile):
        raise ConfigurationError(
            f"no lambda node lies below the zone threshold {threshold:.6g}; lower lambda_min"
        )
    values = np.zeros(sgrid.shape, dtype=complex)
    values[:, 0, 0] = profile
    return CoefficientField(sgrid, values)


def high_frequency_spike(sgrid: SpectralGrid, params: ModelParams, amplitude: float = 1.0,
                         centre: float | None = None) -> CoefficientField:
    """Log-Gaussian bump in |λ| on the diagonal, centred far above every zone threshold."""
    lam = np.abs(sgrid.lambda_nodes)
    threshold = zone_threshold((0,) * params.n, params)
    centre = float(centre) if centre is not None else math.sqrt(threshold * lam.max()) * 4.0
    centre = min(centre, 0.5 * lam.max())
    if centre <= 4.0 * threshold:
        raise ConfigurationError(f"lambda_max is too small for a high-frequency family above {threshold:.6g}")
    bump = amplitude * np.exp(-0.5 * (np.log(lam / centre) / 0.25) ** 2)
    values = np.zeros(sgrid.shape, dtype=complex)
    diagonal = min(sgrid.rows.size, sgrid.cols.size, 3)
    for k in range(diagonal):
        values[:, k, k] = bump / (k + 1)
    return CoefficientField(sgrid, values)


def physical_from_coefficients(F: CoefficientField, pgrid: PhysicalGrid,
                               plan: TransformPlan | None = None) -> PhysicalField:
    """Real part of the reconstruction; spectral families are conjugate-symmetric in λ."""
    return PhysicalField(pgrid, inverse_on_grid(F, pgrid, plan).real)


# =========================================================
# 3. FILE INGESTION
# =========================================================
def _line_of(text: str, key: str) -> int:
    needle = f'"{key}"'
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return 0


def _field_from_record(record: dict, source: str, text: str, key: str) -> PhysicalField:
    try:
        grid = PhysicalGrid(tuple(record["half_widths"]), tuple(record["counts"]))
    except KeyError as exc:
        raise InputError(f"{source}: line {_line_of(text, key)}: {key} needs {exc.args[0]!r}") from exc
    if "factors" in record:
        factors = [np.asarray(table, dtype=float) for table in record["factors"]]
        return SeparableField.from_factors(grid, factors)
    if "values" in record:
        flat = np.asarray(record["values"], dtype=float)
        expected = int(np.prod(grid.counts))
        if flat.size != expected:
            raise InputError(
                f"{source}: line {_line_of(text, key)}: {key}.values has {flat.size} entries, expected {expected}"
            )
        return PhysicalField(grid, flat.reshape(grid.counts))
    raise InputError(f"{source}: line {_line_of(text, key)}: {key} needs 'factors' or 'values'")


def load_data_file(path: str | Path) -> tuple[PhysicalField, PhysicalField]:
    """Read {"u0": {...}, "u1": {...}} with per-axis 'factors' or row-major 'values'.

    The u1 record is optional and defaults to zero on the u0 grid.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read data file {path}: {exc}") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if "u0" not in payload:
        raise InputError(f"{path}: data file needs a 'u0' record")
    u0 = _field_from_record(payload["u0"], str(path), text, "u0")
    u1 = _field_from_record(payload["u1"], str(path), text, "u1") if "u1" in payload else zero_field(u0.grid)
    if u1.grid != u0.grid:
        raise InputError(f"{path}: u0 and u1 must share one grid")
    return u0, u1


# =========================================================
# 4. ASSEMBLY
# =========================================================
def build_initial_data(
    family: str,
    params: ModelParams,
    sgrid: SpectralGrid,
    pgrid: PhysicalGrid,
    width: float = 1.0,
    amplitude: float = 1.0,
    u1_scale: float = 0.0,
    path: str | Path | None = None,
    plan: TransformPlan | None = None,
) -> InitialData:
    """Physical data, coefficients and data norms for one named family."""
    if family not in FAMILIES:
        raise ConfigurationError(f"unknown data family {family!r}; expected one of {', '.join(FAMILIES)}")
    if family == "gaussian":
        u0 = gaussian(pgrid, width, amplitude)
        u1 = gaussian(pgrid, width, amplitude * u1_scale) if u1_scale else zero_field(pgrid)
        F0 = forward_transform(u0, sgrid)
        F1 = forward_transform(u1, sgrid) if u1_scale else CoefficientField.zeros(sgrid)
    elif family == "file":
        if path is None:
            raise ConfigurationError("data family 'file' needs a path")
        u0, u1 = load_data_file(path)
        F0 = forward_transform(u0, sgrid, plan=plan if plan is not None and plan.pgrid == u0.grid else None)
        F1 = forward_transform(u1, sgrid, plan=plan if plan is not None and plan.pgrid == u1.grid else None)
    else:
        make = low_frequency_spike if family == "low-freq-spike" else high_frequency_spike
        F0 = make(sgrid, params, amplitude)
        F1 = F0.scaled(u1_scale) if u1_scale else CoefficientField.zeros(sgrid)
        plan = plan if plan is not None else TransformPlan(sgrid, pgrid)
        u0 = physical_from_coefficients(F0, pgrid, plan)
        u1 = physical_from_coefficients(F1, pgrid, plan) if u1_scale else zero_field(pgrid)
    norms = data_norms(u0, u1, F0, F1, params)
    log_event(logger, "initial_data", family=family, l1=norms.l1, l2=norms.l2, h_alpha=norms.h_alpha_seminorm)
    return InitialData(family, u0, u1, F0, F1, norms)

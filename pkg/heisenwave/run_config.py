"""
Run configuration: JSON file → validated RunConfig.

Every field has a default, so `{}` is a valid file. Cross-field hypotheses
(b² > 4m, the exponent windows, grid caps) are checked eagerly and reported
with the JSON path and the line where the offending key appears.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from heisenwave.analytics.decay_analysis import LINEAR_TAGS, EnvelopeKind, log_spaced_times
from heisenwave.duhamel import FixedPointConfig, Theorem, WeightTag, admissible_p_range
from heisenwave.models import MAX_HEISENBERG_INDEX, MAX_TRUNCATION_DEGREE, ModelParams, PhysicalGrid
from Runtime.activity_logging import get_logger, log_event
from Runtime.error_handling import ConfigurationError, DomainError, HeisenwaveError

logger = get_logger("run_config")

Experiment = Literal["roundtrip", "simulate-linear", "fit-decay", "verify", "simulate-nonlinear", "simulate-coupled"]
EXPERIMENTS = ("roundtrip", "simulate-linear", "fit-decay", "verify", "simulate-nonlinear", "simulate-coupled")
DEFAULT_PROFILES = {"T12": "X_L1", "T13": "X_L2", "T14": "Z_MASS", "T51": "Z_MASS"}
_ANCHORS = {"T12": "Theorem 1.2", "T13": "Theorem 1.3", "T14": "Theorem 1.4", "T51": "Theorem 5.1"}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSection(_Section):
    n: int = 1
    b: float = 2.0
    m: float = 0.0
    alpha: float = 1.0


class SpectralSection(_Section):
    max_degree: int = Field(6, ge=0)
    col_degree: Optional[int] = Field(None, ge=0)
    lambda_min: float = Field(0.01, gt=0)
    lambda_max: float = Field(12.0, gt=0)
    node_count: int = Field(40, ge=2)
    lambda_map: Literal["log", "linear"] = "log"
    calibrate: bool = True
    plancherel_constant: Optional[float] = Field(None, gt=0)


class PhysicalSection(_Section):
    half_widths: Optional[list[float]] = None
    counts: Optional[list[int]] = None


class DataSection(_Section):
    family: Literal["gaussian", "low-freq-spike", "high-freq-spike", "file"] = "gaussian"
    width: float = Field(1.0, gt=0)
    amplitude: float = 1.0
    u1_scale: float = 0.0
    path: Optional[str] = None


class DecaySection(_Section):
    t_max: float = Field(100.0, gt=0)
    samples: int = Field(64, ge=2)
    kinds: list[str] = Field(default_factory=lambda: [tag.value for tag in LINEAR_TAGS])
    window_split: Optional[float] = None
    drift_tolerance: float = Field(0.10, gt=0)
    synthetic_rate: Optional[float] = None

    @field_validator("kinds")
    @classmethod
    def _known_kinds(cls, kinds: list[str]) -> list[str]:
        for text in kinds:
            EnvelopeKind.parse(text)
        return kinds


class FixedPointSection(_Section):
    theorem: Literal["T12", "T13", "T14", "T51"] = "T12"
    p: float = 2.0
    q: Optional[float] = None
    epsilon: Optional[float] = Field(None, gt=0)
    profile: Optional[Literal["X_L1", "X_L2", "Z_MASS"]] = None
    horizon: float = Field(40.0, gt=0)
    time_nodes: int = Field(41, ge=3)
    max_iters: int = Field(15, ge=1)
    tol: float = Field(1e-8, gt=0)
    r: float = Field(2.0, gt=1)
    reduced_half_widths: Optional[list[float]] = None
    reduced_counts: Optional[list[int]] = None
    calibration_start: float = Field(1e-3, gt=0)
    refinement_check: bool = True
    v_scale: float = Field(0.5, ge=0, le=1)
    v_width: Optional[float] = Field(None, gt=0)


class VerifySection(_Section):
    sample_count: int = Field(1024, ge=16)
    t_grid: Optional[list[float]] = None
    gn_exponents: list[float] = Field(default_factory=lambda: [3.0, 4.0])


class RunConfig(_Section):
    experiment: Experiment = "verify"
    output_dir: str = "out"
    seed: Optional[int] = None
    model: ModelSection = Field(default_factory=ModelSection)
    spectral: SpectralSection = Field(default_factory=SpectralSection)
    physical: PhysicalSection = Field(default_factory=PhysicalSection)
    data: DataSection = Field(default_factory=DataSection)
    decay: DecaySection = Field(default_factory=DecaySection)
    fixed_point: FixedPointSection = Field(default_factory=FixedPointSection)
    verify: VerifySection = Field(default_factory=VerifySection)

    # ---- domain objects -------------------------------------------------
    def model_params(self, **overrides) -> ModelParams:
        values = self.model.model_dump()
        values.update(overrides)
        return ModelParams(**values)

    def physical_grid(self) -> PhysicalGrid:
        n = self.model.n
        half_widths = self.physical.half_widths or [6.0] * (2 * n) + [8.0]
        counts = self.physical.counts or [48] * (2 * n + 1)
        return PhysicalGrid(tuple(half_widths), tuple(counts))

    def reduced_grid(self) -> PhysicalGrid:
        n = self.model.n
        half_widths = self.fixed_point.reduced_half_widths or [4.0] * (2 * n + 1)
        counts = self.fixed_point.reduced_counts or [25] * (2 * n + 1)
        return PhysicalGrid(tuple(half_widths), tuple(counts))

    def profile_tag(self) -> WeightTag:
        return WeightTag(self.fixed_point.profile or DEFAULT_PROFILES[self.fixed_point.theorem])

    def fixed_point_config(self, epsilon: float) -> FixedPointConfig:
        fp = self.fixed_point
        return FixedPointConfig(p=fp.p, epsilon=epsilon, horizon=fp.horizon, time_nodes=fp.time_nodes,
                                max_iters=fp.max_iters, tol=fp.tol, r=fp.r, theorem=Theorem(fp.theorem), q=fp.q)

    def decay_times(self) -> np.ndarray:
        return log_spaced_times(self.decay.t_max, self.decay.samples)

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


# =========================================================
# DIAGNOSTICS
# =========================================================
def locate(text: str, path: tuple) -> int:
    """1-based line of the last key in path, searching each key after the previous one; 0 if absent."""
    lines = text.splitlines()
    start = 0
    found = 0
    for key in path:
        if not isinstance(key, str):
            continue
        needle = f'"{key}"'
        for number in range(start, len(lines)):
            if needle in lines[number]:
                found = number + 1
                start = number
                break
        else:
            return found
    return found


def _where(source: str, text: str, path: tuple) -> str:
    dotted = ".".join(str(p) for p in path) or "<root>"
    line = locate(text, path)
    return f"{source}:{line}: {dotted}" if line else f"{source}: {dotted}"


def _check_cross_fields(config: RunConfig, source: str, text: str) -> None:
    model = config.model
    if not 1 <= model.n <= MAX_HEISENBERG_INDEX:
        raise ConfigurationError(f"{_where(source, text, ('model', 'n'))}: n must lie in [1, {MAX_HEISENBERG_INDEX}]")
    if model.b * model.b <= 4.0 * model.m:
        raise DomainError(
            f"{_where(source, text, ('model', 'm'))}: Theorem 1.1 hypothesis b^2 > 4m violated "
            f"(b^2={model.b * model.b:.6g}, 4m={4.0 * model.m:.6g})"
        )
    try:
        config.model_params()
    except HeisenwaveError as exc:
        raise type(exc)(f"{_where(source, text, ('model',))}: {exc}") from exc

    spectral = config.spectral
    if spectral.max_degree > MAX_TRUNCATION_DEGREE:
        raise ConfigurationError(
            f"{_where(source, text, ('spectral', 'max_degree'))}: max_degree is capped at {MAX_TRUNCATION_DEGREE}"
        )
    if spectral.col_degree is not None and spectral.col_degree > spectral.max_degree:
        raise ConfigurationError(f"{_where(source, text, ('spectral', 'col_degree'))}: col_degree exceeds max_degree")
    if spectral.lambda_max <= spectral.lambda_min:
        raise ConfigurationError(f"{_where(source, text, ('spectral', 'lambda_max'))}: lambda_max <= lambda_min")
    if spectral.node_count % 2:
        raise ConfigurationError(
            f"{_where(source, text, ('spectral', 'node_count'))}: node_count must be even (symmetric lambda grid)"
        )

    dimension = 2 * model.n + 1
    for section, key in (("physical", "half_widths"), ("physical", "counts"),
                         ("fixed_point", "reduced_half_widths"), ("fixed_point", "reduced_counts")):
        value = getattr(getattr(config, section), key)
        if value is not None and len(value) != dimension:
            raise ConfigurationError(f"{_where(source, text, (section, key))}: needs {dimension} entries for n={model.n}")
    for label, build in (("physical", config.physical_grid), ("fixed_point", config.reduced_grid)):
        try:
            build().require_resolution()
        except HeisenwaveError as exc:
            raise ConfigurationError(f"{_where(source, text, (label,))}: {exc}") from exc

    if config.data.family == "file" and not config.data.path:
        raise ConfigurationError(f"{_where(source, text, ('data', 'family'))}: family 'file' needs data.path")

    if config.experiment == "fit-decay":
        for text_kind in config.decay.kinds:
            if EnvelopeKind.parse(text_kind).tag not in LINEAR_TAGS:
                raise ConfigurationError(
                    f"{_where(source, text, ('decay', 'kinds'))}: fit-decay measures linear envelopes, got {text_kind}"
                )

    if config.experiment in ("simulate-nonlinear", "simulate-coupled"):
        _check_exponents(config, source, text)


def _check_exponents(config: RunConfig, source: str, text: str) -> None:
    fp = config.fixed_point
    model = config.model
    Q = 2 * model.n + 2
    theorem = "T51" if config.experiment == "simulate-coupled" else fp.theorem
    if config.experiment == "simulate-coupled" and not model.m > 0:
        raise DomainError(f"{_where(source, text, ('model', 'm'))}: Theorem 5.1 needs m > 0")
    if theorem == "T14" and not model.m > 0:
        raise DomainError(f"{_where(source, text, ('model', 'm'))}: Theorem 1.4 needs m > 0")
    if theorem in ("T12", "T13") and model.m != 0:
        raise DomainError(f"{_where(source, text, ('model', 'm'))}: {_ANCHORS[theorem]} is stated for m = 0")
    try:
        window = admissible_p_range(theorem, Q, model.alpha)
    except DomainError as exc:
        raise DomainError(f"{_where(source, text, ('fixed_point', 'theorem'))}: {exc}") from exc
    exponents = [("p", fp.p)]
    if config.experiment == "simulate-coupled" and fp.q is not None:
        exponents.append(("q", fp.q))
    for name, value in exponents:
        if not window.contains(value):
            raise DomainError(
                f"{_where(source, text, ('fixed_point', name))}: {_ANCHORS[theorem]} needs "
                f"{window.inequality(name)}, got {name}={value:g}"
            )


def parse_config(path: str | Path, experiment: str | None = None) -> RunConfig:
    """Read and validate a run configuration; every failure names the JSON path and line.

    experiment, when given, overrides the file's own experiment key.
    """
    path = Path(path)
    source = str(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration {source}: {exc}") from exc
    return parse_config_text(text, source, experiment)


def parse_config_text(text: str, source: str = "<config>", experiment: str | None = None) -> RunConfig:
    try:
        payload = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise ConfigurationError(f"{source}:1: the configuration must be a JSON object")
    if experiment is not None:
        payload["experiment"] = experiment
    try:
        config = RunConfig.model_validate(payload)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigurationError(f"{_where(source, text, tuple(first['loc']))}: {first['msg']}") from exc
    _check_cross_fields(config, source, text)
    log_event(logger, "config_parsed", source=source, experiment=config.experiment)
    return config

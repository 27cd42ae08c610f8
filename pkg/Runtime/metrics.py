"""
RUN METRICS
===========
Prometheus instruments for a simulation run.

- heisenwave_events_total{event}: one increment per logged event
- heisenwave_fixed_point_iterations{solver}: iterations used by each Picard or coupled run
- heisenwave_feature_enabled{feature}: optional stages switched on for the run

Instruments are built on first use and only when METRICS_ENABLED is set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Iterable

from Runtime.runtime_config import RUNTIME_SETTINGS

try:
    from prometheus_client import REGISTRY, Counter, Gauge, Histogram
except Exception:  # pragma: no cover
    REGISTRY = Counter = Gauge = Histogram = None

EVENTS_METRIC = "heisenwave_events_total"
ITERATIONS_METRIC = "heisenwave_fixed_point_iterations"
ITERATION_BUCKETS = (1, 2, 3, 5, 8, 13, 21, 34)


@dataclass(frozen=True)
class _Instruments:
    events: Any
    iterations: Any
    features: Any


_instruments: _Instruments | None = None


def _active() -> _Instruments | None:
    global _instruments
    if _instruments is None and RUNTIME_SETTINGS["METRICS_ENABLED"] and Counter is not None:
        _instruments = _Instruments(
            events=Counter(EVENTS_METRIC, "Simulation events by name", ["event"]),
            iterations=Histogram(ITERATIONS_METRIC, "Iterations per fixed-point run", ["solver"],
                                 buckets=ITERATION_BUCKETS),
            features=Gauge("heisenwave_feature_enabled", "Optional stage enabled for the run (1/0)", ["feature"]),
        )
    return _instruments


def increment_event(event: str, amount: int = 1) -> None:
    metrics = _active()
    if metrics:
        metrics.events.labels(event=event).inc(amount)


def observe_iterations(solver: str, iterations: int) -> None:
    metrics = _active()
    if metrics:
        metrics.iterations.labels(solver=solver).observe(iterations)


def set_feature_enabled(feature: str, enabled: bool) -> None:
    metrics = _active()
    if metrics:
        metrics.features.labels(feature=feature).set(int(bool(enabled)))


def _sample(name: str, labels: Dict[str, str]) -> float:
    if _active() is None:
        return 0.0
    value = REGISTRY.get_sample_value(name, labels)
    return 0.0 if value is None else float(value)


def get_event_snapshot(events: Iterable[str]) -> Dict[str, int]:
    return {event: int(_sample(EVENTS_METRIC, {"event": event})) for event in events}


def get_iteration_summary(solver: str) -> Dict[str, float]:
    """Run count and total iterations recorded for one solver."""
    labels = {"solver": solver}
    return {"runs": _sample(f"{ITERATIONS_METRIC}_count", labels),
            "iterations": _sample(f"{ITERATIONS_METRIC}_sum", labels)}

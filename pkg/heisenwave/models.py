"""
Domain types shared by the spectral simulator.

All containers are frozen dataclasses; array payloads are made read-only on
construction so a field handed to another module cannot be mutated behind
its back.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from Runtime.error_handling import ConfigurationError, DomainError, InputError, NonFiniteValues

MultiIndex = tuple[int, ...]

MAX_HEISENBERG_INDEX = 3
MAX_TRUNCATION_DEGREE = 32


def _frozen(values) -> np.ndarray:
    arr = np.array(values, copy=True)
    arr.flags.writeable = False
    return arr


# =========================================================
# 1. HERMITE BOOKKEEPING
# =========================================================
@dataclass(frozen=True)
class TruncationSet:
    indices: tuple[MultiIndex, ...]
    max_degree: int

    @property
    def n(self) -> int:
        return len(self.indices[0]) if self.indices else 0

    @property
    def size(self) -> int:
        return len(self.indices)

    def degrees(self) -> np.ndarray:
        return np.array([sum(k) for k in self.indices], dtype=int)

    def entries(self) -> np.ndarray:
        return np.array(self.indices, dtype=int).reshape(self.size, self.n)

    def position(self, k: Sequence[int]) -> int:
        try:
            return self.indices.index(tuple(int(v) for v in k))
        except ValueError as exc:
            raise InputError(f"multi-index {tuple(k)} is not in the truncation set") from exc


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise InputError("quadrature nodes and weights must be 1-D arrays of equal length")
        if np.any(np.diff(nodes) <= 0):
            raise InputError("quadrature nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise InputError("quadrature weights must be positive")
        object.__setattr__(self, "nodes", _frozen(nodes))
        object.__setattr__(self, "weights", _frozen(weights))

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


# =========================================================
# 2. MODEL PARAMETERS
# =========================================================
@dataclass(frozen=True)
class ModelParams:
    n: int
    b: float
    m: float
    alpha: float

    def __post_init__(self):
        if not 1 <= int(self.n) <= MAX_HEISENBERG_INDEX:
            raise ConfigurationError(f"Heisenberg index n={self.n} must lie in [1, {MAX_HEISENBERG_INDEX}]")
        if not self.b > 0:
            raise DomainError(f"damping b={self.b} must be positive")
        if self.m < 0:
            raise DomainError(f"mass m={self.m} must be nonnegative")
        if not self.alpha > 0:
            raise DomainError(f"fractional order alpha={self.alpha} must be positive")
        if not self.b * self.b > 4.0 * self.m:
            raise DomainError(
                f"Theorem 1.1 hypothesis b^2 > 4m violated: b^2={self.b * self.b:.6g}, 4m={4.0 * self.m:.6g}"
            )

    @property
    def Q(self) -> int:
        return 2 * int(self.n) + 2

    @property
    def critical_gap(self) -> float:
        """b²/4 − m, the mode frequency at which the characteristic roots merge."""
        return self.b * self.b / 4.0 - self.m

    @property
    def mass_rate(self) -> float:
        return self.m / (2.0 * self.b)


# =========================================================
# 3. GRIDS
# =========================================================
@dataclass(frozen=True, eq=False)
class SpectralGrid:
    lambda_nodes: np.ndarray
    lambda_weights: np.ndarray
    plancherel_constant: float
    rows: TruncationSet
    cols: TruncationSet
    lambda_map: str = "log"

    def __post_init__(self):
        nodes = np.asarray(self.lambda_nodes, dtype=float)
        weights = np.asarray(self.lambda_weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1 or nodes.size == 0:
            raise ConfigurationError("lambda nodes and weights must be nonempty 1-D arrays of equal length")
        if np.any(nodes == 0.0):
            raise ConfigurationError("lambda = 0 is not an admissible spectral node")
        if np.any(weights <= 0):
            raise ConfigurationError("lambda weights must be positive")
        order = np.argsort(nodes)
        mirrored = -nodes[order][::-1]
        if not (np.allclose(nodes[order], mirrored, rtol=1e-12, atol=0.0)
                and np.allclose(weights[order], weights[order][::-1], rtol=1e-12, atol=0.0)):
            raise ConfigurationError("lambda nodes must be symmetric about 0 with equal weights")
        if not self.plancherel_constant > 0:
            raise ConfigurationError("Plancherel constant must be positive")
        if self.rows.n != self.cols.n:
            raise ConfigurationError("row and column truncation sets must share the Heisenberg index")
        object.__setattr__(self, "lambda_nodes", _frozen(nodes))
        object.__setattr__(self, "lambda_weights", _frozen(weights))

    @property
    def n(self) -> int:
        return self.rows.n

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.lambda_nodes.size, self.rows.size, self.cols.size)

    @property
    def pair_degree(self) -> int:
        return max(self.rows.max_degree, self.cols.max_degree)

    def measure(self) -> np.ndarray:
        """Per-node Plancherel weight c_n·w·|λ|ⁿ."""
        return self.plancherel_constant * self.lambda_weights * np.abs(self.lambda_nodes) ** self.n

    def with_constant(self, constant: float) -> "SpectralGrid":
        return replace(self, plancherel_constant=float(constant))

    def same_as(self, other: "SpectralGrid") -> bool:
        return (
            self is other
            or (
                self.rows == other.rows
                and self.cols == other.cols
                and self.plancherel_constant == other.plancherel_constant
                and np.array_equal(self.lambda_nodes, other.lambda_nodes)
                and np.array_equal(self.lambda_weights, other.lambda_weights)
            )
        )


@dataclass(frozen=True)
class PhysicalGrid:
    """Cell-centred tensor grid on ∏[−h_i, h_i]; axes ordered x_1..x_n, y_1..y_n, t."""

    half_widths: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        half_widths = tuple(float(h) for h in self.half_widths)
        counts = tuple(int(c) for c in self.counts)
        if len(half_widths) != len(counts) or len(counts) % 2 != 1 or len(counts) < 3:
            raise ConfigurationError("physical grid needs 2n+1 half-widths and counts")
        if any(h <= 0 for h in half_widths):
            raise ConfigurationError("half-widths must be positive")
        if any(c <= 0 for c in counts):
            raise ConfigurationError("node counts must be positive")
        object.__setattr__(self, "half_widths", half_widths)
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return (len(self.counts) - 1) // 2

    @property
    def dimension(self) -> int:
        return len(self.counts)

    def spacings(self) -> tuple[float, ...]:
        return tuple(2.0 * h / c for h, c in zip(self.half_widths, self.counts))

    def cell_volume(self) -> float:
        return float(np.prod(self.spacings()))

    def box_volume(self) -> float:
        return float(np.prod([2.0 * h for h in self.half_widths]))

    def axis(self, i: int) -> np.ndarray:
        h = self.spacings()[i]
        return -self.half_widths[i] + (np.arange(self.counts[i]) + 0.5) * h

    def axes(self) -> list[np.ndarray]:
        return [self.axis(i) for i in range(self.dimension)]

    def refined(self, factor: int) -> "PhysicalGrid":
        return PhysicalGrid(self.half_widths, tuple(c * int(factor) for c in self.counts))

    def require_resolution(self, minimum: int = 4) -> None:
        if min(self.counts) < minimum:
            raise ConfigurationError(
                f"physical grid too coarse: every axis needs at least {minimum} nodes, got {self.counts}"
            )


# =========================================================
# 4. FIELDS
# =========================================================
@dataclass(frozen=True, eq=False)
class PhysicalField:
    grid: PhysicalGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != tuple(self.grid.counts):
            raise InputError(f"field shape {values.shape} does not match grid counts {self.grid.counts}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteValues("physical field contains non-finite values")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def is_separable(self) -> bool:
        return False


Factor = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class SeparableField(PhysicalField):
    """Product g_1(x_1)…g_n(y_n)·g_t(t) with one sampled table per axis.

    `functions` optionally carries the exact 1-D factors; refinement uses them
    when present and a cubic spline of the table otherwise.
    """

    factors: tuple[np.ndarray, ...] = ()
    functions: tuple[Factor, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.factors) != self.grid.dimension:
            raise InputError("separable field needs one factor table per axis")
        tables = []
        for i, table in enumerate(self.factors):
            arr = np.asarray(table)
            if arr.shape != (self.grid.counts[i],):
                raise InputError(f"factor {i} has {arr.shape[0] if arr.ndim else 0} samples, expected {self.grid.counts[i]}")
            tables.append(_frozen(arr))
        object.__setattr__(self, "factors", tuple(tables))
        if self.functions is not None and len(self.functions) != self.grid.dimension:
            raise InputError("separable field needs one factor function per axis")
        super().__post_init__()

    @classmethod
    def from_factors(cls, grid: PhysicalGrid, factors: Sequence[np.ndarray],
                     functions: Sequence[Factor] | None = None) -> "SeparableField":
        values = np.asarray(factors[0])
        for table in factors[1:]:
            values = np.multiply.outer(values, np.asarray(table))
        return cls(grid=grid, values=values, factors=tuple(factors),
                   functions=tuple(functions) if functions is not None else None)

    @classmethod
    def from_functions(cls, grid: PhysicalGrid, functions: Sequence[Factor]) -> "SeparableField":
        tables = [np.asarray(fn(axis)) for fn, axis in zip(functions, grid.axes())]
        return cls.from_factors(grid, tables, functions)

    @property
    def is_separable(self) -> bool:
        return True


@dataclass(frozen=True, eq=False)
class CoefficientField:
    grid: SpectralGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise InputError(f"coefficient shape {values.shape} does not match spectral grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteValues("coefficient field contains non-finite values")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def zeros(cls, grid: SpectralGrid) -> "CoefficientField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def with_values(self, values: np.ndarray) -> "CoefficientField":
        return CoefficientField(self.grid, values)

    def require_same_grid(self, other: "CoefficientField") -> None:
        if not self.grid.same_as(other.grid):
            raise InputError("coefficient fields live on different spectral grids")

    def __add__(self, other: "CoefficientField") -> "CoefficientField":
        self.require_same_grid(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "CoefficientField") -> "CoefficientField":
        self.require_same_grid(other)
        return self.with_values(self.values - other.values)

    def scaled(self, factor: complex) -> "CoefficientField":
        return self.with_values(self.values * factor)


# =========================================================
# 5. DATA NORMS
# =========================================================
@dataclass(frozen=True)
class DataNorms:
    l1: float
    l2: float
    h_alpha_seminorm: float
    l2_u0: float = 0.0
    l2_u1: float = 0.0

    def __post_init__(self):
        for name in ("l1", "l2", "h_alpha_seminorm", "l2_u0", "l2_u1"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise InputError(f"data norm {name}={value} must be finite and nonnegative")

    @property
    def a_alpha(self) -> float:
        """‖(u0,u1)‖ in H^α × L²."""
        return float(np.hypot(self.l2_u0, self.h_alpha_seminorm) + self.l2_u1)

    @property
    def b_alpha(self) -> float:
        return self.l1 + self.a_alpha

    def without_l1(self) -> "DataNorms":
        return replace(self, l1=0.0)

    def as_dict(self) -> dict[str, float]:
        return {
            "l1": self.l1,
            "l2": self.l2,
            "h_alpha_seminorm": self.h_alpha_seminorm,
            "l2_u0": self.l2_u0,
            "l2_u1": self.l2_u1,
            "a_alpha": self.a_alpha,
            "b_alpha": self.b_alpha,
        }

"""
Truncated group Fourier transform on the Heisenberg group Hⁿ.

Conventions
-----------
* η = (x, y, t) with x, y ∈ Rⁿ; arrays are laid out x_1..x_n, y_1..y_n, t.
* M(λ, η)[k, ℓ] = (π_λ(η) e_ℓ, e_k) factorizes as e^{iλt} ∏_j m(λ, x_j, y_j)[k_j, ℓ_j]
  with the one-pair overlap
      m(λ, x, y)[a, b] = e^{iλxy/2} ∫ e^{i√λ y u} h_b(u + √|λ| x) h_a(u) du,
  √λ = sgn(λ)√|λ|. The overlap is computed by Gauss–Hermite quadrature after
  centring the variable at −√|λ|x/2, where the product of the two Hermite
  functions carries its Gaussian mass.
* forward:  F[λ, k, ℓ] = Σ_η f(η) conj(M(λ, η)[ℓ, k]) dV
* inverse:  u(η) = Σ_λ c_n w_λ |λ|ⁿ Σ_{k,ℓ} M(λ, η)[ℓ, k] F[λ, k, ℓ]
  which is Tr[π_λ(η) F̂(λ)] on the truncated basis. The mode multiplying
  F[λ, k, ℓ] is (π_λ(η)e_k, e_ℓ), an eigenfunction of the sub-Laplacian with
  eigenvalue −|λ|(2|k|+n), so the row index k carries the frequency.
  For real f the −λ slice is the conjugate of the +λ slice, so the
  reconstruction is real up to rounding on a symmetric λ-grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from heisenwave.hermite import (
    corrected_weights,
    enumerate_multi_indices,
    gauss_hermite_rule,
    hermite_table,
)
from heisenwave.models import (
    MAX_TRUNCATION_DEGREE,
    CoefficientField,
    DataNorms,
    ModelParams,
    MultiIndex,
    PhysicalField,
    PhysicalGrid,
    QuadratureRule,
    SeparableField,
    SpectralGrid,
    TruncationSet,
)
from Runtime.activity_logging import get_logger, log_event
from Runtime.error_handling import ConfigurationError, InputError
from Runtime.runtime_config import RUNTIME_SETTINGS

logger = get_logger("group_fourier")

DEFAULT_LAMBDA_MIN = 0.01
DEFAULT_LAMBDA_MAX = 12.0
DEFAULT_LAMBDA_NODES = 40
LAMBDA_MAPS = ("log", "linear")


# =========================================================
# 1. GROUP STRUCTURE
# =========================================================
def _split_point(eta, n: int) -> tuple[np.ndarray, np.ndarray, float]:
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if eta.size != 2 * n + 1:
        raise InputError(f"point must have 2n+1={2 * n + 1} coordinates, got {eta.size}")
    if not np.all(np.isfinite(eta)):
        raise InputError("point coordinates must be finite")
    return eta[:n], eta[n:2 * n], float(eta[2 * n])


def group_law(eta, eta_prime) -> np.ndarray:
    """(x,y,t)∘(x′,y′,t′) = (x+x′, y+y′, t+t′+½(x·y′ − x′·y))."""
    eta = np.asarray(eta, dtype=float).reshape(-1)
    n = (eta.size - 1) // 2
    x, y, t = _split_point(eta, n)
    xp, yp, tp = _split_point(eta_prime, n)
    return np.concatenate([x + xp, y + yp, [t + tp + 0.5 * (x @ yp - xp @ y)]])


def dilate(eta, r: float) -> np.ndarray:
    eta = np.asarray(eta, dtype=float).reshape(-1)
    n = (eta.size - 1) // 2
    x, y, t = _split_point(eta, n)
    return np.concatenate([r * x, r * y, [r * r * t]])


def reference_plancherel_constant(n: int) -> float:
    """(2π)^{-(n+1)}, the constant of the standard normalization; reported, never imposed."""
    return (2.0 * math.pi) ** -(n + 1)


# =========================================================
# 2. SPECTRAL GRID
# =========================================================
def build_spectral_grid(
    n: int,
    max_degree: int,
    lambda_min: float = DEFAULT_LAMBDA_MIN,
    lambda_max: float = DEFAULT_LAMBDA_MAX,
    node_count: int = DEFAULT_LAMBDA_NODES,
    lambda_map: str = "log",
    plancherel_constant: float | None = None,
    col_degree: int | None = None,
) -> SpectralGrid:
    """Gauss–Legendre λ-nodes on ±[lambda_min, lambda_max] plus Hermite truncation sets."""
    if max_degree > MAX_TRUNCATION_DEGREE:
        raise ConfigurationError(f"max_degree={max_degree} exceeds the cap {MAX_TRUNCATION_DEGREE}")
    if col_degree is not None and col_degree > max_degree:
        raise ConfigurationError("column truncation degree may not exceed the row degree")
    if node_count < 2 or node_count % 2:
        raise ConfigurationError(f"lambda node count must be even and at least 2, got {node_count}")
    if not 0 < lambda_min < lambda_max:
        raise ConfigurationError(f"need 0 < lambda_min < lambda_max, got [{lambda_min}, {lambda_max}]")
    if lambda_map not in LAMBDA_MAPS:
        raise ConfigurationError(f"lambda_map must be one of {LAMBDA_MAPS}, got {lambda_map!r}")

    half = node_count // 2
    ref_nodes, ref_weights = leggauss(half)
    if lambda_map == "log":
        lo, hi = math.log(lambda_min), math.log(lambda_max)
        s = 0.5 * (hi - lo) * ref_nodes + 0.5 * (hi + lo)
        positive = np.exp(s)
        weights = 0.5 * (hi - lo) * ref_weights * positive
    else:
        positive = 0.5 * (lambda_max - lambda_min) * ref_nodes + 0.5 * (lambda_max + lambda_min)
        weights = 0.5 * (lambda_max - lambda_min) * ref_weights

    nodes = np.concatenate([-positive[::-1], positive])
    all_weights = np.concatenate([weights[::-1], weights])
    rows = enumerate_multi_indices(n, max_degree)
    cols = enumerate_multi_indices(n, max_degree if col_degree is None else col_degree)
    constant = reference_plancherel_constant(n) if plancherel_constant is None else plancherel_constant
    return SpectralGrid(nodes, all_weights, float(constant), rows, cols, lambda_map)


def _default_rule() -> QuadratureRule:
    return gauss_hermite_rule(int(RUNTIME_SETTINGS["GAUSS_HERMITE_POINTS"]))


def _signed_root(lam: float) -> float:
    return math.copysign(math.sqrt(abs(lam)), lam)


# =========================================================
# 3. ONE-PAIR OVERLAPS
# =========================================================
def _overlap_factors(lam: float, x: float, degree: int, rule: QuadratureRule):
    """Centred nodes u, and h_a(u), h_b(u+√|λ|x) tables, plus corrected weights."""
    shift = math.sqrt(abs(lam)) * x
    u = rule.nodes - 0.5 * shift
    return u, hermite_table(degree, u), hermite_table(degree, u + shift), corrected_weights(rule)


def pair_overlaps(lam: float, x: float, ys, degree: int, rule: QuadratureRule | None = None) -> np.ndarray:
    """m(λ, x, y)[a, b] for every y in ys; shape (len(ys), degree+1, degree+1)."""
    rule = rule or _default_rule()
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    u, ha, hb, wc = _overlap_factors(lam, x, degree, rule)
    phase = np.exp(1j * _signed_root(lam) * np.outer(ys, u)) * wc
    core = np.einsum("yp,ap,bp->yab", phase, ha, hb, optimize=True)
    return core * np.exp(0.5j * lam * x * ys)[:, None, None]


def pair_kernel(lam: float, xs, ys, degree: int, rule: QuadratureRule | None = None) -> np.ndarray:
    """m(λ, x, y)[a, b] on the tensor grid xs × ys; shape (X, Y, D+1, D+1)."""
    rule = rule or _default_rule()
    return np.stack([pair_overlaps(lam, float(x), ys, degree, rule) for x in np.asarray(xs, dtype=float)])


def _pair_forward_separable(lam: float, xs, gx, ys, gy, dx: float, dy: float,
                            degree: int, rule: QuadratureRule) -> np.ndarray:
    """Σ_x Σ_y g_x(x) g_y(y) conj(m(λ,x,y)) dx dy, contracting y analytically per x."""
    root = _signed_root(lam)
    weighted_y = np.asarray(gy) * dy
    out = np.zeros((degree + 1, degree + 1), dtype=complex)
    for x, gxv in zip(np.asarray(xs, dtype=float), np.asarray(gx)):
        if gxv == 0:
            continue
        u, ha, hb, wc = _overlap_factors(lam, x, degree, rule)
        frequency = 0.5 * lam * x + root * u
        transformed = weighted_y @ np.exp(-1j * np.outer(ys, frequency))
        out += (gxv * dx) * np.einsum("p,ap,bp->ab", transformed * wc, ha, hb, optimize=True)
    return out


# =========================================================
# 4. DENSE <-> TRUNCATED LAYOUT
# =========================================================
def _interleaved_index(sgrid: SpectralGrid) -> tuple[np.ndarray, ...]:
    """Index tuple into a dense (a_1, b_1, …, a_n, b_n) tensor of pair overlaps m[a, b].

    Entry [k, ℓ] of the (R, C) block reads a_j = ℓ_j, b_j = k_j.
    """
    rows = sgrid.rows.entries()
    cols = sgrid.cols.entries()
    index = []
    for j in range(sgrid.n):
        index.append(np.ones((rows.shape[0], 1), dtype=int) * cols[:, j][None, :])
        index.append(rows[:, j][:, None] * np.ones((1, cols.shape[0]), dtype=int))
    return tuple(index)


def _scatter_dense(block: np.ndarray, sgrid: SpectralGrid) -> np.ndarray:
    dense = np.zeros((sgrid.pair_degree + 1,) * (2 * sgrid.n), dtype=complex)
    dense[_interleaved_index(sgrid)] = block
    return dense


def _pairs_to_block(pair_mats: Sequence[np.ndarray], sgrid: SpectralGrid) -> np.ndarray:
    """∏_j P_j[ℓ_j, k_j] on the truncated (R, C) block."""
    rows = sgrid.rows.entries()
    cols = sgrid.cols.entries()
    block = np.ones((rows.shape[0], cols.shape[0]), dtype=complex)
    for j, mat in enumerate(pair_mats):
        block = block * mat[cols[:, j][None, :], rows[:, j][:, None]]
    return block


# =========================================================
# 5. TRANSFORM PLAN
# =========================================================
@dataclass
class TransformPlan:
    """Per-λ pair kernels for one (spectral grid, physical grid) combination."""

    sgrid: SpectralGrid
    pgrid: PhysicalGrid
    rule: QuadratureRule = field(default_factory=_default_rule)
    _kernels: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.pgrid.require_resolution()
        if self.pgrid.n != self.sgrid.n:
            raise InputError(f"physical grid has n={self.pgrid.n}, spectral grid n={self.sgrid.n}")

    def kernels(self, index: int) -> list[np.ndarray]:
        if index not in self._kernels:
            lam = float(self.sgrid.lambda_nodes[index])
            n = self.sgrid.n
            axes = self.pgrid.axes()
            self._kernels[index] = [
                pair_kernel(lam, axes[j], axes[n + j], self.sgrid.pair_degree, self.rule) for j in range(n)
            ]
        return self._kernels[index]

    def matches(self, sgrid: SpectralGrid, pgrid: PhysicalGrid) -> bool:
        return self.pgrid == pgrid and self.sgrid.rows == sgrid.rows and self.sgrid.cols == sgrid.cols and \
            np.array_equal(self.sgrid.lambda_nodes, sgrid.lambda_nodes)


def _plan_for(sgrid: SpectralGrid, pgrid: PhysicalGrid, plan: TransformPlan | None) -> TransformPlan:
    if plan is not None:
        if not plan.matches(sgrid, pgrid):
            raise InputError("transform plan was built for a different grid pair")
        return plan
    return TransformPlan(sgrid, pgrid)


# =========================================================
# 6. MATRIX ELEMENTS
# =========================================================
def rep_matrix_element(lam: float, eta, k: MultiIndex, l: MultiIndex,
                       rule: QuadratureRule | None = None) -> complex:
    """(π_λ(η) e_ℓ, e_k)_{L²(Rⁿ)}."""
    if lam == 0:
        raise InputError("the Schrödinger representation is indexed by nonzero lambda")
    n = len(k)
    if len(l) != n:
        raise InputError("row and column multi-indices differ in length")
    x, y, t = _split_point(eta, n)
    degree = max(max(k), max(l))
    value = complex(np.exp(1j * lam * t))
    for j in range(n):
        overlaps = pair_overlaps(lam, float(x[j]), [y[j]], degree, rule)[0]
        value *= overlaps[k[j], l[j]]
    return value


def rep_matrix(lam: float, eta, tset: TruncationSet, rule: QuadratureRule | None = None) -> np.ndarray:
    """Matrix of π_λ(η) on span{e_k : k ∈ tset}, entry [k, ℓ] = (π_λ(η)e_ℓ, e_k)."""
    if lam == 0:
        raise InputError("the Schrödinger representation is indexed by nonzero lambda")
    x, y, t = _split_point(eta, tset.n)
    entries = tset.entries()
    out = np.full((tset.size, tset.size), np.exp(1j * lam * t), dtype=complex)
    for j in range(tset.n):
        overlaps = pair_overlaps(lam, float(x[j]), [y[j]], tset.max_degree, rule)[0]
        out *= overlaps[entries[:, j][:, None], entries[:, j][None, :]]
    return out


# =========================================================
# 7. FORWARD / INVERSE
# =========================================================
def _refined_axis(f: SeparableField, axis: int, refine: int) -> tuple[np.ndarray, np.ndarray, float]:
    grid = f.grid.refined(refine)
    nodes = grid.axis(axis)
    if f.functions is not None:
        table = np.asarray(f.functions[axis](nodes))
    elif refine == 1:
        table = np.asarray(f.factors[axis])
    else:
        coarse = f.grid.axis(axis)
        raw = np.asarray(f.factors[axis])
        table = CubicSpline(coarse, raw.real)(nodes)
        if np.iscomplexobj(raw):
            table = table + 1j * CubicSpline(coarse, raw.imag)(nodes)
    return nodes, table, grid.spacings()[axis]


def _forward_separable(f: SeparableField, sgrid: SpectralGrid, rule: QuadratureRule, refine: int) -> np.ndarray:
    n = sgrid.n
    axes = [_refined_axis(f, i, refine) for i in range(f.grid.dimension)]
    t_nodes, g_t, dt = axes[2 * n]
    index = _interleaved_index(sgrid)
    out = np.empty(sgrid.shape, dtype=complex)
    for li, lam in enumerate(sgrid.lambda_nodes):
        lam = float(lam)
        t_factor = np.sum(g_t * np.exp(-1j * lam * t_nodes)) * dt
        pair_mats = []
        for j in range(n):
            xs, gx, dx = axes[j]
            ys, gy, dy = axes[n + j]
            pair_mats.append(_pair_forward_separable(lam, xs, gx, ys, gy, dx, dy, sgrid.pair_degree, rule))
        dense = pair_mats[0]
        for mat in pair_mats[1:]:
            dense = np.multiply.outer(dense, mat)
        out[li] = t_factor * dense[index]
    return out


def _forward_general(f: PhysicalField, sgrid: SpectralGrid, plan: TransformPlan) -> np.ndarray:
    n = sgrid.n
    t_nodes = f.grid.axis(2 * n)
    spacings = f.grid.spacings()
    spatial_volume = float(np.prod(spacings[:2 * n]))
    interleave = [v for j in range(n) for v in (j, n + j)]
    index = _interleaved_index(sgrid)
    values = np.asarray(f.values)
    out = np.empty(sgrid.shape, dtype=complex)
    for li, lam in enumerate(sgrid.lambda_nodes):
        phase = np.exp(-1j * float(lam) * t_nodes) * spacings[2 * n]
        tensor = np.tensordot(values, phase, axes=([2 * n], [0])).transpose(interleave)
        for kernel in plan.kernels(li):
            tensor = np.tensordot(tensor, np.conj(kernel), axes=([0, 1], [0, 1]))
        out[li] = spatial_volume * tensor[index]
    return out


def forward_transform(
    f: PhysicalField,
    sgrid: SpectralGrid,
    plan: TransformPlan | None = None,
    refine: int | None = None,
) -> CoefficientField:
    """Riemann-sum group Fourier transform F[λ,k,ℓ] = Σ f(η) conj((π_λ(η)e_k, e_ℓ)) dV."""
    f.grid.require_resolution()
    if f.grid.n != sgrid.n:
        raise InputError(f"field has n={f.grid.n}, spectral grid n={sgrid.n}")
    if isinstance(f, SeparableField):
        factor = int(RUNTIME_SETTINGS["SEPARABLE_REFINE"] if refine is None else refine)
        if factor < 1:
            raise ConfigurationError(f"refinement factor must be at least 1, got {factor}")
        plan_rule = plan.rule if plan is not None else _default_rule()
        values = _forward_separable(f, sgrid, plan_rule, factor)
        path = "separable"
    else:
        values = _forward_general(f, sgrid, _plan_for(sgrid, f.grid, plan))
        path = "general"
    log_event(logger, "forward_transform", path=path, lambda_nodes=sgrid.shape[0], basis=sgrid.rows.size)
    return CoefficientField(sgrid, values)


def inverse_transform(F: CoefficientField, eta, rule: QuadratureRule | None = None) -> complex:
    """Truncated inversion Σ_λ c_n w |λ|ⁿ Tr[π_λ(η) F̂(λ)] at one point."""
    sgrid = F.grid
    n = sgrid.n
    x, y, t = _split_point(eta, n)
    measure = sgrid.measure()
    total = 0j
    for li, lam in enumerate(sgrid.lambda_nodes):
        lam = float(lam)
        if not np.any(F.values[li]):
            continue
        pair_mats = [pair_overlaps(lam, float(x[j]), [y[j]], sgrid.pair_degree, rule)[0] for j in range(n)]
        block = np.exp(1j * lam * t) * _pairs_to_block(pair_mats, sgrid)
        total += measure[li] * np.sum(block * F.values[li])
    return complex(total)


def inverse_on_grid(F: CoefficientField, pgrid: PhysicalGrid, plan: TransformPlan | None = None) -> np.ndarray:
    """inverse_transform evaluated at every node of pgrid; shape pgrid.counts."""
    sgrid = F.grid
    plan = _plan_for(sgrid, pgrid, plan)
    n = sgrid.n
    t_nodes = pgrid.axis(2 * n)
    measure = sgrid.measure()
    deinterleave = [2 * j for j in range(n)] + [2 * j + 1 for j in range(n)]
    out = np.zeros(pgrid.counts, dtype=complex)
    for li, lam in enumerate(sgrid.lambda_nodes):
        if not np.any(F.values[li]):
            continue
        tensor = _scatter_dense(F.values[li], sgrid)
        for kernel in plan.kernels(li):
            tensor = np.tensordot(tensor, kernel, axes=([0, 1], [2, 3]))
        spatial = tensor.transpose(deinterleave)
        out += measure[li] * np.multiply.outer(spatial, np.exp(1j * float(lam) * t_nodes))
    log_event(logger, "inverse_on_grid", nodes=int(np.prod(pgrid.counts)), lambda_nodes=sgrid.shape[0])
    return out


# =========================================================
# 8. NORMS
# =========================================================
def weighted_plancherel_norm(F: CoefficientField, multiplier: np.ndarray | None = None) -> float:
    """sqrt(c_n Σ w|λ|ⁿ Σ |μ(λ,k)·F|²); multiplier has shape (L, R) or broadcasts to it."""
    energy = np.abs(F.values) ** 2
    if multiplier is not None:
        energy = energy * (np.asarray(multiplier, dtype=float) ** 2)[..., None]
    per_node = energy.sum(axis=(1, 2))
    return float(math.sqrt(max(0.0, float(np.dot(F.grid.measure(), per_node)))))


def plancherel_norm(F: CoefficientField) -> float:
    return weighted_plancherel_norm(F)


def mode_frequencies(sgrid: SpectralGrid) -> np.ndarray:
    """|λ|·μ_k on the (λ, k) grid; shape (L, R)."""
    mu = 2 * sgrid.rows.degrees() + sgrid.n
    return np.abs(sgrid.lambda_nodes)[:, None] * mu[None, :]


def physical_l2_norm(f: PhysicalField) -> float:
    return float(math.sqrt(np.sum(np.abs(f.values) ** 2) * f.grid.cell_volume()))


def l1_norm(f: PhysicalField) -> float:
    return float(np.sum(np.abs(f.values)) * f.grid.cell_volume())


def lq_norm(f: PhysicalField, q: float) -> float:
    if q < 1:
        raise InputError(f"L^q norm needs q >= 1, got {q}")
    return float((np.sum(np.abs(f.values) ** q) * f.grid.cell_volume()) ** (1.0 / q))


def data_norms(
    u0: PhysicalField,
    u1: PhysicalField,
    F0: CoefficientField,
    F1: CoefficientField,
    params: ModelParams,
) -> DataNorms:
    """Right-hand-side data norms: L¹ of the pair, Plancherel L² of each, Ḣ^α of u0."""
    F0.require_same_grid(F1)
    if F0.grid.n != params.n or u0.grid != u1.grid or u0.grid.n != params.n:
        raise InputError("data fields and model parameters disagree on grid or Heisenberg index")
    l2_u0 = plancherel_norm(F0)
    l2_u1 = plancherel_norm(F1)
    seminorm = weighted_plancherel_norm(F0, mode_frequencies(F0.grid) ** (params.alpha / 2.0))
    return DataNorms(
        l1=l1_norm(u0) + l1_norm(u1),
        l2=l2_u0 + l2_u1,
        h_alpha_seminorm=seminorm,
        l2_u0=l2_u0,
        l2_u1=l2_u1,
    )


# =========================================================
# 9. PLANCHEREL CALIBRATION
# =========================================================
@dataclass(frozen=True)
class CalibrationReport:
    constant: float
    reference_constant: float
    residual: float
    ratios: tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "plancherel_constant": self.constant,
            "reference_constant": self.reference_constant,
            "residual": self.residual,
            "ratios": list(self.ratios),
        }


def calibrate_plancherel_constant(
    sgrid: SpectralGrid,
    family: Sequence[PhysicalField],
    transforms: Sequence[CoefficientField] | None = None,
) -> tuple[SpectralGrid, CalibrationReport]:
    """Least-squares c_n so that c_n·S_i ≈ ‖f_i‖², S_i = Σ w|λ|ⁿ Σ|F_i|²."""
    if not family:
        raise InputError("calibration needs at least one field")
    unit = sgrid.with_constant(1.0)
    if transforms is None:
        transforms = [forward_transform(f, unit) for f in family]
    spectral = np.array([plancherel_norm(CoefficientField(unit, F.values)) ** 2 for F in transforms])
    physical = np.array([physical_l2_norm(f) ** 2 for f in family])
    if not np.any(spectral > 0):
        raise InputError("calibration family has vanishing spectral energy")
    constant = float(np.dot(physical, spectral) / np.dot(spectral, spectral))
    ratios = np.sqrt(constant * spectral / physical)
    residual = float(np.max(np.abs(ratios - 1.0)))
    report = CalibrationReport(constant, reference_plancherel_constant(sgrid.n), residual, tuple(float(r) for r in ratios))
    log_event(logger, "plancherel_calibration", constant=constant,
              reference=report.reference_constant, residual=residual)
    return sgrid.with_constant(constant), report

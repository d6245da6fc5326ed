"""Operator-norm estimates for the family of deformed convolution operators.

Away from 0 the section acts through finite-dimensional discretizations: for
pair charts as an integral kernel on the base grid, for base-dimension-0
group charts as the matrix of the regular action on the fiber grid.  At 0 the
fiber algebra is commutative and the norm is the sup of the fiberwise Fourier
transform over a refined dual grid.  Only the regular (reduced) picture is
computed; every built-in chart here is amenable, where it coincides with the
full norm, and reports record that.  One-sided semicontinuity of the exact
norms is not certified numerically: at a fixed discretization only the
two-sided continuity check (differences shrinking along the sweep) is
falsifiable.

All matrices are conjugated by square roots of the quadrature weights so the
matrix 2-norm approximates the integral-operator norm, and the top singular
value comes from power iteration on the Gram matrix with a deterministic
all-ones start.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .charts import GroupoidChart
from .deformation import haar_density, solve_product
from .errors import ConvergenceError, DomainError, GroupoidLabError
from .grids import GridSpec
from .poisson import _mu_base, fourier_transform
from .symbols import SymbolSpec, eval_symbol

POWER_TOL = 1e-8
POWER_MAX_ITER = 10_000


@dataclass(frozen=True)
class NormRow:
    """One operator-norm estimate: parameter, value, iteration residual, size."""

    t: float
    value: float
    residual: float
    size: int


@dataclass(frozen=True)
class NormCurve:
    """Sweep rows (t != 0, in sweep order) plus the commutative row at t = 0."""

    rows: tuple[NormRow, ...]
    zero: NormRow
    reduced_equals_full: bool = True  # amenable built-ins only

    def deltas(self) -> list[float]:
        return [abs(r.value - self.zero.value) for r in self.rows]

    def deltas_decreasing(self) -> bool:
        d = self.deltas()
        return all(b <= a for a, b in zip(d, d[1:]))

    def final_delta_fraction(self) -> float:
        if self.zero.value == 0.0:
            return 0.0 if self.deltas()[-1] == 0.0 else float("inf")
        return self.deltas()[-1] / self.zero.value


def power_iteration_sigma(
    matrix: np.ndarray, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER
) -> tuple[float, float, int]:
    """Largest singular value of ``matrix`` via power iteration on its Gram matrix.

    Starts from the normalized all-ones vector (reproducibility: no random
    initialization).  Returns ``(sigma, residual, iterations)`` where
    ``residual`` is the relative eigen-residual of the Gram matrix; raises
    ConvergenceError past ``max_iter``.
    """
    matrix = np.asarray(matrix, dtype=complex)
    n = matrix.shape[1]
    gram = np.einsum("ab,ac->bc", np.conj(matrix), matrix, optimize=False)
    v = np.full(n, 1.0 / np.sqrt(n), dtype=complex)
    lam = 0.0
    for iteration in range(1, max_iter + 1):
        y = np.einsum("ab,b->a", gram, v, optimize=False)
        norm_y = float(np.linalg.norm(y))
        if norm_y == 0.0:
            return 0.0, 0.0, iteration
        v = y / norm_y
        lam = float(np.real(np.vdot(v, np.einsum("ab,b->a", gram, v, optimize=False))))
        residual = float(
            np.linalg.norm(np.einsum("ab,b->a", gram, v, optimize=False) - lam * v)
        ) / max(lam, 1e-300)
        if residual <= tol:
            return float(np.sqrt(max(lam, 0.0))), residual, iteration
    raise ConvergenceError(
        f"power iteration did not reach residual {tol:.1e} in {max_iter} iterations"
    )


# ---------------------------------------------------------------------------
# the commutative fiber at t = 0
# ---------------------------------------------------------------------------

def zero_fiber_norm(
    f0: SymbolSpec,
    grid: GridSpec,
    mu_on_base=None,
    rel_tol: float = 1e-4,
    max_refine: int = 6,
    strict: bool = False,
) -> NormRow:
    """Sup of the fiberwise Fourier transform over base and dual nodes.

    The dual grid is first widened until the transform decays at its
    boundary, then refined (spacing halved) until the sup moves by less than
    ``rel_tol`` relatively; more than ``max_refine`` refinements raise
    ConvergenceError.
    """
    sampled = eval_symbol(f0, grid, strict=strict, name="f0")
    mu = _mu_base(mu_on_base, grid)
    if not f0.terms:
        return NormRow(t=0.0, value=0.0, residual=0.0, size=0)

    from .poisson import select_dual_grid

    dual = select_dual_grid(grid, [sampled], mu_on_base=mu, strict=strict)
    sup = float(np.max(np.abs(fourier_transform(sampled, mu, dual).values)))
    for _ in range(max_refine):
        dual_next = dual.refine_fiber()
        sup_next = float(np.max(np.abs(fourier_transform(sampled, mu, dual_next).values)))
        change = abs(sup_next - sup) / max(sup_next, 1e-300)
        if change < rel_tol:
            size = int(np.prod(dual_next.fiber_shape)) * max(
                1, int(np.prod(dual_next.base_shape))
            )
            return NormRow(t=0.0, value=sup_next, residual=change, size=size)
        dual, sup = dual_next, sup_next
    raise ConvergenceError(
        f"dual-grid sup did not settle to {rel_tol:.1e} within {max_refine} refinements"
    )


# ---------------------------------------------------------------------------
# pair charts: integral kernels on the base grid
# ---------------------------------------------------------------------------

def _pair_weighted_matrix(
    f0: SymbolSpec, t: float, grid: GridSpec, mu_on_base=None
) -> np.ndarray:
    if grid.base_dim == 0:
        raise GroupoidLabError("pair kernels need a base grid")
    n = grid.base_dim
    pts = grid.base_points_flat()  # (K, n)
    K = pts.shape[0]
    reach = max(abs(t) * ax.half_width for ax in grid.fiber)
    span = min(2.0 * ax.half_width for ax in grid.base)
    if reach > span:
        raise DomainError(
            f"kernel support t * fiber radius = {reach:.3g} exceeds the base span {span:.3g}"
        )
    x = pts[:, None, :]
    y = pts[None, :, :]
    kernel = f0.evaluate(np.broadcast_to(x, (K, K, n)), (y - x) / t) / abs(t) ** n
    mu = _mu_base(mu_on_base, grid).reshape(-1)
    kernel = kernel * mu[None, :]
    sqw = np.sqrt(grid.base_weights().reshape(-1))
    return sqw[:, None] * kernel * sqw[None, :]


def pair_kernel_norm(
    f0: SymbolSpec,
    t: float,
    grid: GridSpec,
    mu_on_base=None,
    tol: float = POWER_TOL,
    max_iter: int = POWER_MAX_ITER,
) -> NormRow:
    """Top singular value of the discretized kernel ``f0(x, (y-x)/t) / t^n``."""
    if t == 0.0:
        raise GroupoidLabError("pair kernel norm needs t != 0")
    weighted = _pair_weighted_matrix(f0, t, grid, mu_on_base)
    sigma, residual, _ = power_iteration_sigma(weighted, tol, max_iter)
    return NormRow(t=float(t), value=sigma, residual=residual, size=weighted.shape[0])


def pair_cstar_identity_residual(
    f0: SymbolSpec, t: float, grid: GridSpec, mu_on_base=None
) -> float:
    """Relative mismatch of ``norm(f conv f^*) = norm(f)^2`` at parameter ``t``.

    The adjoint kernel is the conjugate transpose; the composition is
    performed by quadrature on the base grid, then both norms come from the
    same power iteration as the norm curve.
    """
    weighted = _pair_weighted_matrix(f0, t, grid, mu_on_base)
    sigma, _, _ = power_iteration_sigma(weighted)
    composed = np.einsum("az,bz->ab", weighted, np.conj(weighted), optimize=False)
    sigma2, _, _ = power_iteration_sigma(composed)
    if sigma == 0.0:
        return 0.0 if sigma2 == 0.0 else float("inf")
    return abs(sigma2 - sigma**2) / sigma**2


# ---------------------------------------------------------------------------
# base-dimension-0 group charts: regular action on the fiber grid
# ---------------------------------------------------------------------------

def _interp_scatter(points: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Multilinear weights of arbitrary fiber points onto the fiber nodes.

    Returns ``(flat_indices, weights)`` of shape (..., 2^m); contributions
    outside the grid get weight 0 (their index is clamped to 0).
    """
    m = grid.fiber_dim
    axes = grid.fiber
    lows, fracs, ok_low, ok_high = [], [], [], []
    for k in range(m):
        ax = axes[k]
        tpos = (points[..., k] - ax.start) / ax.step
        low = np.floor(tpos).astype(np.int64)
        frac = tpos - low
        lows.append(low)
        fracs.append(frac)
        ok_low.append((low >= 0) & (low <= ax.count - 1))
        ok_high.append((low + 1 >= 0) & (low + 1 <= ax.count - 1))
    strides = []
    acc = 1
    for c in reversed(grid.fiber_shape):
        strides.append(acc)
        acc *= c
    strides = list(reversed(strides))

    batch = points.shape[:-1]
    n_corners = 1 << m
    indices = np.zeros(batch + (n_corners,), dtype=np.int64)
    weights = np.ones(batch + (n_corners,), dtype=float)
    for corner in range(n_corners):
        idx = np.zeros(batch, dtype=np.int64)
        wgt = np.ones(batch, dtype=float)
        valid = np.ones(batch, dtype=bool)
        for k in range(m):
            if corner >> k & 1:
                component = lows[k] + 1
                wgt = wgt * fracs[k]
                valid &= ok_high[k]
            else:
                component = lows[k]
                wgt = wgt * (1.0 - fracs[k])
                valid &= ok_low[k]
            idx = idx + np.clip(component, 0, axes[k].count - 1) * strides[k]
        indices[..., corner] = idx
        weights[..., corner] = np.where(valid, wgt, 0.0)
    return indices, weights


def group_regular_norm(
    f0: SymbolSpec,
    chart: GroupoidChart,
    t: float,
    grid: GridSpec,
    tol: float = POWER_TOL,
    max_iter: int = POWER_MAX_ITER,
) -> NormRow:
    """Norm of the regular action of ``f0`` at parameter ``t`` on the fiber grid.

    The action matrix is assembled from the same integral as the deformed
    convolution with the second factor replaced by grid basis vectors
    (multilinear interpolation spreads each transported point over its cell's
    corners).  Only base-dimension-0 charts are supported.
    """
    if chart.base_dim != 0:
        raise GroupoidLabError("regular-action norms are implemented for base dimension 0")
    if t == 0.0:
        raise GroupoidLabError("regular-action norm needs t != 0")
    from .deformation import deformation_domain_problems

    problems = deformation_domain_problems(chart, grid, [t])
    if problems:
        raise DomainError("; ".join(problems))

    eta = grid.fiber_points_flat()  # (H, m)
    H = eta.shape[0]
    u = np.zeros((1, 0))
    f_vals = f0.evaluate(np.zeros((H, 0)), eta)
    rho = haar_density(chart, np.zeros((H, 0)), t * eta)
    coeff = f_vals * rho * grid.fiber_weights().reshape(-1)

    xi = eta  # output nodes coincide with the integration nodes
    matrix = np.zeros((H, H), dtype=complex)
    rows = np.arange(H, dtype=np.int64)
    for b in range(H):
        v_eta = np.broadcast_to(t * eta[b], (H, chart.fiber_dim))
        w = solve_product(chart, np.zeros((H, 0)), v_eta, t * xi)
        indices, weights = _interp_scatter(w / t, grid)
        np.add.at(
            matrix,
            (np.repeat(rows, indices.shape[-1]), indices.reshape(-1)),
            (coeff[b] * weights).reshape(-1).astype(complex),
        )
    sqw = np.sqrt(grid.fiber_weights().reshape(-1))
    weighted = sqw[:, None] * matrix / sqw[None, :]
    sigma, residual, _ = power_iteration_sigma(weighted, tol, max_iter)
    return NormRow(t=float(t), value=sigma, residual=residual, size=H)


# ---------------------------------------------------------------------------
# the curve
# ---------------------------------------------------------------------------

def norm_curve(
    f0: SymbolSpec,
    chart: GroupoidChart,
    t_values: Sequence[float],
    grid: GridSpec,
    mu_on_base=None,
    tol: float = POWER_TOL,
    strict: bool = False,
) -> NormCurve:
    """Operator norms along the sweep plus the commutative value at 0."""
    ts = [float(t) for t in t_values]
    if any(t == 0.0 for t in ts):
        raise GroupoidLabError("the sweep must not contain t = 0; the 0 row is separate")
    if any(b >= a for a, b in zip(ts, ts[1:])):
        raise GroupoidLabError("t values must decrease strictly")
    rows = []
    for t in ts:
        if chart.kind == "pair":
            rows.append(pair_kernel_norm(f0, t, grid, mu_on_base, tol=tol))
        elif chart.base_dim == 0:
            rows.append(group_regular_norm(f0, chart, t, grid, tol=tol))
        else:
            raise GroupoidLabError(
                "norm curves support pair charts and base-dimension-0 group charts"
            )
    zero = zero_fiber_norm(f0, grid, mu_on_base, strict=strict)
    return NormCurve(rows=tuple(rows), zero=zero)

"""Deformed convolution in blow-up coordinates and the classical-limit study.

Chart density of the fiberwise measure
--------------------------------------
Convolution along range fibers needs the density ``rho(u, v)`` of the
left-invariant fiber measure in chart coordinates.  Left translation by the
arrow over ``(u, v0)`` maps the fiber over ``source_map(u, v0)`` to the fiber
over ``u`` via ``w -> product(u, v0, w)``; pushing the measure through this
map and comparing densities gives

    rho(source_map(u, v0), w) = rho(u, product(u, v0, w))
                                * |det d/dw product(u, v0, w)|.

Setting ``w = 0`` and normalizing the density at units by the unit weight,
``rho(u, 0) = unit_weight(u)``, determines the density everywhere:

    rho(u, v) = unit_weight(source_map(u, v))
                / |det d/dw product(u, v, 0)|.

Deformed product
----------------
At parameter ``t`` the group coordinate is scaled, ``v = t * xi``, and the
fiber measure is rescaled by ``1/|t|^m``.  Writing the convolution of two
sections that are constant in the scaled coordinates and substituting
``v' = t * eta`` (whose Jacobian ``|t|^m`` cancels the rescaling exactly, so
no ``1/t`` powers ever appear numerically) yields

    (f *_t g)(u, xi) = sum_eta f0(u, eta)
                       * g0(source_map(u, t eta), w(u, t eta, t xi) / t)
                       * rho(u, t eta) * quad_weight(eta),

where ``w(u, v', v)`` solves ``product(u, v', w) = v``.  As ``t -> 0`` the
scaled commutator ``(f *_t g - g *_t f) / t`` converges to ``1/(2 pi i)``
times the bracket computed by :func:`groupoidlab.poisson.poisson_bracket`;
:func:`classical_limit_error_table` measures that convergence.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .algebroid import AlgebroidData
from .charts import GroupoidChart, _in_box
from .errors import (
    ConvergenceError,
    DomainError,
    GroupoidLabError,
    SingularJacobianError,
)
from .grids import GridSpec, SampledSymbol, interpolate, scale_of
from .poisson import TWO_PI_I, _mu_base, poisson_bracket
from .symbols import SymbolSpec

Operand = Union[SymbolSpec, SampledSymbol]

_JACOBIAN_STEP = 1e-6


def product_w_jacobian(chart: GroupoidChart, u, v, w) -> np.ndarray:
    """(..., m, m) Jacobian of the product law in its last argument."""
    if chart.product_w_jacobian is not None:
        return np.asarray(chart.product_w_jacobian(u, v, w), dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    m = chart.fiber_dim
    batch = np.broadcast_shapes(u.shape[:-1], v.shape[:-1], w.shape[:-1])
    jac = np.empty(batch + (m, m))
    for l in range(m):
        dw = np.zeros(m)
        dw[l] = _JACOBIAN_STEP
        plus = chart.product(u, v, w + dw)
        minus = chart.product(u, v, w - dw)
        jac[..., :, l] = (plus - minus) / (2.0 * _JACOBIAN_STEP)
    return jac


def solve_product(
    chart: GroupoidChart,
    u,
    v,
    target,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> np.ndarray:
    """Solve ``product(u, v, w) = target`` for ``w`` (batched).

    Uses the chart's closed-form solver when present, otherwise Newton from
    ``w = target - v``.  Raises ConvergenceError, SingularJacobianError or
    DomainError (iterate left the fiber box).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    target = np.asarray(target, dtype=float)
    if chart.product_solver is not None:
        w = np.asarray(chart.product_solver(u, v, target), dtype=float)
        residual = chart.product(u, v, w) - target
        worst = float(np.max(np.abs(residual))) if residual.size else 0.0
        if worst > tol:
            raise ConvergenceError(
                f"closed-form product solver violates its contract: residual {worst:.3e}"
            )
        return w

    w = (target - v).astype(float)
    batch = np.broadcast_shapes(u.shape[:-1], v.shape[:-1], target.shape[:-1])
    w = np.broadcast_to(w, batch + (chart.fiber_dim,)).copy()
    for _ in range(max_iter):
        residual = chart.product(u, v, w) - target
        worst = float(np.max(np.abs(residual))) if residual.size else 0.0
        if worst <= tol:
            return w
        jac = product_w_jacobian(chart, u, v, w)
        try:
            step = np.linalg.solve(jac, residual[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError(f"singular Jacobian in product solve: {exc}")
        w = w - step
        if not np.all(_in_box(w, chart.fiber_box)):
            raise DomainError("Newton iterate for the product solve left the fiber box")
    raise ConvergenceError(
        f"product solve did not reach {tol:.1e} in {max_iter} iterations "
        f"(residual {worst:.3e})"
    )


def haar_density(chart: GroupoidChart, u, v) -> np.ndarray:
    """Chart density of the left-invariant fiber measure (see module docs).

    ``rho(u, v) = unit_weight(source_map(u, v)) / |det d_w product(u, v, 0)|``;
    positive wherever defined, equal to the unit weight at ``v = 0``.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    sigma = chart.source_map(u, v)
    mu = np.asarray(chart.unit_weight(sigma), dtype=float)
    zeros = np.zeros_like(v)
    jac = product_w_jacobian(chart, u, v, zeros)
    det = np.abs(np.linalg.det(jac))
    if det.size and float(np.min(det)) < 1e-13:
        raise SingularJacobianError("product Jacobian is singular at the unit section")
    return mu / det


def left_invariance_residual(
    chart: GroupoidChart, sample_count: int = 100, seed: int = 0, shrink: float = 0.25
) -> float:
    """Max violation of the density's left-invariance identity at random points."""
    rng = np.random.default_rng(seed)

    def draw(box):
        if box.shape[0] == 0:
            return np.empty((sample_count, 0))
        center = 0.5 * (box[:, 0] + box[:, 1])
        half = 0.5 * (box[:, 1] - box[:, 0]) * shrink
        return center + (2.0 * rng.random((sample_count, box.shape[0])) - 1.0) * half

    u = draw(chart.base_box)
    v = draw(chart.fiber_box)
    w = draw(chart.fiber_box)
    keep = _in_box(chart.product(u, v, w), chart.fiber_box)
    keep &= _in_box(chart.source_map(u, v), chart.base_box)
    u, v, w = u[keep], v[keep], w[keep]
    if u.shape[0] == 0:
        raise GroupoidLabError("no admissible sample points for the invariance check")

    lhs = haar_density(chart, u, chart.product(u, v, w)) * np.abs(
        np.linalg.det(product_w_jacobian(chart, u, v, w))
    )
    rhs = haar_density(chart, chart.source_map(u, v), w)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# deformation field
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeformationField:
    """Chart, grid, symbol pair and scale sweep for the limit study.

    The sections are constant in blow-up coordinates: at every ``t`` the same
    coordinate expressions ``f0`` and ``g0`` are used.  Every ``t`` must keep
    all evaluation points inside the chart boxes and the sweep must decrease
    strictly in magnitude toward 0.
    """

    chart: GroupoidChart
    grid: GridSpec
    f0: SymbolSpec
    g0: SymbolSpec
    t_values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "t_values", tuple(float(t) for t in self.t_values))
        problems = deformation_domain_problems(self.chart, self.grid, self.t_values)
        if problems:
            raise GroupoidLabError("; ".join(problems))


def deformation_domain_problems(
    chart: GroupoidChart, grid: GridSpec, t_values: Sequence[float]
) -> list[str]:
    """All violations of the sweep preconditions (empty list when admissible)."""
    problems = []
    if grid.fiber_dim != chart.fiber_dim or grid.base_dim != chart.base_dim:
        problems.append(
            f"grid dims ({grid.base_dim},{grid.fiber_dim}) do not match chart "
            f"dims ({chart.base_dim},{chart.fiber_dim})"
        )
        return problems
    mags = [abs(t) for t in t_values]
    if any(t == 0.0 for t in t_values):
        problems.append("t must be nonzero in sweep")
    if any(b >= a for a, b in zip(mags, mags[1:])):
        problems.append("t values must decrease strictly in magnitude toward 0")
    for k, ax in enumerate(grid.fiber):
        lo, hi = chart.fiber_box[k]
        for t in t_values:
            reach = abs(t) * ax.half_width
            if reach > hi or -reach < lo:
                problems.append(
                    f"t={t} pushes fiber axis {k} to {reach:.3g}, outside its box "
                    f"[{lo:.3g}, {hi:.3g}]"
                )
                break
    for j, ax in enumerate(grid.base):
        lo, hi = chart.base_box[j]
        if ax.start < lo or ax.start + ax.step * (ax.count - 1) > hi:
            problems.append(f"base axis {j} leaves the chart base box")
    return problems


def _evaluate_left(op: Operand, base_pts: np.ndarray, fiber_pts: np.ndarray, grid: GridSpec) -> np.ndarray:
    if isinstance(op, SymbolSpec):
        return op.evaluate(base_pts, fiber_pts)
    # left factor is only read at grid nodes: reshape its samples
    K = base_pts.shape[0] if base_pts.ndim == 3 else 1
    return op.values.reshape(K, -1)


def _evaluate_right(op: Operand, base_pts: np.ndarray, fiber_pts: np.ndarray) -> np.ndarray:
    if isinstance(op, SymbolSpec):
        return op.evaluate(base_pts, fiber_pts)
    return interpolate(op, base_pts, fiber_pts)


def deformed_product(
    chart: GroupoidChart,
    grid: GridSpec,
    f0: Operand,
    g0: Operand,
    t: float,
    workers: int = 1,
) -> SampledSymbol:
    """Deformed convolution of two sections at parameter ``t`` (see module docs).

    The unit weight enters through the fiber density ``rho``, so no separate
    weight argument exists here.  ``f0`` is only evaluated at grid nodes;
    ``g0`` is evaluated at the transported points, exactly for analytic
    symbols and by multilinear interpolation for sampled ones.  The output is
    sampled on ``grid``.  Workers only split the output into fixed chunks;
    results are identical at any worker count.
    """
    if t == 0.0:
        raise GroupoidLabError("deformed product needs t != 0")
    problems = deformation_domain_problems(chart, grid, [t])
    if problems:
        raise DomainError("; ".join(problems))

    base_pts = grid.base_points_flat()  # (K, n)
    fiber_pts = grid.fiber_points_flat()  # (H, m)
    K, H = base_pts.shape[0], fiber_pts.shape[0]
    m = chart.fiber_dim

    u3 = base_pts[:, None, :]  # (K, 1, n)
    eta = fiber_pts[None, :, :]  # (1, H, m)
    v_eta = t * eta

    sigma = chart.source_map(u3, v_eta)  # (K, H, n)
    rho = haar_density(chart, u3, v_eta)  # (K, H)
    weights = grid.fiber_weights().reshape(-1)  # (H,)
    left = _evaluate_left(f0, u3, eta, grid)  # (K, H)
    coeff = left * rho * weights

    out = np.zeros((K, H), dtype=complex)
    chunk = max(1, min(H, (1 << 22) // max(1, K * H * m)))
    starts = list(range(0, H, chunk))

    def run(start: int):
        stop = min(start + chunk, H)
        target = (t * fiber_pts[start:stop])[None, None, :, :]  # (1, 1, A, m)
        w = solve_product(
            chart,
            u3[:, :, None, :],
            v_eta[:, :, None, :],
            np.broadcast_to(target, (K, H, stop - start, m)),
        )
        scaled = w / t
        gpts_base = np.broadcast_to(sigma[:, :, None, :], (K, H, stop - start, chart.base_dim))
        gvals = _evaluate_right(g0, gpts_base, scaled)  # (K, H, A)
        out[:, start:stop] = np.einsum("kh,kha->ka", coeff, gvals, optimize=False)

    if workers <= 1 or len(starts) == 1:
        for s in starts:
            run(s)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, starts))

    return SampledSymbol(
        values=out.reshape(grid.shape), grid=grid, decay_ok=True
    )


def deformed_convolution(field: DeformationField, t: float, workers: int = 1) -> SampledSymbol:
    return deformed_product(field.chart, field.grid, field.f0, field.g0, t, workers=workers)


def scaled_commutator(field: DeformationField, t: float, workers: int = 1) -> SampledSymbol:
    """(f *_t g - g *_t f) / t, the quantity whose ``t -> 0`` limit is checked."""
    fg = deformed_product(field.chart, field.grid, field.f0, field.g0, t, workers=workers)
    gf = deformed_product(field.chart, field.grid, field.g0, field.f0, t, workers=workers)
    return SampledSymbol(
        values=(fg.values - gf.values) / t, grid=field.grid, decay_ok=True
    )


@dataclass(frozen=True)
class LimitTable:
    """Rows ``(t, error, ratio)`` of the classical-limit convergence study.

    ``error`` is the sup distance between the scaled commutator and
    ``1/(2 pi i)`` times the bracket; ``ratio`` divides each error by the
    previous row's.  ``observed_constant`` is the measured size of the scaled
    commutator at the smallest ``t`` relative to the bracket itself (the
    limiting value of that quotient is ``1/(2 pi)``).
    """

    rows: tuple[tuple[float, float, float], ...]
    bracket_sup: float
    observed_constant: float

    def ratios(self) -> list[float]:
        return [r[2] for r in self.rows[1:]]

    def errors_decreasing(self) -> bool:
        errs = [r[1] for r in self.rows]
        return all(b < a for a, b in zip(errs, errs[1:]))


def classical_limit_error_table(
    field: DeformationField,
    data: Optional[AlgebroidData] = None,
    fd_step: float = 1e-3,
    mu_on_base=None,
    workers: int = 1,
) -> LimitTable:
    """Convergence table of the scaled commutator toward the bracket limit."""
    ts = field.t_values
    if len(ts) < 3:
        raise GroupoidLabError("the sweep needs at least three t values")
    ratios = [b / a for a, b in zip(ts, ts[1:])]
    if max(ratios) - min(ratios) > 1e-2 * abs(ratios[0]):
        raise GroupoidLabError("t values must form a geometric progression")

    grid = field.grid
    if data is None:
        from .algebroid import extract_algebroid

        data = extract_algebroid(field.chart, grid.base_points_flat(), fd_step)
    mu = _mu_base(mu_on_base, grid)
    bracket = poisson_bracket(field.f0, field.g0, data, grid, mu_on_base=mu)
    target = bracket.values / TWO_PI_I
    bracket_sup = scale_of(bracket.values)

    rows = []
    prev_err = None
    last_sup = 0.0
    for t in ts:
        commutator = scaled_commutator(field, t, workers=workers)
        err = float(np.max(np.abs(commutator.values - target)))
        ratio = float("nan") if prev_err in (None, 0.0) else err / prev_err
        rows.append((float(t), err, ratio))
        prev_err = err
        last_sup = float(np.max(np.abs(commutator.values)))

    observed = last_sup / bracket_sup if bracket_sup > 0 else float("nan")
    return LimitTable(rows=tuple(rows), bracket_sup=bracket_sup, observed_constant=observed)

"""Fiberwise convolution algebra, Fourier transform, and Poisson brackets.

The bracket on the convolution side combines three families of terms built
from the tabulated algebroid data: anchor terms pairing a fiber-coordinate
multiplication with a base derivative, weight terms carrying the log-gradient
of the unit weight, and structure-constant terms differentiated along the
fiber.  Coordinate multiplications and derivatives are exact on analytic
symbols (and high-order stencils on sampled ones); only the convolutions are
numerical.

Conventions fixed here and validated end to end by the classical-limit and
intertwining tests:

* fiber measure = unit_weight(x) times Lebesgue measure in frame coordinates,
* Fourier kernel ``exp(-2 pi i <zeta, xi>)`` with no prefactor,
* ``xi_i f * dg/dx_j`` parses as (coordinate-multiplied f) convolved with
  (derivative of g),
* the fiber derivative in the structure-constant term is applied analytically
  to the first convolution factor, in an explicitly antisymmetrized form so
  the bracket changes sign bitwise under swapping its arguments.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .algebroid import AlgebroidData
from .charts import GroupoidChart
from .errors import (
    DecayError,
    DecayWarning,
    GridMismatchError,
    GroupoidLabError,
    MissingDataError,
)
from .grids import (
    GridSpec,
    SampledSymbol,
    derive_base,
    derive_fiber,
    fiber_coordinate_multiply,
    require_same_grid,
    scale_of,
)
from .symbols import SymbolSpec, eval_symbol

TWO_PI_I = 2j * np.pi

Operand = Union[SymbolSpec, SampledSymbol]

# preference order for tie-breaking: charts that fix only one of the two
# signs (no anchor, or no structure constants) still report the same pair
SIGN_CHOICES = ((-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0))


def unit_weight_on_grid(chart: GroupoidChart, grid: GridSpec) -> np.ndarray:
    """Unit weight evaluated at the base nodes, shaped like the base mesh."""
    pts = grid.base_points_flat()
    mu = np.asarray(chart.unit_weight(pts), dtype=float)
    if np.any(mu <= 0):
        raise GroupoidLabError("unit weight must be positive on the base grid")
    return mu.reshape(grid.base_shape)


def _mu_base(mu_on_base, grid: GridSpec) -> np.ndarray:
    if mu_on_base is None:
        return np.ones(grid.base_shape)
    mu = np.asarray(mu_on_base, dtype=float)
    if mu.shape != grid.base_shape:
        raise GridMismatchError(
            f"unit weight shape {mu.shape} does not match base shape {grid.base_shape}"
        )
    return mu


def _with_fiber_axes(base_array: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.asarray(base_array).reshape(np.shape(base_array) + (1,) * grid.fiber_dim)


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------

def _convolve_values(fv: np.ndarray, gv: np.ndarray, grid: GridSpec, mu: np.ndarray) -> np.ndarray:
    counts = grid.fiber_shape
    nb = grid.base_dim
    m = grid.fiber_dim
    half = [(c - 1) // 2 for c in counts]

    pad_shape = fv.shape[:nb] + tuple(2 * c - 1 for c in counts)
    padded = np.zeros(pad_shape, dtype=complex)
    insert = (slice(None),) * nb + tuple(
        slice(half[i], half[i] + counts[i]) for i in range(m)
    )
    padded[insert] = gv

    weights = grid.fiber_weights()
    out = np.zeros(fv.shape, dtype=complex)
    for b in np.ndindex(*counts):
        fb = fv[(Ellipsis,) + b]
        coeff = weights[b]
        if nb:
            fb = fb.reshape(fb.shape + (1,) * m)
        window = (slice(None),) * nb + tuple(
            slice(2 * half[i] - b[i], 2 * half[i] - b[i] + counts[i]) for i in range(m)
        )
        out += (coeff * fb) * padded[window]
    return out * _with_fiber_axes(mu, grid)


def fiber_convolve(f: SampledSymbol, g: SampledSymbol, mu_on_base=None) -> SampledSymbol:
    """Fiberwise convolution ``sum_eta f(x, eta) g(x, xi - eta) mu(x) d eta``.

    Trapezoid weights on the fiber grid; the second factor is read at shifted
    nodes (differences of nodes are nodes on these grids) and treated as zero
    outside the grid.  The base point is a parameter throughout.
    """
    grid = require_same_grid(f, g)
    mu = _mu_base(mu_on_base, grid)
    return SampledSymbol(
        values=_convolve_values(f.values, g.values, grid, mu),
        grid=grid,
        decay_ok=f.decay_ok and g.decay_ok,
    )


# ---------------------------------------------------------------------------
# Fourier transform
# ---------------------------------------------------------------------------

def _check_base_axes(a: GridSpec, b: GridSpec):
    if a.base != b.base:
        raise GridMismatchError("grids disagree on base axes")


def fourier_transform(f: SampledSymbol, mu_on_base=None, dual: GridSpec | None = None) -> SampledSymbol:
    """Fiberwise transform with kernel ``exp(-2 pi i <zeta, xi>)``.

    Returns samples on ``dual`` (default: the conjugate grid, whose spacing
    is the reciprocal of the primal span).
    """
    grid = f.grid
    if dual is None:
        dual = grid.dual()
    _check_base_axes(grid, dual)
    mu = _mu_base(mu_on_base, grid)
    nb = grid.base_dim
    vals = f.values.astype(complex)
    for k in range(grid.fiber_dim):
        ax = grid.fiber[k]
        dax = dual.fiber[k]
        kernel = np.exp(-TWO_PI_I * np.outer(dax.nodes, ax.nodes)) * ax.trapezoid_weights()
        moved = np.moveaxis(vals, nb + k, -1)
        vals = np.moveaxis(
            np.einsum("da,...a->...d", kernel, moved, optimize=False), -1, nb + k
        )
    vals = vals * _with_fiber_axes(mu, dual)
    return SampledSymbol.wrap(vals, dual)


def inverse_fourier(F: SampledSymbol, mu_on_base=None, primal: GridSpec | None = None) -> SampledSymbol:
    """Inverse of :func:`fourier_transform` under the same convention."""
    dual = F.grid
    if primal is None:
        raise ValueError("inverse_fourier needs the primal grid")
    _check_base_axes(dual, primal)
    mu = _mu_base(mu_on_base, primal)
    nb = dual.base_dim
    vals = F.values.astype(complex)
    for k in range(dual.fiber_dim):
        dax = dual.fiber[k]
        ax = primal.fiber[k]
        kernel = np.exp(+TWO_PI_I * np.outer(ax.nodes, dax.nodes)) * dax.trapezoid_weights()
        moved = np.moveaxis(vals, nb + k, -1)
        vals = np.moveaxis(
            np.einsum("da,...a->...d", kernel, moved, optimize=False), -1, nb + k
        )
    vals = vals / _with_fiber_axes(mu, primal)
    return SampledSymbol.wrap(vals, primal)


def select_dual_grid(
    grid: GridSpec,
    sampled: list[SampledSymbol],
    mu_on_base=None,
    threshold: float = 1e-10,
    strict: bool = False,
) -> GridSpec:
    """Conjugate dual grid, with a decay check at its boundary.

    The conjugate grid already spans every frequency the primal sampling can
    represent (the discrete transform is periodic beyond it), so no widening
    can help: when a transform is still above ``threshold`` of its peak at
    the boundary the primal grid is too coarse for that symbol.  That is
    reported as a warning, or a DecayError under ``strict``; downstream
    residuals then sit at the quadrature-limited level.
    """
    dual = grid.dual()
    worst = 0.0
    for s in sampled:
        F = fourier_transform(s, mu_on_base, dual)
        worst = max(worst, _boundary_fraction(F.values))
    if worst >= threshold:
        message = (
            f"a transform only decays to {worst:.3e} of its peak at the dual "
            f"boundary (threshold {threshold:.0e}); the primal grid is too coarse"
        )
        if strict:
            raise DecayError(message)
        warnings.warn(message, DecayWarning, stacklevel=2)
    return dual


def _boundary_fraction(values: np.ndarray) -> float:
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if peak == 0.0:
        return 0.0
    worst = 0.0
    for axis in range(values.ndim):
        sl = [slice(None)] * values.ndim
        for edge in (0, -1):
            sl[axis] = edge
            worst = max(worst, float(np.max(np.abs(values[tuple(sl)]))))
    return worst / peak


# ---------------------------------------------------------------------------
# bracket on the convolution side
# ---------------------------------------------------------------------------

def _check_alignment(data: AlgebroidData, grid: GridSpec):
    pts = grid.base_points_flat()
    if data.base_points.shape != pts.shape or not np.array_equal(data.base_points, pts):
        raise MissingDataError(
            "algebroid data is not tabulated at the base nodes of this grid"
        )


def _op_grid_check(op: Operand, grid: GridSpec):
    if isinstance(op, SampledSymbol) and op.grid != grid:
        raise GridMismatchError("sampled operand lives on a different grid")


def _op_fiber_mult(op: Operand, index: int, grid: GridSpec) -> Operand:
    if isinstance(op, SymbolSpec):
        return op.fiber_multiply(index)
    return fiber_coordinate_multiply(op, index)


def _op_derive(op: Operand, kind: str, index: int, grid: GridSpec) -> Operand:
    if isinstance(op, SymbolSpec):
        return op.derivative(kind, index)
    return derive_base(op, index) if kind == "x" else derive_fiber(op, index)


def _op_values(op: Operand, grid: GridSpec, strict: bool) -> np.ndarray:
    if isinstance(op, SymbolSpec):
        return eval_symbol(op, grid, strict=strict).values
    return op.values


def poisson_bracket(
    f: Operand,
    g: Operand,
    data: AlgebroidData,
    grid: GridSpec,
    mu_on_base=None,
    strict: bool = False,
) -> SampledSymbol:
    """Bracket of two symbols over the convolution product, sampled on ``grid``.

    ``f`` and ``g`` may be analytic symbols or samples on ``grid``; with
    sampled operands the coordinate multiplications act on node values and
    the derivatives fall back to high-order central stencils.  The result is
    antisymmetric under swapping ``f`` and ``g`` bitwise.
    """
    _check_alignment(data, grid)
    _op_grid_check(f, grid)
    _op_grid_check(g, grid)
    mu = _mu_base(mu_on_base, grid)
    n, m = grid.base_dim, grid.fiber_dim
    base_shape = grid.base_shape

    anchor = data.anchor.reshape(base_shape + (m, n))
    structure = data.structure.reshape(base_shape + (m, m, m))
    log_grad = data.log_weight_grad.reshape(base_shape + (n,))

    conv = lambda av, bv: _convolve_values(av, bv, grid, mu)

    f_vals = _op_values(f, grid, strict)
    g_vals = _op_values(g, grid, strict)
    f_mult = [_op_values(_op_fiber_mult(f, i, grid), grid, strict) for i in range(m)]
    g_mult = [_op_values(_op_fiber_mult(g, i, grid), grid, strict) for i in range(m)]
    f_dx = [_op_values(_op_derive(f, "x", j, grid), grid, strict) for j in range(n)]
    g_dx = [_op_values(_op_derive(g, "x", j, grid), grid, strict) for j in range(n)]

    out = np.zeros(grid.shape, dtype=complex)

    # anchor and weight terms
    for i in range(m):
        convs_weight = None
        for j in range(n):
            a_ij = anchor[..., i, j]
            lg_j = log_grad[..., j]
            if np.any(a_ij != 0.0):
                diff = conv(f_mult[i], g_dx[j]) - conv(g_mult[i], f_dx[j])
                out += TWO_PI_I * _with_fiber_axes(a_ij, grid) * diff
                coupling = a_ij * lg_j
                if np.any(coupling != 0.0):
                    if convs_weight is None:
                        convs_weight = conv(f_mult[i], g_vals) - conv(g_mult[i], f_vals)
                    out += TWO_PI_I * _with_fiber_axes(coupling, grid) * convs_weight

    # structure-constant terms, explicitly antisymmetrized
    d_cache: dict = {}

    def d_first(which: str, i: int, k: int) -> np.ndarray:
        key = (which, i, k)
        if key not in d_cache:
            source = f if which == "f" else g
            op = _op_derive(_op_fiber_mult(source, i, grid), "xi", k, grid)
            d_cache[key] = _op_values(op, grid, strict)
        return d_cache[key]

    for i in range(m):
        for j in range(m):
            for k in range(m):
                c_ijk = structure[..., i, j, k]
                if not np.any(c_ijk != 0.0):
                    continue
                term = conv(d_first("f", i, k), g_mult[j]) - conv(
                    d_first("g", i, k), f_mult[j]
                )
                out += (-0.5 * TWO_PI_I) * _with_fiber_axes(c_ijk, grid) * term

    return SampledSymbol(values=out, grid=grid, decay_ok=True)


# ---------------------------------------------------------------------------
# bracket on the dual side
# ---------------------------------------------------------------------------

def dual_poisson_bracket(
    F: SampledSymbol,
    G: SampledSymbol,
    data: AlgebroidData,
    signs: tuple[float, float] = (-1.0, -1.0),
) -> SampledSymbol:
    """Poisson bracket of fiberwise transforms on the dual grid.

    ``signs`` fixes the orientation of the anchor part and of the
    structure-constant part; :func:`intertwining_residual` discovers the pair
    that matches the convolution-side bracket through the Fourier transform.
    Derivatives are central differences on the dual grid.
    """
    grid = require_same_grid(F, G)
    _check_alignment(data, grid)
    s1, s2 = float(signs[0]), float(signs[1])
    n, m = grid.base_dim, grid.fiber_dim
    base_shape = grid.base_shape

    anchor = data.anchor.reshape(base_shape + (m, n))
    structure = data.structure.reshape(base_shape + (m, m, m))

    F_zeta = [derive_fiber(F, i).values for i in range(m)]
    G_zeta = [derive_fiber(G, i).values for i in range(m)]
    F_x = [derive_base(F, j).values for j in range(n)]
    G_x = [derive_base(G, j).values for j in range(n)]

    out = np.zeros(grid.shape, dtype=complex)
    for i in range(m):
        for j in range(n):
            a_ij = anchor[..., i, j]
            if np.any(a_ij != 0.0):
                out += (
                    s1
                    * _with_fiber_axes(a_ij, grid)
                    * (F_zeta[i] * G_x[j] - G_zeta[i] * F_x[j])
                )
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(m):
                c_ijk = structure[..., i, j, k]
                if not np.any(c_ijk != 0.0):
                    continue
                ax = grid.fiber[k]
                shape = [1] * len(grid.shape)
                shape[grid.base_dim + k] = ax.count
                zeta_k = ax.nodes.reshape(shape)
                out += (
                    s2
                    * _with_fiber_axes(c_ijk, grid)
                    * zeta_k
                    * (F_zeta[i] * G_zeta[j] - F_zeta[j] * G_zeta[i])
                )
    return SampledSymbol(values=out, grid=grid, decay_ok=True)


# ---------------------------------------------------------------------------
# intertwining check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntertwiningResult:
    residual: float
    signs: tuple[float, float]
    per_sign: dict
    dual: GridSpec


def intertwining_residual(
    f: SymbolSpec,
    g: SymbolSpec,
    data: AlgebroidData,
    grid: GridSpec,
    mu_on_base=None,
    dual: GridSpec | None = None,
    strict: bool = False,
) -> IntertwiningResult:
    """Mismatch between the transformed bracket and the dual-side bracket.

    Requires a constant unit weight.  Returns the smallest relative sup
    mismatch over the four sign orientations of the dual bracket, with the
    minimizing pair; callers compare the pair across symbol pairs and charts.
    """
    mu = _mu_base(mu_on_base, grid)
    if mu.size and float(np.max(np.abs(mu - 1.0))) > 1e-13:
        raise GroupoidLabError("intertwining check requires unit weight == 1")

    fs = eval_symbol(f, grid, strict=strict, name="f")
    gs = eval_symbol(g, grid, strict=strict, name="g")
    bracket = poisson_bracket(f, g, data, grid, mu_on_base=mu, strict=strict)

    if dual is None:
        dual = select_dual_grid(grid, [fs, gs, bracket], mu_on_base=mu, strict=strict)
    lhs = fourier_transform(bracket, mu, dual).values
    Ff = fourier_transform(fs, mu, dual)
    Fg = fourier_transform(gs, mu, dual)

    per_sign = {}
    best_signs = None
    best = np.inf
    for signs in SIGN_CHOICES:
        rhs = dual_poisson_bracket(Ff, Fg, data, signs).values
        residual = float(np.max(np.abs(lhs - rhs))) / scale_of(lhs, rhs)
        per_sign[signs] = residual
        if residual < best:
            best = residual
            best_signs = signs
    return IntertwiningResult(residual=best, signs=best_signs, per_sign=per_sign, dual=dual)


# ---------------------------------------------------------------------------
# convention checks used by the fourier-check command
# ---------------------------------------------------------------------------

def roundtrip_residual(f: SymbolSpec, grid: GridSpec, mu_on_base=None, dual=None, strict=False) -> float:
    fs = eval_symbol(f, grid, strict=strict)
    mu = _mu_base(mu_on_base, grid)
    if dual is None:
        dual = select_dual_grid(grid, [fs], mu_on_base=mu, strict=strict)
    F = fourier_transform(fs, mu, dual)
    back = inverse_fourier(F, mu, grid)
    return float(np.max(np.abs(back.values - fs.values))) / scale_of(fs.values)


def convolution_theorem_residual(
    f: SymbolSpec, g: SymbolSpec, grid: GridSpec, mu_on_base=None, dual=None, strict=False
) -> float:
    fs = eval_symbol(f, grid, strict=strict)
    gs = eval_symbol(g, grid, strict=strict)
    mu = _mu_base(mu_on_base, grid)
    conv = fiber_convolve(fs, gs, mu)
    if dual is None:
        dual = select_dual_grid(grid, [fs, gs, conv], mu_on_base=mu, strict=strict)
    lhs = fourier_transform(conv, mu, dual).values
    rhs = fourier_transform(fs, mu, dual).values * fourier_transform(gs, mu, dual).values
    return float(np.max(np.abs(lhs - rhs))) / scale_of(lhs, rhs)

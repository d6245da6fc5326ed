"""Uniform rectangular grids with trapezoidal quadrature, and sampled symbols.

Fiber axes are symmetric about 0 with an odd node count, so 0 is a node and
every difference of two nodes is again a node value.  That keeps the fiber
convolution free of interpolation between same-grid symbols; interpolation is
only ever used when evaluating a sampled symbol at off-grid points (deformed
products with sampled factors).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError

_STENCIL_6 = (
    (-3, -1.0 / 60.0),
    (-2, 3.0 / 20.0),
    (-1, -3.0 / 4.0),
    (1, 3.0 / 4.0),
    (2, -3.0 / 20.0),
    (3, 1.0 / 60.0),
)


@dataclass(frozen=True)
class Axis:
    """Uniform 1-D node set ``start + step * arange(count)``."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if self.step <= 0.0:
            raise ValueError("axis step must be positive")
        if self.count < 2:
            raise ValueError("axis needs at least two nodes")

    @classmethod
    def centered(cls, half_width: float, intervals: int, center: float = 0.0) -> "Axis":
        """Axis spanning ``[center - half_width, center + half_width]``."""
        if half_width <= 0:
            raise ValueError("half_width must be positive")
        if intervals < 1:
            raise ValueError("intervals must be positive")
        step = 2.0 * half_width / intervals
        return cls(start=center - half_width, step=step, count=intervals + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    @property
    def half_width(self) -> float:
        return 0.5 * self.step * (self.count - 1)

    @property
    def center(self) -> float:
        return self.start + self.half_width

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.count, self.step)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return abs(self.center) <= tol * max(1.0, self.half_width)

    def dual(self, widen: int = 1) -> "Axis":
        """Frequency axis conjugate to this one.

        Spacing is the reciprocal of the span, so the inverse transform's
        periodization sits exactly one span away; ``widen`` multiplies the
        covered frequency half-width without changing the spacing.
        """
        if widen < 1:
            raise ValueError("widen must be >= 1")
        span = self.step * (self.count - 1)
        dstep = 1.0 / span
        half = widen * (self.count - 1) // 2 * 2  # even interval count
        count = half + 1
        return Axis(start=-0.5 * dstep * (count - 1), step=dstep, count=count)


@dataclass(frozen=True)
class GridSpec:
    """Product grid: base axes (may be none) times fiber axes (at least one)."""

    base: tuple[Axis, ...]
    fiber: tuple[Axis, ...]
    quadrature: str = "trapezoidal"

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(self.base))
        object.__setattr__(self, "fiber", tuple(self.fiber))
        if self.quadrature != "trapezoidal":
            raise ValueError(f"unsupported quadrature {self.quadrature!r}")
        if not self.fiber:
            raise ValueError("grid needs at least one fiber axis")
        for ax in self.fiber:
            if ax.count % 2 == 0:
                raise ValueError("fiber axes need an odd node count (even interval count)")
            if not ax.is_symmetric():
                raise ValueError("fiber axes must be symmetric about 0")

    # -- shapes ------------------------------------------------------------
    @property
    def base_shape(self) -> tuple[int, ...]:
        return tuple(ax.count for ax in self.base)

    @property
    def fiber_shape(self) -> tuple[int, ...]:
        return tuple(ax.count for ax in self.fiber)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.base_shape + self.fiber_shape

    @property
    def base_dim(self) -> int:
        return len(self.base)

    @property
    def fiber_dim(self) -> int:
        return len(self.fiber)

    # -- node arrays ---------------------------------------------------------
    def base_mesh(self) -> np.ndarray:
        """(base_shape..., n) array of base points; shape (0,) when n = 0."""
        if not self.base:
            return np.zeros((0,))
        axes = [ax.nodes for ax in self.base]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def fiber_mesh(self) -> np.ndarray:
        """(fiber_shape..., m) array of fiber points."""
        axes = [ax.nodes for ax in self.fiber]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def base_points_flat(self) -> np.ndarray:
        """(K, n) array of base nodes in C order; (1, 0) when n = 0."""
        if not self.base:
            return np.zeros((1, 0))
        return self.base_mesh().reshape(-1, self.base_dim)

    def fiber_points_flat(self) -> np.ndarray:
        return self.fiber_mesh().reshape(-1, self.fiber_dim)

    def fiber_weights(self) -> np.ndarray:
        """fiber_shape array of tensor-product trapezoid weights."""
        out = np.ones(self.fiber_shape)
        for axis_index, ax in enumerate(self.fiber):
            shape = [1] * self.fiber_dim
            shape[axis_index] = ax.count
            out = out * ax.trapezoid_weights().reshape(shape)
        return out

    def base_weights(self) -> np.ndarray:
        out = np.ones(self.base_shape)
        for axis_index, ax in enumerate(self.base):
            shape = [1] * self.base_dim
            shape[axis_index] = ax.count
            out = out * ax.trapezoid_weights().reshape(shape)
        return out

    def dual(self, widen: int = 1) -> "GridSpec":
        """Grid with each fiber axis replaced by its frequency conjugate."""
        return GridSpec(
            base=self.base,
            fiber=tuple(ax.dual(widen) for ax in self.fiber),
            quadrature=self.quadrature,
        )

    def refine_fiber(self) -> "GridSpec":
        """Halve every fiber spacing, keeping spans."""
        return GridSpec(
            base=self.base,
            fiber=tuple(
                Axis(ax.start, ax.step / 2.0, 2 * ax.count - 1) for ax in self.fiber
            ),
            quadrature=self.quadrature,
        )

    def refine_all(self) -> "GridSpec":
        return GridSpec(
            base=tuple(Axis(ax.start, ax.step / 2.0, 2 * ax.count - 1) for ax in self.base),
            fiber=tuple(Axis(ax.start, ax.step / 2.0, 2 * ax.count - 1) for ax in self.fiber),
            quadrature=self.quadrature,
        )


@dataclass(frozen=True)
class SampledSymbol:
    """Complex samples of a symbol on a grid, with a boundary-decay flag.

    ``decay_ok`` records whether the boundary-layer magnitude stays below
    1e-10 of the max magnitude; operations that rely on compact support may
    warn or refuse when it is False.
    """

    values: np.ndarray
    grid: GridSpec
    decay_ok: bool = True

    @staticmethod
    def wrap(values: np.ndarray, grid: GridSpec) -> "SampledSymbol":
        values = np.asarray(values, dtype=complex)
        if values.shape != grid.shape:
            raise GridMismatchError(
                f"values shape {values.shape} does not match grid shape {grid.shape}"
            )
        return SampledSymbol(values=values, grid=grid, decay_ok=_boundary_ok(values))

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def _boundary_ok(values: np.ndarray, threshold: float = 1e-10) -> bool:
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if peak == 0.0:
        return True
    worst = 0.0
    for axis in range(values.ndim):
        sl = [slice(None)] * values.ndim
        for edge in (0, -1):
            sl[axis] = edge
            worst = max(worst, float(np.max(np.abs(values[tuple(sl)]))))
    return worst < threshold * peak


def require_same_grid(*sampled: SampledSymbol) -> GridSpec:
    grid = sampled[0].grid
    for s in sampled[1:]:
        if s.grid != grid:
            raise GridMismatchError("operands live on different grids")
    return grid


def scale_of(*arrays, floor: float = 1e-30) -> float:
    """Residual normalization: the largest sup magnitude among the arrays."""
    best = floor
    for arr in arrays:
        arr = np.asarray(arr)
        if arr.size:
            best = max(best, float(np.max(np.abs(arr))))
    return best


# ---------------------------------------------------------------------------
# stencils and interpolation
# ---------------------------------------------------------------------------

def _shifted(values: np.ndarray, axis: int, shift: int) -> np.ndarray:
    """values[..., i + shift, ...] with zero fill outside the array."""
    out = np.zeros_like(values)
    n = values.shape[axis]
    src = [slice(None)] * values.ndim
    dst = [slice(None)] * values.ndim
    if shift >= 0:
        src[axis] = slice(shift, n)
        dst[axis] = slice(0, n - shift)
    else:
        src[axis] = slice(0, n + shift)
        dst[axis] = slice(-shift, n)
    out[tuple(dst)] = values[tuple(src)]
    return out


def stencil_derivative(values: np.ndarray, step: float, axis: int) -> np.ndarray:
    """Sixth-order central difference along ``axis`` with zero extension.

    Zero extension is appropriate for the decaying symbols this package
    works with; the boundary rows are accurate only when the data has
    decayed there.
    """
    values = np.asarray(values, dtype=complex)
    out = np.zeros_like(values)
    for shift, coeff in _STENCIL_6:
        out += coeff * _shifted(values, axis, shift)
    return out / step


def derive_base(sym: SampledSymbol, axis_index: int) -> SampledSymbol:
    ax = sym.grid.base[axis_index]
    vals = stencil_derivative(sym.values, ax.step, axis_index)
    return SampledSymbol(values=vals, grid=sym.grid, decay_ok=sym.decay_ok)


def derive_fiber(sym: SampledSymbol, axis_index: int) -> SampledSymbol:
    ax = sym.grid.fiber[axis_index]
    vals = stencil_derivative(sym.values, ax.step, sym.grid.base_dim + axis_index)
    return SampledSymbol(values=vals, grid=sym.grid, decay_ok=sym.decay_ok)


def fiber_coordinate_multiply(sym: SampledSymbol, axis_index: int) -> SampledSymbol:
    grid = sym.grid
    ax = grid.fiber[axis_index]
    shape = [1] * sym.values.ndim
    shape[grid.base_dim + axis_index] = ax.count
    vals = sym.values * ax.nodes.reshape(shape)
    return SampledSymbol(values=vals, grid=grid, decay_ok=sym.decay_ok)


def interpolate(sym: SampledSymbol, base_points: np.ndarray, fiber_points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of the samples, zero outside the grid.

    ``base_points`` is (..., n) and ``fiber_points`` (..., m) with a common
    batch shape; returns complex values of that batch shape.
    """
    grid = sym.grid
    axes = list(grid.base) + list(grid.fiber)
    coords = []
    if grid.base_dim:
        coords.extend(np.moveaxis(np.asarray(base_points, dtype=float), -1, 0))
    coords.extend(np.moveaxis(np.asarray(fiber_points, dtype=float), -1, 0))
    batch_shape = np.broadcast_shapes(
        *(c.shape for c in coords)
    ) if coords else ()

    lows, fracs, valid_low, valid_high = [], [], [], []
    for c, ax in zip(coords, axes):
        tpos = (np.asarray(c, dtype=float) - ax.start) / ax.step
        low = np.floor(tpos).astype(np.int64)
        frac = tpos - low
        lows.append(low)
        fracs.append(frac)
        valid_low.append((low >= 0) & (low <= ax.count - 1))
        valid_high.append((low + 1 >= 0) & (low + 1 <= ax.count - 1))

    values = sym.values
    strides = np.array(
        [int(np.prod(values.shape[k + 1 :], dtype=np.int64)) for k in range(values.ndim)],
        dtype=np.int64,
    )
    flat = values.reshape(-1)

    out = np.zeros(batch_shape, dtype=complex)
    ndim = len(axes)
    for corner in range(1 << ndim):
        weight = np.ones(batch_shape, dtype=float)
        index = np.zeros(batch_shape, dtype=np.int64)
        ok = np.ones(batch_shape, dtype=bool)
        for k in range(ndim):
            if corner >> k & 1:
                idx_k = lows[k] + 1
                weight = weight * fracs[k]
                ok = ok & valid_high[k]
            else:
                idx_k = lows[k]
                weight = weight * (1.0 - fracs[k])
                ok = ok & valid_low[k]
            index = index + np.clip(idx_k, 0, axes[k].count - 1) * strides[k]
        out += np.where(ok, weight, 0.0) * flat[index]
    return out

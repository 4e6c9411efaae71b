"""Uniform periodic grids on the n-torus and central-difference stencils.

Fields are plain numpy arrays whose *trailing* ``grid.dim`` axes are the grid
axes.  Any leading axes are tensor components, so a scalar field has shape
``grid.shape``, a covector field ``(n, *grid.shape)`` and a symmetric 2-tensor
``(n, n, *grid.shape)``.  Stencils act on the trailing axes only, which lets a
whole stack of components be differentiated in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

__all__ = [
    "PeriodicGrid",
    "partial_derivative",
    "second_partial",
    "sup_norm",
    "osc",
    "pack_sym",
    "unpack_sym",
    "sym_index_pairs",
    "check_finite",
]

MIN_NODES = 8
STENCIL_ORDERS = (2, 4)

# one-sided weights w_s for offsets s = 1, 2, ...; D f = sum w_s (f[i+s] - f[i-s]) / dx
_FIRST = {2: (0.5,), 4: (2.0 / 3.0, -1.0 / 12.0)}
# centre weight and symmetric weights; D2 f = (c0 f[i] + sum c_s (f[i+s] + f[i-s])) / dx^2
_SECOND = {2: (-2.0, (1.0,)), 4: (-2.5, (4.0 / 3.0, -1.0 / 12.0))}


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform node-centred grid on a flat torus ``prod_i [0, L_i)``.

    Parameters
    ----------
    sizes : tuple of int
        Node count per axis (at least 8 each).
    periods : tuple of float
        Physical period ``L_i`` per axis.

    Dimensions 2 and 3 are the supported base manifolds; dimension 4 only
    arises as the product grid of a 3-dimensional base with a fiber circle.
    """

    sizes: tuple[int, ...]
    periods: tuple[float, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        periods = tuple(float(p) for p in self.periods)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "periods", periods)
        if len(sizes) not in (2, 3, 4):
            raise ValueError(f"grid dimension must be 2 or 3 (4 for product grids), got {len(sizes)}")
        if len(periods) != len(sizes):
            raise ValueError(f"got {len(sizes)} sizes but {len(periods)} periods")
        if any(s < MIN_NODES for s in sizes):
            raise ValueError(f"every axis needs at least {MIN_NODES} nodes, got {sizes}")
        if not all(np.isfinite(p) and p > 0 for p in periods):
            raise ValueError(f"periods must be finite and positive, got {periods}")

    @classmethod
    def uniform(cls, dim: int, size: int, period: float = 2 * np.pi) -> PeriodicGrid:
        return cls((size,) * dim, (period,) * dim)

    @property
    def dim(self) -> int:
        return len(self.sizes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.sizes

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.sizes))

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(p / s for p, s in zip(self.periods, self.sizes))

    def axis_coords(self, axis: int) -> np.ndarray:
        # i * dx rather than linspace so coarse nodes coincide bit-exactly with fine ones
        return np.arange(self.sizes[axis]) * self.spacings[axis]

    def coords(self) -> tuple[np.ndarray, ...]:
        """Node coordinates, one full-shape array per axis (``ij`` indexing)."""
        return tuple(np.meshgrid(*(self.axis_coords(a) for a in range(self.dim)), indexing="ij"))

    def refine(self, factor: int = 2) -> PeriodicGrid:
        return PeriodicGrid(tuple(s * factor for s in self.sizes), self.periods)

    def product(self, fiber_size: int, fiber_period: float) -> PeriodicGrid:
        """Grid of ``self x S^1`` with the fiber as the last axis."""
        return PeriodicGrid(self.sizes + (fiber_size,), self.periods + (fiber_period,))


def check_finite(f: np.ndarray, what: str = "field") -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if not np.all(np.isfinite(f)):
        bad = np.argwhere(~np.isfinite(f))[0]
        raise ValueError(f"{what} has a non-finite entry at index {tuple(int(i) for i in bad)}")
    return f


def _grid_axis(f: np.ndarray, grid: PeriodicGrid, axis: int) -> int:
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis {axis} out of range for a {grid.dim}-dimensional grid")
    if f.shape[f.ndim - grid.dim:] != grid.shape:
        raise ValueError(f"field shape {f.shape} does not end with grid shape {grid.shape}")
    return f.ndim - grid.dim + axis


def _check_order(order: int) -> None:
    if order not in STENCIL_ORDERS:
        raise ValueError(f"stencil order must be one of {STENCIL_ORDERS}, got {order}")


def _d1(f, grid, axis, order):
    ax = _grid_axis(f, grid, axis)
    out = None
    for s, w in enumerate(_FIRST[order], start=1):
        term = w * (np.roll(f, -s, axis=ax) - np.roll(f, s, axis=ax))
        out = term if out is None else out + term
    return out / grid.spacings[axis]


def _d2(f, grid, axis, order):
    ax = _grid_axis(f, grid, axis)
    c0, weights = _SECOND[order]
    out = c0 * f
    for s, w in enumerate(weights, start=1):
        out = out + w * (np.roll(f, -s, axis=ax) + np.roll(f, s, axis=ax))
    return out / grid.spacings[axis] ** 2


def partial_derivative(f, grid: PeriodicGrid, axis: int, order: int = 2, check: bool = True) -> np.ndarray:
    """Central difference of ``f`` along grid ``axis`` with periodic wraparound.

    Leading (component) axes of ``f`` are carried along untouched.
    """
    _check_order(order)
    f = check_finite(f) if check else f
    return _d1(f, grid, axis, order)


def second_partial(f, grid: PeriodicGrid, axis_a: int, axis_b: int, order: int = 2,
                   check: bool = True) -> np.ndarray:
    """Second derivative ``d_a d_b f``.

    Pure second derivatives use the compact three/five point stencil; mixed ones
    compose two first differences in ascending axis order, so the result does
    not depend on the argument order.
    """
    _check_order(order)
    f = check_finite(f) if check else f
    if axis_a == axis_b:
        return _d2(f, grid, axis_a, order)
    lo, hi = sorted((axis_a, axis_b))
    return _d1(_d1(f, grid, lo, order), grid, hi, order)


def gradient(f, grid: PeriodicGrid, order: int = 2) -> np.ndarray:
    """Stack of first partials, derivative index first: ``out[i] = d_i f``."""
    return np.stack([_d1(f, grid, a, order) for a in range(grid.dim)])


def hessian(f, grid: PeriodicGrid, order: int = 2) -> np.ndarray:
    """Coordinate Hessian ``out[i, j] = d_i d_j f`` (exactly symmetric)."""
    n = grid.dim
    first = [_d1(f, grid, a, order) for a in range(n)]
    out = np.empty((n, n) + np.shape(f), dtype=np.float64)
    for i in range(n):
        out[i, i] = _d2(f, grid, i, order)
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = _d1(first[i], grid, j, order)
    return out


def sup_norm(f) -> float:
    f = check_finite(f)
    return float(np.max(np.abs(f)))


def osc(f) -> float:
    f = check_finite(f)
    return float(np.max(f) - np.min(f))


def sym_index_pairs(n: int) -> list[tuple[int, int]]:
    """Upper-triangle index pairs in storage order: (0,0), (0,1), ..., (1,1), ..."""
    return list(combinations_with_replacement(range(n), 2))


def pack_sym(t: np.ndarray) -> np.ndarray:
    """``(n, n, *S)`` symmetric field -> ``(n(n+1)/2, *S)`` upper-triangle storage."""
    n = t.shape[0]
    return np.stack([t[i, j] for i, j in sym_index_pairs(n)])


def unpack_sym(c: np.ndarray, n: int) -> np.ndarray:
    pairs = sym_index_pairs(n)
    if c.shape[0] != len(pairs):
        raise ValueError(f"expected {len(pairs)} symmetric components for n={n}, got {c.shape[0]}")
    out = np.empty((n, n) + c.shape[1:], dtype=np.float64)
    for k, (i, j) in enumerate(pairs):
        out[i, j] = out[j, i] = c[k]
    return out

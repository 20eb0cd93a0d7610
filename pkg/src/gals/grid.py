"""Regular Cartesian grids, node-centred level set storage and point location.

Values ``phi`` and gradients ``psi`` live on grid nodes.  Arrays are indexed
``[i0, ..., i(p-1)]`` with axis 0 first, i.e. ``phi[i, j]`` is the node at
``(x_i, y_j)``; ``psi`` carries one extra trailing axis of length ``p``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from ._validation import check_dimension, check_points


class OutOfDomainError(ValueError):
    """A query point lies outside the grid beyond the clamping tolerance."""

    def __init__(self, coordinate, axis: int, message: str | None = None):
        self.coordinate = coordinate
        self.axis = axis
        super().__init__(message or f"point outside domain along axis {axis}: {coordinate!r}")


@dataclass(frozen=True)
class Grid:
    """Axis aligned node grid over ``[lower, upper]``.

    Parameters
    ----------
    lower, upper : sequence of float
        Domain bounds per axis.
    shape : sequence of int
        Number of nodes per axis (at least 2).
    """

    lower: tuple
    upper: tuple
    shape: tuple

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        shape = tuple(int(n) for n in np.atleast_1d(self.shape))
        check_dimension(len(shape))
        if not (len(lower) == len(upper) == len(shape)):
            raise ValueError("lower, upper and shape must have the same length")
        for lo, hi, n in zip(lower, upper, shape):
            if not hi > lo:
                raise ValueError(f"upper bound {hi} must exceed lower bound {lo}")
            if n < 2:
                raise ValueError(f"need at least 2 nodes per axis, got {n}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def uniform(cls, n_cells: int, dim: int = 2, lower: float = 0.0, upper: float = 1.0) -> "Grid":
        """Cube ``[lower, upper]^dim`` split into ``n_cells`` cells per axis."""
        return cls((lower,) * dim, (upper,) * dim, (n_cells + 1,) * dim)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> np.ndarray:
        lo, hi, n = np.array(self.lower), np.array(self.upper), np.array(self.shape)
        return (hi - lo) / (n - 1)

    @property
    def h(self) -> float:
        return float(self.spacing.max())

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_shape(self) -> tuple:
        return tuple(n - 1 for n in self.shape)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.subtract(self.upper, self.lower)))

    @property
    def tolerance(self) -> np.ndarray:
        """Per-axis clamping tolerance: 10 ulp of the domain extent."""
        lo, hi = np.abs(self.lower), np.abs(self.upper)
        scale = np.maximum(np.maximum(lo, hi), np.subtract(self.upper, self.lower))
        return 10.0 * np.spacing(scale)

    def coordinates(self, axis: int) -> np.ndarray:
        return self.lower[axis] + np.arange(self.shape[axis]) * self.spacing[axis]

    def node_position(self, index: Sequence[int]) -> np.ndarray:
        return np.asarray(self.lower) + np.asarray(index) * self.spacing

    def nodes(self) -> np.ndarray:
        """All node positions as an ``(n_nodes, dim)`` array in C order."""
        axes = [self.coordinates(a) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def refined(self, factor: int) -> "Grid":
        return Grid(self.lower, self.upper, tuple((n - 1) * factor + 1 for n in self.shape))

    def contains(self, x, tol: bool = True) -> np.ndarray:
        x = check_points(x, self.dim)
        slack = self.tolerance if tol else 0.0
        return np.all((x >= np.asarray(self.lower) - slack) & (x <= np.asarray(self.upper) + slack), axis=1)

    def face(self, axis: int, side: int) -> "Grid":
        """Sub-grid of the boundary face ``x_axis = lower`` (side 0) or ``upper`` (side 1)."""
        if self.dim == 1:
            raise ValueError("a 1D grid has point faces; no sub-grid")
        keep = [a for a in range(self.dim) if a != axis]
        return Grid([self.lower[a] for a in keep], [self.upper[a] for a in keep], [self.shape[a] for a in keep])


@dataclass(frozen=True)
class LevelSetState:
    """Node values ``phi`` and gradients ``psi`` of a level set function at time ``t``."""

    grid: Grid
    phi: np.ndarray
    psi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        psi = np.array(self.psi, dtype=float)
        if phi.shape != self.grid.shape:
            raise ValueError(f"phi has shape {phi.shape}, grid has {self.grid.shape}")
        if psi.shape != self.grid.shape + (self.grid.dim,):
            raise ValueError(f"psi has shape {psi.shape}, expected {self.grid.shape + (self.grid.dim,)}")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(psi))):
            raise ValueError("level set data must be finite")
        phi.flags.writeable = False
        psi.flags.writeable = False
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def from_function(cls, grid: Grid, func, grad, t: float = 0.0) -> "LevelSetState":
        """Sample ``func(X)`` and ``grad(X)`` (vectorised over ``(N, p)`` points) at the nodes."""
        x = grid.nodes()
        phi = np.asarray(func(x), dtype=float).reshape(grid.shape)
        psi = np.asarray(grad(x), dtype=float).reshape(grid.shape + (grid.dim,))
        return cls(grid, phi, psi, t)

    def replace(self, phi=None, psi=None, t=None) -> "LevelSetState":
        return LevelSetState(
            self.grid,
            self.phi if phi is None else phi,
            self.psi if psi is None else psi,
            self.t if t is None else t,
        )


@dataclass(frozen=True)
class CellRef:
    """Cell multi-index and local coordinates ``xi`` in ``[0, 1]^p``."""

    cell: tuple
    xi: np.ndarray = field(compare=False)


class VertexData(NamedTuple):
    """Raw node data of one cell, vertices in lexicographic order (last axis fastest)."""

    values: np.ndarray
    gradients: np.ndarray


def vertex_offsets(p: int) -> np.ndarray:
    """The ``2^p`` vertex offsets of a cell in lexicographic order, shape ``(2^p, p)``."""
    return np.array(list(itertools.product((0, 1), repeat=p)), dtype=np.intp)


def locate_points(grid: Grid, x) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`locate`; returns ``(cells, xi)`` of shapes ``(N, p)``."""
    x = check_points(x, grid.dim)
    lower = np.asarray(grid.lower)
    upper = np.asarray(grid.upper)
    tol = grid.tolerance
    below = x < lower - tol
    above = x > upper + tol
    if np.any(below | above):
        row, axis = np.argwhere(below | above)[0]
        raise OutOfDomainError(float(x[row, axis]), int(axis))
    x = np.clip(x, lower, upper)
    dx = grid.spacing
    q = (x - lower) / dx
    nearest = np.rint(q)
    # node coordinates divided back by dx may land an ulp below the integer
    snap = np.abs(q - nearest) <= 4.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(q))
    q = np.where(snap, nearest, q)
    last = np.asarray(grid.cell_shape) - 1
    cells = np.minimum(np.floor(q).astype(np.intp), last)
    cells = np.maximum(cells, 0)
    xi = np.clip(q - cells, 0.0, 1.0)
    return cells, xi


def locate(grid: Grid, x) -> CellRef:
    """Cell containing ``x``.

    A point on an interior face belongs to the cell whose lower face it lies
    on (``xi = 0``); points on the upper domain boundary go to the last cell
    with ``xi = 1``.  Points outside the domain by more than
    :attr:`Grid.tolerance` raise :class:`OutOfDomainError`.
    """
    cells, xi = locate_points(grid, np.reshape(np.asarray(x, dtype=float), (1, grid.dim)))
    return CellRef(tuple(int(c) for c in cells[0]), xi[0])


def gather_cell(state: LevelSetState, cell: Sequence[int]) -> VertexData:
    grid = state.grid
    cell = tuple(int(c) for c in cell)
    if len(cell) != grid.dim or any(c < 0 or c > n - 2 for c, n in zip(cell, grid.shape)):
        raise IndexError(f"cell index {cell} out of range for grid of shape {grid.shape}")
    idx = tuple((np.asarray(cell) + vertex_offsets(grid.dim)).T)
    return VertexData(state.phi[idx].copy(), state.psi[idx].copy())

"""Cell-local p-cubic Hermite interpolation from node values and gradients.

Inside a cell with vertices ``v`` in ``{0,1}^p`` the interpolant is

    H(x) = sum_{v, a} phi_a^v * prod_i h_i^{a_i} w_{a_i}^{v_i}(xi_i)

with ``a`` in ``{0,1}^p`` a derivative multi-index.  Values (``|a| = 0``)
and gradients (``|a| = 1``) come from the node data; mixed derivatives
(``|a| >= 2``) are reconstructed from the gradients, see :class:`CrossScheme`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points
from .convergence import InsufficientDataError, fit_order
from .grid import Grid, LevelSetState, locate_points, vertex_offsets


class CrossScheme(str, Enum):
    """How mixed derivatives at cell vertices are reconstructed.

    ``CELL`` uses only the gradients of the cell itself (edge-centre
    differences extrapolated with weights 3/4 and -1/4).  ``CENTRAL`` uses
    centred differences of neighbouring node gradients and falls back to
    ``CELL`` at domain-boundary nodes.  ``ZERO`` drops the mixed terms; the
    interpolant then loses accuracy but advection still converges.
    """

    CELL = "cell"
    CENTRAL = "central"
    ZERO = "zero"


# ---------------------------------------------------------------------------
# 1D basis


def f(x):
    return 1.0 - 3.0 * x**2 + 2.0 * x**3


def g(x):
    return x * (1.0 - x) ** 2


def _f_d(x, order):
    if order == 0:
        return f(x)
    if order == 1:
        return 6.0 * x * (x - 1.0)
    if order == 2:
        return 12.0 * x - 6.0
    raise ValueError("derivative order must be 0, 1 or 2")


def _g_d(x, order):
    if order == 0:
        return g(x)
    if order == 1:
        return 1.0 - 4.0 * x + 3.0 * x**2
    if order == 2:
        return 6.0 * x - 4.0
    raise ValueError("derivative order must be 0, 1 or 2")


def basis_1d(v: int, alpha: int, order: int, x):
    """Derivative of order ``order`` of the 1-cubic basis ``w_alpha^v`` at ``x``.

    ``w_0^0 = f(x)``, ``w_0^1 = f(1-x)``, ``w_1^0 = g(x)``, ``w_1^1 = -g(1-x)``.
    """
    x = np.asarray(x, dtype=float)
    sign = (-1.0) ** order  # chain rule for the mirrored argument 1 - x
    if (v, alpha) == (0, 0):
        return _f_d(x, order)
    if (v, alpha) == (1, 0):
        return sign * _f_d(1.0 - x, order)
    if (v, alpha) == (0, 1):
        return _g_d(x, order)
    if (v, alpha) == (1, 1):
        return -sign * _g_d(1.0 - x, order)
    raise ValueError(f"invalid basis selector v={v}, alpha={alpha}")


def _basis_table(xi: np.ndarray, h: float, order: int) -> np.ndarray:
    """Scaled basis ``h^alpha w_alpha^v^(order)(xi) / h^order`` as ``(N, 4)``, columns (v, alpha)."""
    cols = [basis_1d(v, a, order, xi) * h**a for v in (0, 1) for a in (0, 1)]
    return np.stack(cols, axis=-1) / h**order


# ---------------------------------------------------------------------------
# cell data


@dataclass(frozen=True)
class CellData:
    """The ``4^p`` scalars defining one p-cubic.

    ``coeffs[v_0, ..., v_{p-1}, a_0, ..., a_{p-1}]`` is the (unscaled)
    derivative ``d^a phi`` at vertex ``v``.
    """

    coeffs: np.ndarray
    spacing: np.ndarray

    @property
    def dim(self) -> int:
        return self.coeffs.ndim // 2

    @classmethod
    def from_derivatives(cls, deriv: Callable, lower, spacing) -> "CellData":
        """Exact data from ``deriv(x, alpha)`` returning ``d^alpha phi`` at point ``x``."""
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        spacing = np.atleast_1d(np.asarray(spacing, dtype=float))
        p = lower.size
        coeffs = np.empty((2,) * (2 * p))
        for v in itertools.product((0, 1), repeat=p):
            x = lower + np.asarray(v) * spacing
            for a in itertools.product((0, 1), repeat=p):
                coeffs[v + a] = deriv(x, a)
        return cls(coeffs, spacing)


def _facet_cross(pi: np.ndarray, pj: np.ndarray, di: float, dj: float) -> np.ndarray:
    """Cell-based mixed derivative on a 2D facet.

    ``pi``, ``pj`` hold the ``i`` and ``j`` gradient components at the facet
    corners, shape ``(N, 2, 2)`` indexed ``[v_i, v_j]``.
    """
    e_i = (pi[:, :, 1] - pi[:, :, 0]) / dj  # edge v_i = const, centre value
    e_j = (pj[:, 1, :] - pj[:, 0, :]) / di  # edge v_j = const
    near = e_i[:, :, None] + e_j[:, None, :]
    far = e_i[:, ::-1, None] + e_j[:, None, ::-1]
    return 0.75 * near - 0.25 * far


def _cell_cross(psi_v: np.ndarray, spacing: np.ndarray) -> dict:
    """Scheme-B mixed derivatives for gathered vertex gradients ``psi_v`` of shape ``(N, 2,...,2, p)``.

    Returns ``{alpha: array (N, 2,...,2)}`` for every ``alpha`` with ``|alpha| >= 2``.
    """
    p = psi_v.shape[-1]
    out = {}
    if p == 1:
        return out
    if p == 2:
        out[(1, 1)] = _facet_cross(psi_v[..., 0], psi_v[..., 1], spacing[0], spacing[1])
        return out
    for i, j in ((0, 1), (0, 2), (1, 2)):
        k = 3 - i - j
        res = np.empty(psi_v.shape[:-1])
        for vk in (0, 1):
            facet = np.take(psi_v, vk, axis=1 + k)  # (N, 2, 2, p) indexed [v_i, v_j]
            q = _facet_cross(facet[..., i], facet[..., j], spacing[i], spacing[j])
            sl = [slice(None)] * 4
            sl[1 + k] = vk
            res[tuple(sl)] = q
        alpha = tuple(1 if a in (i, j) else 0 for a in range(3))
        out[alpha] = res
    # third derivative from the z-gradient on the xy-facet holding each vertex
    pz = psi_v[..., 2]
    triple = np.empty(psi_v.shape[:-1])
    for vz in (0, 1):
        d = (pz[:, 1, 1, vz] - pz[:, 0, 1, vz] - pz[:, 1, 0, vz] + pz[:, 0, 0, vz]) / (spacing[0] * spacing[1])
        triple[:, :, :, vz] = d[:, None, None]
    out[(1, 1, 1)] = triple
    return out


def _central_cross_nodes(state: LevelSetState) -> dict:
    """Scheme-A mixed derivatives on all nodes; NaN where a neighbour is missing."""
    psi = state.psi
    dx = state.grid.spacing
    p = state.grid.dim

    def cdiff(arr, axis):
        out = np.full(arr.shape, np.nan)
        n = arr.shape[axis]
        lo = [slice(None)] * arr.ndim
        hi = [slice(None)] * arr.ndim
        mid = [slice(None)] * arr.ndim
        lo[axis], hi[axis], mid[axis] = slice(0, n - 2), slice(2, n), slice(1, n - 1)
        out[tuple(mid)] = (arr[tuple(hi)] - arr[tuple(lo)]) / (2.0 * dx[axis])
        return out

    out = {}
    for i, j in itertools.combinations(range(p), 2):
        alpha = tuple(1 if a in (i, j) else 0 for a in range(p))
        out[alpha] = 0.5 * (cdiff(psi[..., j], i) + cdiff(psi[..., i], j))
    if p == 3:
        out[(1, 1, 1)] = cdiff(cdiff(psi[..., 2], 0), 1)
    return out


def cell_coefficients(state: LevelSetState, cells: np.ndarray, scheme=CrossScheme.CELL) -> np.ndarray:
    """Batched :class:`CellData` coefficients, shape ``(N,) + (2,) * 2p``."""
    scheme = CrossScheme(scheme)
    grid = state.grid
    p = grid.dim
    cells = np.asarray(cells, dtype=np.intp).reshape(-1, p)
    n = cells.shape[0]
    offsets = vertex_offsets(p)
    idx = cells[:, None, :] + offsets[None, :, :]  # (N, 2^p, p)
    flat = np.ravel_multi_index(tuple(np.moveaxis(idx, -1, 0)), grid.shape)
    vshape = (n,) + (2,) * p
    phi_v = state.phi.reshape(-1)[flat].reshape(vshape)
    psi_v = state.psi.reshape(-1, p)[flat].reshape(vshape + (p,))

    coeffs = np.zeros((n,) + (2,) * (2 * p))
    zero = (0,) * p
    coeffs[(Ellipsis,) + zero] = phi_v
    for i in range(p):
        unit = tuple(1 if a == i else 0 for a in range(p))
        coeffs[(Ellipsis,) + unit] = psi_v[..., i]
    if scheme is CrossScheme.ZERO or p == 1:
        return coeffs
    cross = _cell_cross(psi_v, grid.spacing)
    if scheme is CrossScheme.CENTRAL:
        nodal = _central_cross_nodes(state)
        for alpha, values in nodal.items():
            central = values.reshape(-1)[flat].reshape(vshape)
            cross[alpha] = np.where(np.isnan(central), cross[alpha], central)
    for alpha, values in cross.items():
        coeffs[(Ellipsis,) + alpha] = values
    return coeffs


def reconstruct_cross(state: LevelSetState, cell: Sequence[int], scheme=CrossScheme.CELL) -> CellData:
    """Complete data (including mixed derivatives) of one cell."""
    grid = state.grid
    cell = np.asarray(cell, dtype=np.intp).reshape(1, grid.dim)
    if np.any(cell < 0) or np.any(cell[0] > np.asarray(grid.shape) - 2):
        raise IndexError(f"cell index {tuple(cell[0])} out of range")
    return CellData(cell_coefficients(state, cell, scheme)[0], grid.spacing.copy())


def _contract(coeffs: np.ndarray, xi: np.ndarray, spacing, alpha) -> np.ndarray:
    n = coeffs.shape[0]
    p = xi.shape[1]
    order = [0] + [1 + k for pair in zip(range(p), range(p, 2 * p)) for k in pair]
    t = coeffs.transpose(order).reshape((n,) + (4,) * p)
    for axis in reversed(range(p)):
        w = _basis_table(xi[:, axis], float(spacing[axis]), int(alpha[axis]))
        t = np.einsum("n...k,nk->n...", t, w)
    return t


def evaluate(cell: CellData, xi, alpha=None) -> float:
    """``d^alpha H`` at local coordinates ``xi`` of one cell (physical units)."""
    p = cell.dim
    xi = np.asarray(xi, dtype=float).reshape(1, p)
    alpha = (0,) * p if alpha is None else tuple(int(a) for a in np.atleast_1d(alpha))
    if len(alpha) != p or any(a < 0 or a > 2 for a in alpha):
        raise ValueError(f"derivative index must have {p} entries in 0..2, got {alpha}")
    return float(_contract(cell.coeffs[None], xi, cell.spacing, alpha)[0])


def interpolate(state: LevelSetState, x, alphas=None, scheme=CrossScheme.CELL, chunk: int = 1 << 16) -> np.ndarray:
    """Evaluate several derivatives of the interpolant at points ``x``.

    Parameters
    ----------
    alphas : sequence of multi-indices, default value only
        Each entry is a length-``p`` tuple with components in ``0..2``.

    Returns
    -------
    ndarray of shape ``(N, len(alphas))``
    """
    grid = state.grid
    p = grid.dim
    x = check_points(x, p)
    alphas = [(0,) * p] if alphas is None else [tuple(a) for a in alphas]
    out = np.empty((x.shape[0], len(alphas)))
    for start in range(0, x.shape[0], chunk):
        sl = slice(start, start + chunk)
        cells, xi = locate_points(grid, x[sl])
        coeffs = cell_coefficients(state, cells, scheme)
        for k, alpha in enumerate(alphas):
            out[sl, k] = _contract(coeffs, xi, grid.spacing, alpha)
    return out


def all_cells(grid: Grid) -> np.ndarray:
    """Every cell multi-index, ``(n_cells, p)`` in C order."""
    return np.stack(np.unravel_index(np.arange(int(np.prod(grid.cell_shape))), grid.cell_shape), axis=-1)


def tensor_sample(coeffs: np.ndarray, spacing, xi_1d, alpha) -> np.ndarray:
    """``d^alpha H`` on the lattice ``xi_1d^p`` inside each cell.

    ``coeffs`` as returned by :func:`cell_coefficients`; result has shape
    ``(N, m, ..., m)`` with ``m = len(xi_1d)`` and axis order matching the grid.
    """
    n = coeffs.shape[0]
    p = (coeffs.ndim - 1) // 2
    xi_1d = np.asarray(xi_1d, dtype=float)
    order = [0] + [1 + k for pair in zip(range(p), range(p, 2 * p)) for k in pair]
    t = coeffs.transpose(order).reshape((n,) + (4,) * p)
    for axis in range(p):
        w = _basis_table(xi_1d, float(spacing[axis]), int(alpha[axis]))
        t = np.tensordot(t, w, axes=([1], [1]))
    return t


def sample_refined(state: LevelSetState, s: int, alpha=None, scheme=CrossScheme.CELL, chunk: int = 4096) -> np.ndarray:
    """Interpolant on the grid refined ``s`` times per axis, shape ``(s * cells + 1, ...)``.

    Nodes shared by several cells take the value of the last cell in C order.
    """
    grid = state.grid
    p = grid.dim
    alpha = (0,) * p if alpha is None else tuple(alpha)
    cells = all_cells(grid)
    out = np.empty(tuple(c * s + 1 for c in grid.cell_shape))
    local = np.arange(s + 1)
    xi = local / s
    for start in range(0, cells.shape[0], chunk):
        block = cells[start : start + chunk]
        vals = tensor_sample(cell_coefficients(state, block, scheme), grid.spacing, xi, alpha)
        index = []
        for axis in range(p):
            idx = block[:, axis, None] * s + local[None, :]
            shape = [block.shape[0]] + [1] * p
            shape[1 + axis] = s + 1
            index.append(idx.reshape(shape))
        out[tuple(index)] = vals
    return out


def gradient_alphas(p: int) -> list:
    return [tuple(1 if a == i else 0 for a in range(p)) for i in range(p)]


def hessian_alphas(p: int) -> list:
    out = []
    for i in range(p):
        for j in range(p):
            a = [0] * p
            a[i] += 1
            a[j] += 1
            out.append(tuple(a))
    return out


def value_and_gradient(state: LevelSetState, x, scheme=CrossScheme.CELL):
    p = state.grid.dim
    res = interpolate(state, x, [(0,) * p] + gradient_alphas(p), scheme)
    return res[:, 0], res[:, 1:]


def derivatives_upto2(state: LevelSetState, x, scheme=CrossScheme.CELL):
    """Value ``(N,)``, gradient ``(N, p)`` and Hessian ``(N, p, p)`` of the interpolant."""
    p = state.grid.dim
    alphas = [(0,) * p] + gradient_alphas(p) + hessian_alphas(p)
    res = interpolate(state, x, alphas, scheme)
    return res[:, 0], res[:, 1 : 1 + p], res[:, 1 + p :].reshape(-1, p, p)


class HermiteInterpolator(BaseEstimator):
    """Estimator wrapper: ``fit`` on a :class:`LevelSetState`, ``predict`` at points.

    Parameters
    ----------
    cross : {'cell', 'central', 'zero'}
        Mixed-derivative reconstruction, see :class:`CrossScheme`.
    """

    def __init__(self, cross: str = "cell"):
        self.cross = cross

    def fit(self, state: LevelSetState, y=None):
        if not isinstance(state, LevelSetState):
            raise TypeError("HermiteInterpolator.fit expects a LevelSetState")
        self.scheme_ = CrossScheme(self.cross)
        self.state_ = state
        self.n_features_in_ = state.grid.dim
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "state_")
        return interpolate(self.state_, X, scheme=self.scheme_)[:, 0]

    def predict_derivative(self, X, alpha) -> np.ndarray:
        check_is_fitted(self, "state_")
        return interpolate(self.state_, X, [tuple(alpha)], scheme=self.scheme_)[:, 0]

    def predict_gradient(self, X) -> np.ndarray:
        check_is_fitted(self, "state_")
        return value_and_gradient(self.state_, X, self.scheme_)[1]

    def predict_hessian(self, X) -> np.ndarray:
        check_is_fitted(self, "state_")
        return derivatives_upto2(self.state_, X, self.scheme_)[2]


class InterpolationOrders(NamedTuple):
    h: np.ndarray
    errors: np.ndarray  # (levels, 3): value, gradient, second derivatives
    slopes: np.ndarray  # (3,)


def interp_error_orders(
    func: Callable,
    grad: Callable,
    hess: Callable,
    dim: int,
    levels: Sequence[int] = (16, 32, 64, 128),
    n_samples: int = 1000,
    seed: int = 0,
    lower: float = 0.0,
    upper: float = 1.0,
    scheme=CrossScheme.CELL,
) -> InterpolationOrders:
    """Max-norm interpolation errors and fitted orders on a ladder of uniform grids.

    ``func``, ``grad`` and ``hess`` take ``(N, dim)`` points and return values
    ``(N,)``, gradients ``(N, dim)`` and Hessians ``(N, dim, dim)``.  Errors
    are measured at ``n_samples`` uniformly random points, the same points on
    every level.
    """
    if len(levels) < 3:
        raise InsufficientDataError(f"need at least 3 grid levels, got {len(levels)}")
    rng = np.random.default_rng(seed)
    pts = lower + (upper - lower) * rng.random((n_samples, dim))
    exact_v, exact_g, exact_h = func(pts), grad(pts), hess(pts)
    hs, errs = [], []
    for n in levels:
        grid = Grid.uniform(n, dim, lower, upper)
        state = LevelSetState.from_function(grid, func, grad)
        v, gr, he = derivatives_upto2(state, pts, scheme)
        errs.append(
            [
                np.max(np.abs(v - exact_v)),
                np.max(np.abs(gr - exact_g)),
                np.max(np.abs(he - exact_h)),
            ]
        )
        hs.append(grid.h)
    hs = np.array(hs)
    errs = np.array(errs)
    slopes = np.array([fit_order(hs, errs[:, k]).slope for k in range(3)])
    return InterpolationOrders(hs, errs, slopes)

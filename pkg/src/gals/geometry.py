"""Normals, curvature, zero contours and enclosed volume of the Hermite interpolant."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from skimage import measure

from ._validation import check_points
from .grid import LevelSetState
from .hermite import (
    CrossScheme,
    all_cells,
    cell_coefficients,
    derivatives_upto2,
    interpolate,
    sample_refined,
    tensor_sample,
    value_and_gradient,
)


class VanishingGradientError(ValueError):
    """The interpolant gradient is too small to define a normal."""


def _gradient_floor(state: LevelSetState) -> float:
    scale = float(np.max(np.abs(state.phi))) or 1.0
    return 1e-12 * scale / float(np.min(state.grid.spacing))


def _check_gradient(state, grad):
    norm = np.linalg.norm(grad, axis=1)
    bad = norm <= _gradient_floor(state)
    if np.any(bad):
        raise VanishingGradientError(f"gradient vanishes at {int(bad.sum())} point(s)")
    return norm


def normal_at(state: LevelSetState, x, scheme=CrossScheme.CELL) -> np.ndarray:
    """Unit normals ``grad H / |grad H|`` at points ``x`` (shape ``(N, p)``)."""
    _, grad = value_and_gradient(state, check_points(x, state.grid.dim), scheme)
    return grad / _check_gradient(state, grad)[:, None]


def curvature_from_derivatives(grad: np.ndarray, hess: np.ndarray) -> np.ndarray:
    """``div(grad phi / |grad phi|)`` from gradients ``(N, p)`` and Hessians ``(N, p, p)``."""
    if grad.shape[1] == 2:
        px, py = grad[:, 0], grad[:, 1]
        num = hess[:, 0, 0] * py**2 - 2.0 * px * py * hess[:, 0, 1] + hess[:, 1, 1] * px**2
        return num / (px**2 + py**2) ** 1.5
    sq = np.einsum("ni,ni->n", grad, grad)
    trace = np.trace(hess, axis1=1, axis2=2)
    ghg = np.einsum("ni,nij,nj->n", grad, hess, grad)
    return (sq * trace - ghg) / sq**1.5


def curvature_at(state: LevelSetState, x, scheme=CrossScheme.CELL) -> np.ndarray:
    """Mean curvature (sum of principal curvatures) of the level sets of ``H``."""
    if state.grid.dim == 1:
        raise ValueError("curvature needs at least two dimensions")
    _, grad, hess = derivatives_upto2(state, check_points(x, state.grid.dim), scheme)
    _check_gradient(state, grad)
    return curvature_from_derivatives(grad, hess)


# ---------------------------------------------------------------------------
# contours


@dataclass
class SurfaceMesh:
    """Zero contour: points (1D), segments (2D) or triangles (3D).

    ``components`` labels each vertex with its polyline id in 2D and is zero
    otherwise.  ``refinement`` records the per-cell subdivision used.
    """

    vertices: np.ndarray
    connectivity: np.ndarray
    refinement: int
    components: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.components is None:
            self.components = np.zeros(len(self.vertices), dtype=int)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1] if self.vertices.ndim == 2 else 0

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) == 0

    def __len__(self) -> int:
        return len(self.vertices)


def _polish(state, x, axis, lo, hi, scheme, tol, max_iter=10):
    """Safeguarded Newton along ``axis`` inside the brackets ``[lo, hi]``."""
    x = x.copy()
    if len(x) == 0:
        return x
    p = state.grid.dim
    unit = tuple(0 for _ in range(p))
    alphas = [unit] + [tuple(1 if a == k else 0 for a in range(p)) for k in range(p)]
    rows = np.arange(len(x))
    f_lo = interpolate(state, _with(x, axis, lo), [unit], scheme)[:, 0]
    for _ in range(max_iter):
        res = interpolate(state, x, alphas, scheme)
        val = res[:, 0]
        slope = res[rows, 1 + axis]
        if np.all(np.abs(val) < tol):
            break
        same = np.sign(val) == np.sign(f_lo)
        lo = np.where(same, x[rows, axis], lo)
        f_lo = np.where(same, val, f_lo)
        hi = np.where(same, hi, x[rows, axis])
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x[rows, axis] - val / slope
        ok = np.isfinite(newton) & (newton > np.minimum(lo, hi)) & (newton < np.maximum(lo, hi))
        step = np.where(ok, newton, 0.5 * (lo + hi))
        x[rows, axis] = np.where(np.abs(val) < tol, x[rows, axis], step)
    return x


def _with(x, axis, coord):
    y = x.copy()
    y[np.arange(len(x)), axis] = coord
    return y


def _edge_polish(state, verts_idx, s, scheme):
    """Map refined-lattice vertex coordinates to physical ones and polish them."""
    grid = state.grid
    delta = grid.spacing / s
    lower = np.asarray(grid.lower)
    x = lower + verts_idx * delta
    frac = np.abs(verts_idx - np.rint(verts_idx))
    axis = np.argmax(frac, axis=1)
    rows = np.arange(len(x))
    base = np.floor(verts_idx[rows, axis])
    top = np.minimum(base + 1, np.asarray(grid.cell_shape)[axis] * s)
    lo = lower[axis] + base * delta[axis]
    hi = lower[axis] + top * delta[axis]
    tol = 1e-8 * grid.diameter
    return _polish(state, x, axis, lo, hi, scheme, tol)


def extract_contour(state: LevelSetState, s: int = 4, scheme=CrossScheme.CELL, level: float = 0.0) -> SurfaceMesh:
    """Zero contour of the interpolant sampled ``s`` times per cell edge.

    1D returns root points, 2D polylines (marching squares), 3D triangles
    (marching cubes).  Vertices are polished along their lattice edge.
    """
    if int(s) < 1:
        raise ValueError("refinement must be at least 1")
    s = int(s)
    grid = state.grid
    p = grid.dim
    samples = sample_refined(state, s, scheme=scheme) - level
    if p == 1:
        return _roots_1d(state, samples, s, scheme)
    if not (np.any(samples < 0) and np.any(samples > 0)):
        return SurfaceMesh(np.empty((0, p)), np.empty((0, p), dtype=int), s)
    if p == 2:
        lines = measure.find_contours(samples, 0.0)
        verts, segs, comp = [], [], []
        offset = 0
        for k, line in enumerate(lines):
            verts.append(line)
            segs.append(np.stack([np.arange(len(line) - 1), np.arange(1, len(line))], axis=1) + offset)
            comp.append(np.full(len(line), k))
            offset += len(line)
        idx = np.concatenate(verts)
        x = _edge_polish(state, idx, s, scheme)
        return SurfaceMesh(x, np.concatenate(segs), s, np.concatenate(comp))
    verts, faces, _, _ = measure.marching_cubes(samples, 0.0, allow_degenerate=False)
    x = _edge_polish(state, verts.astype(float), s, scheme)
    return SurfaceMesh(x, faces.astype(int), s)


def _roots_1d(state, samples, s, scheme):
    grid = state.grid
    delta = grid.spacing[0] / s
    lower = grid.lower[0]
    a, b = samples[:-1], samples[1:]
    exact = np.flatnonzero(samples == 0.0)
    crossing = np.flatnonzero(np.sign(a) * np.sign(b) < 0)
    lo = lower + crossing * delta
    hi = lo + delta
    # linear guess between the samples
    guess = lo - a[crossing] * delta / (b[crossing] - a[crossing])
    x = _polish(state, guess[:, None], np.zeros(len(guess), dtype=int), lo, hi, scheme, 1e-8 * grid.diameter)
    roots = np.sort(np.concatenate([x[:, 0], lower + exact * delta]))
    return SurfaceMesh(roots[:, None], np.empty((0, 1), dtype=int), s)


def node_sign_contour(state: LevelSetState) -> SurfaceMesh:
    """Contour from node values only (piecewise-linear), for comparison with :func:`extract_contour`."""
    phi = np.asarray(state.phi)
    grid = state.grid
    p = grid.dim
    lower, h = np.asarray(grid.lower), grid.spacing
    if p == 1:
        a, b = phi[:-1], phi[1:]
        k = np.flatnonzero(np.sign(a) * np.sign(b) < 0)
        x = lower[0] + (k - a[k] / (b[k] - a[k])) * h[0]
        return SurfaceMesh(x[:, None], np.empty((0, 1), dtype=int), 1)
    if not (np.any(phi < 0) and np.any(phi > 0)):
        return SurfaceMesh(np.empty((0, p)), np.empty((0, p), dtype=int), 1)
    if p == 2:
        lines = measure.find_contours(phi, 0.0)
        verts = np.concatenate(lines) if lines else np.empty((0, 2))
        segs = []
        offset = 0
        for line in lines:
            segs.append(np.stack([np.arange(len(line) - 1), np.arange(1, len(line))], axis=1) + offset)
            offset += len(line)
        return SurfaceMesh(lower + verts * h, np.concatenate(segs), 1)
    verts, faces, _, _ = measure.marching_cubes(phi, 0.0, spacing=tuple(h))
    return SurfaceMesh(lower + verts, faces, 1)


# ---------------------------------------------------------------------------
# volume


def _linear_fraction(value, widths):
    """Fraction of a box where ``value + g . u < 0``, ``u`` uniform, ``widths = |g_a| delta_a``.

    The CDF of a sum of independent uniforms, by inclusion-exclusion.
    """
    p = widths.shape[1]
    w = np.maximum(widths, 1e-3 * widths.max(axis=1, keepdims=True) + 1e-300)
    z = -value + 0.5 * w.sum(axis=1)
    total = np.zeros_like(value)
    for subset in itertools.product((0, 1), repeat=p):
        sel = np.asarray(subset, dtype=bool)
        shift = w[:, sel].sum(axis=1)
        total += (-1) ** int(sel.sum()) * np.maximum(z - shift, 0.0) ** p
    frac = total / (math.factorial(p) * np.prod(w, axis=1))
    return np.clip(frac, 0.0, 1.0)


def measure_volume(state: LevelSetState, s: int = 4, scheme=CrossScheme.CELL, chunk: int = 2048) -> float:
    """Measure of ``{H < 0}`` (length, area or volume).

    Each cell is split into ``s^p`` subcells.  A subcell counts by the sign of
    ``H`` at its midpoint unless the linear model at the midpoint changes sign
    inside it, in which case the exact fraction for that linear model is used.
    """
    if int(s) < 1:
        raise ValueError("refinement must be at least 1")
    s = int(s)
    grid = state.grid
    p = grid.dim
    delta = grid.spacing / s
    xi = (np.arange(s) + 0.5) / s
    cells = all_cells(grid)
    zero = (0,) * p
    grads = [tuple(1 if a == k else 0 for a in range(p)) for k in range(p)]
    total = 0.0
    for start in range(0, cells.shape[0], chunk):
        coeffs = cell_coefficients(state, cells[start : start + chunk], scheme)
        val = tensor_sample(coeffs, grid.spacing, xi, zero).reshape(-1)
        widths = np.stack([np.abs(tensor_sample(coeffs, grid.spacing, xi, a)).reshape(-1) * delta[k] for k, a in enumerate(grads)], axis=1)
        frac = (val < 0).astype(float)
        near = np.abs(val) < 0.5 * widths.sum(axis=1)
        if np.any(near):
            frac[near] = _linear_fraction(val[near], widths[near])
        total += frac.sum()
    return float(total * np.prod(delta))


# ---------------------------------------------------------------------------
# writers


def write_obj(mesh: SurfaceMesh, path) -> Path:
    path = Path(path)
    if mesh.dim != 3:
        raise ValueError("OBJ output needs a triangle mesh")
    with path.open("w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.16e} {v[1]:.16e} {v[2]:.16e}\n")
        for tri in mesh.connectivity:
            fh.write(f"f {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}\n")
    return path


def write_vtk(mesh: SurfaceMesh, path, title: str = "zero contour") -> Path:
    """Legacy ASCII VTK polydata (triangles in 3D, lines in 2D)."""
    path = Path(path)
    verts = mesh.vertices
    if verts.shape[1] < 3:
        verts = np.hstack([verts, np.zeros((len(verts), 3 - verts.shape[1]))])
    conn = mesh.connectivity
    kind = "POLYGONS" if mesh.dim == 3 else "LINES"
    with path.open("w") as fh:
        fh.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET POLYDATA\n")
        fh.write(f"POINTS {len(verts)} double\n")
        np.savetxt(fh, verts, fmt="%.16e")
        if len(conn):
            k = conn.shape[1]
            fh.write(f"{kind} {len(conn)} {len(conn) * (k + 1)}\n")
            np.savetxt(fh, np.hstack([np.full((len(conn), 1), k), conn]), fmt="%d")
    return path


def write_polyline_csv(mesh: SurfaceMesh, path) -> Path:
    """2D contour as CSV with columns ``component,x,y``."""
    path = Path(path)
    if mesh.dim != 2:
        raise ValueError("polyline CSV needs a 2D contour")
    data = np.column_stack([mesh.components, mesh.vertices])
    np.savetxt(path, data, delimiter=",", header="component,x,y", comments="", fmt=["%d", "%.16e", "%.16e"])
    return path

"""Von Neumann analysis of the 1D constant-velocity scheme.

With ``v < 0`` and Courant number ``xi = |v| dt / h`` the foot of node ``j``
lies at ``x_j + xi h``, so one step reads node data ``j`` and ``j + 1``.  For
a Fourier mode ``(phi_j, h psi_j) = (a, b) e^{i j theta}`` this gives
``(a, b) -> G(xi, theta) (a, b)``.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .advection import HomogeneousNeumann, StepOptions, step
from .grid import Grid, LevelSetState
from .hermite import f, g
from .velocity import ConstantVelocity


def _df(x):
    return 6.0 * x * (x - 1.0)


def _dg(x):
    return (1.0 - x) * (1.0 - 3.0 * x)


def _check_xi(xi):
    xi = np.asarray(xi, dtype=float)
    if np.any((xi <= 0.0) | (xi > 1.0)) or not np.all(np.isfinite(xi)):
        raise ValueError("Courant number must lie in (0, 1]")
    return xi


def growth_matrix(xi, theta) -> np.ndarray:
    """The 2x2 amplification matrix; broadcasts over ``xi`` and ``theta`` (trailing ``(2, 2)``)."""
    xi = _check_xi(xi)
    theta = np.asarray(theta, dtype=float)
    xi, theta = np.broadcast_arrays(xi, theta)
    e = np.exp(1j * theta)
    G = np.empty(xi.shape + (2, 2), dtype=complex)
    G[..., 0, 0] = f(xi) + e * f(1.0 - xi)
    G[..., 0, 1] = g(xi) - e * g(1.0 - xi)
    G[..., 1, 0] = _df(xi) - e * _df(1.0 - xi)
    G[..., 1, 1] = _dg(xi) + e * _dg(1.0 - xi)
    return G


def eigenvalues_2x2(G: np.ndarray) -> np.ndarray:
    """Eigenvalues by the quadratic formula, sorted by decreasing modulus, shape ``(..., 2)``."""
    tr = G[..., 0, 0] + G[..., 1, 1]
    # (a - d)^2 + 4bc avoids cancellation when the eigenvalues coincide
    disc = (G[..., 0, 0] - G[..., 1, 1]) ** 2 + 4.0 * G[..., 0, 1] * G[..., 1, 0]
    root = np.sqrt(disc + 0j)
    lam = np.stack([0.5 * (tr + root), 0.5 * (tr - root)], axis=-1)
    swap = np.abs(lam[..., 1]) > np.abs(lam[..., 0])
    lam[swap] = lam[swap][:, ::-1]
    return lam


def eigenvector(G: np.ndarray, lam: complex) -> np.ndarray:
    """Unit eigenvector of a single 2x2 matrix for eigenvalue ``lam``."""
    a, b = G[0, 1], lam - G[0, 0]
    if abs(a) + abs(b) < 1e-14:
        a, b = lam - G[1, 1], G[1, 0]
    v = np.array([a, b], dtype=complex)
    return v / np.linalg.norm(v)


class SpectralScan(NamedTuple):
    xi: np.ndarray
    theta: np.ndarray
    eigenvalues: np.ndarray

    @property
    def spectral_radius(self) -> np.ndarray:
        return np.abs(self.eigenvalues[..., 0])

    def max_off_zero(self) -> float:
        """Largest ``|lambda|`` over points with ``theta != 0``."""
        mask = self.theta != 0.0
        return float(self.spectral_radius[mask].max()) if np.any(mask) else float("nan")

    def records(self):
        lam = self.eigenvalues.reshape(-1, 2)
        for x, t, (l1, l2) in zip(self.xi.ravel(), self.theta.ravel(), lam):
            yield {
                "xi": x,
                "theta": t,
                "re_lambda1": l1.real,
                "im_lambda1": l1.imag,
                "abs_lambda1": abs(l1),
                "re_lambda2": l2.real,
                "im_lambda2": l2.imag,
                "abs_lambda2": abs(l2),
            }

    def to_csv(self, path) -> Path:
        path = Path(path)
        rows = list(self.records())
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows({k: f"{v:.16e}" for k, v in row.items()} for row in rows)
        return path


def spectral_scan(xis, thetas) -> SpectralScan:
    """Eigenvalues over the tensor grid ``xis x thetas`` (arrays of shape ``(len(xis), len(thetas))``)."""
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if xis.size == 0 or thetas.size == 0:
        raise ValueError("scan grids must be nonempty")
    X, T = np.meshgrid(xis, thetas, indexing="ij")
    return SpectralScan(X, T, eigenvalues_2x2(growth_matrix(X, T)))


def default_scan() -> SpectralScan:
    return spectral_scan(np.round(np.arange(1, 20) * 0.05, 10), np.linspace(-np.pi, np.pi, 721))


class EmpiricalGrowth(NamedTuple):
    ratio: float
    predicted: float
    matrix: np.ndarray


def _periodic_step(state: LevelSetState, field, options) -> LevelSetState:
    new = step(state, field, options)
    phi, psi = np.array(new.phi), np.array(new.psi)
    phi[-1], psi[-1] = phi[0], psi[0]
    return new.replace(phi, psi)


def empirical_growth_check(xi: float, k: int, n_steps: int = 1, n_cells: int = 64) -> EmpiricalGrowth:
    """Measure the per-step amplification of Fourier mode ``k`` with the real stepper.

    The periodic grid has ``n_cells`` cells on ``[0, 2 pi]``.  The stepper is
    applied ``n_steps`` times to the two basis modes ``(e^{ikx}, 0)`` and
    ``(0, e^{ikx} / h)``; modal projection gives the matrix ``M^n`` and the
    ratio is ``rho(M^n)^(1/n)``.
    """
    xi = float(_check_xi(xi))
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    grid = Grid.uniform(n_cells, 1, 0.0, 2.0 * np.pi)
    h = grid.h
    x = grid.coordinates(0)
    field = ConstantVelocity((-xi * h,))
    options = StepOptions(1.0, boundary={(0, 1): HomogeneousNeumann()})
    mode = np.exp(1j * k * x)
    columns = []
    for a, b in ((1.0, 0.0), (0.0, 1.0)):
        phi, hpsi = a * mode, b * mode
        parts = []
        for part in (np.real, np.imag):
            state = LevelSetState(grid, part(phi), part(hpsi / h)[:, None])
            for _ in range(n_steps):
                state = _periodic_step(state, field, options)
            parts.append(state)
        phi_n = parts[0].phi + 1j * parts[1].phi
        hpsi_n = h * (parts[0].psi[:, 0] + 1j * parts[1].psi[:, 0])
        # modal coefficient on the periodic nodes (drop the duplicate end node)
        conj = np.conj(mode[:-1])
        columns.append([np.mean(phi_n[:-1] * conj), np.mean(hpsi_n[:-1] * conj)])
    M = np.array(columns).T
    ratio = float(np.max(np.abs(np.linalg.eigvals(M))) ** (1.0 / n_steps))
    predicted = float(np.abs(eigenvalues_2x2(growth_matrix(xi, k * h))[0]))
    return EmpiricalGrowth(ratio, predicted, M)

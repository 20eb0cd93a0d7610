"""Classical level set baseline: WENO5 upwind gradients, SSP-RK3 and reinitialization."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .grid import Grid, LevelSetState
from .velocity import VelocityField

HALO = 3
WENO_EPS = 1e-6


class Fill(str, Enum):
    EXTRAPOLATE = "extrapolate"
    ODD_SYMMETRY_ZERO = "odd_symmetry_zero"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class ScalarFieldWithHalo:
    """Node values plus a 3-deep ghost layer on every face.

    ``fill`` is one policy for all faces or a sequence of ``(lower, upper)``
    pairs, one per axis.  ``padded`` holds the interior at ``[3:-3, ...]``.
    """

    padded: np.ndarray

    @classmethod
    def from_interior(cls, phi, fill=Fill.EXTRAPOLATE) -> "ScalarFieldWithHalo":
        phi = np.asarray(phi, dtype=float)
        policies = _expand_fill(fill, phi.ndim)
        out = phi
        for axis, (lo, hi) in enumerate(policies):
            out = _pad_axis(out, axis, lo, hi)
        return cls(out)

    @property
    def interior(self) -> np.ndarray:
        return self.padded[(slice(HALO, -HALO),) * self.padded.ndim]


def _expand_fill(fill, ndim):
    if isinstance(fill, (str, Fill)):
        return [(Fill(fill), Fill(fill))] * ndim
    pairs = [tuple(Fill(f) for f in pair) for pair in fill]
    if len(pairs) != ndim:
        raise ValueError(f"need {ndim} (lower, upper) fill pairs, got {len(pairs)}")
    return pairs


def _pad_axis(a, axis, lo, hi):
    a = np.moveaxis(a, axis, 0)
    n = a.shape[0]
    k = np.arange(1, HALO + 1)
    if Fill.PERIODIC in (lo, hi) and lo != hi:
        raise ValueError("periodic fill must be used on both faces of an axis")
    if lo is Fill.PERIODIC:
        # first and last node coincide
        low = a[(n - 1 - k)[::-1]]
        high = a[k]
    else:
        low = _ghost(a, lo, k, lower=True)[::-1]
        high = _ghost(a, hi, k, lower=False)
    return np.moveaxis(np.concatenate([low, a, high], axis=0), 0, axis)


def _ghost(a, policy, k, lower):
    edge, inner = (a[0], a[1]) if lower else (a[-1], a[-2])
    shape = (-1,) + (1,) * (a.ndim - 1)
    kk = k.reshape(shape)
    if policy is Fill.EXTRAPOLATE:
        return edge[None] + kk * (edge - inner)[None]
    mirror = a[k] if lower else a[a.shape[0] - 1 - k]
    return -mirror


def _weno5(v1, v2, v3, v4, v5, eps=WENO_EPS):
    p1 = v1 / 3.0 - 7.0 * v2 / 6.0 + 11.0 * v3 / 6.0
    p2 = -v2 / 6.0 + 5.0 * v3 / 6.0 + v4 / 3.0
    p3 = v3 / 3.0 + 5.0 * v4 / 6.0 - v5 / 6.0
    s1 = 13.0 / 12.0 * (v1 - 2 * v2 + v3) ** 2 + 0.25 * (v1 - 4 * v2 + 3 * v3) ** 2
    s2 = 13.0 / 12.0 * (v2 - 2 * v3 + v4) ** 2 + 0.25 * (v2 - v4) ** 2
    s3 = 13.0 / 12.0 * (v3 - 2 * v4 + v5) ** 2 + 0.25 * (3 * v3 - 4 * v4 + v5) ** 2
    a1 = 0.1 / (eps + s1) ** 2
    a2 = 0.6 / (eps + s2) ** 2
    a3 = 0.3 / (eps + s3) ** 2
    return (a1 * p1 + a2 * p2 + a3 * p3) / (a1 + a2 + a3)


def weno5_one_sided(field: ScalarFieldWithHalo, axis: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Left- and right-biased derivatives ``(d_minus, d_plus)`` at every interior node."""
    P = field.padded
    ndim = P.ndim
    d = np.diff(P, axis=axis) / h
    # restrict the other axes to the interior
    cut = [slice(HALO, -HALO)] * ndim
    cut[axis] = slice(None)
    d = d[tuple(cut)]
    n = P.shape[axis] - 2 * HALO

    def take(offset):
        s = [slice(None)] * ndim
        s[axis] = slice(offset, offset + n)
        return d[tuple(s)]

    minus = _weno5(take(0), take(1), take(2), take(3), take(4))
    plus = _weno5(take(5), take(4), take(3), take(2), take(1))
    return minus, plus


def weno5_upwind_derivative(field: ScalarFieldWithHalo, axis: int, node, wind: float, h: float) -> float:
    """Upwind WENO5 derivative at a single interior node; ``wind > 0`` uses the left-biased stencil."""
    minus, plus = weno5_one_sided(field, axis, h)
    return float(minus[tuple(node)] if wind > 0 else plus[tuple(node)])


def advection_rhs(phi, grid: Grid, field: VelocityField, t: float, fill=Fill.EXTRAPOLATE) -> np.ndarray:
    """``-v . grad phi`` with upwinded WENO5 derivatives."""
    halo = ScalarFieldWithHalo.from_interior(phi, fill)
    v = field.velocity(grid.nodes(), t).reshape(grid.shape + (grid.dim,))
    rhs = np.zeros(grid.shape)
    for axis in range(grid.dim):
        minus, plus = weno5_one_sided(halo, axis, grid.spacing[axis])
        va = v[..., axis]
        rhs -= va * np.where(va > 0, minus, plus)
    return rhs


def ssp_rk3(phi, rhs, t: float, dt: float):
    """Shu-Osher three-stage scheme for ``dphi/dt = rhs(phi, t)``."""
    phi1 = phi + dt * rhs(phi, t)
    phi2 = 0.75 * phi + 0.25 * (phi1 + dt * rhs(phi1, t + dt))
    return phi / 3.0 + 2.0 / 3.0 * (phi2 + dt * rhs(phi2, t + 0.5 * dt))


def advect_step_weno(phi, grid: Grid, field: VelocityField, t: float, dt: float, fill=Fill.EXTRAPOLATE) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be positive")
    return ssp_rk3(np.asarray(phi, dtype=float), lambda q, s: advection_rhs(q, grid, field, s, fill), t, dt)


def substeps_for(grid: Grid, field: VelocityField, t: float, dt: float, cfl: float = 0.5) -> int:
    """Number of equal sub-steps keeping each below ``cfl * h_min / v_max``."""
    vmax = max(field.max_speed(grid, t), field.max_speed(grid, t + dt))
    if vmax == 0.0:
        return 1
    return max(1, int(np.ceil(dt * vmax / (cfl * float(np.min(grid.spacing))) - 1e-12)))


def advect_weno(phi, grid: Grid, field: VelocityField, t: float, dt: float, cfl: float | None = 0.5, fill=Fill.EXTRAPOLATE) -> np.ndarray:
    """Advance by ``dt``, sub-stepping when ``dt`` violates the CFL bound.

    ``cfl=None`` takes one step of size ``dt`` regardless of stability.
    """
    m = 1 if cfl is None else substeps_for(grid, field, t, dt, cfl)
    sub = dt / m
    for k in range(m):
        phi = advect_step_weno(phi, grid, field, t + k * sub, sub, fill)
    return phi


def godunov_norm(phi, grid: Grid, sign, fill=Fill.EXTRAPOLATE) -> np.ndarray:
    """``|grad phi|`` with Godunov upwinding for the eikonal Hamiltonian."""
    halo = ScalarFieldWithHalo.from_interior(phi, fill)
    total = np.zeros(grid.shape)
    pos = sign >= 0
    for axis in range(grid.dim):
        a, b = weno5_one_sided(halo, axis, grid.spacing[axis])
        grow = np.maximum(np.maximum(a, 0.0) ** 2, np.minimum(b, 0.0) ** 2)
        shrink = np.maximum(np.minimum(a, 0.0) ** 2, np.maximum(b, 0.0) ** 2)
        total += np.where(pos, grow, shrink)
    return np.sqrt(total)


def smoothed_sign(phi0, h: float) -> np.ndarray:
    return phi0 / np.sqrt(phi0 ** 2 + h ** 2)


def reinitialize(phi, grid: Grid, n_steps: int = 2, dtau: float | None = None, fill=Fill.EXTRAPOLATE) -> np.ndarray:
    """Pseudo-time steps of ``phi_tau = S(phi0) (1 - |grad phi|)``; ``dtau`` defaults to ``0.75 h``."""
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    h = float(np.min(grid.spacing))
    dtau = 0.75 * h if dtau is None else dtau
    phi0 = np.asarray(phi, dtype=float)
    s = smoothed_sign(phi0, h)
    rhs = lambda q, _t: s * (1.0 - godunov_norm(q, grid, s, fill))
    out = phi0
    for _ in range(int(n_steps)):
        out = ssp_rk3(out, rhs, 0.0, dtau)
    return out


def finite_difference_gradient(phi, grid: Grid) -> np.ndarray:
    """Second order node gradient, used to hand baseline results to the Hermite tools."""
    parts = np.gradient(phi, *grid.spacing, edge_order=2)
    if grid.dim == 1:
        parts = [parts]
    return np.stack(parts, axis=-1)


def to_state(phi, grid: Grid, t: float) -> LevelSetState:
    return LevelSetState(grid, phi, finite_difference_gradient(phi, grid), t)


class WenoAdvector(TransformerMixin, BaseEstimator):
    """Baseline stepper with optional reinitialization after every step.

    Steps longer than the CFL bound ``cfl * h / v_max`` are split into equal
    sub-steps; reinitialization still runs once per step of size ``dt``.

    ``transform`` accepts a :class:`LevelSetState` (only ``phi`` is used) and
    returns a new state whose ``psi`` is a finite difference gradient.
    """

    def __init__(self, field=None, dt=None, n_steps: int = 1, reinit_steps: int = 0, dtau=None, fill: str = "extrapolate", cfl=0.5):
        self.field = field
        self.dt = dt
        self.n_steps = n_steps
        self.reinit_steps = reinit_steps
        self.dtau = dtau
        self.fill = fill
        self.cfl = cfl

    def fit(self, state: LevelSetState, y=None):
        if self.field is None:
            raise ValueError("a velocity field is required")
        if self.dt is None:
            vmax = self.field.max_speed(state.grid, state.t)
            cfl = 0.5 if self.cfl is None else self.cfl
            self.dt_ = cfl * float(np.min(state.grid.spacing)) / vmax if vmax > 0 else 1.0
        else:
            self.dt_ = float(self.dt)
        self.fill_ = Fill(self.fill)
        return self

    def iter_phi(self, state: LevelSetState, n_steps: int | None = None):
        check_is_fitted(self, "dt_")
        grid, phi, t = state.grid, np.array(state.phi), state.t
        for _ in range(self.n_steps if n_steps is None else int(n_steps)):
            phi = advect_weno(phi, grid, self.field, t, self.dt_, self.cfl, self.fill_)
            t += self.dt_
            if self.reinit_steps:
                phi = reinitialize(phi, grid, self.reinit_steps, self.dtau, self.fill_)
            yield phi, t

    def transform(self, state: LevelSetState) -> LevelSetState:
        phi, t = np.array(state.phi), state.t
        for phi, t in self.iter_phi(state):
            pass
        return to_state(phi, state.grid, t)

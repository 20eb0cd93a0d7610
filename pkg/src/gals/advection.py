"""Gradient-augmented CIR advection.

One time step traces the characteristic backward from every node, evaluates
the Hermite interpolant (value and gradient) at the foot point, and maps the
gradient forward, either with the Jacobian of the backward trace
(superconsistent update) or by integrating ``d psi / dt = -grad_v . psi``
with Heun's method.  Nodes whose foot point leaves the domain take their data
from the inflow boundary condition of the face they sit on.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from enum import Enum
from typing import Callable, Iterator, Mapping, NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive
from .grid import Grid, LevelSetState, OutOfDomainError
from .hermite import CrossScheme, value_and_gradient
from .velocity import VelocityField


class Integrator(str, Enum):
    EULER = "euler"
    RK3 = "rk3"


class GradientUpdate(str, Enum):
    SUPERCONSISTENT = "superconsistent"
    HEUN = "heun"


class BoundaryConfigError(ValueError):
    """An inflow face has no boundary condition."""


class DegenerateInflowError(ValueError):
    """Dirichlet data requested where the normal velocity vanishes."""


@dataclass(frozen=True)
class HomogeneousNeumann:
    """Zero normal derivative; face values follow the tangential advection."""


@dataclass(frozen=True)
class Dirichlet:
    """Prescribed boundary values.

    Callables take ``(x, t)`` with ``x`` of shape ``(N, p)``.  ``gradient``
    supplies the tangential derivatives (its normal component is ignored and
    recovered from the advection equation); ``time_derivative`` defaults to 0.
    """

    value: Callable
    gradient: Callable
    time_derivative: Callable | None = None


@dataclass(frozen=True)
class StepOptions:
    """Configuration of one CIR step.

    ``boundary`` is either a single condition applied to every face or a
    mapping ``{(axis, side): condition}`` with ``side`` 0 for the lower and 1
    for the upper face; ``None`` means no condition.
    """

    dt: float
    integrator: Integrator = Integrator.RK3
    gradient_update: GradientUpdate = GradientUpdate.SUPERCONSISTENT
    cross: CrossScheme = CrossScheme.CELL
    boundary: object = None

    def __post_init__(self):
        check_positive(self.dt, "dt")
        object.__setattr__(self, "integrator", Integrator(self.integrator))
        object.__setattr__(self, "gradient_update", GradientUpdate(self.gradient_update))
        object.__setattr__(self, "cross", CrossScheme(self.cross))
        object.__setattr__(self, "boundary", _normalize_bc(self.boundary))

    def boundary_for(self, face: tuple):
        if isinstance(self.boundary, Mapping):
            return self.boundary.get(tuple(face))
        return self.boundary

    def with_dt(self, dt: float) -> "StepOptions":
        return StepOptions(dt, self.integrator, self.gradient_update, self.cross, self.boundary)


def _normalize_bc(bc):
    if isinstance(bc, str):
        if bc.lower() in ("neumann", "homogeneous_neumann"):
            return HomogeneousNeumann()
        if bc.lower() == "none":
            return None
        raise ValueError(f"unknown boundary condition {bc!r}")
    if isinstance(bc, Mapping):
        return {tuple(k): _normalize_bc(v) for k, v in bc.items()}
    return bc


class TraceResult(NamedTuple):
    foot: np.ndarray
    jacobian: np.ndarray | None


def trace_backward(x, t: float, dt: float, field: VelocityField, integrator=Integrator.RK3, jacobian: bool = True) -> TraceResult:
    """Foot points at time ``t`` of the characteristics through ``x`` at ``t + dt``.

    ``jacobian[:, i, j]`` is ``d foot_j / d x_i``, propagated through the
    stages exactly as the positions are.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    integrator = Integrator(integrator)
    p = x.shape[1]
    eye = np.eye(p)[None]
    v0, g0 = field.evaluate(x, t + dt)
    x1 = x - dt * v0
    j1 = eye - dt * g0 if jacobian else None
    if integrator is Integrator.EULER:
        foot, jac = x1, j1
    else:
        v1, g1 = field.evaluate(x1, t)
        x2 = x - dt * (0.25 * v0 + 0.25 * v1)
        v2, g2 = field.evaluate(x2, t + 0.5 * dt)
        foot = x - dt * (v0 / 6.0 + v1 / 6.0 + (2.0 / 3.0) * v2)
        jac = None
        if jacobian:
            j1g1 = j1 @ g1
            j2 = eye - dt * (0.25 * g0 + 0.25 * j1g1)
            jac = eye - dt * (g0 / 6.0 + j1g1 / 6.0 + (2.0 / 3.0) * (j2 @ g2))
    if single:
        return TraceResult(foot[0], None if jac is None else jac[0])
    return TraceResult(foot, jac)


def advect_points(state: LevelSetState, field: VelocityField, x, options: StepOptions) -> tuple[np.ndarray, np.ndarray]:
    """Values and gradients at time ``t + dt`` at arbitrary points ``x``.

    Foot points must lie in the domain (up to the clamping tolerance).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t, dt = state.t, options.dt
    superconsistent = options.gradient_update is GradientUpdate.SUPERCONSISTENT
    trace = trace_backward(x, t, dt, field, options.integrator, jacobian=superconsistent)
    return _values_from_feet(state, field, options, x, trace.foot, trace.jacobian)


def _values_from_feet(state, field, options, x, foot, jacobian):
    t, dt = state.t, options.dt
    phi, grad = value_and_gradient(state, foot, options.cross)
    if options.gradient_update is GradientUpdate.SUPERCONSISTENT:
        return phi, np.einsum("nij,nj->ni", jacobian, grad)
    # Heun on d psi/dt = -grad(v) psi along the characteristic
    k1 = -np.einsum("nij,nj->ni", field.evaluate(foot, t)[1], grad)
    k2 = -np.einsum("nij,nj->ni", field.evaluate(x, t + dt)[1], grad + dt * k1)
    return phi, grad + 0.5 * dt * (k1 + k2)


class FaceField(VelocityField):
    """Restriction of a field to the boundary plane ``x_axis = coordinate``."""

    def __init__(self, parent: VelocityField, axis: int, coordinate: float):
        self.parent = parent
        self.axis = axis
        self.coordinate = float(coordinate)
        self.dim = parent.dim - 1
        self.keep = [a for a in range(parent.dim) if a != axis]

    def evaluate(self, x, t):
        full = np.insert(x, self.axis, self.coordinate, axis=1)
        v, g = self.parent.evaluate(full, t)
        return v[:, self.keep], g[:, self.keep][:, :, self.keep]


def _face_coordinate(grid: Grid, face) -> float:
    axis, side = face
    return grid.upper[axis] if side else grid.lower[axis]


def _face_index(grid: Grid, face) -> int:
    axis, side = face
    return grid.shape[axis] - 1 if side else 0


def inflow_mask(grid: Grid, field: VelocityField, face, t: float) -> np.ndarray:
    """Nodes of ``face`` (face-grid shape) where ``v . n < 0``."""
    axis, side = face
    xf = _face_nodes(grid, face)
    normal_v = field.velocity(xf, t)[:, axis] * (1.0 if side else -1.0)
    shape = tuple(n for a, n in enumerate(grid.shape) if a != axis)
    return (normal_v < 0.0).reshape(shape)


def _face_nodes(grid: Grid, face) -> np.ndarray:
    axis, _ = face
    x = grid.nodes().reshape(grid.shape + (grid.dim,))
    return np.take(x, _face_index(grid, face), axis=axis).reshape(-1, grid.dim)


def check_boundary_config(grid: Grid, field: VelocityField, t: float, options: StepOptions) -> None:
    """Raise :class:`BoundaryConfigError` if an inflow face has no condition.

    Inflow slower than the clamping tolerance per step (round-off velocity on
    a no-penetration wall) is ignored, as the stepper itself ignores it.
    """
    for axis in range(grid.dim):
        for side in (0, 1):
            face = (axis, side)
            if options.boundary_for(face) is not None:
                continue
            normal_v = field.velocity(_face_nodes(grid, face), t)[:, axis] * (1.0 if side else -1.0)
            if np.any(normal_v * options.dt < -grid.tolerance[axis]):
                raise BoundaryConfigError(f"face {face} has inflow at t={t} but no boundary condition")


def apply_inflow_bc(state: LevelSetState, field: VelocityField, face, bc, options: StepOptions, mask=None):
    """Boundary data ``(phi, psi)`` on ``face`` at time ``t + dt``.

    Returns arrays of face-grid shape (``phi``) and face-grid shape plus
    ``(p,)`` (``psi``, all components).  ``mask`` selects the face nodes that
    need data; by default the inflow nodes.
    """
    grid = state.grid
    axis, side = face
    p = grid.dim
    t_new = state.t + options.dt
    idx = _face_index(grid, face)
    phi_face = np.take(state.phi, idx, axis=axis)
    psi_face = np.take(state.psi, idx, axis=axis)
    if mask is None:
        mask = inflow_mask(grid, field, face, t_new) if p > 1 else np.array(True)
    mask = np.asarray(mask, dtype=bool)

    if isinstance(bc, HomogeneousNeumann):
        if p == 1:
            return phi_face.copy(), np.zeros(1)
        keep = [a for a in range(p) if a != axis]
        sub = LevelSetState(grid.face(axis, side), phi_face, psi_face[..., keep], state.t)
        sub_field = FaceField(field, axis, _face_coordinate(grid, face))
        sub_opts = StepOptions(options.dt, options.integrator, options.gradient_update, options.cross, HomogeneousNeumann())
        new = step(sub, sub_field, sub_opts)
        psi = np.insert(new.psi, axis, 0.0, axis=-1)
        return np.asarray(new.phi).copy(), psi

    if isinstance(bc, Dirichlet):
        xf = _face_nodes(grid, face)
        phi = np.asarray(bc.value(xf, t_new), dtype=float).reshape(-1)
        grad = np.array(bc.gradient(xf, t_new), dtype=float).reshape(-1, p)
        dphi_dt = np.zeros_like(phi) if bc.time_derivative is None else np.asarray(bc.time_derivative(xf, t_new), float).reshape(-1)
        v = field.velocity(xf, t_new)
        tangential = sum(v[:, k] * grad[:, k] for k in range(p) if k != axis)
        u = v[:, axis]
        sel = mask.reshape(-1)
        if np.any(u[sel] == 0.0):
            bad = np.flatnonzero(sel & (u == 0.0))[0]
            raise DegenerateInflowError(f"normal velocity vanishes at boundary point {xf[bad]}")
        with np.errstate(divide="ignore", invalid="ignore"):
            grad[:, axis] = np.where(u != 0.0, -(dphi_dt + tangential) / u, 0.0)
        shape = phi_face.shape
        return phi.reshape(shape), grad.reshape(shape + (p,))

    raise TypeError(f"unsupported boundary condition {bc!r}")


def step(state: LevelSetState, field: VelocityField, options: StepOptions) -> LevelSetState:
    """Advance ``state`` by one time step ``options.dt``."""
    grid = state.grid
    p = grid.dim
    if field.dim != p:
        raise ValueError(f"velocity field has dimension {field.dim}, grid has {p}")
    x = grid.nodes()
    superconsistent = options.gradient_update is GradientUpdate.SUPERCONSISTENT
    trace = trace_backward(x, state.t, options.dt, field, options.integrator, jacobian=superconsistent)
    inside = grid.contains(trace.foot)

    phi = np.empty(grid.n_nodes)
    psi = np.empty((grid.n_nodes, p))
    if np.any(inside):
        jac = trace.jacobian[inside] if superconsistent else None
        phi[inside], psi[inside] = _values_from_feet(state, field, options, x[inside], trace.foot[inside], jac)
    outside = np.flatnonzero(~inside)
    if outside.size:
        _fill_boundary_nodes(state, field, options, x, trace.foot, outside, phi, psi)
    return LevelSetState(grid, phi.reshape(grid.shape), psi.reshape(grid.shape + (p,)), state.t + options.dt)


def _fill_boundary_nodes(state, field, options, x, foot, nodes, phi, psi):
    grid = state.grid
    lower, upper, tol = np.asarray(grid.lower), np.asarray(grid.upper), grid.tolerance
    groups: dict = {}
    for n in nodes:
        face = None
        for axis in range(grid.dim):
            if foot[n, axis] < lower[axis] - tol[axis] and abs(x[n, axis] - lower[axis]) <= tol[axis]:
                face = (axis, 0)
            elif foot[n, axis] > upper[axis] + tol[axis] and abs(x[n, axis] - upper[axis]) <= tol[axis]:
                face = (axis, 1)
            if face is not None:
                break
        index = np.unravel_index(n, grid.shape)
        if face is None:
            raise OutOfDomainError(
                foot[n].tolist(),
                int(np.argmax(np.maximum(lower - foot[n], foot[n] - upper))),
                f"foot point {foot[n].tolist()} of interior node {tuple(map(int, index))} left the domain; reduce dt",
            )
        if options.boundary_for(face) is None:
            raise BoundaryConfigError(f"node {tuple(map(int, index))} traces out through face {face}, which has no boundary condition")
        groups.setdefault(face, []).append(n)

    for face, members in groups.items():
        axis, _ = face
        members = np.asarray(members)
        full_index = np.array(np.unravel_index(members, grid.shape))
        sub_index = tuple(np.delete(full_index, axis, axis=0))
        face_shape = tuple(s for a, s in enumerate(grid.shape) if a != axis)
        mask = np.zeros(face_shape, dtype=bool)
        mask[sub_index] = True
        bc_phi, bc_psi = apply_inflow_bc(state, field, face, options.boundary_for(face), options, mask)
        if grid.dim == 1:
            phi[members] = bc_phi
            psi[members] = bc_psi
        else:
            phi[members] = bc_phi[sub_index]
            psi[members] = bc_psi[sub_index]


def cfl_time_step(grid: Grid, field: VelocityField, t: float = 0.0) -> float:
    """Default step bound ``h_min / (2 v_max)``; feet then stay within one cell."""
    vmax = field.max_speed(grid, t)
    if vmax == 0.0:
        return float("inf")
    return float(np.min(grid.spacing) / (2.0 * vmax))


class GradientAugmentedAdvector(TransformerMixin, BaseEstimator):
    """Estimator interface to the CIR stepper.

    ``fit(state)`` validates the configuration against the initial state
    (inflow faces need boundary conditions); ``transform(state)`` advances
    it by ``n_steps`` steps of size ``dt``.

    Parameters
    ----------
    field : VelocityField
    dt : float or None
        Time step; ``None`` uses :func:`cfl_time_step` at fit time.
    n_steps : int
    integrator : {'rk3', 'euler'}
    gradient_update : {'superconsistent', 'heun'}
    cross : {'cell', 'central', 'zero'}
    boundary : condition, mapping or None
    """

    def __init__(
        self,
        field=None,
        dt=None,
        n_steps: int = 1,
        integrator: str = "rk3",
        gradient_update: str = "superconsistent",
        cross: str = "cell",
        boundary=None,
    ):
        self.field = field
        self.dt = dt
        self.n_steps = n_steps
        self.integrator = integrator
        self.gradient_update = gradient_update
        self.cross = cross
        self.boundary = boundary

    def fit(self, state: LevelSetState, y=None):
        if self.field is None:
            raise ValueError("a velocity field is required")
        if int(self.n_steps) < 0:
            raise ValueError("n_steps must be non-negative")
        dt = cfl_time_step(state.grid, self.field, state.t) if self.dt is None else self.dt
        self.options_ = StepOptions(dt, self.integrator, self.gradient_update, self.cross, self.boundary)
        check_boundary_config(state.grid, self.field, state.t, self.options_)
        return self

    def iter_steps(self, state: LevelSetState, n_steps: int | None = None) -> Iterator[LevelSetState]:
        check_is_fitted(self, "options_")
        n = self.n_steps if n_steps is None else n_steps
        for _ in range(int(n)):
            state = step(state, self.field, self.options_)
            yield state

    def transform(self, state: LevelSetState) -> LevelSetState:
        for state in self.iter_steps(state):
            pass
        return state

"""Analytic velocity fields with closed-form deformation matrices.

Every field evaluates ``v`` (shape ``(N, p)``) and ``grad_v`` (shape
``(N, p, p)``) with ``grad_v[:, i, j] = d v_j / d x_i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from ._validation import check_points, check_positive

PI = np.pi


class VelocitySample(NamedTuple):
    v: np.ndarray
    grad_v: np.ndarray


class VelocityField:
    """Base class; subclasses implement :meth:`evaluate`."""

    dim: int = 2

    def evaluate(self, x: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def velocity(self, x, t: float) -> np.ndarray:
        return self.evaluate(x, t)[0]

    def max_speed(self, grid, t: float) -> float:
        v = self.velocity(grid.nodes(), t)
        return float(np.max(np.linalg.norm(v, axis=1)))


def sample(field: VelocityField, x, t: float) -> VelocitySample:
    """Velocity and deformation matrix of ``field`` at a single point."""
    x = check_points(np.reshape(np.asarray(x, dtype=float), (1, -1)), field.dim)
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    v, gv = field.evaluate(x, float(t))
    return VelocitySample(v[0], gv[0])


@dataclass(frozen=True)
class ConstantVelocity(VelocityField):
    velocity_vector: tuple

    @property
    def dim(self) -> int:
        return len(self.velocity_vector)

    def evaluate(self, x, t):
        n = x.shape[0]
        c = np.asarray(self.velocity_vector, dtype=float)
        return np.broadcast_to(c, (n, c.size)).copy(), np.zeros((n, c.size, c.size))


@dataclass(frozen=True)
class CallableField(VelocityField):
    """User-supplied field: ``velocity(x, t)`` and ``gradient(x, t)`` on ``(N, p)`` points."""

    velocity_func: Callable
    gradient_func: Callable
    dim: int = 2

    def evaluate(self, x, t):
        return np.asarray(self.velocity_func(x, t), float), np.asarray(self.gradient_func(x, t), float)


class Pseudo1D(VelocityField):
    """Exponentially accelerating flow along the fixed unit direction ``(sqrt 2, sqrt pi) / sqrt(2 + pi)``."""

    dim = 2
    direction = np.array([np.sqrt(2.0), np.sqrt(PI)]) / np.sqrt(2.0 + PI)

    def evaluate(self, x, t):
        d = self.direction
        amp = np.exp(x @ d)
        v = amp[:, None] * d
        gv = amp[:, None, None] * np.outer(d, d)
        return v, gv

    def foot(self, x, t0: float, t1: float) -> np.ndarray:
        """Exact position at ``t0`` of the particle at ``x`` at time ``t1``."""
        d = self.direction
        s = x @ d
        s0 = -np.log(np.exp(-s) + (t1 - t0))
        return x + (s0 - s)[:, None] * d

    def foot_jacobian(self, x, t0: float, t1: float) -> np.ndarray:
        """``J[:, i, j] = d foot_j / d x_i``."""
        d = self.direction
        s = x @ d
        ds0 = np.exp(-s) / (np.exp(-s) + (t1 - t0))
        return np.eye(2)[None] + (ds0 - 1.0)[:, None, None] * np.outer(d, d)[None]


@dataclass(frozen=True)
class VortexBox(VelocityField):
    """Single vortex on the unit square modulated by ``cos(pi t / T)``; the flow reverses at ``T / 2``."""

    period: float = 2.0
    dim = 2

    def __post_init__(self):
        check_positive(self.period, "period")

    def evaluate(self, x, t):
        c = np.cos(PI * t / self.period)
        X, Y = x[:, 0], x[:, 1]
        sx2, sy2 = np.sin(PI * X) ** 2, np.sin(PI * Y) ** 2
        s2x, s2y = np.sin(2 * PI * X), np.sin(2 * PI * Y)
        u = -c * sx2 * s2y
        w = c * s2x * sy2
        gv = np.empty((x.shape[0], 2, 2))
        gv[:, 0, 0] = -c * PI * s2x * s2y
        gv[:, 1, 0] = -c * 2 * PI * sx2 * np.cos(2 * PI * Y)
        gv[:, 0, 1] = c * 2 * PI * np.cos(2 * PI * X) * sy2
        gv[:, 1, 1] = c * PI * s2x * s2y
        return np.stack([u, w], axis=-1), gv


@dataclass(frozen=True)
class RigidRotation(VelocityField):
    """Rotation about ``center`` in the x-y plane, one revolution per ``2 pi / omega``.

    The default matches the Zalesak test: ``omega = pi / 314`` about ``(50, 50)``.
    """

    dim: int = 2
    omega: float = PI / 314.0
    center: tuple = (50.0, 50.0)

    def evaluate(self, x, t):
        n = x.shape[0]
        v = np.zeros((n, self.dim))
        v[:, 0] = self.omega * (self.center[1] - x[:, 1])
        v[:, 1] = self.omega * (x[:, 0] - self.center[0])
        gv = np.zeros((n, self.dim, self.dim))
        gv[:, 1, 0] = -self.omega
        gv[:, 0, 1] = self.omega
        return v, gv


def RigidRotation2D() -> RigidRotation:
    return RigidRotation(2)


def RigidRotation3D() -> RigidRotation:
    return RigidRotation(3)


@dataclass(frozen=True)
class Leveque3D(VelocityField):
    """Incompressible 3D deformation on the unit cube, modulated by ``cos(pi t / T)``."""

    period: float = 2.5
    dim = 3

    def __post_init__(self):
        check_positive(self.period, "period")

    def evaluate(self, x, t):
        c = np.cos(PI * t / self.period)
        X, Y, Z = x[:, 0], x[:, 1], x[:, 2]
        s1 = {k: np.sin(PI * q) for k, q in zip("xyz", (X, Y, Z))}
        s2 = {k: np.sin(2 * PI * q) for k, q in zip("xyz", (X, Y, Z))}
        c2 = {k: np.cos(2 * PI * q) for k, q in zip("xyz", (X, Y, Z))}
        sq = {k: s1[k] ** 2 for k in "xyz"}
        u = 2 * sq["x"] * s2["y"] * s2["z"]
        v = -s2["x"] * sq["y"] * s2["z"]
        w = -s2["x"] * s2["y"] * sq["z"]
        gv = np.empty((x.shape[0], 3, 3))
        # d(sin^2(pi q))/dq = pi sin(2 pi q)
        gv[:, 0, 0] = 2 * PI * s2["x"] * s2["y"] * s2["z"]
        gv[:, 1, 0] = 4 * PI * sq["x"] * c2["y"] * s2["z"]
        gv[:, 2, 0] = 4 * PI * sq["x"] * s2["y"] * c2["z"]
        gv[:, 0, 1] = -2 * PI * c2["x"] * sq["y"] * s2["z"]
        gv[:, 1, 1] = -PI * s2["x"] * s2["y"] * s2["z"]
        gv[:, 2, 1] = -2 * PI * s2["x"] * sq["y"] * c2["z"]
        gv[:, 0, 2] = -2 * PI * c2["x"] * s2["y"] * sq["z"]
        gv[:, 1, 2] = -2 * PI * s2["x"] * c2["y"] * sq["z"]
        gv[:, 2, 2] = -PI * s2["x"] * s2["y"] * s2["z"]
        return c * np.stack([u, v, w], axis=-1), c * gv


FIELDS = {
    "pseudo1d": lambda **kw: Pseudo1D(),
    "vortex": lambda period=2.0, **kw: VortexBox(float(period)),
    "rotation2d": lambda **kw: RigidRotation(2),
    "rotation3d": lambda **kw: RigidRotation(3),
    "leveque3d": lambda period=2.5, **kw: Leveque3D(float(period)),
}


def make_field(name: str, **params) -> VelocityField:
    """Field by configuration name (``pseudo1d``, ``vortex``, ``rotation2d``, ``rotation3d``, ``leveque3d``)."""
    try:
        return FIELDS[name](**params)
    except KeyError:
        raise ValueError(f"unknown velocity field {name!r}; known: {sorted(FIELDS)}") from None

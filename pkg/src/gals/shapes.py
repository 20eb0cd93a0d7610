"""Initial level set functions: exact signed distances and smooth bumps.

Every shape returns ``(phi, grad)`` for points of shape ``(N, p)``; ``phi`` is
negative inside.  On ridges of a distance function (points with several
nearest features) the gradient of the first feature in declaration order
is used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_positive
from .grid import Grid, LevelSetState


class ShapeOutsideDomainError(ValueError):
    pass


class Shape:
    dim: int

    def evaluate(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def phi(self, x):
        return self.evaluate(np.asarray(x, dtype=float))[0]

    def grad(self, x):
        return self.evaluate(np.asarray(x, dtype=float))[1]


def _unit(v, fallback):
    n = np.linalg.norm(v, axis=1)
    out = np.empty_like(v)
    ok = n > 0
    out[ok] = v[ok] / n[ok, None]
    out[~ok] = fallback
    return out, n


@dataclass(frozen=True)
class Ball(Shape):
    """Circle (2D) or sphere (3D)."""

    center: tuple
    radius: float

    def __post_init__(self):
        check_positive(self.radius, "radius")

    @property
    def dim(self):
        return len(self.center)

    def evaluate(self, x):
        d = x - np.asarray(self.center, dtype=float)
        u, n = _unit(d, np.eye(self.dim)[0])
        return n - self.radius, u

    def bounds(self):
        c = np.asarray(self.center, dtype=float)
        return c - self.radius, c + self.radius


def Circle(center=(0.5, 0.75), radius=0.15) -> Ball:
    return Ball(tuple(center), radius)


def Sphere(center=(0.35, 0.35, 0.35), radius=0.15) -> Ball:
    return Ball(tuple(center), radius)


@dataclass(frozen=True)
class Box(Shape):
    """Axis aligned cube (or square) of edge length ``side``."""

    center: tuple
    side: float

    def __post_init__(self):
        check_positive(self.side, "side")

    @property
    def dim(self):
        return len(self.center)

    def evaluate(self, x):
        d = x - np.asarray(self.center, dtype=float)
        q = np.abs(d) - 0.5 * self.side
        s = np.where(d < 0, -1.0, 1.0)
        outside = np.any(q > 0, axis=1)
        qp = np.maximum(q, 0.0)
        n = np.linalg.norm(qp, axis=1)
        phi = np.where(outside, n, q.max(axis=1))
        grad = np.zeros_like(x)
        rows = np.flatnonzero(outside)
        grad[rows] = s[rows] * qp[rows] / n[rows, None]
        inner = np.flatnonzero(~outside)
        axis = np.argmax(q[inner], axis=1)
        grad[inner, axis] = s[inner, axis]
        return phi, grad

    def bounds(self):
        c = np.asarray(self.center, dtype=float)
        return c - 0.5 * self.side, c + 0.5 * self.side


def Cube(center=(0.35, 0.35, 0.35), side=0.3) -> Box:
    return Box(tuple(center), side)


@dataclass(frozen=True)
class GaussianBump(Shape):
    """Smooth ``exp(-|x - c|^2) - exp(-r0^2)``; zero contour is the circle of radius ``r0``."""

    center: tuple = (0.5, 0.5)
    r0: float = 0.15

    def __post_init__(self):
        check_positive(self.r0, "r0")

    @property
    def dim(self):
        return len(self.center)

    def evaluate(self, x):
        d = x - np.asarray(self.center, dtype=float)
        e = np.exp(-np.einsum("ni,ni->n", d, d))
        return e - np.exp(-self.r0**2), -2.0 * d * e[:, None]

    def hessian(self, x):
        d = np.asarray(x, dtype=float) - np.asarray(self.center, dtype=float)
        e = np.exp(-np.einsum("ni,ni->n", d, d))
        return e[:, None, None] * (4.0 * d[:, :, None] * d[:, None, :] - 2.0 * np.eye(self.dim))

    def bounds(self):
        c = np.asarray(self.center, dtype=float)
        return c - self.r0, c + self.r0


def _closest_in_cap(q, center, rho, lines):
    """Closest points of the 2D convex set ``disk(center, rho) ∩ {n . p <= b}``.

    ``lines`` holds ``(n, b)`` half planes with unit normals; they must be
    parallel or single so that a chord is never cut by another line.
    """
    best = np.full(len(q), np.inf)
    point = np.zeros_like(q)

    def offer(cand, valid):
        dist = np.where(valid, np.linalg.norm(q - cand, axis=1), np.inf)
        better = dist < best
        best[better] = dist[better]
        point[better] = cand[better]

    def admissible(p, slack=1e-12):
        ok = np.ones(len(p), dtype=bool)
        for n, b in lines:
            ok &= p @ n <= b + slack * max(1.0, abs(b))
        return ok

    inside = (np.linalg.norm(q - center, axis=1) <= rho) & admissible(q, 0.0)
    offer(q, inside)
    u, _ = _unit(q - center, np.array([1.0, 0.0]))
    radial = center + rho * u
    offer(radial, admissible(radial))
    for n, b in lines:
        n = np.asarray(n, dtype=float)
        tangent = np.array([-n[1], n[0]])
        foot = center + (b - center @ n) * n
        half = np.sqrt(max(rho**2 - (b - center @ n) ** 2, 0.0))
        t = np.clip((q - foot) @ tangent, -half, half)
        offer(foot + t[:, None] * tangent, np.ones(len(q), dtype=bool))
    return point, best


@dataclass(frozen=True)
class SlottedBall(Shape):
    """Zalesak disk (2D) or sphere (3D) with a slot cut upward from the bottom rim.

    The slot occupies ``|x - cx| <= width / 2`` and ``y <= cy - r + length``
    (all ``z`` in 3D).
    """

    center: tuple
    radius: float
    slot_width: float
    slot_length: float

    def __post_init__(self):
        for name in ("radius", "slot_width", "slot_length"):
            check_positive(getattr(self, name), name)
        if self.slot_width >= 2 * self.radius or self.slot_length >= 2 * self.radius:
            raise ValueError("slot must be smaller than the disk")

    @property
    def dim(self):
        return len(self.center)

    def _in_slot(self, p):
        c = self.center
        return (np.abs(p[:, 0] - c[0]) < 0.5 * self.slot_width) & (p[:, 1] < c[1] - self.radius + self.slot_length)

    def evaluate(self, x):
        p = self.dim
        q = x if p == 3 else np.hstack([x, np.zeros((len(x), 1))])
        c = np.array(self.center + ((0.0,) if p == 2 else ()), dtype=float)
        r, hw = self.radius, 0.5 * self.slot_width
        top = c[1] - r + self.slot_length

        # sphere surface outside the slot
        u, norm = _unit(q - c, np.array([1.0, 0.0, 0.0]))
        on_ball = c + r * u
        best = np.where(self._in_slot(on_ball), np.inf, np.abs(norm - r))
        nearest = on_ball.copy()
        normal = u.copy()

        # side walls x = cx -+ hw, region: disk in (y, z) cut at y <= top
        for sign in (-1.0, 1.0):
            x0 = c[0] + sign * hw
            rho = np.sqrt(r**2 - hw**2)
            yz, d2 = _closest_in_cap(q[:, 1:], c[1:], rho, [(np.array([1.0, 0.0]), top)])
            dist = np.hypot(d2, q[:, 0] - x0)
            cand = np.column_stack([np.full(len(q), x0), yz])
            self._take(dist, cand, np.array([-sign, 0.0, 0.0]), best, nearest, normal)

        # slot roof y = top, region: disk in (x, z) cut to |x - cx| <= hw
        rho = np.sqrt(r**2 - (top - c[1]) ** 2)
        lines = [(np.array([1.0, 0.0]), c[0] + hw), (np.array([-1.0, 0.0]), -(c[0] - hw))]
        xz, d2 = _closest_in_cap(q[:, [0, 2]], c[[0, 2]], rho, lines)
        dist = np.hypot(d2, q[:, 1] - top)
        cand = np.column_stack([xz[:, 0], np.full(len(q), top), xz[:, 1]])
        self._take(dist, cand, np.array([0.0, -1.0, 0.0]), best, nearest, normal)

        inside = (norm < r) & ~self._in_slot(q)
        sign = np.where(inside, -1.0, 1.0)
        diff = q - nearest
        grad = np.where(best[:, None] > 0, diff / np.where(best > 0, best, 1.0)[:, None], normal)
        grad = sign[:, None] * grad
        # on the surface itself the outward normal is used unchanged
        grad = np.where((best == 0)[:, None], normal, grad)
        phi = sign * best
        return phi, grad[:, :p]

    @staticmethod
    def _take(dist, cand, out_normal, best, nearest, normal):
        better = dist < best
        best[better] = dist[better]
        nearest[better] = cand[better]
        normal[better] = out_normal

    def bounds(self):
        c = np.asarray(self.center, dtype=float)
        return c - self.radius, c + self.radius


def SlottedDisk(center=(50.0, 75.0), radius=15.0, slot_width=5.0, slot_length=25.0) -> SlottedBall:
    return SlottedBall(tuple(center), radius, slot_width, slot_length)


def SlottedSphere(center=(50.0, 75.0, 50.0), radius=15.0, slot_width=5.0, slot_depth=25.0) -> SlottedBall:
    return SlottedBall(tuple(center), radius, slot_width, slot_depth)


@dataclass(frozen=True)
class FunctionShape(Shape):
    """Arbitrary level set from callables ``phi(x)`` and ``grad(x)``."""

    phi_func: object
    grad_func: object
    dim: int = 2

    def evaluate(self, x):
        return np.asarray(self.phi_func(x), float), np.asarray(self.grad_func(x), float)

    def bounds(self):
        return None


def curvature_test_function():
    """``((x - 2)(y - x))^3`` with its exact gradient."""

    def phi(x):
        return ((x[:, 0] - 2.0) * (x[:, 1] - x[:, 0])) ** 3

    def grad(x):
        a = (x[:, 0] - 2.0) * (x[:, 1] - x[:, 0])
        da_dx = (x[:, 1] - x[:, 0]) - (x[:, 0] - 2.0)
        da_dy = x[:, 0] - 2.0
        return np.column_stack([3 * a**2 * da_dx, 3 * a**2 * da_dy])

    return FunctionShape(phi, grad, 2)


def init_level_set(shape: Shape, grid: Grid, t: float = 0.0) -> LevelSetState:
    """Sample ``shape`` at the grid nodes; raises if the shape leaves the domain."""
    if shape.dim != grid.dim:
        raise ValueError(f"shape is {shape.dim}D, grid is {grid.dim}D")
    box = shape.bounds()
    if box is not None:
        lo, hi = box
        if np.any(lo < np.asarray(grid.lower)) or np.any(hi > np.asarray(grid.upper)):
            raise ShapeOutsideDomainError(f"shape bounds {lo}..{hi} exceed the domain {grid.lower}..{grid.upper}")
    phi, grad = shape.evaluate(grid.nodes())
    return LevelSetState(grid, phi.reshape(grid.shape), grad.reshape(grid.shape + (grid.dim,)), t)


# ---------------------------------------------------------------------------
# subgrid presets: one cell of edge h whose cubic hides a structure


def subgrid_preset(kind: str, h: float = 1.0) -> LevelSetState:
    """Single-cell states whose interpolant contains a structure no node sees.

    ``bubble`` is the 1D signed distance of an interval of width ``0.6 h``
    centred in the cell.  The 3D presets set ``phi = 0.1`` at all vertices
    and ``psi`` from the local coordinate ``xi`` in ``[0, 1]^3``:
    drop ``(xi - 1/2) / (3h)``, jet ``(0, xi_y - 1/2, xi_z - 1/2) / (2h)``,
    film ``(0, xi_y - 1/2, 0) / h``.
    """
    check_positive(h, "h")
    if kind == "bubble":
        grid = Grid((0.0,), (h,), (2,))
        half = 0.3 * h
        mid = 0.5 * h
        x = grid.coordinates(0)
        phi = np.abs(x - mid) - half
        psi = np.sign(x - mid)[:, None]
        return LevelSetState(grid, phi, psi)
    weights = {
        "drop": (np.ones(3), 1.0 / 3.0),
        "jet": (np.array([0.0, 1.0, 1.0]), 0.5),
        "film": (np.array([0.0, 1.0, 0.0]), 1.0),
    }
    if kind not in weights:
        raise ValueError(f"unknown preset {kind!r}; known: bubble, drop, jet, film")
    mask, scale = weights[kind]
    grid = Grid((0.0,) * 3, (h,) * 3, (2,) * 3)
    xi = grid.nodes() / h
    psi = scale / h * (xi - 0.5) * mask
    return LevelSetState(grid, np.full(grid.shape, 0.1), psi.reshape(grid.shape + (3,)))


SHAPES = {
    "circle": Circle,
    "sphere": Sphere,
    "cube": Cube,
    "slotted-disk": SlottedDisk,
    "slotted-sphere": SlottedSphere,
    "bump": GaussianBump,
}

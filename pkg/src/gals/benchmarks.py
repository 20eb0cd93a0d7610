"""Benchmark definitions, runs and convergence studies."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .advection import HomogeneousNeumann, StepOptions, step
from .convergence import InsufficientDataError, OrderFit, fit_order
from .geometry import (
    curvature_from_derivatives,
    extract_contour,
    measure_volume,
    write_obj,
    write_polyline_csv,
    write_vtk,
)
from .grid import Grid, LevelSetState
from .hermite import CrossScheme, derivatives_upto2, interp_error_orders, interpolate
from .shapes import Circle, Cube, GaussianBump, SlottedDisk, SlottedSphere, Sphere, curvature_test_function, init_level_set
from .velocity import Leveque3D, Pseudo1D, RigidRotation, VortexBox
from .weno import advect_weno, reinitialize, to_state

SCHEMES = ("gals-rk3", "gals-heun", "gals-euler", "weno", "weno-reinit")
REVOLUTION = 628.0


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    dim: int
    lower: float
    upper: float
    default_n: int
    make_field: Callable
    make_shape: Callable
    dt_rule: object
    final_time: float
    kind: str  # "lte", "gte" or "shape"
    snapshots: tuple = ()
    boundary: object = None
    ladder: tuple = (32, 64, 128, 256)
    n_steps: int | None = None


BENCHMARKS = {
    "pseudo1d": BenchmarkSpec(
        "pseudo1d", 2, 0.0, 1.0, 64, Pseudo1D, lambda: GaussianBump((0.5, 0.5), 0.15),
        "h/2", 0.0, "lte", boundary=HomogeneousNeumann(), n_steps=16,
    ),
    "vortex": BenchmarkSpec(
        "vortex", 2, 0.0, 1.0, 64, lambda: VortexBox(2.0), lambda: GaussianBump((0.5, 0.75), 0.15),
        "h", 2.0, "gte",
    ),
    "swirl": BenchmarkSpec(
        "swirl", 2, 0.0, 1.0, 64, lambda: VortexBox(8.0), lambda: Circle((0.5, 0.75), 0.15),
        "h", 8.0, "shape", snapshots=(0.0, 4.0, 8.0),
    ),
    "zalesak-circle": BenchmarkSpec(
        "zalesak-circle", 2, 0.0, 100.0, 64, lambda: RigidRotation(2), SlottedDisk,
        1.0, REVOLUTION, "shape", snapshots=(0.0, REVOLUTION), boundary=HomogeneousNeumann(),
    ),
    "zalesak-sphere": BenchmarkSpec(
        "zalesak-sphere", 3, 0.0, 100.0, 50, lambda: RigidRotation(3), SlottedSphere,
        1.0, REVOLUTION, "shape", snapshots=(0.0, 157.0, 314.0, 471.0, 628.0), boundary=HomogeneousNeumann(),
    ),
    "deform-sphere": BenchmarkSpec(
        "deform-sphere", 3, 0.0, 1.0, 50, lambda: Leveque3D(2.5), Sphere,
        "h", 2.5, "shape", snapshots=(0.0, 0.625, 1.25, 1.875, 2.5),
    ),
    "deform-cube": BenchmarkSpec(
        "deform-cube", 3, 0.0, 1.0, 50, lambda: Leveque3D(2.5), Cube,
        "h", 2.5, "shape", snapshots=(0.0, 0.625, 1.25, 1.875, 2.5),
    ),
}
STUDIES = ("pseudo1d", "vortex", "curvature", "interp")

# curvature study: |y - x| below this is excluded (the gradient of the test
# function vanishes on the diagonal)
CURVATURE_BAND = 0.05


class UnknownBenchmarkError(ValueError):
    pass


@dataclass
class RunConfig:
    """Settings of one benchmark run; ``None`` fields take the benchmark defaults."""

    benchmark: str
    grid: int | None = None
    scheme: str = "gals-rk3"
    cross: str = "cell"
    dt: object = None
    out: str | None = None
    refine: int = 4
    seed: int = 0
    final_time: float | None = None
    revolutions: float | None = None
    cfl: float = 0.5

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        CrossScheme(self.cross)
        if self.grid is not None and int(self.grid) < 2:
            raise ValueError("grid must have at least 2 cells")


@dataclass
class ErrorReport:
    """Max-norm errors per resolution plus fitted orders."""

    benchmark: str
    rows: list = field(default_factory=list)
    slope_phi: OrderFit | None = None
    slope_psi: OrderFit | None = None

    def add(self, h, dt, e_phi, e_psi):
        self.rows.append({"h": float(h), "dt": float(dt), "e_phi": float(e_phi), "e_psi": float(e_psi)})

    def fit(self) -> "ErrorReport":
        h = [r["h"] for r in self.rows]
        self.slope_phi = fit_order(h, [r["e_phi"] for r in self.rows])
        if all(np.isfinite(r["e_psi"]) and r["e_psi"] > 0 for r in self.rows):
            self.slope_psi = fit_order(h, [r["e_psi"] for r in self.rows])
        return self

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["h", "dt", "e_phi", "e_psi"])
            for r in self.rows:
                w.writerow([_fmt(r[k]) for k in ("h", "dt", "e_phi", "e_psi")])
        return path

    def summary(self) -> str:
        lines = [f"{self.benchmark}: {len(self.rows)} level(s)"]
        for r in self.rows:
            lines.append(f"  h={r['h']:.6g} dt={r['dt']:.6g} e_phi={r['e_phi']:.3e} e_psi={r['e_psi']:.3e}")
        for name, fit in (("phi", self.slope_phi), ("psi", self.slope_psi)):
            if fit is not None:
                lines.append(f"  slope {name}: {fit.slope:.3f} +- {fit.residual:.3f}")
        return "\n".join(lines)


def _fmt(x: float) -> str:
    return f"{x:.16e}"


@dataclass
class RunResult:
    benchmark: str
    scheme: str
    n: int
    state: LevelSetState
    initial: LevelSetState
    metrics: dict
    volumes: list
    files: list
    wall_time: float


def get_benchmark(name: str) -> BenchmarkSpec:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise UnknownBenchmarkError(f"unknown benchmark {name!r}; known: {sorted(BENCHMARKS)}") from None


def resolve_dt(rule, h: float, field=None, grid=None) -> float:
    """``'h'``, ``'h/2'``, ``'cfl'`` (half a cell per step) or a number."""
    if isinstance(rule, (int, float)):
        value = float(rule)
    elif rule == "h":
        value = h
    elif rule == "h/2":
        value = 0.5 * h
    elif rule == "cfl":
        vmax = field.max_speed(grid, 0.0)
        value = h / (2.0 * vmax)
    else:
        try:
            value = float(rule)
        except (TypeError, ValueError):
            raise ValueError(f"bad time step rule {rule!r}") from None
    if not value > 0:
        raise ValueError("time step must be positive")
    return value


def make_grid(spec: BenchmarkSpec, n: int) -> Grid:
    return Grid.uniform(int(n), spec.dim, spec.lower, spec.upper)


class _Stepper:
    """Uniform interface over the gradient-augmented and baseline schemes."""

    def __init__(self, scheme, field, grid, dt, boundary, cross, cfl):
        self.scheme = scheme
        self.field = field
        self.grid = grid
        self.cfl = cfl
        if scheme.startswith("gals"):
            integrator = "euler" if scheme == "gals-euler" else "rk3"
            update = "heun" if scheme == "gals-heun" else "superconsistent"
            self.options = StepOptions(dt, integrator, update, cross, boundary)

    def __call__(self, state: LevelSetState, dt: float) -> LevelSetState:
        if self.scheme.startswith("gals"):
            return step(state, self.field, self.options.with_dt(dt))
        phi = advect_weno(np.array(state.phi), self.grid, self.field, state.t, dt, self.cfl)
        if self.scheme == "weno-reinit":
            phi = reinitialize(phi, self.grid, 2)
        return to_state(phi, self.grid, state.t + dt)


def _time_levels(final_time: float, dt: float, n_steps: int | None):
    if n_steps is not None:
        return [dt] * n_steps
    n = max(1, math.ceil(final_time / dt - 1e-9))
    steps = [dt] * (n - 1)
    steps.append(final_time - dt * (n - 1))
    return steps


def slot_crossings(state: LevelSetState, center=(50.0, 75.0), radius=15.0, slot_length=25.0, samples=2001) -> int:
    """Sign changes of the interpolant across the slot of a Zalesak disk.

    Sampled on the horizontal line through the middle of the slot, between
    ``cx - r/2`` and ``cx + r/2`` (the outer rim is excluded).  An intact slot
    gives 2 crossings, a closed one 0.
    """
    cx, cy = center
    y = cy - radius + 0.5 * slot_length
    xs = np.linspace(cx - 0.5 * radius, cx + 0.5 * radius, samples)
    vals = interpolate(state, np.column_stack([xs, np.full(samples, y)]))[:, 0]
    signs = np.sign(vals)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def _write_contour(state, spec, scheme, out: Path, refine, files):
    mesh = extract_contour(state, refine)
    tag = f"{spec.name}_{scheme}_t{state.t:.6g}"
    if mesh.is_empty:
        return
    if spec.dim == 2:
        files.append(write_polyline_csv(mesh, out / f"{tag}.csv"))
    else:
        files.append(write_obj(mesh, out / f"{tag}.obj"))
        files.append(write_vtk(mesh, out / f"{tag}.vtk"))


def run_benchmark(config: RunConfig) -> RunResult:
    """Run one scheme on one benchmark and collect metrics.

    Shape benchmarks report the enclosed volume (area in 2D) at start and
    end and its relative change; ``gte``/``lte`` benchmarks report max-norm
    errors instead.
    If ``config.out`` is set, contours at the snapshot times, a volume series
    and a summary are written there.
    """
    spec = get_benchmark(config.benchmark)
    n = int(config.grid or spec.default_n)
    grid = make_grid(spec, n)
    fld = spec.make_field()
    h = grid.h
    dt = resolve_dt(config.dt if config.dt is not None else spec.dt_rule, h, fld, grid)
    final = spec.final_time
    snapshots = list(spec.snapshots)
    if config.revolutions is not None:
        final = REVOLUTION * float(config.revolutions)
        snapshots = [REVOLUTION * k for k in range(int(math.floor(config.revolutions)) + 1)]
    if config.final_time is not None:
        final = float(config.final_time)
        snapshots = [s for s in snapshots if s <= final] + ([final] if final not in snapshots else [])
    n_steps = spec.n_steps if spec.kind == "lte" else None

    out = Path(config.out) if config.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    files: list = []

    initial = init_level_set(spec.make_shape(), grid)
    state = initial
    stepper = _Stepper(config.scheme, fld, grid, dt, spec.boundary, config.cross, config.cfl)
    volumes = []
    start = time.perf_counter()

    def snapshot(s):
        volumes.append((s.t, measure_volume(s, config.refine)))
        if out is not None:
            _write_contour(s, spec, config.scheme, out, config.refine, files)

    pending = sorted(snapshots)
    if pending and pending[0] <= 1e-12:
        snapshot(state)
        pending.pop(0)
    for k, size in enumerate(_time_levels(final, dt, n_steps)):
        state = stepper(state, size)
        while pending and state.t >= pending[0] - 1e-9 * max(1.0, pending[0]):
            snapshot(state)
            pending.pop(0)
    wall = time.perf_counter() - start

    metrics = {"h": h, "dt": dt, "t_final": state.t, "wall_time": wall}
    if spec.kind == "shape":
        v0 = volumes[0][1] if volumes and volumes[0][0] == 0.0 else measure_volume(initial, config.refine)
        v1 = volumes[-1][1] if volumes and abs(volumes[-1][0] - state.t) < 1e-9 else measure_volume(state, config.refine)
        metrics.update(volume0=v0, volume=v1, volume_change=v1 / v0 - 1.0)
    if spec.kind == "gte":
        metrics.update(e_phi=float(np.max(np.abs(state.phi - initial.phi))), e_psi=float(np.max(np.abs(state.psi - initial.psi))))
    elif spec.kind == "lte":
        metrics.update(zip(("e_phi", "e_psi"), _pseudo1d_errors(state, fld, spec)))
    if spec.name == "zalesak-circle":
        metrics["slot_crossings"] = slot_crossings(state)

    if out is not None:
        files.append(_write_volumes(volumes, out / f"{spec.name}_{config.scheme}_volume.csv"))
        summary = out / f"{spec.name}_{config.scheme}_summary.txt"
        summary.write_text("".join(f"{k} = {v}\n" for k, v in metrics.items()))
        files.append(summary)
    return RunResult(spec.name, config.scheme, n, state, initial, metrics, volumes, files, wall)


def _write_volumes(volumes, path: Path) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "volume"])
        for t, v in volumes:
            w.writerow([_fmt(t), _fmt(v)])
    return path


def _pseudo1d_errors(state, fld, spec, region=(0.25, 0.75)):
    x = state.grid.nodes()
    shape = spec.make_shape()
    foot = fld.foot(x, 0.0, state.t)
    jac = fld.foot_jacobian(x, 0.0, state.t)
    phi0, grad0 = shape.evaluate(foot)
    exact_phi = phi0
    exact_psi = np.einsum("nij,nj->ni", jac, grad0)
    tol = 1e-12
    mask = np.all((x >= region[0] - tol) & (x <= region[1] + tol), axis=1)
    e_phi = np.max(np.abs(state.phi.reshape(-1) - exact_phi)[mask])
    e_psi = np.max(np.abs(state.psi.reshape(-1, 2) - exact_psi)[mask])
    return float(e_phi), float(e_psi)


def _curvature_error(n: int, refine: int = 4, band: float = CURVATURE_BAND) -> float:
    shape = curvature_test_function()
    grid = Grid.uniform(n, 2)
    state = init_level_set(shape, grid)
    x = grid.refined(refine).nodes()
    x = x[np.abs(x[:, 1] - x[:, 0]) >= band]
    _, g, hess = derivatives_upto2(state, x)
    kappa = curvature_from_derivatives(g, hess)
    return float(np.max(np.abs(kappa - exact_curvature_test(x))))


def exact_curvature_test(x: np.ndarray) -> np.ndarray:
    """Curvature of the level sets of ``((x-2)(y-x))^3``, i.e. of ``(x-2)(y-x)``."""
    ax = (x[:, 1] - x[:, 0]) - (x[:, 0] - 2.0)
    ay = x[:, 0] - 2.0
    g = np.column_stack([ax, ay])
    hess = np.zeros((len(x), 2, 2))
    hess[:, 0, 0] = -2.0
    hess[:, 0, 1] = hess[:, 1, 0] = 1.0
    return curvature_from_derivatives(g, hess)


def convergence_study(benchmark: str, resolutions=None, scheme: str = "gals-rk3", cross: str = "cell", seed: int = 0, refine: int = 4) -> ErrorReport:
    """Errors over a ladder of grids and fitted orders.

    ``pseudo1d``: 16 steps with ``dt = h/2`` against the exact solution on
    ``[0.25, 0.75]^2``.  ``vortex``: one period with ``dt = h`` against the
    initial data.  ``curvature``: curvature of the interpolant on a
    ``refine``-times finer sampling grid.  ``interp``: value and gradient
    errors of the interpolant of a smooth field at random points.
    """
    if benchmark not in STUDIES:
        raise UnknownBenchmarkError(f"no convergence study for {benchmark!r}; known: {STUDIES}")
    if resolutions is None:
        resolutions = (16, 32, 64, 128) if benchmark in ("curvature", "interp") else get_benchmark(benchmark).ladder
    resolutions = [int(r) for r in resolutions]
    if len(resolutions) < 3:
        raise InsufficientDataError(f"need at least 3 resolutions, got {len(resolutions)}")
    if any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ValueError("resolutions must be strictly increasing")
    report = ErrorReport(benchmark)
    if benchmark == "curvature":
        for n in resolutions:
            report.add(1.0 / n, 0.0, _curvature_error(n, refine), float("nan"))
        return report.fit()
    if benchmark == "interp":
        bump = GaussianBump((0.5, 0.5), 0.15)
        res = interp_error_orders(
            lambda x: bump.evaluate(x)[0],
            lambda x: bump.evaluate(x)[1],
            bump.hessian,
            2,
            levels=resolutions,
            seed=seed,
            scheme=cross,
        )
        for h, errs in zip(res.h, res.errors):
            report.add(h, 0.0, errs[0], errs[1])
        return report.fit()
    for n in resolutions:
        result = run_benchmark(RunConfig(benchmark, grid=n, scheme=scheme, cross=cross, refine=refine))
        report.add(result.metrics["h"], result.metrics["dt"], result.metrics["e_phi"], result.metrics["e_psi"])
    return report.fit()

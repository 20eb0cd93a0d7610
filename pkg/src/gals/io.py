"""State files and plain key=value configuration files."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import Grid, LevelSetState


def save_state(state: LevelSetState, path) -> Path:
    path = Path(path)
    g = state.grid
    with path.open("wb") as fh:
        np.savez(fh, lower=g.lower, upper=g.upper, shape=g.shape, phi=state.phi, psi=state.psi, t=state.t)
    return path


def load_state(path) -> LevelSetState:
    with np.load(Path(path)) as data:
        grid = Grid(tuple(data["lower"]), tuple(data["upper"]), tuple(int(n) for n in data["shape"]))
        return LevelSetState(grid, data["phi"], data["psi"], float(data["t"]))


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out

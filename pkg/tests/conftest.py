import numpy as np
import pytest

from gals import Grid, LevelSetState


def quadratic_state(n=16, dim=2, t=0.0):
    grid = Grid.uniform(n, dim)
    c = np.linspace(0.3, 0.7, dim)

    def f(x):
        return np.sum((x - c) ** 2, axis=1) + 0.2 * x[:, 0] * x[:, -1]

    def g(x):
        out = 2.0 * (x - c)
        out[:, 0] += 0.2 * x[:, -1]
        out[:, -1] += 0.2 * x[:, 0]
        return out

    return LevelSetState.from_function(grid, f, g, t), f, g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

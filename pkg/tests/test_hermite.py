import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gals import CrossScheme, Grid, HermiteInterpolator, LevelSetState, interpolate
from gals.hermite import (
    CellData,
    all_cells,
    basis_1d,
    cell_coefficients,
    derivatives_upto2,
    evaluate,
    f,
    g,
    interp_error_orders,
    reconstruct_cross,
    sample_refined,
)

from conftest import quadratic_state


def test_1d_basis_endpoint_conditions():
    for v, a in itertools.product((0, 1), repeat=2):
        for node in (0, 1):
            value = basis_1d(v, a, 0, float(node))
            slope = basis_1d(v, a, 1, float(node))
            assert value == pytest.approx(1.0 if (a == 0 and v == node) else 0.0, abs=1e-15)
            assert slope == pytest.approx(1.0 if (a == 1 and v == node) else 0.0, abs=1e-15)
    assert f(0.5) == 0.5 and g(0.5) == 0.125


def test_basis_derivatives_match_finite_differences():
    x = np.linspace(0.05, 0.95, 7)
    eps = 1e-6
    for v, a in itertools.product((0, 1), repeat=2):
        for order in (1, 2):
            fd = (basis_1d(v, a, order - 1, x + eps) - basis_1d(v, a, order - 1, x - eps)) / (2 * eps)
            assert np.allclose(basis_1d(v, a, order, x), fd, atol=1e-7)


def _poly_deriv(coef, x, alpha):
    """Derivative of sum c[i, j] x^i y^j."""
    out = 0.0
    for (i, j), c in np.ndenumerate(coef):
        if i < alpha[0] or j < alpha[1]:
            continue
        fi = np.prod(np.arange(i - alpha[0] + 1, i + 1)) if alpha[0] else 1.0
        fj = np.prod(np.arange(j - alpha[1] + 1, j + 1)) if alpha[1] else 1.0
        out = out + c * fi * fj * x[..., 0] ** (i - alpha[0]) * x[..., 1] ** (j - alpha[1])
    return out


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=16, max_size=16), st.floats(0.01, 3.0), st.floats(0.01, 3.0))
def test_bicubic_reproduced_from_exact_data(c, hx, hy):
    coef = np.array(c).reshape(4, 4)
    lower = np.array([0.3, -0.7])
    cell = CellData.from_derivatives(lambda x, a: _poly_deriv(coef, x, a), lower, (hx, hy))
    rng = np.random.default_rng(0)
    for xi in rng.random((5, 2)):
        x = lower + xi * np.array([hx, hy])
        for alpha in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (2, 2)]:
            exact = _poly_deriv(coef, x, alpha)
            # roundoff in a derivative grows like h^-order
            scale = max(1.0, np.abs(coef).sum() * max(hx, hy, 1.0) ** 6) / (hx ** alpha[0] * hy ** alpha[1])
            assert abs(evaluate(cell, xi, alpha) - exact) <= 1e-12 * scale


@pytest.mark.parametrize("scheme", list(CrossScheme))
def test_interpolant_matches_node_data(scheme, rng):
    grid = Grid.uniform(6, 2)
    state = LevelSetState(grid, rng.normal(size=(7, 7)), rng.normal(size=(7, 7, 2)))
    x = grid.nodes()
    v, gr, _ = derivatives_upto2(state, x, scheme)
    assert np.allclose(v, state.phi.reshape(-1), atol=1e-13)
    assert np.allclose(gr, state.psi.reshape(-1, 2), atol=1e-12)


def test_interpolant_is_continuous_across_faces(rng):
    grid = Grid.uniform(4, 2)
    state = LevelSetState(grid, rng.normal(size=(5, 5)), rng.normal(size=(5, 5, 2)))
    y = rng.random(20)
    left = np.column_stack([np.full(20, 0.5 - 1e-12), y])
    right = np.column_stack([np.full(20, 0.5), y])
    assert np.allclose(interpolate(state, left), interpolate(state, right), atol=1e-9)


@pytest.mark.parametrize("scheme", ["cell", "central"])
def test_quadratic_reproduced_from_node_data(scheme):
    state, func, grad = quadratic_state(8, 2)
    pts = np.random.default_rng(3).random((200, 2))
    v, gr, he = derivatives_upto2(state, pts, scheme)
    assert np.allclose(v, func(pts), atol=1e-13)
    assert np.allclose(gr, grad(pts), atol=1e-12)


def test_cross_scheme_data_agree_on_quadratic():
    state, _, _ = quadratic_state(6, 3)
    cells = all_cells(state.grid)
    cell = cell_coefficients(state, cells, "cell")
    central = cell_coefficients(state, cells, "central")
    assert np.allclose(cell, central, atol=1e-12)
    # d^2/dxdz of the test quadratic is 0.2
    assert np.allclose(reconstruct_cross(state, (1, 2, 3)).coeffs[..., 1, 0, 1], 0.2)


def test_interpolation_orders_smooth_field():
    def func(x):
        return np.sin(2 * x[:, 0]) * np.cos(3 * x[:, 1])

    def grad(x):
        return np.column_stack([2 * np.cos(2 * x[:, 0]) * np.cos(3 * x[:, 1]), -3 * np.sin(2 * x[:, 0]) * np.sin(3 * x[:, 1])])

    def hess(x):
        s, c = np.sin(2 * x[:, 0]), np.cos(2 * x[:, 0])
        sy, cy = np.sin(3 * x[:, 1]), np.cos(3 * x[:, 1])
        return np.stack([np.stack([-4 * s * cy, -6 * c * sy], -1), np.stack([-6 * c * sy, -9 * s * cy], -1)], -2)

    res = interp_error_orders(func, grad, hess, 2)
    assert res.slopes[0] > 3.7 and res.slopes[1] > 2.7 and res.slopes[2] > 1.7


def test_sample_refined_matches_pointwise(rng):
    grid = Grid.uniform(3, 2)
    state = LevelSetState(grid, rng.normal(size=(4, 4)), rng.normal(size=(4, 4, 2)))
    fine = sample_refined(state, 3)
    pts = grid.refined(3).nodes()
    assert fine.shape == (10, 10)
    assert np.allclose(fine.reshape(-1), interpolate(state, pts)[:, 0], atol=1e-13)
    dx = sample_refined(state, 3, alpha=(1, 0))
    assert np.allclose(dx.reshape(-1), interpolate(state, pts, [(1, 0)])[:, 0], atol=1e-12)


def test_estimator_api():
    state, func, grad = quadratic_state(8, 2)
    model = HermiteInterpolator(cross="central").fit(state)
    pts = np.random.default_rng(1).random((10, 2))
    assert np.allclose(model.predict(pts), func(pts))
    assert np.allclose(model.predict_gradient(pts), grad(pts))
    assert model.predict_hessian(pts).shape == (10, 2, 2)
    assert model.get_params() == {"cross": "central"}
    with pytest.raises(ValueError):
        HermiteInterpolator(cross="bogus").fit(state)

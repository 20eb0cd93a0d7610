import numpy as np
import pytest

from gals import Grid, WenoAdvector, advect_weno, fit_order, reinitialize
from gals.shapes import Circle, init_level_set
from gals.velocity import ConstantVelocity
from gals.weno import (
    HALO,
    Fill,
    ScalarFieldWithHalo,
    godunov_norm,
    substeps_for,
    weno5_one_sided,
    weno5_upwind_derivative,
)


def test_halo_fills():
    a = np.arange(6.0)
    ext = ScalarFieldWithHalo.from_interior(a, "extrapolate").padded
    assert ext.tolist() == [-3, -2, -1, 0, 1, 2, 3, 4, 5, 6, 7, 8]
    per = ScalarFieldWithHalo.from_interior(a, "periodic").padded
    assert per[:HALO].tolist() == [2, 3, 4] and per[-HALO:].tolist() == [1, 2, 3]
    odd = ScalarFieldWithHalo.from_interior(a, "odd_symmetry_zero").padded
    assert odd[:HALO].tolist() == [-3, -2, -1]
    assert np.array_equal(ScalarFieldWithHalo.from_interior(a).interior, a)
    with pytest.raises(ValueError):
        ScalarFieldWithHalo.from_interior(np.zeros((4, 4)), [("periodic", "extrapolate")] * 2)


def test_quadratic_derivative_is_exact():
    x = np.linspace(0, 1, 21)
    h = x[1] - x[0]
    field = ScalarFieldWithHalo.from_interior(3 * x**2 - x, "extrapolate")
    minus, plus = weno5_one_sided(field, 0, h)
    # extrapolated halo is only linear, so stay clear of the ends
    assert np.allclose(minus[4:-4], 6 * x[4:-4] - 1, atol=1e-10)
    assert np.allclose(plus[4:-4], 6 * x[4:-4] - 1, atol=1e-10)


def test_fifth_order_on_smooth_periodic_data():
    errs, hs = [], []
    for n in (16, 32, 64, 128):
        x = np.linspace(0, 2 * np.pi, n + 1)
        h = x[1] - x[0]
        field = ScalarFieldWithHalo.from_interior(np.sin(x), "periodic")
        minus, _ = weno5_one_sided(field, 0, h)
        errs.append(np.abs(minus - np.cos(x)).max())
        hs.append(h)
    assert fit_order(hs, errs).slope > 4.5


def test_upwind_selection():
    x = np.linspace(0, 1, 11)
    phi = np.abs(x - 0.5)
    field = ScalarFieldWithHalo.from_interior(phi)
    assert weno5_upwind_derivative(field, 0, (7,), 1.0, 0.1) == pytest.approx(1.0)
    assert weno5_upwind_derivative(field, 0, (3,), -1.0, 0.1) == pytest.approx(-1.0)


def test_substepping_and_translation():
    grid = Grid.uniform(64, 1, 0.0, 2 * np.pi)
    x = grid.coordinates(0)
    field = ConstantVelocity((1.0,))
    assert substeps_for(grid, field, 0.0, grid.h) == 2
    out = advect_weno(np.sin(x), grid, field, 0.0, 0.5, fill="periodic")
    assert np.abs(out - np.sin(x - 0.5)).max() < 1e-5


def test_reinitialization_restores_unit_gradient():
    grid = Grid.uniform(64, 2)
    d = init_level_set(Circle((0.5, 0.5), 0.25), grid).phi
    squashed = d * (1.0 + 2.0 * grid.nodes()[:, 0].reshape(d.shape))
    out = reinitialize(squashed, grid, n_steps=40)
    band = np.abs(d) < 0.1
    s = np.sign(out)
    assert np.abs(godunov_norm(out, grid, s) - 1.0)[band].max() < 0.05
    # the zero level set stays put
    assert np.abs(out - d)[np.abs(d) < grid.h].max() < 0.2 * grid.h


def test_reinitialization_zero_steps_is_identity():
    grid = Grid.uniform(8, 2)
    phi = np.random.default_rng(0).normal(size=(9, 9))
    assert np.array_equal(reinitialize(phi, grid, 0), phi)
    with pytest.raises(ValueError):
        reinitialize(phi, grid, -1)


def test_estimator():
    grid = Grid.uniform(32, 2)
    state = init_level_set(Circle((0.5, 0.5), 0.2), grid)
    model = WenoAdvector(field=ConstantVelocity((0.1, 0.0)), dt=0.1, n_steps=2, reinit_steps=1).fit(state)
    out = model.transform(state)
    assert out.t == pytest.approx(0.2)
    assert out.psi.shape == (33, 33, 2)
    assert Fill(model.fill_) is Fill.EXTRAPOLATE

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gals import Grid, init_level_set, subgrid_preset
from gals.shapes import (
    Ball,
    Box,
    Circle,
    Cube,
    GaussianBump,
    ShapeOutsideDomainError,
    SlottedDisk,
    SlottedSphere,
    Sphere,
    curvature_test_function,
)


def _fd_gradient(shape, x, eps=1e-6):
    cols = []
    for i in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[i] = eps
        cols.append((shape.phi(x + e) - shape.phi(x - e)) / (2 * eps))
    return np.column_stack(cols)


@pytest.mark.parametrize("shape", [Circle(), Sphere(), Cube(), GaussianBump((0.5, 0.5), 0.15), curvature_test_function()], ids=lambda s: type(s).__name__)
def test_gradients_match_finite_differences(shape):
    x = np.random.default_rng(0).random((40, shape.dim)) * 0.8 + 0.1
    assert np.allclose(shape.grad(x), _fd_gradient(shape, x), atol=1e-6)


def test_ball_is_signed_distance():
    b = Ball((0.0, 0.0), 1.0)
    assert b.phi(np.array([[2.0, 0.0], [0.0, 0.5]])).tolist() == [1.0, -0.5]


def test_box_distance_outside_corner():
    b = Box((0.0, 0.0), 2.0)
    assert b.phi(np.array([[4.0, 5.0]]))[0] == pytest.approx(5.0)
    assert b.phi(np.array([[0.5, 0.0]]))[0] == pytest.approx(-0.5)


def test_gaussian_hessian():
    bump = GaussianBump((0.5, 0.5), 0.15)
    x = np.random.default_rng(1).random((10, 2))
    eps = 1e-6
    for i in range(2):
        e = np.zeros(2)
        e[i] = eps
        fd = (bump.grad(x + e) - bump.grad(x - e)) / (2 * eps)
        assert np.allclose(bump.hessian(x)[:, i, :], fd, atol=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.floats(20.0, 80.0), st.floats(45.0, 100.0))
def test_slotted_disk_is_a_distance_function(x, y):
    disk = SlottedDisk()
    p = np.array([[x, y]])
    phi, grad = disk.evaluate(p)
    assert np.linalg.norm(grad) == pytest.approx(1.0, abs=1e-9)
    # a point one |phi| along -grad lands on the surface
    q = p - phi[0] * grad
    assert abs(disk.phi(q)[0]) < 1e-8


def test_slotted_disk_geometry():
    disk = SlottedDisk()
    inside_slot = np.array([[50.0, 62.0]])
    assert disk.phi(inside_slot)[0] == pytest.approx(2.5)
    # just above the slot roof at y = 85
    assert disk.phi(np.array([[50.0, 87.0]]))[0] == pytest.approx(-2.0)
    assert disk.phi(np.array([[40.0, 70.0]]))[0] < 0


def test_slotted_sphere_midplane_matches_disk():
    disk, ball = SlottedDisk(), SlottedSphere()
    xy = np.random.default_rng(4).random((200, 2)) * 40 + np.array([30.0, 55.0])
    xyz = np.column_stack([xy, np.full(200, 50.0)])
    assert np.allclose(ball.phi(xyz), disk.phi(xy), atol=1e-12)


def test_shape_outside_domain():
    with pytest.raises(ShapeOutsideDomainError):
        init_level_set(Circle((0.05, 0.5), 0.1), Grid.uniform(8, 2))
    with pytest.raises(ValueError):
        init_level_set(Sphere(), Grid.uniform(8, 2))


@pytest.mark.parametrize("kind", ["bubble", "drop", "jet", "film"])
def test_presets_are_positive_at_nodes(kind):
    state = subgrid_preset(kind, h=0.5)
    assert np.all(state.phi > 0)
    with pytest.raises(ValueError):
        subgrid_preset("foam")

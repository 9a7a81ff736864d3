import numpy as np
import pytest

from bohmlab.errors import ConfigError, IntegrationError, SingularPathError
from bohmlab.expr import parse
from bohmlab.numerics import (
    Grid,
    Trajectory,
    bohmian_trajectory,
    boundary_mask,
    fd_derivative,
    fit_acceleration,
    quadrature,
)


def test_grid_validation():
    with pytest.raises(ConfigError):
        Grid(0, 1, 4, 0, 1, 16)
    with pytest.raises(ConfigError):
        Grid(1, 0, 16, 0, 1, 16)
    with pytest.raises(ConfigError):
        Grid.parse("0,1,16")
    with pytest.raises(ConfigError):
        Grid.parse("0,1,sixteen,0,1,16")


def test_grid_geometry():
    grid = Grid.parse("-1, 1, 21, 0, 2, 11")
    assert grid.shape == (11, 21)
    assert grid.dx == pytest.approx(0.1)
    assert grid.dt == pytest.approx(0.2)
    xx, tt = grid.mesh()
    assert xx.shape == tt.shape == grid.shape
    assert np.all(xx[0] == grid.x)
    assert np.all(tt[:, 0] == grid.t)
    fine = grid.refine()
    np.testing.assert_allclose(fine.x[::2], grid.x)
    np.testing.assert_allclose(fine.t[::2], grid.t)
    assert grid.descriptor()["nx"] == 21


def test_exclusion_mask_accumulates():
    grid = Grid(0, 1, 8, 0, 1, 8)
    first = np.zeros(grid.shape, dtype=bool)
    first[0, 0] = True
    second = np.zeros(grid.shape, dtype=bool)
    second[1, 1] = True
    masked = grid.with_excluded(first).with_excluded(second)
    assert masked.mask().sum() == 2
    assert masked.excluded_fraction == pytest.approx(2 / 64)


@pytest.mark.parametrize("order, expected", [(1, lambda x: 2 * x), (2, lambda x: 2 + 0 * x)])
def test_fd_exact_on_quadratics(order, expected):
    x = np.linspace(-1, 1, 21)
    np.testing.assert_allclose(fd_derivative(x ** 2, x[1] - x[0], 0, order), expected(x), atol=1e-10)


def test_fd_third_derivative_of_cubic():
    x = np.linspace(-1, 1, 21)
    np.testing.assert_allclose(fd_derivative(x ** 3, x[1] - x[0], 0, 3), 6.0, atol=1e-8)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_fd_second_order_convergence(order):
    errors = []
    for n in (65, 129):
        x = np.linspace(0, 2, n)
        exact = np.real(1j ** order * np.exp(1j * x))
        errors.append(np.max(np.abs(fd_derivative(np.cos(x), x[1] - x[0], 0, order) - exact)))
    assert np.log2(errors[0] / errors[1]) == pytest.approx(2.0, abs=0.3)


def test_fd_along_time_axis():
    grid = Grid(0, 1, 16, 0, 1, 16)
    xx, tt = grid.mesh()
    np.testing.assert_allclose(fd_derivative(tt ** 2 * xx, grid.dt, 0, 1), 2 * tt * xx, atol=1e-12)


def test_fd_rejects_bad_order():
    with pytest.raises(ConfigError):
        fd_derivative(np.zeros(16), 0.1, 0, 4)


def test_boundary_mask():
    mask = boundary_mask((8, 10), 2, 1)
    assert mask[:, :2].all() and mask[:, -2:].all()
    assert mask[0].all() and mask[-1].all()
    assert not mask[1:-1, 2:-2].any()


@pytest.mark.parametrize("origin", [0.0, 0.005, -1.0])
def test_quadrature_from_interior_origin(origin):
    x = np.linspace(-1, 2, 301)
    result = quadrature(np.cos(x), x, origin=origin)
    np.testing.assert_allclose(result, np.sin(x) - np.sin(origin), atol=1e-8)


def test_quadrature_on_rows():
    x = np.linspace(-1, 1, 101)
    values = np.vstack([np.ones_like(x), 2 * x])
    result = quadrature(values, x)
    np.testing.assert_allclose(result[0], x, atol=1e-12)
    np.testing.assert_allclose(result[1], x ** 2, atol=1e-12)


def test_quadrature_singular_path():
    x = np.arange(-10, 11) / 10.0
    with np.errstate(divide="ignore"):
        values = 1.0 / x
    with pytest.raises(SingularPathError) as info:
        quadrature(values, x, origin=0.5)
    assert info.value.x == pytest.approx(0.0, abs=1e-12)

    result = quadrature(values, x, origin=0.5, strict=False)
    assert np.all(np.isnan(result[x <= 1e-12]))
    np.testing.assert_allclose(result[x >= 0.25], np.log(x[x >= 0.25] / 0.5), atol=2e-2)


def test_quadrature_origin_outside():
    x = np.linspace(0, 1, 11)
    with pytest.raises(ConfigError):
        quadrature(np.ones_like(x), x, origin=2.0)


def test_plane_wave_trajectory_is_uniform():
    traj = bohmian_trajectory(parse("2*x - 2*t"), 0.1, (0.0, 1.0), samples=32)
    np.testing.assert_allclose(traj.positions, 0.1 + 2.0 * traj.times, atol=1e-9)
    accel, rms = fit_acceleration(traj)
    assert accel == pytest.approx(0.0, abs=1e-7)
    assert rms < 1e-8


def test_uniformly_accelerated_trajectory():
    traj = bohmian_trajectory(parse("t * x / 2"), 0.0, (0.0, 2.0), samples=64)
    accel, _ = fit_acceleration(traj)
    assert accel == pytest.approx(0.5, rel=1e-6)


def test_trajectory_leaving_bounds():
    with pytest.raises(IntegrationError):
        bohmian_trajectory(parse("x^2 / 2"), 0.5, (0.0, 5.0), bounds=(-1.0, 1.0))


def test_fit_needs_samples():
    times = np.linspace(0, 1, 8)
    with pytest.raises(ConfigError):
        fit_acceleration(Trajectory(times, times, np.ones_like(times)))

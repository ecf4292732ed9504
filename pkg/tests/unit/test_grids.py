"""Unit tests for box grids, finite differences and diagonal calculus."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Third-party
import numpy as np
import pytest

# Project/Local
from geotomo.exceptions import DomainError
from geotomo.grids import (
    BoxGrid,
    DiagonalCalculus,
    cubic_weights,
    derivative,
    interpolation_matrix,
    quadrature_weights,
    spectral_derivative,
)


# =============================================================================
# TESTS: BoxGrid
# =============================================================================
def test_box_grid_spacing_and_size() -> None:
    """Spacing and size should follow the corners and shape."""
    grid = BoxGrid(lower=(0.0, -1.0), upper=(1.0, 1.0), shape=(5, 9))

    assert grid.spacing == (0.25, 0.25)
    assert grid.size == 45
    assert grid.points().shape == (45, 2)


def test_box_grid_rejects_inverted_corners() -> None:
    """An upper corner below the lower corner should raise ValueError."""
    with pytest.raises(ValueError, match="must exceed"):
        BoxGrid(lower=(1.0,), upper=(0.0,), shape=(5,))


def test_box_grid_refined_halves_spacing() -> None:
    """refined() should map n nodes to 2n - 1."""
    grid = BoxGrid.cube(0.0, 1.0, 5, 2).refined()

    assert grid.shape == (9, 9)
    assert grid.spacing == (0.125, 0.125)


def test_box_grid_boundary_mask_counts_faces() -> None:
    """The boundary mask of a 5x5 grid should hold the 16 perimeter nodes."""
    assert int(BoxGrid.cube(0.0, 1.0, 5, 2).boundary_mask().sum()) == 16


def test_box_grid_weights_integrate_constant() -> None:
    """Volume weights should integrate one to the box volume."""
    grid = BoxGrid(lower=(0.0, 0.0, 0.0), upper=(2.0, 1.0, 1.0), shape=(9, 5, 5))

    assert grid.weights().sum() == pytest.approx(2.0)
    assert grid.weights("trapezoid").sum() == pytest.approx(2.0)


# =============================================================================
# TESTS: Differences & Quadrature
# =============================================================================
def test_derivative_exact_on_quartic() -> None:
    """The 5-point stencils should differentiate quartics exactly."""
    x = np.linspace(0.0, 1.0, 11)

    np.testing.assert_allclose(derivative(x**4, 0, 0.1), 4.0 * x**3, atol=1e-10)


def test_derivative_needs_five_nodes() -> None:
    """Fewer than five nodes should raise ValueError."""
    with pytest.raises(ValueError, match="at least 5"):
        derivative(np.zeros(4), 0, 0.1)


def test_spectral_derivative_periodic_sine() -> None:
    """The FFT derivative of a periodic sine should be its cosine."""
    n = 32
    x = 2.0 * np.pi * np.arange(n) / n

    np.testing.assert_allclose(
        spectral_derivative(np.sin(x), 0, x[1]), np.cos(x), atol=1e-12
    )


def test_quadrature_weights_simpson_exact_on_cubic() -> None:
    """Simpson weights on an odd node count should integrate cubics exactly."""
    x = np.linspace(0.0, 1.0, 9)

    assert quadrature_weights(9, 0.125) @ x**3 == pytest.approx(0.25)


# =============================================================================
# TESTS: Interpolation
# =============================================================================
def test_cubic_weights_partition_of_unity() -> None:
    """Cubic Lagrange weights should sum to one."""
    s = np.linspace(0.0, 1.0, 7)

    np.testing.assert_allclose(cubic_weights(s).sum(axis=-1), 1.0)


def test_interpolation_matrix_exact_on_cubics() -> None:
    """Tensor-cubic interpolation should reproduce cubic polynomials."""
    grid = BoxGrid.cube(-1.0, 1.0, 11, 2)
    x, y = grid.mesh()
    field = x**3 - 2.0 * x * y**2 + y
    points = np.array([[0.13, -0.27], [-0.55, 0.41]])

    values = interpolation_matrix(grid, points) @ field.ravel()

    px, py = points[:, 0], points[:, 1]
    np.testing.assert_allclose(values, px**3 - 2.0 * px * py**2 + py, atol=1e-12)


def test_interpolation_matrix_rejects_edge_points() -> None:
    """Points within one cell of the boundary should raise DomainError."""
    grid = BoxGrid.cube(-1.0, 1.0, 11, 2)

    with pytest.raises(DomainError):
        interpolation_matrix(grid, np.array([[0.99, 0.0]]))


# =============================================================================
# TESTS: DiagonalCalculus
# =============================================================================
def test_calculus_laplacian_integral_matches_area() -> None:
    """The Euclidean Laplacian of |x|^2 integrates to 4 times the area."""
    grid = BoxGrid.cube(0.0, 1.0, 33, 2)
    calc = DiagonalCalculus.euclidean(grid)
    x, y = grid.mesh()

    assert float(calc.integrate(calc.laplacian(x**2 + y**2))) == pytest.approx(4.0)


def test_calculus_divergence_theorem_conformal_metric() -> None:
    """Volume integral of div X should equal the boundary flux."""
    grid = BoxGrid.cube(-0.5, 0.5, 33, 2)
    calc = DiagonalCalculus.from_function(
        grid, lambda x, y: [np.exp(x), np.exp(x)]
    )
    x, y = grid.mesh()
    field = [np.sin(x + y), x * y]

    volume = calc.integrate(calc.divergence(field))
    flux = calc.boundary_integral(
        lambda axis, side, index: calc.normal_component(field, axis, side, index)
    )

    assert float(volume) == pytest.approx(float(flux), abs=1e-5)


def test_calculus_rejects_nonpositive_metric() -> None:
    """A vanishing metric component should raise DomainError."""
    grid = BoxGrid.cube(0.0, 1.0, 9, 2)

    with pytest.raises(DomainError):
        DiagonalCalculus(grid, [np.ones(grid.shape), np.zeros(grid.shape)])

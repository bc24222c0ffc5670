import numpy as np
import pytest

from calibra.grids import (
    ConservedField,
    Grid,
    OutOfDomainError,
    ScalarField,
    inner,
    interpolate_values,
)


def test_axis_centers_are_cell_midpoints():
    g = Grid((0.0,), (1.0,), (4,))
    assert np.allclose(g.axis_centers(0), [0.125, 0.375, 0.625, 0.875])
    assert g.spacing == (0.25,)
    assert g.cell_volume == 0.25


def test_field_shape_is_row_major_in_y(grid2d):
    # shape is (nx, ny) by axis; arrays are indexed (y, x)
    assert grid2d.shape == (40, 20)
    assert grid2d.field_shape == (20, 40)
    c = grid2d.centers()
    assert c.shape == (800, 2)
    # first row of centers walks along x at the lowest y
    assert np.allclose(c[:3, 1], c[0, 1])
    assert c[1, 0] > c[0, 0]


def test_degenerate_axis_rejected():
    with pytest.raises(ValueError):
        Grid((0.0,), (0.0,), (10,))
    with pytest.raises(ValueError):
        Grid((0.0, 0.0, 0.0), (1.0, 1.0, 1.0), (4, 4, 4))


def test_interpolation_exact_for_multilinear_2d(grid2d, rng):
    X, Y = np.meshgrid(grid2d.axis_centers(0), grid2d.axis_centers(1))
    vals = 2.0 + 3.0 * X - 1.5 * Y + 0.7 * X * Y
    pts = np.column_stack(
        [rng.uniform(0.03, 1.97, 300), rng.uniform(0.03, 0.97, 300)]
    )
    got = interpolate_values(grid2d, vals, pts)
    want = 2.0 + 3.0 * pts[:, 0] - 1.5 * pts[:, 1] + 0.7 * pts[:, 0] * pts[:, 1]
    assert np.allclose(got, want, atol=1e-12)


def test_interpolation_exact_for_affine_1d(grid1d):
    x = grid1d.axis_centers(0)
    vals = 5.0 - 2.0 * x
    q = np.linspace(0.01, 0.99, 57)[:, None]
    assert np.allclose(interpolate_values(grid1d, vals, q), 5.0 - 2.0 * q[:, 0], atol=1e-12)


def test_out_of_domain_raises_unless_clamped(grid1d):
    vals = np.ones(grid1d.shape[0])
    with pytest.raises(OutOfDomainError):
        interpolate_values(grid1d, vals, np.array([[1.2]]))
    got = interpolate_values(grid1d, vals, np.array([[1.2], [-0.3]]), clamp=True)
    assert np.allclose(got, 1.0)


def test_scalar_field_integral_and_norm(grid1d):
    x = grid1d.axis_centers(0)
    f = ScalarField(grid1d, np.full_like(x, 3.0))
    assert f.integral() == pytest.approx(3.0)
    assert f.norm() == pytest.approx(np.sqrt(9.0))
    g = ScalarField(grid1d, x)
    # midpoint rule integrates linear functions exactly
    assert g.integral() == pytest.approx(0.5, abs=1e-14)


def test_inner_product_matches_quadrature(grid2d, rng):
    a = ScalarField(grid2d, rng.normal(size=grid2d.field_shape))
    b = ScalarField(grid2d, rng.normal(size=grid2d.field_shape))
    want = float((a.values * b.values).sum() * grid2d.cell_volume)
    assert inner(a, b) == pytest.approx(want)
    assert inner(a, a) == pytest.approx(a.norm() ** 2)


def test_conserved_field_components(grid2d):
    u = np.zeros((4,) + grid2d.field_shape)
    u[0] = 1.0
    u[2] = 0.5
    f = ConservedField(grid2d, u)
    assert np.shares_memory(f.component("rho").values, f.u[0])
    assert np.allclose(f.component("my").values, 0.5)
    with pytest.raises(ValueError):
        f.component("qq")


def test_field_shape_mismatch_rejected(grid1d):
    with pytest.raises(ValueError):
        ScalarField(grid1d, np.zeros(7))

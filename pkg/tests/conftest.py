import numpy as np
import pytest
from hypothesis import settings

from calibra.archive import FieldArchive
from calibra.grids import ConservedField, Grid

settings.register_profile("ci", deadline=None, max_examples=60)
settings.load_profile("ci")


def pack_density(grid: Grid, rho: np.ndarray) -> ConservedField:
    """Wrap a density profile as a resting conserved state (p = 1)."""
    u = np.zeros((grid.ndim + 2,) + grid.field_shape)
    u[0] = rho
    u[-1] = 2.5
    return ConservedField(grid, u)


def make_density_archive(root, grid, profile, times, *, extra=None) -> FieldArchive:
    """Archive a one-parameter density family rho = profile(x, t)."""
    archive = FieldArchive.create(root, grid, ["t"], extra=extra or {})
    if grid.ndim == 1:
        coords = (grid.axis_centers(0),)
    else:
        X, Y = np.meshgrid(grid.axis_centers(0), grid.axis_centers(1))
        coords = (X, Y)
    for t in times:
        archive.append([float(t)], pack_density(grid, profile(*coords, float(t))))
    return archive


def smoothstep(u: np.ndarray) -> np.ndarray:
    """Quintic ramp, exactly 0 below 0 and 1 above 1, C2 in between."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u * u)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def grid1d():
    return Grid((0.0,), (1.0,), (200,))


@pytest.fixture
def grid2d():
    return Grid((0.0, 0.0), (2.0, 1.0), (40, 20))

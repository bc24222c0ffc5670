"""Uniform Cartesian grids and cell-centered fields.

Fields live at cell centers. 2D arrays are stored row-major with the y index
outermost, i.e. ``values[j, i]`` is the cell at ``(x_i, y_j)``, matching the
on-disk snapshot layout. Inner products and norms are volume weighted, so a
mode that is orthonormal on one grid stays orthonormal after re-sampling the
same box at a different resolution only up to quadrature error, as expected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Conserved-variable names per dimension: density, momentum, total energy.
COMPONENTS_1D = ("rho", "mx", "E")
COMPONENTS_2D = ("rho", "mx", "my", "E")


class OutOfDomainError(ValueError):
    """An interpolation point lies outside the grid bounding box."""


@dataclass(frozen=True)
class Grid:
    """A uniform cell-centered Cartesian grid on a box.

    ``shape`` is (nx,) in 1D and (nx, ny) in 2D; note the shape tuple is
    ordered by axis while field arrays are indexed (y, x).
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    shape: tuple[int, ...]

    def __post_init__(self) -> None:
        if not (len(self.lo) == len(self.hi) == len(self.shape)):
            raise ValueError("lo, hi and shape must have equal length")
        if len(self.shape) not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        for a, b, n in zip(self.lo, self.hi, self.shape):
            if not b > a:
                raise ValueError(f"degenerate axis: [{a}, {b}]")
            if n < 1:
                raise ValueError("grid needs at least one cell per axis")

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / n for a, b, n in zip(self.lo, self.hi, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def field_shape(self) -> tuple[int, ...]:
        """Array shape of a field on this grid: (nx,) or (ny, nx)."""
        return self.shape if self.ndim == 1 else (self.shape[1], self.shape[0])

    @property
    def components(self) -> tuple[str, ...]:
        return COMPONENTS_1D if self.ndim == 1 else COMPONENTS_2D

    def axis_centers(self, axis: int) -> np.ndarray:
        a, n = self.lo[axis], self.shape[axis]
        h = self.spacing[axis]
        return a + h * (np.arange(n) + 0.5)

    def centers(self) -> np.ndarray:
        """All cell centers as an (n_cells, ndim) array in field order."""
        if self.ndim == 1:
            return self.axis_centers(0)[:, None]
        X, Y = np.meshgrid(self.axis_centers(0), self.axis_centers(1))
        return np.column_stack([X.ravel(), Y.ravel()])

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi), "shape": list(self.shape)}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(lo=tuple(d["lo"]), hi=tuple(d["hi"]), shape=tuple(d["shape"]))


def _axis_weights(centers: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lower cell index and linear weight along one axis, clamped at the ends.

    Clamping the weight into [0, 1] realizes constant extension beyond the
    outermost cell centers (the half-cell rim inside the domain and anything
    beyond it).
    """
    n = centers.size
    if n == 1:
        return np.zeros(q.shape, dtype=int), np.zeros_like(q)
    k = np.clip(np.searchsorted(centers, q, side="right") - 1, 0, n - 2)
    t = (q - centers[k]) / (centers[k + 1] - centers[k])
    return k, np.clip(t, 0.0, 1.0)


def interpolate_values(
    grid: Grid, values: np.ndarray, points: np.ndarray, *, clamp: bool = False
) -> np.ndarray:
    """Multilinear interpolation of cell-centered ``values`` at ``points``.

    ``points`` has shape (n, ndim). Points must lie inside the grid bounding
    box up to a 1e-12 slack unless ``clamp`` is set, in which case queries are
    clamped into the box first (the map pullback/pushforward paths use this:
    a near-identity boundary map can land a hair outside).
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[1] != grid.ndim:
        raise ValueError(f"expected points with {grid.ndim} columns")
    if clamp:
        points = np.clip(points, grid.lo, grid.hi)
    else:
        slack = 1e-12
        lo = np.asarray(grid.lo) - slack
        hi = np.asarray(grid.hi) + slack
        if np.any(points < lo) or np.any(points > hi):
            bad = np.argmax(np.any((points < lo) | (points > hi), axis=1))
            raise OutOfDomainError(
                f"point {points[bad]} outside domain box {grid.lo}..{grid.hi}"
            )
        points = np.clip(points, grid.lo, grid.hi)

    if grid.ndim == 1:
        k, t = _axis_weights(grid.axis_centers(0), points[:, 0])
        return (1.0 - t) * values[k] + t * values[k + 1]

    ki, ti = _axis_weights(grid.axis_centers(0), points[:, 0])
    kj, tj = _axis_weights(grid.axis_centers(1), points[:, 1])
    v00 = values[kj, ki]
    v01 = values[kj, np.minimum(ki + 1, grid.shape[0] - 1)]
    v10 = values[np.minimum(kj + 1, grid.shape[1] - 1), ki]
    v11 = values[np.minimum(kj + 1, grid.shape[1] - 1), np.minimum(ki + 1, grid.shape[0] - 1)]
    return (
        (1.0 - tj) * ((1.0 - ti) * v00 + ti * v01)
        + tj * ((1.0 - ti) * v10 + ti * v11)
    )


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.field_shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid "
                f"{self.grid.field_shape}"
            )

    def interpolate(self, points: np.ndarray, *, clamp: bool = False) -> np.ndarray:
        return interpolate_values(self.grid, self.values, points, clamp=clamp)

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    def norm(self) -> float:
        """Volume-weighted L2 norm."""
        return float(np.sqrt((self.values**2).sum() * self.grid.cell_volume))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


def inner(a: ScalarField, b: ScalarField) -> float:
    """Volume-weighted L2 inner product; both fields share one grid."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return float((a.values * b.values).sum() * a.grid.cell_volume)


@dataclass
class ConservedField:
    """Stacked conserved variables (rho, m..., E) on one grid.

    ``u`` has shape (ndim + 2, *field_shape); the component order matches
    ``grid.components``.
    """

    grid: Grid
    u: np.ndarray

    def __post_init__(self) -> None:
        self.u = np.asarray(self.u, dtype=float)
        expected = (self.grid.ndim + 2, *self.grid.field_shape)
        if self.u.shape != expected:
            raise ValueError(f"conserved array shape {self.u.shape}, expected {expected}")

    def component(self, name: str) -> ScalarField:
        idx = self.grid.components.index(name)
        return ScalarField(self.grid, self.u[idx])

    @property
    def density(self) -> ScalarField:
        return ScalarField(self.grid, self.u[0])

    def copy(self) -> "ConservedField":
        return ConservedField(self.grid, self.u.copy())

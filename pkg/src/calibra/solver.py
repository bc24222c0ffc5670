"""Finite-volume solver for the compressible Euler equations.

Fifth-order WENO reconstruction of the conserved variables, Rusanov
numerical flux, and the optimal five-stage fourth-order
strong-stability-preserving Runge-Kutta integrator. Two-dimensional
operators are dimension-split: each axis is reconstructed independently
with three ghost layers per side (corner ghosts never enter the stencils).
Ghost states for time-dependent boundaries are frozen at the step's base
time for all stages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from calibra.euler import (
    GAMMA_DEFAULT,
    max_signal_speed,
    pressure,
    primitive_to_conserved,
    rusanov_flux,
)
from calibra.grids import Grid
from calibra.weno import reconstruct_faces

GHOST = 3


class FomError(RuntimeError):
    """Full-order solve failed (blow-up, loss of positivity, bad input)."""


# ---------------------------------------------------------------------------
# boundary conditions
# ---------------------------------------------------------------------------


class Boundary:
    """Fills three ghost layers on one side of one axis.

    ``up`` arrives with the normal axis last, components first, interior
    already written into ``up[..., 3:-3]``. ``normal_coords`` are the three
    ghost-cell centers in ascending coordinate order (matching the array
    slice), ``tan_coords`` the centers along the other axis (None in 1D).
    """

    def fill(self, up, *, axis, side, t, tan_coords, normal_coords, gamma):
        raise NotImplementedError


class Transmissive(Boundary):
    def fill(self, up, *, axis, side, t, tan_coords, normal_coords, gamma):
        if side == 0:
            up[..., :GHOST] = up[..., GHOST : GHOST + 1]
        else:
            up[..., -GHOST:] = up[..., -GHOST - 1 : -GHOST]


class Reflective(Boundary):
    def fill(self, up, *, axis, side, t, tan_coords, normal_coords, gamma):
        if side == 0:
            up[..., :GHOST] = up[..., 2 * GHOST - 1 : GHOST - 1 : -1]
            up[1 + axis, ..., :GHOST] *= -1.0
        else:
            up[..., -GHOST:] = up[..., -GHOST - 1 : -2 * GHOST - 1 : -1]
            up[1 + axis, ..., -GHOST:] *= -1.0


class Periodic(Boundary):
    def fill(self, up, *, axis, side, t, tan_coords, normal_coords, gamma):
        n = up.shape[-1] - 2 * GHOST
        if side == 0:
            up[..., :GHOST] = up[..., n : n + GHOST]
        else:
            up[..., -GHOST:] = up[..., GHOST : 2 * GHOST]


class Dirichlet(Boundary):
    """Fixed conserved state in all ghost cells."""

    def __init__(self, state: np.ndarray):
        self.state = np.asarray(state, dtype=float)

    @classmethod
    def from_primitive(cls, rho, velocity, p, gamma=GAMMA_DEFAULT) -> "Dirichlet":
        return cls(primitive_to_conserved(rho, velocity, p, gamma))

    def fill(self, up, *, axis, side, t, tan_coords, normal_coords, gamma):
        col = self.state.reshape((-1,) + (1,) * (up.ndim - 1))
        if side == 0:
            up[..., :GHOST] = col
        else:
            up[..., -GHOST:] = col


class TimeDependent(Boundary):
    """Ghost states from a function of time and ghost-cell centers.

    ``fn(t, *coords)`` receives broadcast center arrays (x then y, shaped
    like the ghost block) and returns the conserved state array
    ``(n_components, ...)`` over that block.
    """

    def __init__(self, fn: Callable[..., np.ndarray]):
        self.fn = fn

    def fill(self, up, *, axis, side, t, tan_coords, normal_coords, gamma):
        if tan_coords is None:
            coords = (normal_coords,)
        elif axis == 0:
            coords = (normal_coords[None, :], tan_coords[:, None])
        else:
            coords = (tan_coords[:, None], normal_coords[None, :])
        block = self.fn(t, *coords)
        if side == 0:
            up[..., :GHOST] = block
        else:
            up[..., -GHOST:] = block


# ---------------------------------------------------------------------------
# semi-discrete operator
# ---------------------------------------------------------------------------


def _ghost_centers(grid: Grid, axis: int, side: int) -> np.ndarray:
    h = grid.spacing[axis]
    if side == 0:
        edge = grid.lo[axis]
        return edge - h * np.array([2.5, 1.5, 0.5])
    edge = grid.hi[axis]
    return edge + h * np.array([0.5, 1.5, 2.5])


def _pad_axis(v, *, axis, t, pair, grid, gamma):
    up = np.empty(v.shape[:-1] + (v.shape[-1] + 2 * GHOST,))
    up[..., GHOST:-GHOST] = v
    tan = None
    if grid.ndim == 2:
        tan = grid.axis_centers(1 - axis)
    for side in (0, 1):
        pair[side].fill(
            up,
            axis=axis,
            side=side,
            t=t,
            tan_coords=tan,
            normal_coords=_ghost_centers(grid, axis, side),
            gamma=gamma,
        )
    return up


def _first_order_faces(up, n):
    return up[..., GHOST - 1 : GHOST + n], up[..., GHOST : GHOST + n + 1]


def spatial_residual(u, t, grid, bcs, gamma=GAMMA_DEFAULT, reconstruction="weno5"):
    """Semi-discrete right-hand side -div F(u) on the interior cells."""
    out = np.zeros_like(u)
    for axis in range(grid.ndim):
        v = u if axis == 0 else np.moveaxis(u, -2, -1)
        up = _pad_axis(v, axis=axis, t=t, pair=bcs[axis], grid=grid, gamma=gamma)
        n = v.shape[-1]
        if reconstruction == "weno5":
            uL, uR = reconstruct_faces(up, n)
            # High-order face states can overshoot into negative density or
            # pressure at very strong shocks; such faces revert to the
            # adjacent cell values, which keeps the flux physical and local.
            loL, loR = _first_order_faces(up, n)
            bad = (
                (uL[0] <= 0.0)
                | (uR[0] <= 0.0)
                | (pressure(uL, gamma) <= 0.0)
                | (pressure(uR, gamma) <= 0.0)
            )
            if np.any(bad):
                uL = np.where(bad[None], loL, uL)
                uR = np.where(bad[None], loR, uR)
        elif reconstruction == "first":
            uL, uR = _first_order_faces(up, n)
        else:
            raise ValueError(f"unknown reconstruction {reconstruction!r}")
        fl = rusanov_flux(uL, uR, axis, gamma)
        dv = (fl[..., 1:] - fl[..., :-1]) / grid.spacing[axis]
        out -= dv if axis == 0 else np.moveaxis(dv, -1, -2)
    return out


def stable_dt(u, grid, gamma=GAMMA_DEFAULT, cfl=0.8) -> float:
    rate = 0.0
    for axis in range(grid.ndim):
        rate += float(max_signal_speed(u, axis, gamma).max()) / grid.spacing[axis]
    if not math.isfinite(rate) or rate <= 0.0:
        raise FomError("non-finite signal speeds; solution has blown up")
    return cfl / rate


# Spiteri-Ruuth optimal five-stage fourth-order SSP coefficients.
def ssprk54_step(u, t, dt, residual):
    if dt <= 0.0:
        raise FomError("time step must be positive")
    u1 = u + 0.391752226571890 * dt * residual(u, t)
    u2 = 0.444370493651235 * u + 0.555629506348765 * u1 + 0.368410593050371 * dt * residual(u1, t)
    u3 = 0.620101851488403 * u + 0.379898148511597 * u2 + 0.251891774271694 * dt * residual(u2, t)
    L3 = residual(u3, t)
    u4 = 0.178079954393132 * u + 0.821920045606868 * u3 + 0.544974750228521 * dt * L3
    return (
        0.517231671970585 * u2
        + 0.096059710526147 * u3
        + 0.063692468666290 * dt * L3
        + 0.386708617503269 * u4
        + 0.226007483236906 * dt * residual(u4, t)
    )


# ---------------------------------------------------------------------------
# problems
# ---------------------------------------------------------------------------


@dataclass
class Problem:
    """A complete initial boundary value problem for the solver."""

    grid: Grid
    init: Callable[..., np.ndarray]
    bcs: tuple
    t_final: float
    gamma: float = GAMMA_DEFAULT
    cfl: float = 0.8
    reconstruction: str = "weno5"
    name: str = ""

    def initial_state(self) -> np.ndarray:
        if self.grid.ndim == 1:
            return self.init(self.grid.axis_centers(0))
        X, Y = np.meshgrid(self.grid.axis_centers(0), self.grid.axis_centers(1))
        return self.init(X, Y)


def _check_state(u, t, gamma):
    if not np.all(np.isfinite(u)):
        raise FomError(f"solution blew up (NaN/Inf) at t={t:.6g}")
    if np.any(u[0] <= 0.0) or np.any(pressure(u, gamma) <= 0.0):
        raise FomError(f"positivity lost (density or pressure) at t={t:.6g}")


def run_fom(
    problem: Problem,
    snapshot_times: Sequence[float],
    *,
    callback: Callable[[float, np.ndarray], None] | None = None,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Integrate and return conserved snapshots at the requested times.

    Snapshot times are hit exactly by clipping the CFL step. Returns the
    times actually used (sorted) and one conserved array per time.
    """
    times = np.sort(np.asarray(snapshot_times, dtype=float))
    if times.size == 0:
        raise FomError("no snapshot times requested")
    if times[0] < 0.0 or times[-1] > problem.t_final + 1e-12:
        raise FomError("snapshot times must lie in [0, t_final]")
    grid = problem.grid
    u = problem.initial_state().astype(float)
    _check_state(u, 0.0, problem.gamma)

    def residual(v, tau):
        return spatial_residual(
            v, tau, grid, problem.bcs, problem.gamma, problem.reconstruction
        )

    snaps: list[np.ndarray] = []
    t = 0.0
    for target in times:
        while t < target - 1e-12:
            dt = min(stable_dt(u, grid, problem.gamma, problem.cfl), target - t)
            u = ssprk54_step(u, t, dt, residual)
            t += dt
            _check_state(u, t, problem.gamma)
            if callback is not None:
                callback(t, u)
        t = target
        snaps.append(u.copy())
    return times, snaps


# ---------------------------------------------------------------------------
# benchmark problem factories
# ---------------------------------------------------------------------------


def sod_problem(
    n_cells: int = 1500,
    *,
    rho_l: float = 1.0,
    p_l: float = 1.0,
    rho_r: float = 0.1,
    p_r: float = 0.125,
    x_split: float = 0.5,
    t_final: float = 0.2,
    domain: tuple[float, float] = (0.0, 1.0),
    gamma: float = GAMMA_DEFAULT,
    cfl: float = 0.8,
) -> Problem:
    """1D shock tube: two resting states split at ``x_split``."""
    grid = Grid(lo=(domain[0],), hi=(domain[1],), shape=(n_cells,))
    left = primitive_to_conserved(rho_l, [0.0], p_l, gamma)
    right = primitive_to_conserved(rho_r, [0.0], p_r, gamma)

    def init(X):
        mask = X < x_split
        return np.where(mask[None, :], left[:, None], right[:, None])

    bcs = ((Dirichlet(left), Dirichlet(right)),)
    return Problem(grid=grid, init=init, bcs=bcs, t_final=t_final, gamma=gamma, cfl=cfl, name="sod")


def density_wave_problem(
    n_cells: int,
    *,
    amplitude: float = 0.2,
    t_final: float = 0.5,
    gamma: float = GAMMA_DEFAULT,
    cfl: float = 0.8,
) -> Problem:
    """Smooth periodic density advection with exact solution, for accuracy."""
    grid = Grid(lo=(0.0,), hi=(1.0,), shape=(n_cells,))

    def init(X):
        rho = 1.0 + amplitude * np.sin(2.0 * np.pi * X)
        return primitive_to_conserved(rho, [np.ones_like(X)], np.ones_like(X), gamma)

    bcs = ((Periodic(), Periodic()),)
    return Problem(grid=grid, init=init, bcs=bcs, t_final=t_final, gamma=gamma, cfl=cfl, name="density-wave")


def density_wave_exact(x: np.ndarray, t: float, amplitude: float = 0.2) -> np.ndarray:
    return 1.0 + amplitude * np.sin(2.0 * np.pi * (x - t))


def dmr_problem(
    nx: int = 240,
    ny: int = 60,
    *,
    beta: float = math.pi / 6.0,
    t_final: float = 0.25,
    gamma: float = GAMMA_DEFAULT,
    cfl: float = 0.8,
) -> Problem:
    """Double Mach reflection: an oblique shock sweeping over a wall.

    The incident shock line is x = 1/6 + tan(beta) y + 10 t / cos(beta);
    post-shock conditions feed the left and the moving part of the top
    boundary, the bottom is a reflecting wall, the right is outflow.
    """
    grid = Grid(lo=(0.0, 0.0), hi=(4.0, 1.0), shape=(nx, ny))
    tan_b, cos_b, sin_b = math.tan(beta), math.cos(beta), math.sin(beta)
    left = primitive_to_conserved(8.0, [8.25 * cos_b, -8.25 * sin_b], 116.5, gamma)
    right = primitive_to_conserved(1.4, [0.0, 0.0], 1.0, gamma)

    def shock_x(y, t):
        return 1.0 / 6.0 + tan_b * y + 10.0 * t / cos_b

    def init(X, Y):
        mask = X < shock_x(Y, 0.0)
        return np.where(mask[None], left[:, None, None], right[:, None, None])

    def top_states(t, X, Y):
        mask = X < shock_x(Y, t)
        return np.where(mask[None], left[:, None, None], right[:, None, None])

    bcs = (
        (Dirichlet(left), Transmissive()),
        (Reflective(), TimeDependent(top_states)),
    )
    return Problem(grid=grid, init=init, bcs=bcs, t_final=t_final, gamma=gamma, cfl=cfl, name="dmr")


def triple_point_problem(
    nx: int = 280,
    ny: int = 120,
    *,
    t_final: float = 0.25,
    gamma: float = GAMMA_DEFAULT,
    cfl: float = 0.8,
) -> Problem:
    """Three-state Riemann problem generating interacting shocks."""
    grid = Grid(lo=(0.0, 0.0), hi=(7.0, 3.0), shape=(nx, ny))
    w = primitive_to_conserved(1.0, [20.0, 0.0], 1.0, gamma)
    ne = primitive_to_conserved(0.125, [0.0, 0.0], 0.1, gamma)
    se = primitive_to_conserved(1.0, [0.0, 0.0], 0.1, gamma)

    def init(X, Y):
        u = np.where((Y >= 1.5)[None], ne[:, None, None], se[:, None, None])
        return np.where((X < 1.0)[None], w[:, None, None], u)

    bcs = (
        (Dirichlet(w), Transmissive()),
        (Reflective(), Reflective()),
    )
    return Problem(grid=grid, init=init, bcs=bcs, t_final=t_final, gamma=gamma, cfl=cfl, name="triple-point")

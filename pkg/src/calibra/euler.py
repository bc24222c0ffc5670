"""Compressible Euler equations: equation of state, fluxes, wave speeds.

Conserved variables are stacked as (rho, m..., E) along the leading axis, so
every function here works unchanged for 1D (3 components) and 2D (4
components) arrays of any trailing shape. The ideal-gas equation of state
closes the system: p = (gamma - 1) (E - |m|^2 / (2 rho)).
"""

from __future__ import annotations

import numpy as np

GAMMA_DEFAULT = 1.4


def primitive_to_conserved(rho, velocity, p, gamma: float = GAMMA_DEFAULT) -> np.ndarray:
    """Stack (rho, m..., E) from density, velocity components, and pressure.

    ``velocity`` is a sequence of d arrays/scalars (one per space dimension).
    """
    rho = np.asarray(rho, dtype=float)
    vel = [np.asarray(v, dtype=float) for v in velocity]
    p = np.asarray(p, dtype=float)
    ke = 0.5 * rho * sum(v * v for v in vel)
    E = p / (gamma - 1.0) + ke
    return np.stack(
        [rho, *[rho * v for v in vel], E * np.ones_like(rho)]
    ).astype(float)


def conserved_to_primitive(u: np.ndarray, gamma: float = GAMMA_DEFAULT):
    """Return (rho, [v...], p) from a stacked conserved array."""
    rho = u[0]
    vel = [u[k] / rho for k in range(1, u.shape[0] - 1)]
    p = pressure(u, gamma)
    return rho, vel, p


def pressure(u: np.ndarray, gamma: float = GAMMA_DEFAULT) -> np.ndarray:
    rho = u[0]
    ke = 0.5 * sum(u[k] ** 2 for k in range(1, u.shape[0] - 1)) / rho
    return (gamma - 1.0) * (u[-1] - ke)


def sound_speed(u: np.ndarray, gamma: float = GAMMA_DEFAULT) -> np.ndarray:
    return np.sqrt(gamma * pressure(u, gamma) / u[0])


def flux(u: np.ndarray, axis: int, gamma: float = GAMMA_DEFAULT) -> np.ndarray:
    """Physical flux along space axis ``axis`` (0 = x, 1 = y)."""
    rho = u[0]
    p = pressure(u, gamma)
    vn = u[1 + axis] / rho
    out = np.empty_like(u)
    out[0] = u[1 + axis]
    for k in range(1, u.shape[0] - 1):
        out[k] = u[k] * vn
    out[1 + axis] += p
    out[-1] = (u[-1] + p) * vn
    return out


def dissipation_speed(u: np.ndarray, axis: int, gamma: float = GAMMA_DEFAULT) -> np.ndarray:
    """|v_axis| + c with pressure floored at zero.

    Intermediate Runge-Kutta stages may transiently lose positivity at
    strong shocks; flooring only the dissipation estimate keeps fluxes
    finite there without masking non-physical committed states.
    """
    p = np.maximum(pressure(u, gamma), 0.0)
    return np.abs(u[1 + axis] / u[0]) + np.sqrt(gamma * p / u[0])


def max_signal_speed(u: np.ndarray, axis: int, gamma: float = GAMMA_DEFAULT) -> np.ndarray:
    """Pointwise |v_axis| + c, the Rusanov bound on signal speeds."""
    return np.abs(u[1 + axis] / u[0]) + sound_speed(u, gamma)


def rusanov_flux(
    uL: np.ndarray, uR: np.ndarray, axis: int, gamma: float = GAMMA_DEFAULT
) -> np.ndarray:
    """Local Lax-Friedrichs flux through faces with states uL | uR."""
    s = np.maximum(dissipation_speed(uL, axis, gamma), dissipation_speed(uR, axis, gamma))
    return 0.5 * (flux(uL, axis, gamma) + flux(uR, axis, gamma)) - 0.5 * s * (uR - uL)

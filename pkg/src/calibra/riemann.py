"""Exact solver for the 1D Riemann problem of the Euler equations.

Newton iteration on the two-wave pressure function gives the star state;
the self-similar solution is then sampled in xi = (x - x0) / t. For the
shock-tube family used throughout (left rarefaction, contact, right shock)
``wave_positions`` returns the four characteristic coordinates that the
calibration studies use as the exact control-point oracle: rarefaction head,
rarefaction tail, contact, shock.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from calibra.euler import GAMMA_DEFAULT

_NEWTON_TOL = 1e-12
_NEWTON_MAX = 200


@dataclass(frozen=True)
class PrimitiveState:
    rho: float
    u: float
    p: float

    def sound_speed(self, gamma: float) -> float:
        return float(np.sqrt(gamma * self.p / self.rho))


def _pressure_function(p: float, s: PrimitiveState, gamma: float) -> tuple[float, float]:
    """f(p; state) and its derivative for one side of the star region."""
    c = s.sound_speed(gamma)
    if p > s.p:  # shock branch
        A = 2.0 / ((gamma + 1.0) * s.rho)
        B = (gamma - 1.0) / (gamma + 1.0) * s.p
        root = np.sqrt(A / (p + B))
        f = (p - s.p) * root
        df = root * (1.0 - 0.5 * (p - s.p) / (p + B))
    else:  # rarefaction branch
        f = 2.0 * c / (gamma - 1.0) * ((p / s.p) ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)
        df = (p / s.p) ** (-(gamma + 1.0) / (2.0 * gamma)) / (s.rho * c)
    return float(f), float(df)


@dataclass(frozen=True)
class RiemannSolution:
    left: PrimitiveState
    right: PrimitiveState
    gamma: float
    p_star: float
    u_star: float

    @property
    def left_is_rarefaction(self) -> bool:
        return self.p_star <= self.left.p

    @property
    def right_is_shock(self) -> bool:
        return self.p_star > self.right.p

    def sample(self, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Primitive variables (rho, u, p) at similarity coordinates xi."""
        xi = np.asarray(xi, dtype=float)
        g = self.gamma
        L, R = self.left, self.right
        cL, cR = L.sound_speed(g), R.sound_speed(g)
        p_s, u_s = self.p_star, self.u_star

        rho = np.empty_like(xi)
        u = np.empty_like(xi)
        p = np.empty_like(xi)

        left_of_contact = xi < u_s
        # Left side
        if self.left_is_rarefaction:
            rho_sL = L.rho * (p_s / L.p) ** (1.0 / g)
            c_sL = cL * (p_s / L.p) ** ((g - 1.0) / (2.0 * g))
            head, tail = L.u - cL, u_s - c_sL
            m = left_of_contact & (xi < head)
            rho[m], u[m], p[m] = L.rho, L.u, L.p
            m = left_of_contact & (xi >= head) & (xi < tail)
            fac = 2.0 / (g + 1.0) + (g - 1.0) / ((g + 1.0) * cL) * (L.u - xi[m])
            rho[m] = L.rho * fac ** (2.0 / (g - 1.0))
            u[m] = 2.0 / (g + 1.0) * (cL + 0.5 * (g - 1.0) * L.u + xi[m])
            p[m] = L.p * fac ** (2.0 * g / (g - 1.0))
            m = left_of_contact & (xi >= tail)
            rho[m], u[m], p[m] = rho_sL, u_s, p_s
        else:
            rho_sL = L.rho * (
                (p_s / L.p + (g - 1.0) / (g + 1.0))
                / ((g - 1.0) / (g + 1.0) * p_s / L.p + 1.0)
            )
            sL = L.u - cL * np.sqrt((g + 1.0) / (2.0 * g) * p_s / L.p + (g - 1.0) / (2.0 * g))
            m = left_of_contact & (xi < sL)
            rho[m], u[m], p[m] = L.rho, L.u, L.p
            m = left_of_contact & (xi >= sL)
            rho[m], u[m], p[m] = rho_sL, u_s, p_s

        right_of_contact = ~left_of_contact
        if self.right_is_shock:
            rho_sR = R.rho * (
                (p_s / R.p + (g - 1.0) / (g + 1.0))
                / ((g - 1.0) / (g + 1.0) * p_s / R.p + 1.0)
            )
            sR = R.u + cR * np.sqrt((g + 1.0) / (2.0 * g) * p_s / R.p + (g - 1.0) / (2.0 * g))
            m = right_of_contact & (xi > sR)
            rho[m], u[m], p[m] = R.rho, R.u, R.p
            m = right_of_contact & (xi <= sR)
            rho[m], u[m], p[m] = rho_sR, u_s, p_s
        else:
            rho_sR = R.rho * (p_s / R.p) ** (1.0 / g)
            c_sR = cR * (p_s / R.p) ** ((g - 1.0) / (2.0 * g))
            head, tail = R.u + cR, u_s + c_sR
            m = right_of_contact & (xi > head)
            rho[m], u[m], p[m] = R.rho, R.u, R.p
            m = right_of_contact & (xi <= head) & (xi > tail)
            fac = 2.0 / (g + 1.0) - (g - 1.0) / ((g + 1.0) * cR) * (R.u - xi[m])
            rho[m] = R.rho * fac ** (2.0 / (g - 1.0))
            u[m] = 2.0 / (g + 1.0) * (-cR + 0.5 * (g - 1.0) * R.u + xi[m])
            p[m] = R.p * fac ** (2.0 * g / (g - 1.0))
            m = right_of_contact & (xi <= tail)
            rho[m], u[m], p[m] = rho_sR, u_s, p_s
        return rho, u, p

    def density_profile(self, x: np.ndarray, t: float, x0: float) -> np.ndarray:
        if t <= 0.0:
            x = np.asarray(x, dtype=float)
            return np.where(x < x0, self.left.rho, self.right.rho)
        rho, _, _ = self.sample((np.asarray(x, dtype=float) - x0) / t)
        return rho

    def wave_positions(self, t: float, x0: float) -> np.ndarray:
        """(rarefaction head, tail, contact, shock) positions at time t.

        Defined for the left-rarefaction / right-shock wave pattern only;
        other patterns raise, since the four-coordinate oracle would not
        mean the same thing there.
        """
        if not (self.left_is_rarefaction and self.right_is_shock):
            raise ValueError("wave-position oracle needs rarefaction-contact-shock pattern")
        g = self.gamma
        L, R = self.left, self.right
        cL, cR = L.sound_speed(g), R.sound_speed(g)
        c_sL = cL * (self.p_star / L.p) ** ((g - 1.0) / (2.0 * g))
        head = L.u - cL
        tail = self.u_star - c_sL
        shock = R.u + cR * np.sqrt(
            (g + 1.0) / (2.0 * g) * self.p_star / R.p + (g - 1.0) / (2.0 * g)
        )
        return x0 + t * np.array([head, tail, self.u_star, shock])


def solve_riemann(
    left: PrimitiveState, right: PrimitiveState, gamma: float = GAMMA_DEFAULT
) -> RiemannSolution:
    """Star state via Newton on f(p) = fL(p) + fR(p) + (uR - uL)."""
    cL = left.sound_speed(gamma)
    cR = right.sound_speed(gamma)
    if 2.0 * (cL + cR) / (gamma - 1.0) <= right.u - left.u:
        raise ValueError("initial states generate vacuum")

    p = 0.5 * (left.p + right.p)
    for _ in range(_NEWTON_MAX):
        fL, dL = _pressure_function(p, left, gamma)
        fR, dR = _pressure_function(p, right, gamma)
        f = fL + fR + (right.u - left.u)
        dp = f / (dL + dR)
        p_new = p - dp
        if p_new <= 0.0:
            p_new = 0.5 * p  # keep the iterate positive, then refine
        if abs(p_new - p) <= _NEWTON_TOL * max(p_new, 1.0):
            p = p_new
            break
        p = p_new
    fL, _ = _pressure_function(p, left, gamma)
    fR, _ = _pressure_function(p, right, gamma)
    u = 0.5 * (left.u + right.u) + 0.5 * (fR - fL)
    return RiemannSolution(left=left, right=right, gamma=gamma, p_star=float(p), u_star=float(u))


def sod_states() -> tuple[PrimitiveState, PrimitiveState]:
    """Initial states of the shipped shock-tube case.

    Left (1, 0, 1), right (0.1, 0, 0.125). Note the right state differs from
    the textbook variant (0.125, 0, 0.1); the wave pattern is the same
    (left rarefaction, contact, right shock) but the star state is not.
    """
    return PrimitiveState(1.0, 0.0, 1.0), PrimitiveState(0.1, 0.0, 0.125)

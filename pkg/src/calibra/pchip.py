"""Shape-preserving piecewise cubic Hermite interpolation.

Knot slopes follow Fritsch and Carlson: a weighted harmonic mean of the
adjacent secant slopes at interior knots (zero whenever the secants change
sign or either vanishes, so flat data stays flat and monotone data stays
monotone) and a one-sided three-point formula at the ends, clipped so the
end intervals cannot overshoot. Outside the knot range the interpolant
continues linearly with the end slopes; the transformation maps built on
top of this rely on that tame extension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _edge_slope(h0: float, h1: float, m0: float, m1: float) -> float:
    """One-sided parabolic end slope with the standard shape-preserving clips."""
    d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1)
    if np.sign(d) != np.sign(m0):
        return 0.0
    if np.sign(m0) != np.sign(m1) and abs(d) > 3.0 * abs(m0):
        return 3.0 * m0
    return float(d)


def fit_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Knot slopes of the Fritsch-Carlson interpolant through (x, y).

    x must be strictly increasing with at least two knots. With exactly two
    knots the interpolant is the straight line through them.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("knots and values must be equal-length 1D arrays")
    n = x.size
    if n < 2:
        raise ValueError("need at least two knots")
    h = np.diff(x)
    if np.any(h <= 0.0):
        raise ValueError("knots must be strictly increasing")
    m = np.diff(y) / h
    if n == 2:
        return np.array([m[0], m[0]])

    d = np.zeros(n)
    # Interior knots: weighted harmonic mean where the secants agree in sign.
    mk, mk1 = m[:-1], m[1:]
    hk, hk1 = h[:-1], h[1:]
    agree = (np.sign(mk) * np.sign(mk1)) > 0.0
    w1 = 2.0 * hk1 + hk
    w2 = hk1 + 2.0 * hk
    with np.errstate(divide="ignore", invalid="ignore"):
        harm = (w1 + w2) / (w1 / mk + w2 / mk1)
    d[1:-1] = np.where(agree, harm, 0.0)
    d[0] = _edge_slope(h[0], h[1], m[0], m[1])
    d[-1] = _edge_slope(h[-1], h[-2], m[-1], m[-2])
    return d


@dataclass(frozen=True)
class Pchip:
    """Cubic Hermite interpolant with precomputed shape-preserving slopes."""

    x: np.ndarray
    y: np.ndarray
    d: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray, y: np.ndarray) -> "Pchip":
        x = np.ascontiguousarray(x, dtype=float)
        y = np.ascontiguousarray(y, dtype=float)
        return cls(x=x, y=y, d=fit_slopes(x, y))

    def _locate(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = np.clip(np.searchsorted(self.x, q, side="right") - 1, 0, self.x.size - 2)
        h = self.x[k + 1] - self.x[k]
        s = (q - self.x[k]) / h
        return k, h, s

    def __call__(self, q: np.ndarray | float) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        k, h, s = self._locate(q)
        y0, y1 = self.y[k], self.y[k + 1]
        d0, d1 = self.d[k], self.d[k + 1]
        t = 1.0 - s
        val = (
            y0 * (1.0 + 2.0 * s) * t * t
            + h * d0 * s * t * t
            + y1 * s * s * (3.0 - 2.0 * s)
            - h * d1 * s * s * t
        )
        # Linear continuation outside the knot range.
        lo = q < self.x[0]
        hi = q > self.x[-1]
        if np.any(lo):
            val = np.where(lo, self.y[0] + self.d[0] * (q - self.x[0]), val)
        if np.any(hi):
            val = np.where(hi, self.y[-1] + self.d[-1] * (q - self.x[-1]), val)
        return val

    def derivative(self, q: np.ndarray | float) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        k, h, s = self._locate(q)
        y0, y1 = self.y[k], self.y[k + 1]
        d0, d1 = self.d[k], self.d[k + 1]
        der = (
            y0 * (6.0 * s * s - 6.0 * s) / h
            + d0 * (3.0 * s * s - 4.0 * s + 1.0)
            + y1 * (6.0 * s - 6.0 * s * s) / h
            + d1 * (3.0 * s * s - 2.0 * s)
        )
        lo = q < self.x[0]
        hi = q > self.x[-1]
        if np.any(lo):
            der = np.where(lo, self.d[0], der)
        if np.any(hi):
            der = np.where(hi, self.d[-1], der)
        return der

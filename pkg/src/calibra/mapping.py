"""Control grids and shape-preserving transformation maps.

A control grid is a tensor lattice of reference points in the domain box.
Moving the points (subject to per-line ordering and box feasibility) defines
a map T from the reference domain onto the physical domain:

- 1D: one shape-preserving cubic through (reference, moved) pairs;
- 2D: a tensor-product blend. Per row ell, ``P_x[ell]`` interpolates the
  moved x coordinates of that row; blending functions ``g_y[ell]``
  interpolate Kronecker data over the row ordinates, so that
  ``T_x(x, y) = sum_ell g_y[ell](y) P_x[ell](x)`` restricted to any control
  row reproduces that row's cubic exactly; symmetrically for ``T_y``.

Every one-dimensional line gets two exterior padding knots 5% of the axis
length outside the box: coordinate lines pad with identity-mapped points
(keeping the map near the identity at the boundary), blending lines pad with
the constant extension of their end values. The padding is what makes the
blending functions an exact partition of unity (PCHIPs of Kronecker rows do
not sum to one between end knots otherwise) and makes identity control
points reproduce the identity map to machine precision.

Coordinates of points sitting on a boundary hyperplane are pinned; the
remaining "free" coordinates are flattened into the optimization vector
theta in a fixed order: axis by axis, line by line, along each line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from calibra.pchip import Pchip

PAD_FRACTION = 0.05
DEFAULT_GAP_FRAC = 1e-3


class MapConstructionError(ValueError):
    """Control points violate the per-line strict ordering required by T."""


class MapInversionError(RuntimeError):
    """Newton failed to invert the map at some query point."""


# ---------------------------------------------------------------------------
# control grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ControlGrid:
    """Tensor lattice of reference control points in a box.

    ``axes[i]`` are the strictly increasing reference coordinates along axis
    i, all inside [lo[i], hi[i]]. A point coordinate is pinned exactly when
    it equals the axis bound (boundary hyperplane membership).
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    axes: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.lo) not in (1, 2):
            raise ValueError("control grids are 1D or 2D")
        if not (len(self.lo) == len(self.hi) == len(self.axes)):
            raise ValueError("lo, hi, axes must agree in length")
        axes = tuple(np.ascontiguousarray(a, dtype=float) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        for i, a in enumerate(axes):
            if a.size < 1 or np.any(np.diff(a) <= 0):
                raise ValueError(f"axis {i} coordinates must be strictly increasing")
            if a[0] < self.lo[i] or a[-1] > self.hi[i]:
                raise ValueError(f"axis {i} coordinates leave the box")

    # -- factories ------------------------------------------------------

    @classmethod
    def interior_equispaced(
        cls, lo: tuple[float, ...], hi: tuple[float, ...], counts: tuple[int, ...]
    ) -> "ControlGrid":
        """m points per axis at k/(m+1) fractions, none on the boundary."""
        axes = tuple(
            a + (b - a) * np.arange(1, m + 1) / (m + 1)
            for a, b, m in zip(lo, hi, counts)
        )
        return cls(lo=tuple(lo), hi=tuple(hi), axes=axes)

    @classmethod
    def spanning(
        cls, lo: tuple[float, ...], hi: tuple[float, ...], counts: tuple[int, ...]
    ) -> "ControlGrid":
        """m equispaced points per axis including both boundary points."""
        axes = tuple(np.linspace(a, b, m) for a, b, m in zip(lo, hi, counts))
        return cls(lo=tuple(lo), hi=tuple(hi), axes=axes)

    @classmethod
    def from_axes(
        cls, lo: tuple[float, ...], hi: tuple[float, ...], axes
    ) -> "ControlGrid":
        return cls(lo=tuple(lo), hi=tuple(hi), axes=tuple(np.asarray(a, float) for a in axes))

    # -- structure --------------------------------------------------------

    @property
    def ndim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    @property
    def n_points(self) -> int:
        return int(np.prod(self.shape))

    def ref_points(self) -> np.ndarray:
        """All reference points, shape (n_points, ndim), y-outer order."""
        if self.ndim == 1:
            return self.axes[0][:, None].copy()
        X, Y = np.meshgrid(self.axes[0], self.axes[1])
        return np.column_stack([X.ravel(), Y.ravel()])

    def free_mask(self) -> np.ndarray:
        """(n_points, ndim) bool; True where the coordinate may move."""
        ref = self.ref_points()
        mask = np.ones(ref.shape, dtype=bool)
        for i in range(self.ndim):
            mask[:, i] = ~((ref[:, i] == self.lo[i]) | (ref[:, i] == self.hi[i]))
        return mask

    def lines(self, axis: int) -> list[np.ndarray]:
        """Point-index sequences of the grid lines running along ``axis``."""
        if self.ndim == 1:
            return [np.arange(self.shape[0])]
        m1, m2 = self.shape
        if axis == 0:
            return [np.arange(m1) + j * m1 for j in range(m2)]
        return [np.arange(m2) * m1 + i for i in range(m1)]

    def _packing(self) -> list[tuple[int, int]]:
        """theta entry -> (point index, axis), in the canonical order."""
        mask = self.free_mask()
        order: list[tuple[int, int]] = []
        for axis in range(self.ndim):
            for line in self.lines(axis):
                order.extend((int(p), axis) for p in line if mask[p, axis])
        return order

    @property
    def n_free(self) -> int:
        return len(self._packing())

    def pack(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return np.array([w[p, i] for p, i in self._packing()])

    def unpack(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.n_free:
            raise ValueError(f"theta has {theta.size} entries, expected {self.n_free}")
        w = self.ref_points()
        for q, (p, i) in enumerate(self._packing()):
            w[p, i] = theta[q]
        return w

    def gaps(self, gap_frac: float = DEFAULT_GAP_FRAC) -> tuple[float, ...]:
        return tuple(gap_frac * (b - a) for a, b in zip(self.lo, self.hi))

    def coordinate_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per free coordinate, the owning axis bound: (lower, span) arrays.

        Used to rescale theta to the unit box for optimization.
        """
        lo = np.empty(self.n_free)
        span = np.empty(self.n_free)
        for axis, _anchor, sl in self._free_lines():
            lo[sl] = self.lo[axis]
            span[sl] = self.hi[axis] - self.lo[axis]
        return lo, span

    # -- feasibility and difference encoding -------------------------------

    def _free_lines(self):
        """Per axis, the per-line split of theta: (axis, anchor, theta slice).

        The anchor is the coordinate the first free entry is measured from.
        Pinned points sit exactly on a bound, so the anchor is always the
        lower box bound regardless of whether the line's first point is
        pinned there or the line starts in the interior.
        """
        mask = self.free_mask()
        out = []
        q = 0
        for axis in range(self.ndim):
            for line in self.lines(axis):
                n_free = int(mask[line, axis].sum())
                if n_free == 0:
                    continue
                out.append((axis, self.lo[axis], slice(q, q + n_free)))
                q += n_free
        return out

    def encode_differences(self, w: np.ndarray) -> np.ndarray:
        """Per-line successive differences of the free coordinates.

        The first free coordinate of each line is measured from the line's
        anchor, so feasible configurations encode to strictly positive
        vectors; decode is the exact inverse on feasible input.
        """
        theta = self.pack(w)
        v = np.empty_like(theta)
        for axis, anchor, sl in self._free_lines():
            seq = theta[sl]
            v[sl] = np.diff(np.concatenate([[anchor], seq]))
        return v

    def decode_differences(
        self, v: np.ndarray, gap_frac: float = DEFAULT_GAP_FRAC
    ) -> np.ndarray:
        """Rebuild control points from positive differences, always feasible.

        Increments are floored at the axis gap; if the cumulative sum would
        overflow the line's budget, the excess above the floor is rescaled
        affinely so the last point lands at the upper bound minus the gap.
        Ordering (with gap) and box membership hold unconditionally.
        """
        v = np.asarray(v, dtype=float)
        if v.size != self.n_free:
            raise ValueError(f"difference vector has {v.size} entries, expected {self.n_free}")
        gaps = self.gaps(gap_frac)
        theta = np.empty_like(v)
        for axis, anchor, sl in self._free_lines():
            eps = gaps[axis]
            g = np.maximum(v[sl], eps)
            n = g.size
            budget = (self.hi[axis] - eps) - anchor
            if budget < n * eps:
                raise ValueError("axis gap too large for the number of line points")
            total = g.sum()
            if total > budget:
                g = eps + (g - eps) * (budget - n * eps) / (total - n * eps)
            theta[sl] = anchor + np.cumsum(g)
        return self.unpack(theta)

    def project_feasible(
        self, w: np.ndarray, gap_frac: float = DEFAULT_GAP_FRAC
    ) -> np.ndarray:
        """Nearest-in-spirit feasible configuration (encode then decode)."""
        return self.decode_differences(self.encode_differences(w), gap_frac)

    def is_feasible(self, w: np.ndarray, gap_frac: float = DEFAULT_GAP_FRAC) -> bool:
        w = np.asarray(w, dtype=float)
        gaps = self.gaps(gap_frac)
        for i in range(self.ndim):
            if np.any(w[:, i] < self.lo[i]) or np.any(w[:, i] > self.hi[i]):
                return False
        theta = self.pack(w)
        slack = 1.0 - 1e-12
        for axis, anchor, sl in self._free_lines():
            eps = gaps[axis]
            seq = theta[sl]
            prev = np.concatenate([[anchor], seq[:-1]])
            if np.any(seq - prev < eps * slack) or seq[-1] > self.hi[axis] - eps * slack:
                return False
        return True

    def ordering_constraints(
        self, gap_frac: float = DEFAULT_GAP_FRAC
    ) -> tuple[np.ndarray, np.ndarray]:
        """Linear feasibility system A theta + b >= 0 (ordering with gaps).

        Covers anchor -> first free, consecutive free pairs, and last free ->
        upper bound, per line; identical to what decode guarantees.
        """
        rows = []
        consts = []
        gaps = self.gaps(gap_frac)
        Q = self.n_free
        for axis, anchor, sl in self._free_lines():
            eps = gaps[axis]
            idx = list(range(sl.start, sl.stop))
            prev = None
            for q in idx:
                r = np.zeros(Q)
                r[q] = 1.0
                if prev is None:
                    consts.append(-anchor - eps)
                else:
                    r[prev] = -1.0
                    consts.append(-eps)
                rows.append(r)
                prev = q
            r = np.zeros(Q)
            r[prev] = -1.0
            rows.append(r)
            consts.append(self.hi[axis] - eps)
        return np.asarray(rows), np.asarray(consts)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "lo": list(self.lo),
            "hi": list(self.hi),
            "axes": [a.tolist() for a in self.axes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ControlGrid":
        return cls.from_axes(tuple(d["lo"]), tuple(d["hi"]), d["axes"])


# ---------------------------------------------------------------------------
# transformation maps
# ---------------------------------------------------------------------------


def _padded_line(knots: np.ndarray, values: np.ndarray, lo: float, hi: float) -> Pchip:
    """Coordinate-line cubic with identity-mapped exterior padding knots."""
    hp = PAD_FRACTION * (hi - lo)
    k = np.concatenate([[lo - hp], knots, [hi + hp]])
    v = np.concatenate([[lo - hp], values, [hi + hp]])
    if np.any(np.diff(v) <= 0.0):
        raise MapConstructionError("control points not strictly increasing along a line")
    return Pchip.fit(k, v)


def _blend_lines(knots: np.ndarray, lo: float, hi: float) -> list[Pchip]:
    """Partition-of-unity blending cubics through Kronecker rows."""
    hp = PAD_FRACTION * (hi - lo)
    k = np.concatenate([[lo - hp], knots, [hi + hp]])
    out = []
    m = knots.size
    for ell in range(m):
        d = np.zeros(m)
        d[ell] = 1.0
        v = np.concatenate([[d[0]], d, [d[-1]]])
        out.append(Pchip.fit(k, v))
    return out


class TransformMap:
    """The map T from the reference box onto the physical domain."""

    def __init__(self, cgrid: ControlGrid, points: np.ndarray):
        points = np.asarray(points, dtype=float)
        if points.shape != (cgrid.n_points, cgrid.ndim):
            raise ValueError("control point array shape mismatch")
        self.cgrid = cgrid
        self.points = points
        self._location_cache: tuple | None = None
        if cgrid.ndim == 1:
            self._line = _padded_line(
                cgrid.axes[0], points[:, 0], cgrid.lo[0], cgrid.hi[0]
            )
        else:
            m1, m2 = cgrid.shape
            px_vals = points[:, 0].reshape(m2, m1)
            py_vals = points[:, 1].reshape(m2, m1)
            self._px = [
                _padded_line(cgrid.axes[0], px_vals[j], cgrid.lo[0], cgrid.hi[0])
                for j in range(m2)
            ]
            self._py = [
                _padded_line(cgrid.axes[1], py_vals[:, i], cgrid.lo[1], cgrid.hi[1])
                for i in range(m1)
            ]
            self._gy = _blend_lines(cgrid.axes[1], cgrid.lo[1], cgrid.hi[1])
            self._gx = _blend_lines(cgrid.axes[0], cgrid.lo[0], cgrid.hi[0])

    # -- evaluation ---------------------------------------------------------

    @property
    def ndim(self) -> int:
        return self.cgrid.ndim

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.ndim == 1:
            return self._line(pts[:, 0])[:, None]
        x, y = pts[:, 0], pts[:, 1]
        tx = np.zeros_like(x)
        ty = np.zeros_like(y)
        for ell, (p, g) in enumerate(zip(self._px, self._gy)):
            tx += g(y) * p(x)
        for k, (p, g) in enumerate(zip(self._py, self._gx)):
            ty += g(x) * p(y)
        return np.column_stack([tx, ty])

    def eval_grid(self, xs: np.ndarray, ys: np.ndarray | None = None):
        """Map evaluated on a tensor grid; the separable fast path.

        1D: returns (n,) mapped coordinates. 2D: returns (TX, TY) with shape
        (ny, nx).
        """
        if self.ndim == 1:
            return self._line(xs)
        PX = np.stack([p(xs) for p in self._px])           # (m2, nx)
        GY = np.stack([g(ys) for g in self._gy], axis=1)   # (ny, m2)
        PY = np.stack([p(ys) for p in self._py])           # (m1, ny)
        GX = np.stack([g(xs) for g in self._gx], axis=1)   # (nx, m1)
        return GY @ PX, (GX @ PY).T

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        """Gradient of T at points, shape (n, ndim, ndim)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n = pts.shape[0]
        if self.ndim == 1:
            J = np.empty((n, 1, 1))
            J[:, 0, 0] = self._line.derivative(pts[:, 0])
            return J
        x, y = pts[:, 0], pts[:, 1]
        J = np.zeros((n, 2, 2))
        for p, g in zip(self._px, self._gy):
            J[:, 0, 0] += g(y) * p.derivative(x)
            J[:, 0, 1] += g.derivative(y) * p(x)
        for p, g in zip(self._py, self._gx):
            J[:, 1, 0] += g.derivative(x) * p(y)
            J[:, 1, 1] += g(x) * p.derivative(y)
        return J

    def jacobian_grid(self, xs: np.ndarray, ys: np.ndarray | None = None) -> np.ndarray:
        """Gradient on a tensor grid: (n,1,1) in 1D, (ny, nx, 2, 2) in 2D."""
        if self.ndim == 1:
            return self._line.derivative(xs)[:, None, None]
        PX = np.stack([p(xs) for p in self._px])
        PXd = np.stack([p.derivative(xs) for p in self._px])
        GY = np.stack([g(ys) for g in self._gy], axis=1)
        GYd = np.stack([g.derivative(ys) for g in self._gy], axis=1)
        PY = np.stack([p(ys) for p in self._py])
        PYd = np.stack([p.derivative(ys) for p in self._py])
        GX = np.stack([g(xs) for g in self._gx], axis=1)
        GXd = np.stack([g.derivative(xs) for g in self._gx], axis=1)
        ny, nx = ys.size, xs.size
        J = np.empty((ny, nx, 2, 2))
        J[..., 0, 0] = GY @ PXd
        J[..., 0, 1] = GYd @ PX
        J[..., 1, 0] = (GXd @ PY).T
        J[..., 1, 1] = (GX @ PYd).T
        return J

    def det_grid(self, xs: np.ndarray, ys: np.ndarray | None = None) -> np.ndarray:
        J = self.jacobian_grid(xs, ys)
        if self.ndim == 1:
            return J[:, 0, 0]
        return J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]

    # -- inversion ----------------------------------------------------------

    def inverse(
        self, pts: np.ndarray, *, tol: float = 1e-10, max_iter: int = 50
    ) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.ndim == 1:
            return self._inverse_1d(pts.reshape(-1), tol, max_iter)[:, None]
        return self._inverse_2d(np.atleast_2d(pts), tol, max_iter)

    def _inverse_1d(self, x: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
        line = self._line
        K, V = line.x, line.y
        out = np.empty_like(x)
        below = x <= V[0]
        above = x >= V[-1]
        out[below] = K[0] + (x[below] - V[0]) / line.d[0]
        out[above] = K[-1] + (x[above] - V[-1]) / line.d[-1]
        mid = ~(below | above)
        if np.any(mid):
            xm = x[mid]
            k = np.clip(np.searchsorted(V, xm, side="right") - 1, 0, V.size - 2)
            lo, hi = K[k].copy(), K[k + 1].copy()
            cur = 0.5 * (lo + hi)
            for _ in range(max_iter):
                f = line(cur) - xm
                if np.all(np.abs(f) <= tol):
                    break
                pos = f > 0.0
                hi = np.where(pos, cur, hi)
                lo = np.where(pos, lo, cur)
                d = line.derivative(cur)
                with np.errstate(divide="ignore", invalid="ignore"):
                    step = np.where(d > 0.0, f / np.where(d > 0.0, d, 1.0), np.nan)
                cand = cur - step
                bad = ~np.isfinite(cand) | (cand <= lo) | (cand >= hi)
                cur = np.where(bad, 0.5 * (lo + hi), cand)
            if np.any(np.abs(line(cur) - xm) > tol):
                raise MapInversionError("1D inversion did not converge")
            out[mid] = cur
        return out

    def _location_lattice(self):
        """Coarse mapped lattice + KD-tree over mapped cell centers (cached)."""
        if self._location_cache is None:
            n = 48
            xs = np.linspace(self.cgrid.lo[0], self.cgrid.hi[0], n + 1)
            ys = np.linspace(self.cgrid.lo[1], self.cgrid.hi[1], n + 1)
            TX, TY = self.eval_grid(xs, ys)
            cx = 0.25 * (TX[:-1, :-1] + TX[:-1, 1:] + TX[1:, :-1] + TX[1:, 1:])
            cy = 0.25 * (TY[:-1, :-1] + TY[:-1, 1:] + TY[1:, :-1] + TY[1:, 1:])
            tree = cKDTree(np.column_stack([cx.ravel(), cy.ravel()]))
            self._location_cache = (xs, ys, TX, TY, tree, n)
        return self._location_cache

    def _projective_guess(self, pts: np.ndarray) -> np.ndarray:
        """Initial reference-coordinate guess via per-quad homographies."""
        xs, ys, TX, TY, tree, n = self._location_lattice()
        _, cell = tree.query(pts)
        jj, ii = np.divmod(cell, n)
        # Physical quad corners and their reference preimages.
        qx = np.stack([TX[jj, ii], TX[jj, ii + 1], TX[jj + 1, ii + 1], TX[jj + 1, ii]], axis=1)
        qy = np.stack([TY[jj, ii], TY[jj, ii + 1], TY[jj + 1, ii + 1], TY[jj + 1, ii]], axis=1)
        rx = np.stack([xs[ii], xs[ii + 1], xs[ii + 1], xs[ii]], axis=1)
        ry = np.stack([ys[jj], ys[jj], ys[jj + 1], ys[jj + 1]], axis=1)
        m = pts.shape[0]
        A = np.zeros((m, 8, 8))
        rhs = np.zeros((m, 8))
        for c in range(4):
            r0, r1 = 2 * c, 2 * c + 1
            A[:, r0, 0] = qx[:, c]
            A[:, r0, 1] = qy[:, c]
            A[:, r0, 2] = 1.0
            A[:, r0, 6] = -rx[:, c] * qx[:, c]
            A[:, r0, 7] = -rx[:, c] * qy[:, c]
            A[:, r1, 3] = qx[:, c]
            A[:, r1, 4] = qy[:, c]
            A[:, r1, 5] = 1.0
            A[:, r1, 6] = -ry[:, c] * qx[:, c]
            A[:, r1, 7] = -ry[:, c] * qy[:, c]
            rhs[:, r0] = rx[:, c]
            rhs[:, r1] = ry[:, c]
        try:
            h = np.linalg.solve(A, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            return np.clip(pts, self.cgrid.lo, self.cgrid.hi)
        den = h[:, 6] * pts[:, 0] + h[:, 7] * pts[:, 1] + 1.0
        gx = (h[:, 0] * pts[:, 0] + h[:, 1] * pts[:, 1] + h[:, 2]) / den
        gy = (h[:, 3] * pts[:, 0] + h[:, 4] * pts[:, 1] + h[:, 5]) / den
        guess = np.column_stack([gx, gy])
        bad = ~np.isfinite(guess).all(axis=1)
        if np.any(bad):
            guess[bad] = np.clip(pts[bad], self.cgrid.lo, self.cgrid.hi)
        return guess

    def _inverse_2d(self, pts: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
        hp = [PAD_FRACTION * (b - a) for a, b in zip(self.cgrid.lo, self.cgrid.hi)]
        lo = np.asarray(self.cgrid.lo) - hp
        hi = np.asarray(self.cgrid.hi) + hp
        cur = np.clip(self._projective_guess(pts), lo, hi)
        res = self(cur) - pts
        rn = np.linalg.norm(res, axis=1)
        for _ in range(max_iter):
            active = rn > tol
            if not np.any(active):
                break
            J = self.jacobian(cur[active])
            det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            det = np.where(np.abs(det) < 1e-300, 1e-300, det)
            dx = (J[:, 1, 1] * res[active, 0] - J[:, 0, 1] * res[active, 1]) / det
            dy = (-J[:, 1, 0] * res[active, 0] + J[:, 0, 0] * res[active, 1]) / det
            step = np.column_stack([dx, dy])
            # Damped update: halve the step while the residual grows.
            lam = np.ones(step.shape[0])
            base = cur[active]
            target = pts[active]
            best = rn[active].copy()
            new = base - step
            for _ in range(5):
                rtry = np.linalg.norm(self(np.clip(new, lo, hi)) - target, axis=1)
                worse = rtry > best
                if not np.any(worse):
                    break
                lam = np.where(worse, 0.5 * lam, lam)
                new = base - lam[:, None] * step
            cur[active] = np.clip(new, lo, hi)
            res[active] = self(cur[active]) - target
            rn[active] = np.linalg.norm(res[active], axis=1)
        if np.any(rn > tol):
            worst = float(rn.max())
            raise MapInversionError(f"2D inversion stalled, residual {worst:.3e}")
        return cur

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {"control_grid": self.cgrid.to_dict(), "points": self.points.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "TransformMap":
        return cls(ControlGrid.from_dict(d["control_grid"]), np.asarray(d["points"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "TransformMap":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_map(cgrid: ControlGrid, w: np.ndarray) -> TransformMap:
    """Map from moved control points, shape (n_points, ndim)."""
    return TransformMap(cgrid, w)


def map_from_theta(cgrid: ControlGrid, theta: np.ndarray) -> TransformMap:
    return TransformMap(cgrid, cgrid.unpack(theta))

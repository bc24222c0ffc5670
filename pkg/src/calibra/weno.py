"""Fifth-order WENO reconstruction (classical smoothness weights).

Component-wise reconstruction of cell averages to face values. The epsilon
regularizing the smoothness indicators is 1e-6; linear weights are
(1/10, 6/10, 3/10). Face conventions: for padded cell data ``q`` with ``g``
ghost cells on each side along the last axis, ``reconstruct_faces`` returns
the pair (left state, right state) at the n+1 interior faces, where "left"
is the upwind-biased value from the cell below the face and "right" the
mirrored value from the cell above.
"""

from __future__ import annotations

import numpy as np

EPS = 1e-6
_D0, _D1, _D2 = 0.1, 0.6, 0.3


def _right_edge(q: np.ndarray) -> np.ndarray:
    """Value at each cell's right edge from the 5-cell upwind stencil.

    ``q`` has shape (..., m); the result has shape (..., m - 4) and entry k
    is the reconstruction in cell k + 2 of the padded array.
    """
    v0 = q[..., :-4]
    v1 = q[..., 1:-3]
    v2 = q[..., 2:-2]
    v3 = q[..., 3:-1]
    v4 = q[..., 4:]

    q0 = (2.0 * v0 - 7.0 * v1 + 11.0 * v2) / 6.0
    q1 = (-v1 + 5.0 * v2 + 2.0 * v3) / 6.0
    q2 = (2.0 * v2 + 5.0 * v3 - v4) / 6.0

    b0 = 13.0 / 12.0 * (v0 - 2.0 * v1 + v2) ** 2 + 0.25 * (v0 - 4.0 * v1 + 3.0 * v2) ** 2
    b1 = 13.0 / 12.0 * (v1 - 2.0 * v2 + v3) ** 2 + 0.25 * (v1 - v3) ** 2
    b2 = 13.0 / 12.0 * (v2 - 2.0 * v3 + v4) ** 2 + 0.25 * (3.0 * v2 - 4.0 * v3 + v4) ** 2

    a0 = _D0 / (EPS + b0) ** 2
    a1 = _D1 / (EPS + b1) ** 2
    a2 = _D2 / (EPS + b2) ** 2
    asum = a0 + a1 + a2
    return (a0 * q0 + a1 * q1 + a2 * q2) / asum


def reconstruct_faces(q: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Left/right states at the n+1 faces of n interior cells.

    ``q`` is padded with 3 ghost cells per side along the last axis, so its
    last-axis length is n + 6. Face j sits between padded cells j+2 and j+3.
    """
    if q.shape[-1] != n + 6:
        raise ValueError(f"padded length {q.shape[-1]}, expected {n + 6}")
    # Left state at face j: right-edge value of cell j+2, stencil j..j+4.
    left = _right_edge(q)[..., : n + 1]
    # Right state at face j: left-edge value of cell j+3, obtained as the
    # right-edge reconstruction of the reversed data.
    right = _right_edge(q[..., ::-1])[..., ::-1][..., 1 : n + 2]
    return left, right

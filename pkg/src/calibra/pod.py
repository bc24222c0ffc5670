"""Orthogonal compression of snapshot sets (method of snapshots).

Snapshots live on a common Cartesian grid; inner products are
volume-weighted. The Gram matrix route is preferred over a tall SVD since
snapshot counts stay far below cell counts, and the weighting comes for
free. Eigenvalues below 1e-14 of the largest are treated as numerical zero.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from calibra.grids import Grid

EIG_FLOOR = 1e-14


class ReductionError(RuntimeError):
    """Snapshot compression or reconstruction failed."""


@dataclass
class PODBasis:
    """Orthonormal modes with their energy spectrum.

    ``modes`` holds the stored modes (possibly more than the tolerance
    needs, up to the requested cap); ``n_active`` is the count selected by
    the energy tolerance. ``eigenvalues`` lists every eigenvalue above the
    numerical floor, which can exceed the number of stored modes;
    ``total_energy`` is the full trace of the Gram matrix.
    """

    grid: Grid
    modes: np.ndarray
    eigenvalues: np.ndarray
    total_energy: float
    n_active: int

    @property
    def n_stored(self) -> int:
        return self.modes.shape[0]

    def discarded_fraction(self, n: int) -> float:
        if self.total_energy <= 0.0:
            return 0.0
        kept = float(self.eigenvalues[:n].sum())
        return max(0.0, 1.0 - kept / self.total_energy)

    def project(self, values: np.ndarray, n: int | None = None) -> np.ndarray:
        """Volume-weighted inner products against the first n modes."""
        n = self.n_active if n is None else n
        if n > self.n_stored:
            raise ReductionError(f"requested {n} coefficients, only {self.n_stored} modes stored")
        flat = np.asarray(values, dtype=float).reshape(-1)
        return self.grid.cell_volume * (self.modes[:n].reshape(n, -1) @ flat)

    def reconstruct(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        n = coeffs.size
        if n > self.n_stored:
            raise ReductionError(f"{n} coefficients for {self.n_stored} stored modes")
        flat = coeffs @ self.modes[:n].reshape(n, -1)
        return flat.reshape(self.grid.field_shape)

    def projection_error(self, values: np.ndarray, n: int | None = None) -> float:
        """Volume-weighted L2 norm of the residual after projection."""
        residual = np.asarray(values, dtype=float) - self.reconstruct(self.project(values, n))
        return float(np.sqrt(self.grid.cell_volume * np.sum(residual**2)))

    def eigenvalue_rows(self) -> list[tuple[int, float]]:
        """Normalized decay curve (k, lambda_k / lambda_1), 1-based."""
        if self.eigenvalues.size == 0:
            return []
        top = self.eigenvalues[0]
        return [(k + 1, float(lam / top)) for k, lam in enumerate(self.eigenvalues)]

    def export_eigenvalues_csv(self, path: str | Path) -> None:
        lines = ["k,eigenvalue_ratio"]
        lines += [f"{k},{r!r}" for k, r in self.eigenvalue_rows()]
        Path(path).write_text("\n".join(lines) + "\n")

    # -- serialization ------------------------------------------------------

    def save(self, root: str | Path) -> None:
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        manifest = {
            "format": "calibra-basis",
            "version": 1,
            "grid": self.grid.to_dict(),
            "eigenvalues": self.eigenvalues.tolist(),
            "total_energy": self.total_energy,
            "n_active": self.n_active,
            "n_stored": self.n_stored,
        }
        tmp = root / "manifest.json.tmp"
        tmp.write_text(json.dumps(manifest, indent=2))
        os.replace(tmp, root / "manifest.json")
        (root / "modes.f64").write_bytes(
            np.ascontiguousarray(self.modes, dtype="<f8").tobytes()
        )

    @classmethod
    def load(cls, root: str | Path) -> "PODBasis":
        root = Path(root)
        manifest = json.loads((root / "manifest.json").read_text())
        if manifest.get("format") != "calibra-basis":
            raise ReductionError(f"{root} is not a basis directory")
        grid = Grid.from_dict(manifest["grid"])
        n = manifest["n_stored"]
        modes = np.frombuffer((root / "modes.f64").read_bytes(), dtype="<f8")
        modes = modes.reshape((n,) + grid.field_shape).copy()
        return cls(
            grid=grid,
            modes=modes,
            eigenvalues=np.asarray(manifest["eigenvalues"], dtype=float),
            total_energy=float(manifest["total_energy"]),
            n_active=int(manifest["n_active"]),
        )


def compress(
    snapshots: np.ndarray,
    grid: Grid,
    *,
    tol: float = 1e-4,
    cap: int | None = None,
) -> PODBasis:
    """Build a basis whose discarded energy fraction is below ``tol``.

    ``snapshots`` has shape (n_snapshots, *field_shape). ``cap`` bounds both
    the stored and the selected mode count; the selected count ``n_active``
    is the smallest n whose discarded energy fraction drops below ``tol``
    (the full numerical rank if the tolerance is unreachable).
    """
    snaps = np.asarray(snapshots, dtype=float)
    if snaps.ndim < 2 or snaps.shape[0] == 0:
        raise ReductionError("need at least one snapshot")
    if snaps.shape[1:] != grid.field_shape:
        raise ReductionError(
            f"snapshot shape {snaps.shape[1:]} does not match grid {grid.field_shape}"
        )
    m = snaps.shape[0]
    flat = snaps.reshape(m, -1)
    gram = grid.cell_volume * (flat @ flat.T)
    lam, vec = np.linalg.eigh(gram)
    lam, vec = lam[::-1], vec[:, ::-1]
    total = float(np.maximum(lam, 0.0).sum())
    keep = lam > EIG_FLOOR * max(lam[0], 0.0) if lam[0] > 0.0 else np.zeros(m, bool)
    lam = lam[keep]
    vec = vec[:, keep]
    rank = lam.size
    if rank == 0:
        raise ReductionError("all snapshots are numerically zero")

    n_store = rank if cap is None else min(cap, rank)
    modes = (vec[:, :n_store].T @ flat) / np.sqrt(lam[:n_store])[:, None]
    modes = modes.reshape((n_store,) + grid.field_shape)

    n_active = n_store
    for n in range(1, n_store + 1):
        if total <= 0.0 or 1.0 - float(lam[:n].sum()) / total < tol:
            n_active = n
            break
    return PODBasis(
        grid=grid,
        modes=modes,
        eigenvalues=lam,
        total_energy=total,
        n_active=n_active,
    )

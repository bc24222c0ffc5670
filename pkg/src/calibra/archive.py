"""Snapshot archives on disk.

An archive is a directory holding ``manifest.json`` plus one raw binary blob
per snapshot component, named ``snap_<index>_<component>.f64``. Blobs are
little-endian float64 in C order (y outermost in 2D). The manifest records
the grid, the parameter-vector names, and one row per snapshot; it is
rewritten atomically (temp file + rename) so a crashed writer never leaves a
manifest pointing at missing blobs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from calibra.grids import ConservedField, Grid, ScalarField

_FORMAT = "calibra-archive"
_VERSION = 1


class ArchiveError(RuntimeError):
    pass


@dataclass
class FieldArchive:
    root: Path
    grid: Grid
    param_names: list[str]
    mus: list[list[float]] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    # -- lifecycle -----------------------------------------------------------

    @classmethod
    def create(
        cls, root: str | Path, grid: Grid, param_names: list[str], extra: dict | None = None
    ) -> "FieldArchive":
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        if (root / "manifest.json").exists():
            raise ArchiveError(f"archive already exists at {root}")
        arc = cls(root=root, grid=grid, param_names=list(param_names), extra=extra or {})
        arc._write_manifest()
        return arc

    @classmethod
    def open(cls, root: str | Path) -> "FieldArchive":
        root = Path(root)
        path = root / "manifest.json"
        if not path.exists():
            raise ArchiveError(f"no manifest at {root}")
        with open(path) as f:
            m = json.load(f)
        if m.get("format") != _FORMAT:
            raise ArchiveError(f"{path} is not a snapshot archive manifest")
        arc = cls(
            root=root,
            grid=Grid.from_dict(m["grid"]),
            param_names=list(m["param_names"]),
            mus=[list(map(float, row["mu"])) for row in m["snapshots"]],
            extra=m.get("extra", {}),
        )
        return arc

    def _write_manifest(self) -> None:
        m = {
            "format": _FORMAT,
            "version": _VERSION,
            "grid": self.grid.to_dict(),
            "param_names": self.param_names,
            "snapshots": [{"index": i, "mu": mu} for i, mu in enumerate(self.mus)],
            "extra": self.extra,
        }
        tmp = self.root / "manifest.json.tmp"
        with open(tmp, "w") as f:
            json.dump(m, f, indent=1)
        os.replace(tmp, self.root / "manifest.json")

    # -- snapshots -----------------------------------------------------------

    def __len__(self) -> int:
        return len(self.mus)

    def _blob(self, index: int, component: str) -> Path:
        return self.root / f"snap_{index:04d}_{component}.f64"

    def append(self, mu, field_: ConservedField) -> int:
        if field_.grid != self.grid:
            raise ArchiveError("snapshot grid does not match archive grid")
        mu = [float(v) for v in np.atleast_1d(mu)]
        if len(mu) != len(self.param_names):
            raise ArchiveError(
                f"parameter vector has {len(mu)} entries, expected {len(self.param_names)}"
            )
        index = len(self.mus)
        for k, name in enumerate(self.grid.components):
            arr = np.ascontiguousarray(field_.u[k], dtype="<f8")
            with open(self._blob(index, name), "wb") as f:
                f.write(arr.tobytes())
        self.mus.append(mu)
        self._write_manifest()
        return index

    def load(self, index: int) -> ConservedField:
        if not 0 <= index < len(self.mus):
            raise ArchiveError(f"snapshot index {index} out of range")
        comps = []
        for name in self.grid.components:
            path = self._blob(index, name)
            if not path.exists():
                raise ArchiveError(f"missing blob {path.name}")
            raw = np.frombuffer(path.read_bytes(), dtype="<f8")
            comps.append(raw.reshape(self.grid.field_shape))
        return ConservedField(self.grid, np.stack(comps).astype(float))

    def density(self, index: int) -> ScalarField:
        name = "rho"
        raw = np.frombuffer(self._blob(index, name).read_bytes(), dtype="<f8")
        return ScalarField(self.grid, raw.reshape(self.grid.field_shape).astype(float))

    def mu_array(self) -> np.ndarray:
        return np.asarray(self.mus, dtype=float).reshape(len(self.mus), len(self.param_names))

    # -- export --------------------------------------------------------------

    def export_csv(self, index: int, component: str, path: str | Path) -> None:
        """Write one component as delimited text with explicit coordinates."""
        f = self.load(index).component(component)
        with open(path, "w") as out:
            if self.grid.ndim == 1:
                out.write("x,value\n")
                for x, v in zip(self.grid.axis_centers(0), f.values):
                    out.write(f"{float(x)!r},{float(v)!r}\n")
            else:
                out.write("x,y,value\n")
                xs = self.grid.axis_centers(0)
                ys = self.grid.axis_centers(1)
                for j, y in enumerate(ys):
                    for i, x in enumerate(xs):
                        out.write(f"{float(x)!r},{float(y)!r},{float(f.values[j, i])!r}\n")

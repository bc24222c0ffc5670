import csv

import numpy as np
import pytest

from calibra.archive import ArchiveError, FieldArchive
from calibra.grids import ConservedField, Grid
from conftest import pack_density


@pytest.fixture
def archive(tmp_path, grid1d, rng):
    a = FieldArchive.create(tmp_path / "a", grid1d, ["beta", "t"], extra={"case": "demo"})
    x = grid1d.axis_centers(0)
    for i in range(3):
        a.append([0.5, 0.1 * i], pack_density(grid1d, 1.0 + 0.1 * i * np.sin(x)))
    return a


def test_roundtrip_through_disk(archive, tmp_path, grid1d):
    b = FieldArchive.open(tmp_path / "a")
    assert len(b) == 3
    assert b.param_names == ["beta", "t"]
    assert b.extra == {"case": "demo"}
    assert b.grid == grid1d
    for i in range(3):
        assert np.array_equal(b.load(i).u, archive.load(i).u)
    assert np.allclose(b.mu_array(), [[0.5, 0.0], [0.5, 0.1], [0.5, 0.2]])


def test_density_view(archive, grid1d):
    d = archive.density(2)
    x = grid1d.axis_centers(0)
    assert np.allclose(d.values, 1.0 + 0.2 * np.sin(x))


def test_append_returns_index_and_grows(archive, grid1d):
    idx = archive.append([0.5, 0.3], pack_density(grid1d, np.ones(grid1d.shape[0])))
    assert idx == 3 and len(archive) == 4


def test_create_refuses_to_clobber(tmp_path, grid1d):
    FieldArchive.create(tmp_path / "x", grid1d, ["t"])
    with pytest.raises(ArchiveError):
        FieldArchive.create(tmp_path / "x", grid1d, ["t"])


def test_open_missing_path(tmp_path):
    with pytest.raises(ArchiveError):
        FieldArchive.open(tmp_path / "nope")


def test_mismatched_appends_rejected(archive, grid1d):
    with pytest.raises(ArchiveError):
        archive.append([0.5], pack_density(grid1d, np.ones(grid1d.shape[0])))
    other = Grid((0.0,), (1.0,), (50,))
    with pytest.raises(ArchiveError):
        archive.append([0.5, 0.4], pack_density(other, np.ones(50)))


def test_load_out_of_range(archive):
    with pytest.raises(ArchiveError):
        archive.load(17)


def test_export_csv(archive, tmp_path):
    out = tmp_path / "rho.csv"
    archive.export_csv(1, "rho", out)
    with open(out) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == archive.grid.shape[0]
    assert {"x", "value"} <= set(rows[0])
    got = np.array([float(r["value"]) for r in rows])
    assert np.allclose(got, archive.density(1).values)

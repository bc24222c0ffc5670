"""Snapshot compression checks, including an independent SVD cross-route."""

import numpy as np
import pytest

from calibra.grids import Grid
from calibra.pod import PODBasis, ReductionError, compress


@pytest.fixture
def snaps(grid1d, rng):
    x = grid1d.axis_centers(0)
    t = np.linspace(0, 1, 12)
    return np.array([np.sin(2 * np.pi * (x - 0.3 * tt)) * (1 + tt) for tt in t])


def test_modes_are_orthonormal(snaps, grid1d):
    basis = compress(snaps, grid1d, tol=1e-12)
    flat = basis.modes.reshape(basis.n_stored, -1)
    G = grid1d.cell_volume * (flat @ flat.T)
    assert np.abs(G - np.eye(basis.n_stored)).max() < 1e-10


def test_gram_route_agrees_with_direct_svd(snaps, grid1d):
    basis = compress(snaps, grid1d, tol=1e-12)
    # independent route: SVD of the volume-weighted snapshot matrix
    flat = snaps.reshape(snaps.shape[0], -1) * np.sqrt(grid1d.cell_volume)
    _, s, vt = np.linalg.svd(flat, full_matrices=False)
    lam_svd = s**2
    k = basis.eigenvalues.size
    assert np.allclose(basis.eigenvalues, lam_svd[:k], rtol=1e-8, atol=1e-12)
    # same subspace: projector difference vanishes mode by mode
    for i in range(basis.n_stored):
        ours = basis.modes[i].ravel() * np.sqrt(grid1d.cell_volume)
        theirs = vt[i]
        overlap = abs(float(ours @ theirs))
        assert overlap == pytest.approx(1.0, abs=1e-8)


def test_energy_identity(snaps, grid1d):
    basis = compress(snaps, grid1d, tol=1e-12)
    total = sum(
        grid1d.cell_volume * float((s.ravel() ** 2).sum()) for s in snaps
    )
    assert basis.total_energy == pytest.approx(total, rel=1e-10)
    assert basis.eigenvalues.sum() == pytest.approx(total, rel=1e-8)


def test_projection_error_decreases_and_hits_zero_in_span(snaps, grid1d):
    basis = compress(snaps, grid1d, tol=1e-12)
    errs = [basis.projection_error(snaps[4], n) for n in range(1, basis.n_stored + 1)]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-8


def test_out_of_span_component_survives_projection(snaps, grid1d, rng):
    basis = compress(snaps, grid1d, tol=1e-12)
    noise = rng.normal(size=grid1d.field_shape)
    err = basis.projection_error(noise)
    assert err > 0.1 * np.sqrt(grid1d.cell_volume * (noise**2).sum())


def test_tolerance_selects_smallest_sufficient_count(grid1d):
    x = grid1d.axis_centers(0)
    # two dominant directions plus a faint third
    snaps = np.array(
        [np.sin(2 * np.pi * x), np.cos(2 * np.pi * x), 1e-6 * np.sin(6 * np.pi * x)]
    )
    basis = compress(snaps, grid1d, tol=1e-4)
    assert basis.n_active == 2
    assert basis.discarded_fraction(basis.n_active) < 1e-4
    strict = compress(snaps, grid1d, tol=1e-15)
    assert strict.n_active == 3


def test_cap_limits_storage(grid1d):
    x = grid1d.axis_centers(0)
    # translating bump: numerically full-rank family
    snaps = np.array([np.exp(-((x - 0.2 - 0.05 * i) ** 2) / 0.004) for i in range(12)])
    basis = compress(snaps, grid1d, tol=0.0, cap=4)
    assert basis.n_stored == 4
    assert basis.n_active == 4
    with pytest.raises(ReductionError):
        basis.project(snaps[0], 9)
    with pytest.raises(ReductionError):
        basis.reconstruct(np.zeros(9))


def test_eigenvalue_rows_are_normalized_one_based(snaps, grid1d):
    basis = compress(snaps, grid1d)
    rows = basis.eigenvalue_rows()
    assert rows[0] == (1, 1.0)
    ratios = [r for _, r in rows]
    assert all(b <= a + 1e-15 for a, b in zip(ratios, ratios[1:]))


def test_project_reconstruct_are_adjoint_consistent(snaps, grid1d, rng):
    basis = compress(snaps, grid1d, tol=1e-12)
    c = rng.normal(size=basis.n_stored)
    v = basis.reconstruct(c)
    assert np.allclose(basis.project(v, basis.n_stored), c, atol=1e-10)


def test_save_load_roundtrip(tmp_path, snaps, grid1d):
    basis = compress(snaps, grid1d, tol=1e-6)
    basis.save(tmp_path / "b")
    loaded = PODBasis.load(tmp_path / "b")
    assert loaded.n_active == basis.n_active
    assert np.array_equal(loaded.modes, basis.modes)
    assert np.array_equal(loaded.eigenvalues, basis.eigenvalues)
    assert loaded.grid == basis.grid


def test_degenerate_inputs_rejected(grid1d):
    with pytest.raises(ReductionError):
        compress(np.zeros((0, 200)), grid1d)
    with pytest.raises(ReductionError):
        compress(np.zeros((3, 7)), grid1d)
    with pytest.raises(ReductionError):
        compress(np.zeros((3, 200)), grid1d)


def test_export_eigenvalues_csv(tmp_path, snaps, grid1d):
    basis = compress(snaps, grid1d)
    out = tmp_path / "eigs.csv"
    basis.export_eigenvalues_csv(out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "k,eigenvalue_ratio"
    assert lines[1].startswith("1,1.0")

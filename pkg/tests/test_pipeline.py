"""Offline build and simulation-free online evaluation."""

import numpy as np
import pytest

from calibra.calibration import CalibrationConfig, CalibrationError, calibrate_self_similar
from calibra.grids import Grid, ScalarField
from calibra.mapping import ControlGrid, build_map
from calibra.pipeline import (
    NetConfig,
    OfflineArtifacts,
    OnlineError,
    PodConfig,
    coeff_limit,
    eigenvalue_comparison,
    error_report,
    eulerian_solve,
    offline_build,
    online_solve,
    pushforward_values,
    write_error_csv,
)
from calibra.calibration import pullback_values
from calibra.pod import ReductionError
from conftest import make_density_archive

GRID = Grid((0.0,), (1.0,), (160,))
TIMES = np.linspace(0.0, 0.4, 8)


def bump_profile(x, t):
    """A translating gaussian: one mode after perfect calibration."""
    return 1.0 + np.exp(-(((x - 0.3 - 0.4 * t) / 0.08) ** 2))


def cal_config(**kw):
    base = dict(delta=0.0, alpha=0.0, max_iter=80)
    base.update(kw)
    return CalibrationConfig(**base)


SMALL_NET = NetConfig(hidden_layers=2, width=12, epochs=2500, tol=1e-8)


@pytest.fixture(scope="module")
def archive(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipe") / "arch"
    return make_density_archive(root, GRID, bump_profile, TIMES)


@pytest.fixture(scope="module")
def artifacts(archive):
    cgrid = ControlGrid.interior_equispaced((0.0,), (1.0,), (4,))
    return offline_build(
        archive,
        cal_config(),
        PodConfig(tol=1e-4),
        cgrid=cgrid,
        components=["rho"],
        cal_net_config=SMALL_NET,
        coeff_net_config=SMALL_NET,
    )


def test_calibrated_family_compresses_to_one_mode(artifacts):
    ale = artifacts.ale_bases["rho"]
    eul = artifacts.eulerian_bases["rho"]
    # aligned snapshots are essentially rank one; the raw family is not
    assert ale.n_active <= 2
    assert eul.n_active >= 4
    assert ale.n_active < eul.n_active


def test_ale_beats_eulerian_on_training_window(artifacts, archive):
    rows = error_report(artifacts, archive, [1, 2])
    assert len(rows) == 2 * len(TIMES)
    for row in rows:
        assert row["ale"] < row["eulerian"]
    one = [r for r in rows if r["N"] == 1]
    assert max(r["ale"] for r in one) < 0.1


def test_error_report_schema_and_indices(artifacts, archive):
    rows = error_report(artifacts, archive, [1], indices=[2, 5])
    assert len(rows) == 2
    assert set(rows[0]) == {"t", "N", "eulerian", "ale", "eulerian_proj", "ale_proj"}
    assert rows[0]["t"] == pytest.approx(TIMES[2])
    assert rows[1]["t"] == pytest.approx(TIMES[5])
    for r in rows:
        # projections are best approximations, up to the map round trip
        assert r["eulerian_proj"] <= r["eulerian"] + 1e-12


def test_error_report_rejects_foreign_grid(artifacts, tmp_path):
    other = make_density_archive(
        tmp_path / "other", Grid((0.0,), (1.0,), (80,)), bump_profile, [0.0, 0.1]
    )
    with pytest.raises(OnlineError, match="grid"):
        error_report(artifacts, other, [1])


def test_online_solution_fields(artifacts):
    sol = online_solve(artifacts, [0.17])
    assert sol.n_modes == artifacts.ale_bases["rho"].n_active
    assert sol.physical.values.shape == GRID.field_shape
    assert sol.elapsed >= 0.0
    x = GRID.axis_centers(0)
    truth = bump_profile(x, 0.17)
    rel = np.linalg.norm(sol.physical.values - truth) / np.linalg.norm(truth)
    assert rel < 0.1


def test_online_is_deterministic(artifacts):
    a = online_solve(artifacts, [0.23], 1)
    b = online_solve(artifacts, [0.23], 1)
    assert np.array_equal(a.physical.values, b.physical.values)


def test_over_requesting_modes_raises(artifacts):
    limit = coeff_limit(artifacts, "rho", "ale")
    with pytest.raises(OnlineError, match="serves up to"):
        online_solve(artifacts, [0.2], limit + 1)
    with pytest.raises(OnlineError, match="serves up to"):
        eulerian_solve(artifacts, [0.2], 0)


def test_unknown_component_raises(artifacts):
    with pytest.raises(OnlineError, match="no ale basis"):
        online_solve(artifacts, [0.2], component="vorticity")


def test_artifacts_roundtrip_bitwise(artifacts, tmp_path):
    artifacts.save(tmp_path / "arts")
    clone = OfflineArtifacts.load(tmp_path / "arts")
    assert clone.components() == artifacts.components()
    assert clone.window == artifacts.window
    mu = [0.31]
    a = online_solve(artifacts, mu, 1)
    b = online_solve(clone, mu, 1)
    assert np.array_equal(a.physical.values, b.physical.values)
    assert np.array_equal(
        eulerian_solve(artifacts, mu, 2).values, eulerian_solve(clone, mu, 2).values
    )


def test_load_rejects_foreign_directory(tmp_path):
    (tmp_path / "manifest.json").write_text('{"format": "something-else"}')
    with pytest.raises(OnlineError, match="artifacts"):
        OfflineArtifacts.load(tmp_path)


def test_eigenvalue_comparison_rows_and_csv(artifacts, tmp_path):
    path = tmp_path / "eigs.csv"
    rows = eigenvalue_comparison(artifacts, path)
    first = rows[0]
    assert first["component"] == "rho"
    assert first["k"] == 1
    assert first["eulerian_ratio"] == pytest.approx(1.0)
    assert first["ale_ratio"] == pytest.approx(1.0)
    header = path.read_text().splitlines()[0]
    assert header == "component,k,eulerian_ratio,ale_ratio"


def test_write_error_csv(artifacts, archive, tmp_path):
    rows = error_report(artifacts, archive, [1], indices=[0])
    path = tmp_path / "errors.csv"
    write_error_csv(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == list(rows[0])
    assert len(lines) == 2
    with pytest.raises(OnlineError, match="no error rows"):
        write_error_csv([], tmp_path / "empty.csv")


def test_pushforward_inverts_pullback():
    x = GRID.axis_centers(0)
    g = np.sin(2 * np.pi * x) + 0.3 * np.cos(4 * np.pi * x)
    cgrid = ControlGrid.spanning((0.0,), (1.0,), (6,))
    w = cgrid.ref_points().copy()
    w[1:-1, 0] += np.array([0.05, -0.03, 0.04, -0.02])
    tmap = build_map(cgrid, w)
    pulled = pullback_values(g, GRID, tmap)
    back = pushforward_values(pulled, GRID, tmap)
    interior = slice(8, -8)
    assert np.abs(back[interior] - g[interior]).max() < 2e-3


def test_window_restricts_training_set(archive):
    cgrid = ControlGrid.interior_equispaced((0.0,), (1.0,), (3,))
    arts = offline_build(
        archive,
        cal_config(max_iter=20),
        PodConfig(tol=1e-3),
        cgrid=cgrid,
        components=["rho"],
        window=(TIMES[2], TIMES[5]),
        cal_net_config=NetConfig(hidden_layers=2, width=8, epochs=300),
        coeff_net_config=NetConfig(hidden_layers=2, width=8, epochs=300),
    )
    assert arts.window["indices"] == [2, 3, 4, 5]
    assert arts.window["t_min"] == pytest.approx(TIMES[2])
    assert arts.window["t_max"] == pytest.approx(TIMES[5])
    with pytest.raises(ReductionError, match="selects no snapshots"):
        offline_build(
            archive,
            cal_config(max_iter=5),
            PodConfig(),
            cgrid=cgrid,
            components=["rho"],
            window=(9.0, 10.0),
        )


def test_pod_cap_limits_the_served_modes(archive):
    cgrid = ControlGrid.interior_equispaced((0.0,), (1.0,), (3,))
    arts = offline_build(
        archive,
        cal_config(max_iter=10),
        PodConfig(tol=0.0, cap=3),
        cgrid=cgrid,
        components=["rho"],
        cal_net_config=NetConfig(hidden_layers=2, width=8, epochs=200),
        coeff_net_config=NetConfig(hidden_layers=2, width=8, epochs=200),
    )
    for kind in ("ale", "eulerian"):
        assert coeff_limit(arts, "rho", kind) == 3
    # tol=0.0 serves every stored mode
    assert arts.eulerian_bases["rho"].n_active == 3
    sol = online_solve(arts, [0.2], 3)
    assert sol.n_modes == 3


def test_precomputed_calibration_is_reused(archive):
    cgrid = ControlGrid.interior_equispaced((0.0,), (1.0,), (3,))
    cal = calibrate_self_similar(archive, cgrid, cal_config(max_iter=15))
    arts = offline_build(
        archive,
        cal_config(max_iter=15),
        PodConfig(tol=1e-3),
        calibration=cal,
        components=["rho"],
        cal_net_config=NetConfig(hidden_layers=2, width=8, epochs=200),
        coeff_net_config=NetConfig(hidden_layers=2, width=8, epochs=200),
    )
    assert arts.calibration is cal


def test_offline_build_validates_inputs(archive):
    cgrid = ControlGrid.interior_equispaced((0.0,), (1.0,), (3,))
    with pytest.raises(CalibrationError, match="control grid"):
        offline_build(archive, cal_config(), PodConfig(), components=["rho"])
    with pytest.raises(CalibrationError, match="route"):
        offline_build(
            archive, cal_config(), PodConfig(), cgrid=cgrid, route="bogus", components=["rho"]
        )
    with pytest.raises(CalibrationError, match="unknown component"):
        offline_build(archive, cal_config(), PodConfig(), cgrid=cgrid, components=["psi"])

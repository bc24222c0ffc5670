"""Constrained snapshot calibration: residuals, solver wrapper, sweeps."""

from types import SimpleNamespace

import numpy as np
import pytest

from calibra.calibration import (
    PENALTY_VALUE,
    CalibrationConfig,
    CalibrationError,
    CalibrationResult,
    ParameterTable,
    calibrate_quasi,
    calibrate_self_similar,
    calibration_error_characteristics,
    calibration_error_projection,
    minimize_constrained,
    map_stiffness,
    pullback_values,
    residual_projection,
    residual_self_similar,
    run_guess_study,
    run_order_study,
    select_few,
)
from calibra.grids import Grid, ScalarField
from calibra.mapping import ControlGrid, build_map
from calibra.pod import compress
from conftest import make_density_archive, smoothstep

NODES = (0.2, 0.4, 0.6, 0.8)


def ramp_profile(x, t):
    """Self-similar family: a smooth step between two moving fronts."""
    a = 0.2 + 0.3 * t
    b = 0.5 + 0.5 * t
    return 1.0 + smoothstep((x - a) / (b - a))


def shift_profile(x, t):
    """Pure transport of a broad smooth ramp at speed 0.4."""
    return 1.0 + 1.5 * smoothstep((x - 0.4 * t - 0.25) / 0.5)


def steps_profile(x, t):
    """Transport of compact steep steps centered on the control nodes.

    The sharp features pin every node of the calibration grid; the profile
    is flat where the cubic map cannot represent a uniform shift exactly,
    so the recovered node positions track the true shift closely.
    """
    y = np.asarray(x, dtype=float) - 0.4 * t
    out = np.ones_like(y)
    for c in NODES:
        out = out + smoothstep((y - c + 0.04) / 0.08)
    return out


@pytest.fixture
def grid():
    return Grid((0.0,), (1.0,), (160,))


@pytest.fixture
def cgrid():
    return ControlGrid.spanning((0.0,), (1.0,), (6,))


def config(**kw):
    base = dict(delta=0.0, alpha=0.0, max_iter=60)
    base.update(kw)
    return CalibrationConfig(**base)


def stub_archive(mus, names):
    mus = np.asarray(mus, dtype=float)
    return SimpleNamespace(param_names=tuple(names), mu_array=lambda: mus)


# -- residuals ----------------------------------------------------------------


def test_identity_residual_vanishes_on_reference(grid, cgrid):
    x = grid.axis_centers(0)
    snap = ScalarField(grid, ramp_profile(x, 0.4))
    theta_ref = cgrid.pack(cgrid.ref_points())
    r = residual_self_similar(theta_ref, snap, snap, cgrid, config())
    assert r < 1e-25


def test_residual_penalty_terms_add_up(grid, cgrid):
    x = grid.axis_centers(0)
    snap = ScalarField(grid, ramp_profile(x, 0.4))
    theta_ref = cgrid.pack(cgrid.ref_points())
    theta_nb = theta_ref + 0.01
    dist = 0.25
    delta = 1e-2
    base = residual_self_similar(theta_ref, snap, snap, cgrid, config())
    with_nb = residual_self_similar(
        theta_ref, snap, snap, cgrid, config(delta=delta), neighbor=(theta_nb, dist)
    )
    want = 0.5 * delta * np.sum(((theta_ref - theta_nb) / dist) ** 2)
    assert with_nb - base == pytest.approx(want, rel=1e-12)
    # identity map has unit stretch everywhere, so the map penalty is alpha/2
    alpha = 3e-3
    with_alpha = residual_self_similar(theta_ref, snap, snap, cgrid, config(alpha=alpha))
    assert with_alpha - base == pytest.approx(alpha / 2.0, rel=1e-9)


def test_infeasible_map_returns_penalty_value(grid, cgrid):
    x = grid.axis_centers(0)
    snap = ScalarField(grid, ramp_profile(x, 0.4))
    theta_bad = np.array([0.5, 0.3, 0.7, 0.9])  # fold
    r = residual_self_similar(theta_bad, snap, snap, cgrid, config())
    assert r == PENALTY_VALUE


def test_projection_residual_zero_in_span(grid, cgrid):
    x = grid.axis_centers(0)
    snap = ramp_profile(x, 0.25)
    basis = compress(snap[None, :], grid, tol=1e-12)
    theta_ref = cgrid.pack(cgrid.ref_points())
    r = residual_projection(theta_ref, ScalarField(grid, snap), basis, cgrid, config())
    assert r < 1e-10


def test_map_stiffness_identity_is_one(grid, cgrid):
    m = build_map(cgrid, cgrid.ref_points())
    assert map_stiffness(m, grid) == pytest.approx(1.0, abs=1e-10)


def test_pullback_recovers_profile_under_known_map(grid, cgrid):
    x = grid.axis_centers(0)
    shift = 0.08
    w = cgrid.ref_points().copy()
    w[1:-1, 0] += shift
    tmap = build_map(cgrid, w)
    # physical snapshot is the reference transported right by `shift`
    phys = shift_profile(x, shift / 0.4)
    pulled = pullback_values(phys, grid, tmap)
    ref = shift_profile(x, 0.0)
    # the cubic equals the shifted identity exactly between the two middle
    # nodes, where both endpoint slopes are one
    exact = (x > 0.42) & (x < 0.58)
    assert np.abs(pulled[exact] - ref[exact]).max() < 1e-3


# -- constrained minimizer ------------------------------------------------------


def test_minimizer_recovers_quadratic_optimum(cgrid):
    target = np.array([0.15, 0.42, 0.58, 0.83])

    def objective(theta, tmap):
        return float(np.sum((theta - target) ** 2))

    theta0 = cgrid.pack(cgrid.ref_points())
    screen = (np.linspace(0, 1, 33),)
    rec = minimize_constrained(
        objective, theta0, cgrid, config(max_iter=200, ftol=1e-14), screen
    )
    assert np.abs(rec.theta - target).max() < 1e-5
    assert rec.success


def test_minimizer_zero_budget_returns_start(cgrid):
    theta0 = cgrid.pack(cgrid.ref_points())
    screen = (np.linspace(0, 1, 17),)
    rec = minimize_constrained(
        lambda th, m: float(np.sum(th**2)), theta0, cgrid, config(max_iter=0), screen
    )
    assert np.array_equal(rec.theta, theta0)
    assert not rec.success


def test_minimizer_keeps_feasible_start_when_no_gain(cgrid):
    theta0 = cgrid.pack(cgrid.ref_points())
    screen = (np.linspace(0, 1, 17),)

    def objective(theta, tmap):
        # flat away from the start; the start itself is strictly best
        return 0.0 if np.allclose(theta, theta0) else 1.0

    rec = minimize_constrained(objective, theta0, cgrid, config(max_iter=30), screen)
    assert np.array_equal(rec.theta, theta0)
    assert rec.fun == 0.0


def test_minimizer_projects_infeasible_start(cgrid):
    bad = np.array([0.5, 0.3, 0.7, 0.9])
    screen = (np.linspace(0, 1, 17),)
    rec = minimize_constrained(
        lambda th, m: float(np.sum((th - 0.5) ** 2)), bad, cgrid, config(max_iter=5), screen
    )
    assert np.all(np.diff(rec.theta) > 0)


# -- parameter bookkeeping ------------------------------------------------------


def build_table():
    mus = [
        [0.3, 0.1],
        [0.3, 0.2],
        [0.7, 0.1],
        [0.7, 0.2],
        [0.3, 0.3],
    ]
    return ParameterTable.from_archive(stub_archive(mus, ["beta", "t"]))


def test_parameter_table_groups_and_order():
    table = build_table()
    assert [list(g) for g in table.groups] == [[0, 1, 4], [2, 3]]
    order = table.visitation_order()
    # last group first, times descending inside each group
    assert order == [3, 2, 4, 1, 0]


def test_parameter_table_requires_time_column():
    with pytest.raises(CalibrationError, match="lack"):
        ParameterTable.from_archive(stub_archive(np.zeros((3, 1)), ["beta"]))


def test_nearest_uses_normalized_distance():
    table = build_table()
    # index 4 = (0.3, 0.3); candidates 0 (0.3, 0.1) and 3 (0.7, 0.2):
    # normalized, 0 is 1.0 away in t, 3 is (1, 0.5) away, so 0 wins
    assert table.nearest(4, [0, 3]) == 0


# -- sweeps ---------------------------------------------------------------------


def test_self_similar_sweep_recovers_transport(tmp_path, grid):
    times = np.linspace(0.0, 0.25, 6)
    archive = make_density_archive(tmp_path / "arch", grid, steps_profile, times)
    cgrid = ControlGrid.interior_equispaced((0.0,), (1.0,), (4,))
    result = calibrate_self_similar(
        archive, cgrid, config(max_iter=150, ftol=1e-14), rho_bar_index=0
    )
    base = cgrid.pack(cgrid.ref_points())
    for i, t in enumerate(times):
        got = result.theta(i)
        want = base + 0.4 * t
        assert np.abs(got - want).max() < 1e-3, (t, got, want)
    assert result.extra["route"] == "self-similar"
    assert result.extra["rho_bar_index"] == 0
    assert result.failed_indices() == []


def test_reference_snapshot_keeps_identity(tmp_path, grid):
    times = [0.0, 0.1, 0.2]
    archive = make_density_archive(tmp_path / "a2", grid, ramp_profile, times)
    cgrid = ControlGrid.spanning((0.0,), (1.0,), (5,))
    result = calibrate_self_similar(archive, cgrid, config())
    # default reference is the last snapshot; its optimum is the identity
    theta_ref = cgrid.pack(cgrid.ref_points())
    assert np.allclose(result.theta(2), theta_ref, atol=1e-12)
    assert result.records[2].residual < 1e-20
    assert result.extra["rho_bar_index"] == 2


def test_result_serialization_roundtrip(tmp_path, grid):
    times = [0.0, 0.12, 0.24]
    archive = make_density_archive(tmp_path / "a3", grid, ramp_profile, times)
    cgrid = ControlGrid.spanning((0.0,), (1.0,), (5,))
    result = calibrate_self_similar(archive, cgrid, config(max_iter=25))
    path = tmp_path / "cal.json"
    result.save(path)
    clone = CalibrationResult.load(path)
    assert clone.order == result.order
    for i in result.records:
        assert np.array_equal(clone.theta(i), result.theta(i))
        assert clone.records[i].residual == result.records[i].residual
    assert clone.map_for(1).eval_grid(grid.axis_centers(0)).shape == (160,)


def test_select_few_strided():
    assert select_few(10, 3) == [0, 4, 9]
    assert select_few(4, 10) == [0, 1, 2, 3]
    assert select_few(25, 10)[0] == 0
    assert len(select_few(25, 10)) == 10


def test_quasi_route_runs_and_reports(tmp_path, grid):
    times = np.linspace(0.0, 0.25, 5)
    archive = make_density_archive(tmp_path / "a4", grid, shift_profile, times)
    cgrid = ControlGrid.interior_equispaced((0.0,), (1.0,), (3,))
    cfg = config(max_iter=40, n_few=3, n_few_pod=2)
    result = calibrate_quasi(archive, cgrid, cfg)
    assert result.extra["route"] == "quasi-self-similar"
    assert result.extra["few_indices"] == select_few(5, 3)
    assert result.extra["n_modes"] >= 1
    assert set(result.records) == set(range(5))
    assert all(np.isfinite(result.records[i].residual) for i in range(5))


# -- error measures ---------------------------------------------------------------


def test_characteristic_error_is_l1():
    thetas = np.array([[0.2, 0.4], [0.3, 0.6]])
    exact = np.array([[0.25, 0.45], [0.3, 0.5]])
    errs = calibration_error_characteristics(thetas, exact)
    assert np.allclose(errs, [0.1, 0.1])


def test_projection_error_measures_span_distance(grid):
    x = grid.axis_centers(0)
    rho_bar = ScalarField(grid, np.sin(2 * np.pi * x))
    aligned = ScalarField(grid, 2.5 * np.sin(2 * np.pi * x))
    assert calibration_error_projection(aligned, rho_bar) < 1e-25
    ortho = ScalarField(grid, np.cos(2 * np.pi * x))
    # an orthogonal direction keeps its full squared norm
    assert calibration_error_projection(ortho, rho_bar) == pytest.approx(
        ortho.norm() ** 2, rel=1e-10
    )


# -- studies ----------------------------------------------------------------------


def test_guess_study_self_targets_are_exact(tmp_path, grid):
    times = np.linspace(0.05, 0.25, 4)
    archive = make_density_archive(tmp_path / "a5", grid, shift_profile, times)

    def exact_positions(mu):
        return np.array([0.3, 0.5, 0.7]) + 0.4 * mu[-1]

    rows = run_guess_study(
        archive,
        config(max_iter=60),
        mode="exact",
        exact_positions=exact_positions,
    )
    assert len(rows) == 16
    self_rows = [r for r in rows if r["reference_t"] == r["target_t"]]
    assert len(self_rows) == 4
    assert all(r["error"] < 1e-8 for r in self_rows)


def test_order_study_produces_all_strategies(tmp_path, grid):
    times = np.linspace(0.05, 0.25, 5)
    archive = make_density_archive(tmp_path / "a6", grid, shift_profile, times)
    rows = run_order_study(archive, config(max_iter=40), mode="equispaced")
    strategies = {r["strategy"] for r in rows}
    assert strategies == {"T2B", "T2B10", "B2T", "B2T10", "Fixed"}
    t2b = [r for r in rows if r["strategy"] == "T2B"]
    assert len(t2b) == 5
    # stride-10 walks only visit every tenth snapshot (here: just the first)
    assert len([r for r in rows if r["strategy"] == "T2B10"]) == 1


def test_study_modes_are_validated(tmp_path, grid):
    archive = make_density_archive(tmp_path / "a7", grid, shift_profile, [0.0, 0.1])
    with pytest.raises(CalibrationError, match="mode"):
        run_guess_study(archive, config(), mode="nope")
    with pytest.raises(CalibrationError, match="exact_positions"):
        run_guess_study(archive, config(), mode="exact")


def test_config_serialization_roundtrip():
    cfg = CalibrationConfig(delta=1e-2, alpha=1e-4, n_few=7)
    clone = CalibrationConfig.from_dict(cfg.to_dict())
    assert clone == cfg

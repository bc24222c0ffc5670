"""Time integration checks on small problems; accuracy at scale is covered
by the acceptance suite."""

import numpy as np
import pytest

from calibra.euler import primitive_to_conserved
from calibra.riemann import sod_states, solve_riemann
from calibra.solver import (
    FomError,
    density_wave_exact,
    density_wave_problem,
    dmr_problem,
    run_fom,
    sod_problem,
    stable_dt,
    triple_point_problem,
)


def test_density_wave_tracks_exact_solution():
    prob = density_wave_problem(100, t_final=0.3)
    times, snaps = run_fom(prob, [0.3])
    x = prob.grid.axis_centers(0)
    err = np.abs(snaps[0][0] - density_wave_exact(x, 0.3)).mean()
    assert err < 2e-5


def test_periodic_advection_conserves_mass_and_momentum():
    prob = density_wave_problem(64, t_final=0.2)
    u0 = prob.initial_state()
    _, snaps = run_fom(prob, [0.2])
    h = prob.grid.spacing[0]
    for k in range(3):
        assert snaps[0][k].sum() * h == pytest.approx(u0[k].sum() * h, abs=1e-12)


def test_snapshots_hit_requested_times_exactly():
    prob = density_wave_problem(32, t_final=0.1)
    seen = []
    times, snaps = run_fom(prob, [0.013, 0.05, 0.1], callback=lambda t, u: seen.append(t))
    assert np.array_equal(times, [0.013, 0.05, 0.1])
    assert len(snaps) == 3
    # integrator never steps past a snapshot target
    assert min(abs(t - 0.013) for t in seen) < 1e-14
    assert all(b > a for a, b in zip(seen, seen[1:]))


def test_unsorted_times_are_sorted():
    prob = density_wave_problem(32, t_final=0.1)
    times, _ = run_fom(prob, [0.1, 0.02])
    assert np.array_equal(times, [0.02, 0.1])


def test_bad_snapshot_times_rejected():
    prob = density_wave_problem(32, t_final=0.1)
    with pytest.raises(FomError):
        run_fom(prob, [])
    with pytest.raises(FomError):
        run_fom(prob, [0.2])
    with pytest.raises(FomError):
        run_fom(prob, [-0.05])


def test_stable_dt_formula_1d():
    grid_n = 25
    prob = density_wave_problem(grid_n)
    u = prob.initial_state()
    from calibra.euler import dissipation_speed

    smax = dissipation_speed(u, axis=0).max()
    want = 0.8 * (1.0 / grid_n) / smax
    assert stable_dt(u, prob.grid, cfl=0.8) == pytest.approx(want)


def test_coarse_shock_tube_matches_exact_profile():
    prob = sod_problem(300, t_final=0.12)
    _, snaps = run_fom(prob, [0.12])
    x = prob.grid.axis_centers(0)
    sol = solve_riemann(*sod_states())
    exact = sol.density_profile(x, 0.12, 0.5)
    l1 = np.abs(snaps[0][0] - exact).mean()
    assert l1 < 1.5e-2
    # end states undisturbed
    assert snaps[0][0][0] == pytest.approx(1.0, abs=1e-10)
    assert snaps[0][0][-1] == pytest.approx(0.1, abs=1e-10)


def test_positivity_failure_raises():
    prob = sod_problem(64, p_l=-0.5, t_final=0.01)
    with pytest.raises(FomError, match="positivity"):
        run_fom(prob, [0.01])


def test_mach_reflection_stays_positive_at_small_scale():
    from calibra.euler import pressure

    prob = dmr_problem(nx=48, ny=12, t_final=0.01)
    _, snaps = run_fom(prob, [0.01])
    u = snaps[0]
    assert u.shape == (4, 12, 48)
    assert u[0].min() > 0.0
    assert pressure(u).min() > 0.0
    # pure post-shock state high above the wall, quiescent gas far ahead
    assert u[0][-1, 0] == pytest.approx(8.0, abs=1e-5)
    assert u[0][:, -1] == pytest.approx(1.4, abs=1e-6)


def test_triple_point_initial_layout():
    prob = triple_point_problem(nx=56, ny=24, t_final=0.25)
    u = prob.initial_state()
    rho = u[0]
    # fast driver on the left, light gas above y=1.5 on the right
    assert rho[:, 2] == pytest.approx(1.0)
    assert u[1][:, 2] == pytest.approx(20.0)  # x momentum of the driver
    assert rho[3, 50] == pytest.approx(1.0)  # lower right
    assert rho[20, 50] == pytest.approx(0.125)  # upper right

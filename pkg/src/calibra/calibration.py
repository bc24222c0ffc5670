"""Calibration of transformation maps against snapshot data.

Each snapshot gets a control-point configuration theta whose map pulls the
density back to the reference domain so that it matches a fixed reference
profile (self-similar route) or stays close to a low-dimensional subspace
spanned by other calibrated snapshots (quasi-self-similar route). The
minimization is a constrained SLSQP in normalized coordinates with the
ordering constraints of the control grid and a Jacobian-determinant floor.
"""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from calibra.grids import Grid, ScalarField, interpolate_values
from calibra.mapping import (
    DEFAULT_GAP_FRAC,
    ControlGrid,
    MapConstructionError,
    TransformMap,
    map_from_theta,
)
from calibra.pod import PODBasis, compress

PENALTY_VALUE = 1e10

ORDER_STRATEGIES = ("T2B", "T2B10", "B2T", "B2T10", "Fixed")


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CalibrationConfig:
    """Knobs shared by every calibration solve.

    ``delta`` weighs the parametric-smoothness penalty, ``alpha`` the map
    stiffness penalty; ``det_eps`` is the pointwise floor on det(grad T).
    ``fd_step`` and ``ftol`` are SLSQP settings in normalized coordinates.
    """

    delta: float = 0.0
    alpha: float = 0.0
    gap_frac: float = DEFAULT_GAP_FRAC
    det_eps: float = 1e-3
    max_iter: int = 100
    ftol: float = 1e-8
    fd_step: float = 1e-6
    n_few: int = 10
    n_few_pod: int = 3

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "alpha": self.alpha,
            "gap_frac": self.gap_frac,
            "det_eps": self.det_eps,
            "max_iter": self.max_iter,
            "ftol": self.ftol,
            "fd_step": self.fd_step,
            "n_few": self.n_few,
            "n_few_pod": self.n_few_pod,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationConfig":
        return cls(**d)


# ---------------------------------------------------------------------------
# residual pieces
# ---------------------------------------------------------------------------


def pullback_values(values: np.ndarray, grid: Grid, tmap: TransformMap) -> np.ndarray:
    """Snapshot composed with the map: values(T(.)) on the reference mesh.

    The reference domain coincides with the physical box, so the result lives
    on the same grid. Queries are clamped: a feasible map keeps T inside the
    box up to round-off.
    """
    if grid.ndim == 1:
        xs = tmap.eval_grid(grid.axis_centers(0))
        return interpolate_values(grid, values, xs[:, None], clamp=True)
    TX, TY = tmap.eval_grid(grid.axis_centers(0), grid.axis_centers(1))
    pts = np.column_stack([TX.ravel(), TY.ravel()])
    return interpolate_values(grid, values, pts, clamp=True).reshape(grid.field_shape)


def map_stiffness(tmap: TransformMap, grid: Grid) -> float:
    """max over the mesh of max(||grad T||_F, ||grad T^-1||_F).

    For the 2x2 case the inverse norm is ||grad T||_F / |det|; in 1D the
    gradient is the scalar slope. Degenerate determinants return a huge but
    finite value so the optimizer sees a usable landscape.
    """
    if grid.ndim == 1:
        d = tmap.det_grid(grid.axis_centers(0))
        mag = np.abs(d)
        return float(max(mag.max(), 1.0 / max(mag.min(), 1e-30)))
    J = tmap.jacobian_grid(grid.axis_centers(0), grid.axis_centers(1))
    fro = np.sqrt((J**2).sum(axis=(-2, -1)))
    det = np.abs(J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0])
    inv_fro = fro / np.maximum(det, 1e-30)
    return float(np.maximum(fro, inv_fro).max())


def _neighbor_penalty(
    theta: np.ndarray, delta: float, neighbor: tuple[np.ndarray, float] | None
) -> float:
    if neighbor is None or delta == 0.0:
        return 0.0
    theta_nb, dist = neighbor
    rate = (theta - theta_nb) / max(dist, 1e-12)
    return 0.5 * delta * float(rate @ rate)


def residual_self_similar(
    theta: np.ndarray,
    snapshot: ScalarField,
    rho_bar: ScalarField,
    cgrid: ControlGrid,
    config: CalibrationConfig,
    *,
    neighbor: tuple[np.ndarray, float] | None = None,
) -> float:
    """Squared L2 mismatch of the pulled-back density against the reference,
    plus the smoothness and stiffness penalties."""
    try:
        tmap = map_from_theta(cgrid, theta)
    except MapConstructionError:
        return PENALTY_VALUE
    return _misfit_self_similar(snapshot.values, snapshot.grid, rho_bar.values, tmap, config) + _neighbor_penalty(
        np.asarray(theta, dtype=float), config.delta, neighbor
    )


def residual_projection(
    theta: np.ndarray,
    snapshot: ScalarField,
    basis: PODBasis,
    cgrid: ControlGrid,
    config: CalibrationConfig,
    *,
    n_modes: int | None = None,
    neighbor: tuple[np.ndarray, float] | None = None,
) -> float:
    """Distance of the pulled-back density from a fixed linear subspace,
    plus the smoothness and stiffness penalties. The misfit is the plain
    norm, not its square."""
    try:
        tmap = map_from_theta(cgrid, theta)
    except MapConstructionError:
        return PENALTY_VALUE
    return _misfit_projection(snapshot.values, snapshot.grid, basis, n_modes, tmap, config) + _neighbor_penalty(
        np.asarray(theta, dtype=float), config.delta, neighbor
    )


def _misfit_self_similar(values, grid, rho_bar_values, tmap, config) -> float:
    rho_hat = pullback_values(values, grid, tmap)
    diff = rho_hat - rho_bar_values
    r = float((diff**2).sum() * grid.cell_volume)
    if config.alpha > 0.0:
        r += 0.5 * config.alpha * map_stiffness(tmap, grid)
    return r


def _misfit_projection(values, grid, basis, n_modes, tmap, config) -> float:
    rho_hat = pullback_values(values, grid, tmap)
    r = basis.projection_error(rho_hat, n_modes)
    if config.alpha > 0.0:
        r += 0.5 * config.alpha * map_stiffness(tmap, grid)
    return r


# ---------------------------------------------------------------------------
# constrained minimization
# ---------------------------------------------------------------------------


class _MapCache:
    """Small LRU of theta -> map so the objective and the determinant
    constraint share one construction per evaluation point."""

    def __init__(self, cgrid: ControlGrid, maxlen: int = 64):
        self.cgrid = cgrid
        self.maxlen = maxlen
        self._store: OrderedDict[bytes, TransformMap | None] = OrderedDict()

    def get(self, theta: np.ndarray) -> TransformMap | None:
        key = np.ascontiguousarray(theta, dtype=float).tobytes()
        if key in self._store:
            self._store.move_to_end(key)
            return self._store[key]
        try:
            tmap: TransformMap | None = map_from_theta(self.cgrid, theta)
        except MapConstructionError:
            tmap = None
        self._store[key] = tmap
        if len(self._store) > self.maxlen:
            self._store.popitem(last=False)
        return tmap


@dataclass
class MinimizeRecord:
    theta: np.ndarray
    fun: float
    nit: int
    success: bool
    message: str


def _det_floor(tmap: TransformMap, screen: tuple[np.ndarray, ...]) -> float:
    return float(tmap.det_grid(*screen).min())


def minimize_constrained(
    objective: Callable[[np.ndarray, TransformMap], float],
    theta0: np.ndarray,
    cgrid: ControlGrid,
    config: CalibrationConfig,
    screen: tuple[np.ndarray, ...],
    *,
    cache: _MapCache | None = None,
) -> MinimizeRecord:
    """SLSQP over normalized coordinates with ordering and determinant
    constraints.

    ``objective`` receives (theta, map); construction failures score
    PENALTY_VALUE without reaching it. An infeasible start is projected onto
    the ordered set first, and the incumbent is kept whenever the solver
    fails to improve on a feasible start.
    """
    cache = cache or _MapCache(cgrid)
    lo, span = cgrid.coordinate_bounds()
    w0 = cgrid.project_feasible(cgrid.unpack(np.asarray(theta0, dtype=float)), config.gap_frac)
    th0 = cgrid.pack(w0)
    z0 = np.clip((th0 - lo) / span, 0.0, 1.0)

    def theta_of(z: np.ndarray) -> np.ndarray:
        return lo + span * z

    def fun(z: np.ndarray) -> float:
        th = theta_of(z)
        tmap = cache.get(th)
        if tmap is None:
            return PENALTY_VALUE
        return objective(th, tmap)

    A, b = cgrid.ordering_constraints(config.gap_frac)
    Az = A * span[None, :]
    bz = A @ lo + b

    def det_min(z: np.ndarray) -> float:
        tmap = cache.get(theta_of(z))
        if tmap is None:
            return -1.0
        return _det_floor(tmap, screen) - config.det_eps

    f0 = fun(z0)
    if config.max_iter == 0:
        return MinimizeRecord(th0, f0, 0, False, "iteration budget is zero")

    constraints = [
        {"type": "ineq", "fun": lambda z: Az @ z + bz, "jac": lambda z: Az},
        {"type": "ineq", "fun": det_min},
    ]
    res = minimize(
        fun,
        z0,
        method="SLSQP",
        bounds=[(0.0, 1.0)] * z0.size,
        constraints=constraints,
        options={"maxiter": config.max_iter, "ftol": config.ftol, "eps": config.fd_step},
    )
    z_opt = np.clip(res.x, 0.0, 1.0)
    f_opt = fun(z_opt)
    if f0 <= f_opt and det_min(z0) >= -1e-12:
        return MinimizeRecord(th0, f0, int(res.nit), bool(res.success), "kept feasible start")
    return MinimizeRecord(theta_of(z_opt), f_opt, int(res.nit), bool(res.success), str(res.message))


def _screen_axes(grid: Grid) -> tuple[np.ndarray, ...]:
    if grid.ndim == 1:
        return (grid.axis_centers(0),)
    return (grid.axis_centers(0), grid.axis_centers(1))


# ---------------------------------------------------------------------------
# parameter bookkeeping
# ---------------------------------------------------------------------------


@dataclass
class ParameterTable:
    """Snapshot parameters split into physical groups with time trajectories.

    Rows follow the archive. Groups collect snapshots sharing the physical
    (non-time) components, ordered by first appearance; inside a group the
    indices are sorted by ascending time. Distances are Euclidean after
    min-max normalization of every column.
    """

    mus: np.ndarray
    names: tuple[str, ...]
    time_col: int
    groups: list[list[int]]
    lo: np.ndarray
    span: np.ndarray

    @classmethod
    def from_archive(cls, archive, time_name: str = "t") -> "ParameterTable":
        names = tuple(archive.param_names)
        if time_name not in names:
            raise CalibrationError(
                f"archive parameters {names} lack a {time_name!r} column"
            )
        mus = np.atleast_2d(archive.mu_array().astype(float))
        time_col = names.index(time_name)
        phys_cols = [j for j in range(len(names)) if j != time_col]
        order: "OrderedDict[tuple, list[int]]" = OrderedDict()
        for i, row in enumerate(mus):
            key = tuple(row[phys_cols])
            order.setdefault(key, []).append(i)
        groups = [sorted(idx, key=lambda i: mus[i, time_col]) for idx in order.values()]
        lo = mus.min(axis=0)
        span = mus.max(axis=0) - lo
        return cls(mus, names, time_col, groups, lo, span)

    @property
    def n_snapshots(self) -> int:
        return self.mus.shape[0]

    def normalized(self, index: int) -> np.ndarray:
        safe = np.where(self.span > 0, self.span, 1.0)
        return (self.mus[index] - self.lo) / safe

    def distance(self, i: int, j: int) -> float:
        d = self.normalized(i) - self.normalized(j)
        return float(np.sqrt(d @ d))

    def nearest(self, index: int, pool: Sequence[int]) -> int | None:
        pool = [p for p in pool if p != index]
        if not pool:
            return None
        dists = [self.distance(index, p) for p in pool]
        return pool[int(np.argmin(dists))]

    def visitation_order(self) -> list[int]:
        """Last physical group first; inside a group, times descending."""
        return [i for group in reversed(self.groups) for i in reversed(group)]


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class ThetaRecord:
    index: int
    theta: np.ndarray
    residual: float
    nit: int
    success: bool


@dataclass
class CalibrationResult:
    """Optimal configurations for every archive snapshot.

    ``records`` is keyed by archive index; ``order`` is the visitation
    sequence the sweep used. ``extra`` carries route-specific metadata such
    as the reference snapshot index or the few-snapshot selection.
    """

    cgrid: ControlGrid
    config: CalibrationConfig
    mus: np.ndarray
    param_names: tuple[str, ...]
    records: dict[int, ThetaRecord] = field(default_factory=dict)
    order: list[int] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def theta(self, index: int) -> np.ndarray:
        return self.records[index].theta

    def thetas(self) -> np.ndarray:
        return np.stack([self.records[i].theta for i in range(len(self.records))])

    def points(self, index: int) -> np.ndarray:
        return self.cgrid.unpack(self.theta(index))

    def all_points(self) -> np.ndarray:
        return np.stack([self.points(i) for i in range(len(self.records))])

    def map_for(self, index: int) -> TransformMap:
        return map_from_theta(self.cgrid, self.theta(index))

    def failed_indices(self) -> list[int]:
        return [i for i, r in sorted(self.records.items()) if not r.success]

    def to_dict(self) -> dict:
        return {
            "format": "calibra-calibration",
            "version": 1,
            "control_grid": self.cgrid.to_dict(),
            "config": self.config.to_dict(),
            "param_names": list(self.param_names),
            "mus": self.mus.tolist(),
            "order": list(self.order),
            "extra": self.extra,
            "records": [
                {
                    "index": r.index,
                    "theta": r.theta.tolist(),
                    "residual": r.residual,
                    "nit": r.nit,
                    "success": r.success,
                }
                for _, r in sorted(self.records.items())
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationResult":
        if d.get("format") != "calibra-calibration":
            raise CalibrationError("not a calibration result payload")
        records = {
            int(r["index"]): ThetaRecord(
                int(r["index"]),
                np.asarray(r["theta"], dtype=float),
                float(r["residual"]),
                int(r["nit"]),
                bool(r["success"]),
            )
            for r in d["records"]
        }
        return cls(
            cgrid=ControlGrid.from_dict(d["control_grid"]),
            config=CalibrationConfig.from_dict(d["config"]),
            mus=np.asarray(d["mus"], dtype=float),
            param_names=tuple(d["param_names"]),
            records=records,
            order=[int(i) for i in d["order"]],
            extra=d.get("extra", {}),
        )

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w") as f:
            json.dump(self.to_dict(), f)
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "CalibrationResult":
        with open(path) as f:
            return cls.from_dict(json.load(f))


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def _algorithm_guess(
    table: ParameterTable,
    computed: dict[int, np.ndarray],
    group_pos: int,
    time_pos: int,
    theta_ref: np.ndarray,
) -> np.ndarray:
    """Warm start for the (group, time) cell of the reverse sweep.

    Prefer the optimum at the next time of the same trajectory, then the
    same time position of the previously visited trajectory; fall back to
    the nearest computed optimum, or the reference configuration when the
    sweep is just starting.
    """
    groups = table.groups
    group = groups[group_pos]
    if time_pos + 1 < len(group) and group[time_pos + 1] in computed:
        return computed[group[time_pos + 1]]
    if group_pos + 1 < len(groups):
        prev_group = groups[group_pos + 1]
        if time_pos < len(prev_group) and prev_group[time_pos] in computed:
            return computed[prev_group[time_pos]]
    if computed:
        idx = group[time_pos]
        nb = table.nearest(idx, list(computed))
        if nb is not None:
            return computed[nb]
    return theta_ref


def _sweep(
    archive,
    cgrid: ControlGrid,
    config: CalibrationConfig,
    table: ParameterTable,
    misfit_for: Callable[[int], Callable[[np.ndarray, TransformMap], float]],
    theta_ref: np.ndarray,
    *,
    progress: Callable[[int, MinimizeRecord], None] | None = None,
) -> tuple[dict[int, ThetaRecord], list[int]]:
    """Reverse-order calibration sweep shared by both routes."""
    screen = _screen_axes(archive.grid)
    cache = _MapCache(cgrid)
    computed: dict[int, np.ndarray] = {}
    records: dict[int, ThetaRecord] = {}
    order: list[int] = []
    for group_pos in reversed(range(len(table.groups))):
        group = table.groups[group_pos]
        for time_pos in reversed(range(len(group))):
            idx = group[time_pos]
            order.append(idx)
            guess = _algorithm_guess(table, computed, group_pos, time_pos, theta_ref)
            nb = table.nearest(idx, list(computed))
            neighbor = None
            if nb is not None:
                neighbor = (computed[nb], table.distance(idx, nb))
            misfit = misfit_for(idx)

            def objective(theta, tmap, _misfit=misfit, _nb=neighbor):
                return _misfit(theta, tmap) + _neighbor_penalty(theta, config.delta, _nb)

            rec = minimize_constrained(objective, guess, cgrid, config, screen, cache=cache)
            records[idx] = ThetaRecord(idx, rec.theta, rec.fun, rec.nit, rec.success)
            computed[idx] = rec.theta
            if progress is not None:
                progress(idx, rec)
    return records, order


def calibrate_self_similar(
    archive,
    cgrid: ControlGrid,
    config: CalibrationConfig,
    *,
    rho_bar_index: int | None = None,
    rho_bar: ScalarField | None = None,
    theta_ref: np.ndarray | None = None,
    progress: Callable[[int, MinimizeRecord], None] | None = None,
) -> CalibrationResult:
    """Calibrate every snapshot against one reference profile.

    The default reference is the final-time snapshot of the last physical
    trajectory, and the default control configuration is the reference grid
    itself (an identity map, which is the exact optimum for the reference
    snapshot)."""
    table = ParameterTable.from_archive(archive)
    if rho_bar is None:
        if rho_bar_index is None:
            rho_bar_index = table.groups[-1][-1]
        rho_bar = archive.density(rho_bar_index)
    bar_values = rho_bar.values
    if theta_ref is None:
        theta_ref = cgrid.pack(cgrid.ref_points())
    grid = archive.grid

    def misfit_for(idx: int):
        values = archive.density(idx).values

        def misfit(theta, tmap, _values=values):
            rho_hat = pullback_values(_values, grid, tmap)
            diff = rho_hat - bar_values
            r = float((diff**2).sum() * grid.cell_volume)
            if config.alpha > 0.0:
                r += 0.5 * config.alpha * map_stiffness(tmap, grid)
            return r

        return misfit

    records, order = _sweep(archive, cgrid, config, table, misfit_for, theta_ref, progress=progress)
    return CalibrationResult(
        cgrid=cgrid,
        config=config,
        mus=table.mus,
        param_names=table.names,
        records=records,
        order=order,
        extra={"route": "self-similar", "rho_bar_index": rho_bar_index},
    )


def select_few(n_total: int, n_few: int) -> list[int]:
    """Evenly strided subset used to seed the quasi-self-similar stage."""
    n_few = min(max(n_few, 1), n_total)
    return sorted(set(np.round(np.linspace(0, n_total - 1, n_few)).astype(int).tolist()))


def _joint_block_constraints(cgrid: ControlGrid, config: CalibrationConfig, n_blocks: int):
    A, b = cgrid.ordering_constraints(config.gap_frac)
    lo, span = cgrid.coordinate_bounds()
    A_big = np.kron(np.eye(n_blocks), A * span[None, :])
    b_big = np.tile(A @ lo + b, n_blocks)
    return A_big, b_big, lo, span


def calibrate_quasi(
    archive,
    cgrid: ControlGrid,
    config: CalibrationConfig,
    *,
    theta_ref: np.ndarray | None = None,
    progress: Callable[[int, MinimizeRecord], None] | None = None,
) -> CalibrationResult:
    """Two-stage calibration without a hand-picked reference profile.

    Stage one jointly calibrates a strided subset of snapshots so that each
    pulled-back density is well captured by a small POD basis recomputed
    from the subset at every objective evaluation. Stage two freezes that
    basis and sweeps all snapshots against it with the projection residual.
    """
    table = ParameterTable.from_archive(archive)
    grid = archive.grid
    few = select_few(table.n_snapshots, config.n_few)
    if theta_ref is None:
        theta_ref = cgrid.pack(cgrid.ref_points())
    Q = cgrid.n_free
    screen = _screen_axes(grid)
    cache = _MapCache(cgrid, maxlen=4 * len(few))
    few_values = [archive.density(i).values for i in few]

    A_big, b_big, lo, span = _joint_block_constraints(cgrid, config, len(few))
    z0 = np.tile(np.clip((theta_ref - lo) / span, 0.0, 1.0), len(few))

    def blocks_of(zflat: np.ndarray) -> list[np.ndarray]:
        return [lo + span * zflat[k * Q : (k + 1) * Q] for k in range(len(few))]

    def maps_of(zflat: np.ndarray) -> list[TransformMap] | None:
        maps = []
        for th in blocks_of(zflat):
            m = cache.get(th)
            if m is None:
                return None
            maps.append(m)
        return maps

    n_pod = min(config.n_few_pod, len(few))

    def joint_objective(zflat: np.ndarray) -> float:
        maps = maps_of(zflat)
        if maps is None:
            return PENALTY_VALUE * len(few)
        pulled = np.stack(
            [pullback_values(v, grid, m) for v, m in zip(few_values, maps)]
        )
        basis = compress(pulled, grid, tol=0.0, cap=n_pod)
        n = min(n_pod, basis.n_stored)
        r = sum(basis.projection_error(p, n) for p in pulled)
        if config.alpha > 0.0:
            r += 0.5 * config.alpha * sum(map_stiffness(m, grid) for m in maps)
        return float(r)

    def joint_det_min(zflat: np.ndarray) -> float:
        maps = maps_of(zflat)
        if maps is None:
            return -1.0
        return min(_det_floor(m, screen) for m in maps) - config.det_eps

    constraints = [
        {"type": "ineq", "fun": lambda z: A_big @ z + b_big, "jac": lambda z: A_big},
        {"type": "ineq", "fun": joint_det_min},
    ]
    stage1_nit = 0
    if config.max_iter > 0:
        res = minimize(
            joint_objective,
            z0,
            method="SLSQP",
            bounds=[(0.0, 1.0)] * z0.size,
            constraints=constraints,
            options={"maxiter": config.max_iter, "ftol": config.ftol, "eps": config.fd_step},
        )
        z_opt = np.clip(res.x, 0.0, 1.0)
        if joint_objective(z_opt) > joint_objective(z0) or joint_det_min(z_opt) < -1e-12:
            z_opt = z0
        stage1_nit = int(res.nit)
    else:
        z_opt = z0

    few_maps = maps_of(z_opt)
    if few_maps is None:
        raise CalibrationError("stage-one optimum does not define valid maps")
    pulled = np.stack([pullback_values(v, grid, m) for v, m in zip(few_values, few_maps)])
    basis = compress(pulled, grid, tol=0.0, cap=n_pod)
    n_modes = min(n_pod, basis.n_stored)

    def misfit_for(idx: int):
        values = archive.density(idx).values

        def misfit(theta, tmap, _values=values):
            rho_hat = pullback_values(_values, grid, tmap)
            r = basis.projection_error(rho_hat, n_modes)
            if config.alpha > 0.0:
                r += 0.5 * config.alpha * map_stiffness(tmap, grid)
            return r

        return misfit

    records, order = _sweep(archive, cgrid, config, table, misfit_for, theta_ref, progress=progress)
    result = CalibrationResult(
        cgrid=cgrid,
        config=config,
        mus=table.mus,
        param_names=table.names,
        records=records,
        order=order,
        extra={
            "route": "quasi-self-similar",
            "few_indices": list(few),
            "stage1_nit": stage1_nit,
            "n_modes": int(n_modes),
        },
    )
    return result


# ---------------------------------------------------------------------------
# error measures
# ---------------------------------------------------------------------------


def calibration_error_characteristics(thetas: np.ndarray, exact: np.ndarray) -> np.ndarray:
    """Per-snapshot l1 distance between computed and exact configurations."""
    thetas = np.atleast_2d(thetas)
    exact = np.atleast_2d(exact)
    return np.abs(thetas - exact).sum(axis=1)


def calibration_error_projection(rho_hat: ScalarField, rho_bar: ScalarField) -> float:
    """Squared L2 distance of the calibrated snapshot from span{reference}."""
    vol = rho_hat.grid.cell_volume
    num = float((rho_hat.values * rho_bar.values).sum() * vol)
    den = float((rho_bar.values**2).sum() * vol)
    resid = rho_hat.values - (num / den) * rho_bar.values
    return float((resid**2).sum() * vol)


# ---------------------------------------------------------------------------
# validation studies
# ---------------------------------------------------------------------------


def _study_solve(
    archive,
    idx: int,
    cgrid: ControlGrid,
    config: CalibrationConfig,
    guess: np.ndarray,
    rho_bar_values: np.ndarray,
    cache: _MapCache,
    neighbor: tuple[np.ndarray, float] | None = None,
) -> MinimizeRecord:
    grid = archive.grid
    values = archive.density(idx).values

    def objective(theta, tmap):
        rho_hat = pullback_values(values, grid, tmap)
        diff = rho_hat - rho_bar_values
        r = float((diff**2).sum() * grid.cell_volume)
        if config.alpha > 0.0:
            r += 0.5 * config.alpha * map_stiffness(tmap, grid)
        return r + _neighbor_penalty(theta, config.delta, neighbor)

    return minimize_constrained(objective, guess, cgrid, config, _screen_axes(grid), cache=cache)


def _control_from_positions(grid: Grid, positions: np.ndarray) -> ControlGrid:
    return ControlGrid.from_axes((grid.lo[0],), (grid.hi[0],), [np.asarray(positions, dtype=float)])


def _study_error(
    archive,
    idx: int,
    theta: np.ndarray,
    cgrid: ControlGrid,
    mode: str,
    exact_positions: Callable[[np.ndarray], np.ndarray] | None,
    rho_bar: ScalarField,
    table: ParameterTable,
) -> float:
    if mode == "exact":
        target = np.asarray(exact_positions(table.mus[idx]), dtype=float)
        return float(np.abs(theta - target).sum())
    tmap = map_from_theta(cgrid, theta)
    rho_hat = ScalarField(archive.grid, pullback_values(archive.density(idx).values, archive.grid, tmap))
    return calibration_error_projection(rho_hat, rho_bar)


def run_guess_study(
    archive,
    config: CalibrationConfig,
    *,
    mode: str = "exact",
    exact_positions: Callable[[np.ndarray], np.ndarray] | None = None,
    n_interior: int = 4,
    reference_stride: int = 1,
    target_stride: int = 1,
) -> list[dict]:
    """Sensitivity of single-snapshot calibration to the reference choice.

    Every subsampled snapshot in turn plays the reference; every other
    subsampled snapshot is calibrated against it independently (no neighbor
    coupling). In ``exact`` mode the control points sit on the exact wave
    positions of the reference and errors are l1 distances from the exact
    positions of the target; in ``equispaced`` mode the control points are
    fixed interior fractions and errors are squared projection distances
    from span{reference}.
    """
    if mode not in ("exact", "equispaced"):
        raise CalibrationError(f"unknown guess-study mode {mode!r}")
    if mode == "exact" and exact_positions is None:
        raise CalibrationError("exact mode needs an exact_positions callable")
    table = ParameterTable.from_archive(archive)
    refs = list(range(table.n_snapshots))[::reference_stride]
    targets = list(range(table.n_snapshots))[::target_stride]
    rows: list[dict] = []
    for r in refs:
        if mode == "exact":
            positions = np.asarray(exact_positions(table.mus[r]), dtype=float)
            cgrid = _control_from_positions(archive.grid, positions)
        else:
            cgrid = ControlGrid.interior_equispaced(
                (archive.grid.lo[0],), (archive.grid.hi[0],), (n_interior,)
            )
        theta_ref = cgrid.pack(cgrid.ref_points())
        rho_bar = archive.density(r)
        cache = _MapCache(cgrid)
        for t in targets:
            rec = _study_solve(archive, t, cgrid, config, theta_ref, rho_bar.values, cache)
            err = _study_error(archive, t, rec.theta, cgrid, mode, exact_positions, rho_bar, table)
            rows.append(
                {
                    "reference_t": float(table.mus[r, table.time_col]),
                    "target_t": float(table.mus[t, table.time_col]),
                    "error": err,
                    "nit": rec.nit,
                    "success": rec.success,
                }
            )
    return rows


def run_order_study(
    archive,
    config: CalibrationConfig,
    *,
    mode: str = "exact",
    exact_positions: Callable[[np.ndarray], np.ndarray] | None = None,
    n_interior: int = 4,
    strategies: Sequence[str] = ORDER_STRATEGIES,
) -> list[dict]:
    """Effect of the sweep direction and warm-start policy on calibration.

    T2B starts at the final time and walks backwards chaining guesses; B2T
    starts at the initial time and walks forward; the 10-suffixed variants
    keep every tenth snapshot of the walk. Fixed walks like T2B but reuses
    the first computed optimum as the guess everywhere. The reference
    profile is the snapshot where the walk starts.
    """
    if mode not in ("exact", "equispaced"):
        raise CalibrationError(f"unknown order-study mode {mode!r}")
    if mode == "exact" and exact_positions is None:
        raise CalibrationError("exact mode needs an exact_positions callable")
    table = ParameterTable.from_archive(archive)
    n = table.n_snapshots
    rows: list[dict] = []
    for strategy in strategies:
        if strategy not in ORDER_STRATEGIES:
            raise CalibrationError(f"unknown order-study strategy {strategy!r}")
        descending = strategy in ("T2B", "T2B10", "Fixed")
        walk = list(reversed(range(n))) if descending else list(range(n))
        if strategy.endswith("10"):
            walk = walk[::10]
        ref_idx = walk[0]
        if mode == "exact":
            positions = np.asarray(exact_positions(table.mus[ref_idx]), dtype=float)
            cgrid = _control_from_positions(archive.grid, positions)
        else:
            cgrid = ControlGrid.interior_equispaced(
                (archive.grid.lo[0],), (archive.grid.hi[0],), (n_interior,)
            )
        theta_ref = cgrid.pack(cgrid.ref_points())
        rho_bar = archive.density(ref_idx)
        cache = _MapCache(cgrid)
        computed: dict[int, np.ndarray] = {}
        fixed_guess: np.ndarray | None = None
        for idx in walk:
            if not computed:
                guess = theta_ref
            elif strategy == "Fixed":
                guess = fixed_guess
            else:
                guess = computed[prev_idx]
            nb = table.nearest(idx, list(computed))
            neighbor = (computed[nb], table.distance(idx, nb)) if nb is not None else None
            rec = _study_solve(archive, idx, cgrid, config, guess, rho_bar.values, cache, neighbor)
            computed[idx] = rec.theta
            if fixed_guess is None:
                fixed_guess = rec.theta
            prev_idx = idx
            err = _study_error(archive, idx, rec.theta, cgrid, mode, exact_positions, rho_bar, table)
            rows.append(
                {
                    "strategy": strategy,
                    "target_t": float(table.mus[idx, table.time_col]),
                    "error": err,
                    "nit": rec.nit,
                    "success": rec.success,
                }
            )
    return rows

"""Offline build and online evaluation of the calibrated reduced models.

The offline phase calibrates the training snapshots, fits a network from
parameters to control points, pulls every snapshot back through its
predicted map, and compresses both the pulled-back (ALE) and the raw
(Eulerian) families per conserved component, with one coefficient network
each. The online phase is simulation-free: predict points, build the map,
predict coefficients, reconstruct on the reference domain, and push the
field forward by evaluating it at the preimages of the physical centers.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from calibra.archive import FieldArchive
from calibra.calibration import (
    CalibrationConfig,
    CalibrationError,
    CalibrationResult,
    ParameterTable,
    calibrate_quasi,
    calibrate_self_similar,
    pullback_values,
)
from calibra.grids import Grid, ScalarField, interpolate_values
from calibra.mapping import MapInversionError, TransformMap
from calibra.net import MLP, CalibrationNet, TrainingError
from calibra.pod import PODBasis, ReductionError, compress

__all__ = [
    "OnlineError",
    "PodConfig",
    "NetConfig",
    "OfflineArtifacts",
    "OnlineSolution",
    "offline_build",
    "online_solve",
    "error_report",
    "write_error_csv",
    "eigenvalue_comparison",
]


class OnlineError(RuntimeError):
    pass


@dataclass(frozen=True)
class PodConfig:
    """Energy tolerance and optional hard cap on retained modes."""

    tol: float = 1e-4
    cap: int | None = None


@dataclass(frozen=True)
class NetConfig:
    """Architecture and schedule for one regression network."""

    hidden_layers: int = 4
    width: int = 16
    epochs: int = 10000
    tol: float = 1e-5
    lr: float = 1e-3
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "hidden_layers": self.hidden_layers,
            "width": self.width,
            "epochs": self.epochs,
            "tol": self.tol,
            "lr": self.lr,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetConfig":
        return cls(**d)


CALIBRATION_NET_CONFIG = NetConfig(epochs=20000, tol=1e-6)
COEFFICIENT_NET_CONFIG = NetConfig(epochs=10000, tol=1e-5)


@dataclass
class OfflineArtifacts:
    """Everything the online phase needs, plus the Eulerian baseline."""

    grid: Grid
    calibration: CalibrationResult
    net: CalibrationNet
    ale_bases: dict[str, PODBasis]
    eulerian_bases: dict[str, PODBasis]
    ale_coeff_nets: dict[str, MLP]
    eulerian_coeff_nets: dict[str, MLP]
    param_names: tuple[str, ...]
    window: dict = field(default_factory=dict)

    @property
    def cgrid(self):
        return self.calibration.cgrid

    def components(self) -> tuple[str, ...]:
        return tuple(self.ale_bases)

    # -- persistence ---------------------------------------------------------

    def save(self, root: str | Path) -> None:
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        self.calibration.save(root / "calibration.json")
        self.net.save(root / "calibration_net.json")
        for kind, bases in (("ale", self.ale_bases), ("eulerian", self.eulerian_bases)):
            for comp, basis in bases.items():
                basis.save(root / "bases" / f"{kind}_{comp}")
        nets = {
            "ale": {c: n.to_dict() for c, n in self.ale_coeff_nets.items()},
            "eulerian": {c: n.to_dict() for c, n in self.eulerian_coeff_nets.items()},
        }
        with open(root / "coefficient_nets.json", "w") as f:
            json.dump(nets, f)
        manifest = {
            "format": "calibra-artifacts",
            "version": 1,
            "grid": self.grid.to_dict(),
            "param_names": list(self.param_names),
            "components": list(self.ale_bases),
            "window": self.window,
        }
        with open(root / "manifest.json", "w") as f:
            json.dump(manifest, f, indent=2)

    @classmethod
    def load(cls, root: str | Path) -> "OfflineArtifacts":
        root = Path(root)
        with open(root / "manifest.json") as f:
            m = json.load(f)
        if m.get("format") != "calibra-artifacts":
            raise OnlineError(f"{root} does not hold offline artifacts")
        comps = list(m["components"])
        with open(root / "coefficient_nets.json") as f:
            nets = json.load(f)
        return cls(
            grid=Grid.from_dict(m["grid"]),
            calibration=CalibrationResult.load(root / "calibration.json"),
            net=CalibrationNet.load(root / "calibration_net.json"),
            ale_bases={c: PODBasis.load(root / "bases" / f"ale_{c}") for c in comps},
            eulerian_bases={c: PODBasis.load(root / "bases" / f"eulerian_{c}") for c in comps},
            ale_coeff_nets={c: MLP.from_dict(nets["ale"][c]) for c in comps},
            eulerian_coeff_nets={c: MLP.from_dict(nets["eulerian"][c]) for c in comps},
            param_names=tuple(m["param_names"]),
            window=m.get("window", {}),
        )


def offline_build(
    archive: FieldArchive,
    cal_config: CalibrationConfig,
    pod_config: PodConfig,
    *,
    cgrid=None,
    route: str = "self-similar",
    rho_bar_index: int | None = None,
    components: Sequence[str] | None = None,
    window: tuple[float, float] | None = None,
    cal_net_config: NetConfig = CALIBRATION_NET_CONFIG,
    coeff_net_config: NetConfig = COEFFICIENT_NET_CONFIG,
    calibration: CalibrationResult | None = None,
    progress: Callable[[str], None] | None = None,
) -> OfflineArtifacts:
    """Run the whole training pipeline on a snapshot archive.

    ``route`` picks the calibration sweep; a precomputed ``calibration``
    skips it. Calibration and its network always use the full archive;
    ``window`` restricts the compression and the coefficient networks to a
    time sub-interval (early transition times are usually left out). The
    ALE compression uses maps rebuilt from the network's predictions, not
    the raw optima, so the stored bases match exactly what the online phase
    will see.
    """

    def say(stage: str) -> None:
        if progress is not None:
            progress(stage)

    grid = archive.grid
    if components is None:
        components = grid.components
    components = tuple(components)
    for c in components:
        if c not in grid.components:
            raise CalibrationError(f"unknown component {c!r}; grid has {grid.components}")

    if calibration is None:
        say("calibration")
        if cgrid is None:
            raise CalibrationError("offline build needs a control grid")
        if route == "self-similar":
            calibration = calibrate_self_similar(
                archive, cgrid, cal_config, rho_bar_index=rho_bar_index
            )
        elif route == "quasi":
            calibration = calibrate_quasi(archive, cgrid, cal_config)
        else:
            raise CalibrationError(f"unknown calibration route {route!r}")
    cgrid = calibration.cgrid

    say("calibration network")
    table = ParameterTable.from_archive(archive)
    try:
        net, _ = CalibrationNet.fit(
            cgrid,
            calibration.mus,
            calibration.all_points(),
            hidden_layers=cal_net_config.hidden_layers,
            width=cal_net_config.width,
            epochs=cal_net_config.epochs,
            tol=cal_net_config.tol,
            lr=cal_net_config.lr,
            seed=cal_net_config.seed,
            gap_frac=cal_config.gap_frac,
        )
    except TrainingError as e:
        raise CalibrationError(f"calibration network training failed: {e}") from e

    say("compression")
    t_all = table.mus[:, table.time_col]
    if window is None:
        train_idx = list(range(len(archive)))
    else:
        t_lo, t_hi = window
        train_idx = [
            i for i in range(len(archive)) if t_lo - 1e-12 <= t_all[i] <= t_hi + 1e-12
        ]
        if not train_idx:
            raise ReductionError(f"training window {window} selects no snapshots")
    maps = {i: net.predict_map(table.mus[i]) for i in train_idx}
    ale_bases: dict[str, PODBasis] = {}
    eul_bases: dict[str, PODBasis] = {}
    raw: dict[str, np.ndarray] = {}
    pulled: dict[str, np.ndarray] = {}
    for comp in components:
        snaps = np.stack([archive.load(i).component(comp).values for i in train_idx])
        back = np.stack(
            [pullback_values(s, grid, maps[i]) for s, i in zip(snaps, train_idx)]
        )
        raw[comp] = snaps
        pulled[comp] = back
        eul_bases[comp] = compress(snaps, grid, tol=pod_config.tol, cap=pod_config.cap)
        ale_bases[comp] = compress(back, grid, tol=pod_config.tol, cap=pod_config.cap)

    say("coefficient networks")
    train_mus = table.mus[train_idx]
    ale_nets: dict[str, MLP] = {}
    eul_nets: dict[str, MLP] = {}
    for comp in components:
        for kind, basis, data, out in (
            ("ale", ale_bases[comp], pulled[comp], ale_nets),
            ("eulerian", eul_bases[comp], raw[comp], eul_nets),
        ):
            coeffs = np.stack([basis.project(d) for d in data])
            mlp = MLP(
                train_mus.shape[1],
                coeffs.shape[1],
                hidden_layers=coeff_net_config.hidden_layers,
                width=coeff_net_config.width,
                seed=coeff_net_config.seed,
            )
            try:
                mlp.train(
                    train_mus,
                    coeffs,
                    epochs=coeff_net_config.epochs,
                    tol=coeff_net_config.tol,
                    lr=coeff_net_config.lr,
                )
            except TrainingError as e:
                raise ReductionError(
                    f"{kind} coefficient network for {comp!r} failed: {e}"
                ) from e
            out[comp] = mlp

    window_manifest = {
        "n_snapshots": len(train_idx),
        "indices": [int(i) for i in train_idx],
        "t_min": float(t_all[train_idx].min()),
        "t_max": float(t_all[train_idx].max()),
        "param_names": list(table.names),
    }
    return OfflineArtifacts(
        grid=grid,
        calibration=calibration,
        net=net,
        ale_bases=ale_bases,
        eulerian_bases=eul_bases,
        ale_coeff_nets=ale_nets,
        eulerian_coeff_nets=eul_nets,
        param_names=table.names,
        window=window_manifest,
    )


# ---------------------------------------------------------------------------
# online phase
# ---------------------------------------------------------------------------


@dataclass
class OnlineSolution:
    mu: np.ndarray
    n_modes: int
    reference: ScalarField
    physical: ScalarField
    tmap: TransformMap
    elapsed: float


def pushforward_values(values_ref: np.ndarray, grid: Grid, tmap: TransformMap) -> np.ndarray:
    """Reference field carried to the physical mesh: values(T^-1(x))."""
    pts = grid.centers()
    try:
        pre = tmap.inverse(pts)
    except MapInversionError as e:
        if grid.ndim == 1:
            dets = tmap.det_grid(grid.axis_centers(0))
        else:
            dets = tmap.det_grid(grid.axis_centers(0), grid.axis_centers(1))
        raise OnlineError(
            f"map inversion failed ({e}); det(grad T) range "
            f"[{dets.min():.3e}, {dets.max():.3e}]"
        ) from e
    vals = interpolate_values(grid, values_ref, pre, clamp=True)
    return vals.reshape(grid.field_shape)


def _predict_coeffs(artifacts: OfflineArtifacts, kind: str, comp: str, mu, n: int):
    nets = artifacts.ale_coeff_nets if kind == "ale" else artifacts.eulerian_coeff_nets
    coeffs = nets[comp].predict(np.atleast_2d(np.asarray(mu, dtype=float)))[0]
    return coeffs[:n]


def coeff_limit(artifacts: OfflineArtifacts, comp: str, kind: str) -> int:
    """Largest mode count the regression route can serve for a component."""
    bases = artifacts.ale_bases if kind == "ale" else artifacts.eulerian_bases
    nets = artifacts.ale_coeff_nets if kind == "ale" else artifacts.eulerian_coeff_nets
    limit = bases[comp].n_stored
    if comp in nets:
        limit = min(limit, nets[comp].W[-1].shape[0])
    return limit


def _check_request(artifacts: OfflineArtifacts, comp: str, n_modes: int | None, kind: str) -> int:
    bases = artifacts.ale_bases if kind == "ale" else artifacts.eulerian_bases
    if comp not in bases:
        raise OnlineError(f"no {kind} basis for component {comp!r}")
    limit = coeff_limit(artifacts, comp, kind)
    n = bases[comp].n_active if n_modes is None else int(n_modes)
    if not 1 <= n <= limit:
        raise OnlineError(
            f"requested {n} modes; the {kind} route for {comp!r} serves up to {limit}"
        )
    return n


def online_solve(
    artifacts: OfflineArtifacts,
    mu,
    n_modes: int | None = None,
    *,
    component: str = "rho",
) -> OnlineSolution:
    """Simulation-free reduced solution at one parameter value."""
    n = _check_request(artifacts, component, n_modes, "ale")
    mu = np.asarray(mu, dtype=float)
    t0 = time.perf_counter()
    points = artifacts.net.predict_points(mu)
    tmap = TransformMap(artifacts.cgrid, points)
    coeffs = _predict_coeffs(artifacts, "ale", component, mu, n)
    ref_vals = artifacts.ale_bases[component].reconstruct(coeffs)
    phys_vals = pushforward_values(ref_vals, artifacts.grid, tmap)
    elapsed = time.perf_counter() - t0
    return OnlineSolution(
        mu=mu,
        n_modes=n,
        reference=ScalarField(artifacts.grid, ref_vals),
        physical=ScalarField(artifacts.grid, phys_vals),
        tmap=tmap,
        elapsed=elapsed,
    )


def eulerian_solve(
    artifacts: OfflineArtifacts,
    mu,
    n_modes: int | None = None,
    *,
    component: str = "rho",
) -> ScalarField:
    """Classical POD-regression solution, no map."""
    n = _check_request(artifacts, component, n_modes, "eulerian")
    coeffs = _predict_coeffs(artifacts, "eulerian", component, mu, n)
    return ScalarField(artifacts.grid, artifacts.eulerian_bases[component].reconstruct(coeffs))


# ---------------------------------------------------------------------------
# error reports
# ---------------------------------------------------------------------------


def _rel_l2(approx: np.ndarray, truth: np.ndarray, grid: Grid) -> float:
    num = float(np.sqrt(((approx - truth) ** 2).sum() * grid.cell_volume))
    den = float(np.sqrt((truth**2).sum() * grid.cell_volume))
    return num / den if den > 0 else num


def error_report(
    artifacts: OfflineArtifacts,
    archive: FieldArchive,
    n_list: Sequence[int],
    *,
    component: str = "rho",
    indices: Sequence[int] | None = None,
) -> list[dict]:
    """Relative physical-domain errors of the four reduced routes.

    Per snapshot and mode count: the two regression ROMs (``eulerian``,
    ``ale``) and the two best-approximation baselines (``*_proj``), where
    the truth itself is projected on the basis. The ALE baselines use the
    predicted map for the pullback and its inverse for the comparison, so
    they include the interpolation floor of the map round trip.
    """
    grid = artifacts.grid
    if tuple(archive.grid.to_dict().items()) != tuple(grid.to_dict().items()):
        raise OnlineError("test archive and artifacts use different grids")
    n_snaps = len(archive)
    idx = list(range(n_snaps)) if indices is None else list(indices)
    mus = archive.mu_array()
    names = tuple(archive.param_names)
    ale_basis = artifacts.ale_bases[component]
    eul_basis = artifacts.eulerian_bases[component]
    rows: list[dict] = []
    for i in idx:
        truth = archive.load(i).component(component).values
        mu = mus[i]
        points = artifacts.net.predict_points(mu)
        tmap = TransformMap(artifacts.cgrid, points)
        pulled = pullback_values(truth, grid, tmap)
        for n in n_list:
            n_ale = min(int(n), coeff_limit(artifacts, component, "ale"))
            n_eul = min(int(n), coeff_limit(artifacts, component, "eulerian"))
            ale = online_solve(artifacts, mu, n_ale, component=component).physical.values
            eul = eulerian_solve(artifacts, mu, n_eul, component=component).values
            ale_proj = pushforward_values(
                ale_basis.reconstruct(
                    ale_basis.project(pulled, min(int(n), ale_basis.n_stored))
                ),
                grid,
                tmap,
            )
            eul_proj = eul_basis.reconstruct(
                eul_basis.project(truth, min(int(n), eul_basis.n_stored))
            )
            row = {name: float(mu[j]) for j, name in enumerate(names)}
            row.update(
                {
                    "N": int(n),
                    "eulerian": _rel_l2(eul, truth, grid),
                    "ale": _rel_l2(ale, truth, grid),
                    "eulerian_proj": _rel_l2(eul_proj, truth, grid),
                    "ale_proj": _rel_l2(ale_proj, truth, grid),
                }
            )
            rows.append(row)
    return rows


def write_error_csv(rows: Sequence[dict], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        raise OnlineError("no error rows to write")
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def eigenvalue_comparison(artifacts: OfflineArtifacts, path: str | Path | None = None) -> list[dict]:
    """Normalized spectra of both compressions, side by side per component."""
    rows: list[dict] = []
    for comp in artifacts.components():
        eul = dict(artifacts.eulerian_bases[comp].eigenvalue_rows())
        ale = dict(artifacts.ale_bases[comp].eigenvalue_rows())
        for k in sorted(set(eul) | set(ale)):
            rows.append(
                {
                    "component": comp,
                    "k": k,
                    "eulerian_ratio": eul.get(k, float("nan")),
                    "ale_ratio": ale.get(k, float("nan")),
                }
            )
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=["component", "k", "eulerian_ratio", "ale_ratio"])
            writer.writeheader()
            writer.writerows(rows)
    return rows

"""Command-line interface.

Subcommands mirror the pipeline stages (fom, calibrate, study, offline,
online, errors, eigs) plus end-to-end presets (run) and config checking
(validate). Exit codes identify the failing stage: 0 ok, 2 configuration,
3 flow solve, 4 calibration, 5 reduction, 6 online.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path


def _cap_threads() -> None:
    threads = os.environ.get("CALIBRA_THREADS", "").strip()
    if threads.isdigit() and int(threads) > 0:
        for var in (
            "OMP_NUM_THREADS",
            "OPENBLAS_NUM_THREADS",
            "MKL_NUM_THREADS",
            "NUMEXPR_NUM_THREADS",
        ):
            os.environ.setdefault(var, threads)


# ---------------------------------------------------------------------------
# small parsers
# ---------------------------------------------------------------------------


def _parse_grid(text: str) -> list[int]:
    from calibra.presets import ConfigError

    try:
        parts = [int(p) for p in text.lower().split("x")]
    except ValueError:
        raise ConfigError(f"--grid expects NX or NXxNY, got {text!r}") from None
    if len(parts) not in (1, 2) or any(p < 8 for p in parts):
        raise ConfigError(f"--grid expects 1 or 2 sizes of at least 8, got {text!r}")
    return parts


def _parse_snapshots(text: str):
    from calibra.presets import ConfigError

    if "," in text or "." in text:
        try:
            return [float(p) for p in text.split(",") if p.strip()]
        except ValueError:
            raise ConfigError(f"--snapshots expects a count or times, got {text!r}") from None
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"--snapshots expects a count or times, got {text!r}") from None


def _parse_params(pairs: list[str]) -> dict[str, float]:
    from calibra.presets import ConfigError

    out: dict[str, float] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--param expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"--param {key}: {value!r} is not a number") from None
    return out


def _parse_control(text: str) -> list[int]:
    from calibra.presets import ConfigError

    try:
        parts = [int(p) for p in text.lower().split("x")]
    except ValueError:
        raise ConfigError(f"--control expects M1 or M1xM2, got {text!r}") from None
    if len(parts) not in (1, 2) or any(p < 2 for p in parts):
        raise ConfigError(f"--control sizes must be at least 2, got {text!r}")
    return parts


def _control_grid(args, grid):
    """Control grid from --control / --refpoints flags."""
    from calibra.mapping import ControlGrid
    from calibra.presets import ConfigError

    if args.refpoints != "auto":
        groups = args.refpoints.split("/")
        if len(groups) != grid.ndim:
            raise ConfigError(
                f"--refpoints needs {grid.ndim} axis list(s) separated by '/', got {args.refpoints!r}"
            )
        try:
            axes = [[float(v) for v in g.split(",") if v.strip()] for g in groups]
        except ValueError:
            raise ConfigError(f"--refpoints holds a non-number: {args.refpoints!r}") from None
        return ControlGrid.from_axes(grid.lo, grid.hi, axes)
    shape = _parse_control(args.control)
    if len(shape) != grid.ndim:
        raise ConfigError(f"--control has {len(shape)} sizes for a {grid.ndim}D archive")
    return ControlGrid.spanning(grid.lo, grid.hi, tuple(shape))


def _write_csv(rows: list[dict], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def cmd_fom(args) -> int:
    from calibra.archive import FieldArchive
    from calibra.presets import ConfigError, build_problem, snapshot_times

    params = _parse_params(args.param)
    config = {"case": args.case, "cfl": args.cfl, "params": params}
    if args.grid:
        config["grid"] = _parse_grid(args.grid)
    if args.tf:
        config["t_final"] = args.tf
    problem = build_problem(config, None)
    config["t_final"] = problem.t_final
    snaps = _parse_snapshots(args.snapshots)
    config["snapshots"] = snaps
    times = snapshot_times(config)

    from calibra.solver import run_fom

    out = Path(args.out)
    if (out / "manifest.json").exists():
        raise ConfigError(f"refusing to overwrite existing archive at {out}")
    print(f"[fom] {args.case} on {problem.grid.shape}, {len(times)} snapshots to t={times[-1]:g}")
    t0 = time.perf_counter()
    from calibra.grids import ConservedField

    times_done, snaps_u = run_fom(problem, times)
    archive = FieldArchive.create(
        out,
        problem.grid,
        ["t"],
        extra={"case": args.case, "params": params, "cfl": args.cfl, "t_final": problem.t_final},
    )
    for t, u in zip(times_done, snaps_u):
        archive.append([float(t)], ConservedField(problem.grid, u))
    print(f"[fom] wrote {len(times_done)} snapshots to {out} in {time.perf_counter() - t0:.1f}s")
    return 0


def _calibration_config(args):
    from calibra.calibration import CalibrationConfig

    kwargs = {}
    for name in ("delta", "alpha", "max_iter", "det_eps", "gap_frac"):
        value = getattr(args, name, None)
        if value is not None:
            kwargs[name] = value
    if getattr(args, "few", None) is not None:
        kwargs["n_few"] = args.few
    if getattr(args, "fewpod", None) is not None:
        kwargs["n_few_pod"] = args.fewpod
    return CalibrationConfig(**kwargs)


def _run_calibration(archive, cgrid, config, mode: str):
    from calibra.calibration import calibrate_quasi, calibrate_self_similar

    if mode == "self":
        return calibrate_self_similar(archive, cgrid, config)
    return calibrate_quasi(archive, cgrid, config)


def _calibration_rows(result) -> list[dict]:
    rows = []
    for i in sorted(result.records):
        rec = result.records[i]
        row = {name: float(result.mus[i, j]) for j, name in enumerate(result.param_names)}
        row.update({"index": i, "residual": rec.residual, "nit": rec.nit, "success": rec.success})
        for q, v in enumerate(rec.theta):
            row[f"theta{q}"] = float(v)
        rows.append(row)
    return rows


def cmd_calibrate(args) -> int:
    from calibra.archive import FieldArchive

    archive = FieldArchive.open(args.archive)
    cgrid = _control_grid(args, archive.grid)
    config = _calibration_config(args)
    mode = args.mode
    print(
        f"[calibrate] {len(archive)} snapshots, {cgrid.n_free} free coordinates, mode {mode}"
    )
    t0 = time.perf_counter()
    result = _run_calibration(archive, cgrid, config, mode)
    failed = result.failed_indices()
    print(
        f"[calibrate] done in {time.perf_counter() - t0:.1f}s; "
        f"{len(failed)} of {len(result.records)} solves flagged"
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    result.save(out)
    _write_csv(_calibration_rows(result), out.with_suffix(".csv"))
    print(f"[calibrate] result at {out}, table at {out.with_suffix('.csv')}")
    return 0


def _sod_exact_positions(archive):
    """Wave-position oracle for archives produced by the sod case."""
    from calibra.presets import ConfigError
    from calibra.riemann import PrimitiveState, solve_riemann

    extra = archive.extra or {}
    if extra.get("case") != "sod":
        raise ConfigError("exact study mode needs an archive produced by the sod case")
    p = extra.get("params", {})
    left = PrimitiveState(p.get("rhoL", 1.0), 0.0, p.get("pL", 1.0))
    right = PrimitiveState(p.get("rhoR", 0.1), 0.0, p.get("pR", 0.125))
    x0 = p.get("x0", 0.5)
    solution = solve_riemann(left, right)

    def positions(mu):
        return solution.wave_positions(float(mu[-1]), x0)

    return positions


def cmd_study(args) -> int:
    from calibra.archive import FieldArchive
    from calibra.calibration import run_guess_study, run_order_study
    from calibra.figures import save_guess_study_png, save_order_study_png

    archive = FieldArchive.open(args.archive)
    config = _calibration_config(args)
    exact = _sod_exact_positions(archive) if args.mode == "exact" else None
    out = Path(args.out)
    t0 = time.perf_counter()
    if args.what == "guess":
        rows = run_guess_study(
            archive,
            config,
            mode=args.mode,
            exact_positions=exact,
            n_interior=args.interior,
            reference_stride=args.ref_stride,
            target_stride=args.target_stride,
        )
        csv_path = out / f"guess_study_{args.mode}.csv"
        _write_csv(rows, csv_path)
        save_guess_study_png(csv_path.with_suffix(".png"), rows)
    else:
        rows = run_order_study(
            archive,
            config,
            mode=args.mode,
            exact_positions=exact,
        )
        csv_path = out / f"order_study_{args.mode}.csv"
        _write_csv(rows, csv_path)
        save_order_study_png(csv_path.with_suffix(".png"), rows)
    print(
        f"[study] {args.what}/{args.mode}: {len(rows)} rows in "
        f"{time.perf_counter() - t0:.1f}s -> {csv_path}"
    )
    return 0


def cmd_offline(args) -> int:
    from calibra.archive import FieldArchive
    from calibra.pipeline import NetConfig, PodConfig, offline_build
    from calibra.presets import ConfigError

    archive = FieldArchive.open(args.archive)
    cgrid = _control_grid(args, archive.grid)
    config = _calibration_config(args)
    pod = PodConfig(tol=args.tau, cap=args.nmax)
    window = None
    if args.window:
        parts = args.window.split(",")
        if len(parts) != 2:
            raise ConfigError(f"--window expects lo,hi, got {args.window!r}")
        window = (float(parts[0]), float(parts[1]))
    components = tuple(args.components.split(",")) if args.components else ("rho",)
    route = "self-similar" if args.mode == "self" else "quasi"
    t0 = time.perf_counter()
    artifacts = offline_build(
        archive,
        config,
        pod,
        cgrid=cgrid,
        route=route,
        components=components,
        window=window,
        cal_net_config=NetConfig(epochs=args.cal_epochs, tol=1e-6, seed=args.seed),
        coeff_net_config=NetConfig(epochs=args.coeff_epochs, tol=1e-5, seed=args.seed),
        progress=lambda stage: print(f"[offline] {stage}"),
    )
    artifacts.save(args.out)
    for comp in artifacts.components():
        print(
            f"[offline] {comp}: calibrated basis keeps {artifacts.ale_bases[comp].n_active} "
            f"modes, plain basis {artifacts.eulerian_bases[comp].n_active}"
        )
    print(f"[offline] artifacts at {args.out} ({time.perf_counter() - t0:.1f}s)")
    return 0


def cmd_online(args) -> int:
    from calibra.figures import save_field_png
    from calibra.pipeline import OfflineArtifacts, eulerian_solve, online_solve
    from calibra.presets import ConfigError

    artifacts = OfflineArtifacts.load(args.artifacts)
    try:
        mu = [float(v) for v in args.mu.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--mu holds a non-number: {args.mu!r}") from None
    if len(mu) != len(artifacts.param_names):
        raise ConfigError(
            f"--mu has {len(mu)} entries; artifacts expect {list(artifacts.param_names)}"
        )
    solution = online_solve(artifacts, mu, args.N, component=args.component)
    baseline = eulerian_solve(artifacts, mu, None, component=args.component)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = artifacts.grid
    tag = "-".join(f"{v:g}" for v in mu)
    csv_path = out / f"online_{tag}.csv"
    rows = []
    centers = grid.centers()
    ref = solution.reference.values.ravel()
    phys = solution.physical.values.ravel()
    eul = baseline.values.ravel()
    for i in range(centers.shape[0]):
        row = {"x": centers[i, 0]}
        if grid.ndim == 2:
            row["y"] = centers[i, 1]
        row.update(
            {"reference": ref[i], "physical": phys[i], "eulerian": eul[i]}
        )
        rows.append(row)
    _write_csv(rows, csv_path)
    save_field_png(
        csv_path.with_suffix(".png"),
        grid,
        {
            "calibrated reduced solution": solution.physical.values,
            "plain reduced solution": baseline.values,
        },
        title=f"mu = ({tag}), N = {solution.n_modes}",
    )
    print(
        f"[online] mu=({tag}) N={solution.n_modes} in {solution.elapsed * 1e3:.2f} ms "
        f"-> {csv_path}"
    )
    return 0


def cmd_errors(args) -> int:
    from calibra.archive import FieldArchive
    from calibra.figures import save_error_png
    from calibra.pipeline import OfflineArtifacts, error_report, write_error_csv
    from calibra.presets import ConfigError

    artifacts = OfflineArtifacts.load(args.artifacts)
    archive = FieldArchive.open(args.archive)
    try:
        n_list = [int(v) for v in args.N.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--N expects integers, got {args.N!r}") from None
    indices = None
    if args.indices:
        indices = [int(v) for v in args.indices.split(",") if v.strip()]
    t0 = time.perf_counter()
    rows = error_report(artifacts, archive, n_list, component=args.component, indices=indices)
    out = Path(args.out)
    csv_path = out / "errors.csv"
    write_error_csv(rows, csv_path)
    save_error_png(csv_path.with_suffix(".png"), rows)
    worst = max(rows, key=lambda r: r["ale"])
    print(
        f"[errors] {len(rows)} rows in {time.perf_counter() - t0:.1f}s; "
        f"worst calibrated error {worst['ale']:.3e} -> {csv_path}"
    )
    return 0


def cmd_eigs(args) -> int:
    from calibra.figures import save_eigs_png
    from calibra.pipeline import OfflineArtifacts, eigenvalue_comparison

    artifacts = OfflineArtifacts.load(args.artifacts)
    out = Path(args.out)
    csv_path = out / "eigenvalues.csv"
    rows = eigenvalue_comparison(artifacts, csv_path)
    save_eigs_png(csv_path.with_suffix(".png"), rows)
    print(f"[eigs] {len(rows)} rows -> {csv_path}")
    return 0


def cmd_run(args) -> int:
    from calibra.presets import merge_overrides, preset_config

    config = preset_config(args.preset)
    overrides: dict = {}
    if args.grid:
        overrides["grid"] = _parse_grid(args.grid)
    if args.snapshots:
        overrides["snapshots"] = _parse_snapshots(args.snapshots)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.max_iter is not None:
        overrides["calibration"] = {"max_iter": args.max_iter}
    if args.epochs is not None:
        overrides.setdefault("nets", {})
        overrides["nets"] = {
            "calibration": {"epochs": args.epochs},
            "coefficient": {"epochs": args.epochs},
        }
    config = merge_overrides(config, overrides)
    out = Path(args.out or f"runs/{args.preset}")
    return run_preset(config, out)


def run_preset(config: dict, out: Path) -> int:
    from calibra.archive import FieldArchive
    from calibra.figures import save_eigs_png, save_error_png
    from calibra.grids import ConservedField
    from calibra.pipeline import (
        eigenvalue_comparison,
        error_report,
        offline_build,
        write_error_csv,
    )
    from calibra.presets import (
        build_problem,
        calibration_config_for,
        control_grid_for,
        net_configs_for,
        pod_config_for,
        snapshot_times,
        training_parameters,
    )
    from calibra.solver import run_fom

    out.mkdir(parents=True, exist_ok=True)
    case = config["case"]
    timings: dict[str, float] = {}
    summary: dict = {"case": case, "seed": config.get("seed", 0), "config": config}

    names, samples = training_parameters(config)
    times = snapshot_times(config)
    archive_dir = out / "archive"
    t0 = time.perf_counter()
    if (archive_dir / "manifest.json").exists():
        archive = FieldArchive.open(archive_dir)
        print(f"[run] reusing archive at {archive_dir} ({len(archive)} snapshots)")
    else:
        problem0 = build_problem(config, dict(zip(names, samples[0])))
        archive = FieldArchive.create(
            archive_dir,
            problem0.grid,
            list(names) + ["t"],
            extra={"case": "sod" if case.startswith("sod") else case, "params": dict(config.get("params", {}))},
        )
        for row in samples:
            problem = build_problem(config, dict(zip(names, row)))
            print(f"[run] flow solve at ({', '.join(f'{v:.4g}' for v in row)})" if names else "[run] flow solve")
            _, snaps = run_fom(problem, times)
            for t, u in zip(times, snaps):
                archive.append([*map(float, row), float(t)], ConservedField(problem.grid, u))
    timings["fom"] = time.perf_counter() - t0

    problem = build_problem(config, dict(zip(names, samples[0])))
    cgrid = control_grid_for(config, problem)
    cal_config = calibration_config_for(config)
    cal_net, coeff_net = net_configs_for(config)
    route = config.get("calibration", {}).get("route", "self-similar")
    window = tuple(config["window"]) if "window" in config else None

    t0 = time.perf_counter()
    artifacts = offline_build(
        archive,
        cal_config,
        pod_config_for(config),
        cgrid=cgrid,
        route=route,
        components=tuple(config.get("components", ("rho",))),
        window=window,
        cal_net_config=cal_net,
        coeff_net_config=coeff_net,
        progress=lambda stage: print(f"[run] offline: {stage}"),
    )
    timings["offline"] = time.perf_counter() - t0
    artifacts.save(out / "artifacts")
    failed = artifacts.calibration.failed_indices()
    if failed:
        print(f"[run] note: {len(failed)} calibration solves flagged")

    t0 = time.perf_counter()
    n_list = config.get("n_list", [1, 2, 4])
    indices = artifacts.window.get("indices")
    rows = error_report(artifacts, archive, n_list, indices=indices)
    write_error_csv(rows, out / "errors.csv")
    save_error_png(out / "errors.png", rows)
    eig_rows = eigenvalue_comparison(artifacts, out / "eigenvalues.csv")
    save_eigs_png(out / "eigenvalues.png", eig_rows)
    timings["reports"] = time.perf_counter() - t0

    summary["timings"] = {k: round(v, 3) for k, v in timings.items()}
    summary["basis_sizes"] = {
        comp: {
            "ale_active": artifacts.ale_bases[comp].n_active,
            "eulerian_active": artifacts.eulerian_bases[comp].n_active,
        }
        for comp in artifacts.components()
    }
    summary["calibration_failures"] = failed
    summary["max_errors"] = {
        route_name: max(r[route_name] for r in rows)
        for route_name in ("eulerian", "ale", "eulerian_proj", "ale_proj")
    }
    summary["eigenvalues"] = eig_rows[: 2 * max(len(n_list), 8)]
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, default=float)
    print(f"[run] summary at {out / 'summary.json'}")
    return 0


def cmd_validate(args) -> int:
    from calibra.presets import load_config

    config = load_config(args.config)
    print(f"ok: {args.config} ({config['case']})")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="calibra",
        description="Calibrated model reduction for conservation-law snapshots.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fom", help="run the flow solver and archive snapshots")
    p.add_argument("--case", required=True, choices=["sod", "dmr", "triple"])
    p.add_argument("--grid", help="NX or NXxNY")
    p.add_argument("--tf", type=float, help="final time")
    p.add_argument("--cfl", type=float, default=0.8)
    p.add_argument("--snapshots", default="25", help="count N or comma list of times")
    p.add_argument("--param", action="append", help="case parameter key=value", default=[])
    p.add_argument("--out", required=True, help="archive directory")
    p.set_defaults(func=cmd_fom)

    p = sub.add_parser("calibrate", help="calibrate an archived snapshot family")
    p.add_argument("--archive", required=True)
    p.add_argument("--mode", choices=["self", "quasi"], default="self")
    p.add_argument("--control", default="6", help="control counts M1 or M1xM2")
    p.add_argument("--refpoints", default="auto", help="auto or axis lists like 0.2,0.4/0.3,0.6")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--few", type=int, default=None)
    p.add_argument("--fewpod", type=int, default=None)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.add_argument("--out", required=True, help="result JSON path")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("study", help="reference-choice and sweep-order studies")
    p.add_argument("--archive", required=True)
    p.add_argument("--what", choices=["guess", "order"], default="guess")
    p.add_argument("--mode", choices=["exact", "equispaced"], default="equispaced")
    p.add_argument("--interior", type=int, default=4, help="interior points in equispaced mode")
    p.add_argument("--ref-stride", dest="ref_stride", type=int, default=1)
    p.add_argument("--target-stride", dest="target_stride", type=int, default=1)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("offline", help="build reduced-model artifacts from an archive")
    p.add_argument("--archive", required=True)
    p.add_argument("--out", required=True, help="artifacts directory")
    p.add_argument("--mode", choices=["self", "quasi"], default="self")
    p.add_argument("--control", default="6")
    p.add_argument("--refpoints", default="auto")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--few", type=int, default=None)
    p.add_argument("--fewpod", type=int, default=None)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.add_argument("--tau", type=float, default=1e-4, help="energy tolerance")
    p.add_argument("--nmax", type=int, default=7, help="mode cap")
    p.add_argument("--window", help="training window lo,hi in time")
    p.add_argument("--components", default="rho", help="comma list, e.g. rho,mx,E")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cal-epochs", dest="cal_epochs", type=int, default=20000)
    p.add_argument("--coeff-epochs", dest="coeff_epochs", type=int, default=10000)
    p.set_defaults(func=cmd_offline)

    p = sub.add_parser("online", help="evaluate the reduced model at one parameter")
    p.add_argument("--artifacts", required=True)
    p.add_argument("--mu", required=True, help="comma list matching the parameter names")
    p.add_argument("--N", type=int, default=None, help="modes (defaults to the active count)")
    p.add_argument("--component", default="rho")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_online)

    p = sub.add_parser("errors", help="error report against archived truth")
    p.add_argument("--artifacts", required=True)
    p.add_argument("--archive", required=True)
    p.add_argument("--N", default="1,2,4", help="comma list of mode counts")
    p.add_argument("--component", default="rho")
    p.add_argument("--indices", help="comma list of snapshot indices (default all)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_errors)

    p = sub.add_parser("eigs", help="eigenvalue decay comparison")
    p.add_argument("--artifacts", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_eigs)

    p = sub.add_parser("run", help="end-to-end preset")
    p.add_argument("preset", choices=["sod", "sod-param", "dmr", "dmr-param", "triple"])
    p.add_argument("--grid", help="override grid NX or NXxNY")
    p.add_argument("--snapshots", help="override snapshot count or times")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None, help="override all training epochs")
    p.add_argument("--out", help="output directory (default runs/<preset>)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a run-configuration file")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    _cap_threads()
    parser = build_parser()
    args = parser.parse_args(argv)

    from calibra.calibration import CalibrationError
    from calibra.mapping import MapConstructionError, MapInversionError
    from calibra.net import TrainingError
    from calibra.pipeline import OnlineError
    from calibra.pod import ReductionError
    from calibra.presets import ConfigError
    from calibra.solver import FomError
    from calibra.archive import ArchiveError

    try:
        return args.func(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except ArchiveError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except FomError as e:
        print(f"flow-solver error: {e}", file=sys.stderr)
        return 3
    except (CalibrationError, MapConstructionError) as e:
        print(f"calibration error: {e}", file=sys.stderr)
        return 4
    except (ReductionError, TrainingError) as e:
        print(f"reduction error: {e}", file=sys.stderr)
        return 5
    except (OnlineError, MapInversionError) as e:
        print(f"online error: {e}", file=sys.stderr)
        return 6


if __name__ == "__main__":
    sys.exit(main())

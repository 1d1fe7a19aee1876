"""
Command-line experiment runner.

    bayesosc search --config search.json --out runs/s1
    bayesosc batch --config a.json --config b.json --out runs --jobs 2

Every command writes CSV files plus a ``run.json`` sidecar (config echo,
seed, version, wall time) into the output directory and nowhere else.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .belief_search import MeasurementModel, simulate_search
from .cavity_sim import (
    CavityModel,
    QubitSpec,
    ResetProcess,
    SimConfig,
    basis,
    product_state,
    run_ensemble,
    run_mean_evolution,
)
from .config import COMMANDS, ConfigValidationError, ExperimentConfig, canonical_text, parse_config
from .elastic_net import AnnealSchedule, ElasticNetParams, baseline_tours, solve
from .gp_noise import GPKernel, TimeGrid, autocorrelation, drive_oscillator, sample_paths
from .tsplib import parse_tsplib

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

SEARCH_HEADER = ["step", "action", "observation", "entropy", "max_belief"]
TSP_TRACE_HEADER = ["stage", "K", "prior_energy", "data_energy", "total", "tour_length"]
TSP_TOUR_HEADER = ["position", "city", "x", "y"]
NOISE_HEADER = ["t", "mean", "variance", "autocorrelation"]
OSCILLATOR_HEADER = ["t", "mean_x", "var_x", "mean_energy"]


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"refusing to write non-finite value {v!r}")
    return repr(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _run_search(p, seed, out: Path):
    model = MeasurementModel(p["p_detect"], p["p_false"])
    rec = simulate_search(
        p["n_cells"],
        p["true_cell"],
        model,
        policy=p["policy"],
        max_steps=p["max_steps"],
        seed=seed,
        stop_threshold=p["stop_threshold"],
        prior=p["prior"],
        horizon=p["horizon"],
    )
    rows = (
        (i + 1, a, y, h, b.max())
        for i, (a, y, h, b) in enumerate(zip(rec.actions, rec.observations, rec.entropies, rec.beliefs))
    )
    write_csv(out / "search.csv", SEARCH_HEADER, rows)
    final = rec.beliefs[-1] if rec.beliefs else None
    return ["search.csv"], {
        "steps": len(rec),
        "map_cell": int(np.argmax(final)) if final is not None else None,
        "found": bool(final is not None and int(np.argmax(final)) == p["true_cell"]),
    }


def _run_tsp(p, seed, out: Path, base_dir: Path):
    if p["instance"] is not None:
        path = Path(p["instance"])
        if not path.is_absolute():
            path = base_dir / path
        inst = parse_tsplib(path.read_text())
        cities, name = inst.coords, inst.name
    else:
        cities = np.random.default_rng(seed).random((p["n_cities"], 2))
        name = f"random{p['n_cities']}"
    params = ElasticNetParams(p["alpha"], p["beta"], p["node_ratio"])
    schedule = AnnealSchedule(p["k_start"], p["k_decay"], p["k_min"], p["iters_per_stage"], p["step_size"])
    res = solve(cities, params, schedule, seed=seed)
    write_csv(
        out / "tsp_trace.csv",
        TSP_TRACE_HEADER,
        ((s.stage, s.k, s.prior_energy, s.data_energy, s.total, s.tour_length) for s in res.trace),
    )
    write_csv(
        out / "tsp_tour.csv",
        TSP_TOUR_HEADER,
        ((i, c, cities[c, 0], cities[c, 1]) for i, c in enumerate(res.tour.order)),
    )
    summary = {"instance": name, "n_cities": len(cities), "tour_length": res.tour.length}
    if len(cities) >= 3:
        nn, opt2 = baseline_tours(cities, seed)
        summary.update(nearest_neighbor_length=nn.length, two_opt_length=opt2.length)
    return ["tsp_trace.csv", "tsp_tour.csv"], summary


def _run_qsim(p, seed, out: Path):
    model = CavityModel(p["d"], p["omega_r"], [QubitSpec(q["delta"], q["g"]) for q in p["qubits"]], p["hbar"])
    levels = p["qubit_levels"] or [0] * len(model.qubits)
    rho0 = product_state(basis(model.d, p["cavity_level"]), *[basis(2, k) for k in levels])
    files, summary = [], {}
    for i, rate in enumerate(p["rates"]):
        cfg = SimConfig(
            p["dt"], p["t_max"], seed, p["n_trajectories"], p["record_stride"], p["max_top_population"]
        )
        reset = ResetProcess(rate, tuple(p["targets"]))
        if p["mode"] == "mean":
            series = run_mean_evolution(model, reset, rho0, cfg)
        else:
            series = run_ensemble(model, reset, rho0, cfg)
        name = f"qsim_rate{i}.csv"
        write_csv(out / name, series.csv_header(), series.csv_rows())
        files.append(name)
        summary[name] = {"rate": rate, "final_qudit_excited": float(series.qudit_excited()[-1])}
    return files, summary


def _run_noise(p, seed, out: Path):
    kernel = GPKernel(p["kind"], p["variance"], p["correlation_time"], p["mean"])
    grid = TimeGrid(p["t0"], p["dt"], p["n"])
    paths = sample_paths(kernel, grid, p["count"], seed)
    acf = autocorrelation(paths, grid.n - 1)
    rows = zip(grid.times, paths.mean(axis=0), paths.var(axis=0, ddof=1), acf)
    write_csv(out / "noise.csv", NOISE_HEADER, rows)
    files = ["noise.csv"]
    osc = p["oscillator"]
    if osc is not None:
        ens = drive_oscillator(osc["omega0"], osc["mass"], kernel, grid, p["count"], seed)
        energy = ens.energy()
        rows = zip(grid.times, ens.x.mean(axis=0), ens.x.var(axis=0, ddof=1), energy.mean(axis=0))
        write_csv(out / "oscillator.csv", OSCILLATOR_HEADER, rows)
        files.append("oscillator.csv")
    return files, {"paths": p["count"], "n": grid.n}


def run(config: ExperimentConfig, out_dir=None, base_dir=".") -> int:
    """Execute one parsed config; returns a process exit status."""
    out = Path(out_dir if out_dir is not None else config.output_path)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    p = json.loads(json.dumps(config.params))  # private copy
    if config.command == "search":
        files, summary = _run_search(p, config.seed, out)
    elif config.command == "tsp":
        files, summary = _run_tsp(p, config.seed, out, Path(base_dir))
    elif config.command == "qsim":
        files, summary = _run_qsim(p, config.seed, out)
    else:
        files, summary = _run_noise(p, config.seed, out)
    meta = {
        "command": config.command,
        "config": json.loads(canonical_text(config)),
        "seed": config.seed,
        "version": __version__,
        "wall_time_s": time.perf_counter() - start,
        "outputs": files,
        "summary": summary,
    }
    (out / "run.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _error_name(exc: BaseException) -> str:
    return f"{type(exc).__module__}.{type(exc).__name__}"


def load_config(path, seed=None) -> ExperimentConfig:
    config = parse_config(Path(path).read_text(encoding="utf-8"))
    if seed is not None:
        config.seed = seed
    return config


def run_file(config_path, out_dir=None, seed=None, expect=None, quiet=True) -> int:
    """Load, validate and run one config file, reporting errors on stderr."""
    try:
        config = load_config(config_path, seed)
        if expect is not None and config.command != expect:
            raise ConfigValidationError(
                [f"<root>: subcommand {expect!r} given but config holds a {config.command!r} block"]
            )
    except ConfigValidationError as exc:
        for err in exc.errors:
            print(f"{config_path}: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"{_error_name(exc)}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        status = run(config, out_dir, base_dir=Path(config_path).parent)
    except Exception as exc:  # surface module errors by qualified class name
        print(f"{_error_name(exc)}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if not quiet:
        where = out_dir if out_dir is not None else config.output_path
        print(f"{config.command}: wrote results to {where}")
    return status


def _batch_job(args):
    return run_file(*args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesosc", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run a {name} experiment")
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", help="output directory (overrides output_path)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--quiet", action="store_true")
    bp = sub.add_parser("batch", help="run several configs in parallel")
    bp.add_argument("--config", action="append", required=True, help="repeatable")
    bp.add_argument("--out", required=True, help="parent directory; one subdirectory per config")
    bp.add_argument("--seed", type=int)
    bp.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    bp.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command != "batch":
        return run_file(args.config, args.out, args.seed, expect=args.command, quiet=args.quiet)

    names, jobs = {}, []
    for path in args.config:
        stem = Path(path).stem
        names[stem] = names.get(stem, 0) + 1
        sub = stem if names[stem] == 1 else f"{stem}_{names[stem]}"
        jobs.append((path, str(Path(args.out) / sub), args.seed, None, args.quiet))
    if args.jobs <= 1 or len(jobs) == 1:
        statuses = [_batch_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            statuses = list(pool.map(_batch_job, jobs))
    return max(statuses)


if __name__ == "__main__":
    sys.exit(main())

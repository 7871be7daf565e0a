"""Command-line entry point: ``ladder-inversion simulate|sweep|optimize|validate``.

Exit codes: 0 success, 1 check failure, 2 config error, 3 numerical failure.
The output directory is ``--out``, else ``$LADDER_INVERSION_OUT``, else ``./out``.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, config as cfgmod
from ._kernels import BACKEND
from .checks import run_checks
from .dynamics import IntegrationError, lindblad_channels, propagate
from .model import DomainError, ground_state
from .protocol import YieldReport, build_inversion_schedule
from .sweep import SweepGrid, default_ratio_sets, export_fig2, optimize_ratios, run_sweep

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
OUT_ENV = "LADDER_INVERSION_OUT"

log = logging.getLogger("ladder_inversion")


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _write_csv(path: Path, header_comment: str, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(x) if isinstance(x, float) else x for x in row])


def _write_json(path: Path, cfg, payload: dict) -> None:
    doc = {"version": __version__, "config_hash": cfg.config_hash(), **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_trajectory(path: Path, cfg, traj) -> None:
    pops = traj.populations
    n = traj.n_levels
    columns = ["t_ns"] + [f"rho{k}{k}" for k in range(1, n + 1)] + ["yield"]
    rows = ([float(t)] + [float(p) for p in row] + [float(row[-1] - row[0])]
            for t, row in zip(traj.times, pops))
    _write_csv(path, cfg.provenance(), columns, rows)


def write_states(path: Path, cfg, traj) -> None:
    """Full density matrices as row-major ``[re, im]`` pairs."""
    states = [[[float(z.real), float(z.imag)] for z in rho.reshape(-1)] for rho in traj.states]
    _write_json(path, cfg, {"times_ns": [float(t) for t in traj.times], "states": states})


def write_envelopes(path: Path, cfg, schedule, samples: int) -> None:
    times = np.linspace(0.0, schedule.total_time, samples)
    cols = ["t_ns"] + [f"amplitude_{k + 1}" for k in range(len(schedule.pulses))]
    rows = []
    for t in times:
        row = [float(t)]
        for p, s in zip(schedule.pulses, schedule.starts):
            row.append(float(p.envelope(t - s)) if s <= t <= s + p.duration else 0.0)
        rows.append(row)
    _write_csv(path, cfg.provenance(), cols, rows)


def _channels(cfg):
    return list(cfg.channels) if cfg.channels is not None else lindblad_channels(cfg.system)


def _simulate_one(cfg, schedule):
    step = min(p.duration for p in schedule.pulses) / cfg.step_divisor
    return propagate(ground_state(cfg.system.n_levels), schedule, cfg.system, step=step,
                     sample_every=schedule.total_time / cfg.samples, channels=_channels(cfg))


def cmd_simulate(cfg, out: Path, ideal_compare=False, dump_states=False) -> int:
    if cfg.pulses is None:
        raise cfgmod.ConfigError("pulses", "missing key (required by simulate)")
    durations = cfg.pulses.resolve()
    schedule = build_inversion_schedule(cfg.system, durations, cfg.pulses.shape)
    runs = [("", cfg)]
    if ideal_compare:
        runs.append(("ideal_", cfg.without_decay()))
    write_envelopes(out / "pulses.csv", cfg, schedule, cfg.samples)
    for prefix, run_cfg in runs:
        traj = _simulate_one(run_cfg, schedule)
        report = YieldReport.from_trajectory(traj)
        write_trajectory(out / f"{prefix}trajectory.csv", run_cfg, traj)
        _write_json(out / f"{prefix}report.json", run_cfg, report.to_json())
        if dump_states:
            write_states(out / f"{prefix}states.json", run_cfg, traj)
        print(f"{prefix or 'run_'}yield = {report.final_yield:.6f}  "
              f"populations = {', '.join(f'{p:.4f}' for p in report.final_populations)}")
    return EXIT_OK


def sweep_grid(cfg) -> SweepGrid:
    spec = cfg.sweep or {}
    default = SweepGrid.default(cfg.system)
    return SweepGrid(spec.get("total_times", default.total_times),
                     spec.get("ratio_sets", default_ratio_sets(cfg.system)),
                     spec.get("shape", "square"))


def cmd_sweep(cfg, out: Path, workers: int = 1) -> int:
    grid = sweep_grid(cfg)
    result = run_sweep(cfg.system, grid, cfg.step_divisor, workers=workers,
                       channels=_channels(cfg), config_hash=cfg.config_hash())
    export_fig2(result, out / "fig2.csv", header=cfg.provenance())
    for row in result.failed:
        print(f"failed: Tf={row.total_time:g} ns ratios={row.label}: {row.error}", file=sys.stderr)
    print(f"wrote {len(result.rows) - len(result.failed)} rows to {out / 'fig2.csv'}")
    return EXIT_NUMERIC if result.failed else EXIT_OK


def cmd_optimize(cfg, out: Path) -> int:
    spec = cfg.optimize or {}
    tf = spec.get("total_time", cfg.pulses.total_time if cfg.pulses and cfg.pulses.total_time else 30.0)
    shape = cfg.pulses.shape if cfg.pulses else "square"
    res = optimize_ratios(cfg.system, tf, shape, seeds=spec.get("seeds"), channels=_channels(cfg))
    _write_json(out / "optimize.json", cfg, {
        "total_time_ns": tf, "ratios": list(res.ratios), "yield": res.final_yield,
        "evaluations": res.n_evaluations, "converged": res.converged})
    print(f"best ratios {':'.join(f'{r:.4f}' for r in res.ratios)} -> yield {res.final_yield:.6f}")
    return EXIT_OK


def cmd_validate(cfg, out: Path | None = None) -> int:
    results = run_checks(cfg.system, cfg.step_divisor, channels=_channels(cfg))
    width = max(len(r.name) for r in results)
    print(f"backend: {BACKEND}  step divisor: {cfg.step_divisor:g}")
    for r in results:
        print(f"{r.status:4}  {r.name:<{width}}  {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failed checks: " + ", ".join(failed))
        return EXIT_CHECK
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ladder-inversion", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("command", choices=["simulate", "sweep", "optimize", "validate"])
    parser.add_argument("--config", help="JSON config file (default: built-in Rb four-level system)")
    parser.add_argument("--out", help=f"output directory (overrides ${OUT_ENV})")
    parser.add_argument("--ideal-compare", action="store_true",
                        help="simulate: also run with all decay rates set to zero")
    parser.add_argument("--no-decay", action="store_true", help="force all decay rates to zero")
    parser.add_argument("--step-divisor", type=float, help="RK4 step = shortest pulse / k")
    parser.add_argument("--workers", type=int, default=1, help="sweep: concurrent grid points")
    parser.add_argument("--dump-states", action="store_true", help="simulate: write full density matrices")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = cfgmod.load(args.config) if args.config else cfgmod.default_config()
        if args.no_decay:
            cfg = cfg.without_decay()
        if args.step_divisor is not None:
            if not args.step_divisor > 0:
                raise cfgmod.ConfigError("--step-divisor", "must be > 0")
            cfg = cfg.with_step_divisor(args.step_divisor)
        if args.workers < 1:
            raise cfgmod.ConfigError("--workers", "must be >= 1")
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out or os.environ.get(OUT_ENV) or "out")
    log.debug("backend=%s hash=%s out=%s", BACKEND, cfg.config_hash(), out)
    try:
        if args.command == "validate":
            return cmd_validate(cfg)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, args.ideal_compare, args.dump_states)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.workers)
        return cmd_optimize(cfg, out)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, DomainError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

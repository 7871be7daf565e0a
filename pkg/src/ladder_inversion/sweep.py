"""Yield sweeps over total control time and pulse-length ratios, plus a ratio optimizer."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .dynamics import DEFAULT_STEP_DIVISOR, IntegrationError, propagate
from .model import DomainError, LadderSystem, canonical_ratios, ground_state, ratios_to_durations
from .protocol import build_inversion_schedule, yield_metric

DEFAULT_TOTAL_TIMES = tuple(float(t) for t in range(5, 55, 5))
OPTIMIZER_STEP_DIVISOR = 100
OPTIMIZER_MIN_FRACTION = 0.01


def ratio_label(ratios: Sequence[float]) -> str:
    return ":".join(f"{x:.6g}" for x in canonical_ratios(ratios))


def default_ratio_sets(sys: LadderSystem) -> list[tuple[float, ...]]:
    """Equal split, lifetime ratio (when all lifetimes are finite), then 1..1:k for k = 2, 3, 4."""
    m = sys.n_levels - 1
    sets = [(1.0,) * m]
    if all(math.isfinite(t) for t in sys.lifetimes):
        sets.append(tuple(sys.lifetimes))
    for k in (2.0, 3.0, 4.0):
        sets.append((1.0,) * (m - 1) + (k,))
    return sets


@dataclass(frozen=True)
class SweepGrid:
    total_times: tuple[float, ...]
    ratio_sets: tuple[tuple[float, ...], ...]
    shape: str = "square"

    def __post_init__(self):
        object.__setattr__(self, "total_times", tuple(float(t) for t in self.total_times))
        object.__setattr__(self, "ratio_sets", tuple(tuple(float(x) for x in r) for r in self.ratio_sets))
        if not self.total_times or not self.ratio_sets:
            raise DomainError("sweep grid needs at least one total time and one ratio set")
        if any(not t > 0 for t in self.total_times):
            raise DomainError("total times must be > 0")
        for r in self.ratio_sets:
            canonical_ratios(r)

    @classmethod
    def default(cls, sys: LadderSystem, shape: str = "square") -> "SweepGrid":
        return cls(DEFAULT_TOTAL_TIMES, tuple(default_ratio_sets(sys)), shape)

    def points(self):
        """Grid order: ratio set major, total time minor."""
        return [(r, t) for r in self.ratio_sets for t in self.total_times]


@dataclass(frozen=True)
class SweepRow:
    total_time: float
    ratios: tuple[float, ...]
    final_yield: float
    final_populations: tuple[float, ...]
    error: str | None = None

    @property
    def label(self) -> str:
        return ratio_label(self.ratios)


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    step_divisor: float
    config_hash: str = ""

    @property
    def failed(self) -> tuple[SweepRow, ...]:
        return tuple(r for r in self.rows if r.error is not None)

    def yields(self, ratios: Sequence[float]) -> dict[float, float]:
        key = canonical_ratios(ratios)
        return {r.total_time: r.final_yield for r in self.rows
                if r.error is None and np.allclose(r.ratios, key, rtol=0, atol=1e-15)}


def evaluate_point(sys: LadderSystem, total_time: float, ratios: Sequence[float], shape: str = "square",
                   step_divisor: float = DEFAULT_STEP_DIVISOR, channels=None) -> np.ndarray:
    """Final state of a calibrated inversion run from the ground state."""
    durations = ratios_to_durations(total_time, ratios)
    schedule = build_inversion_schedule(sys, durations, shape)
    step = min(durations) / step_divisor
    traj = propagate(ground_state(sys.n_levels), schedule, sys, step=step,
                     sample_every=total_time, channels=channels)
    return traj.final_state


def _run_row(sys, grid, step_divisor, channels, point):
    ratios, tf = point
    canon = canonical_ratios(ratios)
    try:
        rho = evaluate_point(sys, tf, canon, grid.shape, step_divisor, channels)
    except (IntegrationError, DomainError) as exc:
        n = sys.n_levels
        return SweepRow(tf, canon, float("nan"), (float("nan"),) * n, str(exc))
    pops = tuple(float(p) for p in np.real(np.diag(rho)))
    return SweepRow(tf, canon, yield_metric(rho), pops)


def run_sweep(sys: LadderSystem, grid: SweepGrid, step_divisor: float = DEFAULT_STEP_DIVISOR,
              workers: int = 1, channels=None, config_hash: str = "") -> SweepResult:
    """Evaluate every grid point; rows follow :meth:`SweepGrid.points` order.

    Points may run on a thread pool (the RK4 kernel releases the GIL). A
    failing point yields a row with ``error`` set; the others complete.
    """
    points = grid.points()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda p: _run_row(sys, grid, step_divisor, channels, p), points))
    else:
        rows = [_run_row(sys, grid, step_divisor, channels, p) for p in points]
    return SweepResult(tuple(rows), float(step_divisor), config_hash)


def export_fig2(result: SweepResult, path, header: str | None = None) -> Path:
    """Write ``Tf_ns,ratio_label,yield`` rows; yields carry 12 significant digits.

    Failed grid points are left out.
    """
    if not result.rows:
        raise DomainError("cannot export an empty sweep result")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Tf_ns", "ratio_label", "yield"])
        for row in result.rows:
            if row.error is not None:
                continue
            w.writerow([f"{row.total_time:.12g}", row.label, f"{row.final_yield:.12g}"])
    return path


def read_fig2(path) -> list[tuple[float, str, float]]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return [(float(r["Tf_ns"]), r["ratio_label"], float(r["yield"])) for r in reader]


@dataclass(frozen=True)
class OptimizeResult:
    ratios: tuple[float, ...]
    final_yield: float
    n_evaluations: int
    converged: bool


def optimize_ratios(sys: LadderSystem, total_time: float, shape: str = "square",
                    seeds: Sequence[Sequence[float]] | None = None,
                    step_divisor: float = OPTIMIZER_STEP_DIVISOR,
                    min_fraction: float = OPTIMIZER_MIN_FRACTION,
                    max_iter: int = 200, tol: float = 1e-4, channels=None) -> OptimizeResult:
    """Nelder-Mead search over unit-sum ratio vectors.

    The search runs on the first ``N - 2`` normalised ratios; the last one
    closes the sum. Points with any ratio below ``min_fraction`` and points
    whose propagation fails score -1. The best point ever evaluated is
    returned, so the result never falls below the best seed.
    """
    if not total_time > 0:
        raise DomainError(f"total time must be > 0 (got {total_time})")
    m = sys.n_levels - 1
    if seeds is None:
        seeds = [(1.0,) * m]
    seeds = [canonical_ratios(s) for s in seeds]
    if any(len(s) != m for s in seeds):
        raise DomainError(f"seed ratios must have {m} entries")

    cache: dict[tuple[float, ...], float] = {}

    def score(r):
        r = tuple(float(x) for x in r)
        if r not in cache:
            if min(r) < min_fraction:
                cache[r] = -1.0
            else:
                try:
                    rho = evaluate_point(sys, total_time, r, shape, step_divisor, channels)
                    cache[r] = yield_metric(rho)
                except (IntegrationError, DomainError):
                    cache[r] = -1.0
        return cache[r]

    def to_ratios(x):
        return tuple(x) + (1.0 - float(np.sum(x)),)

    seed_scores = [score(s) for s in seeds]
    best_seed = seeds[int(np.argmax(seed_scores))]
    if m == 1:
        return OptimizeResult(best_seed, max(seed_scores), len(cache), True)

    x0 = np.array(best_seed[:-1])
    simplex = [x0]
    delta = 0.1
    for i in range(m - 1):
        x = x0.copy()
        x[i] += delta
        if min(to_ratios(x)) < min_fraction:
            x[i] -= 2 * delta
        simplex.append(x)
    res = minimize(lambda x: -score(to_ratios(x)), x0, method="Nelder-Mead",
                   options={"initial_simplex": np.array(simplex), "maxiter": max_iter,
                            "xatol": tol, "fatol": 1e-9})
    best = max(cache, key=lambda r: (cache[r], r))
    return OptimizeResult(best, cache[best], len(cache), bool(res.success))

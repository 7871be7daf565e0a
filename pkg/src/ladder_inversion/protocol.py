"""Calibrated sequential-inversion schedules and figures of merit."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import Trajectory
from .model import DomainError, Envelope, LadderSystem, PulseSpec, Schedule


def required_area(d: float) -> float:
    """Pulse area ``pi / (2 d)`` that fully transfers population across a transition."""
    if not d > 0:
        raise DomainError(f"oscillator strength must be > 0 (got {d})")
    return math.pi / (2 * d)


def calibrated_amplitude(shape: str, d: float, duration: float) -> float:
    area = required_area(d)
    if shape == "square":
        return area / duration
    if shape == "raised_cosine":
        return 2 * area / duration
    raise DomainError(f"unknown envelope shape {shape!r}")


def build_inversion_schedule(sys: LadderSystem, durations: Sequence[float], shape: str = "square",
                             gap: float = 0.0) -> Schedule:
    """One calibrated pulse per transition, in order 1..N-1."""
    n = sys.n_levels
    if len(durations) != n - 1:
        raise DomainError(f"need {n - 1} durations for a {n}-level system, got {len(durations)}")
    if any(not dt > 0 for dt in durations):
        raise DomainError(f"durations must be > 0 (got {list(durations)})")
    pulses = [
        PulseSpec(k + 1, Envelope(shape, float(dt), calibrated_amplitude(shape, sys.osc_strengths[k], dt)))
        for k, dt in enumerate(durations)
    ]
    return Schedule.sequential(pulses, gap=gap)


def yield_metric(rho: np.ndarray) -> float:
    """Population difference ``rho_NN - rho_11``."""
    rho = np.asarray(rho)
    diag = np.diagonal(rho)
    if np.iscomplexobj(diag) and np.max(np.abs(diag.imag)) >= 1e-12:
        raise DomainError("diagonal of rho has a non-negligible imaginary part")
    return float(diag[-1].real - diag[0].real)


def occupancy(traj: Trajectory, level: int) -> float:
    """Trapezoidal time integral of ``rho_nn`` in ns (``level`` is 1-based)."""
    if not 1 <= level <= traj.n_levels:
        raise DomainError(f"level {level} outside 1..{traj.n_levels}")
    return float(np.trapezoid(traj.populations[:, level - 1], traj.times))


def check_ratio_heuristic(durations: Sequence[float]) -> bool:
    """Four-level rule of thumb ``dt2 + dt3 > 3 (dt1 + dt2)``."""
    if len(durations) != 3:
        raise DomainError(f"heuristic is defined for exactly 3 durations, got {len(durations)}")
    d1, d2, d3 = durations
    return d2 + d3 > 3 * (d1 + d2)


@dataclass(frozen=True)
class YieldReport:
    final_yield: float
    final_populations: tuple[float, ...]
    occupancy: tuple[float, ...]

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> "YieldReport":
        pops = traj.populations[-1]
        occ = tuple(occupancy(traj, k + 1) for k in range(traj.n_levels))
        return cls(yield_metric(traj.final_state), tuple(float(p) for p in pops), occ)

    def to_json(self) -> dict:
        return {
            "yield": self.final_yield,
            "populations": list(self.final_populations),
            "occupancy_ns": list(self.occupancy),
        }

"""Domain types for ladder systems, pulses, schedules and density matrices.

Conventions: time in ns, energies and field amplitudes in rad/ns, hbar = 1.
Level and transition indices are 1-based at the API surface (transition ``n``
couples levels ``n`` and ``n + 1``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SHAPES = ("square", "raised_cosine")

# DensityMatrix tolerances
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-9
PSD_TOL = 1e-9


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class LadderSystem:
    """N-level ladder with nearest-neighbour dipole couplings.

    ``lifetimes[k]`` belongs to level ``k + 2``; the ground state never decays.
    Use ``math.inf`` for a level without spontaneous emission.
    """

    energies: tuple[float, ...]
    osc_strengths: tuple[float, ...]
    lifetimes: tuple[float, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "energies", tuple(float(e) for e in self.energies))
        object.__setattr__(self, "osc_strengths", tuple(float(d) for d in self.osc_strengths))
        object.__setattr__(self, "lifetimes", tuple(float(t) for t in self.lifetimes))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    @property
    def transition_frequencies(self) -> tuple[float, ...]:
        e = self.energies
        return tuple(e[i + 1] - e[i] for i in range(len(e) - 1))

    @property
    def decay_rates(self) -> tuple[float, ...]:
        return tuple(0.0 if math.isinf(t) else 1.0 / t for t in self.lifetimes)

    def without_decay(self) -> "LadderSystem":
        return LadderSystem(self.energies, self.osc_strengths,
                            (math.inf,) * len(self.lifetimes), self.labels)

    def with_osc_strengths(self, d: Sequence[float]) -> "LadderSystem":
        return LadderSystem(self.energies, tuple(d), self.lifetimes, self.labels)


def rb_default() -> LadderSystem:
    """Four-level Rubidium ladder 5S1/2 -> 5P3/2 -> 4D5/2 -> 6P3/2.

    Energies are placeholders (only distinctness of the spacings matters in
    the rotating frame). Lifetimes reproduce the quoted ordering: tau2 is
    below a third of tau3 and close to a quarter of tau4. Oscillator
    strengths are unknown and set to 1.
    """
    return LadderSystem(
        energies=(0.0, 1.0, 2.1, 3.3),
        osc_strengths=(1.0, 1.0, 1.0),
        lifetimes=(26.2, 83.0, 112.0),
        labels=("5S1/2", "5P3/2", "4D5/2", "6P3/2"),
    )


def validate_system(sys: LadderSystem) -> list[str]:
    """Return a list of violated invariants; empty when the system is valid."""
    report = []
    n = sys.n_levels
    if n < 2:
        report.append(f"n_levels: must be >= 2 (got {n})")
    if len(sys.osc_strengths) != n - 1:
        report.append(f"osc_strengths: expected {n - 1} entries, got {len(sys.osc_strengths)}")
    if len(sys.lifetimes) != n - 1:
        report.append(f"lifetimes: expected {n - 1} entries, got {len(sys.lifetimes)}")
    if sys.labels is not None and len(sys.labels) != n:
        report.append(f"labels: expected {n} entries, got {len(sys.labels)}")
    if not all(math.isfinite(e) for e in sys.energies):
        report.append("energies: must be finite")

    mu = sys.transition_frequencies
    if any(not m > 0 for m in mu):
        report.append("energies: transition frequencies mu must be strictly positive")
    if len(set(mu)) != len(mu):
        report.append("energies: transition frequencies mu not pairwise distinct")
    if any(not d > 0 for d in sys.osc_strengths):
        report.append("osc_strengths: must be > 0")
    if any(math.isnan(t) or not t > 0 for t in sys.lifetimes):
        report.append("lifetimes: must be > 0 or infinite")
    return report


@dataclass(frozen=True)
class Envelope:
    """Real pulse envelope on ``[0, duration]``.

    ``raised_cosine`` is ``amplitude * sin(pi t / duration)**2``.
    """

    shape: str
    duration: float
    amplitude: float

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise DomainError(f"unknown envelope shape {self.shape!r}; expected one of {SHAPES}")
        if not self.duration > 0:
            raise DomainError(f"envelope duration must be > 0 (got {self.duration})")
        if not self.amplitude >= 0:
            raise DomainError(f"envelope amplitude must be >= 0 (got {self.amplitude})")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.shape == "square":
            out = np.full_like(t, self.amplitude)
        else:
            out = self.amplitude * np.sin(np.pi * t / self.duration) ** 2
        return out if out.ndim else float(out)

    @property
    def area(self) -> float:
        if self.shape == "square":
            return self.amplitude * self.duration
        return self.amplitude * self.duration / 2


@dataclass(frozen=True)
class PulseSpec:
    transition: int
    envelope: Envelope

    @property
    def duration(self) -> float:
        return self.envelope.duration


@dataclass(frozen=True)
class Schedule:
    """Ordered, non-overlapping pulses with absolute start times.

    Time not covered by a pulse (gaps and any tail up to ``total_time``) is
    free evolution.
    """

    pulses: tuple[PulseSpec, ...]
    starts: tuple[float, ...]
    total_time: float

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))
        object.__setattr__(self, "starts", tuple(float(s) for s in self.starts))
        if len(self.pulses) != len(self.starts):
            raise DomainError("schedule needs one start time per pulse")
        end = 0.0
        for p, s in zip(self.pulses, self.starts):
            # allow rounding from accumulated start times
            if s < end - 1e-12 * max(1.0, end):
                raise DomainError(f"pulse starting at {s} ns overlaps the previous pulse")
            end = s + p.duration
        if self.total_time < end - 1e-12 * max(1.0, end):
            raise DomainError(f"total_time {self.total_time} ns is shorter than the pulse train ({end} ns)")

    @classmethod
    def sequential(cls, pulses: Sequence[PulseSpec], gap: float = 0.0) -> "Schedule":
        if gap < 0:
            raise DomainError("gap must be >= 0")
        starts, t = [], 0.0
        for i, p in enumerate(pulses):
            if i:
                t += gap
            starts.append(t)
            t += p.duration
        return cls(tuple(pulses), tuple(starts), t)

    @classmethod
    def idle(cls, total_time: float) -> "Schedule":
        return cls((), (), float(total_time))

    def segments(self):
        """Yield ``(t_start, t_end, pulse_or_None)`` covering ``[0, total_time]``."""
        t = 0.0
        for p, s in zip(self.pulses, self.starts):
            if s > t:
                yield t, s, None
            yield s, s + p.duration, p
            t = s + p.duration
        if self.total_time > t:
            yield t, self.total_time, None

    def check_against(self, sys: LadderSystem) -> None:
        for p in self.pulses:
            if not 1 <= p.transition <= sys.n_levels - 1:
                raise DomainError(
                    f"pulse transition {p.transition} invalid for a {sys.n_levels}-level system")


def ground_state(n: int) -> np.ndarray:
    if n < 2:
        raise DomainError(f"invalid dimension {n}; need N >= 2")
    rho = np.zeros((n, n), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def pure_state(n: int, level: int) -> np.ndarray:
    """Projector onto ``|level>`` (1-based)."""
    if not 1 <= level <= n:
        raise DomainError(f"level {level} outside 1..{n}")
    rho = np.zeros((n, n), dtype=complex)
    rho[level - 1, level - 1] = 1.0
    return rho


def density_violations(rho: np.ndarray, herm_tol=HERMITIAN_TOL, trace_tol=TRACE_TOL,
                       psd_tol=PSD_TOL) -> list[str]:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return [f"shape: expected square matrix, got {rho.shape}"]
    out = []
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        out.append(f"hermiticity: |rho - rho^dag|_max = {herm:.3e}")
    tr = abs(np.trace(rho) - 1)
    if tr > trace_tol:
        out.append(f"trace: |Tr rho - 1| = {tr:.3e}")
    lam = np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0]
    if lam < -psd_tol:
        out.append(f"positivity: min eigenvalue {lam:.3e}")
    return out


def ratios_to_durations(total_time: float, ratios: Sequence[float]) -> list[float]:
    if not total_time > 0:
        raise DomainError(f"total time must be > 0 (got {total_time})")
    r = [float(x) for x in ratios]
    if not r or any(not x > 0 for x in r):
        raise DomainError(f"ratios must be a nonempty list of positive numbers (got {ratios})")
    s = math.fsum(r)
    return [total_time * x / s for x in r]


def canonical_ratios(ratios: Sequence[float]) -> tuple[float, ...]:
    """Scale ratios to unit sum so that e.g. 1:1:3 and 2:2:6 coincide."""
    r = [float(x) for x in ratios]
    if not r or any(not x > 0 for x in r):
        raise DomainError(f"ratios must be positive (got {ratios})")
    s = math.fsum(r)
    return tuple(x / s for x in r)

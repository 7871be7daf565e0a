"""RWA Hamiltonians, cascade dissipator and master-equation propagation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .model import DomainError, LadderSystem, PulseSpec, Schedule

DEFAULT_STEP_DIVISOR = 2000
DEFAULT_SAMPLES = 500
MIN_STEP_DIVISOR = 100

# tolerances checked on every sampled state
TRACE_DRIFT_TOL = 1e-7
NEGATIVITY_TOL = 1e-7
HERMITICITY_TOL = 1e-9


class IntegrationError(RuntimeError):
    """Propagation produced a state violating trace, positivity or hermiticity."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class UnsupportedShapeError(DomainError):
    pass


@dataclass(frozen=True)
class DecayChannel:
    """Spontaneous emission ``|from_level> -> |to_level>`` (1-based levels)."""

    from_level: int
    to_level: int
    rate: float

    def __post_init__(self):
        if not self.rate >= 0:
            raise DomainError(f"decay rate must be >= 0 (got {self.rate})")
        if not 1 <= self.to_level < self.from_level:
            raise DomainError(
                f"decay must lower the level (got {self.from_level} -> {self.to_level})")

    def operator(self, n: int) -> np.ndarray:
        L = np.zeros((n, n), dtype=complex)
        L[self.to_level - 1, self.from_level - 1] = 1.0
        return L


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diagonal(self.states, axis1=1, axis2=2)).copy()

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def n_levels(self) -> int:
        return self.states.shape[1]


def lindblad_channels(sys: LadderSystem) -> list[DecayChannel]:
    """Nearest-neighbour cascade channels; infinite lifetimes are omitted."""
    out = []
    for k, tau in enumerate(sys.lifetimes):
        if math.isinf(tau):
            continue
        out.append(DecayChannel(from_level=k + 2, to_level=k + 1, rate=1.0 / tau))
    return out


def coupling_matrix(sys: LadderSystem, transition: int) -> np.ndarray:
    """``d_n (|n><n+1| + |n+1><n|)``: the RWA Hamiltonian per unit envelope."""
    n = sys.n_levels
    if not 1 <= transition <= n - 1:
        raise DomainError(f"transition {transition} invalid for a {n}-level system")
    H = np.zeros((n, n), dtype=complex)
    d = sys.osc_strengths[transition - 1]
    H[transition - 1, transition] = d
    H[transition, transition - 1] = d
    return H


def rwa_hamiltonian(sys: LadderSystem, pulse: PulseSpec, t: float) -> np.ndarray:
    """Rotating-frame Hamiltonian of ``pulse`` at local time ``t`` (ns)."""
    dt = pulse.duration
    if not -1e-12 * dt <= t <= dt * (1 + 1e-12):
        raise DomainError(f"t = {t} ns outside pulse support [0, {dt}]")
    return pulse.envelope(t) * coupling_matrix(sys, pulse.transition)


def master_rhs(rho: np.ndarray, H: np.ndarray, channels: Sequence[DecayChannel]) -> np.ndarray:
    """Lindblad generator ``-i[H, rho] + sum_k G_k (L rho L^dag - {L^dag L, rho}/2)``."""
    rho = np.asarray(rho)
    H = np.asarray(H)
    n = rho.shape[0]
    if rho.shape != (n, n) or H.shape != (n, n):
        raise DomainError(f"dimension mismatch: rho {rho.shape}, H {H.shape}")
    out = -1j * (H @ rho - rho @ H)
    for ch in channels:
        if ch.from_level > n:
            raise DomainError(f"channel {ch.from_level}->{ch.to_level} exceeds dimension {n}")
        L = ch.operator(n)
        LdL = L.conj().T @ L
        out = out + ch.rate * (L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL))
    return out


def liouvillian(H: np.ndarray, channels: Sequence[DecayChannel] = ()) -> np.ndarray:
    """Superoperator acting on row-major ``vec(rho)``; ``vec(A X B) = (A kron B^T) vec(X)``."""
    n = H.shape[0]
    eye = np.eye(n)
    G = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for ch in channels:
        L = ch.operator(n)
        LdL = L.conj().T @ L
        G = G + ch.rate * (np.kron(L, L.conj()) - 0.5 * np.kron(LdL, eye) - 0.5 * np.kron(eye, LdL.T))
    return G


def check_sample(rho: np.ndarray, t: float) -> None:
    """Raise :class:`IntegrationError` if a sampled state is not a valid density matrix."""
    tr = abs(np.trace(rho) - 1)
    if tr > TRACE_DRIFT_TOL:
        raise IntegrationError(f"trace drift {tr:.3e} at t = {t:.6g} ns", t)
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > HERMITICITY_TOL:
        raise IntegrationError(f"hermiticity loss {herm:.3e} at t = {t:.6g} ns", t)
    lam = np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0]
    if lam < -NEGATIVITY_TOL:
        raise IntegrationError(f"negative eigenvalue {lam:.3e} at t = {t:.6g} ns", t)


def _check_trajectory(times, states):
    tr = np.abs(np.trace(states, axis1=1, axis2=2) - 1)
    herm = np.max(np.abs(states - states.conj().transpose(0, 2, 1)), axis=(1, 2))
    lam = np.linalg.eigvalsh((states + states.conj().transpose(0, 2, 1)) / 2)[:, 0]
    bad = (tr > TRACE_DRIFT_TOL) | (herm > HERMITICITY_TOL) | (lam < -NEGATIVITY_TOL)
    if bad.any():
        i = int(np.argmax(bad))
        check_sample(states[i], float(times[i]))


def _resolve_channels(sys, channels):
    return lindblad_channels(sys) if channels is None else list(channels)


def default_step(schedule: Schedule, divisor: float = DEFAULT_STEP_DIVISOR) -> float:
    durations = [p.duration for p in schedule.pulses]
    ref = min(durations) if durations else schedule.total_time
    return ref / divisor


def propagate(rho0, schedule: Schedule, sys: LadderSystem, step: float | None = None,
              sample_every: float | None = None, *, channels=None,
              check_resolution: bool = True) -> Trajectory:
    """Integrate the master equation through ``schedule`` with fixed-step RK4.

    ``step`` defaults to the shortest pulse over 2000 and ``sample_every`` to
    ``total_time / 500``. Each segment is split into a whole number of equal
    steps no longer than ``step``. Sampled states are checked, never
    renormalised. ``channels`` overrides the cascade derived from ``sys``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    n = sys.n_levels
    if rho0.shape != (n, n):
        raise DomainError(f"rho0 has shape {rho0.shape}, expected {(n, n)}")
    schedule.check_against(sys)
    if schedule.total_time <= 0:
        return Trajectory(np.array([0.0]), rho0[None].copy())

    if step is None:
        step = default_step(schedule)
    if not step > 0:
        raise DomainError(f"step must be > 0 (got {step})")
    if check_resolution and schedule.pulses:
        shortest = min(p.duration for p in schedule.pulses)
        if step > shortest / MIN_STEP_DIVISOR * (1 + 1e-12):
            raise DomainError(
                f"step {step} ns exceeds shortest pulse / {MIN_STEP_DIVISOR} = {shortest / MIN_STEP_DIVISOR} ns")
    if sample_every is None:
        sample_every = schedule.total_time / DEFAULT_SAMPLES

    static = liouvillian(np.zeros((n, n), dtype=complex), _resolve_channels(sys, channels))
    zero = np.zeros_like(static)
    times = [np.array([0.0])]
    states = [rho0.reshape(1, n * n)]
    v = rho0.reshape(-1)
    for t0, t1, pulse in schedule.segments():
        dur = t1 - t0
        if dur <= 0:
            continue
        n_steps = max(1, math.ceil(dur / step - 1e-9))
        h = dur / n_steps
        stride = max(1, int(round(sample_every / h)))
        if pulse is None:
            drive, code, amp = zero, _kernels.SHAPE_CODES[None], 0.0
        else:
            drive = liouvillian(coupling_matrix(sys, pulse.transition))
            code, amp = _kernels.SHAPE_CODES[pulse.envelope.shape], pulse.envelope.amplitude
        out = _kernels.rk4_segment(v, drive, static, code, float(amp), float(dur), n_steps, stride)
        idx = np.arange(stride, n_steps + 1, stride)
        if idx.size == 0 or idx[-1] != n_steps:
            idx = np.append(idx, n_steps)
        seg_t = t0 + idx * h
        seg_t[-1] = t1
        times.append(seg_t)
        states.append(out[1:])
        v = out[-1]

    traj = Trajectory(np.concatenate(times), np.concatenate(states).reshape(-1, n, n))
    _check_trajectory(traj.times, traj.states)
    return traj


def propagate_expm(rho0, schedule: Schedule, sys: LadderSystem, sample_every: float | None = None,
                   *, channels=None) -> Trajectory:
    """Exact propagation for piecewise-constant (square) schedules.

    Exponentiates the ``N^2 x N^2`` Liouvillian on each constant segment.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    n = sys.n_levels
    if rho0.shape != (n, n):
        raise DomainError(f"rho0 has shape {rho0.shape}, expected {(n, n)}")
    schedule.check_against(sys)
    for p in schedule.pulses:
        if p.envelope.shape != "square":
            raise UnsupportedShapeError(
                f"propagate_expm needs square envelopes, got {p.envelope.shape!r}")
    if schedule.total_time <= 0:
        return Trajectory(np.array([0.0]), rho0[None].copy())
    if sample_every is None:
        sample_every = schedule.total_time / DEFAULT_SAMPLES

    chans = _resolve_channels(sys, channels)
    times, states = [0.0], [rho0]
    v = rho0.reshape(-1)
    for t0, t1, pulse in schedule.segments():
        dur = t1 - t0
        if dur <= 0:
            continue
        H = np.zeros((n, n), dtype=complex) if pulse is None else \
            pulse.envelope.amplitude * coupling_matrix(sys, pulse.transition)
        k = max(1, math.ceil(dur / sample_every - 1e-9))
        U = expm(liouvillian(H, chans) * (dur / k))
        for i in range(1, k + 1):
            v = U @ v
            times.append(t1 if i == k else t0 + i * dur / k)
            states.append(v.reshape(n, n))
    return Trajectory(np.array(times), np.array(states))

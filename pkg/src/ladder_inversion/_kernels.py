"""Fixed-step RK4 kernels for a vectorised Lindblad equation.

The state is ``vec(rho)`` (row-major) and the generator on a pulse segment is
``f(t) * drive + static`` where ``f`` is the envelope. Two implementations
share one signature: a numba ``@njit`` kernel and a pure-numpy loop. Set
``LADDER_INVERSION_DISABLE_NUMBA=1`` to force the numpy path.
"""
from __future__ import annotations

import math
import os

import numpy as np

SHAPE_CODES = {"square": 0, "raised_cosine": 1, None: 2}

_DISABLE = os.environ.get("LADDER_INVERSION_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None


def _n_samples(n_steps, stride):
    return n_steps // stride + 1 + (1 if n_steps % stride else 0)


def envelope_value(shape, amplitude, duration, t):
    if shape == 0:
        return amplitude
    if shape == 1:
        s = math.sin(math.pi * t / duration)
        return amplitude * s * s
    return 0.0


def rk4_segment_numpy(v0, drive, static, shape, amplitude, duration, n_steps, stride):
    """Integrate ``dv/dt = (f(t) drive + static) v`` over ``[0, duration]``.

    Returns the states at step indices ``0, stride, 2*stride, ...`` plus the
    final step, one row per sample.
    """
    h = duration / n_steps
    out = np.empty((_n_samples(n_steps, stride), v0.size), dtype=np.complex128)
    v = v0.astype(np.complex128)
    out[0] = v
    j = 1
    for i in range(n_steps):
        t = i * h
        f0 = envelope_value(shape, amplitude, duration, t)
        fm = envelope_value(shape, amplitude, duration, t + 0.5 * h)
        f1 = envelope_value(shape, amplitude, duration, t + h)
        gm = fm * drive + static
        k1 = (f0 * drive + static) @ v
        k2 = gm @ (v + 0.5 * h * k1)
        k3 = gm @ (v + 0.5 * h * k2)
        k4 = (f1 * drive + static) @ (v + h * k3)
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (i + 1) % stride == 0 or i + 1 == n_steps:
            out[j] = v
            j += 1
    return out


if numba is not None:
    _envelope_jit = numba.njit(cache=True, nogil=True)(envelope_value)

    @numba.njit(cache=True, nogil=True)
    def _matvec(f, drive, static, v, out):
        m = v.size
        for a in range(m):
            acc = 0j
            for b in range(m):
                acc += (f * drive[a, b] + static[a, b]) * v[b]
            out[a] = acc

    @numba.njit(cache=True, nogil=True)
    def rk4_segment_numba(v0, drive, static, shape, amplitude, duration, n_steps, stride):
        m = v0.size
        h = duration / n_steps
        n_out = n_steps // stride + 1
        if n_steps % stride:
            n_out += 1
        out = np.empty((n_out, m), dtype=np.complex128)
        v = v0.astype(np.complex128)
        tmp = np.empty(m, dtype=np.complex128)
        k1 = np.empty(m, dtype=np.complex128)
        k2 = np.empty(m, dtype=np.complex128)
        k3 = np.empty(m, dtype=np.complex128)
        k4 = np.empty(m, dtype=np.complex128)
        out[0] = v
        j = 1
        for i in range(n_steps):
            t = i * h
            f0 = _envelope_jit(shape, amplitude, duration, t)
            fm = _envelope_jit(shape, amplitude, duration, t + 0.5 * h)
            f1 = _envelope_jit(shape, amplitude, duration, t + h)
            _matvec(f0, drive, static, v, k1)
            for a in range(m):
                tmp[a] = v[a] + 0.5 * h * k1[a]
            _matvec(fm, drive, static, tmp, k2)
            for a in range(m):
                tmp[a] = v[a] + 0.5 * h * k2[a]
            _matvec(fm, drive, static, tmp, k3)
            for a in range(m):
                tmp[a] = v[a] + h * k3[a]
            _matvec(f1, drive, static, tmp, k4)
            for a in range(m):
                v[a] = v[a] + (h / 6.0) * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a])
            if (i + 1) % stride == 0 or i + 1 == n_steps:
                out[j] = v
                j += 1
        return out
else:  # pragma: no cover
    rk4_segment_numba = None

if rk4_segment_numba is not None and not _DISABLE:
    BACKEND = "numba"
    rk4_segment = rk4_segment_numba
else:
    BACKEND = "numpy"
    rk4_segment = rk4_segment_numpy

"""Closed-form reference solutions used to validate the propagators."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .model import DomainError

DEGENERATE_RATE_TOL = 1e-12


def rabi_populations(theta: float) -> tuple[float, float]:
    """``(p_lower, p_upper)`` after a resonant rotation ``theta = d * area``."""
    return math.cos(theta) ** 2, math.sin(theta) ** 2


def _divided_difference(nodes, t):
    """Divided difference of ``x -> exp(-x t)`` over ``nodes``.

    Coincident nodes (spread below ``DEGENERATE_RATE_TOL``) use the confluent
    limit ``f^(k)(x) / k!``.
    """
    nodes = sorted(nodes)
    if nodes[-1] - nodes[0] < DEGENERATE_RATE_TOL:
        k = len(nodes) - 1
        x = sum(nodes) / len(nodes)
        return (-t) ** k * math.exp(-x * t) / math.factorial(k)
    return (_divided_difference(nodes[1:], t) - _divided_difference(nodes[:-1], t)) / (nodes[-1] - nodes[0])


def cascade_populations(rates: Sequence[float], t: float, start_level: int) -> np.ndarray:
    """Bateman-chain populations of an undriven cascade started in ``start_level``.

    ``rates[k]`` is the decay rate of level ``k + 2`` into level ``k + 1``;
    level 1 is stable. Returns ``N = len(rates) + 1`` populations.
    """
    n = len(rates) + 1
    if not 1 <= start_level <= n:
        raise DomainError(f"start level {start_level} outside 1..{n}")
    if t < 0:
        raise DomainError("t must be >= 0")
    lam = [0.0] + [float(g) for g in rates]  # lam[j] = decay rate of level j + 1
    s = start_level - 1
    p = np.zeros(n)
    for j in range(s + 1):
        chain = lam[j:s + 1]
        coeff = math.prod(lam[j + 1:s + 1]) * (-1) ** (s - j)
        p[j] = coeff * _divided_difference(chain, t)
    return p

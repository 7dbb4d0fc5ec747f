"""Deterministic hitting-time law of the Poisson walk.

Propagates the probability mass over positions ``0 .. xmax`` iteration by
iteration, removing the mass that lands on 0.  Mass pushed above ``xmax`` is
tracked separately; its chance of ever returning is negligible for the
default ``xmax`` because the jump rates only grow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class HittingLaw:
    k: int
    c: float
    r: int
    pmf: np.ndarray        # pmf[l] = Pr(hit at iteration l); pmf[0] = 0
    overflow: float        # mass that left the window [0, xmax]
    alive: float           # mass still inside the window at the horizon

    @property
    def hit_prob(self) -> float:
        return float(math.fsum(self.pmf))

    @property
    def survival(self) -> float:
        return 1.0 - self.hit_prob


def hitting_law(k: int, c: float, r: int, horizon: int = 10_000, xmax: int = 600,
                tol: float = 1e-300) -> HittingLaw:
    """Exact law of the first hitting time of 0, up to ``horizon`` iterations.

    Stops early once the mass inside the window is below ``tol``.
    """
    p = np.zeros(xmax + 1)
    p[k] = 1.0
    pmf = np.zeros(horizon + 1)
    overflow = 0.0
    support = np.arange(xmax + 1)
    last = horizon
    for i in range(1, horizon + 1):
        rate = math.comb(i - 1, r - 1) * c**r
        jump = stats.poisson.pmf(support, rate) if rate > 0 else np.eye(1, xmax + 1)[0]
        # position x >= 1 moves to x - 1 + jump; index shift keeps it at (x - 1) + jump
        moved = np.convolve(p[1:], jump)
        overflow += p[1:].sum() - moved[: xmax + 1].sum()
        p = moved[: xmax + 1].copy()
        pmf[i] = p[0]
        p[0] = 0.0
        if p.sum() < tol:
            last = i
            break
    return HittingLaw(k, c, r, pmf[: last + 1], float(overflow), float(p.sum()))


def hit_probability(k: int, c: float, r: int, **kw) -> float:
    return hitting_law(k, c, r, **kw).hit_prob

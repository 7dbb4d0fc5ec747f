"""The inhomogeneous Poisson random walk of the critical regime.

A walk starts at ``x = k``; in iteration ``i`` it moves left by one and right
by ``Poisson(lam(i))`` with ``lam(i) = C(i-1, r-1) * c**r``.  It is *hit* when
it reaches 0.  For ``G(n, c n**(-1/r))`` with ``k`` seeds, the hit probability
is the limiting probability that the cascade stops short of full infection,
so ``1 - Pr(hit)`` is the full-infection probability.

Walks are simulated until they hit, until they are certified to escape, or
until ``max_iter``.  The escape certificate bounds the probability of ever
returning to 0 from position ``x`` when ``lam(i+1) > 1``::

    Pr(hit later) <= exp(-x kappa) / (1 - exp(-kappa)),  kappa = lam - 1 - log(lam)

(a Chernoff bound on the Poisson lower tail summed over hitting times, valid
because ``lam`` is nondecreasing).  A walk is stopped as escaped once the bound
drops below ``escape_eps``; the resulting bias is at most ``escape_eps`` per
trial.  ``truncated`` counts walks that reach ``max_iter`` without either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, TextIO

import numba as nb
import numpy as np
from scipy import stats

from . import rng

DEFAULT_MAX_ITER = 1000
DEFAULT_ESCAPE_EPS = 1e-30

PHASE_NONE, PHASE_SYMM, PHASE_SKEW = 0, 1, 2
PHASE_NAMES = {PHASE_NONE: "none", PHASE_SYMM: "symm", PHASE_SKEW: "skew"}

HIT, ESCAPED, TRUNCATED = 0, 1, 2


def lam(i: int, c: float, r: int) -> float:
    """Poisson rate of the rightward jump in iteration ``i`` (zero for ``i < r``)."""
    if i < 1:
        raise ValueError(f"iterations are numbered from 1, got {i}")
    return math.comb(i - 1, r - 1) * c**r


def lam_table(c: float, r: int, max_iter: int) -> np.ndarray:
    """``lam(i)`` for ``i = 0 .. max_iter + 1`` (entry 0 is unused and zero)."""
    out = np.zeros(max_iter + 2)
    for i in range(1, max_iter + 2):
        out[i] = lam(i, c, r)
    return out


@dataclass(frozen=True)
class WalkParams:
    k: int
    c: float
    r: int
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        if self.r < 2:
            raise ValueError(f"r must be >= 2, got {self.r}")
        if self.k < self.r:
            raise ValueError(f"start position k={self.k} must be >= r={self.r}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.max_iter < self.k:
            raise ValueError(f"max_iter={self.max_iter} is below k={self.k}")


@dataclass(frozen=True)
class WalkOutcome:
    hit: bool
    hit_iter: int | None
    truncated: bool


@dataclass(frozen=True)
class HitEstimate:
    """Estimate of ``Pr(hit)``.

    ``method`` is ``"plain"`` (hit counting, Wilson interval) or ``"tilted"``
    (importance sampling with Poisson rates scaled by ``theta``; normal
    interval from the weighted standard error).
    """

    k: int
    p_hat: float
    trials: int
    ci_low: float
    ci_high: float
    truncated_count: int
    hits: int
    se: float
    method: str = "plain"
    theta: float = 1.0


def wilson_interval(hits: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(int(hits), int(trials)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


# --------------------------------------------------------------------------
# numba kernels

@nb.njit(cache=True, nogil=True)
def _log_escape_bound(x, lam_next):
    if lam_next <= 1.0:
        return 0.0
    kappa = lam_next - 1.0 - math.log(lam_next)
    return -x * kappa - math.log(-math.expm1(-kappa))


@nb.njit(cache=True, nogil=True)
def _walk_kernel(gen, lamt, k, theta, log_eps, hit_iter, status, logw):
    max_iter = lamt.shape[0] - 2
    log_theta = math.log(theta)
    for t in range(hit_iter.shape[0]):
        x = k
        lw = 0.0
        st = TRUNCATED
        hi = -1
        for i in range(1, max_iter + 1):
            li = lamt[i]
            if theta == 1.0:
                xi = gen.poisson(li)
            else:
                xi = gen.poisson(theta * li)
                lw += -(1.0 - theta) * li - xi * log_theta
            x += xi - 1
            if x == 0:
                st = HIT
                hi = i
                break
            if _log_escape_bound(x, lamt[i + 1]) < log_eps:
                st = ESCAPED
                break
        hit_iter[t] = hi
        status[t] = st
        logw[t] = lw


@nb.njit(cache=True, nogil=True)
def _depth_kernel(gen, lamt, kmax, log_eps, depth, undecided):
    """Deepest level reached by the partial sums, capped at ``kmax``.

    The walk from ``k`` hits exactly when the running minimum of
    ``sum(xi_j - 1)`` reaches ``-k``, so one increment path answers every
    start position at once.
    """
    max_iter = lamt.shape[0] - 2
    for t in range(depth.shape[0]):
        s = 0
        m = 0
        open_ = True
        for i in range(1, max_iter + 1):
            s += gen.poisson(lamt[i]) - 1
            if s < m:
                m = s
            if -m >= kmax:
                open_ = False
                break
            if _log_escape_bound(1 - m + s, lamt[i + 1]) < log_eps:
                open_ = False
                break
        depth[t] = min(-m, kmax)
        undecided[t] = open_


@nb.njit(cache=True, nogil=True)
def _thinning_kernel(gen, lam_big, keep, k, log_eps, hit_small, hit_big):
    """Walks at two values of c sharing one increment path.

    Increments at the larger ``c`` are thinned with probability ``keep`` to
    give the smaller ``c``, so the larger-c walk is never below the other.
    """
    max_iter = lam_big.shape[0] - 2
    for t in range(hit_small.shape[0]):
        xs = k
        xb = k
        hs = False
        hb = False
        for i in range(1, max_iter + 1):
            xi = gen.poisson(lam_big[i])
            xi_small = gen.binomial(xi, keep) if xi > 0 else 0
            if not hs:
                xs += xi_small - 1
                if xs == 0:
                    hs = True
            if not hb:
                xb += xi - 1
                if xb == 0:
                    hb = True
            small_done = hs or _log_escape_bound(xs, lam_big[i + 1] * keep) < log_eps
            big_done = hb or _log_escape_bound(xb, lam_big[i + 1]) < log_eps
            if small_done and big_done:
                break
        hit_small[t] = hs
        hit_big[t] = hb


@nb.njit(cache=True, nogil=True)
def _resolved2d(x, y, lam_next, log_eps):
    if x == 0 and y == 0:
        return True
    if x > 0 and _log_escape_bound(x, lam_next) < log_eps:
        return True
    if y > 0 and _log_escape_bound(y, lam_next) < log_eps:
        return True
    return False


@nb.njit(cache=True, nogil=True)
def _free2d_kernel(gen, lamt, x0, y0, log_eps, hit_iter, status):
    """Two independent Poisson walks, each frozen once it reaches its axis."""
    max_iter = lamt.shape[0] - 2
    for t in range(hit_iter.shape[0]):
        x = x0
        y = y0
        st = TRUNCATED
        hi = -1
        for i in range(1, max_iter + 1):
            li = lamt[i]
            if x > 0:
                x += gen.poisson(li) - 1
            if y > 0:
                y += gen.poisson(li) - 1
            if x == 0 and y == 0:
                st = HIT
                hi = i
                break
            if _resolved2d(x, y, lamt[i + 1], log_eps):
                st = ESCAPED
                break
        hit_iter[t] = hi
        status[t] = st


@nb.njit(cache=True, nogil=True)
def _is_symm(xa, ya, xb, yb):
    return xa - xb == yb - ya and xa + xb == ya + yb


@nb.njit(cache=True, nogil=True)
def _coupled_kernel(gen, lamt, k, log_eps, broken, a_iter, b_iter, phase_out, trunc, err):
    """A from (k+2, k) coupled to a freely moving B from (k+1, k+1).

    Phase I copies B's steps into A until A and B are mirror images (checked
    after every step) or A ends an iteration on y = 0.  After a mirror event A
    is B reflected in y = x.  After the skew event A copies B's x-moves until B
    ends an iteration on x = 0 (iteration T*); from then on A's x-advance in
    iteration T*+t is B's y-advance in iteration T_skew+t plus the x-part of
    Poisson(2 (lam(T*+t) - lam(T_skew+t))) extra steps, for as long as B had
    not yet reached y = 0 in that earlier iteration.  Afterwards A moves freely.
    ``broken`` drops the extra steps (a deliberately wrong coupling).
    """
    max_iter = lamt.shape[0] - 2
    bsum = np.zeros(max_iter + 2, dtype=np.int64)
    for t in range(a_iter.shape[0]):
        xa = k + 2
        ya = k
        xb = k + 1
        yb = k + 1
        phase = 0  # 0: phase I, 1: symm, 2: skew before T*, 3: skew after T*
        t_skew = -1
        t_star = -1
        t_by0 = -1
        ahit = -1
        bhit = -1
        done = False
        for i in range(1, max_iter + 1):
            li = lamt[i]
            if bhit < 0:
                J = gen.poisson(2.0 * li)
                if phase == 0:
                    if xa <= 0 or ya <= 0 or xb <= 0 or yb <= 0:
                        err[t] = 1
                    xa -= 1
                    ya -= 1
                    xb -= 1
                    yb -= 1
                    if _is_symm(xa, ya, xb, yb):
                        phase = 1
                    for _ in range(J):
                        right = gen.random() < 0.5
                        if right:
                            xb += 1
                        else:
                            yb += 1
                        if phase == 0:
                            if right:
                                xa += 1
                            else:
                                ya += 1
                            if _is_symm(xa, ya, xb, yb):
                                phase = 1
                    if phase == 1:
                        xa = yb
                        ya = xb
                    elif ya == 0:
                        phase = 2
                        t_skew = i
                        if yb != 1 or xa != xb + 1 or xa < 2:
                            err[t] = 2
                else:
                    step0_x = -1 if xb > 0 else 0
                    if xb > 0 and yb > 0:
                        ax = gen.binomial(J, 0.5)
                        ay = J - ax
                        xb += ax - 1
                        yb += ay - 1
                    elif xb == 0:
                        ax = 0
                        ay = gen.binomial(J, 0.5)
                        yb += ay - 1
                    else:
                        ax = gen.binomial(J, 0.5)
                        ay = 0
                        xb += ax - 1
                    bsum[i] = ay
                    if phase == 1:
                        xa = yb
                        ya = xb
                    elif phase == 2:
                        if step0_x != -1:
                            err[t] = 3
                        xa += ax - 1
                if yb == 0 and t_by0 < 0:
                    t_by0 = i
                if xb == 0 and yb == 0:
                    bhit = i
                if phase == 2 and xb == 0:
                    phase = 3
                    t_star = i
                    if xa != 1 or ya != 0:
                        err[t] = 4
            elif phase == 1:
                err[t] = 5
            if phase == 3 and i > t_star and ahit < 0:
                iota = t_skew + (i - t_star)
                coupled = t_by0 < 0 or iota <= t_by0
                if coupled:
                    extra = 0
                    if not broken:
                        d = gen.poisson(2.0 * (li - lamt[iota]))
                        extra = gen.binomial(d, 0.5) if d > 0 else 0
                    xa += bsum[iota] + extra - 1
                else:
                    J = gen.poisson(2.0 * li)
                    xa += gen.binomial(J, 0.5) - 1
            if ahit < 0 and xa == 0 and ya == 0:
                ahit = i
            a_done = ahit >= 0 or _resolved2d(xa, ya, lamt[i + 1], log_eps)
            b_done = bhit >= 0 or _resolved2d(xb, yb, lamt[i + 1], log_eps)
            if a_done and b_done:
                done = True
                break
        a_iter[t] = ahit
        b_iter[t] = bhit
        phase_out[t] = PHASE_NONE if phase == 0 else (PHASE_SYMM if phase == 1 else PHASE_SKEW)
        trunc[t] = not done


# --------------------------------------------------------------------------
# public API

def _log_eps(escape_eps: float) -> float:
    return math.log(escape_eps) if escape_eps > 0 else -math.inf


def _run_walks(k, c, r, trials, max_iter, seed, theta=1.0, stream=(rng.WALK,), threads=1,
               escape_eps=DEFAULT_ESCAPE_EPS):
    lamt = lam_table(c, r, max_iter)
    log_eps = _log_eps(escape_eps)

    def block(b, start, stop):
        gen = rng.substream(seed, *stream, b)
        hi = np.empty(stop - start, dtype=np.int64)
        st = np.empty(stop - start, dtype=np.int8)
        lw = np.empty(stop - start)
        _walk_kernel(gen, lamt, int(k), float(theta), log_eps, hi, st, lw)
        return hi, st, lw

    parts = rng.map_blocks(block, trials, threads)
    return tuple(np.concatenate(p) for p in zip(*parts))


def simulate_walk(params: WalkParams, seed: int, escape_eps: float = DEFAULT_ESCAPE_EPS) -> WalkOutcome:
    hi, st, _ = _run_walks(params.k, params.c, params.r, 1, params.max_iter, seed,
                           escape_eps=escape_eps)
    hit = st[0] == HIT
    return WalkOutcome(bool(hit), int(hi[0]) if hit else None, bool(st[0] == TRUNCATED))


def estimate_hit_prob(k: int, c: float, r: int, trials: int, max_iter: int = DEFAULT_MAX_ITER,
                      seed: int = rng.DEFAULT_SEED, threads: int = 1,
                      escape_eps: float = DEFAULT_ESCAPE_EPS) -> HitEstimate:
    """Plain Monte Carlo estimate of ``Pr(hit)`` with a 95% Wilson interval.

    Truncated walks count as not hit.
    """
    WalkParams(k, c, r, max_iter)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    _, st, _ = _run_walks(k, c, r, trials, max_iter, seed, stream=(rng.WALK, k),
                          threads=threads, escape_eps=escape_eps)
    hits = int((st == HIT).sum())
    p = hits / trials
    lo, hi = wilson_interval(hits, trials)
    return HitEstimate(k, p, trials, lo, hi, int((st == TRUNCATED).sum()), hits,
                       math.sqrt(p * (1 - p) / trials))


def default_tilt(k: int, c: float, r: int) -> float:
    """Rate scaling making the expected total jump over the first ``k`` iterations about one."""
    total = sum(lam(i, c, r) for i in range(1, k + 1))
    return 1.0 if total <= 1.0 else 1.0 / total


def estimate_hit_prob_tilted(k: int, c: float, r: int, trials: int,
                             max_iter: int = DEFAULT_MAX_ITER, seed: int = rng.DEFAULT_SEED,
                             theta: float | None = None, threads: int = 1,
                             escape_eps: float = DEFAULT_ESCAPE_EPS) -> HitEstimate:
    """Importance-sampled ``Pr(hit)`` for small hit probabilities.

    Jumps are drawn from ``Poisson(theta * lam(i))`` and each hitting path is
    weighted by its likelihood ratio up to the hitting time.  Unbiased for any
    ``0 < theta <= 1``; the default follows :func:`default_tilt`.
    """
    WalkParams(k, c, r, max_iter)
    if trials < 2:
        raise ValueError("the tilted estimator needs at least two trials")
    theta = default_tilt(k, c, r) if theta is None else float(theta)
    if not 0 < theta <= 1:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    _, st, lw = _run_walks(k, c, r, trials, max_iter, seed, theta=theta,
                           stream=(rng.WALK, k, 1), threads=threads, escape_eps=escape_eps)
    w = np.where(st == HIT, np.exp(lw), 0.0)
    p = float(w.mean())
    se = float(w.std(ddof=1) / math.sqrt(trials))
    return HitEstimate(k, p, trials, max(0.0, p - 1.96 * se), min(1.0, p + 1.96 * se),
                       int((st == TRUNCATED).sum()), int((st == HIT).sum()), se, "tilted", theta)


def hit_distribution(k: int, c: float, r: int, trials: int, max_iter: int = DEFAULT_MAX_ITER,
                     seed: int = rng.DEFAULT_SEED, threads: int = 1) -> dict[float, float]:
    """Empirical law of the hitting iteration; key ``math.inf`` collects
    walks that never hit (escaped or truncated)."""
    WalkParams(k, c, r, max_iter)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hi, st, _ = _run_walks(k, c, r, trials, max_iter, seed, stream=(rng.WALK, k),
                           threads=threads)
    ells, counts = np.unique(hi[st == HIT], return_counts=True)
    out: dict[float, float] = {int(ell): cnt / trials for ell, cnt in zip(ells, counts)}
    out[math.inf] = int((st != HIT).sum()) / trials
    return out


def hit_probs_common(ks: Sequence[int], c: float, r: int, trials: int,
                     max_iter: int = DEFAULT_MAX_ITER, seed: int = rng.DEFAULT_SEED,
                     threads: int = 1) -> list[HitEstimate]:
    """``Pr(hit)`` for several start positions from one set of increment paths.

    Common random numbers make the estimates nonincreasing in ``k`` trial by
    trial.
    """
    ks = [int(k) for k in ks]
    if not ks:
        return []
    kmax = max(ks)
    lamt = lam_table(c, r, max_iter)
    log_eps = _log_eps(DEFAULT_ESCAPE_EPS)

    def block(b, start, stop):
        gen = rng.substream(seed, rng.DEPTH, b)
        depth = np.empty(stop - start, dtype=np.int64)
        open_ = np.empty(stop - start, dtype=np.bool_)
        _depth_kernel(gen, lamt, kmax, log_eps, depth, open_)
        return depth, open_

    depth, open_ = (np.concatenate(p) for p in zip(*rng.map_blocks(block, trials, threads)))
    out = []
    for k in ks:
        hits = int((depth >= k).sum())
        p = hits / trials
        lo, hi = wilson_interval(hits, trials)
        trunc = int(((depth < k) & open_).sum())
        out.append(HitEstimate(k, p, trials, lo, hi, trunc, hits, math.sqrt(p * (1 - p) / trials)))
    return out


def depth_samples(kmax: int, c: float, r: int, trials: int, max_iter: int = DEFAULT_MAX_ITER,
                  seed: int = rng.DEFAULT_SEED) -> np.ndarray:
    """Per-trial deepest hit level (capped at ``kmax``); start ``k`` hits iff depth >= k."""
    lamt = lam_table(c, r, max_iter)
    depth = np.empty(trials, dtype=np.int64)
    open_ = np.empty(trials, dtype=np.bool_)
    _depth_kernel(rng.substream(seed, rng.DEPTH), lamt, int(kmax), _log_eps(DEFAULT_ESCAPE_EPS),
                  depth, open_)
    return depth


def thinning_pair(k: int, c_small: float, c_large: float, r: int, trials: int,
                  max_iter: int = DEFAULT_MAX_ITER, seed: int = rng.DEFAULT_SEED):
    """Hit indicators at ``c_small`` and ``c_large`` from one thinned increment path."""
    if not 0 < c_small <= c_large:
        raise ValueError("need 0 < c_small <= c_large")
    lamt = lam_table(c_large, r, max_iter)
    keep = (c_small / c_large) ** r
    hs = np.empty(trials, dtype=np.bool_)
    hb = np.empty(trials, dtype=np.bool_)
    _thinning_kernel(rng.substream(seed, rng.THINNING), lamt, keep, int(k),
                     _log_eps(DEFAULT_ESCAPE_EPS), hs, hb)
    return hs, hb


def split_poisson(rate: float, size: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """``Poisson(2 rate)`` unit steps, each sent to x or y by a fair coin."""
    gen = rng.substream(seed, rng.SPLIT)
    steps = gen.poisson(2.0 * rate, size=size)
    xs = gen.binomial(steps, 0.5)
    return xs, steps - xs


@dataclass(frozen=True)
class LogConcavityRow:
    k: int
    product: float   # q_{k+2} * q_k
    square: float    # q_{k+1} ** 2
    se: float        # first-order propagated standard error of square - product
    verdict: str     # "holds" | "indeterminate" | "violated"

    @property
    def margin(self) -> float:
        return self.square - self.product


def log_concavity_verdict(q0: HitEstimate, q1: HitEstimate, q2: HitEstimate) -> LogConcavityRow:
    product = q2.p_hat * q0.p_hat
    square = q1.p_hat**2
    se = math.sqrt((2 * q1.p_hat * q1.se) ** 2 + (q0.p_hat * q2.se) ** 2 + (q2.p_hat * q0.se) ** 2)
    margin = square - product
    if margin > 2 * se:
        verdict = "holds"
    elif -margin > 2 * se:
        verdict = "violated"
    else:
        verdict = "indeterminate"
    return LogConcavityRow(q0.k, product, square, se, verdict)


def check_log_concavity(c: float, r: int, k_min: int, k_max: int, trials: int,
                        max_iter: int = DEFAULT_MAX_ITER, seed: int = rng.DEFAULT_SEED,
                        method: str = "tilted", threads: int = 1):
    """Test ``q_{k+1}^2 > q_{k+2} q_k`` for ``k = k_min .. k_max``.

    Each ``q_k`` comes from its own substream.  ``method="plain"`` counts hits;
    ``"tilted"`` uses importance sampling, which keeps the relative error
    bounded when ``q_k`` is tiny.  Returns ``(rows, estimates)``.
    """
    if k_min < r:
        raise ValueError(f"k_min={k_min} must be >= r={r}")
    if method == "plain":
        est = {k: estimate_hit_prob(k, c, r, trials, max_iter, seed, threads)
               for k in range(k_min, k_max + 3)}
    elif method == "tilted":
        est = {k: estimate_hit_prob_tilted(k, c, r, trials, max_iter, seed, threads=threads)
               for k in range(k_min, k_max + 3)}
    else:
        raise ValueError(f"unknown method {method!r}")
    rows = [log_concavity_verdict(est[k], est[k + 1], est[k + 2]) for k in range(k_min, k_max + 1)]
    return rows, [est[k] for k in sorted(est)]


@dataclass(frozen=True)
class CoupledOutcome:
    a_hit: bool
    b_hit: bool
    phase: str


@dataclass(frozen=True)
class CoupledEnsemble:
    """Per-trial results of the A/B coupling (hit iteration -1 = no hit)."""

    k: int
    a_iter: np.ndarray
    b_iter: np.ndarray
    phase: np.ndarray
    truncated: np.ndarray

    @property
    def a_hit(self) -> np.ndarray:
        return self.a_iter >= 0

    @property
    def b_hit(self) -> np.ndarray:
        return self.b_iter >= 0

    def counts(self) -> dict[str, int]:
        a, b = self.a_hit, self.b_hit
        return {
            "trials": int(a.size),
            "a_hit": int(a.sum()),
            "b_hit": int(b.sum()),
            "a_not_b": int((a & ~b).sum()),
            "b_not_a": int((b & ~a).sum()),
            "symm": int((self.phase == PHASE_SYMM).sum()),
            "skew": int((self.phase == PHASE_SKEW).sum()),
            "symm_mismatch": int(((self.phase == PHASE_SYMM) & (a != b)).sum()),
            "truncated": int(self.truncated.sum()),
        }


def coupled_ensemble(k: int, c: float, r: int, trials: int, max_iter: int = DEFAULT_MAX_ITER,
                     seed: int = rng.DEFAULT_SEED, broken: bool = False,
                     threads: int = 1) -> CoupledEnsemble:
    WalkParams(k, c, r, max_iter)
    lamt = lam_table(c, r, max_iter)
    log_eps = _log_eps(DEFAULT_ESCAPE_EPS)

    def block(b, start, stop):
        gen = rng.substream(seed, rng.COUPLING, int(broken), b)
        m = stop - start
        ai = np.empty(m, dtype=np.int64)
        bi = np.empty(m, dtype=np.int64)
        ph = np.empty(m, dtype=np.int8)
        tr = np.empty(m, dtype=np.bool_)
        err = np.zeros(m, dtype=np.int8)
        _coupled_kernel(gen, lamt, int(k), log_eps, bool(broken), ai, bi, ph, tr, err)
        if err.any():
            raise RuntimeError(f"coupling invariant broken (code {int(err.max())})")
        return ai, bi, ph, tr

    ai, bi, ph, tr = (np.concatenate(p) for p in zip(*rng.map_blocks(block, trials, threads)))
    return CoupledEnsemble(k, ai, bi, ph, tr)


def coupled_trial(k: int, c: float, r: int, max_iter: int = DEFAULT_MAX_ITER,
                  seed: int = rng.DEFAULT_SEED) -> CoupledOutcome:
    e = coupled_ensemble(k, c, r, 1, max_iter, seed)
    return CoupledOutcome(bool(e.a_hit[0]), bool(e.b_hit[0]), PHASE_NAMES[int(e.phase[0])])


def free_walk_2d(x0: int, y0: int, c: float, r: int, trials: int,
                 max_iter: int = DEFAULT_MAX_ITER, seed: int = rng.DEFAULT_SEED,
                 threads: int = 1) -> np.ndarray:
    """Hitting iteration of (0, 0) for independent 2-D walks (-1 = no hit)."""
    lamt = lam_table(c, r, max_iter)
    log_eps = _log_eps(DEFAULT_ESCAPE_EPS)

    def block(b, start, stop):
        gen = rng.substream(seed, rng.FREE2D, x0, y0, b)
        hi = np.empty(stop - start, dtype=np.int64)
        st = np.empty(stop - start, dtype=np.int8)
        _free2d_kernel(gen, lamt, int(x0), int(y0), log_eps, hi, st)
        return hi

    return np.concatenate(rng.map_blocks(block, trials, threads))


def hit_buckets(hit_iter: np.ndarray, cutoff: int) -> np.ndarray:
    """Counts of (hit at iteration <= cutoff, hit later, no hit)."""
    hit = hit_iter >= 0
    early = hit & (hit_iter <= cutoff)
    return np.array([early.sum(), (hit & ~early).sum(), (~hit).sum()], dtype=np.int64)


@dataclass(frozen=True)
class MarginalCheck:
    walker: str
    coupled: np.ndarray
    reference: np.ndarray
    statistic: float
    pvalue: float


def coupling_marginal_check(k: int, c: float, r: int, trials: int,
                            max_iter: int = DEFAULT_MAX_ITER, seed: int = rng.DEFAULT_SEED,
                            walker: str = "A", broken: bool = False,
                            threads: int = 1) -> MarginalCheck:
    """Chi-square homogeneity test of coupled A (or B) against a free 2-D walk."""
    if trials < 10_000:
        raise ValueError("the marginal check needs at least 10^4 trials")
    ens = coupled_ensemble(k, c, r, trials, max_iter, seed, broken, threads)
    if walker == "A":
        coupled_iter, start = ens.a_iter, (k + 2, k)
    elif walker == "B":
        coupled_iter, start = ens.b_iter, (k + 1, k + 1)
    else:
        raise ValueError(f"walker must be 'A' or 'B', got {walker!r}")
    ref_iter = free_walk_2d(*start, c, r, trials, max_iter, seed, threads)
    cutoff = k + 2
    table = np.vstack([hit_buckets(coupled_iter, cutoff), hit_buckets(ref_iter, cutoff)])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return MarginalCheck(walker, table[0], table[1], 0.0, 1.0)
    res = stats.chi2_contingency(table, correction=False)
    return MarginalCheck(walker, table[0], table[1], float(res.statistic), float(res.pvalue))


CSV_COLUMNS = ("k", "trials", "hits", "truncated", "p_hat", "ci_low", "ci_high")


def write_estimates_csv(estimates: Sequence[HitEstimate], out: TextIO) -> None:
    out.write(",".join(CSV_COLUMNS) + "\n")
    for e in estimates:
        out.write(f"{e.k},{e.trials},{e.hits},{e.truncated_count},"
                  f"{e.p_hat:.10g},{e.ci_low:.10g},{e.ci_high:.10g}\n")

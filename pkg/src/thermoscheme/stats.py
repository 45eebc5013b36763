"""Sampling lifted measures and empirical ergodic statistics.

Orbits of the doubling map are run on 64-bit fixed-point words: each step
shifts left and draws the bit that enters at the bottom.  For Lebesgue
starts this is the exact law of the orbit; plain float iteration would
collapse to 0 after 53 steps.

Random substream ``s`` of a run seeded with ``seed`` uses ``seed ^ s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats as sps

from .errors import AllNoise, DegenerateVariance, NearCritical, QDiverges
from .maps import DELTA_CRIT, PiecewiseMap
from .thermo import TowerMeasure

SAMPLE_DEPTH = 12
REP_PASSES = 3
TWO64 = 2.0 ** 64


def substream(seed: int, s: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) ^ int(s))


@dataclass
class SampleSet:
    points: np.ndarray
    seed: int
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)


# ----------------------------------------------------------------- sampling

def _descend(tower: TowerMeasure, first: np.ndarray, depth: int,
             rng: np.random.Generator) -> np.ndarray:
    """Extend symbols ``first`` to words of length ``depth`` under the induced measure."""
    nu = tower.nu
    A, d = nu.alphabet_size, nu.depth
    n = len(first)
    words = np.empty((n, max(depth, d)), dtype=np.int64)
    words[:, 0] = first
    if d > 1:
        # depth-d block conditioned on its first symbol
        pi = np.array([nu.weights[w] for w in sorted(nu.weights)]).reshape(A, -1)
        cond = pi / pi.sum(axis=1, keepdims=True)
        cum = np.cumsum(cond, axis=1)
        u = rng.random(n)
        rest = (cum[first] < u[:, None]).sum(axis=1)
        rest = np.minimum(rest, A ** (d - 1) - 1)
        for j in range(d - 1, 0, -1):
            words[:, j] = rest % A
            rest //= A
    trans = np.array([nu.transition(s) for s in range(A ** d)])
    cum = np.cumsum(trans, axis=1)
    for j in range(d, depth):
        state = np.zeros(n, dtype=np.int64)
        for i in range(j - d, j):
            state = state * A + words[:, i]
        u = rng.random(n)
        words[:, j] = np.minimum((cum[state] < u[:, None]).sum(axis=1), A - 1)
    return words[:, :depth]


def _pull_back(tower: TowerMeasure, words: np.ndarray, y: np.ndarray,
               rng: np.random.Generator) -> np.ndarray:
    """Apply inverse branches right to left; lumped symbols pick a piece uniformly."""
    sch = tower.scheme
    for j in range(words.shape[1] - 1, -1, -1):
        col = words[:, j]
        out = np.empty_like(y)
        for a in np.unique(col):
            m = col == a
            e = sch.elements[a]
            x = np.asarray(sch.inverse(int(a), y[m]), dtype=float)
            if e.pieces > 1:
                # congruent translates of the representative piece
                k = rng.integers(0, e.pieces, size=int(m.sum()))
                x = e.hull.lo + (k + (x - e.J.lo) / e.J.length) * e.J.length
            out[m] = x
        y = out
    return y


def sample_lift(tower: TowerMeasure, n: int, seed: int = 0, depth: int = SAMPLE_DEPTH,
                mode: str = "representative") -> SampleSet:
    """Draw ``n`` points from the lifted measure.

    An element is drawn with probability ``tau nu / Q``, a depth-``depth``
    cylinder inside it from the induced measure, then a point of that
    cylinder (``mode="representative"``: the coded periodic point of the
    word; ``"uniform"``: the pull-back of a uniform point of ``W``), and a
    level ``k`` uniform below
    ``tau``.  The sample is ``f^k`` of the point.
    """
    if not math.isfinite(tower.Q):
        raise QDiverges("cannot sample a measure with infinite Q")
    if mode not in ("representative", "uniform"):
        raise ValueError(f"unknown mode {mode!r}")
    sch = tower.scheme
    rng = substream(seed, 0)
    taus = sch.taus[: tower.alphabet_size]
    w = taus * tower.symbol_mass
    first = rng.choice(len(w), size=n, p=w / w.sum())
    words = _descend(tower, first, depth, rng)
    W = sch.W
    if mode == "uniform":
        x = _pull_back(tower, words, W.lo + rng.random(n) * W.length, rng)
    else:
        # repeated pull-backs converge to the coded periodic point of the word
        x = np.full(n, W.mid)
        for _ in range(REP_PASSES):
            x = _pull_back(tower, words, x, rng)
    k = (rng.random(n) * taus[first]).astype(np.int64)
    f = sch.fmap
    for step in range(int(k.max()) + 1 if n else 0):
        m = k > step
        if not m.any():
            break
        x[m] = f(x[m])
    return SampleSet(x, seed, {"measure": tower.spec.tag() if tower.spec else "custom",
                               "depth": depth, "mode": mode, "Q": tower.Q})


# ----------------------------------------------------------------- orbits

def lebesgue_doubling_words(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2 ** 63, size=n, dtype=np.uint64) * np.uint64(2) + \
        rng.integers(0, 2, size=n, dtype=np.uint64)


def words_from_points(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Fixed-point words of points of (0, 1]; bits below float precision are drawn fresh."""
    hi = np.clip(np.floor(np.asarray(x, dtype=float) * 2.0 ** 53), 0, 2.0 ** 53 - 1).astype(np.uint64)
    low = rng.integers(0, 2 ** 11, size=len(hi), dtype=np.uint64)
    return (hi << np.uint64(11)) | low


def words_to_points(u: np.ndarray) -> np.ndarray:
    return (u >> np.uint64(11)).astype(float) * 2.0 ** -53 + 2.0 ** -54


class DoublingOrbit:
    """Stepper for the doubling map on fixed-point words."""

    def __init__(self, words: np.ndarray, rng: np.random.Generator):
        self.u = words.copy()
        self.rng = rng
        self._bits = np.zeros(0, dtype=np.uint64)
        self._left = 0

    def points(self) -> np.ndarray:
        return words_to_points(self.u)

    def step(self):
        if self._left == 0:
            self._bits = self.rng.integers(0, 2 ** 63, size=len(self.u), dtype=np.uint64)
            self._bits = self._bits * np.uint64(2) + \
                self.rng.integers(0, 2, size=len(self.u), dtype=np.uint64)
            self._left = 64
        self._left -= 1
        bit = (self._bits >> np.uint64(self._left)) & np.uint64(1)
        self.u = (self.u << np.uint64(1)) | bit


class FloatOrbit:
    def __init__(self, x: np.ndarray, fmap: PiecewiseMap):
        self.x = np.asarray(x, dtype=float).copy()
        self.fmap = fmap

    def points(self) -> np.ndarray:
        return self.x

    def step(self):
        self.x = self.fmap(self.x)


def orbit_stepper(fmap: PiecewiseMap, x0: np.ndarray, rng: np.random.Generator,
                  exact: bool | None = None):
    """Exact fixed-point stepping for the doubling map, float iteration otherwise."""
    if exact is None:
        exact = fmap.kind == "doubling"
    if exact:
        return DoublingOrbit(words_from_points(x0, rng), rng)
    return FloatOrbit(x0, fmap)


def lebesgue_doubling_starts(n: int, rng: np.random.Generator) -> DoublingOrbit:
    return DoublingOrbit(lebesgue_doubling_words(n, rng), rng)


# ----------------------------------------------------------------- Lyapunov

@dataclass
class LyapunovEstimate:
    value: float
    stderr: float
    resampled: int
    bracket: tuple[float, float] | None = None
    in_bracket: bool | None = None


def lyapunov(points, fmap: PiecewiseMap, orbit_len: int = 1, seed: int = 0,
             bracket: tuple[float, float] | None = None, tol: float = 1e-3,
             delta_crit: float = DELTA_CRIT, resample_budget: int = 1000,
             sampler: Callable[[int, np.random.Generator], np.ndarray] | None = None
             ) -> LyapunovEstimate:
    """Birkhoff average of ``log|df|`` along orbits started at ``points``.

    ``points`` is a SampleSet or array.  Starts whose orbit comes within
    ``delta_crit`` of a critical point are redrawn from ``sampler`` (when
    given) up to ``resample_budget`` times.  ``bracket=(log lambda1, log
    lambda3)`` is checked with tolerance ``tol``.
    """
    x = np.asarray(points.points if isinstance(points, SampleSet) else points, dtype=float)
    rng = substream(seed, 1)
    resampled = 0
    while True:
        orb = orbit_stepper(fmap, x, rng)
        acc = np.zeros(len(x))
        bad = np.zeros(len(x), dtype=bool)
        for _ in range(orbit_len):
            d = np.abs(fmap.derivative(orb.points()))
            bad |= d <= delta_crit
            acc += np.log(np.maximum(d, delta_crit))
            orb.step()
        nbad = int(bad.sum())
        if nbad == 0:
            break
        if sampler is None or resampled + nbad > resample_budget:
            raise NearCritical(f"{nbad} orbits pass within {delta_crit} of a critical point")
        x = x.copy()
        x[bad] = sampler(nbad, rng)
        resampled += nbad
    per = acc / orbit_len
    val = float(per.mean())
    se = float(per.std(ddof=1) / math.sqrt(len(per))) if len(per) > 1 else 0.0
    inside = None
    if bracket is not None:
        inside = bracket[0] - tol <= val <= bracket[1] + tol
    return LyapunovEstimate(val, se, resampled, bracket, inside)


# ------------------------------------------------------------- correlations

@dataclass
class CorrelationFit:
    lags: np.ndarray
    corr: np.ndarray
    stderr: np.ndarray
    K: float | None
    theta: float | None
    fit_lags: np.ndarray
    residual: float | None
    observables: tuple[str, str]

    @property
    def passed(self) -> bool:
        return self.theta is not None and 0.0 < self.theta < 1.0


def correlations(orbit, h1: Callable, h2: Callable, lag_max: int):
    """``C(k) = E[h1(f^k x) h2(x)] - E h1(f^k x) E h2(x)`` with Monte-Carlo errors."""
    x0 = orbit.points()
    h2x = np.asarray(h2(x0), dtype=float)
    n = len(x0)
    corr, se = [], []
    for k in range(lag_max + 1):
        a = np.asarray(h1(orbit.points()), dtype=float)
        prod = (a - a.mean()) * (h2x - h2x.mean())
        corr.append(float(prod.mean()))
        se.append(float(prod.std(ddof=1) / math.sqrt(n)))
        if k < lag_max:
            orbit.step()
    return np.arange(lag_max + 1), np.array(corr), np.array(se)


def correlation_fit(orbit, h1: Callable, h2: Callable, lag_max: int = 20,
                    names: tuple[str, str] = ("h1", "h2"), n_sigma: float = 3.0
                    ) -> CorrelationFit:
    """Weighted least-squares fit ``|C(k)| ~ K theta^k`` over lags ``k >= 1`` above noise.

    Raises AllNoise (with the table attached as ``.fit``) when no lag
    clears ``n_sigma`` standard errors.
    """
    lags, c, se = correlations(orbit, h1, h2, lag_max)
    sig = (lags >= 1) & (np.abs(c) > n_sigma * se)
    fit = CorrelationFit(lags, c, se, None, None, lags[sig], None, names)
    if not sig.any():
        err = AllNoise(f"no lag in 1..{lag_max} exceeds {n_sigma} standard errors")
        err.fit = fit
        raise err
    ks = lags[sig].astype(float)
    y = np.log(np.abs(c[sig]))
    if len(ks) == 1:
        theta = math.exp(y[0] / ks[0])
        K, resid = 1.0, 0.0
    else:
        # log|C| has standard error about se/|C|
        slope, icpt = np.polyfit(ks, y, 1, w=np.abs(c[sig]) / se[sig])
        theta, K = math.exp(slope), math.exp(icpt)
        resid = float(np.max(np.abs(y - (icpt + slope * ks))))
    fit.K, fit.theta, fit.residual = K, theta, resid
    return fit


# -------------------------------------------------------------------- CLT

@dataclass
class CLTReport:
    block: int
    blocks: int
    gamma: float
    ks_distance: float
    ks_pvalue: float
    gamma_short: float
    mean: float


def clt_test(orbit, observable: Callable, block: int, mean: float | None = None,
             short_factor: int = 16, coboundary_ratio: float = 0.5,
             gamma_min: float = 1e-6) -> CLTReport:
    """Normalized block sums ``(1/sqrt n) sum (h(f^i x) - int h)`` over independent starts.

    The number of blocks is the number of starts in ``orbit``.  Besides
    ``gamma < gamma_min``, a coboundary is flagged when the spread at block
    length ``n`` is less than ``coboundary_ratio`` times the spread at
    ``n / short_factor``: for a coboundary the sums telescope and the
    normalized spread decays like ``n^-1/2``.
    """
    m = len(orbit.points())
    short = max(1, block // short_factor)
    S = np.zeros(m)
    S_short = None
    for i in range(block):
        S += np.asarray(observable(orbit.points()), dtype=float)
        orbit.step()
        if i + 1 == short:
            S_short = S.copy()
    mu = float(S.sum() / (m * block)) if mean is None else float(mean)
    Z = (S - block * mu) / math.sqrt(block)
    Zs = (S_short - short * mu) / math.sqrt(short)
    gamma = float(Z.std(ddof=1))
    gamma_s = float(Zs.std(ddof=1))
    if gamma < gamma_min or (gamma_s > 0 and gamma < coboundary_ratio * gamma_s):
        raise DegenerateVariance(f"block spread {gamma:.3g} at n={block} against "
                                 f"{gamma_s:.3g} at n={short}: likely a coboundary")
    res = sps.kstest(Z / gamma, "norm")
    return CLTReport(block, m, gamma, float(res.statistic), float(res.pvalue), gamma_s, mu)


# -------------------------------------------------------------- observables

OBSERVABLES: dict[str, Callable] = {
    "x": lambda x: x,
    "x-1/2": lambda x: x - 0.5,
    "cos2pi": lambda x: np.cos(2 * np.pi * x),
    "const": lambda x: np.ones_like(x),
    # sin(2 pi f(x)) - sin(2 pi x) for the doubling map
    "coboundary-sin": lambda x: np.sin(4 * np.pi * x) - np.sin(2 * np.pi * x),
}

"""Interval maps with explicit branch structure.

A map is a finite list of monotone branches, each carrying closed-form
forward, derivative and inverse evaluators.  All evaluators accept floats
or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyPreimage, NearCritical, NoAlpha, OutOfDomain

DELTA_CRIT = 1e-8
EPS_INV = 1e-12


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval ({self.lo}, {self.hi})")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x, closed: bool = False):
        """Half-open membership ``lo < x <= hi``; ``closed`` adds ``lo``."""
        if closed:
            return (self.lo <= x) & (x <= self.hi)
        return (self.lo < x) & (x <= self.hi)

    def covers(self, other: "Interval", tol: float = 0.0) -> bool:
        return self.lo - tol <= other.lo and other.hi <= self.hi + tol

    def intersect(self, other: "Interval") -> "Interval | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo < hi else None

    def as_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Branch:
    domain: Interval
    direction: int  # +1 increasing, -1 decreasing
    forward: Callable
    derivative: Callable
    inverse: Callable

    @property
    def image(self) -> Interval:
        a, b = self.forward(self.domain.lo), self.forward(self.domain.hi)
        return Interval(min(a, b), max(a, b))

    def pull_back(self, target: Interval) -> Interval | None:
        """Preimage of ``target`` inside the branch domain (``None`` if empty)."""
        part = self.image.intersect(target)
        if part is None:
            return None
        a, b = self.inverse(part.lo), self.inverse(part.hi)
        a, b = min(a, b), max(a, b)
        a, b = max(a, self.domain.lo), min(b, self.domain.hi)
        return Interval(a, b) if a < b else None


@dataclass(frozen=True)
class PiecewiseMap:
    ambient: Interval
    branches: tuple[Branch, ...]
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    include_lo: bool = True

    def branch_index(self, x: float) -> int:
        for i, b in enumerate(self.branches):
            if b.domain.contains(x):
                return i
        if self.include_lo and x == self.ambient.lo:
            return 0
        raise OutOfDomain(f"x={x!r} lies in no branch domain of {self.kind} map")

    def _indices(self, x: np.ndarray) -> np.ndarray:
        idx = np.full(x.shape, -1, dtype=np.int64)
        for i, b in enumerate(self.branches):
            idx[(idx < 0) & b.domain.contains(x)] = i
        if self.include_lo:
            idx[(idx < 0) & (x == self.ambient.lo)] = 0
        if np.any(idx < 0):
            bad = x[idx < 0][0]
            raise OutOfDomain(f"x={bad!r} lies in no branch domain of {self.kind} map")
        return idx

    def _apply(self, x, attr: str):
        if np.ndim(x) == 0:
            return float(getattr(self.branches[self.branch_index(float(x))], attr)(float(x)))
        x = np.asarray(x, dtype=float)
        idx = self._indices(x)
        out = np.empty_like(x)
        for i, b in enumerate(self.branches):
            m = idx == i
            if m.any():
                out[m] = getattr(b, attr)(x[m])
        return out

    def __call__(self, x):
        return self._apply(x, "forward")

    def derivative(self, x):
        return self._apply(x, "derivative")

    @property
    def critical_points(self) -> tuple[float, ...]:
        return ()

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "branches": [
                {"lo": b.domain.lo, "hi": b.domain.hi, "dir": b.direction}
                for b in self.branches
            ],
        }


@dataclass(frozen=True)
class UnimodalMap(PiecewiseMap):
    """Quadratic family ``f(x) = 1 - a x^2`` on its invariant interval.

    The ambient interval is ``[beta, -beta]`` with ``beta`` the
    orientation-preserving fixed point, so both endpoints map to ``beta``.
    Branch 0 is the increasing half left of the critical point.
    """

    a: float = 2.0
    critical_point: float = 0.0
    order: float = 2.0

    @property
    def critical_points(self) -> tuple[float, ...]:
        return (self.critical_point,)

    @property
    def alpha(self) -> float:
        """Orientation-reversing fixed point, ``f'(alpha) < -1``."""
        a = self.a
        x = (-1.0 + math.sqrt(1.0 + 4.0 * a)) / (2.0 * a)
        if not -2.0 * a * x < -1.0:
            raise NoAlpha(f"no expanding orientation-reversing fixed point at a={a}")
        return x

    @property
    def alpha1(self) -> float:
        """Preimage of ``-alpha`` on the side of the fixed endpoint."""
        al = abs(self.alpha)
        return -math.sqrt((1.0 + al) / self.a)

    @property
    def A(self) -> Interval:
        al = abs(self.alpha)
        return Interval(-al, al)

    @property
    def A_hat(self) -> Interval:
        a1 = abs(self.alpha1)
        return Interval(-a1, a1)


# ---------------------------------------------------------------- builders

def doubling_map() -> PiecewiseMap:
    left = Branch(Interval(0.0, 0.5), +1,
                  lambda x: 2.0 * x,
                  lambda x: 2.0 + 0.0 * np.asarray(x),
                  lambda y: 0.5 * y)
    right = Branch(Interval(0.5, 1.0), +1,
                   lambda x: 2.0 * x - 1.0,
                   lambda x: 2.0 + 0.0 * np.asarray(x),
                   lambda y: 0.5 * (y + 1.0))
    return PiecewiseMap(Interval(0.0, 1.0), (left, right), "doubling", {}, include_lo=False)


def tent_map(slope: float = 2.0) -> PiecewiseMap:
    s = float(slope)
    if not 1.0 < s <= 2.0:
        raise ValueError("tent slope must lie in (1, 2]")
    left = Branch(Interval(0.0, 0.5), +1,
                  lambda x: s * x,
                  lambda x: s + 0.0 * np.asarray(x),
                  lambda y: y / s)
    right = Branch(Interval(0.5, 1.0), -1,
                   lambda x: s * (1.0 - x),
                   lambda x: -s + 0.0 * np.asarray(x),
                   lambda y: 1.0 - y / s)
    return PiecewiseMap(Interval(0.0, 1.0), (left, right), "tent", {"s": s}, include_lo=True)


def quadratic_map(a: float) -> UnimodalMap:
    a = float(a)
    if not 0.0 < a <= 2.0:
        raise ValueError("quadratic parameter must lie in (0, 2]")
    beta = (-1.0 - math.sqrt(1.0 + 4.0 * a)) / (2.0 * a)
    b = -beta

    def fwd(x):
        return 1.0 - a * x * x

    def der(x):
        return -2.0 * a * x

    def inv_left(y):
        return -np.sqrt(np.maximum(1.0 - y, 0.0) / a)

    def inv_right(y):
        return np.sqrt(np.maximum(1.0 - y, 0.0) / a)

    left = Branch(Interval(beta, 0.0), +1, fwd, der, inv_left)
    right = Branch(Interval(0.0, b), -1, fwd, der, inv_right)
    return UnimodalMap(Interval(beta, b), (left, right), "quadratic", {"a": a},
                       include_lo=True, a=a)


_BUILDERS = {
    "doubling": lambda p: doubling_map(),
    "tent": lambda p: tent_map(p.get("s", 2.0)),
    "quadratic": lambda p: quadratic_map(p["a"]),
}


def map_from_descriptor(desc: dict) -> PiecewiseMap:
    try:
        builder = _BUILDERS[desc["kind"]]
    except KeyError:
        raise ValueError(f"unknown map kind {desc.get('kind')!r}") from None
    return builder(desc.get("params", {}))


# -------------------------------------------------------------- operations

def eval_map(fmap: PiecewiseMap, x: float, n: int = 1) -> float:
    """``f^n(x)`` by repeated branch dispatch."""
    x = float(x)
    if not (fmap.ambient.contains(x) or (fmap.include_lo and x == fmap.ambient.lo)):
        raise OutOfDomain(f"x={x!r} outside the ambient interval")
    for _ in range(n):
        x = float(fmap.branches[fmap.branch_index(x)].forward(x))
    return x


def log_deriv_orbit(fmap: PiecewiseMap, x: float, n: int,
                    delta_crit: float = DELTA_CRIT) -> np.ndarray:
    out = np.empty(n)
    for k in range(n):
        b = fmap.branches[fmap.branch_index(x)]
        d = abs(float(b.derivative(x)))
        if d <= delta_crit:
            raise NearCritical(f"|df| = {d:.3g} at orbit point {k} (x={x!r})")
        out[k] = math.log(d)
        x = float(b.forward(x))
    return out


def inverse_branch_compose(fmap: PiecewiseMap, word: Sequence[int],
                           target: Interval) -> Interval:
    """Points whose orbit follows ``word`` branch by branch and then lands in ``target``."""
    cur = target
    for b in reversed(word):
        nxt = fmap.branches[b].pull_back(cur)
        if nxt is None:
            raise EmptyPreimage(f"branch {b} does not reach {cur}")
        cur = nxt
    return cur


def inverse_word_point(fmap: PiecewiseMap, word: Sequence[int], y):
    """Pull a point (or array of points) back along ``word``."""
    for b in reversed(word):
        y = fmap.branches[b].inverse(y)
    return y


def forward_word_point(fmap: PiecewiseMap, word: Sequence[int], x):
    for b in word:
        x = fmap.branches[b].forward(x)
    return x


def word_derivative(fmap: PiecewiseMap, word: Sequence[int], x):
    """``|d f^len(word)|`` at ``x`` along the recorded branches."""
    d = 1.0
    for b in word:
        br = fmap.branches[b]
        d = d * np.abs(br.derivative(x))
        x = br.forward(x)
    return d

"""Thermodynamics of the full shift on a finite (truncated) alphabet.

Potentials are evaluated on cylinders.  A finite-memory potential reads
the first ``memory`` symbols; a scheme potential is the induced potential
evaluated at the coded periodic point of the cylinder's repetition.

Lumped alphabet symbols (``log_mult``) stand for several congruent
symbols sharing one potential value; every sum over symbols counts them
with multiplicity.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DepthInfeasible, NoConvergence, ZeroWeightCylinder
from .scheme import InducingScheme, code_word, cylinder_bounds

STATE_CAP = 250_000
POWER_TOL = 1e-12
POWER_MAXITER = 100_000


@dataclass(frozen=True)
class ShiftPotential:
    alphabet_size: int
    memory: int | None
    block: Callable[[tuple], float] | None = None
    point_value: Callable[[int, float], float] | None = None
    scheme: InducingScheme | None = None
    log_mult: np.ndarray | None = None
    taus: np.ndarray | None = None
    shift: float = 0.0
    leakage: float = 0.0
    name: str = "custom"
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def shifted(self, c: float) -> "ShiftPotential":
        """The potential minus ``c * tau`` of the first symbol."""
        return replace(self, shift=self.shift + c)

    def _tau(self, a: int) -> float:
        return 0.0 if self.taus is None else float(self.taus[a])

    def mult(self, a: int) -> float:
        return 0.0 if self.log_mult is None else float(self.log_mult[a])

    def coded_point(self, word: tuple) -> float:
        x = self._cache.get(word)
        if x is None:
            x = code_word(self.scheme, word)
            self._cache[word] = x
        return x

    def raw_value(self, word: tuple) -> float:
        """Value before the ``-shift * tau`` correction (shared by shifted copies)."""
        if self.memory is not None:
            if len(word) < self.memory:
                word = (word * self.memory)[: self.memory]
            return self.block(word[: self.memory])
        key = ("v", word)
        v = self._cache.get(key)
        if v is None:
            v = self.point_value(word[0], self.coded_point(word))
            self._cache[key] = v
        return v

    def value(self, word: Sequence[int]) -> float:
        """Potential at the representative point of ``[word]``."""
        word = tuple(int(a) for a in word)
        return self.raw_value(word) - self.shift * self._tau(word[0])

    def birkhoff_periodic(self, word: Sequence[int]) -> float:
        """``Phi_n`` at the periodic point coding ``word`` repeated forever."""
        word = tuple(int(a) for a in word)
        n = len(word)
        total = 0.0
        for k in range(n):
            rot = word[k:] + word[:k]
            if self.memory is not None:
                reps = -(-self.memory // n)
                total += self.value((rot * reps)[: self.memory])
            else:
                total += self.value(rot)
        return total


# ----------------------------------------------------------- constructors

def zero_potential(alphabet_size: int) -> ShiftPotential:
    return ShiftPotential(alphabet_size, 1, block=lambda w: 0.0, name="zero")


def first_symbol_potential(values: Sequence[float]) -> ShiftPotential:
    vals = np.asarray(values, dtype=float)
    return ShiftPotential(len(vals), 1, block=lambda w: float(vals[w[0]]),
                          name="first-symbol")


def block_potential(table: np.ndarray) -> ShiftPotential:
    """Finite-memory potential given as an ``A x A x ... x A`` array."""
    table = np.asarray(table, dtype=float)
    return ShiftPotential(table.shape[0], table.ndim, block=lambda w: float(table[w]),
                          name=f"memory-{table.ndim}")


def scheme_potential(scheme: InducingScheme, point_value: Callable[[int, float], float],
                     constant_per_element: bool = False, trunc: int | None = None,
                     name: str = "induced") -> ShiftPotential:
    """Shift potential ``phibar o h`` on the first ``trunc`` elements of ``scheme``.

    ``point_value(symbol, x)`` evaluates the induced potential at ``x`` in
    the element.  When it is constant on elements the potential has
    memory one and is read at the element's coded fixed point.
    """
    K = len(scheme) if trunc is None else min(trunc, len(scheme))
    taus = scheme.taus[:K].astype(float)
    log_mult = np.log(scheme.pieces[:K])
    leak = 0.0
    if K < len(scheme):
        full = np.array([point_value(e.symbol, code_word(scheme, (e.symbol,)))
                         for e in scheme.elements]) + np.log(scheme.pieces)
        leak = float(1.0 - np.exp(logsumexp(full[:K]) - logsumexp(full)))
    if constant_per_element:
        vals = np.array([point_value(a, code_word(scheme, (a,))) for a in range(K)])
        return ShiftPotential(K, 1, block=lambda w: float(vals[w[0]]), scheme=scheme,
                              log_mult=log_mult, taus=taus, leakage=leak, name=name)
    return ShiftPotential(K, None, point_value=point_value, scheme=scheme,
                          log_mult=log_mult, taus=taus, leakage=leak, name=name)


# ------------------------------------------------------------------ helpers

def _words(A: int, n: int):
    return itertools.product(range(A), repeat=n)


def _state_values(potential: ShiftPotential, d: int) -> np.ndarray:
    """Log transition weight into each depth-d state: Phi(state) + log m(last)."""
    A = potential.alphabet_size
    nstates = A ** d
    if nstates > STATE_CAP:
        raise DepthInfeasible(f"{A}^{d} = {nstates} states exceeds the cap {STATE_CAP}")
    key = ("V", d)
    if key not in potential._cache:
        raw = np.empty(nstates)
        for i, w in enumerate(_words(A, d)):
            raw[i] = potential.raw_value(w)
        lm = np.zeros(A) if potential.log_mult is None else potential.log_mult
        tau = np.zeros(A) if potential.taus is None else potential.taus
        first = np.arange(nstates) // A ** (d - 1)
        last = np.arange(nstates) % A
        potential._cache[key] = (raw + lm[last], tau[first])
    base, tau_first = potential._cache[key]
    return base - potential.shift * tau_first


class _Operator:
    """Transfer matrix on depth-d words: ``M[w, w'] = exp(V[w'])`` when
    ``w'`` extends the shift of ``w`` by one symbol."""

    def __init__(self, V: np.ndarray, A: int, d: int):
        self.A, self.d = A, d
        self.vmax = float(V.max())
        self.E = np.exp(V - self.vmax)

    def right(self, x):
        y = (self.E * x).reshape(-1, self.A).sum(axis=1)
        return np.tile(y, self.A)

    def left(self, x):
        u = x.reshape(self.A, -1).sum(axis=0)
        return np.repeat(u, self.A) * self.E


def _power(apply, n: int, tol: float, maxiter: int):
    x = np.full(n, 1.0 / n)
    lam, res = 0.0, math.inf
    for it in range(1, maxiter + 1):
        y = apply(x)
        lam = y.sum() / x.sum()
        y /= y.sum()
        res = float(np.abs(apply(y) - lam * y).sum() / (lam * y.sum()))
        x = y
        if res < tol:
            return lam, x, res, it
    raise NoConvergence(f"power iteration residual {res:.3g} after {maxiter} steps")


@dataclass
class OperatorResult:
    pressure: float
    lam_scaled: float
    right: np.ndarray
    left: np.ndarray | None
    residual: float
    iterations: int
    op: _Operator


def _solve(potential: ShiftPotential, d: int, left: bool = False,
           tol: float = POWER_TOL, maxiter: int = POWER_MAXITER) -> OperatorResult:
    A = potential.alphabet_size
    V = _state_values(potential, d)
    op = _Operator(V, A, d)
    lam, r, res, it = _power(op.right, A ** d, tol, maxiter)
    l = None
    if left:
        laml, l, resl, itl = _power(op.left, A ** d, tol, maxiter)
        res, it = max(res, resl), it + itl
    return OperatorResult(math.log(lam) + op.vmax, lam, r, l, res, it, op)


# --------------------------------------------------------------- operations

def gurevich_pressure_operator(potential: ShiftPotential, d: int = 1) -> float:
    """Log of the leading eigenvalue of the depth-d transfer matrix."""
    if potential.memory is not None:
        d = max(d, potential.memory)
    return _solve(potential, d).pressure


def _trace_sums(potential: ShiftPotential, n_max: int, base_symbol: int | None):
    """Exact periodic-orbit sums for finite-memory potentials via matrix powers."""
    A, m = potential.alphabet_size, potential.memory
    if A ** m > 4000:
        raise DepthInfeasible("too many blocks for exact orbit sums")
    V = _state_values(potential, m)
    vmax = V.max()
    M = np.zeros((A ** m, A ** m))
    for s in range(A ** m):
        base = (s % A ** (m - 1)) * A
        M[s, base:base + A] = np.exp(V[base:base + A] - vmax)
    out = {}
    P = np.eye(A ** m)
    logscale = 0.0
    for n in range(1, n_max + 1):
        P = P @ M
        sc = P.max()
        P /= sc
        logscale += math.log(sc)
        diag = np.diag(P)
        if base_symbol is not None:
            diag = diag.reshape(A, -1)[base_symbol]
        out[n] = math.log(diag.sum()) + logscale + n * vmax
    return out


def _enumerated_memory(potential: ShiftPotential, n: int, base_symbol: int | None) -> float:
    """Log of the periodic-word sum at length ``n`` by explicit enumeration (vectorized)."""
    A, m = potential.alphabet_size, potential.memory
    tab = np.array([potential.value(w) for w in _words(A, m)])
    lm = np.zeros(A) if potential.log_mult is None else potential.log_mult
    k = n if base_symbol is None else n - 1
    U = np.indices((A,) * k).reshape(k, -1).T if k else np.zeros((1, 0), dtype=int)
    if base_symbol is not None:
        U = np.hstack([np.full((len(U), 1), base_symbol), U])
    total = lm[U].sum(axis=1)
    for i in range(n):
        idx = np.zeros(len(U), dtype=np.int64)
        for j in range(m):
            idx = idx * A + U[:, (i + j) % n]
        total += tab[idx]
    return float(logsumexp(total))


def gurevich_pressure_orbits(potential: ShiftPotential, n_max: int,
                             base_symbol: int | None = 0,
                             enum_cap: int = 2 ** 20) -> list[tuple[int, float]]:
    """``(1/n) log`` of potential-weighted sums over period-``n`` points.

    With ``base_symbol=None`` all periodic points are summed; otherwise only
    those in the cylinder of that symbol.  Words are enumerated explicitly
    while the count stays under ``enum_cap``; beyond that, finite-memory
    potentials fall back to exact matrix-power traces.
    """
    A = potential.alphabet_size
    free = A ** n_max if base_symbol is None else A ** (n_max - 1)
    if free <= enum_cap and potential.memory is not None:
        return [(n, _enumerated_memory(potential, n, base_symbol) / n)
                for n in range(1, n_max + 1)]
    if free <= enum_cap:
        out = []
        for n in range(1, n_max + 1):
            vals = []
            if base_symbol is None:
                words = _words(A, n)
            else:
                words = ((base_symbol,) + w for w in _words(A, n - 1))
            for w in words:
                vals.append(potential.birkhoff_periodic(w)
                            + sum(potential.mult(a) for a in w))
            out.append((n, float(logsumexp(vals)) / n))
        return out
    if potential.memory is None:
        raise DepthInfeasible("orbit enumeration beyond the cap needs finite memory")
    sums = _trace_sums(potential, n_max, base_symbol)
    return [(n, sums[n] / n) for n in range(1, n_max + 1)]


@dataclass
class CylinderMeasure:
    depth: int
    alphabet_size: int
    weights: dict[tuple, float]
    P_G: float
    C1: float | None = None
    C2: float | None = None
    leakage: float = 0.0
    consistency_defect: float = 0.0
    log_mult: np.ndarray | None = None
    _left: np.ndarray | None = field(default=None, repr=False)
    _right: np.ndarray | None = field(default=None, repr=False)
    _E: np.ndarray | None = field(default=None, repr=False)
    _lam: float = 1.0

    def symbol_weights(self) -> np.ndarray:
        """Depth-1 marginal."""
        out = np.zeros(self.alphabet_size)
        for w, p in self.weights.items():
            out[w[0]] += p
        return out

    def _index(self, w: Sequence[int]) -> int:
        i = 0
        for a in w:
            i = i * self.alphabet_size + int(a)
        return i

    def mass(self, word: Sequence[int]) -> float:
        """Total mass of the cylinder ``[word]`` (lumped symbols counted in full)."""
        word = tuple(int(a) for a in word)
        d, A = self.depth, self.alphabet_size
        n = len(word)
        if n <= d:
            if n == d:
                return self.weights[word]
            return float(sum(self.weights[word + ext] for ext in _words(A, d - n)))
        if self._left is None:
            raise ValueError("measure carries no eigenvectors for extension")
        s = self._index(word[:d])
        logm = math.log(self._left[s])
        for k in range(1, n - d + 1):
            s2 = self._index(word[k:k + d])
            logm += math.log(self._E[s2]) - math.log(self._lam)
            s = s2
        logm += math.log(self._right[s])
        return math.exp(logm - math.log(float(self._left @ self._right)))

    def transition(self, state: int) -> np.ndarray:
        """Conditional law of the next symbol given the last ``depth`` symbols."""
        A = self.alphabet_size
        base = (state % A ** (self.depth - 1)) * A
        if self._E is None:
            # weights-only measure (read back from CSV): Markov chain of order d - 1
            p = np.array([self.weights[w] for w in sorted(self.weights)])[base:base + A]
        else:
            p = self._E[base:base + A] * self._right[base:base + A]
        return p / p.sum()

    def entropy(self) -> float:
        """Entropy of the depth-d Markov approximation, per-piece for lumped symbols."""
        A, d = self.alphabet_size, self.depth
        pi = np.array([self.weights[w] for w in _words(A, d)])
        lm = np.zeros(A) if self.log_mult is None else self.log_mult
        h = 0.0
        for s in range(A ** d):
            if pi[s] <= 0:
                continue
            p = self.transition(s)
            nz = p > 0
            h -= pi[s] * float(np.sum(p[nz] * (np.log(p[nz]) - lm[nz])))
        return h


def gibbs_weights(potential: ShiftPotential, d: int = 1) -> CylinderMeasure:
    A = potential.alphabet_size
    if potential.memory is not None:
        d = max(d, potential.memory)
    res = _solve(potential, d, left=True)
    pi = res.left * res.right
    pi /= pi.sum()
    weights = {w: float(pi[i]) for i, w in enumerate(_words(A, d))}
    defect = 0.0
    if d > 1:
        grid = pi.reshape((A,) * d)
        defect = float(np.max(np.abs(grid.sum(axis=0) - grid.sum(axis=-1))))
    return CylinderMeasure(d, A, weights, res.pressure, leakage=potential.leakage,
                           consistency_defect=defect, log_mult=potential.log_mult,
                           _left=res.left, _right=res.right, _E=res.op.E,
                           _lam=res.lam_scaled)


def gibbs_constants(measure: CylinderMeasure, potential: ShiftPotential,
                    audit_depth: int, max_words: int = 20_000,
                    seed: int = 0) -> tuple[float, float]:
    """Extreme ratios ``nu[w] / exp(-n P + Phi_n)`` over audited cylinders."""
    A = measure.alphabet_size
    rng = np.random.default_rng(seed)
    lo, hi = math.inf, -math.inf
    for n in range(1, audit_depth + 1):
        if A ** n <= max_words:
            words = _words(A, n)
        else:
            words = (tuple(int(a) for a in rng.integers(0, A, size=n))
                     for _ in range(max_words))
        for w in words:
            m = measure.mass(w)
            if not m > 0:
                raise ZeroWeightCylinder(f"cylinder {w} has zero weight")
            logm = math.log(m) - sum(potential.mult(a) for a in w)
            ratio = math.exp(logm + n * measure.P_G - potential.birkhoff_periodic(w))
            lo, hi = min(lo, ratio), max(hi, ratio)
    measure.C1, measure.C2 = lo, hi
    return lo, hi


def variation(potential: ShiftPotential, n: int, max_cylinders: int = 20_000,
              points: int = 9, seed: int = 0) -> float:
    """Largest oscillation of the potential over a depth-``n`` cylinder."""
    if n < 1:
        raise ValueError("n must be >= 1")
    A = potential.alphabet_size
    if potential.memory is not None and potential.point_value is None:
        if n >= potential.memory:
            return 0.0
        worst = 0.0
        for w in _words(A, n):
            vals = [potential.value(w + ext) for ext in _words(A, potential.memory - n)]
            worst = max(worst, max(vals) - min(vals))
        return worst
    if potential.scheme is None:
        raise DepthInfeasible("no point evaluator for this potential")
    rng = np.random.default_rng(seed)
    if A ** n <= max_cylinders:
        words = _words(A, n)
    else:
        words = (tuple(int(a) for a in rng.integers(0, A, size=n))
                 for _ in range(max_cylinders))
    sch = potential.scheme
    pv = potential.point_value
    if pv is None:
        return 0.0
    worst = 0.0
    ts = np.linspace(0.0, 1.0, points)
    for w in words:
        lo, hi = cylinder_bounds(sch, w)
        vals = [pv(w[0], lo + t * (hi - lo)) for t in ts]
        worst = max(worst, max(vals) - min(vals))
    return worst


def fit_variation(potential: ShiftPotential, n_range: Sequence[int], **kw):
    """Fit ``V_n <= A r^n``; returns ``(A, r, table)``; ``(0, 0)`` if all vanish."""
    table = {n: variation(potential, n, **kw) for n in n_range}
    ns = np.array([n for n in table if table[n] > 1e-14])
    if len(ns) == 0:
        return 0.0, 0.0, table
    vs = np.array([table[n] for n in ns])
    if len(ns) == 1:
        return float(vs[0] / 0.5 ** ns[0]), 0.5, table
    slope, icpt = np.polyfit(ns, np.log(vs), 1)
    r = math.exp(slope)
    Acoef = float(np.max(vs / r ** ns))
    return Acoef, r, table


# --------------------------------------------------------------------- io

def measure_to_csv(measure: CylinderMeasure, header: dict | None = None) -> str:
    meta = {"P_G": measure.P_G, "C1": measure.C1, "C2": measure.C2,
            "leakage": measure.leakage, "depth": measure.depth}
    if header:
        meta.update(header)
    lines = ["# " + ";".join(f"{k}={_fmt(v)}" for k, v in meta.items()),
             "word,weight"]
    for w in sorted(measure.weights):
        lines.append("-".join(str(a) for a in w) + "," + _fmt(measure.weights[w]))
    return "\n".join(lines) + "\n"


def measure_from_csv(text: str) -> CylinderMeasure:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    meta = dict(kv.split("=", 1) for kv in lines[0][2:].split(";"))
    weights = {}
    for ln in lines[2:]:
        w, p = ln.split(",")
        weights[tuple(int(a) for a in w.split("-"))] = float(p)
    depth = int(meta["depth"])
    A = 1 + max(max(w) for w in weights)

    def num(k):
        v = meta.get(k, "None")
        return None if v == "None" else float(v)

    return CylinderMeasure(depth, A, weights, float(meta["P_G"]), num("C1"), num("C2"),
                           float(meta.get("leakage", 0.0)))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)

"""Inducing schemes: construction, coding and verification.

A scheme is a finite truncation of a countable family of basic elements
``J`` with inducing times ``tau(J)`` such that ``f^tau`` maps each ``J``
onto the inducing domain ``W``.  Elements are stored ordered by
increasing ``tau`` (ties by position); the symbol of an element is its
index in that order.

Very large families of congruent pieces (the refined doubling scheme has
``2**(2**n)`` pieces at level ``n``) are stored *lumped*: one element
carries a representative piece plus a ``pieces`` multiplicity.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (CapExceeded, Degenerate, NoConvergence, NotInW, NotMarkov,
                     OrbitEscapes)
from .maps import (Interval, PiecewiseMap, UnimodalMap, doubling_map, eval_map,
                   forward_word_point, inverse_branch_compose, inverse_word_point,
                   map_from_descriptor, word_derivative)

EPS_H1 = 1e-9
EPS_CODE = 1e-12


@dataclass(frozen=True)
class BasicElement:
    symbol: int
    J: Interval
    tau: int
    branch_word: tuple[int, ...]
    pieces: int = 1
    hull: Interval | None = None

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError("inducing time must be >= 1")

    @property
    def extent(self) -> Interval:
        return self.hull if self.hull is not None else self.J

    @property
    def total_length(self) -> float:
        return self.pieces * self.J.length


@dataclass(frozen=True)
class InducingScheme:
    fmap: PiecewiseMap
    elements: tuple[BasicElement, ...]
    W: Interval
    truncation: dict = field(default_factory=dict)
    base_A: Interval | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.elements:
            raise Degenerate("inducing scheme has no elements")

    def __len__(self):
        return len(self.elements)

    @property
    def taus(self) -> np.ndarray:
        return np.array([e.tau for e in self.elements], dtype=np.int64)

    @property
    def pieces(self) -> np.ndarray:
        return np.array([e.pieces for e in self.elements], dtype=float)

    @property
    def lengths(self) -> np.ndarray:
        """Total Lebesgue length carried by each (possibly lumped) element."""
        return np.array([e.total_length for e in self.elements])

    def element_of(self, x: float, closed: bool = False) -> BasicElement:
        for e in self.elements:
            if e.extent.contains(x, closed=closed):
                return e
        raise NotInW(f"x={x!r} lies in no basic element")

    def inverse(self, symbol: int, y):
        """Inverse branch of ``f^tau`` on the representative piece: W -> J."""
        return inverse_word_point(self.fmap, self.elements[symbol].branch_word, y)

    def pull_back(self, symbol: int, target: Interval) -> Interval:
        a, b = self.inverse(symbol, target.lo), self.inverse(symbol, target.hi)
        return Interval(min(a, b), max(a, b))

    def forward(self, symbol: int, x):
        return forward_word_point(self.fmap, self.elements[symbol].branch_word, x)

    def dF(self, symbol: int, x):
        """``|dF|`` at points of the representative piece of ``symbol``."""
        return word_derivative(self.fmap, self.elements[symbol].branch_word, x)

    def level_table(self) -> list[dict]:
        """Per-inducing-time totals: count of pieces and Lebesgue length."""
        table: dict[int, dict] = {}
        for e in self.elements:
            row = table.setdefault(e.tau, {"tau": e.tau, "count": 0, "length": 0.0})
            row["count"] += e.pieces
            row["length"] += e.total_length
        return [table[k] for k in sorted(table)]


@dataclass(frozen=True)
class Tower:
    levels: tuple[tuple[int, int, Interval], ...]  # (symbol, k, f^k(J))


@dataclass
class SchemeReport:
    h1_pass: bool
    h1_max_defect: float
    h2_pass: bool
    h2_max_ratio: float
    c1: float
    lambda1: float
    h4_pass: bool
    h4_residual: float
    lambda1_reduced: float
    c2: float
    lambda2: float
    h5_pass: bool
    distortion: dict[int, float]
    c3: float
    c4: float
    lambda3: float
    S_counts: dict[int, int]
    gamma: float
    d: float
    h6_residual: float

    def summary(self) -> dict:
        return {k: v for k, v in self.__dict__.items()
                if k not in ("distortion", "S_counts")}


# ------------------------------------------------------------------ builders

def build_doubling_scheme(variant: str = "plain", n_max: int = 29,
                          explicit_cap: int = 256) -> InducingScheme:
    """Dyadic scheme over ``W = (0, 1]`` for the doubling map.

    ``I_0 = (1/2, 1]`` and ``I_n = (2^-(n+1), 2^-n]``.  Inducing times are
    counted constructively: ``f^(n+1)`` maps ``I_n`` onto ``W``.  The
    refined variant cuts ``I_n`` into ``2**(2**n)`` equal pieces with time
    ``2**n + n + 1``; levels above ``explicit_cap`` pieces are lumped.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if variant not in ("plain", "refined"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "refined" and n_max > 5:
        raise ValueError("refined variant supports n_max <= 5")
    f = doubling_map()
    elements: list[BasicElement] = []
    for n in range(n_max + 1):
        base_word = (0,) * n + (1,)
        lo, hi = 2.0 ** -(n + 1), 2.0 ** -n
        if variant == "plain":
            elements.append(BasicElement(len(elements), Interval(lo, hi), n + 1, base_word))
            continue
        m = 2 ** n
        count = 2 ** m
        width = (hi - lo) / count
        if count <= explicit_cap:
            for j in range(count):
                digits = tuple(int(c) for c in format(j, f"0{m}b"))
                elements.append(BasicElement(len(elements),
                                             Interval(lo + j * width, lo + (j + 1) * width),
                                             n + 1 + m, base_word + digits))
        else:
            elements.append(BasicElement(len(elements), Interval(lo, lo + width),
                                         n + 1 + m, base_word + (0,) * m,
                                         pieces=count, hull=Interval(lo, hi)))
    meta = {
        "variant": variant,
        "tau_convention": "constructive",
        "truncation": n_max,
        "tau_note": ("tau counts the iterates mapping each element onto W=(0,1]; "
                     "the original indexing tau'(I_n)=n is one less"),
        "H3": "assumed: uncoded set is the countable set of dyadic endpoint preimages",
    }
    return InducingScheme(f, tuple(elements), Interval(0.0, 1.0),
                          {"n_max": n_max}, None, meta)


def _remainders(Y: Interval, base: Interval) -> list[Interval]:
    out = []
    if Y.lo < base.lo:
        out.append(Interval(Y.lo, min(Y.hi, base.lo)))
    if Y.hi > base.hi:
        out.append(Interval(max(Y.lo, base.hi), Y.hi))
    return out


def build_first_return_scheme(fmap: PiecewiseMap, base: Interval, depth: int,
                              tol: float = 1e-12) -> InducingScheme:
    """First-return scheme of a Markov map to a cylinder-aligned ``base``."""
    found: list[tuple[int, Interval, tuple[int, ...]]] = []
    pending: list[tuple[tuple[int, ...], Interval]] = [((), base)]
    for k in range(1, depth + 1):
        nxt = []
        for word, Y in pending:
            for b, br in enumerate(fmap.branches):
                part = Y.intersect(br.domain)
                if part is None:
                    continue
                u, v = br.forward(part.lo), br.forward(part.hi)
                Yn = Interval(min(u, v), max(u, v))
                w = word + (b,)
                inter = Yn.intersect(base)
                if inter is None:
                    nxt.append((w, Yn))
                    continue
                if not (Yn.covers(base, tol)):
                    raise NotMarkov(f"image {Yn} cuts the base {base}")
                J = inverse_branch_compose(fmap, w, base)
                found.append((k, J, w))
                nxt.extend((w, R) for R in _remainders(Yn, base))
        pending = nxt
    if not found:
        raise Degenerate("no element returns within the depth")
    found.sort(key=lambda t: (t[0], t[1].lo))
    elements = tuple(BasicElement(i, J, k, w) for i, (k, J, w) in enumerate(found))
    meta = {"variant": "first-return", "tau_convention": "constructive",
            "truncation": depth,
            "H3": "assumed: uncoded set is a countable set of endpoint preimages"}
    return InducingScheme(fmap, elements, base, {"depth": depth}, None, meta)


def _unimodal_candidates(umap: UnimodalMap, tau_max: int):
    A, Ah = umap.A, umap.A_hat
    I = umap.ambient
    laps = [(I.lo, I.hi, (), I.lo, I.hi)]
    cands = []
    tol = 1e-12
    for n in range(1, tau_max + 1):
        new = []
        for lo, hi, word, ylo, yhi in laps:
            if ylo < 0.0 < yhi:
                parts = ((ylo, 0.0, 0), (0.0, yhi, 1))
            else:
                parts = ((ylo, yhi, 0 if yhi <= 0.0 else 1),)
            for plo, phi, b in parts:
                x0 = float(inverse_word_point(umap, word, plo))
                x1 = float(inverse_word_point(umap, word, phi))
                xl, xh = min(x0, x1), max(x0, x1)
                if xh <= A.lo or xl >= A.hi or xh - xl <= 0.0:
                    continue
                u, v = 1.0 - umap.a * plo * plo, 1.0 - umap.a * phi * phi
                new.append((xl, xh, word + (b,), min(u, v), max(u, v)))
        laps = new
        for lo, hi, word, ylo, yhi in laps:
            if ylo <= Ah.lo + tol and yhi >= Ah.hi - tol:
                a0 = float(inverse_word_point(umap, word, A.lo))
                a1 = float(inverse_word_point(umap, word, A.hi))
                jl, jh = min(a0, a1), max(a0, a1)
                if jl >= A.lo - tol and jh <= A.hi + tol and jh - jl < A.length - tol:
                    cands.append((n, Interval(jl, jh), word))
    return cands


def build_unimodal_scheme(umap: UnimodalMap, tau_max: int = 12) -> InducingScheme:
    """Maximal regular intervals of order ``<= tau_max`` strictly inside ``A``.

    ``J`` is regular of order ``n`` when a monotone lap of ``f^n`` covers
    the extension ``A_hat``; ``J`` is then the lap's preimage of ``A``.
    """
    A = umap.A  # raises NoAlpha
    if A.length <= 0:
        raise Degenerate("A is empty")
    cands = _unimodal_candidates(umap, tau_max)
    cands.sort(key=lambda c: (c[0], -c[1].length, c[1].lo))
    kept: list[tuple[int, Interval, tuple[int, ...]]] = []
    dropped_overlap = 0
    tol = 1e-13
    for n, J, w in cands:
        clash = False
        for _, K, _ in kept:
            overlap = min(J.hi, K.hi) - max(J.lo, K.lo)
            if overlap <= tol:
                continue
            clash = True
            if not K.covers(J, tol):
                dropped_overlap += 1
            break
        if not clash:
            kept.append((n, J, w))
    if not kept:
        raise Degenerate(f"no regular intervals of order <= {tau_max}")
    kept.sort(key=lambda c: (c[0], c[1].lo))
    elements = tuple(BasicElement(i, J, n, w) for i, (n, J, w) in enumerate(kept))
    meta = {"variant": "unimodal-regular", "tau_convention": "constructive",
            "truncation": tau_max, "overlaps_dropped": dropped_overlap,
            "H3": "assumed: uncoded set is the countable set of regular-interval endpoints"}
    return InducingScheme(umap, elements, A, {"tau_max": tau_max}, A, meta)


def build_tower(scheme: InducingScheme) -> Tower:
    f = scheme.fmap
    levels = []
    for e in scheme.elements:
        for k in range(e.tau):
            J = e.extent
            w = e.branch_word[:k]
            if e.hull is not None:
                # lumped pieces: the level-k image of the hull is the union of
                # congruent images, traced via the dispatching map
                pts = np.linspace(J.lo, J.hi, 33)[1:]
                ys = np.array([eval_map(f, p, k) for p in pts])
                lo, hi = float(ys.min()), float(ys.max())
                lo = min(lo, float(forward_word_point(f, w, e.J.lo)))
            else:
                u, v = forward_word_point(f, w, J.lo), forward_word_point(f, w, J.hi)
                lo, hi = min(u, v), max(u, v)
            levels.append((e.symbol, k, Interval(float(lo), float(hi))))
    return Tower(tuple(levels))


# ---------------------------------------------------------------- operations

def induced_map(scheme: InducingScheme, x: float) -> tuple[float, int]:
    e = scheme.element_of(x)
    if e.hull is None and e.J.contains(x, closed=True):
        return float(scheme.forward(e.symbol, x)), e.symbol
    return eval_map(scheme.fmap, x, e.tau), e.symbol


def cylinder_bounds(scheme: InducingScheme, word: Sequence[int],
                    target: Interval | None = None) -> tuple[float, float]:
    """Endpoints of the coded cylinder ``[word]``; may be degenerate in floats."""
    T = scheme.W if target is None else target
    lo, hi = T.lo, T.hi
    for s in reversed(word):
        a, b = float(scheme.inverse(s, lo)), float(scheme.inverse(s, hi))
        lo, hi = (a, b) if a <= b else (b, a)
    return lo, hi


def cylinder_interval(scheme: InducingScheme, word: Sequence[int],
                      target: Interval | None = None) -> Interval:
    """Image under the coding map of the finite cylinder ``[word]``."""
    return Interval(*cylinder_bounds(scheme, word, target))


def code_word(scheme: InducingScheme, word: Sequence[int], periodic: bool = True,
              eps: float = EPS_CODE, max_passes: int = 100_000) -> float:
    """Coded point of ``word`` (of ``word`` repeated forever when ``periodic``)."""
    if not word:
        raise ValueError("empty word")
    if not periodic:
        return cylinder_interval(scheme, word).mid
    lo, hi = scheme.W.lo, scheme.W.hi
    for _ in range(max_passes):
        for s in reversed(word):
            a, b = scheme.inverse(s, lo), scheme.inverse(s, hi)
            lo, hi = (a, b) if a <= b else (b, a)
        width = hi - lo
        if width < eps:
            return 0.5 * (lo + hi)
    raise NoConvergence(f"nested preimages of {tuple(word)} stay wider than {eps}")


def _fit_exponential(ns: np.ndarray, values: np.ndarray):
    """OLS of log(values) on n: returns (intercept, slope, max abs residual)."""
    y = np.log(values)
    if len(ns) == 1:
        return float(y[0]), 0.0, 0.0
    X = np.column_stack([np.ones_like(ns, dtype=float), ns.astype(float)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    return float(coef[0]), float(coef[1]), float(np.max(np.abs(resid)))


def _nonzero_suffix(ns: np.ndarray, vals: np.ndarray):
    """Largest run of consecutive n, ending at the top, with nonzero values."""
    order = np.argsort(ns)
    ns, vals = ns[order], vals[order]
    start = len(ns) - 1
    while start > 0 and vals[start - 1] > 0 and ns[start] - ns[start - 1] == 1:
        start -= 1
    return ns[start:], vals[start:]


def tail_fit(scheme: InducingScheme, drop_top: int = 0):
    """Exponential fit of Lebesgue mass per inducing time.

    Returns ``(c1, lambda1, residual)`` such that the tail sums satisfy
    ``sum_{tau >= n} Leb(J) <= c1^-1 lambda1^-n`` on the truncated family.
    """
    table = scheme.level_table()
    if drop_top:
        table = table[:-drop_top] if len(table) > drop_top else table[:1]
    ns = np.array([r["tau"] for r in table])
    L = np.array([r["length"] for r in table])
    ns_fit, L_fit = _nonzero_suffix(ns, L)
    if len(ns_fit) < 3:
        ns_fit, L_fit = ns, L
    _, slope, resid = _fit_exponential(ns_fit, L_fit)
    lam = math.exp(-slope)
    tails = np.cumsum(L[::-1])[::-1]
    c1 = float(np.min(lam ** (-ns.astype(float)) / tails))
    return c1, lam, resid


def verify_scheme(scheme: InducingScheme, sample_depth: int = 6, n_words: int = 500,
                  seed: int = 0) -> SchemeReport:
    rng = np.random.default_rng(seed)
    W = scheme.W
    K = len(scheme)
    # (H1) endpoint images
    h1 = 0.0
    for e in scheme.elements:
        u = float(scheme.forward(e.symbol, e.J.lo))
        v = float(scheme.forward(e.symbol, e.J.hi))
        lo, hi = min(u, v), max(u, v)
        h1 = max(h1, abs(lo - W.lo), abs(hi - W.hi))
    # (H4)
    c1, lam1, resid4 = tail_fit(scheme)
    _, lam1_red, _ = tail_fit(scheme, drop_top=2)
    # the envelope constant c1 makes the inequality hold on the truncation;
    # the fit residual is reported, not gated
    h4_pass = lam1 > 1.0
    # (H2) contraction of random cylinders
    bound = (1.0 / lam1) ** (0.9 * sample_depth) * W.length if lam1 > 1 else W.length
    h2_ratio = 0.0
    for _ in range(n_words):
        w = rng.integers(0, K, size=sample_depth)
        lo, hi = cylinder_bounds(scheme, [int(s) for s in w])
        h2_ratio = max(h2_ratio, (hi - lo) / bound)
    h2_pass = h2_ratio < 1.0
    # (H5) distortion of dF between two points of one depth-n cylinder
    dist: dict[int, float] = {}
    n_pairs = max(20, n_words // sample_depth)
    for n in range(1, sample_depth + 1):
        worst, seen = 0.0, 0
        for _ in range(n_pairs):
            w = [int(s) for s in rng.integers(0, K, size=n)]
            lo, hi = cylinder_bounds(scheme, w)
            if hi - lo < 1e-13 * W.length:
                continue
            x, y = lo + (hi - lo) * rng.uniform(0.01, 0.99, size=2)
            dx, dy = float(scheme.dF(w[0], x)), float(scheme.dF(w[0], y))
            worst = max(worst, abs(dx / dy - 1.0))
            seen += 1
        if seen:
            dist[n] = worst
    ns = np.array(sorted(dist))
    ds = np.array([dist[n] for n in ns])
    if np.all(ds < 1e-13):
        c2, lam2, h5_pass = 0.0, math.inf, True
    else:
        m = ds > 0
        _, slope, r5 = _fit_exponential(ns[m], ds[m])
        lam2 = math.exp(-slope)
        c2 = float(np.max(ds[m] * lam2 ** ns[m]))
        h5_pass = lam2 > 1.0
    # derivative bounds
    lam3, c3 = 1.0, 0.0
    for e in scheme.elements:
        xs = e.J.lo + e.J.length * np.linspace(0.001, 0.999, 9)
        d = np.asarray(scheme.dF(e.symbol, xs), dtype=float)
        lam3 = max(lam3, float(d.max()) ** (1.0 / e.tau))
        c3 = max(c3, 1.0 / (e.J.length * float(d.min())))
    # (H6)
    S = Counter()
    for e in scheme.elements:
        S[e.tau] += e.pieces
    ns = np.array(sorted(S))
    counts = np.array([S[n] for n in ns], dtype=float)
    if len(ns) >= 2:
        _, slope, r6 = _fit_exponential(ns, counts)
    else:
        slope, r6 = 0.0, 0.0
    gamma = max(1.0, math.exp(slope))
    dconst = float(np.max(counts / gamma ** ns.astype(float)))
    return SchemeReport(
        h1_pass=h1 < EPS_H1, h1_max_defect=h1, h2_pass=h2_pass, h2_max_ratio=h2_ratio,
        c1=c1, lambda1=lam1, h4_pass=h4_pass, h4_residual=resid4,
        lambda1_reduced=lam1_red, c2=c2, lambda2=lam2, h5_pass=h5_pass,
        distortion=dist, c3=c3, c4=1.0, lambda3=lam3,
        S_counts={int(n): int(S[n]) for n in ns}, gamma=gamma, d=dconst,
        h6_residual=r6)


# --------------------------------------------------- unimodal parameter tests

def compute_N0(umap: UnimodalMap, cap: int = 10_000) -> int:
    """First time the critical orbit enters ``A = (-|alpha|, |alpha|)``."""
    al = abs(umap.alpha)
    x = umap.critical_point
    for n in range(1, cap + 1):
        x = 1.0 - umap.a * x * x
        if abs(x) < al:
            return n
    raise CapExceeded(f"critical orbit stays outside A for {cap} iterates")


@dataclass
class StrongRegularReport:
    passed: bool
    first_fail: int | None
    reason: str
    pairs: list[tuple[int, int]]
    N0: int
    M_bar: float
    rho: float
    constants_admissible: bool


def default_M_bar(N0: int) -> float:
    return 0.5 * (math.log(N0) ** 2 + 2.0 * N0 / 3.0)


def strongly_regular_check(umap: UnimodalMap, scheme: InducingScheme, k_max: int,
                           M_bar: float | None = None, rho: float = 0.05,
                           N0: int | None = None) -> StrongRegularReport:
    """Follow the induced critical orbit and test the large-time budget."""
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    if N0 is None:
        N0 = compute_N0(umap)
    lo_w, hi_w = math.log(N0) ** 2, 2.0 * N0 / 3.0
    if M_bar is None:
        M_bar = default_M_bar(N0)
    elif not lo_w < M_bar < hi_w:
        raise ValueError(f"M_bar={M_bar} outside ({lo_w:.4g}, {hi_w:.4g})")
    admissible = lo_w < M_bar < hi_w and M_bar * 2.0 ** -M_bar < rho / 100.0
    pairs: list[tuple[int, int]] = []
    if k_max <= 0:
        return StrongRegularReport(True, None, "vacuous", pairs, N0, M_bar, rho, admissible)
    y = eval_map(umap, umap.critical_point, N0)
    budget = 0
    for k in range(1, k_max + 1):
        try:
            e = scheme.element_of(y, closed=True)
        except NotInW:
            return StrongRegularReport(False, k, "orbit escapes the regular intervals",
                                       pairs, N0, M_bar, rho, admissible)
        pairs.append((k, e.tau))
        if e.tau >= M_bar:
            budget += e.tau
        if not budget < rho * k:
            return StrongRegularReport(False, k, "large inducing times exceed rho*k",
                                       pairs, N0, M_bar, rho, admissible)
        y = eval_map(umap, y, e.tau)
    return StrongRegularReport(True, None, "pass", pairs, N0, M_bar, rho, admissible)


def raise_if_escaped(report: StrongRegularReport) -> None:
    if report.reason.startswith("orbit escapes"):
        raise OrbitEscapes(f"F^{report.first_fail}(0) is in no regular interval")


# -------------------------------------------------------------- serialization

def scheme_to_json(scheme: InducingScheme) -> str:
    doc = {
        "map": scheme.fmap.descriptor(),
        "W": scheme.W.as_dict(),
        "elements": [
            {"sym": e.symbol, "lo": e.J.lo, "hi": e.J.hi, "tau": e.tau,
             "word": list(e.branch_word), "pieces": e.pieces,
             **({"hull": e.hull.as_dict()} if e.hull is not None else {})}
            for e in scheme.elements
        ],
        "meta": dict(scheme.meta),
        "truncation": dict(scheme.truncation),
    }
    if scheme.base_A is not None:
        doc["A"] = scheme.base_A.as_dict()
    return json.dumps(doc, indent=1, sort_keys=True)


def scheme_from_json(text: str) -> InducingScheme:
    doc = json.loads(text)
    fmap = map_from_descriptor(doc["map"])
    elements = tuple(
        BasicElement(int(d["sym"]), Interval(d["lo"], d["hi"]), int(d["tau"]),
                     tuple(d["word"]), int(d.get("pieces", 1)),
                     Interval(d["hull"]["lo"], d["hull"]["hi"]) if "hull" in d else None)
        for d in doc["elements"])
    A = Interval(doc["A"]["lo"], doc["A"]["hi"]) if "A" in doc else None
    return InducingScheme(fmap, elements, Interval(doc["W"]["lo"], doc["W"]["hi"]),
                          doc.get("truncation", {}), A, doc.get("meta", {}))

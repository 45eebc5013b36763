"""Induced potentials, liftable pressure, equilibrium measures and their lifts.

The pipeline for ``phi_t = -t log|df|``: induce along the scheme, find
``P_L`` as the zero of ``c -> P_G(phibar - c tau)``, take the Gibbs
measure of the normalized potential, and spread it over the tower.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (ConditionFailed, EntropyUnavailable, InvalidConstants, NoBracket,
                     QDiverges)
from .maps import log_deriv_orbit
from .scheme import InducingScheme, SchemeReport, code_word
from .shift import (CylinderMeasure, ShiftPotential, fit_variation, gibbs_constants,
                    gibbs_weights, gurevich_pressure_operator, scheme_potential)

PL_TOL = 1e-9
EPS_GRID = tuple(2.0 ** -k for k in range(1, 13))
TAIL_RATIO = 0.9
TAIL_BLOCKS = 5
AFFINE_KINDS = ("doubling", "tent")
_SUP_NODES = np.linspace(0.0, 1.0, 17)[1:-1]


@dataclass(frozen=True)
class PotentialSpec:
    """A potential on the interval.

    ``kind`` is ``"phi_t"`` (``-t log|df|``), ``"const"`` (``c``) or
    ``"custom"`` (``func`` vectorized over points).  ``offset`` adds a
    constant to any kind.
    """

    kind: str = "phi_t"
    t: float = 1.0
    c: float = 0.0
    offset: float = 0.0
    func: Callable | None = None

    def __post_init__(self):
        if self.kind not in ("phi_t", "const", "custom"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "custom" and self.func is None:
            raise ValueError("custom potential needs func")

    def tag(self) -> str:
        if self.kind == "phi_t":
            return f"phi_t(t={self.t!r},offset={self.offset!r})"
        if self.kind == "const":
            return f"const({self.c + self.offset!r})"
        return f"custom(offset={self.offset!r})"

    def on_map(self, fmap, x):
        """Pointwise value on the interval."""
        x = np.asarray(x, dtype=float)
        if self.kind == "phi_t":
            return -self.t * np.log(np.abs(fmap.derivative(x))) + self.offset
        if self.kind == "const":
            return np.full_like(x, self.c + self.offset)
        return np.asarray(self.func(x), dtype=float) + self.offset


def phi_t(t: float) -> PotentialSpec:
    return PotentialSpec("phi_t", t=float(t))


def constant(c: float) -> PotentialSpec:
    return PotentialSpec("const", c=float(c))


@dataclass
class InducedPotential:
    scheme: InducingScheme
    spec: PotentialSpec
    sup: np.ndarray
    inf: np.ndarray
    constant_per_element: bool

    def value(self, symbol: int, x: float) -> float:
        """``phibar`` at ``x`` in the representative piece of ``symbol``."""
        e = self.scheme.elements[symbol]
        sp = self.spec
        if sp.kind == "phi_t":
            return float(-sp.t * np.log(self.scheme.dF(symbol, x)) + sp.offset * e.tau)
        if sp.kind == "const":
            return (sp.c + sp.offset) * e.tau
        return self.birkhoff(symbol, x)

    def birkhoff(self, symbol: int, x: float) -> float:
        """``sum_{k < tau} phi(f^k x)`` computed along the orbit."""
        e = self.scheme.elements[symbol]
        f = self.scheme.fmap
        if self.spec.kind == "phi_t":
            logs = log_deriv_orbit(f, x, e.tau)
            return float(-self.spec.t * logs.sum() + self.spec.offset * e.tau)
        total = 0.0
        for b in e.branch_word:
            total += float(self.spec.on_map(f, x))
            x = float(f.branches[b].forward(x))
        return total

    def chain_rule_defect(self, points: int = 7) -> float:
        """Largest gap between the closed form and the orbit Birkhoff sum."""
        worst = 0.0
        for e in self.scheme.elements:
            for s in np.linspace(0.0, 1.0, points + 2)[1:-1]:
                x = e.J.lo + s * e.J.length
                worst = max(worst, abs(self.value(e.symbol, x) - self.birkhoff(e.symbol, x)))
        return worst

    def to_shift(self, trunc: int | None = None) -> ShiftPotential:
        return scheme_potential(self.scheme, self.value, self.constant_per_element,
                                trunc, name=self.spec.tag())


def induce(scheme: InducingScheme, spec: PotentialSpec | float) -> InducedPotential:
    if not isinstance(spec, PotentialSpec):
        spec = phi_t(spec)
    const = spec.kind == "const" or (spec.kind == "phi_t" and
                                     scheme.fmap.kind in AFFINE_KINDS)
    pot = InducedPotential(scheme, spec, np.empty(0), np.empty(0), const)
    sups, infs = [], []
    for e in scheme.elements:
        vals = [pot.value(e.symbol, e.J.lo + s * e.J.length) for s in _SUP_NODES]
        sups.append(max(vals))
        infs.append(min(vals))
    pot.sup, pot.inf = np.array(sups), np.array(infs)
    return pot


# -------------------------------------------------------- condition checks

def _level_terms(scheme: InducingScheme, terms: np.ndarray):
    """Group per-element terms by inducing time."""
    taus = scheme.taus
    levels = np.unique(taus)
    return levels, np.array([terms[taus == n].sum() for n in levels])


def cauchy_tail(levels: np.ndarray, level_terms: np.ndarray, blocks: int = TAIL_BLOCKS,
                ratio: float = TAIL_RATIO) -> tuple[bool, float]:
    """Geometric tail test on per-level terms.

    Fits ``log term`` against the inducing time over the last ``blocks``
    nonzero levels; the series looks finite when the fitted rate per unit
    of inducing time is below ``ratio``.  A fit tolerates the uneven level
    counts of unimodal schemes, where single consecutive ratios jump.
    """
    nz = level_terms > 0
    x, y = np.asarray(levels, dtype=float)[nz], level_terms[nz]
    if len(y) < 2:
        return True, 0.0
    x, y = x[-blocks:], y[-blocks:]
    slope = np.polyfit(x, np.log(y), 1)[0]
    rate = float(math.exp(slope))
    return rate < ratio, rate


@dataclass
class PotentialReport:
    p1_pass: bool
    p1_A: float
    p1_r: float
    p1_table: dict
    p2_pass: bool
    p2_sum: float
    p2_tail_ratio: float
    p2_last_share: float
    p3_pass: bool
    p3_eps0: float
    P_L: float | None
    p4_pass: bool | None = None
    p4_K: float | None = None
    p4_theta: float | None = None

    def failed(self) -> list[str]:
        out = [name for name, ok in (("P1", self.p1_pass), ("P2", self.p2_pass),
                                     ("P3", self.p3_pass)) if not ok]
        if self.p4_pass is False:
            out.append("P4")
        return out


def check_P(scheme: InducingScheme, induced: InducedPotential,
            eps_grid: Sequence[float] = EPS_GRID, n_var: Sequence[int] = (1, 2, 3),
            max_cylinders: int = 2000) -> PotentialReport:
    """Evaluate (P1)-(P3) at this truncation; (P4) is filled in by ``equilibrium``."""
    pieces = scheme.pieces
    taus = scheme.taus.astype(float)
    shift_pot = induced.to_shift()
    A, r, table = fit_variation(shift_pot, n_var, max_cylinders=max_cylinders)
    p1 = r < 1.0

    terms = pieces * np.exp(induced.sup)
    levels, lv = _level_terms(scheme, terms)
    p2_ok, p2_ratio = cauchy_tail(levels, lv)
    p2_sum = float(terms.sum())
    last_share = float(lv[-1] / lv.sum()) if lv.sum() > 0 else 0.0

    PL = None
    eps0 = 0.0
    try:
        PL = compute_PL(scheme, induced)
    except NoBracket:
        pass
    if PL is not None:
        for eps in sorted(eps_grid, reverse=True):
            t3 = pieces * taus * np.exp(induced.sup - PL * taus + eps * taus)
            ok, _ = cauchy_tail(*_level_terms(scheme, t3))
            if ok:
                eps0 = float(eps)
                break
    return PotentialReport(bool(p1), float(A), float(r), table, p2_ok, p2_sum, p2_ratio,
                           last_share, eps0 > 0, eps0, PL)


# ----------------------------------------------------------------- pressure

def compute_PL(scheme: InducingScheme, induced: InducedPotential | ShiftPotential,
               depth: int = 1, trunc: int | None = None, scan: float = 50.0,
               tol: float = PL_TOL) -> float:
    """The ``c`` with ``P_G(phibar - c tau) = 0``.

    ``c -> P_G`` is strictly decreasing because ``tau >= 1``.  A sign
    change is searched on ``[-scan, scan]`` by doubling outwards from 1.
    """
    pot = induced if isinstance(induced, ShiftPotential) else induced.to_shift(trunc)

    def g(c):
        return gurevich_pressure_operator(pot.shifted(c), depth)

    lo, hi = -1.0, 1.0
    glo, ghi = g(lo), g(hi)
    while glo < 0 and lo > -scan:
        hi, ghi = lo, glo
        lo = max(2.0 * lo, -scan)
        glo = g(lo)
    while ghi > 0 and hi < scan:
        lo, glo = hi, ghi
        hi = min(2.0 * hi, scan)
        ghi = g(hi)
    if not (glo >= 0 >= ghi) or not math.isfinite(glo) or not math.isfinite(ghi):
        raise NoBracket(f"no sign change of P_G(phibar - c tau) on [{-scan}, {scan}]")
    c = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(g(c)) >= tol:
        raise NoBracket(f"root residual {abs(g(c)):.3g} exceeds {tol}")
    return float(c)


# ---------------------------------------------------------------- t ranges

@dataclass(frozen=True)
class TBounds:
    t0: float
    t1: float
    degenerate: bool
    case: str

    def contains(self, t: float) -> bool:
        return self.degenerate or self.t0 < t < self.t1


def t_bounds(lambda1: float, lambda3: float, gamma: float,
             rel_tol: float = 1e-9) -> TBounds:
    """Range of ``t`` on which the normalized ``phi_t`` keeps a positive-recurrence margin."""
    if not (lambda1 > 1.0 and lambda3 >= lambda1 * (1 - rel_tol) and gamma >= 1.0):
        raise InvalidConstants(f"need lambda3 >= lambda1 > 1 and gamma >= 1, got "
                               f"({lambda1}, {lambda3}, {gamma})")
    spread = math.log(lambda3 / lambda1)
    if spread <= rel_tol:
        return TBounds(-math.inf, math.inf, True, "constant-slope")
    t1 = math.log(lambda3) / spread
    if gamma < lambda1:
        return TBounds(math.log(gamma / lambda1) / spread, t1, False, "gamma<lambda1")
    return TBounds(1.0 - math.log(lambda1) / math.log(gamma), t1, False, "gamma>=lambda1")


# ----------------------------------------------------------------- measures

@dataclass
class TowerMeasure:
    scheme: InducingScheme
    nu: CylinderMeasure
    symbol_mass: np.ndarray
    Q: float
    levels: dict[tuple[int, int], float]
    P: float | None = None
    spec: PotentialSpec | None = None
    report: PotentialReport | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def alphabet_size(self) -> int:
        return len(self.symbol_mass)

    def level_rows(self) -> list[tuple[int, int, float]]:
        return [(s, k, m) for (s, k), m in sorted(self.levels.items())]


def _symbol_mass(nu) -> np.ndarray:
    if isinstance(nu, CylinderMeasure):
        return nu.symbol_weights()
    return np.asarray(nu, dtype=float)


def Q_of(nu, scheme: InducingScheme, tail: tuple[float, float] | None = None) -> float:
    """``sum tau(J) nu(J)``; ``tail = (K, theta)`` adds the fitted bound beyond the truncation."""
    p = _symbol_mass(nu)
    taus = scheme.taus[: len(p)].astype(float)
    Q = float(np.dot(taus, p))
    if tail is not None:
        K, theta = tail
        n = taus.max() + 1
        if theta < 1:
            Q += K * theta ** n * (n / (1 - theta) + theta / (1 - theta) ** 2)
    return Q


def lift(nu, scheme: InducingScheme, **kw) -> TowerMeasure:
    p = _symbol_mass(nu)
    if not np.all(np.isfinite(p)) or p.sum() <= 0:
        raise QDiverges("measure has no finite positive mass")
    Q = Q_of(p, scheme)
    if not math.isfinite(Q):
        raise QDiverges("Q is infinite")
    taus = scheme.taus
    levels = {(a, k): float(p[a] / Q) for a in range(len(p)) for k in range(int(taus[a]))
              if p[a] > 0}
    measure = nu if isinstance(nu, CylinderMeasure) else _bernoulli(p)
    return TowerMeasure(scheme, measure, p, Q, levels, **kw)


def _bernoulli(p: np.ndarray) -> CylinderMeasure:
    from .shift import first_symbol_potential
    q = np.where(p > 0, p, 1e-300)
    return gibbs_weights(first_symbol_potential(np.log(q / q.sum())), 1)


def p4_fit(scheme: InducingScheme, symbol_mass: np.ndarray):
    """Fit ``nu(tau >= n) <= K theta^n``; returns ``(K, theta, pass)``."""
    taus = scheme.taus[: len(symbol_mass)]
    levels = np.unique(taus)
    tails = np.array([symbol_mass[taus >= n].sum() for n in levels])
    ok = tails > 1e-300
    ns, tl = levels[ok].astype(float), tails[ok]
    if len(ns) < 2:
        return 1.0, 0.0, True
    slope, _ = np.polyfit(ns, np.log(tl), 1)
    theta = math.exp(slope)
    K = float(np.max(tl / theta ** ns))
    return K, theta, theta < 1.0


def equilibrium(scheme: InducingScheme, potential: PotentialSpec | float,
                depth: int = 1, trunc: int | None = None, audit_depth: int = 3,
                scheme_report: SchemeReport | None = None, force: bool = False,
                check_liftable: bool = True) -> TowerMeasure:
    """Equilibrium measure of the potential, as a lifted Gibbs measure.

    Refuses (``ConditionFailed``) when (P1)-(P3) fail at this truncation or
    when ``phi_t`` has ``t`` outside the scheme's ``t_bounds``, unless
    ``force`` is set.
    """
    spec = potential if isinstance(potential, PotentialSpec) else phi_t(potential)
    induced = induce(scheme, spec)
    report = check_P(scheme, induced)
    if not force:
        if spec.kind == "phi_t" and scheme_report is not None:
            tb = t_bounds(scheme_report.lambda1, max(scheme_report.lambda3,
                                                      scheme_report.lambda1),
                          scheme_report.gamma)
            if not tb.contains(spec.t):
                raise ConditionFailed(f"t={spec.t} outside t_bounds ({tb.t0:.6g}, {tb.t1:.6g});"
                                      " (P3) is not guaranteed", condition="P3")
        bad = [c for c in report.failed() if c != "P2" or spec.kind != "phi_t"]
        if bad:
            raise ConditionFailed(f"condition {bad[0]} fails at this truncation",
                                  condition=bad[0])
    if report.P_L is None:
        raise NoBracket("no liftable pressure at this truncation")
    P = report.P_L
    plus = induced.to_shift(trunc).shifted(P)
    nu = gibbs_weights(plus, depth)
    C1, C2 = gibbs_constants(nu, plus, audit_depth, max_words=2000)
    p = nu.symbol_weights()
    K, theta, p4 = p4_fit(scheme, p)
    report.p4_K, report.p4_theta, report.p4_pass = K, theta, p4
    if check_liftable and not p4:
        raise QDiverges("induced tail is not exponentially small; Q partial sums diverge")
    tower = lift(nu, scheme, P=P, spec=spec, report=report)
    tower.diagnostics.update({"C1": C1, "C2": C2, "leakage": nu.leakage,
                              "root_residual": abs(gurevich_pressure_operator(plus, depth)),
                              "Q_with_tail": Q_of(p, scheme, (K, theta)) if p4 else math.inf})
    return tower


def lyapunov_kac(tower: TowerMeasure, nodes: int = 9) -> float:
    """``int log|df| dL(nu) = (1/Q) int log|dF| dnu`` with per-element quadrature."""
    sch = tower.scheme
    total = 0.0
    s = np.linspace(0.0, 1.0, nodes + 2)[1:-1]
    for a, pa in enumerate(tower.symbol_mass):
        if pa <= 0:
            continue
        J = sch.elements[a].J
        total += pa * float(np.mean(np.log(sch.dF(a, J.lo + s * J.length))))
    return total / tower.Q


# ------------------------------------------------------- Abramov and Kac

def _block_probs(scheme: InducingScheme, p: np.ndarray, L: int) -> dict[tuple, float]:
    """Law of the first ``L`` branch symbols of ``x`` when ``x`` has the
    Bernoulli(``p``) induced law: the f-itinerary is the concatenation of the
    elements' branch words."""
    words = [scheme.elements[a].branch_word for a in range(len(p))]
    memo: dict[tuple, float] = {(): 1.0}

    def g(D: tuple) -> float:
        if D in memo:
            return memo[D]
        total = 0.0
        for w, pa in zip(words, p):
            if pa <= 0:
                continue
            if len(w) >= len(D):
                if w[: len(D)] == D:
                    total += pa
            elif D[: len(w)] == w:
                total += pa * g(D[len(w):])
        memo[D] = total
        return total

    return {D: g(D) for D in itertools.product(range(len(scheme.fmap.branches)), repeat=L)}, g


def lifted_block_entropy(tower: TowerMeasure, L: int = 8) -> float:
    """``h_{L(nu)}(f)`` from the branch partition: ``H_L - H_{L-1}`` of the lift.

    Requires an induced Bernoulli measure and unlumped elements whose
    branch words are the f-itinerary of the inducing block.
    """
    sch = tower.scheme
    if tower.nu.depth != 1:
        raise EntropyUnavailable("block route needs a Bernoulli induced measure")
    if any(e.pieces > 1 for e in sch.elements[: tower.alphabet_size]):
        raise EntropyUnavailable("lumped elements hide their itineraries")
    p = tower.symbol_mass
    _, g = _block_probs(sch, p, 0)
    nb = len(sch.fmap.branches)

    def mu_blocks(n):
        probs = {}
        for D in itertools.product(range(nb), repeat=n):
            m = 0.0
            for a, pa in enumerate(p):
                if pa <= 0:
                    continue
                w = sch.elements[a].branch_word
                for k in range(len(w)):
                    rest = w[k:]
                    if len(rest) >= n:
                        m += pa * (rest[:n] == D)
                    elif D[: len(rest)] == rest:
                        m += pa * g(D[len(rest):])
            probs[D] = m / tower.Q
        return np.array(list(probs.values()))

    def H(n):
        q = mu_blocks(n)
        q = q[q > 0]
        return float(-(q * np.log(q)).sum())

    return H(L) - H(L - 1)


@dataclass
class AbramovKac:
    abramov_residual: float | None
    kac_residual: float
    h_nu: float
    h_lift: float | None
    Q: float
    integral_induced: float
    integral_lift: float


def verify_abramov_kac(tower: TowerMeasure, spec: PotentialSpec,
                       block_length: int = 8, nodes: int = 9) -> AbramovKac:
    """Residuals of ``h(F) = Q h(f)`` and ``int phibar dnu = Q int phi dL(nu)``.

    ``h(f)`` comes from dyadic-style block entropy of the lift and both
    integrals from per-level quadrature, so neither side uses the formula
    being tested.  When no block route exists only the second residual is
    returned (the first is ``None``).
    """
    sch = tower.scheme
    p = tower.symbol_mass
    Q = tower.Q
    h_nu = tower.nu.entropy()
    s = np.linspace(0.0, 1.0, nodes + 2)[1:-1]
    induced = induce(sch, spec)
    lhs = 0.0
    rhs = 0.0
    for a, pa in enumerate(p):
        if pa <= 0:
            continue
        e = sch.elements[a]
        xs = e.J.lo + s * e.J.length
        lhs += pa * float(np.mean([induced.value(a, x) for x in xs]))
        for k in range(e.tau):
            rhs += pa / Q * float(np.mean(spec.on_map(sch.fmap, xs)))
            xs = sch.fmap.branches[e.branch_word[k]].forward(xs)
    try:
        h_lift = lifted_block_entropy(tower, block_length)
        ab = abs(h_nu - Q * h_lift)
    except EntropyUnavailable:
        h_lift, ab = None, None
    return AbramovKac(ab, abs(lhs - Q * rhs), h_nu, h_lift, Q, lhs, rhs)


# ---------------------------------------------------------- pressure curve

@dataclass
class PressureSample:
    t: float
    P: float
    Q: float
    C1: float
    C2: float
    leakage: float
    p4_theta: float
    root_residual: float
    lyapunov: float
    ok: bool = True
    message: str = ""


@dataclass
class PressureCurve:
    samples: list[PressureSample]
    monotone: bool
    convex: bool
    lower_bounds: bool
    bound_deficit: float
    lambda1: float | None
    lambda3: float | None

    def rows(self) -> list[tuple]:
        return [(s.t, s.P, s.Q, s.C1, s.C2, s.leakage, s.p4_theta) for s in self.samples]


def _curve_point(scheme, t, scheme_report, depth, force) -> PressureSample:
    try:
        tw = equilibrium(scheme, phi_t(t), depth=depth, scheme_report=scheme_report,
                         force=force)
    except (ConditionFailed, NoBracket, QDiverges) as exc:
        nan = math.nan
        return PressureSample(float(t), nan, nan, nan, nan, nan, nan, nan, nan, False,
                              str(exc))
    d = tw.diagnostics
    return PressureSample(float(t), tw.P, tw.Q, d["C1"], d["C2"], d["leakage"],
                          tw.report.p4_theta, d["root_residual"], lyapunov_kac(tw))


def pressure_curve(scheme: InducingScheme, t_grid: Sequence[float],
                   scheme_report: SchemeReport | None = None, depth: int = 1,
                   force: bool = True, tol: float = 1e-9, threads: int = 1) -> PressureCurve:
    """``P_t`` over a grid, with monotonicity, convexity and lower-bound checks.

    Points are independent and computed on up to ``threads`` workers; the
    result does not depend on the worker count.
    """
    with ThreadPoolExecutor(max_workers=threads) as pool:
        samples = list(pool.map(
            lambda t: _curve_point(scheme, t, scheme_report, depth, force), t_grid))
    good = [s for s in samples if s.ok]
    ts = np.array([s.t for s in good])
    Ps = np.array([s.P for s in good])
    order = np.argsort(ts)
    ts, Ps = ts[order], Ps[order]
    monotone = bool(np.all(np.diff(Ps) <= tol))
    convex = True
    for i in range(1, len(ts) - 1):
        w = (ts[i] - ts[i - 1]) / (ts[i + 1] - ts[i - 1])
        if Ps[i] > (1 - w) * Ps[i - 1] + w * Ps[i + 1] + tol:
            convex = False
    lam1 = lam3 = None
    deficit = 0.0
    if scheme_report is not None:
        lam1, lam3 = scheme_report.lambda1, scheme_report.lambda3
        for t, P in zip(ts, Ps):
            lam = lam1 if t <= 1 else lam3
            deficit = max(deficit, (1 - t) * math.log(lam) - P)
    return PressureCurve(samples, monotone, convex, deficit <= 1e-6, deficit, lam1, lam3)


# ------------------------------------------------------------- liftability

@dataclass
class LiftabilityVerdict:
    verdict: str
    levels: list[int]
    contributions: list[float]
    partial_sums: list[float]
    limit: float | None


def check_liftability(scheme: InducingScheme, density="length",
                      min_share: float = 0.1) -> LiftabilityVerdict:
    """Partial sums of ``sum tau(J) m(J)`` for a candidate induced mass ``m``.

    ``density`` is ``"length"`` (Lebesgue mass, normalized by ``|W|``), an
    integer symbol (point mass) or an array of element masses.
    """
    if isinstance(density, str):
        if density != "length":
            raise ValueError(f"unknown density {density!r}")
        m = scheme.lengths / scheme.W.length
    elif np.ndim(density) == 0:
        m = np.zeros(len(scheme))
        m[int(density)] = 1.0
    else:
        m = np.asarray(density, dtype=float)
    levels, contrib = _level_terms(scheme, scheme.taus * m)
    partial = np.cumsum(contrib)
    nz = contrib[contrib > 0]
    ok, _ = cauchy_tail(levels, contrib)
    if len(nz) <= 1:
        return LiftabilityVerdict("liftable", levels.tolist(), contrib.tolist(),
                                  partial.tolist(), float(partial[-1]))
    tail = nz[-3:]
    if np.min(tail) >= min_share * np.max(nz) and np.min(tail) >= min_share:
        verdict = "not-liftable"
    elif ok:
        verdict = "liftable"
    else:
        verdict = "inconclusive"
    limit = float(partial[-1]) if verdict == "liftable" else None
    return LiftabilityVerdict(verdict, levels.tolist(), contrib.tolist(), partial.tolist(),
                              limit)

"""The acceptance suite, shared by ``thermoscheme verify-all`` and the tests.

Each check returns a :class:`Result` whose ``summary`` is built from
fixed-format numbers, so the table is byte-stable across runs.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AllNoise, DegenerateVariance
from .maps import eval_map, quadratic_map
from .scheme import (build_doubling_scheme, build_unimodal_scheme, compute_N0,
                     verify_scheme)
from .shift import (block_potential, first_symbol_potential, gibbs_constants,
                    gibbs_weights, gurevich_pressure_operator, gurevich_pressure_orbits,
                    zero_potential)
from .stats import (OBSERVABLES, clt_test, correlation_fit, lyapunov, orbit_stepper,
                    sample_lift, substream)
from .thermo import (check_liftability, check_P, compute_PL, constant, equilibrium,
                     induce, lift, lyapunov_kac, phi_t, pressure_curve, t_bounds,
                     verify_abramov_kac)

LOG2 = math.log(2.0)
T_GRID = (-0.5, 0.0, 0.5, 1.0, 1.5)


@dataclass(frozen=True)
class Result:
    id: int
    name: str
    passed: bool
    summary: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.id:2d} {self.name}: {self.summary}"


def _g(x) -> str:
    return format(float(x), ".6g")


def _e(x) -> str:
    return format(float(x), ".3e")


# ----------------------------------------------------------------- criteria

def c1_zero_pressure(seed: int = 0) -> Result:
    pot = zero_potential(2)
    op = gurevich_pressure_operator(pot, 1)
    orbit = dict(gurevich_pressure_orbits(pot, 16, base_symbol=None))
    err_op, err_orb = abs(op - LOG2), abs(orbit[16] - LOG2)
    ok = err_op < 1e-12 and err_orb < 1e-9
    return Result(1, "zero-potential pressure", ok,
                  f"operator err {_e(err_op)}; orbit err at n=16 {_e(err_orb)}")


def c2_pressure_curve(seed: int = 0, threads: int = 1) -> Result:
    sch30 = build_doubling_scheme("plain", 29)
    P1 = compute_PL(sch30, induce(sch30, phi_t(1.0)))
    sch = build_doubling_scheme("plain", 59)
    rep = verify_scheme(sch)
    curve = pressure_curve(sch, T_GRID, rep, threads=threads)
    errs = [abs(s.P - (1 - s.t) * LOG2) for s in curve.samples]
    ok = (abs(P1) < 1e-6 and all(s.ok for s in curve.samples) and max(errs) < 1e-4
          and curve.monotone and curve.convex)
    return Result(2, "P_1=0 and pressure curve", ok,
                  f"|P_1| {_e(abs(P1))} at 30 elements; max |P_t-(1-t)log2| {_e(max(errs))}; "
                  f"monotone {curve.monotone}; convex {curve.convex}")


def c3_abramov_kac(seed: int = 0) -> Result:
    sch = build_doubling_scheme("plain", 59)
    p = 2.0 ** -(np.arange(len(sch)) + 1.0)
    tw = lift(p / p.sum(), sch)
    ak = verify_abramov_kac(tw, phi_t(1.0))
    res = [abs(ak.h_nu - 2 * LOG2), abs(tw.Q - 2.0), abs(ak.h_lift - LOG2),
           ak.abramov_residual, ak.kac_residual]
    ok = max(res) < 1e-9
    return Result(3, "Abramov and Kac formulas", ok,
                  f"h_nu err {_e(res[0])}; Q err {_e(res[1])}; h_Leb err {_e(res[2])}; "
                  f"Abramov {_e(res[3])}; Kac {_e(res[4])}")


def memory2_table() -> np.ndarray:
    return np.random.default_rng(11).uniform(-1.0, 1.0, size=(3, 3))


def brute_cylinder_weights(table: np.ndarray, depth: int, n: int) -> dict:
    """Normalized periodic-word sums at length ``n``, aggregated by prefix."""
    A = table.shape[0]
    num: dict = {}
    Z = 0.0
    for u in itertools.product(range(A), repeat=n):
        e = math.exp(sum(table[u[i], u[(i + 1) % n]] for i in range(n)))
        Z += e
        num[u[:depth]] = num.get(u[:depth], 0.0) + e
    return {w: v / Z for w, v in num.items()}


def c4_gibbs(seed: int = 0) -> Result:
    worst = 0.0
    rng = np.random.default_rng(seed)
    cases = [np.array([1 / 3, 2 / 3])] + [rng.dirichlet(np.ones(k)) for k in (3, 5)]
    for p in cases:
        pot = first_symbol_potential(np.log(p))
        m = gibbs_weights(pot, 1)
        C1, C2 = gibbs_constants(m, pot, 6)
        worst = max(worst, abs(C1 - 1), abs(C2 - 1))
    table = memory2_table()
    m = gibbs_weights(block_potential(table), 3)
    brute = brute_cylinder_weights(table, 3, 8)
    dev = max(abs(brute[w] - m.weights[w]) for w in brute)
    ok = worst < 1e-10 and dev < 1e-6
    return Result(4, "Gibbs certification", ok,
                  f"max |C-1| {_e(worst)}; memory-2 depth-3 vs brute force n=8 {_e(dev)}")


def c5_non_liftable(seed: int = 0) -> Result:
    sch = build_doubling_scheme("refined", 5)
    v = check_liftability(sch, "length")
    contrib = v.contributions[1:6]
    induced = induce(sch, constant(-2.0))
    rep = check_P(sch, induced)
    levels = sorted(set(sch.taus.tolist()))
    terms = [float((sch.pieces * np.exp(induced.sup))[sch.taus == t].sum()) for t in levels]
    closed = [2.0 ** (2 ** n) * math.exp(-2.0 * (2 ** n + n + 1)) for n in range(6)]
    closed_err = max(abs(a - b) / b for a, b in zip(terms, closed))
    ratio4 = terms[4] / terms[3]
    ok = (min(contrib) >= 0.4 and v.verdict == "not-liftable" and ratio4 < 1e-3
          and rep.p2_pass and closed_err < 1e-12)
    return Result(5, "Lebesgue not liftable to the refined scheme", ok,
                  f"level contributions {min(contrib):.4f}..{max(contrib):.4f} ({v.verdict}); "
                  f"P2 sum {_g(rep.p2_sum)}, level-4 ratio {_e(ratio4)}")


def refined_equilibrium():
    sch = build_doubling_scheme("refined", 5)
    # (P3) fails at this truncation, see the decisions ledger; run regardless
    return sch, equilibrium(sch, constant(-2.0), force=True)


def c6_singular(seed: int = 0) -> Result:
    sch, tw = refined_equilibrium()
    L = sch.lengths / sch.lengths.sum()
    tv = 0.5 * float(np.abs(tw.symbol_mass - L).sum())
    ok = tv > 0.1
    return Result(6, "phi=-2 equilibrium vs normalized lengths", ok,
                  f"TV distance {_g(tv)} (needs > 0.1); P_L {_g(tw.P)}; "
                  f"log2-2 {_g(LOG2 - 2)}; P3 eps0 {_g(tw.report.p3_eps0)}")


def c7_t_bounds(seed: int = 0) -> Result:
    a, b, c = t_bounds(2, 8, 1), t_bounds(2, 8, 4), t_bounds(2, 2, 1)
    ok = ((a.t0, a.t1) == (-0.5, 1.5) and abs(b.t0 - 0.5) < 1e-15 and c.degenerate
          and c.t0 == -math.inf and c.t1 == math.inf)
    return Result(7, "t-range formulas", ok,
                  f"(2,8,1) -> ({a.t0!r}, {a.t1!r}); (2,8,4) t0 {b.t0!r}; "
                  f"(2,2,1) degenerate {c.degenerate}")


def c8_scheme_verification(seed: int = 0) -> Result:
    sch = build_doubling_scheme("plain", 59)
    rep = verify_scheme(sch, seed=seed)
    S_ok = all(v == 1 for v in rep.S_counts.values())
    dist = max(rep.distortion.values()) if rep.distortion else 0.0
    um = build_unimodal_scheme(quadratic_map(1.999), 12)
    urep = verify_scheme(um, seed=seed)
    tau_ok = int(um.taus.max()) <= 12
    ok = (abs(rep.lambda1 - 2) < 1e-6 and S_ok and dist == 0.0 and rep.h1_pass
          and urep.h1_pass and urep.h1_max_defect < 1e-9 and tau_ok)
    return Result(8, "scheme verification", ok,
                  f"doubling lambda1 {_g(rep.lambda1)}, S(n)=1 {S_ok}, distortion {_g(dist)}; "
                  f"unimodal {len(um)} elements, H1 defect {_e(urep.h1_max_defect)}")


def c9_unimodal_constants(seed: int = 0) -> Result:
    q = quadratic_map(2.0)
    ea, ea1 = abs(q.alpha - 0.5), abs(q.alpha1 + math.sqrt(3) / 2)
    um = quadratic_map(1.999)
    N0 = compute_N0(um)
    al = abs(um.alpha)
    direct = next(n for n in range(1, 10_000) if abs(eval_map(um, 0.0, n)) < al)
    ok = ea < 1e-10 and ea1 < 1e-10 and N0 == direct
    return Result(9, "unimodal constants", ok,
                  f"alpha err {_e(ea)}; alpha1 err {_e(ea1)}; N0 {N0} vs direct {direct}")


def c10_lyapunov_bracket(seed: int = 0) -> Result:
    worst = -math.inf
    rows = []
    plain = build_doubling_scheme("plain", 59)
    rep = verify_scheme(plain, seed=seed)
    towers = [(plain, rep, equilibrium(plain, phi_t(t), scheme_report=rep), f"t={t}")
              for t in T_GRID]
    rsch, rtw = refined_equilibrium()
    towers.append((rsch, verify_scheme(rsch, seed=seed), rtw, "phi=-2"))
    for sch, r, tw, tag in towers:
        lo, hi = math.log(r.lambda1), math.log(max(r.lambda3, r.lambda1))
        pts = sample_lift(tw, 20_000, seed=seed)
        est = lyapunov(pts, sch.fmap).value
        for v in (est, lyapunov_kac(tw)):
            worst = max(worst, lo - v, v - hi)
        rows.append(f"{tag}: {_g(est)} in [{_g(lo)}, {_g(hi)}]")
    ok = worst <= 1e-3
    return Result(10, "Lyapunov bracket", ok,
                  f"worst excursion {_e(max(worst, 0.0))}; " + "; ".join(rows[-2:]))


def lebesgue_orbit(n: int, seed: int, stream: int):
    """Exact doubling orbits started from the lifted phi_1 measure (Lebesgue)."""
    sch = build_doubling_scheme("plain", 59)
    tw = equilibrium(sch, phi_t(1.0))
    pts = sample_lift(tw, n, seed=seed ^ stream, mode="uniform")
    return orbit_stepper(sch.fmap, pts.points, substream(seed, stream))


def c11_correlations(seed: int = 0, n: int = 10 ** 6) -> Result:
    fit = correlation_fit(lebesgue_orbit(n, seed, 11), OBSERVABLES["x"], OBSERVABLES["x"], 20,
                          names=("x", "x"))
    exact = 2.0 ** -fit.lags / 12.0
    zdev = float(np.max(np.abs(fit.corr - exact)[1:] / fit.stderr[1:]))
    try:
        correlation_fit(lebesgue_orbit(n, seed, 12), OBSERVABLES["cos2pi"],
                        OBSERVABLES["cos2pi"], 10)
        cos_ok, zcos = False, math.nan
    except AllNoise as exc:
        cos_ok = True
        zcos = float(np.max(np.abs(exc.fit.corr[1:]) / exc.fit.stderr[1:]))
    ok = abs(fit.theta - 0.5) <= 0.05 and cos_ok
    return Result(11, "decay of correlations", ok,
                  f"theta {fit.theta:.4f} on lags {fit.fit_lags.min()}..{fit.fit_lags.max()}; "
                  f"max z vs exact series {zdev:.2f}; cos max z {zcos:.2f}")


def c12_clt(seed: int = 0, block: int = 2 ** 14, blocks: int = 10 ** 4) -> Result:
    rep = clt_test(lebesgue_orbit(blocks, seed, 21), OBSERVABLES["x-1/2"], block, mean=0.0)
    try:
        clt_test(lebesgue_orbit(blocks, seed, 22), OBSERVABLES["coboundary-sin"], block,
                 mean=0.0)
        cob = False
    except DegenerateVariance:
        cob = True
    ok = abs(rep.gamma - 0.5) <= 0.02 and rep.ks_distance < 0.05 and cob
    return Result(12, "central limit theorem", ok,
                  f"gamma {rep.gamma:.4f}; KS {rep.ks_distance:.4f}; coboundary flagged {cob}")


def determinism_probe(threads: int, seed: int = 0) -> str:
    """Compact pipeline run whose text output must not depend on ``threads``."""
    sch = build_doubling_scheme("plain", 20)
    curve = pressure_curve(sch, (0.0, 0.5, 1.0), threads=threads)
    tw = equilibrium(sch, phi_t(1.0))
    pts = sample_lift(tw, 2000, seed=seed)
    rep = clt_test(lebesgue_orbit(200, seed, 31), OBSERVABLES["x-1/2"], 256, mean=0.0)
    lines = [",".join(repr(float(v)) for v in row) for row in curve.rows()]
    lines.append(",".join(repr(float(x)) for x in pts.points[:50]))
    lines.append(repr(rep.gamma))
    return "\n".join(lines)


def c13_determinism(seed: int = 0) -> Result:
    a, b, c = determinism_probe(1, seed), determinism_probe(1, seed), determinism_probe(8, seed)
    ok = a == b == c
    return Result(13, "determinism", ok,
                  f"repeat identical {a == b}; threads 1 vs 8 identical {a == c}")


CRITERIA: dict[int, tuple[Callable, tuple[str, ...]]] = {
    1: (c1_zero_pressure, ()),
    2: (c2_pressure_curve, ("doubling-plain",)),
    3: (c3_abramov_kac, ("doubling-plain",)),
    4: (c4_gibbs, ()),
    5: (c5_non_liftable, ("doubling-refined",)),
    6: (c6_singular, ("doubling-refined",)),
    7: (c7_t_bounds, ()),
    8: (c8_scheme_verification, ("doubling-plain", "unimodal-a2eps")),
    9: (c9_unimodal_constants, ("unimodal-a2eps",)),
    10: (c10_lyapunov_bracket, ("doubling-plain", "doubling-refined")),
    11: (c11_correlations, ("doubling-plain",)),
    12: (c12_clt, ("doubling-plain",)),
    13: (c13_determinism, ()),
}


def select(preset: str | None = None, ids=None) -> list[int]:
    """Criteria touching ``preset`` (generic ones always), optionally restricted to ``ids``."""
    out = []
    for i, (_, tags) in CRITERIA.items():
        if preset is not None and tags and preset not in tags:
            continue
        if ids is not None and i not in ids:
            continue
        out.append(i)
    return out


def run(ids, seed: int = 0, threads: int = 1) -> list[Result]:
    def one(i):
        fn = CRITERIA[i][0]
        try:
            return fn(seed=seed)
        except Exception as exc:  # a crashing check is a failing check
            return Result(i, fn.__name__, False, f"error {type(exc).__name__}: {exc}")

    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(one, ids))
    return sorted(results, key=lambda r: r.id)

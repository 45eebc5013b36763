import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import brentq

from thermoscheme.errors import ConditionFailed, InvalidConstants, NoBracket
from thermoscheme.maps import quadratic_map
from thermoscheme.scheme import build_doubling_scheme, build_unimodal_scheme, verify_scheme
from thermoscheme.shift import gurevich_pressure_operator
from thermoscheme.thermo import (PotentialSpec, Q_of, check_liftability, check_P,
                                 compute_PL, constant, equilibrium, induce, lift,
                                 lyapunov_kac, phi_t, pressure_curve, t_bounds,
                                 verify_abramov_kac)

LOG2 = math.log(2)


@pytest.fixture(scope="module")
def plain():
    return build_doubling_scheme("plain", 59)


@pytest.fixture(scope="module")
def refined():
    return build_doubling_scheme("refined", 5)


@pytest.fixture(scope="module")
def unimodal():
    sch = build_unimodal_scheme(quadratic_map(1.999), 12)
    return sch, verify_scheme(sch)


def geometric(sch):
    p = 2.0 ** -(np.arange(len(sch)) + 1.0)
    return p / p.sum()


# -------------------------------------------------------------------- induce

def test_induce_plain_phi1(plain):
    ind = induce(plain, phi_t(1.0))
    assert np.allclose(ind.sup, -(np.arange(60) + 1) * LOG2, atol=1e-12)
    assert np.allclose(ind.inf, ind.sup)


def test_induce_constant(plain, refined):
    for sch in (plain, refined):
        ind = induce(sch, constant(-2.0))
        assert np.allclose(ind.sup, -2.0 * sch.taus)


def test_chain_rule(unimodal):
    sch, _ = unimodal
    assert induce(sch, phi_t(1.3)).chain_rule_defect() < 1e-10


# ------------------------------------------------------------------- check_P

def test_check_P_plain(plain):
    rep = check_P(plain, induce(plain, phi_t(1.0)))
    assert rep.p1_pass and rep.p1_A == 0.0
    assert rep.p2_pass and rep.p2_sum == pytest.approx(1.0, abs=1e-15)
    assert rep.p3_pass and 0 < rep.p3_eps0 < LOG2
    assert rep.failed() == []


def test_check_P_refined_zero_potential_diverges(refined):
    rep = check_P(refined, induce(refined, constant(0.0)))
    assert not rep.p2_pass and "P2" in rep.failed()


def test_check_P_refined_minus_two(refined):
    rep = check_P(refined, induce(refined, constant(-2.0)))
    assert rep.p2_pass
    n = np.arange(6)
    terms = 2.0 ** (2.0 ** n) * np.exp(-2.0 * (2.0 ** n + n + 1))
    assert rep.p2_sum == pytest.approx(terms.sum(), rel=1e-12)
    assert np.all(terms[1:] / terms[:-1] < 1)


def test_pass_flags_persist_with_truncation():
    for n in (20, 30):
        a = check_P(build_doubling_scheme("plain", n), induce(build_doubling_scheme("plain", n),
                                                                 phi_t(1.0)))
        b = check_P(build_doubling_scheme("plain", n + 2),
                    induce(build_doubling_scheme("plain", n + 2), phi_t(1.0)))
        assert set(b.failed()) <= set(a.failed())


# ---------------------------------------------------------------------- P_L

def test_PL_plain(plain):
    assert abs(compute_PL(plain, induce(plain, phi_t(1.0)))) < 1e-6
    assert compute_PL(plain, induce(plain, phi_t(0.0))) == pytest.approx(LOG2, abs=1e-6)


def test_PL_refined_against_closed_form(refined):
    n = np.arange(6)
    tau = 2.0 ** n + n + 1

    def closed(c):
        return np.sum(2.0 ** (2.0 ** n) * np.exp((-2.0 - c) * tau)) - 1.0

    oracle = brentq(closed, -5, 5, xtol=1e-15)
    got = compute_PL(refined, induce(refined, constant(-2.0)))
    assert got == pytest.approx(oracle, abs=1e-9)


def test_PL_root_residual(unimodal):
    sch, _ = unimodal
    ind = induce(sch, phi_t(0.7))
    c = compute_PL(sch, ind)
    assert abs(gurevich_pressure_operator(ind.to_shift().shifted(c), 1)) < 1e-9


def test_PL_no_bracket(plain):
    with pytest.raises(NoBracket):
        # P at t = -10 is 11 log 2, beyond the scanned range
        compute_PL(plain, induce(plain, phi_t(-10.0)), scan=4.0)


# ------------------------------------------------------------------- t_bounds

def test_t_bounds_examples():
    tb = t_bounds(2, 8, 1)
    assert tb.t1 == pytest.approx(1.5) and tb.t0 == pytest.approx(-0.5)
    assert t_bounds(2, 8, 4).t0 == pytest.approx(0.5)
    d = t_bounds(2, 2, 1)
    assert d.degenerate and d.t0 == -math.inf and d.t1 == math.inf and d.contains(99)
    with pytest.raises(InvalidConstants):
        t_bounds(0.9, 2, 1)


# ---------------------------------------------------------------- equilibrium

def test_equilibrium_plain_t1(plain):
    tw = equilibrium(plain, phi_t(1.0))
    assert np.allclose(tw.symbol_mass, geometric(plain), atol=1e-12)
    assert tw.Q == pytest.approx(2.0, abs=1e-12)
    assert sum(tw.levels.values()) == pytest.approx(1.0, abs=1e-10)
    for (s, k), m in tw.levels.items():
        assert m == pytest.approx(geometric(plain)[s] / 2, rel=1e-10)


def test_equilibrium_plain_t0_same_weights(plain):
    w0 = equilibrium(plain, phi_t(0.0)).symbol_mass
    w1 = equilibrium(plain, phi_t(1.0)).symbol_mass
    assert np.allclose(w0, w1, atol=1e-12)


def test_normalization_invariance(unimodal):
    sch, _ = unimodal
    a = equilibrium(sch, phi_t(1.0))
    b = equilibrium(sch, PotentialSpec("phi_t", t=1.0, offset=0.37))
    assert b.P == pytest.approx(a.P + 0.37, abs=1e-9)
    assert np.max(np.abs(a.symbol_mass - b.symbol_mass)) < 1e-10


def test_refined_weights_match_closed_form(refined):
    tw = equilibrium(refined, constant(-2.0), force=True)
    w = refined.pieces * np.exp((-2.0 - tw.P) * refined.taus)
    assert np.allclose(tw.symbol_mass, w / w.sum(), atol=1e-10)


def test_refusal_outside_t_bounds(unimodal):
    sch, rep = unimodal
    with pytest.raises(ConditionFailed) as exc:
        equilibrium(sch, phi_t(6.0), scheme_report=rep)
    assert exc.value.condition == "P3"
    narrow = replace(rep, lambda3=rep.lambda1 * 1.01)
    tb = t_bounds(narrow.lambda1, narrow.lambda3, narrow.gamma)
    with pytest.raises(ConditionFailed):
        equilibrium(sch, phi_t(tb.t1 + 1), scheme_report=narrow)
    # force runs it anyway
    assert equilibrium(sch, phi_t(1.0), scheme_report=narrow, force=True).Q >= 1


def test_refusal_on_failed_condition(refined):
    with pytest.raises(ConditionFailed) as exc:
        equilibrium(refined, constant(-2.0))
    assert exc.value.condition in ("P1", "P2", "P3")


def test_free_energy_random_search(plain):
    t = 0.5
    tw = equilibrium(plain, phi_t(t))
    taus = plain.taus.astype(float)

    def free(p):
        nz = p > 0
        return float(np.sum(p[nz] * (-np.log(p[nz]) - t * taus[nz] * LOG2)) / np.dot(p, taus))

    best = free(tw.symbol_mass)
    assert best == pytest.approx(tw.P, abs=1e-9)
    rng = np.random.default_rng(3)
    for k in range(10_000):
        size = int(rng.integers(2, len(plain) + 1))
        p = np.zeros(len(plain))
        p[:size] = rng.dirichlet(np.full(size, rng.uniform(0.1, 3.0)))
        assert free(p) <= best + 1e-6


def test_lyapunov_bracket(unimodal):
    sch, rep = unimodal
    for t in (0.5, 1.0, 1.5):
        lam = lyapunov_kac(equilibrium(sch, phi_t(t), scheme_report=rep))
        assert math.log(rep.lambda1) <= lam <= math.log(rep.lambda3)


# ------------------------------------------------------------------ Q and lift

def test_Q_examples(plain, refined):
    assert Q_of(geometric(plain), plain) == pytest.approx(2.0, abs=1e-12)
    point = np.zeros(len(plain))
    point[0] = 1.0
    assert Q_of(point, plain) == 1.0
    leb = refined.lengths / refined.lengths.sum()
    partial = [Q_of(np.where(refined.taus <= tau, leb, 0), refined)
               for tau in np.unique(refined.taus)]
    steps = np.diff(partial)
    assert np.all(steps > 0.4)


def test_lift_examples(plain):
    tw = lift(geometric(plain), plain)
    level0 = sum(m for (s, k), m in tw.levels.items() if k == 0)
    assert level0 == pytest.approx(0.5, abs=1e-12)
    point = np.zeros(len(plain))
    point[0] = 1.0
    assert lift(point, plain).levels == {(0, 0): 1.0}
    two = np.zeros(len(plain))
    two[0] = two[2] = 0.5
    tw = lift(two, plain)
    assert sorted(tw.levels) == [(0, 0), (2, 0), (2, 1), (2, 2)]
    assert all(m == pytest.approx(0.25) for m in tw.levels.values())


def test_liftability(plain, refined):
    v = check_liftability(plain)
    assert v.verdict == "liftable" and v.limit == pytest.approx(2.0, abs=1e-12)
    assert check_liftability(refined).verdict == "not-liftable"
    v = check_liftability(plain, density=4)
    assert v.verdict == "liftable" and v.limit == 5.0


# ------------------------------------------------------------- Abramov / Kac

def test_abramov_kac_plain(plain):
    tw = lift(geometric(plain), plain)
    ak = verify_abramov_kac(tw, phi_t(1.0))
    assert ak.h_nu == pytest.approx(2 * LOG2, abs=1e-9)
    assert ak.abramov_residual < 1e-9 and ak.kac_residual < 1e-9
    assert ak.integral_induced == pytest.approx(-2 * LOG2, abs=1e-9)
    kac = verify_abramov_kac(tw, constant(-1.0))
    assert kac.integral_induced == pytest.approx(-2.0, abs=1e-12)
    assert kac.integral_lift == pytest.approx(-1.0, abs=1e-12)
    assert kac.kac_residual < 1e-12


def test_abramov_unavailable_for_lumped(refined):
    tw = equilibrium(refined, constant(-2.0), force=True)
    ak = verify_abramov_kac(tw, constant(-2.0))
    assert ak.abramov_residual is None and ak.kac_residual < 1e-9


# -------------------------------------------------------------- pressure curve

def test_pressure_curve_plain(plain):
    grid = [-0.5, 0.0, 0.5, 1.0, 1.5]
    rep = verify_scheme(plain)
    curve = pressure_curve(plain, grid, scheme_report=rep)
    for s in curve.samples:
        assert s.P == pytest.approx((1 - s.t) * LOG2, abs=1e-4)
        assert s.root_residual < 1e-9
    assert curve.monotone and curve.convex and curve.lower_bounds


def test_pressure_curve_thread_independent(unimodal):
    sch, rep = unimodal
    grid = np.linspace(0.0, 2.0, 3)
    a = pressure_curve(sch, grid, scheme_report=rep, threads=1)
    b = pressure_curve(sch, grid, scheme_report=rep, threads=4)
    assert a.rows() == b.rows()
    assert a.monotone and a.convex

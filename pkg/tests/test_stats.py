import math

import numpy as np
import pytest

from thermoscheme.acceptance import lebesgue_orbit
from thermoscheme.errors import AllNoise, DegenerateVariance, NearCritical, QDiverges
from thermoscheme.maps import doubling_map, quadratic_map
from thermoscheme.scheme import build_doubling_scheme, build_unimodal_scheme, code_word, \
    verify_scheme
from thermoscheme.stats import (OBSERVABLES, DoublingOrbit, clt_test, correlation_fit,
                                correlations, lyapunov, orbit_stepper, sample_lift,
                                substream, words_from_points, words_to_points)
from thermoscheme.thermo import equilibrium, lift, phi_t

LOG2 = math.log(2)


@pytest.fixture(scope="module")
def plain_tower():
    sch = build_doubling_scheme("plain", 59)
    return equilibrium(sch, phi_t(1.0))


# ------------------------------------------------------------------ sampling

def test_sample_is_lebesgue(plain_tower):
    pts = sample_lift(plain_tower, 100_000, seed=1).points
    assert abs(pts.mean() - 0.5) < 0.005
    assert abs((pts > 0.5).mean() - 0.5) < 0.005
    assert pts.min() > 0 and pts.max() <= 1


def test_uniform_mode_is_lebesgue(plain_tower):
    pts = sample_lift(plain_tower, 100_000, seed=2, mode="uniform").points
    assert abs(pts.mean() - 0.5) < 0.005
    assert abs(np.mean(pts ** 2) - 1 / 3) < 0.005


def test_point_mass_sample():
    sch = build_doubling_scheme("plain", 10)
    p = np.zeros(len(sch))
    p[0] = 1.0
    pts = sample_lift(lift(p, sch), 500, seed=0).points
    assert np.allclose(pts, code_word(sch, (0,)))


def test_unimodal_samples_in_ambient():
    um = quadratic_map(1.999)
    sch = build_unimodal_scheme(um, 12)
    pts = sample_lift(equilibrium(sch, phi_t(1.0)), 5000, seed=4).points
    assert np.all((pts >= um.ambient.lo) & (pts <= um.ambient.hi))


def test_seeded_determinism(plain_tower):
    a = sample_lift(plain_tower, 3000, seed=9).points
    b = sample_lift(plain_tower, 3000, seed=9).points
    c = sample_lift(plain_tower, 3000, seed=10).points
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_infinite_Q_refused(plain_tower):
    from dataclasses import replace
    with pytest.raises(QDiverges):
        sample_lift(replace(plain_tower, Q=math.inf), 10)


def test_substreams_differ():
    assert substream(5, 1).random() != substream(5, 2).random()
    assert substream(5, 1).random() == substream(5, 1).random()


# ------------------------------------------------------------- fixed point

def test_fixed_point_round_trip():
    rng = np.random.default_rng(0)
    x = rng.random(1000)
    u = words_from_points(x, rng)
    assert np.max(np.abs(words_to_points(u) - x)) < 2.0 ** -52
    assert words_from_points(np.array([1.0]), rng)[0] >> np.uint64(11) == 2 ** 53 - 1


def test_doubling_orbit_matches_map():
    rng = np.random.default_rng(1)
    orb = DoublingOrbit(words_from_points(rng.random(200), rng), rng)
    x0 = orb.points()
    orb.step()
    expect = np.where(x0 <= 0.5, 2 * x0, 2 * x0 - 1)
    assert np.max(np.abs(orb.points() - expect)) < 2.0 ** -50


def test_exact_orbit_does_not_collapse():
    rng = np.random.default_rng(2)
    orb = orbit_stepper(doubling_map(), rng.random(1000), rng)
    for _ in range(200):
        orb.step()
    assert abs(orb.points().mean() - 0.5) < 0.05


# ----------------------------------------------------------------- Lyapunov

def test_lyapunov_doubling(plain_tower):
    est = lyapunov(sample_lift(plain_tower, 2000, seed=0), doubling_map(), orbit_len=10,
                   bracket=(LOG2, LOG2))
    assert est.value == pytest.approx(LOG2, abs=1e-12) and est.in_bracket


def test_lyapunov_unimodal_a2_long_orbits():
    q = quadratic_map(2.0)
    rng = np.random.default_rng(5)

    def sampler(n, r):
        return r.uniform(-0.99, 0.99, size=n)

    est = lyapunov(sampler(100, rng), q, orbit_len=10_000, seed=5, sampler=sampler)
    assert est.value == pytest.approx(LOG2, abs=0.01)


def test_lyapunov_near_critical_without_sampler():
    with pytest.raises(NearCritical):
        lyapunov(np.array([0.0, 0.3]), quadratic_map(2.0), orbit_len=2)


def test_lyapunov_bracket_unimodal():
    sch = build_unimodal_scheme(quadratic_map(1.999), 12)
    rep = verify_scheme(sch)
    tw = equilibrium(sch, phi_t(1.0), scheme_report=rep)
    est = lyapunov(sample_lift(tw, 20_000, seed=3), sch.fmap,
                   bracket=(math.log(rep.lambda1), math.log(rep.lambda3)))
    assert est.in_bracket


# ------------------------------------------------------------- correlations

def test_correlations_of_x():
    fit = correlation_fit(lebesgue_orbit(200_000, 0, 11), OBSERVABLES["x"], OBSERVABLES["x"],
                          12)
    assert abs(fit.theta - 0.5) <= 0.05 and fit.passed
    assert fit.corr[0] == pytest.approx(1 / 12, rel=0.02)


def test_cos_correlations_are_noise():
    with pytest.raises(AllNoise) as exc:
        correlation_fit(lebesgue_orbit(100_000, 0, 12), OBSERVABLES["cos2pi"],
                        OBSERVABLES["cos2pi"], 8)
    assert exc.value.fit.corr[0] == pytest.approx(0.5, rel=0.02)


def test_constant_observable_exact_zero():
    _, c, se = correlations(lebesgue_orbit(1000, 0, 13), OBSERVABLES["const"],
                            OBSERVABLES["const"], 5)
    assert np.all(c == 0.0) and np.all(se == 0.0)


# ---------------------------------------------------------------------- CLT

def test_clt_x_minus_half():
    rep = clt_test(lebesgue_orbit(4000, 0, 21), OBSERVABLES["x-1/2"], 2 ** 11, mean=0.0)
    assert abs(rep.gamma - 0.5) < 0.03
    assert rep.ks_distance < 0.05


def test_clt_coboundary_flagged():
    with pytest.raises(DegenerateVariance):
        clt_test(lebesgue_orbit(4000, 0, 22), OBSERVABLES["coboundary-sin"], 2 ** 11,
                 mean=0.0)


def test_clt_constant_degenerate():
    with pytest.raises(DegenerateVariance):
        clt_test(lebesgue_orbit(500, 0, 23), OBSERVABLES["const"], 64)

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermoscheme.acceptance import brute_cylinder_weights, memory2_table
from thermoscheme.errors import DepthInfeasible
from thermoscheme.maps import quadratic_map
from thermoscheme.scheme import build_doubling_scheme, build_unimodal_scheme
from thermoscheme.shift import (block_potential, first_symbol_potential, fit_variation,
                                gibbs_constants, gibbs_weights, gurevich_pressure_operator,
                                gurevich_pressure_orbits, measure_from_csv, measure_to_csv,
                                variation, zero_potential)
from thermoscheme.thermo import induce, phi_t

LOG2 = math.log(2)


@pytest.fixture(scope="module")
def unimodal_phi1():
    sch = build_unimodal_scheme(quadratic_map(1.999), 12)
    return induce(sch, phi_t(1.0)).to_shift()


# ------------------------------------------------------------------ pressure

def test_zero_potential_operator():
    assert abs(gurevich_pressure_operator(zero_potential(2), 1) - LOG2) < 1e-12


def test_zero_potential_orbits():
    est = gurevich_pressure_orbits(zero_potential(2), 16, base_symbol=None)
    assert abs(est[-1][1] - LOG2) < 1e-9
    # through one base cylinder there are 2^(n-1) orbits
    for n, v in gurevich_pressure_orbits(zero_potential(2), 16, base_symbol=1):
        assert v == pytest.approx((n - 1) * LOG2 / n, abs=1e-12)


def test_first_symbol_potential_pressure_zero():
    pot = first_symbol_potential([math.log(1 / 3), math.log(2 / 3)])
    assert abs(gurevich_pressure_operator(pot, 1)) < 1e-12
    assert abs(gurevich_pressure_orbits(pot, 16, base_symbol=None)[-1][1]) < 1e-9


def test_plain_doubling_truncated_operator():
    sch = build_doubling_scheme("plain", 59)
    pot = induce(sch, phi_t(1.0)).to_shift(trunc=30)
    # sum_{n<30} 2^-(n+1) = 1 - 2^-30
    assert gurevich_pressure_operator(pot, 2) == pytest.approx(math.log(1 - 2.0 ** -30),
                                                                abs=1e-12)
    assert pot.leakage == pytest.approx(2.0 ** -30, rel=1e-6)


def test_plain_doubling_orbits():
    sch = build_doubling_scheme("plain", 59)
    pot = induce(sch, phi_t(1.0)).to_shift(trunc=20)
    assert abs(gurevich_pressure_orbits(pot, 10, base_symbol=None)[-1][1]) < 2e-3


def test_depth_cap():
    with pytest.raises(DepthInfeasible):
        gurevich_pressure_operator(zero_potential(60), 4)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=5))
def test_routes_agree_first_symbol(vals):
    pot = first_symbol_potential(vals)
    op = gurevich_pressure_operator(pot, 1)
    assert op == pytest.approx(math.log(np.exp(vals).sum()), abs=1e-10)
    # all periodic points: exactly (sum e^v)^n
    assert gurevich_pressure_orbits(pot, 6, base_symbol=None)[-1][1] == pytest.approx(op,
                                                                                      abs=1e-10)


def test_routes_agree_memory2():
    pot = block_potential(memory2_table())
    op = gurevich_pressure_operator(pot, 2)
    est = gurevich_pressure_orbits(pot, 12, base_symbol=None)
    assert abs(est[-1][1] - op) < 5e-3


def test_routes_agree_unimodal(unimodal_phi1):
    op = gurevich_pressure_operator(unimodal_phi1, 2)
    est = gurevich_pressure_orbits(unimodal_phi1, 3, base_symbol=None)
    assert abs(est[-1][1] - op) < max(5e-3, unimodal_phi1.leakage)


def test_base_symbol_independence():
    pot = block_potential(memory2_table())
    m = gibbs_weights(pot, 2)
    C1, C2 = gibbs_constants(m, pot, 4)
    a = dict(gurevich_pressure_orbits(pot, 10, base_symbol=0))
    b = dict(gurevich_pressure_orbits(pot, 10, base_symbol=2))
    for n in range(2, 11):
        assert abs(a[n] - b[n]) <= 2 / n * math.log(C2 / C1) + 1e-12


def test_shift_moves_pressure_by_tau():
    sch = build_doubling_scheme("plain", 59)
    pot = induce(sch, phi_t(1.0)).to_shift(trunc=30)
    p0 = gurevich_pressure_operator(pot, 1)
    # every tau is >= 1, so shifting by c > 0 lowers the pressure by at least c
    assert gurevich_pressure_operator(pot.shifted(0.1), 1) <= p0 - 0.1 + 1e-12
    assert gurevich_pressure_operator(pot.shifted(-0.1), 1) > p0


# --------------------------------------------------------------------- gibbs

def test_bernoulli_weights_and_constants():
    pot = first_symbol_potential([math.log(1 / 3), math.log(2 / 3)])
    m = gibbs_weights(pot, 1)
    assert m.weights[(0,)] == pytest.approx(1 / 3, abs=1e-12)
    assert m.weights[(1,)] == pytest.approx(2 / 3, abs=1e-12)
    C1, C2 = gibbs_constants(m, pot, 6)
    assert abs(C1 - 1) < 1e-10 and abs(C2 - 1) < 1e-10


def test_uniform_depth3():
    m = gibbs_weights(zero_potential(2), 3)
    assert all(abs(p - 1 / 8) < 1e-12 for p in m.weights.values())
    C1, C2 = gibbs_constants(m, zero_potential(2), 5)
    assert abs(C1 - 1) < 1e-10 and abs(C2 - 1) < 1e-10


def test_memory2_brute_force():
    table = memory2_table()
    m = gibbs_weights(block_potential(table), 2)
    brute = brute_cylinder_weights(table, 2, 8)
    assert max(abs(m.weights[w] - brute[w]) for w in brute) < 1e-6


def test_weights_normalized_positive_consistent():
    m = gibbs_weights(block_potential(memory2_table()), 3)
    assert sum(m.weights.values()) == pytest.approx(1.0, abs=1e-10)
    assert min(m.weights.values()) > 0
    assert m.consistency_defect < 1e-10
    for w in itertools.product(range(3), repeat=2):
        ext = sum(m.weights[(a,) + w] for a in range(3))
        assert ext == pytest.approx(m.mass(w), abs=1e-10)


def test_extension_beyond_depth_is_consistent():
    m = gibbs_weights(block_potential(memory2_table()), 2)
    for w in itertools.product(range(3), repeat=3):
        assert sum(m.mass(w + (a,)) for a in range(3)) == pytest.approx(m.mass(w), rel=1e-9)


def test_unimodal_gibbs_constants_stable(unimodal_phi1):
    m = gibbs_weights(unimodal_phi1, 1)
    c4 = gibbs_constants(m, unimodal_phi1, 4, max_words=1500)
    c6 = gibbs_constants(m, unimodal_phi1, 6, max_words=1500)
    assert 0 < c4[0] <= c4[1] < math.inf
    assert c6[0] == pytest.approx(c4[0], rel=0.1) and c6[1] == pytest.approx(c4[1], rel=0.1)


def test_csv_round_trip():
    pot = block_potential(memory2_table())
    m = gibbs_weights(pot, 2)
    gibbs_constants(m, pot, 3)
    back = measure_from_csv(measure_to_csv(m, {"scheme": "none"}))
    assert back.weights == m.weights
    assert (back.P_G, back.C1, back.C2, back.depth) == (m.P_G, m.C1, m.C2, m.depth)
    # weights-only measure still yields consistent transitions
    assert np.allclose(back.transition(0).sum(), 1.0)


# ----------------------------------------------------------------- variation

def test_plain_variation_vanishes():
    pot = induce(build_doubling_scheme("plain", 59), phi_t(1.0)).to_shift(trunc=20)
    assert all(variation(pot, n) == 0.0 for n in (1, 2, 3))


def test_memory_variation_beyond_memory_is_zero():
    pot = block_potential(memory2_table())
    assert variation(pot, 1) > 0 and variation(pot, 2) == 0.0


def test_unimodal_variation_contracts(unimodal_phi1):
    A, r, table = fit_variation(unimodal_phi1, range(1, 5), max_cylinders=2000)
    assert 0 < r < 1
    assert all(table[n] <= A * r ** n * (1 + 1e-9) for n in table)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermoscheme.errors import NotInW, NotMarkov
from thermoscheme.maps import Interval, doubling_map, eval_map, quadratic_map, tent_map
from thermoscheme.scheme import (build_doubling_scheme, build_first_return_scheme,
                                 build_tower, build_unimodal_scheme, code_word, compute_N0,
                                 cylinder_interval, default_M_bar, induced_map,
                                 scheme_from_json, scheme_to_json, strongly_regular_check,
                                 verify_scheme)


@pytest.fixture(scope="module")
def plain():
    return build_doubling_scheme("plain", 59)


@pytest.fixture(scope="module")
def unimodal():
    return build_unimodal_scheme(quadratic_map(1.999), 12)


def test_plain_elements(plain):
    assert len(plain) == 60
    for n, e in enumerate(plain.elements):
        assert e.J.lo == 2.0 ** -(n + 1) and e.J.hi == 2.0 ** -n
        assert e.tau == n + 1


def test_plain_maps_onto_W(plain):
    for e in plain.elements[:40]:
        lo, hi = plain.forward(e.symbol, e.J.lo), plain.forward(e.symbol, e.J.hi)
        assert abs(lo - 0.0) < 1e-9 and abs(hi - 1.0) < 1e-9


def test_refined_piece_counts():
    r = build_doubling_scheme("refined", 5)
    table = {row["tau"]: row["count"] for row in r.level_table()}
    assert table == {2 ** n + n + 1: 2 ** (2 ** n) for n in range(6)}
    assert sum(r.lengths) == pytest.approx(1 - 2.0 ** -6, abs=1e-15)


def test_induced_map_plain(plain):
    y, s = induced_map(plain, 0.3)
    assert s == 1 and y == pytest.approx(0.2)


def test_element_of_outside(plain):
    with pytest.raises(NotInW):
        plain.element_of(2.0 ** -70)


def test_code_word_fixed_points(plain):
    # a length-one word codes the fixed point of its branch
    for s in range(6):
        x = code_word(plain, (s,))
        assert plain.forward(s, x) == pytest.approx(x, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=5), st.integers(0, 5))
def test_cylinders_nest(word, extra):
    sch = build_doubling_scheme("plain", 8)
    outer = cylinder_interval(sch, word)
    inner = cylinder_interval(sch, list(word) + [extra])
    assert outer.lo - 1e-15 <= inner.lo and inner.hi <= outer.hi + 1e-15


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=4))
def test_code_word_in_cylinder(word):
    sch = build_doubling_scheme("plain", 8)
    x = code_word(sch, word)
    c = cylinder_interval(sch, word)
    assert c.lo - 1e-12 <= x <= c.hi + 1e-12


def test_plain_report(plain):
    rep = verify_scheme(plain)
    assert abs(rep.lambda1 - 2) < 1e-6
    assert set(rep.S_counts.values()) == {1}
    assert rep.gamma == 1.0
    assert rep.c2 == 0.0 and max(rep.distortion.values()) == 0.0
    assert rep.lambda3 == pytest.approx(2.0)
    assert rep.h1_pass and rep.h2_pass and rep.h1_max_defect == 0.0


def test_refined_report_tail_is_slow():
    rep = verify_scheme(build_doubling_scheme("refined", 5))
    assert rep.lambda1 < 1.2 and rep.lambda3 == pytest.approx(2.0)


def test_unimodal_scheme(unimodal):
    A = unimodal.W
    assert unimodal.taus.max() <= 12
    for e in unimodal.elements:
        assert A.lo <= e.J.lo and e.J.hi <= A.hi
        a, b = unimodal.forward(e.symbol, e.J.lo), unimodal.forward(e.symbol, e.J.hi)
        assert abs(min(a, b) - A.lo) < 1e-9 and abs(max(a, b) - A.hi) < 1e-9
    Js = sorted((e.J.lo, e.J.hi) for e in unimodal.elements)
    assert all(h1 <= l2 + 1e-15 for (_, h1), (l2, _) in zip(Js, Js[1:]))


def test_unimodal_report(unimodal):
    rep = verify_scheme(unimodal)
    assert rep.h1_pass and rep.h1_max_defect < 1e-9
    assert rep.h2_pass
    assert rep.lambda3 >= rep.lambda1 > 1
    assert rep.S_counts.get(6, 0) == 0 and rep.S_counts.get(7, 0) == 0


def test_unimodal_distortion_decays(unimodal):
    d = verify_scheme(unimodal).distortion
    ks = sorted(k for k in d if d[k] > 0)
    assert d[ks[-1]] < d[ks[0]] / 100


def test_compute_N0_matches_iteration():
    um = quadratic_map(1.999)
    al = abs(um.alpha)
    direct = next(n for n in range(1, 1000) if abs(eval_map(um, 0.0, n)) < al)
    assert compute_N0(um) == direct == 7


def test_strongly_regular_window():
    um = quadratic_map(1.999)
    sch = build_unimodal_scheme(um, 12)
    N0 = compute_N0(um)
    Mb = default_M_bar(N0)
    assert math.log(N0) ** 2 < Mb < 2 * N0 / 3
    rep = strongly_regular_check(um, sch, 0)
    assert rep.passed and rep.reason == "vacuous"
    with pytest.raises(ValueError):
        strongly_regular_check(um, sch, 3, M_bar=100.0)


def test_first_return_doubling():
    sch = build_first_return_scheme(doubling_map(), Interval(0.5, 1.0), 12)
    counts = {row["tau"]: row["count"] for row in sch.level_table()}
    # first return of (1/2, 1] under doubling: one element per return time
    assert all(c == 1 for c in counts.values()) and min(counts) == 1
    assert sum(sch.lengths) == pytest.approx(0.5 * (1 - 2.0 ** -12))


def test_first_return_not_markov():
    with pytest.raises(NotMarkov):
        build_first_return_scheme(tent_map(1.7), Interval(0.3, 0.6), 4)


def test_json_round_trip(plain, unimodal):
    for sch in (plain, unimodal, build_doubling_scheme("refined", 5)):
        back = scheme_from_json(scheme_to_json(sch))
        assert scheme_to_json(back) == scheme_to_json(sch)
        assert back.elements == sch.elements


def test_tower_levels(plain):
    tower = build_tower(build_doubling_scheme("plain", 5))
    assert len(tower.levels) == sum(range(1, 7))
    # last level of each element is the right half
    last = [lv for lv in tower.levels if lv[1] == lv[0]]
    assert all(iv.lo == pytest.approx(0.5) for _, _, iv in last)

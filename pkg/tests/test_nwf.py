import threading
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coinduct import nwf
from coinduct.errors import DanglingChild, TooLarge, UnreachableNode, ValidationError
from coinduct.nwf import DyadicDistance, RankedSet

from generators import random_apg
from oracles import naive_bisimulation, naive_level_equiv


def apg_pairs():
    return st.integers(0, 2**32 - 1).map(lambda s: np.random.default_rng(s)).map(
        lambda r: (random_apg(r, 8, float(r.uniform(0.0, 0.35))), random_apg(r, 8, float(r.uniform(0.0, 0.35))))
    )


def two_cycle():
    return nwf.validate_apg(["a", "b"], {"a": ["b"], "b": ["a"]}, "a")


# --- construction -------------------------------------------------------------------

def test_validate_examples():
    e = nwf.validate_apg(["x"], {}, "x")
    assert nwf.bisimilar(e, nwf.empty())
    o = nwf.validate_apg(["x"], {"x": ["x"]}, "x")
    assert nwf.bisimilar(o, nwf.omega())
    one = nwf.validate_apg(["r", "l"], {"r": ["l"]}, "r")
    assert nwf.bisimilar(one, nwf.numeral(1))


def test_validate_errors():
    with pytest.raises(UnreachableNode):
        nwf.validate_apg([0, 1], {}, 0)
    with pytest.raises(DanglingChild):
        nwf.validate_apg([0], {0: [5]}, 0)
    with pytest.raises(DanglingChild):
        nwf.validate_apg([0], {}, 3)
    with pytest.raises(ValidationError):
        nwf.validate_apg([0, 0], {}, 0)


def test_from_edges_and_at():
    g = nwf.from_edges("r", [("r", "a"), ("a", "b"), ("b", "a")])
    assert len(g) == 3
    sub = g.at("a")
    assert sub.root == "a" and set(sub.nodes) == {"a", "b"}
    assert nwf.bisimilar(sub, nwf.omega())


# --- bisimulation -------------------------------------------------------------------

def test_bisimilar_examples():
    assert nwf.bisimilar(nwf.omega(), two_cycle())
    assert not nwf.bisimilar(nwf.empty(), nwf.numeral(1))
    # 2 = {{{}}} built with a duplicated leaf path
    alt = nwf.validate_apg("rabcd", {"r": "ab", "a": "c", "b": "d"}, "r")
    assert nwf.bisimilar(alt, nwf.numeral(2))


@settings(max_examples=150, deadline=None)
@given(apg_pairs())
def test_bisimilar_matches_naive_oracle(pair):
    g1, g2 = pair
    assert nwf.bisimilar(g1, g2) == naive_bisimulation(g1, g2)


def test_quotient_examples():
    q = nwf.quotient(two_cycle())
    assert len(q) == 1 and q.children[q.root] == frozenset({q.root})
    n3 = nwf.numeral(3)
    assert len(nwf.quotient(n3)) == 4
    # r -> {a, b}, a -> {x}, b -> {y}: a, b are both {0} and x, y both 0
    dup = nwf.validate_apg("rabxy", {"r": "ab", "a": "x", "b": "y"}, "r")
    q = nwf.quotient(dup)
    assert len(q) == 3
    assert nwf.bisimilar(q, nwf.validate_apg("rax", {"r": "a", "a": "x"}, "r"))


@settings(max_examples=100, deadline=None)
@given(apg_pairs())
def test_quotient_properties(pair):
    g, _ = pair
    q = nwf.quotient(g)
    assert nwf.bisimilar(g, q)
    # no two distinct nodes of the quotient are bisimilar
    assert len(set(nwf.stable_partition(q))) == len(q)
    assert len(nwf.quotient(q)) == len(q)


# --- distance -----------------------------------------------------------------------

@pytest.mark.parametrize("n", range(0, 12))
def test_numeral_omega_distance(n):
    d = nwf.distance(nwf.numeral(n), nwf.omega())
    assert d == DyadicDistance(n)
    assert d.as_fraction() == Fraction(1, 2**n)


def test_distance_examples():
    for g in (nwf.empty(), nwf.omega(), nwf.numeral(4), two_cycle()):
        assert nwf.distance(g, g).is_zero
    assert nwf.distance(nwf.empty(), nwf.numeral(1)) == DyadicDistance(0)
    assert nwf.distance(nwf.omega(), two_cycle()) == DyadicDistance.ZERO
    assert str(nwf.distance(nwf.numeral(1), nwf.numeral(2))) == "2^-1"


def test_dyadic_distance_format_and_order():
    assert [str(DyadicDistance(e)) for e in (None, 0, 1, 7)] == ["0", "1", "2^-1", "2^-7"]
    for text in ("0", "1", "2^-1", "2^-20"):
        assert str(DyadicDistance.parse(text)) == text
    with pytest.raises(ValidationError):
        DyadicDistance.parse("0.5")
    assert DyadicDistance.ZERO < DyadicDistance(9) < DyadicDistance(3) < DyadicDistance(0)
    assert float(DyadicDistance(3)) == 0.125


@settings(max_examples=150, deadline=None)
@given(apg_pairs())
def test_level_characterization(pair):
    g1, g2 = pair
    d = nwf.distance(g1, g2)
    for n in range(len(g1) + len(g2) + 1):
        eq = nwf.approx_equiv(g1, g2, n)
        assert eq == (d.as_fraction() <= Fraction(1, 2**n))
        assert eq == naive_level_equiv(g1, g2, n)


@settings(max_examples=100, deadline=None)
@given(apg_pairs())
def test_separation_and_bisimulation_invariance(pair):
    g1, g2 = pair
    d = nwf.distance(g1, g2)
    assert d.is_zero == naive_bisimulation(g1, g2)
    assert nwf.distance(nwf.quotient(g1), nwf.quotient(g2)) == d
    assert nwf.distance(g2, g1) == d


@settings(max_examples=100, deadline=None)
@given(apg_pairs())
def test_halving_structure(pair):
    g1, g2 = pair
    e1 = not g1.children[g1.root]
    e2 = not g2.children[g2.root]
    d = nwf.distance(g1, g2)
    if e1 != e2:
        assert d == DyadicDistance(0)
    else:
        assert d.as_fraction() <= Fraction(1, 2)


def test_distance_matrix_agrees_with_pairwise(rng):
    graphs = [random_apg(rng, 6, 0.3) for _ in range(12)] + [nwf.omega(), nwf.numeral(3)]
    D = nwf.distance_matrix(graphs)
    for i, a in enumerate(graphs):
        for j, b in enumerate(graphs):
            assert D[i][j] == nwf.distance(a, b)


# --- approximants -------------------------------------------------------------------

def test_approximant_examples(rng):
    for g in (nwf.omega(), nwf.numeral(5), random_apg(rng)):
        assert nwf.approximant(g, 0) is RankedSet.EMPTY
    f3 = nwf.approximant(nwf.omega(), 3)
    assert f3 is nwf.approximant(nwf.numeral(3), 3)
    assert str(f3) == "{{{{}}}}"
    assert f3.rank == 3
    with pytest.raises(ValidationError):
        nwf.approximant(nwf.omega(), -1)


def test_approx_equiv_examples():
    assert nwf.approx_equiv(nwf.empty(), nwf.omega(), 0)
    assert not nwf.approx_equiv(nwf.empty(), nwf.numeral(1), 1)
    for n in range(8):
        assert nwf.approx_equiv(nwf.numeral(n), nwf.omega(), n)
        assert not nwf.approx_equiv(nwf.numeral(n), nwf.omega(), n + 1)


@settings(max_examples=60, deadline=None)
@given(apg_pairs())
def test_approximant_composition(pair):
    g, _ = pair
    for m in range(7):
        image = nwf.to_apg(nwf.approximant(g, m))
        for n in range(7):
            assert nwf.approximant(image, n) is nwf.approximant(g, min(m, n))


def test_tower_is_consistent(rng):
    g = random_apg(rng, 8, 0.3)
    tower = nwf.approximant_tower(g, 12)
    assert len(tower) == 13
    assert all(tower[k] is nwf.approximant(g, k) for k in range(13))


def test_ranked_set_interning_under_threads():
    results = []

    def build():
        s = RankedSet.EMPTY
        for _ in range(40):
            s = RankedSet([s, RankedSet([s])])
        results.append(s)

    threads = [threading.Thread(target=build) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(r is results[0] for r in results)


def test_to_apg_roundtrip(rng):
    for _ in range(10):
        g = random_apg(rng)
        s = nwf.approximant(g, 4)
        h = nwf.to_apg(s)
        assert nwf.approximant(h, 5) is s
        assert len(h) == len(nwf.quotient(h))


# --- builders -----------------------------------------------------------------------

def test_builders():
    z = nwf.numeral(0)
    assert len(z) == 1 and not z.children[z.root]
    o = nwf.omega()
    assert o.children[o.root] == frozenset({o.root})
    assert len(nwf.to_apg(RankedSet.EMPTY)) == 1
    with pytest.raises(ValidationError):
        nwf.numeral(-1)


@pytest.mark.parametrize("n,size", [(0, 0), (1, 1), (2, 2), (3, 4), (4, 16)])
def test_s_level_sizes(n, size):
    g = nwf.s_level(n)
    assert len(g.children[g.root]) == size


def test_s_level_two_is_zero_and_one():
    g = nwf.s_level(2)
    kids = [g.at(c) for c in g.children[g.root]]
    assert sorted(len(nwf.quotient(k)) for k in kids) == [1, 2]
    assert any(nwf.bisimilar(k, nwf.empty()) for k in kids)
    assert any(nwf.bisimilar(k, nwf.numeral(1)) for k in kids)
    with pytest.raises(TooLarge):
        nwf.s_level(5)


# --- tau iteration --------------------------------------------------------------------

def test_tau_examples():
    assert nwf.tau_iterate(nwf.omega(), nwf.omega(), 7).root == 0.0
    t = nwf.tau_iterate(nwf.numeral(1), nwf.numeral(2), 10)
    assert abs(t.root - 0.5) <= 2**-10
    assert nwf.tau_iterate(nwf.empty(), nwf.omega(), 1).root == 1.0
    with pytest.raises(ValidationError):
        nwf.tau_iterate(nwf.empty(), nwf.omega(), 0)


def test_tau_table_entries(rng):
    g1, g2 = random_apg(rng), random_apg(rng)
    t = nwf.tau_iterate(g1, g2, 30)
    assert np.all((t.g >= 0) & (t.g <= 1))
    for a in g1.nodes:
        for b in g2.nodes:
            assert abs(t.at(a, b) - float(nwf.distance(g1.at(a), g2.at(b)))) <= 2**-30


@settings(max_examples=100, deadline=None)
@given(apg_pairs(), st.sampled_from([1, 3, 5, 10, 20, 30]))
def test_tau_oracle(pair, k):
    g1, g2 = pair
    assert abs(nwf.tau_iterate(g1, g2, k).root - float(nwf.distance(g1, g2))) <= 2.0**-k


# --- canonical map --------------------------------------------------------------------

def test_canonical_examples():
    f = nwf.canonical_F(two_cycle())
    assert nwf.bisimilar(f, nwf.omega()) and len(f) == 1
    ff = nwf.canonical_F(f)
    assert nwf.bisimilar(ff, f) and len(ff) == len(f)
    # r -> {a, b}, a -> {c}, b -> {c}: a and b collapse
    g = nwf.validate_apg("rabc", {"r": "ab", "a": "c", "b": "c"}, "r")
    fg = nwf.canonical_F(g)
    assert len(fg) == 3 and len(fg.children[fg.root]) == 1


@settings(max_examples=80, deadline=None)
@given(apg_pairs())
def test_canonical_is_idempotent(pair):
    g, _ = pair
    f = nwf.canonical_F(g)
    assert nwf.bisimilar(f, g)
    assert nwf.bisimilar(nwf.canonical_F(f), f)
    assert len(f) == len(nwf.quotient(g))


# --- axioms report --------------------------------------------------------------------

def test_axioms_report_examples(rng):
    rep = nwf.pseudometric_axioms_report([nwf.empty(), nwf.numeral(1), nwf.numeral(2), nwf.omega()])
    assert rep.ok and rep.failures == ()
    rep = nwf.pseudometric_axioms_report([nwf.omega()] * 3)
    assert rep.ok
    rep = nwf.pseudometric_axioms_report([random_apg(rng, 6, 0.3) for _ in range(25)])
    assert rep.ok
    with pytest.raises(ValidationError):
        nwf.pseudometric_axioms_report([nwf.omega()])


def test_axioms_report_large_exponents():
    samples = [nwf.numeral(70), nwf.numeral(71), nwf.omega(), nwf.numeral(3)]
    rep = nwf.pseudometric_axioms_report(samples)
    assert rep.ok

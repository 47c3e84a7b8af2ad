from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from degenum.model import Balance, DegreeSequence, GraphClass, UnderflowError


def test_bipartite_class_layout():
    gc = GraphClass.bipartite(2, 3)
    assert list(gc.S) == [1, 2]
    assert list(gc.T) == [3, 4, 5]
    assert gc.pair_count == 6
    assert gc.delta_di == 0
    assert all(gc.allowable(a, v) for a in gc.S for v in gc.T)
    assert not gc.allowable(1, 2)
    with pytest.raises(ValueError):
        gc.mate(1)


def test_digraph_mates_and_pairs():
    gc = GraphClass.digraph(4)
    assert gc.pair_count == 12
    assert gc.mate(1) == 5 and gc.mate(5) == 1
    assert not gc.allowable(2, 6)
    assert gc.allowable(2, 7) and gc.allowable(7, 2)
    assert gc.neighbors(1) == (6, 7, 8)
    assert gc.excluded_cells() == frozenset({(0, 0), (1, 1), (2, 2), (3, 3)})


def test_digraph_needs_equal_parts():
    with pytest.raises(ValueError):
        GraphClass("digraph", 2, 3)


def test_sequence_validation():
    with pytest.raises(ValueError):
        DegreeSequence.bipartite([1, -1], [0, 0])
    with pytest.raises(ValueError):
        DegreeSequence(GraphClass.bipartite(2, 2), (1,), (1, 0))


def test_vertex_lookup_and_vector():
    d = DegreeSequence.bipartite([3, 1], [2, 1, 1])
    assert d.d == (3, 1, 2, 1, 1)
    assert d[1] == 3 and d[3] == 2 and d[5] == 1
    with pytest.raises(ValueError):
        d[6]


def test_balance_states():
    assert DegreeSequence.bipartite([1, 1], [1, 1]).balance() is Balance.BALANCED
    assert DegreeSequence.bipartite([2, 1], [1, 1]).balance() is Balance.S_HEAVY
    assert DegreeSequence.bipartite([1, 0], [1, 1]).balance() is Balance.T_HEAVY
    assert DegreeSequence.bipartite([3, 1], [1, 0]).balance() is Balance.OTHER


def test_perturb_and_underflow():
    d = DegreeSequence.bipartite([1, 2], [2, 1])
    assert d.perturb([2, 3]).d == (1, 1, 1, 1)
    assert d.minus(1, 1) is None
    with pytest.raises(UnderflowError):
        d.perturb([1, 1])


def test_stats_values():
    d = DegreeSequence.digraph([2, 1, 0], [1, 1, 1])
    st = d.stats
    assert st.M1s == 3 and st.M1t == 3
    assert st.s_bar == 1 and st.t_bar == 1
    assert st.mu == Fraction(6, 12)
    assert st.sigma2_s == Fraction(2, 3)
    assert st.sigma2_t == 0
    assert st.sigma_st == 0
    assert st.M2t == 0
    assert st.delta_S == 2
    assert st.eps(d, 1) == 1 and st.eps(d, 3) == -1


def test_bipartite_has_no_cross_term():
    assert DegreeSequence.bipartite([1], [1]).stats.sigma_st is None


@st.composite
def sequences(draw, max_side=5, max_entry=4):
    digraph = draw(st.booleans())
    ell = draw(st.integers(1, max_side))
    n = ell if digraph else draw(st.integers(1, max_side))
    s = draw(st.lists(st.integers(0, max_entry), min_size=ell, max_size=ell))
    t = draw(st.lists(st.integers(0, max_entry), min_size=n, max_size=n))
    return DegreeSequence.digraph(s, t) if digraph else DegreeSequence.bipartite(s, t)


@given(sequences())
def test_variances_nonnegative_and_means_consistent(d):
    st_ = d.stats
    assert st_.sigma2_s >= 0 and st_.sigma2_t >= 0
    assert st_.s_bar * d.cls.ell == sum(d.s)
    if d.cls.pair_count:
        assert 2 * st_.mu * d.cls.pair_count == sum(d.s) + sum(d.t)


@given(sequences())
def test_transpose_is_an_involution(d):
    tt = d.transpose().transpose()
    assert tt == d
    tr = d.transpose()
    for x in range(1, d.cls.size + 1):
        assert tr[d.cls.transpose_vertex(x)] == d[x]


@given(sequences(), st.data())
def test_perturb_lowers_one_entry(d, data):
    x = data.draw(st.integers(1, d.cls.size))
    low = d.minus(x)
    if d[x] == 0:
        assert low is None
    else:
        assert low[x] == d[x] - 1
        assert sum(low.d) == sum(d.d) - 1

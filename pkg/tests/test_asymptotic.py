import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degenum import asymptotic as asy
from degenum import exact
from degenum.model import DegreeSequence


def bip(s, t):
    return DegreeSequence.bipartite(s, t)


def di(s, t):
    return DegreeSequence.digraph(s, t)


@pytest.mark.parametrize("n,k", [(0, 0), (1, 1), (10, 3), (52, 5), (200, 100), (1000, 17), (10**6, 3), (10**6, 5 * 10**5)])
def test_log_binom_accuracy(n, k):
    with mpmath.workdps(40):
        ref = float(mpmath.log(mpmath.binomial(n, k))) if 0 < k < n else 0.0
    assert asy.log_binom(n, k) == pytest.approx(ref, rel=1e-12, abs=1e-14)


def test_log_binom_out_of_range():
    assert asy.log_binom(3, 4) == -math.inf


def test_two_by_two_estimate():
    d = bip([1, 1], [1, 1])
    assert math.exp(asy.binom_model_logprob(d).log_value) == pytest.approx(4 / 9, rel=1e-12)
    assert asy.correction_H(d) == pytest.approx(math.exp(-0.5), rel=1e-12)
    assert asy.estimate_log_count(d).value == pytest.approx(8 / 3 * math.exp(-0.5), rel=1e-12)
    assert asy.estimate_log_count(d).value == pytest.approx(1.6174, abs=1e-4)


def test_regular_digraph_estimate():
    d = di([1] * 4, [1] * 4)
    want = 3**8 / math.comb(12, 4) * math.exp(-0.5)
    assert asy.estimate_log_count(d).value == pytest.approx(want, rel=1e-12)
    # relative error against the derangement count 9
    assert abs(asy.estimate_log_count(d).value / exact.count(d) - 1) < 0.15


def test_correction_digraph_covariance_term():
    d = di([2, 1, 0], [0, 1, 2])
    st_ = d.stats
    mu, s = float(st_.mu), float(st_.s_bar)
    q = 1 - mu
    expo = -0.5 * (1 - float(st_.sigma2_s) / (s * q)) * (1 - float(st_.sigma2_t) / (s * q)) - float(st_.sigma_st) / (s * q)
    assert asy.correction_H(d) == pytest.approx(math.exp(expo), rel=1e-12)
    assert st_.sigma_st < 0


def test_estimate_requires_balance():
    with pytest.raises(ValueError):
        asy.estimate_log_count(bip([2, 1], [1, 1]))


def test_correction_singular_at_full_density():
    with pytest.raises(asy.Singular):
        asy.correction_H(bip([2, 2], [2, 2]))


def test_sparse_error_bound_value():
    d = bip([2, 1, 1], [2, 1, 1])
    e = 0.2
    lead = 2**3 * 2**3 * 9 ** (e / 2) / 4 * (3 / 4 + 3 / 4)
    want = lead + 2 * 3 ** (e - 0.5)
    assert asy.sparse_error_bound(d, e) == pytest.approx(want, rel=1e-12)
    with pytest.raises(ValueError):
        asy.sparse_error_bound(d, 0.5)


def test_params_and_flags():
    with pytest.raises(ValueError):
        asy.AsymParams(0.7)
    d = bip([1] * 20, [1] * 20)
    assert asy.AsymParams().regime_flags(d) == []
    assert asy.AsymParams().regime_flags(bip([3, 3], [3, 3])) != []


def test_edge_probability_regular_bipartite_is_exact():
    d = bip([2, 2, 2], [2, 2, 2])
    assert asy.edge_prob_estimate(d, 1, 4) == pytest.approx(2 / 3, abs=1e-15)
    assert float(exact.edge_prob_exact(d, 1, 4)) == pytest.approx(2 / 3, abs=1e-15)


def test_edge_probability_regular_digraph_form():
    k, n = 2, 6
    d = di([k] * n, [k] * n)
    m = k * n
    assert asy.edge_prob_estimate(d, 1, 8) == pytest.approx(k * k / (m - k) * (1 + 2 * k / (n - 1)), rel=1e-12)


def test_edge_probability_symmetric_in_argument_order():
    d = bip([3, 2, 2], [2, 3, 2])
    assert asy.edge_prob_estimate(d, 1, 5) == asy.edge_prob_estimate(d, 5, 1)


def test_edge_probability_rejects_loop_pair():
    with pytest.raises(ValueError):
        asy.edge_prob_estimate(di([1, 1], [1, 1]), 1, 3)


def test_regular_closed_forms():
    d = bip([2] * 6, [2] * 6)
    mu = 1 / 3
    t = 2
    assert asy.pi_value(d, 1, 7) == pytest.approx(mu, rel=1e-12)
    assert asy.rho_value(d, 1, 2) == pytest.approx(1, rel=1e-12)
    assert asy.rho_value(d, 3, 3) == 1
    # the second factor sees v with one unit removed: pi = mu (1 - 1/t)
    want = mu * mu * (1 - 1 / t) * (1 + (mu - mu**2) / (t * (1 - mu)))
    assert want == pytest.approx(7 / 108)
    assert asy.ystar_value(d, 1, 7, 2) == pytest.approx(want, rel=1e-12)


def test_closed_forms_reject_bad_arguments():
    d = bip([2] * 3, [2] * 3)
    with pytest.raises(ValueError):
        asy.rho_value(d, 1, 4)
    with pytest.raises(ValueError):
        asy.ystar_value(d, 1, 4, 1)


def test_sparse_ratio_example():
    d = bip([2, 1], [1, 1])
    assert asy.sparse_ratio(d, 1, 2) == pytest.approx(2.0)
    assert float(exact.ratio_exact(d, 1, 2)) == 2.0
    assert asy.sparse_ratio(d, 2, 2) == 1.0


def test_sparse_ratio_digraph_reduces_for_equal_mates():
    d = di([2, 1, 1], [1, 1, 1])
    st_ = d.stats
    want = 2 / 1 * (1 + (2 - 1) * st_.M2t / st_.M1t**2)
    assert asy.sparse_ratio(d, 1, 2) == pytest.approx(want)


def test_goal_ratio_example():
    # at d - e_1 = ([1,1],[1,1]): mu = 1/2, means 1, no spread
    d = bip([2, 1], [1, 1])
    assert asy.goal_ratio(d, 1, 2) == pytest.approx(4 / math.e, rel=1e-12)
    assert asy.goal_ratio(d, 1, 1) == 1.0


def test_goal_ratio_needs_s_heavy():
    with pytest.raises(ValueError):
        asy.goal_ratio(bip([1, 1], [1, 1]), 1, 2)


def test_goal_ratio_regular_digraph_neighbourhood():
    d = di([2, 2, 2, 3], [2, 2, 2, 2])
    assert asy.goal_ratio(d, 1, 2) == pytest.approx(1.0)


@st.composite
def near_regular_bip(draw):
    ell = draw(st.integers(6, 12))
    n = draw(st.integers(6, 12))
    k = draw(st.integers(2, 4))
    s = [k] * ell
    t0 = [0] * n
    for i in range(k * ell):
        t0[i % n] += 1
    i = draw(st.integers(0, ell - 1))
    j = draw(st.integers(0, ell - 1))
    s[i] += 1
    s[j] -= 1
    return bip(s, t0)


@settings(max_examples=60)
@given(near_regular_bip())
def test_correction_symmetric_under_part_swap(d):
    assert asy.correction_H(d) == pytest.approx(asy.correction_H(d.transpose()), rel=1e-12)


@settings(max_examples=60)
@given(near_regular_bip(), st.randoms(use_true_random=False))
def test_log_count_permutation_invariant(d, rnd):
    s, t = list(d.s), list(d.t)
    rnd.shuffle(s)
    rnd.shuffle(t)
    assert asy.estimate_log_count(bip(s, t)).log_value == pytest.approx(asy.estimate_log_count(d).log_value, rel=1e-12)


@settings(max_examples=60)
@given(near_regular_bip(), st.data())
def test_goal_ratio_reciprocity(d, data):
    ell = d.cls.ell
    c = data.draw(st.integers(1, d.cls.n))
    t = list(d.t)
    t[c - 1] -= 1
    if t[c - 1] < 0:
        return
    h = bip(d.s, t)
    a = data.draw(st.integers(1, ell))
    b = data.draw(st.integers(1, ell))
    if min(h[a], h[b]) < 1:
        return
    prod = asy.goal_ratio(h, a, b) * asy.goal_ratio(h, b, a)
    scale = asy.main_error_scale(h) + asy.main_error_scale(h)
    assert abs(prod - 1) <= 10 * scale

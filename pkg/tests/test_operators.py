import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degenum import operators as ops
from degenum.model import Balance, DegreeSequence


def bip(s, t):
    return DegreeSequence.bipartite(s, t)


def brute_ball(center, radius, diff):
    out = set()
    c = center.d
    for delta in itertools.product(range(-radius, radius + 1), repeat=len(c)):
        if sum(map(abs, delta)) > radius:
            continue
        v = tuple(x + y for x, y in zip(c, delta))
        if min(v) < 0:
            continue
        ell = center.cls.ell
        if sum(v[:ell]) - sum(v[ell:]) == diff:
            out.add(v)
    return out


@pytest.mark.parametrize("radius", [0, 1, 2, 3])
@pytest.mark.parametrize("heaviness,diff", [(Balance.BALANCED, 0), (Balance.S_HEAVY, 1)])
def test_ball_vectors_match_brute_force(radius, heaviness, diff):
    center = bip([1, 2], [2, 1])
    spec = ops.NeighborhoodSpec(center, radius, heaviness)
    assert set(spec.vectors()) == brute_ball(center, radius, diff)


def test_ball_radius_two_size():
    spec = ops.NeighborhoodSpec(bip([1, 1], [1, 1]), 2)
    assert len(spec.vectors()) == 13


def test_downset_contains_everything_below():
    center = bip([1, 2], [2, 1])
    spec = ops.NeighborhoodSpec(center, 0, Balance.BALANCED, ops.Mode.DOWNSET)
    want = {v for v in itertools.product(*(range(x + 1) for x in center.d)) if v[0] + v[1] == v[2] + v[3]}
    assert set(spec.vectors()) == want


def test_spec_validation():
    with pytest.raises(ValueError):
        ops.NeighborhoodSpec(bip([1], [1]), -1)
    with pytest.raises(ValueError):
        ops.NeighborhoodSpec(bip([1], [1]), 1, Balance.OTHER)


def test_exact_tables_values():
    t = ops.ExactTables(bip([1, 1], [1, 1]).cls)
    vec = (1, 1, 1, 1)
    assert t.p(1, 3, vec) == Fraction(1, 2)
    assert t.y(1, 3, 2, vec) == 0
    assert t.r(1, 2, (2, 1, 1, 1)) == 2


@pytest.mark.parametrize("center", [bip([2, 2, 2], [2, 2, 2]), DegreeSequence.digraph([2] * 4, [2] * 4)])
def test_exact_values_are_fixed_by_each_operator(center):
    gc = center.cls
    t = ops.ExactTables(gc)
    for vec in ops.NeighborhoodSpec(center, 1).vectors() + [center.d]:
        if not t.realisable(vec):
            continue
        for a, v in ops.s_pairs(gc):
            assert ops.apply_P(t, vec, a, v, gc) == t.p(a, v, vec)
        for a, v, b in ops.s_paths(gc):
            assert ops.apply_Y(t, vec, a, v, b, gc) == t.y(a, v, b, vec)
    for vec in ops.NeighborhoodSpec(center, 1, Balance.S_HEAVY).vectors():
        for a, b in ops.s_ratio_pairs(gc):
            if t.realisable(ops._lower(vec, b)):
                assert ops.apply_R(t, vec, a, b, gc) == t.r(a, b, vec)


def test_ratio_operator_singular_when_lowered_sequence_unrealisable():
    t = ops.ExactTables(bip([1, 1], [1, 1]).cls)
    with pytest.raises(ops.Singularity):
        ops.apply_R(t, (1, 0, 0, 0), 1, 2)


def test_operator_argument_checks():
    t = ops.ExactTables(bip([1, 1], [1, 1]).cls)
    with pytest.raises(ValueError):
        ops.apply_R(t, (1, 1, 1, 1), 1, 3)
    with pytest.raises(ValueError):
        ops.apply_Y(t, (1, 1, 1, 1), 1, 3, 1)


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_bad_is_zero_for_equal_vertices(data):
    center = bip([2, 2, 2], [2, 2, 2])
    t = ops.ExactTables(center.cls)
    vecs = [v for v in ops.NeighborhoodSpec(center, 2).vectors() if t.realisable(v)]
    vec = data.draw(st.sampled_from(vecs))
    a = data.draw(st.integers(1, 6))
    assert ops.bad_fn(t, a, a, vec) == 0


def test_prob_tables_lookup_rules():
    gc = bip([1, 1], [1, 1]).cls
    sup = ops.Support(gc)
    t = ops.ProbTables.constant([(1, 1, 1, 1)], [], gc, sup, Fraction(1, 2), Fraction(1, 4), exact=True)
    assert t.p(1, 3, (1, 1, 1, 1)) == Fraction(1, 2)
    assert t.p(1, 3, (3, 0, 1, 2)) == 0  # unrealisable: zero by convention
    with pytest.raises(ops.DomainError):
        t.p(1, 3, (1, 0, 1, 0))
    assert t.r(2, 2, (9, 9, 9, 9)) == 1


def _constant_start(center, exact_mode):
    spec = ops.NeighborhoodSpec(center, 0, Balance.BALANCED, ops.Mode.DOWNSET)
    bal, heavy = ops.family(spec)
    sup = ops.Support(center.cls)
    mu = center.stats.mu if exact_mode else float(center.stats.mu)
    init = ops.ProbTables.constant(bal, heavy, center.cls, sup, mu, mu * mu, exact=exact_mode)
    return spec, bal, heavy, sup, init


@pytest.mark.parametrize("center", [bip([2, 2, 2], [2, 2, 2]), bip([1, 2], [2, 1]), DegreeSequence.digraph([1, 1, 1], [1, 1, 1])])
def test_compiled_step_matches_reference_step(center):
    spec, bal, heavy, sup, init = _constant_start(center, True)
    ref = ops.compose_step(init, bal, heavy, 0, "hold")
    plan = ops.CompiledComposite(center.cls, sup, bal, heavy)
    p, y = plan.arrays_from(init, True)
    old_r = np.array([init.r_map.get(k, Fraction(1)) for k in plan.r_keys] + [Fraction(0), Fraction(1)], dtype=object)
    p2, y2, r2, _ = plan.step(p, y, True, "hold", 0, old_r)
    fast = plan.to_tables(p2, y2, r2, True)
    assert fast.p_map == ref.p_map
    assert fast.y_map == ref.y_map
    assert fast.r_map == ref.r_map


def test_iteration_converges_to_exact_on_small_downset():
    center = bip([2, 2, 2], [2, 2, 2])
    spec, *_, init = _constant_start(center, False)
    tables, rep = ops.iterate_fixpoint(init, spec, 1e-12, 50, on_singular="hold")
    assert rep.converged and rep.reason == "tolerance met"
    truth = ops.ExactTables(center.cls)
    for a, v in ops.s_pairs(center.cls):
        assert tables.p(a, v, center.d) == pytest.approx(float(truth.p(a, v, center.d)), abs=1e-10)


def test_exact_iteration_from_exact_values_is_stationary():
    center = bip([1, 2], [2, 1])
    spec = ops.NeighborhoodSpec(center, 0, Balance.BALANCED, ops.Mode.DOWNSET)
    bal, heavy = ops.family(spec)
    sup = ops.Support(center.cls)
    init = ops.ProbTables.from_source(ops.ExactTables(center.cls), bal, heavy, center.cls, sup, exact=True)
    _, rep = ops.iterate_fixpoint(init, spec, 1e-30, 3)
    assert rep.deltas[0] == 0.0 and rep.converged


def test_ball_family_runs_until_radius_exhausted():
    center = bip([2, 2, 2], [2, 2, 2])
    spec = ops.NeighborhoodSpec(center, 3)
    bal, heavy = ops.family(spec)
    sup = ops.Support(center.cls)
    init = ops.ProbTables.constant(bal, heavy, center.cls, sup, 2 / 3, 4 / 9)
    _, rep = ops.iterate_fixpoint(init, spec, 1e-14, 20, on_singular="hold")
    assert rep.reason in ("radius exhausted", "tolerance met")
    assert rep.domain_sizes == sorted(rep.domain_sizes, reverse=True)


def test_pi_membership_detects_violations():
    center = bip([1, 1, 1], [1, 1, 1])
    gc = center.cls
    spec = ops.NeighborhoodSpec(center, 0, Balance.BALANCED, ops.Mode.DOWNSET)
    bal, heavy = ops.family(spec)
    sup = ops.Support(gc)
    good = ops.ProbTables.constant(bal, heavy, gc, sup, 0.1, 0.001)
    assert ops.check_Pi_membership(good, 0.5, [center.d]).ok
    bad = ops.ProbTables.constant(bal, heavy, gc, sup, 0.9, 0.5)
    rep = ops.check_Pi_membership(bad, 0.5, [center.d])
    assert not rep.passed["a"] and "a" in rep.witness


def test_near_regular_shape():
    d = ops.near_regular(6, 3)
    assert d.s == (2, 4, 2, 4, 2, 4) and d.balance() is Balance.BALANCED
    assert ops.near_regular(5, 3).s == (2, 4, 2, 4, 3)
    assert ops.near_regular(5, 3, "digraph").balance() is Balance.BALANCED


def test_near_fixpoint_regular_edge_and_ratio_are_fixed():
    rep = ops.near_fixpoint_report(bip([4] * 20, [4] * 20))
    assert rep.dev_P < 1e-12 and rep.dev_R < 1e-12
    assert rep.flags == []

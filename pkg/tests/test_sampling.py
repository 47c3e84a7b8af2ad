import io
import json
import math

import numpy as np
import pytest
from scipy import stats

from degenum import sampling
from degenum.model import DegreeSequence, GraphClass


@pytest.mark.parametrize("model", list(sampling.Model))
def test_part_sums_equal_m(model):
    b = sampling.sample(model, 5, 5, 7, 500, seed=3)
    assert (b.s.sum(axis=1) == 7).all()
    assert (b.t.sum(axis=1) == 7).all()
    assert b.degrees.shape == (500, 10)


def test_unconditioned_models_respect_loops():
    b = sampling.sample("gdi", 3, 3, 6, 200, seed=1)
    # with m equal to all six allowable pairs every degree is n - 1
    assert (b.degrees == 2).all()


def test_conditioned_digraph_bounds():
    b = sampling.sample("vbm", 4, 4, 5, 2000, seed=1)
    assert b.degrees.max() <= 3


def test_same_seed_same_draws_and_streams_differ():
    a = sampling.sample("bm", 6, 7, 9, 300, seed=11)
    b = sampling.sample("bm", 6, 7, 9, 300, seed=11)
    c = sampling.sample("bm", 6, 7, 9, 300, seed=11, stream=1)
    assert np.array_equal(a.degrees, b.degrees)
    assert not np.array_equal(a.degrees, c.degrees)


def test_chunks_are_prefix_stable():
    small = sampling.sample("gbip", 4, 4, 5, sampling.CHUNK, seed=2)
    big = sampling.sample("gbip", 4, 4, 5, sampling.CHUNK + 10, seed=2)
    assert np.array_equal(big.degrees[: sampling.CHUNK], small.degrees)


def test_argument_checks():
    with pytest.raises(ValueError):
        sampling.sample("gbip", 2, 2, 5, 10)
    with pytest.raises(ValueError):
        sampling.sample("gdi", 2, 3, 1, 10)
    with pytest.raises(ValueError):
        sampling.sample("nope", 2, 2, 1, 10)


def test_jsonl_roundtrip_and_metadata():
    b = sampling.sample("gdi", 3, 3, 2, 4, seed=5)
    buf = io.StringIO()
    b.write_jsonl(buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 4
    obj = json.loads(lines[0])
    assert obj["class"] == "digraph" and "ell" not in obj and sum(obj["s"]) == 2
    meta = b.metadata()
    assert meta["seed"] == 5 and meta["rng"] == sampling.RNG_NAME and meta["model"] == "gdi"


def test_binom_model_probability_two_by_two():
    # B_m(2,2,2): each part picks 2 of 4 cells; Pr(s) = C(2,s1) C(2,s2) / C(4,2)
    d = DegreeSequence.bipartite([1, 1], [2, 0])
    assert sampling.binom_model_prob(d) == pytest.approx((4 / 6) * (1 / 6))


def test_support_table_sums_to_one():
    b = sampling.sample("bm", 2, 2, 2, 5000, seed=0)
    rows = sampling.support_table(b)
    assert sum(r["expected"] for r in rows) == pytest.approx(1.0)
    assert sum(r["observed"] for r in rows) == pytest.approx(1.0)


def test_marginal_law_is_hypergeometric():
    gc = GraphClass.digraph(10)
    law = sampling.marginal_law(gc, 30)
    assert law.pmf(3) == pytest.approx(stats.hypergeom(90, 9, 30).pmf(3))


def test_marginal_chisquare_small_sample():
    b = sampling.sample("gbip", 10, 10, 30, 20000, seed=4)
    res = sampling.marginal_chisquare(b, 1)
    assert res["p_value"] > 1e-4
    assert res["dof"] >= 1


def test_variance_targets_digraph_covariance_sign():
    gc = GraphClass.digraph(10)
    t = sampling.variance_targets("gdi", gc, 30)
    P, m, n = 90, 30, 10
    assert t["sigma_st"]["target"] == pytest.approx(-m * (n - 1) ** 2 * (P - m) / (P**2 * (P - 1)))
    assert sampling.variance_targets("vbm", gc, 30)["sigma_st"]["target"] == 0


def test_variance_report_requires_enough_draws():
    with pytest.raises(ValueError):
        sampling.variance_report("gbip", 5, 5, 5, 100)


def test_events_evaluate_vectorised():
    b = sampling.SampleBatch(
        sampling.Model.BM, GraphClass.bipartite(2, 2), 2, 0, np.array([[2, 0, 1, 1], [1, 1, 2, 0]])
    )
    assert sampling.Event("s[1] == 2").evaluate(b).tolist() == [True, False]
    assert sampling.Event("max_t >= 2 or false").evaluate(b).tolist() == [False, True]
    assert sampling.Event("0 <= sigma2_s < 1").evaluate(b).tolist() == [False, True]
    assert sampling.Event("not (abs(s[1] - s[2]) > 1)").evaluate(b).tolist() == [False, True]
    assert sampling.Event("true").evaluate(b).tolist() == [True, True]


@pytest.mark.parametrize(
    "text",
    ["__import__('os')", "s.sum()", "s[1:2]", "x > 1", "'a' == 'a'", "[1][0]", "lambda: 1", "s[i]"],
)
def test_events_reject_unsafe_or_unknown(text):
    with pytest.raises(sampling.EventError):
        sampling.Event(text)


def test_event_index_out_of_range():
    b = sampling.sample("gbip", 2, 2, 1, 5)
    with pytest.raises(sampling.EventError):
        sampling.Event("s[3] > 0").evaluate(b)


def test_sigma_st_undefined_for_bipartite():
    b = sampling.sample("gbip", 2, 2, 1, 5)
    with pytest.raises(sampling.EventError):
        sampling.Event("sigma_st > 0").evaluate(b)


def test_aqe_compare_shape_and_interval():
    rep = sampling.aqe_compare("gbip", "bm", 6, 6, 10, ["max_s <= 3", "s[1] > 99"], 4000, seed=1)
    row, empty = rep["events"]
    lo, hi = row["ci"]
    assert lo < row["ratio"] < hi
    assert math.log(hi / row["ratio"]) == pytest.approx(math.log(row["ratio"] / lo))
    assert empty["ratio"] is None and empty["ci"] is None
    with pytest.raises(ValueError):
        sampling.aqe_compare("gbip", "gdi", 3, 3, 2, ["true"], 10)


def test_rejection_sampler_conditions_on_sums():
    rows = sampling.rejection_sample(3, 3, 4, 300, seed=0)
    assert (rows[:, :3].sum(axis=1) == 4).all() and (rows[:, 3:].sum(axis=1) == 4).all()


def test_merge():
    a = sampling.sample("gbip", 3, 3, 2, 5, seed=0)
    b = sampling.sample("gbip", 3, 3, 2, 7, seed=1)
    assert sampling.merge([a, b]).count == 12
    with pytest.raises(ValueError):
        sampling.merge([a, sampling.sample("bm", 3, 3, 2, 5)])

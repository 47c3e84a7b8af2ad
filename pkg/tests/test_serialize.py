import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from degenum.model import DegreeSequence, GraphClass
from degenum.serialize import InputError, dumps, load_pairs, load_sequence, load_sequences_jsonl, seq_to_obj


def test_roundtrip_bipartite_and_digraph():
    for d in (DegreeSequence.bipartite([1, 2], [1, 1, 1]), DegreeSequence.digraph([1, 0, 1], [0, 1, 1])):
        assert load_sequence(json.dumps(seq_to_obj(d))) == d
    assert "ell" not in seq_to_obj(DegreeSequence.digraph([1], [1]))


@given(st.lists(st.integers(0, 9), min_size=1, max_size=6), st.lists(st.integers(0, 9), min_size=1, max_size=6))
def test_roundtrip_property(s, t):
    d = DegreeSequence.bipartite(s, t)
    assert load_sequence(dumps(seq_to_obj(d))) == d


def diag(text):
    with pytest.raises(InputError) as info:
        load_sequence(text, "seq.json")
    return info.value


def test_malformed_json_reports_line():
    err = diag('{"class": "bipartite",\n "ell": 2\n "n": 2}')
    assert err.line == 3 and "malformed JSON" in str(err)
    assert str(err).startswith("seq.json:3:")


def test_negative_entry_reports_field_path_and_line():
    err = diag('{"class": "bipartite",\n "ell": 2,\n "n": 2,\n "s": [1, -1],\n "t": [1, 1]}')
    assert err.path == "$.s[1]" and err.line == 4


def test_missing_field_and_unknown_field():
    assert "'ell' is a required property" in str(diag('{"class": "bipartite", "n": 1, "s": [1], "t": [1]}'))
    err = diag('{"class": "digraph", "n": 1, "s": [0], "t": [0],\n "extra": 1}')
    assert err.line is not None and "extra" in str(err)


def test_wrong_class_and_lengths():
    assert diag('{"class": "graph", "n": 1, "s": [0], "t": [0]}').path == "$.class"
    err = diag('{"class": "bipartite", "ell": 2, "n": 1,\n "s": [0],\n "t": [0]}')
    assert err.path == "$.s" and err.line == 2 and "expected 2 entries" in str(err)
    assert diag('{"class": "digraph", "ell": 2, "n": 1, "s": [0], "t": [0]}').path == "$.ell"


def test_pairs_both_forms():
    gc = GraphClass.bipartite(2, 2)
    assert load_pairs("[[1, 3], [4, 2]]", gc).pairs == frozenset({(1, 3), (2, 4)})
    F = load_pairs('{"pairs": [[1, 3], [1, 4]], "C": 3}', gc)
    assert F.C == 3 and len(F) == 2


def test_pairs_errors():
    gc = GraphClass.digraph(2)
    with pytest.raises(InputError) as info:
        load_pairs("[[1, 3]]", gc, "f.json")
    assert "not allowable" in str(info.value)
    with pytest.raises(InputError):
        load_pairs("[[1, 2, 3]]", gc)
    with pytest.raises(InputError):
        load_pairs('{"pairs": [[1, 4], [1, 4]], "C": 0}', gc)


def test_jsonl_reports_line_of_bad_record():
    text = '{"class":"digraph","n":1,"s":[0],"t":[0]}\n\n{"class":"digraph","n":1,"s":[0],"t":[-1]}\n'
    with pytest.raises(InputError) as info:
        load_sequences_jsonl(text, "b.jsonl")
    assert info.value.line == 3
    assert len(load_sequences_jsonl(text.splitlines()[0])) == 1


def test_dumps_handles_numbers():
    out = json.loads(dumps({"f": Fraction(1, 3), "i": np.int64(4), "x": np.float64(0.5), "a": np.arange(2)}))
    assert out == {"f": {"num": "1", "den": "3"}, "i": 4, "x": 0.5, "a": [0, 1]}

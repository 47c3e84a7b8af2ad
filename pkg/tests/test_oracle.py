import itertools
import math

import pytest

from degenum import oracle
from degenum.model import GraphClass


def naive_count(gc, vec, forbidden=(), forced=()):
    """Loop over every 0-1 matrix cell by cell; no shared tables."""
    cells = oracle.allowed_cells(gc)
    total = 0
    for bits in itertools.product((0, 1), repeat=len(cells)):
        on = {c for c, b in zip(cells, bits) if b}
        if on & set(forbidden) or not set(forced) <= on:
            continue
        rows = [sum((i, j) in on for j in range(gc.n)) for i in range(gc.ell)]
        cols = [sum((i, j) in on for i in range(gc.ell)) for j in range(gc.n)]
        total += rows + cols == list(vec)
    return total


@pytest.mark.parametrize("gc", [GraphClass.bipartite(2, 3), GraphClass.digraph(3)])
def test_table_matches_naive_loop(gc):
    for vec in oracle.sequences(gc, 2):
        assert oracle.brute_count(gc, vec) == naive_count(gc, vec)
    cells = oracle.allowed_cells(gc)
    F, K = (cells[0],), (cells[-1],)
    for vec in oracle.sequences(gc, 2):
        assert oracle.brute_count(gc, vec, F, K) == naive_count(gc, vec, F, K)


def test_seq_code_rejects_impossible_entries():
    gc = GraphClass.bipartite(2, 3)
    assert oracle.seq_code(gc, (4, 0, 0, 0, 0)) == -1
    assert oracle.seq_code(gc, (0, 0, 3, 0, 0)) == -1
    assert oracle.brute_count(gc, (4, 0, 2, 1, 1)) == 0


def test_digraph_excludes_diagonal():
    gc = GraphClass.digraph(3)
    assert len(oracle.allowed_cells(gc)) == 6
    assert (0, 0) not in oracle.allowed_cells(gc)


def total_configs(k, mf=2, mk=2):
    return sum(math.comb(k, f) * math.comb(k - f, g) for f in range(mf + 1) for g in range(mk + 1))


@pytest.mark.parametrize("gc", [GraphClass.bipartite(2, 2), GraphClass.bipartite(2, 3), GraphClass.digraph(3)])
def test_orbits_partition_all_configurations(gc):
    reps = oracle.config_orbits(gc)
    k = len(oracle.allowed_cells(gc))
    assert sum(size for _, size in reps) == total_configs(k)
    assert len({cfg for cfg, _ in reps}) == len(reps)


def test_orbit_counts_small_grid():
    # 2x2 grid: 63 configurations in 21 orbits
    reps = oracle.config_orbits(GraphClass.bipartite(2, 2))
    assert total_configs(4) == 63
    assert len(reps) == 21


def test_shapes_listing():
    sh = oracle.shapes(2)
    assert len(sh) == 6 and sum(g.is_digraph for g in sh) == 2


def test_grid_size_limit():
    with pytest.raises(ValueError):
        oracle.brute_counts(GraphClass.bipartite(5, 5))

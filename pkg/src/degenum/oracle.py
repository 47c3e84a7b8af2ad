"""Brute-force reference counts by enumerating every 0-1 matrix.

For a grid of at most 16 allowable cells every matrix is listed once; the
matrices compatible with a forbidden set and a forced set are then tallied by
their margins in one pass, which yields the count of every degree sequence
at once.

Forbidden/forced configurations are reduced to one representative per orbit
of the relabelling group (independent row and column permutations for
bipartite grids, simultaneous ones for digraphs, which keeps the excluded
diagonal in place).  Counts are invariant under relabelling, so checking one
representative per orbit against every sequence covers every configuration.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .model import GraphClass

Cell = tuple[int, int]
Config = tuple[tuple[Cell, ...], tuple[Cell, ...]]

MAX_CELLS = 20


def allowed_cells(gc: GraphClass) -> list[Cell]:
    excl = gc.excluded_cells()
    return [(i, j) for i in range(gc.ell) for j in range(gc.n) if (i, j) not in excl]


@lru_cache(maxsize=None)
def _grid(gc: GraphClass) -> tuple[np.ndarray, np.ndarray, list[Cell]]:
    """All matrices over the allowable cells as a bit table, plus margin codes."""
    cells = allowed_cells(gc)
    k = len(cells)
    if k > MAX_CELLS:
        raise ValueError(f"{k} cells is too many to enumerate")
    ids = np.arange(1 << k, dtype=np.int64)
    bits = ((ids[:, None] >> np.arange(k)) & 1).astype(np.int8)
    rows = np.zeros((len(ids), gc.ell), dtype=np.int64)
    cols = np.zeros((len(ids), gc.n), dtype=np.int64)
    for c, (i, j) in enumerate(cells):
        rows[:, i] += bits[:, c]
        cols[:, j] += bits[:, c]
    base = max(gc.ell, gc.n) + 1
    code = np.zeros(len(ids), dtype=np.int64)
    for col in np.hstack([rows, cols]).T:
        code = code * base + col
    return bits, code, cells


def seq_code(gc: GraphClass, vec) -> int:
    """Margin code of a degree vector; -1 when an entry exceeds its part size
    (no matrix has such a margin)."""
    base = max(gc.ell, gc.n) + 1
    code = 0
    for k, x in enumerate(vec):
        if x > (gc.n if k < gc.ell else gc.ell):
            return -1
        code = code * base + int(x)
    return code


def brute_counts(gc: GraphClass, forbidden: tuple[Cell, ...] = (), forced: tuple[Cell, ...] = ()) -> dict[int, int]:
    """Map from margin code to the number of matrices with those margins that
    avoid ``forbidden`` cells and contain ``forced`` cells (0-based)."""
    bits, code, cells = _grid(gc)
    at = {c: i for i, c in enumerate(cells)}
    keep = np.ones(len(code), dtype=bool)
    for c in forbidden:
        keep &= bits[:, at[c]] == 0
    for c in forced:
        keep &= bits[:, at[c]] == 1
    vals, counts = np.unique(code[keep], return_counts=True)
    return dict(zip(vals.tolist(), counts.tolist()))


def brute_count(gc: GraphClass, vec, forbidden=(), forced=()) -> int:
    """Count for a single sequence by direct enumeration."""
    return brute_counts(gc, tuple(forbidden), tuple(forced)).get(seq_code(gc, vec), 0)


def _perms(gc: GraphClass):
    if gc.is_digraph:
        for p in itertools.permutations(range(gc.n)):
            yield p, p
    else:
        for p in itertools.permutations(range(gc.ell)):
            for q in itertools.permutations(range(gc.n)):
                yield p, q


def _image(cfg: Config, p, q) -> Config:
    F, K = cfg
    return (
        tuple(sorted((p[i], q[j]) for i, j in F)),
        tuple(sorted((p[i], q[j]) for i, j in K)),
    )


def config_orbits(gc: GraphClass, max_forbidden: int = 2, max_forced: int = 2) -> list[tuple[Config, int]]:
    """One representative per orbit of (forbidden, forced) cell sets, with the
    orbit size."""
    cells = allowed_cells(gc)
    perms = list(_perms(gc))
    seen: set[Config] = set()
    reps = []
    for nf in range(max_forbidden + 1):
        for F in itertools.combinations(cells, nf):
            rest = [c for c in cells if c not in F]
            for nk in range(max_forced + 1):
                for K in itertools.combinations(rest, nk):
                    cfg = (F, K)
                    if cfg in seen:
                        continue
                    orbit = {_image(cfg, p, q) for p, q in perms}
                    seen |= orbit
                    reps.append((cfg, len(orbit)))
    return reps


def sequences(gc: GraphClass, max_entry: int = 3):
    """Every degree vector of the class with entries in [0, max_entry]."""
    return itertools.product(range(max_entry + 1), repeat=gc.size)


def shapes(max_side: int = 4) -> list[GraphClass]:
    """Bipartite grids up to max_side x max_side and digraphs up to max_side."""
    out = [GraphClass.bipartite(a, b) for a in range(1, max_side + 1) for b in range(1, max_side + 1)]
    out += [GraphClass.digraph(k) for k in range(1, max_side + 1)]
    return out

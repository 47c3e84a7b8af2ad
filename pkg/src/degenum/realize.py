"""Realisability of degree sequences with forbidden cells.

The exact test runs an augmenting-path flow on the S x T cell grid (unit
capacities), which decides the quantified transportation condition without
enumerating subsets.  The sufficient test applies two closed inequality
branches and can only say "guaranteed" or "unknown".
"""

from __future__ import annotations

import enum
import math
from collections import Counter, deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .model import DegreeSequence, GraphClass


@dataclass(frozen=True)
class ForbiddenSet:
    """Allowable pairs excluded on top of the class's own exclusions.

    Pairs are stored as (a, v) with a in S and v in T.  ``C`` bounds how many
    pairs may touch any single vertex.
    """

    cls: GraphClass
    pairs: frozenset[tuple[int, int]] = frozenset()
    C: int = 1

    def __post_init__(self):
        norm = set()
        for x, y in self.pairs:
            if not self.cls.allowable(x, y):
                raise ValueError(f"pair ({x}, {y}) is not allowable")
            norm.add((x, y) if self.cls.in_S(x) else (y, x))
        object.__setattr__(self, "pairs", frozenset(norm))
        if self.C < 1:
            raise ValueError("C must be positive")
        if self.multiplicity() > self.C:
            raise ValueError(
                f"a vertex lies in {self.multiplicity()} forbidden pairs, more than C={self.C}"
            )

    @classmethod
    def of(cls, gc: GraphClass, pairs: Iterable[tuple[int, int]] = (), C: int | None = None) -> "ForbiddenSet":
        """Build a set; C defaults to the smallest valid bound (at least 1)."""
        pairs = frozenset((int(a), int(b)) for a, b in pairs)
        if C is None:
            counts = Counter(x for p in pairs for x in p)
            C = max([1, *counts.values()])
        return cls(gc, pairs, C)

    @classmethod
    def empty(cls, gc: GraphClass) -> "ForbiddenSet":
        return cls(gc)

    def multiplicity(self) -> int:
        counts = Counter(x for p in self.pairs for x in p)
        return max(counts.values(), default=0)

    @cached_property
    def _cells(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.cls.cell(a, v) for a, v in self.pairs)

    def cells(self) -> frozenset[tuple[int, int]]:
        return self._cells

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(sorted(self.pairs))


def _as_forbidden(d: DegreeSequence, F) -> ForbiddenSet:
    if F is None:
        return ForbiddenSet.empty(d.cls)
    if isinstance(F, ForbiddenSet):
        if F.cls != d.cls:
            raise ValueError("forbidden set belongs to a different graph class")
        return F
    return ForbiddenSet.of(d.cls, F)


def max_fill(s: tuple[int, ...], t: tuple[int, ...], blocked: frozenset[tuple[int, int]]) -> int:
    """Largest number of ones in a 0-1 matrix with row sums <= s, column sums <= t,
    and zeros on ``blocked`` cells (0-based)."""
    ell, n = len(s), len(t)
    allowed = [[(i, j) not in blocked for j in range(n)] for i in range(ell)]
    x = [[False] * n for _ in range(ell)]
    row_need = list(s)
    col_room = list(t)
    # greedy start, largest rows first into roomiest columns
    for i in sorted(range(ell), key=lambda i: -s[i]):
        for j in sorted(range(n), key=lambda j: -col_room[j]):
            if row_need[i] == 0:
                break
            if allowed[i][j] and col_room[j] > 0:
                x[i][j] = True
                row_need[i] -= 1
                col_room[j] -= 1
    while True:
        # BFS over alternating paths: row -(free cell)-> column -(used cell)-> row
        parent_col: dict[int, int] = {}
        parent_row: dict[int, int] = {}
        queue = deque(i for i in range(ell) if row_need[i] > 0)
        seen_rows = set(queue)
        end = None
        while queue and end is None:
            i = queue.popleft()
            for j in range(n):
                if j in parent_col or not allowed[i][j] or x[i][j]:
                    continue
                parent_col[j] = i
                if col_room[j] > 0:
                    end = j
                    break
                for k in range(ell):
                    if x[k][j] and k not in seen_rows:
                        seen_rows.add(k)
                        parent_row[k] = j
                        queue.append(k)
        if end is None:
            break
        j = end
        col_room[j] -= 1
        while True:
            i = parent_col[j]
            x[i][j] = True
            if i not in parent_row:
                row_need[i] -= 1
                break
            j = parent_row[i]
            x[i][j] = False
    return sum(s) - sum(row_need)


def feasibility(d: DegreeSequence, F=None) -> tuple[bool, str]:
    """Exact realisability with a human-readable reason."""
    F = _as_forbidden(d, F)
    M1s, M1t = sum(d.s), sum(d.t)
    if M1s != M1t:
        return False, f"unbalanced: sum(s)={M1s} != sum(t)={M1t}"
    if not d.entrywise_feasible:
        return False, "a degree exceeds the number of allowable partners"
    blocked = d.cls.excluded_cells() | F.cells()
    flow = max_fill(d.s, d.t, blocked)
    if flow == M1s:
        return True, f"max flow {flow} equals total degree {M1s}"
    return False, f"max flow {flow} is below total degree {M1s}"


def feasible_exact(d: DegreeSequence, F=None) -> bool:
    return feasibility(d, F)[0]


class Sufficiency(str, enum.Enum):
    GUARANTEED = "guaranteed"
    UNKNOWN = "unknown"


def sufficient_branches(d: DegreeSequence, F=None) -> dict[str, bool]:
    """Truth of each closed inequality branch of the sufficient test."""
    F = _as_forbidden(d, F)
    if min(d.d) < 1:
        raise ValueError("sufficient test requires every degree to be at least 1")
    gc = d.cls
    m = sum(d.s)
    dS, dT = max(d.s), max(d.t)
    # integer-exact forms of  m <= ln/9,  dS <= 2m/ell,  dT <= 2m/n
    sparse = 9 * m <= gc.ell * gc.n and dS * gc.ell <= 2 * m and dT * gc.n <= 2 * m
    # in a digraph the loop cells are forbidden too and count toward C
    union = Counter(x for p in F.pairs for x in p)
    if gc.is_digraph:
        for a in gc.S:
            union[a] += 1
            union[gc.mate(a)] += 1
    C = max(F.C, max(union.values(), default=0))
    root = math.sqrt(m) / 2 - C
    spread = dS <= root and dT <= root
    return {"a": sparse, "b": spread}


def feasible_sufficient(d: DegreeSequence, F=None) -> Sufficiency:
    branches = sufficient_branches(d, F)
    return Sufficiency.GUARANTEED if any(branches.values()) else Sufficiency.UNKNOWN

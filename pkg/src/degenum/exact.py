"""Exact counts, probabilities and ratios.

Realisations are 0-1 matrices on the S x T grid with prescribed margins and a
set of excluded cells.  The counter fills one column at a time.  Rows that
share a residual degree and the same pattern of excluded cells ahead of the
current column are interchangeable, so a column is filled by choosing how
many rows of each such group receive a one (a product of binomials).  States
are keyed by the remaining column sums and the sorted multiset of row states,
with excluded columns stored as offsets from the current column; the key is
therefore independent of absolute position and is shared between calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .model import DegreeSequence, GraphClass
from .realize import ForbiddenSet, _as_forbidden

Row = tuple[int, tuple[int, ...]]


class TooLarge(RuntimeError):
    """A resource cap was hit."""

    def __init__(self, what: str, cap: int):
        super().__init__(f"{what} exceeds cap {cap}")
        self.what = what
        self.cap = cap


class UndefinedProbability(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class Limits:
    max_memo: int = 10**7
    max_ie_terms: int = 2**20


class MarginCounter:
    """Column-by-column margin counter with a cache shared across calls."""

    def __init__(self, limits: Limits | None = None):
        self.limits = limits or Limits()
        self.memo: dict[tuple[tuple[int, ...], tuple[Row, ...]], int] = {}
        self._fresh = 0

    def clear(self) -> None:
        self.memo.clear()

    def count_cells(
        self,
        s: tuple[int, ...],
        t: tuple[int, ...],
        excluded: Iterable[tuple[int, int]] = (),
    ) -> int:
        """Number of 0-1 matrices with row sums s, column sums t and zeros on
        the excluded 0-based cells."""
        excluded = frozenset(excluded)
        if 2 ** len(excluded) > self.limits.max_ie_terms:
            raise TooLarge(f"2^{len(excluded)} excluded-cell patterns", self.limits.max_ie_terms)
        if sum(s) != sum(t) or min(s + t, default=0) < 0:
            return 0
        if len(self.memo) > self.limits.max_memo:
            self.memo.clear()
        offsets: dict[int, list[int]] = {i: [] for i in range(len(s))}
        for i, j in excluded:
            offsets[i].append(j)
        rows = tuple(sorted((s[i], tuple(sorted(offsets[i]))) for i in range(len(s)) if s[i] > 0))
        self._fresh = 0
        return self._rec(tuple(t), rows)

    def _rec(self, t: tuple[int, ...], rows: tuple[Row, ...]) -> int:
        if not t:
            return 1 if not rows else 0
        key = (t, rows)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        ncols = len(t)
        for r, off in rows:
            if r > ncols - len(off):
                self.memo[key] = 0
                return 0
        c = t[0]
        groups: dict[Row, int] = {}
        for row in rows:
            groups[row] = groups.get(row, 0) + 1
        items = list(groups.items())
        # rows able to take a one in this column, by group
        caps = [k if (not off or off[0] != 0) else 0 for (_, off), k in items]
        suffix = [0] * (len(items) + 1)
        for g in range(len(items) - 1, -1, -1):
            suffix[g] = suffix[g + 1] + caps[g]
        rest = t[1:]
        total = 0

        def shift(off: tuple[int, ...]) -> tuple[int, ...]:
            return tuple(o - 1 for o in off if o != 0)

        def go(g: int, need: int, ways: int, acc: list[Row]) -> None:
            nonlocal total
            if need > suffix[g]:
                return
            if g == len(items):
                nxt = tuple(sorted(row for row in acc if row[0] > 0))
                total += ways * self._rec(rest, nxt)
                return
            (r, off), k = items[g]
            moved = shift(off)
            for x in range(min(caps[g], need) + 1):
                go(
                    g + 1,
                    need - x,
                    ways * math.comb(k, x),
                    acc + [(r - 1, moved)] * x + [(r, moved)] * (k - x),
                )

        go(0, c, 1, [])
        self.memo[key] = total
        self._fresh += 1
        if self._fresh > self.limits.max_memo:
            raise TooLarge("memo entries", self.limits.max_memo)
        return total


_default = MarginCounter()


def default_counter() -> MarginCounter:
    return _default


def set_limits(limits: Limits) -> None:
    _default.limits = limits


def _cells(gc: GraphClass, pairs: Iterable[tuple[int, int]]) -> frozenset[tuple[int, int]]:
    return frozenset(gc.cell(a, v) for a, v in pairs)


def count(
    d: DegreeSequence,
    forbidden: ForbiddenSet | Iterable[tuple[int, int]] | None = None,
    forced: Iterable[tuple[int, int]] = (),
    counter: MarginCounter | None = None,
) -> int:
    """Number of graphs realising d over the allowable pairs, avoiding
    ``forbidden`` and containing every pair in ``forced``."""
    counter = counter or _default
    if sum(d.s) != sum(d.t):
        return 0
    gc = d.cls
    F = _as_forbidden(d, forbidden)
    K = _cells(gc, forced)
    Fc = F.cells()
    if K & Fc:
        raise ValueError("a pair is both forced and forbidden")
    s, t = list(d.s), list(d.t)
    for i, j in K:
        s[i] -= 1
        t[j] -= 1
    if min(s + t, default=0) < 0:
        return 0
    return counter.count_cells(tuple(s), tuple(t), gc.excluded_cells() | Fc | K)


def count_with(d: DegreeSequence, forced=(), forbidden=(), counter: MarginCounter | None = None) -> int:
    return count(d, ForbiddenSet.of(d.cls, forbidden), forced, counter)


def _need_pair(gc: GraphClass, a: int, v: int) -> None:
    if not gc.allowable(a, v):
        raise ValueError(f"pair ({a}, {v}) is not allowable")


def edge_prob_exact(d: DegreeSequence, a: int, v: int, counter: MarginCounter | None = None) -> Fraction:
    """Exact probability that the pair {a, v} is an edge of a uniform realisation."""
    _need_pair(d.cls, a, v)
    total = count(d, counter=counter)
    if total == 0:
        raise UndefinedProbability(f"no realisation of {d.s}, {d.t}")
    return Fraction(count(d, forced=[(a, v)], counter=counter), total)


def path_prob_exact(d: DegreeSequence, a: int, v: int, b: int, counter: MarginCounter | None = None) -> Fraction:
    """Exact probability that both {a, v} and {b, v} are edges."""
    if a == b:
        raise ValueError("path endpoints must differ")
    _need_pair(d.cls, a, v)
    _need_pair(d.cls, b, v)
    total = count(d, counter=counter)
    if total == 0:
        raise UndefinedProbability(f"no realisation of {d.s}, {d.t}")
    return Fraction(count(d, forced=[(a, v), (b, v)], counter=counter), total)


def ratio_exact(d: DegreeSequence, a: int, b: int, counter: MarginCounter | None = None) -> Fraction:
    """N(d - e_a) / N(d - e_b) for a, b in the same part."""
    gc = d.cls
    gc.check_vertex(a)
    gc.check_vertex(b)
    if gc.in_S(a) != gc.in_S(b):
        raise ValueError("ratio needs two vertices of the same part")
    if a == b:
        return Fraction(1)
    da, db = d.minus(a), d.minus(b)
    den = count(db, counter=counter) if db is not None else 0
    if den == 0:
        raise UndefinedProbability(f"no realisation of the sequence lowered at vertex {b}")
    num = count(da, counter=counter) if da is not None else 0
    return Fraction(num, den)


def switching_bound(d: DegreeSequence) -> Fraction | None:
    """Upper bound on every edge probability from a simple switching; None when vacuous."""
    M1 = sum(d.s)
    if M1 == 0:
        return None
    dS, dT = max(d.s), max(d.t)
    denom = 1 - Fraction(2 * (dS + 1) * (dT + 1), M1)
    if denom <= 0:
        return None
    return Fraction(dS * dT) / (M1 * denom)


# identity checks used by the verification suites


def removal_identity(d: DegreeSequence, a: int, v: int, F=None, counter: MarginCounter | None = None) -> tuple[int, int]:
    """Both sides of N_av(d) = N(d - e_a - e_v) - N_av(d - e_a - e_v).

    ``F`` may forbid further pairs; both sides are then taken over the same
    allowable set.  Returns (lhs, rhs).
    """
    F = _as_forbidden(d, F)
    lhs = count(d, F, [(a, v)], counter)
    low = d.minus(a, v)
    if low is None:
        return lhs, 0
    rhs = count(low, F, (), counter) - count(low, F, [(a, v)], counter)
    return lhs, rhs


def handshake_sum(d: DegreeSequence, a: int, counter: MarginCounter | None = None) -> Fraction:
    """Sum of exact edge probabilities at vertex a (equals d_a)."""
    return sum((edge_prob_exact(d, a, v, counter) for v in d.cls.neighbors(a)), Fraction(0))

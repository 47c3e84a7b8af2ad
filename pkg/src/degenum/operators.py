"""Recursion operators on probability and ratio tables.

Tables are read through three lookups, ``p(a, v, d)``, ``y(a, v, b, d)`` and
``r(a, b, d)``, plus realisability predicates that say where a value is known
to vanish.  Three kinds of tables are provided: exact tables filled from the
counting engine, stored tables (``ProbTables``) used by the iteration, and
closed-form tables built from the parameterised estimates.

Zero conventions.  At desk scale many neighbouring sequences are not
realisable, so each operator first consults the realisability predicates:

* the edge operator returns 0 when no realisation of d contains {a, v};
* the path operator returns 0 when no realisation contains both edges;
* the ratio operator returns 0 when d - e_a is unrealisable and is undefined
  when d - e_b is unrealisable.

These predicates come from the flow test, never from counts, so they add
structural knowledge only.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Iterator

import numpy as np

from . import asymptotic as asy
from . import exact
from .model import Balance, DegreeSequence, GraphClass
from .realize import max_fill

GUARD = 1e-12

Key = tuple[int, ...]


class Singularity(ArithmeticError):
    def __init__(self, message: str, key=None, iteration: int | None = None):
        super().__init__(message)
        self.key = key
        self.iteration = iteration


class DomainError(KeyError):
    """A table was asked for an entry it does not hold."""


# realisability predicates ---------------------------------------------------


class Support:
    """Cached flow-based realisability predicates for one graph class."""

    def __init__(self, gc: GraphClass):
        self.gc = gc
        self._base = gc.excluded_cells()
        self._fill = lru_cache(maxsize=None)(self._fill_raw)

    def _fill_raw(self, vec: Key, blocked: frozenset) -> bool:
        if min(vec) < 0:
            return False
        s, t = vec[: self.gc.ell], vec[self.gc.ell:]
        if sum(s) != sum(t):
            return False
        return max_fill(s, t, self._base | blocked) == sum(s)

    def realisable(self, vec: Key) -> bool:
        return self._fill(vec, frozenset())

    def _lower(self, vec: Key, *xs: int) -> Key:
        out = list(vec)
        for x in xs:
            out[x - 1] -= 1
        return tuple(out)

    def edge_possible(self, a: int, v: int, vec: Key) -> bool:
        """Some realisation of vec contains {a, v}."""
        low = self._lower(vec, a, v)
        return self._fill(low, frozenset([self.gc.cell(a, v)]))

    def path_possible(self, a: int, v: int, b: int, vec: Key) -> bool:
        """Some realisation of vec contains {a, v} and {b, v}."""
        low = self._lower(vec, a, b, v, v)
        return self._fill(low, frozenset([self.gc.cell(a, v), self.gc.cell(b, v)]))


class PositiveSupport:
    """Predicates for the large-degree regime where every value is positive."""

    def realisable(self, vec: Key) -> bool:
        return min(vec) >= 0

    def edge_possible(self, a: int, v: int, vec: Key) -> bool:
        return vec[a - 1] > 0 and vec[v - 1] > 0

    def path_possible(self, a: int, v: int, b: int, vec: Key) -> bool:
        return vec[a - 1] > 0 and vec[b - 1] > 0 and vec[v - 1] > 1


# neighbourhoods --------------------------------------------------------------


class Mode(str, enum.Enum):
    BALL = "ball"
    DOWNSET = "downset"


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Sequences near ``center`` with a given balance state.

    ``ball`` mode takes nonnegative vectors within L1 distance ``radius``;
    ``downset`` mode takes every vector below the center entrywise, a family
    that is closed under all lookups the operators perform.
    """

    center: DegreeSequence
    radius: int = 2
    heaviness: Balance = Balance.BALANCED
    mode: Mode = Mode.BALL

    def __post_init__(self):
        object.__setattr__(self, "heaviness", Balance(self.heaviness))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.heaviness not in (Balance.BALANCED, Balance.S_HEAVY, Balance.T_HEAVY):
            raise ValueError("heaviness must be balanced, S_heavy or T_heavy")
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    def _diff(self) -> int:
        return {Balance.BALANCED: 0, Balance.S_HEAVY: 1, Balance.T_HEAVY: -1}[self.heaviness]

    def with_heaviness(self, heaviness: Balance) -> "NeighborhoodSpec":
        return NeighborhoodSpec(self.center, self.radius, heaviness, self.mode)

    def contains(self, d: DegreeSequence) -> bool:
        if d.cls != self.center.cls or sum(d.s) - sum(d.t) != self._diff():
            return False
        if self.mode is Mode.DOWNSET:
            return all(x <= c for x, c in zip(d.d, self.center.d))
        return sum(abs(x - c) for x, c in zip(d.d, self.center.d)) <= self.radius

    def vectors(self) -> list[Key]:
        c = self.center.d
        ell = self.center.cls.ell
        want = self._diff()
        out = []
        if self.mode is Mode.DOWNSET:
            for vec in itertools.product(*(range(x + 1) for x in c)):
                if sum(vec[:ell]) - sum(vec[ell:]) == want:
                    out.append(vec)
            return out
        for vec in _ball(c, self.radius):
            if sum(vec[:ell]) - sum(vec[ell:]) == want:
                out.append(vec)
        return sorted(out)

    def sequences(self) -> list[DegreeSequence]:
        gc = self.center.cls
        return [DegreeSequence.from_vector(gc, v) for v in self.vectors()]


def _ball(center: Key, radius: int) -> Iterator[Key]:
    def rec(i: int, left: int, acc: list[int]):
        if i == len(center):
            yield tuple(acc)
            return
        for delta in range(-min(left, center[i]), left + 1):
            acc.append(center[i] + delta)
            yield from rec(i + 1, left - abs(delta), acc)
            acc.pop()

    yield from rec(0, radius, [])


# table views -------------------------------------------------------------------


class ExactTables:
    """Exact rational P, Y and R from the counting engine (0 where undefined)."""

    exact = True

    def __init__(self, gc: GraphClass, counter: exact.MarginCounter | None = None):
        self.gc = gc
        self.counter = counter or exact.default_counter()
        self._n = lru_cache(maxsize=None)(self._count)

    def _count(self, vec: Key, forced: tuple = ()) -> int:
        if min(vec) < 0:
            return 0
        return exact.count(DegreeSequence.from_vector(self.gc, vec), forced=forced, counter=self.counter)

    def realisable(self, vec: Key) -> bool:
        return self._n(vec) > 0

    def edge_possible(self, a, v, vec) -> bool:
        return self._n(vec, ((a, v),)) > 0

    def path_possible(self, a, v, b, vec) -> bool:
        return self._n(vec, ((a, v), (b, v))) > 0

    def p(self, a: int, v: int, vec: Key) -> Fraction:
        total = self._n(vec)
        return Fraction(self._n(vec, ((a, v),)), total) if total else Fraction(0)

    def y(self, a: int, v: int, b: int, vec: Key) -> Fraction:
        total = self._n(vec)
        return Fraction(self._n(vec, ((a, v), (b, v))), total) if total else Fraction(0)

    def r(self, a: int, b: int, vec: Key) -> Fraction:
        if a == b:
            return Fraction(1)
        den = self._n(_lower(vec, b))
        if den == 0:
            raise Singularity("ratio undefined: lowered sequence has no realisation", (a, b, vec))
        return Fraction(self._n(_lower(vec, a)), den)


def _lower(vec: Key, *xs: int) -> Key:
    out = list(vec)
    for x in xs:
        out[x - 1] -= 1
    return tuple(out)


@dataclass
class ProbTables:
    """Stored tables over a family of sequences.

    Lookups for a sequence that the support marks unrealisable return 0;
    any other missing entry raises ``DomainError``.
    """

    gc: GraphClass
    support: object
    exact: bool = False
    p_map: dict = field(default_factory=dict)
    y_map: dict = field(default_factory=dict)
    r_map: dict = field(default_factory=dict)

    def realisable(self, vec):
        return self.support.realisable(vec)

    def edge_possible(self, a, v, vec):
        return self.support.edge_possible(a, v, vec)

    def path_possible(self, a, v, b, vec):
        return self.support.path_possible(a, v, b, vec)

    def _get(self, table: dict, key, vec: Key):
        hit = table.get(key)
        if hit is not None:
            return hit
        if not self.support.realisable(vec):
            return Fraction(0) if self.exact else 0.0
        raise DomainError(f"missing table entry {key}")

    def p(self, a, v, vec):
        return self._get(self.p_map, (a, v, vec), vec)

    def y(self, a, v, b, vec):
        return self._get(self.y_map, (a, v, b, vec), vec)

    def r(self, a, b, vec):
        if a == b:
            return Fraction(1) if self.exact else 1.0
        key = (a, b, vec)
        hit = self.r_map.get(key)
        if hit is not None:
            return hit
        if not self.support.realisable(_lower(vec, a)):
            return Fraction(0) if self.exact else 0.0
        raise DomainError(f"missing table entry {key}")

    @classmethod
    def constant(
        cls,
        balanced: Iterable[Key],
        heavy: Iterable[Key],
        gc: GraphClass,
        support,
        p0,
        y0,
        r0=1,
        exact: bool = False,
    ) -> "ProbTables":
        """Constant tables on the S side of the given sequences.

        Each of ``p0``, ``y0``, ``r0`` is a number or a function of the
        sequence vector (so p can follow the density of each sequence).
        """
        conv = Fraction if exact else float
        t = cls(gc, support, exact)

        def val(x, vec):
            return conv(x(vec) if callable(x) else x)

        for vec in balanced:
            pv, yv = val(p0, vec), val(y0, vec)
            for a, v in s_pairs(gc):
                t.p_map[(a, v, vec)] = pv
            for a, v, b in s_paths(gc):
                t.y_map[(a, v, b, vec)] = yv
        for vec in heavy:
            rv = val(r0, vec)
            for a, b in s_ratio_pairs(gc):
                t.r_map[(a, b, vec)] = rv
        return t

    @classmethod
    def from_source(cls, source, balanced, heavy, gc, support, exact: bool = True) -> "ProbTables":
        """Copy S-side entries from another table view (skipping undefined ratios)."""
        t = cls(gc, support, exact)
        for vec in balanced:
            if not support.realisable(vec):
                continue
            for a, v in s_pairs(gc):
                t.p_map[(a, v, vec)] = source.p(a, v, vec)
            for a, v, b in s_paths(gc):
                t.y_map[(a, v, b, vec)] = source.y(a, v, b, vec)
        for vec in heavy:
            for a, b in s_ratio_pairs(gc):
                if support.realisable(_lower(vec, b)):
                    t.r_map[(a, b, vec)] = source.r(a, b, vec)
        return t


class ClosedFormTables:
    """Parameterised estimates as tables (S-side keys; T side by transposition)."""

    exact = False

    def __init__(self, gc: GraphClass):
        self.gc = gc
        self.support = PositiveSupport()

    def realisable(self, vec):
        return self.support.realisable(vec)

    def edge_possible(self, a, v, vec):
        return self.support.edge_possible(a, v, vec)

    def path_possible(self, a, v, b, vec):
        return self.support.path_possible(a, v, b, vec)

    def _seq(self, vec):
        return DegreeSequence.from_vector(self.gc, vec)

    def p(self, a, v, vec):
        return asy.pi_value(self._seq(vec), a, v)

    def y(self, a, v, b, vec):
        return asy.ystar_value(self._seq(vec), a, v, b)

    def r(self, a, b, vec):
        return asy.rho_value(self._seq(vec), a, b)


class _Mixed:
    """p from one table, y and r from another; predicates from the first."""

    def __init__(self, p_src, other):
        self.p_src = p_src
        self.other = other
        self.exact = getattr(p_src, "exact", False)

    def realisable(self, vec):
        return self.p_src.realisable(vec)

    def edge_possible(self, a, v, vec):
        return self.p_src.edge_possible(a, v, vec)

    def path_possible(self, a, v, b, vec):
        return self.p_src.path_possible(a, v, b, vec)

    def p(self, a, v, vec):
        return self.p_src.p(a, v, vec)

    def y(self, a, v, b, vec):
        return self.other.y(a, v, b, vec)

    def r(self, a, b, vec):
        return self.other.r(a, b, vec)


def s_pairs(gc: GraphClass) -> list[tuple[int, int]]:
    return [(a, v) for a in gc.S for v in gc.neighbors(a)]


def s_paths(gc: GraphClass) -> list[tuple[int, int, int]]:
    return [(a, v, b) for a in gc.S for b in gc.S if b != a for v in gc.neighbors(a) if gc.allowable(b, v)]


def s_ratio_pairs(gc: GraphClass) -> list[tuple[int, int]]:
    return [(a, b) for a in gc.S for b in gc.S if a != b]


# operators ------------------------------------------------------------------


def _vec(d) -> Key:
    return d.d if isinstance(d, DegreeSequence) else tuple(d)


def _zero_like(tables):
    return Fraction(0) if getattr(tables, "exact", False) else 0.0


def _one_like(tables):
    return Fraction(1) if getattr(tables, "exact", False) else 1.0


def bad_fn(tables, a: int, b: int, d, gc: GraphClass | None = None):
    """Share of a's degree whose partners also neighbour b (pairs and 2-paths)."""
    vec = _vec(d)
    gc = gc or tables.gc
    if a == b or vec[a - 1] == 0:
        return 0
    na, nb = gc.neighbors(a), set(gc.neighbors(b))
    total = 0
    for v in na:
        total = total + (tables.y(a, v, b, vec) if v in nb else tables.p(a, v, vec))
    return total / vec[a - 1]


def apply_R(tables, d, a: int, b: int, gc: GraphClass | None = None, bad: Callable | None = None):
    gc = gc or tables.gc
    vec = _vec(d)
    if gc.in_S(a) != gc.in_S(b):
        raise ValueError("ratio operator needs two vertices of the same part")
    if a == b:
        return _one_like(tables)
    if not tables.realisable(_lower(vec, b)):
        raise Singularity("ratio undefined: d - e_b is unrealisable", (a, b, vec))
    if not tables.realisable(_lower(vec, a)):
        return _zero_like(tables)
    bad = bad or (lambda i, j, w: bad_fn(tables, i, j, w, gc))
    num = 1 - bad(a, b, _lower(vec, b))
    den = 1 - bad(b, a, _lower(vec, a))
    if abs(den) < GUARD:
        raise Singularity("ratio operator denominator vanishes", (a, b, vec))
    scale = Fraction(vec[a - 1], vec[b - 1]) if getattr(tables, "exact", False) else vec[a - 1] / vec[b - 1]
    return scale * num / den


def apply_P(tables, d, a: int, v: int, gc: GraphClass | None = None):
    gc = gc or tables.gc
    vec = _vec(d)
    if not gc.allowable(a, v):
        raise ValueError(f"pair ({a}, {v}) is not allowable")
    if not tables.edge_possible(a, v, vec):
        return _zero_like(tables)
    own = 1 - tables.p(a, v, _lower(vec, a, v))
    if abs(own) < GUARD:
        raise Singularity("edge operator denominator vanishes", (a, v, vec))
    top = _lower(vec, v)
    total = 0
    for b in gc.neighbors(v):
        if not tables.realisable(_lower(top, b)):
            continue
        total = total + tables.r(b, a, top) * (1 - tables.p(b, v, _lower(vec, b, v)))
    total = total / own
    if abs(total) < GUARD:
        raise Singularity("edge operator sum vanishes", (a, v, vec))
    return vec[v - 1] / total


def apply_Y(tables, d, a: int, v: int, b: int, gc: GraphClass | None = None):
    gc = gc or tables.gc
    vec = _vec(d)
    if a == b or not gc.allowable(a, v) or not gc.allowable(b, v):
        raise ValueError("(a, v, b) must be a path of allowable pairs with a != b")
    if not tables.path_possible(a, v, b, vec):
        return _zero_like(tables)
    low = _lower(vec, a, v)
    den = 1 - tables.p(a, v, low)
    if abs(den) < GUARD:
        raise Singularity("path operator denominator vanishes", (a, v, b, vec))
    return tables.p(a, v, vec) * (tables.p(b, v, low) - tables.y(a, v, b, low)) / den


# admissibility envelope --------------------------------------------------------


@dataclass
class PiReport:
    mu: float
    passed: dict[str, bool]
    witness: dict[str, object]

    @property
    def ok(self) -> bool:
        return all(self.passed.values())


def check_Pi_membership(tables, mu, domain: Iterable[Key], gc: GraphClass | None = None) -> PiReport:
    """Test the three envelope bounds on every balanced sequence in ``domain``."""
    gc = gc or tables.gc
    passed = {"a": True, "b": True, "c": True}
    witness: dict[str, object] = {}

    def fail(tag, info):
        if passed[tag]:
            passed[tag] = False
            witness[tag] = info

    for vec in domain:
        vec = _vec(vec)
        if sum(vec[: gc.ell]) != sum(vec[gc.ell:]):
            continue
        for a, v in s_pairs(gc):
            val = tables.p(a, v, vec)
            if not 0 <= val <= mu:
                fail("a", {"pair": (a, v), "seq": vec, "value": float(val)})
        for a, b in s_ratio_pairs(gc):
            total = sum((tables.y(a, v, b, vec) for v in gc.neighbors(a) if gc.allowable(b, v)), 0)
            if total > mu * vec[a - 1]:
                fail("b", {"pair": (a, b), "seq": vec, "value": float(total)})
        for a, v, b in s_paths(gc):
            val = tables.y(a, v, b, vec)
            if not 0 <= val <= mu * tables.p(b, v, vec):
                fail("c", {"path": (a, v, b), "seq": vec, "value": float(val)})
    return PiReport(float(mu), passed, witness)


# iteration -----------------------------------------------------------------------


@dataclass
class IterationReport:
    converged: bool
    iterations: int
    deltas: list[float]
    contraction: list[float]
    domain_sizes: list[int]
    reason: str
    held: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "deltas": self.deltas,
            "contraction": self.contraction,
            "domain_sizes": self.domain_sizes,
            "reason": self.reason,
            "held": self.held,
        }


def _rel_change(new, old) -> float:
    if new == old:
        return 0.0
    scale = max(abs(new), abs(old))
    return float(abs(new - old) / scale)


def compose_step(
    tables: ProbTables,
    balanced: list[Key],
    heavy: list[Key],
    iteration: int = 0,
    on_singular: str = "raise",
) -> ProbTables:
    """One application of the composite map, entry by entry.

    Ratios come from (p, y), then p from (p, new r), then y from (new p, y).
    Entries whose lookups fall outside the stored family are dropped.  With
    ``on_singular="hold"`` an entry whose formula divides by zero keeps its
    previous value instead of raising.
    """
    gc = tables.gc
    sup = tables.support
    bad_cache: dict = {}
    held = [0]

    def bad(i, j, w):
        key = (i, j, w)
        if key not in bad_cache:
            bad_cache[key] = bad_fn(tables, i, j, w, gc)
        return bad_cache[key]

    def attempt(target: dict, key, old: dict, fn):
        try:
            target[key] = fn()
        except DomainError:
            pass
        except Singularity as exc:
            if on_singular == "hold" and key in old:
                target[key] = old[key]
                held[0] += 1
                return
            exc.iteration = iteration
            raise

    r_new = ProbTables(gc, sup, tables.exact)
    for vec in heavy:
        for a, b in s_ratio_pairs(gc):
            if sup.realisable(_lower(vec, b)):
                attempt(r_new.r_map, (a, b, vec), tables.r_map, lambda: apply_R(tables, vec, a, b, gc, bad))
    stage = _Mixed(tables, r_new)
    out = ProbTables(gc, sup, tables.exact, r_map=r_new.r_map)
    live = [vec for vec in balanced if sup.realisable(vec)]
    for vec in live:
        for a, v in s_pairs(gc):
            attempt(out.p_map, (a, v, vec), tables.p_map, lambda: apply_P(stage, vec, a, v, gc))
    stage = _Mixed(out, tables)
    for vec in live:
        for a, v, b in s_paths(gc):
            attempt(out.y_map, (a, v, b, vec), tables.y_map, lambda: apply_Y(stage, vec, a, v, b, gc))
    out.held = held[0]
    return out


class CompiledComposite:
    """The composite map on a lookup-closed family, as index gathers.

    Every lookup the operators make is resolved once to a slot in a flat value
    array (or to a constant 0 / 1 slot), so one application is a handful of
    numpy gathers.  Works with float arrays or object arrays of fractions.
    """

    def __init__(self, gc: GraphClass, support, balanced: list[Key], heavy: list[Key]):
        self.gc = gc
        self.support = support
        sup = support
        live = [vec for vec in balanced if sup.realisable(vec)]
        self.p_keys = [(a, v, vec) for vec in live for a, v in s_pairs(gc)]
        self.y_keys = [(a, v, b, vec) for vec in live for a, v, b in s_paths(gc)]
        self.r_keys = [
            (a, b, vec) for vec in heavy for a, b in s_ratio_pairs(gc) if sup.realisable(_lower(vec, b))
        ]
        p_at = {k: i for i, k in enumerate(self.p_keys)}
        y_at = {k: i for i, k in enumerate(self.y_keys)}
        r_at = {k: i for i, k in enumerate(self.r_keys)}
        NP, NY, NR = len(self.p_keys), len(self.y_keys), len(self.r_keys)
        self.P0, self.Y0 = NP, NY  # zero slots
        self.R0, self.R1 = NR, NR + 1  # zero and one slots

        def pslot(a, v, vec):
            k = (a, v, vec)
            if k in p_at:
                return p_at[k]
            if not sup.realisable(vec):
                return self.P0
            raise DomainError(f"missing table entry {k}")

        def yslot(a, v, b, vec):
            k = (a, v, b, vec)
            if k in y_at:
                return y_at[k]
            if not sup.realisable(vec):
                return self.Y0
            raise DomainError(f"missing table entry {k}")

        def rslot(a, b, vec):
            if a == b:
                return self.R1
            k = (a, b, vec)
            if k in r_at:
                return r_at[k]
            if not sup.realisable(_lower(vec, a)):
                return self.R0
            raise DomainError(f"missing table entry {k}")

        # bad values: one slot per (i, j, w); slot NB is the constant 0
        bad_keys: dict = {}
        bad_p: list[list[int]] = []
        bad_y: list[list[int]] = []
        bad_deg: list[int] = []

        def bslot(i, j, w):
            if not sup.realisable(w) or w[i - 1] == 0:
                return -1
            k = (i, j, w)
            if k not in bad_keys:
                bad_keys[k] = len(bad_deg)
                nb = set(gc.neighbors(j))
                bad_p.append([pslot(i, v, w) for v in gc.neighbors(i) if v not in nb])
                bad_y.append([yslot(i, v, j, w) for v in gc.neighbors(i) if v in nb])
                bad_deg.append(w[i - 1])
            return bad_keys[k]

        r_num, r_den, r_scale, r_live = [], [], [], []
        for a, b, vec in self.r_keys:
            live_a = sup.realisable(_lower(vec, a))
            r_live.append(live_a)
            r_num.append(bslot(a, b, _lower(vec, b)) if live_a else -1)
            r_den.append(bslot(b, a, _lower(vec, a)) if live_a else -1)
            r_scale.append(Fraction(vec[a - 1], vec[b - 1]))
        NB = len(bad_deg)
        fix = lambda idx: [NB if x == -1 else x for x in idx]
        self.r_num, self.r_den = np.array(fix(r_num), dtype=np.int64), np.array(fix(r_den), dtype=np.int64)
        self.r_scale = r_scale
        self.r_live = np.array(r_live, dtype=bool)
        width_p = max((len(x) for x in bad_p), default=0)
        width_y = max((len(x) for x in bad_y), default=0)
        self.bad_p = np.array([x + [self.P0] * (width_p - len(x)) for x in bad_p], dtype=np.int64).reshape(NB, width_p)
        self.bad_y = np.array([x + [self.Y0] * (width_y - len(x)) for x in bad_y], dtype=np.int64).reshape(NB, width_y)
        self.bad_deg = bad_deg

        # edge operator
        n_terms = max((len(gc.neighbors(v)) for v in gc.T), default=0)
        p_live, p_own, p_r, p_pb, p_dv = [], [], [], [], []
        for a, v, vec in self.p_keys:
            ok = sup.edge_possible(a, v, vec)
            p_live.append(ok)
            top = _lower(vec, v)
            rs, pbs = [], []
            if ok:
                for b in gc.neighbors(v):
                    if sup.realisable(_lower(top, b)):
                        rs.append(rslot(b, a, top))
                        pbs.append(pslot(b, v, _lower(vec, b, v)))
            rs += [self.R0] * (n_terms - len(rs))
            pbs += [self.P0] * (n_terms - len(pbs))
            p_own.append(pslot(a, v, _lower(vec, a, v)) if ok else self.P0)
            p_r.append(rs)
            p_pb.append(pbs)
            p_dv.append(vec[v - 1])
        self.p_live = np.array(p_live, dtype=bool)
        self.p_own = np.array(p_own, dtype=np.int64)
        self.p_r = np.array(p_r, dtype=np.int64).reshape(NP, n_terms)
        self.p_pb = np.array(p_pb, dtype=np.int64).reshape(NP, n_terms)
        self.p_dv = p_dv

        # path operator
        y_live, y_head, y_own, y_pb, y_y = [], [], [], [], []
        for a, v, b, vec in self.y_keys:
            ok = sup.path_possible(a, v, b, vec)
            y_live.append(ok)
            low = _lower(vec, a, v)
            y_head.append(p_at[(a, v, vec)])
            y_own.append(pslot(a, v, low) if ok else self.P0)
            y_pb.append(pslot(b, v, low) if ok else self.P0)
            y_y.append(yslot(a, v, b, low) if ok else self.Y0)
        self.y_live = np.array(y_live, dtype=bool)
        self.y_head = np.array(y_head, dtype=np.int64)
        self.y_own = np.array(y_own, dtype=np.int64)
        self.y_pb = np.array(y_pb, dtype=np.int64)
        self.y_y = np.array(y_y, dtype=np.int64)

    def arrays_from(self, tables, exact: bool):
        """Value arrays (with their constant slots) read from any table view."""
        zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
        dt = object if exact else float
        p = np.array([tables.p(*k) for k in self.p_keys] + [zero], dtype=dt)
        y = np.array([tables.y(*k) for k in self.y_keys] + [zero], dtype=dt)
        return p, y

    def to_tables(self, p, y, r, exact: bool) -> ProbTables:
        t = ProbTables(self.gc, self.support, exact)
        t.p_map = dict(zip(self.p_keys, p[:-1].tolist()))
        t.y_map = dict(zip(self.y_keys, y[:-1].tolist()))
        t.r_map = dict(zip(self.r_keys, r[:-2].tolist()))
        return t

    def _first_bad(self, mask, keys, offset=0):
        i = int(np.flatnonzero(mask)[0])
        return keys[i]

    def step(self, p, y, exact: bool, on_singular: str = "raise", iteration: int = 0, old_r=None):
        """Apply the composite map to value arrays; returns (p, y, r, held)."""
        zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
        dt = object if exact else float
        held = 0

        def guard(den, mask, keys, label, fallback):
            nonlocal held
            sing = mask & (np.abs(den.astype(float)) < GUARD)
            if sing.any():
                if on_singular != "hold" or fallback is None:
                    raise Singularity(f"{label} denominator vanishes", self._first_bad(sing, keys), iteration)
                held += int(sing.sum())
            return sing

        # bad values
        NB = len(self.bad_deg)
        tot = p[self.bad_p].sum(axis=1) + y[self.bad_y].sum(axis=1) if NB else np.zeros(0, dtype=dt)
        if exact:
            bad = np.array([tot[i] / self.bad_deg[i] for i in range(NB)] + [zero], dtype=object)
        else:
            bad = np.append(tot / np.array(self.bad_deg, dtype=float), 0.0)
        # ratios
        num = one - bad[self.r_num]
        den = one - bad[self.r_den]
        NR = len(self.r_keys)
        scale = np.array(self.r_scale, dtype=object) if exact else np.array([float(x) for x in self.r_scale])
        sing = guard(den, self.r_live, self.r_keys, "ratio operator", old_r)
        safe = np.where(sing, one, den)
        r_vals = np.where(self.r_live, scale * num / safe, zero)
        if sing.any():
            r_vals = np.where(sing, old_r[:NR], r_vals)
        r = np.concatenate([r_vals.astype(dt), np.array([zero, one], dtype=dt)])
        # edge probabilities
        own = one - p[self.p_own]
        sing = guard(own, self.p_live, self.p_keys, "edge operator", p)
        own = np.where(sing, one, own)
        total = (r[self.p_r] * (one - p[self.p_pb])).sum(axis=1) / own
        sing2 = guard(total, self.p_live & ~sing, self.p_keys, "edge operator sum", p)
        dv = np.array(self.p_dv, dtype=object) if exact else np.array(self.p_dv, dtype=float)
        usable = self.p_live & ~sing & ~sing2
        p_vals = np.where(usable, dv / np.where(usable, total, one), zero)
        stuck = sing | sing2
        if stuck.any():
            p_vals = np.where(stuck, p[:-1], p_vals)
        p_new = np.append(p_vals.astype(dt), np.array([zero], dtype=dt))
        # path probabilities
        den = one - p_new[self.y_own]
        sing = guard(den, self.y_live, self.y_keys, "path operator", y)
        den = np.where(sing, one, den)
        y_vals = np.where(self.y_live, p_new[self.y_head] * (p_new[self.y_pb] - y[self.y_y]) / den, zero)
        if sing.any():
            y_vals = np.where(sing, y[:-1], y_vals)
        y_new = np.append(y_vals.astype(dt), np.array([zero], dtype=dt))
        return p_new, y_new, r, held


def family(spec: NeighborhoodSpec) -> tuple[list[Key], list[Key]]:
    """Balanced and S-heavy vectors of the family described by ``spec``."""
    bal = spec.with_heaviness(Balance.BALANCED).vectors()
    heavy = spec.with_heaviness(Balance.S_HEAVY).vectors()
    return bal, heavy


def _max_rel_change(new, old) -> float:
    a = np.asarray(new[:-1], dtype=float)
    b = np.asarray(old[:-1], dtype=float)
    if a.size == 0:
        return 0.0
    scale = np.maximum(np.abs(a), np.abs(b))
    diff = np.abs(a - b)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(diff == 0, 0.0, diff / scale)
    return float(rel.max())


def iterate_fixpoint(
    init: ProbTables,
    domain: NeighborhoodSpec,
    tol: float = 1e-10,
    max_iter: int = 100,
    on_singular: str = "raise",
    damping: float = 1.0,
) -> tuple[ProbTables, IterationReport]:
    """Iterate the composite map from ``init`` until the largest relative
    change of p and y drops below ``tol``.

    With ``damping`` w < 1 each step moves to (1 - w) * old + w * new.

    Families closed under lookups (downsets) run on the compiled path; balls
    lose their outer layers each step and run entry by entry until the
    center drops out.
    """
    balanced, heavy = family(domain)
    exact_mode = init.exact
    deltas: list[float] = []
    sizes: list[int] = []
    held_counts: list[int] = []
    reason = "max_iter reached"
    converged = False
    try:
        plan = CompiledComposite(init.gc, init.support, balanced, heavy)
    except DomainError:
        plan = None
    if damping != 1 and plan is None:
        raise ValueError("damping needs a lookup-closed family")
    if plan is not None:
        p, y = plan.arrays_from(init, exact_mode)
        r = None
        zero, one = (Fraction(0), Fraction(1)) if exact_mode else (0.0, 1.0)
        old_r = np.array([init.r_map.get(k, one) for k in plan.r_keys] + [zero, one], dtype=object if exact_mode else float)
        for k in range(max_iter):
            p2, y2, r, held = plan.step(p, y, exact_mode, on_singular, k, old_r)
            if damping != 1:
                w = Fraction(damping) if exact_mode else damping
                p2 = (1 - w) * p + w * p2
                y2 = (1 - w) * y + w * y2
            change = max(_max_rel_change(p2, p), _max_rel_change(y2, y))
            deltas.append(change)
            sizes.append(len(plan.p_keys))
            held_counts.append(held)
            p, y, old_r = p2, y2, r
            if change < tol:
                converged, reason = True, "tolerance met"
                break
        tables = plan.to_tables(p, y, old_r, exact_mode) if deltas else init
    else:
        tables = init
        center_keys = {(a, v, domain.center.d) for a, v in s_pairs(init.gc)}
        for k in range(max_iter):
            new = compose_step(tables, balanced, heavy, k, on_singular)
            if not center_keys <= new.p_map.keys():
                reason = "radius exhausted"
                break
            change = 0.0
            for key, val in new.p_map.items():
                if key in tables.p_map:
                    change = max(change, _rel_change(val, tables.p_map[key]))
            for key, val in new.y_map.items():
                if key in tables.y_map:
                    change = max(change, _rel_change(val, tables.y_map[key]))
            deltas.append(change)
            sizes.append(len(new.p_map))
            held_counts.append(new.held)
            tables = new
            if change < tol:
                converged, reason = True, "tolerance met"
                break
    contraction = [deltas[i] / deltas[i - 1] if deltas[i - 1] > 0 else 0.0 for i in range(1, len(deltas))]
    report = IterationReport(converged, len(deltas), deltas, contraction, sizes, reason, held_counts)
    return tables, report


# closeness of the closed forms to a fixed point -------------------------------


@dataclass
class NearFixpointReport:
    dev_R: float
    dev_P: float
    dev_Y: float
    mu: float
    eps: float
    scale_mu_eps4: float
    flags: list[str]

    def as_dict(self) -> dict:
        return {
            "dev_R": self.dev_R,
            "dev_P": self.dev_P,
            "dev_Y": self.dev_Y,
            "mu": self.mu,
            "eps": self.eps,
            "scale_mu_eps4": self.scale_mu_eps4,
            "flags": self.flags,
        }


def _representatives(d: DegreeSequence):
    """S-side pairs, paths and ratio pairs, one per orbit of degree-preserving
    relabellings (bipartite) or all of them (digraph)."""
    gc = d.cls
    if gc.is_digraph:
        return s_pairs(gc), s_paths(gc), s_ratio_pairs(gc)
    first_S: dict[int, list[int]] = {}
    for a in gc.S:
        first_S.setdefault(d[a], []).append(a)
    first_T: dict[int, int] = {}
    for v in gc.T:
        first_T.setdefault(d[v], v)
    reps_S = [(deg, vs) for deg, vs in first_S.items()]
    pairs = [(vs[0], v) for _, vs in reps_S for v in first_T.values()]
    ratio = []
    for (d1, v1), (d2, v2) in itertools.product(reps_S, reps_S):
        if d1 == d2:
            if len(v1) > 1:
                ratio.append((v1[0], v1[1]))
        else:
            ratio.append((v1[0], v2[0]))
    paths = [(a, v, b) for a, b in ratio for v in first_T.values()]
    return pairs, paths, ratio


def near_fixpoint_report(d: DegreeSequence, phi: float = 0.55) -> NearFixpointReport:
    """Largest relative amount by which one operator application moves the
    closed-form tables, evaluated at d itself."""
    gc = d.cls
    st = d.stats
    mu = float(st.mu)
    dbar = min(float(st.s_bar), float(st.t_bar))
    eps = dbar ** (phi - 1)
    flags = []
    if mu >= 0.25:
        flags.append(f"density {mu:.4g} is not below 1/4")
    if max(abs(float(e)) for e in st.eps_s + st.eps_t) > eps:
        flags.append("a relative degree deviation exceeds the allowed window")
    tables = ClosedFormTables(gc)
    vec = d.d
    pairs, paths, ratios = _representatives(d)
    bad_cache: dict = {}

    def bad(i, j, w):
        key = (i, j, w)
        if key not in bad_cache:
            bad_cache[key] = bad_fn(tables, i, j, w, gc)
        return bad_cache[key]

    dev_R = max((abs(apply_R(tables, vec, a, b, gc, bad) / tables.r(a, b, vec) - 1) for a, b in ratios), default=0.0)
    dev_P = max((abs(apply_P(tables, vec, a, v, gc) / tables.p(a, v, vec) - 1) for a, v in pairs), default=0.0)
    dev_Y = max((abs(apply_Y(tables, vec, a, v, b, gc) / tables.y(a, v, b, vec) - 1) for a, v, b in paths), default=0.0)
    return NearFixpointReport(dev_R, dev_P, dev_Y, mu, eps, mu * eps**4, flags)


def near_regular(n: int, dbar: int, kind: str = "bipartite") -> DegreeSequence:
    """Square sequence with degrees alternating dbar - 1, dbar + 1 (balanced)."""
    pattern = [dbar - 1 if i % 2 == 0 else dbar + 1 for i in range(n)]
    if n % 2:
        pattern[-1] = dbar
    if kind == "digraph":
        return DegreeSequence.digraph(pattern, pattern[::-1])
    return DegreeSequence.bipartite(pattern, pattern)

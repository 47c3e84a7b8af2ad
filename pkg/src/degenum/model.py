"""Graph classes, degree sequences and their exact summary statistics.

Vertices are labelled 1..ell (part S) and ell+1..ell+n (part T).  A loopless
digraph on n vertices is the bipartite case ell = n with the perfect matching
{a, a+n} forbidden; ``mate`` maps a vertex to its partner in that matching.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Sequence


class Kind(str, enum.Enum):
    BIPARTITE = "bipartite"
    DIGRAPH = "digraph"


class Balance(str, enum.Enum):
    BALANCED = "balanced"
    S_HEAVY = "S_heavy"
    T_HEAVY = "T_heavy"
    OTHER = "other"


class UnderflowError(ValueError):
    """A decrement would make a degree negative."""

    def __init__(self, index: int):
        super().__init__(f"degree of vertex {index} would become negative")
        self.index = index


@dataclass(frozen=True)
class GraphClass:
    kind: Kind
    ell: int
    n: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.ell < 1 or self.n < 1:
            raise ValueError("part sizes must be positive")
        if self.kind is Kind.DIGRAPH and self.ell != self.n:
            raise ValueError("digraph class requires ell == n")

    @classmethod
    def bipartite(cls, ell: int, n: int) -> "GraphClass":
        return cls(Kind.BIPARTITE, ell, n)

    @classmethod
    def digraph(cls, n: int) -> "GraphClass":
        return cls(Kind.DIGRAPH, n, n)

    @property
    def is_digraph(self) -> bool:
        return self.kind is Kind.DIGRAPH

    @property
    def delta_di(self) -> int:
        return 1 if self.is_digraph else 0

    @property
    def size(self) -> int:
        return self.ell + self.n

    @property
    def pair_count(self) -> int:
        return self.ell * self.n - self.delta_di * self.n

    @property
    def S(self) -> range:
        return range(1, self.ell + 1)

    @property
    def T(self) -> range:
        return range(self.ell + 1, self.ell + self.n + 1)

    def in_S(self, x: int) -> bool:
        return 1 <= x <= self.ell

    def in_T(self, x: int) -> bool:
        return self.ell < x <= self.ell + self.n

    def check_vertex(self, x: int) -> None:
        if not 1 <= x <= self.size:
            raise ValueError(f"vertex {x} outside 1..{self.size}")

    def mate(self, x: int) -> int:
        if not self.is_digraph:
            raise ValueError("mate is only defined for the digraph class")
        self.check_vertex(x)
        return x + self.ell if self.in_S(x) else x - self.ell

    @lru_cache(maxsize=None)
    def allowable(self, x: int, y: int) -> bool:
        """Unordered allowability of the pair {x, y}."""
        if self.in_T(x) and self.in_S(y):
            x, y = y, x
        if not (self.in_S(x) and self.in_T(y)):
            return False
        return not (self.is_digraph and y == x + self.ell)

    @lru_cache(maxsize=None)
    def neighbors(self, x: int) -> tuple[int, ...]:
        """All y with {x, y} allowable, in increasing order."""
        self.check_vertex(x)
        other = self.T if self.in_S(x) else self.S
        return tuple(y for y in other if self.allowable(x, y))

    @lru_cache(maxsize=None)
    def cell(self, x: int, y: int) -> tuple[int, int]:
        """0-based (row, column) of the allowable pair {x, y} in the S x T matrix."""
        if not self.allowable(x, y):
            raise ValueError(f"pair ({x}, {y}) is not allowable")
        if self.in_T(x):
            x, y = y, x
        return x - 1, y - self.ell - 1

    def pair_of_cell(self, i: int, j: int) -> tuple[int, int]:
        return i + 1, self.ell + j + 1

    @lru_cache(maxsize=None)
    def excluded_cells(self) -> frozenset[tuple[int, int]]:
        if self.is_digraph:
            return frozenset((i, i) for i in range(self.n))
        return frozenset()

    def transpose(self) -> "GraphClass":
        return GraphClass(self.kind, self.n, self.ell)

    def transpose_vertex(self, x: int) -> int:
        """Label of x after swapping the roles of S and T."""
        self.check_vertex(x)
        return x + self.n if self.in_S(x) else x - self.ell


@dataclass(frozen=True)
class DegreeSequence:
    cls: GraphClass
    s: tuple[int, ...]
    t: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(int(x) for x in self.s))
        object.__setattr__(self, "t", tuple(int(x) for x in self.t))
        if len(self.s) != self.cls.ell or len(self.t) != self.cls.n:
            raise ValueError(
                f"expected |s|={self.cls.ell}, |t|={self.cls.n}, "
                f"got {len(self.s)} and {len(self.t)}"
            )
        if any(x < 0 for x in self.s + self.t):
            raise ValueError("degrees must be nonnegative")

    @classmethod
    def bipartite(cls, s: Sequence[int], t: Sequence[int]) -> "DegreeSequence":
        return cls(GraphClass.bipartite(len(s), len(t)), tuple(s), tuple(t))

    @classmethod
    def digraph(cls, s: Sequence[int], t: Sequence[int]) -> "DegreeSequence":
        return cls(GraphClass.digraph(len(s)), tuple(s), tuple(t))

    @classmethod
    def from_vector(cls, gc: GraphClass, d: Sequence[int]) -> "DegreeSequence":
        return cls(gc, tuple(d[: gc.ell]), tuple(d[gc.ell:]))

    @property
    def d(self) -> tuple[int, ...]:
        """Concatenated vector; vertex x has degree ``d[x - 1]``."""
        return self.s + self.t

    def __getitem__(self, x: int) -> int:
        self.cls.check_vertex(x)
        return self.s[x - 1] if x <= self.cls.ell else self.t[x - self.cls.ell - 1]

    @property
    def entrywise_feasible(self) -> bool:
        dd = self.cls.delta_di
        return max(self.s, default=0) <= self.cls.n - dd and max(self.t, default=0) <= self.cls.ell - dd

    def balance(self) -> Balance:
        return balance_state(self)

    def perturb(self, decrements: Iterable[int]) -> "DegreeSequence":
        return perturb(self, decrements)

    def minus(self, *vertices: int) -> "DegreeSequence | None":
        """``d - e_x - ...``, or None when an entry would go negative."""
        try:
            return perturb(self, vertices)
        except UnderflowError:
            return None

    def transpose(self) -> "DegreeSequence":
        return DegreeSequence(self.cls.transpose(), self.t, self.s)

    @cached_property
    def stats(self) -> "SeqStats":
        return stats(self)


@dataclass(frozen=True)
class SeqStats:
    M1s: int
    M1t: int
    M2t: int
    s_bar: Fraction
    t_bar: Fraction
    mu: Fraction
    sigma2_s: Fraction
    sigma2_t: Fraction
    sigma_st: Fraction | None
    delta_S: int
    delta_T: int
    eps_s: tuple[Fraction, ...]
    eps_t: tuple[Fraction, ...]

    def eps(self, d: DegreeSequence, x: int) -> Fraction:
        """Relative deviation of vertex x from its part mean."""
        if d.cls.in_S(x):
            return self.eps_s[x - 1]
        return self.eps_t[x - d.cls.ell - 1]


def _rel(values: tuple[int, ...], mean: Fraction) -> tuple[Fraction, ...]:
    if mean == 0:
        return tuple(Fraction(0) for _ in values)
    return tuple((x - mean) / mean for x in values)


def stats(d: DegreeSequence) -> SeqStats:
    gc = d.cls
    M1s, M1t = sum(d.s), sum(d.t)
    s_bar = Fraction(M1s, gc.ell)
    t_bar = Fraction(M1t, gc.n)
    sigma2_s = sum((x - s_bar) ** 2 for x in d.s) / gc.ell
    sigma2_t = sum((x - t_bar) ** 2 for x in d.t) / gc.n
    sigma_st = None
    if gc.is_digraph:
        sigma_st = sum((d.s[i] - s_bar) * (d.t[i] - t_bar) for i in range(gc.n)) / gc.n
    return SeqStats(
        M1s=M1s,
        M1t=M1t,
        M2t=sum(x * (x - 1) for x in d.t),
        s_bar=s_bar,
        t_bar=t_bar,
        mu=Fraction(M1s + M1t, 2 * gc.pair_count) if gc.pair_count else Fraction(0),
        sigma2_s=sigma2_s,
        sigma2_t=sigma2_t,
        sigma_st=sigma_st,
        delta_S=max(d.s, default=0),
        delta_T=max(d.t, default=0),
        eps_s=_rel(d.s, s_bar),
        eps_t=_rel(d.t, t_bar),
    )


def balance_state(d: DegreeSequence) -> Balance:
    diff = sum(d.s) - sum(d.t)
    if diff == 0:
        return Balance.BALANCED
    if diff == 1:
        return Balance.S_HEAVY
    if diff == -1:
        return Balance.T_HEAVY
    return Balance.OTHER


def perturb(d: DegreeSequence, decrements: Iterable[int]) -> DegreeSequence:
    """Return ``d`` minus the unit vectors of the listed vertices."""
    vec = list(d.d)
    for x in decrements:
        d.cls.check_vertex(x)
        vec[x - 1] -= 1
        if vec[x - 1] < 0:
            raise UnderflowError(x)
    return DegreeSequence.from_vector(d.cls, vec)

"""Closed-form estimates for counts, probabilities and ratios.

Everything here is evaluated in floating point from the exact statistics of
a sequence.  Error terms of the form O(...) are returned separately as an
"error scale" with implied constant 1; they are never certified bounds.
Vertex arguments are 1-based labels; T-side variants are obtained by
transposing the sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from scipy.special import betaln

from .model import Balance, DegreeSequence


class Singular(ArithmeticError):
    pass


@dataclass(frozen=True)
class LogValue:
    log_value: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


@dataclass(frozen=True)
class AsymParams:
    phi: float = 0.55
    mu0: float = 0.1

    def __post_init__(self):
        if not 0.5 < self.phi < 0.6:
            raise ValueError("phi must lie in (1/2, 3/5)")

    def eps(self, d: DegreeSequence) -> float:
        st = d.stats
        return max(float(st.s_bar) ** (self.phi - 1), float(st.t_bar) ** (self.phi - 1))

    def regime_flags(self, d: DegreeSequence) -> list[str]:
        """Reasons the sequence sits outside the stated regime (empty when inside)."""
        st = d.stats
        flags = []
        if float(st.mu) >= self.mu0:
            flags.append(f"density {float(st.mu):.4g} >= mu0 {self.mu0}")
        s, t = float(st.s_bar), float(st.t_bar)
        if any(abs(x - s) > s**self.phi for x in d.s):
            flags.append("an S degree deviates from the mean by more than mean^phi")
        if any(abs(x - t) > t**self.phi for x in d.t):
            flags.append("a T degree deviates from the mean by more than mean^phi")
        return flags


SMALL_K = 2000


def log_binom(n: int, k: int) -> float:
    """ln C(n, k) via the beta function, accurate in relative terms."""
    if k < 0 or k > n:
        return -math.inf
    if k == 0 or k == n:
        return 0.0
    k = min(k, n - k)
    if k <= SMALL_K:
        # the beta function loses digits when one argument is small
        return math.fsum(math.log1p((n - k) / i) for i in range(1, k + 1))
    return -math.log(n + 1) - float(betaln(n - k + 1, k + 1))


def _require_balanced(d: DegreeSequence) -> int:
    if d.balance() is not Balance.BALANCED:
        raise ValueError("sequence must be balanced")
    return sum(d.s)


def binom_model_logprob(d: DegreeSequence) -> LogValue:
    """ln of the probability of d under independent binomials conditioned on
    both part sums equalling m."""
    m = _require_balanced(d)
    gc = d.cls
    dd = gc.delta_di
    val = -2 * log_binom(gc.pair_count, m)
    val += sum(log_binom(gc.n - dd, x) for x in d.s)
    val += sum(log_binom(gc.ell - dd, x) for x in d.t)
    return LogValue(val)


def correction_H(d: DegreeSequence) -> float:
    st = d.stats
    mu, s, t = float(st.mu), float(st.s_bar), float(st.t_bar)
    if mu >= 1 or s == 0 or t == 0:
        raise Singular("correction factor needs 0 < mean and density < 1")
    q = 1 - mu
    expo = -0.5 * (1 - float(st.sigma2_s) / (s * q)) * (1 - float(st.sigma2_t) / (t * q))
    if d.cls.is_digraph:
        expo -= float(st.sigma_st) / (s * q)
    return math.exp(expo)


def estimate_logprob(d: DegreeSequence) -> LogValue:
    base = binom_model_logprob(d).log_value
    return LogValue(base + math.log(correction_H(d)))


def estimate_log_count(d: DegreeSequence) -> LogValue:
    m = sum(d.s)
    return LogValue(estimate_logprob(d).log_value + log_binom(d.cls.pair_count, m))


def main_error_scale(d: DegreeSequence, phi: float = 0.55) -> float:
    gc = d.cls
    st = d.stats
    m = st.M1s
    low = min(float(st.s_bar), float(st.t_bar))
    return (
        math.log(gc.ell) ** 2 / math.sqrt(gc.ell)
        + math.log(gc.n) ** 2 / math.sqrt(gc.n)
        + low ** (5 * phi - 5) * m**2 / (gc.ell * gc.n)
    )


def sparse_error_bound(d: DegreeSequence, eps_param: float) -> float:
    if not 0 < eps_param < 0.5:
        raise ValueError("eps_param must lie in (0, 1/2)")
    gc = d.cls
    st = d.stats
    m = st.M1s
    if m < 1:
        raise ValueError("needs at least one edge")
    s, t = float(st.s_bar), float(st.t_bar)
    lead = st.delta_S**3 * st.delta_T**3 * (gc.n * gc.ell) ** (eps_param / 2) / m * (1 / s + 1 / t)
    return lead + gc.n ** (eps_param - 0.5) + gc.ell ** (eps_param - 0.5)


def _orient(d: DegreeSequence, a: int, v: int) -> tuple[int, int]:
    gc = d.cls
    if not gc.allowable(a, v):
        raise ValueError(f"pair ({a}, {v}) is not allowable")
    return (a, v) if gc.in_S(a) else (v, a)


def edge_prob_estimate(d: DegreeSequence, a: int, v: int) -> float:
    """Closed-form edge probability of {a, v} with its first-order corrections."""
    a, v = _orient(d, a, v)
    gc = d.cls
    st = d.stats
    dd = gc.delta_di
    m = st.M1s
    s, t = float(st.s_bar), float(st.t_bar)
    sa, tv = d[a], d[v]
    base = m - dd * t
    den_cross = base - t * s
    den_s = t * s * (gc.ell - t)
    den_t = t * s * (gc.n - s)
    if base == 0 or den_cross == 0 or den_s == 0 or den_t == 0:
        raise Singular("edge probability formula has a zero denominator")
    corr = (
        1
        - (sa - s) * (tv - t) / den_cross
        + (sa - s) * float(st.sigma2_t) / den_s
        + (tv - t) * float(st.sigma2_s) / den_t
    )
    if dd:
        corr += (d[gc.mate(a)] + d[gc.mate(v)]) / (gc.n - 1)
    return sa * tv / base * corr


def edge_prob_leading(d: DegreeSequence, a: int, v: int) -> float:
    """The uncorrected leading term d_a d_v / m."""
    a, v = _orient(d, a, v)
    return d[a] * d[v] / sum(d.s)


def edge_prob_error_scale(d: DegreeSequence, phi: float = 0.55) -> float:
    gc = d.cls
    st = d.stats
    low = min(float(st.s_bar), float(st.t_bar))
    return low ** (4 * phi - 4) * st.M1s / (gc.n * gc.ell)


@dataclass(frozen=True)
class _Params:
    """Float view of the statistics entering the parameterised forms."""

    mu: float
    s: float
    t: float
    sS2: float
    sT2: float
    ell: int
    n: int
    dd: int

    @classmethod
    def of(cls, d: DegreeSequence) -> "_Params":
        return _view(d.cls, d.d)[0]


@lru_cache(maxsize=1 << 16)
def _view(gc, vec: tuple[int, ...]) -> tuple[_Params, tuple[float, ...]]:
    """Float parameters and per-vertex relative deviations, from integer sums."""
    ell, n = gc.ell, gc.n
    s, t = vec[:ell], vec[ell:]
    M1s, M1t = sum(s), sum(t)
    if M1s == 0 or M1t == 0:
        raise Singular("parameterised forms need positive means")
    mu = (M1s + M1t) / (2 * gc.pair_count)
    if mu >= 1:
        raise Singular("parameterised forms need density < 1")
    sS2 = (ell * sum(x * x for x in s) - M1s * M1s) / ell**2
    sT2 = (n * sum(x * x for x in t) - M1t * M1t) / n**2
    p = _Params(mu, M1s / ell, M1t / n, sS2, sT2, ell, n, gc.delta_di)
    eps = tuple((ell * x - M1s) / M1s for x in s) + tuple((n * x - M1t) / M1t for x in t)
    return p, eps


def pi_form(p: _Params, ea: float, ev: float, ea_m: float = 0.0, ev_m: float = 0.0) -> float:
    """Edge-probability form; ``ea_m`` is the T deviation of a's mate and
    ``ev_m`` the S deviation of v's mate (digraph only)."""
    q = 1 - p.mu
    inner = (p.mu * ea * ev - ea * p.sT2 / (p.t * p.ell) - ev * p.sS2 / (p.s * p.n)) / q
    return p.mu * (1 + ea) * (1 + ev) * (1 - inner + p.dd * (ea_m + ev_m) * p.mu / p.s)


def rho_form(p: _Params, ea: float, eb: float, ea_m: float = 0.0, eb_m: float = 0.0) -> float:
    """Ratio form for two vertices of S."""
    q = 1 - p.mu
    num = 1 - p.mu * (1 + eb) + p.mu / p.s
    den = 1 - p.mu * (1 + ea) + p.mu / p.s
    if den == 0:
        raise Singular("ratio form has a zero denominator")
    tail = 1 + (ea - eb) / q * (p.sT2 / (q * p.t * p.ell) - 1 / p.ell) + p.dd * (ea_m - eb_m) * p.mu / (p.s * q)
    return (1 + ea) / (1 + eb) * num / den * tail


def _eps(d: DegreeSequence, x: int) -> float:
    return _view(d.cls, d.d)[1][x - 1]


def _mate_eps(d: DegreeSequence, x: int) -> float:
    return _eps(d, d.cls.mate(x)) if d.cls.is_digraph else 0.0


def _to_S(d: DegreeSequence, *xs: int) -> tuple[DegreeSequence, tuple[int, ...]]:
    """Move to the transposed sequence when the first vertex lies in T."""
    if d.cls.in_S(xs[0]):
        return d, xs
    return d.transpose(), tuple(d.cls.transpose_vertex(x) for x in xs)


def pi_value(d: DegreeSequence, a: int, v: int) -> float:
    if not d.cls.allowable(a, v):
        raise ValueError(f"pair ({a}, {v}) is not allowable")
    d, (a, v) = _to_S(d, a, v)
    return pi_form(_Params.of(d), _eps(d, a), _eps(d, v), _mate_eps(d, a), _mate_eps(d, v))


def rho_value(d: DegreeSequence, a: int, b: int) -> float:
    gc = d.cls
    if gc.in_S(a) != gc.in_S(b):
        raise ValueError("ratio needs two vertices of the same part")
    if a == b:
        return 1.0
    d, (a, b) = _to_S(d, a, b)
    return rho_form(_Params.of(d), _eps(d, a), _eps(d, b), _mate_eps(d, a), _mate_eps(d, b))


def ystar_value(d: DegreeSequence, a: int, v: int, b: int) -> float:
    gc = d.cls
    if a == b or not gc.allowable(a, v) or not gc.allowable(b, v):
        raise ValueError("(a, v, b) must be a path of allowable pairs with a != b")
    d, (a, v, b) = _to_S(d, a, v, b)
    p = _Params.of(d)
    ea, eb, ev = _eps(d, a), _eps(d, b), _eps(d, v)
    first = pi_form(p, ea, ev, _mate_eps(d, a), _mate_eps(d, v))
    second = pi_form(p, eb, ev - 1 / p.t, _mate_eps(d, b), _mate_eps(d, v))
    tail = 1 + (p.mu * (1 + ea) - p.mu**2 * (1 + ea + eb)) / (p.t * (1 - p.mu))
    return first * second * tail


def sparse_ratio(d: DegreeSequence, a: int, b: int) -> float:
    """Sparse-regime approximation of N(d - e_a) / N(d - e_b) for a, b in S."""
    gc = d.cls
    if not (gc.in_S(a) and gc.in_S(b)):
        raise ValueError("a and b must lie in S")
    if a == b:
        return 1.0
    if d.balance() is not Balance.S_HEAVY:
        raise ValueError("sequence must be S-heavy")
    sa, sb = d[a], d[b]
    if sb == 0:
        raise Singular("s_b is zero")
    st = d.stats
    M1, M2 = st.M1t, st.M2t
    if M1 < 1:
        raise Singular("no edges on the T side")
    cross = 0
    if gc.is_digraph:
        cross = (d[gc.mate(a)] - d[gc.mate(b)]) * M1
    return sa / sb * (1 + ((sa - sb) * M2 + cross) / M1**2)


def sparse_ratio_error_scale(d: DegreeSequence) -> float:
    st = d.stats
    return st.delta_S**3 * st.delta_T**3 / (float(st.t_bar) * st.M1t**2)


def goal_ratio(d: DegreeSequence, a: int, b: int) -> float:
    """Ratio of the combined estimate at d - e_a and d - e_b, for a, b in S."""
    gc = d.cls
    if not (gc.in_S(a) and gc.in_S(b)):
        raise ValueError("a and b must lie in S")
    if a == b:
        return 1.0
    if d.balance() is not Balance.S_HEAVY:
        raise ValueError("sequence must be S-heavy")
    sa, sb = d[a], d[b]
    top = gc.n + (1 - gc.delta_di)
    if sb == 0 or sa >= top or sb >= top:
        raise Singular("goal ratio needs s_b >= 1 and s_a, s_b below the part bound")
    low = d.perturb([a])
    st = low.stats
    mu, s, t = float(st.mu), float(st.s_bar), float(st.t_bar)
    q = 1 - mu
    if q == 0 or s == 0 or t == 0:
        raise Singular("goal ratio has a zero denominator")
    expo = (sb - sa) / (s * gc.ell * q) * (1 - float(st.sigma2_t) / (t * q))
    if gc.is_digraph:
        expo += (d[gc.mate(a)] - d[gc.mate(b)]) / (s * gc.n * q)
    return sa * (top - sb) / (sb * (top - sa)) * math.exp(expo)

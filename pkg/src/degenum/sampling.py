"""Random degree-sequence models and the statistics run on them.

Four models are sampled:

* ``gbip`` and ``gdi``: a uniformly random set of m allowable pairs (bipartite
  graph, or loopless digraph), reduced to its degree sequence;
* ``bm`` and ``vbm``: independent binomial degrees conditioned on each part
  summing to m.  Conditioning iid Bernoulli cells on their total gives a
  uniform m-subset of the cell grid, so each part is drawn as an m-subset of
  its own grid (groups of n - delta cells for S, of ell - delta for T).

Draws are produced in chunks.  Chunk k of stream j uses
``PCG64(SeedSequence(seed, spawn_key=(j, k)))`` so any chunk can be
regenerated on its own and merging is order independent.
"""

from __future__ import annotations

import ast
import enum
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .model import DegreeSequence, GraphClass

CHUNK = 10_000
RNG_NAME = "numpy.random.PCG64"
SPLIT_RULE = "SeedSequence(seed, spawn_key=(stream, chunk_index))"


class Model(str, enum.Enum):
    GBIP = "gbip"
    GDI = "gdi"
    BM = "bm"
    VBM = "vbm"

    @property
    def is_digraph(self) -> bool:
        return self in (Model.GDI, Model.VBM)

    @property
    def conditioned(self) -> bool:
        return self in (Model.BM, Model.VBM)


def model_class(model: Model | str, ell: int, n: int) -> GraphClass:
    model = Model(model)
    if model.is_digraph:
        if ell != n:
            raise ValueError("digraph models need ell == n")
        return GraphClass.digraph(n)
    return GraphClass.bipartite(ell, n)


@dataclass
class SampleBatch:
    model: Model
    cls: GraphClass
    m: int
    seed: int
    degrees: np.ndarray  # shape (count, ell + n)
    meta: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return self.degrees.shape[0]

    @property
    def s(self) -> np.ndarray:
        return self.degrees[:, : self.cls.ell]

    @property
    def t(self) -> np.ndarray:
        return self.degrees[:, self.cls.ell:]

    @property
    def sequences(self) -> list[DegreeSequence]:
        return [DegreeSequence.from_vector(self.cls, row.tolist()) for row in self.degrees]

    def metadata(self) -> dict:
        return {
            "model": self.model.value,
            "class": self.cls.kind.value,
            "ell": self.cls.ell,
            "n": self.cls.n,
            "m": self.m,
            "count": self.count,
            "seed": self.seed,
            **self.meta,
        }

    def write_jsonl(self, fh: IO[str]) -> None:
        from .serialize import seq_to_obj

        for row in self.degrees:
            d = DegreeSequence.from_vector(self.cls, row.tolist())
            fh.write(json.dumps(seq_to_obj(d), separators=(",", ":")) + "\n")


def _rng(seed: int, chunk: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, chunk))))


def _choose(rng: np.random.Generator, rows: int, size: int, m: int) -> np.ndarray:
    """``rows`` independent uniform m-subsets of range(size), as index arrays."""
    if m == 0:
        return np.zeros((rows, 0), dtype=np.int64)
    if m == size:
        return np.broadcast_to(np.arange(size), (rows, size))
    keys = rng.random((rows, size))
    return np.argpartition(keys, m - 1, axis=1)[:, :m]


def _group_counts(idx: np.ndarray, group_of: np.ndarray, groups: int) -> np.ndarray:
    rows = idx.shape[0]
    g = group_of[idx] + groups * np.arange(rows)[:, None]
    return np.bincount(g.ravel(), minlength=rows * groups).reshape(rows, groups)


def _cell_groups(gc: GraphClass) -> tuple[np.ndarray, np.ndarray]:
    """Row and column index of every allowable cell, in row-major order."""
    excl = gc.excluded_cells()
    cells = [(i, j) for i in range(gc.ell) for j in range(gc.n) if (i, j) not in excl]
    arr = np.array(cells, dtype=np.int64).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def _draw_chunk(model: Model, gc: GraphClass, m: int, rows: int, rng: np.random.Generator) -> np.ndarray:
    P = gc.pair_count
    if not model.conditioned:
        row_of, col_of = _cell_groups(gc)
        idx = _choose(rng, rows, P, m)
        return np.hstack([_group_counts(idx, row_of, gc.ell), _group_counts(idx, col_of, gc.n)])
    dd = gc.delta_di
    s_group = np.repeat(np.arange(gc.ell), gc.n - dd)
    t_group = np.repeat(np.arange(gc.n), gc.ell - dd)
    s = _group_counts(_choose(rng, rows, P, m), s_group, gc.ell)
    t = _group_counts(_choose(rng, rows, P, m), t_group, gc.n)
    return np.hstack([s, t])


def sample(model: Model | str, ell: int, n: int, m: int, count: int, seed: int = 0, stream: int = 0) -> SampleBatch:
    """Draw ``count`` degree sequences from ``model`` with m edges per part."""
    model = Model(model)
    gc = model_class(model, ell, n)
    if not 0 <= m <= gc.pair_count:
        raise ValueError(f"m must lie in [0, {gc.pair_count}]")
    if count < 0:
        raise ValueError("count must be nonnegative")
    parts = []
    for k, start in enumerate(range(0, count, CHUNK)):
        rows = min(CHUNK, count - start)
        parts.append(_draw_chunk(model, gc, m, rows, _rng(seed, k, stream)))
    degrees = np.vstack(parts) if parts else np.zeros((0, gc.size), dtype=np.int64)
    meta = {"rng": RNG_NAME, "split": SPLIT_RULE, "chunk": CHUNK, "stream": stream}
    return SampleBatch(model, gc, m, seed, degrees.astype(np.int64), meta)


def rejection_sample(ell: int, n: int, m: int, count: int, seed: int = 0, digraph: bool = False) -> np.ndarray:
    """Conditioned-binomial draws by rejection (independent binomials, keep
    those whose part sums both equal m).  Only practical at tiny sizes."""
    gc = GraphClass.digraph(n) if digraph else GraphClass.bipartite(ell, n)
    dd = gc.delta_di
    p = m / gc.pair_count
    rng = _rng(seed, 0, stream=99)
    out = []
    got = 0
    while got < count:
        s = rng.binomial(gc.n - dd, p, size=(CHUNK, gc.ell))
        t = rng.binomial(gc.ell - dd, p, size=(CHUNK, gc.n))
        keep = (s.sum(axis=1) == m) & (t.sum(axis=1) == m)
        out.append(np.hstack([s[keep], t[keep]]))
        got += int(keep.sum())
    return np.vstack(out)[:count]


def binom_model_prob(d: DegreeSequence) -> float:
    """Exact probability of d under the conditioned-binomial model."""
    gc = d.cls
    dd = gc.delta_di
    m = sum(d.s)
    if m != sum(d.t):
        return 0.0
    num = math.prod(math.comb(gc.n - dd, x) for x in d.s) * math.prod(math.comb(gc.ell - dd, x) for x in d.t)
    return num / math.comb(gc.pair_count, m) ** 2


def support_table(batch: SampleBatch) -> list[dict]:
    """Empirical frequency of every sequence with positive model probability
    next to its exact conditioned-binomial probability and standard error."""
    gc = batch.cls
    dd = gc.delta_di
    seen: dict[tuple[int, ...], int] = {}
    for row in map(tuple, batch.degrees.tolist()):
        seen[row] = seen.get(row, 0) + 1
    rows = []
    for vec in itertools.product(*([range(gc.n - dd + 1)] * gc.ell + [range(gc.ell - dd + 1)] * gc.n)):
        if sum(vec[: gc.ell]) != batch.m or sum(vec[gc.ell:]) != batch.m:
            continue
        q = binom_model_prob(DegreeSequence.from_vector(gc, vec))
        freq = seen.get(vec, 0) / batch.count
        se = math.sqrt(q * (1 - q) / batch.count)
        rows.append({"seq": list(vec), "expected": q, "observed": freq, "se": se})
    return rows


# marginals -------------------------------------------------------------------


def marginal_law(gc: GraphClass, m: int, side: str = "S"):
    """Frozen hypergeometric law of one degree: a part-S degree counts the
    chosen pairs among the n - delta pairs at that vertex."""
    size = gc.n - gc.delta_di if side == "S" else gc.ell - gc.delta_di
    return sps.hypergeom(gc.pair_count, size, m)


def marginal_chisquare(batch: SampleBatch, vertex: int = 1, min_expected: float = 5.0) -> dict:
    """Chi-square goodness of fit of one vertex degree to its hypergeometric law.

    Bins with small expectation are merged into their neighbours from both
    tails until every bin expects at least ``min_expected`` draws.
    """
    gc = batch.cls
    gc.check_vertex(vertex)
    side = "S" if gc.in_S(vertex) else "T"
    law = marginal_law(gc, batch.m, side)
    obs_vals = batch.degrees[:, vertex - 1]
    top = int(law.support()[1])
    ks = np.arange(top + 1)
    expected = law.pmf(ks) * batch.count
    observed = np.bincount(obs_vals, minlength=top + 1)[: top + 1].astype(float)
    bins_e, bins_o = [], []
    acc_e = acc_o = 0.0
    for e, o in zip(expected, observed):
        acc_e += e
        acc_o += o
        if acc_e >= min_expected:
            bins_e.append(acc_e)
            bins_o.append(acc_o)
            acc_e = acc_o = 0.0
    if bins_e:
        bins_e[-1] += acc_e
        bins_o[-1] += acc_o
    if len(bins_e) < 2:
        return {"vertex": vertex, "statistic": 0.0, "dof": 0, "p_value": 1.0, "bins": len(bins_e)}
    stat, p = sps.chisquare(bins_o, bins_e)
    return {"vertex": vertex, "statistic": float(stat), "dof": len(bins_e) - 1, "p_value": float(p), "bins": len(bins_e)}


# variance targets --------------------------------------------------------------


def variance_targets(model: Model | str, gc: GraphClass, m: int) -> dict:
    """Leading-order expected variances and covariance, and their exact
    hypergeometric values.

    The covariance of disjoint counts in a hypergeometric draw is negative, so
    the digraph target carries a minus sign.
    """
    model = Model(model)
    P = gc.pair_count
    mu = m / P
    s_bar, t_bar = m / gc.ell, m / gc.n
    lead_s = s_bar * (1 - mu) * (1 - 1 / gc.ell)
    lead_t = t_bar * (1 - mu) * (1 - 1 / gc.n)
    fpc = P / (P - 1) if P > 1 else 1.0
    out = {
        "sigma2_s": {"target": lead_s, "exact": lead_s * fpc},
        "sigma2_t": {"target": lead_t, "exact": lead_t * fpc},
    }
    if model.is_digraph:
        n = gc.n
        if model is Model.GDI:
            cov = -m * (n - 1) ** 2 * (P - m) / (P**2 * (P - 1)) if P > 1 else 0.0
        else:
            cov = 0.0
        out["sigma_st"] = {"target": cov, "exact": cov}
    return out


def batch_stats(batch: SampleBatch) -> dict[str, np.ndarray]:
    """Per-draw population variances (and digraph covariance) of a batch."""
    s = batch.s.astype(float)
    t = batch.t.astype(float)
    out = {"sigma2_s": s.var(axis=1), "sigma2_t": t.var(axis=1)}
    if batch.cls.is_digraph:
        out["sigma_st"] = ((s - s.mean(axis=1, keepdims=True)) * (t - t.mean(axis=1, keepdims=True))).mean(axis=1)
    return out


def variance_report(model: Model | str, ell: int, n: int, m: int, count: int, seed: int = 0) -> dict:
    """Empirical means of the spread statistics against their targets.

    ``ok`` asks for agreement within three standard errors, widened by the
    relative O(1/(n ell)) slack that the leading-order target carries.
    """
    if count < 1000:
        raise ValueError("variance_report needs at least 1000 draws")
    batch = sample(model, ell, n, m, count, seed)
    gc = batch.cls
    targets = variance_targets(model, gc, m)
    rows = {}
    for name, values in batch_stats(batch).items():
        mean = float(values.mean())
        se = float(values.std(ddof=1) / math.sqrt(len(values)))
        tgt = targets[name]["target"]
        slack = abs(tgt) / (gc.ell * gc.n)
        rows[name] = {
            "mean": mean,
            "se": se,
            "target": tgt,
            "exact": targets[name]["exact"],
            "z_exact": (mean - targets[name]["exact"]) / se if se > 0 else 0.0,
            "tolerance": 3 * se + slack,
            "ok": abs(mean - tgt) <= 3 * se + slack,
        }
    return {"model": Model(model).value, "ell": gc.ell, "n": gc.n, "m": m, "count": count, "seed": seed, "stats": rows}


# event language ---------------------------------------------------------------

_NAMES = ("sigma2_s", "sigma2_t", "sigma_st", "max_s", "max_t")
_BIN = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.true_divide,
    ast.Pow: np.power,
}
_CMP = {
    ast.Lt: np.less,
    ast.LtE: np.less_equal,
    ast.Gt: np.greater,
    ast.GtE: np.greater_equal,
    ast.Eq: np.equal,
    ast.NotEq: np.not_equal,
}


class EventError(ValueError):
    pass


class Event:
    """A predicate over degree sequences written as a small expression.

    Allowed: numbers, ``true``/``false``, ``s[i]`` and ``t[j]`` (1-based),
    the names sigma2_s, sigma2_t, sigma_st, max_s, max_t, arithmetic
    ``+ - * / **``, comparisons (chains allowed), ``and``, ``or``, ``not``
    and ``abs(x)``.
    """

    def __init__(self, text: str):
        self.text = text
        src = text.replace("true", "True").replace("false", "False")
        try:
            self.tree = ast.parse(src, mode="eval").body
        except SyntaxError as exc:
            raise EventError(f"cannot parse event {text!r}: {exc.msg}") from None
        self._check(self.tree)

    def _check(self, node) -> None:
        ok = (
            ast.BoolOp, ast.And, ast.Or, ast.UnaryOp, ast.Not, ast.USub, ast.UAdd,
            ast.BinOp, ast.Compare, ast.Constant, ast.Name, ast.Subscript, ast.Load, ast.Call,
            *_BIN, *_CMP,
        )
        for sub in ast.walk(node):
            if not isinstance(sub, ok):
                raise EventError(f"{type(sub).__name__} is not allowed in events")
            if isinstance(sub, ast.Constant) and not isinstance(sub.value, (int, float, bool)):
                raise EventError("only numeric and boolean literals are allowed")
            if isinstance(sub, ast.Call) and not (
                isinstance(sub.func, ast.Name) and sub.func.id == "abs" and len(sub.args) == 1 and not sub.keywords
            ):
                raise EventError("the only function allowed is abs(x)")
            if isinstance(sub, ast.Subscript):
                if not (isinstance(sub.value, ast.Name) and sub.value.id in ("s", "t")):
                    raise EventError("only s[i] and t[j] may be indexed")
                if not (isinstance(sub.slice, ast.Constant) and type(sub.slice.value) is int):
                    raise EventError("indices must be integer literals")
            if isinstance(sub, ast.Name) and sub.id not in (*_NAMES, "s", "t", "abs"):
                raise EventError(f"unknown name {sub.id!r}")

    def evaluate(self, batch: SampleBatch) -> np.ndarray:
        """Boolean array, one entry per draw."""
        env = {k: v for k, v in batch_stats(batch).items()}
        env["max_s"] = batch.s.max(axis=1) if batch.cls.ell else np.zeros(batch.count)
        env["max_t"] = batch.t.max(axis=1) if batch.cls.n else np.zeros(batch.count)
        out = self._eval(self.tree, batch, env)
        return np.broadcast_to(np.asarray(out, dtype=bool), (batch.count,))

    def _eval(self, node, batch: SampleBatch, env: dict):
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            if node.id not in env:
                raise EventError(f"{node.id} is not defined for {batch.cls.kind.value} models")
            return env[node.id]
        if isinstance(node, ast.Subscript):
            part = batch.s if node.value.id == "s" else batch.t
            i = node.slice.value
            if not 1 <= i <= part.shape[1]:
                raise EventError(f"index {node.value.id}[{i}] out of range 1..{part.shape[1]}")
            return part[:, i - 1]
        if isinstance(node, ast.Call):
            return np.abs(self._eval(node.args[0], batch, env))
        if isinstance(node, ast.UnaryOp):
            x = self._eval(node.operand, batch, env)
            if isinstance(node.op, ast.Not):
                return np.logical_not(x)
            return np.negative(x) if isinstance(node.op, ast.USub) else x
        if isinstance(node, ast.BinOp):
            return _BIN[type(node.op)](self._eval(node.left, batch, env), self._eval(node.right, batch, env))
        if isinstance(node, ast.BoolOp):
            vals = [self._eval(v, batch, env) for v in node.values]
            fn = np.logical_and if isinstance(node.op, ast.And) else np.logical_or
            acc = vals[0]
            for v in vals[1:]:
                acc = fn(acc, v)
            return acc
        if isinstance(node, ast.Compare):
            left = self._eval(node.left, batch, env)
            acc = True
            for op, right_node in zip(node.ops, node.comparators):
                right = self._eval(right_node, batch, env)
                acc = np.logical_and(acc, _CMP[type(op)](left, right))
                left = right
            return acc
        raise EventError(f"unsupported expression {ast.dump(node)}")


def aqe_compare(
    model_a: Model | str,
    model_b: Model | str,
    ell: int,
    n: int,
    m: int,
    events: Sequence[str | Event],
    count: int,
    seed: int = 0,
    z: float = 1.96,
) -> dict:
    """Empirical event probabilities under two models and their ratio.

    The interval is the normal approximation on the log ratio.  The two
    batches come from streams 0 and 1 of ``seed`` so they are independent.
    """
    model_a, model_b = Model(model_a), Model(model_b)
    if model_a.is_digraph != model_b.is_digraph:
        raise ValueError("both models must use the same graph class")
    batch_a = sample(model_a, ell, n, m, count, seed)
    batch_b = sample(model_b, ell, n, m, count, seed, stream=1)
    rows = []
    for ev in events:
        ev = ev if isinstance(ev, Event) else Event(ev)
        ka = int(ev.evaluate(batch_a).sum())
        kb = int(ev.evaluate(batch_b).sum())
        pa, pb = ka / count, kb / count
        row = {"event": ev.text, "p_a": pa, "p_b": pb, "ratio": None, "ci": None, "excludes_one": None}
        if ka > 0 and kb > 0:
            ratio = pa / pb
            spread = math.sqrt((1 - pa) / ka + (1 - pb) / kb)
            lo, hi = ratio * math.exp(-z * spread), ratio * math.exp(z * spread)
            row.update(ratio=ratio, ci=[lo, hi], excludes_one=not lo <= 1 <= hi)
        rows.append(row)
    return {
        "models": [model_a.value, model_b.value],
        "ell": ell,
        "n": n,
        "m": m,
        "count": count,
        "seed": seed,
        "z": z,
        "events": rows,
    }


def merge(batches: Iterable[SampleBatch]) -> SampleBatch:
    """Concatenate batches of the same model and size."""
    batches = list(batches)
    first = batches[0]
    for b in batches[1:]:
        if (b.model, b.cls, b.m) != (first.model, first.cls, first.m):
            raise ValueError("batches differ in model or size")
    return SampleBatch(first.model, first.cls, first.m, first.seed, np.vstack([b.degrees for b in batches]), dict(first.meta))

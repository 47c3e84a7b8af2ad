"""Verification suites: checks against brute force, exact identities,
trend tables, operator iteration and sampling statistics.

Each check returns ``Record`` objects.  A record's ``source`` names the
formula or identity it exercises ("plumbing" for bookkeeping checks).
Status is ``pass``, ``fail``, ``flag`` (informational, never a failure) or
``skipped: cap`` when a resource cap stopped the computation.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np
from scipy import stats as sps

from . import __version__
from . import asymptotic as asy
from . import exact
from . import operators as ops
from . import oracle
from . import sampling
from .model import Balance, DegreeSequence, GraphClass
from .realize import ForbiddenSet, Sufficiency, feasible_exact, feasible_sufficient

PASS, FAIL, FLAG, SKIP = "pass", "fail", "flag", "skipped: cap"


@dataclass
class Record:
    id: str
    source: str
    status: str
    measured: Any = None
    target: Any = None
    tolerance: Any = None
    detail: dict = field(default_factory=dict)


def _status(ok: bool) -> str:
    return PASS if ok else FAIL


def _capped(fn: Callable[[], list[Record]], rid: str, source: str) -> list[Record]:
    try:
        return fn()
    except exact.TooLarge as exc:
        return [Record(rid, source, SKIP, detail={"cap": exc.what, "limit": exc.cap})]


def _pairs(gc: GraphClass, cells) -> list[tuple[int, int]]:
    return [gc.pair_of_cell(i, j) for i, j in cells]


# oracle suite ---------------------------------------------------------------------


def check_count_equivalence(max_side: int = 4, max_entry: int = 3, max_forbidden: int = 2, max_forced: int = 2) -> list[Record]:
    """count() against matrix enumeration for every sequence, every orbit of
    forbidden/forced sets, both classes."""
    mismatches = []
    calls = covered = orbits = 0
    for gc in oracle.shapes(max_side):
        seqs = [DegreeSequence.from_vector(gc, v) for v in oracle.sequences(gc, max_entry)]
        codes = [oracle.seq_code(gc, d.d) for d in seqs]
        for (F, K), size in oracle.config_orbits(gc, max_forbidden, max_forced):
            orbits += 1
            covered += size * len(seqs)
            ref = oracle.brute_counts(gc, F, K)
            fs = ForbiddenSet.of(gc, _pairs(gc, F))
            forced = _pairs(gc, K)
            for d, code in zip(seqs, codes):
                calls += 1
                got = exact.count(d, fs, forced)
                want = ref.get(code, 0)
                if got != want and len(mismatches) < 5:
                    mismatches.append({"seq": d.d, "class": gc.kind.value, "forbidden": F, "forced": K, "got": got, "want": want})
                elif got != want:
                    mismatches.append(None)
    return [
        Record(
            "count-vs-enumeration",
            "matrix enumeration",
            _status(not mismatches),
            measured=len(mismatches),
            target=0,
            tolerance=0,
            detail={"calls": calls, "orbits": orbits, "instances_covered": covered, "first": [m for m in mismatches if m][:5]},
        )
    ]


KNOWN_COUNTS = [
    ("bipartite", [1, 1, 1], [1, 1, 1], 6),
    ("bipartite", [2, 2, 2], [2, 2, 2], 6),
    ("bipartite", [2, 2, 2, 2], [2, 2, 2, 2], 90),
    ("digraph", [1, 1, 1, 1], [1, 1, 1, 1], 9),
    ("digraph", [1, 1], [1, 1], 1),
]


def check_known_values() -> list[Record]:
    out = []
    for kind, s, t, want in KNOWN_COUNTS:
        d = DegreeSequence.digraph(s, t) if kind == "digraph" else DegreeSequence.bipartite(s, t)
        got = exact.count(d)
        out.append(Record(f"known:{kind}:{s}:{t}", "closed-form small counts", _status(got == want), str(got), str(want), 0))
    return out


def _f_orbits(gc: GraphClass, max_forbidden: int) -> list[tuple[tuple, int]]:
    return [(F, size) for (F, K), size in oracle.config_orbits(gc, max_forbidden, 0)]


def check_removal_identity(max_side: int = 4, max_entry: int = 3, max_forbidden: int = 2) -> list[Record]:
    """N_av(d) = N(d - e_a - e_v) - N_av(d - e_a - e_v) over the oracle suite.

    Unbalanced d give zero on both sides (their counts are zero, and so are
    those of d - e_a - e_v), which the equivalence check already verifies;
    the identity is evaluated on every balanced d.
    """
    bad = []
    checked = 0
    for gc in oracle.shapes(max_side):
        seqs = [DegreeSequence.from_vector(gc, v) for v in oracle.sequences(gc, max_entry)]
        seqs = [d for d in seqs if sum(d.s) == sum(d.t)]
        for F, _ in _f_orbits(gc, max_forbidden):
            fs = ForbiddenSet.of(gc, _pairs(gc, F))
            free = [(a, v) for a in gc.S for v in gc.neighbors(a) if (a, v) not in fs.pairs]
            for d in seqs:
                for a, v in free:
                    checked += 1
                    lhs, rhs = exact.removal_identity(d, a, v, fs)
                    if lhs != rhs:
                        bad.append({"seq": d.d, "class": gc.kind.value, "forbidden": F, "pair": (a, v), "lhs": lhs, "rhs": rhs})
    return [
        Record(
            "edge-removal-identity",
            "edge removal identity",
            _status(not bad),
            measured=len(bad),
            target=0,
            tolerance=0,
            detail={"checked": checked, "first": bad[:5]},
        )
    ]


def _bound_sweep(seqs) -> tuple[int, int, list]:
    nonvacuous = 0
    violations = []
    for d in seqs:
        bound = exact.switching_bound(d)
        if bound is None:
            continue
        total = exact.count(d)
        if total == 0:
            continue
        nonvacuous += 1
        for a in d.cls.S:
            for v in d.cls.neighbors(a):
                p = Fraction(exact.count(d, forced=[(a, v)]), total)
                if p > bound:
                    violations.append({"seq": d.d, "pair": (a, v), "p": str(p), "bound": str(bound)})
    return nonvacuous, len(violations), violations[:5]


def switching_sweep_sequences(seed: int = 0) -> list[DegreeSequence]:
    """Larger sparse sequences on which the switching bound is not vacuous.

    Random extras are bipartite: a digraph needs degree-2 entries at n >= 10
    for a non-vacuous bound, where each forced count takes seconds because
    every row carries its own excluded column.
    """
    out = []
    for n in (9, 10, 11, 12):
        out.append(DegreeSequence.bipartite([1] * n, [1] * n))
        out.append(DegreeSequence.digraph([1] * n, [1] * n))
    for n in (10, 11, 12):
        out.append(DegreeSequence.bipartite([2] * n, [2] * n))
    rng = np.random.default_rng(seed)
    while len(out) < 30:
        n = int(rng.integers(10, 13))
        s = rng.integers(1, 3, size=n).tolist()
        t = rng.permutation(s).tolist()
        d = DegreeSequence.bipartite(s, t)
        if exact.switching_bound(d) is not None:
            out.append(d)
    return out


def check_switching_bound(max_side: int = 4, max_entry: int = 3, seed: int = 0) -> list[Record]:
    small = []
    for gc in oracle.shapes(max_side):
        for v in oracle.sequences(gc, max_entry):
            d = DegreeSequence.from_vector(gc, v)
            if sum(d.s) == sum(d.t) and sum(d.s) > 0:
                small.append(d)
    nv, nbad, first = _bound_sweep(small)
    out = [
        Record(
            "switching-bound:suite",
            "simple switching bound",
            _status(nbad == 0),
            measured=nbad,
            target=0,
            tolerance=0,
            detail={"nonvacuous_sequences": nv, "first": first},
        )
    ]
    nv2, nbad2, first2 = _bound_sweep(switching_sweep_sequences(seed))
    out.append(
        Record(
            "switching-bound:sparse-sweep",
            "simple switching bound",
            _status(nbad2 == 0 and nv2 > 0),
            measured=nbad2,
            target=0,
            tolerance=0,
            detail={"nonvacuous_sequences": nv2, "first": first2},
        )
    )
    return out


def check_realizability(max_side: int = 4, max_entry: int = 3, max_forbidden: int = 2) -> list[Record]:
    disagree = []
    unsound = []
    checked = sufficient_checked = guaranteed = 0
    for gc in oracle.shapes(max_side):
        vecs = list(oracle.sequences(gc, max_entry))
        for F, _ in _f_orbits(gc, max_forbidden):
            ref = oracle.brute_counts(gc, F, ())
            fs = ForbiddenSet.of(gc, _pairs(gc, F))
            for v in vecs:
                d = DegreeSequence.from_vector(gc, v)
                truth = ref.get(oracle.seq_code(gc, v), 0) > 0
                checked += 1
                if feasible_exact(d, fs) != truth:
                    disagree.append({"seq": v, "class": gc.kind.value, "forbidden": F, "truth": truth})
                if min(v) >= 1:
                    sufficient_checked += 1
                    if feasible_sufficient(d, fs) is Sufficiency.GUARANTEED:
                        guaranteed += 1
                        if not truth:
                            unsound.append({"seq": v, "class": gc.kind.value, "forbidden": F})
    return [
        Record(
            "feasible-exact-vs-enumeration",
            "flow feasibility",
            _status(not disagree),
            measured=len(disagree),
            target=0,
            tolerance=0,
            detail={"checked": checked, "first": disagree[:5]},
        ),
        Record(
            "feasible-sufficient-soundness",
            "sufficient realisability conditions",
            _status(not unsound),
            measured=len(unsound),
            target=0,
            tolerance=0,
            detail={"checked": sufficient_checked, "guaranteed": guaranteed, "first": unsound[:5]},
        ),
    ]


# recursion suite -------------------------------------------------------------------


RECURSION_CENTERS = [
    DegreeSequence.bipartite([2, 2, 2], [2, 2, 2]),
    DegreeSequence.digraph([2, 2, 2, 2], [2, 2, 2, 2]),
]


def recursion_identities(center: DegreeSequence) -> dict:
    """Apply the three operators to exact tables and compare with the exact
    values, on the balanced radius-2 and S-heavy radius-1 neighbourhoods of
    the center and of its transpose (which covers the T-side versions)."""
    out = {"edge": [0, 0, 0], "path": [0, 0, 0], "ratio": [0, 0, 0], "first": []}
    for d in (center, center.transpose()):
        gc = d.cls
        tables = ops.ExactTables(gc)
        bal = ops.NeighborhoodSpec(d, 2, Balance.BALANCED).vectors()
        heavy = ops.NeighborhoodSpec(d, 1, Balance.S_HEAVY).vectors()

        def tally(kind, got, want, applicable, key):
            row = out[kind]
            row[0] += 1
            row[1] += applicable
            if got != want:
                row[2] += 1
                if len(out["first"]) < 5:
                    out["first"].append({"kind": kind, "key": key, "got": str(got), "want": str(want)})

        for vec in bal:
            if not tables.realisable(vec):
                continue
            for a, v in ops.s_pairs(gc):
                tally("edge", ops.apply_P(tables, vec, a, v, gc), tables.p(a, v, vec), tables.edge_possible(a, v, vec), (a, v, vec))
            for a, v, b in ops.s_paths(gc):
                tally("path", ops.apply_Y(tables, vec, a, v, b, gc), tables.y(a, v, b, vec), tables.path_possible(a, v, b, vec), (a, v, b, vec))
        for vec in heavy:
            for a, b in ops.s_ratio_pairs(gc):
                if not tables.realisable(ops._lower(vec, b)):
                    continue
                tally("ratio", ops.apply_R(tables, vec, a, b, gc), tables.r(a, b, vec), tables.realisable(ops._lower(vec, a)), (a, b, vec))
    return out


def check_recursions() -> list[Record]:
    out = []
    for center in RECURSION_CENTERS:
        res = recursion_identities(center)
        bad = sum(res[k][2] for k in ("edge", "path", "ratio"))
        tag = f"{center.cls.kind.value}:{list(center.s)}:{list(center.t)}"
        out.append(
            Record(
                f"recursions:{tag}",
                "edge, path and ratio recursions",
                _status(bad == 0),
                measured=bad,
                target=0,
                tolerance=0,
                detail={k: dict(zip(("checked", "applicable", "mismatches"), res[k])) for k in ("edge", "path", "ratio")}
                | {"first": res["first"]},
            )
        )
    return out


def check_handshake() -> list[Record]:
    bad = 0
    for d in RECURSION_CENTERS + [DegreeSequence.bipartite([3, 2, 1], [2, 2, 2])]:
        for a in list(d.cls.S) + list(d.cls.T):
            if exact.handshake_sum(d, a) != d[a]:
                bad += 1
    return [Record("handshake", "degree sum of edge probabilities", _status(bad == 0), bad, 0, 0)]


# asymptotic-trend suite -----------------------------------------------------------


def trend_table(kind: str, sizes, degree: Callable[[int], int]) -> list[dict]:
    rows = []
    for n in sizes:
        k = degree(n)
        d = DegreeSequence.digraph([k] * n, [k] * n) if kind == "digraph" else DegreeSequence.bipartite([k] * n, [k] * n)
        truth = exact.count(d)
        log_est = asy.estimate_log_count(d).log_value
        rel = math.exp(log_est - math.log(truth)) - 1
        rows.append({"n": n, "degree": k, "exact": str(truth), "log_estimate": log_est, "rel_error": rel})
    return rows


def check_trend(cap: float = 0.25) -> list[Record]:
    out = []
    fams = [
        ("bipartite", (6, 8, 10, 12), lambda n: round(n / 3)),
        ("digraph", (4, 5, 6, 7), lambda n: 2),
    ]
    for kind, sizes, deg in fams:

        def run(kind=kind, sizes=sizes, deg=deg):
            rows = trend_table(kind, sizes, deg)
            errs = [abs(r["rel_error"]) for r in rows]
            mono = all(errs[i + 1] <= errs[i] for i in range(len(errs) - 1))
            ok = mono and errs[-1] < cap
            return [
                Record(
                    f"count-trend:{kind}",
                    "count formula (binomial model times correction)",
                    _status(ok),
                    measured=errs[-1],
                    target=f"< {cap} at largest size, non-increasing",
                    tolerance=cap,
                    detail={"rows": rows, "non_increasing": mono},
                )
            ]

        out += _capped(run, f"count-trend:{kind}", "count formula (binomial model times correction)")
    return out


def edgeprob_cases() -> tuple[list[DegreeSequence], list[DegreeSequence]]:
    regular = [
        DegreeSequence.bipartite([2] * 3, [2] * 3),
        DegreeSequence.bipartite([2] * 4, [2] * 4),
        DegreeSequence.bipartite([3] * 4, [2] * 6),
        DegreeSequence.bipartite([3] * 6, [3] * 6),
        DegreeSequence.bipartite([3] * 8, [3] * 8),
        DegreeSequence.bipartite([2] * 10, [4] * 5),
    ]
    near = []
    for k in (2, 3, 4):
        s = [k + 1, k - 1] + [k] * 6
        near.append(DegreeSequence.bipartite(s, s))
        near.append(DegreeSequence.bipartite(s, [k, k, k + 1, k - 1] + [k] * 4))
        near.append(ops.near_regular(8, k))
    return regular, near


def edgeprob_errors(d: DegreeSequence) -> dict:
    total = exact.count(d)
    rows = []
    for a in d.cls.S:
        for v in d.cls.neighbors(a):
            p = Fraction(exact.count(d, forced=[(a, v)]), total)
            est = asy.edge_prob_estimate(d, a, v)
            lead = asy.edge_prob_leading(d, a, v)
            rows.append((abs(est / float(p) - 1), abs(lead / float(p) - 1), abs(est - float(p))))
    arr = np.array(rows)
    return {
        "max_rel_error": float(arr[:, 0].max()),
        "max_rel_error_leading": float(arr[:, 1].max()),
        "max_abs_error": float(arr[:, 2].max()),
        "pairs_where_formula_wins": int((arr[:, 0] < arr[:, 1]).sum()),
        "pairs": len(rows),
    }


def check_edgeprob(regular_tol: float = 1e-12, near_cap: float = 0.10) -> list[Record]:
    out = []
    regular, near = edgeprob_cases()
    for d in regular:
        res = edgeprob_errors(d)
        out.append(
            Record(
                f"edgeprob-regular:{list(d.s)}:{list(d.t)}",
                "edge probability formula",
                _status(res["max_abs_error"] <= regular_tol),
                measured=res["max_abs_error"],
                target=0,
                tolerance=regular_tol,
                detail=res,
            )
        )
    for d in near:
        res = edgeprob_errors(d)
        ok = res["max_rel_error"] < near_cap and res["max_rel_error"] < res["max_rel_error_leading"]
        out.append(
            Record(
                f"edgeprob-near-regular:{list(d.s)}:{list(d.t)}",
                "edge probability formula",
                _status(ok),
                measured=res["max_rel_error"],
                target=f"< {near_cap} and below leading-term error {res['max_rel_error_leading']:.4g}",
                tolerance=near_cap,
                detail=res,
            )
        )
    return out


# operators suite --------------------------------------------------------------------


def fixpoint_run(center: DegreeSequence, tol: float = 1e-10, max_iter: int = 60, on_singular: str = "hold"):
    """Iterate from p = mu, y = mu^2 over the downset of the center."""
    gc = center.cls
    spec = ops.NeighborhoodSpec(center, 0, Balance.BALANCED, ops.Mode.DOWNSET)
    bal, heavy = ops.family(spec)
    sup = ops.Support(gc)
    mu = float(center.stats.mu)
    init = ops.ProbTables.constant(bal, heavy, gc, sup, mu, mu * mu)
    tables, report = ops.iterate_fixpoint(init, spec, tol, max_iter, on_singular=on_singular)
    truth = ops.ExactTables(gc)
    err = max(abs(tables.p(a, v, center.d) - float(truth.p(a, v, center.d))) for a, v in ops.s_pairs(gc))
    return tables, report, err


def check_fixpoint(tol: float = 1e-10, limit_tol: float = 1e-8, max_factor: float = 0.9) -> list[Record]:
    center = DegreeSequence.bipartite([3, 3, 3, 3], [3, 3, 3, 3])
    try:
        fixpoint_run(center, tol, on_singular="raise")
        strict = "no singularity"
    except ops.Singularity as exc:
        strict = f"iteration {exc.iteration}: {exc} at {exc.key}"
    _, report, err = fixpoint_run(center, tol)
    after = report.contraction[1:]
    worst = max(after, default=0.0)
    return [
        Record(
            "fixpoint:converges",
            "composite operator iteration",
            _status(report.converged),
            measured=report.deltas[-1] if report.deltas else None,
            target=tol,
            tolerance=tol,
            detail=report.as_dict() | {"strict_mode": strict, "init": "p = mu, y = mu^2", "singular_policy": "hold"},
        ),
        Record("fixpoint:limit", "composite operator fixed point", _status(err <= limit_tol), err, 0, limit_tol),
        Record(
            "fixpoint:contraction",
            "composite operator contraction",
            _status(worst <= max_factor),
            measured=worst,
            target=f"<= {max_factor} after step 1",
            tolerance=max_factor,
            detail={"factors": report.contraction},
        ),
    ]


def check_near_fixpoint(sizes=(40, 80), phi: float = 0.55) -> list[Record]:
    reps = {}
    for n in sizes:
        reps[n] = ops.near_fixpoint_report(ops.near_regular(n, n // 5), phi)
    out = []
    first, last = sizes[0], sizes[-1]
    for key in ("dev_R", "dev_P", "dev_Y"):
        vals = [getattr(reps[n], key) for n in sizes]
        mu = max(reps[n].mu for n in sizes)
        ok = all(vals[i + 1] <= vals[i] for i in range(len(vals) - 1)) and max(vals) <= mu
        out.append(
            Record(
                f"near-fixpoint:{key}",
                "closed forms as near fixed point",
                _status(ok),
                measured=dict(zip(map(str, sizes), vals)),
                target=f"non-increasing from n={first} to n={last}, at most mu",
                tolerance=mu,
                detail={str(n): reps[n].as_dict() for n in sizes},
            )
        )
    return out


# sampling suite ----------------------------------------------------------------------


AQE_EVENTS = ("sigma2_t <= 5", "max_s <= 9", "s[1] >= 4 and t[2] >= 4")


def check_sampling(seed: int = 0, count: int = 100_000, alpha: float = 1e-3) -> list[Record]:
    out = []
    for k, model in enumerate(sampling.Model):
        batch = sampling.sample(model, 10, 10, 30, count, seed, stream=k)
        for vertex in (1, 11):
            res = sampling.marginal_chisquare(batch, vertex)
            out.append(
                Record(
                    f"marginal:{model.value}:vertex{vertex}",
                    "hypergeometric degree marginal",
                    _status(res["p_value"] > alpha),
                    measured=res["p_value"],
                    target=f"p > {alpha}",
                    tolerance=alpha,
                    detail=res,
                )
            )
    batch = sampling.sample("bm", 2, 2, 2, count, seed, stream=10)
    table = sampling.support_table(batch)
    worst = max(abs(r["observed"] - r["expected"]) / r["se"] for r in table)
    out.append(
        Record("binomial-model:2x2", "conditioned binomial probabilities", _status(worst <= 3), worst, 0, 3, {"rows": table})
    )
    rej = sampling.rejection_sample(2, 2, 2, count, seed)
    rej_batch = sampling.SampleBatch(sampling.Model.BM, GraphClass.bipartite(2, 2), 2, seed, rej)
    rtable = sampling.support_table(rej_batch)
    rworst = max(abs(r["observed"] - r["expected"]) / r["se"] for r in rtable)
    out.append(Record("binomial-model:rejection", "plumbing", _status(rworst <= 3), rworst, 0, 3, {"rows": rtable}))
    for k, model in enumerate(sampling.Model):
        rep = sampling.variance_report(model, 20, 20, 100, count, seed + 100 + k)
        for name, row in rep["stats"].items():
            out.append(
                Record(
                    f"variance:{model.value}:{name}",
                    "expected degree spread",
                    _status(row["ok"]),
                    measured=row["mean"],
                    target=row["target"],
                    tolerance=row["tolerance"],
                    detail=row,
                )
            )
    z = float(-sps.norm.ppf(alpha / 2))
    rep = sampling.aqe_compare("gbip", "bm", 20, 20, 100, AQE_EVENTS, count, seed + 200, z=z)
    for row in rep["events"]:
        ok = row["ci"] is not None and not row["excludes_one"]
        out.append(
            Record(f"aqe:gbip-bm:{row['event']}", "model equivalence", _status(ok), row["ratio"], 1, row["ci"], row | {"z": z})
        )
    rep = sampling.aqe_compare("gdi", "vbm", 20, 20, 100, AQE_EVENTS, count, seed + 300, z=z)
    for row in rep["events"]:
        out.append(Record(f"aqe:gdi-vbm:{row['event']}", "model equivalence", FLAG, row["ratio"], 1, row["ci"], row | {"z": z}))
    return out


# runner -----------------------------------------------------------------------------------


SUITES: dict[str, list[tuple[str, Callable[[dict], list[Record]]]]] = {
    "oracle": [
        ("known", lambda c: check_known_values()),
        ("count", lambda c: check_count_equivalence(c["max_side"], c["max_entry"])),
        ("removal", lambda c: check_removal_identity(c["max_side"], c["max_entry"])),
        ("switching", lambda c: check_switching_bound(c["max_side"], c["max_entry"], c["seed"])),
        ("realize", lambda c: check_realizability(c["max_side"], c["max_entry"])),
    ],
    "recursion": [
        ("recursions", lambda c: check_recursions()),
        ("handshake", lambda c: check_handshake()),
    ],
    "asymptotic-trend": [
        ("trend", lambda c: check_trend()),
        ("edgeprob", lambda c: check_edgeprob()),
    ],
    "operators": [
        ("fixpoint", lambda c: check_fixpoint()),
        ("near-fixpoint", lambda c: check_near_fixpoint()),
    ],
    "sampling": [
        ("sampling", lambda c: check_sampling(c["seed"], c["count"])),
    ],
}

DEFAULT_CONFIG = {"max_side": 4, "max_entry": 3, "seed": 0, "count": 100_000}


def run_suite(name: str, config: dict | None = None) -> dict:
    """Run a named suite; the report body is deterministic for a fixed config
    (wall-clock times live under ``timing`` only)."""
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    cfg = DEFAULT_CONFIG | (config or {})
    limits = exact.default_counter().limits
    records: list[Record] = []
    timing = {}
    for label, fn in SUITES[name]:
        t0 = time.perf_counter()
        records += _capped(lambda: fn(cfg), label, "plumbing")
        timing[label] = round(time.perf_counter() - t0, 3)
    counts = {k: sum(r.status == k for r in records) for k in (PASS, FAIL, FLAG, SKIP)}
    return {
        "suite": name,
        "config": cfg,
        "environment": {
            "version": __version__,
            "seed": cfg["seed"],
            "max_memo": limits.max_memo,
            "max_ie_terms": limits.max_ie_terms,
            "rng": sampling.RNG_NAME,
            "stream_split": sampling.SPLIT_RULE,
        },
        "records": [asdict(r) for r in records],
        "summary": counts,
        "timing": timing,
    }


def exit_code(report: dict) -> int:
    s = report["summary"]
    if s[FAIL]:
        return 1
    if s[SKIP]:
        return 3
    return 0


CSV_FIELDS = ("id", "source", "status", "measured", "target", "tolerance")


def to_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("suite",) + CSV_FIELDS)
    for r in report["records"]:
        w.writerow([report["suite"]] + [_cell(r[k]) for k in CSV_FIELDS])
    return buf.getvalue()


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (dict, list, tuple)):
        return json.dumps(x, sort_keys=True, default=str)
    return str(x)


def body(report: dict) -> dict:
    """The report without wall-clock timing."""
    return {k: v for k, v in report.items() if k != "timing"}


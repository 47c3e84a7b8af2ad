"""Command-line entry point.

Exit codes: 0 success (or every check passed), 1 a check failed or a value
is undefined for the input, 2 usage or input error, 3 a resource cap was hit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import asymptotic as asy
from . import exact
from . import operators as ops
from . import sampling
from . import suites
from .model import Balance, DegreeSequence
from .realize import feasibility, feasible_sufficient, sufficient_branches
from .serialize import InputError, dumps, load_pairs, load_sequence, seq_to_obj

FORMULAS = {
    "count": "number of 0-1 matrices with row sums s, column sums t, zeros on excluded and forbidden cells, ones on forced cells",
    "edgeprob-exact": "P_av = N(d with {a,v} forced) / N(d); with --b, Y_avb = N(d with {a,v},{b,v} forced) / N(d)",
    "ratio-exact": "R_ab = N(d - e_a) / N(d - e_b)",
    "feasible": "exact: max flow on the cell grid equals the degree sum; sufficient: (m <= ell n / 9, max s <= 2 mean s, max t <= 2 mean t) or (max degree <= sqrt(m)/2 - C)",
    "estimate": "log Pr = -2 log C(|A|, m) + sum log C(n - delta, s_a) + sum log C(ell - delta, t_v) + log H; "
    "H = exp(-1/2 (1 - var s / (mean s (1-mu))) (1 - var t / (mean t (1-mu))) - delta cov(s,t) / (mean s (1-mu))); "
    "log count = log Pr + log C(|A|, m)",
    "edgeprob": "s_a t_v / (m - delta mean t) * (1 - (s_a - mean s)(t_v - mean t)/(m - delta mean t - mean t mean s) "
    "+ (s_a - mean s) var t/(mean t mean s (ell - mean t)) + (t_v - mean t) var s/(mean t mean s (n - mean s)) "
    "+ delta (t_mate(a) + s_mate(v))/(n - 1))",
    "ratio": "goal: s_a (n + 1 - delta - s_b) / (s_b (n + 1 - delta - s_a)) * exp(...) at mu(d - e_a); "
    "sparse: (s_a/s_b)(1 + ((s_a - s_b) M2 + delta (t_mate(a) - t_mate(b)) M1) / M1^2); rho: parameterised ratio form",
    "iterate": "repeat r <- R(p, y); p <- P(p, r); y <- Y(p, y) over the sequence family until the largest relative change < tol",
    "near-fixpoint": "max relative change of one operator application to the closed-form tables at d, against mu * eps^4",
    "sample": "G models: uniform m-subset of allowable pairs; B models: each part an independent uniform m-subset of its cell grid",
    "compare": "ratio of empirical event probabilities with a normal interval on the log ratio",
    "verify": "named verification suite",
}


class UsageError(Exception):
    pass


def _read(path: str) -> tuple[str, str]:
    if path == "-":
        return sys.stdin.read(), "<stdin>"
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{path}: no such file")
    return p.read_text(), path


def _seq(args) -> DegreeSequence:
    if not args.input:
        raise UsageError("--input is required")
    text, src = _read(args.input)
    return load_sequence(text, src)


def _pairs(path, d: DegreeSequence):
    if not path:
        return None
    text, src = _read(path)
    return load_pairs(text, d.cls, src)


def _frac(x: Fraction) -> dict:
    return {"num": str(x.numerator), "den": str(x.denominator), "float": float(x)}


def _vertex(d: DegreeSequence, x: int, name: str) -> int:
    if not 1 <= x <= d.cls.size:
        raise UsageError(f"--{name} {x} is outside 1..{d.cls.size}")
    return x


# subcommands -----------------------------------------------------------------------


def cmd_count(args) -> dict:
    d = _seq(args)
    F = _pairs(args.forbid, d)
    K = _pairs(args.force, d)
    forced = sorted(K.pairs) if K is not None else []
    if F is not None and set(forced) & F.pairs:
        raise UsageError("a pair is both forced and forbidden")
    return {"input": seq_to_obj(d), "count": str(exact.count(d, F, forced))}


def cmd_edgeprob_exact(args) -> dict:
    d = _seq(args)
    a, v = _vertex(d, args.a, "a"), _vertex(d, args.v, "v")
    if args.b is not None:
        b = _vertex(d, args.b, "b")
        return {"kind": "path", "a": a, "v": v, "b": b, **_frac(exact.path_prob_exact(d, a, v, b))}
    return {"kind": "edge", "a": a, "v": v, **_frac(exact.edge_prob_exact(d, a, v))}


def cmd_ratio_exact(args) -> dict:
    d = _seq(args)
    a, b = _vertex(d, args.a, "a"), _vertex(d, args.b, "b")
    return {"a": a, "b": b, **_frac(exact.ratio_exact(d, a, b))}


def cmd_feasible(args) -> dict:
    d = _seq(args)
    F = _pairs(args.forbid, d)
    if args.mode == "exact":
        ok, reason = feasibility(d, F)
        return {"mode": "exact", "feasible": ok, "reason": reason}
    try:
        branches = sufficient_branches(d, F)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    verdict = feasible_sufficient(d, F).value
    held = [k for k, v in branches.items() if v]
    reason = f"branch {' and '.join(held)} holds" if held else "neither branch holds (not a refutation)"
    return {"mode": "sufficient", "feasible": verdict, "reason": reason, "branches": branches}


def cmd_estimate(args) -> dict:
    d = _seq(args)
    params = asy.AsymParams(args.phi)
    flags = params.regime_flags(d)
    if args.what == "Htilde":
        h = asy.correction_H(d)
        return {"what": "Htilde", "value": h, "log_value": math.log(h), "error_scale": asy.main_error_scale(d, args.phi), "flags": flags}
    lv = asy.estimate_logprob(d) if args.what == "logprob" else asy.estimate_log_count(d)
    value = math.exp(lv.log_value) if lv.log_value < 700 else None
    return {"what": args.what, "value": value, "log_value": lv.log_value, "error_scale": asy.main_error_scale(d, args.phi), "flags": flags}


def cmd_edgeprob(args) -> dict:
    d = _seq(args)
    a, v = _vertex(d, args.a, "a"), _vertex(d, args.v, "v")
    value = asy.edge_prob_estimate(d, a, v)
    return {
        "a": a,
        "v": v,
        "value": value,
        "log_value": math.log(value) if value > 0 else None,
        "leading": asy.edge_prob_leading(d, a, v),
        "error_scale": asy.edge_prob_error_scale(d, args.phi),
    }


def cmd_ratio(args) -> dict:
    d = _seq(args)
    a, b = _vertex(d, args.a, "a"), _vertex(d, args.b, "b")
    if args.formula == "goal":
        value, scale = asy.goal_ratio(d, a, b), asy.main_error_scale(d, args.phi)
    elif args.formula == "sparse":
        value, scale = asy.sparse_ratio(d, a, b), asy.sparse_ratio_error_scale(d)
    else:
        value, scale = asy.rho_value(d, a, b), None
    return {
        "a": a,
        "b": b,
        "formula": args.formula,
        "value": value,
        "log_value": math.log(value) if value > 0 else None,
        "error_scale": scale,
    }


def cmd_iterate(args) -> dict:
    d = _seq(args)
    if d.balance() is not Balance.BALANCED:
        raise UsageError("iteration needs a balanced center")
    spec = ops.NeighborhoodSpec(d, args.radius, Balance.BALANCED, args.mode)
    bal, heavy = ops.family(spec)
    sup = ops.Support(d.cls)
    mu = d.stats.mu
    if args.exact:
        init = ops.ProbTables.constant(bal, heavy, d.cls, sup, mu, mu * mu, exact=True)
    else:
        init = ops.ProbTables.constant(bal, heavy, d.cls, sup, float(mu), float(mu) ** 2)
    tables, report = ops.iterate_fixpoint(init, spec, args.tol, args.max_iter, on_singular=args.on_singular)
    center = {}
    for a, v in ops.s_pairs(d.cls):
        key = (a, v, d.d)
        if key in tables.p_map:
            center[f"{a},{v}"] = float(tables.p_map[key])
    radius = args.radius if spec.mode is ops.Mode.BALL else None
    return {"center": seq_to_obj(d), "radius": radius, "mode": spec.mode.value, **report.as_dict(), "center_p": center}


def cmd_near_fixpoint(args) -> dict:
    d = _seq(args)
    return ops.near_fixpoint_report(d, args.phi).as_dict()


def cmd_sample(args) -> dict:
    batch = sampling.sample(args.model, args.ell, args.n, args.m, args.count, args.seed)
    if args.out:
        with open(args.out, "w") as fh:
            batch.write_jsonl(fh)
    else:
        buf = io.StringIO()
        batch.write_jsonl(buf)
        sys.stdout.write(buf.getvalue())
    return {"metadata": batch.metadata(), "out": args.out}


def cmd_compare(args) -> dict:
    models = args.models.split(",")
    if len(models) != 2:
        raise UsageError("--models takes two comma-separated model names")
    if not args.event:
        raise UsageError("give at least one --event")
    try:
        events = [sampling.Event(e) for e in args.event]
    except sampling.EventError as exc:
        raise UsageError(str(exc)) from None
    return sampling.aqe_compare(models[0], models[1], args.ell, args.n, args.m, events, args.count, args.seed, args.z)


def cmd_verify(args) -> dict:
    config = {"seed": args.seed}
    if args.config:
        text, src = _read(args.config)
        try:
            extra = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed JSON: {exc.msg}", src, exc.lineno) from None
        if not isinstance(extra, dict):
            raise InputError("config must be a JSON object", src, 1)
        config |= extra
    report = suites.run_suite(args.suite, config)
    if args.out:
        Path(args.out).write_text(dumps(report))
    if args.csv:
        Path(args.csv).write_text(suites.to_csv(report))
    return report


COMMANDS = {
    "count": cmd_count,
    "edgeprob-exact": cmd_edgeprob_exact,
    "ratio-exact": cmd_ratio_exact,
    "feasible": cmd_feasible,
    "estimate": cmd_estimate,
    "edgeprob": cmd_edgeprob,
    "ratio": cmd_ratio,
    "iterate": cmd_iterate,
    "near-fixpoint": cmd_near_fixpoint,
    "sample": cmd_sample,
    "compare": cmd_compare,
    "verify": cmd_verify,
}


# parser ----------------------------------------------------------------------------


def _globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    def default(x):
        return argparse.SUPPRESS if suppress else x

    p.add_argument("--seed", type=int, default=default(0), help="random seed")
    p.add_argument("--max-memo", type=int, default=default(10**7), help="cap on counting memo entries")
    p.add_argument(
        "--max-ie-terms",
        type=int,
        default=default(2**20),
        help="cap on 2^(number of excluded cells) a single count may handle",
    )
    p.add_argument("--format", choices=("json", "csv"), default=default("json"))
    p.add_argument("--show-formula", action="store_true", default=default(False), help="include the formula evaluated")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="degenum", description=__doc__.splitlines()[0], allow_abbrev=False)
    _globals(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    _globals(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[common], allow_abbrev=False)

    p = add("count", "exact number of realisations")
    p.add_argument("--input", required=True)
    p.add_argument("--forbid")
    p.add_argument("--force")

    p = add("edgeprob-exact", "exact edge (or path) probability")
    p.add_argument("--input", required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--b", type=int)

    p = add("ratio-exact", "exact ratio N(d - e_a) / N(d - e_b)")
    p.add_argument("--input", required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)

    p = add("feasible", "realisability test")
    p.add_argument("--input", required=True)
    p.add_argument("--forbid")
    p.add_argument("--mode", choices=("exact", "sufficient"), default="exact")

    p = add("estimate", "closed-form probability or count estimate")
    p.add_argument("--input", required=True)
    p.add_argument("--what", choices=("logprob", "logcount", "Htilde"), default="logcount")
    p.add_argument("--phi", type=float, default=0.55)

    p = add("edgeprob", "closed-form edge probability")
    p.add_argument("--input", required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--phi", type=float, default=0.55)

    p = add("ratio", "closed-form ratio")
    p.add_argument("--input", required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--formula", choices=("goal", "sparse", "rho"), default="goal")
    p.add_argument("--phi", type=float, default=0.55)

    p = add("iterate", "fixed-point iteration of the composite operator")
    p.add_argument("--input", required=True)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--mode", choices=("ball", "downset"), default="ball")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--exact", action="store_true", help="rational arithmetic")
    p.add_argument("--on-singular", choices=("raise", "hold"), default="raise")

    p = add("near-fixpoint", "operator deviations of the closed forms")
    p.add_argument("--input", required=True)
    p.add_argument("--phi", type=float, default=0.55)

    p = add("sample", "draw degree sequences from a random model")
    p.add_argument("--model", choices=[m.value for m in sampling.Model], required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--out", help="JSON-lines output file (default: stdout)")

    p = add("compare", "compare event probabilities under two models")
    p.add_argument("--models", required=True, help="two models, e.g. gbip,bm")
    p.add_argument("--event", action="append", help="event expression (repeatable)")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--count", type=int, default=100_000)
    p.add_argument("--z", type=float, default=1.96, help="normal quantile of the interval")

    p = add("verify", "run a verification suite")
    p.add_argument("--suite", choices=sorted(suites.SUITES), required=True)
    p.add_argument("--config", help="JSON object overriding suite settings")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--csv", help="write the CSV projection here")
    return parser


# output ----------------------------------------------------------------------------


def _csv(result: dict) -> str:
    if "records" in result:
        return suites.to_csv(result)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    rows = result.get("events") if isinstance(result.get("events"), list) else None
    if rows:
        keys = list(rows[0])
        w.writerow(keys)
        for r in rows:
            w.writerow([suites._cell(r[k]) for k in keys])
        return buf.getvalue()
    keys = list(result)
    w.writerow(keys)
    w.writerow([suites._cell(result[k]) for k in keys])
    return buf.getvalue()


def _emit(result: dict, fmt: str) -> None:
    sys.stdout.write(_csv(result) if fmt == "csv" else dumps(result))


def _error(kind: str, message: str, fmt: str) -> None:
    sys.stderr.write(f"degenum: {kind}: {message}\n")
    if fmt == "json":
        sys.stdout.write(dumps({"error": kind, "message": message}))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    exact.set_limits(exact.Limits(args.max_memo, args.max_ie_terms))
    fmt = args.format
    try:
        result = COMMANDS[args.command](args)
    except (InputError, UsageError) as exc:
        _error("input", str(exc), fmt)
        return 2
    except exact.TooLarge as exc:
        _error("resource cap", str(exc), fmt)
        return 3
    except (exact.UndefinedProbability, asy.Singular, ops.Singularity, ops.DomainError) as exc:
        _error("undefined", str(exc), fmt)
        return 1
    except ValueError as exc:
        _error("input", str(exc), fmt)
        return 2
    if args.show_formula:
        result = {"formula": FORMULAS[args.command], **result}
    if args.command == "sample" and not args.out:
        sys.stderr.write(dumps(result))
        return 0
    _emit(result, fmt)
    if args.command == "verify":
        return suites.exit_code(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())

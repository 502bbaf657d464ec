"""Command-line interface. Every command prints one JSON object on stdout.

Exit codes: 0 success, 1 usage error, 2 data error, 3 infeasible or over a
size limit. Diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import aggregate, cluster, oracle, setcons, topk
from .genfunc import rank_profiles
from .io import DataError, Dataset, load_dataset
from .model import TooManyWorlds, TupleAlternative, enumerate_worlds, marginals, validate
from .solvers import InfeasibleError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_LIMIT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _round(obj):
    if isinstance(obj, (float, np.floating)):
        x = float(format(float(obj), ".12g"))
        return 0.0 if x == 0 else x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def render(result: dict) -> str:
    return json.dumps(_round(result), ensure_ascii=False)


def world_limit() -> int:
    raw = os.environ.get("CONSENSUSDB_WORLD_LIMIT")
    return int(raw) if raw else oracle.DEFAULT_WORLD_LIMIT


def _alts(leaves) -> list:
    return [[a.key, a.value] for a in sorted(leaves, key=TupleAlternative.sort_key)]


def _result(answer, expected=None, method="formula", diagnostics=None, ds: Dataset | None = None) -> dict:
    diag = dict(diagnostics or {})
    if ds is not None:
        diag["input"] = {"format": ds.format, "sha256": ds.checksum}
    return {"answer": answer, "expected_distance": expected, "method": method, "diagnostics": diag}


def _need_tree(ds: Dataset):
    if ds.tree is None:
        raise DataError("this command needs an and/xor tree or BID table, not a group matrix")
    return ds.tree


def cmd_validate(args):
    ds = load_dataset(args.file, check=False)
    if ds.tree is None:
        return _result({"valid": True, "violations": []}, method="check", ds=ds), EXIT_OK
    report = validate(ds.tree)
    answer = {
        "valid": report.valid,
        "violations": [{"path": v.path, "kind": v.kind, "message": v.message} for v in report.violations],
    }
    for v in report.violations:
        print(f"{v.path}: {v.kind}: {v.message}", file=sys.stderr)
    return _result(answer, method="check", ds=ds), EXIT_OK if report.valid else EXIT_DATA


def cmd_worlds(args):
    ds = load_dataset(args.file)
    limit = args.limit if args.limit is not None else world_limit()
    worlds = enumerate_worlds(_need_tree(ds), limit)
    answer = [{"leaves": _alts(w.leaves), "prob": w.prob} for w in worlds]
    return _result(answer, method="enumeration", diagnostics={"count": len(worlds)}, ds=ds), EXIT_OK


def cmd_marginals(args):
    ds = load_dataset(args.file)
    answer = [{"key": a.key, "value": a.value, "prob": p} for a, p in marginals(_need_tree(ds)).items()]
    return _result(answer, method="generating-function", ds=ds), EXIT_OK


def cmd_set(args):
    ds = load_dataset(args.file)
    tree = _need_tree(ds)
    fn = {
        ("symdiff", "mean"): setcons.mean_world_symdiff,
        ("symdiff", "median"): setcons.median_world_symdiff,
        ("jaccard", "mean"): setcons.mean_world_jaccard_independent,
        ("jaccard", "median"): setcons.median_world_jaccard_bid,
    }[(args.metric, args.kind)]
    ans = fn(tree)
    return _result(_alts(ans.leaves), ans.expected_distance, "formula", ans.diagnostics, ds), EXIT_OK


def cmd_topk(args):
    ds = load_dataset(args.file)
    tree = _need_tree(ds)
    if args.k < 1:
        raise UsageError("-k must be at least 1")
    if args.kind == "median" and args.metric != "symdiff":
        raise UsageError("median Top-k answers are available for --metric symdiff only")
    if args.approx and args.metric != "intersection":
        raise UsageError("--approx upsilon-h applies to --metric intersection")
    profiles = rank_profiles(tree, args.k)
    if args.metric == "symdiff":
        fn = topk.median_topk_symdiff if args.kind == "median" else topk.mean_topk_symdiff
        ans = fn(tree, args.k, profiles)
    elif args.metric == "intersection":
        fn = topk.approx_topk_intersection_upsilonH if args.approx else topk.mean_topk_intersection
        ans = fn(tree, args.k, profiles)
    elif args.metric == "footrule":
        ans = topk.mean_topk_footrule(tree, args.k, profiles)
    else:
        ans = topk.approx_topk_kendall(tree, args.k, args.trials, args.seed,
                                       samples=args.samples, profiles=profiles)
    diag = dict(ans.diagnostics)
    if args.metric == "kendall":
        diag["seed"] = args.seed
        diag["trials"] = args.trials
    return _result(ans.items, ans.expected_distance, ans.method, diag, ds), EXIT_OK


def _group_matrix(ds: Dataset):
    if ds.groups is not None:
        return ds.groups
    try:
        return aggregate.group_matrix_from_tree(ds.tree)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def cmd_groupby(args):
    ds = load_dataset(args.file)
    gm = _group_matrix(ds)
    cv = aggregate.mean_counts(gm) if args.kind == "mean" else aggregate.median_counts(gm)
    diag = {}
    if args.kind == "median":
        diag["mean"] = aggregate.mean_counts(gm).as_dict()
    return _result(cv.as_dict(), aggregate.expected_sq_distance(gm, cv.r), "formula", diag, ds), EXIT_OK


def cmd_cluster(args):
    ds = load_dataset(args.file)
    c, cost = cluster.consensus_cluster(_need_tree(ds), args.trials, args.seed)
    diag = {"seed": args.seed, "trials": args.trials}
    return _result(c.clusters, cost, "formula", diag, ds), EXIT_OK


def cmd_eval(args):
    ds = load_dataset(args.file)
    try:
        answer = json.loads(args.answer)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--answer is not valid JSON: {exc.msg}") from None

    if args.query == "groupby":
        if args.metric != "sqdist":
            raise UsageError("groupby queries use --metric sqdist")
        gm = _group_matrix(ds)
        if isinstance(answer, dict):
            missing = set(gm.groups) - set(answer)
            if missing:
                raise UsageError(f"answer lacks groups {sorted(missing)}")
            answer = [answer[g] for g in gm.groups]
        value = aggregate.expected_sq_distance(gm, answer)
        return _result(answer, value, "formula", ds=ds), EXIT_OK

    tree = _need_tree(ds)
    if args.query not in oracle.QUERY_METRICS:
        raise UsageError(f"unknown query {args.query!r}")
    if args.metric not in oracle.QUERY_METRICS[args.query]:
        raise UsageError(f"metric {args.metric!r} does not apply to {args.query!r} queries")
    k = None
    if args.query == "set":
        try:
            answer = frozenset(TupleAlternative(str(key), value) for key, value in answer)
        except (TypeError, ValueError):
            raise UsageError("set answers are lists of [key, value] pairs") from None
    elif args.query == "topk":
        if not isinstance(answer, list) or not all(isinstance(t, str) for t in answer):
            raise UsageError("Top-k answers are lists of keys")
        k = args.k or len(answer)
    else:
        if not isinstance(answer, list) or not all(isinstance(c, list) for c in answer):
            raise UsageError("cluster answers are lists of key lists")
        flat = [t for c in answer for t in c]
        if sorted(flat) != tree.keys():
            raise UsageError("cluster answer must partition exactly the tree's keys")
    report = oracle.expected_distance(tree, answer, args.query, args.metric, k=k,
                                      world_limit=world_limit(), samples=args.samples, seed=args.seed)
    diag = {}
    if report.method == "montecarlo":
        diag = {"samples": report.sample_count, "seed": report.seed, "ci95_halfwidth": report.ci_halfwidth}
    shown = _alts(answer) if args.query == "set" else answer
    return _result(shown, report.value, report.method, diag, ds), EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="consensusdb", description="Consensus answers over probabilistic and/xor trees.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", help="check the probability and key constraints")
    s.add_argument("file")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("worlds", help="enumerate possible worlds")
    s.add_argument("file")
    s.add_argument("--limit", type=int)
    s.set_defaults(func=cmd_worlds)

    s = sub.add_parser("marginals", help="presence probability of every alternative")
    s.add_argument("file")
    s.set_defaults(func=cmd_marginals)

    s = sub.add_parser("set-consensus", help="mean/median world")
    s.add_argument("file")
    s.add_argument("--metric", choices=["symdiff", "jaccard"], required=True)
    s.add_argument("--kind", choices=["mean", "median"], required=True)
    s.set_defaults(func=cmd_set)

    s = sub.add_parser("topk", help="consensus Top-k answer")
    s.add_argument("file")
    s.add_argument("-k", type=int, required=True)
    s.add_argument("--metric", choices=topk.METRICS, required=True)
    s.add_argument("--kind", choices=["mean", "median"], required=True)
    s.add_argument("--approx", choices=["upsilon-h"])
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--samples", type=int, default=oracle.DEFAULT_SAMPLES)
    s.set_defaults(func=cmd_topk)

    s = sub.add_parser("groupby", help="consensus group-by count vector")
    s.add_argument("file")
    s.add_argument("--kind", choices=["mean", "median"], required=True)
    s.set_defaults(func=cmd_groupby)

    s = sub.add_parser("cluster", help="consensus clustering by value")
    s.add_argument("file")
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_cluster)

    s = sub.add_parser("eval", help="expected distance of a given answer")
    s.add_argument("file")
    s.add_argument("--query", choices=["set", "topk", "groupby", "cluster"], required=True)
    s.add_argument("--metric", required=True)
    s.add_argument("--answer", required=True, help="answer as JSON")
    s.add_argument("-k", type=int)
    s.add_argument("--samples", type=int, default=oracle.DEFAULT_SAMPLES)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_eval)
    return p


def run_cli(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        result, code = args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TooManyWorlds, oracle.SpaceTooLarge, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (DataError, ValueError, KeyError, TypeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(render(result), file=stdout)
    return code


def main():  # pragma: no cover - console entry point
    sys.exit(run_cli())


if __name__ == "__main__":  # pragma: no cover
    main()

"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Each criterion runs its full instance count against an independent
brute-force oracle and must also finish inside its time budget.
"""
import json
import math
import random
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from consensusdb.aggregate import GroupMatrix, expected_sq_distance, median_counts
from consensusdb.cluster import Clustering, clustering_cost, consensus_cluster, pairwise_weights
from consensusdb.genfunc import evaluate, harmonic, rank_profile, rank_profiles
from consensusdb.io import load_dataset
from consensusdb.model import TupleAlternative, enumerate_worlds, ranks_above
from consensusdb.oracle import (
    all_values,
    cluster_distance,
    cluster_optimum_exhaustive,
    cocluster_enum,
    count_distribution,
    median_counts_exhaustive,
    nearest_realizable,
    set_distance,
    world_answers,
    world_clustering,
)
from consensusdb.setcons import expected_jaccard, mean_world_jaccard_independent, mean_world_symdiff
from consensusdb.topk import (
    approx_topk_intersection_upsilonH,
    approx_topk_kendall,
    intersection_score,
    mean_topk_footrule,
    mean_topk_intersection,
    mean_topk_symdiff,
    median_topk_symdiff,
)

from conftest import random_bid, random_independent, random_tree
from test_aggregate import random_matrix
from test_genfunc import brute_coefficients

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
TOL = 1e-9


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def run(number, title, budget):
        start = time.perf_counter()
        failure = None
        try:
            yield
        except Exception as exc:
            failure = exc
        elapsed = time.perf_counter() - start
        ok = failure is None and elapsed < budget
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {title} [{elapsed:.2f}s / {budget}s]")
        if failure is not None:
            raise failure
        assert elapsed < budget, f"criterion {number} took {elapsed:.2f}s, budget {budget}s"

    return run


def argmin_set(values):
    best = min(v for _, v in values)
    return [c for c, v in values if v <= best + TOL], best


def as_key(answer):
    return tuple(answer) if isinstance(answer, list) else answer


def test_criterion_1_worked_example(criterion):
    with criterion(1, "worked example worlds and rank coefficient", 1.0):
        tree = load_dataset(DATA / "three_worlds.json").tree
        A = TupleAlternative
        got = {w.leaves: w.prob for w in enumerate_worlds(tree)}
        expected = {
            frozenset([A("t3", 6), A("t2", 5), A("t1", 1)]): 0.3,
            frozenset([A("t3", 9), A("t1", 7), A("t4", 0)]): 0.3,
            frozenset([A("t3", 8), A("t4", 4), A("t5", 3)]): 0.4,
        }
        assert set(got) == set(expected)
        for w, p in expected.items():
            assert got[w] == pytest.approx(p, abs=1e-12)
        # Pr(r((t3, 6)) = 1): (t3, 6) marked y, every alternative ranked above it marked x
        target = A("t3", 6)
        poly = evaluate(
            tree,
            lambda a: 1 if a == target else (0 if a.key != target.key and ranks_above(a, target) else None),
            (1, 1),
        )
        assert poly.coefficient(0, 1) == pytest.approx(0.3, abs=1e-15)
        assert rank_profile(tree, "t3", 1).dist[0] == pytest.approx(1.0, abs=1e-15)


def test_criterion_2_generating_function(criterion):
    with criterion(2, "coefficients match enumeration on 200 trees", 30.0):
        rng = random.Random(2002)
        kinds = set()
        for _ in range(200):
            tree = random_tree(rng, max_leaves=12)
            nvars = rng.randint(1, 3)
            bounds = tuple(rng.randint(1, 5) for _ in range(nvars))
            table = {alt: rng.choice([None] + list(range(nvars))) for alt in tree.alternatives()}
            got = evaluate(tree, table, bounds).coeffs
            want = brute_coefficients(tree, table.get, bounds)
            assert np.max(np.abs(got - want)) <= TOL
            kinds.add(type(tree.root).__name__)
        assert {"AndNode", "OrNode"} <= kinds


def test_criterion_3_set_consensus(criterion):
    with criterion(3, "mean worlds are exhaustive argmins; expected Jaccard exact", 60.0):
        rng = random.Random(3003)
        for _ in range(100):
            tree = random_tree(rng, max_leaves=10)
            best, value = argmin_set(all_values(tree, "set", "symdiff"))
            ans = mean_world_symdiff(tree)
            assert ans.leaves in best
            assert abs(ans.expected_distance - value) <= TOL

            W = frozenset(a for a in tree.alternatives() if rng.random() < 0.5)
            brute = sum(w.prob * set_distance(W, w.leaves, "jaccard") for w in enumerate_worlds(tree))
            assert abs(expected_jaccard(tree, W) - brute) <= TOL

        for _ in range(100):
            tree = random_independent(rng, rng.randint(1, 10))
            best, value = argmin_set(all_values(tree, "set", "jaccard"))
            ans = mean_world_jaccard_independent(tree)
            assert ans.leaves in best
            assert abs(ans.expected_distance - value) <= TOL


def topk_instances(seed, count=50):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        if rng.random() < 0.5:
            tree = random_bid(rng, rng.randint(3, 7), max_alts=2)
        else:
            tree = random_tree(rng, max_leaves=10)
        if len(tree.keys()) > 7:
            continue
        k = rng.choice([1, 2, 3])
        if len(tree.keys()) < k:
            continue
        out.append((tree, k))
    return out


INSTANCES_4 = topk_instances(4004)


def test_criterion_4_topk_optimal(criterion):
    with criterion(4, "Top-k solvers equal exhaustive argmins on 50 instances", 120.0):
        for tree, k in INSTANCES_4:
            profiles = rank_profiles(tree, k)
            for solver, metric in (
                (mean_topk_symdiff, "symdiff"),
                (mean_topk_intersection, "intersection"),
                (mean_topk_footrule, "footrule"),
            ):
                best, value = argmin_set(all_values(tree, "topk", metric, k=k))
                ans = solver(tree, k, profiles)
                assert ans.items in best, (metric, ans.items, best)
                assert abs(ans.expected_distance - value) <= TOL


def test_criterion_5_median_topk(criterion):
    with criterion(5, "median Top-k is a world's answer with maximal sum Pr(r<=k)", 60.0):
        rng = random.Random(5005)
        done = 0
        while done < 50:
            tree = random_tree(rng, max_leaves=12)
            k = rng.randint(1, 4)
            if len(tree.keys()) < k:
                continue
            profiles = rank_profiles(tree, k)
            ans = median_topk_symdiff(tree, k, profiles)
            answers = [a for a, _ in world_answers(tree, "topk", k)]
            score = lambda tau: sum(profiles[t].upsilon1 for t in tau)
            assert ans.items in answers
            assert score(ans.items) >= max(score(a) for a in answers) - TOL
            done += 1


def test_criterion_6_approximations(criterion):
    with criterion(6, "harmonic bound and Kendall factor two", 120.0):
        for tree, k in INSTANCES_4:
            profiles = rank_profiles(tree, k)
            approx = approx_topk_intersection_upsilonH(tree, k, profiles)
            opt = mean_topk_intersection(tree, k, profiles)
            assert intersection_score(profiles, approx.items) >= \
                intersection_score(profiles, opt.items) / harmonic(k) - TOL

        rng = random.Random(6006)
        checked = 0
        while checked < 50:
            tree = random_tree(rng, max_leaves=10) if rng.random() < 0.7 else random_bid(rng, rng.randint(2, 4))
            k = rng.choice([1, 2, 3])
            if len(tree.keys()) < k or len(enumerate_worlds(tree)) > 10:
                continue
            ans = approx_topk_kendall(tree, k, trials=20, seed=0)
            _, opt = argmin_set(all_values(tree, "topk", "kendall", k=k))
            assert ans.method == "enumeration"
            assert ans.expected_distance <= 2 * opt + TOL
            checked += 1


def test_criterion_7_aggregates(criterion):
    with criterion(7, "median counts nearest realizable, rounding, 4-approximation", 60.0):
        for seed in range(100):
            P = random_matrix(7000 + seed, n_max=10, m_max=4)
            gm = GroupMatrix(P, [f"g{j}" for j in range(P.shape[1])])
            r = median_counts(gm).r
            mean = P.sum(axis=0)
            nearest, gap = nearest_realizable(P)
            assert tuple(r) in count_distribution(P)
            assert abs(float(np.sum((r - mean) ** 2)) - gap) <= TOL
            for rj, mj in zip(r, mean):
                assert rj in (math.floor(mj + TOL), math.ceil(mj - TOL))
            _, best = median_counts_exhaustive(P)
            assert expected_sq_distance(gm, r) <= 4 * best + TOL


def test_criterion_8_clustering(criterion):
    labels = ["a", "b", "c"]
    with criterion(8, "co-cluster weights, linear objective, pivot within factor two", 120.0):
        rng = random.Random(8008)
        for _ in range(50):
            tree = random_tree(rng, max_leaves=12, labels=labels)
            keys, w = pairwise_weights(tree)
            _, w_enum = cocluster_enum(tree)
            assert np.max(np.abs(w - w_enum)) <= TOL

            groups = {}
            for t in keys:
                groups.setdefault(rng.randint(0, 3), []).append(t)
            c = Clustering(list(groups.values()))
            answer = [frozenset(x) for x in c.clusters]
            brute = sum(v.prob * cluster_distance(answer, world_clustering(keys, v.leaves))
                        for v in enumerate_worlds(tree))
            assert abs(clustering_cost(keys, w, c) - brute) <= TOL

        done = 0
        while done < 50:
            if rng.random() < 0.5:
                tree = random_bid(rng, rng.randint(1, 8), max_alts=3, labels=labels)
            else:
                tree = random_tree(rng, max_leaves=12, labels=labels)
            if len(tree.keys()) > 8:
                continue
            _, cost = consensus_cluster(tree, trials=20, seed=0)
            _, opt = cluster_optimum_exhaustive(tree)
            assert cost <= 2 * opt + TOL
            done += 1


CLI_RUNS = [
    ["validate", "data/three_worlds.json"],
    ["worlds", "data/three_worlds.json"],
    ["marginals", "data/bid.csv"],
    ["set-consensus", "data/three_worlds.json", "--metric", "symdiff", "--kind", "median"],
    ["set-consensus", "data/bid.csv", "--metric", "jaccard", "--kind", "median"],
    ["topk", "data/three_worlds.json", "-k", "2", "--metric", "symdiff", "--kind", "median"],
    ["topk", "data/bid.csv", "-k", "2", "--metric", "intersection", "--kind", "mean", "--approx", "upsilon-h"],
    ["topk", "data/bid.csv", "-k", "3", "--metric", "footrule", "--kind", "mean"],
    ["topk", "data/bid.csv", "-k", "2", "--metric", "kendall", "--kind", "mean", "--seed", "7"],
    ["groupby", "data/groups.csv", "--kind", "median"],
    ["cluster", "data/labels.csv", "--seed", "11"],
    ["eval", "data/bid.csv", "--query", "topk", "--metric", "kendall", "--answer", '["t1","t2"]'],
]


def test_criterion_9_cli_determinism(criterion):
    with criterion(9, "repeated CLI runs give byte-identical JSON", 120.0):
        for argv in CLI_RUNS:
            cmd = [sys.executable, "-m", "consensusdb", *argv]
            first = subprocess.run(cmd, cwd=ROOT, capture_output=True)
            second = subprocess.run(cmd, cwd=ROOT, capture_output=True)
            assert first.returncode == 0, (argv, first.stderr)
            json.loads(first.stdout)
            assert first.stdout == second.stdout, argv

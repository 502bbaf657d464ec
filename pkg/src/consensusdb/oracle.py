"""Brute-force ground truth over possible worlds.

Expected distances are computed straight from the definition, summing over
enumerated worlds, or estimated by sampling when enumeration is out of
reach. Exhaustive search over answer spaces backs the optimality tests.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .model import AndXorTree, TooManyWorlds, enumerate_worlds, sample_worlds
from .topk import dist_topk, top_k_of

QUERY_METRICS = {
    "set": ("symdiff", "jaccard"),
    "topk": ("symdiff", "intersection", "footrule", "kendall"),
    "cluster": ("pairs",),
}

DEFAULT_WORLD_LIMIT = 50_000
DEFAULT_SAMPLES = 100_000
SPACE_LIMIT = 200_000


class SpaceTooLarge(RuntimeError):
    def __init__(self, size: int, limit: int):
        super().__init__(f"answer space has {size} candidates (limit {limit})")
        self.size = size
        self.limit = limit


@dataclass
class OracleReport:
    answer: Any
    value: float
    method: str
    sample_count: int = 0
    seed: int | None = None
    ci_halfwidth: float = 0.0
    optimum: Any = None
    optimum_value: float | None = None


def set_distance(a, b, metric: str) -> float:
    a, b = frozenset(a), frozenset(b)
    diff = len(a ^ b)
    if metric == "symdiff":
        return float(diff)
    if metric == "jaccard":
        union = len(a | b)
        return 0.0 if union == 0 else diff / union
    raise ValueError(f"unknown set metric {metric!r}")


def world_clustering(keys, leaves) -> list[frozenset]:
    """Partition of ``keys`` by value; absent keys share one extra cluster."""
    groups: dict = {}
    present = set()
    for alt in leaves:
        groups.setdefault(("value", alt.value), set()).add(alt.key)
        present.add(alt.key)
    absent = set(keys) - present
    if absent:
        groups[("absent",)] = absent
    return [frozenset(g) for g in groups.values()]


def _pair_labels(clusters) -> dict:
    return {t: i for i, c in enumerate(clusters) for t in c}


def cluster_distance(a, b) -> float:
    """Unordered pairs together in one clustering and apart in the other."""
    la, lb = _pair_labels(a), _pair_labels(b)
    keys = sorted(la)
    count = 0
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            x, y = keys[i], keys[j]
            count += (la[x] == la[y]) != (lb[x] == lb[y])
    return float(count)


def _answer_fn(tree: AndXorTree, query: str, k: int | None) -> Callable:
    if query == "set":
        return frozenset
    if query == "topk":
        return lambda leaves: top_k_of(leaves, k)
    if query == "cluster":
        keys = tree.keys()
        return lambda leaves: world_clustering(keys, leaves)
    raise ValueError(f"unknown query kind {query!r}")


def _distance_fn(query: str, metric: str, k: int | None) -> Callable:
    if metric not in QUERY_METRICS.get(query, ()):
        raise ValueError(f"metric {metric!r} does not apply to {query!r} queries")
    if query == "set":
        return lambda a, b: set_distance(a, b, metric)
    if query == "topk":
        return lambda a, b: dist_topk(a, b, metric, k)
    return cluster_distance


def world_answers(tree: AndXorTree, query: str, k: int | None = None, limit: int = DEFAULT_WORLD_LIMIT):
    """[(answer, probability)] with equal answers merged."""
    fn = _answer_fn(tree, query, k)
    merged: dict = {}
    for w in enumerate_worlds(tree, limit):
        ans = fn(w.leaves)
        key = _hashable(ans)
        if key in merged:
            merged[key] = (merged[key][0], merged[key][1] + w.prob)
        else:
            merged[key] = (ans, w.prob)
    return list(merged.values())


def _hashable(ans):
    if isinstance(ans, list) and ans and isinstance(ans[0], frozenset):
        return frozenset(ans)
    if isinstance(ans, list):
        return tuple(ans)
    return ans


def expected_distance(
    tree: AndXorTree,
    answer,
    query: str,
    metric: str,
    k: int | None = None,
    world_limit: int = DEFAULT_WORLD_LIMIT,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> OracleReport:
    """E[d(answer, answer(pw))] by enumeration, or Monte Carlo past the limit."""
    if query == "topk" and k is None:
        k = len(answer)
    dist = _distance_fn(query, metric, k)
    if query == "cluster":
        answer = [frozenset(c) for c in answer]
    fn = _answer_fn(tree, query, k)
    try:
        worlds = world_answers(tree, query, k, world_limit)
    except TooManyWorlds:
        values = np.array([dist(answer, fn(leaves)) for leaves in sample_worlds(tree, samples, seed)])
        half = 1.96 * values.std(ddof=1) / math.sqrt(len(values)) if len(values) > 1 else float("inf")
        return OracleReport(answer, float(values.mean()), "montecarlo", len(values), seed, float(half))
    value = sum(p * dist(answer, ans) for ans, p in worlds)
    return OracleReport(answer, float(value), "enumeration")


def _candidates(tree: AndXorTree, query: str, space: str, k: int | None, limit: int):
    if space == "median":
        return [ans for ans, _ in world_answers(tree, query, k)]
    if query == "set":
        alts = tree.alternatives()
        size = 2 ** len(alts)
        if size > limit:
            raise SpaceTooLarge(size, limit)
        return [frozenset(c) for r in range(len(alts) + 1) for c in itertools.combinations(alts, r)]
    if query == "topk":
        keys = tree.keys()
        size = math.perm(len(keys), k)
        if size > limit:
            raise SpaceTooLarge(size, limit)
        return [list(p) for p in itertools.permutations(keys, k)]
    if query == "cluster":
        keys = tree.keys()
        size = bell_number(len(keys))
        if size > limit:
            raise SpaceTooLarge(size, limit)
        return list(set_partitions(keys))
    raise ValueError(f"unknown query kind {query!r}")


def exhaustive_optimum(
    tree: AndXorTree,
    query: str,
    metric: str,
    space: str = "mean",
    k: int | None = None,
    limit: int = SPACE_LIMIT,
) -> OracleReport:
    """Argmin of the exact expected distance over a whole answer space.

    Ties keep the first candidate in enumeration order.
    """
    if space not in ("mean", "median"):
        raise ValueError("answer space is 'mean' or 'median'")
    best, best_val = None, float("inf")
    for cand, val in all_values(tree, query, metric, space, k, limit):
        if val < best_val - 1e-12:
            best, best_val = cand, val
    return OracleReport(best, best_val, "enumeration", optimum=best, optimum_value=best_val)


def _set_space_values(tree: AndXorTree, metric: str, limit: int) -> tuple[list, np.ndarray]:
    """Every subset of alternatives scored at once, worlds and subsets as bitmasks."""
    alts = tree.alternatives()
    size = 2 ** len(alts)
    if size > limit:
        raise SpaceTooLarge(size, limit)
    bit = {a: 1 << i for i, a in enumerate(alts)}
    worlds = enumerate_worlds(tree)
    wmask = np.array([sum(bit[a] for a in w.leaves) for w in worlds], dtype=np.int64)
    wprob = np.array([w.prob for w in worlds])
    cands = np.arange(size, dtype=np.int64)
    values = np.empty(size)
    for start in range(0, size, 4096):
        block = cands[start:start + 4096, None]
        diff = _popcount(block ^ wmask[None, :])
        if metric == "symdiff":
            d = diff.astype(float)
        else:
            union = _popcount(block | wmask[None, :])
            d = np.divide(diff, union, out=np.zeros(diff.shape), where=union > 0)
        values[start:start + 4096] = d @ wprob
    subsets = [frozenset(a for a in alts if m & bit[a]) for m in range(size)]
    return subsets, values


def _popcount(x: np.ndarray) -> np.ndarray:
    count = np.zeros(x.shape, dtype=np.int64)
    while np.any(x):
        count += x & 1
        x = x >> 1
    return count


def all_values(tree: AndXorTree, query: str, metric: str, space: str = "mean", k: int | None = None,
               limit: int = SPACE_LIMIT) -> list:
    """[(candidate, expected distance)] for every candidate in the space."""
    if query == "set" and space == "mean":
        _distance_fn(query, metric, k)
        subsets, values = _set_space_values(tree, metric, limit)
        return list(zip(subsets, values.tolist()))
    dist = _distance_fn(query, metric, k)
    worlds = world_answers(tree, query, k)
    return [(c, sum(p * dist(c, ans) for ans, p in worlds)) for c in _candidates(tree, query, space, k, limit)]


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [part[i] | {first}] + part[i + 1:]
        yield [frozenset([first])] + part


def cocluster_enum(tree: AndXorTree, limit: int = DEFAULT_WORLD_LIMIT) -> tuple[list[str], np.ndarray]:
    """Pairwise co-cluster probabilities summed world by world."""
    keys = tree.keys()
    index = {t: a for a, t in enumerate(keys)}
    w = np.zeros((len(keys), len(keys)))
    for clusters, prob in world_answers(tree, "cluster", limit=limit):
        label = np.empty(len(keys), dtype=int)
        for i, c in enumerate(clusters):
            label[[index[t] for t in c]] = i
        w += prob * (label[:, None] == label[None, :])
    return keys, w


def cluster_optimum_exhaustive(tree: AndXorTree, limit: int = SPACE_LIMIT) -> tuple[list, float]:
    """Best partition by exact expected pair disagreements.

    By linearity the expectation splits into one term per pair, so every
    partition is scored against enumerated co-cluster frequencies.
    """
    keys, w = cocluster_enum(tree)
    n = len(keys)
    if bell_number(n) > limit:
        raise SpaceTooLarge(bell_number(n), limit)
    a, b = np.triu_indices(n, 1)
    best, best_val = None, float("inf")
    for part in set_partitions(keys):
        label = np.empty(n, dtype=int)
        for i, c in enumerate(part):
            label[[keys.index(t) for t in c]] = i
        same = label[a] == label[b]
        val = float(np.sum(np.where(same, 1.0 - w[a, b], w[a, b])))
        if val < best_val - 1e-12:
            best, best_val = part, val
    return best, best_val


# group-by counts over independent tuples, straight from the matrix


def group_assignments(P: np.ndarray):
    """Yield (group index per tuple, probability) for every positive assignment."""
    support = [np.nonzero(row > 0)[0] for row in P]
    for choice in itertools.product(*support):
        prob = float(np.prod([P[i, j] for i, j in enumerate(choice)])) if len(choice) else 1.0
        yield choice, prob


def count_vector(choice, m: int) -> tuple:
    counts = [0] * m
    for j in choice:
        counts[j] += 1
    return tuple(counts)


def count_distribution(P: np.ndarray) -> dict:
    """Exact law of the count vector, folding in one tuple at a time."""
    P = np.asarray(P, dtype=float)
    m = P.shape[1]
    out: dict = {(0,) * m: 1.0}
    for row in P:
        nxt: dict = {}
        for r, prob in out.items():
            for j in np.nonzero(row > 0)[0]:
                key = r[:j] + (r[j] + 1,) + r[j + 1:]
                nxt[key] = nxt.get(key, 0.0) + prob * row[j]
        out = nxt
    return out


def expected_sq_distance_enum(P: np.ndarray, r) -> float:
    r = np.asarray(r, dtype=float)
    return sum(p * float(np.sum((r - np.array(v)) ** 2)) for v, p in count_distribution(P).items())


def nearest_realizable(P: np.ndarray) -> tuple[tuple, float]:
    """Realizable count vector closest to the column means (squared L2)."""
    P = np.asarray(P, dtype=float)
    mean = P.sum(axis=0)
    best, best_val = None, float("inf")
    for r in sorted(count_distribution(P)):
        val = float(np.sum((np.array(r) - mean) ** 2))
        if val < best_val - 1e-12:
            best, best_val = r, val
    return best, best_val


def median_counts_exhaustive(P: np.ndarray) -> tuple[tuple, float]:
    """Realizable count vector minimising the exact expected squared distance."""
    dist = count_distribution(P)
    best, best_val = None, float("inf")
    for r in sorted(dist):
        val = sum(p * float(np.sum((np.array(r) - np.array(v)) ** 2)) for v, p in dist.items())
        if val < best_val - 1e-12:
            best, best_val = r, val
    return best, best_val

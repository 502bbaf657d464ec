"""Top-k distance metrics and consensus Top-k answers."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .genfunc import harmonic, precedence_matrix, rank_profiles
from .model import PROB_TOL, AndNode, AndXorTree, Leaf, score_order
from .solvers import solve_assignment

METRICS = ("symdiff", "intersection", "footrule", "kendall")


@dataclass
class TopKAnswer:
    items: list
    k: int
    metric: str
    kind: str
    expected_distance: float | None = None
    method: str = "formula"
    diagnostics: dict = field(default_factory=dict)

    @property
    def short(self) -> bool:
        return len(self.items) < self.k


def top_k_of(leaves, k: int) -> list[str]:
    """Keys of the ``k`` best-ranked alternatives of one world."""
    return [a.key for a in sorted(leaves, key=score_order)[:k]]


def _positions(lst: Sequence[str]) -> dict:
    return {t: i + 1 for i, t in enumerate(lst)}


def _symdiff(a, b) -> int:
    return len(set(a) ^ set(b))


def kendall_topk(a: Sequence[str], b: Sequence[str]) -> int:
    """Pairs whose order disagrees in every pair of full extensions.

    Pairs present in one list only and absent from the other carry no
    penalty (the optimistic variant).
    """
    pa, pb = _positions(a), _positions(b)
    items = sorted(set(a) | set(b))
    count = 0
    for x in range(len(items)):
        for y in range(x + 1, len(items)):
            i, j = items[x], items[y]
            in_a = (i in pa, j in pa)
            in_b = (i in pb, j in pb)
            if all(in_a) and all(in_b):
                count += (pa[i] < pa[j]) != (pb[i] < pb[j])
            elif all(in_a) and any(in_b):
                # the one missing from b sits below the other there
                present = i if in_b[0] else j
                other = j if present == i else i
                count += pa[other] < pa[present]
            elif all(in_b) and any(in_a):
                present = i if in_a[0] else j
                other = j if present == i else i
                count += pb[other] < pb[present]
            elif any(in_a) and any(in_b) and in_a != in_b:
                count += 1
    return count


def dist_topk(a: Sequence[str], b: Sequence[str], metric: str, k: int | None = None) -> float:
    """Distance between two Top-k lists.

    ``k`` defaults to the common length; lists shorter than ``k`` (answers
    of small worlds) are allowed when ``k`` is given.
    """
    if k is None:
        if len(a) != len(b):
            raise ValueError(f"lists have different lengths {len(a)} and {len(b)}")
        k = len(a)
    if len(a) > k or len(b) > k:
        raise ValueError("list longer than k")
    if len(set(a)) != len(a) or len(set(b)) != len(b):
        raise ValueError("Top-k lists must not repeat items")
    if k == 0:
        return 0.0
    if metric == "symdiff":
        return _symdiff(a, b) / (2 * k)
    if metric == "intersection":
        return sum(_symdiff(a[:i], b[:i]) / (2 * i) for i in range(1, k + 1)) / k
    if metric == "footrule":
        pa, pb = _positions(a), _positions(b)
        return float(sum(abs(pa.get(t, k + 1) - pb.get(t, k + 1)) for t in set(a) | set(b)))
    if metric == "kendall":
        return float(kendall_topk(a, b))
    raise ValueError(f"unknown metric {metric!r}")


def _check_k(tree: AndXorTree, k: int) -> list[str]:
    keys = tree.keys()
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(keys) < k:
        raise ValueError(f"need at least k={k} keys, tree has {len(keys)}")
    return keys


def _rank_by(profiles: dict, score) -> list[str]:
    return sorted(profiles, key=lambda t: (-score(profiles[t]), t))


def expected_symdiff(profiles: dict, tau: Sequence[str], k: int) -> float:
    P = {t: p.upsilon1 for t, p in profiles.items()}
    return (len(tau) + sum(P.values()) - 2 * sum(P[t] for t in tau)) / (2 * k)


def mean_topk_symdiff(tree: AndXorTree, k: int, profiles=None) -> TopKAnswer:
    _check_k(tree, k)
    profiles = profiles or rank_profiles(tree, k)
    tau = _rank_by(profiles, lambda p: p.upsilon1)[:k]
    return TopKAnswer(tau, k, "symdiff", "mean", expected_symdiff(profiles, tau, k))


def _dp(node, k: int, include, P: dict) -> list:
    """best[i] = (value, leaves) over size-i restricted worlds, None if impossible."""
    if isinstance(node, Leaf):
        best = [None] * (k + 1)
        if include(node.alt):
            if k >= 1:
                best[1] = (P[node.alt.key], (node.alt,))
        else:
            best[0] = (0.0, ())
        return best
    if isinstance(node, AndNode):
        acc = [None] * (k + 1)
        acc[0] = (0.0, ())
        for child in node.children:
            sub = _dp(child, k, include, P)
            nxt = [None] * (k + 1)
            for p, left in enumerate(acc):
                if left is None:
                    continue
                for q in range(k + 1 - p):
                    right = sub[q]
                    if right is None:
                        continue
                    cand = (left[0] + right[0], left[1] + right[1])
                    if nxt[p + q] is None or cand[0] > nxt[p + q][0] + 1e-12:
                        nxt[p + q] = cand
            acc = nxt
        return acc
    best = [None] * (k + 1)
    if node.residual > 0.0:
        best[0] = (0.0, ())
    for p, child in node.children:
        if p <= PROB_TOL:
            continue
        for i, cand in enumerate(_dp(child, k, include, P)):
            if cand is not None and (best[i] is None or cand[0] > best[i][0] + 1e-12):
                best[i] = cand
    return best


def median_topk_symdiff(tree: AndXorTree, k: int, profiles=None) -> TopKAnswer:
    """Top-k list of a possible world maximising sum of Pr(r(t) <= k).

    For each threshold alternative ``a`` the tree is cut to the leaves
    ranked at or above ``a``; a size-k world of the cut tree is exactly the
    Top-k of a full world. Worlds with fewer than ``k`` tuples are their own
    Top-k lists and come from the uncut tree.
    """
    _check_k(tree, k)
    profiles = profiles or rank_profiles(tree, k)
    P = {t: p.upsilon1 for t, p in profiles.items()}
    order = sorted(tree.alternatives(), key=score_order)

    best = None
    for cut in range(len(order)):
        allowed = set(order[: cut + 1])
        cand = _dp(tree.root, k, allowed.__contains__, P)[k]
        if cand is not None and (best is None or cand[0] > best[0] + 1e-12):
            best = cand
    full = _dp(tree.root, k, lambda a: True, P)
    for size in range(k - 1, -1, -1):
        cand = full[size]
        if cand is not None and (best is None or cand[0] > best[0] + 1e-12):
            best = cand

    tau = top_k_of(best[1], k)
    ans = TopKAnswer(tau, k, "symdiff", "median", expected_symdiff(profiles, tau, k))
    if ans.short:
        ans.diagnostics["short"] = True
    return ans


def intersection_profit(profiles: dict, keys: list[str], k: int) -> np.ndarray:
    """profit[t, j] = sum_{i=j..k} Pr(r(t) <= i) / i."""
    out = np.zeros((len(keys), k))
    inv = 1.0 / np.arange(1, k + 1)
    for a, t in enumerate(keys):
        terms = profiles[t].cumulative[:k] * inv
        out[a] = np.cumsum(terms[::-1])[::-1]
    return out


def intersection_score(profiles: dict, tau: Sequence[str]) -> float:
    """A(tau) = sum_i (1/i) sum_{t in tau^i} Pr(r(t) <= i)."""
    return sum(
        profiles[t].prob_at_most(i) / i
        for i in range(1, len(tau) + 1)
        for t in tau[:i]
    )


def expected_intersection(profiles: dict, tau: Sequence[str], k: int) -> float:
    total = 0.0
    for i in range(1, k + 1):
        head = tau[:i]
        mass = sum(p.prob_at_most(i) for p in profiles.values())
        total += (len(head) + mass - 2 * sum(profiles[t].prob_at_most(i) for t in head)) / (2 * i)
    return total / k


def mean_topk_intersection(tree: AndXorTree, k: int, profiles=None) -> TopKAnswer:
    keys = _check_k(tree, k)
    profiles = profiles or rank_profiles(tree, k)
    matching, _ = solve_assignment(intersection_profit(profiles, keys, k))
    tau = [keys[a] for a in matching]
    return TopKAnswer(tau, k, "intersection", "mean", expected_intersection(profiles, tau, k))


def approx_topk_intersection_upsilonH(tree: AndXorTree, k: int, profiles=None) -> TopKAnswer:
    """The k tuples with the largest harmonic rank score; within H_k of optimal."""
    _check_k(tree, k)
    profiles = profiles or rank_profiles(tree, k)
    tau = _rank_by(profiles, lambda p: p.upsilonH)[:k]
    ans = TopKAnswer(tau, k, "intersection", "mean", expected_intersection(profiles, tau, k))
    ans.method = "upsilon-h"
    ans.diagnostics["approximation_bound"] = harmonic(k)
    return ans


def footrule_costs(profiles: dict, keys: list[str], k: int) -> tuple[np.ndarray, float]:
    """Assignment costs f(t, i) and the list-independent constant.

    E[d_F(tau, tau_pw)] = C + sum_i f(tau(i), i) with
    f(t, i) = U3(t, i) + U2(t) - 2(k+1) U1(t) and
    C = k(k+1) + sum_t ((k+1) U1(t) - U2(t)).
    """
    cost = np.zeros((len(keys), k))
    const = k * (k + 1.0)
    for a, t in enumerate(keys):
        p = profiles[t]
        cost[a] = p.upsilon3 + p.upsilon2 - 2 * (k + 1) * p.upsilon1
        const += (k + 1) * p.upsilon1 - p.upsilon2
    return cost, const


def expected_footrule(profiles: dict, tau: Sequence[str], k: int) -> float:
    keys = sorted(profiles)
    cost, const = footrule_costs(profiles, keys, k)
    row = {t: a for a, t in enumerate(keys)}
    return const + sum(cost[row[t], i] for i, t in enumerate(tau))


def mean_topk_footrule(tree: AndXorTree, k: int, profiles=None) -> TopKAnswer:
    keys = _check_k(tree, k)
    profiles = profiles or rank_profiles(tree, k)
    cost, const = footrule_costs(profiles, keys, k)
    matching, total = solve_assignment(-cost)
    tau = [keys[a] for a in matching]
    return TopKAnswer(tau, k, "footrule", "mean", const - total)


def pivot_order(keys: list[str], before: np.ndarray, rng: random.Random) -> list[str]:
    """Randomised quicksort-style aggregation on pairwise majorities.

    ``before[a, b]`` is the probability that ``keys[a]`` precedes ``keys[b]``.
    """
    idx = {t: a for a, t in enumerate(keys)}

    def rec(items):
        if len(items) <= 1:
            return list(items)
        pivot = rng.choice(items)
        p = idx[pivot]
        left = [t for t in items if t != pivot and before[idx[t], p] > before[p, idx[t]]]
        right = [t for t in items if t != pivot and before[idx[t], p] <= before[p, idx[t]]]
        return rec(left) + [pivot] + rec(right)

    return rec(sorted(keys))


def approx_topk_kendall(
    tree: AndXorTree,
    k: int,
    trials: int = 20,
    seed: int = 0,
    world_limit: int = 5000,
    samples: int = 100_000,
    profiles=None,
) -> TopKAnswer:
    """Best of the footrule-optimal list and ``trials`` pivot aggregations.

    Candidates are scored by expected Kendall distance, exact when the tree
    has at most ``world_limit`` worlds and Monte Carlo otherwise.
    """
    from .oracle import expected_distance

    keys = _check_k(tree, k)
    profiles = profiles or rank_profiles(tree, k)
    candidates = [mean_topk_footrule(tree, k, profiles).items]
    before = precedence_matrix(tree, keys)
    rng = random.Random(seed)
    for _ in range(max(trials, 0)):
        cand = pivot_order(keys, before, rng)[:k]
        if cand not in candidates:
            candidates.append(cand)

    best, best_report = None, None
    for cand in candidates:
        report = expected_distance(
            tree, cand, "topk", "kendall", k=k,
            world_limit=world_limit, samples=samples, seed=seed,
        )
        if best_report is None or report.value < best_report.value - 1e-12:
            best, best_report = cand, report
    ans = TopKAnswer(best, k, "kendall", "mean", best_report.value, best_report.method)
    ans.diagnostics["candidates"] = len(candidates)
    if best_report.method == "montecarlo":
        ans.diagnostics["ci95_halfwidth"] = best_report.ci_halfwidth
        ans.diagnostics["samples"] = best_report.sample_count
    return ans


def harmonic_bound_holds(profiles: dict, approx: Sequence[str], optimal: Sequence[str], k: int) -> bool:
    return intersection_score(profiles, approx) >= intersection_score(profiles, optimal) / harmonic(k) - 1e-12


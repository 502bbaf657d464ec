"""Mean and median worlds under symmetric difference and Jaccard distance."""
from __future__ import annotations

from dataclasses import dataclass, field

from .genfunc import evaluate, world_probability
from .model import (
    PROB_TOL,
    AndNode,
    AndXorTree,
    Leaf,
    TupleAlternative,
    bid_blocks,
    is_tuple_independent,
    marginals,
)


class NotApplicable(ValueError):
    """The tree does not have the correlation structure an algorithm needs."""


@dataclass
class WorldAnswer:
    leaves: frozenset
    expected_distance: float
    kind: str
    metric: str
    diagnostics: dict = field(default_factory=dict)

    def sorted_leaves(self) -> list[TupleAlternative]:
        return sorted(self.leaves, key=TupleAlternative.sort_key)


def _symdiff_cost(probs: dict, chosen) -> float:
    return sum((1.0 - p) if a in chosen else p for a, p in probs.items())


def mean_world_symdiff(tree: AndXorTree) -> WorldAnswer:
    probs = marginals(tree)
    # exactly 0.5 is a tie; leaving it out keeps the answer minimal
    chosen = frozenset(a for a, p in probs.items() if p > 0.5 + PROB_TOL)
    return WorldAnswer(chosen, _symdiff_cost(probs, chosen), "mean", "symdiff")


def _best_world(node, weight: dict) -> tuple[float, frozenset]:
    """Max total weight over the worlds a subtree can produce with Pr > 0."""
    if isinstance(node, Leaf):
        return weight[node.alt], frozenset([node.alt])
    if isinstance(node, AndNode):
        total, leaves = 0.0, frozenset()
        for child in node.children:
            v, s = _best_world(child, weight)
            total += v
            leaves |= s
        return total, leaves
    options = []
    if node.residual > 0.0:
        options.append((0.0, frozenset()))
    for p, child in node.children:
        if p > PROB_TOL:
            options.append(_best_world(child, weight))
    if not options:
        return 0.0, frozenset()
    best = options[0]
    for opt in options[1:]:
        if opt[0] > best[0] + 1e-12:
            best = opt
    return best


def median_world_symdiff(tree: AndXorTree) -> WorldAnswer:
    """Possible world closest in expected symmetric difference.

    Each alternative in the answer saves ``2 Pr(t) - 1`` against the empty
    set, so the best possible world maximises that weight; a walk over the
    tree finds it exactly (OR picks one positive-probability branch or the
    empty residual, AND takes everything). When the mean world is itself
    possible the two coincide; otherwise ``diagnostics`` says so.
    """
    probs = marginals(tree)
    weight = {a: 2.0 * p - 1.0 for a, p in probs.items()}
    _, leaves = _best_world(tree.root, weight)
    mean = mean_world_symdiff(tree)
    diagnostics = {
        "mean_world_possible": world_probability(tree, mean.leaves) > PROB_TOL,
    }
    if not diagnostics["mean_world_possible"]:
        diagnostics["note"] = "set of alternatives with probability > 0.5 is not a possible world"
    elif _symdiff_cost(probs, mean.leaves) <= _symdiff_cost(probs, leaves) + 1e-12:
        leaves = mean.leaves
    return WorldAnswer(leaves, _symdiff_cost(probs, leaves), "median", "symdiff", diagnostics)


def _jaccard_weight(w: int, i: int, j: int) -> float:
    union = w + j
    return 0.0 if union == 0 else (w - i + j) / union


def expected_jaccard(tree: AndXorTree, W) -> float:
    """E[d_J(W, pw)] from the two-variable generating function."""
    W = frozenset(W)
    inside = sum(1 for a in tree.alternatives() if a in W)
    outside = len(tree.alternatives()) - inside
    poly = evaluate(tree, lambda a: 0 if a in W else 1, (max(inside, 1), max(outside, 1)))
    w = len(W)
    total = 0.0
    for i in range(inside + 1):
        for j in range(outside + 1):
            c = poly.coefficient(i, j)
            if c:
                total += c * _jaccard_weight(w, i, j)
    return total


def _prefix_scan(tree: AndXorTree, ranked: list, admissible=None) -> tuple[frozenset, float]:
    best_set, best_val = None, float("inf")
    for n in range(len(ranked) + 1):
        cand = frozenset(ranked[:n])
        if admissible is not None and not admissible(cand):
            continue
        val = expected_jaccard(tree, cand)
        # strict improvement only: ties keep the shorter prefix
        if val < best_val - 1e-12:
            best_set, best_val = cand, val
    return best_set, best_val


def mean_world_jaccard_independent(tree: AndXorTree) -> WorldAnswer:
    if not is_tuple_independent(tree):
        raise NotApplicable("Jaccard mean world needs a tuple-independent tree")
    blocks = bid_blocks(tree)
    items = sorted(((a, p) for b in blocks for a, p in b), key=lambda ap: (-ap[1], ap[0].sort_key()))
    leaves, value = _prefix_scan(tree, [a for a, _ in items])
    return WorldAnswer(leaves, value, "mean", "jaccard")


def median_world_jaccard_bid(tree: AndXorTree) -> WorldAnswer:
    """Prefix scan over each key's most likely alternative.

    Only prefixes that are possible worlds are considered: a key whose
    alternatives always occur cannot be dropped. The full prefix is always
    possible, so an answer exists.
    """
    blocks = bid_blocks(tree)
    if blocks is None:
        raise NotApplicable("Jaccard median world needs a BID tree")
    tops = []
    forced = set()
    for block in blocks:
        alt, p = min(block, key=lambda ap: (-ap[1], ap[0].sort_key()))
        if p <= PROB_TOL:
            continue
        tops.append((alt, p))
        if sum(q for _, q in block) >= 1.0 - PROB_TOL:
            forced.add(alt)
    tops.sort(key=lambda ap: (-ap[1], ap[0].sort_key()))
    leaves, value = _prefix_scan(tree, [a for a, _ in tops], admissible=lambda s: forced <= s)
    return WorldAnswer(leaves, value, "median", "jaccard")

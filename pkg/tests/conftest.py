import random

import pytest
from hypothesis import strategies as st

from consensusdb.model import AndNode, AndXorTree, Leaf, OrNode, TupleAlternative, and_, from_bid, leaf, or_


def three_worlds_tree():
    return AndXorTree(or_(
        (0.3, and_(leaf("t3", 6), leaf("t2", 5), leaf("t1", 1))),
        (0.3, and_(leaf("t3", 9), leaf("t1", 7), leaf("t4", 0))),
        (0.4, and_(leaf("t3", 8), leaf("t4", 4), leaf("t5", 3))),
    ))


@pytest.fixture
def three_worlds():
    return three_worlds_tree()


def _or_probs(rng, n):
    weights = [rng.random() + 0.05 for _ in range(n)]
    total = rng.choice([1.0, 1.0, rng.uniform(0.3, 1.0)])
    s = sum(weights)
    return [w / s * total for w in weights]


def _shape(rng, budget, depth):
    """Random node skeleton with exactly ``budget`` placeholder leaves."""
    if budget == 1:
        return "leaf"
    kind = rng.choice(["and", "or"])
    count = budget if depth >= 3 else rng.randint(2, min(4, budget))
    cuts = sorted(rng.sample(range(1, budget), count - 1))
    sizes = [b - a for a, b in zip([0] + cuts, cuts + [budget])]
    children = [_shape(rng, size, depth + 1) for size in sizes]
    if kind == "or":
        return ("or", list(zip(_or_probs(rng, len(children)), children)))
    return ("and", children)


def _lca_is_or(kinds, p, q):
    n = 0
    while n < min(len(p), len(q)) and p[n] == q[n]:
        n += 1
    return kinds[tuple(p[:n])] == "or"


def random_tree(rng: random.Random, max_leaves: int = 12, labels=None, reuse: float = 0.4) -> AndXorTree:
    """A random valid and/xor tree.

    Keys are reused only where every earlier leaf with that key meets the new
    leaf at an OR node, so the key constraint holds by construction.
    """
    skeleton = _shape(rng, rng.randint(1, max_leaves), 0)
    kinds = {}
    leaf_paths = []

    def collect(node, path):
        if node == "leaf":
            kinds[path] = "leaf"
            leaf_paths.append(path)
            return
        kind, children = node
        kinds[path] = kind
        for i, c in enumerate(children):
            collect(c[1] if kind == "or" else c, path + (i,))

    collect(skeleton, ())
    keys_at = {}
    by_key = {}
    for path in leaf_paths:
        options = [k for k, ps in by_key.items() if all(_lca_is_or(kinds, path, q) for q in ps)]
        if options and rng.random() < reuse:
            key = rng.choice(sorted(options))
        else:
            key = f"t{len(by_key) + 1}"
        by_key.setdefault(key, []).append(path)
        keys_at[path] = key

    def value():
        if labels:
            return rng.choice(labels)
        return rng.randint(0, 30)

    def build(node, path):
        if node == "leaf":
            return Leaf(TupleAlternative(keys_at[path], value()))
        kind, children = node
        if kind == "and":
            return AndNode(tuple(build(c, path + (i,)) for i, c in enumerate(children)))
        return OrNode(tuple((p, build(c, path + (i,))) for i, (p, c) in enumerate(children)))

    return AndXorTree(build(skeleton, ()))


def random_bid(rng: random.Random, n: int, max_alts: int = 2, labels=None, full: bool = False) -> AndXorTree:
    rows = []
    for i in range(n):
        m = rng.randint(1, max_alts)
        probs = _or_probs(rng, m)
        if full:
            s = sum(probs)
            probs = [p / s for p in probs]
        values = rng.sample(labels, m) if labels else rng.sample(range(50), m)
        rows += [(f"t{i + 1}", v, p) for v, p in zip(values, probs)]
    return from_bid(rows)


def random_independent(rng: random.Random, n: int) -> AndXorTree:
    return from_bid([(f"t{i + 1}", rng.randint(0, 50), round(rng.uniform(0.05, 1.0), 3)) for i in range(n)])


seeds = st.integers(min_value=0, max_value=2**32 - 1)

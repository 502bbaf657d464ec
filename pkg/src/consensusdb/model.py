"""Probabilistic and/xor trees and their possible worlds.

A tree's leaves are tuple alternatives ``(key, value)``. An OR node keeps at
most one of its children (child ``v`` with probability ``Pr(u, v)``, nothing
with the residual mass), an AND node keeps all of them. The random set of
leaves produced at the root is a possible world.
"""
from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field
from numbers import Real
from typing import Iterator, Sequence, Union

#: absolute tolerance for every probability comparison in the package
PROB_TOL = 1e-9

Value = Union[float, int, str]


class TooManyWorlds(RuntimeError):
    """Raised when enumeration would exceed the configured world limit."""

    def __init__(self, count: int, limit: int):
        super().__init__(f"too many worlds: reached {count} (limit {limit})")
        self.count = count
        self.limit = limit


@dataclass(frozen=True)
class TupleAlternative:
    key: str
    value: Value

    def __post_init__(self):
        if not isinstance(self.key, str) or not self.key:
            raise ValueError("tuple key must be a non-empty string")

    @property
    def is_numeric(self) -> bool:
        return isinstance(self.value, Real) and not isinstance(self.value, bool)

    def sort_key(self):
        # numbers before labels so mixed-value trees still sort
        if self.is_numeric:
            return (self.key, 0, float(self.value), "")
        return (self.key, 1, 0.0, str(self.value))

    def __repr__(self):
        return f"({self.key}, {self.value!r})"


def ranks_above(a: TupleAlternative, b: TupleAlternative) -> bool:
    """True if ``a`` outranks ``b``: higher score, ties go to the smaller key."""
    sa, sb = float(a.value), float(b.value)
    if sa != sb:
        return sa > sb
    return a.key < b.key


def score_order(alt: TupleAlternative):
    """Sort key putting the best-ranked alternative first."""
    return (-float(alt.value), alt.key)


@dataclass(frozen=True)
class Leaf:
    alt: TupleAlternative


@dataclass(frozen=True)
class AndNode:
    children: tuple = ()


@dataclass(frozen=True)
class OrNode:
    # tuple of (probability, node)
    children: tuple = ()

    @property
    def residual(self) -> float:
        r = 1.0 - sum(p for p, _ in self.children)
        return r if r > PROB_TOL else 0.0


Node = Union[Leaf, AndNode, OrNode]


def leaf(key: str, value: Value) -> Leaf:
    return Leaf(TupleAlternative(key, value))


def and_(*children: Node) -> AndNode:
    return AndNode(tuple(children))


def or_(*children: tuple[float, Node]) -> OrNode:
    return OrNode(tuple((float(p), c) for p, c in children))


@dataclass(frozen=True)
class PossibleWorld:
    leaves: frozenset
    prob: float

    def keys(self) -> set[str]:
        return {a.key for a in self.leaves}

    def sorted_leaves(self) -> list[TupleAlternative]:
        return sorted(self.leaves, key=TupleAlternative.sort_key)


@dataclass(frozen=True)
class Violation:
    path: str
    kind: str
    message: str


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.valid


def _walk(node: Node, path: str = "root") -> Iterator[tuple[str, Node]]:
    yield path, node
    if isinstance(node, AndNode):
        for i, c in enumerate(node.children):
            yield from _walk(c, f"{path}/{i}")
    elif isinstance(node, OrNode):
        for i, (_, c) in enumerate(node.children):
            yield from _walk(c, f"{path}/{i}")


def _node_at(root: Node, path: str) -> Node:
    node = root
    for part in path.split("/")[1:]:
        i = int(part)
        node = node.children[i] if isinstance(node, AndNode) else node.children[i][1]
    return node


class AndXorTree:
    """Immutable and/xor tree. Construct from a root node."""

    def __init__(self, root: Node):
        if not isinstance(root, (Leaf, AndNode, OrNode)):
            raise TypeError(f"not a tree node: {root!r}")
        self.root = root
        self._leaf_paths = [(p, n.alt) for p, n in _walk(root) if isinstance(n, Leaf)]

    def __repr__(self):
        return f"AndXorTree({len(self._leaf_paths)} leaves)"

    def __eq__(self, other):
        return isinstance(other, AndXorTree) and self.root == other.root

    def __hash__(self):
        return hash(self.root)

    def leaf_paths(self) -> list[tuple[str, TupleAlternative]]:
        return list(self._leaf_paths)

    def alternatives(self) -> list[TupleAlternative]:
        """Distinct tuple alternatives, in canonical order."""
        return sorted({a for _, a in self._leaf_paths}, key=TupleAlternative.sort_key)

    def keys(self) -> list[str]:
        return sorted({a.key for _, a in self._leaf_paths})

    def alternatives_of(self, key: str) -> list[TupleAlternative]:
        return [a for a in self.alternatives() if a.key == key]

    def is_numeric(self) -> bool:
        return all(a.is_numeric for _, a in self._leaf_paths)


def validate(tree: AndXorTree) -> ValidationReport:
    report = ValidationReport()
    for path, node in _walk(tree.root):
        if isinstance(node, OrNode):
            for i, (p, _) in enumerate(node.children):
                if not (p >= 0.0) or p > 1.0 + PROB_TOL:
                    report.violations.append(Violation(
                        f"{path}/{i}", "probability",
                        f"edge probability {p} outside [0, 1]"))
            total = sum(p for p, _ in node.children)
            if total > 1.0 + PROB_TOL:
                report.violations.append(Violation(
                    path, "probability",
                    f"OR child probabilities sum to {total:.12g} > 1"))

    by_key = defaultdict(list)
    for path, alt in tree.leaf_paths():
        by_key[alt.key].append(path)
    for key, paths in sorted(by_key.items()):
        for i in range(len(paths)):
            for j in range(i + 1, len(paths)):
                a, b = paths[i].split("/"), paths[j].split("/")
                n = 0
                while n < min(len(a), len(b)) and a[n] == b[n]:
                    n += 1
                lca = "/".join(a[:n])
                if not isinstance(_node_at(tree.root, lca), OrNode):
                    report.violations.append(Violation(
                        lca, "key",
                        f"leaves {paths[i]} and {paths[j]} share key {key!r} "
                        f"but their common ancestor is not an OR node"))
    return report


def from_bid(rows: Sequence[tuple[str, Value, float]]) -> AndXorTree:
    """Build an AND-of-ORs tree from block-independent disjoint rows."""
    blocks: dict[str, list] = {}
    seen = set()
    for key, value, prob in rows:
        prob = float(prob)
        if (key, value) in seen:
            raise ValueError(f"duplicate alternative ({key}, {value!r})")
        if not 0.0 <= prob <= 1.0 + PROB_TOL:
            raise ValueError(f"probability {prob} for ({key}, {value!r}) outside [0, 1]")
        seen.add((key, value))
        blocks.setdefault(key, []).append((prob, leaf(key, value)))
    for key, alts in blocks.items():
        total = sum(p for p, _ in alts)
        if total > 1.0 + PROB_TOL:
            raise ValueError(f"alternatives of key {key!r} sum to {total:.12g} > 1")
    return AndXorTree(AndNode(tuple(OrNode(tuple(alts)) for alts in blocks.values())))


def bid_blocks(tree: AndXorTree):
    """Return ``[[(alt, prob), ...], ...]`` if the tree has BID shape, else None.

    Accepted shapes: a root AND whose children are leaves (certain tuples) or
    ORs over leaves of a single key, with distinct keys across blocks. A bare
    leaf or a single OR-of-leaves root also qualifies.
    """
    root = tree.root
    if isinstance(root, (Leaf, OrNode)):
        children = (root,)
    elif isinstance(root, AndNode):
        children = root.children
    else:
        return None
    blocks = []
    keys = set()
    for child in children:
        if isinstance(child, Leaf):
            block = [(child.alt, 1.0)]
        elif isinstance(child, OrNode) and all(isinstance(c, Leaf) for _, c in child.children):
            block = [(c.alt, p) for p, c in child.children]
        else:
            return None
        block_keys = {a.key for a, _ in block}
        if len(block_keys) > 1 or block_keys & keys:
            return None
        if len({a for a, _ in block}) != len(block):
            return None
        keys |= block_keys
        if block:
            blocks.append(block)
    return blocks


def is_bid(tree: AndXorTree) -> bool:
    return bid_blocks(tree) is not None


def is_tuple_independent(tree: AndXorTree) -> bool:
    blocks = bid_blocks(tree)
    return blocks is not None and all(len(b) == 1 for b in blocks)


def _worlds(node: Node, limit: int) -> dict:
    if isinstance(node, Leaf):
        return {frozenset([node.alt]): 1.0}
    if isinstance(node, OrNode):
        out: dict = defaultdict(float)
        if node.residual > 0.0:
            out[frozenset()] += node.residual
        for p, child in node.children:
            if p <= PROB_TOL:
                continue
            for w, q in _worlds(child, limit).items():
                out[w] += p * q
            if len(out) > limit:
                raise TooManyWorlds(len(out), limit)
        return dict(out)
    acc = {frozenset(): 1.0}
    for child in node.children:
        sub = _worlds(child, limit)
        if len(acc) * len(sub) > limit:
            # merging may collapse some, so count for real before refusing
            merged = {a | b for a in acc for b in sub}
            if len(merged) > limit:
                raise TooManyWorlds(len(merged), limit)
        nxt: dict = defaultdict(float)
        for a, pa in acc.items():
            for b, pb in sub.items():
                nxt[a | b] += pa * pb
        acc = dict(nxt)
    return acc


def enumerate_worlds(tree: AndXorTree, limit: int = 50_000) -> list[PossibleWorld]:
    worlds = _worlds(tree.root, limit)
    out = [PossibleWorld(w, p) for w, p in worlds.items() if p > 0.0]
    out.sort(key=lambda w: [a.sort_key() for a in w.sorted_leaves()])
    return out


def _sample(node: Node, rng: random.Random, out: set):
    if isinstance(node, Leaf):
        out.add(node.alt)
    elif isinstance(node, AndNode):
        for child in node.children:
            _sample(child, rng, out)
    else:
        u = rng.random()
        acc = 0.0
        for p, child in node.children:
            acc += p
            if u < acc:
                _sample(child, rng, out)
                return


def sample_world(tree: AndXorTree, seed: int | random.Random) -> PossibleWorld:
    """Draw one world by the recursive OR/AND process; deterministic per seed."""
    from .genfunc import world_probability

    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    leaves: set = set()
    _sample(tree.root, rng, leaves)
    leaves = frozenset(leaves)
    return PossibleWorld(leaves, world_probability(tree, leaves))


def sample_worlds(tree: AndXorTree, n: int, seed: int) -> list[frozenset]:
    """Leaf sets of ``n`` independent draws (no probabilities attached)."""
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        leaves: set = set()
        _sample(tree.root, rng, leaves)
        out.append(frozenset(leaves))
    return out


def marginal(tree: AndXorTree, alt: TupleAlternative) -> float:
    """Pr(alt is in the random world)."""
    from .genfunc import evaluate

    if alt not in {a for _, a in tree.leaf_paths()}:
        raise KeyError(f"unknown alternative {alt!r}")
    poly = evaluate(tree, lambda a: 0 if a == alt else None, (1,))
    return poly.coefficient(1)


def marginals(tree: AndXorTree) -> dict[TupleAlternative, float]:
    return {a: marginal(tree, a) for a in tree.alternatives()}

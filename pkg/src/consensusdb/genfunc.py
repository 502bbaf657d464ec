"""Generating functions over and/xor trees.

Each leaf is mapped to one of up to three variables or to the constant 1. The
polynomial at a node is built bottom-up: a leaf is its variable, an OR node is
``residual + sum(p_h * F_h)``, an AND node is ``prod(F_h)``. The coefficient
of ``x1^i1 x2^i2 ...`` at the root is the probability that the world holds
exactly ``i_j`` leaves mapped to ``x_j``.

Coefficient arrays are dense and truncated: along each axis index ``d + 1``
is an overflow slot holding the mass of every exponent above the bound ``d``,
so coefficients always total one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .model import (
    PROB_TOL,
    AndNode,
    AndXorTree,
    Leaf,
    Node,
    TupleAlternative,
    ranks_above,
)

Assignment = Union[Callable[[TupleAlternative], Optional[int]], Mapping[TupleAlternative, Optional[int]]]


class Polynomial:
    """Truncated polynomial in 1-3 variables with an overflow slot per axis."""

    def __init__(self, coeffs: np.ndarray):
        self.coeffs = coeffs

    @classmethod
    def constant(cls, bounds: Sequence[int], c: float = 1.0) -> "Polynomial":
        arr = np.zeros(tuple(d + 2 for d in bounds))
        arr[(0,) * len(bounds)] = c
        return cls(arr)

    @classmethod
    def variable(cls, bounds: Sequence[int], var: int) -> "Polynomial":
        arr = np.zeros(tuple(d + 2 for d in bounds))
        idx = [0] * len(bounds)
        idx[var] = 1
        arr[tuple(idx)] = 1.0
        return cls(arr)

    @property
    def bounds(self) -> tuple[int, ...]:
        return tuple(s - 2 for s in self.coeffs.shape)

    @property
    def var_count(self) -> int:
        return self.coeffs.ndim

    def coefficient(self, *exps: int) -> float:
        """Coefficient of the monomial; exponents above the bound return 0."""
        if len(exps) != self.var_count:
            raise ValueError(f"expected {self.var_count} exponents, got {len(exps)}")
        if any(e < 0 or e > d for e, d in zip(exps, self.bounds)):
            return 0.0
        return float(self.coeffs[exps])

    def overflow(self) -> float:
        """Mass of every term with some exponent above its bound."""
        inner = self.coeffs[tuple(slice(0, d + 1) for d in self.bounds)]
        return float(self.coeffs.sum() - inner.sum())

    def total(self) -> float:
        return float(self.coeffs.sum())

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(self.coeffs + other.coeffs)

    def scale(self, c: float) -> "Polynomial":
        return Polynomial(self.coeffs * c)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        a, b = self.coeffs, other.coeffs
        full = np.zeros(tuple(sa + sb - 1 for sa, sb in zip(a.shape, b.shape)))
        for idx in zip(*np.nonzero(a)):
            sl = tuple(slice(i, i + s) for i, s in zip(idx, b.shape))
            full[sl] += a[idx] * b
        # fold everything past the bound into the overflow slot
        for axis, size in enumerate(a.shape):
            head = np.take(full, range(size - 1), axis=axis)
            tail = np.take(full, range(size - 1, full.shape[axis]), axis=axis).sum(axis=axis, keepdims=True)
            full = np.concatenate([head, tail], axis=axis)
        return Polynomial(full)

    def __repr__(self):
        return f"Polynomial(bounds={self.bounds}, total={self.total():.6g})"


def _resolver(assign: Assignment, var_count: int) -> Callable[[TupleAlternative], Optional[int]]:
    if isinstance(assign, Mapping):
        def look(alt):
            try:
                return assign[alt]
            except KeyError:
                raise ValueError(f"leaf {alt!r} has no variable assignment") from None
        fn = look
    else:
        fn = assign

    def checked(alt):
        var = fn(alt)
        if var is not None and not 0 <= var < var_count:
            raise ValueError(f"variable index {var} out of range for {var_count} variables")
        return var

    return checked


def evaluate(tree: AndXorTree, assign: Assignment, truncation: Sequence[int]) -> Polynomial:
    """Expand the root generating function under a leaf-to-variable map.

    ``assign`` maps a leaf's alternative to a variable index or ``None`` (the
    constant 1); ``truncation`` gives the maximum tracked degree per variable.
    """
    bounds = tuple(int(d) for d in truncation)
    if not 1 <= len(bounds) <= 3:
        raise ValueError("between 1 and 3 variables are supported")
    if any(d < 1 for d in bounds):
        raise ValueError("truncation bounds must be at least 1")
    var_of = _resolver(assign, len(bounds))
    one = Polynomial.constant(bounds)

    def rec(node: Node) -> Polynomial:
        if isinstance(node, Leaf):
            var = var_of(node.alt)
            return one if var is None else Polynomial.variable(bounds, var)
        if isinstance(node, AndNode):
            acc = one
            for child in node.children:
                acc = acc * rec(child)
            return acc
        acc = Polynomial.constant(bounds, node.residual)
        for p, child in node.children:
            if p > PROB_TOL:
                acc = acc + rec(child).scale(p)
        return acc

    return rec(tree.root)


def world_probability(tree: AndXorTree, leaves) -> float:
    """Exact probability that the random world equals ``leaves``."""
    leaves = frozenset(leaves)
    size = len(leaves)
    poly = evaluate(tree, lambda a: 0 if a in leaves else 1, (max(size, 1), 1))
    return poly.coefficient(size, 0)


def absent_prob(tree: AndXorTree, keys) -> float:
    """Pr(none of ``keys`` is present)."""
    keys = set(keys)
    return evaluate(tree, lambda a: 0 if a.key in keys else None, (1,)).coefficient(0)


def size_distribution(tree: AndXorTree) -> np.ndarray:
    """Pr(|pw| = i) for i = 0..number of distinct keys."""
    n = max(len(tree.keys()), 1)
    poly = evaluate(tree, lambda a: 0, (n,))
    return poly.coeffs[: n + 1].copy()


def harmonic(k: int) -> float:
    return sum(1.0 / i for i in range(1, k + 1))


@dataclass
class RankProfile:
    """Rank distribution of one tuple and the quantities derived from it.

    ``dist[i - 1]`` is Pr(r(t) = i); absence counts as rank infinity, so
    ``tail`` = Pr(r(t) > k) includes the probability that ``t`` is missing.
    """

    key: str
    k: int
    dist: np.ndarray

    @property
    def presence(self) -> float:
        return float(self.dist.sum())

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.dist)

    def prob_at_most(self, i: int) -> float:
        if i <= 0:
            return 0.0
        return float(self.dist[: i].sum())

    @property
    def tail(self) -> float:
        return max(0.0, 1.0 - self.prob_at_most(self.k))

    @property
    def upsilon1(self) -> float:
        return self.prob_at_most(self.k)

    @property
    def upsilon2(self) -> float:
        k = self.k
        return float(np.dot(np.arange(1, k + 1), self.dist[:k]))

    @property
    def upsilon3(self) -> np.ndarray:
        """Per-position footrule term: sum_j Pr(r=j)|i-j| - i Pr(r>k), i=1..k.

        The sign on the tail term is what makes the assignment cost exact;
        see ``topk.footrule_costs``.
        """
        k = self.k
        pos = np.arange(1, k + 1)
        spread = np.abs(pos[:, None] - pos[None, :]) @ self.dist[:k]
        return spread - pos * self.tail

    @property
    def upsilonH(self) -> float:
        cum = self.cumulative[: self.k]
        return float(np.sum(cum / np.arange(1, self.k + 1)))


def rank_profile(tree: AndXorTree, key: str, k: int) -> RankProfile:
    if k < 1:
        raise ValueError("k must be at least 1")
    alts = tree.alternatives_of(key)
    if not alts:
        raise KeyError(f"unknown key {key!r}")
    if not tree.is_numeric():
        raise TypeError("rank queries need numeric values on every leaf")
    n = len(tree.keys())
    size = max(n, k)
    dist = np.zeros(size)
    for alt in alts:
        def assign(leaf, alt=alt):
            if leaf == alt:
                return 1
            if leaf.key != key and ranks_above(leaf, alt):
                return 0
            return None

        poly = evaluate(tree, assign, (max(n - 1, 1), 1))
        for i in range(1, n + 1):
            dist[i - 1] += poly.coefficient(i - 1, 1)
    return RankProfile(key, k, dist)


def rank_profiles(tree: AndXorTree, k: int) -> dict[str, RankProfile]:
    return {key: rank_profile(tree, key, k) for key in tree.keys()}


def precedes_prob(tree: AndXorTree, key_i: str, key_j: str) -> float:
    """Pr(r(t_i) < r(t_j)); an absent tuple ranks below every present one."""
    if key_i == key_j:
        raise ValueError("keys must differ")
    alts_i = tree.alternatives_of(key_i)
    if not alts_i:
        raise KeyError(f"unknown key {key_i!r}")
    if not tree.alternatives_of(key_j):
        raise KeyError(f"unknown key {key_j!r}")
    total = 0.0
    for alt in alts_i:
        def assign(leaf, alt=alt):
            if leaf == alt:
                return 1
            if leaf.key == key_j and ranks_above(leaf, alt):
                return 0
            return None

        total += evaluate(tree, assign, (1, 1)).coefficient(0, 1)
    return total


def precedence_matrix(tree: AndXorTree, keys=None) -> np.ndarray:
    keys = list(tree.keys() if keys is None else keys)
    m = np.zeros((len(keys), len(keys)))
    for a, ki in enumerate(keys):
        for b, kj in enumerate(keys):
            if a != b:
                m[a, b] = precedes_prob(tree, ki, kj)
    return m


def cocluster_prob(tree: AndXorTree, key_i: str, key_j: str) -> float:
    """Pr(t_i and t_j share a value, or are both absent)."""
    if key_i == key_j:
        raise ValueError("keys must differ")
    alts_i = tree.alternatives_of(key_i)
    alts_j = tree.alternatives_of(key_j)
    if not alts_i or not alts_j:
        raise KeyError(f"unknown key {key_i if not alts_i else key_j!r}")
    shared = {a.value for a in alts_i} & {a.value for a in alts_j}
    total = 0.0
    for value in sorted(shared, key=str):
        pair = {TupleAlternative(key_i, value), TupleAlternative(key_j, value)}
        total += evaluate(tree, lambda a: 0 if a in pair else None, (2,)).coefficient(2)
    return total + absent_prob(tree, {key_i, key_j})

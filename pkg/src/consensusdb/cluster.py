"""Consensus clustering where tuples with equal values share a cluster."""
from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .genfunc import cocluster_prob
from .model import AndXorTree


@dataclass
class Clustering:
    clusters: list

    def __post_init__(self):
        self.clusters = sorted((sorted(c) for c in self.clusters if c), key=lambda c: c[0])

    def label_of(self) -> dict:
        return {t: i for i, c in enumerate(self.clusters) for t in c}


def pairwise_weights(tree: AndXorTree) -> tuple[list[str], np.ndarray]:
    """Keys and the symmetric co-cluster probability matrix (diagonal 1)."""
    keys = tree.keys()
    n = len(keys)
    w = np.eye(n)
    for a in range(n):
        for b in range(a + 1, n):
            w[a, b] = w[b, a] = cocluster_prob(tree, keys[a], keys[b])
    return keys, w


def clustering_cost(keys: list[str], w: np.ndarray, clustering: Clustering) -> float:
    """Expected pair disagreements: (1 - w) for joined pairs, w for split ones."""
    label = clustering.label_of()
    cost = 0.0
    for a in range(len(keys)):
        for b in range(a + 1, len(keys)):
            together = label[keys[a]] == label[keys[b]]
            cost += (1.0 - w[a, b]) if together else w[a, b]
    return cost


def pivot_clustering(keys: list[str], w: np.ndarray, rng: random.Random) -> Clustering:
    index = {t: a for a, t in enumerate(keys)}
    remaining = sorted(keys)
    clusters = []
    while remaining:
        pivot = rng.choice(remaining)
        p = index[pivot]
        cluster = [t for t in remaining if t == pivot or w[p, index[t]] >= 0.5]
        clusters.append(cluster)
        remaining = [t for t in remaining if t not in cluster]
    return Clustering(clusters)


def consensus_cluster(tree: AndXorTree, trials: int = 20, seed: int = 0) -> tuple[Clustering, float]:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    keys, w = pairwise_weights(tree)
    rng = random.Random(seed)
    best, best_cost = None, float("inf")
    for _ in range(trials):
        c = pivot_clustering(keys, w, rng)
        cost = clustering_cost(keys, w, c)
        if cost < best_cost - 1e-12:
            best, best_cost = c, cost
    return best, best_cost

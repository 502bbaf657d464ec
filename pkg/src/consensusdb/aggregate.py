"""Consensus answers for group-by count queries over independent tuples."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import PROB_TOL, AndXorTree, bid_blocks
from .solvers import FlowNetwork, InfeasibleError, solve_min_cost_flow


@dataclass
class GroupMatrix:
    """``P[i, j]`` = Pr(tuple i falls in group j); rows sum to one."""

    P: np.ndarray
    groups: list
    tuples: list = field(default_factory=list)

    def __post_init__(self):
        self.P = np.atleast_2d(np.asarray(self.P, dtype=float))
        if self.P.size == 0:
            self.P = self.P.reshape(0, len(self.groups))
        n, m = self.P.shape
        if m != len(self.groups):
            raise ValueError(f"{m} columns but {len(self.groups)} group names")
        if not self.tuples:
            self.tuples = [f"t{i + 1}" for i in range(n)]
        if len(self.tuples) != n:
            raise ValueError(f"{n} rows but {len(self.tuples)} tuple names")
        if np.any(self.P < -PROB_TOL) or np.any(self.P > 1 + PROB_TOL):
            raise ValueError("probabilities must lie in [0, 1]")
        bad = np.nonzero(np.abs(self.P.sum(axis=1) - 1.0) > PROB_TOL)[0]
        if bad.size:
            raise ValueError(f"row {self.tuples[bad[0]]!r} sums to {self.P[bad[0]].sum():.12g}, not 1")

    @property
    def shape(self):
        return self.P.shape


@dataclass
class CountVector:
    r: np.ndarray
    kind: str
    groups: list

    def as_dict(self) -> dict:
        if self.kind == "median":
            return {g: int(v) for g, v in zip(self.groups, self.r)}
        return {g: float(v) for g, v in zip(self.groups, self.r)}


def group_matrix_from_tree(tree: AndXorTree) -> GroupMatrix:
    """Read a BID tree whose values are group labels and whose keys always exist."""
    blocks = bid_blocks(tree)
    if blocks is None:
        raise ValueError("group-by needs independent tuples (a BID tree)")
    groups = sorted({str(a.value) for b in blocks for a, _ in b})
    col = {g: j for j, g in enumerate(groups)}
    rows, names = [], []
    for block in sorted(blocks, key=lambda b: b[0][0].key):
        row = np.zeros(len(groups))
        for alt, p in block:
            row[col[str(alt.value)]] += p
        rows.append(row)
        names.append(block[0][0].key)
    return GroupMatrix(np.array(rows).reshape(len(rows), len(groups)), groups, names)


def mean_counts(gm: GroupMatrix) -> CountVector:
    return CountVector(gm.P.sum(axis=0), "mean", gm.groups)


def _split(x: float) -> tuple[int, bool]:
    near = round(x)
    if abs(x - near) <= PROB_TOL:
        return int(near), False
    return math.floor(x), True


def median_counts(gm: GroupMatrix) -> CountVector:
    """Realizable count vector nearest the mean, via min-cost flow.

    Each group gets a fixed edge carrying ``floor(mean)`` units and, when the
    mean is fractional, one optional unit whose cost is the change in squared
    error from rounding up instead of down.
    """
    P = gm.P
    n, m = P.shape
    mean = P.sum(axis=0)
    net = FlowNetwork("s", "t", n)
    for i in range(n):
        net.add_edge("s", ("u", i), 0, 1)
        for j in range(m):
            if P[i, j] > 0:
                net.add_edge(("u", i), ("v", j), 0, 1)
    extra = {}
    floors = []
    for j in range(m):
        lo, fractional = _split(mean[j])
        floors.append(lo)
        net.add_edge(("v", j), "t", lo, lo)
        if fractional:
            c = (lo + 1 - mean[j]) ** 2 - (lo - mean[j]) ** 2
            extra[j] = net.add_edge(("v", j), "t", 0, 1, c)
    try:
        flow, _ = solve_min_cost_flow(net)
    except InfeasibleError as exc:
        raise RuntimeError(f"rounding network infeasible for a row-stochastic matrix: {exc}") from exc
    r = np.array([floors[j] + (flow[extra[j]] if j in extra else 0) for j in range(m)], dtype=int)
    return CountVector(r, "median", gm.groups)


def expected_sq_distance(gm: GroupMatrix, r) -> float:
    """E||r - R||^2 = sum_j Var(R_j) + (r_j - mean_j)^2."""
    r = np.asarray(getattr(r, "r", r), dtype=float)
    if r.shape != (gm.P.shape[1],):
        raise ValueError(f"count vector has shape {r.shape}, expected ({gm.P.shape[1]},)")
    P = gm.P
    var = float(np.sum(P * (1.0 - P)))
    return var + float(np.sum((r - P.sum(axis=0)) ** 2))

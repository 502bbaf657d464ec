"""Assignment and min-cost flow solvers shared by the consensus algorithms."""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Hashable

import numpy as np
from scipy.optimize import linear_sum_assignment

_EPS = 1e-9


class InfeasibleError(RuntimeError):
    pass


def _best_value(profit: np.ndarray) -> float:
    rows, cols = linear_sum_assignment(profit.T, maximize=True)
    return float(profit.T[rows, cols].sum())


def solve_assignment(profit) -> tuple[list[int], float]:
    """Maximum-profit assignment of ``k`` positions to ``n`` agents.

    ``profit[t, j]`` is the gain of placing agent ``t`` at position ``j``.
    Returns ``matching`` with ``matching[j]`` the agent at position ``j`` and
    the total profit. Among optimal matchings the lexicographically smallest
    agent sequence is returned.
    """
    profit = np.asarray(profit, dtype=float)
    if profit.ndim != 2:
        raise ValueError("profit must be a 2-D matrix")
    n, k = profit.shape
    if k > n:
        raise ValueError(f"{k} positions but only {n} agents")
    if not np.all(np.isfinite(profit)):
        raise ValueError("profit entries must be finite")
    if k == 0:
        return [], 0.0

    best = _best_value(profit)
    tol = _EPS * max(1.0, abs(best))
    free_agents = list(range(n))
    matching: list[int] = []
    fixed = 0.0
    for j in range(k):
        rest = profit[:, j + 1:]
        for agent in free_agents:
            others = [a for a in free_agents if a != agent]
            value = fixed + profit[agent, j]
            if rest.shape[1]:
                value += _best_value(rest[others])
            if value >= best - tol:
                matching.append(agent)
                fixed += profit[agent, j]
                free_agents = others
                break
        else:  # pragma: no cover - numerical breakdown
            raise RuntimeError("assignment refinement lost the optimum")
    return matching, float(profit[matching, range(k)].sum())


@dataclass
class FlowEdge:
    tail: Hashable
    head: Hashable
    lower: int
    upper: int
    cost: float = 0.0


@dataclass
class FlowNetwork:
    source: Hashable
    sink: Hashable
    value: int
    edges: list = field(default_factory=list)

    def add_edge(self, tail, head, lower: int = 0, upper: int = 1, cost: float = 0.0) -> int:
        self.edges.append(FlowEdge(tail, head, int(lower), int(upper), float(cost)))
        return len(self.edges) - 1

    def nodes(self) -> list:
        seen = {}
        for node in [self.source, self.sink]:
            seen.setdefault(node, None)
        for e in self.edges:
            seen.setdefault(e.tail, None)
            seen.setdefault(e.head, None)
        return list(seen)


class _Residual:
    def __init__(self, n: int):
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []
        self.cost: list[float] = []

    def add(self, u: int, v: int, cap: int, cost: float) -> int:
        idx = len(self.to)
        for a, b, c, w in ((u, v, cap, cost), (v, u, 0, -cost)):
            self.adj[a].append(len(self.to))
            self.to.append(b)
            self.cap.append(c)
            self.cost.append(w)
        return idx

    def bellman_ford(self, s: int) -> list[float]:
        n = len(self.adj)
        dist = [float("inf")] * n
        dist[s] = 0.0
        for _ in range(n):
            changed = False
            for u in range(n):
                if dist[u] == float("inf"):
                    continue
                for e in self.adj[u]:
                    if self.cap[e] > 0 and dist[u] + self.cost[e] < dist[self.to[e]] - _EPS:
                        dist[self.to[e]] = dist[u] + self.cost[e]
                        changed = True
            if not changed:
                return dist
        raise ValueError("network has a negative-cost cycle")

    def min_cost_flow(self, s: int, t: int, want: int) -> tuple[int, float]:
        """Successive shortest paths with Johnson potentials."""
        n = len(self.adj)
        pot = self.bellman_ford(s)
        pot = [p if p != float("inf") else 0.0 for p in pot]
        sent, total = 0, 0.0
        while sent < want:
            dist = [float("inf")] * n
            prev = [-1] * n
            dist[s] = 0.0
            heap = [(0.0, s)]
            while heap:
                d, u = heapq.heappop(heap)
                if d > dist[u] + _EPS:
                    continue
                for e in self.adj[u]:
                    if self.cap[e] <= 0:
                        continue
                    v = self.to[e]
                    nd = d + max(0.0, self.cost[e] + pot[u] - pot[v])
                    if nd < dist[v] - _EPS:
                        dist[v] = nd
                        prev[v] = e
                        heapq.heappush(heap, (nd, v))
            if dist[t] == float("inf"):
                break
            for v in range(n):
                if dist[v] < float("inf"):
                    pot[v] += dist[v]
            push = want - sent
            v = t
            while v != s:
                e = prev[v]
                push = min(push, self.cap[e])
                v = self.to[e ^ 1]
            v = t
            while v != s:
                e = prev[v]
                self.cap[e] -= push
                self.cap[e ^ 1] += push
                total += push * self.cost[e]
                v = self.to[e ^ 1]
            sent += push
        return sent, total


def solve_min_cost_flow(net: FlowNetwork) -> tuple[list[int], float]:
    """Minimum-cost integral flow of ``net.value`` from source to sink.

    Networks with a negative-cost cycle are rejected with ``ValueError``.

    Lower bounds are removed by routing each forced unit through a super
    source/sink pair; the reduced problem is solved by successive shortest
    paths. Returns the flow on each edge (in ``net.edges`` order) and the
    total cost. Raises :class:`InfeasibleError` if no feasible flow exists.
    """
    for e in net.edges:
        if e.lower < 0 or e.lower > e.upper:
            raise InfeasibleError(f"edge {e.tail}->{e.head} has bounds [{e.lower}, {e.upper}]")
    if net.value < 0:
        raise InfeasibleError("required flow value is negative")

    nodes = net.nodes()
    index = {node: i for i, node in enumerate(nodes)}
    super_s, super_t = len(nodes), len(nodes) + 1
    res = _Residual(len(nodes) + 2)

    balance = [0] * len(nodes)
    balance[index[net.source]] += net.value
    balance[index[net.sink]] -= net.value
    handles = []
    fixed_cost = 0.0
    for e in net.edges:
        u, v = index[e.tail], index[e.head]
        handles.append(res.add(u, v, e.upper - e.lower, e.cost))
        balance[u] -= e.lower
        balance[v] += e.lower
        fixed_cost += e.lower * e.cost

    need = 0
    for i, b in enumerate(balance):
        if b > 0:
            res.add(super_s, i, b, 0.0)
            need += b
        elif b < 0:
            res.add(i, super_t, -b, 0.0)

    sent, cost = res.min_cost_flow(super_s, super_t, need)
    if sent < need:
        raise InfeasibleError(f"only {sent} of {need} required units can be routed")
    flow = [e.lower + res.cap[h ^ 1] for e, h in zip(net.edges, handles)]
    return flow, fixed_cost + cost

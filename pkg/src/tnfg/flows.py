"""Combinatorial flow solvers and the post-attack flow evaluator."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .network import Attack, FlowScenario, Network, reroute_eligibility

_CAP_EPS = 1e-12


class _ResidualGraph:
    """Arc list with paired reverse arcs; arc ``a ^ 1`` is the reverse of ``a``."""

    def __init__(self, n):
        self.n = n
        self.head = []
        self.cap = []
        self.cost = []
        self.out = [[] for _ in range(n)]

    def add(self, u, v, cap, cost):
        a = len(self.head)
        self.head += [v, u]
        self.cap += [cap, 0.0]
        self.cost += [cost, -cost]
        self.out[u].append(a)
        self.out[v].append(a + 1)
        return a

    def flow(self, a):
        return self.cap[a ^ 1]


def _min_cost_augment(g: _ResidualGraph, s: int, t: int, limit: float, reward: float = 1.0):
    """Successive shortest paths from s to t while a path costs less than ``reward``.

    All forward arc costs must be non-negative.  Node potentials keep reduced
    costs non-negative so Dijkstra applies on every round.  Returns the total
    flow sent (at most ``limit``).
    """
    n = g.n
    pot = [0.0] * n
    sent = 0.0
    head, cap, cost, out = g.head, g.cap, g.cost, g.out
    inf = math.inf
    while sent < limit - _CAP_EPS:
        dist = [inf] * n
        prev = [-1] * n
        dist[s] = 0.0
        heap = [(0.0, s)]
        done = [False] * n
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            pu = pot[u]
            for a in out[u]:
                if cap[a] <= _CAP_EPS:
                    continue
                v = head[a]
                nd = d + cost[a] + pu - pot[v]
                if nd < dist[v] - 1e-15:
                    dist[v] = nd
                    prev[v] = a
                    heapq.heappush(heap, (nd, v))
        if dist[t] == inf:
            break
        path_cost = dist[t] + pot[t] - pot[s]
        if path_cost >= reward - 1e-12:
            break
        dt = dist[t]
        for v in range(n):
            pot[v] += dist[v] if dist[v] < dt else dt
        # bottleneck
        push = limit - sent
        v = t
        while v != s:
            a = prev[v]
            if cap[a] < push:
                push = cap[a]
            v = head[a ^ 1]
        if push == inf:
            raise ValueError("unbounded augmenting path")
        v = t
        while v != s:
            a = prev[v]
            cap[a] -= push
            cap[a ^ 1] += push
            v = head[a ^ 1]
        sent += push
    return sent


def max_flow_min_cost(net: Network) -> tuple[FlowScenario, float]:
    """Flow maximising throughput minus routing cost.

    Returns the flow (return edge included) and its objective
    ``x_ts - sum_e p_e x_e``.
    """
    g = _ResidualGraph(net.n_nodes)
    arcs = []
    for i in range(net.n_edges):
        u = net.capacity[i]
        arcs.append(g.add(int(net.tails[i]), int(net.heads[i]), u, float(net.cost[i]))
                    if u > _CAP_EPS else -1)
    value = _min_cost_augment(g, net.s, net.t, math.inf)
    x = np.zeros(net.n_edges + 1)
    for i, a in enumerate(arcs):
        if a >= 0:
            x[i] = g.flow(a)
    x[-1] = value
    flow = FlowScenario(net, x)
    return flow, flow.objective


def max_flow_value(net: Network, capacity=None):
    """Cost-free maximum s -> t flow by shortest augmenting paths (BFS).

    Returns ``(value, flow_vector, source_side_mask)``.
    """
    cap_vec = net.capacity if capacity is None else np.asarray(capacity, dtype=float)
    g = _ResidualGraph(net.n_nodes)
    arcs = []
    for i in range(net.n_edges):
        c = cap_vec[i]
        arcs.append(g.add(int(net.tails[i]), int(net.heads[i]), c, 0.0) if c > _CAP_EPS else -1)
    s, t = net.s, net.t
    total = 0.0
    while True:
        prev = [-1] * g.n
        seen = [False] * g.n
        seen[s] = True
        queue = [s]
        qi = 0
        while qi < len(queue) and not seen[t]:
            u = queue[qi]
            qi += 1
            for a in g.out[u]:
                v = g.head[a]
                if not seen[v] and g.cap[a] > _CAP_EPS:
                    seen[v] = True
                    prev[v] = a
                    queue.append(v)
        if not seen[t]:
            break
        push = math.inf
        v = t
        while v != s:
            a = prev[v]
            push = min(push, g.cap[a])
            v = g.head[a ^ 1]
        if push == math.inf:
            raise ValueError("infinite-capacity s-t path")
        v = t
        while v != s:
            a = prev[v]
            g.cap[a] -= push
            g.cap[a ^ 1] += push
            v = g.head[a ^ 1]
        total += push
    x = np.zeros(net.n_edges + 1)
    for i, a in enumerate(arcs):
        if a >= 0:
            x[i] = g.flow(a)
    x[-1] = total
    reachable = np.array(seen, dtype=bool)
    return total, x, reachable


def min_cut(net: Network) -> tuple[frozenset, float]:
    """Minimum-capacity s-t cut, routing costs ignored.

    The source side is the set of nodes reachable from s in the final
    residual graph.  Returns ``(source_side_node_ids, capacity)``.
    """
    _, _, reachable = max_flow_value(net)
    side = frozenset(net.nodes[i] for i in range(net.n_nodes) if reachable[i])
    cap = cut_capacity(net, side)
    return side, cap


def cut_capacity(net: Network, side) -> float:
    inside = np.array([v in side for v in net.nodes])
    m = net.n_edges
    crossing = inside[net.tails[:m]] & ~inside[net.heads[:m]]
    return float(net.capacity[:m][crossing].sum())


@dataclass
class AdjustedFlowResult:
    objective: float          # y_ts - sum p_e z_e
    y: np.ndarray             # resulting flow, return edge last
    z: np.ndarray             # rerouted excess over the committed flow

    @property
    def throughput(self) -> float:
        return float(self.y[-1])


def _bounds(net: Network, xbar: np.ndarray, attack: Attack, pi: np.ndarray):
    """Free and costly capacity per edge for the post-attack program."""
    attack_cap = net.capacity.copy()
    if attack:
        idx = list(attack)
        attack_cap[idx] = net.post_attack[idx]
    bound = np.where(pi > 0, net.capacity, xbar)
    total = np.minimum(attack_cap, bound)
    free = np.minimum(total, xbar)
    costly = np.maximum(total - xbar, 0.0)
    return free, costly


def identify_flow(net: Network, xbar, attack: Attack = (), pi: np.ndarray | None = None
                  ) -> AdjustedFlowResult:
    """Best post-attack rerouting of a committed flow.

    Solves ``max y_ts - sum p_e z_e`` under weak conservation, attacked edges
    capped at their post-attack capacity, edges without rerouting eligibility
    capped at the committed flow and ``z_e >= y_e - xbar_e``.  Each edge is
    split into a free arc (up to the committed flow) and a costly arc for the
    residual capacity; shortest paths are augmented while their cost is
    below the unit reward.
    """
    xb = xbar.values if isinstance(xbar, FlowScenario) else np.asarray(xbar, dtype=float)
    if pi is None:
        pi = reroute_eligibility(net, attack)
    free, costly = _bounds(net, xb, attack, pi)
    g = _ResidualGraph(net.n_nodes)
    m = net.n_edges
    tails = net.tails.tolist()
    heads = net.heads.tolist()
    cost = net.cost.tolist()
    free_l = free.tolist()
    costly_l = costly.tolist()
    free_arc = [-1] * m
    costly_arc = [-1] * m
    for i in range(m):
        if free_l[i] > _CAP_EPS:
            free_arc[i] = g.add(tails[i], heads[i], free_l[i], 0.0)
        if costly_l[i] > _CAP_EPS:
            costly_arc[i] = g.add(tails[i], heads[i], costly_l[i], cost[i])
    limit = float(min(free[-1] + costly[-1], xb[-1]))
    value = _min_cost_augment(g, net.s, net.t, limit) if limit > _CAP_EPS else 0.0
    y = np.zeros(m + 1)
    z = np.zeros(m + 1)
    for i in range(m):
        a, b = free_arc[i], costly_arc[i]
        fa = g.flow(a) if a >= 0 else 0.0
        fb = g.flow(b) if b >= 0 else 0.0
        y[i] = fa + fb
        z[i] = fb
    y[-1] = value
    objective = value - float(net.cost[:m] @ z[:m])
    return AdjustedFlowResult(objective, y, z)


def adaptive_value(net: Network, x, attack: Attack = ()) -> float:
    """Post-attack objective of committed flow ``x``, initial routing cost included."""
    xv = x.values if isinstance(x, FlowScenario) else np.asarray(x, dtype=float)
    res = identify_flow(net, xv, attack)
    return res.objective - float(net.cost[:-1] @ xv[:-1])


def identify_flow_lp(net: Network, xbar, attack: Attack = (), pi=None):
    """The post-attack program written out as a linear program.

    Independent of :func:`identify_flow`; used to cross-check it.  Returns
    ``(objective, y, z)`` or raises if the LP fails.
    """
    from .lp import LpBuilder, solve_lp

    xb = xbar.values if isinstance(xbar, FlowScenario) else np.asarray(xbar, dtype=float)
    if pi is None:
        pi = reroute_eligibility(net, attack)
    mu = np.zeros(net.n_edges + 1)
    mu[list(attack)] = 1
    lp = LpBuilder()
    M = net.n_edges + 1
    y = [lp.add_var(f"y{i}", 0.0, net.post_attack[i] if mu[i] else net.capacity[i])
         for i in range(M)]
    z = [lp.add_var(f"z{i}") for i in range(M)]
    lp.set_objective({y[-1]: 1.0, **{z[i]: -net.cost[i] for i in range(M) if net.cost[i]}})
    for v in range(net.n_nodes):
        if v == net.s:
            continue
        row = {}
        for i in range(M):
            if net.heads[i] == v:
                row[y[i]] = row.get(y[i], 0.0) + 1.0
            if net.tails[i] == v:
                row[y[i]] = row.get(y[i], 0.0) - 1.0
        lp.add_constraint(row, ">=", 0.0)
    for i in range(M):
        if pi[i]:
            lp.add_constraint({y[i]: 1.0}, "<=", net.capacity[i])
        else:
            lp.add_constraint({y[i]: 1.0}, "<=", xb[i])
        lp.add_constraint({z[i]: 1.0, y[i]: -1.0}, ">=", -xb[i])
    sol = solve_lp(lp.build())
    if sol.status != "optimal":
        raise RuntimeError(f"post-attack LP {sol.status}")
    yv = sol.x[y]
    zv = sol.x[z]
    return sol.objective, yv, zv

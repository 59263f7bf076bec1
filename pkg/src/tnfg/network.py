"""Directed network model, attacks and rerouting eligibility.

Edges are addressed by their position in ``Network.edges``; the artificial
return edge ``t -> s`` always sits at index ``len(net.edges)`` so flow
vectors have length ``net.n_edges + 1``.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

EPS_FLOW = 1e-6
RETURN_EDGE_ID = "ts"

Attack = tuple  # sorted tuple of edge indices


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    capacity: float
    cost: float = 0.0
    post_attack: float = 0.0
    attackable: bool = True


class NetworkError(ValueError):
    pass


class Network:
    """Immutable directed network with a designated source and terminal.

    Parameters
    ----------
    nodes : sequence of node ids, kept in the given order
    source, terminal : node ids
    edges : sequence of :class:`Edge`, excluding the return edge
    name : optional instance label
    """

    def __init__(self, nodes: Sequence[str], source: str, terminal: str,
                 edges: Sequence[Edge], name: str = "network",
                 metadata: dict | None = None):
        self.name = name
        self.nodes = tuple(str(v) for v in nodes)
        self.source = str(source)
        self.terminal = str(terminal)
        self.edges = tuple(edges)
        self.metadata = dict(metadata or {})

        if self.source == self.terminal:
            raise NetworkError("source and terminal must differ")
        self.node_index = {v: i for i, v in enumerate(self.nodes)}
        if len(self.node_index) != len(self.nodes):
            raise NetworkError("duplicate node ids")
        for v in (self.source, self.terminal):
            if v not in self.node_index:
                raise NetworkError(f"unknown node {v!r}")
        self.edge_index = {}
        for i, e in enumerate(self.edges):
            if e.id in self.edge_index or e.id == RETURN_EDGE_ID:
                raise NetworkError(f"duplicate edge id {e.id!r}")
            if e.tail not in self.node_index or e.head not in self.node_index:
                raise NetworkError(f"edge {e.id} references an unknown node")
            if not e.capacity >= 0 or e.cost < 0:
                raise NetworkError(f"edge {e.id}: negative capacity or cost")
            if not 0 <= e.post_attack <= e.capacity:
                raise NetworkError(f"edge {e.id}: post-attack capacity outside [0, U]")
            self.edge_index[e.id] = i
        self.return_edge = Edge(RETURN_EDGE_ID, self.terminal, self.source,
                                math.inf, 0.0, 0.0, attackable=False)
        self.edge_index[RETURN_EDGE_ID] = len(self.edges)

        m = len(self.edges)
        self.n_edges = m
        self.n_nodes = len(self.nodes)
        self.s = self.node_index[self.source]
        self.t = self.node_index[self.terminal]
        # arrays over all edges including the return edge (last slot)
        self.tails = np.array([self.node_index[e.tail] for e in self.edges] + [self.t], dtype=np.intp)
        self.heads = np.array([self.node_index[e.head] for e in self.edges] + [self.s], dtype=np.intp)
        self.capacity = np.array([e.capacity for e in self.edges] + [math.inf], dtype=float)
        self.cost = np.array([e.cost for e in self.edges] + [0.0], dtype=float)
        self.post_attack = np.array([e.post_attack for e in self.edges] + [0.0], dtype=float)
        self.attackable = tuple(i for i, e in enumerate(self.edges) if e.attackable)
        self._reach: np.ndarray | None = None

    def __repr__(self):
        return (f"Network({self.name!r}, nodes={self.n_nodes}, edges={self.n_edges}, "
                f"s={self.source!r}, t={self.terminal!r})")

    def all_edges(self) -> tuple[Edge, ...]:
        return self.edges + (self.return_edge,)

    def index(self, edge_id: str) -> int:
        return self.edge_index[edge_id]

    def edge_ids(self, indices: Iterable[int]) -> list[str]:
        return [self.all_edges()[i].id for i in indices]

    @property
    def reach(self) -> np.ndarray:
        """Boolean matrix, ``reach[u, v]`` iff a directed path u -> v exists.

        The return edge is ignored; the relation is reflexive.
        """
        if self._reach is None:
            self._reach = _reachability(self.n_nodes, self.tails[:-1], self.heads[:-1])
        return self._reach

    def check_incidence(self) -> list[str]:
        """Nodes without any incident edge (the return edge counts)."""
        touched = set(self.tails.tolist()) | set(self.heads.tolist())
        return [v for i, v in enumerate(self.nodes) if i not in touched]

    def off_walk_nodes(self) -> list[str]:
        """Nodes that do not lie on any s -> t walk."""
        r = self.reach
        on = r[self.s] & r[:, self.t]
        return [v for i, v in enumerate(self.nodes) if not on[i]]

    def longest_simple_path_bound(self) -> int:
        # exact longest simple path is NP-hard; on a DAG use DP, else |V| - 1
        order = _topological_order(self.n_nodes, self.tails[:-1], self.heads[:-1])
        if order is None:
            return self.n_nodes - 1
        depth = {v: -math.inf for v in range(self.n_nodes)}
        depth[self.s] = 0
        out = _adjacency(self.n_nodes, self.tails[:-1], self.heads[:-1])
        for u in order:
            if depth[u] == -math.inf:
                continue
            for v in out[u]:
                depth[v] = max(depth[v], depth[u] + 1)
        return int(depth[self.t]) if depth[self.t] > -math.inf else 0

    def cost_warnings(self) -> list[str]:
        """Edges whose routing cost exceeds 1/(2L)."""
        L = max(self.longest_simple_path_bound(), 1)
        limit = 1.0 / (2 * L)
        return [e.id for e in self.edges if e.cost > limit + 1e-12]

    def with_capacities(self, capacity: Mapping[int, float]) -> "Network":
        """Copy with some edge capacities replaced (post-attack capacities clamped)."""
        edges = []
        for i, e in enumerate(self.edges):
            if i in capacity:
                u = float(capacity[i])
                e = Edge(e.id, e.tail, e.head, u, e.cost, min(e.post_attack, u), e.attackable)
            edges.append(e)
        return Network(self.nodes, self.source, self.terminal, edges, self.name, self.metadata)

    def with_post_attack(self, value: float) -> "Network":
        edges = [Edge(e.id, e.tail, e.head, e.capacity, e.cost,
                      min(value, e.capacity), e.attackable) for e in self.edges]
        return Network(self.nodes, self.source, self.terminal, edges, self.name, self.metadata)


def _adjacency(n, tails, heads):
    out = [[] for _ in range(n)]
    for u, v in zip(tails.tolist(), heads.tolist()):
        out[u].append(v)
    return out


def _reachability(n, tails, heads) -> np.ndarray:
    out = _adjacency(n, tails, heads)
    reach = np.zeros((n, n), dtype=bool)
    for src in range(n):
        row = reach[src]
        row[src] = True
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in out[u]:
                if not row[v]:
                    row[v] = True
                    queue.append(v)
    return reach


def _topological_order(n, tails, heads):
    indeg = [0] * n
    out = _adjacency(n, tails, heads)
    for v in heads.tolist():
        indeg[v] += 1
    queue = deque(i for i in range(n) if indeg[i] == 0)
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in out[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return order if len(order) == n else None


# --------------------------------------------------------------------------
# flows

class FlowScenario:
    """Edge flows of a network, return edge included as the last entry."""

    def __init__(self, net: Network, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (net.n_edges + 1,):
            raise ValueError(f"expected {net.n_edges + 1} flow values, got {values.shape}")
        self.net = net
        self.values = values

    @classmethod
    def zero(cls, net: Network) -> "FlowScenario":
        return cls(net, np.zeros(net.n_edges + 1))

    @classmethod
    def from_dict(cls, net: Network, mapping: Mapping[str, float]) -> "FlowScenario":
        vals = np.zeros(net.n_edges + 1)
        for k, v in mapping.items():
            vals[net.index(k)] = float(v)
        if RETURN_EDGE_ID not in mapping:
            vals[-1] = _net_inflow(net, vals, net.t)
        return cls(net, vals)

    def __getitem__(self, edge_id: str) -> float:
        return float(self.values[self.net.index(edge_id)])

    @property
    def throughput(self) -> float:
        return float(self.values[-1])

    @property
    def routing_cost(self) -> float:
        return float(self.net.cost[:-1] @ self.values[:-1])

    @property
    def objective(self) -> float:
        return self.throughput - self.routing_cost

    def as_dict(self) -> dict[str, float]:
        return {e.id: float(v) for e, v in zip(self.net.all_edges(), self.values)}

    def __repr__(self):
        return f"FlowScenario(throughput={self.throughput:g}, cost={self.routing_cost:g})"


def _net_inflow(net: Network, vals: np.ndarray, node: int) -> float:
    m = net.n_edges
    inflow = vals[:m][net.heads[:m] == node].sum()
    outflow = vals[:m][net.tails[:m] == node].sum()
    return float(inflow - outflow)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    max_residual: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_flow(net: Network, x, tol: float = EPS_FLOW) -> ValidationReport:
    """Check capacity bounds and conservation at every node except the source.

    ``x`` may be a :class:`FlowScenario` or a mapping from edge id to flow; a
    mapping missing an edge (the return edge included) is a structural error.
    """
    report = ValidationReport()
    if isinstance(x, FlowScenario):
        vals = x.values
    else:
        vals = np.zeros(net.n_edges + 1)
        for e in net.all_edges():
            if e.id not in x:
                report.violations.append(f"missing flow value for edge {e.id}")
            else:
                vals[net.index(e.id)] = float(x[e.id])
        if report.violations:
            return report
    worst = 0.0
    for i, e in enumerate(net.all_edges()):
        v = vals[i]
        if not np.isfinite(v):
            report.violations.append(f"non-finite flow on {e.id}")
            continue
        if v < -tol:
            report.violations.append(f"negative flow on {e.id}: {v:g}")
        if v > net.capacity[i] + tol:
            report.violations.append(f"capacity violation on {e.id}: {v:g} > {net.capacity[i]:g}")
        worst = max(worst, -v, v - net.capacity[i])
    balance = np.zeros(net.n_nodes)
    np.add.at(balance, net.heads, vals)
    np.subtract.at(balance, net.tails, vals)
    for i, v in enumerate(net.nodes):
        if i == net.s:
            continue
        if abs(balance[i]) > tol:
            report.violations.append(f"conservation violated at {v}: imbalance {balance[i]:g}")
        worst = max(worst, abs(balance[i]))
    report.max_residual = float(max(worst, 0.0))
    return report


# --------------------------------------------------------------------------
# attacks

def make_attack(net: Network, edges: Iterable) -> Attack:
    """Normalise edge ids or indices into a sorted tuple of attackable indices."""
    idx = set()
    for e in edges:
        i = net.index(e) if isinstance(e, str) else int(e)
        if not 0 <= i < net.n_edges or not net.edges[i].attackable:
            raise ValueError(f"edge {e!r} cannot be attacked")
        idx.add(i)
    return tuple(sorted(idx))


def attack_indicator(net: Network, attack: Attack) -> np.ndarray:
    mu = np.zeros(net.n_edges + 1)
    mu[list(attack)] = 1.0
    return mu


def reroute_eligibility(net: Network, attack: Attack) -> np.ndarray:
    """0/1 vector ``pi``: 1 where flow of an attacked edge may be rerouted.

    ``pi_e = 1`` iff some attacked edge ``(u, v)`` has ``u`` reaching
    ``tail(e)`` and ``head(e)`` reaching the terminal.  This reachability test
    over-approximates membership of ``e`` in a simple ``u -> t`` path.
    """
    pi = np.zeros(net.n_edges + 1)
    if not attack:
        return pi
    reach = net.reach
    tails = net.tails[:-1]
    heads = net.heads[:-1]
    from_attacked = reach[net.tails[list(attack)]].any(axis=0)
    eligible = from_attacked[tails] & reach[heads, net.t]
    pi[:-1] = eligible
    return pi


def reroute_sources(net: Network) -> list[list[int]]:
    """``rho[e]``: edges which, if attacked, may reroute flow through ``e``."""
    reach = net.reach
    rho = []
    for i in range(net.n_edges):
        tail, head = net.tails[i], net.heads[i]
        if not reach[head, net.t]:
            rho.append([])
            continue
        rho.append([j for j in range(net.n_edges) if reach[net.tails[j], tail]])
    rho.append([])
    return rho


class AttackSpace:
    """All attacks of size ``0..gamma`` over the attackable edges.

    Iteration is size-major, lexicographic by edge index within a size.
    """

    def __init__(self, net: Network, gamma: int, candidates: Sequence[int] | None = None):
        if gamma < 0:
            raise ValueError("budget must be non-negative")
        pool = net.attackable if candidates is None else tuple(
            sorted(i for i in set(candidates) if i in set(net.attackable)))
        self.edges = pool
        self.gamma = min(gamma, len(pool))

    def __len__(self) -> int:
        return sum(math.comb(len(self.edges), k) for k in range(self.gamma + 1))

    def __iter__(self) -> Iterator[Attack]:
        for k in range(self.gamma + 1):
            yield from itertools.combinations(self.edges, k)


def attack_space(net: Network, gamma: int) -> AttackSpace:
    return AttackSpace(net, gamma)


# --------------------------------------------------------------------------
# construction helpers

def super_terminals(nodes: Sequence[str], edges: Sequence[Edge], sources: Sequence[str],
                    sinks: Sequence[str], name: str = "network",
                    super_source: str = "S*", super_sink: str = "T*") -> Network:
    """Single-source/single-sink network from several sources and sinks.

    Connecting edges carry unbounded capacity, zero cost and cannot be
    attacked.  With one source and one sink the network is returned as is.
    """
    sources, sinks = list(dict.fromkeys(sources)), list(dict.fromkeys(sinks))
    if not sources or not sinks:
        raise NetworkError("need at least one source and one sink")
    nodes = list(nodes)
    edges = list(edges)
    s, t = sources[0], sinks[0]
    if len(sources) > 1:
        s = super_source
        nodes.append(s)
        edges += [Edge(f"{s}->{v}", s, v, math.inf, 0.0, math.inf, attackable=False)
                  for v in sources]
    if len(sinks) > 1:
        t = super_sink
        nodes.append(t)
        edges += [Edge(f"{v}->{t}", v, t, math.inf, 0.0, math.inf, attackable=False)
                  for v in sinks]
    return Network(nodes, s, t, edges, name)


def connect_walks(nodes: Sequence[str], source: str, terminal: str, edges: list[Edge],
                  rng: np.random.Generator, make_edge) -> int:
    """Add random edges until every node lies on a source -> terminal walk.

    ``make_edge(tail, head, k)`` builds the k-th added edge.  Returns the
    number of edges added.
    """
    added = 0
    while True:
        net = Network(nodes, source, terminal, edges)
        r = net.reach
        from_s = r[net.s]
        to_t = r[:, net.t]
        if (from_s & to_t).all():
            return added
        bad = [i for i in range(net.n_nodes) if not (from_s[i] and to_t[i])]
        v = bad[0]
        if not from_s[v]:
            pool = [i for i in range(net.n_nodes) if from_s[i] and i != net.t]
            u = int(rng.choice(pool))
            tail, head = nodes[u], nodes[v]
        else:
            pool = [i for i in range(net.n_nodes) if to_t[i] and i != net.s]
            w = int(rng.choice(pool))
            tail, head = nodes[v], nodes[w]
        edges.append(make_edge(tail, head, added))
        added += 1


def generate_random(n_nodes: int, edge_density: float, cap_range=(1, 20),
                    cost_range=(0.01, 0.1), seed: int = 0, name: str | None = None) -> Network:
    """Random connected network: node 0 is the source, node n-1 the terminal.

    Every ordered pair (u, v) with u != terminal, v != source is an edge with
    probability ``edge_density``.  Capacities are uniform integers in
    ``cap_range``, costs uniform in ``cost_range`` rounded to 4 decimals.  If
    some node is off every s -> t walk, a random spine through the offending
    nodes is added.
    """
    if n_nodes < 2:
        raise ValueError("need at least two nodes")
    if not 0 < edge_density <= 1:
        raise ValueError("edge density must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    nodes = [str(i) for i in range(n_nodes)]
    s, t = 0, n_nodes - 1
    pairs = [(u, v) for u in range(n_nodes) for v in range(n_nodes)
             if u != v and u != t and v != s]
    keep = rng.random(len(pairs)) < edge_density
    chosen = [p for p, k in zip(pairs, keep) if k]

    def draw(u, v):
        cap = int(rng.integers(cap_range[0], cap_range[1] + 1))
        cost = round(float(rng.uniform(cost_range[0], cost_range[1])), 4)
        return cap, cost

    edges = []
    for u, v in chosen:
        cap, cost = draw(u, v)
        edges.append(Edge(f"e{len(edges) + 1}", nodes[u], nodes[v], cap, cost))

    net = Network(nodes, nodes[s], nodes[t], edges)
    off = [net.node_index[v] for v in net.off_walk_nodes() if v not in (nodes[s], nodes[t])]
    spine_added = 0
    if off or not net.reach[s, t]:
        order = [int(v) for v in rng.permutation(off)] if off else []
        path = [s] + order + [t]
        have = {(net.node_index[e.tail], net.node_index[e.head]) for e in edges}
        for u, v in zip(path, path[1:]):
            if (u, v) in have:
                continue
            cap, cost = draw(u, v)
            edges.append(Edge(f"e{len(edges) + 1}", nodes[u], nodes[v], cap, cost))
            spine_added += 1
    meta = {"generator": {"n_nodes": n_nodes, "edge_density": edge_density,
                          "cap_range": list(cap_range), "cost_range": list(cost_range),
                          "seed": seed}, "repair_edges": spine_added}
    return Network(nodes, nodes[s], nodes[t], edges,
                   name or f"rand-n{n_nodes}-d{edge_density:g}-s{seed}", meta)


def fixture_d1() -> Network:
    """Four-node reference network used throughout the tests and docs."""
    spec = [("e1", "s", "a", 10), ("e2", "s", "b", 5), ("e3", "a", "t", 6),
            ("e4", "a", "b", 4), ("e5", "b", "t", 8)]
    edges = [Edge(i, u, v, c, 0.01, 0.0) for i, u, v, c in spec]
    return Network(["s", "a", "b", "t"], "s", "t", edges, "D1")


def single_edge(capacity=5.0, cost=0.05) -> Network:
    return Network(["s", "t"], "s", "t", [Edge("e1", "s", "t", capacity, cost)], "single")

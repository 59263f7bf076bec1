"""Attack oracles: exact best response by enumeration and two heuristics.

All oracles minimise the adaptive value ``M(x, mu)`` of a committed flow.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .flows import adaptive_value, identify_flow
from .network import Attack, AttackSpace, Edge, FlowScenario, Network

log = logging.getLogger(__name__)

DEFAULT_GUARD = 2_000_000
TIE_EPS = 1e-9


class AttackSpaceTooLarge(RuntimeError):
    pass


@dataclass
class AttackResult:
    attack: Attack
    value: float                  # M(x, attack)
    method: str
    evaluations: int = 0          # identify_flow calls made by the search
    info: dict = field(default_factory=dict)

    def edge_ids(self, net: Network) -> list[str]:
        return net.edge_ids(self.attack)


def _vec(x) -> np.ndarray:
    return x.values if isinstance(x, FlowScenario) else np.asarray(x, dtype=float)


# --------------------------------------------------------------------------
# exact

def exact_attack(net: Network, x, gamma: int, candidates: Sequence[int] | None = None,
                 guard: int = DEFAULT_GUARD, upper: AttackResult | None = None) -> AttackResult:
    """Attack minimising ``M(x, mu)`` over every attack of size <= gamma.

    Attacks are scanned size-major, lexicographically by edge index, and
    the incumbent is replaced only by a strictly smaller value, so ties go
    to the smallest (then lexicographically first) attack.

    An attack is skipped when the bound ``M0 - sum_{e in mu} y0_e`` already
    reaches the incumbent: removing every unattacked-state flow path through
    an attacked edge leaves a feasible rerouting, so the adaptive value
    cannot drop below it.  ``upper`` optionally seeds the incumbent value
    (its attack is not returned unless re-found).
    """
    xv = _vec(x)
    space = AttackSpace(net, gamma, candidates)
    if len(space) > guard:
        raise AttackSpaceTooLarge(f"{len(space)} attacks exceed the guard of {guard}")
    const = float(net.cost[:-1] @ xv[:-1])
    r0 = identify_flow(net, xv)
    y0 = r0.y
    base = r0.objective - const
    best_val, best_att = round(base, 9), ()
    evals = 1
    cutoff = best_val
    if upper is not None:
        cutoff = min(cutoff, round(upper.value, 9))
    skipped = 0
    for att in space:
        if not att:
            continue
        lb = base - float(y0[list(att)].sum())
        if lb >= min(best_val, cutoff) - TIE_EPS:
            skipped += 1
            continue
        val = round(identify_flow(net, xv, att).objective - const, 9)
        evals += 1
        if val < best_val:
            best_val, best_att = val, att
    if upper is not None and round(upper.value, 9) < best_val:
        best_att = tuple(upper.attack)
    value = adaptive_value(net, xv, best_att)
    return AttackResult(best_att, value, "exact", evals, {"pruned": skipped})


# --------------------------------------------------------------------------
# greedy

def _greedy_setup(net, x, gamma, candidates):
    xv = _vec(x)
    pool = net.attackable if candidates is None else tuple(
        sorted(set(candidates) & set(net.attackable)))
    return xv, pool, min(gamma, len(pool))


def greedy_attack(net: Network, x, gamma: int, candidates: Sequence[int] | None = None,
                  trace: list | None = None) -> AttackResult:
    """Pick edges one at a time by largest marginal loss.

    After each pick the committed flow is replaced by the rerouted flow
    (re-basing), so the next gains are measured from the damaged state.
    Ties go to the lowest edge index.  ``trace`` collects
    ``(edge, raw_gain, bound)`` per evaluation when given.
    """
    xv, pool, k = _greedy_setup(net, x, gamma, candidates)
    if k == len(pool):
        att = tuple(pool)
        return AttackResult(att, adaptive_value(net, xv, att), "greedy", 0)
    xcur = xv.copy()
    base = float(xcur[-1])
    chosen: list[int] = []
    evals = 0
    for _ in range(k):
        best = None
        for e in pool:
            if e in chosen:
                continue
            res = identify_flow(net, xcur, tuple(sorted(chosen + [e])))
            evals += 1
            raw = base - res.objective
            bound = round(float(xcur[e]), 9)
            gain = min(round(raw, 9), bound)
            if trace is not None:
                trace.append((e, raw, float(xcur[e])))
            if best is None or gain > best[0]:
                best = (gain, e, res)
        _, e, res = best
        chosen.append(e)
        xcur = res.y.copy()
        base = float(xcur[-1])
    att = tuple(sorted(chosen))
    return AttackResult(att, adaptive_value(net, xv, att), "greedy", evals,
                        {"order": list(chosen)})


def accelerated_greedy_attack(net: Network, x, gamma: int,
                              candidates: Sequence[int] | None = None,
                              trace: list | None = None) -> AttackResult:
    """Greedy with lazy evaluation; selects exactly what :func:`greedy_attack` does.

    The loss from attacking one more edge never exceeds that edge's current
    flow, so edges are evaluated in decreasing-flow order and the scan stops
    once a realised gain beats every remaining flow bound.
    """
    xv, pool, k = _greedy_setup(net, x, gamma, candidates)
    if k == len(pool):
        att = tuple(pool)
        return AttackResult(att, adaptive_value(net, xv, att), "accelerated", 0)
    xcur = xv.copy()
    base = float(xcur[-1])
    chosen: list[int] = []
    evals = 0
    for _ in range(k):
        left = [e for e in pool if e not in chosen]
        bound = {e: round(float(xcur[e]), 9) for e in left}
        order = sorted(left, key=lambda e: (-bound[e], e))
        best = None
        for pos, e in enumerate(order):
            if best is not None:
                g, be, _ = best
                if bound[e] < g or (bound[e] == g and e > be):
                    break
            res = identify_flow(net, xcur, tuple(sorted(chosen + [e])))
            evals += 1
            raw = base - res.objective
            gain = min(round(raw, 9), bound[e])
            if trace is not None:
                trace.append((e, raw, float(xcur[e])))
            if best is None or gain > best[0] or (gain == best[0] and e < best[1]):
                best = (gain, e, res)
        _, e, res = best
        chosen.append(e)
        xcur = res.y.copy()
        base = float(xcur[-1])
    att = tuple(sorted(chosen))
    return AttackResult(att, adaptive_value(net, xv, att), "accelerated", evals,
                        {"order": list(chosen)})


# --------------------------------------------------------------------------
# partitioning

ART_SINK = "t^"
ART_SOURCE = "s^"


@dataclass
class SubProblem:
    net: Network
    flow: np.ndarray
    origin: list[list[int]]      # sub edge index -> original edge indices


@dataclass
class PartitionPair:
    first: SubProblem            # source side, ends in the artificial terminal
    second: SubProblem           # terminal side, fed by the artificial source
    sampled: tuple[str, ...]


def _fresh(name, taken):
    while name in taken:
        name += "'"
    return name


def partition_network(net: Network, x, seed: int = 0, round_: int = 0) -> PartitionPair:
    """Split the network into a source-side and a terminal-side sub-network.

    ``ceil(N/2) - 1`` non-terminal nodes are sampled to join the source.
    Edges from the first part into the second are cut in two: ``u -> t^``
    in the first part and ``s^ -> v`` in the second, parallel copies merged
    (flows, capacities and post-attack capacities summed, costs averaged).
    Edges from the second part back into the first are dropped.
    """
    xv = _vec(x)
    rng = np.random.default_rng([seed, round_])
    inner = [v for v in net.nodes if v not in (net.source, net.terminal)]
    k = min(max(math.ceil(net.n_nodes / 2) - 1, 0), len(inner))
    picked = set(rng.choice(len(inner), size=k, replace=False).tolist()) if k else set()
    sampled = tuple(inner[i] for i in sorted(picked))
    first_nodes = [net.source, *sampled]
    first_set = set(first_nodes)
    second_nodes = [v for v in net.nodes if v not in first_set]
    t_hat = _fresh(ART_SINK, set(net.nodes))
    s_hat = _fresh(ART_SOURCE, set(net.nodes))

    first_edges, first_orig = [], []
    second_edges, second_orig = [], []
    to_sink: dict[str, list[int]] = {}
    from_source: dict[str, list[int]] = {}
    for i, e in enumerate(net.edges):
        a, b = e.tail in first_set, e.head in first_set
        if a and b:
            first_edges.append(e)
            first_orig.append([i])
        elif not a and not b:
            second_edges.append(e)
            second_orig.append([i])
        elif a:
            to_sink.setdefault(e.tail, []).append(i)
            from_source.setdefault(e.head, []).append(i)

    def merged(tail, head, idx, eid):
        es = [net.edges[i] for i in idx]
        return Edge(eid, tail, head,
                    float(sum(e.capacity for e in es)),
                    float(np.mean([e.cost for e in es])),
                    float(sum(e.post_attack for e in es)),
                    any(e.attackable for e in es))

    for u, idx in to_sink.items():
        first_edges.append(merged(u, t_hat, idx, f"{u}->{t_hat}"))
        first_orig.append(idx)
    for v, idx in from_source.items():
        second_edges.append(merged(s_hat, v, idx, f"{s_hat}->{v}"))
        second_orig.append(idx)

    def build(nodes, s, t, edges, origin, tag):
        sub = Network(nodes, s, t, edges, f"{net.name}/{tag}")
        flow = np.zeros(sub.n_edges + 1)
        for j, idx in enumerate(origin):
            flow[j] = xv[idx].sum()
        heads = sub.heads[:-1]
        flow[-1] = flow[:-1][heads == sub.t].sum() - flow[:-1][sub.tails[:-1] == sub.t].sum()
        flow[-1] = max(flow[-1], 0.0)
        return SubProblem(sub, flow, origin)

    first = build(first_nodes + [t_hat], net.source, t_hat, first_edges, first_orig, "A")
    second = build([s_hat] + second_nodes, s_hat, net.terminal, second_edges, second_orig, "B")
    return PartitionPair(first, second, sampled)


def _solve_sub(sp: SubProblem, gamma: int, guard: int) -> AttackResult:
    try:
        return exact_attack(sp.net, sp.flow, gamma, guard=guard)
    except AttackSpaceTooLarge:
        return accelerated_greedy_attack(sp.net, sp.flow, gamma)


def partitioning_attack(net: Network, x, gamma: int, delta: int | None = None,
                        max_iters: int = 20, seed: int = 0,
                        guard: int = DEFAULT_GUARD) -> AttackResult:
    """Collect candidate edges from random two-way splits, then solve over them.

    Each round solves both halves with budget ``ceil(gamma/2)`` and adds the
    original edges behind every selected edge.  Rounds stop once ``delta``
    candidates are known (default ``5*gamma``) or after ``max_iters``.  The
    returned attack is the exact best response restricted to the candidates.
    """
    xv = _vec(x)
    if delta is None:
        delta = 5 * gamma
    sub_gamma = math.ceil(gamma / 2)
    cand: set[int] = set()
    evals = 0
    it = 0
    while len(cand) < delta and it < max_iters and net.n_nodes >= 4 and gamma > 0:
        pair = partition_network(net, xv, seed, it)
        for sp in (pair.first, pair.second):
            if sp.net.n_edges == 0:
                continue
            res = _solve_sub(sp, sub_gamma, guard)
            evals += res.evaluations
            for j in res.attack:
                cand.update(i for i in sp.origin[j] if net.edges[i].attackable)
        it += 1
    if net.n_nodes < 4 and gamma > 0:
        cand = set(net.attackable)
    try:
        res = exact_attack(net, xv, gamma, candidates=sorted(cand), guard=guard)
    except AttackSpaceTooLarge:
        res = accelerated_greedy_attack(net, xv, gamma, candidates=sorted(cand))
    return AttackResult(res.attack, res.value, "partition", evals + res.evaluations,
                        {"candidates": sorted(cand), "rounds": it})


# --------------------------------------------------------------------------

def best_attack(net: Network, x, gamma: int, mode: str = "exact", seed: int = 0,
                guard: int = DEFAULT_GUARD, delta: int | None = None,
                max_iters: int = 20) -> AttackResult:
    """Adversary best response in ``exact`` or ``heuristic`` mode.

    Heuristic mode returns the lower-valued of the lazy greedy and the
    partitioning attacks (greedy on ties).  Exact mode falls back to the
    heuristics, with a warning, when the attack space exceeds ``guard``.
    """
    if mode == "exact":
        try:
            return exact_attack(net, x, gamma, guard=guard)
        except AttackSpaceTooLarge as exc:
            warnings.warn(f"{exc}; using heuristic adversary", RuntimeWarning, stacklevel=2)
            res = best_attack(net, x, gamma, "heuristic", seed, guard, delta, max_iters)
            res.info["fallback"] = True
            return res
    if mode != "heuristic":
        raise ValueError(f"unknown adversary mode {mode!r}")
    a = accelerated_greedy_attack(net, x, gamma)
    b = partitioning_attack(net, x, gamma, delta, max_iters, seed, guard)
    pick = b if round(b.value, 9) < round(a.value, 9) else a
    return AttackResult(pick.attack, pick.value, f"heuristic:{pick.method}",
                        a.evaluations + b.evaluations,
                        {"greedy_value": a.value, "partition_value": b.value})

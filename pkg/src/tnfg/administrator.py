"""Defender policies: the multi-scenario robust LP and the four baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adversary import best_attack
from .flows import max_flow_min_cost, min_cut
from .lp import LpBuilder, LpError, solve_lp
from .network import Attack, FlowScenario, Network, reroute_eligibility

LP_TOL = 1e-9


class AttackPool:
    """Ordered attack scenarios without duplicates, with their eligibility vectors."""

    def __init__(self, net: Network, attacks=()):
        self.net = net
        self.attacks: list[Attack] = []
        self.pis: list[np.ndarray] = []
        for a in attacks:
            self.add(a)

    def add(self, attack) -> bool:
        a = tuple(sorted(int(i) for i in attack))
        if a in self.attacks:
            return False
        self.attacks.append(a)
        self.pis.append(reroute_eligibility(self.net, a))
        return True

    def __len__(self):
        return len(self.attacks)

    def __iter__(self):
        return iter(self.attacks)

    def __contains__(self, attack):
        return tuple(sorted(attack)) in self.attacks


@dataclass
class RobustFlowResult:
    flow: FlowScenario
    value: float                  # lambda, worst scenario objective (V^U)
    y: list[np.ndarray] = field(default_factory=list)
    z: list[np.ndarray] = field(default_factory=list)
    attacks: list[Attack] = field(default_factory=list)

    def scenario_values(self, net: Network) -> list[float]:
        c = net.cost[:-1]
        x = self.flow.values
        return [float(y[-1] - c @ (x[:-1] + z[:-1])) for y, z in zip(self.y, self.z)]


def _incidence(net: Network):
    """Per node: list of (edge index, +1 for inflow / -1 for outflow)."""
    inc = [[] for _ in range(net.n_nodes)]
    for i in range(net.n_edges + 1):
        inc[int(net.heads[i])].append((i, 1.0))
        inc[int(net.tails[i])].append((i, -1.0))
    return inc


def robust_flow(net: Network, pool: AttackPool | None = None) -> RobustFlowResult:
    """Flow maximising the worst adaptive value over the pool's attacks.

    One block of rerouting variables ``y^k, z^k`` per attack; ``lambda``
    is bounded by each scenario's objective.  An empty pool is treated as
    the single no-attack scenario, which makes the problem a min-cost
    max-flow LP.
    """
    attacks = list(pool.attacks) if pool is not None and len(pool) else [()]
    pis = list(pool.pis) if pool is not None and len(pool) else [np.zeros(net.n_edges + 1)]
    M = net.n_edges + 1
    inc = _incidence(net)
    cost = net.cost
    lp = LpBuilder()
    x = [lp.add_var(f"x_{e.id}", 0.0, float(net.capacity[i])) for i, e in enumerate(net.all_edges())]
    lam = lp.add_var("lambda", 0.0)
    lp.set_objective({lam: 1.0})
    for v in range(net.n_nodes):
        if v == net.s:
            continue
        lp.add_constraint({x[i]: sgn for i, sgn in inc[v]}, "=", 0.0)
    ys, zs = [], []
    for k, (att, pi) in enumerate(zip(attacks, pis)):
        hit = set(att)
        y = [lp.add_var(f"y{k}_{i}", 0.0,
                        float(net.post_attack[i] if i in hit else net.capacity[i]))
             for i in range(M)]
        z = [lp.add_var(f"z{k}_{i}", 0.0) for i in range(M)]
        row = {lam: 1.0, y[-1]: -1.0}
        for i in range(M - 1):
            if cost[i]:
                row[x[i]] = cost[i]
                row[z[i]] = cost[i]
        lp.add_constraint(row, "<=", 0.0)
        for i in range(M):
            lp.add_constraint({z[i]: 1.0, y[i]: -1.0, x[i]: 1.0}, ">=", 0.0)
            if not pi[i]:
                lp.add_constraint({y[i]: 1.0, x[i]: -1.0}, "<=", 0.0)
        for v in range(net.n_nodes):
            if v == net.s:
                continue
            lp.add_constraint({y[i]: sgn for i, sgn in inc[v]}, ">=", 0.0)
        ys.append(y)
        zs.append(z)
    sol = solve_lp(lp.build())
    if sol.status != "optimal":
        raise LpError(f"administrator LP {sol.status}")
    xv = np.clip(sol.x[x], 0.0, None)
    flow = FlowScenario(net, xv)
    return RobustFlowResult(flow, float(sol.x[lam]),
                            [sol.x[y] for y in ys], [sol.x[z] for z in zs], attacks)


# --------------------------------------------------------------------------
# baselines

def mf_flow(net: Network) -> FlowScenario:
    return max_flow_min_cost(net)[0]


def osp_flow(net: Network, gamma: int, mode: str = "exact", seed: int = 0,
             return_attack: bool = False):
    """Replan once: attack the max-flow, then route max-flow on the damaged network."""
    base = mf_flow(net)
    if gamma <= 0:
        return (base, ()) if return_attack else base
    att = best_attack(net, base, gamma, mode, seed=seed).attack
    damaged = net.with_capacities({i: net.post_attack[i] for i in att})
    flow = FlowScenario(net, max_flow_min_cost(damaged)[0].values)
    return (flow, att) if return_attack else flow


@dataclass
class RfResult:
    flow: FlowScenario
    objective: float
    theta: dict[int, float]
    zeta: float

    def inner_value(self, gamma: int) -> float:
        return float(sum(self.theta.values()) + self.zeta * gamma)


def rf_solve(net: Network, gamma: int) -> RfResult:
    """Robust flow assuming the Γ attacked edges lose all their flow.

    The inner worst case (sum of the Γ largest attackable edge flows) is
    replaced by its LP dual, giving ``max x_ts - sum theta - Γ zeta`` with
    ``theta_e + zeta >= x_e``.
    """
    inc = _incidence(net)
    lp = LpBuilder()
    x = [lp.add_var(f"x_{e.id}", 0.0, float(net.capacity[i])) for i, e in enumerate(net.all_edges())]
    theta = {i: lp.add_var(f"theta_{net.edges[i].id}") for i in net.attackable}
    zeta = lp.add_var("zeta")
    obj = {x[-1]: 1.0, zeta: -float(gamma)}
    for j in theta.values():
        obj[j] = -1.0
    lp.set_objective(obj)
    for v in range(net.n_nodes):
        if v == net.s:
            continue
        lp.add_constraint({x[i]: sgn for i, sgn in inc[v]}, "=", 0.0)
    for i, j in theta.items():
        lp.add_constraint({j: 1.0, zeta: 1.0, x[i]: -1.0}, ">=", 0.0)
    sol = solve_lp(lp.build())
    if sol.status != "optimal":
        raise LpError(f"RF LP {sol.status}")
    xv = np.clip(sol.x[x], 0.0, None)
    return RfResult(FlowScenario(net, xv), sol.objective,
                    {i: float(sol.x[j]) for i, j in theta.items()}, float(sol.x[zeta]))


def rf_flow(net: Network, gamma: int) -> FlowScenario:
    return rf_solve(net, gamma).flow


def aamf_flow(net: Network, gamma: int) -> FlowScenario:
    """Approximate adaptive max-flow across the minimum cut.

    Maximises net flow over the min cut minus ``gamma * theta`` where
    ``theta`` caps every attackable edge flow; routing costs are ignored.
    A second LP keeps that value and minimises total flow, which removes
    idle circulation and settles ties.
    """
    side, _ = min_cut(net)
    inside = np.array([v in side for v in net.nodes])
    m = net.n_edges
    fwd = [i for i in range(m) if inside[net.tails[i]] and not inside[net.heads[i]]]
    back = [i for i in range(m) if not inside[net.tails[i]] and inside[net.heads[i]]]
    inc = _incidence(net)

    def model():
        lp = LpBuilder()
        x = [lp.add_var(f"x_{e.id}", 0.0, float(net.capacity[i])) for i, e in enumerate(net.edges)]
        th = lp.add_var("theta")
        for v in range(net.n_nodes):
            if v in (net.s, net.t):
                continue
            lp.add_constraint({x[i]: sgn for i, sgn in inc[v] if i < m}, "=", 0.0)
        for i in net.attackable:
            lp.add_constraint({x[i]: 1.0, th: -1.0}, "<=", 0.0)
        obj = {x[i]: 1.0 for i in fwd}
        for i in back:
            obj[x[i]] = obj.get(x[i], 0.0) - 1.0
        obj[th] = -float(gamma)
        return lp, x, th, obj

    lp, x, th, obj = model()
    lp.set_objective(obj)
    first = solve_lp(lp.build())
    if first.status != "optimal":
        raise LpError(f"AAMF LP {first.status}")
    lp, x, th, obj = model()
    lp.add_constraint(obj, ">=", first.objective - LP_TOL * max(1.0, abs(first.objective)))
    lp.set_objective({j: -1.0 for j in x})
    second = solve_lp(lp.build())
    xs = second.x if second.status == "optimal" else first.x
    xv = np.zeros(m + 1)
    xv[:m] = np.clip(xs[x], 0.0, None)
    t = net.t
    xv[m] = xv[:m][net.heads[:m] == t].sum() - xv[:m][net.tails[:m] == t].sum()
    return FlowScenario(net, xv)


BASELINES = {
    "mf": lambda net, gamma, mode="exact", seed=0: mf_flow(net),
    "osp": lambda net, gamma, mode="exact", seed=0: osp_flow(net, gamma, mode, seed),
    "rf": lambda net, gamma, mode="exact", seed=0: rf_flow(net, gamma),
    "aamf": lambda net, gamma, mode="exact", seed=0: aamf_flow(net, gamma),
}

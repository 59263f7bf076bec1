"""The administrator/adversary iteration producing a maximin flow."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .administrator import AttackPool, BASELINES, robust_flow
from .adversary import AttackSpaceTooLarge, DEFAULT_GUARD, best_attack, exact_attack
from .network import Attack, FlowScenario, Network

log = logging.getLogger(__name__)

REASONS = ("bounds_met", "flow_repeated", "attack_repeated", "iteration_cap")


@dataclass
class GameConfig:
    adversary_mode: str = "exact"
    eps_conv: float = 1e-6
    eps_flow_eq: float = 1e-6
    max_iterations: int = 50
    seed: int = 0
    guard: int = DEFAULT_GUARD
    timing: bool = False


@dataclass
class IterationRecord:
    k: int
    flow: np.ndarray
    attack: Attack
    V_U: float
    V_L: float
    method: str
    seconds: float = 0.0


@dataclass
class GameTrace:
    instance: str
    gamma: int
    records: list[IterationRecord] = field(default_factory=list)
    reason: str = ""
    final_objective: float = float("nan")
    final_attack: Attack = ()
    certificate: str = ""           # exact | heuristic-certified
    certified_value: float | None = None

    @property
    def iterations(self) -> int:
        return len(self.records)

    def upper_bounds(self) -> list[float]:
        return [r.V_U for r in self.records]

    def to_dict(self, net: Network) -> dict:
        ids = [e.id for e in net.all_edges()]
        its = []
        for r in self.records:
            item = {"k": r.k, "V_U": r.V_U, "V_L": r.V_L,
                    "attack": net.edge_ids(r.attack),
                    "flow": {i: float(v) for i, v in zip(ids, r.flow)}}
            if r.seconds:
                item["seconds"] = r.seconds
            its.append(item)
        return {"instance": self.instance, "gamma": self.gamma, "iterations": its,
                "convergence_reason": self.reason, "final_objective": self.final_objective}

    def to_json(self, net: Network, **kw) -> str:
        return json.dumps(self.to_dict(net), **kw)


def solve_tnfg(net: Network, gamma: int, config: GameConfig | None = None
               ) -> tuple[FlowScenario, GameTrace]:
    """Alternate robust flows against the attack pool and best responses to them.

    Stops when the bounds meet, when the administrator proposes a flow it
    already executed, when the adversary repeats its previous attack, or
    at the iteration cap (the best lower bound seen is returned then).
    """
    cfg = config or GameConfig()
    trace = GameTrace(net.name, gamma)
    pool = AttackPool(net)
    executed: list[tuple[np.ndarray, float, Attack]] = []
    prev_attack = None
    final = None
    for k in range(1, cfg.max_iterations + 1):
        t0 = time.perf_counter()
        rob = robust_flow(net, pool)
        x = rob.flow.values
        v_up = rob.value
        seen = next((e for e in executed if np.max(np.abs(e[0] - x)) <= cfg.eps_flow_eq), None)
        if seen is not None:
            trace.reason = "flow_repeated"
            final = seen
            break
        res = best_attack(net, x, gamma, cfg.adversary_mode, seed=cfg.seed, guard=cfg.guard)
        v_low = res.value
        rec = IterationRecord(k, x.copy(), res.attack, v_up, v_low, res.method,
                              time.perf_counter() - t0 if cfg.timing else 0.0)
        trace.records.append(rec)
        executed.append((x.copy(), v_low, res.attack))
        log.debug("iter %d  V_U=%.9g  V_L=%.9g  attack=%s", k, v_up, v_low, res.attack)
        if abs(v_up - v_low) <= cfg.eps_conv:
            trace.reason = "bounds_met"
            final = executed[-1]
            break
        if prev_attack is not None and res.attack == prev_attack:
            trace.reason = "attack_repeated"
            final = executed[-1]
            break
        prev_attack = res.attack
        pool.add(res.attack)
    else:
        trace.reason = "iteration_cap"
        final = max(executed, key=lambda e: e[1])
    x, value, attack = final
    trace.final_objective = float(value)
    trace.final_attack = attack
    flow = FlowScenario(net, x)
    if cfg.adversary_mode == "exact":
        trace.certificate = "exact"
        trace.certified_value = float(value)
    else:
        try:
            cert = exact_attack(net, x, gamma, guard=cfg.guard)
            trace.certificate = "exact"
            trace.certified_value = cert.value
        except AttackSpaceTooLarge:
            trace.certificate = "heuristic-certified"
    return flow, trace


@dataclass
class MaximinReport:
    ok: bool
    value: float
    claimed: float
    counterexample: Attack | None = None
    baseline_values: dict[str, float] = field(default_factory=dict)
    messages: list[str] = field(default_factory=list)


def verify_maximin(net: Network, gamma: int, flow, value: float, tol: float = 1e-6,
                   baselines: dict[str, FlowScenario] | None = None,
                   mode: str = "exact") -> MaximinReport:
    """Check a claimed maximin value by exact enumeration and compare with baselines.

    ``baselines`` defaults to the MF, OSP, RF and AAMF flows.
    """
    x = flow.values if isinstance(flow, FlowScenario) else np.asarray(flow, dtype=float)
    res = exact_attack(net, x, gamma)
    report = MaximinReport(True, res.value, value)
    if abs(res.value - value) > tol:
        report.ok = False
        report.counterexample = res.attack
        report.messages.append(
            f"worst attack {net.edge_ids(res.attack)} gives {res.value:.9g}, claimed {value:.9g}")
    if baselines is None:
        baselines = {name: fn(net, gamma, mode) for name, fn in BASELINES.items()}
    for name, xb in baselines.items():
        vb = exact_attack(net, xb, gamma).value
        report.baseline_values[name] = vb
        if res.value < vb - tol:
            report.ok = False
            report.messages.append(f"{name} is better: {vb:.9g} > {res.value:.9g}")
    return report

"""Evaluation protocol, metrics and the experiment runner."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .administrator import aamf_flow, mf_flow, osp_flow, rf_flow
from .adversary import best_attack
from .flows import identify_flow
from .formats import load_network
from .game import GameConfig, solve_tnfg
from .network import FlowScenario, Network, fixture_d1, generate_random

log = logging.getLogger(__name__)

APPROACHES = ("MF", "OSP", "RF", "AAMF", "RAMF")
COLUMNS = ("instance", "seed", "gamma", "approach", "objective", "lost_flow", "gain_pct",
           "throughput", "attack", "attacked_mean_flow", "mean_residual", "iterations",
           "runtime_ms", "error")


@dataclass
class Metrics:
    objective: float              # adaptive value under the worst attack found
    lost_flow: float              # flow leaving s under x minus flow reaching t after the attack
    attack: tuple
    throughput: float
    attacked_mean_flow: float | None
    mean_residual: float | None
    method: str = ""


def evaluate_approach(net: Network, x, gamma: int, mode: str = "exact", seed: int = 0) -> Metrics:
    """Let the adversary respond to ``x`` and measure the outcome."""
    xv = x.values if isinstance(x, FlowScenario) else np.asarray(x, dtype=float)
    res = best_attack(net, xv, gamma, mode, seed=seed)
    post = identify_flow(net, xv, res.attack)
    m = net.n_edges
    sent = float(xv[:m][net.tails[:m] == net.s].sum() - xv[:m][net.heads[:m] == net.s].sum())
    lost = max(sent - post.throughput, 0.0)
    attacked = float(np.mean(xv[list(res.attack)])) if res.attack else None
    inner = [i for i in range(m) if net.tails[i] != net.s and net.heads[i] != net.t
             and xv[i] > 1e-9]
    resid = float(np.mean(net.capacity[inner] - xv[inner])) if inner else None
    return Metrics(res.value, lost, res.attack, float(xv[-1]), attacked, resid, res.method)


def gain_pct(obj_ramf: float, obj_baseline: float, u_max: float, gamma: int):
    """Objective difference as a percentage of ``u_max * gamma``; None for gamma = 0."""
    if gamma <= 0:
        return None
    if u_max <= 0:
        raise ValueError("largest capacity must be positive")
    return (obj_ramf - obj_baseline) * 100.0 / (u_max * gamma)


# --------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    instances: list = field(default_factory=list)   # paths or {"generator": {...}} / "D1"
    gamma: int = 1
    seeds: list = field(default_factory=lambda: [0])
    me: float | None = None
    mode: str = "exact"
    approaches: list = field(default_factory=lambda: list(APPROACHES))
    source: str | None = None
    sink: str | None = None
    out_csv: str | None = None
    out_json: str | None = None
    timing: bool = False
    max_iterations: int = 50

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "ExperimentConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**known)
        cfg.approaches = [a.upper() for a in cfg.approaches]
        bad = set(cfg.approaches) - set(APPROACHES)
        if bad:
            raise ValueError(f"unknown approaches: {sorted(bad)}")
        if base is not None:
            cfg.instances = [str(base / p) if isinstance(p, str) and p != "D1"
                             and not Path(p).is_absolute() else p for p in cfg.instances]
            for k in ("out_csv", "out_json"):
                v = getattr(cfg, k)
                if v and not Path(v).is_absolute():
                    setattr(cfg, k, str(base / v))
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        data = yaml.safe_load(path.read_text())   # JSON is valid YAML
        return cls.from_dict(data or {}, path.parent)


def _instance(spec, seed, cfg: ExperimentConfig) -> Network:
    if spec == "D1":
        net = fixture_d1()
    elif isinstance(spec, dict):
        g = dict(spec.get("generator", spec))
        g.setdefault("seed", seed)
        net = generate_random(int(g["n_nodes"]), float(g["edge_density"]),
                              tuple(g.get("cap_range", (1, 20))),
                              tuple(g.get("cost_range", (0.01, 0.1))), int(g["seed"]))
    else:
        net = load_network(spec, seed=seed, source=cfg.source, sink=cfg.sink)
    if cfg.me is not None:
        net = net.with_post_attack(cfg.me)
    return net


def _sig(v):
    if v is None:
        return None
    return float(f"{v:.9g}")


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Evaluate every requested policy on every instance and seed.

    Rows carry the flow and attack so any objective can be recomputed.
    Failures on one instance become an error row and the run continues.
    Output files are written when paths are configured.
    """
    rows = []
    for spec in cfg.instances:
        for seed in cfg.seeds:
            label = spec if isinstance(spec, str) else None
            try:
                net = _instance(spec, seed, cfg)
                label = net.name if not isinstance(spec, str) or spec == "D1" else Path(spec).stem
                rows.extend(_run_one(net, label, seed, cfg))
            except Exception as exc:  # isolate the instance, keep going
                log.exception("instance %s seed %s failed", spec, seed)
                rows.append({"instance": label or json.dumps(spec, sort_keys=True),
                             "seed": seed, "gamma": cfg.gamma, "approach": "",
                             "error": f"{type(exc).__name__}: {exc}"})
    if cfg.out_csv:
        Path(cfg.out_csv).write_text(rows_to_csv(rows))
    if cfg.out_json:
        Path(cfg.out_json).write_text(rows_to_json(rows, cfg))
    return rows


def _run_one(net: Network, label, seed, cfg: ExperimentConfig) -> list[dict]:
    gamma, mode = cfg.gamma, cfg.mode
    flows, iters, times = {}, {}, {}
    builders = {
        "MF": lambda: mf_flow(net),
        "OSP": lambda: osp_flow(net, gamma, mode, seed),
        "RF": lambda: rf_flow(net, gamma),
        "AAMF": lambda: aamf_flow(net, gamma),
    }
    for name in cfg.approaches:
        t0 = time.perf_counter()
        if name == "RAMF":
            flow, trace = solve_tnfg(net, gamma, GameConfig(mode, seed=seed,
                                                           max_iterations=cfg.max_iterations))
            iters[name] = trace.iterations
        else:
            flow = builders[name]()
        flows[name] = flow
        times[name] = (time.perf_counter() - t0) * 1000.0
    metrics = {name: evaluate_approach(net, f, gamma, mode, seed) for name, f in flows.items()}
    u_max = float(net.capacity[:-1].max()) if net.n_edges else 0.0
    rows = []
    for name in cfg.approaches:
        mt = metrics[name]
        gain = None
        if "RAMF" in metrics and u_max > 0:
            gain = gain_pct(metrics["RAMF"].objective, mt.objective, u_max, gamma)
        rows.append({
            "instance": label, "seed": seed, "gamma": gamma, "approach": name,
            "objective": _sig(mt.objective), "lost_flow": _sig(mt.lost_flow),
            "gain_pct": _sig(gain), "throughput": _sig(mt.throughput),
            "attack": net.edge_ids(mt.attack),
            "attacked_mean_flow": _sig(mt.attacked_mean_flow),
            "mean_residual": _sig(mt.mean_residual),
            "iterations": iters.get(name),
            "runtime_ms": _sig(times[name]) if cfg.timing else None,
            "error": "",
            "flow": {e.id: _sig(v) for e, v in zip(net.all_edges(), flows[name].values)},
        })
    return rows


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.9g}"
    if isinstance(v, (list, tuple)):
        return " ".join(str(a) for a in v)
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in COLUMNS])
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    """Parse :func:`rows_to_csv` output back into typed rows."""
    out = []
    for r in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in r.items():
            if k in ("instance", "approach", "error"):
                row[k] = v
            elif k == "attack":
                row[k] = v.split() if v else []
            elif v == "":
                row[k] = None
            elif k in ("seed", "gamma", "iterations"):
                row[k] = int(v)
            else:
                row[k] = float(v)
        out.append(row)
    return out


def summarize(rows: list[dict]) -> dict:
    """Mean objective, lost flow and gain per approach over successful rows."""
    out = {}
    for name in APPROACHES:
        sel = [r for r in rows if r.get("approach") == name and not r.get("error")]
        if not sel:
            continue
        entry = {"rows": len(sel)}
        for key in ("objective", "lost_flow", "gain_pct"):
            vals = [r[key] for r in sel if r.get(key) is not None]
            entry[key] = _sig(float(np.mean(vals))) if vals else None
        out[name] = entry
    return out


def rows_to_json(rows: list[dict], cfg: ExperimentConfig | None = None) -> str:
    doc = {"rows": rows, "summary": summarize(rows)}
    if cfg is not None:
        doc["config"] = {"gamma": cfg.gamma, "mode": cfg.mode, "seeds": cfg.seeds,
                         "approaches": cfg.approaches, "me": cfg.me}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"

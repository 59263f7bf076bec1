"""Command line entry point ``tnfg``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path


from . import adversary
from .administrator import aamf_flow, mf_flow, osp_flow, rf_flow
from .experiment import (ExperimentConfig, evaluate_approach, rows_to_csv, rows_to_json,
                         run_experiment)
from .formats import format_native, load_network
from .game import GameConfig, solve_tnfg, verify_maximin
from .network import FlowScenario, fixture_d1, generate_random


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(args):
    if args.instance == "D1":
        net = fixture_d1()
        return net.with_post_attack(args.me) if args.me is not None else net
    return load_network(args.instance, args.format_in, args.seed, args.source, args.sink, args.me)


def _load_flow(net, path):
    if not path:
        return mf_flow(net)
    data = json.loads(Path(path).read_text())
    data = data.get("flow", data)
    return FlowScenario.from_dict(net, data)


def _flow_doc(net, flow, extra=None):
    doc = {"instance": net.name, "flow": flow.as_dict()}
    doc.update(extra or {})
    return doc


def _table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    cols = list(rows[0]) if rows else []
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(_fmt(r[c]) for c in cols))
    return "\n".join(lines) + "\n"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.9g}"
    if isinstance(v, (list, tuple)):
        return " ".join(map(str, v))
    return str(v)


def cmd_gen(args):
    net = generate_random(args.nodes, args.density, tuple(args.cap_range), tuple(args.cost_range),
                          args.seed)
    if args.me is not None:
        net = net.with_post_attack(args.me)
    _emit(format_native(net), args.out)


def cmd_solve(args):
    net = _load(args)
    flow, trace = solve_tnfg(net, args.gamma, GameConfig(args.mode, eps_conv=args.tol,
                                                         max_iterations=args.max_iter,
                                                         seed=args.seed))
    if args.format == "json":
        _emit(trace.to_json(net, indent=2) + "\n", args.out)
    else:
        rows = [{"k": r.k, "V_U": r.V_U, "V_L": r.V_L, "attack": net.edge_ids(r.attack)}
                for r in trace.records]
        _emit(_table(rows, "csv"), args.out)
    print(f"{trace.reason} after {trace.iterations} iterations, value {trace.final_objective:.9g}",
          file=sys.stderr)


def cmd_baseline(args):
    net = _load(args)
    fn = {"mf": lambda: mf_flow(net), "osp": lambda: osp_flow(net, args.gamma, args.mode, args.seed),
          "rf": lambda: rf_flow(net, args.gamma), "aamf": lambda: aamf_flow(net, args.gamma)}
    flow = fn[args.method]()
    mt = evaluate_approach(net, flow, args.gamma, args.mode, args.seed)
    info = {"method": args.method, "gamma": args.gamma, "objective": mt.objective,
            "lost_flow": mt.lost_flow, "attack": net.edge_ids(mt.attack)}
    if args.format == "json":
        _emit(json.dumps(_flow_doc(net, flow, info), indent=2) + "\n", args.out)
    else:
        _emit(_table([{"edge": k, "flow": v} for k, v in flow.as_dict().items()], "csv"), args.out)
        print(f"objective {mt.objective:.9g} lost_flow {mt.lost_flow:.9g}", file=sys.stderr)


def cmd_attack(args):
    net = _load(args)
    x = _load_flow(net, args.flow)
    g = args.gamma
    run = {
        "exact": lambda: adversary.exact_attack(net, x, g),
        "greedy": lambda: adversary.greedy_attack(net, x, g),
        "accel": lambda: adversary.accelerated_greedy_attack(net, x, g),
        "partition": lambda: adversary.partitioning_attack(net, x, g, seed=args.seed),
        "best": lambda: adversary.best_attack(net, x, g, "heuristic", seed=args.seed),
    }[args.mode]
    res = run()
    row = {"method": res.method, "attack": net.edge_ids(res.attack), "value": res.value,
           "evaluations": res.evaluations}
    _emit(_table([row], args.format), args.out)


def cmd_experiment(args):
    cfg = ExperimentConfig.load(args.config)
    if args.gamma is not None:
        cfg.gamma = args.gamma
    rows = run_experiment(cfg)
    if not (cfg.out_csv or cfg.out_json) or args.out:
        _emit(rows_to_json(rows, cfg) if args.format == "json" else rows_to_csv(rows), args.out)


def cmd_verify(args):
    net = _load(args)
    if args.flow:
        x = _load_flow(net, args.flow)
        value = adversary.exact_attack(net, x, args.gamma).value if args.value is None else args.value
    else:
        x, trace = solve_tnfg(net, args.gamma, GameConfig("exact", eps_conv=args.tol, seed=args.seed))
        value = trace.final_objective
    rep = verify_maximin(net, args.gamma, x, value, tol=args.tol)
    doc = {"ok": rep.ok, "value": rep.value, "claimed": rep.claimed,
           "baselines": rep.baseline_values, "messages": rep.messages,
           "counterexample": net.edge_ids(rep.counterexample) if rep.counterexample else None}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0 if rep.ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--gamma", type=int, default=None, help="attack budget (default 1)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--me", type=float, default=None, help="post-attack capacity for every edge")
    common.add_argument("--source", default=None)
    common.add_argument("--sink", default=None)
    common.add_argument("--tol", type=float, default=1e-6)
    common.add_argument("--out", default=None, help="output file (stdout if omitted)")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--format-in", choices=("native", "sndlib", "dimacs"), default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="tnfg", description="robust adaptive max-flow under edge attacks")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", parents=[common], help="write a random instance")
    g.add_argument("--nodes", type=int, default=10)
    g.add_argument("--density", type=float, default=0.4)
    g.add_argument("--cap-range", type=int, nargs=2, default=(1, 20))
    g.add_argument("--cost-range", type=float, nargs=2, default=(0.01, 0.1))
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", parents=[common], help="robust adaptive flow by the game loop")
    s.add_argument("instance", help="instance file, or D1 for the built-in example")
    s.add_argument("--mode", choices=("exact", "heuristic"), default="exact")
    s.add_argument("--max-iter", type=int, default=50)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("baseline", parents=[common], help="baseline policy flow")
    b.add_argument("instance")
    b.add_argument("--method", choices=("mf", "osp", "rf", "aamf"), required=True)
    b.add_argument("--mode", choices=("exact", "heuristic"), default="exact")
    b.set_defaults(func=cmd_baseline)

    a = sub.add_parser("attack", parents=[common], help="adversary response to a flow")
    a.add_argument("instance")
    a.add_argument("--mode", choices=("exact", "greedy", "accel", "partition", "best"),
                   default="exact")
    a.add_argument("--flow", default=None, help="JSON flow {edge: value}; max-flow if omitted")
    a.set_defaults(func=cmd_attack)

    e = sub.add_parser("experiment", parents=[common], help="run a YAML/JSON experiment config")
    e.add_argument("--config", required=True)
    e.set_defaults(func=cmd_experiment)

    v = sub.add_parser("verify", parents=[common], help="check maximin optimality exactly")
    v.add_argument("instance")
    v.add_argument("--flow", default=None)
    v.add_argument("--value", type=float, default=None)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.gamma is None and args.cmd != "experiment":
        args.gamma = 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    rc = args.func(args)
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())

"""Instance files: a plain edge-list format, SNDlib native text and DIMACS max-flow."""

from __future__ import annotations

import logging
import os
import re
from pathlib import Path

import numpy as np

from .network import Edge, Network, NetworkError, connect_walks


log = logging.getLogger(__name__)


class ParseError(ValueError):
    def __init__(self, msg, line=None):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


def _cost(rng, cost_range):
    return round(float(rng.uniform(cost_range[0], cost_range[1])), 4)


# --------------------------------------------------------------------------
# native format
#
#   name D1
#   nodes s a b t
#   source s
#   terminal t
#   edges
#   s a 10 0.01 0            tail head capacity cost post_attack [fixed]
#
# Edge ids are e1..em in listed order.  A trailing "fixed" marks an edge
# the adversary cannot attack.

def parse_native(text: str, name: str | None = None) -> Network:
    nodes, source, terminal, edges = None, None, None, []
    label = name
    in_edges = False
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0].lower()
        if not in_edges:
            if key == "name":
                label = label or " ".join(tok[1:])
            elif key == "nodes":
                nodes = tok[1:]
            elif key == "source":
                source = tok[1]
            elif key in ("terminal", "sink"):
                terminal = tok[1]
            elif key == "edges":
                in_edges = True
            else:
                raise ParseError(f"unexpected keyword {tok[0]!r}", no)
            continue
        if len(tok) not in (5, 6):
            raise ParseError("edge lines need: tail head capacity cost post_attack", no)
        try:
            cap, cost, m = float(tok[2]), float(tok[3]), float(tok[4])
        except ValueError:
            raise ParseError("non-numeric edge attribute", no) from None
        fixed = len(tok) == 6 and tok[5].lower() == "fixed"
        edges.append(Edge(f"e{len(edges) + 1}", tok[0], tok[1], cap, cost, m, not fixed))
    if nodes is None or source is None or terminal is None:
        raise ParseError("missing nodes/source/terminal header")
    if not edges:
        raise ParseError("no edges")
    try:
        return Network(nodes, source, terminal, edges, label or "network")
    except NetworkError as exc:
        raise ParseError(str(exc)) from None


def format_native(net: Network) -> str:
    out = [f"name {net.name}", "nodes " + " ".join(net.nodes),
           f"source {net.source}", f"terminal {net.terminal}", "edges"]
    for e in net.edges:
        line = f"{e.tail} {e.head} {e.capacity:.17g} {e.cost:.17g} {e.post_attack:.17g}"
        out.append(line + ("" if e.attackable else " fixed"))
    return "\n".join(out) + "\n"


def write_native(net: Network, path) -> None:
    Path(path).write_text(format_native(net))


# --------------------------------------------------------------------------
# SNDlib native

_SECTION = re.compile(r"^([A-Z_]+)\s*\($")
_LINK = re.compile(r"^(\S+)\s*\(\s*(\S+)\s+(\S+)\s*\)\s*(.*)$")


def parse_sndlib(text: str, seed: int = 0, source: str | None = None,
                 sink: str | None = None, name: str | None = None,
                 cost_range=(0.01, 0.1), fallback_cap=(500, 1000)) -> Network:
    """SNDlib native text network.

    Links become directed edges in listed order.  Capacity is the
    pre-installed capacity, else the first module capacity.  If every link
    ends up with capacity 0, integer capacities are drawn from
    ``fallback_cap``.  Costs are drawn from ``cost_range``.  Source and sink
    default to the first and last node.
    """
    rng = np.random.default_rng(seed)
    section = None
    nodes, links = [], []
    seen = set()
    label = name
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("?"):
            continue
        if line.startswith("#"):
            m = re.match(r"#\s*network\s+(\S+)", line)
            if m and not label:
                label = m.group(1)
            continue
        m = _SECTION.match(line)
        if m and section is None:
            section = m.group(1)
            seen.add(section)
            continue
        if line == ")":
            if section is None:
                raise ParseError("unbalanced ')'", no)
            section = None
            continue
        if section == "NODES":
            nodes.append(line.split()[0])
        elif section == "LINKS":
            lm = _LINK.match(line)
            if not lm:
                raise ParseError("malformed link", no)
            lid, u, v, rest = lm.groups()
            nums = re.findall(r"[-+]?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?", rest)
            try:
                pre = float(nums[0]) if nums else 0.0
                modules = [float(a) for a in nums[4::2]]
            except ValueError:
                raise ParseError("malformed link numbers", no) from None
            cap = pre if pre > 0 else (modules[0] if modules else 0.0)
            links.append((lid, u, v, cap, no))
    if section is not None:
        raise ParseError(f"unterminated section {section}")
    if "NODES" not in seen or not nodes:
        raise ParseError("missing NODES section")
    if not links:
        raise ParseError("empty LINKS section")
    known = set(nodes)
    for lid, u, v, _, no in links:
        if u not in known or v not in known:
            raise ParseError(f"link {lid} references an unknown node", no)
    caps = [c for *_, c, _ in links]
    if all(c == 0 for c in caps):
        caps = [int(rng.integers(fallback_cap[0], fallback_cap[1] + 1)) for _ in links]
    edges = [Edge(lid, u, v, float(c), _cost(rng, cost_range))
             for (lid, u, v, _, _), c in zip(links, caps)]
    s = source or nodes[0]
    t = sink or nodes[-1]
    net = Network(nodes, s, t, edges, label or "sndlib")
    repaired = 0
    if not net.reach[net.s, net.t]:
        # one edge from the source's reach into the sink's co-reach suffices
        r = net.reach
        a = [nodes[i] for i in np.flatnonzero(r[net.s]) if i != net.t]
        b = [nodes[i] for i in np.flatnonzero(r[:, net.t]) if i != net.s]
        u = a[int(rng.integers(len(a)))]
        v = b[int(rng.integers(len(b)))]
        if u == v:
            v = t
        edges.append(Edge("repair1", u, v, float(np.median(caps)), _cost(rng, cost_range)))
        repaired = 1
        net = Network(nodes, s, t, edges, net.name)
    net.metadata.update(format="sndlib", seed=seed, repair_edges=repaired)
    return net


# --------------------------------------------------------------------------
# DIMACS max-flow

def parse_dimacs(text: str, seed: int = 0, name: str | None = None,
                 cap_range=(10, 50), cost_range=(0.01, 0.1)) -> Network:
    """DIMACS max-flow instance with redrawn capacities and random costs.

    Capacities are replaced by integers uniform in ``cap_range``.  Random
    edges are added until every node lies on a source -> sink walk.
    """
    rng = np.random.default_rng(seed)
    n = None
    s = t = None
    arcs = []
    for no, raw in enumerate(text.splitlines(), 1):
        tok = raw.split()
        if not tok or tok[0] == "c":
            continue
        if tok[0] == "p":
            if len(tok) < 4 or tok[1] != "max":
                raise ParseError("expected 'p max N M'", no)
            n = int(tok[2])
        elif tok[0] == "n":
            if n is None:
                raise ParseError("node line before problem line", no)
            v = int(tok[1])
            if not 1 <= v <= n:
                raise ParseError(f"undeclared node {v}", no)
            if tok[2] == "s":
                s = v
            elif tok[2] == "t":
                t = v
            else:
                raise ParseError(f"unknown node designation {tok[2]!r}", no)
        elif tok[0] == "a":
            if n is None:
                raise ParseError("arc before problem line", no)
            u, v = int(tok[1]), int(tok[2])
            if not (1 <= u <= n and 1 <= v <= n):
                raise ParseError("arc references undeclared node", no)
            arcs.append((u, v))
        else:
            raise ParseError(f"unknown line type {tok[0]!r}", no)
    if n is None:
        raise ParseError("missing problem line")
    if s is None or t is None:
        raise ParseError("missing source or sink designation")
    nodes = [str(i) for i in range(1, n + 1)]

    def draw(u, v, k):
        cap = int(rng.integers(cap_range[0], cap_range[1] + 1))
        return Edge(f"e{k}", u, v, float(cap), _cost(rng, cost_range))

    edges = [draw(str(u), str(v), k + 1) for k, (u, v) in enumerate(arcs)]
    added = connect_walks(nodes, str(s), str(t), edges, rng,
                          lambda u, v, k: draw(u, v, len(arcs) + k + 1))
    net = Network(nodes, str(s), str(t), edges, name or "dimacs",
                  {"format": "dimacs", "seed": seed, "repair_edges": added})
    return net


# --------------------------------------------------------------------------

def sniff_format(path, text: str | None = None) -> str:
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".max", ".dimacs", ".rmf"):
        return "dimacs"
    if ext == ".sndlib":
        return "sndlib"
    if text is None:
        text = Path(path).read_text()
    if re.search(r"^\s*p\s+max\b", text, re.M):
        return "dimacs"
    if re.search(r"^\s*LINKS\s*\(", text, re.M):
        return "sndlib"
    return "native"


def load_network(path, fmt: str | None = None, seed: int = 0, source: str | None = None,
                 sink: str | None = None, me: float | None = None) -> Network:
    """Read an instance file; ``me`` overrides every post-attack capacity."""
    text = Path(path).read_text()
    fmt = fmt or sniff_format(path, text)
    stem = Path(path).stem
    if fmt == "native":
        net = parse_native(text, None)
        if source or sink:
            net = Network(net.nodes, source or net.source, sink or net.terminal,
                          net.edges, net.name, net.metadata)
    elif fmt == "sndlib":
        net = parse_sndlib(text, seed, source, sink, stem)
    elif fmt == "dimacs":
        net = parse_dimacs(text, seed, stem)
        if source or sink:
            net = Network(net.nodes, source or net.source, sink or net.terminal,
                          net.edges, net.name, net.metadata)
    else:
        raise ValueError(f"unknown instance format {fmt!r}")
    if me is not None:
        net = net.with_post_attack(me)
    heavy = net.cost_warnings()
    if heavy:
        log.warning("%s: %d edges cost more than 1/(2L), e.g. %s", net.name, len(heavy), heavy[0])
    return net

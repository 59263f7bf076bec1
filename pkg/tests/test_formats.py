import logging

import pytest

from tnfg.formats import (ParseError, format_native, load_network, parse_dimacs, parse_native,
                          parse_sndlib, sniff_format, write_native)
from tnfg.network import generate_random

SND = """?SNDlib native format; type: network; version: 1.0
# network mini

# NODE SECTION
NODES (
  A ( 1.0 2.0 )
  B ( 3.0 4.0 )
  C ( 5.0 6.0 )
  D ( 7.0 8.0 )
)

# LINK SECTION
LINKS (
  L1 ( A B ) 40.00 0.00 0.00 0.00 ( 100.00 1.00 )
  L2 ( A C ) 0.00 0.00 0.00 0.00 ( 155.00 3.00 622.00 5.00 )
  L3 ( B D ) 25.00 0.00 0.00 0.00 ( )
  L4 ( C D ) 0.00 0.00 0.00 0.00 ( )
)

DEMANDS (
  A_D ( A D ) 1 10.00 UNLIMITED
)
"""

SND_ZERO = SND.replace("40.00 0.00", "0.00 0.00").replace("25.00 0.00", "0.00 0.00") \
              .replace("( 100.00 1.00 )", "( )").replace("( 155.00 3.00 622.00 5.00 )", "( )")

DIMACS = """c tiny
p max 4 5
n 1 s
n 4 t
a 1 2 7
a 1 3 9
a 2 4 3
a 3 4 4
a 2 3 1
"""


def test_sndlib_basic():
    net = parse_sndlib(SND, seed=1)
    assert net.n_nodes == 4 and net.n_edges == 4
    assert net.name == "mini"
    assert [e.id for e in net.edges] == ["L1", "L2", "L3", "L4"]
    assert net.capacity[:4].tolist() == [40, 155, 25, 0]
    assert net.source == "A" and net.terminal == "D"
    assert all(0.01 <= c <= 0.1 for c in net.cost[:4])


def test_sndlib_all_zero_capacities_drawn():
    net = parse_sndlib(SND_ZERO, seed=4)
    caps = net.capacity[:4]
    assert all(500 <= c <= 1000 and c == int(c) for c in caps)
    assert parse_sndlib(SND_ZERO, seed=4).capacity.tolist() == net.capacity.tolist()


def test_sndlib_flags_and_repair():
    net = parse_sndlib(SND, seed=0, source="D", sink="A")
    assert net.source == "D" and net.terminal == "A"
    assert net.reach[net.s, net.t]
    assert net.metadata["repair_edges"] == 1


def test_sndlib_errors():
    empty = SND[:SND.index("LINKS (")] + "LINKS (\n)\n"
    with pytest.raises(ParseError, match="empty LINKS"):
        parse_sndlib(empty)
    bad = SND.replace("L3 ( B D )", "L3 B D")
    with pytest.raises(ParseError, match="line"):
        parse_sndlib(bad)
    with pytest.raises(ParseError, match="unknown node"):
        parse_sndlib(SND.replace("L4 ( C D )", "L4 ( C Z )"))


def test_dimacs_basic():
    net = parse_dimacs(DIMACS, seed=2)
    assert net.n_nodes == 4 and net.n_edges == 5
    assert net.source == "1" and net.terminal == "4"
    assert all(10 <= c <= 50 and c == int(c) for c in net.capacity[:5])
    assert net.metadata["repair_edges"] == 0


def test_dimacs_repair_connects():
    text = "p max 5 3\nn 1 s\nn 5 t\na 1 2 4\na 2 5 4\na 3 4 1\n"
    net = parse_dimacs(text, seed=0)
    assert net.off_walk_nodes() == []
    assert net.n_edges == 3 + net.metadata["repair_edges"]
    again = parse_dimacs(text, seed=0)
    assert [(e.tail, e.head, e.capacity) for e in again.edges] == \
           [(e.tail, e.head, e.capacity) for e in net.edges]


def test_dimacs_errors():
    with pytest.raises(ParseError, match="undeclared"):
        parse_dimacs("p max 2 1\nn 1 s\nn 2 t\na 1 3 5\n")
    with pytest.raises(ParseError, match="problem line"):
        parse_dimacs("n 1 s\n")
    with pytest.raises(ParseError, match="source or sink"):
        parse_dimacs("p max 2 1\nn 1 s\na 1 2 5\n")


def test_native_roundtrip(tmp_path):
    net = generate_random(7, 0.5, seed=3).with_post_attack(0.5)
    path = tmp_path / "g.txt"
    write_native(net, path)
    back = load_network(path)
    assert back.nodes == net.nodes
    assert [(e.tail, e.head, e.capacity, e.cost, e.post_attack) for e in back.edges] == \
           [(e.tail, e.head, e.capacity, e.cost, e.post_attack) for e in net.edges]
    assert format_native(back) == format_native(net)


def test_native_errors():
    with pytest.raises(ParseError, match="line 2"):
        parse_native("nodes a b\nbogus\n")
    with pytest.raises(ParseError, match="edge lines"):
        parse_native("nodes s t\nsource s\nterminal t\nedges\ns t 1\n")
    with pytest.raises(ParseError, match="no edges"):
        parse_native("nodes s t\nsource s\nterminal t\nedges\n")


def test_native_fixed_edges():
    net = parse_native("nodes s t\nsource s\nterminal t\nedges\ns t 1 0 0 fixed\ns t 2 0 0\n")
    assert net.attackable == (1,)


def test_sniffing(tmp_path):
    a = tmp_path / "x.txt"
    a.write_text(SND)
    b = tmp_path / "y.txt"
    b.write_text(DIMACS)
    c = tmp_path / "z.max"
    c.write_text(DIMACS)
    assert sniff_format(a) == "sndlib" and sniff_format(b) == "dimacs" and sniff_format(c) == "dimacs"
    assert load_network(a, me=3.0).post_attack[:4].tolist() == [3, 3, 3, 0]
    assert load_network(b, fmt="dimacs").n_edges == 5


def test_load_warns_on_expensive_edges(tmp_path, caplog):
    p = tmp_path / "n.txt"
    p.write_text("nodes s a t\nsource s\nterminal t\nedges\ns a 1 0.4 0\na t 1 0.01 0\n")
    with caplog.at_level(logging.WARNING):
        load_network(p)
    assert "1/(2L)" in caplog.text

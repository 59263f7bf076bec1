import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import X_MF, X_STAR
from oracles import adaptive_exact, mfmc_exact, min_cut_brute, post_attack_exact
from tnfg.flows import (adaptive_value, identify_flow, identify_flow_lp, max_flow_min_cost,
                        max_flow_value, min_cut)
from tnfg.network import (Edge, FlowScenario, Network, generate_random, reroute_eligibility,
                          single_edge, validate_flow)
from tnfg.administrator import mf_flow
from tnfg.adversary import exact_attack


def test_mfmc_d1(d1):
    flow, obj = max_flow_min_cost(d1)
    ref, _ = mfmc_exact(d1)
    assert obj == pytest.approx(float(ref), abs=1e-12)
    # frozen from the rational LP: throughput 14, routing cost 0.31
    assert obj == pytest.approx(13.69, abs=1e-12)
    assert flow.values.tolist() == X_MF.tolist()
    assert validate_flow(d1, flow).ok


def test_mfmc_single_edge():
    flow, obj = max_flow_min_cost(single_edge(5, 0.05))
    assert flow.throughput == 5 and obj == pytest.approx(4.75)


def test_mfmc_unprofitable_paths_carry_nothing():
    net = Network(["s", "a", "t"], "s", "t",
                  [Edge("e1", "s", "a", 5, 0.6), Edge("e2", "a", "t", 5, 0.6)])
    flow, obj = max_flow_min_cost(net)
    assert flow.throughput == 0 and obj == 0


def test_min_cut_examples(d1):
    side, cap = min_cut(d1)
    assert cap == 14 == min_cut_brute(d1)
    assert side == frozenset({"s", "a", "b"})
    side, cap = min_cut(single_edge(5))
    assert side == frozenset({"s"}) and cap == 5
    par = Network(["s", "t"], "s", "t", [Edge("e1", "s", "t", 3), Edge("e2", "s", "t", 4)])
    assert min_cut(par)[1] == 7


def test_identify_flow_no_attack(d1):
    res = identify_flow(d1, X_STAR, ())
    assert res.objective == 14
    assert res.y.tolist() == X_STAR.tolist()
    assert not res.z.any()


def test_identify_flow_examples(d1):
    r1 = identify_flow(d1, X_STAR, (0,))
    assert r1.objective == pytest.approx(4.99, abs=1e-12)
    assert r1.y.tolist() == [0, 5, 0, 0, 5, 5]
    assert r1.z.tolist() == [0, 1, 0, 0, 0, 0]
    r3 = identify_flow(d1, X_STAR, (2,))
    assert r3.objective == pytest.approx(8.0)
    assert r3.y[[1, 3, 4, 5]].tolist() == [4, 4, 8, 8]
    assert not r3.z.any()
    for att in [(), (0,), (1,), (2,), (3,), (4,)]:
        ref = float(post_attack_exact(d1, X_STAR, att))
        assert identify_flow(d1, X_STAR, att).objective == pytest.approx(ref, abs=1e-9)


def test_adaptive_value_examples(d1):
    assert adaptive_value(d1, X_STAR, ()) == pytest.approx(13.68, abs=1e-12)
    assert adaptive_value(d1, X_STAR, (0,)) == pytest.approx(4.67, abs=1e-12)
    assert adaptive_value(d1, np.zeros(6), (0, 1)) == 0


def test_lp_formulation_agrees_on_d1(d1):
    for att in [(), (0,), (2,), (0, 4)]:
        obj, y, z = identify_flow_lp(d1, X_STAR, att)
        assert obj == pytest.approx(identify_flow(d1, X_STAR, att).objective, abs=1e-7)


def test_throughput_never_exceeds_commitment(d1):
    # attacking e2 unlocks rerouting everywhere downstream of s, yet nothing
    # beyond the committed throughput may arrive
    res = identify_flow(d1, X_MF, (1,))
    assert res.throughput <= X_MF[-1] + 1e-9


def _weak_conservation(net, y):
    bal = np.zeros(net.n_nodes)
    np.add.at(bal, net.heads, y)
    np.subtract.at(bal, net.tails, y)
    bal[net.s] = 0
    return bal.min()


@st.composite
def instance(draw):
    n = draw(st.integers(4, 9))
    net = generate_random(n, draw(st.floats(0.3, 0.8)), seed=draw(st.integers(0, 5000)))
    x = mf_flow(net).values
    k = draw(st.integers(0, min(3, len(net.attackable))))
    att = tuple(sorted(draw(st.sets(st.sampled_from(net.attackable), min_size=k, max_size=k))))
    return net, x, att


@settings(max_examples=60, deadline=None)
@given(instance())
def test_identify_flow_matches_lp(case):
    net, x, att = case
    res = identify_flow(net, x, att)
    obj, _, _ = identify_flow_lp(net, x, att)
    assert res.objective == pytest.approx(obj, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(instance())
def test_adjusted_flow_invariants(case):
    net, x, att = case
    res = identify_flow(net, x, att)
    pi = reroute_eligibility(net, att)
    assert _weak_conservation(net, res.y) >= -1e-9
    assert np.all(res.z[pi == 0] == 0)
    assert np.allclose(res.z[pi == 1], np.maximum(res.y - x, 0)[pi == 1], atol=1e-9)
    assert np.all(res.y <= net.capacity + 1e-9)
    if att:
        assert np.all(res.y[list(att)] <= net.post_attack[list(att)] + 1e-9)


@settings(max_examples=60, deadline=None)
@given(instance())
def test_single_edge_loss_bounded_by_its_flow(case):
    net, x, _ = case
    base = adaptive_value(net, x, ())
    for e in net.attackable:
        assert adaptive_value(net, x, (e,)) >= base - x[e] - 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 9), st.floats(0.2, 0.9), st.integers(0, 5000))
def test_mfmc_valid_and_optimal(n, dens, seed):
    net = generate_random(n, dens, seed=seed)
    flow, obj = max_flow_min_cost(net)
    assert validate_flow(net, flow).ok
    _, xr = mfmc_exact(net)
    ref = float(xr[-1] - net.cost[:-1] @ xr[:-1])
    assert obj == pytest.approx(ref, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 9), st.floats(0.2, 0.9), st.integers(0, 5000))
def test_cut_equals_flow(n, dens, seed):
    net = generate_random(n, dens, seed=seed)
    value, _, _ = max_flow_value(net)
    side, cap = min_cut(net)
    assert cap == pytest.approx(value)
    assert cap == pytest.approx(min_cut_brute(net))
    assert net.source in side and net.terminal not in side


def test_small_instances_against_exact_rational():
    for seed in range(6):
        net = generate_random(5, 0.5, seed=seed)
        x = mf_flow(net).values
        for att in [(), net.attackable[:1], net.attackable[:2]]:
            ref = float(adaptive_exact(net, x, att))
            assert adaptive_value(net, x, att) == pytest.approx(ref, abs=1e-9)

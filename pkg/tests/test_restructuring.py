import numpy as np
import pytest

from locplex.complexity import decompose
from locplex.economics import z_plex_value
from locplex.model import CostParams, Instance, Network, ValidationError
from locplex.restructuring import (DROP_FACILITY, DROP_NODE, REALLOCATE, TRANSFER, default_tail, rationalise,
                                   rebalance, reduce, relative_change, replay)
from locplex.solvers import allocate_nearest

from conftest import random_instance, random_network
from test_economics import naive_z_plex


def naive_transfers(inst, net, p):
    """Reference transfer phase: tau order, stop a facility's scan at the first failure."""
    alloc = dict(net.allocation)
    fac = net.facilities
    plan = {}
    for f in fac:
        cands = []
        for i in [i for i, g in alloc.items() if g == f and i != f]:
            g = min((h for h in fac if h != f), key=lambda h: (inst.dist[h, i], h))
            cands.append((-inst.dist[g, i] * inst.demand[i], i, g))
        plan[f] = sorted(cands)
    moves = []
    for f in fac:
        for _, i, g in plan[f]:
            trial = dict(alloc)
            trial[i] = g
            old = naive_z_plex(inst, Network(fac, alloc), p)
            new = naive_z_plex(inst, Network(fac, trial), p)
            if new - old > 1e-9 * abs(old):
                alloc = trial
                moves.append((i, f, g))
            else:
                break
    return moves


def line_case():
    x = np.array([0, 1, 2, 3, 4, 10], dtype=float)
    inst = Instance(np.ones(6), np.abs(x[:, None] - x[None, :]), depot=0)
    return inst, allocate_nearest(inst, [0, 5])


def test_engineered_transfer():
    inst, net = line_case()
    p = CostParams(r=100, gamma=1, alpha=0.12)
    res = rebalance(inst, net, p)
    transfers = [m.subject for m in res.moves if m.kind == TRANSFER]
    assert transfers == naive_transfers(inst, net, p)
    assert transfers[0] == (1, 0, 5)
    assert res.z_after > res.z_before
    assert res.z_after == pytest.approx(naive_z_plex(inst, res.final_network, p))


def test_rebalance_matches_reference_on_random_instances(rng):
    for _ in range(25):
        inst = random_instance(rng, 14)
        p = CostParams(r=400, gamma=1, alpha=0.12, phi=20)
        net = random_network(rng, inst, 3)
        res = rebalance(inst, net, p)
        assert [m.subject for m in res.moves if m.kind == TRANSFER] == naive_transfers(inst, net, p)


def check_log(inst, res, p):
    zs = [res.z_before] + [m.after for m in res.moves]
    assert all(m.after > m.before for m in res.moves)
    assert all(b.before == pytest.approx(a) for a, b in zip(zs, res.moves))
    assert replay(inst, res.initial_network, res.moves, p) == res.final_network
    assert res.z_after == pytest.approx(z_plex_value(inst, res.final_network, p), rel=1e-12)


def test_all_strategies_strict_and_replayable(rng):
    for _ in range(30):
        inst = random_instance(rng, 16)
        p = CostParams(r=float(rng.uniform(150, 400)), gamma=1, rho=float(rng.choice([0, 0.5])),
                       alpha=float(rng.uniform(0.02, 0.15)), phi=float(rng.uniform(0, 3000)))
        net = random_network(rng, inst, int(rng.integers(2, 6)), p)
        for res in (rebalance(inst, net, p), rebalance(inst, net, p, full_scan=True), rationalise(inst, net, p),
                    reduce(inst, net, p), reduce(inst, net, p, reallocate=True)):
            check_log(inst, res, p)


def test_rebalance_conserves_cover_and_cp(rng):
    for _ in range(20):
        inst = random_instance(rng, 15)
        p = CostParams(r=300, gamma=1, alpha=0.1)
        net = random_network(rng, inst, 3)
        res = rebalance(inst, net, p)
        assert res.final_network.covered == net.covered
        assert res.cp_after == pytest.approx(res.cp_before, abs=1e-9)
        assert res.final_network.k == net.k


def test_rebalance_single_facility_is_identity(line_instance, simple_params):
    net = allocate_nearest(line_instance, [2])
    res = rebalance(line_instance, net, simple_params)
    assert res.final_network == net and not res.moves and res.notes


def test_rationalise_drops_only_tail_nodes():
    x = np.array([0, 1, 2, 3, 50], dtype=float)
    inst = Instance(np.ones(5), np.abs(x[:, None] - x[None, :]))
    net = allocate_nearest(inst, [0])
    p = CostParams(r=20, gamma=1)
    res = rationalise(inst, net, p)
    assert [m.subject for m in res.moves] == [(4, 0)]
    assert res.final_network.covered == (0, 1, 2, 3)
    assert res.demand_after < res.demand_before
    # n_tail=1 only considers the farthest node
    assert [m.kind for m in rationalise(inst, net, p, n_tail=1).moves] == [DROP_NODE]
    with pytest.raises(ValidationError):
        rationalise(inst, net, p, n_tail=0)


def test_default_tail():
    assert [default_tail(s) for s in (1, 4, 5, 8, 9)] == [1, 1, 2, 2, 3]


def test_reduce_abandon_oracle():
    # facility 3 serves one distant node whose margin does not cover its fixed cost
    x = np.array([0, 1, 2, 40], dtype=float)
    inst = Instance(np.ones(4), np.abs(x[:, None] - x[None, :]))
    net = allocate_nearest(inst, [0, 3])
    p = CostParams(r=10, gamma=0.1, phi=12)
    res = reduce(inst, net, p)
    assert [(m.kind, m.subject) for m in res.moves] == [(DROP_FACILITY, (3,))]
    assert res.final_network.covered == (0, 1, 2)
    assert res.z_after == pytest.approx(res.z_before + 12 - 10)


def test_reduce_reallocate_preserves_cp(rng):
    fired = 0
    for _ in range(40):
        inst = random_instance(rng, 15)
        p = CostParams(r=300, gamma=1, alpha=0.05, phi=float(rng.uniform(500, 5000)))
        net = random_network(rng, inst, 4)
        res = reduce(inst, net, p, reallocate=True)
        fired += res.fired
        assert res.final_network.covered == net.covered
        assert decompose(inst, res.final_network).total == pytest.approx(decompose(inst, net).total, abs=1e-9)
        assert all(m.kind == REALLOCATE for m in res.moves)
        assert res.final_network.k >= 1
    assert fired > 0


def test_reduce_needs_two_facilities(line_instance, simple_params):
    with pytest.raises(ValidationError):
        reduce(line_instance, allocate_nearest(line_instance, [0]), simple_params)


def test_min_gain_blocks_small_moves():
    inst, net = line_case()
    p = CostParams(r=100, gamma=1, alpha=0.12)
    assert rebalance(inst, net, p).moves
    assert not rebalance(inst, net, p, min_gain=10.0).moves


def test_relative_change():
    assert relative_change(100, 110) == pytest.approx(10.0)
    assert relative_change(-100, -90) == pytest.approx(10.0)
    assert relative_change(0, 0) == 0.0

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hetalloc.allocation import (Allocation, OracleBudgetError,
                                 exhaustive_search, is_feasible,
                                 search_space_size, sum_rate)
from hetalloc.netmodel import build_topology

from conftest import toy_network
from test_netmodel import make_config, two_tx_net


def test_allocation_container_basics():
    a = Allocation(3)
    assert a.is_empty() and a.num_assigned() == 0
    a.assign(1, 2, 0)
    assert a.get(1) == (2, 0)
    assert a.on_rb(2) == [(1, 0)]
    b = a.copy()
    b.unassign(1)
    assert a.get(1) == (2, 0) and b.is_empty()
    assert a != b and a == Allocation(3, {1: (2, 0)})


def test_indicator_tensor_one_entry_per_transmitter():
    a = Allocation(3, [(0, 1), None, (2, 0)])
    x = a.indicator(3, 2)
    assert x.sum() == 2
    assert x[0, 0, 1] == 1 and x[2, 2, 0] == 1


# --- feasibility --------------------------------------------------------

def test_empty_allocation_feasible():
    rep = is_feasible(two_tx_net(), Allocation(2))
    assert rep.feasible and rep.violated_rbs == [] and rep.sum_rate == 0.0


def test_boundary_assignment_infeasible():
    # single contribution at exactly twice the cap: strictly violated
    net = two_tx_net(i_max=0.7)  # k1 contributes 0.7 * 2.0 = 1.4 = 2 * cap
    rep = is_feasible(net, Allocation(2, {1: (0, 0)}))
    assert not rep.feasible and rep.violated_rbs == [0]


def test_feasibility_matches_independent_summation():
    rng = np.random.default_rng(3)
    K, C, N, L = 5, 2, 4, 2
    net = toy_network(rng.uniform(0.1, 2.0, (K, K, N)),
                      rng.uniform(0.1, 2.0, (K, C, N)),
                      power_levels=(0.5, 1.5), i_max=2.0)
    alloc = Allocation(K)
    for k in range(K):
        alloc.assign(k, rng.integers(N), rng.integers(L))
    rep = is_feasible(net, alloc)
    for n in range(N):
        total = sum(net.ref_gain[k, n] * net.power_levels[l]
                    for k, (nn, l) in alloc.assigned_items() if nn == n)
        assert rep.per_rb_interference[n] == pytest.approx(total, rel=1e-12)
        assert (n in rep.violated_rbs) == (total >= net.i_max[n])
    assert rep.feasible == (not rep.violated_rbs)


# --- sum rate -----------------------------------------------------------

def test_sum_rate_empty_and_single():
    net = two_tx_net()
    assert sum_rate(net, Allocation(2)) == 0.0
    got = sum_rate(net, Allocation(2, {0: (0, 0)}))
    assert got == pytest.approx(180e3 * math.log2(1.0 + 4.0 / 1.4), rel=1e-12)


def test_sum_rate_interference_coupling():
    net = two_tx_net(i_max=100.0)
    apart = sum_rate(net, Allocation(2, {0: (0, 0)})) + sum_rate(net, Allocation(2, {1: (0, 0)}))
    together = sum_rate(net, Allocation(2, [(0, 0), (0, 0)]))
    assert together < apart


# --- search-space size ---------------------------------------------------

def test_search_space_size_paper_example():
    assert search_space_size(5, 6, 3) == 1889568


@pytest.mark.parametrize("k,n,l,expected", [(1, 1, 1, 1), (3, 4, 2, 512)])
def test_search_space_size_small(k, n, l, expected):
    assert search_space_size(k, n, l) == expected


def test_search_space_size_with_unassigned_option():
    assert search_space_size(2, 2, 2, include_unassigned=True) == 25


@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 4))
def test_search_space_size_matches_pow(k, n, l):
    assert search_space_size(k, n, l) == (n * l) ** k


def test_search_space_size_rejects_bad_counts():
    with pytest.raises(ValueError):
        search_space_size(0, 2, 2)


# --- exhaustive oracle ---------------------------------------------------

def test_oracle_single_transmitter_picks_best_alignment():
    rng = np.random.default_rng(9)
    net = toy_network(rng.uniform(0.5, 3.0, (1, 1, 3)),
                      rng.uniform(0.1, 1.0, (1, 1, 3)),
                      power_levels=(0.5, 2.0), i_max=100.0)
    alloc, value = exhaustive_search(net)
    rates = {(n, l): sum_rate(net, Allocation(1, {0: (n, l)}))
             for n in range(3) for l in range(2)}
    best = max(rates, key=rates.get)
    assert alloc.get(0) == best
    assert value == pytest.approx(rates[best], rel=1e-12)


def test_oracle_matches_independent_enumeration():
    rng = np.random.default_rng(21)
    K, C, N, L = 2, 2, 2, 2
    net = toy_network(rng.uniform(0.1, 3.0, (K, K, N)),
                      rng.uniform(0.1, 1.0, (K, C, N)),
                      gain_mbs_ul=rng.uniform(0.01, 0.2, (K, N)),
                      power_levels=(0.5, 2.0), i_max=1e9, mbs_power=4.0, sigma2=1.0)
    stats = {}
    _, value = exhaustive_search(net, stats=stats)
    assert stats["candidates"] == 25

    # independent enumeration with its own SINR arithmetic
    choices = [None] + [(n, l) for n in range(N) for l in range(L)]
    best = 0.0
    for combo in itertools.product(choices, repeat=K):
        rate = 0.0
        for k, res in enumerate(combo):
            if res is None:
                continue
            n, l = res
            den = net.gain_mbs_ul[k, n] * net.mbs_power + net.sigma2
            for kp, other in enumerate(combo):
                if kp != k and other is not None and other[0] == n:
                    den += net.gain_ul[kp, k, n] * net.power_levels[other[1]]
            rate += net.rb_bandwidth * math.log2(
                1.0 + net.gain_ul[k, k, n] * net.power_levels[l] / den)
        best = max(best, rate)
    assert value == pytest.approx(best, rel=1e-9)


def test_oracle_enumeration_count_and_feasibility():
    cfg = make_config(num_sbs=2, num_d2d=1, num_rb=2, power_levels=(0.1, 0.5))
    net = build_topology(cfg)
    stats = {}
    alloc, _ = exhaustive_search(net, stats=stats)
    assert stats["candidates"] == search_space_size(3, 2, 2, include_unassigned=True)
    assert is_feasible(net, alloc).feasible


def test_oracle_returns_empty_when_nothing_feasible():
    # cap below any single contribution: only the silent allocation survives
    net = two_tx_net(i_max=1e-6)
    alloc, value = exhaustive_search(net)
    assert alloc.is_empty() and value == 0.0


def test_oracle_budget_guard():
    net = build_topology(make_config())
    with pytest.raises(OracleBudgetError):
        exhaustive_search(net, budget=10)


def test_oracle_dominates_feasible_allocations():
    cfg = make_config(num_sbs=1, num_d2d=1, num_rb=2)
    net = build_topology(cfg)
    _, best = exhaustive_search(net)
    rng = np.random.default_rng(0)
    for _ in range(50):
        alloc = Allocation(net.num_tx)
        for k in range(net.num_tx):
            if rng.uniform() < 0.8:
                alloc.assign(k, rng.integers(net.num_rb), rng.integers(net.num_levels))
        if is_feasible(net, alloc).feasible:
            assert sum_rate(net, alloc) <= best * (1 + 1e-9)

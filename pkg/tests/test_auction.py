import numpy as np
import pytest

from hetalloc.allocation import Allocation, exhaustive_search, is_feasible, sum_rate
from hetalloc.auction import (NO_BIDDER, AuctionState, bid_increment,
                              clamped_resource_cost, local_auction_round,
                              resource_cost, run_auction)
from hetalloc.netmodel import benefit_table, build_topology, cost_table

from conftest import toy_network
from test_netmodel import make_config, two_tx_net


# --- cost function --------------------------------------------------------

def test_resource_cost_boundary_zero():
    net = two_tx_net(w2=1.0, i_max=1.4)  # k1's own contribution 0.7 * 2.0
    assert resource_cost(net, Allocation(2), 1, (0, 0)) == pytest.approx(0.0, abs=1e-15)


def test_resource_cost_negative_clamps_to_zero():
    net = two_tx_net(w2=1.0, i_max=10.0)
    c = resource_cost(net, Allocation(2), 1, (0, 0))
    assert c < 0
    assert clamped_resource_cost(net, Allocation(2), 1, (0, 0)) == 0.0


def test_resource_cost_two_transmitter_hand_value():
    net = two_tx_net(w2=0.5, i_max=2.0)
    alloc = Allocation(2, {1: (0, 0)})
    # own 0.6*2 plus standing 0.7*2, relative to the 2.0 budget
    expected = 0.5 * ((1.2 + 1.4) / 2.0 - 1.0)
    assert resource_cost(net, alloc, 0, (0, 0)) == pytest.approx(expected, rel=1e-12)


def test_cost_table_matches_scalar():
    rng = np.random.default_rng(4)
    K, C, N, L = 3, 2, 2, 2
    net = toy_network(rng.uniform(0.1, 2.0, (K, K, N)),
                      rng.uniform(0.1, 2.0, (K, C, N)),
                      power_levels=(0.5, 1.5), i_max=2.0, w2=0.8)
    alloc = Allocation(K, [(0, 1), None, (1, 0)])
    table = cost_table(net, alloc)
    for k in range(K):
        for n in range(N):
            for l in range(L):
                assert table[k, n, l] == pytest.approx(
                    resource_cost(net, alloc, k, (n, l)), rel=1e-12)


# --- bid increment ----------------------------------------------------------

def test_bid_increment_direct_formula():
    values = np.array([[5.0, 3.0], [1.0, 0.0]])
    assert bid_increment(values, (0, 0), 0.1) == pytest.approx(2.1, abs=1e-12)


def test_bid_increment_equal_values_is_epsilon():
    values = np.array([[2.0, 2.0]])
    assert bid_increment(values, (0, 0), 0.25) == pytest.approx(0.25, abs=1e-12)


def test_bid_increment_single_resource_is_epsilon():
    assert bid_increment(np.array([[7.0]]), (0, 0), 0.3) == pytest.approx(0.3)


def test_bid_increment_random_tables_match_independent_computation():
    rng = np.random.default_rng(8)
    for _ in range(200):
        n, l = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        values = rng.normal(size=(n, l))
        flat = values.ravel()
        chosen = int(np.argmax(flat))
        want = flat.max() - max(np.delete(flat, chosen)) + 0.05 if flat.size > 1 else 0.05
        got = bid_increment(values, divmod(chosen, l), 0.05)
        assert got == pytest.approx(want, abs=1e-12)
        assert got > 0


# --- local round -------------------------------------------------------------

def fresh_state(K, N, L, eps=0.1):
    return AuctionState(np.zeros((K, N, L)), np.full((K, N, L), NO_BIDDER, np.int64),
                        Allocation(K), eps)


def test_local_round_fresh_state_bids_best_value():
    net = two_tx_net(i_max=100.0)
    alloc_prev = Allocation(2, [(0, 0), (0, 0)])
    state = fresh_state(2, 1, 1)
    b = benefit_table(net, alloc_prev)
    choice, cost_row, bidder_row, placed = local_auction_round(0, state, net, alloc_prev)
    assert placed and choice == (0, 0)
    assert bidder_row[0, 0] == 0
    assert cost_row[0, 0] == pytest.approx(bid_increment(b[0], (0, 0), 0.1))


def test_local_round_content_bidder_keeps():
    net = two_tx_net(i_max=100.0)
    alloc_prev = Allocation(2, [(0, 0), (0, 0)])
    state = fresh_state(2, 1, 1)
    state.bidders[:, 0, 0] = 0
    choice, _cost, _bid, placed = local_auction_round(0, state, net, alloc_prev)
    assert not placed and choice == (0, 0)


def test_local_round_guard_failure_keeps_previous():
    net = two_tx_net(i_max=1e-9)  # any hypothetical contribution violates
    alloc_prev = Allocation(2, [(0, 0), (0, 0)])
    state = fresh_state(2, 1, 1)
    choice, cost_row, _bid, placed = local_auction_round(0, state, net, alloc_prev)
    assert not placed and choice == (0, 0)
    assert cost_row[0, 0] == 0.0


def test_two_transmitter_contention_hand_trace():
    # static benefit rows: k0 [5, 3], k1 [4, 1]; both start outbid
    net = toy_network(np.ones((2, 2, 2)), np.full((2, 1, 2), 1e-9),
                      power_levels=(1.0,), i_max=1e6)
    net_b = {0: np.array([[5.0], [3.0]]), 1: np.array([[4.0], [1.0]])}
    eps = 0.1
    state = fresh_state(2, 2, 1, eps)
    x = Allocation(2, [(1, 0), (0, 0)])
    iv = np.zeros(2)

    def round_all(state, x):
        rows = [local_auction_round(k, state, net, x, iv, net_b[k]) for k in range(2)]
        costs = np.stack([r[1] for r in rows])
        bidders = np.stack([r[2] for r in rows])
        x_new = Allocation(2, [r[0] for r in rows])
        return AuctionState(costs, bidders, x_new, eps), x_new, [r[3] for r in rows]

    state, x, placed = round_all(state, x)
    assert placed == [True, True]
    assert x.get(0) == (0, 0) and x.get(1) == (0, 0)  # both bid the best slot
    assert state.costs[0, 0, 0] == pytest.approx(2.1)  # 5 - 3 + eps
    assert state.costs[1, 0, 0] == pytest.approx(3.1)  # 4 - 1 + eps

    state, x, placed = round_all(state, x)
    # k1's higher bid stands; k0 is outbid and re-bids its second-best slot
    assert x.get(1) == (0, 0) and x.get(0) == (1, 0)
    assert placed == [True, False]
    assert state.costs[0, 1, 0] == pytest.approx(3.0 - 1.9 + eps)

    state, x, placed = round_all(state, x)
    assert placed == [False, False]  # quiescent: everyone content


# --- full run -----------------------------------------------------------------

def test_single_transmitter_two_iterations_to_oracle():
    cfg = make_config(num_sbs=1, num_d2d=0, num_rb=3, power_levels=(0.1, 0.5),
                      i_max=1.0, w2=0.05)
    net = build_topology(cfg)
    res = run_auction(net)
    assert res.converged and res.iterations <= 2
    _, best = exhaustive_search(net)
    assert sum_rate(net, res.allocation) == pytest.approx(best, rel=1e-9)


def test_run_deterministic():
    net = build_topology(make_config(w2=0.05))
    a = run_auction(net)
    b = run_auction(net)
    assert a.allocation == b.allocation and a.iterations == b.iterations
    np.testing.assert_array_equal(a.merged_costs, b.merged_costs)


def test_run_feasible_and_message_accounting():
    net = build_topology(make_config(w2=0.05))
    res = run_auction(net)
    assert is_feasible(net, res.allocation).feasible
    K, N, L = net.num_tx, net.num_rb, net.num_levels
    assert res.messages == res.iterations * (K * N * L + N * L + N)


def test_merged_cost_monotone_across_iterations():
    cfg = make_config(num_sbs=2, num_d2d=1, num_rb=2, i_max=1.0, w2=0.05)
    net = build_topology(cfg)
    from hetalloc import auction, msgpass, netmodel
    rng = np.random.default_rng(net.seed)
    x_prev = msgpass.random_alignment(net, rng)
    costs = np.maximum(0.0, cost_table(net, x_prev))
    state = AuctionState(costs, np.full(costs.shape, NO_BIDDER, np.int64), x_prev, 0.05)
    prev_merged = state.merged_view()[0]
    for _ in range(10):
        iv = netmodel.interference_vector(net, x_prev)
        b = benefit_table(net, x_prev)
        rows = [local_auction_round(k, state, net, x_prev, iv, b[k])
                for k in range(net.num_tx)]
        x_prev = Allocation(net.num_tx, [r[0] for r in rows])
        state = AuctionState(np.stack([r[1] for r in rows]),
                             np.stack([r[2] for r in rows]), x_prev, 0.05)
        merged = state.merged_view()[0]
        assert (merged >= prev_merged - 1e-15).all()
        prev_merged = merged


def test_run_epsilon_validation():
    net = build_topology(make_config())
    with pytest.raises(ValueError):
        run_auction(net, epsilon=-1.0)

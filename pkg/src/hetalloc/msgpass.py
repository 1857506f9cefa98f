"""Weighted max-sum message passing on the transmitter-resource graph.

Each transmitter-to-resource edge carries two normalized messages.  With
damping weight omega in (0, 1]:

    psi_tx[k -> (n,l)] = U[k,n,l] - omega * max'{U + psi_res}  -  (1-omega) * (U[k,n,l] + psi_res[k,n,l])
    psi_res[(n,l) -> k] = -omega * max_{k' != k} psi_tx[k' -> (n,l)] - (1-omega) * psi_tx[k -> (n,l)]

where max' is taken over the other (n', l') entries of transmitter k's
value vector.  At omega = 1 these collapse to the undamped max-sum rules.
Per iteration all transmitter messages are computed in parallel from the
previous resource messages, then all resource messages from the fresh
transmitter messages (the composition whose damped fixed-point iteration
contracts).  Node marginals are the sum of the two directed messages;
positive marginals propose assignments, which are then thinned to one per
transmitter and repaired per RB until every interference budget holds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import netmodel
from .allocation import Allocation
from .matching import random_alignment


@dataclass
class MessageState:
    """Both directed message tables plus the damping weight."""

    psi_tx: np.ndarray   # (K, N, L)
    psi_res: np.ndarray  # (K, N, L)
    omega: float

    def __post_init__(self):
        if not 0.0 < self.omega <= 1.0:
            raise ValueError(f"omega must be in (0, 1], got {self.omega}")

    @classmethod
    def zeros(cls, num_tx, num_rb, num_levels, omega):
        return cls(np.zeros((num_tx, num_rb, num_levels)),
                   np.zeros((num_tx, num_rb, num_levels)), float(omega))

    @property
    def tau(self):
        """Node marginals, entrywise sum of the two message directions."""
        return self.psi_tx + self.psi_res


def tx_message_update(state, utilities, k, res):
    """One transmitter-side message from the previous-iteration state.

    ``utilities`` is transmitter k's (N, L) utility table.  With a single
    resource there is no "other entry" to maximize over, so that term
    contributes nothing.
    """
    n, l = res
    w = state.omega
    values = utilities + state.psi_res[k]
    flat = values.ravel()
    idx = n * utilities.shape[1] + l
    others = np.delete(flat, idx)
    direct = (1.0 - w) * (utilities[n, l] + state.psi_res[k, n, l])
    if others.size == 0:
        return utilities[n, l] - direct
    return utilities[n, l] - w * others.max() - direct


def res_message_update(state, res, k):
    """One resource-side message; with K = 1 the empty maximum is zero."""
    n, l = res
    w = state.omega
    col = state.psi_tx[:, n, l]
    others = np.delete(col, k)
    peak = others.max() if others.size else 0.0
    return -w * peak - (1.0 - w) * col[k]


def _max_excluding_self(a, axis):
    """out[i] = max of ``a`` along ``axis`` with index i left out."""
    s = np.sort(a, axis=axis)
    m1 = np.take(s, [-1], axis=axis)
    m2 = np.take(s, [-2], axis=axis)
    unique_peak = m1 > m2
    return np.where((a == m1) & unique_peak, m2, m1)


def tx_sweep(state, utilities):
    """All transmitter-side messages, synchronously from the old state."""
    w = state.omega
    K = utilities.shape[0]
    values = (utilities + state.psi_res).reshape(K, -1)
    direct = (1.0 - w) * values
    if values.shape[1] == 1:
        out = utilities.reshape(K, -1) - direct
    else:
        out = utilities.reshape(K, -1) - w * _max_excluding_self(values, axis=1) - direct
    return out.reshape(utilities.shape)


def res_sweep(state):
    """All resource-side messages, synchronously from the old state."""
    w = state.omega
    direct = (1.0 - w) * state.psi_tx
    if state.psi_tx.shape[0] == 1:
        return -direct
    return -w * _max_excluding_self(state.psi_tx, axis=0) - direct


def extract_allocation(state, net):
    """Marginal-driven assignment with per-RB interference repair.

    Positive marginals propose; each transmitter keeps only its largest
    positive marginal (the one-alignment constraint), then every RB over
    its budget repeatedly evicts the assignment contributing the most
    reference-user interference (ties toward the lowest transmitter, then
    lowest level) until strictly under budget.
    """
    tau = state.tau
    K, N, L = tau.shape
    alloc = Allocation(K)
    for k in range(K):
        flat = tau[k].ravel()
        j = int(np.argmax(flat))  # first maximum: lowest (n, l) on ties
        if flat[j] > 0.0:
            alloc.assign(k, j // L, j % L)
    for n in range(N):
        while netmodel.aggregated_interference(net, alloc, n) >= net.i_max[n]:
            holders = alloc.on_rb(n)
            contribs = [net.ref_gain[k, n] * net.power_levels[l] for k, l in holders]
            worst = holders[int(np.argmax(contribs))]  # holders are (k, l)-sorted
            alloc.unassign(worst[0])
    return alloc


@dataclass
class MessagePassingResult:
    allocation: Allocation
    iterations: int
    converged: bool
    message_deltas: list
    message_converged_at: Optional[int]
    messages: int


def run_message_passing(net, omega=0.5, t_max=500, seed=None, message_tol=1e-6):
    """Full damped max-sum loop.

    Per iteration the utilities are re-evaluated against the previous
    allocation, both message tables are swept synchronously from the
    previous tables, marginals are formed and an allocation extracted.
    The run converges when the allocation repeats *and* the max-norm
    message step falls below ``message_tol``; it always stops at
    ``t_max``.  Every sweep ships 2*K*N*L message values, so
    ``messages = iterations * 2*K*N*L``.

    Non-convergence is reported through the flag and the delta trace, and
    the last extracted (always feasible) allocation is still returned.
    """
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    rng = np.random.default_rng(net.seed if seed is None else seed)
    K, N, L = net.num_tx, net.num_rb, net.num_levels
    x_prev = random_alignment(net, rng)
    state = MessageState.zeros(K, N, L, omega)

    deltas = []
    msg_converged_at = None
    converged = False
    iterations = 0
    final = x_prev

    for t in range(1, t_max + 1):
        iterations = t
        util = netmodel.utility_table(net, x_prev)
        new_tx = tx_sweep(state, util)
        # Resource replies fold in the transmitter messages just received;
        # replying to the stale sweep instead locks the exchange into a
        # period-2 cycle on this bipartite graph.
        new_res = res_sweep(replace(state, psi_tx=new_tx))
        # Both update rules are exactly equivariant under shifting every
        # transmitter message by -c and every resource message by +c, a
        # direction that cancels in all marginals but otherwise
        # accumulates without bound; pin it so the messages themselves
        # can reach the fixed point.
        shift = (float(np.sum(new_res - state.psi_res))
                 - float(np.sum(new_tx - state.psi_tx))) / (2 * K * N * L)
        new_tx = new_tx + shift
        new_res = new_res - shift
        delta = max(float(np.max(np.abs(new_tx - state.psi_tx))),
                    float(np.max(np.abs(new_res - state.psi_res))))
        deltas.append(delta)
        state = replace(state, psi_tx=new_tx, psi_res=new_res)
        x_t = extract_allocation(state, net)
        if msg_converged_at is None and delta < message_tol:
            msg_converged_at = t
        final = x_t
        if x_t == x_prev and delta < message_tol:
            converged = True
            break
        x_prev = x_t

    return MessagePassingResult(
        allocation=final,
        iterations=iterations,
        converged=converged,
        message_deltas=deltas,
        message_converged_at=msg_converged_at,
        messages=iterations * 2 * K * N * L,
    )

"""Physical-layer model for a two-tier cellular drop.

One macro base station (MBS) at the origin serves C macro users (MUEs) on N
orthogonal resource blocks (RBs).  K = S + D underlay transmitters (S
small-cell base stations, each serving one small-cell UE, plus D
device-to-device transmitters, each serving its paired receiver) reuse the
same RBs, choosing one RB and one of L discrete transmit powers.  The
(RB, power level) pair is the atomic resource, called a transmission
alignment.

A Network is one random realization of the geometry and fading (a "drop").
Gains are frozen after construction (block fading), so a drop can be shared
read-only between concurrent solver runs.  All quantities are linear:
watts, Hz, meters.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

MAX_PLACE_TRIES = 1000
MIN_LINK_DIST = 1.0  # meters; keeps path-loss gains finite


class ConfigError(ValueError):
    """A scenario parameter violates an invariant."""


class ContractError(ValueError):
    """A physical-layer query was made against an inconsistent allocation."""


class Resource(NamedTuple):
    """A transmission alignment: (RB index, power-level index), 0-based."""

    rb: int
    level: int


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one simulation scenario.

    ``power_levels`` is the table of allowed underlay transmit powers in
    watts; a power-level index always refers to this table.  ``i_max`` is
    the per-RB cap on aggregated reference-user interference, either one
    scalar applied to every RB or a per-RB sequence of length ``num_rb``.
    """

    seed: int
    cell_radius: float
    num_mue: int
    num_sbs: int
    num_d2d: int
    num_rb: int
    power_levels: tuple
    mbs_power: float
    noise_psd: float
    pathloss_exp: float
    i_max: object
    w1: float
    w2: float
    d2d_max_dist: float
    sbs_ue_max_dist: float
    rb_bandwidth: float = 180e3  # one LTE RB: 12 subcarriers of 15 kHz

    def __post_init__(self):
        object.__setattr__(self, "power_levels", tuple(float(p) for p in self.power_levels))
        if isinstance(self.i_max, (list, tuple, np.ndarray)):
            object.__setattr__(self, "i_max", tuple(float(v) for v in self.i_max))
        else:
            object.__setattr__(self, "i_max", float(self.i_max))
        self.validate()

    def validate(self):
        if self.num_mue < 1:
            raise ConfigError("num_mue must be >= 1")
        if self.num_rb < 1:
            raise ConfigError("num_rb must be >= 1")
        if self.num_sbs < 0 or self.num_d2d < 0:
            raise ConfigError("num_sbs and num_d2d must be >= 0")
        if self.num_sbs + self.num_d2d < 1:
            raise ConfigError("need at least one underlay transmitter (num_sbs + num_d2d >= 1)")
        if len(self.power_levels) < 1:
            raise ConfigError("power_levels must be non-empty")
        if any(p <= 0 for p in self.power_levels):
            raise ConfigError("power_levels must be > 0")
        if any(b <= a for a, b in zip(self.power_levels, self.power_levels[1:])):
            raise ConfigError("power_levels must be strictly increasing")
        if self.pathloss_exp <= 2:
            raise ConfigError("pathloss_exp must be > 2")
        if isinstance(self.i_max, tuple):
            if len(self.i_max) != self.num_rb:
                raise ConfigError("per-RB i_max must have num_rb entries")
            if any(v <= 0 for v in self.i_max):
                raise ConfigError("i_max entries must be > 0")
        elif self.i_max <= 0:
            raise ConfigError("i_max must be > 0")
        for name in ("cell_radius", "mbs_power", "noise_psd", "rb_bandwidth",
                     "d2d_max_dist", "sbs_ue_max_dist"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")

    @property
    def num_tx(self):
        return self.num_sbs + self.num_d2d

    @property
    def num_levels(self):
        return len(self.power_levels)

    def i_max_array(self):
        if isinstance(self.i_max, tuple):
            return np.asarray(self.i_max, dtype=float)
        return np.full(self.num_rb, self.i_max, dtype=float)


@dataclass(frozen=True)
class Network:
    """One immutable network drop.

    Underlay transmitters are indexed 0..K-1 with SBSs first, then D2D
    transmitters; transmitter k serves receiver k (SBS k -> SUE k, D2D
    transmitter d -> its paired receiver).  ``ref_mue[k, n]`` is the MUE
    with the highest gain from k on RB n: capping the interference it sees
    caps the interference at every MUE.
    """

    config: Optional[ScenarioConfig]
    mue_pos: np.ndarray      # (C, 2)
    sbs_pos: np.ndarray      # (S, 2)
    sue_pos: np.ndarray      # (S, 2)
    d2d_tx_pos: np.ndarray   # (D, 2)
    d2d_rx_pos: np.ndarray   # (D, 2)
    gain_ul: np.ndarray      # (K, K, N): transmitter k -> receiver of transmitter j
    gain_mbs_ul: np.ndarray  # (K, N): MBS -> receiver of transmitter k
    gain_mue: np.ndarray     # (K, C, N): transmitter k -> MUE m
    gain_mbs_mue: np.ndarray  # (C, N)
    ref_mue: np.ndarray      # (K, N) int
    ref_gain: np.ndarray     # (K, N): gain_mue[k, ref_mue[k, n], n]
    power_levels: np.ndarray  # (L,)
    i_max: np.ndarray        # (N,)
    mbs_power: float
    sigma2: float            # noise power per RB: noise_psd * rb_bandwidth
    w1: float
    w2: float
    rb_bandwidth: float
    mbs_pos: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @property
    def num_tx(self):
        return self.gain_ul.shape[0]

    @property
    def num_rb(self):
        return self.gain_ul.shape[2]

    @property
    def num_levels(self):
        return len(self.power_levels)

    @property
    def num_mue(self):
        return self.gain_mbs_mue.shape[0]

    @property
    def seed(self):
        return self.config.seed if self.config is not None else 0

    def checksum(self):
        """Hex digest over positions and gains; identical drops hash equal."""
        h = hashlib.sha256()
        for a in (self.mue_pos, self.sbs_pos, self.sue_pos, self.d2d_tx_pos,
                  self.d2d_rx_pos, self.gain_ul, self.gain_mbs_ul,
                  self.gain_mue, self.gain_mbs_mue):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()


def channel_gain(beta, dist, alpha):
    """Linear link gain: fading power times distance^(-alpha)."""
    if dist <= 0:
        raise ValueError(f"distance must be > 0, got {dist}")
    return beta * dist ** (-alpha)


def make_network(config, mue_pos, sbs_pos, sue_pos, d2d_tx_pos, d2d_rx_pos,
                 gain_ul, gain_mbs_ul, gain_mue, gain_mbs_mue,
                 power_levels, i_max, mbs_power, sigma2, w1, w2, rb_bandwidth):
    """Assemble a Network, deriving the per-(k, n) reference MUE."""
    gain_mue = np.asarray(gain_mue, dtype=float)
    ref_mue = np.argmax(gain_mue, axis=1).astype(np.int64)  # (K, N)
    ref_gain = np.take_along_axis(gain_mue, ref_mue[:, None, :], axis=1)[:, 0, :]
    return Network(
        config=config,
        mue_pos=np.asarray(mue_pos, dtype=float),
        sbs_pos=np.asarray(sbs_pos, dtype=float),
        sue_pos=np.asarray(sue_pos, dtype=float),
        d2d_tx_pos=np.asarray(d2d_tx_pos, dtype=float),
        d2d_rx_pos=np.asarray(d2d_rx_pos, dtype=float),
        gain_ul=np.asarray(gain_ul, dtype=float),
        gain_mbs_ul=np.asarray(gain_mbs_ul, dtype=float),
        gain_mue=gain_mue,
        gain_mbs_mue=np.asarray(gain_mbs_mue, dtype=float),
        ref_mue=ref_mue,
        ref_gain=ref_gain,
        power_levels=np.asarray(power_levels, dtype=float),
        i_max=np.asarray(i_max, dtype=float),
        mbs_power=float(mbs_power),
        sigma2=float(sigma2),
        w1=float(w1),
        w2=float(w2),
        rb_bandwidth=float(rb_bandwidth),
    )


def _sample_disk(rng, center, radius, count):
    r = radius * np.sqrt(rng.uniform(size=count))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=count)
    return center + np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def _sample_receiver(rng, center, radius, anchors, label):
    """Draw one point in a disk, at least MIN_LINK_DIST from every anchor."""
    for _ in range(MAX_PLACE_TRIES):
        p = _sample_disk(rng, center, radius, 1)[0]
        d = np.linalg.norm(anchors - p, axis=1)
        if d.min() >= MIN_LINK_DIST:
            return p
    raise ConfigError(f"could not place {label} at {MIN_LINK_DIST} m from all "
                      f"transmitters after {MAX_PLACE_TRIES} tries")


def build_topology(config):
    """Generate a random drop: node placement, fading, gains, reference users.

    Deterministic given ``config.seed``.  MUEs, SBSs and D2D transmitters
    are uniform in the macro disk; each SUE is uniform in a small disk
    around its SBS and each D2D receiver around its transmitter.  Fading
    power is exponential with unit mean (Rayleigh envelope), drawn
    independently per link and RB.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    C, S, D, N = config.num_mue, config.num_sbs, config.num_d2d, config.num_rb
    K = S + D
    alpha = config.pathloss_exp

    sbs_pos = _sample_disk(rng, np.zeros(2), config.cell_radius, S)
    d2d_tx_pos = _sample_disk(rng, np.zeros(2), config.cell_radius, D)
    tx_pos = np.vstack([sbs_pos, d2d_tx_pos]) if K else np.zeros((0, 2))
    # Every placed receiver must keep MIN_LINK_DIST from all gain
    # counterparts: the MBS and every underlay transmitter.
    anchors = np.vstack([np.zeros((1, 2)), tx_pos])

    mue_pos = np.array([
        _sample_receiver(rng, np.zeros(2), config.cell_radius, anchors, f"MUE {m}")
        for m in range(C)
    ])
    sue_pos = np.array([
        _sample_receiver(rng, sbs_pos[s], config.sbs_ue_max_dist, anchors, f"SUE {s}")
        for s in range(S)
    ]).reshape(S, 2)
    d2d_rx_pos = np.array([
        _sample_receiver(rng, d2d_tx_pos[d], config.d2d_max_dist, anchors, f"D2D receiver {d}")
        for d in range(D)
    ]).reshape(D, 2)

    rx_pos = np.vstack([sue_pos, d2d_rx_pos]) if K else np.zeros((0, 2))

    def dist(a, b):
        return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)

    d_tx_mue = dist(tx_pos, mue_pos)                      # (K, C)
    d_mbs_mue = np.linalg.norm(mue_pos, axis=1)           # (C,)
    d_tx_rx = dist(tx_pos, rx_pos)                        # (K, K)
    d_mbs_rx = np.linalg.norm(rx_pos, axis=1)             # (K,)

    # Fading draws happen after all placement so the stream layout is fixed.
    beta_tx_mue = rng.exponential(1.0, size=(K, C, N))
    beta_mbs_mue = rng.exponential(1.0, size=(C, N))
    beta_tx_rx = rng.exponential(1.0, size=(K, K, N))
    beta_mbs_rx = rng.exponential(1.0, size=(K, N))

    gain_mue = beta_tx_mue * d_tx_mue[:, :, None] ** (-alpha)
    gain_mbs_mue = beta_mbs_mue * d_mbs_mue[:, None] ** (-alpha)
    gain_ul = beta_tx_rx * d_tx_rx[:, :, None] ** (-alpha)
    gain_mbs_ul = beta_mbs_rx * d_mbs_rx[:, None] ** (-alpha)

    return make_network(
        config, mue_pos, sbs_pos, sue_pos, d2d_tx_pos, d2d_rx_pos,
        gain_ul, gain_mbs_ul, gain_mue, gain_mbs_mue,
        config.power_levels, config.i_max_array(), config.mbs_power,
        config.noise_psd * config.rb_bandwidth, config.w1, config.w2,
        config.rb_bandwidth,
    )


def shannon_rate(sinr, bandwidth):
    """Achievable rate in bit/s for the given SINR and bandwidth."""
    if sinr < 0:
        raise ValueError(f"SINR must be >= 0, got {sinr}")
    return bandwidth * math.log2(1.0 + sinr)


def sinr_underlay(net, alloc, k, n):
    """SINR at the receiver served by transmitter k on RB n.

    Requires ``alloc`` to actually place k on RB n; the denominator sums
    the macro-tier signal, every co-channel underlay transmitter, and the
    per-RB noise power.
    """
    res = alloc.get(k)
    if res is None or res[0] != n:
        raise ContractError(f"transmitter {k} is not assigned to RB {n}")
    p = net.power_levels[res[1]]
    den = net.gain_mbs_ul[k, n] * net.mbs_power + net.sigma2
    for kp, (nn, ll) in alloc.assigned_items():
        if kp != k and nn == n:
            den += net.gain_ul[kp, k, n] * net.power_levels[ll]
    return net.gain_ul[k, k, n] * p / den


def sinr_macro(net, alloc, m, n):
    """SINR of MUE m on RB n under the interference generated by alloc."""
    den = net.sigma2
    for kp, (nn, ll) in alloc.assigned_items():
        if nn == n:
            den += net.gain_mue[kp, m, n] * net.power_levels[ll]
    return net.gain_mbs_mue[m, n] * net.mbs_power / den


def aggregated_interference(net, alloc, n):
    """Total reference-user interference on RB n caused by alloc."""
    total = 0.0
    for kp, (nn, ll) in alloc.assigned_items():
        if nn == n:
            total += net.ref_gain[kp, n] * net.power_levels[ll]
    return total


def interference_vector(net, alloc):
    """Per-RB aggregated reference-user interference as an (N,) array."""
    return np.array([aggregated_interference(net, alloc, n)
                     for n in range(net.num_rb)])


def _hypothetical_sinr(net, alloc, k, n, p):
    # SINR if k moved to RB n at power p; k's own current entry is ignored.
    den = net.gain_mbs_ul[k, n] * net.mbs_power + net.sigma2
    for kp, (nn, ll) in alloc.assigned_items():
        if kp != k and nn == n:
            den += net.gain_ul[kp, k, n] * net.power_levels[ll]
    return net.gain_ul[k, k, n] * p / den


def _own_reference_contribution(net, alloc, k, n):
    res = alloc.get(k)
    if res is not None and res[0] == n:
        return net.ref_gain[k, n] * net.power_levels[res[1]]
    return 0.0


def utility(net, alloc, k, res):
    """Biased utility of transmitter k hypothetically using ``res``.

    The rate term is the spectral efficiency log2(1 + SINR) (bit/s/Hz) and
    the penalty term is the RB's interference overage relative to its
    budget, (I / I_max) - 1, so w1 and w2 trade off on one dimensionless
    scale.  Interference from the other transmitters is taken from
    ``alloc``; k's own current assignment is excluded (a hypothetical
    move, not an addition).
    """
    n, l = res
    p = net.power_levels[l]
    gamma = _hypothetical_sinr(net, alloc, k, n, p)
    i_others = aggregated_interference(net, alloc, n) - _own_reference_contribution(net, alloc, k, n)
    i_hyp = net.ref_gain[k, n] * p + i_others
    return net.w1 * math.log2(1.0 + gamma) - net.w2 * (i_hyp / net.i_max[n] - 1.0)


def _interference_maps(net, alloc):
    """Receiver-side and reference-user interference aggregates of alloc.

    Returns (rx_int, agg) where rx_int[k, n] is the co-channel power seen
    by k's receiver on RB n from every other assigned transmitter, and
    agg[n] is the aggregated reference-user interference on RB n.
    """
    K, N = net.num_tx, net.num_rb
    rx_int = np.zeros((K, N))
    agg = np.zeros(N)
    for kp, (n, l) in alloc.assigned_items():
        p = net.power_levels[l]
        agg[n] += net.ref_gain[kp, n] * p
        v = net.gain_ul[kp, :, n] * p
        v[kp] = 0.0  # a transmitter does not interfere with its own receiver
        rx_int[:, n] += v
    return rx_int, agg


def gamma_table(net, alloc):
    """Hypothetical-move SINR for every (k, n, l) given alloc, shape (K, N, L)."""
    rx_int, _ = _interference_maps(net, alloc)
    sig = net.gain_ul[np.arange(net.num_tx), np.arange(net.num_tx), :]  # (K, N)
    den = net.gain_mbs_ul * net.mbs_power + rx_int + net.sigma2
    return sig[:, :, None] * net.power_levels[None, None, :] / den[:, :, None]


def benefit_table(net, alloc):
    """Weighted spectral efficiency w1 * log2(1 + SINR) per (k, n, l)."""
    return net.w1 * np.log2(1.0 + gamma_table(net, alloc))


def cost_table(net, alloc):
    """Unclamped interference cost w2 * (I/I_max - 1) per (k, n, l).

    I is the RB's aggregated reference-user interference if k moved to
    (n, l), with every other transmitter kept at its alloc assignment.
    """
    _, agg = _interference_maps(net, alloc)
    own = np.zeros((net.num_tx, net.num_rb))
    for k, (n, l) in alloc.assigned_items():
        own[k, n] = net.ref_gain[k, n] * net.power_levels[l]
    i_others = agg[None, :] - own
    i_hyp = net.ref_gain[:, :, None] * net.power_levels[None, None, :] + i_others[:, :, None]
    return net.w2 * (i_hyp / net.i_max[None, :, None] - 1.0)


def utility_table(net, alloc):
    """Utility for every (k, n, l) given alloc; equals benefit minus cost."""
    return benefit_table(net, alloc) - cost_table(net, alloc)

"""Deterministic discrete-event engine.

Single event queue ordered by (time, sequence number); sequence numbers make
ordering total and independent of payload contents. Two event kinds exist:
node cycle ticks (payload None, rescheduled every cycle) and message
deliveries. Messages are counted when sent; events firing at or after the
run horizon are discarded unprocessed.

Determinism: one master RNG derives one 64-bit seed per node; each node owns
a private ``random.Random``. The first draw on every node stream is its tick
phase offset, uniform in [0, cycle). Nothing else consumes randomness.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field, replace
from heapq import heappop, heappush

from .consensus import BecpNode, BecpParams
from .model import Block, NodeId, PULL
from .snow import SnowNode, SnowParams, avalanche_params, snowman_params

PROTOCOLS = ("becp", "snowman", "avalanche")


@dataclass
class LatencyModel:
    kind: str = "uniform"   # "uniform" | "pareto"
    low: float = 0.05       # uniform bounds, seconds
    high: float = 0.15
    x_m: float = 0.05       # pareto scale (minimum), seconds
    alpha: float = 5.0      # pareto shape

    def sampler(self):
        if self.kind == "uniform":
            low, high = self.low, self.high
            return lambda rng: rng.uniform(low, high)
        if self.kind == "pareto":
            x_m = self.x_m
            inv = -1.0 / self.alpha
            # inverse-CDF on 1 - U so the draw consumes exactly one random()
            return lambda rng: x_m * (1.0 - rng.random()) ** inv
        raise ValueError(f"unknown latency kind: {self.kind!r}")

    def mean(self) -> float:
        if self.kind == "uniform":
            return (self.low + self.high) / 2.0
        return pareto_mean(self.x_m, self.alpha)


def pareto_mean(x_m: float, alpha: float) -> float:
    if alpha <= 1.0:
        return float("inf")
    return alpha * x_m / (alpha - 1.0)


@dataclass
class RunConfig:
    protocol: str = "becp"
    n_nodes: int = 1000
    duration: float = 300.0
    cycle: float = 0.351
    seed: int = 1
    d1: float = 0.05                       # fixed processing delay added per delivery
    latency: LatencyModel = field(default_factory=LatencyModel)
    p_block: float = 0.05
    t_block: float = 10.0
    becp: BecpParams = field(default_factory=BecpParams)
    snow: SnowParams | None = None         # None: preset chosen by protocol
    proposers: tuple[NodeId, ...] | None = None  # None: every node may propose
    conservation_every: float | None = None      # sample mass sums at this spacing
    record_confirm_ticks: bool = False


@dataclass
class RunResult:
    config: RunConfig
    ticks_total: int
    messages: list[int]                    # counts indexed by message kind
    ledgers: list[list[Block]]
    confirm_stats: dict[Block, list]       # block -> [count, sum_time, max_time]
    fork_top: int
    fork_rec: int
    conservation: list[tuple[float, float, float]]  # (t, sum_v, sum_w)
    confirm_ticks: dict[Block, dict[NodeId, int]] | None
    wall_seconds: float

    @property
    def messages_total(self) -> int:
        return sum(self.messages)


class Net:
    """Message fabric shared by all nodes of one run."""

    __slots__ = ("queue", "seq", "now", "d1", "sample_latency", "counters",
                 "confirm_stats", "confirm_ticks")

    def __init__(self, d1: float, sample_latency, record_confirm_ticks: bool):
        self.queue: list = []
        self.seq = itertools.count()
        self.now = 0.0
        self.d1 = d1
        self.sample_latency = sample_latency
        self.counters = [0, 0, 0, 0]
        self.confirm_stats: dict[Block, list] = {}
        self.confirm_ticks: dict[Block, dict[NodeId, int]] | None = (
            {} if record_confirm_ticks else None)

    def send(self, rng: random.Random, dest: NodeId, payload) -> None:
        self.counters[payload[0]] += 1
        when = self.now + self.sample_latency(rng) + self.d1
        heappush(self.queue, (when, next(self.seq), dest, payload))

    def record_confirm(self, ref: Block, nid: NodeId, now: float, tick_no: int) -> None:
        stats = self.confirm_stats.get(ref)
        if stats is None:
            self.confirm_stats[ref] = [1, now, now]
        else:
            stats[0] += 1
            stats[1] += now
            if now > stats[2]:
                stats[2] = now
        if self.confirm_ticks is not None:
            self.confirm_ticks.setdefault(ref, {})[nid] = tick_no


def build_nodes(config: RunConfig, net: Net) -> tuple[list, list[float]]:
    """Construct nodes plus their initial tick offsets, consuming RNG in the
    documented order."""
    master = random.Random(config.seed)
    n = config.n_nodes
    seeds = [master.getrandbits(64) for _ in range(n)]
    proposers = None if config.proposers is None else set(config.proposers)
    protocol = config.protocol
    nodes = []
    offsets = []
    if protocol == "becp":
        params = replace(config.becp, t_block=config.t_block, p_block=config.p_block)
        for i in range(n):
            rng = random.Random(seeds[i])
            offsets.append(rng.uniform(0.0, config.cycle))
            nodes.append(BecpNode(i, n, rng, net, params, is_seed=(i == 0),
                                  is_proposer=(proposers is None or i in proposers)))
    elif protocol in ("snowman", "avalanche"):
        params = config.snow
        if params is None:
            params = snowman_params() if protocol == "snowman" else avalanche_params()
        params = replace(params, t_block=config.t_block, p_block=config.p_block)
        for i in range(n):
            rng = random.Random(seeds[i])
            offsets.append(rng.uniform(0.0, config.cycle))
            nodes.append(SnowNode(i, n, rng, net, params,
                                  is_proposer=(proposers is None or i in proposers)))
    else:
        raise ValueError(f"unknown protocol: {protocol!r}")
    return nodes, offsets


def run(config: RunConfig) -> RunResult:
    started = time.perf_counter()
    net = Net(config.d1, config.latency.sampler(), config.record_confirm_ticks)
    nodes, offsets = build_nodes(config, net)
    queue = net.queue
    seq = net.seq
    for i, off in enumerate(offsets):
        heappush(queue, (off, next(seq), i, None))

    duration = config.duration
    cycle = config.cycle
    conservation: list[tuple[float, float, float]] = []
    # mass sums are a size-estimator notion; only the epidemic protocol has one
    next_sample = 0.0 if (config.conservation_every and config.protocol == "becp") else None

    ticks_total = 0
    while queue:
        when = queue[0][0]
        if when >= duration:
            break
        if next_sample is not None and next_sample <= when:
            while next_sample <= when:
                conservation.append(_mass_sums(next_sample, nodes, queue))
                next_sample += config.conservation_every
        when, _, nid, payload = heappop(queue)
        net.now = when
        node = nodes[nid]
        if payload is None:
            node.on_tick(when)
            ticks_total += 1
            heappush(queue, (when + cycle, next(seq), nid, None))
        else:
            node.on_message(when, payload)

    return RunResult(
        config=config,
        ticks_total=ticks_total,
        messages=net.counters[:],
        ledgers=[node.ledger[:] for node in nodes],
        confirm_stats=net.confirm_stats,
        fork_top=sum(getattr(node, "fork_top", 0) for node in nodes),
        fork_rec=sum(getattr(node, "fork_rec", 0) for node in nodes),
        conservation=conservation,
        confirm_ticks=net.confirm_ticks,
        wall_seconds=time.perf_counter() - started,
    )


def _mass_sums(at: float, nodes, queue) -> tuple[float, float, float]:
    """Global size-estimator mass, counting in-flight message halves."""
    sum_v = 0.0
    sum_w = 0.0
    for node in nodes:
        sum_v += node.v
        sum_w += node.w
    for _, _, _, payload in queue:
        if payload is not None and payload[0] <= PULL:
            sum_v += payload[2]
            sum_w += payload[3]
    return (at, sum_v, sum_w)


def run_trials(config: RunConfig, trials: int) -> list[RunResult]:
    """Independent repetitions with seeds config.seed .. config.seed+trials-1."""
    return [run(replace(config, seed=config.seed + k)) for k in range(trials)]

"""Node cache protocol: a bounded random peer view.

Each node keeps up to `capacity` peer ids. Gossip messages carry small random
samples of the sender's cache; receivers merge them and evict uniformly at
random when over capacity. The node's own id is never stored, so drawing a
gossip partner from the cache cannot select self.
"""

from __future__ import annotations

import random

from .model import NodeId

CACHE_CAPACITY = 100
SAMPLE_SIZE = 8


def sample_other_ids(rng: random.Random, n: int, k: int, self_id: NodeId) -> list[NodeId]:
    """k distinct ids drawn uniformly from range(n) excluding self_id.

    Index-shift keeps this O(k) without materialising a population list.
    """
    if k > n - 1:
        raise ValueError("cannot draw %d peers from a network of %d" % (k, n))
    picked: set[NodeId] = set()
    out: list[NodeId] = []
    randrange = rng.randrange
    while len(out) < k:
        j = randrange(n - 1)
        pid = j + 1 if j >= self_id else j
        if pid not in picked:
            picked.add(pid)
            out.append(pid)
    return out


class PeerCache:
    """Bounded random view over other nodes' ids."""

    __slots__ = ("self_id", "capacity", "ids", "members")

    def __init__(self, self_id: NodeId, all_count: int, capacity: int, rng: random.Random):
        if all_count < 2:
            raise ValueError("peer cache needs at least one other node")
        self.self_id = self_id
        self.capacity = capacity
        size = min(capacity, all_count - 1)
        self.ids = sample_other_ids(rng, all_count, size, self_id)
        self.members = set(self.ids)

    def __len__(self) -> int:
        return len(self.ids)

    def random_node(self, rng: random.Random) -> NodeId:
        """Uniform draw from the cache; the caller guards against emptiness."""
        ids = self.ids
        return ids[rng.randrange(len(ids))]

    def sample(self, rng: random.Random) -> list[NodeId]:
        """Uniform sample without replacement, at most SAMPLE_SIZE entries."""
        ids = self.ids
        if len(ids) <= SAMPLE_SIZE:
            return ids[:]
        return rng.sample(ids, SAMPLE_SIZE)

    def merge(self, sample, rng: random.Random) -> None:
        """Union with a received sample, then random eviction down to capacity."""
        ids = self.ids
        members = self.members
        self_id = self.self_id
        for pid in sample:
            if pid != self_id and pid not in members:
                members.add(pid)
                ids.append(pid)
        capacity = self.capacity
        while len(ids) > capacity:
            i = rng.randrange(len(ids))
            victim = ids[i]
            last = ids.pop()
            if i < len(ids):
                ids[i] = last
            members.discard(victim)

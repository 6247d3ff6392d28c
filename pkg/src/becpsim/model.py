"""Core data model shared by the consensus protocols and the simulator.

Blocks are immutable identity records: the mutable per-node bookkeeping
(estimator pairs, phase, counters) lives with each node, not here. A block's
id doubles as its chain height, so a ledger is a list whose index equals the
block id at that position.
"""

from __future__ import annotations

import hashlib
import struct
from typing import NamedTuple

NodeId = int

# Block phases, in forward-only order.
PROPAGATION = 0
AGREEMENT = 1
CONFIRMED = 2

# Message kinds.
PUSH = 0
PULL = 1
QUERY = 2
RESPONSE = 3

_HEADER = struct.Struct("<QQd")  # id, creator, creation time (little-endian)

ZERO_DIGEST = b"\x00" * 32


class EstimatorPair(NamedTuple):
    """A push-sum (value, weight) pair."""

    v: float
    w: float


class Block(NamedTuple):
    """Immutable block identity. `parent` and `digest` are 32-byte SHA-256 values."""

    id: int
    creator: NodeId
    t: float
    parent: bytes
    digest: bytes


def block_digest(block_id: int, creator: NodeId, t: float, parent: bytes) -> bytes:
    """SHA-256 over the canonical little-endian encoding of the block header.

    Layout: id (u64) | creator (u64) | t (f64) | parent digest (32 raw bytes).
    """
    return hashlib.sha256(_HEADER.pack(block_id, creator, t) + parent).digest()


def make_block(block_id: int, creator: NodeId, t: float, parent: bytes) -> Block:
    return Block(block_id, creator, t, parent, block_digest(block_id, creator, t, parent))


#: The pre-installed root of every chain. All nodes start with this block
#: confirmed, so chains across nodes always share position 0.
GENESIS = make_block(0, 0, 0.0, ZERO_DIGEST)


class BlockShare(NamedTuple):
    """One block's contribution to an exchange message.

    Carries the block identity plus halved estimator scalars and the sender's
    local phase at send time.
    """

    id: int
    creator: NodeId
    t: float
    parent: bytes
    digest: bytes
    vp: float
    wp: float
    va: float
    wa: float
    state: int


class ExchangeMessage(NamedTuple):
    """A gossip push or its pull reply."""

    kind: int
    sender: NodeId
    ssep_v: float
    ssep_w: float
    ncp_sample: tuple
    block_shares: tuple

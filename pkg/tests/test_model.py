"""Block identity and digest checks."""

import hashlib
import struct

import pytest
from hypothesis import given
from hypothesis import strategies as st

from becpsim.model import (
    GENESIS,
    ZERO_DIGEST,
    Block,
    BlockShare,
    ExchangeMessage,
    block_digest,
    make_block,
)


def reference_digest(bid: int, creator: int, t: float, parent: bytes) -> bytes:
    """Independent digest construction: little-endian u64 id, u64 creator,
    f64 seconds, then the 32 parent bytes, hashed with sha256."""
    header = bid.to_bytes(8, "little") + creator.to_bytes(8, "little") + struct.pack("<d", t)
    return hashlib.sha256(header + parent).digest()


# frozen from the reference construction above
GENESIS_DIGEST_HEX = "d4817aa5497628e7c77e6b606107042bbba3130888c5f47a375e6179be789fbb"
CHILD_DIGEST_HEX = "040a0cc3094a985a7db9cad136c5e38e932a43955d295981721d495c695aef5c"


def test_genesis_fields():
    assert GENESIS.id == 0
    assert GENESIS.creator == 0
    assert GENESIS.t == 0.0
    assert GENESIS.parent == ZERO_DIGEST == b"\x00" * 32
    assert GENESIS.digest == bytes.fromhex(GENESIS_DIGEST_HEX)


def test_child_digest_frozen_value():
    child = make_block(1, 42, 10.533, GENESIS.digest)
    assert child.digest == bytes.fromhex(CHILD_DIGEST_HEX)


@given(st.integers(0, 2**63), st.integers(0, 2**32), st.floats(0, 1e6),
       st.binary(min_size=32, max_size=32))
def test_digest_matches_reference(bid, creator, t, parent):
    assert block_digest(bid, creator, t, parent) == reference_digest(bid, creator, t, parent)


def test_digest_sensitive_to_every_field():
    base = (3, 7, 21.5, GENESIS.digest)
    d0 = block_digest(*base)
    assert block_digest(4, 7, 21.5, GENESIS.digest) != d0
    assert block_digest(3, 8, 21.5, GENESIS.digest) != d0
    assert block_digest(3, 7, 21.5000001, GENESIS.digest) != d0
    assert block_digest(3, 7, 21.5, b"\x01" * 32) != d0


def test_make_block_links_parent():
    a = make_block(1, 5, 10.0, GENESIS.digest)
    b = make_block(2, 6, 20.0, a.digest)
    assert b.parent == a.digest
    assert b.digest == block_digest(2, 6, 20.0, a.digest)


def test_block_equality_is_by_value():
    a = make_block(1, 5, 10.0, GENESIS.digest)
    b = Block(a.id, a.creator, a.t, a.parent, a.digest)
    assert a == b and a is not b


def test_share_and_message_shapes():
    share = BlockShare(1, 5, 10.0, GENESIS.digest, b"\x02" * 32, 0.5, 0.5, 0.0, 0.5, 0)
    msg = ExchangeMessage(0, 3, 0.5, 0.25, (1, 2), (share,))
    assert msg.kind == 0 and msg[0] == 0  # kind doubles as the counter index
    assert msg.block_shares[0].wp == 0.5

"""Epidemic consensus: phase-transition agreement over push-pull gossip.

Each node runs three coupled mechanisms per gossip cycle:

* a push-sum size estimator (one global seed carries the weight),
* a bounded random peer cache that supplies gossip partners,
* per-block estimator pairs that carry a block through Propagation ->
  Agreement -> Confirmed.

A block's propagation pair starts at (1, 1) on its creator and every node
adds +1 to the value on first receipt, so the network-wide ratio approaches
the number of nodes that hold the block. The agreement pair starts at (0, 1)
and each node adds +1 exactly once when it locally enters Agreement. A node
promotes a block one phase when the relevant ratio stays within
epsilon * n_hat of its own size estimate for psi consecutive cycles.

Duplicate block ids are resolved in favour of the earliest creation time,
then the lowest creator id; the loser's whole cached subtree is removed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .model import (
    AGREEMENT,
    CONFIRMED,
    GENESIS,
    PROPAGATION,
    PULL,
    PUSH,
    Block,
    BlockShare,
    ExchangeMessage,
    NodeId,
    make_block,
)
from .ncp import PeerCache
from .ssep import W_MIN


@dataclass
class BecpParams:
    epsilon: float = 0.05       # relative tolerance on estimator ratios
    psi: int = 5                # consecutive passing cycles per phase
    cache_capacity: int = 100
    t_block: float = 10.0       # generation boundary spacing, seconds
    p_block: float = 0.05       # per-proposer generation probability per boundary
    watchdog_min: float = 1.0   # stale-block deadline, lower bound (s)
    watchdog_max: float = 2.0   # stale-block deadline, upper bound (s)
    parent_match: str = "hash"  # "hash": parent digest must equal b_pref's;
                                # "creator": parent's creator must equal b_pref's
    # A node keeps sharing a block it confirmed for this many further cycles,
    # then freezes its pairs. Without the tail, nodes still in Agreement when
    # the rest of the network freezes bleed their pair weight into frozen
    # absorbers and can never finish, which breaks network-wide confirmation.
    share_tail_cycles: int = 30


class CachedBlock:
    """A node's mutable copy of one block."""

    __slots__ = ("ref", "vp", "wp", "va", "wa", "state", "streak", "deadline")

    def __init__(self, ref: Block, vp: float, wp: float, va: float, wa: float,
                 state: int, deadline: float):
        self.ref = ref
        self.vp = vp
        self.wp = wp
        self.va = va
        self.wa = wa
        self.state = state
        self.streak = 0
        self.deadline = deadline


class BecpNode:
    """Protocol state machine for one node; driven by the simulation engine.

    RNG draw order is part of the replay contract (tests reproduce node
    streams independently). Per tick: generation coin (proposers at a due
    boundary only), then the new block's watchdog deadline, then gossip
    partner, cache sample and latency for the push. Per received message:
    cache evictions (if any), then one watchdog re-arm per merged share, one
    deadline per installed block, and for a push the reply's cache sample and
    latency.
    """

    __slots__ = (
        "nid", "rng", "net", "params", "is_proposer",
        "v", "w", "cache",
        "unconf", "confirmed", "tail", "ledger", "b_pref",
        "counted_vp", "counted_va",
        "next_gen", "tick_no", "fork_top", "fork_rec",
    )

    def __init__(self, nid: NodeId, n_nodes: int, rng: random.Random, net,
                 params: BecpParams, is_seed: bool, is_proposer: bool):
        self.nid = nid
        self.rng = rng
        self.net = net
        self.params = params
        self.is_proposer = is_proposer
        self.v = 1.0
        self.w = 1.0 if is_seed else 0.0
        self.cache = PeerCache(nid, n_nodes, params.cache_capacity, rng) if n_nodes > 1 else None
        genesis = CachedBlock(GENESIS, 0.0, 0.0, 0.0, 0.0, CONFIRMED, 0.0)
        self.unconf: dict[int, CachedBlock] = {}
        self.confirmed: dict[int, CachedBlock] = {0: genesis}
        self.tail: dict[int, CachedBlock] = {}  # confirmed, still shared
        self.ledger: list[Block] = [GENESIS]
        self.b_pref = genesis
        self.counted_vp: set[Block] = set()
        self.counted_va: set[Block] = set()
        self.next_gen = 0.0
        self.tick_no = 0
        self.fork_top = 0
        self.fork_rec = 0

    # ----- cycle ticks ------------------------------------------------------

    def on_tick(self, now: float) -> None:
        self.tick_no += 1
        self.update_phases(now)
        self.maybe_generate(now)
        self.expire_watchdogs(now)
        cache = self.cache
        if cache is None or not cache.ids:
            return
        rng = self.rng
        ids = cache.ids
        peer = ids[rng.randrange(len(ids))]
        sample = cache.sample(rng)
        self.net.send(rng, peer,
                      ExchangeMessage(PUSH, self.nid, *self._halve(), tuple(sample),
                                      self._halve_blocks()))

    def _halve(self):
        v = self.v * 0.5
        w = self.w * 0.5
        self.v = v
        self.w = w
        return v, w

    def _halve_blocks(self) -> tuple:
        unconf = self.unconf
        tail = self.tail
        if not unconf and not tail:
            return ()
        shares = []
        if tail:
            # tail ids all sit below every unconfirmed id, keeping shares
            # ordered by ascending id
            for bid in sorted(tail):
                cb = tail[bid]
                shares.append(self._halve_one(cb))
                cb.streak -= 1      # remaining tail cycles; frozen afterwards
                if cb.streak <= 0:
                    del tail[bid]
        for bid in sorted(unconf):
            shares.append(self._halve_one(unconf[bid]))
        return tuple(shares)

    @staticmethod
    def _halve_one(cb: CachedBlock) -> BlockShare:
        vp = cb.vp * 0.5
        wp = cb.wp * 0.5
        va = cb.va * 0.5
        wa = cb.wa * 0.5
        cb.vp = vp
        cb.wp = wp
        cb.va = va
        cb.wa = wa
        r = cb.ref
        return BlockShare(r.id, r.creator, r.t, r.parent, r.digest,
                          vp, wp, va, wa, cb.state)

    def update_phases(self, now: float) -> None:
        """Advance each cached block at most one phase, using this tick's estimate.

        No checks run while the node's own size estimate is unavailable. A
        block whose pair weight is negligible fails its check (streak resets).
        """
        w = self.w
        if w <= W_MIN or not self.unconf:
            return
        nhat = self.v / w
        tol = self.params.epsilon * nhat
        psi = self.params.psi
        for bid in sorted(self.unconf):
            cb = self.unconf.get(bid)
            if cb is None:
                continue
            if cb.state == PROPAGATION:
                wp = cb.wp
                if wp > W_MIN and abs(cb.vp / wp - nhat) <= tol:
                    cb.streak += 1
                    if cb.streak >= psi:
                        cb.state = AGREEMENT
                        cb.streak = 0
                        ref = cb.ref
                        if ref not in self.counted_va:
                            self.counted_va.add(ref)
                            cb.va += 1.0
                else:
                    cb.streak = 0
            elif cb.state == AGREEMENT:
                wa = cb.wa
                if wa > W_MIN and abs(cb.va / wa - nhat) <= tol:
                    cb.streak += 1
                    if cb.streak >= psi:
                        self._try_confirm(bid, cb, now)
                else:
                    cb.streak = 0

    def _try_confirm(self, bid: int, cb: CachedBlock, now: float) -> None:
        ledger = self.ledger
        ref = cb.ref
        if len(ledger) != bid or ledger[-1].digest != ref.parent:
            cb.streak = self.params.psi  # parent not confirmed yet; retry next tick
            return
        cb.state = CONFIRMED
        del self.unconf[bid]
        self.confirmed[bid] = cb
        tail_cycles = self.params.share_tail_cycles
        if tail_cycles > 0:
            cb.streak = tail_cycles
            self.tail[bid] = cb
        ledger.append(ref)
        self.net.record_confirm(ref, self.nid, now, self.tick_no)

    def maybe_generate(self, now: float) -> None:
        """One generation attempt on the first tick at or past each boundary."""
        if now + 1e-12 < self.next_gen:
            return
        self.next_gen += self.params.t_block
        if not self.is_proposer:
            return
        if self.rng.random() >= self.params.p_block:
            return
        slot = self.b_pref.ref.id + 1
        if slot in self.unconf:
            return  # a candidate already occupies the next height
        ref = make_block(slot, self.nid, now, self.b_pref.ref.digest)
        cb = CachedBlock(ref, 1.0, 1.0, 0.0, 1.0, PROPAGATION, self._deadline(now))
        self.counted_vp.add(ref)
        self.unconf[slot] = cb
        self.b_pref = cb

    def expire_watchdogs(self, now: float) -> None:
        """Drop cached blocks that stopped receiving updates, unless they sit
        on the preferred chain."""
        unconf = self.unconf
        if not unconf:
            return
        protected = set()
        cb = self.b_pref
        while cb is not None:
            ref = cb.ref
            protected.add(ref.digest)
            nxt = unconf.get(ref.id - 1)
            if nxt is None or nxt.ref.digest != ref.parent:
                break
            cb = nxt
        for bid in sorted(unconf):
            cb = unconf.get(bid)
            if cb is None:
                continue  # already removed as a descendant
            if cb.deadline < now and cb.ref.digest not in protected:
                self.fork_top += 1
                self._remove_subtree(bid)

    # ----- message handling ---------------------------------------------------

    def on_message(self, now: float, msg: ExchangeMessage) -> None:
        self.v += msg.ssep_v
        self.w += msg.ssep_w
        cache = self.cache
        if cache is not None and msg.ncp_sample:
            cache.merge(msg.ncp_sample, self.rng)
        for share in msg.block_shares:
            self.resolve_duplicate(now, share)
        if msg.kind == PUSH:
            rng = self.rng
            sample = () if cache is None else tuple(cache.sample(rng))
            self.net.send(rng, msg.sender,
                          ExchangeMessage(PULL, self.nid, *self._halve(), sample,
                                          self._halve_blocks()))

    def resolve_duplicate(self, now: float, share: BlockShare) -> None:
        """Apply one incoming block share to the local cache."""
        bid = share.id
        ledger = self.ledger
        if bid < len(ledger):
            cb = self.confirmed[bid]
            r = cb.ref
            if share.t == r.t and share.creator == r.creator:
                # Same block: absorb the in-flight mass. A confirmed block is
                # immutable and no longer shared, so this has no phase effect.
                cb.vp += share.vp
                cb.wp += share.wp
                cb.va += share.va
                cb.wa += share.wa
            return  # different block at a confirmed height: ignore
        cb = self.unconf.get(bid)
        if cb is not None:
            r = cb.ref
            t = share.t
            o = share.creator
            if t == r.t and o == r.creator:
                cb.vp += share.vp
                cb.wp += share.wp
                cb.va += share.va
                cb.wa += share.wa
                cb.deadline = self._deadline(now)
            elif t < r.t or (t == r.t and o < r.creator):
                self.fork_top += 1
                self._remove_subtree(bid)
                self._install(now, share)
            return
        if self._extends_preferred(share):
            self._install(now, share)

    def _extends_preferred(self, share: BlockShare) -> bool:
        if self.params.parent_match == "hash":
            return share.parent == self.b_pref.ref.digest
        # "creator" reading: the parent's creator must match b_pref's creator,
        # which requires the parent to be locally known.
        parent = self.unconf.get(share.id - 1) or self.confirmed.get(share.id - 1)
        if parent is None or parent.ref.digest != share.parent:
            return False
        return parent.ref.creator == self.b_pref.ref.creator

    def _install(self, now: float, share: BlockShare) -> None:
        ref = Block(share.id, share.creator, share.t, share.parent, share.digest)
        vp = share.vp
        if ref not in self.counted_vp:
            self.counted_vp.add(ref)
            vp += 1.0
        # a share can arrive already marked Confirmed (sender's tail); the
        # local copy still has to pass this node's own Agreement checks
        state = AGREEMENT if share.state == CONFIRMED else share.state
        cb = CachedBlock(ref, vp, share.wp, share.va, share.wa, state,
                         self._deadline(now))
        self.unconf[share.id] = cb
        self.b_pref = cb

    def _remove_subtree(self, bid: int) -> None:
        cb = self.unconf.pop(bid, None)
        if cb is None:
            return
        child = self.unconf.get(bid + 1)
        if child is not None and child.ref.parent == cb.ref.digest:
            self.fork_rec += 1
            self._remove_subtree(bid + 1)

    def _deadline(self, now: float) -> float:
        p = self.params
        return now + self.rng.uniform(p.watchdog_min, p.watchdog_max)

"""Quorum-sampling baselines (chain form).

Every cycle a node samples k peers from the whole membership and queries
them at its lowest undecided height. A peer answers with its preferred chain
from that height upward, so one exchange carries votes for every open
height. Votes belong to the round in which the query was sent; a round
closes when the node's next cycle begins, and responses that arrive later
are dropped.

Per height the node keeps a Snowball-style state: a quorum of alpha_pref
votes for one block bumps that block's confidence counter, preference moves
to whichever rival holds the highest confidence, and a run of rounds whose
winning tally reaches finalize_quorum while agreeing with the local
preference grows the consecutive-success streak. The streak is held (not
reset) through rounds that lack a quorum, since under message delay those
are thinning artifacts rather than disagreement. A block is accepted once
the streak reaches beta on a round whose tally also clears alpha_final,
and only after its parent; the faster variant additionally accepts after
beta_early consecutive unanimous rounds.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .model import QUERY, RESPONSE, Block, NodeId, make_block
from .ncp import sample_other_ids


@dataclass
class SnowParams:
    k: int = 20                  # peers sampled per round
    alpha_pref: int = 10         # quorum that moves confidence/preference
    alpha_final: int = 15        # floor on the tally of the accepting round
    finalize_quorum: int = 18    # tally needed to grow the success streak
    beta: int = 15               # consecutive successes to accept
    beta_early: int | None = None  # unanimous rounds for early accept, if any
    t_block: float = 10.0
    p_block: float = 0.05


def snowman_params() -> SnowParams:
    return SnowParams(k=20, alpha_pref=10, alpha_final=15, finalize_quorum=18,
                      beta=15, beta_early=None)


def avalanche_params() -> SnowParams:
    return SnowParams(k=20, alpha_pref=16, alpha_final=16, finalize_quorum=16,
                      beta=150, beta_early=50)


class SnowNode:
    """One baseline node; driven by the simulation engine.

    RNG draw order per tick: generation coin (proposers at a due boundary
    only), then the k-peer sample, then one latency draw per query sent.
    Answering a query draws one latency for the response.
    """

    __slots__ = (
        "nid", "n", "rng", "net", "params", "is_proposer",
        "ledger", "cand", "pref", "conf", "streak", "una", "votes", "ready",
        "next_gen", "tick_no", "resp_cache",
    )

    def __init__(self, nid: NodeId, n_nodes: int, rng: random.Random, net,
                 params: SnowParams, is_proposer: bool, genesis: Block | None = None):
        from .model import GENESIS
        self.nid = nid
        self.n = n_nodes
        self.rng = rng
        self.net = net
        self.params = params
        self.is_proposer = is_proposer
        self.ledger: list[Block] = [genesis or GENESIS]
        self.cand: dict[int, dict[bytes, Block]] = {}
        self.pref: dict[int, Block] = {}
        self.conf: dict[int, dict[bytes, int]] = {}
        self.streak: dict[int, int] = {}
        self.una: dict[int, int] = {}
        self.votes: dict[int, dict[bytes, int]] = {}
        self.ready: dict[int, Block] = {}
        self.next_gen = 0.0
        self.tick_no = 0
        self.resp_cache: dict[int, tuple] = {}

    # ----- cycle ticks ------------------------------------------------------

    def on_tick(self, now: float) -> None:
        self._close_round(now)
        self.tick_no += 1
        self.resp_cache.clear()
        p = self.params
        if now + 1e-12 >= self.next_gen:
            self.next_gen += p.t_block
            if self.is_proposer and self.rng.random() < p.p_block:
                tip = self._tip()
                self._learn(make_block(tip.id + 1, self.nid, now, tip.digest))
        if self.n < 2:
            return
        frontier = len(self.ledger)
        mine = self.pref.get(frontier)
        payload = (QUERY, self.nid, self.tick_no, frontier, mine)
        rng = self.rng
        for peer in sample_other_ids(rng, self.n, min(p.k, self.n - 1), self.nid):
            self.net.send(rng, peer, payload)

    def _close_round(self, now: float) -> None:
        votes = self.votes
        if not votes:
            return
        p = self.params
        for h in sorted(votes):
            if h < len(self.ledger):
                continue
            tally = votes[h]
            cand_h = self.cand[h]
            best = None
            best_count = -1
            for digest, count in tally.items():
                if count > best_count:
                    best, best_count = digest, count
                elif count == best_count:
                    b, cur = cand_h[digest], cand_h[best]
                    if (b.t, b.creator) < (cur.t, cur.creator):
                        best = digest
            if best_count >= p.alpha_pref:
                conf_h = self.conf.setdefault(h, {})
                nc = conf_h.get(best, 0) + 1
                conf_h[best] = nc
                cur = self.pref[h]
                if best != cur.digest and nc > conf_h.get(cur.digest, 0):
                    self.pref[h] = cand_h[best]
                    self.streak[h] = 0
                if self.pref[h].digest == best and best_count >= p.finalize_quorum:
                    s = self.streak.get(h, 0) + 1
                    self.streak[h] = s
                    if s >= p.beta and best_count >= p.alpha_final:
                        self._accept(h, now)
            if p.beta_early is not None and h >= len(self.ledger):
                cur = self.pref.get(h)
                if cur is not None and best == cur.digest and best_count >= p.k:
                    u = self.una.get(h, 0) + 1
                    self.una[h] = u
                    if u >= p.beta_early:
                        self._accept(h, now)
                else:
                    self.una[h] = 0
        votes.clear()

    def _tip(self) -> Block:
        chain = self.ledger[-1]
        h = len(self.ledger)
        while True:
            b = self.pref.get(h)
            if b is None or b.parent != chain.digest:
                return chain
            chain = b
            h += 1

    def _accept(self, h: int, now: float) -> None:
        ledger = self.ledger
        if h != len(ledger):
            self.ready[h] = self.pref[h]  # parent still pending; accept in order
            return
        block = self.pref[h]
        if block.parent != ledger[-1].digest:
            return  # preferred block does not extend the chain; retry later
        self._append(block, now)
        while True:
            nxt = self.ready.get(len(ledger))
            if nxt is None or nxt.parent != ledger[-1].digest:
                return
            self._append(nxt, now)

    def _append(self, block: Block, now: float) -> None:
        self.ledger.append(block)
        h = block.id
        for d in (self.cand, self.pref, self.conf, self.streak, self.una,
                  self.votes, self.ready):
            d.pop(h, None)
        self.net.record_confirm(block, self.nid, now, self.tick_no)

    def _learn(self, b: Block) -> None:
        h = b.id
        if h < len(self.ledger):
            return
        cand_h = self.cand.get(h)
        if cand_h is None:
            self.cand[h] = {b.digest: b}
            self.pref[h] = b
            return
        if b.digest in cand_h:
            return
        cand_h[b.digest] = b
        cur = self.pref[h]
        conf_h = self.conf.get(h)
        if not conf_h or conf_h.get(cur.digest, 0) == 0:
            # no confidence committed yet: earliest creation, then lowest
            # creator id, takes preference
            if (b.t, b.creator) < (cur.t, cur.creator):
                self.pref[h] = b

    # ----- message handling ---------------------------------------------------

    def on_message(self, now: float, payload: tuple) -> None:
        if payload[0] == QUERY:
            _, sender, rnd, frontier, their_pref = payload
            if their_pref is not None:
                self._learn(their_pref)
            self.net.send(self.rng, sender,
                          (RESPONSE, self.nid, rnd, frontier, self._chain_from(frontier)))
            return
        _, sender, rnd, frontier, blocks = payload
        if rnd != self.tick_no:
            return  # straggler from a closed round
        ledger_len = len(self.ledger)
        votes = self.votes
        for b in blocks:
            self._learn(b)
            h = b.id
            if h >= ledger_len:
                vh = votes.get(h)
                if vh is None:
                    votes[h] = {b.digest: 1}
                else:
                    vh[b.digest] = vh.get(b.digest, 0) + 1

    def _chain_from(self, frontier: int) -> tuple:
        cached = self.resp_cache.get(frontier)
        if cached is not None:
            return cached
        ledger = self.ledger
        chain = list(ledger[frontier:])
        prev = ledger[-1]
        h = len(ledger)
        while True:
            b = self.pref.get(h)
            if b is None or b.parent != prev.digest:
                break
            if h >= frontier:
                chain.append(b)
            prev = b
            h += 1
        out = tuple(chain)
        self.resp_cache[frontier] = out
        return out

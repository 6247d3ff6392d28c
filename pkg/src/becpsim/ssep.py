"""System-size estimation by push-sum gossip.

Every node carries a (v, w) pair. Exactly one node in the network seeds the
weight (v=1, w=1); everyone else starts at (v=1, w=0). Halving on send plus
additive merging on receipt conserves both sums exactly, and each node's v/w
ratio converges to the network size.
"""

from __future__ import annotations

from .model import EstimatorPair

#: Weights below this are treated as no information; a ratio of two floats
#: this small is noise, not an estimate.
W_MIN = 1e-9


def ssep_init(is_seed: bool) -> EstimatorPair:
    """Initial pair: the single seed contributes all the weight."""
    return EstimatorPair(1.0, 1.0 if is_seed else 0.0)


def halve_for_send(pair: EstimatorPair) -> tuple[EstimatorPair, EstimatorPair]:
    """Split a pair into the half kept and the half sent; their sum is `pair`."""
    v = pair.v * 0.5
    w = pair.w * 0.5
    half = EstimatorPair(v, w)
    return half, half


def merge(pair: EstimatorPair, incoming: EstimatorPair) -> EstimatorPair:
    """Additive merge of an incoming share into a local pair."""
    return EstimatorPair(pair.v + incoming.v, pair.w + incoming.w)


def system_size(pair: EstimatorPair) -> float | None:
    """Current size estimate, or None while the local weight is negligible."""
    if pair.w > W_MIN:
        return pair.v / pair.w
    return None

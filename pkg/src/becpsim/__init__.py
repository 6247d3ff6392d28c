"""Deterministic simulator for epidemic and quorum-sampling block consensus."""

from .consensus import BecpNode, BecpParams
from .engine import (
    LatencyModel,
    RunConfig,
    RunResult,
    pareto_mean,
    run,
    run_trials,
)
from .metrics import (
    CSV_COLUMNS,
    ReportRow,
    aggregate_row,
    common_confirmed,
    confirmation_latencies,
    correctness_label,
    fork_calls_per_block_per_node,
    ledgers_consistent,
    read_rows,
    report_row,
    run_passes,
    throughput_bps,
    validate_ledger,
    write_rows,
)
from .model import Block, BlockShare, ExchangeMessage, GENESIS, block_digest, make_block
from .ncp import PeerCache, sample_other_ids
from .snow import SnowNode, SnowParams, avalanche_params, snowman_params
from .ssep import W_MIN, system_size

__version__ = "0.1.0"

__all__ = [
    "BecpNode", "BecpParams", "LatencyModel", "RunConfig", "RunResult",
    "pareto_mean", "run", "run_trials",
    "CSV_COLUMNS", "ReportRow", "aggregate_row", "common_confirmed",
    "confirmation_latencies", "correctness_label",
    "fork_calls_per_block_per_node", "ledgers_consistent", "read_rows",
    "report_row", "run_passes", "throughput_bps", "validate_ledger",
    "write_rows",
    "Block", "BlockShare", "ExchangeMessage", "GENESIS", "block_digest",
    "make_block",
    "PeerCache", "sample_other_ids",
    "SnowNode", "SnowParams", "avalanche_params", "snowman_params",
    "W_MIN", "system_size",
]

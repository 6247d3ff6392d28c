"""Measurements over finished runs, ledger validation, and CSV reporting.

The network-wide confirmed chain is the longest common prefix of all node
ledgers, genesis excluded. Throughput counts those blocks per second of
simulated time. Latency is measured per network-confirmed block from its
creation time to the moment the LAST node confirmed it; a per-node mean is
exposed separately. Fork-resolution load is the number of top-level
resolution calls across all nodes, normalized by confirmed blocks and by
node count.

Ledger validation is independent of the protocol code paths: every digest
is recomputed from the block fields and the parent linkage is re-checked
hop by hop.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, fields

from .engine import RunResult
from .model import GENESIS, Block, block_digest


def common_confirmed(ledgers: list[list[Block]]) -> list[Block]:
    """Blocks confirmed by every node, genesis excluded."""
    first = ledgers[0]
    depth = min(len(lg) for lg in ledgers)
    for pos in range(depth):
        b = first[pos]
        for lg in ledgers:
            if lg[pos] is not b and lg[pos] != b:
                return first[1:pos]
    return first[1:depth]


def throughput_bps(result: RunResult) -> float:
    return len(common_confirmed(result.ledgers)) / result.config.duration


def confirmation_latencies(result: RunResult) -> tuple[float | None, float | None]:
    """(mean last-node latency, mean per-node latency) over network-confirmed
    blocks; (None, None) when nothing confirmed network-wide."""
    blocks = common_confirmed(result.ledgers)
    if not blocks:
        return None, None
    n = result.config.n_nodes
    last, per_node = [], []
    for b in blocks:
        count, total, peak = result.confirm_stats[b]
        if count != n:
            raise AssertionError(f"block {b.id} confirmed on {count}/{n} nodes "
                                 "yet present in every ledger")
        last.append(peak - b.t)
        per_node.append(total / count - b.t)
    return statistics.fmean(last), statistics.fmean(per_node)


def fork_calls_per_block_per_node(result: RunResult) -> float | None:
    blocks = common_confirmed(result.ledgers)
    if not blocks:
        return None
    return result.fork_top / (len(blocks) * result.config.n_nodes)


def validate_ledger(ledger: list[Block]) -> bool:
    """Recompute every digest and re-check the hash chain from genesis."""
    if not ledger or ledger[0] != GENESIS:
        return False
    prev_digest = ledger[0].digest
    for i, b in enumerate(ledger):
        if b.id != i:
            return False
        if block_digest(b.id, b.creator, b.t, b.parent) != b.digest:
            return False
        if i > 0 and b.parent != prev_digest:
            return False
        prev_digest = b.digest
    return True


def ledgers_consistent(ledgers: list[list[Block]]) -> bool:
    """Every ledger must be a prefix of the longest one (ties must agree)."""
    longest = max(ledgers, key=len)
    for lg in ledgers:
        for pos, b in enumerate(lg):
            if longest[pos] != b:
                return False
    return True


def run_passes(result: RunResult) -> bool:
    ledgers = result.ledgers
    return all(validate_ledger(lg) for lg in ledgers) and ledgers_consistent(ledgers)


def correctness_label(results: list[RunResult]) -> str:
    """Summary over repeated trials: failed trial count and the smallest
    network-confirmed block count, as Failed(f)/b."""
    failed = sum(0 if run_passes(r) else 1 for r in results)
    blocks = min(len(common_confirmed(r.ledgers)) for r in results)
    return f"Failed({failed})/{blocks}"


def corrupt_one_block(result: RunResult) -> None:
    """Flip one parent digest on one node's ledger, in place. For exercising
    the validation path; the mutated run must fail validation."""
    victim = result.ledgers[len(result.ledgers) // 2]
    if len(victim) < 2:
        raise ValueError("no non-genesis block to corrupt")
    pos = 1
    b = victim[pos]
    victim[pos] = Block(b.id, b.creator, b.t, b"\xff" * 32, b.digest)


# ----- tabular reporting -------------------------------------------------------

CSV_COLUMNS = (
    "protocol", "n_nodes", "seed", "duration_s", "cycle_s", "p_block",
    "latency_model", "alpha", "blocks_confirmed", "throughput_bps",
    "avg_latency_s", "messages_sent", "fork_calls_per_block_per_node", "pass",
)


@dataclass
class ReportRow:
    protocol: str
    n_nodes: int
    seed: str            # trial seed, or "aggregate"
    duration_s: float
    cycle_s: float
    p_block: float
    latency_model: str
    alpha: float | None
    blocks_confirmed: int
    throughput_bps: float
    avg_latency_s: float | None
    messages_sent: int
    fork_calls_per_block_per_node: float | None
    pass_ok: bool


def report_row(result: RunResult) -> ReportRow:
    cfg = result.config
    lat, _ = confirmation_latencies(result)
    return ReportRow(
        protocol=cfg.protocol,
        n_nodes=cfg.n_nodes,
        seed=str(cfg.seed),
        duration_s=cfg.duration,
        cycle_s=cfg.cycle,
        p_block=cfg.p_block,
        latency_model=cfg.latency.kind,
        alpha=cfg.latency.alpha if cfg.latency.kind == "pareto" else None,
        blocks_confirmed=len(common_confirmed(result.ledgers)),
        throughput_bps=throughput_bps(result),
        avg_latency_s=lat,
        messages_sent=result.messages_total,
        fork_calls_per_block_per_node=fork_calls_per_block_per_node(result),
        pass_ok=run_passes(result),
    )


def aggregate_row(rows: list[ReportRow]) -> ReportRow:
    """Mean of each numeric column over trial rows; pass is their conjunction."""
    first = rows[0]

    def mean_of(attr):
        vals = [getattr(r, attr) for r in rows]
        vals = [v for v in vals if v is not None]
        return statistics.fmean(vals) if vals else None

    return ReportRow(
        protocol=first.protocol,
        n_nodes=first.n_nodes,
        seed="aggregate",
        duration_s=first.duration_s,
        cycle_s=first.cycle_s,
        p_block=first.p_block,
        latency_model=first.latency_model,
        alpha=first.alpha,
        blocks_confirmed=round(mean_of("blocks_confirmed"), 10),
        throughput_bps=mean_of("throughput_bps"),
        avg_latency_s=mean_of("avg_latency_s"),
        messages_sent=round(mean_of("messages_sent"), 10),
        fork_calls_per_block_per_node=mean_of("fork_calls_per_block_per_node"),
        pass_ok=all(r.pass_ok for r in rows),
    )


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)  # full precision round-trips exactly
    return str(value)


def write_rows(path: str, rows: list[ReportRow]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(CSV_COLUMNS)
        for r in rows:
            out.writerow([_cell(getattr(r, f.name)) for f in fields(ReportRow)])


def read_rows(path: str) -> list[ReportRow]:
    def opt_float(s):
        return None if s == "" else float(s)

    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header: {header}")
        for rec in reader:
            (protocol, n_nodes, seed, duration_s, cycle_s, p_block, latency_model,
             alpha, blocks, tput, lat, msgs, forks, ok) = rec
            rows.append(ReportRow(
                protocol=protocol,
                n_nodes=int(n_nodes),
                seed=seed,
                duration_s=float(duration_s),
                cycle_s=float(cycle_s),
                p_block=float(p_block),
                latency_model=latency_model,
                alpha=opt_float(alpha),
                blocks_confirmed=float(blocks) if "." in blocks else int(blocks),
                throughput_bps=float(tput),
                avg_latency_s=opt_float(lat),
                messages_sent=float(msgs) if "." in msgs else int(msgs),
                fork_calls_per_block_per_node=opt_float(forks),
                pass_ok=(ok == "true"),
            ))
    return rows

"""Command-line front end.

Subcommands:
  run     simulate one configuration over several trials, write results.csv
  sweep   repeat run over a list of values for one parameter, write sweep.csv
  verify  run trials and check ledger validity and cross-node consistency

Exit codes: 0 success, 1 correctness failure, 2 bad usage. Output directory
comes from --out, else $BECPSIM_OUT, else the working directory. A config
file (--config) holds flat key=value lines; explicit flags win over it.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .engine import PROTOCOLS, LatencyModel, RunConfig, run_trials
from .metrics import (
    ReportRow,
    aggregate_row,
    correctness_label,
    corrupt_one_block,
    report_row,
    run_passes,
    write_rows,
)

# value parsers for config-file keys; identical names to the CLI flags
_CONFIG_KEYS = {
    "protocol": str,
    "nodes": int,
    "duration": float,
    "cycle": float,
    "seed": int,
    "trials": int,
    "latency": str,
    "alpha": float,
    "p_block": float,
    "out": str,
}

_DEFAULTS = {
    "protocol": "becp",
    "nodes": 1000,
    "duration": 300.0,
    "cycle": 0.351,
    "seed": 1,
    "trials": 5,
    "latency": "uniform",
    "alpha": 5.0,
    "p_block": 0.05,
    "out": None,
}

PARETO_ALPHA_SAFE = (4.0, 8.0)


def parse_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _CONFIG_KEYS[key](val.strip())
    return values


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--protocol", choices=PROTOCOLS)
    p.add_argument("--nodes", type=int)
    p.add_argument("--duration", type=float, help="simulated seconds")
    p.add_argument("--cycle", type=float, help="gossip cycle length, seconds")
    p.add_argument("--seed", type=int, help="first trial seed")
    p.add_argument("--trials", type=int)
    p.add_argument("--latency", choices=("uniform", "pareto"))
    p.add_argument("--alpha", type=float, help="pareto shape (pareto latency only)")
    p.add_argument("--p-block", dest="p_block", type=float,
                   help="per-proposer block probability per boundary")
    p.add_argument("--out", help="output directory (else $BECPSIM_OUT, else .)")
    p.add_argument("--unsafe", action="store_true",
                   help="allow pareto alpha outside the stable range "
                        f"[{PARETO_ALPHA_SAFE[0]:g}, {PARETO_ALPHA_SAFE[1]:g}]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="becpsim",
        description="discrete-event simulator for epidemic and quorum-sampling "
                    "block consensus")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one configuration")
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="vary one parameter over a value list")
    _add_common(p_sweep)
    p_sweep.add_argument("--param", required=True,
                         choices=("p_block", "nodes", "alpha"))
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values for --param")

    p_verify = sub.add_parser("verify", help="check ledger validity and consistency")
    _add_common(p_verify)
    p_verify.add_argument("--inject-fault", action="store_true",
                          help="corrupt one ledger entry after the run; the "
                               "check must then fail")
    return parser


def resolve_settings(parser: argparse.ArgumentParser, ns: argparse.Namespace) -> dict:
    settings = dict(_DEFAULTS)
    if ns.config:
        try:
            settings.update(parse_config_file(ns.config))
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
    for key in _DEFAULTS:
        flag_value = getattr(ns, key, None)
        if flag_value is not None:
            settings[key] = flag_value

    if settings["protocol"] not in PROTOCOLS:
        parser.error(f"unknown protocol {settings['protocol']!r}")
    if settings["latency"] not in ("uniform", "pareto"):
        parser.error(f"unknown latency model {settings['latency']!r}")
    if settings["nodes"] < 2:
        parser.error("--nodes must be at least 2")
    if settings["trials"] < 1:
        parser.error("--trials must be at least 1")
    if settings["duration"] <= 0 or settings["cycle"] <= 0:
        parser.error("--duration and --cycle must be positive")
    if not 0.0 <= settings["p_block"] <= 1.0:
        parser.error("--p-block must lie in [0, 1]")
    if settings["latency"] == "pareto":
        lo, hi = PARETO_ALPHA_SAFE
        if not lo <= settings["alpha"] <= hi and not ns.unsafe:
            parser.error(
                f"pareto alpha {settings['alpha']:g} is outside [{lo:g}, {hi:g}]; "
                "heavy tails destabilize delivery times (pass --unsafe to force)")
    return settings


def make_config(settings: dict) -> RunConfig:
    if settings["latency"] == "pareto":
        latency = LatencyModel(kind="pareto", alpha=settings["alpha"])
    else:
        latency = LatencyModel()
    return RunConfig(
        protocol=settings["protocol"],
        n_nodes=settings["nodes"],
        duration=settings["duration"],
        cycle=settings["cycle"],
        seed=settings["seed"],
        latency=latency,
        p_block=settings["p_block"],
    )


def out_dir(settings: dict) -> str:
    path = settings["out"] or os.environ.get("BECPSIM_OUT") or "."
    os.makedirs(path, exist_ok=True)
    return path


def _print_rows(rows: list[ReportRow]) -> None:
    for r in rows:
        lat = "-" if r.avg_latency_s is None else f"{r.avg_latency_s:.4f}"
        forks = ("-" if r.fork_calls_per_block_per_node is None
                 else f"{r.fork_calls_per_block_per_node:.4f}")
        print(f"  seed={r.seed:>9}  blocks={r.blocks_confirmed:<6g} "
              f"throughput={r.throughput_bps:.6f}/s  latency={lat}s  "
              f"messages={r.messages_sent:<10g} forks/blk/node={forks}  "
              f"pass={'yes' if r.pass_ok else 'NO'}")


def cmd_run(parser, ns) -> int:
    settings = resolve_settings(parser, ns)
    config = make_config(settings)
    results = run_trials(config, settings["trials"])
    rows = [report_row(r) for r in results]
    rows.append(aggregate_row(rows))
    path = os.path.join(out_dir(settings), "results.csv")
    write_rows(path, rows)
    print(f"{settings['protocol']} n={settings['nodes']} "
          f"duration={settings['duration']:g}s trials={settings['trials']}")
    _print_rows(rows)
    print(f"wrote {path}")
    return 0 if all(run_passes(r) for r in results) else 1


def cmd_sweep(parser, ns) -> int:
    settings = resolve_settings(parser, ns)
    param = ns.param
    caster = int if param == "nodes" else float
    try:
        values = [caster(v) for v in ns.values.split(",") if v.strip()]
    except ValueError:
        parser.error(f"--values must be comma-separated {caster.__name__}s")
    if not values:
        parser.error("--values is empty")
    if param == "alpha" and settings["latency"] != "pareto":
        parser.error("--param alpha requires --latency pareto")

    all_rows: list[ReportRow] = []
    ok = True
    for value in values:
        point = dict(settings, **{param: value})
        if param == "alpha":
            lo, hi = PARETO_ALPHA_SAFE
            if not lo <= value <= hi and not ns.unsafe:
                parser.error(f"pareto alpha {value:g} is outside [{lo:g}, {hi:g}] "
                             "(pass --unsafe to force)")
        config = make_config(point)
        results = run_trials(config, point["trials"])
        rows = [report_row(r) for r in results]
        agg = aggregate_row(rows)
        all_rows.extend(rows)
        all_rows.append(agg)
        ok = ok and all(run_passes(r) for r in results)
        print(f"{param}={value:g}:")
        _print_rows([agg])
    path = os.path.join(out_dir(settings), "sweep.csv")
    write_rows(path, all_rows)
    print(f"wrote {path}")
    return 0 if ok else 1


def cmd_verify(parser, ns) -> int:
    settings = resolve_settings(parser, ns)
    config = make_config(settings)
    results = run_trials(config, settings["trials"])
    if ns.inject_fault:
        corrupt_one_block(results[0])
    label = correctness_label(results)
    for i, r in enumerate(results):
        print(f"  trial seed={config.seed + i}: "
              f"{'pass' if run_passes(r) else 'FAIL'}")
    print(f"correctness: {label}")
    return 0 if all(run_passes(r) for r in results) else 1


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command == "run":
        return cmd_run(parser, ns)
    if ns.command == "sweep":
        return cmd_sweep(parser, ns)
    return cmd_verify(parser, ns)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

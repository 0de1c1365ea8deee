"""Command-line front end: generate, validate, run, report."""

from __future__ import annotations

import argparse
import sys

from .engine import Engine, EngineConfig
from .fixedpoint import ADDR_MASK
from . import netio


def _parse_monitor(spec: str) -> tuple[tuple[int, int], ...]:
    """Comma-separated lo:hi hex address ranges, e.g. '0000000:0100000'."""
    ranges = []
    for part in spec.split(","):
        lo_s, hi_s = part.split(":")
        ranges.append((int(lo_s, 16), int(hi_s, 16)))
    return tuple(ranges)


def _cmd_gen_auditory(args) -> int:
    netio.gen_auditory(
        channels=args.channels,
        hypercolumns=args.hypercolumns,
        seed=args.seed,
        net_path=args.out,
        stim_path=args.stim,
        sweep_ms=args.sweep_ms,
        repeats=args.repeats,
        rate_hz=args.rate_hz,
    )
    return 0


def _cmd_validate(args) -> int:
    netio.parse_network(args.net)
    return 0


def _cmd_run(args) -> int:
    table = netio.parse_network(args.net)
    stimulus = netio.parse_stimulus(args.stim) if args.stim else None
    monitor = _parse_monitor(args.monitor) if args.monitor else ((0, ADDR_MASK + 1),)
    config = EngineConfig(
        tm_minicolumns=args.tm_minicolumns,
        axon_burst=args.burst,
        gate_f=args.f_gate,
        master_seed=args.seed,
        monitor=monitor,
        workers=args.workers,
    )
    engine = Engine(table, config)
    spike_sink = netio.SpikeFileSink(args.spikes) if args.spikes else None
    event_sink = netio.EventFileSink(args.events) if args.events else None
    stats_sink = netio.StatsFileSink(args.stats) if args.stats else None
    try:
        summary = engine.run(
            args.steps,
            stimulus=stimulus,
            spike_sink=spike_sink,
            event_sink=event_sink,
            stats_sink=stats_sink,
        )
    finally:
        for sink in (spike_sink, event_sink, stats_sink):
            if sink is not None:
                sink.close()
        engine.close()
    print(
        f"steps: {summary.steps}  active-updates: {summary.neuron_updates}  "
        f"events tx/rx: {summary.events_tx}/{summary.events_rx}  "
        f"spikes: {summary.spikes_total}"
    )
    print(f"neuron updates/s: {summary.updates_per_second:.3g}")
    return 0


def _cmd_report(args) -> int:
    written = netio.emit_figures(
        events_path=args.events,
        stats_path=args.stats,
        channels=args.channels,
        out_prefix=args.out_prefix,
        steps=args.steps,
    )
    for path in written:
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cortexsim")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-auditory", help="generate the swept-tone multi-channel network")
    g.add_argument("--channels", type=int, required=True)
    g.add_argument("--hypercolumns", type=int, required=True)
    g.add_argument("--out", required=True, help="network file to write")
    g.add_argument("--stim", required=True, help="stimulus file to write")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--sweep-ms", type=int, default=10)
    g.add_argument("--repeats", type=int, default=10)
    g.add_argument("--rate-hz", type=float, default=1000.0,
                   help="per-source rate inside its sweep window")
    g.set_defaults(func=_cmd_gen_auditory)

    v = sub.add_parser("validate", help="parse and validate a network file")
    v.add_argument("--net", required=True)
    v.set_defaults(func=_cmd_validate)

    r = sub.add_parser("run", help="simulate a network")
    r.add_argument("--net", required=True)
    r.add_argument("--stim")
    r.add_argument("--steps", type=int, required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--tm-minicolumns", type=int, default=176 * 1024)
    r.add_argument("--f-gate", type=int, default=0)
    r.add_argument("--monitor", help="hex address ranges lo:hi[,lo:hi...]")
    r.add_argument("--spikes", help="spike record file")
    r.add_argument("--events", help="event-count record file")
    r.add_argument("--stats", help="stats record file")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--burst", type=int, default=64)
    r.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="emit figure CSVs from run records")
    p.add_argument("--events")
    p.add_argument("--stats")
    p.add_argument("--channels", type=int, required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--steps", type=int)
    p.set_defaults(func=_cmd_report)
    return parser


def cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (netio.NetworkFormatError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(cli())

if __name__ == "__main__":
    main()

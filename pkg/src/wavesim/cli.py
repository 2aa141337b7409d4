"""Command-line entry points: single runs and window sweeps."""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (
    RunConfig,
    SWEEP_WINDOWS,
    VerificationError,
    emit_report,
    run,
    sweep,
)
from .kernels import KERNELS
from .memory import DeadlockError

PAPER_SCALE = {"n": 500, "dim": 10, "repeat": 10, "length": 500}


def _parse_window(text: str) -> int | None:
    if text.lower() in ("inf", "infinite", "none"):
        return None
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("window must be >= 1 or 'inf'")
    return value


def _add_kernel_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kernel", required=True, choices=KERNELS)
    parser.add_argument("--n", type=int, default=None, help="matrix count")
    parser.add_argument("--dim", type=int, default=None, help="matrix dimension")
    parser.add_argument("--repeat", type=int, default=None, help="*-MIN repeat count")
    parser.add_argument("--length", type=int, default=None, help="vector length")
    parser.add_argument(
        "--paper-scale", action="store_true",
        help="use the full-size experiment parameters (500/10/500)",
    )
    parser.add_argument(
        "--config", default=None,
        help="JSON file with RunConfig field defaults (CLI flags override it)",
    )


def _build_config(args: argparse.Namespace, **extra) -> RunConfig:
    fields: dict = {}
    if args.config:
        with open(args.config) as fh:
            fields.update(json.load(fh))
    if args.paper_scale:
        fields.update(PAPER_SCALE)
    for name in ("n", "dim", "repeat", "length"):
        value = getattr(args, name)
        if value is not None:
            fields[name] = value
    fields["kernel"] = args.kernel
    fields.update(extra)
    return RunConfig(**fields)


def _cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(
        args,
        mode=args.mode,
        window=args.window if args.mode == "twc" else None,
        verify=args.verify,
        dump_memory=args.dump_memory,
        event_log=args.event_log,
    )
    outcome = run(config)
    m = outcome.metrics
    window = "-" if config.mode != "twc" else (
        "inf" if config.window is None else config.window
    )
    print(
        f"kernel={config.kernel} mode={config.mode} window={window} "
        f"cycles={outcome.result.cycles} raw={m.raw} war={m.war} waw={m.waw} "
        f"commits={m.commits} aborts={m.aborts} requests={m.requests_executed}"
    )
    if config.verify:
        print("verify: final memory matches the sequential oracle")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _build_config(args, mode="twc", window=args.windows[0])
    rows = sweep(config, windows=args.windows)
    paths = emit_report(rows, args.out, name=args.kernel.lower())
    for row in rows:
        print(",".join(str(row[k]) for k in row))
    for path in paths:
        print(f"wrote {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="wavesim",
        description="Cycle-based simulator of a tagged-token dataflow "
        "processor with wave-ordered, decoupled and speculative memory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one kernel configuration")
    _add_kernel_args(p_run)
    p_run.add_argument(
        "--mode", required=True, choices=("strict", "decoupled", "twc")
    )
    p_run.add_argument(
        "--window", type=_parse_window, default=None,
        help="speculation window (integer or 'inf'); twc mode only",
    )
    p_run.add_argument(
        "--verify", action="store_true",
        help="compare final memory against the sequential oracle",
    )
    p_run.add_argument("--dump-memory", default=None, metavar="PATH")
    p_run.add_argument("--event-log", default=None, metavar="PATH")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser(
        "sweep", help="run strict/decoupled baselines plus a window sweep"
    )
    _add_kernel_args(p_sweep)
    p_sweep.add_argument(
        "--windows", default=None,
        type=lambda s: [_parse_window(w) for w in s.split(",")],
        help="comma-separated window sizes, e.g. 2,3,5,10,20,30,inf",
    )
    p_sweep.add_argument("--out", default="report", help="output directory")
    p_sweep.set_defaults(func=_cmd_sweep)

    args = parser.parse_args(argv)
    if getattr(args, "windows", "x") is None:
        args.windows = list(SWEEP_WINDOWS)
    try:
        return args.func(args)
    except VerificationError as err:
        print(f"verification failed: {err}", file=sys.stderr)
        return 1
    except DeadlockError as err:
        print(f"deadlock: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

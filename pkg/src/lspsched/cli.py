"""Command-line entry point: ``lspsched run | bench | flips``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields

from .harness import (ConfigError, RunConfig, bench, execute, trace_flip_rate, write_csv,
                      write_summary, write_trace)

# Flag-only options that are not RunConfig fields.
_META = {"config", "command", "window", "trace_file", "print_config"}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat 'key = value' file; flags override it")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        help_default = RunConfig().__getattribute__(f.name)
        p.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper(),
                       help=f"(default: {help_default!r})")


def _resolve(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            cfg.set(f.name, value)
    return cfg.validate()


def _cmd_run(args) -> int:
    cfg = _resolve(args)
    trace, summary, setup = execute(cfg)
    out = cfg.output_dir()
    stem = f"{trace.kind}-s{summary.seed}"
    tpath = write_trace(trace, cfg.trace or out / f"trace-{stem}.jsonl")
    spath = write_summary(summary, cfg.summary or out / f"summary-{stem}.json")
    if args.print_config:
        print(cfg.dumps(), end="", file=sys.stderr)
    print(setup.tokenizer.detokenize(trace.generated))
    print(f"[{trace.kind}] steps={summary.total_steps} calls={summary.denoiser_calls} "
          f"cost={summary.total_cost:g} gather_events={summary.gather_events} "
          f"trace={tpath} summary={spath}", file=sys.stderr)
    return 0


def _cmd_bench(args) -> int:
    cfg = _resolve(args)
    rows = bench(cfg)
    path = write_csv(rows, cfg.csv or cfg.output_dir() / "bench.csv")
    for r in rows:
        if r["seed"] == "mean±std":
            print(f"{r['scheduler']:>20}  steps={r['steps']}  flip_rate={r['flip_rate']}  "
                  f"speedup_vs_full={r['speedup_vs_full']}")
    print(f"wrote {path}", file=sys.stderr)
    return 0


def _cmd_flips(args) -> int:
    lo, hi = (float(x) for x in args.window.split(","))
    gen_len = int(args.gen_len) if args.gen_len else None
    rate = trace_flip_rate(args.trace_file, gen_len, (lo, hi))
    print(f"{rate:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lspsched", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="decode once and write a JSONL trace plus summary")
    _add_config_flags(p_run)
    p_run.add_argument("--print-config", action="store_true",
                       help="echo the resolved configuration to stderr")
    p_run.set_defaults(func=_cmd_run)

    p_bench = sub.add_parser("bench", help="schedulers x seeds sweep to CSV")
    _add_config_flags(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    p_flips = sub.add_parser("flips", help="mid-window flip rate of an existing trace")
    p_flips.add_argument("trace_file")
    p_flips.add_argument("--window", default="0.25,0.75", help="completion fractions lo,hi")
    p_flips.add_argument("--gen-len", default=None,
                         help="generation length (default: n_active of the first step)")
    p_flips.set_defaults(func=_cmd_flips)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

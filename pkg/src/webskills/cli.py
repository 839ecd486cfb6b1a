"""Command-line entry point: ``webskills {run,explore,continual,metrics,replay}``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import harness
from .metrics import DEFAULT_GAMMA

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="output (or artifacts) directory")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="webskills", description="Polymorphic web-skill learning on simulated sites.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "learn from a fixed task curriculum"),
        ("explore", "learn by proposing tasks on a site pool"),
    ):
        _common(sub.add_parser(name, help=help_text))
    c = sub.add_parser("continual", help="learn across sites in phases and report forgetting")
    _common(c)
    c.add_argument("--repeats", type=int, help="repeat the whole plan and average the forgetting table")
    m = sub.add_parser("metrics", help="recompute metrics from stored logs")
    _common(m)
    m.add_argument("--logs", nargs="+", required=True, help="trajectory JSONL files")
    m.add_argument("--library", help="library directory")
    m.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    m.add_argument("--select", help="only trajectories whose id starts with this prefix")
    r = sub.add_parser("replay", help="re-execute logged trajectories and compare digests")
    _common(r)
    r.add_argument("trajectory", nargs="*", help="trajectory id(s)")
    r.add_argument("--all", action="store_true", help="replay every logged trajectory")
    r.add_argument("--artifacts", help="run directory (defaults to --out)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("run", "explore", "continual"):
            mode = {"run": "task-defined", "explore": "task-free", "continual": "continual"}[args.command]
            overrides = {"seed": args.seed, "output": args.out, "repeats": getattr(args, "repeats", None)}
            cfg = harness.load_config(args.config, overrides)
            cfg.mode = mode
            return {"run": harness.cmd_run, "explore": harness.cmd_explore, "continual": harness.cmd_continual}[args.command](cfg)
        if args.command == "metrics":
            return harness.cmd_metrics(args.logs, args.library, args.gamma, args.out, args.select)
        artifacts = args.artifacts or args.out
        if not artifacts:
            raise harness.ConfigError("replay needs --artifacts or --out")
        code, verdicts = harness.cmd_replay(args.trajectory, artifacts, args.all)
        for v in verdicts:
            print(v)
        return code
    except harness.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except harness.ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if args.command == "replay" else EXIT_RUNTIME
    except (harness.RUNTIME_ERRORS + (OSError,)) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

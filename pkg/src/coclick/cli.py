"""Command line entry point: ``coclick run ...``."""

from __future__ import annotations

import argparse
import logging
import sys

from .pipeline import ConfigError, PipelineConfig, PipelineError, read_config_file, run_pipeline


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coclick", description="Fuzzy co-clustering of clickstream data")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the full pipeline and write reports",
                         argument_default=argparse.SUPPRESS)
    run.add_argument("--config", help="key = value file; flags given here override it")
    run.add_argument("--input", help="sequence file or Common Log Format file (.gz ok)")
    run.add_argument("--format", choices=["sequence", "clf"])
    run.add_argument("--catalog", help="index,label CSV (default: bundled MSNBC categories)")
    run.add_argument("--url-map", help="path,label CSV mapping URL paths to categories (clf only)")
    mode = run.add_mutually_exclusive_group()
    mode.add_argument("--min-distinct", type=int, help="keep users with >= N distinct pages (default 9)")
    mode.add_argument("--min-total", type=int, help="keep users with >= N total hits")
    run.add_argument("--ku", type=int, help="number of user clusters (default 10)")
    run.add_argument("--kp", type=int, help="number of page clusters (default 3)")
    run.add_argument("--restarts", type=int, help="K-Means restarts per axis (default 10)")
    run.add_argument("--seed", type=int, help="base RNG seed (default 0)")
    run.add_argument("--max-iter", type=int)
    run.add_argument("--tol", type=float)
    run.add_argument("--out", help="output directory")
    run.add_argument("--cache-dir", help="similarity cache (default: <out>/cache)")
    run.add_argument("--status-class", help="count only CLF hits with this status class, e.g. 2xx")
    run.add_argument("--window-start", help="ISO timestamp, inclusive (clf only)")
    run.add_argument("--window-end", help="ISO timestamp, exclusive (clf only)")
    run.add_argument("--dump-similarity", action="store_true")
    run.add_argument("--dump-subsets", action="store_true")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    args.pop("command")
    logging.basicConfig(level=logging.INFO if args.pop("verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        values = read_config_file(args.pop("config")) if "config" in args else {}
        if "min_distinct" in args or "min_total" in args:
            values.pop("min-distinct", None)
            values.pop("min-total", None)
        values.update(args)
        config = PipelineConfig.from_mapping(values)
        manifest = run_pipeline(config)
    except ConfigError as exc:
        for message in exc.errors:
            print(f"coclick: config error: {message}", file=sys.stderr)
        return exc.exit_code
    except PipelineError as exc:
        print(f"coclick: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"coclick: config error: {exc}", file=sys.stderr)
        return 2
    stats = manifest.stats
    print(f"{stats['filtered_users']} of {stats['raw_users']} users kept; "
          f"{config.ku}x{config.kp} grid written to {config.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

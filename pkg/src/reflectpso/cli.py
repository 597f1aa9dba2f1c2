"""Command line entry point: ``reflectpso run|pattern|sweep``.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError, DomainError
from .experiment import evaluate_profile, read_profile_csv, run_experiment, sweep
from .farfield import write_pattern_csv

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _seed_list(text: str) -> list[int]:
    """``"1,2,5"`` or ``"1-10"`` or a mix of both."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (overrides output_dir)")
    common.add_argument("--seed", type=int, help="RNG seed (overrides pso.seed)")
    common.add_argument("--quiet", action="store_true", help="only print errors")
    common.add_argument("--emit-heatmap", action="store_true",
                        help="also write theta/phi dB heatmaps as PNG")
    common.add_argument("--workers", type=int, default=1,
                        help="threads for particle evaluation (results do not depend on it)")

    parser = argparse.ArgumentParser(
        prog="reflectpso",
        description="Integer PSO sidelobe suppression for multi-beam reflectarrays.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="optimize one configuration")
    p.add_argument("config", help="TOML configuration file")

    p = sub.add_parser("pattern", parents=[common], help="re-evaluate a saved profile")
    p.add_argument("profile", help="profile CSV (M rows of N integer levels)")
    p.add_argument("config", help="TOML configuration file")

    p = sub.add_parser("sweep", parents=[common], help="repeat run over several seeds")
    p.add_argument("config", help="TOML configuration file")
    p.add_argument("--seeds", type=_seed_list, default=list(range(1, 11)),
                   help="comma list and/or ranges, e.g. 1-10 (default 1-10)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = config.with_seed(args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "run":
            summary = run_experiment(config, args.out, args.workers, args.emit_heatmap)
            report = {k: summary[k] for k in
                      ("pre_suppression_db", "post_suppression_db", "improvement_db",
                       "wall_time_s", "evaluations", "seed")}
        elif args.command == "pattern":
            profile = read_profile_csv(args.profile, config.geometry.resolution_bits)
            pattern, value = evaluate_profile(config, profile)
            report = {"suppression_db": value, "argmax_deg": pattern.argmax()}
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                dest = Path(args.out) / "pattern.csv"
                write_pattern_csv(dest, pattern)
                report["pattern_csv"] = str(dest)
        else:
            report = sweep(config, args.seeds, args.out, args.workers, args.emit_heatmap)
    except (DomainError, OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    if not args.quiet:
        print(json.dumps(report, indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

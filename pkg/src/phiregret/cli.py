"""Command-line front door: expert runs, game self-play, verification, sweeps.

Designed for scripts and CI: deterministic outputs per seed, exit code 0 on
success and 1 on any failure, CSV traces plus one summary JSON per run.
"""

import argparse
import json
import sys
from dataclasses import replace

from .harness import (
    ExperimentConfig,
    load_config,
    run_expert_experiment,
    run_game_experiment,
    run_sweep,
    run_verification_suite,
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; flags override its keys")
    p.add_argument("--mode", help=argparse.SUPPRESS)  # implied by subcommand
    p.add_argument("--alg", help="algorithm id")
    p.add_argument("--d", type=int, help="number of actions")
    p.add_argument("--T", type=int, help="horizon")
    p.add_argument("--N", type=int, help="number of players")
    p.add_argument("--seed", type=int, help="64-bit master seed")
    p.add_argument("--gen", help="loss or game generator id")
    p.add_argument("--out", help="output directory")
    p.add_argument("--eta", type=float, help="base learning rate override")
    p.add_argument("--eta-meta", dest="eta_meta", type=float, help="meta rate override")
    p.add_argument("--lambda", dest="lam", type=float, help="stability penalty override")
    p.add_argument("--verify-level", dest="verify_level", choices=["fast", "full"])
    p.add_argument("--game-file", dest="game_file", help="game JSON file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="phiregret",
        description="Comparator-adaptive swap-regret algorithms and game self-play.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("expert", "run one online algorithm against a generated loss sequence"),
        ("game", "run multi-agent self-play and report equilibrium gaps"),
        ("verify", "run the oracle-equivalence and inequality checks"),
        ("sweep", "repeat a run over a range of seeds in parallel"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        if name == "sweep":
            p.add_argument("--seeds", default="0:8", help="seed range lo:hi (half-open) or comma list")
            p.add_argument("--sweep-mode", dest="sweep_mode", choices=["expert", "game"], default="expert")
    return ap


def _parse_seeds(spec: str):
    if ":" in spec:
        lo, hi = spec.split(":")
        return list(range(int(lo), int(hi)))
    return [int(s) for s in spec.split(",")]


def build_config(args: argparse.Namespace, mode: str) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig(mode=mode)
    cfg = replace(cfg, mode=mode)
    for key in ("alg", "d", "T", "N", "seed", "gen", "out", "eta", "eta_meta", "lam",
                "verify_level", "game_file"):
        val = getattr(args, key, None)
        if val is not None:
            cfg = replace(cfg, **{key: val})
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "expert":
            summary = run_expert_experiment(build_config(args, "expert"))
        elif args.command == "game":
            summary = run_game_experiment(build_config(args, "game"))
        elif args.command == "verify":
            cfg = build_config(args, "verify")
            summary = run_verification_suite(cfg.verify_level)
            print(json.dumps(summary, indent=2))
            return 0 if summary["passed"] else 1
        else:  # sweep
            cfg = build_config(args, args.sweep_mode)
            results = run_sweep(cfg, _parse_seeds(args.seeds))
            print(f"completed {len(results)} runs under {cfg.out}")
            return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=2, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())

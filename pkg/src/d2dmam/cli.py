"""Command-line entry point: run a sweep and write the aggregated CSV."""

import argparse
import json
import sys

from d2dmam.harness import (PRESETS, SWEEP_PARAMS, ExperimentConfig, TrialError, db_to_linear,
                            preset, sweep_csv)


def _values(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _seed(text: str) -> int:
    seed = int(text, 0)
    if not 0 <= seed < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="d2dmam",
        description="Monte-Carlo sweep of single-phase and D2D-aided multicast outage rates.",
    )
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--sweep", choices=SWEEP_PARAMS)
    p.add_argument("--values", type=_values, help="comma-separated sweep values")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--eps", type=float, help="target outage")
    p.add_argument("--K", type=int, help="number of UEs")
    p.add_argument("--M", type=int, help="number of BS antennas")
    p.add_argument("--rho-db", type=float, help="BS transmit SNR, dB")
    p.add_argument("--rho-ue-db", type=float, help="UE transmit SNR, dB")
    p.add_argument("--nlos-frac", type=float, help="fraction of UEs in NLoS")
    p.add_argument("--alpha-nlos", type=float, help="NLoS pathloss exponent")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", help="JSON file mirroring ExperimentConfig; flags override it")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base = preset(args.preset).to_dict() if args.preset else ExperimentConfig().to_dict()
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a JSON object")
        channel = {**base["channel"], **loaded.pop("channel", {})}
        base.update(loaded)
        base["channel"] = channel

    ch = dict(base["channel"])
    frac = ch["K_nlos"] / ch["K"]
    if args.K is not None:
        ch["K"] = args.K
        ch["K_nlos"] = round(frac * args.K)
    if args.nlos_frac is not None:
        if not 0 <= args.nlos_frac <= 1:
            raise ValueError("--nlos-frac must lie in [0, 1]")
        ch["K_nlos"] = round(args.nlos_frac * ch["K"])
    if args.M is not None:
        ch["M"] = args.M
    if args.rho_db is not None:
        ch["rho"] = db_to_linear(args.rho_db)
    if args.rho_ue_db is not None:
        ch["rho_ue"] = db_to_linear(args.rho_ue_db)
    if args.alpha_nlos is not None:
        ch["alpha_nlos"] = args.alpha_nlos
    base["channel"] = ch

    for key, flag in (("epsilon", args.eps), ("trials", args.trials), ("master_seed", args.seed)):
        if flag is not None:
            base[key] = flag
    if args.sweep is not None:
        if args.sweep != base.get("sweep"):
            base["values"] = []
        base["sweep"] = args.sweep
    if args.values is not None:
        base["values"] = list(args.values)
    if not base.get("sweep"):
        raise ValueError("--sweep is required unless --preset or --config names one")
    return ExperimentConfig.from_dict(base)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.workers < 1:
            raise ValueError("--workers must be >= 1")
        config = config_from_args(args)
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    try:
        text = sweep_csv(config, args.workers)
    except TrialError as exc:
        print(f"{parser.prog}: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

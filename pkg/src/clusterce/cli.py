"""Command line entry point: ``clusterce sweep`` and ``clusterce single``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import harness
from .errors import ExcessiveFailuresError, InvalidConfigError

EXIT_OK, EXIT_CONFIG, EXIT_FAILURES = 0, 1, 2


def _config(args) -> harness.ExperimentConfig:
    if args.config:
        cfg = harness.load_config(args.config)
    else:
        cfg = harness.ExperimentConfig()
    over = {}
    if args.seed is not None:
        over["master_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        over["num_trials"] = args.trials
    if getattr(args, "out", None):
        over["output_path"] = args.out
    if getattr(args, "workers", None) is not None:
        over["workers"] = args.workers
    cfg = replace(cfg, **over)
    cfg.validate()
    return cfg


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if not cfg.output_path:
        raise InvalidConfigError("no output path: pass --out or set output_path")
    rows = harness.run_monte_carlo(cfg)
    harness.write_summary_csv(rows, cfg.output_path)
    print(f"wrote {len(rows)} rows to {cfg.output_path}")
    return EXIT_OK


def cmd_single(args) -> int:
    cfg = _config(args)
    snrs = (args.snr,) if args.snr is not None else cfg.snr_grid_db
    cfg = replace(cfg, snr_grid_db=tuple(snrs), num_trials=args.trial + 1)
    recs = harness.run_trial(cfg, args.trial)
    print(f"trial {args.trial}  master_seed {cfg.master_seed}  L={cfg.L} N={cfg.N} d={cfg.d}")
    for r in recs:
        status = f"{r.sq_error:.6g}" if r.ok else f"FAILED {r.error}"
        print(f"  {r.snr_db:6g} dB  {r.algorithm:12s}  sq_err {status:>12s}  "
              f"cpu {r.cpu_time_s * 1e3:8.2f} ms  inputs {r.input_digest}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clusterce", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="Monte Carlo MSE / CPU-time sweep to CSV")
    s.add_argument("--config", help="key = value config file")
    s.add_argument("--out", help="output CSV path")
    s.add_argument("--seed", type=int, help="master seed (uint64)")
    s.add_argument("--trials", type=int, help="trials per cell")
    s.add_argument("--workers", type=int, help="worker processes")
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("single", help="run one trial and print per-algorithm results")
    g.add_argument("--config")
    g.add_argument("--seed", type=int)
    g.add_argument("--trial", type=int, default=0)
    g.add_argument("--snr", type=float, help="single SNR in dB (default: config grid)")
    g.set_defaults(func=cmd_single)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InvalidConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExcessiveFailuresError as exc:
        print(f"too many failed trials: {exc}", file=sys.stderr)
        return EXIT_FAILURES


if __name__ == "__main__":
    sys.exit(main())

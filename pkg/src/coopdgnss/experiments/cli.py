"""Batch command-line interface.

Subcommands:
  bounds    — evaluate the bound columns over a config's sweep grid
  sweep     — run the Monte Carlo sweep (from a config file or a named
              preset) and write the sweep CSV
  simulate  — dump raw/single-difference/double-difference observations
              for M trials of the config's base network

Exit codes: 0 success; 2 invalid config or arguments; 3 every sweep point
unsolvable; 4 numerical failure (singular model, bound/estimator
disagreement, search budget exhaustion).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, NumericalError, SolvabilityError
from ..simulator import observation_rows, dump_observations, synthesize_raw, sample_truth, to_dd, to_sd
from .config import expand_preset, load_config, load_preset
from .scenario import Scenario
from .sweep import (
    bounds_rows,
    emit_bounds_csv,
    emit_csv,
    first_trial_observations,
    run_cdgnss_sweep,
    run_crtk_sweep,
    _trial_seeds,
)

log = logging.getLogger(__name__)


def _all_marked(rows) -> bool:
    return bool(rows) and all(r.rmse_crb is None for r in rows)


def _cmd_bounds(args) -> int:
    cfg = load_config(args.config)
    rows = bounds_rows(cfg)
    emit_bounds_csv(rows, args.out)
    log.info("wrote %d bound rows to %s", len(rows), args.out)
    if _all_marked(rows):
        raise SolvabilityError("no sweep point is solvable")
    return 0


def _member_out(out: Path, member: str) -> Path:
    """fig5 expands to per-curve files: sweep.csv -> sweep_no5.csv etc."""
    suffix = member.split("_", 1)[1]
    return out.with_name(f"{out.stem}_{suffix}{out.suffix or '.csv'}")


def _cmd_sweep(args) -> int:
    if (args.config is None) == (args.preset is None):
        raise ConfigError("pass exactly one of --config or --preset")
    if args.preset is not None:
        members = expand_preset(args.preset)
        if len(members) == 1:
            runs = [(load_preset(members[0]), Path(args.out))]
        else:
            runs = [
                (load_preset(m), _member_out(Path(args.out), m)) for m in members
            ]
    else:
        runs = [(load_config(args.config), Path(args.out))]

    all_rows = []
    for cfg, out in runs:
        runner = run_crtk_sweep if cfg.pipeline == "crtk" else run_cdgnss_sweep
        rows = runner(cfg, workers=args.workers)
        emit_csv(rows, out)
        log.info("wrote %d sweep rows to %s", len(rows), out)
        all_rows.extend(rows)
    if args.dump_obs is not None:
        dump_observations(first_trial_observations(runs[0][0]), args.dump_obs)
        log.info("wrote first-trial observations to %s", args.dump_obs)
    if _all_marked(all_rows):
        raise SolvabilityError("no sweep point is solvable")
    return 0


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.trials is not None:
        cfg = dataclasses.replace(cfg, trials=int(args.trials))
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=int(args.seed))
    g = cfg.geometry()
    scn = Scenario(cfg.base, g)
    with Path(args.out).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["trial", "level", "receiver", "satellite", "code_m", "phase_m"]
        )
        for t in range(cfg.trials):
            truth_seed, noise_seed = _trial_seeds(cfg, 0, t)
            truth = sample_truth(scn.spec, scn.geometry, truth_seed)
            raw = synthesize_raw(scn.geometry, scn.spec, truth, noise_seed, scn.split)
            sd = to_sd(raw)
            dd = to_dd(sd, scn.pivot)
            for obs in (raw, sd, dd):
                writer.writerows((t,) + row for row in observation_rows(obs))
    log.info("wrote %d trials of observations to %s", cfg.trials, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coopdgnss",
        description="Cooperative DGNSS/RTK batch experiments: bound "
        "evaluation, Monte Carlo sweeps, observation dumps.",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log progress to stderr"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="evaluate bound columns over the sweep grid")
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("sweep", help="run a Monte Carlo sweep")
    p.add_argument("--config", help="JSON config file")
    p.add_argument(
        "--preset",
        help="named built-in experiment (fig4a, fig4b, fig4b_ko8, fig4b_ko14, "
        "fig5, fig5_no1, fig5_no5, fig5_no25); fig5 writes one file per curve",
    )
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument(
        "--dump-obs",
        help="also dump the first trial's observations (all levels) to this CSV",
    )
    p.add_argument(
        "--workers", type=int, default=1, help="parallel sweep-point processes"
    )
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser(
        "simulate", help="dump simulated observations for the base network"
    )
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--trials", type=int, help="number of trials (default: config)")
    p.add_argument("--seed", type=int, help="master seed (default: config)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolvabilityError as exc:
        print(f"solvability error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

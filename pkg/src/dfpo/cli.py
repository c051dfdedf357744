"""Command-line entry point.

Subcommands:
  run       execute a sweep described by a preset file and write a CSV
  surface   emit the single-user receive-SNR surface of a scenario as CSV
  validate  parse and validity-check a preset file

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError
from .experiments import (load_config, run_sweep, snr_surface, worker_count,
                          write_surface_csv)
from .environment import dbm_to_watts
from .scenario import CarrierConfig, ScenarioConfig, generate_scenario


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="dfpo",
        description="Movable-antenna position optimization experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a Monte Carlo sweep")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--trials", type=int, default=None)
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--out", default=None)

    surf_p = sub.add_parser("surface", help="emit a receive-SNR surface")
    surf_p.add_argument("--config", required=True)
    surf_p.add_argument("--res", type=int, default=200)
    surf_p.add_argument("--out", required=True)

    val_p = sub.add_parser("validate", help="schema-check a config file")
    val_p.add_argument("--config", required=True)
    return parser


def _cmd_run(args) -> int:
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    config = load_config(args.config, **overrides)
    rows = run_sweep(config, workers=worker_count())
    print(f"wrote {len(rows)} rows to {config.out}")
    return 0


def _cmd_surface(args) -> int:
    config = load_config(args.config)
    if config.users != 1:
        raise ConfigError("the SNR surface needs a single-user config")
    if args.res < 2:
        raise ConfigError("surface resolution must be at least 2")
    scen_cfg = ScenarioConfig(
        num_users=1, num_paths=config.paths,
        distance_range_m=(config.distance_min_m, config.distance_max_m),
        pathloss_ref_db=config.pathloss_ref_db,
        pathloss_exponent=config.pathloss_exponent,
        carrier=CarrierConfig.from_frequency(config.carrier_hz))
    scenario = generate_scenario(scen_cfg, [config.master_seed, 0])
    xs, ys, snr_db = snr_surface(scenario, dbm_to_watts(config.noise_dbm),
                                 dbm_to_watts(config.power_dbm),
                                 config.region, args.res)
    write_surface_csv(args.out, xs, ys, snr_db)
    print(f"wrote {args.res}x{args.res} surface to {args.out}")
    return 0


def _cmd_validate(args) -> int:
    load_config(args.config)
    print(f"{args.config}: ok")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "surface": _cmd_surface, "validate": _cmd_validate}
    try:
        return handlers[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

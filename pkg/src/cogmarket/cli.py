"""Command line front end.

cogmarket run     simulate one scenario, emit per-trial records
cogmarket sweep   re-run a scenario along one parameter axis
cogmarket verify  run the randomized invariant suite

Scenario files are JSON with the ScenarioConfig fields; omitted fields take
the defaults. Setting COGMARKET_OUT_DIR redirects --out paths into that
directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .channel import ScenarioConfig
from .harness import (
    MECHANISMS,
    SWEEP_AXES,
    invariant_suite,
    lambda_grid,
    run_experiment,
    sweep,
    write_records,
    write_sweep,
)


def _load_config(args) -> ScenarioConfig:
    config = ScenarioConfig.from_json(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    return config.replace(**overrides) if overrides else config


def _mechanisms(arg: str):
    names = tuple(name.strip() for name in arg.split(",") if name.strip())
    unknown = set(names) - set(MECHANISMS)
    if unknown:
        raise ValueError(f"unknown mechanisms {sorted(unknown)}, choose from {MECHANISMS}")
    return names


def _out_path(arg):
    if arg is None:
        return None
    override = os.environ.get("COGMARKET_OUT_DIR")
    path = Path(arg)
    if override:
        path = Path(override) / path.name
    return path


def _emit(write, args) -> None:
    path = _out_path(args.out)
    if path is None:
        write(sys.stdout)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            write(fh)


def _cmd_run(args) -> int:
    config = _load_config(args)
    records = run_experiment(
        config, _mechanisms(args.mechanisms), pu_idle=args.pu_idle, check=not args.no_check
    )
    _emit(lambda fh: write_records(records, fh, args.format), args)
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    if args.values:
        raw = [v.strip() for v in args.values.split(",") if v.strip()]
        values = [int(v) if args.axis in ("K", "quota") else float(v) for v in raw]
    elif args.axis == "lambda":
        values = lambda_grid()
    else:
        raise ValueError("--values is required for this axis")
    rows = sweep(
        config, args.axis, values, _mechanisms(args.mechanisms),
        pu_idle=args.pu_idle, check=not args.no_check,
    )
    _emit(lambda fh: write_sweep(rows, fh, args.format), args)
    return 0


def _cmd_verify(args) -> int:
    results = invariant_suite(seed=args.seed if args.seed is not None else 0, trials=args.trials or 25)
    failed = 0
    for name, ok, detail in results:
        status = "ok" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        print(f"{status:4s} {name}{suffix}")
        failed += not ok
    print(f"{len(results) - failed}/{len(results)} invariant checks passed")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cogmarket", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_output=True):
        p.add_argument("--config", help="scenario JSON file (defaults apply when omitted)")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--trials", type=int, help="override the trial count")
        if with_output:
            p.add_argument("--out", help="output path (stdout when omitted)")
            p.add_argument("--format", choices=("csv", "json"), default="csv")
            p.add_argument("--mechanisms", default=",".join(MECHANISMS),
                           help="comma separated subset of " + ",".join(MECHANISMS))
            p.add_argument("--pu-idle", choices=("free", "threshold"), default="free",
                           dest="pu_idle", help="PU metric on unassigned channels")
            p.add_argument("--no-check", action="store_true",
                           help="skip per-trial outcome verification")

    p_run = sub.add_parser("run", help="simulate one scenario")
    common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="simulate along one parameter axis")
    common(p_sweep)
    p_sweep.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p_sweep.add_argument("--values", help="comma separated axis values "
                                          "(lambda defaults to a 21 point grid)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the randomized invariant suite")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--trials", type=int, default=25,
                          help="instances per invariant check")
    p_verify.set_defaults(func=_cmd_verify)
    return parser


def cli_main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(cli_main())

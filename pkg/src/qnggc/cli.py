"""Command-line interface: run experiments, grid-search hyperparameters, query oracles.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(non-positive-definite solve or divergence).
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import observables
from .bench import (
    ConfigError,
    grid_search,
    load_spec,
    run_experiment,
)
from .geometry import SingularMetricError
from .optimizer import DivergenceError, SolveFailure
from .statevector import exact_ground_energy

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"{flag}: expected a comma-separated float list, got {text!r}") from exc
    if not values:
        raise ConfigError(f"{flag}: list is empty")
    return values


def _with_seed_override(spec, seeds: int | None):
    if seeds is None:
        return spec
    if spec.theta0 is not None:
        raise ConfigError("--seeds: config uses an explicit theta0, not random init")
    return replace(spec, random_count=seeds)


def _cmd_run(args) -> int:
    spec = _with_seed_override(load_spec(args.config), args.seeds)
    result = run_experiment(spec, out_dir=args.out, parallel=args.parallel)
    print(f"example: {spec.example}")
    print(f"target energy: {result.target_energy:.12f}")
    for agg in result.aggregates:
        print(
            f"{agg.optimizer}: final median delta_e = {agg.median_delta_e[-1]:.6e}, "
            f"final mean energy = {agg.mean_energy[-1]:.9f}"
        )
    if args.out or spec.out_dir:
        print(f"wrote trajectories.csv and aggregate.csv to {args.out or spec.out_dir}")
    return EXIT_OK


def _cmd_grid(args) -> int:
    spec = _with_seed_override(load_spec(args.config), args.seeds)
    eta_grid = _parse_float_list(args.eta, "--eta")
    b_grid = _parse_float_list(args.b, "--b")
    selections = grid_search(spec, eta_grid, b_grid)
    for name, sel in selections.items():
        print(
            f"{name}: eta = {sel.eta}, b = {sel.b}, "
            f"median final delta_e = {sel.median_final_delta_e:.6e}"
        )
        for eta, b, median in sel.table:
            print(f"  cell eta={eta} b={b}: median final delta_e = {median:.6e}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    if args.model == "ex1":
        energy = -1.0
    elif args.model == "h2":
        energy = observables.h2_ground_energy(0.4, 0.2)
    else:
        energy, _ = exact_ground_energy(observables.hamiltonian_tfim(args.n, args.h))
    print(f"{energy:.17g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnggc",
        description="Variational optimization benchmarks with natural-gradient "
        "and geodesic-corrected update rules",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a TOML config")
    run.add_argument("--config", required=True, help="path to TOML config")
    run.add_argument("--out", default=None, help="directory for CSV output")
    run.add_argument("--seeds", type=int, default=None, help="override random-init count")
    run.add_argument("--parallel", type=int, default=1, help="worker processes")
    run.set_defaults(func=_cmd_run)

    grid = sub.add_parser("grid", help="grid-search eta and b per optimizer")
    grid.add_argument("--config", required=True, help="path to TOML config")
    grid.add_argument("--eta", required=True, help="comma-separated eta values")
    grid.add_argument("--b", required=True, help="comma-separated b values")
    grid.add_argument("--seeds", type=int, default=None, help="override random-init count")
    grid.set_defaults(func=_cmd_grid)

    oracle = sub.add_parser("oracle", help="print an exact ground energy")
    oracle.add_argument("--model", required=True, choices=("ex1", "h2", "tfim"))
    oracle.add_argument("--n", type=int, default=4, help="qubit count (tfim)")
    oracle.add_argument("--h", type=float, default=10.0, help="transverse field (tfim)")
    oracle.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolveFailure, SingularMetricError, DivergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

"""Benchmark experiments: specs, seeded runs, grid search, aggregation, CSV output."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import observables
from .circuits import efficient_su2, state_ex1, state_ex2
from .geometry import (
    FidelityCounter,
    analytic_christoffel_ex1,
    analytic_metric_ex1,
    analytic_metric_ex2,
    christoffel_diag_shift,
    christoffel_from_metric_fd,
    fs_metric_diag,
    fs_metric_full,
    regularize,
)
from .gradients import (
    CostFunction,
    analytic_gradient_ex1,
    analytic_gradient_ex2,
    parameter_shift_gradient,
)
from .optimizer import (
    DivergenceError,
    GeometryProviders,
    OptimizerConfig,
    SolveFailure,
    Trajectory,
    run_optimization,
)
from .statevector import StateVector, exact_ground_energy

EXAMPLES = ("ex1", "ex2-h2", "ex3-tfim")

TRAJECTORY_COLUMNS = (
    "iter",
    "seed",
    "optimizer",
    "energy",
    "delta_e",
    "log10_delta_e",
    "correction_norm",
    "fidelity",
)
AGGREGATE_COLUMNS = (
    "iter",
    "optimizer",
    "mean_energy",
    "mean_delta_e",
    "median_delta_e",
    "mean_log10_delta_e",
    "mean_correction_norm",
)

# Christoffel denominators are floored at the run's lambda, or this when
# the run is unregularized.
MIN_CHRISTOFFEL_FLOOR = 1e-12


class ConfigError(ValueError):
    """Invalid experiment configuration; message lists field-level problems."""


@dataclass(frozen=True)
class OptimizerSpec:
    """One optimizer entry of an experiment (name plus its settings)."""

    name: str
    method: str
    eta: float
    b: float = 0.0
    metric_mode: str | None = None
    christoffel_source: str | None = None


@dataclass(frozen=True)
class ExperimentSpec:
    """A benchmark definition: system, optimizer list, and initialization."""

    example: str
    optimizers: tuple[OptimizerSpec, ...]
    n_qubits: int | None = None
    alpha: float = 0.4
    beta: float = 0.2
    h: float = 10.0
    iterations: int = 30
    lam: float = 0.0
    theta0: tuple[float, ...] | None = None
    random_count: int | None = None
    random_seed: int | None = None
    out_dir: str | None = None

    @property
    def n_params(self) -> int:
        if self.example == "ex1":
            return 2
        if self.example == "ex2-h2":
            return 3
        return 4 * (self.n_qubits or 0)


_DEFAULT_METRIC_MODE = {"ex1": "analytic", "ex2-h2": "analytic", "ex3-tfim": "diagonal"}
_DEFAULT_CHRISTOFFEL = {
    "ex1": "analytic",
    "ex2-h2": "finite-difference",
    "ex3-tfim": "shift-rule",
}


def _resolve_optimizer(spec: ExperimentSpec, opt: OptimizerSpec) -> OptimizerSpec:
    return replace(
        opt,
        metric_mode=opt.metric_mode or _DEFAULT_METRIC_MODE[spec.example],
        christoffel_source=opt.christoffel_source or _DEFAULT_CHRISTOFFEL[spec.example],
    )


def validate_spec(spec: ExperimentSpec) -> ExperimentSpec:
    """Check a spec field by field; returns it with per-example defaults filled in."""
    errors: list[str] = []
    if spec.example not in EXAMPLES:
        errors.append(f"example: must be one of {EXAMPLES}, got {spec.example!r}")
        raise ConfigError("\n".join(errors))
    if spec.example == "ex3-tfim":
        if spec.n_qubits is None or spec.n_qubits < 2:
            errors.append(f"n_qubits: ex3-tfim needs n_qubits >= 2, got {spec.n_qubits}")
    if spec.iterations < 0:
        errors.append(f"iterations: must be >= 0, got {spec.iterations}")
    if spec.lam < 0:
        errors.append(f"lambda: must be >= 0, got {spec.lam}")
    if not spec.optimizers:
        errors.append("optimizers: at least one optimizer table is required")

    resolved = []
    for opt in spec.optimizers:
        prefix = f"optimizers.{opt.name}"
        if opt.method not in ("gd", "qng", "qnggc"):
            errors.append(f"{prefix}.method: must be gd|qng|qnggc, got {opt.method!r}")
            continue
        if opt.eta <= 0:
            errors.append(f"{prefix}.eta: must be > 0, got {opt.eta}")
        if opt.b < 0:
            errors.append(f"{prefix}.b: must be >= 0, got {opt.b}")
        opt = _resolve_optimizer(spec, opt)
        if spec.example in ("ex1", "ex2-h2") and opt.metric_mode != "analytic":
            errors.append(
                f"{prefix}.metric_mode: {spec.example} has no shift-rule circuit; "
                "only 'analytic' is available"
            )
        if spec.example == "ex3-tfim" and opt.metric_mode == "analytic":
            errors.append(
                f"{prefix}.metric_mode: ex3-tfim has no closed-form metric; "
                "use 'full' or 'diagonal'"
            )
        if spec.example == "ex2-h2" and opt.christoffel_source == "analytic":
            errors.append(
                f"{prefix}.christoffel_source: ex2-h2 has no machine-readable "
                "closed-form Christoffels; use 'finite-difference'"
            )
        if spec.example == "ex3-tfim" and opt.christoffel_source == "analytic":
            errors.append(
                f"{prefix}.christoffel_source: ex3-tfim has no closed form; "
                "use 'shift-rule' or 'finite-difference'"
            )
        if spec.example in ("ex1", "ex2-h2") and opt.christoffel_source == "shift-rule":
            errors.append(
                f"{prefix}.christoffel_source: {spec.example} has no shift-rule "
                "circuit; use 'analytic' or 'finite-difference'"
            )
        resolved.append(opt)

    has_theta0 = spec.theta0 is not None
    has_random = spec.random_count is not None or spec.random_seed is not None
    if has_theta0 == has_random:
        errors.append("init: provide exactly one of theta0 or random = {count, seed}")
    if has_theta0 and len(spec.theta0) != spec.n_params:
        errors.append(
            f"init.theta0: expected {spec.n_params} entries for {spec.example}, "
            f"got {len(spec.theta0)}"
        )
    if has_random:
        if spec.random_count is None or spec.random_count < 1:
            errors.append(f"init.random.count: must be >= 1, got {spec.random_count}")
        if spec.random_seed is None:
            errors.append("init.random.seed: required for random initialization")
    if errors:
        raise ConfigError("\n".join(errors))
    return replace(spec, optimizers=tuple(resolved))


_TOP_KEYS = {
    "example",
    "n_qubits",
    "alpha",
    "beta",
    "h",
    "iterations",
    "lambda",
    "optimizers",
    "init",
}
_OPT_KEYS = {"method", "eta", "b", "metric_mode", "christoffel_source"}
_INIT_KEYS = {"theta0", "random"}


def spec_from_dict(data: dict) -> ExperimentSpec:
    """Build and validate an ExperimentSpec from parsed config data."""
    errors = [f"unknown key {k!r}" for k in sorted(set(data) - _TOP_KEYS)]

    optimizers = []
    opt_tables = data.get("optimizers")
    if not isinstance(opt_tables, dict) or not opt_tables:
        errors.append("optimizers: at least one [optimizers.<name>] table is required")
        opt_tables = {}
    for name, table in opt_tables.items():
        if not isinstance(table, dict):
            errors.append(f"optimizers.{name}: must be a table")
            continue
        for k in sorted(set(table) - _OPT_KEYS):
            errors.append(f"optimizers.{name}.{k}: unknown key")
        if "method" not in table or "eta" not in table:
            errors.append(f"optimizers.{name}: method and eta are required")
            continue
        optimizers.append(
            OptimizerSpec(
                name=name,
                method=str(table["method"]),
                eta=float(table["eta"]),
                b=float(table.get("b", 0.0)),
                metric_mode=table.get("metric_mode"),
                christoffel_source=table.get("christoffel_source"),
            )
        )

    theta0 = None
    random_count = None
    random_seed = None
    init = data.get("init")
    if not isinstance(init, dict):
        errors.append("init: an [init] table is required")
    else:
        for k in sorted(set(init) - _INIT_KEYS):
            errors.append(f"init.{k}: unknown key")
        if "theta0" in init:
            theta0 = tuple(float(x) for x in init["theta0"])
        if "random" in init:
            rnd = init["random"]
            if not isinstance(rnd, dict) or set(rnd) - {"count", "seed"}:
                errors.append("init.random: must be a table with keys count, seed")
            else:
                random_count = int(rnd.get("count", 0))
                random_seed = int(rnd["seed"]) if "seed" in rnd else None

    if errors:
        raise ConfigError("\n".join(errors))

    spec = ExperimentSpec(
        example=str(data.get("example", "")),
        optimizers=tuple(optimizers),
        n_qubits=int(data["n_qubits"]) if "n_qubits" in data else None,
        alpha=float(data.get("alpha", 0.4)),
        beta=float(data.get("beta", 0.2)),
        h=float(data.get("h", 10.0)),
        iterations=int(data.get("iterations", 30)),
        lam=float(data.get("lambda", 0.0)),
        theta0=theta0,
        random_count=random_count,
        random_seed=random_seed,
    )
    return validate_spec(spec)


def load_spec(path) -> ExperimentSpec:
    """Parse a TOML experiment config and validate it."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return spec_from_dict(data)


def random_init(count: int, seed: int, n_params: int) -> list[np.ndarray]:
    """Deterministic random starting points, uniform per component on [-pi, pi).

    Point i is drawn from a fresh NumPy PCG64 generator seeded with
    SeedSequence((seed, i)), so the list is platform independent and any
    prefix of it is stable under changes of ``count``.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    points = []
    for run_index in range(count):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=(seed, run_index)))
        )
        points.append(rng.uniform(-math.pi, math.pi, n_params))
    return points


def initial_points(spec: ExperimentSpec) -> list[np.ndarray]:
    if spec.theta0 is not None:
        return [np.asarray(spec.theta0, dtype=np.float64)]
    return random_init(spec.random_count, spec.random_seed, spec.n_params)


def build_cost(spec: ExperimentSpec) -> CostFunction:
    """Cost function for the spec's system (analytic families for ex1/ex2)."""
    if spec.example == "ex1":
        return CostFunction(
            observable=observables.hamiltonian_ex1(),
            n_params=2,
            state_fn=state_ex1,
            scales=np.array([2.0, 2.0]),
        )
    if spec.example == "ex2-h2":
        return CostFunction(
            observable=observables.hamiltonian_h2(spec.alpha, spec.beta),
            n_params=3,
            state_fn=state_ex2,
        )
    return CostFunction(
        observable=observables.hamiltonian_tfim(spec.n_qubits, spec.h),
        n_params=4 * spec.n_qubits,
        circuit=efficient_su2(spec.n_qubits),
    )


def target_energy(spec: ExperimentSpec) -> float:
    """Exact ground energy: closed form where known, dense eigensolve otherwise."""
    if spec.example == "ex1":
        return -1.0
    if spec.example == "ex2-h2":
        return observables.h2_ground_energy(spec.alpha, spec.beta)
    energy, _ = exact_ground_energy(observables.hamiltonian_tfim(spec.n_qubits, spec.h))
    return energy


def fidelity_target(spec: ExperimentSpec) -> StateVector | None:
    """Reference state for the trajectory fidelity column (none for ex1)."""
    if spec.example == "ex1":
        return None
    if spec.example == "ex2-h2":
        return observables.h2_ground_state(spec.alpha, spec.beta)
    _, ground = exact_ground_energy(observables.hamiltonian_tfim(spec.n_qubits, spec.h))
    return ground


def build_providers(
    spec: ExperimentSpec, opt: OptimizerSpec, cost: CostFunction, lam: float
) -> GeometryProviders:
    """Wire gradient/metric/christoffel callables for one optimizer run."""
    counters = {"metric": FidelityCounter(), "christoffel": FidelityCounter()}

    if spec.example == "ex1":
        gradient = analytic_gradient_ex1
        metric_fn = lambda t: regularize(analytic_metric_ex1(t), lam)
    elif spec.example == "ex2-h2":
        gradient = partial(analytic_gradient_ex2, alpha=spec.alpha, beta=spec.beta)
        metric_fn = lambda t: regularize(analytic_metric_ex2(t), lam)
    else:
        circuit = cost.circuit
        gradient = partial(parameter_shift_gradient, cost)
        if opt.metric_mode == "full":
            metric_fn = lambda t: regularize(
                fs_metric_full(circuit, t, counters["metric"]), lam
            )
        else:
            metric_fn = lambda t: regularize(
                fs_metric_diag(circuit, t, counters["metric"]), lam
            )

    christoffel_fn = None
    if opt.method == "qnggc":
        if opt.christoffel_source == "analytic":
            christoffel_fn = lambda t, bundle: analytic_christoffel_ex1(t)
        elif opt.christoffel_source == "finite-difference":
            christoffel_fn = lambda t, bundle: christoffel_from_metric_fd(metric_fn, t)
        else:  # shift-rule, circuit-backed
            circuit = cost.circuit
            floor = max(lam, MIN_CHRISTOFFEL_FLOOR)

            def christoffel_fn(t, bundle, _circuit=circuit, _floor=floor):
                raw_diag = fs_metric_diag(_circuit, t, counters["christoffel"])
                return christoffel_diag_shift(
                    _circuit, t, raw_diag, _floor, counters["christoffel"]
                )

    return GeometryProviders(
        gradient=gradient,
        metric=metric_fn if opt.method in ("qng", "qnggc") else None,
        christoffel=christoffel_fn,
        counters=counters,
    )


def optimizer_config(
    spec: ExperimentSpec, opt: OptimizerSpec, fid_target: StateVector | None
) -> OptimizerConfig:
    return OptimizerConfig(
        method=opt.method,
        eta=opt.eta,
        b=opt.b,
        lam=spec.lam,
        metric_mode=opt.metric_mode,
        christoffel_source=opt.christoffel_source,
        max_iters=spec.iterations,
        record_fidelity_target=fid_target,
    )


@dataclass(frozen=True)
class RunResult:
    optimizer: str
    seed: int
    trajectory: Trajectory


@dataclass(frozen=True)
class AggregateResult:
    """Across-seed statistics per iteration for one optimizer."""

    optimizer: str
    iterations: np.ndarray
    mean_energy: np.ndarray
    mean_delta_e: np.ndarray
    median_delta_e: np.ndarray
    mean_log10_delta_e: np.ndarray
    mean_correction_norm: np.ndarray


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    target_energy: float
    runs: tuple[RunResult, ...]
    aggregates: tuple[AggregateResult, ...]


def _run_single(
    spec: ExperimentSpec, opt: OptimizerSpec, seed: int, theta0: np.ndarray
) -> RunResult:
    cost = build_cost(spec)
    fid_target = fidelity_target(spec)
    providers = build_providers(spec, opt, cost, spec.lam)
    cfg = optimizer_config(spec, opt, fid_target)
    trajectory = run_optimization(cost, providers, cfg, theta0, target_energy(spec))
    return RunResult(opt.name, seed, trajectory)


def run_experiment(
    spec: ExperimentSpec, out_dir: str | None = None, parallel: int = 1
) -> ExperimentResult:
    """Run every optimizer over every starting point; aggregate; write CSVs.

    Runs are independent and may execute in parallel; results are assembled
    in (optimizer, seed) order so output is identical either way. CSVs go to
    ``out_dir`` (or ``spec.out_dir``) when given: ``trajectories.csv`` with
    one row per iterate and ``aggregate.csv`` with across-seed statistics.
    """
    spec = validate_spec(spec)
    points = initial_points(spec)
    tasks = [
        (opt, seed, theta0)
        for opt in spec.optimizers
        for seed, theta0 in enumerate(points)
    ]
    if parallel > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            runs = list(
                pool.map(
                    _run_single,
                    [spec] * len(tasks),
                    [t[0] for t in tasks],
                    [t[1] for t in tasks],
                    [t[2] for t in tasks],
                )
            )
    else:
        runs = [_run_single(spec, opt, seed, theta0) for opt, seed, theta0 in tasks]

    rows = trajectory_rows(runs)
    aggregates = compute_aggregates(rows, [o.name for o in spec.optimizers])
    destination = out_dir or spec.out_dir
    if destination is not None:
        dest = Path(destination)
        dest.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(dest / "trajectories.csv", rows)
        write_aggregate_csv(dest / "aggregate.csv", aggregates)
    return ExperimentResult(spec, target_energy(spec), tuple(runs), tuple(aggregates))


@dataclass(frozen=True)
class TrajectoryRow:
    """One CSV row of a trajectory table."""

    iter: int
    seed: int
    optimizer: str
    energy: float
    delta_e: float
    log10_delta_e: float
    correction_norm: float
    fidelity: float | None


def trajectory_rows(runs: list[RunResult]) -> list[TrajectoryRow]:
    rows = []
    for run in runs:
        for rec in run.trajectory.records:
            rows.append(
                TrajectoryRow(
                    iter=rec.iteration,
                    seed=run.seed,
                    optimizer=run.optimizer,
                    energy=rec.energy,
                    delta_e=rec.delta_e,
                    log10_delta_e=rec.log10_delta_e,
                    correction_norm=rec.correction_norm,
                    fidelity=rec.fidelity,
                )
            )
    return rows


def compute_aggregates(
    rows: list[TrajectoryRow], optimizer_order: list[str]
) -> list[AggregateResult]:
    """Across-seed per-iteration statistics, folded over sorted seed indices."""
    results = []
    for name in optimizer_order:
        by_seed: dict[int, list[TrajectoryRow]] = {}
        for row in rows:
            if row.optimizer == name:
                by_seed.setdefault(row.seed, []).append(row)
        if not by_seed:
            continue
        seeds = sorted(by_seed)
        per_seed = [sorted(by_seed[s], key=lambda r: r.iter) for s in seeds]
        n_iters = len(per_seed[0])
        if any(len(s) != n_iters for s in per_seed):
            raise ValueError(f"optimizer {name!r} has ragged trajectories")
        energy = np.array([[r.energy for r in s] for s in per_seed])
        delta = np.array([[r.delta_e for r in s] for s in per_seed])
        log10 = np.array([[r.log10_delta_e for r in s] for s in per_seed])
        corr = np.array([[r.correction_norm for r in s] for s in per_seed])
        results.append(
            AggregateResult(
                optimizer=name,
                iterations=np.arange(n_iters),
                mean_energy=np.mean(energy, axis=0),
                mean_delta_e=np.mean(delta, axis=0),
                median_delta_e=np.median(delta, axis=0),
                mean_log10_delta_e=np.mean(log10, axis=0),
                mean_correction_norm=np.mean(corr, axis=0),
            )
        )
    return results


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    return f"{value:.17g}"


def write_trajectory_csv(path, rows: list[TrajectoryRow]) -> None:
    """Write trajectory rows with full double precision (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.iter,
                    r.seed,
                    r.optimizer,
                    _fmt(r.energy),
                    _fmt(r.delta_e),
                    _fmt(r.log10_delta_e),
                    _fmt(r.correction_norm),
                    _fmt(r.fidelity),
                ]
            )


def read_trajectory_csv(path) -> list[TrajectoryRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(
                TrajectoryRow(
                    iter=int(rec["iter"]),
                    seed=int(rec["seed"]),
                    optimizer=rec["optimizer"],
                    energy=float(rec["energy"]),
                    delta_e=float(rec["delta_e"]),
                    log10_delta_e=float(rec["log10_delta_e"]),
                    correction_norm=float(rec["correction_norm"]),
                    fidelity=float(rec["fidelity"]) if rec["fidelity"] else None,
                )
            )
    return rows


def write_aggregate_csv(path, aggregates: list[AggregateResult]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for agg in aggregates:
            for i in range(len(agg.iterations)):
                writer.writerow(
                    [
                        int(agg.iterations[i]),
                        agg.optimizer,
                        _fmt(agg.mean_energy[i]),
                        _fmt(agg.mean_delta_e[i]),
                        _fmt(agg.median_delta_e[i]),
                        _fmt(agg.mean_log10_delta_e[i]),
                        _fmt(agg.mean_correction_norm[i]),
                    ]
                )


@dataclass(frozen=True)
class GridSelection:
    """Chosen (eta, b) for one optimizer plus the full grid table."""

    optimizer: str
    eta: float
    b: float
    median_final_delta_e: float
    table: tuple[tuple[float, float, float], ...]  # (eta, b, median final gap)


def grid_search(
    spec: ExperimentSpec, eta_grid: list[float], b_grid: list[float]
) -> dict[str, GridSelection]:
    """Tune (eta, b) per optimizer by the median final gap over the spec's seeds.

    gd and qng do not use b, so only the eta axis is scanned for them and the
    result is independent of ``b_grid``. Cells whose runs diverge or fail to
    solve score +inf. Ties break toward the smallest eta, then the smallest b.
    """
    spec = validate_spec(spec)
    if not eta_grid or not b_grid:
        raise ConfigError("grid: eta and b grids must be nonempty")
    points = initial_points(spec)
    selections: dict[str, GridSelection] = {}
    for opt in spec.optimizers:
        cells = [
            (eta, b)
            for eta in eta_grid
            for b in (b_grid if opt.method == "qnggc" else [0.0])
        ]
        table = []
        for eta, b in cells:
            candidate = replace(opt, eta=eta, b=b)
            finals = []
            for seed, theta0 in enumerate(points):
                try:
                    run = _run_single(spec, candidate, seed, theta0)
                    finals.append(run.trajectory.final.delta_e)
                except (DivergenceError, SolveFailure):
                    finals.append(float("inf"))
            table.append((eta, b, float(np.median(finals))))
        best = min(table, key=lambda cell: (cell[2], cell[0], cell[1]))
        selections[opt.name] = GridSelection(opt.name, best[0], best[1], best[2], tuple(table))
    return selections

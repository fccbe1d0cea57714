"""Step rules (plain, natural, geodesic-corrected) and the iteration loop."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .geometry import ChristoffelTensor, FidelityCounter, MetricBundle, SingularMetricError
from .gradients import CostFunction, evaluate_cost
from .statevector import StateVector, fidelity

METHODS = ("gd", "qng", "qnggc")
METRIC_MODES = ("full", "diagonal", "analytic")
CHRISTOFFEL_SOURCES = ("shift-rule", "finite-difference", "analytic")


class SolveFailure(RuntimeError):
    """Natural-gradient solve failed: metric not positive definite.

    Signals insufficient Tikhonov regularization. When raised from
    ``run_optimization`` the partial trajectory is attached as ``.trajectory``.
    """


class DivergenceError(RuntimeError):
    """Energy rose more than 10x the initial gap; partial trajectory attached."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for one optimizer run."""

    method: str
    eta: float
    b: float = 0.0
    lam: float = 0.0
    metric_mode: str = "full"
    christoffel_source: str = "finite-difference"
    max_iters: int = 30
    record_fidelity_target: StateVector | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.eta <= 0.0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if self.b < 0.0:
            raise ValueError(f"b must be >= 0, got {self.b}")
        if self.lam < 0.0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.metric_mode not in METRIC_MODES:
            raise ValueError(f"unknown metric mode {self.metric_mode!r}")
        if self.christoffel_source not in CHRISTOFFEL_SOURCES:
            raise ValueError(
                f"unknown christoffel source {self.christoffel_source!r}"
            )


@dataclass(frozen=True)
class GeometryProviders:
    """Callables supplying the gradient and geometry at each iterate.

    ``metric`` must return a bundle already regularized with the run's
    lambda; ``christoffel`` receives that bundle alongside theta. Counters,
    when given, are read by the loop to record per-iteration overlap costs.
    """

    gradient: Callable[[np.ndarray], np.ndarray]
    metric: Callable[[np.ndarray], MetricBundle] | None = None
    christoffel: Callable[[np.ndarray, MetricBundle], ChristoffelTensor] | None = None
    counters: dict[str, FidelityCounter] = field(default_factory=dict)


@dataclass(frozen=True)
class TrajectoryRecord:
    """State of one optimization iterate.

    ``correction_norm`` is the Euclidean norm of the geodesic correction
    applied in the step that *produced* this iterate (0 at iteration 0 and
    for gd/qng). ``eval_counts`` holds per-iteration overlap-evaluation
    deltas keyed by counter name.
    """

    iteration: int
    theta: np.ndarray
    energy: float
    delta_e: float
    log10_delta_e: float
    correction_norm: float
    fidelity: float | None = None
    eval_counts: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Trajectory:
    """Per-iteration records of one optimization run, iteration 0 included."""

    target_energy: float
    records: tuple[TrajectoryRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    @property
    def final(self) -> TrajectoryRecord:
        return self.records[-1]

    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    def delta_es(self) -> np.ndarray:
        return np.array([r.delta_e for r in self.records])

    def correction_norms(self) -> np.ndarray:
        return np.array([r.correction_norm for r in self.records])


def _log10_gap(delta_e: float) -> float:
    return math.log10(delta_e) if delta_e > 0.0 else float("-inf")


def gd_step(theta: np.ndarray, grad: np.ndarray, cfg: OptimizerConfig) -> np.ndarray:
    """Plain update theta - eta * grad."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if theta.shape != grad.shape:
        raise ValueError(f"shape mismatch: theta {theta.shape}, grad {grad.shape}")
    return theta - cfg.eta * grad


def _natural_direction(grad: np.ndarray, metric: MetricBundle, cfg: OptimizerConfig) -> np.ndarray:
    if metric.lam != cfg.lam:
        raise ValueError(
            f"metric regularized with lambda={metric.lam}, config has {cfg.lam}"
        )
    try:
        factor = scipy.linalg.cho_factor(metric.g, lower=True)
        return scipy.linalg.cho_solve(factor, grad)
    except scipy.linalg.LinAlgError as exc:
        raise SolveFailure(
            "metric + lambda*I is not positive definite; increase lambda"
        ) from exc


def qng_step(
    theta: np.ndarray,
    grad: np.ndarray,
    metric: MetricBundle,
    cfg: OptimizerConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Natural-gradient update: solve (g + lambda*I) v = grad, step -eta*v.

    Uses a Cholesky solve rather than an explicit inverse. Returns the new
    parameters and the natural gradient v.
    """
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    v = _natural_direction(grad, metric, cfg)
    return theta - cfg.eta * v, v


def qnggc_step(
    theta: np.ndarray,
    grad: np.ndarray,
    metric: MetricBundle,
    gamma: ChristoffelTensor,
    cfg: OptimizerConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Geodesic-corrected natural-gradient update.

    correction_i = (b/2) * sum_{l,m} gamma[i,l,m] v_l v_m with v the natural
    gradient; theta' = theta - eta*v - correction. Returns (theta',
    v, correction). With b = 0 the update is bit-identical to ``qng_step``.
    """
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    v = _natural_direction(grad, metric, cfg)
    if gamma.n_params != v.size:
        raise ValueError(
            f"Christoffel tensor is {gamma.n_params}-dim, gradient is {v.size}-dim"
        )
    if cfg.b == 0.0:
        return theta - cfg.eta * v, v, np.zeros_like(v)
    correction = 0.5 * cfg.b * np.einsum("ilm,l,m->i", gamma.gamma, v, v)
    return theta - cfg.eta * v - correction, v, correction


def run_optimization(
    cf: CostFunction,
    providers: GeometryProviders,
    cfg: OptimizerConfig,
    theta0,
    target_energy: float,
) -> Trajectory:
    """Iterate the configured step rule, recording every iterate.

    Geometry is recomputed fresh at each iterate (no caching across steps).
    Solve failures and divergence abort with the partial trajectory attached
    to the raised exception. Deterministic for fixed inputs.
    """
    theta = np.asarray(theta0, dtype=np.float64).reshape(-1).copy()
    if theta.size != cf.n_params:
        raise ValueError(f"theta0 has {theta.size} entries, cost takes {cf.n_params}")
    if cfg.method in ("qng", "qnggc") and providers.metric is None:
        raise ValueError(f"method {cfg.method!r} needs a metric provider")
    if cfg.method == "qnggc" and providers.christoffel is None:
        raise ValueError("method 'qnggc' needs a christoffel provider")

    def make_record(iteration, theta_now, energy, corr_norm, counts):
        gap = energy - target_energy
        fid = None
        if cfg.record_fidelity_target is not None:
            fid = fidelity(cf.state_at(theta_now), cfg.record_fidelity_target)
        return TrajectoryRecord(
            iteration=iteration,
            theta=theta_now.copy(),
            energy=energy,
            delta_e=gap,
            log10_delta_e=_log10_gap(gap),
            correction_norm=corr_norm,
            fidelity=fid,
            eval_counts=counts,
        )

    energy0 = evaluate_cost(cf, theta)
    records = [make_record(0, theta, energy0, 0.0, {})]
    initial_gap = abs(energy0 - target_energy)

    for t in range(1, cfg.max_iters + 1):
        marks = {name: c.count for name, c in providers.counters.items()}
        try:
            grad = providers.gradient(theta)
            if cfg.method == "gd":
                theta = gd_step(theta, grad, cfg)
                corr_norm = 0.0
            elif cfg.method == "qng":
                metric = providers.metric(theta)
                theta, _ = qng_step(theta, grad, metric, cfg)
                corr_norm = 0.0
            else:
                metric = providers.metric(theta)
                gamma = providers.christoffel(theta, metric)
                theta, _, correction = qnggc_step(theta, grad, metric, gamma, cfg)
                corr_norm = float(np.linalg.norm(correction))
        except (SolveFailure, SingularMetricError) as exc:
            exc.trajectory = Trajectory(target_energy, records)
            raise
        counts = {
            name: c.count - marks[name] for name, c in providers.counters.items()
        }
        energy = evaluate_cost(cf, theta)
        if not math.isfinite(energy):
            exc = DivergenceError(f"energy became non-finite at iteration {t}")
            exc.trajectory = Trajectory(target_energy, records)
            raise exc
        records.append(make_record(t, theta, energy, corr_norm, counts))
        if energy - energy0 > 10.0 * initial_gap:
            exc = DivergenceError(
                f"energy rose from {energy0:.6g} to {energy:.6g} at iteration {t}, "
                f"more than 10x the initial gap {initial_gap:.6g}"
            )
            exc.trajectory = Trajectory(target_energy, records)
            raise exc
    return Trajectory(target_energy, records)

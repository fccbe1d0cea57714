"""Cost evaluation and gradients: shift rule, finite differences, closed forms."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .circuits import Circuit, prepare_state, prepare_states, shift_rule_eligible
from .geometry import IneligibleCircuitError
from .statevector import PauliSum, StateVector, _expectation_amps, expectation


@dataclass(frozen=True)
class CostFunction:
    """Expectation-value cost L(theta) = <psi(theta)|O|psi(theta)>.

    The state family is either a circuit or a direct state constructor.
    ``scales`` records per-parameter bound-angle scales for families whose
    gates see scale*theta (identity for shift-rule-eligible circuits).
    """

    observable: PauliSum
    n_params: int
    circuit: Circuit | None = None
    state_fn: Callable[[np.ndarray], StateVector] | None = None
    scales: np.ndarray | None = None

    def __post_init__(self):
        if (self.circuit is None) == (self.state_fn is None):
            raise ValueError("provide exactly one of circuit / state_fn")
        if self.circuit is not None and self.circuit.n_params != self.n_params:
            raise ValueError("circuit parameter count does not match n_params")
        if self.scales is not None:
            s = np.asarray(self.scales, dtype=np.float64).reshape(-1)
            if s.size != self.n_params:
                raise ValueError("scales length does not match n_params")
            object.__setattr__(self, "scales", s)

    def state_at(self, theta) -> StateVector:
        theta = self._check(theta)
        if self.circuit is not None:
            return prepare_state(self.circuit, theta)
        return self.state_fn(theta)

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64).reshape(-1)
        if theta.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {theta.size}")
        return theta


def evaluate_cost(cf: CostFunction, theta) -> float:
    """Energy <psi(theta)|O|psi(theta)> in the model's units."""
    return expectation(cf.state_at(theta), cf.observable)


def _evaluate_batch(cf: CostFunction, thetas: np.ndarray) -> np.ndarray:
    if cf.circuit is not None:
        amps = prepare_states(cf.circuit, thetas)
        return _expectation_amps(amps, cf.observable)
    return np.array([expectation(cf.state_fn(t), cf.observable) for t in thetas])


def parameter_shift_gradient(cf: CostFunction, theta) -> np.ndarray:
    """Exact gradient from pi/2-shifted evaluations.

    Component i is (1/2) [L(theta + (pi/2) e_i) - L(theta - (pi/2) e_i)];
    requires a shift-rule-eligible circuit.
    """
    if cf.circuit is None or not shift_rule_eligible(cf.circuit):
        raise IneligibleCircuitError(
            "parameter-shift gradient needs a shift-rule-eligible circuit"
        )
    theta = cf._check(theta)
    l = cf.n_params
    shifted = np.tile(theta, (2 * l, 1))
    shifted[np.arange(l), np.arange(l)] += math.pi / 2
    shifted[l + np.arange(l), np.arange(l)] -= math.pi / 2
    energies = _evaluate_batch(cf, shifted)
    return 0.5 * (energies[:l] - energies[l:])


def finite_difference_gradient(cf: CostFunction, theta, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient oracle, valid for any state family."""
    if step <= 0.0:
        raise ValueError(f"step must be > 0, got {step}")
    theta = cf._check(theta)
    l = cf.n_params
    shifted = np.tile(theta, (2 * l, 1))
    shifted[np.arange(l), np.arange(l)] += step
    shifted[l + np.arange(l), np.arange(l)] -= step
    energies = _evaluate_batch(cf, shifted)
    return (energies[:l] - energies[l:]) / (2.0 * step)


def analytic_gradient_ex1(theta) -> np.ndarray:
    """Gradient of the single-qubit cost sin(2 t0) cos(2 t1)."""
    t0, t1 = np.asarray(theta, dtype=np.float64).reshape(2)
    return np.array(
        [
            2.0 * math.cos(2.0 * t0) * math.cos(2.0 * t1),
            -2.0 * math.sin(2.0 * t0) * math.sin(2.0 * t1),
        ]
    )


def analytic_gradient_ex2(theta, alpha: float, beta: float) -> np.ndarray:
    """Closed-form gradient of the two-qubit hydrogen cost."""
    t0, t1, t2 = np.asarray(theta, dtype=np.float64).reshape(3)
    s2t0, c2t0 = math.sin(2.0 * t0), math.cos(2.0 * t0)
    s2t1, c2t1 = math.sin(2.0 * t1), math.cos(2.0 * t1)
    s2t2, c2t2 = math.sin(2.0 * t2), math.cos(2.0 * t2)
    st2, ct2 = math.sin(t2), math.cos(t2)
    d0 = -s2t0 * (
        alpha + 2.0 * alpha * c2t1 + alpha * c2t2 + 2.0 * beta * s2t1 * st2
    ) + c2t0 * (2.0 * beta * ct2 - alpha * s2t1 * s2t2)
    d1 = c2t0 * (-2.0 * alpha * s2t1 + 2.0 * beta * c2t1 * st2) - alpha * (
        2.0 * s2t1 * st2**2 + c2t1 * s2t0 * s2t2
    )
    d2 = (
        beta * c2t0 * ct2 * s2t1
        - s2t0 * (alpha * c2t2 * s2t1 + beta * st2)
        + alpha * (-c2t0 + c2t1) * s2t2
    )
    return np.array([d0, d1, d2])

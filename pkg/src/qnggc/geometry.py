"""State-space geometry: metric tensors, their derivatives, and Christoffel symbols.

The metric is the real part of the quantum geometric tensor, estimated either
exactly from pi/2- and pi-shifted state overlaps (shift rule), from central
finite differences of the state family (QGT oracle), or from closed forms for
the two small analytic examples.

Shift-rule operations require ``shift_rule_eligible`` circuits: every
parameter drives exactly one exp(-i*theta*P/2) gate. Scaled parameter
families go through the analytic fixtures or the QGT oracle plus
``rescale_geometry``.

Christoffel symbols of the diagonal metric come in two flavors:

* ``christoffel_diag_shift`` differentiates the diagonal metric entries
  totally, shifting *both* overlap arguments (4 overlaps per derivative).
  This agrees with finite differences of the metric field and is what the
  optimizer consumes.
* ``christoffel_diag_one_sided`` shifts only the second overlap argument
  (6 overlaps per entry). It is cheaper but is a biased estimator of the
  metric derivative: it returns half the true value when the differentiated
  parameter sits upstream of the metric entry's gate, and a spurious nonzero
  value when it sits downstream (where the true derivative vanishes). It is
  kept for comparison and is pinned by tests; do not feed it to the optimizer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .circuits import Circuit, prepare_states, shift_rule_eligible
from .statevector import StateVector

METRIC_MODES = ("full", "diagonal")
PROVENANCES = ("shift-rule", "analytic", "qgt-oracle", "finite-difference")

DEFAULT_FD_STEP = 1e-5


class IneligibleCircuitError(ValueError):
    """Raised when a shift-rule operation is applied to an ineligible circuit."""


class SingularPointError(ValueError):
    """Raised when an analytic geometric quantity is evaluated at a pole."""


class SingularMetricError(RuntimeError):
    """Raised when a metric cannot be inverted (insufficient regularization)."""


@dataclass
class FidelityCounter:
    """Mutable counter of state-overlap evaluations, for complexity accounting."""

    count: int = 0

    def add(self, n: int) -> None:
        self.count += n


@dataclass(frozen=True)
class MetricBundle:
    """A metric matrix plus its regularization constant and provenance."""

    mode: str
    g: np.ndarray
    lam: float = 0.0
    provenance: str = "shift-rule"

    def __post_init__(self):
        if self.mode not in METRIC_MODES:
            raise ValueError(f"unknown metric mode {self.mode!r}")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.lam < 0.0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        g = np.asarray(self.g, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError(f"metric must be square, got shape {g.shape}")
        if g.size:
            if self.mode == "diagonal":
                off = g - np.diag(np.diag(g))
                if np.any(off != 0.0):
                    raise ValueError("diagonal-mode metric has nonzero off-diagonals")
            elif np.max(np.abs(g - g.T)) > 1e-12:
                raise ValueError("full-mode metric is not symmetric within 1e-12")
        object.__setattr__(self, "g", g)

    @property
    def n_params(self) -> int:
        return self.g.shape[0]


@dataclass(frozen=True)
class ChristoffelTensor:
    """Connection coefficients gamma[i, j, k] with upper index first."""

    gamma: np.ndarray

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=np.float64)
        if gamma.ndim != 3 or len(set(gamma.shape)) > 1:
            raise ValueError(f"Christoffel tensor must be l x l x l, got {gamma.shape}")
        object.__setattr__(self, "gamma", gamma)

    @property
    def n_params(self) -> int:
        return self.gamma.shape[0]


def _require_eligible(circuit: Circuit) -> None:
    if not shift_rule_eligible(circuit):
        raise IneligibleCircuitError(
            "circuit is not shift-rule eligible: every parameter must drive "
            "exactly one gate with scale 1 and offset 0"
        )


def _check_theta(circuit: Circuit, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if theta.size != circuit.n_params:
        raise ValueError(
            f"expected {circuit.n_params} parameters, got {theta.size}"
        )
    return theta


def _pair_fidelities(
    circuit: Circuit,
    bra_thetas: np.ndarray,
    ket_thetas: np.ndarray,
    counter: FidelityCounter | None,
) -> np.ndarray:
    """|<psi(bra_i)|psi(ket_i)>|^2 for row-paired parameter vectors.

    States for duplicate parameter rows are prepared once; each requested
    overlap still counts as one fidelity evaluation.
    """
    bra = np.asarray(bra_thetas, dtype=np.float64)
    ket = np.asarray(ket_thetas, dtype=np.float64)
    m = bra.shape[0]
    if m == 0:
        return np.zeros(0)
    stacked = np.vstack([bra, ket])
    uniq, inverse = np.unique(stacked, axis=0, return_inverse=True)
    states = prepare_states(circuit, uniq)
    z = np.einsum("mk,mk->m", states[inverse[:m]].conj(), states[inverse[m:]])
    fids = z.real**2 + z.imag**2
    assert np.all(fids <= 1.0 + 1e-12) and np.all(fids >= -1e-15), (
        "overlap probability left [0, 1]"
    )
    if counter is not None:
        counter.add(m)
    return fids


def fs_metric_full(
    circuit: Circuit, theta, counter: FidelityCounter | None = None
) -> MetricBundle:
    """Full metric from four pi/2-shifted overlaps per parameter pair.

    Entry (j1, j2) is -(1/8) [F(+,+) - F(+,-) - F(-,+) + F(-,-)] with
    F(s1, s2) = |<psi(theta)|psi(theta + s1*(pi/2) e_j1 + s2*(pi/2) e_j2)>|^2.
    Exact for eligible circuits; no regularization applied.
    """
    _require_eligible(circuit)
    theta = _check_theta(circuit, theta)
    l = circuit.n_params
    if l == 0:
        return MetricBundle("full", np.zeros((0, 0)), 0.0, "shift-rule")
    signs = ((1, 1), (1, -1), (-1, 1), (-1, -1))
    kets = []
    for j1 in range(l):
        for j2 in range(j1, l):
            for s1, s2 in signs:
                t = theta.copy()
                t[j1] += s1 * (math.pi / 2)
                t[j2] += s2 * (math.pi / 2)
                kets.append(t)
    kets = np.array(kets)
    bras = np.tile(theta, (kets.shape[0], 1))
    fids = _pair_fidelities(circuit, bras, kets, counter)
    g = np.zeros((l, l))
    pos = 0
    for j1 in range(l):
        for j2 in range(j1, l):
            fpp, fpm, fmp, fmm = fids[pos : pos + 4]
            pos += 4
            val = -(fpp - fpm - fmp + fmm) / 8.0
            g[j1, j2] = val
            g[j2, j1] = val
    return MetricBundle("full", g, 0.0, "shift-rule")


def fs_metric_diag(
    circuit: Circuit, theta, counter: FidelityCounter | None = None
) -> MetricBundle:
    """Diagonal metric g_jj = (1/4) [1 - |<psi(theta)|psi(theta + pi e_j)>|^2]."""
    _require_eligible(circuit)
    theta = _check_theta(circuit, theta)
    l = circuit.n_params
    if l == 0:
        return MetricBundle("diagonal", np.zeros((0, 0)), 0.0, "shift-rule")
    kets = np.tile(theta, (l, 1))
    kets[np.arange(l), np.arange(l)] += math.pi
    bras = np.tile(theta, (l, 1))
    fids = _pair_fidelities(circuit, bras, kets, counter)
    return MetricBundle("diagonal", np.diag(0.25 * (1.0 - fids)), 0.0, "shift-rule")


def regularize(bundle: MetricBundle, lam: float) -> MetricBundle:
    """Tikhonov shift g <- g + lam*I; the applied constant accumulates in .lam."""
    if lam < 0.0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if lam == 0.0:
        return bundle
    g = bundle.g + lam * np.eye(bundle.n_params)
    return replace(bundle, g=g, lam=bundle.lam + lam)


def _diag_derivative_rows(theta: np.ndarray, j: int, k: int, total: bool):
    """Bra/ket parameter rows for one diagonal-metric derivative estimate."""
    pi = math.pi
    tj = theta.copy()
    tj[j] += pi
    ket_p = tj.copy()
    ket_p[k] += pi / 2
    ket_m = tj.copy()
    ket_m[k] -= pi / 2
    bras = [theta, theta]
    kets = [ket_p, ket_m]
    if total:
        bra_p = theta.copy()
        bra_p[k] += pi / 2
        bra_m = theta.copy()
        bra_m[k] -= pi / 2
        bras += [bra_p, bra_m]
        kets += [tj, tj]
    return bras, kets


def _combine_derivative(fids: np.ndarray, total: bool) -> float:
    if total:
        f1, f2, f3, f4 = fids
        return float((-f1 + f2 - f3 + f4) / 8.0)
    f1, f2 = fids
    return float((-f1 + f2) / 8.0)


def metric_diag_derivative(
    circuit: Circuit, theta, j: int, k: int, counter: FidelityCounter | None = None
) -> float:
    """One-sided shift estimate of d g_jj / d theta_k (ket argument only).

    Value: (1/8) [-F(theta, theta + pi e_j + (pi/2) e_k)
                  + F(theta, theta + pi e_j - (pi/2) e_k)].

    This differentiates the overlap kernel in its second argument only, which
    is *not* the derivative of the metric field: it is half the true value
    when parameter k enters the circuit before parameter j's gate, and can be
    nonzero when the true derivative is zero (k downstream of j). Use
    ``metric_diag_derivative_total`` for the metric-field derivative.
    """
    _require_eligible(circuit)
    theta = _check_theta(circuit, theta)
    _check_indices(circuit, j, k)
    bras, kets = _diag_derivative_rows(theta, j, k, total=False)
    fids = _pair_fidelities(circuit, np.array(bras), np.array(kets), counter)
    return _combine_derivative(fids, total=False)


def metric_diag_derivative_total(
    circuit: Circuit, theta, j: int, k: int, counter: FidelityCounter | None = None
) -> float:
    """Total derivative d g_jj / d theta_k from four shifted overlaps.

    Both overlap arguments move with the base point, so each contributes a
    two-point shift term:

    (1/8) [-F(theta, theta + pi e_j + (pi/2) e_k)
           + F(theta, theta + pi e_j - (pi/2) e_k)
           - F(theta + (pi/2) e_k, theta + pi e_j)
           + F(theta - (pi/2) e_k, theta + pi e_j)].

    Exact for eligible circuits; matches central finite differences of
    ``fs_metric_diag``.
    """
    _require_eligible(circuit)
    theta = _check_theta(circuit, theta)
    _check_indices(circuit, j, k)
    bras, kets = _diag_derivative_rows(theta, j, k, total=True)
    fids = _pair_fidelities(circuit, np.array(bras), np.array(kets), counter)
    return _combine_derivative(fids, total=True)


def _check_indices(circuit: Circuit, *indices: int) -> None:
    for idx in indices:
        if not 0 <= idx < circuit.n_params:
            raise IndexError(
                f"parameter index {idx} out of range for {circuit.n_params} parameters"
            )


def _diag_derivative_matrix(
    circuit: Circuit, theta: np.ndarray, counter: FidelityCounter | None, total: bool
) -> np.ndarray:
    """Matrix D[j, k] = estimate of d g_jj / d theta_k, evaluated in one batch."""
    l = circuit.n_params
    bras, kets = [], []
    for j in range(l):
        for k in range(l):
            b, t = _diag_derivative_rows(theta, j, k, total)
            bras += b
            kets += t
    fids = _pair_fidelities(circuit, np.array(bras), np.array(kets), counter)
    width = 4 if total else 2
    d = np.zeros((l, l))
    pos = 0
    for j in range(l):
        for k in range(l):
            d[j, k] = _combine_derivative(fids[pos : pos + width], total)
            pos += width
    return d


def _assemble_diag_christoffel(
    d: np.ndarray, g_diag: np.ndarray, floor: float
) -> np.ndarray:
    """Christoffels of a diagonal metric from its derivative matrix D[j,k] = d_k g_jj.

    gamma[i,j,k] = (delta_ij D[i,k] + delta_ik D[i,j] - delta_jk D[j,i])
                   / (2 * max(g_ii, floor));
    the delta branches accumulate, so i = j = k nets one D[i,i] term.
    Entries with three distinct indices are zero.
    """
    l = d.shape[0]
    denom = 2.0 * np.maximum(g_diag, floor)
    scaled = d / denom[:, None]
    gamma = np.zeros((l, l, l))
    ar = np.arange(l)
    gamma[ar, ar, :] += scaled  # i == j: gamma[i,i,k]
    gamma[ar, :, ar] += scaled  # i == k: gamma[i,j,i]
    gamma[:, ar, ar] -= d.T / denom[:, None]  # j == k: gamma[i,j,j]
    return gamma


def christoffel_diag_shift(
    circuit: Circuit,
    theta,
    g_diag: MetricBundle,
    floor: float,
    counter: FidelityCounter | None = None,
) -> ChristoffelTensor:
    """Christoffel symbols of the diagonal metric from shifted overlaps.

    Uses the total derivative of each diagonal entry (both overlap arguments
    shifted, 4 overlaps per parameter pair, O(l^2) overlaps in all) assembled
    through the Kronecker-delta pattern of a diagonal metric, dividing by
    2*max(g_ii, floor). Entries with three distinct indices are zero; the
    output is exactly symmetric in its two lower indices.
    """
    _require_eligible(circuit)
    theta = _check_theta(circuit, theta)
    if g_diag.mode != "diagonal":
        raise ValueError("christoffel_diag_shift needs a diagonal-mode metric bundle")
    if g_diag.n_params != circuit.n_params:
        raise ValueError("metric bundle size does not match circuit parameter count")
    if floor <= 0.0:
        raise ValueError(f"floor must be > 0, got {floor}")
    d = _diag_derivative_matrix(circuit, theta, counter, total=True)
    gamma = _assemble_diag_christoffel(d, np.diag(g_diag.g), floor)
    return ChristoffelTensor(gamma)


def christoffel_diag_one_sided(
    circuit: Circuit,
    theta,
    g_diag: MetricBundle,
    floor: float,
    counter: FidelityCounter | None = None,
) -> ChristoffelTensor:
    """Christoffel estimate from ket-only shifted overlaps (six per entry).

    Entry (i, j, k) combines up to six overlaps of the base state with
    pi-plus-half-pi shifted states, weighted 1/(16*max(g_ii, floor)):

        delta_ij [-F(pi e_i + (pi/2) e_k) + F(pi e_i - (pi/2) e_k)]
      + delta_ik [-F(pi e_i + (pi/2) e_j) + F(pi e_i - (pi/2) e_j)]
      - delta_jk [-F(pi e_j + (pi/2) e_i) + F(pi e_j - (pi/2) e_i)]

    where F(v) = |<psi(theta)|psi(theta + v)>|^2. Inherits the one-sided
    derivative bias documented on ``metric_diag_derivative``; kept for
    comparison against the corrected ``christoffel_diag_shift``.
    """
    _require_eligible(circuit)
    theta = _check_theta(circuit, theta)
    if g_diag.mode != "diagonal":
        raise ValueError("christoffel_diag_one_sided needs a diagonal-mode bundle")
    if g_diag.n_params != circuit.n_params:
        raise ValueError("metric bundle size does not match circuit parameter count")
    if floor <= 0.0:
        raise ValueError(f"floor must be > 0, got {floor}")
    l = circuit.n_params
    pi = math.pi
    kets = []
    for a in range(l):
        for b in range(l):
            for s in (1.0, -1.0):
                t = theta.copy()
                t[a] += pi
                t[b] += s * (pi / 2)
                kets.append(t)
    kets = np.array(kets).reshape(l * l * 2, l) if l else np.zeros((0, l))
    bras = np.tile(theta, (kets.shape[0], 1))
    fids = _pair_fidelities(circuit, bras, kets, counter).reshape(l, l, 2)
    bracket = -fids[:, :, 0] + fids[:, :, 1]  # bracket[a, b]
    denom = 16.0 * np.maximum(np.diag(g_diag.g), floor)
    gamma = np.zeros((l, l, l))
    for i in range(l):
        for j in range(l):
            for k in range(l):
                if i != j and i != k and j != k:
                    continue
                val = 0.0
                if i == j:
                    val += bracket[i, k]
                if i == k:
                    val += bracket[i, j]
                if j == k:
                    val -= bracket[j, i]
                gamma[i, j, k] = val / denom[i]
    return ChristoffelTensor(gamma)


def christoffel_from_metric_fd(
    metric_fn, theta, step: float = DEFAULT_FD_STEP
) -> ChristoffelTensor:
    """Christoffel symbols by central finite differences of a metric function.

    gamma[i,j,k] = (1/2) g^{il} (d_j g_lk + d_k g_lj - d_l g_jk), with every
    partial taken by central difference of ``metric_fn`` and the inverse
    applied through a linear solve of the (possibly regularized) metric at
    the base point.
    """
    if step <= 0.0:
        raise ValueError(f"step must be > 0, got {step}")
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    base = metric_fn(theta)
    l = base.n_params
    if l == 0:
        return ChristoffelTensor(np.zeros((0, 0, 0)))
    dg = np.zeros((l, l, l))  # dg[m, a, b] = d g_ab / d theta_m
    for m in range(l):
        tp = theta.copy()
        tm = theta.copy()
        tp[m] += step
        tm[m] -= step
        dg[m] = (metric_fn(tp).g - metric_fn(tm).g) / (2.0 * step)
    rhs = (
        np.transpose(dg, (1, 0, 2))  # [l, j, k] = d_j g_lk
        + np.transpose(dg, (1, 2, 0))  # [l, j, k] = d_k g_lj
        - dg  # [l, j, k] = d_l g_jk
    )
    try:
        sol = np.linalg.solve(base.g, rhs.reshape(l, l * l))
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError(
            "metric is singular at the base point; regularize before "
            "differentiating"
        ) from exc
    return ChristoffelTensor(0.5 * sol.reshape(l, l, l))


def qgt_metric_oracle(
    state_fn, theta, step: float = DEFAULT_FD_STEP
) -> MetricBundle:
    """Metric from the quantum geometric tensor with finite-difference derivatives.

    g_ij = Re <d_i psi|d_j psi> - Re[<d_i psi|psi><psi|d_j psi>] with each
    |d_i psi> a central difference of the state family; symmetrized.
    """
    if step <= 0.0:
        raise ValueError(f"step must be > 0, got {step}")
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    l = theta.size
    psi0 = state_fn(theta).amplitudes
    if l == 0:
        return MetricBundle("full", np.zeros((0, 0)), 0.0, "qgt-oracle")
    derivs = np.zeros((l, psi0.size), dtype=np.complex128)
    for i in range(l):
        tp = theta.copy()
        tm = theta.copy()
        tp[i] += step
        tm[i] -= step
        derivs[i] = (state_fn(tp).amplitudes - state_fn(tm).amplitudes) / (2.0 * step)
    overlaps = derivs.conj() @ derivs.T  # <d_i psi | d_j psi>
    c = derivs.conj() @ psi0  # <d_i psi | psi>
    g = overlaps.real - np.real(np.outer(c, c.conj()))
    g = 0.5 * (g + g.T)
    return MetricBundle("full", g, 0.0, "qgt-oracle")


def analytic_metric_ex1(theta) -> MetricBundle:
    """Closed-form metric diag(1, sin^2(2 t0)) of the single-qubit family."""
    t0 = np.asarray(theta, dtype=np.float64).reshape(2)[0]
    g = np.array([[1.0, 0.0], [0.0, math.sin(2.0 * t0) ** 2]])
    return MetricBundle("full", g, 0.0, "analytic")


def analytic_christoffel_ex1(theta) -> ChristoffelTensor:
    """Closed-form Christoffel symbols of the single-qubit family.

    Nonzero components: gamma[0,1,1] = -2 sin(2 t0) cos(2 t0) and
    gamma[1,0,1] = gamma[1,1,0] = 2 cos(2 t0) / sin(2 t0). Raises at the
    sin(2 t0) = 0 pole.
    """
    t0 = np.asarray(theta, dtype=np.float64).reshape(2)[0]
    s, c = math.sin(2.0 * t0), math.cos(2.0 * t0)
    if abs(s) < 1e-12:
        raise SingularPointError(
            f"Christoffel symbols diverge at sin(2*t0) = 0 (t0 = {t0})"
        )
    gamma = np.zeros((2, 2, 2))
    gamma[0, 1, 1] = -2.0 * s * c
    gamma[1, 0, 1] = 2.0 * c / s
    gamma[1, 1, 0] = 2.0 * c / s
    return ChristoffelTensor(gamma)


def analytic_metric_ex2(theta) -> MetricBundle:
    """Closed-form 3x3 metric of the two-qubit hydrogen-ansatz family."""
    t0, t1, _ = np.asarray(theta, dtype=np.float64).reshape(3)
    a = math.cos(t1) * math.sin(t1)
    b = -math.cos(t0) * math.sin(t0)
    c = 0.5 * (1.0 - math.cos(2.0 * t0) * math.cos(2.0 * t1))
    g = np.array([[1.0, 0.0, a], [0.0, 1.0, b], [a, b, c]])
    return MetricBundle("full", g, 0.0, "analytic")


def analytic_inverse_metric_ex2(theta, lam: float) -> np.ndarray:
    """Closed-form inverse of (metric + lam*I) for the hydrogen-ansatz family.

    Requires lam > 0; the inverse is symmetric.
    """
    if lam <= 0.0:
        raise ValueError(f"lambda must be > 0 for the closed-form inverse, got {lam}")
    t0, t1, _ = np.asarray(theta, dtype=np.float64).reshape(3)
    c2t0, c2t1 = math.cos(2.0 * t0), math.cos(2.0 * t1)
    c4t0, c4t1 = math.cos(4.0 * t0), math.cos(4.0 * t1)
    s2t0, s2t1 = math.sin(2.0 * t0), math.sin(2.0 * t1)
    den = 2.0 + 4.0 * lam * (3.0 + 2.0 * lam) + c4t0 - 4.0 * (1.0 + lam) * c2t0 * c2t1 + c4t1
    one = 1.0 + lam
    inv = np.empty((3, 3))
    inv[0, 0] = (
        3.0 + 4.0 * lam * (3.0 + 2.0 * lam) + c4t0 - 4.0 * one * c2t0 * c2t1
    ) / (one * den)
    inv[1, 1] = (1.0 + 2.0 * s2t0**2 / den) / one
    inv[2, 2] = 8.0 * one / den
    inv[0, 1] = inv[1, 0] = (
        -8.0 * math.cos(t0) * math.cos(t1) * math.sin(t0) * math.sin(t1) / (one * den)
    )
    inv[0, 2] = inv[2, 0] = -4.0 * s2t1 / den
    inv[1, 2] = inv[2, 1] = 8.0 * math.cos(t0) * math.sin(t0) / den
    return inv


def rescale_geometry(
    grad: np.ndarray,
    g: MetricBundle,
    gamma: ChristoffelTensor,
    scales,
) -> tuple[np.ndarray, MetricBundle, ChristoffelTensor]:
    """Pull geometry computed in bound-angle coordinates a = S*theta back to theta.

    grad_theta[i] = s_i * grad_a[i]; g_theta[i,j] = s_i s_j g_a[i,j];
    gamma_theta[i,j,k] = (s_j s_k / s_i) gamma_a[i,j,k]. Intended for
    unregularized bundles (a Tikhonov shift does not transform this way).
    """
    s = np.asarray(scales, dtype=np.float64).reshape(-1)
    if np.any(s == 0.0):
        raise ValueError("scales must all be nonzero")
    grad = np.asarray(grad, dtype=np.float64).reshape(-1)
    if not (grad.size == s.size == g.n_params == gamma.n_params):
        raise ValueError("gradient, metric, Christoffel, and scales sizes disagree")
    new_grad = s * grad
    new_g = replace(g, g=np.outer(s, s) * g.g)
    new_gamma = ChristoffelTensor(
        gamma.gamma * s[None, :, None] * s[None, None, :] / s[:, None, None]
    )
    return new_grad, new_g, new_gamma

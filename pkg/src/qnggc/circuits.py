"""Parameterized circuits with affine parameter bindings.

Gate set: RX, RY, RZ (convention exp(-i*angle*P/2)), X, CX, CRX, CRY.
Rotation gates carry either a fixed angle or a ParamBinding; the bound
angle is ``scale * theta[param_index] + offset`` in radians.

Includes the hardware-efficient ansatz used by the spin-chain benchmark
and direct closed-form state constructors for the single-qubit and
two-qubit hydrogen examples.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .statevector import StateVector, zero_state

ROTATION_KINDS = frozenset({"rx", "ry", "rz", "crx", "cry"})
FIXED_KINDS = frozenset({"x", "cx"})
TWO_QUBIT_KINDS = frozenset({"cx", "crx", "cry"})
GATE_KINDS = ROTATION_KINDS | FIXED_KINDS


@dataclass(frozen=True)
class ParamBinding:
    """Affine map from a circuit parameter to a gate angle."""

    param_index: int
    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if self.scale == 0.0:
            raise ValueError("binding scale must be nonzero")


@dataclass(frozen=True)
class GateInstance:
    """One gate: a kind, its qubits, and a fixed angle or a parameter binding.

    ``qubits`` is (target,) for single-qubit gates and (control, target)
    for two-qubit gates.
    """

    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None
    binding: ParamBinding | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        expected = 2 if self.kind in TWO_QUBIT_KINDS else 1
        if len(self.qubits) != expected:
            raise ValueError(
                f"gate {self.kind!r} takes {expected} qubit(s), got {self.qubits}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"gate {self.kind!r} has repeated qubits {self.qubits}")
        if self.kind in ROTATION_KINDS:
            if (self.angle is None) == (self.binding is None):
                raise ValueError(
                    f"rotation gate {self.kind!r} needs exactly one of angle/binding"
                )
            if self.angle is not None and not np.isfinite(self.angle):
                raise ValueError(f"rotation angle must be finite, got {self.angle}")
        elif self.angle is not None or self.binding is not None:
            raise ValueError(f"gate {self.kind!r} takes no angle")


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list over n_qubits, driven by an n_params parameter vector."""

    n_qubits: int
    n_params: int
    gates: tuple[GateInstance, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        if self.n_params < 0:
            raise ValueError("n_params must be >= 0")
        referenced = set()
        for gate in self.gates:
            for q in gate.qubits:
                if not 0 <= q < self.n_qubits:
                    raise ValueError(
                        f"qubit index {q} out of range for {self.n_qubits}-qubit circuit"
                    )
            if gate.binding is not None:
                if not 0 <= gate.binding.param_index < self.n_params:
                    raise ValueError(
                        f"param index {gate.binding.param_index} out of range "
                        f"for {self.n_params} parameters"
                    )
                referenced.add(gate.binding.param_index)
        missing = set(range(self.n_params)) - referenced
        if missing:
            raise ValueError(f"parameters never referenced by any gate: {sorted(missing)}")


# --- gate application kernels (batched over rows of a (B, 2^n) array) ---

@lru_cache(maxsize=None)
def _pair_indices(n_qubits: int, target: int, control: int | None = None):
    """Column index pairs (target bit 0, target bit 1), restricted to control=1."""
    dim = 2**n_qubits
    idx = np.arange(dim)
    sel = (idx >> target) & 1 == 0
    if control is not None:
        sel &= (idx >> control) & 1 == 1
    i0 = idx[sel]
    i1 = i0 | (1 << target)
    i0.setflags(write=False)
    i1.setflags(write=False)
    return i0, i1


def _apply_kernel(
    amps: np.ndarray,
    kind: str,
    qubits: tuple[int, ...],
    angles: np.ndarray | float | None,
    n_qubits: int,
) -> None:
    """Apply one gate in place to a (B, dim) amplitude array.

    ``angles`` may be a scalar or a (B,) array of per-row angles.
    """
    if kind in ("x", "cx"):
        control = qubits[0] if kind == "cx" else None
        target = qubits[-1]
        i0, i1 = _pair_indices(n_qubits, target, control)
        a0 = amps[:, i0].copy()
        amps[:, i0] = amps[:, i1]
        amps[:, i1] = a0
        return

    control = qubits[0] if kind in ("crx", "cry") else None
    target = qubits[-1]
    base = kind[-2:]  # 'rx' | 'ry' | 'rz'
    half = np.asarray(angles) / 2.0
    if half.ndim == 1:
        half = half[:, None]
    c = np.cos(half)
    s = np.sin(half)
    i0, i1 = _pair_indices(n_qubits, target, control)
    a0 = amps[:, i0]
    a1 = amps[:, i1]
    if base == "rx":
        amps[:, i0] = c * a0 - 1j * s * a1
        amps[:, i1] = -1j * s * a0 + c * a1
    elif base == "ry":
        amps[:, i0] = c * a0 - s * a1
        amps[:, i1] = s * a0 + c * a1
    else:  # rz
        phase = np.cos(half) - 1j * np.sin(half)
        amps[:, i0] = phase * a0
        amps[:, i1] = np.conj(phase) * a1


def apply_gate(state: StateVector, gate: GateInstance) -> StateVector:
    """Apply one concrete gate to a state; the gate must carry a fixed angle.

    Returns the unitarily evolved state (norm preserved).
    """
    if gate.binding is not None:
        raise ValueError("apply_gate needs a bound gate; use prepare_state for circuits")
    for q in gate.qubits:
        if not 0 <= q < state.n_qubits:
            raise ValueError(
                f"qubit index {q} out of range for {state.n_qubits}-qubit state"
            )
    amps = state.amplitudes[None, :].copy()
    _apply_kernel(amps, gate.kind, gate.qubits, gate.angle, state.n_qubits)
    return StateVector(state.n_qubits, amps[0])


def prepare_states(circuit: Circuit, thetas: np.ndarray) -> np.ndarray:
    """Prepare U(theta)|0...0> for a (B, n_params) batch of parameter vectors.

    Returns a (B, 2^n) complex array. Rows are computed with identical
    arithmetic, so a batch of one reproduces the single-state path bit for bit.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
    batch = thetas.shape[0]
    if thetas.shape[1] != circuit.n_params:
        raise ValueError(
            f"expected {circuit.n_params} parameters, got {thetas.shape[1]}"
        )
    amps = np.zeros((batch, 2**circuit.n_qubits), dtype=np.complex128)
    amps[:, 0] = 1.0
    for gate in circuit.gates:
        if gate.kind in FIXED_KINDS:
            angles = None
        elif gate.binding is not None:
            b = gate.binding
            angles = b.scale * thetas[:, b.param_index] + b.offset
        else:
            angles = gate.angle
        _apply_kernel(amps, gate.kind, gate.qubits, angles, circuit.n_qubits)
    return amps


def prepare_state(circuit: Circuit, theta: np.ndarray) -> StateVector:
    """Prepare the circuit state from |0...0> for one parameter vector."""
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    return StateVector(circuit.n_qubits, prepare_states(circuit, theta[None])[0])


def shift_rule_eligible(circuit: Circuit) -> bool:
    """True iff every parameter drives exactly one gate with scale 1, offset 0.

    The pi/2- and pi-shift identities for gradients, metrics, and their
    derivatives assume the plain exp(-i*theta*P/2) convention; reused or
    rescaled parameters break them.
    """
    counts = [0] * circuit.n_params
    clean = [True] * circuit.n_params
    for gate in circuit.gates:
        if gate.binding is None:
            continue
        b = gate.binding
        counts[b.param_index] += 1
        if b.scale != 1.0 or b.offset != 0.0:
            clean[b.param_index] = False
    return all(c == 1 for c in counts) and all(clean)


def efficient_su2(n_qubits: int) -> Circuit:
    """Hardware-efficient ansatz, one repetition, linear entanglement.

    Layout: RY on every qubit, RZ on every qubit, a CX chain
    (control i, target i+1 for i = 0..n-2), then final RY and RZ layers.
    Parameter indexing is layer-major then qubit-major, all bindings
    scale 1 / offset 0, so n_params = 4 * n_qubits.
    """
    if n_qubits < 2:
        raise ValueError(f"efficient_su2 needs n_qubits >= 2, got {n_qubits}")
    gates: list[GateInstance] = []
    param = 0
    for kind in ("ry", "rz"):
        for q in range(n_qubits):
            gates.append(GateInstance(kind, (q,), binding=ParamBinding(param)))
            param += 1
    for q in range(n_qubits - 1):
        gates.append(GateInstance("cx", (q, q + 1)))
    for kind in ("ry", "rz"):
        for q in range(n_qubits):
            gates.append(GateInstance(kind, (q,), binding=ParamBinding(param)))
            param += 1
    return Circuit(n_qubits, 4 * n_qubits, tuple(gates))


def state_ex1(theta: np.ndarray) -> StateVector:
    """Single-qubit family cos(t0)|0> + exp(2i*t1) sin(t0)|1>."""
    t0, t1 = np.asarray(theta, dtype=np.float64).reshape(2)
    amps = np.array([np.cos(t0), np.exp(2j * t1) * np.sin(t0)], dtype=np.complex128)
    return StateVector(1, amps)


def state_ex2(theta: np.ndarray) -> StateVector:
    """Two-qubit hydrogen-ansatz family from its closed-form amplitudes.

    Basis order |00>, |01>, |10>, |11> with the ket string read as a binary
    index (most-significant symbol first). Built directly from the expanded
    amplitudes rather than a gate decomposition.
    """
    t0, t1, t2 = np.asarray(theta, dtype=np.float64).reshape(3)
    c0, s0 = np.cos(t0), np.sin(t0)
    c1, s1 = np.cos(t1), np.sin(t1)
    c2, s2 = np.cos(t2), np.sin(t2)
    amps = np.array(
        [
            c0 * c1,
            c0 * c2 * s1 - c1 * s0 * s2,
            s0 * s1,
            c1 * c2 * s0 + c0 * s1 * s2,
        ],
        dtype=np.complex128,
    )
    return StateVector(2, amps)

"""Dense statevector simulation for small qubit systems.

Convention: qubit 0 is the least-significant bit of the amplitude index,
so basis state |q_{n-1} ... q_1 q_0> sits at index sum_q q_b * 2^b.
All operations are pure functions; returned arrays are fresh and callers
must not mutate them.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

PAULI_LABELS = ("I", "X", "Y", "Z")

_PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Dense eigensolve feasibility bound for exact_ground_energy.
MAX_DENSE_QUBITS = 12


@dataclass(frozen=True)
class StateVector:
    """Pure n-qubit state as a dense complex amplitude vector of length 2^n."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, "
                f"expected ({2**self.n_qubits},) for {self.n_qubits} qubits"
            )
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis with a real coefficient.

    ``paulis[q]`` is the label acting on qubit q (qubit 0 = least-significant
    bit of the basis index).
    """

    paulis: tuple[str, ...]
    coefficient: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "paulis", tuple(self.paulis))
        for label in self.paulis:
            if label not in PAULI_LABELS:
                raise ValueError(f"unknown Pauli label {label!r}")
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def n_qubits(self) -> int:
        return len(self.paulis)


@dataclass(frozen=True)
class PauliSum:
    """Real-weighted sum of Pauli strings over a common qubit count (Hermitian)."""

    terms: tuple[PauliString, ...]

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("PauliSum needs at least one term")
        n = terms[0].n_qubits
        for t in terms:
            if t.n_qubits != n:
                raise ValueError(
                    f"inconsistent qubit counts in PauliSum: {t.n_qubits} vs {n}"
                )
        object.__setattr__(self, "terms", terms)

    @property
    def n_qubits(self) -> int:
        return self.terms[0].n_qubits


def zero_state(n_qubits: int) -> StateVector:
    """|0...0> on n qubits."""
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def basis_state(n_qubits: int, index: int) -> StateVector:
    """Computational basis state with the given amplitude index."""
    if not 0 <= index < 2**n_qubits:
        raise ValueError(f"basis index {index} out of range for {n_qubits} qubits")
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(n_qubits, amps)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2; symmetric in its arguments."""
    z = inner_product(a, b)
    return z.real * z.real + z.imag * z.imag


def _bits(dim: int, qubit: int) -> np.ndarray:
    return (np.arange(dim) >> qubit) & 1


@lru_cache(maxsize=None)
def _term_action(paulis: tuple[str, ...]) -> tuple[int, np.ndarray]:
    """Action of a Pauli string as (xor mask, per-source-index phases).

    P|j> = phases[j] |j ^ mask>.
    """
    dim = 2 ** len(paulis)
    mask = 0
    phases = np.ones(dim, dtype=np.complex128)
    for q, label in enumerate(paulis):
        if label == "I":
            continue
        bits = _bits(dim, q)
        if label == "X":
            mask |= 1 << q
        elif label == "Y":
            mask |= 1 << q
            phases = phases * np.where(bits == 0, 1j, -1j)
        elif label == "Z":
            phases = phases * (1.0 - 2.0 * bits)
    phases.setflags(write=False)
    return mask, phases


def apply_pauli_string(state: StateVector, term: PauliString) -> StateVector:
    """Apply a Pauli string (including its coefficient) to a state."""
    if term.n_qubits != state.n_qubits:
        raise ValueError(
            f"qubit count mismatch: state {state.n_qubits}, term {term.n_qubits}"
        )
    mask, phases = _term_action(term.paulis)
    idx = np.arange(state.amplitudes.size) ^ mask
    out = term.coefficient * phases[idx] * state.amplitudes[idx]
    return StateVector(state.n_qubits, out)


def expectation(state: StateVector, observable: PauliSum) -> float:
    """Real expectation value <psi|O|psi> of a Hermitian Pauli sum."""
    if observable.n_qubits != state.n_qubits:
        raise ValueError(
            f"qubit count mismatch: state {state.n_qubits}, "
            f"observable {observable.n_qubits}"
        )
    val = _expectation_amps(state.amplitudes[None, :], observable)[0]
    return val


def _expectation_amps(amps: np.ndarray, observable: PauliSum) -> np.ndarray:
    """Expectation values for a (batch, dim) array of amplitude rows."""
    dim = amps.shape[1]
    idx = np.arange(dim)
    acc = np.zeros(amps.shape[0], dtype=np.complex128)
    for term in observable.terms:
        mask, phases = _term_action(term.paulis)
        src = idx ^ mask
        acc += term.coefficient * np.einsum(
            "bk,bk->b", amps.conj(), phases[src] * amps[:, src]
        )
    imag_resid = np.max(np.abs(acc.imag)) if acc.size else 0.0
    assert imag_resid < 1e-10, f"expectation has imaginary residue {imag_resid:.3e}"
    return acc.real.copy()


def dense_matrix(observable: PauliSum) -> np.ndarray:
    """Dense 2^n x 2^n Hermitian matrix of a Pauli sum (small n only)."""
    n = observable.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise ValueError(
            f"dense matrix limited to {MAX_DENSE_QUBITS} qubits, got {n}"
        )
    dim = 2**n
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for term in observable.terms:
        # qubit 0 is the least-significant bit, i.e. the last kron factor
        factors = [_PAULI_MATRICES[term.paulis[q]] for q in reversed(range(n))]
        mat += term.coefficient * reduce(np.kron, factors)
    return mat


def exact_ground_energy(observable: PauliSum) -> tuple[float, StateVector]:
    """Minimum eigenvalue and a unit-norm ground eigenvector by dense eigensolve."""
    n = observable.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise ValueError(
            f"exact_ground_energy limited to {MAX_DENSE_QUBITS} qubits, got {n}"
        )
    eigvals, eigvecs = np.linalg.eigh(dense_matrix(observable))
    ground = eigvecs[:, 0]
    ground = ground / np.linalg.norm(ground)
    return float(eigvals[0]), StateVector(n, ground)

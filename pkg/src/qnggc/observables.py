"""Hamiltonian builders for the three benchmark systems and known spectra."""
from __future__ import annotations

import math

import numpy as np

from .statevector import PauliString, PauliSum, StateVector


def hamiltonian_ex1() -> PauliSum:
    """Single-qubit H = X (dimensionless units); ground energy -1."""
    return PauliSum((PauliString(("X",), 1.0),))


def hamiltonian_h2(alpha: float, beta: float) -> PauliSum:
    """Two-qubit hydrogen reduction alpha*(ZI + IZ) + beta*XX (Hartree).

    Eigenvalues are +-sqrt(4*alpha^2 + beta^2) and +-beta.
    """
    return PauliSum(
        (
            PauliString(("Z", "I"), alpha),
            PauliString(("I", "Z"), alpha),
            PauliString(("X", "X"), beta),
        )
    )


def h2_spectrum(alpha: float, beta: float) -> tuple[float, float, float, float]:
    """Closed-form eigenvalues of the hydrogen Hamiltonian, ascending."""
    root = math.sqrt(4.0 * alpha**2 + beta**2)
    return tuple(sorted((root, beta, -beta, -root)))


def h2_ground_energy(alpha: float, beta: float) -> float:
    """Closed-form ground energy -sqrt(4*alpha^2 + beta^2)."""
    return -math.sqrt(4.0 * alpha**2 + beta**2)


def h2_ground_state(alpha: float, beta: float) -> StateVector:
    """Normalized ground state, proportional to -beta|00> + (2a + sqrt(4a^2+b^2))|11>."""
    if 4.0 * alpha**2 + beta**2 <= 0.0:
        raise ValueError("degenerate case alpha = beta = 0 has no unique ground state")
    root = math.sqrt(4.0 * alpha**2 + beta**2)
    vec = np.zeros(4, dtype=np.complex128)
    vec[0] = -beta
    vec[3] = 2.0 * alpha + root
    vec /= np.linalg.norm(vec)
    return StateVector(2, vec)


def hamiltonian_tfim(n_qubits: int, h: float) -> PauliSum:
    """Transverse-field Ising chain -sum_i Z_i Z_{i+1} - h sum_i X_i.

    Open boundary conditions: n-1 ZZ bonds with coefficient -1 and n X terms
    with coefficient -h. The spin coupling is fixed to J = 1, so energies and
    h are dimensionless.
    """
    if n_qubits < 2:
        raise ValueError(f"TFIM chain needs n_qubits >= 2, got {n_qubits}")
    terms = []
    for i in range(n_qubits - 1):
        labels = ["I"] * n_qubits
        labels[i] = "Z"
        labels[i + 1] = "Z"
        terms.append(PauliString(tuple(labels), -1.0))
    for i in range(n_qubits):
        labels = ["I"] * n_qubits
        labels[i] = "X"
        terms.append(PauliString(tuple(labels), -h))
    return PauliSum(tuple(terms))

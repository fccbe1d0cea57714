"""Tests for dense state simulation, Pauli expectations, and the eigensolver."""
import numpy as np
import pytest

from qnggc import (
    PauliString,
    PauliSum,
    StateVector,
    basis_state,
    exact_ground_energy,
    expectation,
    fidelity,
    hamiltonian_ex1,
    hamiltonian_h2,
    hamiltonian_tfim,
    inner_product,
    zero_state,
)
from qnggc.circuits import Circuit, GateInstance, apply_gate, prepare_state
from qnggc.statevector import dense_matrix

# Ground energy of the 4-qubit h=10 transverse-field chain, frozen from the
# dense eigensolve before any optimizer work depended on it.
TFIM_4_H10_GROUND = -40.07501558548144


def random_state(rng, n):
    amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(n, amps / np.linalg.norm(amps))


class TestApplyGate:
    def test_ry_zero_angle_is_identity(self):
        state = basis_state(1, 1)
        out = apply_gate(state, GateInstance("ry", (0,), angle=0.0))
        assert np.array_equal(out.amplitudes, state.amplitudes)

    def test_x_flips_basis_state(self):
        out = apply_gate(zero_state(1), GateInstance("x", (0,)))
        assert np.allclose(out.amplitudes, [0, 1])

    def test_ry_half_pi_on_zero(self):
        out = apply_gate(zero_state(1), GateInstance("ry", (0,), angle=np.pi / 2))
        assert np.allclose(out.amplitudes, [np.cos(np.pi / 4), np.sin(np.pi / 4)], atol=1e-15)

    def test_rx_matches_matrix(self):
        theta = 0.7321
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        out = apply_gate(zero_state(1), GateInstance("rx", (0,), angle=theta))
        assert np.allclose(out.amplitudes, [c, -1j * s], atol=1e-15)

    def test_rz_applies_phases(self):
        plus = StateVector(1, np.array([1, 1]) / np.sqrt(2))
        theta = 1.234
        out = apply_gate(plus, GateInstance("rz", (0,), angle=theta))
        expected = np.array([np.exp(-1j * theta / 2), np.exp(1j * theta / 2)]) / np.sqrt(2)
        assert np.allclose(out.amplitudes, expected, atol=1e-15)

    def test_cx_truth_table(self):
        # qubit 0 is the least-significant bit; control=0, target=1
        for src, dst in [(0b00, 0b00), (0b01, 0b11), (0b10, 0b10), (0b11, 0b01)]:
            out = apply_gate(basis_state(2, src), GateInstance("cx", (0, 1)))
            assert np.allclose(out.amplitudes, basis_state(2, dst).amplitudes)

    def test_cry_acts_only_when_control_set(self):
        gate = GateInstance("cry", (0, 1), angle=np.pi / 2)
        untouched = apply_gate(basis_state(2, 0b00), gate)
        assert np.allclose(untouched.amplitudes, basis_state(2, 0b00).amplitudes)
        rotated = apply_gate(basis_state(2, 0b01), gate)
        expected = np.zeros(4)
        expected[0b01] = np.cos(np.pi / 4)
        expected[0b11] = np.sin(np.pi / 4)
        assert np.allclose(rotated.amplitudes, expected, atol=1e-15)

    def test_crx_control_on_higher_qubit(self):
        gate = GateInstance("crx", (1, 0), angle=np.pi)
        out = apply_gate(basis_state(2, 0b10), gate)
        # RX(pi) = -i X on the target (qubit 0)
        expected = np.zeros(4, dtype=complex)
        expected[0b11] = -1j
        assert np.allclose(out.amplitudes, expected, atol=1e-15)

    def test_qubit_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            apply_gate(zero_state(1), GateInstance("ry", (1,), angle=0.1))

    def test_unknown_gate_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown gate kind"):
            GateInstance("hadamard", (0,))

    def test_repeated_qubits_rejected(self):
        with pytest.raises(ValueError, match="repeated"):
            GateInstance("cx", (1, 1))


class TestNormPreservation:
    def test_random_circuits_preserve_norm(self):
        rng = np.random.default_rng(11)
        kinds_1q = ["rx", "ry", "rz"]
        for _ in range(20):
            n = int(rng.integers(1, 8))
            gates = []
            for _ in range(int(rng.integers(1, 51))):
                if n >= 2 and rng.random() < 0.3:
                    q = int(rng.integers(0, n - 1))
                    kind = rng.choice(["cx", "cry", "crx"])
                    angle = None if kind == "cx" else float(rng.uniform(-np.pi, np.pi))
                    gates.append(GateInstance(kind, (q, q + 1), angle=angle))
                elif rng.random() < 0.15:
                    gates.append(GateInstance("x", (int(rng.integers(0, n)),)))
                else:
                    kind = str(rng.choice(kinds_1q))
                    gates.append(
                        GateInstance(kind, (int(rng.integers(0, n)),), angle=float(rng.uniform(-np.pi, np.pi)))
                    )
            state = prepare_state(Circuit(n, 0, tuple(gates)), np.zeros(0))
            assert abs(state.norm() - 1.0) < 1e-12


class TestInnerProductAndFidelity:
    def test_self_overlap_is_one(self):
        state = random_state(np.random.default_rng(0), 3)
        assert inner_product(state, state) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_basis_states(self):
        assert inner_product(basis_state(1, 0), basis_state(1, 1)) == 0.0

    def test_ry_overlap(self):
        rotated = apply_gate(zero_state(1), GateInstance("ry", (0,), angle=np.pi / 2))
        assert inner_product(zero_state(1), rotated) == pytest.approx(np.cos(np.pi / 4), abs=1e-15)

    def test_conjugate_linear_in_first_argument(self):
        rng = np.random.default_rng(5)
        a, b = random_state(rng, 2), random_state(rng, 2)
        assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)), abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            inner_product(zero_state(1), zero_state(2))

    def test_fidelity_examples(self):
        rotated = apply_gate(zero_state(1), GateInstance("ry", (0,), angle=np.pi / 2))
        assert fidelity(rotated, rotated) == pytest.approx(1.0, abs=1e-12)
        assert fidelity(basis_state(1, 0), basis_state(1, 1)) == 0.0
        assert fidelity(zero_state(1), rotated) == pytest.approx(0.5, abs=1e-12)

    def test_fidelity_symmetric_exactly(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            a, b = random_state(rng, 3), random_state(rng, 3)
            assert fidelity(a, b) == fidelity(b, a)


class TestExpectation:
    def test_pauli_basics(self):
        assert expectation(zero_state(1), hamiltonian_ex1()) == pytest.approx(0.0, abs=1e-15)
        z = PauliSum((PauliString(("Z",), 1.0),))
        assert expectation(zero_state(1), z) == pytest.approx(1.0)
        plus = StateVector(1, np.array([1, 1]) / np.sqrt(2))
        assert expectation(plus, hamiltonian_ex1()) == pytest.approx(1.0)

    def test_cost_of_single_qubit_family(self):
        from qnggc import state_ex1

        value = expectation(state_ex1([np.pi / 12, np.pi / 12]), hamiltonian_ex1())
        assert value == pytest.approx(np.sin(np.pi / 6) * np.cos(np.pi / 6), abs=1e-12)

    def test_linear_in_coefficients(self):
        rng = np.random.default_rng(3)
        state = random_state(rng, 3)
        for _ in range(10):
            c1, c2 = rng.normal(size=2)
            t1 = PauliString(("X", "Z", "I"), c1)
            t2 = PauliString(("Y", "I", "X"), c2)
            combined = expectation(state, PauliSum((t1, t2)))
            separate = expectation(state, PauliSum((t1,))) + expectation(state, PauliSum((t2,)))
            assert combined == pytest.approx(separate, abs=1e-12)

    def test_matches_dense_matrix(self):
        rng = np.random.default_rng(9)
        state = random_state(rng, 3)
        obs = hamiltonian_tfim(3, 2.5)
        dense = np.real(np.vdot(state.amplitudes, dense_matrix(obs) @ state.amplitudes))
        assert expectation(state, obs) == pytest.approx(dense, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            expectation(zero_state(2), hamiltonian_ex1())


class TestExactGroundEnergy:
    def test_single_qubit_x(self):
        energy, _ = exact_ground_energy(hamiltonian_ex1())
        assert energy == pytest.approx(-1.0, abs=1e-12)

    def test_hydrogen_target(self):
        energy, _ = exact_ground_energy(hamiltonian_h2(0.4, 0.2))
        assert energy == pytest.approx(-np.sqrt(0.68), abs=1e-12)

    def test_tfim_fixture(self):
        energy, ground = exact_ground_energy(hamiltonian_tfim(4, 10.0))
        assert energy == pytest.approx(TFIM_4_H10_GROUND, abs=1e-8)
        assert ground.norm() == pytest.approx(1.0, abs=1e-12)
        assert expectation(ground, hamiltonian_tfim(4, 10.0)) == pytest.approx(energy, abs=1e-9)

    def test_variational_bound(self):
        rng = np.random.default_rng(21)
        obs = hamiltonian_tfim(3, 1.3)
        e0, _ = exact_ground_energy(obs)
        for _ in range(100):
            assert e0 <= expectation(random_state(rng, 3), obs) + 1e-10

    def test_qubit_bound(self):
        labels = tuple(["Z"] * 13)
        with pytest.raises(ValueError, match="limited"):
            exact_ground_energy(PauliSum((PauliString(labels, 1.0),)))


class TestValidation:
    def test_amplitude_length_checked(self):
        with pytest.raises(ValueError, match="shape"):
            StateVector(2, np.zeros(3, dtype=complex))

    def test_pauli_label_checked(self):
        with pytest.raises(ValueError, match="unknown Pauli"):
            PauliString(("Q",), 1.0)

    def test_mixed_qubit_counts_rejected(self):
        with pytest.raises(ValueError, match="inconsistent"):
            PauliSum((PauliString(("Z",), 1.0), PauliString(("Z", "Z"), 1.0)))

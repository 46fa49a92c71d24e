"""Unit tests for the dense state-vector layer."""

import numpy as np
import pytest

from teleportsim.errors import (
    DegenerateOutcome,
    InvalidArgument,
    InvalidBasis,
    InvalidKrausSet,
    InvalidUnitary,
)
from teleportsim.protocols import SequenceRng
from teleportsim.statevec import (
    ATOL_ALGEBRA,
    DensityMatrix,
    KrausSet,
    StateVector,
    UnitaryMatrix,
    apply_unitary,
    basis_state,
    computational_basis,
    fidelity_pure,
    haar_random_state,
    kraus_apply,
    outcome_distribution,
    permute_qubits,
    project_onto,
    projective_distribution,
    projective_measure,
    pure_subsystem_state,
    reduced_density,
    state_fidelity,
    tensor_product,
)

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


class TestStateVector:
    def test_accepts_normalized_amplitudes(self):
        s = StateVector([1 / np.sqrt(2), 0, 0, 1j / np.sqrt(2)])
        assert s.num_qubits == 2
        assert s.dim == 4

    def test_rejects_unnormalized(self):
        with pytest.raises(InvalidArgument):
            StateVector([1.0, 1.0])

    def test_rejects_non_power_of_two(self):
        with pytest.raises(InvalidArgument):
            StateVector([1.0, 0.0, 0.0])

    def test_amplitudes_are_read_only(self):
        s = basis_state(1, 0)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 0.5

    def test_overlap(self):
        plus = StateVector([1, 1] / np.sqrt(2))
        minus = StateVector([1, -1] / np.sqrt(2))
        assert abs(plus.overlap(minus)) < ATOL_ALGEBRA
        assert abs(plus.overlap(plus) - 1) < ATOL_ALGEBRA

    def test_haar_random_is_normalized(self, rng):
        for _ in range(5):
            s = haar_random_state(3, rng)
            assert abs(np.linalg.norm(s.amplitudes) - 1) < 1e-12

    def test_tensor_axis_order(self):
        s = StateVector([0, 1, 0, 0])  # |01>: first qubit 0, second qubit 1
        t = s.tensor()
        assert t[0, 1] == 1.0


class TestUnitaryMatrix:
    def test_accepts_unitary(self):
        u = UnitaryMatrix(_H)
        assert u.num_qubits == 1

    def test_rejects_non_unitary(self):
        with pytest.raises(InvalidUnitary):
            UnitaryMatrix([[1, 0], [0, 1.000001]])

    def test_rejects_odd_dimension(self):
        with pytest.raises(InvalidUnitary):
            UnitaryMatrix(np.eye(3))


class TestKrausSet:
    def test_accepts_complete_set(self):
        half = np.sqrt(0.5)
        ops = [half * np.eye(2), half * _X]
        ks = KrausSet(ops, labels=("a", "b"))
        assert len(ks) == 2

    def test_rejects_incomplete_set(self):
        with pytest.raises(InvalidKrausSet):
            KrausSet([0.5 * np.eye(2)], labels=("only",))

    def test_rejects_label_mismatch(self):
        half = np.sqrt(0.5)
        with pytest.raises(InvalidKrausSet):
            KrausSet([half * np.eye(2), half * _X], labels=("one",))


class TestDensityMatrix:
    def test_pure_state_density(self):
        rho = basis_state(1, 1).density()
        assert abs(rho.purity() - 1) < ATOL_ALGEBRA

    def test_rejects_wrong_trace(self):
        with pytest.raises(InvalidArgument):
            DensityMatrix(2 * np.eye(2))

    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidArgument):
            DensityMatrix([[0.5, 0.5], [-0.5, 0.5]])

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(InvalidArgument):
            DensityMatrix([[1.5, 0], [0, -0.5]])


class TestApplyUnitary:
    def test_first_target_is_most_significant(self):
        # X on qubit 0 of |00> flips the high bit: |00> -> |10> (index 2).
        s = apply_unitary(basis_state(2, 0), UnitaryMatrix(_X), (0,))
        assert abs(s.amplitudes[2] - 1) < ATOL_ALGEBRA

    def test_two_qubit_target_order(self):
        cnot = UnitaryMatrix(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]
        )
        # Control on qubit 1, target on qubit 0 via targets=(1, 0).
        s = apply_unitary(basis_state(2, 0b01), cnot, (1, 0))
        assert abs(s.amplitudes[0b11] - 1) < ATOL_ALGEBRA

    def test_rejects_duplicate_targets(self):
        with pytest.raises(InvalidArgument):
            apply_unitary(basis_state(2, 0), UnitaryMatrix(np.eye(4)), (0, 0))

    def test_permute_roundtrip(self, rng):
        s = haar_random_state(3, rng)
        back = permute_qubits(permute_qubits(s, (2, 0, 1)), (1, 2, 0))
        assert np.allclose(back.amplitudes, s.amplitudes, atol=1e-12)


class TestTensorProduct:
    def test_order(self):
        joined = tensor_product([basis_state(1, 1), basis_state(1, 0)])
        assert abs(joined.amplitudes[0b10] - 1) < ATOL_ALGEBRA

    def test_register_cap(self):
        with pytest.raises(InvalidArgument):
            tensor_product([basis_state(3, 0), basis_state(3, 0)])


class TestProjectiveMeasurement:
    def test_distribution_sums_to_one(self, rng):
        s = haar_random_state(2, rng)
        probs = projective_distribution(s, computational_basis(1), (0,))
        assert abs(probs.sum() - 1) < ATOL_ALGEBRA

    def test_sampling_respects_cumulative_boundaries(self):
        plus = StateVector([1, 1] / np.sqrt(2))
        basis = computational_basis(1)
        out0 = projective_measure(plus, basis, (0,), SequenceRng([0.49]))
        out1 = projective_measure(plus, basis, (0,), SequenceRng([0.51]))
        assert out0.outcome == 0
        assert out1.outcome == 1

    def test_projection_renormalizes(self):
        s = StateVector([0.6, 0.0, 0.0, 0.8])
        prob, post = project_onto(s, computational_basis(1), 1, (0,))
        assert abs(prob - 0.64) < ATOL_ALGEBRA
        assert abs(np.linalg.norm(post.amplitudes) - 1) < 1e-12
        assert abs(post.amplitudes[0b11] - 1) < ATOL_ALGEBRA

    def test_vanishing_outcome_rejected(self):
        with pytest.raises(DegenerateOutcome):
            project_onto(basis_state(1, 0), computational_basis(1), 1, (0,))

    def test_incomplete_basis_rejected(self):
        with pytest.raises(InvalidBasis):
            projective_distribution(
                basis_state(1, 0), (basis_state(1, 0),), (0,)
            )

    def test_non_orthonormal_basis_rejected(self):
        skew = (StateVector([1, 0]), StateVector([1, 1] / np.sqrt(2)))
        with pytest.raises(InvalidBasis):
            projective_distribution(basis_state(1, 0), skew, (0,))


class TestGeneralizedMeasurement:
    def _flip_coin(self):
        half = np.sqrt(0.5)
        return KrausSet([half * np.eye(2), half * _X], labels=("keep", "flip"))

    def test_distribution(self):
        probs = outcome_distribution(basis_state(1, 0), self._flip_coin(), (0,))
        assert np.allclose(probs, [0.5, 0.5], atol=1e-12)

    def test_kraus_apply_renormalizes(self):
        prob, post = kraus_apply(basis_state(1, 0), self._flip_coin(), 1, (0,))
        assert abs(prob - 0.5) < ATOL_ALGEBRA
        assert abs(post.amplitudes[1] - 1) < ATOL_ALGEBRA

    def test_outcome_range_checked(self):
        with pytest.raises(InvalidArgument):
            kraus_apply(basis_state(1, 0), self._flip_coin(), 5, (0,))


class TestReducedStates:
    def test_product_state_reduction_is_pure(self):
        joined = tensor_product([basis_state(1, 1), StateVector([1, 1] / np.sqrt(2))])
        rho = reduced_density(joined, (1,))
        assert abs(rho.purity() - 1) < 1e-12

    def test_entangled_reduction_is_mixed(self):
        bell = StateVector([1, 0, 0, 1] / np.sqrt(2))
        rho = reduced_density(bell, (0,))
        assert abs(rho.purity() - 0.5) < 1e-12

    def test_pure_subsystem_extraction(self, rng):
        target = haar_random_state(1, rng)
        joined = tensor_product([haar_random_state(2, rng), target])
        extracted = pure_subsystem_state(joined, 2)
        assert abs(abs(extracted.overlap(target)) - 1) < 1e-10

    def test_pure_subsystem_rejects_entangled_qubit(self):
        bell = StateVector([1, 0, 0, 1] / np.sqrt(2))
        with pytest.raises(InvalidArgument):
            pure_subsystem_state(bell, 0)


class TestFidelity:
    def test_pure_fidelity_matches_overlap(self, rng):
        a = haar_random_state(1, rng)
        b = haar_random_state(1, rng)
        direct = abs(a.overlap(b)) ** 2
        assert abs(state_fidelity(a, b) - direct) < 1e-12
        assert abs(fidelity_pure(a.density(), b) - direct) < 1e-10

    def test_fidelity_clipped_to_unit_interval(self, rng):
        s = haar_random_state(1, rng)
        assert 0.0 <= fidelity_pure(s.density(), s) <= 1.0

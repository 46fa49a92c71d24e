"""Dense statevector backend for few-qubit registers.

Conventions used throughout the package:

* Qubit ordering is big-endian: the first listed qubit owns the most
  significant bit of the amplitude index, so ``|q0 q1 ... q_{n-1}>`` maps
  to index ``q0*2^(n-1) + ... + q_{n-1}``.
* Registers are tiny (1..5 qubits); everything is dense complex128 and
  correctness beats speed here.  The Monte Carlo layer has its own
  compiled kernels.
* Algebraic identities (unitarity, completeness) are enforced at 1e-12,
  state-level checks at 1e-10, and outcomes with probability below 1e-14
  are treated as degenerate: they are never sampled and have no
  post-measurement state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateOutcome,
    InvalidArgument,
    InvalidBasis,
    InvalidKrausSet,
    InvalidUnitary,
)

ATOL_ALGEBRA = 1e-12
ATOL_STATE = 1e-10
PROB_FLOOR = 1e-14

MAX_QUBITS = 5


def _as_complex_array(values, shape_name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.complex128)
    if arr.ndim == 0:
        raise InvalidArgument(f"{shape_name} must be an array, got a scalar")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state of ``num_qubits`` qubits, stored as 2**n amplitudes."""

    amplitudes: np.ndarray
    num_qubits: int

    def __init__(self, amplitudes, num_qubits: int | None = None):
        arr = _as_complex_array(amplitudes, "amplitudes").reshape(-1)
        n = int(np.log2(arr.size)) if num_qubits is None else int(num_qubits)
        if arr.size != 2**n or not (1 <= n <= MAX_QUBITS):
            raise InvalidArgument(
                f"amplitude vector of length {arr.size} does not describe "
                f"a register of 1..{MAX_QUBITS} qubits"
            )
        norm = np.linalg.norm(arr)
        if abs(norm - 1.0) > ATOL_STATE:
            raise InvalidArgument(f"state norm {norm!r} is not 1 within {ATOL_STATE}")
        object.__setattr__(self, "amplitudes", _freeze(arr))
        object.__setattr__(self, "num_qubits", n)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per qubit (axis 0 = first qubit)."""
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def overlap(self, other: "StateVector") -> complex:
        """<self|other>."""
        if other.dim != self.dim:
            raise InvalidArgument("overlap requires equal register sizes")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def density(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(np.outer(a, a.conj()))


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    """Square matrix acting on k qubits, checked unitary at construction."""

    matrix: np.ndarray

    def __init__(self, matrix):
        arr = _as_complex_array(matrix, "matrix")
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidUnitary(f"expected a square matrix, got shape {arr.shape}")
        dim = arr.shape[0]
        if dim & (dim - 1) or dim < 2:
            raise InvalidUnitary(f"dimension {dim} is not a power of two")
        dev = np.max(np.abs(arr.conj().T @ arr - np.eye(dim)))
        if dev > ATOL_ALGEBRA:
            raise InvalidUnitary(
                f"matrix deviates from unitarity by {dev:.3e} (> {ATOL_ALGEBRA})"
            )
        object.__setattr__(self, "matrix", _freeze(arr))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.dim.bit_length() - 1


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Labelled measurement operators satisfying sum(M_i^dag M_i) = I."""

    operators: np.ndarray  # shape (k, dim, dim)
    labels: tuple[str, ...]

    def __init__(self, operators, labels: Sequence[str]):
        ops = [_as_complex_array(op, "operator") for op in operators]
        if not ops:
            raise InvalidKrausSet("a measurement needs at least one operator")
        dim = ops[0].shape[0]
        for op in ops:
            if op.shape != (dim, dim):
                raise InvalidKrausSet("operators must share one square shape")
        stack = np.stack(ops)
        total = np.einsum("kij,kil->jl", stack.conj(), stack)
        dev = np.max(np.abs(total - np.eye(dim)))
        if dev > ATOL_ALGEBRA:
            raise InvalidKrausSet(
                f"completeness relation violated by {dev:.3e} (> {ATOL_ALGEBRA})"
            )
        names = tuple(str(x) for x in labels)
        if len(names) != len(ops):
            raise InvalidKrausSet("need exactly one label per operator")
        object.__setattr__(self, "operators", _freeze(stack))
        object.__setattr__(self, "labels", names)

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    def __len__(self) -> int:
        return self.operators.shape[0]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite operator."""

    matrix: np.ndarray

    def __init__(self, matrix):
        arr = _as_complex_array(matrix, "density matrix")
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidArgument(f"expected a square matrix, got shape {arr.shape}")
        if np.max(np.abs(arr - arr.conj().T)) > ATOL_ALGEBRA:
            raise InvalidArgument("density matrix is not hermitian")
        if abs(np.trace(arr).real - 1.0) > ATOL_STATE:
            raise InvalidArgument(f"trace {np.trace(arr)!r} is not 1")
        if np.min(np.linalg.eigvalsh(arr)) < -ATOL_STATE:
            raise InvalidArgument("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", _freeze(arr))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


class MeasurementResult(NamedTuple):
    outcome: int
    probability: float
    state: StateVector


# ---------------------------------------------------------------------------
# construction helpers


def basis_state(num_qubits: int, index: int) -> StateVector:
    """Computational basis state |index> on the given register size."""
    dim = 2**num_qubits
    if not 0 <= index < dim:
        raise InvalidArgument(f"basis index {index} out of range for {num_qubits} qubits")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(amps)


def computational_basis(num_qubits: int) -> tuple[StateVector, ...]:
    return tuple(basis_state(num_qubits, i) for i in range(2**num_qubits))


def haar_random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """Uniformly random pure state (normalized complex gaussian vector)."""
    dim = 2**num_qubits
    raw = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(raw / np.linalg.norm(raw))


# ---------------------------------------------------------------------------
# register arithmetic


def tensor_product(states: Sequence[StateVector]) -> StateVector:
    """Join registers; the first state owns the most significant qubits."""
    if not states:
        raise InvalidArgument("tensor_product needs at least one state")
    amps = states[0].amplitudes
    total = states[0].num_qubits
    for s in states[1:]:
        amps = np.kron(amps, s.amplitudes)
        total += s.num_qubits
    if total > MAX_QUBITS:
        raise InvalidArgument(f"joined register of {total} qubits exceeds {MAX_QUBITS}")
    return StateVector(amps, total)


def _check_targets(num_qubits: int, targets: Sequence[int]) -> tuple[int, ...]:
    t = tuple(int(x) for x in targets)
    if not t:
        raise InvalidArgument("need at least one target qubit")
    if len(set(t)) != len(t):
        raise InvalidArgument(f"target qubits must be distinct, got {t}")
    if any(x < 0 or x >= num_qubits for x in t):
        raise InvalidArgument(f"targets {t} out of range for {num_qubits} qubits")
    return t


def _targets_front(state: StateVector, targets: tuple[int, ...]) -> np.ndarray:
    """Amplitudes as a (2**k, rest) matrix with target qubits leading.

    Row index runs over the targets in listed order, first target most
    significant, matching the operator/basis convention.
    """
    n = state.num_qubits
    rest = [q for q in range(n) if q not in targets]
    moved = np.transpose(state.tensor(), targets + tuple(rest))
    return moved.reshape(2 ** len(targets), -1), rest


def _targets_back(mat: np.ndarray, targets: tuple[int, ...], rest: list[int], n: int) -> np.ndarray:
    shaped = mat.reshape((2,) * n)
    inverse = np.argsort(np.array(targets + tuple(rest)))
    return np.transpose(shaped, inverse).reshape(-1)


def apply_unitary(state: StateVector, u: UnitaryMatrix, targets: Sequence[int]) -> StateVector:
    """Apply ``u`` to the listed qubits (first target = most significant)."""
    t = _check_targets(state.num_qubits, targets)
    if u.dim != 2 ** len(t):
        raise InvalidArgument(
            f"{u.dim}-dimensional operator does not fit {len(t)} target qubits"
        )
    mat, rest = _targets_front(state, t)
    out = u.matrix @ mat
    return StateVector(_targets_back(out, t, rest, state.num_qubits), state.num_qubits)


def permute_qubits(state: StateVector, order: Sequence[int]) -> StateVector:
    """Reorder the register so new qubit j is old qubit ``order[j]``."""
    t = tuple(int(x) for x in order)
    if sorted(t) != list(range(state.num_qubits)):
        raise InvalidArgument(f"{t} is not a permutation of the register")
    return StateVector(np.transpose(state.tensor(), t).reshape(-1), state.num_qubits)


# ---------------------------------------------------------------------------
# measurement


def _basis_matrix(basis: Sequence[StateVector], dim: int) -> np.ndarray:
    if len(basis) != dim:
        raise InvalidBasis(f"basis of {len(basis)} states cannot span dimension {dim}")
    rows = np.stack([b.amplitudes for b in basis])
    if rows.shape != (dim, dim):
        raise InvalidBasis("basis states do not match the measured subsystem")
    gram = rows.conj() @ rows.T
    dev = np.max(np.abs(gram - np.eye(dim)))
    if dev > ATOL_STATE:
        raise InvalidBasis(f"basis is not orthonormal (deviation {dev:.3e})")
    return rows


def _sample_index(probs: np.ndarray, rng) -> int:
    """Draw an index from ``probs`` with one uniform variate.

    Cumulative left-to-right scan; outcomes with probability below
    PROB_FLOOR can never be selected.
    """
    u = float(rng.random())
    acc = 0.0
    last_live = None
    for i, p in enumerate(probs):
        if p > PROB_FLOOR:
            last_live = i
        acc += float(p)
        if u < acc and p > PROB_FLOOR:
            return i
    if last_live is None:
        raise DegenerateOutcome("all outcomes have vanishing probability")
    return last_live


def projective_distribution(
    state: StateVector, basis: Sequence[StateVector], targets: Sequence[int]
) -> np.ndarray:
    """Born probabilities for measuring ``targets`` in ``basis``."""
    t = _check_targets(state.num_qubits, targets)
    rows = _basis_matrix(basis, 2 ** len(t))
    mat, _ = _targets_front(state, t)
    coeff = rows.conj() @ mat
    return np.sum(np.abs(coeff) ** 2, axis=1)


def project_onto(
    state: StateVector,
    basis: Sequence[StateVector],
    outcome: int,
    targets: Sequence[int],
) -> tuple[float, StateVector]:
    """Deterministically collapse ``targets`` onto one basis outcome.

    Returns the exact Born probability and the renormalized
    post-measurement state (measured qubits kept, collapsed onto the
    outcome vector).  Raises DegenerateOutcome below the probability
    floor.
    """
    t = _check_targets(state.num_qubits, targets)
    dim = 2 ** len(t)
    rows = _basis_matrix(basis, dim)
    if not 0 <= outcome < dim:
        raise InvalidArgument(f"outcome {outcome} out of range for basis of {dim}")
    mat, rest = _targets_front(state, t)
    coeff = rows[outcome].conj() @ mat
    prob = float(np.sum(np.abs(coeff) ** 2))
    if prob < PROB_FLOOR:
        raise DegenerateOutcome(
            f"outcome {outcome} has probability {prob:.3e} below {PROB_FLOOR}"
        )
    post = np.outer(rows[outcome], coeff / np.sqrt(prob))
    return prob, StateVector(
        _targets_back(post, t, rest, state.num_qubits), state.num_qubits
    )


def projective_measure(
    state: StateVector,
    basis: Sequence[StateVector],
    targets: Sequence[int],
    rng,
) -> MeasurementResult:
    """Sample one projective outcome and collapse the register."""
    probs = projective_distribution(state, basis, targets)
    k = _sample_index(probs, rng)
    prob, post = project_onto(state, basis, k, targets)
    return MeasurementResult(k, prob, post)


def outcome_distribution(
    state: StateVector, kraus: KrausSet, targets: Sequence[int]
) -> np.ndarray:
    """Probabilities p_i = ||M_i psi||^2 for a generalized measurement."""
    t = _check_targets(state.num_qubits, targets)
    if kraus.dim != 2 ** len(t):
        raise InvalidArgument(
            f"{kraus.dim}-dimensional operators do not fit {len(t)} target qubits"
        )
    mat, _ = _targets_front(state, t)
    branch = np.einsum("kij,jr->kir", kraus.operators, mat)
    probs = np.sum(np.abs(branch) ** 2, axis=(1, 2))
    total = float(np.sum(probs))
    if abs(total - 1.0) > ATOL_STATE:
        raise InvalidKrausSet(f"outcome probabilities sum to {total!r}, not 1")
    return probs


def kraus_apply(
    state: StateVector, kraus: KrausSet, outcome: int, targets: Sequence[int]
) -> tuple[float, StateVector]:
    """Apply one measurement operator and renormalize.

    Deterministic companion of generalized_measure, used by branch
    enumeration.  Raises DegenerateOutcome below the probability floor.
    """
    t = _check_targets(state.num_qubits, targets)
    if not 0 <= outcome < len(kraus):
        raise InvalidArgument(f"outcome {outcome} out of range for {len(kraus)} operators")
    mat, rest = _targets_front(state, t)
    branch = kraus.operators[outcome] @ mat
    prob = float(np.sum(np.abs(branch) ** 2))
    if prob < PROB_FLOOR:
        raise DegenerateOutcome(
            f"operator {kraus.labels[outcome]} has probability {prob:.3e}"
        )
    post = branch / np.sqrt(prob)
    return prob, StateVector(
        _targets_back(post, t, rest, state.num_qubits), state.num_qubits
    )


def generalized_measure(
    state: StateVector, kraus: KrausSet, targets: Sequence[int], rng
) -> MeasurementResult:
    """Sample one operator from a labelled Kraus set and apply it."""
    probs = outcome_distribution(state, kraus, targets)
    k = _sample_index(probs, rng)
    prob, post = kraus_apply(state, kraus, k, targets)
    return MeasurementResult(k, prob, post)


# ---------------------------------------------------------------------------
# reduced states and fidelity


def reduced_density(state: StateVector, keep: Sequence[int]) -> DensityMatrix:
    """Partial trace onto ``keep`` (listed order, first = most significant)."""
    t = _check_targets(state.num_qubits, keep)
    mat, _ = _targets_front(state, t)
    return DensityMatrix(mat @ mat.conj().T)


def pure_subsystem_state(state: StateVector, qubit: int) -> StateVector:
    """Extract one qubit that is in a product state with the rest.

    Raises InvalidArgument if the qubit is entangled with the remainder
    (reduced purity below 1 - 1e-10).  The returned global phase is the
    phase of the dominant environment component, which callers must not
    rely on.
    """
    rho = reduced_density(state, (qubit,))
    if abs(rho.purity() - 1.0) > ATOL_STATE:
        raise InvalidArgument(
            f"qubit {qubit} is entangled with the rest of the register "
            f"(purity {rho.purity():.6f})"
        )
    t = (int(qubit),)
    mat, _ = _targets_front(state, t)  # shape (2, rest)
    cols = np.sum(np.abs(mat) ** 2, axis=0)
    j = int(np.argmax(cols))
    vec = mat[:, j]
    return StateVector(vec / np.linalg.norm(vec))


def fidelity_pure(rho: DensityMatrix, target: StateVector) -> float:
    """<target| rho |target>, clipped into [0, 1]."""
    if rho.dim != target.dim:
        raise InvalidArgument("fidelity requires matching dimensions")
    v = target.amplitudes
    val = float(np.real(v.conj() @ rho.matrix @ v))
    return float(min(1.0, max(0.0, val)))


def state_fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 for two pure states."""
    return float(min(1.0, abs(a.overlap(b)) ** 2))

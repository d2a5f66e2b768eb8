"""Dense state-vector kernel for small qubit registers.

Basis indices are little-endian: qubit 0 is the least significant bit, so the
amplitude of ``|q_{n-1} ... q_1 q_0>`` sits at ``sum(q_k << k)``.  Every
operation returns a new :class:`StateVector`; inputs are never mutated.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .constants import INPUT_NORM_TOL, UNITARY_TOL
from .errors import ValidationError

MAX_QUBITS = 10
# Born probabilities below this are treated as an impossible outcome.
ZERO_PROBABILITY = 1e-14

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class Axis:
    """Unit Bloch vector selecting the Pauli operator ``n . (X, Y, Z)``."""

    nx: float
    ny: float
    nz: float

    def __post_init__(self):
        norm2 = self.nx**2 + self.ny**2 + self.nz**2
        if not np.isfinite(norm2) or abs(norm2 - 1.0) > UNITARY_TOL:
            raise ValidationError(
                f"axis must be a unit vector, got |n|^2 = {norm2!r}")

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "Axis":
        """Build an axis from any nonzero 3-vector by normalizing it."""
        v = np.asarray(v, dtype=float)
        if v.shape != (3,):
            raise ValidationError(f"axis needs 3 components, got shape {v.shape}")
        n = np.linalg.norm(v)
        if n == 0 or not np.isfinite(n):
            raise ValidationError("axis vector must be nonzero and finite")
        v = v / n
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.nx, self.ny, self.nz])

    def __str__(self):
        return f"({self.nx:.9g},{self.ny:.9g},{self.nz:.9g})"


AXIS_X = Axis(1.0, 0.0, 0.0)
AXIS_Y = Axis(0.0, 1.0, 0.0)
AXIS_Z = Axis(0.0, 0.0, 1.0)


def _frozen(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


@lru_cache(maxsize=256)
def _pauli_cached(axis: Axis) -> np.ndarray:
    return _frozen(axis.nx * X + axis.ny * Y + axis.nz * Z)


def pauli_matrix(axis: Axis) -> np.ndarray:
    """Return ``nx X + ny Y + nz Z`` (read-only array)."""
    if not isinstance(axis, Axis):
        axis = Axis.from_vector(axis)
    return _pauli_cached(axis)


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitudes of an ``num_qubits`` register."""

    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.num_qubits
        if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
            raise ValidationError(f"num_qubits must be in 1..{MAX_QUBITS}, got {n!r}")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 2**n:
            raise ValidationError(
                f"expected {2**n} amplitudes for {n} qubits, got {amps.shape[0]}")
        norm2 = float(np.vdot(amps, amps).real)
        if not abs(norm2 - 1.0) <= INPUT_NORM_TOL:
            raise ValidationError(f"state is not normalized: sum|a|^2 = {norm2!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "num_qubits", int(n))
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes: Iterable[complex], normalize: bool = False) -> "StateVector":
        amps = np.asarray(list(amplitudes) if not isinstance(amplitudes, np.ndarray)
                          else amplitudes, dtype=complex).reshape(-1)
        size = amps.shape[0]
        n = size.bit_length() - 1
        if size < 2 or 2**n != size:
            raise ValidationError(f"amplitude count must be a power of two >= 2, got {size}")
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValidationError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(n, amps)

    @classmethod
    def basis(cls, num_qubits: int, index: int = 0) -> "StateVector":
        if not 0 <= index < 2**num_qubits:
            raise ValidationError(f"basis index {index} out of range")
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_bits(cls, bits: str) -> "StateVector":
        """``from_bits("01")`` is qubit 0 in |0>, qubit 1 in |1>.

        Characters are listed in qubit order (qubit 0 first), matching the
        ``[a, b, A, B]`` way registers are written throughout the package.
        """
        if not bits or set(bits) - {"0", "1"}:
            raise ValidationError(f"bit string must be nonempty 0/1 text, got {bits!r}")
        index = sum(1 << k for k, c in enumerate(bits) if c == "1")
        return cls.basis(len(bits), index)

    def tensor(self, other: "StateVector") -> "StateVector":
        """Append ``other`` as the higher-index qubits."""
        return StateVector(self.num_qubits + other.num_qubits,
                           np.kron(other.amplitudes, self.amplitudes))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def as_tensor(self) -> np.ndarray:
        # axis k of the tensor is qubit n-1-k
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def __len__(self):
        return self.amplitudes.shape[0]


def _check_qubits(state: StateVector, qubits: Sequence[int]) -> None:
    for q in qubits:
        if not isinstance(q, (int, np.integer)) or not 0 <= q < state.num_qubits:
            raise ValidationError(
                f"qubit index {q!r} out of range for {state.num_qubits}-qubit register")
    if len(set(qubits)) != len(qubits):
        raise ValidationError(f"qubit indices must be distinct, got {list(qubits)}")


@lru_cache(maxsize=None)
def _einsum_spec(n: int, qubits: tuple[int, ...]) -> str:
    letters = "abcdefghijklmnopqrstuvwxyz"
    state_in = list(letters[:n])
    k = len(qubits)
    outs = list(letters[n:n + k])
    # matrix index order: high qubit first, i.e. reversed(qubits)
    ins = [state_in[n - 1 - q] for q in reversed(qubits)]
    state_out = state_in.copy()
    for q, o in zip(reversed(qubits), outs):
        state_out[n - 1 - q] = o
    return f"{''.join(outs)}{''.join(ins)},{''.join(state_in)}->{''.join(state_out)}"


def _apply_matrix(amplitudes: np.ndarray, n: int, qubits: Sequence[int], matrix: np.ndarray) -> np.ndarray:
    """Contract ``matrix`` into ``qubits`` (qubits[0] is the matrix's low bit).

    No unitarity or normalization is assumed, so projectors can go through here too.
    """
    k = len(qubits)
    if k == 1:
        q = qubits[0]
        view = amplitudes.reshape(2 ** (n - 1 - q), 2, 2**q)
        return np.matmul(matrix, view).reshape(-1)
    spec = _einsum_spec(n, tuple(qubits))
    return np.einsum(spec, matrix.reshape((2,) * (2 * k)), amplitudes.reshape((2,) * n)).reshape(-1)


def _apply_trusted(state: StateVector, qubits: Sequence[int], matrix: np.ndarray) -> StateVector:
    # for matrices that are unitary by construction
    _check_qubits(state, qubits)
    return StateVector(state.num_qubits, _apply_matrix(state.amplitudes, state.num_qubits, qubits, matrix))


def apply_operator(state: StateVector, qubits: Sequence[int], matrix: np.ndarray) -> StateVector:
    """Apply a ``2^k x 2^k`` unitary to the listed qubits."""
    qubits = list(qubits)
    _check_qubits(state, qubits)
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (2 ** len(qubits),) * 2:
        raise ValidationError(f"matrix shape {matrix.shape} does not fit {len(qubits)} qubit(s)")
    if not is_unitary(matrix):
        raise ValidationError("operator is not unitary within tolerance")
    return StateVector(state.num_qubits, _apply_matrix(state.amplitudes, state.num_qubits, qubits, matrix))


def apply_single(state: StateVector, qubit: int, u: np.ndarray) -> StateVector:
    return apply_operator(state, [qubit], u)


@lru_cache(maxsize=256)
def controlled_pauli_matrix(axis: Axis) -> np.ndarray:
    """``|0><0| (x) I + |1><1| (x) sigma_n`` with the control as the low bit."""
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    return _frozen(np.kron(I2, p0) + np.kron(pauli_matrix(axis), p1))


def apply_controlled_pauli(state: StateVector, control: int, target: int, axis: Axis) -> StateVector:
    if control == target:
        raise ValidationError("control and target must differ")
    return _apply_trusted(state, [control, target], controlled_pauli_matrix(axis))


@lru_cache(maxsize=256)
def pauli_product_matrix(axisA: Axis, axisB: Axis) -> np.ndarray:
    """``sigma_A (x) sigma_B`` on a two-qubit register with A as the low bit."""
    return _frozen(np.kron(pauli_matrix(axisB), pauli_matrix(axisA)))


def joint_exponential_matrix(xi: float, axisA: Axis, axisB: Axis) -> np.ndarray:
    """``cos(xi) I + i sin(xi) sigma_A (x) sigma_B`` with A as the low bit."""
    return np.cos(xi) * np.eye(4) + 1j * np.sin(xi) * pauli_product_matrix(axisA, axisB)


def apply_joint_exponential(state: StateVector, qA: int, qB: int, xi: float,
                            axisA: Axis, axisB: Axis) -> StateVector:
    if qA == qB:
        raise ValidationError("the two gate qubits must differ")
    if not np.isfinite(xi):
        raise ValidationError("gate angle must be finite")
    return _apply_trusted(state, [qA, qB], joint_exponential_matrix(xi, axisA, axisB))


@dataclass(frozen=True)
class MeasurementBranch:
    """One outcome of a projective Pauli measurement.

    ``post_state`` is ``None`` for an impossible outcome (``valid`` is False).
    """

    outcome: int
    probability: float
    post_state: StateVector | None

    @property
    def valid(self) -> bool:
        return self.post_state is not None


@lru_cache(maxsize=256)
def eigenprojector(axis: Axis, outcome: int) -> np.ndarray:
    return _frozen(0.5 * (I2 + outcome * pauli_matrix(axis)))


@lru_cache(maxsize=256)
def eigenvector(axis: Axis, outcome: int) -> np.ndarray:
    """Normalized eigenvector of ``sigma_n`` for eigenvalue ``outcome``."""
    vals, vecs = np.linalg.eigh(pauli_matrix(axis))
    v = vecs[:, int(np.argmin(np.abs(vals - outcome)))]
    # fix the global phase so the first nonzero component is real positive
    k = int(np.argmax(np.abs(v) > 1e-12))
    return _frozen(v * np.exp(-1j * np.angle(v[k])))


def enumerate_measurement(state: StateVector, qubit: int, axis: Axis) -> list[MeasurementBranch]:
    """Both outcomes of measuring ``sigma_n`` on ``qubit``, ``+1`` first."""
    _check_qubits(state, [qubit])
    branches = []
    for outcome in (+1, -1):
        projected = _apply_matrix(state.amplitudes, state.num_qubits, [qubit],
                                  eigenprojector(axis, outcome))
        prob = float(np.vdot(projected, projected).real)
        if prob < ZERO_PROBABILITY:
            branches.append(MeasurementBranch(outcome, 0.0 if prob < 1e-300 else prob, None))
        else:
            branches.append(MeasurementBranch(
                outcome, prob, StateVector(state.num_qubits, projected / np.sqrt(prob))))
    return branches


def sample_measurement(state: StateVector, qubit: int, axis: Axis,
                       rng: np.random.Generator) -> MeasurementBranch:
    """Draw one branch of :func:`enumerate_measurement` with ``rng``."""
    branches = enumerate_measurement(state, qubit, axis)
    probs = np.array([b.probability for b in branches])
    return branches[int(rng.choice(len(branches), p=probs / probs.sum()))]


def project_out(state: StateVector, qubit: int, vector: np.ndarray) -> StateVector:
    """Remove ``qubit`` by contracting it with ``<vector|``.

    Intended for a qubit that has factored out after a measurement; the
    result is renormalized, and a vanishing overlap is an error.
    """
    _check_qubits(state, [qubit])
    if state.num_qubits < 2:
        raise ValidationError("cannot remove the only qubit of a register")
    vector = np.asarray(vector, dtype=complex)
    n = state.num_qubits
    view = state.amplitudes.reshape(2 ** (n - 1 - qubit), 2, 2**qubit)
    reduced = (vector.conj()[None, :, None] * view).sum(axis=1).reshape(-1)
    norm = np.linalg.norm(reduced)
    if norm < np.sqrt(ZERO_PROBABILITY):
        raise ValidationError(f"qubit {qubit} has no overlap with the given vector")
    return StateVector(n - 1, reduced / norm)


def _bipartition_matrix(state: StateVector, subset_a: Iterable[int]) -> np.ndarray:
    subset_a = sorted(set(subset_a))
    n = state.num_qubits
    _check_qubits(state, subset_a)
    if not subset_a or len(subset_a) == n:
        raise ValidationError("subset must be a nonempty proper subset of the register")
    rest = [q for q in range(n) if q not in subset_a]
    axes = [n - 1 - q for q in subset_a] + [n - 1 - q for q in rest]
    return np.transpose(state.as_tensor(), axes).reshape(2 ** len(subset_a), -1)


def schmidt_spectrum(state: StateVector, subset_a: Iterable[int]) -> np.ndarray:
    """Schmidt probabilities across ``subset_a | rest``, descending."""
    sv = np.linalg.svd(_bipartition_matrix(state, subset_a), compute_uv=False)
    lam = np.sort(sv**2)[::-1]
    return lam / lam.sum()


def binary_entropy(p: float) -> float:
    """Shannon entropy in bits of the distribution ``{p, 1-p}``."""
    return shannon_entropy([p, 1.0 - p])


def shannon_entropy(probs: Iterable[float]) -> float:
    probs = np.asarray(list(probs), dtype=float)
    probs = probs[probs > 0]
    return float(-np.sum(probs * np.log2(probs))) + 0.0


def entanglement_entropy(state: StateVector, subset_a: Iterable[int]) -> float:
    """Von Neumann entropy (bits) of the reduced state on ``subset_a``."""
    return shannon_entropy(schmidt_spectrum(state, subset_a))


def inner(left: StateVector, right: StateVector) -> complex:
    if left.num_qubits != right.num_qubits:
        raise ValidationError("states live on registers of different size")
    return complex(np.vdot(left.amplitudes, right.amplitudes))


def fidelity(left: StateVector, right: StateVector) -> float:
    """``|<left|right>|^2``; insensitive to global phase."""
    return abs(inner(left, right)) ** 2


def random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state from normalized complex Gaussian amplitudes."""
    dim = 2**num_qubits
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(num_qubits, v / np.linalg.norm(v))


def random_axis(rng: np.random.Generator) -> Axis:
    return Axis.from_vector(rng.standard_normal(3))

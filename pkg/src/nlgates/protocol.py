"""LOCC protocols that turn one partially entangled pair into a nonlocal gate.

Register layout is fixed as ``[a, b, A, B]``: ``a``/``b`` are Alice's and
Bob's halves of the resource pair, ``A``/``B`` the qubits the gate acts on.
After Bob's qubit ``b`` is measured and removed the stator lives on
``[a, A, B]``, and branch post-states on ``[A, B]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import analytics
from .constants import QUBIT_A, QUBIT_B, QUBIT_a, QUBIT_b, RESIDUAL_TOL, UNITARY_TOL
from .errors import ValidationError
from .qsim import (
    AXIS_X,
    AXIS_Y,
    AXIS_Z,
    Axis,
    StateVector,
    apply_controlled_pauli,
    apply_joint_exponential,
    apply_single,
    eigenvector,
    enumerate_measurement,
    fidelity,
    pauli_matrix,
    project_out,
)


class Label(str, Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"
    PLUS = "PlusBranch"
    MINUS = "MinusBranch"


@dataclass(frozen=True)
class GateSpec:
    """Target gate ``exp(i xi sigma_A sigma_B)``."""

    xi: float
    axisA: Axis = AXIS_Z
    axisB: Axis = AXIS_Z

    def __post_init__(self):
        object.__setattr__(self, "xi", analytics.check_xi(self.xi))

    @property
    def reducible(self) -> bool:
        """Gates beyond pi/4 equal a smaller-angle gate up to local rotations."""
        return self.xi > analytics.QUARTER_PI


@dataclass(frozen=True)
class ResourceSpec:
    """Resource pair ``cos(alpha)|00> + sin(alpha)|11>`` on qubits a, b."""

    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", analytics.check_alpha(self.alpha))

    @classmethod
    def from_sin2(cls, s: float) -> "ResourceSpec":
        return cls(analytics.alpha_from_s(s))


@dataclass(frozen=True)
class BranchOutcome:
    label: Label
    probability: float
    realized_xi: float
    corrections: tuple[tuple[str, Axis], ...]
    post_state: StateVector | None
    # |<exp(i realized_xi W) psi | post_state>|^2, None for impossible branches
    fidelity: float | None = None


@dataclass(frozen=True)
class ProtocolResult:
    branches: list[BranchOutcome]
    classical_bits_sent: int
    p_closed_form: float
    theta_used: float
    target_xi: float

    def branch(self, label: Label | str) -> BranchOutcome:
        label = Label(label)
        for b in self.branches:
            if b.label is label:
                return b
        raise KeyError(label)

    @property
    def total_probability(self) -> float:
        return math.fsum(b.probability for b in self.branches)

    @property
    def target_probability(self) -> float:
        """Probability that the gate actually realized is the target gate."""
        return math.fsum(b.probability for b in self.branches
                         if abs(b.realized_xi - self.target_xi) <= UNITARY_TOL)


@dataclass(frozen=True)
class StatorRecord:
    """Bookkeeping of Bob's sigma_x measurement during stator formation."""

    outcomes: tuple[tuple[int, float, str], ...]
    classical_bits: int = 1
    # max amplitude difference between the two corrected branches
    branch_discrepancy: float = 0.0


def _resource_amplitudes(alpha: float) -> StateVector:
    return StateVector(2, [math.cos(alpha), 0.0, 0.0, math.sin(alpha)])


def _check_pair(psiAB: StateVector) -> None:
    if not isinstance(psiAB, StateVector) or psiAB.num_qubits != 2:
        raise ValidationError("psiAB must be a 2-qubit StateVector")
    if abs(psiAB.norm() - 1.0) > UNITARY_TOL:
        raise ValidationError(f"psiAB is not normalized (norm {psiAB.norm()!r})")


def prepare_joint(resource: ResourceSpec, psiAB: StateVector) -> StateVector:
    """Resource pair on ``[a, b]`` tensored with the target state on ``[A, B]``."""
    _check_pair(psiAB)
    return _resource_amplitudes(resource.alpha).tensor(psiAB)


def _local_cnots(joint: StateVector, axisA: Axis, axisB: Axis) -> StateVector:
    joint = apply_controlled_pauli(joint, QUBIT_a, QUBIT_A, axisA)
    return apply_controlled_pauli(joint, QUBIT_b, QUBIT_B, axisB)


def form_stator(joint: StateVector, gate: GateSpec) -> tuple[StateVector, StatorRecord]:
    """Turn the joint state into ``S|psi>`` on ``[a, A, B]``.

    Both parties apply their controlled Paulis, Bob measures sigma_x on ``b``
    and sends the result; on ``-1`` Alice applies Z to ``a``.  Both branches
    are enumerated and must agree after the correction.
    """
    if not isinstance(joint, StateVector) or joint.num_qubits != 4:
        raise ValidationError("stator formation needs the 4-qubit [a, b, A, B] state")
    entangled = _local_cnots(joint, gate.axisA, gate.axisB)

    outcomes = []
    corrected = []
    for branch in enumerate_measurement(entangled, QUBIT_b, AXIS_X):
        correction = "none" if branch.outcome == 1 else "Z_a"
        outcomes.append((branch.outcome, branch.probability, correction))
        if not branch.valid:
            continue
        # qubit b now sits in a sigma_x eigenstate and factors out
        stator = project_out(branch.post_state, QUBIT_b, eigenvector(AXIS_X, branch.outcome))
        if branch.outcome == -1:
            stator = apply_single(stator, 0, pauli_matrix(AXIS_Z))
        corrected.append(stator)

    if not corrected:
        raise ValidationError("no valid outcome for Bob's measurement")
    discrepancy = 0.0
    if len(corrected) == 2:
        discrepancy = float(np.max(np.abs(corrected[0].amplitudes - corrected[1].amplitudes)))
    return corrected[0], StatorRecord(tuple(outcomes), 1, discrepancy)


def _stator_components(stator_state: StateVector) -> tuple[np.ndarray, np.ndarray]:
    # amplitudes of [A, B] attached to |0_a> and |1_a> (qubit a is the low bit)
    amps = stator_state.amplitudes
    return amps[0::2], amps[1::2]


def stator_target_state(stator_state: StateVector) -> StateVector:
    """Recover ``|psi_AB>`` from ``S|psi>`` (the ``|0_a>`` component)."""
    comp0, _ = _stator_components(stator_state)
    return StateVector.from_amplitudes(comp0, normalize=True)


def _check_stator(stator_state: StateVector, gate: GateSpec, resource: ResourceSpec) -> None:
    if not isinstance(stator_state, StateVector) or stator_state.num_qubits != 3:
        raise ValidationError("stator state must live on the 3-qubit [a, A, B] register")
    comp0, comp1 = _stator_components(stator_state)
    w = np.kron(pauli_matrix(gate.axisB), pauli_matrix(gate.axisA))
    expected1 = math.tan(resource.alpha) * (w @ comp0)
    if np.max(np.abs(comp1 - expected1)) > RESIDUAL_TOL:
        raise ValidationError("stator does not match the gate axes / resource angle")


def execute_gate(stator_state: StateVector, gate: GateSpec, resource: ResourceSpec) -> ProtocolResult:
    """Alice rotates ``a`` by ``exp(i theta X)`` and measures it in Z.

    Outcome ``|0_a>`` realizes the target gate.  Outcome ``|1_a>`` realizes
    ``W exp(i xi_tilde W)`` with ``W = sigma_A sigma_B``; the local Paulis
    that strip ``W`` are applied and recorded, so the branch's
    ``realized_xi`` is the trash angle.
    """
    _check_stator(stator_state, gate, resource)
    xi, alpha = gate.xi, resource.alpha
    theta = analytics.theta_angle(xi, alpha)
    psi = stator_target_state(stator_state)

    rotation = math.cos(theta) * np.eye(2) + 1j * math.sin(theta) * pauli_matrix(AXIS_X)
    rotated = apply_single(stator_state, QUBIT_a, rotation)

    branches = []
    for branch in enumerate_measurement(rotated, QUBIT_a, AXIS_Z):
        if branch.outcome == 1:
            label, realized, corrections = Label.SUCCESS, xi, ()
        else:
            label, realized = Label.FAILURE, analytics.trash_angle(xi, alpha)
            corrections = (("A", gate.axisA), ("B", gate.axisB))
        post, fid = None, None
        if branch.valid:
            post = project_out(branch.post_state, QUBIT_a, eigenvector(AXIS_Z, branch.outcome))
            for party, axis in corrections:
                post = apply_single(post, 0 if party == "A" else 1, pauli_matrix(axis))
            expected = apply_joint_exponential(psi, 0, 1, realized, gate.axisA, gate.axisB)
            fid = fidelity(expected, post)
        branches.append(BranchOutcome(label, branch.probability, realized, corrections, post, fid))

    return ProtocolResult(
        branches=branches,
        classical_bits_sent=1,
        p_closed_form=analytics.success_probability(xi, alpha),
        theta_used=theta,
        target_xi=xi,
    )


def run_protocol(resource: ResourceSpec, gate: GateSpec, psiAB: StateVector) -> ProtocolResult:
    """Full pipeline; two classical bits (Bob's sigma_x, Alice's sigma_z)."""
    joint = prepare_joint(resource, psiAB)
    stator, record = form_stator(joint, gate)
    result = execute_gate(stator, gate, resource)
    return replace(result, classical_bits_sent=record.classical_bits + result.classical_bits_sent)


def _symmetric_sign(r: int, s: int) -> int:
    """Sign of the gate angle heralded by Alice's sigma_y = r, Bob's sigma_x = s.

    Contracting ``cos|00> + sin|11> W`` with the two measured eigenvectors
    leaves ``y_r[1]* x_s[1]* / (y_r[0]* x_s[0]*)`` as the ratio of the W and
    identity coefficients; it is ``+i`` or ``-i`` and fixes the sign.
    """
    y, x = eigenvector(AXIS_Y, r), eigenvector(AXIS_X, s)
    ratio = np.conj(y[1] * x[1]) / np.conj(y[0] * x[0])
    return 1 if ratio.imag > 0 else -1


def run_symmetric_variant(alpha: float, psiAB: StateVector,
                          axisA: Axis = AXIS_Z, axisB: Axis = AXIS_Z) -> ProtocolResult:
    """Gate angle equal to the resource angle, realized as ``exp(+-i alpha W)``.

    Alice measures sigma_y on ``a`` and Bob sigma_x on ``b`` right after the
    controlled Paulis; each parity class of the four joint outcomes is one
    branch of probability 1/2.  ``alpha == 0`` is accepted and gives two
    identity branches.
    """
    alpha = float(alpha)
    if alpha != 0.0:
        alpha = analytics.check_alpha(alpha)
    _check_pair(psiAB)
    joint = _local_cnots(_resource_amplitudes(alpha).tensor(psiAB), axisA, axisB)

    grouped: dict[int, list[tuple[float, StateVector | None]]] = {1: [], -1: []}
    for ya in enumerate_measurement(joint, QUBIT_a, AXIS_Y):
        if not ya.valid:
            grouped[1].append((0.0, None))
            continue
        after_a = project_out(ya.post_state, QUBIT_a, eigenvector(AXIS_Y, ya.outcome))
        # b is qubit 0 of the remaining [b, A, B] register
        for xb in enumerate_measurement(after_a, 0, AXIS_X):
            post = None
            if xb.valid:
                post = project_out(xb.post_state, 0, eigenvector(AXIS_X, xb.outcome))
            sign = _symmetric_sign(ya.outcome, xb.outcome)
            grouped[sign].append((ya.probability * xb.probability, post))

    branches = []
    for sign, label in ((1, Label.PLUS), (-1, Label.MINUS)):
        parts = grouped[sign]
        prob = math.fsum(p for p, _ in parts)
        post = next((s for _, s in parts if s is not None), None)
        fid = None
        if post is not None:
            expected = apply_joint_exponential(psiAB, 0, 1, sign * alpha, axisA, axisB)
            fid = min(fidelity(expected, s) for _, s in parts if s is not None)
        branches.append(BranchOutcome(label, prob, sign * alpha, (), post, fid))

    return ProtocolResult(
        branches=branches,
        classical_bits_sent=1,
        p_closed_form=0.5,
        theta_used=0.0,
        target_xi=alpha,
    )


def stator_operator(gate: GateSpec, resource: ResourceSpec) -> np.ndarray:
    """Matrix of ``|psi> -> S|psi>`` (8x4) built column by column from simulation."""
    cols = []
    for k in range(4):
        stator, _ = form_stator(prepare_joint(resource, StateVector.basis(2, k)), gate)
        cols.append(stator.amplitudes)
    return np.stack(cols, axis=1)


def rotated_stator_operator(gate: GateSpec, resource: ResourceSpec, theta: float | None = None) -> np.ndarray:
    """Matrix of ``exp(i theta X_a) S`` from simulation; theta defaults to the protocol's."""
    if theta is None:
        theta = analytics.theta_angle(gate.xi, resource.alpha)
    rotation = math.cos(theta) * np.eye(2) + 1j * math.sin(theta) * pauli_matrix(AXIS_X)
    cols = []
    for k in range(4):
        stator, _ = form_stator(prepare_joint(resource, StateVector.basis(2, k)), gate)
        cols.append(apply_single(stator, QUBIT_a, rotation).amplitudes)
    return np.stack(cols, axis=1)

"""Dense pure-state simulator: gate application, register extension, branching measurement.

Convention used everywhere in this package: qubit 0 is the most significant
bit of the basis index, so |b0 b1 ... b_{n-1}> lives at index
int("b0 b1 ... b_{n-1}", 2). Bit strings read oldest-symbol-first and convert
with string_to_index / index_to_string.

The raw helpers at the bottom operate on plain arrays shaped (..., 2**n) so
batched engines can reuse them; the public operations wrap them in immutable
StateVector values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_QUBITS = 20

ROTATION_KINDS = ("rx", "ry", "rz")
CONTROLLED_KINDS = ("crx", "cry", "crz")
FIXED_KINDS = ("x",)
GATE_KINDS = ROTATION_KINDS + CONTROLLED_KINDS + FIXED_KINDS

_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def pauli_matrix(axis: str) -> np.ndarray:
    """Pauli matrix for axis in {x, y, z} (the rotation generator)."""
    return _PAULI[axis]


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """2x2 unitary exp(-i*angle/2 * P) for Pauli axis P in {x, y, z}."""
    return np.cos(angle / 2) * np.eye(2, dtype=complex) - 1j * np.sin(angle / 2) * _PAULI[axis]


def string_to_index(bits: str) -> int:
    """Map a bit string (oldest symbol first) to its basis index. '' -> 0."""
    if not bits:
        return 0
    if any(c not in "01" for c in bits):
        raise ValueError(f"not a bit string: {bits!r}")
    return int(bits, 2)


def index_to_string(index: int, length: int) -> str:
    """Inverse of string_to_index for fixed string length."""
    if length == 0:
        return ""
    return format(index, f"0{length}b")


@dataclass(frozen=True)
class Gate:
    """One gate of a circuit.

    Rotation kinds (rx, ry, rz, crx, cry, crz) take their angle either from a
    fixed `angle` or from a parameter slot; they are the only parameterizable
    kinds. `x` is the fixed Pauli-X.
    """

    kind: str
    target: int
    control: int | None = None
    angle: float | None = None
    slot: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in CONTROLLED_KINDS:
            if self.control is None:
                raise ValueError(f"{self.kind} requires a control qubit")
            if self.control == self.target:
                raise ValueError("control and target must differ")
        elif self.control is not None:
            raise ValueError(f"{self.kind} takes no control qubit")
        if self.kind in FIXED_KINDS:
            if self.angle is not None or self.slot is not None:
                raise ValueError(f"{self.kind} is not parameterizable")
        else:
            if (self.angle is None) == (self.slot is None):
                raise ValueError("rotation gates take exactly one of angle or slot")

    @property
    def axis(self) -> str:
        return self.kind[-1]

    @property
    def is_controlled(self) -> bool:
        return self.kind in CONTROLLED_KINDS


@dataclass(frozen=True)
class StateVector:
    """Immutable amplitude vector over num_qubits qubits.

    num_qubits 0 is the scalar state left after measuring out the last qubit.
    Branch states from measure_branch are normalized, with the branch
    probability reported separately; the zero-probability branch is an
    all-zero placeholder.
    """

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if not 0 <= self.num_qubits <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [0, {MAX_QUBITS}]")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"expected {1 << self.num_qubits} amplitudes, got shape {amps.shape}"
            )
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def zero_state(num_qubits: int) -> StateVector:
    amps = np.zeros(1 << num_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def basis_state(bits: str) -> StateVector:
    amps = np.zeros(1 << len(bits), dtype=complex)
    amps[string_to_index(bits)] = 1.0
    return StateVector(len(bits), amps)


def apply_gate(state: StateVector, gate: Gate, angle: float | None = None) -> StateVector:
    """Apply one gate, resolving the angle from the gate when not supplied."""
    n = state.num_qubits
    if not 0 <= gate.target < n:
        raise ValueError(f"target {gate.target} out of range for {n} qubits")
    if gate.control is not None and not 0 <= gate.control < n:
        raise ValueError(f"control {gate.control} out of range for {n} qubits")
    if angle is None:
        angle = gate.angle
    if angle is None and gate.kind not in FIXED_KINDS:
        raise ValueError("slot-parameterized gate needs an explicit angle")
    out = apply_gate_raw(state.amplitudes, gate, angle, n)
    return StateVector(n, out)


def append_fresh_qubit(state: StateVector) -> StateVector:
    """Extend the register with a new qubit in |0>, appended as the least
    significant position (state x |0>)."""
    amps = state.amplitudes
    out = np.zeros(2 * amps.size, dtype=complex)
    out[0::2] = amps
    return StateVector(state.num_qubits + 1, out)


def measure_branch(
    state: StateVector, qubit: int
) -> tuple[tuple[StateVector, float], tuple[StateVector, float]]:
    """Computational-basis measurement of one qubit, returning both branches.

    Each branch has the measured qubit removed and is normalized; the pair of
    probabilities sums to the squared norm of the input. A zero-probability
    branch is (all-zero placeholder, 0.0) so tree enumeration can prune it
    without special cases.
    """
    n = state.num_qubits
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    v = state.amplitudes.reshape(1 << qubit, 2, -1)
    branches = []
    for outcome in (0, 1):
        sub = v[:, outcome, :].reshape(-1)
        prob = float(np.vdot(sub, sub).real)
        if prob > 0.0:
            branch = StateVector(n - 1, sub / np.sqrt(prob))
        else:
            branch = StateVector(n - 1, np.zeros(sub.size, dtype=complex))
            prob = 0.0
        branches.append((branch, prob))
    return branches[0], branches[1]


# --- raw array engine -------------------------------------------------------
#
# All helpers below take arrays shaped (..., 2**n); leading axes are batch
# dimensions. They return new arrays and never mutate their input.


def _mix_inplace(a: np.ndarray, b: np.ndarray, mat: np.ndarray) -> None:
    """(a, b) <- (mat00 a + mat01 b, mat10 a + mat11 b) elementwise in place."""
    if mat[0, 1] == 0.0 and mat[1, 0] == 0.0:  # diagonal (rz): no temporaries
        a *= mat[0, 0]
        b *= mat[1, 1]
        return
    new_a = mat[0, 0] * a + mat[0, 1] * b
    b *= mat[1, 1]
    b += mat[1, 0] * a
    a[...] = new_a


def apply_matrix_1q_inplace(
    arr: np.ndarray, mat: np.ndarray, num_qubits: int, target: int
) -> None:
    v = arr.reshape(-1, 1 << target, 2, 1 << (num_qubits - target - 1))
    _mix_inplace(v[:, :, 0, :], v[:, :, 1, :], mat)


def apply_controlled_pair_inplace(
    arr: np.ndarray,
    mat0: np.ndarray | None,
    mat1: np.ndarray,
    num_qubits: int,
    control: int,
    target: int,
) -> None:
    """Apply mat0 on the target where control=0 and mat1 where control=1.

    mat0=None means identity on the control=0 subspace (a plain controlled
    gate); both set gives two-qubit Pauli rotations like exp(-i a (Z x P)/2).
    """
    q0, q1 = sorted((control, target))
    v = arr.reshape(
        -1, 1 << q0, 2, 1 << (q1 - q0 - 1), 2, 1 << (num_qubits - q1 - 1)
    )
    c_ax = 2 if control == q0 else 4
    t_ax = 4 if control == q0 else 2

    def ix(cbit: int, tbit: int):
        idx: list = [slice(None)] * 6
        idx[c_ax] = cbit
        idx[t_ax] = tbit
        return tuple(idx)

    for bit, mat in ((0, mat0), (1, mat1)):
        if mat is not None:
            _mix_inplace(v[ix(bit, 0)], v[ix(bit, 1)], mat)


def apply_gate_inplace(
    arr: np.ndarray, gate: Gate, angle: float | None, num_qubits: int
) -> None:
    if gate.kind == "x":
        apply_matrix_1q_inplace(arr, _PAULI["x"], num_qubits, gate.target)
        return
    mat = rotation_matrix(gate.axis, float(angle))
    if gate.is_controlled:
        apply_controlled_pair_inplace(arr, None, mat, num_qubits, gate.control, gate.target)
    else:
        apply_matrix_1q_inplace(arr, mat, num_qubits, gate.target)


def apply_gate_raw(arr: np.ndarray, gate: Gate, angle: float | None, num_qubits: int) -> np.ndarray:
    out = arr.copy()
    apply_gate_inplace(out, gate, angle, num_qubits)
    return out

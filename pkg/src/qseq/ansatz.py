"""Parameterized circuit templates, recurrent sequence models, and their exact
output distributions.

A recurrent model repeats one step circuit over a memory register plus a fresh
output qubit per time-step; measuring each output qubit defines a binary
stochastic process. Two exact engines compute that process law: a Kraus-tree
path (fast, default) and a statevector-unrolled path used as a cross-check.

Parameter-shift machinery: every parameterized gate expands into Pauli-rotation
"occurrences". A plain rotation is one occurrence with angle multiplier 1. A
controlled rotation CRotP(t) factors into two commuting Pauli rotations,
exp(-i(t/2)(I x P)/2) * exp(+i(t/2)(Z x P)/2), giving two occurrences with
multipliers +1/2 and -1/2. Shifting occurrence j by s*pi/2 amounts to applying
the unshifted gate followed by a fixed correction rotation, which is what
apply_shift_correction does. The two-term +/- pi/2 rule applied to whole
controlled gates is not exact (their generators have eigenvalues {0, +/-1});
the occurrence expansion is, and is validated against finite differences.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .qsim import (
    Gate,
    append_fresh_qubit,
    apply_controlled_pair_inplace,
    apply_gate,
    apply_gate_inplace,
    apply_matrix_1q_inplace,
    index_to_string,
    rotation_matrix,
    string_to_index,
    zero_state,
)

COMPLETENESS_TOL = 1e-10
UNITARY_TOL = 1e-10
EPS_PAST = 1e-12


@dataclass(frozen=True)
class CircuitTemplate:
    """Ordered gate program over num_qubits qubits with num_slots independent
    parameters; a slot may be referenced by several gates."""

    num_qubits: int
    gates: tuple[Gate, ...]
    num_slots: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if not 0 <= g.target < self.num_qubits:
                raise ValueError(f"gate target {g.target} out of range")
            if g.control is not None and not 0 <= g.control < self.num_qubits:
                raise ValueError(f"gate control {g.control} out of range")
            if g.slot is not None and not 0 <= g.slot < self.num_slots:
                raise ValueError(f"gate slot {g.slot} out of range")

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits


@dataclass(frozen=True)
class RecurrentModel:
    """One step circuit repeated over memory + fresh output registers.

    Step qubits 0..memory_qubits-1 are the memory; the remaining output qubits
    start each step in |0> and are measured after the step. The horizon
    (past_steps, future_steps) records the training window (M, L).
    """

    memory_qubits: int
    output_qubits: int
    step: CircuitTemplate
    past_steps: int = 8
    future_steps: int = 1

    def __post_init__(self) -> None:
        if self.memory_qubits < 1 or self.output_qubits < 1:
            raise ValueError("memory_qubits and output_qubits must be >= 1")
        if self.step.num_qubits != self.memory_qubits + self.output_qubits:
            raise ValueError("step template must act on memory + output qubits")
        if self.past_steps < 0 or self.future_steps < 1:
            raise ValueError("need past_steps >= 0 and future_steps >= 1")

    @property
    def num_slots(self) -> int:
        return self.step.num_slots

    @property
    def num_symbols(self) -> int:
        return 1 << self.output_qubits


@dataclass(frozen=True)
class KrausModel:
    """Per-output-symbol memory operators extracted from a step unitary."""

    operators: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        dim = ops[0].shape[0]
        for k in ops:
            if k.shape != (dim, dim):
                raise ValueError("Kraus operators must be square and same-dimensional")
        total = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(total - np.eye(dim))) > COMPLETENESS_TOL:
            raise ValueError("Kraus operators do not satisfy completeness")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]


class ConditionalResult(NamedTuple):
    dist: np.ndarray
    degenerate: bool


# --- builders ----------------------------------------------------------------


def build_universal_1q_memory(past_steps: int = 8, future_steps: int = 1) -> RecurrentModel:
    """2-qubit step (1 memory + 1 output) with 8 parameters.

    Layout: a tick block setting the output amplitude per memory basis state
    (CRotY memory->output, RotY on memory and output), output-controlled
    corrections on the memory (CRotY, CRotZ), then memory locals (RotZ, RotY,
    RotZ). All angles zero gives the identity step, i.e. a process emitting
    all-zeros with probability 1.
    """
    gates = (
        Gate("cry", target=1, control=0, slot=0),
        Gate("ry", target=0, slot=1),
        Gate("ry", target=1, slot=2),
        Gate("cry", target=0, control=1, slot=3),
        Gate("crz", target=0, control=1, slot=4),
        Gate("rz", target=0, slot=5),
        Gate("ry", target=0, slot=6),
        Gate("rz", target=0, slot=7),
    )
    step = CircuitTemplate(num_qubits=2, gates=gates, num_slots=8)
    return RecurrentModel(1, 1, step, past_steps, future_steps)


def build_recurrent_hea(
    memory_qubits: int = 2,
    layers: int = 3,
    past_steps: int = 8,
    future_steps: int = 1,
) -> RecurrentModel:
    """Hardware-efficient step over memory_qubits + 1 qubits.

    Per layer: RotZ, RotY, RotZ on every qubit, then CRotX between each pair
    of neighbors. Defaults give a 3-qubit step with 33 parameters.
    """
    if memory_qubits < 1 or layers < 1:
        raise ValueError("need memory_qubits >= 1 and layers >= 1")
    nq = memory_qubits + 1
    gates: list[Gate] = []
    slot = 0
    for _ in range(layers):
        for q in range(nq):
            for kind in ("rz", "ry", "rz"):
                gates.append(Gate(kind, target=q, slot=slot))
                slot += 1
        for q in range(nq - 1):
            gates.append(Gate("crx", target=q + 1, control=q, slot=slot))
            slot += 1
    step = CircuitTemplate(num_qubits=nq, gates=gates, num_slots=slot)
    return RecurrentModel(memory_qubits, 1, step, past_steps, future_steps)


def build_born_machine(qubits: int = 9, layers: int = 4) -> CircuitTemplate:
    """Non-recurrent layered circuit; qubit t holds the symbol at time-step t.

    Per layer: RotZ, RotY, RotZ on every qubit, then CRotX on neighbor pairs
    in an alternating pattern (odd controls first, then even), 8 pairs per
    layer at 9 qubits. Defaults give 140 parameters, each used once.
    """
    if qubits < 2 or layers < 1:
        raise ValueError("need qubits >= 2 and layers >= 1")
    gates: list[Gate] = []
    slot = 0
    for _ in range(layers):
        for q in range(qubits):
            for kind in ("rz", "ry", "rz"):
                gates.append(Gate(kind, target=q, slot=slot))
                slot += 1
        for start in (1, 2):
            for c in range(start, qubits, 2):
                gates.append(Gate("crx", target=c - 1, control=c, slot=slot))
                slot += 1
    return CircuitTemplate(num_qubits=qubits, gates=gates, num_slots=slot)


# --- shift-rule occurrences ---------------------------------------------------


def gate_occurrence_multipliers(gate: Gate) -> tuple[float, ...]:
    """Angle multipliers of the Pauli-rotation occurrences inside one gate."""
    if gate.slot is None:
        return ()
    if gate.is_controlled:
        return (0.5, -0.5)
    return (1.0,)


def template_occurrences(template: CircuitTemplate, slot: int | None = None):
    """All (gate_index, occurrence_index, multiplier) triples, optionally
    restricted to gates referencing one slot."""
    out = []
    for gi, g in enumerate(template.gates):
        if g.slot is None or (slot is not None and g.slot != slot):
            continue
        for oi, mult in enumerate(gate_occurrence_multipliers(g)):
            out.append((gi, oi, mult))
    return out


def apply_shift_correction(
    arr: np.ndarray, gate: Gate, occurrence: int, sign: int, num_qubits: int
) -> None:
    """Turn an already-applied unshifted gate into its occurrence-shifted
    version, in place, by one extra fixed rotation (the factors commute)."""
    half = rotation_matrix(gate.axis, sign * np.pi / 2)
    if not gate.is_controlled or occurrence == 0:
        # plain rotation, or the local factor exp(-i g (I x P)/2) with g = theta/2
        apply_matrix_1q_inplace(arr, half, num_qubits, gate.target)
        return
    # coupled factor exp(-i g (Z x P)/2), g = -theta/2
    neg = rotation_matrix(gate.axis, -sign * np.pi / 2)
    apply_controlled_pair_inplace(arr, half, neg, num_qubits, gate.control, gate.target)


def run_template(
    arr: np.ndarray,
    template: CircuitTemplate,
    theta: np.ndarray,
    shift: tuple[int, int, int] | None = None,
) -> np.ndarray:
    """Apply all template gates to (..., dim) amplitudes. shift=(gate_index,
    occurrence, sign) applies the shifted variant of that single gate; the
    gate count of the executed circuit is unchanged."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (template.num_slots,):
        raise ValueError(f"expected {template.num_slots} parameters, got {theta.shape}")
    n = template.num_qubits
    arr = np.ascontiguousarray(arr, dtype=complex).copy()
    for gi, gate in enumerate(template.gates):
        angle = gate.angle if gate.slot is None else float(theta[gate.slot])
        apply_gate_inplace(arr, gate, angle, n)
        if shift is not None and shift[0] == gi:
            apply_shift_correction(arr, gate, shift[1], shift[2], n)
    return arr


# --- exact distributions ------------------------------------------------------


def step_unitary(
    template: CircuitTemplate, theta: np.ndarray, shift: tuple[int, int, int] | None = None
) -> np.ndarray:
    """Full unitary matrix of the (possibly occurrence-shifted) template."""
    basis = np.eye(template.dim, dtype=complex)
    return run_template(basis, template, theta, shift).T


def kraus_from_step(
    model: RecurrentModel, theta: np.ndarray, shift: tuple[int, int, int] | None = None
) -> KrausModel:
    """K_x = (I_M x <x|_O) V(theta) (I_M x |0>_O) for each output symbol x."""
    u = step_unitary(model.step, theta, shift)
    md, od = 1 << model.memory_qubits, 1 << model.output_qubits
    blocks = u.reshape(md, od, md, od)
    return KrausModel(tuple(np.ascontiguousarray(blocks[:, x, :, 0]) for x in range(od)))


def kraus_tree_probabilities(kraus: KrausModel, steps: int, initial: np.ndarray) -> np.ndarray:
    """Probability of every length-`steps` symbol string under the chain
    ||K_{x_last} ... K_{x_first} v0||^2, oldest symbol as the most significant
    digit."""
    v = np.asarray(initial, dtype=complex)[None, :]
    for _ in range(steps):
        branches = [v @ k.T for k in kraus.operators]
        v = np.stack(branches, axis=1).reshape(-1, kraus.dim)
    return np.einsum("bi,bi->b", v, v.conj()).real


def joint_distribution(model: RecurrentModel, theta: np.ndarray, steps: int) -> np.ndarray:
    """Exact law of the first `steps` output symbols from all-zero memory."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    kraus = kraus_from_step(model, theta)
    init = np.zeros(kraus.dim, dtype=complex)
    init[0] = 1.0
    return kraus_tree_probabilities(kraus, steps, init)


def joint_distribution_unrolled(model: RecurrentModel, theta: np.ndarray, steps: int) -> np.ndarray:
    """Cross-check path: unroll the recurrent circuit into one statevector over
    memory + steps output qubits, then marginalize the memory."""
    if model.output_qubits != 1:
        raise ValueError("unrolled path supports single-qubit output")
    theta = np.asarray(theta, dtype=float)
    m = model.memory_qubits
    state = zero_state(m)
    for t in range(steps):
        state = append_fresh_qubit(state)
        n = state.num_qubits
        for gate in model.step.gates:
            # template memory qubits keep their index; the output qubit is the
            # freshly appended one at position n - 1
            target = gate.target if gate.target < m else n - 1
            control = None
            if gate.control is not None:
                control = gate.control if gate.control < m else n - 1
            mapped = Gate(gate.kind, target=target, control=control,
                          angle=gate.angle, slot=gate.slot)
            angle = gate.angle if gate.slot is None else float(theta[gate.slot])
            state = apply_gate(state, mapped, angle)
    probs = state.probabilities().reshape(1 << m, 1 << steps)
    return probs.sum(axis=0)


def template_distribution(
    template: CircuitTemplate, theta: np.ndarray, shift: tuple[int, int, int] | None = None
) -> np.ndarray:
    """Measurement law of the template applied to |0...0>."""
    init = np.zeros(template.dim, dtype=complex)
    init[0] = 1.0
    amps = run_template(init, template, theta, shift)
    return np.abs(amps) ** 2


def model_joint(model, theta: np.ndarray, steps: int | None = None) -> np.ndarray:
    """Joint output law of either model kind over `steps` symbols."""
    if isinstance(model, RecurrentModel):
        if steps is None:
            steps = model.past_steps + model.future_steps
        return joint_distribution(model, theta, steps)
    if isinstance(model, CircuitTemplate):
        if steps is not None and steps != model.num_qubits:
            raise ValueError("a template emits exactly one symbol per qubit")
        return template_distribution(model, theta)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def conditional_distribution(
    model, theta: np.ndarray, past: str, future_steps: int
) -> ConditionalResult:
    """q(future | past) over all 2**future_steps futures.

    Pasts with probability below EPS_PAST get the uniform vector and the
    degenerate flag instead of an error.
    """
    m_steps = len(past)
    joint = model_joint(model, theta, m_steps + future_steps)
    block = joint.reshape(1 << m_steps, 1 << future_steps)[string_to_index(past)]
    weight = float(block.sum())
    if weight < EPS_PAST:
        dim = 1 << future_steps
        return ConditionalResult(np.full(dim, 1.0 / dim), True)
    return ConditionalResult(block / weight, False)


class ConditionalView:
    """Conditional-distribution queries against a model at fixed parameters,
    caching one joint distribution per past length."""

    def __init__(self, model, theta: np.ndarray, future_steps: int):
        self.model = model
        self.theta = np.asarray(theta, dtype=float)
        self.future_steps = future_steps
        self._cache: dict[int, np.ndarray] = {}

    def conditional(self, past: str) -> ConditionalResult:
        m_steps = len(past)
        joint = self._cache.get(m_steps)
        if joint is None:
            joint = model_joint(self.model, self.theta, m_steps + self.future_steps)
            self._cache[m_steps] = joint
        block = joint.reshape(1 << m_steps, -1)[string_to_index(past)]
        weight = float(block.sum())
        if weight < EPS_PAST:
            return ConditionalResult(np.full(block.size, 1.0 / block.size), True)
        return ConditionalResult(block / weight, False)


# --- sampling -----------------------------------------------------------------


def sample_codes(
    model,
    theta: np.ndarray,
    length: int,
    rng: np.random.Generator,
    size: int,
    shift: tuple[int, int, int, int] | None = None,
) -> np.ndarray:
    """Draw `size` output strings (as integer codes) from the model law.

    For recurrent models the draw runs step by step on a batch of memory
    vectors. shift=(step, gate_index, occurrence, sign) samples from the
    occurrence-shifted circuit instead.
    """
    if isinstance(model, CircuitTemplate):
        if length != model.num_qubits:
            raise ValueError("template strings have one symbol per qubit")
        tshift = None if shift is None else shift[1:]
        probs = template_distribution(model, theta, tshift)
        return rng.choice(probs.size, size=size, p=probs / probs.sum())

    if model.output_qubits != 1:
        raise ValueError("sampling supports single-qubit output")
    base = kraus_from_step(model, theta)
    shifted = None
    if shift is not None:
        shifted = kraus_from_step(model, theta, shift[1:])
    v = np.zeros((size, base.dim), dtype=complex)
    v[:, 0] = 1.0
    codes = np.zeros(size, dtype=np.int64)
    for t in range(length):
        kraus = shifted if (shift is not None and shift[0] == t) else base
        v0 = v @ kraus.operators[0].T
        v1 = v @ kraus.operators[1].T
        p1 = np.einsum("bi,bi->b", v1, v1.conj()).real
        total = p1 + np.einsum("bi,bi->b", v0, v0.conj()).real
        ticks = rng.random(size) < (p1 / total)
        v = np.where(ticks[:, None], v1, v0)
        norms = np.sqrt(np.einsum("bi,bi->b", v, v.conj()).real)
        v /= norms[:, None]
        codes = (codes << 1) | ticks
    return codes


def sample_string(model, theta: np.ndarray, length: int, rng: np.random.Generator) -> str:
    """Draw one output string from the exact model law."""
    code = int(sample_codes(model, theta, length, rng, size=1)[0])
    return index_to_string(code, length)


# --- cosine-sine canonical form -------------------------------------------------


@dataclass(frozen=True)
class CanonicalForm:
    """Canonical Kraus pair K_0 = u0 @ diag(cos_diag), K_1 = u1 @ diag(sin_diag)
    with the memory-basis transform w0 relating it to the source unitary."""

    u0: np.ndarray
    u1: np.ndarray
    cos_diag: np.ndarray
    sin_diag: np.ndarray
    w0: np.ndarray

    def __post_init__(self) -> None:
        c, s = self.cos_diag, self.sin_diag
        if np.max(np.abs(c**2 + s**2 - 1.0)) > COMPLETENESS_TOL:
            raise ValueError("cos/sin factors must satisfy C^2 + S^2 = I")
        if np.any(np.diff(c) > 1e-12):
            raise ValueError("cos factors must be in descending order")
        for u in (self.u0, self.u1, self.w0):
            dim = u.shape[0]
            if np.max(np.abs(u.conj().T @ u - np.eye(dim))) > 1e-8:
                raise ValueError("canonical factors must be unitary")

    def kraus(self) -> KrausModel:
        return KrausModel((self.u0 * self.cos_diag, self.u1 * self.sin_diag))


def _complete_unitary(cols: np.ndarray, fixed: np.ndarray | None) -> np.ndarray:
    """Fill undetermined columns (marked NaN) to an orthonormal basis."""
    dim = cols.shape[0]
    out = cols.copy()
    known = [j for j in range(dim) if not np.isnan(out[0, j].real)]
    missing = [j for j in range(dim) if j not in known]
    if not missing:
        return out
    basis = out[:, known] if known else np.zeros((dim, 0), dtype=complex)
    seeds = fixed if fixed is not None else np.eye(dim, dtype=complex)
    for j in missing:
        for k in range(seeds.shape[1]):
            cand = seeds[:, k].astype(complex)
            cand = cand - basis @ (basis.conj().T @ cand)
            norm = np.linalg.norm(cand)
            if norm > 1e-8:
                col = cand / norm
                out[:, j] = col
                basis = np.concatenate([basis, col[:, None]], axis=1)
                break
        else:
            raise ValueError("could not complete unitary")
    return out


def kraus_from_unitary(u: np.ndarray, memory_dim: int) -> KrausModel:
    """Measurement Kraus pair of a unitary acting on memory x one output qubit,
    output qubit least significant and fed |0>."""
    blocks = u.reshape(memory_dim, 2, memory_dim, 2)
    return KrausModel((blocks[:, 0, :, 0].copy(), blocks[:, 1, :, 0].copy()))


def cs_canonical_form(u: np.ndarray) -> CanonicalForm:
    """Cosine-sine canonical form of the process generated by a unitary over
    memory x one output qubit (output least significant, initialized |0>).

    Writes the output-in/out blocks as A00 = W0 u0 C W0^dag and
    A10 = W0 u1 S W0^dag; the Kraus pair (u0 C, u1 S) run from initial memory
    W0^dag |psi> reproduces the process of u from |psi> exactly. Gauge: C
    descending, and the first-row entries u0[0, j] (j >= 1) made real
    nonnegative where C is nondegenerate.
    """
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    if u.ndim != 2 or u.shape[1] != dim or dim % 2 != 0:
        raise ValueError("expected a square even-dimensional matrix")
    if np.max(np.abs(u.conj().T @ u - np.eye(dim))) > UNITARY_TOL:
        raise ValueError("input is not unitary within tolerance")
    md = dim // 2
    blocks = u.reshape(md, 2, md, 2)
    a00, a10 = blocks[:, 0, :, 0], blocks[:, 1, :, 0]

    u0t, sing, w0h = np.linalg.svd(a00)
    cos_diag = np.clip(sing, 0.0, 1.0)
    sin_diag = np.sqrt(np.clip(1.0 - cos_diag**2, 0.0, None))
    w0 = w0h.conj().T

    u1t = np.full((md, md), np.nan, dtype=complex)
    target = a10 @ w0
    for j in range(md):
        if sin_diag[j] > 1e-7:
            u1t[:, j] = target[:, j] / sin_diag[j]
    u1t = _complete_unitary(u1t, fixed=u0t)

    # diagonal phase gauge: conjugation by D leaves the block reconstruction
    # intact and makes u0's first row real nonnegative off the diagonal
    u0 = w0.conj().T @ u0t
    phases = np.ones(md, dtype=complex)
    for j in range(1, md):
        if abs(u0[0, j]) > 1e-9:
            phases[j] = np.exp(-1j * np.angle(u0[0, j]))
    u0t = u0t * phases
    u1t = u1t * phases
    w0 = w0 * phases
    return CanonicalForm(
        u0=w0.conj().T @ u0t,
        u1=w0.conj().T @ u1t,
        cos_diag=cos_diag,
        sin_diag=sin_diag,
        w0=w0,
    )


# --- serialization --------------------------------------------------------------


def _gate_to_dict(gate: Gate) -> dict:
    return {
        "kind": gate.kind,
        "target": gate.target,
        "control": gate.control,
        "slot": gate.slot,
        "angle": gate.angle,
    }


def _gate_from_dict(d: dict) -> Gate:
    return Gate(d["kind"], target=d["target"], control=d.get("control"),
                angle=d.get("angle"), slot=d.get("slot"))


def model_to_dict(model, theta: np.ndarray, kind: str) -> dict:
    """JSON-ready document {kind, memory_qubits, output_qubits, layers, gates,
    theta}; bit strings elsewhere are serialized most-recent-symbol-last."""
    if isinstance(model, RecurrentModel):
        template = model.step
        memory_qubits, output_qubits = model.memory_qubits, model.output_qubits
    else:
        template = model
        memory_qubits, output_qubits = 0, model.num_qubits
    layers = _infer_layers(kind)
    return {
        "kind": kind,
        "memory_qubits": memory_qubits,
        "output_qubits": output_qubits,
        "layers": layers,
        "gates": [_gate_to_dict(g) for g in template.gates],
        "theta": [float(x) for x in np.asarray(theta, dtype=float)],
    }


def _infer_layers(kind: str) -> int:
    return {"recurrent1": 1, "recurrent2": 3, "born": 4}.get(kind, 0)


def model_from_dict(d: dict, past_steps: int = 8, future_steps: int = 1):
    """Rebuild (model, theta) from a model document."""
    gates = tuple(_gate_from_dict(g) for g in d["gates"])
    theta = np.asarray(d["theta"], dtype=float)
    num_slots = len(theta)
    memory_qubits = int(d["memory_qubits"])
    output_qubits = int(d["output_qubits"])
    if memory_qubits == 0:
        template = CircuitTemplate(output_qubits, gates, num_slots)
        return template, theta
    template = CircuitTemplate(memory_qubits + output_qubits, gates, num_slots)
    model = RecurrentModel(memory_qubits, output_qubits, template, past_steps, future_steps)
    return model, theta


def save_model(path, model, theta: np.ndarray, kind: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, theta, kind), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path, past_steps: int = 8, future_steps: int = 1):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh), past_steps, future_steps)

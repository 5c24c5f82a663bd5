"""Cost functionals over model output laws, recurrent parameter-shift
gradients (exact and sampled), and the co-emission training loop.

The exact engines evaluate the derivative of the whole joint distribution: a
parameter slot's gradient is the multiplier-weighted sum of s/2 times the
joint law of the circuit with one Pauli-rotation occurrence shifted by s*pi/2
(see ansatz for the occurrence expansion of controlled rotations). Every
shifted circuit runs with exactly the same gate count as the unshifted one.
Batched variants share the tree/statevector sweeps across all shifted
circuits, which is what makes exact-gradient training practical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ansatz import (
    EPS_PAST,
    CircuitTemplate,
    RecurrentModel,
    apply_shift_correction,
    kraus_from_step,
    model_joint,
    sample_codes,
    template_distribution,
    template_occurrences,
)
from .qsim import (
    Gate,
    apply_gate_inplace,
    apply_matrix_1q_inplace,
    pauli_matrix,
    string_to_index,
)
from .stochproc import ConditionalTable, NumericalError, true_conditional

EPS_DENOM = 1e-12


@dataclass(frozen=True)
class CostWeights:
    """Cost per output string of a fixed length; missing strings cost 0."""

    length: int
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (1 << self.length,):
            raise ValueError(f"expected {1 << self.length} cost values")
        if not np.all(np.isfinite(values)):
            raise ValueError("cost values must be finite")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_dict(cls, length: int, mapping: dict[str, float]) -> "CostWeights":
        values = np.zeros(1 << length)
        for string, value in mapping.items():
            if len(string) != length:
                raise ValueError(f"string {string!r} has wrong length")
            values[string_to_index(string)] = value
        return cls(length, values)

    @classmethod
    def indicator(cls, string: str) -> "CostWeights":
        return cls.from_dict(len(string), {string: 1.0})

    @classmethod
    def constant(cls, length: int, value: float) -> "CostWeights":
        return cls(length, np.full(1 << length, value))


@dataclass(frozen=True)
class GradientEstimate:
    value: float
    std_error: float
    samples: int


def _num_slots(model) -> int:
    return model.num_slots


def _model_occurrences(model, steps: int, slot: int | None = None):
    """All shift occurrences of the unrolled circuit: (step, gate, occ, mult).
    Templates have a single implicit step (step index None)."""
    if isinstance(model, RecurrentModel):
        per_step = template_occurrences(model.step, slot)
        return [(t, g, o, m) for t in range(steps) for (g, o, m) in per_step]
    return [(None, g, o, m) for (g, o, m) in template_occurrences(model, slot)]


def shifted_distribution(model, theta, steps: int, occ, sign: int) -> np.ndarray:
    """Joint output law of the circuit with one occurrence shifted by
    sign*pi/2; the shifted circuit has the same gate count as the original."""
    step_idx, gate_idx, occ_idx, _ = occ
    if isinstance(model, CircuitTemplate):
        return template_distribution(model, theta, (gate_idx, occ_idx, sign))
    kraus = kraus_from_step(model, theta)
    shifted = kraus_from_step(model, theta, (gate_idx, occ_idx, sign))
    v = np.zeros((1, kraus.dim), dtype=complex)
    v[0, 0] = 1.0
    for t in range(steps):
        ops = shifted.operators if t == step_idx else kraus.operators
        v = np.stack([v @ k.T for k in ops], axis=1).reshape(-1, kraus.dim)
    return np.einsum("bi,bi->b", v, v.conj()).real


def expected_cost(model, theta, cost: CostWeights) -> float:
    """Expected cost sum_x cost(x) * Q(x) under the exact output law."""
    joint = model_joint(model, theta, cost.length)
    return float(cost.values @ joint)


def exact_shift_gradient(model, theta, cost: CostWeights, slot: int) -> float:
    """d expected_cost / d theta[slot] by explicit shifted evaluations."""
    theta = np.asarray(theta, dtype=float)
    if not 0 <= slot < _num_slots(model):
        raise ValueError(f"slot {slot} out of range")
    total = 0.0
    for occ in _model_occurrences(model, cost.length, slot):
        mult = occ[3]
        for sign in (+1, -1):
            shifted = shifted_distribution(model, theta, cost.length, occ, sign)
            total += mult * sign / 2.0 * float(cost.values @ shifted)
    return total


def joint_jacobian(model, theta, steps: int, slots=None):
    """Exact (Q, dQ/dtheta) of the joint output law, dQ shaped
    (num_slots, 2**steps). All shifted circuits are evaluated in one batched
    sweep; `slots` restricts which parameter rows are filled."""
    theta = np.asarray(theta, dtype=float)
    nslots = _num_slots(model)
    if isinstance(model, RecurrentModel):
        probs, circuits = _batched_tree(model, theta, steps, slots)
    else:
        if steps != model.num_qubits:
            raise ValueError("a template emits exactly one symbol per qubit")
        probs, circuits = _batched_template(model, theta, slots)
    joint = probs[0]
    djoint = np.zeros((nslots, probs.shape[1]))
    for row, (slot, mult, sign) in circuits:
        djoint[slot] += mult * sign / 2.0 * probs[row]
    return joint, djoint


def _batched_tree(model: RecurrentModel, theta, steps, slots):
    base = kraus_from_step(model, theta)
    occs = template_occurrences(model.step, None)
    if slots is not None:
        keep = set(slots)
        occs = [o for o in occs if model.step.gates[o[0]].slot in keep]
    shifted = {
        (g, o, s): kraus_from_step(model, theta, (g, o, s))
        for (g, o, _m) in occs
        for s in (+1, -1)
    }
    # circuit rows: 0 is unshifted; each (occurrence, sign, step) gets one row
    circuits = []
    plan: list[tuple[int, int, tuple]] = []  # (row, step, kraus key)
    row = 1
    for g, o, mult in occs:
        slot = model.step.gates[g].slot
        for s in (+1, -1):
            for t in range(steps):
                plan.append((row, t, (g, o, s)))
                circuits.append((row, (slot, mult, s)))
                row += 1
    v = np.zeros((row, 1, base.dim), dtype=complex)
    v[:, 0, 0] = 1.0
    for t in range(steps):
        nxt = np.stack([v @ k.T for k in base.operators], axis=2)
        for r, tc, key in plan:
            if tc == t:
                ops = shifted[key].operators
                for x, k in enumerate(ops):
                    nxt[r, :, x, :] = v[r] @ k.T
        v = nxt.reshape(row, -1, base.dim)
    probs = np.einsum("cbi,cbi->cb", v, v.conj()).real
    return probs, circuits


def _batched_template(template: CircuitTemplate, theta, slots):
    occs = template_occurrences(template, None)
    if slots is not None:
        keep = set(slots)
        occs = [o for o in occs if template.gates[o[0]].slot in keep]
    by_gate: dict[int, list[tuple[int, int, float]]] = {}
    for g, o, mult in occs:
        by_gate.setdefault(g, []).append((g, o, mult))
    total_rows = 1 + 2 * len(occs)
    arr = np.zeros((total_rows, template.dim), dtype=complex)
    arr[0, 0] = 1.0
    active = 1
    circuits = []
    n = template.num_qubits
    for gi, gate in enumerate(template.gates):
        angle = gate.angle if gate.slot is None else float(theta[gate.slot])
        # rows shifted at this gate equal the base row until here; spawn them
        # just before applying it, then fix them up with their correction
        spawned = []
        for _, o, mult in by_gate.get(gi, ()):
            for s in (+1, -1):
                arr[active] = arr[0]
                spawned.append((active, o, s))
                circuits.append((active, (gate.slot, mult, s)))
                active += 1
        apply_gate_inplace(arr[:active], gate, angle, n)
        for r, o, s in spawned:
            apply_shift_correction(arr[r], gate, o, s, n)
    probs = np.abs(arr) ** 2
    return probs, circuits


def exact_gradient(model, theta, cost: CostWeights) -> np.ndarray:
    """Gradient of expected_cost for every slot at once."""
    _, djoint = joint_jacobian(model, theta, cost.length)
    return djoint @ cost.values


def stochastic_shift_gradient(
    model, theta, cost: CostWeights, slot: int, samples: int, rng: np.random.Generator
) -> GradientEstimate:
    """Unbiased sampled estimate of d expected_cost / d theta[slot].

    Each draw picks an occurrence index and a sign uniformly, samples one
    output string from that shifted circuit, and records
    n_occurrences * multiplier * sign * cost(x).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    theta = np.asarray(theta, dtype=float)
    occs = _model_occurrences(model, cost.length, slot)
    n = len(occs)
    if n == 0:
        return GradientEstimate(0.0, 0.0, samples)
    pick = rng.integers(n, size=samples)
    signs = rng.integers(2, size=samples) * 2 - 1
    values = np.empty(samples)
    for i in range(n):
        occ = occs[i]
        step_idx = occ[0] if occ[0] is not None else 0
        for s in (+1, -1):
            sel = np.nonzero((pick == i) & (signs == s))[0]
            if sel.size == 0:
                continue
            codes = sample_codes(
                model, theta, cost.length, rng, sel.size,
                shift=(step_idx, occ[1], occ[2], s),
            )
            values[sel] = n * occ[3] * s * cost.values[codes]
    mean = float(values.mean())
    spread = float(values.std(ddof=1)) if samples > 1 else 0.0
    return GradientEstimate(mean, spread / math.sqrt(samples), samples)


def finite_difference(fn, theta, delta: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function of the parameter vector."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        bump = np.zeros_like(theta)
        bump[k] = delta
        grad[k] = (fn(theta + bump) - fn(theta - bump)) / (2 * delta)
    return grad


# --- co-emission distortion objective -------------------------------------------


@dataclass(frozen=True)
class _RefArrays:
    past_idx: np.ndarray
    weights: np.ndarray
    target: np.ndarray  # (rows, 2**L) reference conditionals
    past_steps: int
    future_steps: int


def _reference_arrays(reference: ConditionalTable) -> _RefArrays:
    pasts = sorted(reference.rows)
    idx = np.array([string_to_index(p) for p in pasts], dtype=np.int64)
    weights = np.array([reference.rows[p].weight for p in pasts])
    target = np.stack([reference.rows[p].dist for p in pasts])
    return _RefArrays(idx, weights, target, reference.past_steps, reference.future_steps)


def _row_blocks(joint: np.ndarray, ref: _RefArrays):
    blocks = joint.reshape(1 << ref.past_steps, -1)[ref.past_idx]
    norm = blocks.sum(axis=1)
    valid = norm >= EPS_PAST
    cond = np.where(valid[:, None], blocks / np.where(valid, norm, 1.0)[:, None], 0.0)
    return blocks, norm, cond, valid


def _distortion_from_joint(joint: np.ndarray, ref: _RefArrays):
    """(value, degenerate_count) of the co-emission distortion."""
    _, _, cond, valid = _row_blocks(joint, ref)
    p_sq = np.einsum("rf,rf->r", ref.target, ref.target)
    q_sq = np.einsum("rf,rf->r", cond, cond)
    dot = np.einsum("rf,rf->r", ref.target, cond)
    cosine = np.where(valid, dot / np.sqrt(np.maximum(p_sq * q_sq, EPS_DENOM)), 1.0)
    value = -float(ref.weights[valid] @ np.log(np.maximum(cosine[valid], EPS_DENOM)))
    return value / ref.future_steps, int((~valid).sum())


def _kl_from_joint(joint: np.ndarray, ref: _RefArrays) -> float:
    _, _, cond, valid = _row_blocks(joint, ref)
    dim = cond.shape[1]
    cond = np.where(valid[:, None], cond, 1.0 / dim)  # uniform fallback
    p = ref.target
    ratio = np.where(p > 0.0, p / np.maximum(cond, 1e-12), 1.0)
    terms = np.where(p > 0.0, p * np.log(ratio), 0.0).sum(axis=1)
    return float(ref.weights @ terms) / ref.future_steps


def _distortion_gradient_from_jacobian(joint, djoint, ref: _RefArrays):
    """Chain rule through the cosine similarity of every reference row.

    Per row: dot and norm terms are linear functionals of the shifted joint
    laws restricted to the row's past, divided by the past probability; the
    quotient rule for that theta-dependent normalization is included.
    """
    blocks, norm, cond, valid = _row_blocks(joint, ref)
    dblocks = djoint.reshape(djoint.shape[0], 1 << ref.past_steps, -1)[:, ref.past_idx, :]
    q_sq = np.einsum("rf,rf->r", cond, cond)
    dot = np.einsum("rf,rf->r", ref.target, cond)
    dnorm = dblocks.sum(axis=2)
    ddot_raw = np.einsum("rf,krf->kr", ref.target, dblocks)
    dq_raw = np.einsum("rf,krf->kr", cond, dblocks)
    safe_norm = np.where(valid, norm, 1.0)
    ddot = (ddot_raw - dot[None, :] * dnorm) / safe_norm[None, :]
    dq_sq = 2.0 * (dq_raw - q_sq[None, :] * dnorm) / safe_norm[None, :]
    dlog = ddot / np.maximum(dot, EPS_DENOM)[None, :] - dq_sq / (
        2.0 * np.maximum(q_sq, EPS_DENOM)[None, :]
    )
    dlog = np.where(valid[None, :], dlog, 0.0)
    return -(dlog @ ref.weights) / ref.future_steps


def distortion_gradient(model, theta, reference: ConditionalTable) -> np.ndarray:
    """Gradient of the co-emission distortion against a reference table."""
    ref = _reference_arrays(reference)
    steps = ref.past_steps + ref.future_steps
    joint, djoint = joint_jacobian(model, theta, steps)
    return _distortion_gradient_from_jacobian(joint, djoint, ref)


# --- adjoint differentiation (training fast path) --------------------------------
#
# The training loop needs d(cost)/d(theta) for a scalar cost of the joint law.
# Backpropagating one cost vector through the circuit gives the same exact
# values as the occurrence-shift sums in O(gates) work instead of
# O(gates x occurrences); tests pin the two paths together at 1e-9.


def _unrolled_circuit(model, steps: int):
    """(num_qubits, memory_qubits, [(gate, angle_or_None, slot)]) of the full
    circuit; recurrent steps map their output qubit to position m + t."""
    if isinstance(model, CircuitTemplate):
        gates = [(g, g.angle, g.slot) for g in model.gates]
        return model.num_qubits, 0, gates
    m = model.memory_qubits
    gates = []
    for t in range(steps):
        for g in model.step.gates:
            target = g.target if g.target < m else m + t
            control = None
            if g.control is not None:
                control = g.control if g.control < m else m + t
            mapped = Gate(g.kind, target=target, control=control, angle=g.angle, slot=g.slot)
            gates.append((mapped, g.angle, g.slot))
    return m + steps, m, gates


def _apply_generator(psi: np.ndarray, gate: Gate, num_qubits: int) -> np.ndarray:
    """Generator action G |psi> with gate = exp(-i theta G / 2): G is the Pauli
    on the target, projected onto control=1 for controlled rotations."""
    pauli = pauli_matrix(gate.axis)
    if not gate.is_controlled:
        out = psi.copy()
        apply_matrix_1q_inplace(out, pauli, num_qubits, gate.target)
        return out
    q0, q1 = sorted((gate.control, gate.target))
    v = psi.reshape(1 << q0, 2, 1 << (q1 - q0 - 1), 2, 1 << (num_qubits - q1 - 1))
    out = np.zeros_like(v)
    c_ax = 1 if gate.control == q0 else 3
    t_ax = 3 if gate.control == q0 else 1
    idx1: list = [slice(None)] * 5
    idx1[c_ax] = 1
    sub_in = v[tuple(idx1)]
    sub_out = out[tuple(idx1)]
    # remaining target axis after slicing the control
    t_pos = t_ax if t_ax < c_ax else t_ax - 1
    a = np.take(sub_in, 0, axis=t_pos)
    b = np.take(sub_in, 1, axis=t_pos)
    idx_t0: list = [slice(None)] * 4
    idx_t0[t_pos] = 0
    idx_t1: list = [slice(None)] * 4
    idx_t1[t_pos] = 1
    sub_out[tuple(idx_t0)] = pauli[0, 0] * a + pauli[0, 1] * b
    sub_out[tuple(idx_t1)] = pauli[1, 0] * a + pauli[1, 1] * b
    return out.reshape(psi.shape)


def _adjoint_gradient(model, theta, steps: int, cost_vector: np.ndarray) -> np.ndarray:
    """Exact gradient of sum_x cost_vector[x] * Q(x) by one reverse sweep."""
    theta = np.asarray(theta, dtype=float)
    num_qubits, mem, gates = _unrolled_circuit(model, steps)
    psi = np.zeros(1 << num_qubits, dtype=complex)
    psi[0] = 1.0
    for gate, angle, slot in gates:
        apply_gate_inplace(psi, gate, angle if slot is None else float(theta[slot]), num_qubits)
    phi = (psi.reshape(1 << mem, -1) * cost_vector[None, :]).reshape(-1).copy()
    grad = np.zeros(_num_slots(model))
    for gate, angle, slot in reversed(gates):
        resolved = angle if slot is None else float(theta[slot])
        if slot is not None:
            # dU/dtheta = (-i/2) G U; dF = 2 Re <phi|(-i/2) G|psi> = Im <phi|G psi>
            grad[slot] += np.vdot(phi, _apply_generator(psi, gate, num_qubits)).imag
        if gate.kind == "x":
            apply_gate_inplace(psi, gate, None, num_qubits)
            apply_gate_inplace(phi, gate, None, num_qubits)
        else:
            inverse = Gate(gate.kind, target=gate.target, control=gate.control, angle=0.0)
            apply_gate_inplace(psi, inverse, -resolved, num_qubits)
            apply_gate_inplace(phi, inverse, -resolved, num_qubits)
    return grad


def _distortion_cost_vector(joint: np.ndarray, ref: _RefArrays) -> np.ndarray:
    """dD_A/dQ(x) for every string x, from the distortion chain rule."""
    blocks, norm, cond, valid = _row_blocks(joint, ref)
    q_sq = np.einsum("rf,rf->r", cond, cond)
    dot = np.einsum("rf,rf->r", ref.target, cond)
    safe_norm = np.where(valid, norm, 1.0)
    dot_term = (ref.target - dot[:, None]) / np.maximum(dot, EPS_DENOM)[:, None]
    b_term = (cond - q_sq[:, None]) / np.maximum(q_sq, EPS_DENOM)[:, None]
    g_rows = -(ref.weights / ref.future_steps)[:, None] * (dot_term - b_term) / safe_norm[:, None]
    g_rows = np.where(valid[:, None], g_rows, 0.0)
    full = np.zeros(joint.size).reshape(1 << ref.past_steps, -1)
    full[ref.past_idx] = g_rows
    return full.reshape(-1)


def two_copy_match_indicators(
    model, theta, steps: int, samples: int, rng: np.random.Generator
) -> np.ndarray:
    """Indicator draws 1[x == x'] over independent output-string pairs; their
    mean estimates the squared norm of the output law. Bernoulli by
    construction, so the sample variance must match mu(1 - mu)."""
    a = sample_codes(model, theta, steps, rng, samples)
    b = sample_codes(model, theta, steps, rng, samples)
    return (a == b).astype(np.float64)


# --- optimizer and training loop -------------------------------------------------


@dataclass(frozen=True)
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0

    @classmethod
    def fresh(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    max_epochs: int = 2000
    eps_stop: float = 1e-6
    gradient_mode: str = "exact"  # or "stochastic"
    samples: int = 10_000  # per slot, stochastic mode only
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must be in (0, 1)")
        if self.eps_stop <= 0.0:
            raise ValueError("eps_stop must be positive")
        if self.gradient_mode not in ("exact", "stochastic"):
            raise ValueError("gradient_mode must be 'exact' or 'stochastic'")


def adam_step(theta, grad, state: AdamState, config: TrainConfig):
    """One bias-corrected ADAM update, minimizing."""
    theta = np.asarray(theta, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if theta.shape != grad.shape:
        raise ValueError("theta and gradient shapes differ")
    t = state.step_count + 1
    first = config.beta1 * state.first_moment + (1 - config.beta1) * grad
    second = config.beta2 * state.second_moment + (1 - config.beta2) * grad**2
    first_hat = first / (1 - config.beta1**t)
    second_hat = second / (1 - config.beta2**t)
    update = config.learning_rate * first_hat / (np.sqrt(second_hat) + config.eps_adam)
    return theta - update, AdamState(first, second, t)


@dataclass
class HistoryRow:
    epoch: int
    cost: float
    kl_empirical: float
    kl_true: float  # nan when no true reference is supplied
    grad_norm: float


@dataclass
class TrainResult:
    theta: np.ndarray
    history: list[HistoryRow]
    stopped_by: str
    best_epoch: int

    @property
    def epochs(self) -> int:
        return len(self.history)


def train(
    model,
    reference: ConditionalTable,
    config: TrainConfig,
    theta0: np.ndarray | None = None,
    true_reference: ConditionalTable | None = None,
) -> TrainResult:
    """Minimize the co-emission distortion against `reference` with ADAM.

    Stops when the distortion changes by less than eps_stop between epochs or
    at max_epochs. History holds one row per epoch; the returned parameters
    are the best-seen by distortion, whose metrics sit at history[best_epoch].
    """
    rng = np.random.default_rng(config.seed)
    nslots = _num_slots(model)
    theta = (
        rng.uniform(0.0, 2.0 * np.pi, nslots)
        if theta0 is None
        else np.asarray(theta0, dtype=float).copy()
    )
    ref = _reference_arrays(reference)
    true_ref = _reference_arrays(true_reference) if true_reference is not None else None
    steps = ref.past_steps + ref.future_steps
    state = AdamState.fresh(nslots)
    history: list[HistoryRow] = []
    best_cost, best_theta, best_epoch = np.inf, theta.copy(), -1
    stopped_by = "max_epochs"

    for epoch in range(config.max_epochs):
        joint = model_joint(model, theta, steps)
        cost, _ = _distortion_from_joint(joint, ref)
        if not np.isfinite(cost):
            raise NumericalError(f"non-finite training cost at epoch {epoch}")
        if config.gradient_mode == "exact":
            # adjoint sweep: same exact values as the occurrence-shift sums
            grad = _adjoint_gradient(model, theta, steps, _distortion_cost_vector(joint, ref))
        else:
            djoint = _sampled_jacobian(model, theta, steps, config.samples, rng)
            grad = _distortion_gradient_from_jacobian(joint, djoint, ref)
        kl_emp = _kl_from_joint(joint, ref)
        kl_true = _kl_from_joint(joint, true_ref) if true_ref is not None else float("nan")
        history.append(HistoryRow(epoch, cost, kl_emp, kl_true, float(np.linalg.norm(grad))))
        if cost < best_cost:
            best_cost, best_theta, best_epoch = cost, theta.copy(), epoch
        if epoch > 0 and abs(cost - history[-2].cost) < config.eps_stop:
            stopped_by = "eps_stop"
            break
        theta, state = adam_step(theta, grad, state, config)

    return TrainResult(best_theta, history, stopped_by, best_epoch)


def _sampled_jacobian(model, theta, steps, samples, rng) -> np.ndarray:
    """Per-slot estimate of dQ via the sampled shift rule: for each draw an
    occurrence and a sign are picked uniformly and one output string is
    sampled from that shifted circuit's law. Unbiased for every linear
    functional of dQ; all shifted laws come from one batched sweep."""
    nslots = _num_slots(model)
    probs, circuits = (
        _batched_tree(model, theta, steps, None)
        if isinstance(model, RecurrentModel)
        else _batched_template(model, theta, None)
    )
    dim = probs.shape[1]
    by_slot: dict[int, list[tuple[int, float, int]]] = {}
    for row, (slot, mult, sign) in circuits:
        by_slot.setdefault(slot, []).append((row, mult, sign))
    djoint = np.zeros((nslots, dim))
    for slot in range(nslots):
        variants = by_slot.get(slot, [])
        n = len(variants) // 2  # occurrences; each has a +/- row pair
        if n == 0:
            continue
        counts = rng.multinomial(samples, np.full(len(variants), 1.0 / len(variants)))
        for (row, mult, sign), count in zip(variants, counts):
            if count == 0:
                continue
            law = probs[row] / probs[row].sum()
            drawn = rng.multinomial(count, law)
            djoint[slot] += (n * mult * sign / samples) * drawn
    return djoint


def gradient_landscape_scan(
    model_factory,
    hmm,
    num_inits: int,
    seed: int,
    past_steps: int = 8,
    future_steps: int = 1,
) -> np.ndarray:
    """Magnitude of the training-cost gradient at one random slot for each
    random initialization, for gradient-landscape histograms."""
    if num_inits < 1:
        raise ValueError("num_inits must be >= 1")
    model = model_factory() if callable(model_factory) else model_factory
    reference = true_conditional(hmm, past_steps, future_steps)
    ref = _reference_arrays(reference)
    steps = past_steps + future_steps
    rng = np.random.default_rng(seed)
    nslots = _num_slots(model)
    out = np.empty(num_inits)
    for i in range(num_inits):
        theta = rng.uniform(0.0, 2.0 * np.pi, nslots)
        slot = int(rng.integers(nslots))
        joint, djoint = joint_jacobian(model, theta, steps, slots=[slot])
        grad = _distortion_gradient_from_jacobian(joint, djoint, ref)
        out[i] = abs(grad[slot])
    return out

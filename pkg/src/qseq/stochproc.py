"""Target binary stochastic processes and their estimation from data.

Processes are labeled-edge hidden Markov models; the uniform renewal family
emits runs of 0s (lengths uniform on {0..N-1}) separated by 1s. Conditional
tables map each past window to a probability vector over futures, either
exactly (belief filtering from the stationary state) or empirically (sliding
window counts over one long trajectory).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .qsim import index_to_string

STATIONARY_TOL = 1e-12


class NumericalError(RuntimeError):
    """Raised when a numerical routine cannot meet its accuracy contract."""


@dataclass(frozen=True)
class HiddenMarkovModel:
    """Labeled-edge state machine: edges are (from_state, symbol, to_state, prob)."""

    num_states: int
    edges: tuple[tuple[int, int, int, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        totals = np.zeros(self.num_states)
        for f, sym, t, p in self.edges:
            if not (0 <= f < self.num_states and 0 <= t < self.num_states):
                raise ValueError("edge state out of range")
            if sym not in (0, 1):
                raise ValueError("symbols must be 0 or 1")
            if not 0.0 < p <= 1.0:
                raise ValueError("listed edge probabilities must be in (0, 1]")
            totals[f] += p
        if np.max(np.abs(totals - 1.0)) > 1e-12:
            raise ValueError("outgoing probabilities must sum to 1 per state")

    def symbol_matrices(self) -> np.ndarray:
        """T[x, i, j] = P(emit x and move i -> j)."""
        t = np.zeros((2, self.num_states, self.num_states))
        for f, sym, to, p in self.edges:
            t[sym, f, to] += p
        return t


@dataclass(frozen=True)
class Trajectory:
    symbols: str

    def __post_init__(self) -> None:
        if not self.symbols:
            raise ValueError("trajectory must be non-empty")
        if any(c not in "01" for c in self.symbols):
            raise ValueError("trajectory symbols must be '0'/'1'")

    def __len__(self) -> int:
        return len(self.symbols)

    def bits(self) -> np.ndarray:
        return np.frombuffer(self.symbols.encode("ascii"), dtype=np.uint8) - ord("0")


@dataclass
class TableRow:
    weight: float
    dist: np.ndarray
    degenerate: bool = False


@dataclass
class ConditionalTable:
    """Map from past windows (length past_steps) to weighted future laws
    (vectors over 2**future_steps strings). Pasts that never occur are absent."""

    past_steps: int
    future_steps: int
    rows: dict[str, TableRow] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "M": self.past_steps,
            "L": self.future_steps,
            "rows": {
                past: {"weight": row.weight, "dist": [float(x) for x in row.dist]}
                for past, row in sorted(self.rows.items())
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConditionalTable":
        table = cls(int(d["M"]), int(d["L"]))
        for past, row in d["rows"].items():
            table.rows[past] = TableRow(float(row["weight"]), np.asarray(row["dist"], dtype=float))
        return table


def uniform_renewal(order: int) -> HiddenMarkovModel:
    """Renewal process whose gaps between ticks are uniform on {0..order-1}:
    state j ticks with probability 1/(order - j), else advances to j + 1."""
    if order < 1:
        raise ValueError("order must be >= 1")
    edges = []
    for j in range(order):
        tick = 1.0 / (order - j)
        edges.append((j, 1, 0, tick))
        if j < order - 1:
            edges.append((j, 0, j + 1, 1.0 - tick))
    return HiddenMarkovModel(order, tuple(edges))


def stationary_distribution(hmm: HiddenMarkovModel) -> np.ndarray:
    """Solve pi = pi T for the symbol-marginalized transition matrix."""
    t = hmm.symbol_matrices().sum(axis=0)
    n = hmm.num_states
    a = np.vstack([t.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    residual = float(np.abs(pi @ t - pi).sum())
    if residual > STATIONARY_TOL or np.any(pi < -1e-12) or abs(pi.sum() - 1.0) > 1e-12:
        raise NumericalError(
            f"stationary distribution failed: residual={residual:.3e}, pi={pi}"
        )
    return np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum()


def sample_trajectory(
    hmm: HiddenMarkovModel,
    length: int,
    seed: int,
    init: np.ndarray | None = None,
) -> Trajectory:
    """Draw one length-`length` symbol string, starting from the stationary
    state distribution unless `init` is given. Deterministic per seed."""
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = np.random.default_rng(seed)
    pi = stationary_distribution(hmm) if init is None else np.asarray(init, dtype=float)
    # per-state outcome tables for the inner loop
    cums, syms, nexts = [], [], []
    for s in range(hmm.num_states):
        outs = [(sym, to, p) for f, sym, to, p in hmm.edges if f == s]
        probs = np.array([p for _, _, p in outs])
        cums.append(np.cumsum(probs))
        syms.append([sym for sym, _, _ in outs])
        nexts.append([to for _, to, _ in outs])
    state = int(rng.choice(hmm.num_states, p=pi / pi.sum()))
    draws = rng.random(length)
    out = []
    for u in draws:
        k = int(np.searchsorted(cums[state], u * cums[state][-1], side="right"))
        k = min(k, len(syms[state]) - 1)
        out.append(syms[state][k])
        state = nexts[state][k]
    return Trajectory("".join("01"[x] for x in out))


def true_conditional(hmm: HiddenMarkovModel, past_steps: int, future_steps: int) -> ConditionalTable:
    """Exact conditional table by belief filtering from the stationary state.

    Level d keeps one unnormalized belief per length-d past; row weights are
    the exact past probabilities and zero-probability pasts are omitted.
    """
    if past_steps < 0 or future_steps < 1:
        raise ValueError("need past_steps >= 0 and future_steps >= 1")
    t = hmm.symbol_matrices()
    pi = stationary_distribution(hmm)
    beliefs = pi[None, :]
    for _ in range(past_steps):
        beliefs = np.stack([beliefs @ t[0], beliefs @ t[1]], axis=1).reshape(-1, hmm.num_states)
    weights = beliefs.sum(axis=1)

    table = ConditionalTable(past_steps, future_steps)
    for idx in np.nonzero(weights > 0.0)[0]:
        belief = beliefs[idx] / weights[idx]
        fut = belief[None, :]
        for _ in range(future_steps):
            fut = np.stack([fut @ t[0], fut @ t[1]], axis=1).reshape(-1, hmm.num_states)
        dist = fut.sum(axis=1)
        table.rows[index_to_string(int(idx), past_steps)] = TableRow(float(weights[idx]), dist)
    return table


def count_windows(traj: Trajectory, past_steps: int, future_steps: int) -> ConditionalTable:
    """Empirical conditional table from all length-(past+future) windows of the
    trajectory (stride 1). Row weights are past frequencies among windows."""
    width = past_steps + future_steps
    if len(traj) < width:
        raise ValueError(f"trajectory shorter than window width {width}")
    bits = traj.bits().astype(np.int64)
    powers = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    windows = np.lib.stride_tricks.sliding_window_view(bits, width)
    codes = windows @ powers
    counts = np.bincount(codes, minlength=1 << width).reshape(1 << past_steps, 1 << future_steps)
    past_counts = counts.sum(axis=1)
    total = past_counts.sum()

    table = ConditionalTable(past_steps, future_steps)
    for idx in np.nonzero(past_counts)[0]:
        table.rows[index_to_string(int(idx), past_steps)] = TableRow(
            weight=float(past_counts[idx] / total),
            dist=counts[idx] / past_counts[idx],
        )
    return table


# --- file formats ----------------------------------------------------------------


def save_trajectory(path, traj: Trajectory) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(traj.symbols)
        fh.write("\n")


def load_trajectory(path) -> Trajectory:
    with open(path, encoding="ascii") as fh:
        return Trajectory(fh.read().strip())


def save_table(path, table: ConditionalTable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(table.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_table(path) -> ConditionalTable:
    with open(path, encoding="utf-8") as fh:
        return ConditionalTable.from_dict(json.load(fh))


def save_hmm(path, hmm: HiddenMarkovModel) -> None:
    doc = {"num_states": hmm.num_states,
           "edges": [list(e) for e in hmm.edges]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_hmm(path) -> HiddenMarkovModel:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return HiddenMarkovModel(int(d["num_states"]),
                             tuple((e[0], e[1], e[2], e[3]) for e in d["edges"]))

"""Divergence measures between conditional tables.

Both metrics average over pasts with the reference table's weights and report
nats per future step. The model side is either another conditional table or a
live conditional query (anything with a `conditional(past)` method, e.g.
ansatz.ConditionalView); missing or degenerate model rows fall back to the
uniform distribution and are counted as degenerate.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .stochproc import ConditionalTable

EPS_Q = 1e-12
EPS_COSINE = 1e-12


@dataclass(frozen=True)
class OverlapTerms:
    """Squared norms, dot product and cosine similarity of two distributions."""

    p_norm_sq: float
    q_norm_sq: float
    dot: float
    cosine: float


def overlap_terms(p: np.ndarray, q: np.ndarray) -> OverlapTerms:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions must have equal length")
    for name, v in (("p", p), ("q", q)):
        if abs(v.sum() - 1.0) > 1e-9:
            raise ValueError(f"{name} must sum to 1")
    p_sq = float(p @ p)
    q_sq = float(q @ q)
    if p_sq == 0.0 or q_sq == 0.0:
        raise ValueError("zero-norm vector")
    dot = float(p @ q)
    return OverlapTerms(p_sq, q_sq, dot, dot / np.sqrt(p_sq * q_sq))


class MetricValue(NamedTuple):
    nats: float
    degenerate_rows: int


def _model_rows(reference: ConditionalTable, model):
    """Yield (weight, p, q, degenerate) over the reference rows."""
    if isinstance(model, ConditionalTable):
        if (model.past_steps, model.future_steps) != (
            reference.past_steps,
            reference.future_steps,
        ):
            raise ValueError("tables must share the same horizon")
        dim = 1 << reference.future_steps
        for past, row in reference.rows.items():
            mrow = model.rows.get(past)
            if mrow is None:
                yield row.weight, row.dist, np.full(dim, 1.0 / dim), True
            else:
                yield row.weight, row.dist, mrow.dist, mrow.degenerate
    else:
        for past, row in reference.rows.items():
            dist, degenerate = model.conditional(past)
            yield row.weight, row.dist, dist, degenerate


def _kl_term(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0.0
    return float(np.sum(p[mask] * np.log(p[mask] / np.maximum(q[mask], EPS_Q))))


def kl_rate(reference: ConditionalTable, model) -> float:
    """Per-step KL divergence of the model's conditional futures from the
    reference's, averaged over pasts with the reference weights. Natural log;
    model probabilities are floored at EPS_Q so the result stays finite."""
    return kl_rate_detailed(reference, model).nats


def kl_rate_detailed(reference: ConditionalTable, model) -> MetricValue:
    total, degenerate = 0.0, 0
    for weight, p, q, flag in _model_rows(reference, model):
        total += weight * _kl_term(p, q)
        degenerate += int(flag)
    return MetricValue(total / reference.future_steps, degenerate)


def co_emission(reference: ConditionalTable, model) -> float:
    """Co-emission distortion: negative log cosine similarity between the
    conditional futures, averaged over pasts, per future step. The cosine is
    floored at EPS_COSINE so orthogonal rows stay finite."""
    return co_emission_detailed(reference, model).nats


def co_emission_detailed(reference: ConditionalTable, model) -> MetricValue:
    total, degenerate = 0.0, 0
    for weight, p, q, flag in _model_rows(reference, model):
        terms = overlap_terms(p, q)
        total -= weight * np.log(max(terms.cosine, EPS_COSINE))
        degenerate += int(flag)
    return MetricValue(total / reference.future_steps, degenerate)


def total_variation(reference: ConditionalTable, other: ConditionalTable) -> float:
    """Reference-weighted total-variation distance between the tables' rows;
    rows absent from `other` count the maximal distance 1. Test helper."""
    total = 0.0
    for past, row in reference.rows.items():
        orow = other.rows.get(past)
        if orow is None:
            total += row.weight
        else:
            total += row.weight * 0.5 * float(np.abs(row.dist - orow.dist).sum())
    return total


def metric_report(reference: ConditionalTable, model, metric: str) -> dict:
    """JSON-ready report for the CLI eval command."""
    if metric == "kl":
        value = kl_rate_detailed(reference, model)
    elif metric == "coemission":
        value = co_emission_detailed(reference, model)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return {
        "metric": metric,
        "M": reference.past_steps,
        "L": reference.future_steps,
        "value_nats": value.nats,
        "degenerate_rows": value.degenerate_rows,
    }

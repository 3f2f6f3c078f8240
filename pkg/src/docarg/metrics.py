"""Span/Head F1, the five-way error taxonomy, and role co-occurrence.

Scoring conventions:
  * identification mode matches on the span only; classification mode on
    span and role;
  * duplicate predictions (same matching key) are deduplicated up front,
    keeping the highest score;
  * golds form a multiset and each gold is consumed at most once, greedily
    in descending prediction-score order;
  * 0/0 ratios are defined as 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .data import EventInstance, Prediction

ERROR_CATEGORIES = ("Wrong Span", "Over-extract", "Partial", "Overlap", "Wrong Role")

GoldArg = tuple[str, int, int]


def last_word_head(span: tuple[int, int]) -> int:
    """Default head extractor: the final word of the span."""
    return span[1]


def _dedup(preds: Sequence[Prediction], key: Callable[[Prediction], tuple]) -> list[Prediction]:
    best: dict[tuple, Prediction] = {}
    for p in preds:
        k = key(p)
        if k not in best or p.score > best[k].score:
            best[k] = p
    return sorted(best.values(), key=lambda p: -p.score)


def _prf(tp: int, n_pred: int, n_gold: int) -> tuple[float, float, float]:
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _matched_f1(
    pred_events: Sequence[Sequence[Prediction]],
    gold_events: Sequence[Sequence[GoldArg]],
    pred_key: Callable[[Prediction], tuple],
    gold_key: Callable[[GoldArg], tuple],
) -> tuple[float, float, float]:
    if len(pred_events) != len(gold_events):
        raise ValueError(
            f"prediction/gold event counts differ: {len(pred_events)} vs {len(gold_events)}"
        )
    tp = n_pred = n_gold = 0
    for preds, golds in zip(pred_events, gold_events):
        remaining: dict[tuple, int] = {}
        for g in golds:
            k = gold_key(g)
            remaining[k] = remaining.get(k, 0) + 1
        n_gold += len(golds)
        deduped = _dedup(preds, pred_key)
        n_pred += len(deduped)
        for p in deduped:
            k = pred_key(p)
            if remaining.get(k, 0) > 0:
                remaining[k] -= 1
                tp += 1
    return _prf(tp, n_pred, n_gold)


def span_f1(
    pred_events: Sequence[Sequence[Prediction]],
    gold_events: Sequence[Sequence[GoldArg]],
    mode: str = "classification",
) -> tuple[float, float, float]:
    """Exact-span (P, R, F1); classification mode also requires the role to match."""
    if mode == "identification":
        return _matched_f1(
            pred_events, gold_events, lambda p: (p.start, p.end), lambda g: (g[1], g[2])
        )
    if mode == "classification":
        return _matched_f1(
            pred_events, gold_events,
            lambda p: (p.role, p.start, p.end), lambda g: (g[0], g[1], g[2]),
        )
    raise ValueError(f"unknown mode {mode!r}")


def head_f1(
    pred_events: Sequence[Sequence[Prediction]],
    gold_events: Sequence[Sequence[GoldArg]],
    head_fn: Callable[[tuple[int, int]], int] = last_word_head,
    mode: str = "classification",
) -> tuple[float, float, float]:
    """Like span_f1 but a match only needs the head word (plus role in classification)."""
    if mode == "identification":
        return _matched_f1(
            pred_events, gold_events,
            lambda p: (head_fn((p.start, p.end)),), lambda g: (head_fn((g[1], g[2])),),
        )
    if mode == "classification":
        return _matched_f1(
            pred_events, gold_events,
            lambda p: (p.role, head_fn((p.start, p.end))), lambda g: (g[0], head_fn((g[1], g[2]))),
        )
    raise ValueError(f"unknown mode {mode!r}")


def classify_error(pred: Prediction, golds_for_event: Sequence[GoldArg]) -> str:
    """Assign one taxonomy category to a non-true-positive prediction.

    Precedence: exact span with the wrong role > role absent from the event's
    golds > (within the same role) strict sub-span > any overlap > disjoint.
    Returns "CORRECT" if the prediction is actually a true positive.
    """
    ps, pe = pred.start, pred.end
    for role, gs, ge in golds_for_event:
        if (gs, ge) == (ps, pe) and role == pred.role:
            return "CORRECT"
    for role, gs, ge in golds_for_event:
        if (gs, ge) == (ps, pe):
            return "Wrong Role"
    same_role = [(gs, ge) for role, gs, ge in golds_for_event if role == pred.role]
    if not same_role:
        return "Over-extract"
    for gs, ge in same_role:
        if gs <= ps and pe <= ge and (gs, ge) != (ps, pe):
            return "Partial"
    for gs, ge in same_role:
        if ps <= ge and gs <= pe:
            return "Overlap"
    return "Wrong Span"


@dataclass
class ErrorReport:
    counts: dict[str, int]
    total: int

    def to_dict(self) -> dict:
        return {"counts": dict(self.counts), "total": self.total}


def count_errors(
    pred_events: Sequence[Sequence[Prediction]],
    gold_events: Sequence[Sequence[GoldArg]],
) -> ErrorReport:
    """Classify every non-true-positive prediction; categories partition them."""
    counts = {c: 0 for c in ERROR_CATEGORIES}
    for preds, golds in zip(pred_events, gold_events):
        remaining: dict[tuple, int] = {}
        for role, s, e in golds:
            remaining[(role, s, e)] = remaining.get((role, s, e), 0) + 1
        for p in _dedup(preds, lambda p: (p.role, p.start, p.end)):
            key = (p.role, p.start, p.end)
            if remaining.get(key, 0) > 0:
                remaining[key] -= 1
                continue
            counts[classify_error(p, golds)] += 1
    return ErrorReport(counts=counts, total=sum(counts.values()))


def role_cooccurrence(
    instances: Sequence[EventInstance], roles: Sequence[str] | None = None
) -> tuple[np.ndarray, list[str]]:
    """Symmetric co-occurrence ratios over events, zero on the diagonal.

    Entry (a, b) is co(a, b) / (tot(a) + tot(b)) where tot counts events in
    which the role is filled by at least one gold argument and co counts
    events where both are. Undefined ratios (0 / 0) are 0.
    """
    if roles is None:
        roles = sorted({r for inst in instances for r in inst.roles})
    roles = list(roles)
    index = {r: i for i, r in enumerate(roles)}
    n = len(roles)
    tot = np.zeros(n)
    co = np.zeros((n, n))
    for inst in instances:
        filled = sorted({index[r] for r, _, _ in inst.gold_args if r in index})
        for a in filled:
            tot[a] += 1
        for i, a in enumerate(filled):
            for b in filled[i + 1 :]:
                co[a, b] += 1
                co[b, a] += 1
    denom = tot[:, None] + tot[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        M = np.where(denom > 0, co / denom, 0.0)
    np.fill_diagonal(M, 0.0)
    return M, roles

"""Span-based extraction: enumerate candidate spans, fuse each with its clue
and role vectors, score every (span, role) pair, and decode by argmax.

Per-role triple scores are sigmoids, but the loss and the argmax decoding
need one normalized distribution per span, so the pre-sigmoid logits are
bridged through a softmax over the event's roles + none. Candidate spans are
positive for a role only on exact word-boundary match with a gold span;
everything else is "none".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from .backends import fan_init_
from .data import EventInstance, Prediction, RoleLabelSet
from .encoding import EncodingResult, encode, encode_long
from .exceptions import SequenceError
from .role_guidance import TripleScoreModel, tucker_score_all
from .sequences import MarkedSequence


@dataclass(frozen=True)
class FocalLossConfig:
    alpha: float = 10.0
    gamma: float = 2.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")


def enumerate_spans(n_words: int, max_len: int) -> list[tuple[int, int]]:
    """All (start, end) inclusive word spans of length <= max_len, in (i, j) order."""
    return [
        (i, j)
        for i in range(n_words)
        for j in range(i, min(i + max_len, n_words))
    ]


def fuse_parts(parts: list[torch.Tensor], W: torch.Tensor) -> torch.Tensor:
    """tanh of the concatenated parts projected by W; rows stay in (-1, 1)."""
    return torch.tanh(torch.cat(parts, dim=-1) @ W)


def segment_means(H: torch.Tensor, starts: torch.Tensor, ends: torch.Tensor) -> torch.Tensor:
    """Row means of H over inclusive [start, end] segments, one per segment.

    Bucketing by segment length keeps this vectorized while reproducing the
    float result of ``H[s:e+1].mean(0)`` bit for bit (unlike prefix sums).
    """
    lens = ends - starts + 1
    out = torch.empty(starts.shape[0], H.shape[1], dtype=H.dtype, device=H.device)
    for length in lens.unique().tolist():
        mask = lens == length
        idx = starts[mask].unsqueeze(1) + torch.arange(length, device=H.device)
        out[mask] = H[idx].mean(dim=1)
    return out


def fuse_span(
    H_C: torch.Tensor,
    span: tuple[int, int],
    clue,
    role,
    W_span: torch.Tensor,
) -> torch.Tensor:
    """Fused representation of one span: mean-pooled pieces, clue, role vector."""
    i, j = span
    if not (0 <= i <= j < H_C.shape[0]):
        raise SequenceError(f"span ({i}, {j}) empty or outside context of {H_C.shape[0]} pieces")
    pooled = H_C[i : j + 1].mean(dim=0)
    return fuse_parts([pooled, clue.c, role.r], W_span)


def focal_loss(
    logits: torch.Tensor,
    gold_labels: torch.Tensor,
    cfg: FocalLossConfig,
    counters: dict | None = None,
) -> torch.Tensor:
    """Summed focal loss over candidate spans.

    ``logits`` is [n_spans, l_r]; each span has exactly one gold label.
    Log-probabilities below log(1e-12) are clamped (counted in
    ``counters["clamped_log_probs"]`` when a dict is supplied).
    """
    logp = torch.log_softmax(logits, dim=-1)
    logp_y = logp.gather(1, gold_labels.view(-1, 1)).squeeze(1)
    floor = math.log(1e-12)
    n_clamped = int((logp_y < floor).sum())
    if n_clamped and counters is not None:
        counters["clamped_log_probs"] = counters.get("clamped_log_probs", 0) + n_clamped
    p_y = logp_y.exp()
    return (cfg.alpha * (1.0 - p_y) ** cfg.gamma * (-logp_y.clamp_min(floor))).sum()


def gold_span_labels(
    instance: EventInstance,
    spans: list[tuple[int, int]],
    counters: dict | None = None,
) -> torch.Tensor:
    """Event-local label per candidate span: role position in the inventory, or none.

    A span matching gold spans of two different roles keeps the first role in
    inventory order (counted in ``counters["conflicting_gold_spans"]``).
    """
    none_label = len(instance.roles)
    by_span: dict[tuple[int, int], int] = {}
    for role, s, e in instance.gold_args:
        idx = instance.roles.index(role)
        if (s, e) in by_span and by_span[(s, e)] != idx:
            if counters is not None:
                counters["conflicting_gold_spans"] = counters.get("conflicting_gold_spans", 0) + 1
            by_span[(s, e)] = min(by_span[(s, e)], idx)
        else:
            by_span[(s, e)] = idx
    return torch.tensor([by_span.get(sp, none_label) for sp in spans], dtype=torch.long)


@dataclass
class SpanScores:
    """Scores and intermediate weights for every candidate span of one event."""

    spans: list[tuple[int, int]]
    logits: torch.Tensor  # [n_spans, l_r], role columns follow inventory order, none last
    probs: torch.Tensor  # sigmoid(logits)
    clue_attn: torch.Tensor | None  # [n_spans, l_w]
    role_attn: torch.Tensor | None  # [n_spans, l_r]
    reps: torch.Tensor  # fused span representations [n_spans, d]
    h_t: torch.Tensor  # trigger representation [d]


class SpanArgumentModel(nn.Module):
    """The full span variant; clue and role branches are independently removable.

    With the role-guidance branch active, scoring goes through
    :class:`TripleScoreModel`; without it, a plain linear classifier over
    [h_t; span_rep] plays the baseline. With both branches removed the span
    representation is exactly the mean-pooled hidden state.
    """

    def __init__(
        self,
        backend,
        labels: RoleLabelSet,
        d_reduced: int = 8,
        d_interaction: int = 16,
        use_cca: bool = True,
        use_rlig: bool = True,
        max_span_length: int = 8,
        window: int | None = None,
        stride: int | None = None,
    ):
        super().__init__()
        self.backend = backend
        self.labels = labels
        self.use_cca = use_cca
        self.use_rlig = use_rlig
        self.max_span_length = max_span_length
        self.window = window
        self.stride = stride
        d = backend.d
        n_parts = 1 + int(use_cca) + int(use_rlig)
        if n_parts > 1:
            self.W_span = nn.Parameter(fan_init_(torch.empty(n_parts * d, d)))
        else:
            self.W_span = None
        if use_rlig:
            self.scorer = TripleScoreModel(
                d, d_reduced, d_interaction, labels.n_labels, none_label=labels.none_id
            )
            self.classifier = None
        else:
            self.scorer = None
            self.classifier = nn.Linear(2 * d, labels.n_labels)
            fan_init_(self.classifier.weight)
            nn.init.zeros_(self.classifier.bias)
            with torch.no_grad():
                self.classifier.bias[labels.none_id] = math.log(0.975 / 0.025)

    def encode_sequence(self, seq: MarkedSequence) -> EncodingResult:
        if self.window is not None and len(seq) > self.window:
            return encode_long(seq, self.backend, self.window, self.stride or self.window // 2)
        if len(seq) > self.backend.max_tokens:
            return encode_long(
                seq, self.backend, self.backend.max_tokens, self.stride or self.backend.max_tokens // 2
            )
        return encode(seq, self.backend)

    def forward(self, seq: MarkedSequence, enc: EncodingResult | None = None) -> SpanScores:
        if enc is None:
            enc = self.encode_sequence(seq)
        H_C, H_R = enc.H_C, enc.H_R
        l_w, d = H_C.shape
        dtype = H_C.dtype

        n_words = len(seq.word_to_pieces)
        spans = enumerate_spans(n_words, self.max_span_length)
        first_ctx = torch.tensor(
            [seq.context_coord(lo) for lo, _ in seq.word_to_pieces], dtype=torch.long
        )
        last_ctx = torch.tensor(
            [seq.context_coord(hi) for _, hi in seq.word_to_pieces], dtype=torch.long
        )
        starts = first_ctx[torch.tensor([s for s, _ in spans], dtype=torch.long)]
        ends = last_ctx[torch.tensor([e for _, e in spans], dtype=torch.long)]
        lens = (ends - starts + 1).to(dtype).unsqueeze(1)

        pooled = segment_means(H_C, starts, ends)

        ti, tj = seq.trigger_context_range()
        h_t = H_C[ti : tj + 1].mean(dim=0)

        parts = [pooled]
        clue_attn = role_attn = None
        if self.use_cca:
            P = enc.A_C.mean(dim=0)  # [l_w, l_w]
            cum_P = torch.cat([torch.zeros(1, l_w, dtype=dtype), P.cumsum(0)])
            span_prof = (cum_P[ends + 1] - cum_P[starts]) / lens
            trig_prof = P[ti : tj + 1].mean(dim=0)
            clue_attn = torch.softmax(span_prof * trig_prof.unsqueeze(0), dim=-1)
            parts.append(clue_attn @ H_C)
        if self.use_rlig:
            R = enc.A_R.mean(dim=0)  # [l_w, l_r]
            cum_R = torch.cat([torch.zeros(1, R.shape[1], dtype=dtype), R.cumsum(0)])
            span_role = (cum_R[ends + 1] - cum_R[starts]) / lens
            trig_role = R[ti : tj + 1].mean(dim=0)
            role_attn = torch.softmax(span_role * trig_role.unsqueeze(0), dim=-1)
            parts.append(role_attn @ H_R)

        reps = parts[0] if self.W_span is None else fuse_parts(parts, self.W_span)

        label_ids = torch.tensor(
            [self.labels.label_id(r) for r in seq.roles] + [self.labels.none_id],
            dtype=torch.long,
        )
        if self.use_rlig:
            H_R_reduced = self.scorer.reduced_roles(H_R)
            logits = tucker_score_all(self.scorer, h_t, reps, H_R_reduced, label_ids)
        else:
            joined = torch.cat([h_t.expand(reps.shape[0], -1), reps], dim=-1)
            logits = self.classifier(joined)[:, label_ids]

        return SpanScores(
            spans=spans,
            logits=logits,
            probs=torch.sigmoid(logits),
            clue_attn=clue_attn,
            role_attn=role_attn,
            reps=reps,
            h_t=h_t,
        )


def score_all(instance: EventInstance, enc: EncodingResult, model: SpanArgumentModel) -> torch.Tensor:
    """Probability matrix [n_spans, l_r] for every candidate (span, role) pair."""
    return model(enc.seq, enc).probs


def decode_predictions(scores: SpanScores, roles: tuple[str, ...]) -> list[Prediction]:
    """Argmax role per span; "none" spans dropped, shared-role spans all kept.

    Ties break toward the lower role index (argmax picks the first maximum)
    and spans arrive in enumeration order.
    """
    if not torch.isfinite(scores.logits).all():
        raise SequenceError("non-finite span scores")
    none_label = len(roles)
    probs = torch.softmax(scores.logits, dim=-1)
    best = scores.logits.argmax(dim=-1)
    out: list[Prediction] = []
    for idx, (span, label) in enumerate(zip(scores.spans, best.tolist())):
        if label == none_label:
            continue
        out.append(
            Prediction(
                role=roles[label],
                start=span[0],
                end=span[1],
                score=float(probs[idx, label]),
            )
        )
    return out

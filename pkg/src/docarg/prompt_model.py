"""Prompt-based extraction: fuse each template slot with its clue and role
vectors, turn the fused state into start/end span selectors, and train with a
bipartite matching loss over the slots sharing a role.

Start/end distributions run over the context positions plus one leading
EMPTY sentinel (row 0, anchored on the [CLS] state), so a slot can stay
unfilled. Slots take the place of candidate arguments: their attention rows
replace span attention rows in the clue and role aggregation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from scipy.optimize import linear_sum_assignment
from torch import nn

from .backends import fan_init_
from .context_clues import combine_profiles, pool_rows
from .data import EventInstance, Prediction
from .encoding import EncodingResult, decode, encode, encode_long
from .exceptions import SequenceError
from .sequences import MarkedSequence
from .span_model import fuse_parts


@dataclass(frozen=True)
class SpanChoice:
    """Outcome of span selection in selector row coordinates (EMPTY allowed)."""

    start: int
    end: int
    score: float
    is_empty: bool = False


@dataclass
class SlotLogits:
    """Per-slot selector logits; index 0 is the EMPTY sentinel."""

    role: str
    start_logits: torch.Tensor  # [1 + l_w]
    end_logits: torch.Tensor  # [1 + l_w]


def fuse_slot(h_slot: torch.Tensor, clue, role, W_prompt: torch.Tensor) -> torch.Tensor:
    """Fused slot state: tanh(W [h_slot; c; r]), componentwise in (-1, 1)."""
    return fuse_parts([h_slot, clue.c, role.r], W_prompt)


def make_selectors(
    h_tilde: torch.Tensor, w_start: torch.Tensor, w_end: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """Start/end selectors via elementwise products with the shared vectors."""
    return h_tilde * w_start, h_tilde * w_end


def choose_span(
    start_logits: torch.Tensor,
    end_logits: torch.Tensor,
    max_len: int,
    has_sentinel: bool,
) -> SpanChoice:
    """Best (s, e) with s <= e and length <= max_len, against the EMPTY option.

    EMPTY scores start[0] + end[0] and wins ties. With a sentinel, returned
    coordinates are shifted back into context coordinates.
    """
    start_logits = start_logits.detach()
    end_logits = end_logits.detach()
    n = start_logits.shape[0]
    offset = 1 if has_sentinel else 0
    if n - offset < 1:
        raise SequenceError("empty context")
    M = start_logits.unsqueeze(1) + end_logits.unsqueeze(0)
    rows = torch.arange(n).unsqueeze(1)
    cols = torch.arange(n).unsqueeze(0)
    valid = (cols >= rows) & (cols - rows < max_len) & (rows >= offset)
    scores = M.masked_fill(~valid, float("-inf"))
    flat = int(scores.argmax())
    s, e = divmod(flat, n)
    best = float(scores[s, e])
    empty_score = float(start_logits[0] + end_logits[0])
    if empty_score >= best:
        return SpanChoice(start=-1, end=-1, score=empty_score, is_empty=True)
    return SpanChoice(start=s - offset, end=e - offset, score=best)


def select_span(
    phi_start: torch.Tensor,
    phi_end: torch.Tensor,
    H_context: torch.Tensor,
    max_len: int,
    sentinel: torch.Tensor | None = None,
) -> SpanChoice:
    """Apply the selectors to context states and pick the best span or EMPTY.

    Without an explicit sentinel the first context row doubles as the EMPTY
    anchor (and EMPTY wins the tie against the (0, 0) span).
    """
    if H_context.shape[0] < 1:
        raise SequenceError("empty context")
    rows = H_context if sentinel is None else torch.cat([sentinel.unsqueeze(0), H_context])
    start_logits = rows @ phi_start
    end_logits = rows @ phi_end
    return choose_span(start_logits, end_logits, max_len, has_sentinel=sentinel is not None)


def bipartite_loss(
    slot_logit_sets: list[SlotLogits],
    gold_spans_by_role: dict[str, list[tuple[int, int]]],
    counters: dict | None = None,
) -> torch.Tensor:
    """Matching loss over each role's slot group.

    Gold spans arrive in context coordinates; internally they shift by one
    for the EMPTY sentinel. Within a role group, golds are assigned to slots
    by minimum-cost matching on -(log p_start + log p_end); unmatched slots
    target EMPTY. Golds beyond the group's slot count are dropped (counted in
    ``counters["dropped_golds"]``).
    """
    lp_start = [torch.log_softmax(sl.start_logits, dim=-1) for sl in slot_logit_sets]
    lp_end = [torch.log_softmax(sl.end_logits, dim=-1) for sl in slot_logit_sets]

    groups: dict[str, list[int]] = {}
    for idx, sl in enumerate(slot_logit_sets):
        groups.setdefault(sl.role, []).append(idx)

    def drop(n: int):
        if n and counters is not None:
            counters["dropped_golds"] = counters.get("dropped_golds", 0) + n

    if slot_logit_sets:
        loss = torch.zeros((), dtype=lp_start[0].dtype, device=lp_start[0].device)
    else:
        loss = torch.zeros(())
    for role, golds in gold_spans_by_role.items():
        if role not in groups:
            drop(len(golds))
    for role, slot_ids in groups.items():
        golds = gold_spans_by_role.get(role, [])
        targets = {sid: (0, 0) for sid in slot_ids}
        if golds:
            cost = np.empty((len(slot_ids), len(golds)), dtype=np.float64)
            for a, sid in enumerate(slot_ids):
                ls, le = lp_start[sid].detach(), lp_end[sid].detach()
                for b, (gs, ge) in enumerate(golds):
                    cost[a, b] = -float(ls[gs + 1] + le[ge + 1])
            rows, cols = linear_sum_assignment(cost)
            for a, b in zip(rows, cols):
                gs, ge = golds[b]
                targets[slot_ids[a]] = (gs + 1, ge + 1)
            drop(len(golds) - len(rows))
        for sid, (ts, te) in targets.items():
            loss = loss - (lp_start[sid][ts] + lp_end[sid][te])
    return loss


@dataclass
class PromptOutput:
    """Per-slot selector logits and the intermediate attention weights."""

    slot_roles: tuple[str, ...]
    slot_logits: list[SlotLogits]
    h_tilde: torch.Tensor  # [n_slots, d]
    clue_attn: torch.Tensor | None  # [n_slots, l_w]
    role_attn: torch.Tensor | None  # [n_slots, l_r]


class PromptArgumentModel(nn.Module):
    """The full prompt variant; clue and role branches are removable.

    With both branches removed the slot state is exactly the decoder output
    at the slot position, which is the plain prompt baseline.
    """

    def __init__(
        self,
        backend,
        use_cca: bool = True,
        use_rlig: bool = True,
        max_span_length: int = 10,
        window: int | None = None,
        stride: int | None = None,
    ):
        super().__init__()
        self.backend = backend
        self.use_cca = use_cca
        self.use_rlig = use_rlig
        self.max_span_length = max_span_length
        self.window = window
        self.stride = stride
        d = backend.d
        n_parts = 1 + int(use_cca) + int(use_rlig)
        if n_parts > 1:
            self.W_prompt = nn.Parameter(fan_init_(torch.empty(n_parts * d, d)))
        else:
            self.W_prompt = None
        self.w_start = nn.Parameter(torch.ones(d))
        self.w_end = nn.Parameter(torch.ones(d))

    def encode_sequence(self, seq: MarkedSequence) -> EncodingResult:
        if self.window is not None and len(seq) > self.window:
            return encode_long(seq, self.backend, self.window, self.stride or self.window // 2)
        return encode(seq, self.backend)

    def forward(self, seq: MarkedSequence, enc: EncodingResult | None = None) -> PromptOutput:
        if not seq.slot_index:
            return PromptOutput(seq.slot_roles, [], torch.empty(0), None, None)
        if enc is None:
            enc = self.encode_sequence(seq)
        H_de = decode(enc, self.backend)
        H_ctx_de = H_de[enc.ctx_index]
        sentinel = H_de[0]  # the [CLS] state anchors the EMPTY option

        trig_rows = (seq.trigger_pieces[0], seq.trigger_pieces[-1])
        A_ctx_cols = enc.A[:, :, enc.ctx_index]
        A_role_cols = enc.A[:, :, enc.role_index] if self.use_rlig else None
        trig_ctx_prof = pool_rows(A_ctx_cols, trig_rows)
        trig_role_prof = pool_rows(A_role_cols, trig_rows) if self.use_rlig else None

        states = []
        clue_rows, role_rows = [], []
        for (lo, hi) in seq.slot_piece_ranges:
            h_slot = H_de[lo]
            parts = [h_slot]
            if self.use_cca:
                p = combine_profiles(pool_rows(A_ctx_cols, (lo, hi)), trig_ctx_prof)
                clue_rows.append(p)
                parts.append(enc.H_C.T @ p)
            if self.use_rlig:
                p = combine_profiles(pool_rows(A_role_cols, (lo, hi)), trig_role_prof)
                role_rows.append(p)
                parts.append(enc.H_R.T @ p)
            states.append(parts[0] if self.W_prompt is None else fuse_parts(parts, self.W_prompt))
        h_tilde = torch.stack(states)

        rows = torch.cat([sentinel.unsqueeze(0), H_ctx_de])
        slot_logits = []
        for k, role in enumerate(seq.slot_roles):
            phi_start, phi_end = make_selectors(h_tilde[k], self.w_start, self.w_end)
            slot_logits.append(
                SlotLogits(role=role, start_logits=rows @ phi_start, end_logits=rows @ phi_end)
            )
        return PromptOutput(
            slot_roles=seq.slot_roles,
            slot_logits=slot_logits,
            h_tilde=h_tilde,
            clue_attn=torch.stack(clue_rows) if clue_rows else None,
            role_attn=torch.stack(role_rows) if role_rows else None,
        )

    def loss(
        self,
        seq: MarkedSequence,
        out: PromptOutput,
        instance: EventInstance,
        counters: dict | None = None,
    ) -> torch.Tensor:
        golds: dict[str, list[tuple[int, int]]] = {}
        for role, s, e in instance.gold_args:
            golds.setdefault(role, []).append(seq.word_span_to_context_range(s, e))
        return bipartite_loss(out.slot_logits, golds, counters=counters)

    def predict(self, seq: MarkedSequence, out: PromptOutput) -> list[Prediction]:
        preds: list[Prediction] = []
        for sl in out.slot_logits:
            choice = choose_span(sl.start_logits, sl.end_logits, self.max_span_length, True)
            if choice.is_empty:
                continue
            preds.append(
                Prediction(
                    role=sl.role,
                    start=seq.context_word_of(choice.start),
                    end=seq.context_word_of(choice.end),
                    score=choice.score,
                )
            )
        return preds

"""Context clues aggregation (CCA).

The module reuses the encoder's own final-layer attention rather than
training new attention layers. For a candidate argument and the trigger it
pools their attention rows, combines the two profiles, and aggregates the
context hidden states into a single clue vector:

    p = softmax(a_span * a_trig)        (elementwise over token positions)
    c = H_C^T p

The profiles combine elementwise, not as a scalar dot product: a scalar
could not be normalized into a per-token weight vector. Positions excluded
by the optional mask are set to -inf before the softmax, so clues can only
come from document tokens.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .exceptions import SequenceError


@dataclass
class AttentionProfile:
    """Head- and row-averaged attention over context positions."""

    weights: torch.Tensor  # [l_w], nonnegative


@dataclass
class ClueVector:
    """The aggregated clue vector and the weight distribution that built it."""

    c: torch.Tensor  # [d]
    attn: torch.Tensor  # [l_w], sums to 1


def pool_rows(A: torch.Tensor, span: tuple[int, int]) -> torch.Tensor:
    """Mean over heads and the span's query rows of a [heads, rows, cols] tensor."""
    if A.numel() == 0:
        raise SequenceError("empty attention tensor")
    i, j = span
    if not (0 <= i <= j < A.shape[1]):
        raise SequenceError(f"span ({i}, {j}) out of range for {A.shape[1]} rows")
    return A[:, i : j + 1, :].mean(dim=(0, 1))


def pool_attention(A_C: torch.Tensor, span: tuple[int, int]) -> AttentionProfile:
    """Attention profile of a context span (or the trigger's piece range)."""
    return AttentionProfile(weights=pool_rows(A_C, span))


def combine_profiles(
    a_span: torch.Tensor,
    a_trig: torch.Tensor,
    mask: torch.Tensor | None = None,
) -> torch.Tensor:
    """softmax of the elementwise product of two attention profiles."""
    if a_span.shape != a_trig.shape:
        raise SequenceError(
            f"profile length mismatch: {tuple(a_span.shape)} vs {tuple(a_trig.shape)}"
        )
    if not (torch.isfinite(a_span).all() and torch.isfinite(a_trig).all()):
        raise SequenceError("non-finite attention profile")
    logits = a_span * a_trig
    if mask is not None:
        if not bool(mask.any()):
            raise SequenceError("mask excludes every position")
        logits = logits.masked_fill(~mask, float("-inf"))
    return torch.softmax(logits, dim=-1)


def clue_vector(
    H_C: torch.Tensor,
    a_span: AttentionProfile | torch.Tensor,
    a_trig: AttentionProfile | torch.Tensor,
    mask: torch.Tensor | None = None,
) -> ClueVector:
    """Aggregate context hidden states under the combined span/trigger profile."""
    ws = a_span.weights if isinstance(a_span, AttentionProfile) else a_span
    wt = a_trig.weights if isinstance(a_trig, AttentionProfile) else a_trig
    if H_C.shape[0] != ws.shape[0]:
        raise SequenceError(
            f"H_C has {H_C.shape[0]} rows but profiles have length {ws.shape[0]}"
        )
    p = combine_profiles(ws, wt, mask=mask)
    return ClueVector(c=H_C.T @ p, attn=p)

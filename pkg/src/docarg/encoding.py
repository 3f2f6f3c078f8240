"""Run a backend over a marked sequence and slice out the pieces of interest.

``encode`` handles inputs that fit the backend; ``encode_long`` covers
over-length inputs with overlapping context windows. The non-context blocks
(everything before and after the document words) are replicated into every
window so role and event tokens are visible to all context tokens. Hidden
states of a token covered by several windows are averaged; attention rows are
averaged in global coordinates and then renormalized so each row stays a
probability distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .exceptions import BackendError
from .sequences import MarkedSequence


@dataclass
class EncodingResult:
    """Hidden states, final-layer attention, and the standard slices."""

    seq: MarkedSequence
    H: torch.Tensor  # [l, d]
    A: torch.Tensor  # [heads, l, l], rows sum to 1
    H_C: torch.Tensor  # [l_w, d] document-word pieces
    H_R: torch.Tensor  # [l_r, d] role representatives + none separator
    H_e: torch.Tensor | None  # [d] event-marker state, span variant only
    A_C: torch.Tensor  # [heads, l_w, l_w]
    A_R: torch.Tensor  # [heads, l_w, l_r]
    ctx_index: torch.Tensor  # long [l_w], global piece positions of the context slice
    role_index: torch.Tensor  # long [l_r]


def _check_backend_output(seq, backend, H, A):
    l = len(seq)
    if H.shape != (l, backend.d):
        raise BackendError(f"backend returned H of shape {tuple(H.shape)}, expected {(l, backend.d)}")
    if A.shape != (backend.num_heads, l, l):
        raise BackendError(
            f"backend returned A of shape {tuple(A.shape)}, expected {(backend.num_heads, l, l)}"
        )


def _result_from(seq: MarkedSequence, H: torch.Tensor, A: torch.Tensor) -> EncodingResult:
    ctx = torch.as_tensor(seq.context_positions, dtype=torch.long, device=H.device)
    role = torch.as_tensor(seq.role_positions, dtype=torch.long, device=H.device)
    H_e = H[seq.event_marker_index] if seq.event_marker_index is not None else None
    return EncodingResult(
        seq=seq,
        H=H,
        A=A,
        H_C=H[ctx],
        H_R=H[role],
        H_e=H_e,
        A_C=A[:, ctx][:, :, ctx],
        A_R=A[:, ctx][:, :, role],
        ctx_index=ctx,
        role_index=role,
    )


def encode(seq: MarkedSequence, backend) -> EncodingResult:
    """Single-pass encoding; the sequence must fit the backend."""
    if len(seq) > backend.max_tokens:
        raise BackendError(
            f"sequence of {len(seq)} pieces exceeds backend max_tokens={backend.max_tokens}; "
            "use encode_long"
        )
    ids = torch.as_tensor(seq.pieces, dtype=torch.long)
    H, A = backend(ids)
    _check_backend_output(seq, backend, H, A)
    return _result_from(seq, H, A)


def plan_windows(seq: MarkedSequence, window: int, stride: int) -> list[tuple[int, int]]:
    """Inclusive context-chunk offsets, one pair per window.

    Offsets are relative to ``context_range[0]``. The chunk width is the
    window size minus the replicated prefix/suffix blocks; the effective step
    never exceeds the chunk width, so consecutive windows always overlap or
    touch. The final window is aligned to the context end.
    """
    if stride <= 0:
        raise BackendError(f"stride must be positive, got {stride}")
    if stride > window:
        raise BackendError(f"stride {stride} larger than window {window}")
    lo, hi = seq.context_range
    prefix = lo
    suffix = len(seq) - hi - 1
    chunk = window - prefix - suffix
    if chunk < 1:
        raise BackendError(
            f"window of {window} cannot hold the non-context blocks "
            f"({prefix} prefix + {suffix} suffix pieces)"
        )
    n_ctx = hi - lo + 1
    if chunk >= n_ctx:
        return [(0, n_ctx - 1)]
    step = min(stride, chunk)
    starts = list(range(0, n_ctx - chunk + 1, step))
    if starts[-1] != n_ctx - chunk:
        starts.append(n_ctx - chunk)
    return [(s, s + chunk - 1) for s in starts]


def encode_long(seq: MarkedSequence, backend, window: int, stride: int) -> EncodingResult:
    """Overlapping-window encoding for sequences longer than the backend limit.

    Identical to :func:`encode` (bit for bit) whenever the whole sequence fits
    in one window.
    """
    if stride <= 0:
        raise BackendError(f"stride must be positive, got {stride}")
    if stride > window:
        raise BackendError(f"stride {stride} larger than window {window}")
    if window > backend.max_tokens:
        raise BackendError(f"window {window} exceeds backend max_tokens={backend.max_tokens}")
    if len(seq) <= window:
        return encode(seq, backend)

    lo, hi = seq.context_range
    l = len(seq)
    ids = torch.as_tensor(seq.pieces, dtype=torch.long)
    prefix_pos = list(range(0, lo))
    suffix_pos = list(range(hi + 1, l))

    H_sum = A_sum = None
    count = torch.zeros(l)
    for a, b in plan_windows(seq, window, stride):
        global_pos = prefix_pos + list(range(lo + a, lo + b + 1)) + suffix_pos
        gp = torch.as_tensor(global_pos, dtype=torch.long)
        Hw, Aw = backend(ids[gp])
        if H_sum is None:
            H_sum = torch.zeros(l, Hw.shape[1], dtype=Hw.dtype)
            A_sum = torch.zeros(Aw.shape[0], l, l, dtype=Aw.dtype)
        pad_h = torch.zeros_like(H_sum)
        pad_h[gp] = Hw
        H_sum = H_sum + pad_h
        pad_a = torch.zeros_like(A_sum)
        pad_a[:, gp.unsqueeze(1), gp.unsqueeze(0)] = Aw
        A_sum = A_sum + pad_a
        count[gp] += 1

    H = H_sum / count.unsqueeze(1).to(H_sum.dtype)
    A = A_sum / count.view(1, l, 1).to(A_sum.dtype)
    A = A / A.sum(dim=-1, keepdim=True)
    _check_backend_output(seq, backend, H, A)
    return _result_from(seq, H, A)


def decode(enc: EncodingResult, backend) -> torch.Tensor:
    """Decoder pass over the encoder output; one vector per piece.

    Slot vectors are then addressable as ``H_de[enc.seq.slot_index[k]]``.
    """
    decode_fn = getattr(backend, "decode", None)
    if decode_fn is None or not getattr(backend, "has_decoder", True):
        raise BackendError("backend lacks a decoder")
    H_de = decode_fn(enc.H)
    if H_de.shape != enc.H.shape:
        raise BackendError(
            f"decoder returned shape {tuple(H_de.shape)}, expected {tuple(enc.H.shape)}"
        )
    return H_de

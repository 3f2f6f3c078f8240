"""Role-based latent information guidance (RLIG).

Role names enter the input wrapped in reserved per-role tokens, so the
encoder's self-attention can pick up correlations between roles. This module
extracts the token-to-role attention, fuses role information per candidate
(same product-and-softmax rule as the clue aggregation), reduces role
features to a small dimension, and scores (trigger, span, role) triples with
a core-tensor bilinear form:

    I = FFN([h_t; s])                  I in R^{d_i}
    logit_k = I^T Z r_hat_k + b_k      Z in R^{d_i x d'}, r_hat_k = reduced role k
    score = sigmoid(logit_k)

The "none" category takes part through the separator that closes the role
block, so every profile and score matrix has role-count + 1 entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from .backends import fan_init_
from .context_clues import combine_profiles, pool_rows
from .exceptions import SequenceError
from .sequences import MarkedSequence


@dataclass
class RoleAttentionProfile:
    weights: torch.Tensor  # [l_r] attention mass onto role representatives + none


@dataclass
class RoleFusionVector:
    r: torch.Tensor  # [d]
    attn: torch.Tensor  # [l_r], sums to 1


def extract_role_attention(
    A: torch.Tensor, seq: MarkedSequence, span_or_trigger
) -> RoleAttentionProfile:
    """Pool attention from a word span (or ``"trigger"``) onto the role tokens.

    ``A`` is the full [heads, l, l] attention; rows are the span's word
    pieces, columns the representative role tokens plus the none separator.
    """
    if not seq.role_token_index:
        raise SequenceError("sequence has no role block")
    if span_or_trigger == "trigger":
        rows = (seq.trigger_pieces[0], seq.trigger_pieces[-1])
    else:
        start_word, end_word = span_or_trigger
        lo = seq.word_to_pieces[start_word][0]
        hi = seq.word_to_pieces[end_word][1]
        rows = (lo, hi)
    cols = torch.as_tensor(seq.role_positions, dtype=torch.long, device=A.device)
    return RoleAttentionProfile(weights=pool_rows(A[:, :, cols], rows))


def role_fusion(
    H_R: torch.Tensor,
    a_span: RoleAttentionProfile | torch.Tensor,
    a_trig: RoleAttentionProfile | torch.Tensor,
) -> RoleFusionVector:
    """Fuse role embeddings under the combined span/trigger role profile."""
    ws = a_span.weights if isinstance(a_span, RoleAttentionProfile) else a_span
    wt = a_trig.weights if isinstance(a_trig, RoleAttentionProfile) else a_trig
    if H_R.shape[0] != ws.shape[0]:
        raise SequenceError(
            f"H_R has {H_R.shape[0]} rows but profiles have length {ws.shape[0]}"
        )
    p = combine_profiles(ws, wt)
    return RoleFusionVector(r=H_R.T @ p, attn=p)


def reduce_roles(H_R: torch.Tensor, W3: torch.Tensor, b_w: torch.Tensor) -> torch.Tensor:
    """Map role features [l_r, d] to the reduced dimension: H_R @ W3 + b_w."""
    if H_R.shape[1] != W3.shape[0] or W3.shape[1] != b_w.shape[0]:
        raise SequenceError(
            f"shape mismatch: H_R {tuple(H_R.shape)}, W3 {tuple(W3.shape)}, b_w {tuple(b_w.shape)}"
        )
    return H_R @ W3 + b_w


class TripleScoreModel(nn.Module):
    """Parameters of the guidance scoring head.

    Role biases are indexed by global role-label id so the same parameters
    serve events with different role inventories; the last label id is the
    shared "none" category.
    """

    def __init__(
        self,
        d: int,
        d_reduced: int,
        d_interaction: int,
        n_labels: int,
        none_label: int | None = None,
        none_prior: float = 0.975,
    ):
        super().__init__()
        if d_reduced >= d:
            raise SequenceError(f"reduced dimension {d_reduced} must be below d={d}")
        self.d = d
        self.d_reduced = d_reduced
        self.d_interaction = d_interaction
        self.n_labels = n_labels
        self.W3 = nn.Parameter(fan_init_(torch.empty(d, d_reduced)))
        self.b_w = nn.Parameter(torch.zeros(d_reduced))
        self.Z = nn.Parameter(fan_init_(torch.empty(d_interaction, d_reduced)))
        self.role_bias = nn.Parameter(torch.zeros(n_labels))
        self.interact = nn.Linear(2 * d, d_interaction)
        fan_init_(self.interact.weight)
        nn.init.zeros_(self.interact.bias)
        if none_label is not None:
            # focal-loss prior init: start the dominant class at its base rate
            # so training never has to pass through an everything-collapses phase
            with torch.no_grad():
                self.role_bias[none_label] = math.log(none_prior / (1.0 - none_prior))

    def reduced_roles(self, H_R: torch.Tensor) -> torch.Tensor:
        return reduce_roles(H_R, self.W3, self.b_w)

    def interaction(self, h_t: torch.Tensor, s_rep: torch.Tensor) -> torch.Tensor:
        """I = tanh(W [h_t; s] + b); accepts a batch of span representations."""
        if s_rep.dim() == 1:
            joined = torch.cat([h_t, s_rep], dim=-1)
        else:
            joined = torch.cat([h_t.expand(s_rep.shape[0], -1), s_rep], dim=-1)
        return torch.tanh(self.interact(joined))


def tucker_score(
    model: TripleScoreModel,
    h_t: torch.Tensor,
    s_rep: torch.Tensor,
    role_k: int,
    H_R_reduced: torch.Tensor,
    label_ids: torch.Tensor,
) -> torch.Tensor:
    """Score one (trigger, span, role) triple as a probability in (0, 1)."""
    if not (0 <= role_k < H_R_reduced.shape[0]):
        raise SequenceError(f"role index {role_k} out of range for {H_R_reduced.shape[0]} roles")
    I = model.interaction(h_t, s_rep)
    logit = I @ model.Z @ H_R_reduced[role_k] + model.role_bias[label_ids[role_k]]
    if not torch.isfinite(logit):
        raise SequenceError("non-finite triple score")
    return torch.sigmoid(logit)


def tucker_score_all(
    model: TripleScoreModel,
    h_t: torch.Tensor,
    s_reps: torch.Tensor,
    H_R_reduced: torch.Tensor,
    label_ids: torch.Tensor,
) -> torch.Tensor:
    """Logits for every (span, role) pair in one batched contraction: [n, l_r]."""
    I = model.interaction(h_t, s_reps)  # [n, d_i]
    return I @ model.Z @ H_R_reduced.T + model.role_bias[label_ids]


def cosine_similarity_matrix(H_R: torch.Tensor, eps: float = 1e-12) -> torch.Tensor:
    """Pairwise cosine similarities between role representations."""
    norms = H_R.norm(dim=1, keepdim=True).clamp_min(eps)
    unit = H_R / norms
    return unit @ unit.T

"""Encoder backends: a small trainable transformer, an adapter for external
pretrained models, and deterministic stubs for tests and demos.

Every backend maps a piece-id sequence to per-token hidden states ``H`` of
shape ``[l, d]`` and the attention probabilities ``A`` of shape
``[num_heads, l, l]`` taken from its final layer. Rows of ``A`` are
probability distributions over key positions.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .exceptions import BackendError


def trunc_normal_(tensor: torch.Tensor, std: float = 0.02) -> torch.Tensor:
    return nn.init.trunc_normal_(tensor, std=std, a=-2 * std, b=2 * std)


def fan_init_(tensor: torch.Tensor) -> torch.Tensor:
    """Truncated normal scaled to the tensor's fan; keeps products of stacked
    projections at unit order, which from-scratch desk-scale training needs."""
    std = math.sqrt(2.0 / sum(tensor.shape[-2:]))
    return trunc_normal_(tensor, std=std)


class _SelfAttention(nn.Module):
    def __init__(self, d: int, num_heads: int, dropout: float):
        super().__init__()
        if d % num_heads != 0:
            raise BackendError(f"hidden size {d} not divisible by {num_heads} heads")
        self.num_heads = num_heads
        self.head_dim = d // num_heads
        self.qkv = nn.Linear(d, 3 * d)
        self.out = nn.Linear(d, d)
        self.drop = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        l, d = x.shape
        q, k, v = self.qkv(x).split(d, dim=-1)
        q = q.view(l, self.num_heads, self.head_dim).transpose(0, 1)
        k = k.view(l, self.num_heads, self.head_dim).transpose(0, 1)
        v = v.view(l, self.num_heads, self.head_dim).transpose(0, 1)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        probs = torch.softmax(scores, dim=-1)  # [heads, l, l], exposed pre-dropout
        mixed = self.drop(probs) @ v
        mixed = mixed.transpose(0, 1).reshape(l, d)
        return self.out(mixed), probs


class _CrossAttention(nn.Module):
    def __init__(self, d: int, num_heads: int, dropout: float):
        super().__init__()
        self.num_heads = num_heads
        self.head_dim = d // num_heads
        self.q_proj = nn.Linear(d, d)
        self.kv_proj = nn.Linear(d, 2 * d)
        self.out = nn.Linear(d, d)
        self.drop = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor, memory: torch.Tensor) -> torch.Tensor:
        l, d = x.shape
        q = self.q_proj(x).view(l, self.num_heads, self.head_dim).transpose(0, 1)
        k, v = self.kv_proj(memory).split(d, dim=-1)
        k = k.view(-1, self.num_heads, self.head_dim).transpose(0, 1)
        v = v.view(-1, self.num_heads, self.head_dim).transpose(0, 1)
        probs = torch.softmax(q @ k.transpose(-2, -1) / math.sqrt(self.head_dim), dim=-1)
        mixed = (self.drop(probs) @ v).transpose(0, 1).reshape(l, d)
        return self.out(mixed)


class _FeedForward(nn.Module):
    def __init__(self, d: int, mult: int, dropout: float):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(d, mult * d), nn.GELU(), nn.Dropout(dropout), nn.Linear(mult * d, d)
        )

    def forward(self, x):
        return self.net(x)


class _EncoderLayer(nn.Module):
    def __init__(self, d: int, num_heads: int, ffn_mult: int, dropout: float):
        super().__init__()
        self.ln1 = nn.LayerNorm(d)
        self.attn = _SelfAttention(d, num_heads, dropout)
        self.ln2 = nn.LayerNorm(d)
        self.ffn = _FeedForward(d, ffn_mult, dropout)

    def forward(self, x):
        attn_out, probs = self.attn(self.ln1(x))
        x = x + attn_out
        x = x + self.ffn(self.ln2(x))
        return x, probs


class _DecoderLayer(nn.Module):
    def __init__(self, d: int, num_heads: int, ffn_mult: int, dropout: float):
        super().__init__()
        self.ln1 = nn.LayerNorm(d)
        self.attn = _SelfAttention(d, num_heads, dropout)
        self.ln2 = nn.LayerNorm(d)
        self.cross = _CrossAttention(d, num_heads, dropout)
        self.ln3 = nn.LayerNorm(d)
        self.ffn = _FeedForward(d, ffn_mult, dropout)

    def forward(self, x, memory):
        attn_out, _ = self.attn(self.ln1(x))
        x = x + attn_out
        x = x + self.cross(self.ln2(x), memory)
        x = x + self.ffn(self.ln3(x))
        return x


class TinyTransformerBackend(nn.Module):
    """A from-scratch trainable encoder (optionally encoder-decoder).

    Sized for desk-scale experiments; the default geometry is 2 layers,
    d=64, 4 heads. The decoder, when present, is a second stack that reads
    the encoder output through cross-attention.
    """

    def __init__(
        self,
        vocab_size: int,
        d: int = 64,
        num_heads: int = 4,
        num_layers: int = 2,
        max_tokens: int = 256,
        decoder_layers: int = 0,
        ffn_mult: int = 4,
        dropout: float = 0.0,
    ):
        super().__init__()
        self.d = d
        self.num_heads = num_heads
        self.max_tokens = max_tokens
        self.vocab_size = vocab_size
        self.tok_emb = nn.Embedding(vocab_size, d)
        self.pos_emb = nn.Embedding(max_tokens, d)
        self.layers = nn.ModuleList(
            _EncoderLayer(d, num_heads, ffn_mult, dropout) for _ in range(num_layers)
        )
        self.final_ln = nn.LayerNorm(d)
        self.decoder = nn.ModuleList(
            _DecoderLayer(d, num_heads, ffn_mult, dropout) for _ in range(decoder_layers)
        )
        self.decoder_ln = nn.LayerNorm(d) if decoder_layers else None
        # token identity must survive the residual stream without pretraining
        trunc_normal_(self.tok_emb.weight, std=d**-0.5)
        trunc_normal_(self.pos_emb.weight, std=d**-0.5)

    @property
    def has_decoder(self) -> bool:
        return len(self.decoder) > 0

    def forward(self, piece_ids: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        l = piece_ids.shape[0]
        if l > self.max_tokens:
            raise BackendError(f"input of {l} pieces exceeds max_tokens={self.max_tokens}")
        positions = torch.arange(l, device=piece_ids.device)
        x = self.tok_emb(piece_ids) + self.pos_emb(positions)
        probs = None
        for layer in self.layers:
            x, probs = layer(x)
        return self.final_ln(x), probs

    def decode(self, H_en: torch.Tensor) -> torch.Tensor:
        if not self.has_decoder:
            raise BackendError("backend has no decoder stack")
        x = H_en
        for layer in self.decoder:
            x = layer(x, H_en)
        return self.decoder_ln(x)


class PretrainedEncoderAdapter:
    """Wrap an external model that exposes final-layer attentions.

    The wrapped object must accept ``model(input_ids=[1, l] tensor,
    output_attentions=True)`` and return an object with
    ``last_hidden_state`` of shape ``[1, l, d]`` and ``attentions`` (a
    sequence of ``[1, heads, l, l]`` tensors, last entry = final layer).
    """

    def __init__(self, model, d: int, num_heads: int, max_tokens: int):
        self.model = model
        self.d = d
        self.num_heads = num_heads
        self.max_tokens = max_tokens

    def __call__(self, piece_ids: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        out = self.model(input_ids=piece_ids.unsqueeze(0), output_attentions=True)
        H = out.last_hidden_state[0]
        A = out.attentions[-1][0]
        if H.shape[-1] != self.d or A.shape[0] != self.num_heads:
            raise BackendError(
                f"adapter configured for d={self.d}, heads={self.num_heads} but model "
                f"returned d={H.shape[-1]}, heads={A.shape[0]}"
            )
        return H, A

    def decode(self, H_en: torch.Tensor) -> torch.Tensor:
        decoder = getattr(self.model, "decode", None)
        if decoder is None:
            raise BackendError("wrapped model exposes no decoder")
        return decoder(H_en)


class StubBackend(nn.Module):
    """Deterministic non-trainable backend for tests and worked examples.

    ``attention`` picks the attention pattern: "identity" (each token attends
    only to itself) or "uniform". Hidden states come from a seeded per-id
    table, optionally replaced by a constant vector; ``position_term`` adds
    ``position * term`` to every component so window merging has something
    position-dependent to average.
    """

    def __init__(
        self,
        vocab_size: int,
        d: int = 8,
        num_heads: int = 2,
        max_tokens: int = 512,
        attention: str = "identity",
        constant: torch.Tensor | None = None,
        position_term: float = 0.0,
        seed: int = 0,
        decoder: str | None = None,
    ):
        super().__init__()
        if attention not in ("identity", "uniform"):
            raise BackendError(f"unknown stub attention pattern {attention!r}")
        self.d = d
        self.num_heads = num_heads
        self.max_tokens = max_tokens
        self.attention = attention
        self.position_term = position_term
        self.decoder_kind = decoder
        gen = torch.Generator().manual_seed(seed)
        table = torch.randn(vocab_size, d, generator=gen)
        if constant is not None:
            table = constant.expand(vocab_size, d).clone()
        self.register_buffer("table", table)

    @property
    def has_decoder(self) -> bool:
        return self.decoder_kind is not None

    def forward(self, piece_ids: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        l = piece_ids.shape[0]
        if l > self.max_tokens:
            raise BackendError(f"input of {l} pieces exceeds max_tokens={self.max_tokens}")
        H = self.table[piece_ids]
        if self.position_term:
            H = H + self.position_term * torch.arange(l, dtype=H.dtype).unsqueeze(1)
        if self.attention == "identity":
            A = torch.eye(l, dtype=H.dtype).expand(self.num_heads, l, l).clone()
        else:
            A = torch.full((self.num_heads, l, l), 1.0 / l, dtype=H.dtype)
        return H, A

    def decode(self, H_en: torch.Tensor) -> torch.Tensor:
        if self.decoder_kind is None:
            raise BackendError("backend has no decoder stack")
        if self.decoder_kind == "identity":
            return H_en
        if self.decoder_kind == "reverse-scale":
            return H_en * torch.linspace(1.0, 2.0, H_en.shape[0]).unsqueeze(1)
        raise BackendError(f"unknown stub decoder {self.decoder_kind!r}")

"""Byte-level decoder-only transformer with deterministic inference.

Small enough to train on a CPU in minutes (~0.9M parameters at the default
size) while modeling byte streams far better than counting models.  The
alphabet is the raw 256 byte values plus one BOS token that anchors every
context, so the coder alphabet stays uniform across predictors.

Inference is incremental with per-layer KV caches.  Contexts longer than
the window are truncated deterministically: when the cache fills, it is
re-primed from BOS plus the last ``(window - 1) // 2`` tokens, a pure
function of the token sequence, so compressor and decompressor always see
bit-identical distributions.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
from torch import nn

BOS = 256
VOCAB = 257


@dataclass
class ModelConfig:
    d_model: int = 128
    n_layers: int = 4
    n_heads: int = 4
    d_ff: int = 512
    window: int = 512  # max context length including the BOS slot
    seed: int = 1337
    threads: int = 2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


class Block(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.n_heads = cfg.n_heads
        self.head_dim = cfg.d_model // cfg.n_heads
        self.ln1 = nn.LayerNorm(cfg.d_model)
        self.qkv = nn.Linear(cfg.d_model, 3 * cfg.d_model)
        self.proj = nn.Linear(cfg.d_model, cfg.d_model)
        self.ln2 = nn.LayerNorm(cfg.d_model)
        self.fc1 = nn.Linear(cfg.d_model, cfg.d_ff)
        self.fc2 = nn.Linear(cfg.d_ff, cfg.d_model)

    def _attn(self, x: torch.Tensor, kv_cache=None) -> torch.Tensor:
        # x: [B, T, d]; with a cache, T is the new suffix appended to it
        B, T, d = x.shape
        q, k, v = self.qkv(x).split(d, dim=2)

        def heads(t):
            return t.view(B, T, self.n_heads, self.head_dim).transpose(1, 2)

        q, k, v = heads(q), heads(k), heads(v)
        if kv_cache is not None:
            if kv_cache["k"] is not None:
                k = torch.cat([kv_cache["k"], k], dim=2)
                v = torch.cat([kv_cache["v"], v], dim=2)
            kv_cache["k"], kv_cache["v"] = k, v
        att = (q @ k.transpose(-2, -1)) / math.sqrt(self.head_dim)
        total = k.shape[2]
        if T > 1:
            # causal mask over the suffix; cached positions are always visible
            past = total - T
            mask = torch.ones(T, total, dtype=torch.bool)
            mask[:, past:] = torch.tril(torch.ones(T, T, dtype=torch.bool))
            att = att.masked_fill(~mask, float("-inf"))
        att = torch.softmax(att, dim=-1)
        out = (att @ v).transpose(1, 2).reshape(B, T, d)
        return self.proj(out)

    def forward(self, x, kv_cache=None):
        x = x + self._attn(self.ln1(x), kv_cache)
        x = x + self.fc2(torch.relu(self.fc1(self.ln2(x))))
        return x


class ByteTransformer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        torch.manual_seed(cfg.seed)
        self.tok_emb = nn.Embedding(VOCAB, cfg.d_model)
        self.pos_emb = nn.Embedding(cfg.window, cfg.d_model)
        self.blocks = nn.ModuleList(Block(cfg) for _ in range(cfg.n_layers))
        self.ln_f = nn.LayerNorm(cfg.d_model)
        # output head tied to the byte rows of the embedding

    def logits(self, x: torch.Tensor) -> torch.Tensor:
        return x @ self.tok_emb.weight[:256].T

    def forward(self, tokens: torch.Tensor, kv_caches=None, pos_offset: int = 0):
        """tokens: [B, T] -> logits [B, T, 256]."""
        B, T = tokens.shape
        pos = torch.arange(pos_offset, pos_offset + T)
        x = self.tok_emb(tokens) + self.pos_emb(pos)[None, :, :]
        for i, block in enumerate(self.blocks):
            x = block(x, kv_caches[i] if kv_caches is not None else None)
        return self.logits(self.ln_f(x))

    def param_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


class InferenceSession:
    """One chunk's autoregressive context over a frozen model."""

    def __init__(self, model: ByteTransformer):
        self.model = model
        self.window = model.cfg.window
        self.keep = (self.window - 1) // 2
        self.reset()

    def reset(self) -> None:
        self._tokens: list[int] = []
        self._caches = None
        self._last_logits = None

    def _run(self, tokens: list[int], pos_offset: int) -> None:
        t = torch.tensor([tokens], dtype=torch.long)
        with torch.inference_mode():
            logits = self.model.forward(t, kv_caches=self._caches, pos_offset=pos_offset)
        self._last_logits = logits[0, -1].numpy().astype(np.float64)

    def _cache_len(self) -> int:
        if self._caches is None or self._caches[0]["k"] is None:
            return 0
        return self._caches[0]["k"].shape[2]

    def next_probs(self) -> np.ndarray:
        """Distribution over the next byte given everything pushed so far."""
        if self._caches is None:
            self._caches = [{"k": None, "v": None} for _ in self.model.blocks]
            self._run([BOS], 0)
        probs = np.exp(self._last_logits - self._last_logits.max())
        return probs / probs.sum()

    def push(self, byte: int) -> None:
        """Append an observed byte to the context."""
        self._tokens.append(byte)
        if self._caches is None:
            # push before any predict: prime BOS first, then the byte
            self.next_probs()
        if self._cache_len() >= self.window:
            # deterministic truncation: re-prime from the last `keep` tokens
            tail = self._tokens[-self.keep :]
            self._caches = [{"k": None, "v": None} for _ in self.model.blocks]
            self._run([BOS] + tail, 0)
        else:
            self._run([self._tokens[-1]], self._cache_len())

"""Training: fit the byte transformer on a directory of domain bytes.

Deterministic for a given (corpus, hyperparameters, seed): fixed torch and
numpy seeds, fixed thread count, batches drawn by a seeded generator.  Two
identical runs produce bundles with identical version tags.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .bundle import ModelBundle
from .model import BOS, ByteTransformer, ModelConfig

MIN_CORPUS_BYTES = 1 << 20


@dataclass
class TrainConfig:
    steps: int = 700
    batch_size: int = 16
    seq_len: int = 256
    lr: float = 1e-3
    max_corpus_bytes: int = 64 << 20  # train on at most 64 MiB of domain bytes
    log_every: int = 100


class CorpusTooSmall(ValueError):
    pass


def load_corpus(corpus_dir: str | Path, max_bytes: int) -> np.ndarray:
    paths = sorted(p for p in Path(corpus_dir).rglob("*") if p.is_file())
    pieces = []
    total = 0
    for p in paths:
        data = p.read_bytes()
        pieces.append(data)
        total += len(data)
        if total >= max_bytes:
            break
    blob = b"".join(pieces)[:max_bytes]
    if len(blob) < MIN_CORPUS_BYTES:
        raise CorpusTooSmall(
            f"corpus is {len(blob)} bytes; at least {MIN_CORPUS_BYTES} required"
        )
    return np.frombuffer(blob, dtype=np.uint8)


def train(
    corpus_dir: str | Path,
    model_cfg: ModelConfig | None = None,
    train_cfg: TrainConfig | None = None,
    log=print,
) -> ModelBundle:
    model_cfg = model_cfg or ModelConfig()
    train_cfg = train_cfg or TrainConfig()
    if train_cfg.seq_len > model_cfg.window:
        raise ValueError(
            f"seq_len {train_cfg.seq_len} exceeds the positional window {model_cfg.window}"
        )
    data = load_corpus(corpus_dir, train_cfg.max_corpus_bytes)

    torch.set_num_threads(model_cfg.threads)
    torch.manual_seed(model_cfg.seed)
    model = ByteTransformer(model_cfg)
    log(f"training {model.param_count()} parameters on {data.size} corpus bytes")

    opt = torch.optim.AdamW(model.parameters(), lr=train_cfg.lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=train_cfg.steps)
    rng = np.random.default_rng(model_cfg.seed)
    L = train_cfg.seq_len
    model.train()
    started = time.monotonic()
    for step in range(train_cfg.steps):
        starts = rng.integers(0, data.size - L, size=train_cfg.batch_size)
        batch = np.stack([data[s : s + L] for s in starts]).astype(np.int64)
        tgt = torch.from_numpy(batch)
        inp = torch.cat(
            [torch.full((train_cfg.batch_size, 1), BOS, dtype=torch.long), tgt[:, :-1]],
            dim=1,
        )
        logits = model.forward(inp)
        loss = torch.nn.functional.cross_entropy(
            logits.reshape(-1, 256), tgt.reshape(-1)
        )
        opt.zero_grad(set_to_none=True)
        loss.backward()
        torch.nn.utils.clip_grad_norm_(model.parameters(), 1.0)
        opt.step()
        sched.step()
        if step % train_cfg.log_every == 0 or step == train_cfg.steps - 1:
            bpb = loss.item() / np.log(2)
            log(f"step {step:5d}  loss {loss.item():.4f}  ({bpb:.3f} bits/byte)  "
                f"{time.monotonic() - started:.0f}s")
    model.eval()
    return ModelBundle(model)

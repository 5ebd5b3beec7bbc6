"""Model bundles: weights + inference config with a content-derived tag.

The version tag is a hash of the canonical config JSON and every parameter
tensor's bytes, so it changes exactly when the weights or the inference
configuration change.  Archives embed the tag; decompression against a
bundle with a different tag is refused by the client before any decoding.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import torch

from .model import ByteTransformer, ModelConfig

WEIGHTS_FILE = "weights.pt"
CONFIG_FILE = "config.json"


def compute_version_tag(model: ByteTransformer) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(model.cfg.to_dict(), sort_keys=True).encode())
    for name, param in sorted(model.state_dict().items()):
        h.update(name.encode())
        h.update(param.numpy().tobytes())
    return h.hexdigest()[:16]


class ModelBundle:
    def __init__(self, model: ByteTransformer):
        self.model = model
        self.model.eval()
        self.version_tag = compute_version_tag(model)

    @property
    def config(self) -> ModelConfig:
        return self.model.cfg

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / CONFIG_FILE).write_text(
            json.dumps(self.model.cfg.to_dict(), sort_keys=True, indent=2) + "\n"
        )
        torch.save(self.model.state_dict(), directory / WEIGHTS_FILE)
        return directory

    @classmethod
    def load(cls, directory: str | Path) -> "ModelBundle":
        directory = Path(directory)
        cfg = ModelConfig.from_dict(json.loads((directory / CONFIG_FILE).read_text()))
        torch.set_num_threads(cfg.threads)
        model = ByteTransformer(cfg)
        state = torch.load(directory / WEIGHTS_FILE, map_location="cpu", weights_only=True)
        model.load_state_dict(state)
        return cls(model)

    @classmethod
    def fresh(cls, cfg: ModelConfig | None = None) -> "ModelBundle":
        """Randomly initialized (but seeded, hence reproducible) bundle."""
        cfg = cfg or ModelConfig()
        torch.set_num_threads(cfg.threads)
        return cls(ByteTransformer(cfg))

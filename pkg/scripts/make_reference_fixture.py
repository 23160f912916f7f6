#!/usr/bin/env python3
"""Regenerate the committed reference checkpoint fixture.

Builds a tiny seeded model, saves it in the container format, and records a
fixed input clip with the logits it produces. The test suite reloads the
container on whatever machine it runs on and checks the logits still match,
guarding the checkpoint path against drift across platforms and library
versions. Rerun only when the model or container format changes on purpose;
the fixture files under tests/fixtures are committed.
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import torch

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from microact.backbone import MANet, ModelConfig
from microact.trainer import save_model

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def main() -> int:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    config = ModelConfig(
        num_fine_classes=3,
        base_width=8,
        stage_block_counts=(1, 1, 1, 1),
        se_ratio=4,
        embed_dim=16,
    )
    torch.manual_seed(20240913)
    model = MANet(config)
    model.eval()

    rng = np.random.default_rng(20240913)
    clip = rng.uniform(-1.0, 1.0, size=(2, 4, 3, 32, 32)).astype(np.float32)
    with torch.no_grad():
        _, pooled = model.forward_features(torch.from_numpy(clip))
        logits = model.classify(pooled).numpy()

    save_model(FIXTURE_DIR / "reference.ckpt", model, extra={"purpose": "fixture"})
    np.savez(FIXTURE_DIR / "reference_io.npz", clip=clip, logits=logits)
    print(f"wrote {FIXTURE_DIR / 'reference.ckpt'}")
    print(f"wrote {FIXTURE_DIR / 'reference_io.npz'} logits shape {logits.shape}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

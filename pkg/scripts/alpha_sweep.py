#!/usr/bin/env python3
"""Train at several loss-weight values and print the comparison table.

Runs the full train/eval cycle once per alpha with an otherwise identical
recipe, then writes sweep.json and sweep.md under --out. The alpha=0 column
doubles as a check that the embedding term really contributes nothing when
switched off. Expect roughly (number of alphas) x (single run time); use a
small dataset.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from microact.backbone import ModelConfig, desk_model_config
from microact.datagen import dataset_taxonomy
from microact.sweep import DEFAULT_ALPHAS, format_sweep_table, run_alpha_sweep
from microact.trainer import TrainConfig


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("data_root", help="dataset directory (manifest.jsonl layout)")
    ap.add_argument("--out", required=True, help="output directory for runs and tables")
    ap.add_argument(
        "--alphas", type=float, nargs="+", default=list(DEFAULT_ALPHAS),
        metavar="A", help=f"loss weights to compare (default {list(DEFAULT_ALPHAS)})",
    )
    ap.add_argument("--epochs", type=int, default=12)
    ap.add_argument("--lr-drops", type=int, nargs=2, default=(5, 9), metavar="E")
    ap.add_argument("--side", type=int, default=32)
    ap.add_argument("--num-frames", type=int, default=8)
    ap.add_argument("--batch-size", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--split", default="test", choices=("train", "val", "test"))
    ap.add_argument(
        "--model-config", default=None,
        help="JSON file with ModelConfig fields (default: desk config)",
    )
    args = ap.parse_args(argv)

    taxonomy = dataset_taxonomy(args.data_root)
    if args.model_config:
        with open(args.model_config) as f:
            model_config = ModelConfig.from_json(json.load(f))
    else:
        model_config = desk_model_config(taxonomy.num_fine)
    train_config = TrainConfig(
        epochs=args.epochs,
        lr_drop_epochs=tuple(args.lr_drops),
        side=args.side,
        num_frames=args.num_frames,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    rows = run_alpha_sweep(
        model_config, train_config, args.data_root, args.out,
        alphas=tuple(args.alphas), split=args.split,
    )
    print(format_sweep_table(rows))
    return 0


if __name__ == "__main__":
    sys.exit(main())

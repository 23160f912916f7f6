"""Loss-weight ablation harness: train at several alpha values, compare.

Produces one row of test metrics per alpha plus a fixed-shape comparison
table (metrics as rows, one column per alpha). The harness makes no claim
about which alpha should win on synthetic data; it only runs the comparison.
"""
from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

from .backbone import ModelConfig
from .trainer import TrainConfig, evaluate, train

DEFAULT_ALPHAS = (0.0, 0.1, 1.0, 2.0, 5.0, 10.0)

_TABLE_METRICS = (
    ("f1_mean", "F1 mean"),
    ("f1_macro_coarse", "F1 macro (coarse)"),
    ("f1_micro_coarse", "F1 micro (coarse)"),
    ("f1_macro_fine", "F1 macro (fine)"),
    ("f1_micro_fine", "F1 micro (fine)"),
    ("acc_top1_coarse", "Top-1 (coarse)"),
    ("acc_top1_fine", "Top-1 (fine)"),
    ("acc_top5_fine", "Top-5 (fine)"),
)


def run_alpha_sweep(
    model_config: ModelConfig,
    train_config: TrainConfig,
    data_root: str | Path,
    out_dir: str | Path,
    alphas=DEFAULT_ALPHAS,
    split: str = "test",
) -> list[dict]:
    """Train once per alpha (identical seed/recipe otherwise), evaluate on split."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for alpha in alphas:
        run_dir = out / f"alpha_{alpha:g}"
        result = train(model_config, replace(train_config, alpha=float(alpha)), data_root, run_dir)
        report, _ = evaluate(result.best_path, data_root, split)
        row = {"alpha": float(alpha)}
        for key, _label in _TABLE_METRICS:
            row[key] = getattr(report, key)
        rows.append(row)
    with open(out / "sweep.json", "w") as f:
        json.dump(rows, f, indent=2, sort_keys=True)
        f.write("\n")
    table = format_sweep_table(rows)
    (out / "sweep.md").write_text(table + "\n")
    return rows


def format_sweep_table(rows: list[dict]) -> str:
    """Comparison table: one column per alpha, one row per metric."""
    if not rows:
        raise ValueError("no sweep rows to format")
    header = ["metric"] + [f"alpha={r['alpha']:g}" for r in rows]
    lines = ["| " + " | ".join(header) + " |"]
    lines.append("|" + "|".join("---" for _ in header) + "|")
    for key, label in _TABLE_METRICS:
        cells = [f"{r[key]:.4f}" for r in rows]
        lines.append("| " + " | ".join([label] + cells) + " |")
    return "\n".join(lines)

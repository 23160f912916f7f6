"""Command-line entry points.

Commands: gen, train, eval, predict, metrics, train-emotion, eval-emotion.
Exit codes: 0 success, 1 runtime failure (single "error: ..." line on
stderr), 2 usage errors. Every command honors --seed where randomness is
involved, and no command mutates its input dataset directory.

Config files are JSON. ``gen`` takes a flat object of generator fields;
``train`` takes {"model": {...}, "train": {...}}; ``train-emotion`` takes
{"model": {...}, "emotion": {...}, "train": {...}}. A bare config filename
that does not exist is also searched in $MICROACT_CONFIG_DIR.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .backbone import ModelConfig, desk_model_config
from .datagen import GenSpec, dataset_taxonomy, generate_dataset
from .emotion import EmotionConfig, evaluate_emotion, train_emotion
from .metrics import MetricsReport, build_report
from .taxonomy import load_taxonomy
from .trainer import TrainConfig, evaluate, predict, train

CONFIG_DIR_ENV = "MICROACT_CONFIG_DIR"


def resolve_config_path(path: str) -> Path:
    """Literal path first; fall back to $MICROACT_CONFIG_DIR for bare names."""
    p = Path(path)
    if p.exists():
        return p
    if not p.is_absolute():
        env = os.environ.get(CONFIG_DIR_ENV)
        if env:
            candidate = Path(env) / path
            if candidate.exists():
                return candidate
    raise FileNotFoundError(f"config file not found: {path}")


def _load_json(path: str) -> dict:
    p = resolve_config_path(path)
    with open(p) as f:
        return json.load(f)


def write_report(report: MetricsReport, path: str | Path) -> None:
    """Canonical report JSON: sorted keys, newline-terminated.

    Floats are serialized by their shortest round-tripping representation, so
    a write/read cycle preserves every value bit-for-bit and two writes of the
    same report are byte-identical.
    """
    text = json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    Path(path).write_text(text)


def read_report(path: str | Path) -> MetricsReport:
    with open(path) as f:
        return MetricsReport.from_dict(json.load(f))


def write_jsonl(rows: list[dict], path: str | Path) -> None:
    with open(path, "w") as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True) + "\n")


def _read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path) as f:
        for num, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{num}: bad JSONL row: {e}")
    return rows


# ---------------------------------------------------------------------------
# Subcommand implementations


def _cmd_gen(args) -> int:
    spec = GenSpec.from_json(_load_json(args.config)) if args.config else GenSpec()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    summary = generate_dataset(spec, args.out)
    print(json.dumps(summary, sort_keys=True))
    return 0


def _train_configs(args) -> tuple[ModelConfig | None, TrainConfig]:
    raw = _load_json(args.config) if args.config else {}
    model_cfg = ModelConfig.from_json(raw["model"]) if "model" in raw else None
    train_cfg = TrainConfig.from_json(raw["train"]) if "train" in raw else TrainConfig()
    if args.seed is not None:
        train_cfg = replace(train_cfg, seed=args.seed)
    return model_cfg, train_cfg


def _cmd_train(args) -> int:
    model_cfg, train_cfg = _train_configs(args)
    if model_cfg is None:
        taxonomy = dataset_taxonomy(args.data)
        model_cfg = desk_model_config(taxonomy.num_fine)
    result = train(model_cfg, train_cfg, args.data, args.out)
    print(
        json.dumps(
            {
                "best_epoch": result.best_epoch,
                "best_f1_mean": result.best_f1_mean,
                "best_ckpt": result.best_path,
                "final_ckpt": result.final_path,
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_eval(args) -> int:
    report, dump = evaluate(args.ckpt, args.data, args.split, percent=args.percent)
    if args.dump:
        write_jsonl(dump, args.dump)
    if args.out:
        write_report(report, args.out)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


def _cmd_predict(args) -> int:
    ranked, coarse_id = predict(args.ckpt, args.clip)
    payload = {
        "ranked": [[k, p] for k, p in ranked],
        "top1_fine": ranked[0][0],
        "coarse_id": coarse_id,
    }
    if args.out:
        Path(args.out).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    print(json.dumps(payload, sort_keys=True))
    return 0


def _cmd_metrics(args) -> int:
    import numpy as np

    taxonomy = load_taxonomy(args.taxonomy)
    preds = _read_jsonl(args.pred)
    manifest = _read_jsonl(args.gt)
    gt_by_id = {}
    for row in manifest:
        if args.split and row.get("split") != args.split:
            continue
        fine_ids = row["fine_ids"]
        if len(fine_ids) != 1:
            raise ValueError(
                f"clip {row['clip_id']}: offline metrics need single-label ground truth"
            )
        gt_by_id[row["clip_id"]] = int(fine_ids[0])
    if not preds:
        raise ValueError(f"{args.pred}: no prediction rows")
    probs, gts = [], []
    for row in preds:
        cid = row["clip_id"]
        if cid not in gt_by_id:
            raise ValueError(f"prediction for unknown clip {cid!r} (check --split)")
        probs.append(row["probs"])
        gts.append(gt_by_id[cid])
    report = build_report(np.array(probs, dtype=np.float64), gts, taxonomy, percent=args.percent)
    if args.out:
        write_report(report, args.out)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


def _cmd_train_emotion(args) -> int:
    raw = _load_json(args.config) if args.config else {}
    emotion_cfg = EmotionConfig.from_json(raw["emotion"]) if "emotion" in raw else EmotionConfig()
    train_cfg = TrainConfig.from_json(raw["train"]) if "train" in raw else TrainConfig()
    if args.seed is not None:
        train_cfg = replace(train_cfg, seed=args.seed)
    if "model" in raw:
        model_cfg = ModelConfig.from_json(raw["model"])
    else:
        taxonomy = dataset_taxonomy(args.data)
        model_cfg = desk_model_config(taxonomy.num_fine)
    result = train_emotion(
        model_cfg, emotion_cfg, train_cfg, args.data, args.out, face_box_file=args.face_boxes
    )
    print(
        json.dumps(
            {
                "best_epoch": result.best_epoch,
                "best_emotion_acc": result.best_emotion_acc,
                "best_ckpt": result.best_path,
                "final_ckpt": result.final_path,
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_eval_emotion(args) -> int:
    report, dump = evaluate_emotion(
        args.ckpt, args.data, args.split, percent=args.percent, face_box_file=args.face_boxes
    )
    if args.dump:
        write_jsonl(dump, args.dump)
    if args.out:
        write_report(report, args.out)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microact",
        description="Micro-action recognition toolkit: data generation, training, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--config", help="generator spec JSON (defaults when omitted)")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, help="seed override")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("train", help="train the single-label recognizer")
    p.add_argument("--config", help='JSON {"model": {...}, "train": {...}}')
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--out", required=True, help="run directory for logs and checkpoints")
    p.add_argument("--seed", type=int, help="seed override")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--dump", help="write per-clip probability rows (JSONL) here")
    p.add_argument("--percent", action="store_true", help="report values as 0..100")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("predict", help="rank classes for one clip directory")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--clip", required=True, help="directory of frame_*.png files")
    p.add_argument("--out", help="write the ranking JSON here")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("metrics", help="recompute metrics from dumped predictions")
    p.add_argument("--pred", required=True, help="JSONL of {clip_id, probs}")
    p.add_argument("--gt", required=True, help="manifest.jsonl with ground truth")
    p.add_argument("--taxonomy", required=True, help="taxonomy JSON")
    p.add_argument("--split", help="restrict ground truth to one split")
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--percent", action="store_true")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("train-emotion", help="train the dual-branch emotion model")
    p.add_argument("--config", help='JSON {"model": {...}, "emotion": {...}, "train": {...}}')
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--face-boxes", help="sidecar JSONL of per-frame face boxes")
    p.set_defaults(func=_cmd_train_emotion)

    p = sub.add_parser("eval-emotion", help="evaluate a dual-branch checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--dump", help="write per-clip score rows (JSONL) here")
    p.add_argument("--face-boxes", help="sidecar JSONL of per-frame face boxes")
    p.add_argument("--percent", action="store_true")
    p.set_defaults(func=_cmd_eval_emotion)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except Exception as e:  # runtime failures become a single stderr line
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Training loop, evaluation driver, checkpoint helpers, single-clip predict.

The optimizer recipe is plain SGD with momentum and weight decay; the
learning rate is a pure function of the epoch index (see lr_at_epoch).
Model selection tracks the best validation f1_mean. Determinism contract:
with deterministic=True (single torch thread) two runs with the same seed
produce bit-identical checkpoints, logs and reports, because every RNG
stream is derived from the seed (torch init, per-epoch shuffling, per-epoch
frame sampling) and datasets are read in manifest order.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .backbone import MANet, ModelConfig
from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .datagen import (
    ClipTensor,
    dataset_taxonomy,
    load_manifest,
    preprocess_clip,
    read_frames_dir,
    sample_frames,
)
from .embedding import label_embedding_matrix, load_word_vectors
from .metrics import MetricsReport, build_report
from .objective import cross_entropy, embedding_loss, total_loss
from .taxonomy import LabelTaxonomy, coarse_of, taxonomy_from_dict, taxonomy_to_dict


class TrainingError(RuntimeError):
    """Raised when training cannot proceed (bad data, non-finite loss)."""


@dataclass(frozen=True)
class TrainConfig:
    """Optimization recipe and input-pipeline settings."""

    lr: float = 0.001
    momentum: float = 0.9
    weight_decay: float = 1e-4
    batch_size: int = 10
    epochs: int = 80
    lr_drop_epochs: tuple[int, ...] = (30, 60)
    lr_drop_factor: float = 0.1
    alpha: float = 5.0
    num_frames: int = 8
    side: int = 224
    seed: int = 0
    normalize_embeddings: bool = False
    deterministic: bool = True

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.epochs < 1 or self.batch_size < 1 or self.num_frames < 1:
            raise ValueError("epochs, batch_size and num_frames must be >= 1")
        drops = tuple(self.lr_drop_epochs)
        if any(d0 >= d1 for d0, d1 in zip(drops, drops[1:])):
            raise ValueError("lr_drop_epochs must be strictly increasing")
        if any(d < 1 or d >= self.epochs for d in drops):
            raise ValueError("lr_drop_epochs must lie in [1, epochs)")
        if not (0 < self.lr_drop_factor <= 1):
            raise ValueError("lr_drop_factor must be in (0, 1]")
        if self.alpha < 0 or self.momentum < 0 or self.weight_decay < 0:
            raise ValueError("alpha, momentum, weight_decay must be >= 0")
        if self.side < 32 or self.side % 32 != 0:
            raise ValueError("side must be a positive multiple of 32")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")
        object.__setattr__(self, "lr_drop_epochs", drops)

    def to_json(self) -> dict:
        d = asdict(self)
        d["lr_drop_epochs"] = list(self.lr_drop_epochs)
        return d

    @staticmethod
    def from_json(d: dict) -> "TrainConfig":
        d = dict(d)
        if "lr_drop_epochs" in d:
            d["lr_drop_epochs"] = tuple(d["lr_drop_epochs"])
        return TrainConfig(**d)


def lr_at_epoch(config: TrainConfig, epoch: int) -> float:
    """lr(e) = lr0 * factor^|{d in drops : e >= d}| with 0-based epochs.

    The 1-based reading "reduced at the 30th and 60th epochs" maps to drops
    on entering 0-based epochs 30 and 60: epoch 29 still runs at lr0.
    """
    n_drops = sum(1 for d in config.lr_drop_epochs if epoch >= d)
    return config.lr * config.lr_drop_factor**n_drops


@dataclass(frozen=True)
class LoadedClip:
    """One manifest row with its decoded pixels, held in memory."""

    clip_id: str
    clip: ClipTensor
    fine_ids: tuple[int, ...]
    emotion_id: int | None = None
    face_box: tuple[int, int, int, int] | None = None

    @property
    def fine_id(self) -> int:
        if len(self.fine_ids) != 1:
            raise ValueError(f"clip {self.clip_id} is multi-label")
        return self.fine_ids[0]


def load_split(root: str | Path, split: str) -> list[LoadedClip]:
    """Decode every clip of one split, in manifest order."""
    root = Path(root)
    rows = [r for r in load_manifest(root) if r["split"] == split]
    clips = []
    for r in rows:
        clip = read_frames_dir(root / split / r["clip_id"], fps=r.get("fps", 30))
        box = r.get("face_box")
        clips.append(
            LoadedClip(
                clip_id=r["clip_id"],
                clip=clip,
                fine_ids=tuple(int(k) for k in r["fine_ids"]),
                emotion_id=r.get("emotion_id"),
                face_box=tuple(box) if box is not None else None,
            )
        )
    return clips


def clips_to_batch(
    clips: list[LoadedClip],
    num_frames: int,
    side: int,
    rng: np.random.Generator | None = None,
) -> torch.Tensor:
    """Sample frames, preprocess, and stack clips into a (B, T, 3, S, S) tensor."""
    arrs = []
    for lc in clips:
        sampled = sample_frames(lc.clip, num_frames, rng)
        arr = preprocess_clip(sampled, side)
        arrs.append(np.moveaxis(arr, 3, 1))
    return torch.from_numpy(np.stack(arrs))


def seed_everything(seed: int):
    torch.manual_seed(seed)


# ---------------------------------------------------------------------------
# Checkpoint helpers


def save_model(path: str | Path, model: MANet, extra: dict | None = None):
    tensors = {name: t.detach().cpu().numpy() for name, t in model.state_dict().items()}
    save_checkpoint(path, kind="manet", config=model.config.to_json(), tensors=tensors, extra=extra)


def load_model(path: str | Path) -> tuple[MANet, Checkpoint]:
    ck = load_checkpoint(path)
    if ck.kind != "manet":
        raise CheckpointError(f"{path}: expected a backbone checkpoint, got kind {ck.kind!r}")
    config = ModelConfig.from_json(ck.config)
    model = MANet(config)
    state = {k: torch.from_numpy(v) for k, v in ck.tensors.items()}
    model.load_state_dict(state)
    model.eval()
    return model, ck


# ---------------------------------------------------------------------------
# Evaluation


def evaluate_clips(
    model: MANet,
    clips: list[LoadedClip],
    taxonomy: LabelTaxonomy,
    num_frames: int,
    side: int,
    batch_size: int = 32,
    percent: bool = False,
) -> tuple[MetricsReport, list[dict]]:
    """Deterministic evaluation over in-memory clips.

    Returns the report plus one probability row per clip; the report is built
    from exactly the float64 values that appear in the dump, so recomputing
    metrics from the dump reproduces the report bit-for-bit.
    """
    if not clips:
        raise ValueError("cannot evaluate an empty split")
    if model.config.num_fine_classes != taxonomy.num_fine:
        raise ValueError(
            f"checkpoint has {model.config.num_fine_classes} classes, "
            f"taxonomy has {taxonomy.num_fine}"
        )
    model.eval()
    prob_rows = []
    with torch.no_grad():
        for i in range(0, len(clips), batch_size):
            chunk = clips[i : i + batch_size]
            batch = clips_to_batch(chunk, num_frames, side, rng=None)
            logits = model(batch)
            prob_rows.append(torch.softmax(logits, dim=1).double().numpy())
    probs = np.concatenate(prob_rows, axis=0)
    gts = np.array([lc.fine_id for lc in clips], dtype=np.int64)
    report = build_report(probs, gts, taxonomy, percent=percent)
    dump = [
        {"clip_id": lc.clip_id, "probs": [float(p) for p in probs[i]]}
        for i, lc in enumerate(clips)
    ]
    return report, dump


def evaluate(
    ckpt_path: str | Path,
    data_root: str | Path,
    split: str,
    batch_size: int = 32,
    percent: bool = False,
) -> tuple[MetricsReport, list[dict]]:
    """Evaluate a saved checkpoint on one dataset split."""
    model, ck = load_model(ckpt_path)
    if ck.extra.get("deterministic", True):
        torch.set_num_threads(1)
    taxonomy = dataset_taxonomy(data_root)
    clips = load_split(data_root, split)
    num_frames = int(ck.extra.get("num_frames", 8))
    side = int(ck.extra.get("side", 224))
    return evaluate_clips(
        model, clips, taxonomy, num_frames, side, batch_size=batch_size, percent=percent
    )


def predict(
    ckpt_path: str | Path, clip_dir: str | Path
) -> tuple[list[tuple[int, float]], int]:
    """Rank fine classes for one clip directory; derive the coarse class.

    Returns (descending (fine_id, probability) list, coarse id of the top-1).
    Ties rank the lower class id first. Frame count, input side and the
    taxonomy come from the checkpoint.
    """
    model, ck = load_model(ckpt_path)
    taxonomy = _taxonomy_from_extra(ck)
    clip = read_frames_dir(clip_dir)
    num_frames = int(ck.extra.get("num_frames", 8))
    side = int(ck.extra.get("side", 224))
    lc = LoadedClip(clip_id=clip.clip_id, clip=clip, fine_ids=(0,))
    with torch.no_grad():
        batch = clips_to_batch([lc], num_frames, side, rng=None)
        probs = torch.softmax(model(batch), dim=1).double().numpy()[0]
    ranked = sorted(((int(k), float(probs[k])) for k in range(len(probs))), key=lambda t: (-t[1], t[0]))
    coarse_id = coarse_of(taxonomy, ranked[0][0])
    return ranked, coarse_id


def _taxonomy_from_extra(ck: Checkpoint) -> LabelTaxonomy:
    tax = ck.extra.get("taxonomy")
    if tax is None:
        raise CheckpointError("checkpoint carries no taxonomy; cannot derive classes")
    return taxonomy_from_dict(tax)


# ---------------------------------------------------------------------------
# Training


@dataclass(frozen=True)
class TrainResult:
    best_epoch: int
    best_f1_mean: float
    best_path: str
    final_path: str
    log: tuple


def train(
    model_config: ModelConfig,
    train_config: TrainConfig,
    data_root: str | Path,
    out_dir: str | Path,
    batch_hook=None,
    word_vectors: str | Path | None = None,
) -> TrainResult:
    """Full training run; writes log.jsonl, best.ckpt and final.ckpt.

    batch_hook(epoch, step, loss_bundle) is called after every optimizer step
    with detached float losses. word_vectors optionally names a text file of
    real vectors; by default labels are embedded with the hashed table.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = train_config
    if cfg.deterministic:
        torch.set_num_threads(1)

    taxonomy = dataset_taxonomy(data_root)
    if taxonomy.num_fine != model_config.num_fine_classes:
        raise TrainingError(
            f"model expects {model_config.num_fine_classes} classes, "
            f"dataset taxonomy has {taxonomy.num_fine}"
        )
    train_clips = load_split(data_root, "train")
    val_clips = load_split(data_root, "val")
    if not train_clips:
        raise TrainingError("train split is empty")
    for lc in train_clips + val_clips:
        if len(lc.fine_ids) != 1:
            raise TrainingError(f"clip {lc.clip_id} is multi-label; this trainer is single-label")

    table = load_word_vectors(word_vectors if word_vectors else "hashed", seed=cfg.seed)
    label_mat = torch.from_numpy(label_embedding_matrix(taxonomy, table)).float()
    if cfg.normalize_embeddings:
        label_mat = torch.nn.functional.normalize(label_mat, dim=1)

    seed_everything(cfg.seed)
    model = MANet(model_config)
    # deterministic center-frame batch; pins the init forward scale per seed
    calib_batch = clips_to_batch(
        train_clips[: cfg.batch_size], cfg.num_frames, cfg.side, rng=None
    )
    model.calibrate_stem(calib_batch)
    optimizer = torch.optim.SGD(
        model.parameters(), lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay
    )
    extra = {
        "taxonomy": taxonomy_to_dict(taxonomy),
        "num_frames": cfg.num_frames,
        "side": cfg.side,
        "train_config": cfg.to_json(),
        "deterministic": cfg.deterministic,
    }

    best_f1 = -1.0
    best_epoch = -1
    best_path = out / "best.ckpt"
    final_path = out / "final.ckpt"
    log_rows = []
    log_path = out / "log.jsonl"
    targets_all = np.array([lc.fine_id for lc in train_clips], dtype=np.int64)

    with open(log_path, "w") as log_file:
        for epoch in range(cfg.epochs):
            lr = lr_at_epoch(cfg, epoch)
            for group in optimizer.param_groups:
                group["lr"] = lr
            shuffle_rng = np.random.default_rng([cfg.seed, 1000 + epoch])
            frame_rng = np.random.default_rng([cfg.seed, 2000 + epoch])
            perm = shuffle_rng.permutation(len(train_clips))

            model.train()
            sums = {"total": 0.0, "l_cls": 0.0, "l_emb": 0.0}
            steps = 0
            for start in range(0, len(perm), cfg.batch_size):
                idx = perm[start : start + cfg.batch_size]
                chunk = [train_clips[i] for i in idx]
                batch = clips_to_batch(chunk, cfg.num_frames, cfg.side, rng=frame_rng)
                targets = torch.from_numpy(targets_all[idx])

                _, pooled = model.forward_features(batch)
                logits = model.classify(pooled)
                l_cls = cross_entropy(logits, targets)
                x_z = model.project(pooled)
                if cfg.normalize_embeddings:
                    x_z = torch.nn.functional.normalize(x_z, dim=1)
                x_q = label_mat[targets]
                l_emb = embedding_loss(x_q, x_z)
                bundle = total_loss(l_cls, l_emb, cfg.alpha)
                if not torch.isfinite(bundle.total):
                    raise TrainingError(
                        f"non-finite loss at epoch {epoch} step {steps}: "
                        f"l_cls={l_cls.item()}, l_emb={l_emb.item()}"
                    )
                optimizer.zero_grad()
                bundle.total.backward()
                optimizer.step()

                floats = bundle.detach_to_floats()
                sums["total"] += floats.total
                sums["l_cls"] += floats.l_cls
                sums["l_emb"] += floats.l_emb
                steps += 1
                if batch_hook is not None:
                    batch_hook(epoch, steps - 1, floats)

            row = {
                "epoch": epoch,
                "lr": lr,
                "train_total": sums["total"] / steps,
                "train_l_cls": sums["l_cls"] / steps,
                "train_l_emb": sums["l_emb"] / steps,
            }
            if val_clips:
                report, _ = evaluate_clips(
                    model, val_clips, taxonomy, cfg.num_frames, cfg.side,
                    batch_size=max(cfg.batch_size, 32),
                )
                row["val_f1_mean"] = report.f1_mean
                row["val_acc_top1_fine"] = report.acc_top1_fine
                row["val_acc_top1_coarse"] = report.acc_top1_coarse
                if report.f1_mean > best_f1:
                    best_f1 = report.f1_mean
                    best_epoch = epoch
                    save_model(best_path, model, extra=extra)
            log_file.write(json.dumps(row, sort_keys=True) + "\n")
            log_file.flush()
            log_rows.append(row)

    save_model(final_path, model, extra=extra)
    if best_epoch < 0:
        # no validation split: the final model is the best model
        save_model(best_path, model, extra=extra)
        best_epoch = cfg.epochs - 1
        best_f1 = float("nan")
    return TrainResult(
        best_epoch=best_epoch,
        best_f1_mean=best_f1,
        best_path=str(best_path),
        final_path=str(final_path),
        log=tuple(log_rows),
    )

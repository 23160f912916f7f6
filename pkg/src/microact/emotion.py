"""Dual-branch emotion application: face branch + micro-action branch.

Both branches run the same backbone architecture (independent weights unless
shared is requested) and pool spatially per frame, giving T tokens of width
32C that a linear layer maps to the common width d. The micro-action branch
alone passes through a two-layer self-attention encoder; the face branch
bypasses it. Heads:

    action logits  = FC(mean_t(x_act))            multi-label, one per fine class
    emotion logits = FC(mean_t([x_face; x_act]))  single-label over emotions

trained jointly with  L = L_action_bce + beta * L_emotion_ce.

Face regions are inputs: a box per clip (manifest) or per frame (sidecar
JSONL); no detector is part of this package.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .backbone import MANet, ModelConfig
from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .datagen import (
    CHANNEL_MEAN,
    ClipTensor,
    bilinear_resize,
    dataset_taxonomy,
    preprocess_clip,
    segment_indices,
)
from .metrics import MetricsReport, build_multilabel_report
from .objective import bce_multilabel, cross_entropy, targets_to_multihot
from .taxonomy import LabelTaxonomy, taxonomy_to_dict
from .trainer import LoadedClip, TrainConfig, TrainingError, load_split, lr_at_epoch


@dataclass(frozen=True)
class EmotionConfig:
    """Dual-branch hyperparameters."""

    beta: float = 0.03
    num_frames: int = 16
    num_emotions: int = 5
    encoder_layers: int = 2
    num_heads: int = 4
    feature_dim: int = 256
    share_backbones: bool = False

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.num_frames < 1 or self.num_emotions < 2:
            raise ValueError("num_frames must be >= 1 and num_emotions >= 2")
        if self.encoder_layers < 1 or self.num_heads < 1:
            raise ValueError("encoder_layers and num_heads must be >= 1")
        if self.feature_dim % self.num_heads != 0:
            raise ValueError(
                f"feature_dim {self.feature_dim} must be divisible by num_heads {self.num_heads}"
            )

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(d: dict) -> "EmotionConfig":
        return EmotionConfig(**d)


# ---------------------------------------------------------------------------
# Face cropping


def crop_face_clip(clip: ClipTensor, boxes, out_h: int, out_w: int) -> ClipTensor:
    """Crop the face box out of every frame and resize to (out_h, out_w).

    boxes is one [x, y, w, h] applied to all frames, or a per-frame list of
    such boxes. Resized values are rounded back to uint8. A box covering the
    full frame makes the crop itself an identity.
    """
    t = clip.num_frames
    h, w = clip.pixels.shape[1:3]
    if len(boxes) == 4 and all(isinstance(v, (int, np.integer)) for v in boxes):
        boxes = [boxes] * t
    if len(boxes) != t:
        raise ValueError(f"need one box or one per frame ({t}), got {len(boxes)}")
    out = np.empty((t, out_h, out_w, 3), dtype=np.uint8)
    for i, box in enumerate(boxes):
        x, y, bw, bh = (int(v) for v in box)
        if bw <= 0 or bh <= 0:
            raise ValueError(f"frame {i}: zero-area face box {box}")
        if x < 0 or y < 0 or x + bw > w or y + bh > h:
            raise ValueError(f"frame {i}: face box {box} outside {w}x{h} frame")
        crop = clip.pixels[i, y : y + bh, x : x + bw].astype(np.float64)
        resized = bilinear_resize(crop, out_h, out_w)
        out[i] = np.clip(np.rint(resized), 0, 255).astype(np.uint8)
    return ClipTensor(pixels=out, fps=clip.fps, clip_id=clip.clip_id)


def load_face_boxes(path: str | Path) -> dict:
    """Sidecar file: JSONL rows {"clip_id", "boxes": [[x,y,w,h], ...]}."""
    boxes = {}
    with open(path) as f:
        for num, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                boxes[row["clip_id"]] = row["boxes"]
            except (json.JSONDecodeError, KeyError) as e:
                raise ValueError(f"{path}:{num}: bad face-box row: {e}")
    return boxes


# ---------------------------------------------------------------------------
# Temporal encoder


class MultiHeadSelfAttention(nn.Module):
    """Standard scaled dot-product self-attention over the T axis."""

    def __init__(self, dim: int, num_heads: int):
        super().__init__()
        if dim % num_heads != 0:
            raise ValueError(f"dim {dim} not divisible by num_heads {num_heads}")
        self.dim = dim
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.qkv = nn.Linear(dim, 3 * dim)
        self.out = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor, return_probs: bool = False):
        b, t, d = x.shape
        qkv = self.qkv(x).reshape(b, t, 3, self.num_heads, self.head_dim)
        q, k, v = (qkv[:, :, i].transpose(1, 2) for i in range(3))  # (B, H, T, hd)
        scores = q @ k.transpose(2, 3) / math.sqrt(self.head_dim)
        probs = torch.softmax(scores, dim=-1)
        y = (probs @ v).transpose(1, 2).reshape(b, t, d)
        y = self.out(y)
        if return_probs:
            return y, probs
        return y


class EncoderLayer(nn.Module):
    """Post-norm block: x = LN(x + attn(x)); x = LN(x + ffn(x))."""

    def __init__(self, dim: int, num_heads: int, ffn_mult: int = 4):
        super().__init__()
        self.attn = MultiHeadSelfAttention(dim, num_heads)
        self.norm1 = nn.LayerNorm(dim)
        self.ffn = nn.Sequential(
            nn.Linear(dim, ffn_mult * dim), nn.ReLU(), nn.Linear(ffn_mult * dim, dim)
        )
        self.norm2 = nn.LayerNorm(dim)

    def forward(self, x: torch.Tensor, return_probs: bool = False):
        if return_probs:
            a, probs = self.attn(x, return_probs=True)
        else:
            a, probs = self.attn(x), None
        x = self.norm1(x + a)
        x = self.norm2(x + self.ffn(x))
        return (x, probs) if return_probs else x


class TemporalEncoder(nn.Module):
    """Stack of self-attention encoder layers; shape-preserving (B, T, d)."""

    def __init__(self, dim: int, num_layers: int = 2, num_heads: int = 4):
        super().__init__()
        self.layers = nn.ModuleList(EncoderLayer(dim, num_heads) for _ in range(num_layers))

    def forward(self, x: torch.Tensor, return_probs: bool = False):
        all_probs = []
        for layer in self.layers:
            if return_probs:
                x, probs = layer(x, return_probs=True)
                all_probs.append(probs)
            else:
                x = layer(x)
        return (x, all_probs) if return_probs else x


# ---------------------------------------------------------------------------
# Dual-branch model


class DualBranchModel(nn.Module):
    """Face + micro-action branches with multi-label and emotion heads."""

    def __init__(self, backbone_config: ModelConfig, emotion_config: EmotionConfig):
        super().__init__()
        self.backbone_config = backbone_config
        self.emotion_config = emotion_config
        d = emotion_config.feature_dim
        feat = backbone_config.feature_dim
        self.act_net = MANet(backbone_config)
        self.face_net = self.act_net if emotion_config.share_backbones else MANet(backbone_config)
        self.face_proj = nn.Linear(feat, d)
        self.act_proj = nn.Linear(feat, d)
        self.encoder = TemporalEncoder(
            d, num_layers=emotion_config.encoder_layers, num_heads=emotion_config.num_heads
        )
        self.action_fc = nn.Linear(d, backbone_config.num_fine_classes)
        self.emotion_fc = nn.Linear(2 * d, emotion_config.num_emotions)

    def dual_features(self, face_clip: torch.Tensor, body_clip: torch.Tensor):
        """Per-frame branch features (x_face, x_act), each (B, T, d)."""
        x_face = self.face_proj(self.face_net.pooled_per_frame(face_clip))
        x_act = self.act_proj(self.act_net.pooled_per_frame(body_clip))
        x_act = self.encoder(x_act)
        return x_face, x_act

    def action_head(self, x_act: torch.Tensor) -> torch.Tensor:
        """Multi-label fine-class logits from temporally pooled x_act."""
        return self.action_fc(x_act.mean(dim=1))

    def emotion_head(self, x_face: torch.Tensor, x_act: torch.Tensor) -> torch.Tensor:
        """Emotion logits from the temporally pooled concatenation."""
        if x_face.shape != x_act.shape:
            raise ValueError(f"branch shapes differ: {tuple(x_face.shape)} vs {tuple(x_act.shape)}")
        return self.emotion_fc(torch.cat([x_face, x_act], dim=-1).mean(dim=1))

    def forward(self, face_clip: torch.Tensor, body_clip: torch.Tensor):
        x_face, x_act = self.dual_features(face_clip, body_clip)
        return self.action_head(x_act), self.emotion_head(x_face, x_act)


@dataclass(frozen=True)
class MultitaskLoss:
    """total = l_act + beta * l_emo (beta = 0 returns l_act itself)."""

    l_act: torch.Tensor | float
    l_emo: torch.Tensor | float
    beta: float
    total: torch.Tensor | float

    def detach_to_floats(self) -> "MultitaskLoss":
        def f(x):
            return float(x.detach()) if isinstance(x, torch.Tensor) else float(x)

        return MultitaskLoss(f(self.l_act), f(self.l_emo), float(self.beta), f(self.total))


def multitask_loss(
    action_logits: torch.Tensor,
    action_targets: torch.Tensor,
    emotion_logits: torch.Tensor,
    emotion_ids: torch.Tensor,
    beta: float,
) -> MultitaskLoss:
    """Multi-label BCE on actions plus beta-weighted CE on emotions."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    l_act = bce_multilabel(action_logits, action_targets)
    l_emo = cross_entropy(emotion_logits, emotion_ids)
    total = l_act if beta == 0 else l_act + beta * l_emo
    return MultitaskLoss(l_act=l_act, l_emo=l_emo, beta=float(beta), total=total)


# ---------------------------------------------------------------------------
# Checkpoint plumbing


def save_emotion_model(path: str | Path, model: DualBranchModel, extra: dict | None = None):
    tensors = {name: t.detach().cpu().numpy() for name, t in model.state_dict().items()}
    config = {
        "backbone": model.backbone_config.to_json(),
        "emotion": model.emotion_config.to_json(),
    }
    save_checkpoint(path, kind="dualbranch", config=config, tensors=tensors, extra=extra)


def load_emotion_model(path: str | Path) -> tuple[DualBranchModel, Checkpoint]:
    ck = load_checkpoint(path)
    if ck.kind != "dualbranch":
        raise CheckpointError(f"{path}: expected a dual-branch checkpoint, got {ck.kind!r}")
    model = DualBranchModel(
        ModelConfig.from_json(ck.config["backbone"]),
        EmotionConfig.from_json(ck.config["emotion"]),
    )
    model.load_state_dict({k: torch.from_numpy(v) for k, v in ck.tensors.items()})
    model.eval()
    return model, ck


# ---------------------------------------------------------------------------
# Data plumbing shared by train/eval


def _resolve_face_box(lc: LoadedClip, sidecar: dict | None):
    if sidecar is not None and lc.clip_id in sidecar:
        return sidecar[lc.clip_id]
    if lc.face_box is not None:
        return list(lc.face_box)
    raise TrainingError(f"clip {lc.clip_id} has no face box in manifest or sidecar file")


def _face_clips(clips: list[LoadedClip], side: int, sidecar: dict | None) -> list[ClipTensor]:
    return [crop_face_clip(lc.clip, _resolve_face_box(lc, sidecar), side, side) for lc in clips]


def _mask_face(pixels: np.ndarray, box) -> np.ndarray:
    """Blank the face box in raw body frames (fill = normalization midpoint).

    The action branch must read the body, not the face: facial appearance
    varies with emotion, so leaving it visible injects label-correlated
    clutter into action features. Filling with the preprocessing mean makes
    the region exactly zero after standardization.
    """
    boxes = box if isinstance(box[0], (list, tuple)) else [box] * len(pixels)
    if len(boxes) != len(pixels):
        raise TrainingError(f"face box count {len(boxes)} != frame count {len(pixels)}")
    out = pixels.copy()
    fill = np.uint8(round(255.0 * CHANNEL_MEAN))
    h, w = out.shape[1:3]
    for t, (x, y, bw, bh) in enumerate(boxes):
        x0, y0 = max(0, int(x)), max(0, int(y))
        x1, y1 = min(w, int(x + bw)), min(h, int(y + bh))
        if x0 < x1 and y0 < y1:
            out[t, y0:y1, x0:x1, :] = fill
    return out


def _emotion_batch(
    clips: list[LoadedClip],
    faces: list[ClipTensor],
    indices,
    num_frames: int,
    side: int,
    rng: np.random.Generator | None,
    sidecar: dict | None = None,
):
    """Stack aligned (face, body) tensors for the given clip indices."""
    face_arrs, body_arrs = [], []
    for i in indices:
        lc, face = clips[i], faces[i]
        idx = segment_indices(lc.clip.num_frames, num_frames, rng)
        box = _resolve_face_box(lc, sidecar)
        if isinstance(box[0], (list, tuple)):
            box = [box[t] for t in idx]
        masked = _mask_face(lc.clip.pixels[idx], box)
        body = preprocess_clip(
            ClipTensor(masked, fps=lc.clip.fps, clip_id=lc.clip_id), side
        )
        facep = preprocess_clip(
            ClipTensor(face.pixels[idx], fps=face.fps, clip_id=face.clip_id), side
        )
        body_arrs.append(np.moveaxis(body, 3, 1))
        face_arrs.append(np.moveaxis(facep, 3, 1))
    return (
        torch.from_numpy(np.stack(face_arrs)),
        torch.from_numpy(np.stack(body_arrs)),
    )


def _check_emotion_clips(clips: list[LoadedClip], num_emotions: int):
    for lc in clips:
        if lc.emotion_id is None:
            raise TrainingError(f"clip {lc.clip_id} lacks an emotion label")
        if not (0 <= lc.emotion_id < num_emotions):
            raise TrainingError(f"clip {lc.clip_id}: emotion id {lc.emotion_id} out of range")
        if len(lc.fine_ids) < 1:
            raise TrainingError(f"clip {lc.clip_id} has no action labels")


# ---------------------------------------------------------------------------
# Evaluation


def evaluate_emotion_clips(
    model: DualBranchModel,
    clips: list[LoadedClip],
    taxonomy: LabelTaxonomy,
    side: int,
    batch_size: int = 16,
    percent: bool = False,
    face_boxes: dict | None = None,
) -> tuple[MetricsReport, list[dict]]:
    """Deterministic dual-branch evaluation over in-memory clips."""
    if not clips:
        raise ValueError("cannot evaluate an empty split")
    cfg = model.emotion_config
    _check_emotion_clips(clips, cfg.num_emotions)
    faces = _face_clips(clips, side, face_boxes)
    model.eval()
    act_rows, emo_rows = [], []
    with torch.no_grad():
        for start in range(0, len(clips), batch_size):
            idx = range(start, min(start + batch_size, len(clips)))
            face_b, body_b = _emotion_batch(
                clips, faces, idx, cfg.num_frames, side, rng=None, sidecar=face_boxes
            )
            action_logits, emotion_logits = model(face_b, body_b)
            act_rows.append(torch.sigmoid(action_logits).double().numpy())
            emo_rows.append(torch.softmax(emotion_logits, dim=1).double().numpy())
    action_scores = np.concatenate(act_rows, axis=0)
    emotion_probs = np.concatenate(emo_rows, axis=0)
    target_sets = [set(lc.fine_ids) for lc in clips]
    emotion_gts = np.array([lc.emotion_id for lc in clips], dtype=np.int64)
    report = build_multilabel_report(
        action_scores, target_sets, emotion_probs, emotion_gts,
        taxonomy, cfg.num_emotions, percent=percent,
    )
    dump = [
        {
            "clip_id": lc.clip_id,
            "action_scores": [float(v) for v in action_scores[i]],
            "emotion_probs": [float(v) for v in emotion_probs[i]],
        }
        for i, lc in enumerate(clips)
    ]
    return report, dump


def evaluate_emotion(
    ckpt_path: str | Path,
    data_root: str | Path,
    split: str,
    batch_size: int = 16,
    percent: bool = False,
    face_box_file: str | Path | None = None,
) -> tuple[MetricsReport, list[dict]]:
    model, ck = load_emotion_model(ckpt_path)
    if ck.extra.get("deterministic", True):
        torch.set_num_threads(1)
    taxonomy = dataset_taxonomy(data_root)
    clips = load_split(data_root, split)
    side = int(ck.extra.get("side", 224))
    sidecar = load_face_boxes(face_box_file) if face_box_file else None
    return evaluate_emotion_clips(
        model, clips, taxonomy, side, batch_size=batch_size, percent=percent, face_boxes=sidecar
    )


# ---------------------------------------------------------------------------
# Training


@dataclass(frozen=True)
class EmotionTrainResult:
    best_epoch: int
    best_emotion_acc: float
    best_path: str
    final_path: str
    log: tuple


def train_emotion(
    backbone_config: ModelConfig,
    emotion_config: EmotionConfig,
    train_config: TrainConfig,
    data_root: str | Path,
    out_dir: str | Path,
    batch_hook=None,
    face_box_file: str | Path | None = None,
) -> EmotionTrainResult:
    """Joint training of both branches; selects on validation emotion accuracy.

    train_config supplies the optimizer recipe, batch size, epochs, seed and
    input side; frame count comes from emotion_config.num_frames (T).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg, ecfg = train_config, emotion_config
    if cfg.deterministic:
        torch.set_num_threads(1)

    taxonomy = dataset_taxonomy(data_root)
    if taxonomy.num_fine != backbone_config.num_fine_classes:
        raise TrainingError(
            f"model expects {backbone_config.num_fine_classes} classes, "
            f"dataset taxonomy has {taxonomy.num_fine}"
        )
    train_clips = load_split(data_root, "train")
    val_clips = load_split(data_root, "val")
    if not train_clips:
        raise TrainingError("train split is empty")
    _check_emotion_clips(train_clips + val_clips, ecfg.num_emotions)
    sidecar = load_face_boxes(face_box_file) if face_box_file else None
    train_faces = _face_clips(train_clips, cfg.side, sidecar)

    torch.manual_seed(cfg.seed)
    model = DualBranchModel(backbone_config, ecfg)
    # deterministic center-frame batch; pins each branch's init forward scale
    calib_idx = range(min(cfg.batch_size, len(train_clips)))
    face_cb, body_cb = _emotion_batch(
        train_clips, train_faces, calib_idx, ecfg.num_frames, cfg.side, rng=None,
        sidecar=sidecar,
    )
    model.act_net.calibrate_stem(body_cb)
    if not ecfg.share_backbones:
        model.face_net.calibrate_stem(face_cb)
    optimizer = torch.optim.SGD(
        model.parameters(), lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay
    )
    num_fine = backbone_config.num_fine_classes
    action_hot = targets_to_multihot([lc.fine_ids for lc in train_clips], num_fine)
    emotion_ids = torch.tensor([lc.emotion_id for lc in train_clips], dtype=torch.int64)
    extra = {
        "taxonomy": taxonomy_to_dict(taxonomy),
        "num_frames": ecfg.num_frames,
        "side": cfg.side,
        "train_config": cfg.to_json(),
        "deterministic": cfg.deterministic,
    }

    best_acc = -1.0
    best_map = -1.0
    best_epoch = -1
    best_path = out / "best.ckpt"
    final_path = out / "final.ckpt"
    log_rows = []
    with open(out / "log.jsonl", "w") as log_file:
        for epoch in range(cfg.epochs):
            lr = lr_at_epoch(cfg, epoch)
            for group in optimizer.param_groups:
                group["lr"] = lr
            shuffle_rng = np.random.default_rng([cfg.seed, 1000 + epoch])
            frame_rng = np.random.default_rng([cfg.seed, 2000 + epoch])
            perm = shuffle_rng.permutation(len(train_clips))

            model.train()
            sums = {"total": 0.0, "l_act": 0.0, "l_emo": 0.0}
            steps = 0
            for start in range(0, len(perm), cfg.batch_size):
                idx = perm[start : start + cfg.batch_size]
                face_b, body_b = _emotion_batch(
                    train_clips, train_faces, idx, ecfg.num_frames, cfg.side,
                    rng=frame_rng, sidecar=sidecar,
                )
                action_logits, emotion_logits = model(face_b, body_b)
                bundle = multitask_loss(
                    action_logits,
                    action_hot[idx],
                    emotion_logits,
                    emotion_ids[idx],
                    ecfg.beta,
                )
                if not torch.isfinite(bundle.total):
                    raise TrainingError(
                        f"non-finite loss at epoch {epoch} step {steps}: "
                        f"l_act={bundle.l_act.item()}, l_emo={bundle.l_emo.item()}"
                    )
                optimizer.zero_grad()
                bundle.total.backward()
                optimizer.step()
                floats = bundle.detach_to_floats()
                sums["total"] += floats.total
                sums["l_act"] += floats.l_act
                sums["l_emo"] += floats.l_emo
                steps += 1
                if batch_hook is not None:
                    batch_hook(epoch, steps - 1, floats)

            row = {
                "epoch": epoch,
                "lr": lr,
                "train_total": sums["total"] / steps,
                "train_l_act": sums["l_act"] / steps,
                "train_l_emo": sums["l_emo"] / steps,
            }
            if val_clips:
                report, _ = evaluate_emotion_clips(
                    model, val_clips, taxonomy, cfg.side,
                    batch_size=max(cfg.batch_size, 16), face_boxes=sidecar,
                )
                row["val_emotion_acc"] = report.emotion.acc
                row["val_action_map"] = report.emotion.map
                # emotion accuracy first, action mAP as the tie-breaker
                if (report.emotion.acc, report.emotion.map) > (best_acc, best_map):
                    best_acc = report.emotion.acc
                    best_map = report.emotion.map
                    best_epoch = epoch
                    save_emotion_model(best_path, model, extra=extra)
            log_file.write(json.dumps(row, sort_keys=True) + "\n")
            log_file.flush()
            log_rows.append(row)

    save_emotion_model(final_path, model, extra=extra)
    if best_epoch < 0:
        save_emotion_model(best_path, model, extra=extra)
        best_epoch = cfg.epochs - 1
        best_acc = float("nan")
    return EmotionTrainResult(
        best_epoch=best_epoch,
        best_emotion_acc=best_acc,
        best_path=str(best_path),
        final_path=str(final_path),
        log=tuple(log_rows),
    )

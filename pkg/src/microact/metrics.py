"""Evaluation suite: confusion matrices, F1 family, Top-k, hierarchy, emotion.

Conventions, applied uniformly and documented here once:

* Confusion matrix rows are ground truth, columns are predictions.
* Wherever a precision/recall denominator vanishes (class never predicted,
  class with no support), that quantity is 0.
* f1_micro uses pooled counts; for single-label multiclass data the pooled
  precision and recall coincide, and the implementation returns that common
  value directly, so f1_micro equals Top-1 accuracy bit-for-bit.
* f1_macro is the "F1 of the averaged precision/recall" form: per-class
  precision and recall are averaged unweighted over all classes first, then
  combined. The per-class-F1 average is a different statistic and is provided
  as uf1 (where zero-support classes are excluded instead).
* Ties in rankings are broken toward the lower class id (Top-k) or the lower
  instance index (average precision).
* Reports carry all values either in [0,1] ("unit" scale) or 0..100
  ("percent"), never mixed; the scale is recorded in the report.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .taxonomy import LabelTaxonomy


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square count matrix; counts[g][p] = samples of truth g predicted p."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError(f"counts must be square, got shape {c.shape}")
        if not np.issubdtype(c.dtype, np.integer):
            raise ValueError("counts must be integers")
        if (c < 0).any():
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", c.astype(np.int64))

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def num_samples(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(preds, gts, num_classes: int) -> ConfusionMatrix:
    preds = np.asarray(preds, dtype=np.int64)
    gts = np.asarray(gts, dtype=np.int64)
    if preds.shape != gts.shape or preds.ndim != 1:
        raise ValueError(f"preds/gts must be equal-length 1-d, got {preds.shape} vs {gts.shape}")
    if len(preds) and (
        preds.min() < 0 or preds.max() >= num_classes or gts.min() < 0 or gts.max() >= num_classes
    ):
        raise ValueError(f"class id out of range for {num_classes} classes")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (gts, preds), 1)
    return ConfusionMatrix(counts)


def _check_nonempty(cm: ConfusionMatrix):
    if cm.num_samples == 0:
        raise ValueError("metric undefined on zero samples")


def per_class_precision_recall(cm: ConfusionMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Per-class precision and recall arrays; vanishing denominators give 0."""
    diag = np.diag(cm.counts).astype(np.float64)
    col = cm.counts.sum(axis=0).astype(np.float64)
    row = cm.counts.sum(axis=1).astype(np.float64)
    pre = np.divide(diag, col, out=np.zeros_like(diag), where=col > 0)
    rec = np.divide(diag, row, out=np.zeros_like(diag), where=row > 0)
    return pre, rec


def _f1(pre: float, rec: float) -> float:
    if pre == rec:
        # harmonic mean of equal values is that value; also makes the pooled
        # single-label case equal Top-1 accuracy exactly
        return pre
    if pre + rec == 0:
        return 0.0
    return 2.0 * pre * rec / (pre + rec)


def f1_micro(cm: ConfusionMatrix) -> float:
    """Pooled-count F1: TP, FP, FN summed over classes before the ratio."""
    _check_nonempty(cm)
    tp = float(np.diag(cm.counts).sum())
    fp = float(cm.counts.sum(axis=0).sum() - np.diag(cm.counts).sum())
    fn = float(cm.counts.sum(axis=1).sum() - np.diag(cm.counts).sum())
    pre = tp / (tp + fp) if tp + fp > 0 else 0.0
    rec = tp / (tp + fn) if tp + fn > 0 else 0.0
    return _f1(pre, rec)


def f1_macro(cm: ConfusionMatrix) -> float:
    """F1 of the unweighted class-averaged precision and recall."""
    _check_nonempty(cm)
    pre, rec = per_class_precision_recall(cm)
    return _f1(float(pre.mean()), float(rec.mean()))


def f1_mean(macro_coarse: float, micro_coarse: float, macro_fine: float, micro_fine: float) -> float:
    """Arithmetic mean of the four F1 values (unit or percent, consistently)."""
    vals = (macro_coarse, micro_coarse, macro_fine, micro_fine)
    if any(v < 0 or v > 100 for v in vals):
        raise ValueError(f"F1 values out of range: {vals}")
    if any(v > 1 for v in vals) and any(v < 1 for v in vals):
        raise ValueError(f"mixed unit/percent scales: {vals}")
    return (vals[0] + vals[1] + vals[2] + vals[3]) / 4.0


def topk_accuracy(prob_rows: np.ndarray, gts, k: int) -> float:
    """Fraction of rows whose true class is among the k largest entries.

    Ties are broken toward the lower class id.
    """
    probs = np.asarray(prob_rows, dtype=np.float64)
    gts = np.asarray(gts, dtype=np.int64)
    if probs.ndim != 2 or len(gts) != probs.shape[0]:
        raise ValueError("prob_rows must be (N, C) with one gt per row")
    n, c = probs.shape
    if k < 1 or k > c:
        raise ValueError(f"k must be in 1..{c}, got {k}")
    if n == 0:
        raise ValueError("metric undefined on zero samples")
    order = np.argsort(-probs, axis=1, kind="stable")
    hits = (order[:, :k] == gts[:, None]).any(axis=1)
    return float(hits.sum()) / float(n)


def coarse_from_fine_labels(fine_ids, taxonomy: LabelTaxonomy) -> np.ndarray:
    mapping = np.array([f.coarse_id for f in taxonomy.fine_labels], dtype=np.int64)
    fine_ids = np.asarray(fine_ids, dtype=np.int64)
    if len(fine_ids) and (fine_ids.min() < 0 or fine_ids.max() >= len(mapping)):
        raise ValueError("fine id out of taxonomy range")
    return mapping[fine_ids]


def coarse_metrics_from_fine(
    fine_prob_rows: np.ndarray, fine_gts, taxonomy: LabelTaxonomy
) -> tuple[ConfusionMatrix, dict]:
    """Induce coarse labels from fine predictions and evaluate them.

    Coarse prediction = group of the argmax fine class; coarse truth = group
    of the true fine class. Returns the coarse confusion matrix plus
    f1_micro / f1_macro / top1 on the induced labels.
    """
    probs = np.asarray(fine_prob_rows, dtype=np.float64)
    fine_preds = np.argmax(probs, axis=1)
    coarse_preds = coarse_from_fine_labels(fine_preds, taxonomy)
    coarse_gts = coarse_from_fine_labels(fine_gts, taxonomy)
    cm = confusion_matrix(coarse_preds, coarse_gts, taxonomy.num_coarse)
    top1 = float((coarse_preds == coarse_gts).sum()) / float(len(coarse_gts))
    return cm, {"f1_micro": f1_micro(cm), "f1_macro": f1_macro(cm), "top1": top1}


def accuracy(cm: ConfusionMatrix) -> float:
    _check_nonempty(cm)
    return float(np.diag(cm.counts).sum()) / float(cm.num_samples)


def _per_class_f1(cm: ConfusionMatrix) -> np.ndarray:
    pre, rec = per_class_precision_recall(cm)
    denom = pre + rec
    out = np.zeros_like(pre)
    np.divide(2.0 * pre * rec, denom, out=out, where=denom > 0)
    return out


def weighted_f1(cm: ConfusionMatrix) -> float:
    """Support-weighted mean of per-class F1 scores."""
    _check_nonempty(cm)
    support = cm.counts.sum(axis=1).astype(np.float64)
    return float((_per_class_f1(cm) * support).sum() / support.sum())


def uf1(cm: ConfusionMatrix) -> float:
    """Unweighted mean of per-class F1 over classes with nonzero support."""
    _check_nonempty(cm)
    support = cm.counts.sum(axis=1)
    mask = support > 0
    return float(_per_class_f1(cm)[mask].mean())


def uar(cm: ConfusionMatrix) -> float:
    """Unweighted mean of per-class recall over classes with nonzero support."""
    _check_nonempty(cm)
    support = cm.counts.sum(axis=1)
    mask = support > 0
    _, rec = per_class_precision_recall(cm)
    return float(rec[mask].mean())


def average_precision(scores: np.ndarray, positives: np.ndarray) -> float:
    """AP of one class over the instance ranking; ties keep instance order."""
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives, dtype=bool)
    if scores.shape != positives.shape or scores.ndim != 1:
        raise ValueError("scores and positives must be equal-length 1-d")
    n_pos = int(positives.sum())
    if n_pos == 0:
        raise ValueError("average precision undefined without positives")
    order = np.argsort(-scores, kind="stable")
    ranked = positives[order]
    hits = np.cumsum(ranked)
    ranks = np.arange(1, len(scores) + 1)
    return float((hits[ranked] / ranks[ranked]).sum() / n_pos)


def multilabel_map(score_rows: np.ndarray, target_sets) -> float:
    """Class-wise average precision, macro-averaged over classes with positives.

    score_rows: (N, C) relevance scores; target_sets: per-instance sets of
    true class ids (each nonempty).
    """
    scores = np.asarray(score_rows, dtype=np.float64)
    sets = [frozenset(int(k) for k in s) for s in target_sets]
    if scores.ndim != 2 or len(sets) != scores.shape[0]:
        raise ValueError("score_rows must be (N, C) with one target set per row")
    if any(len(s) == 0 for s in sets):
        raise ValueError("every instance needs at least one target label")
    n, c = scores.shape
    membership = np.zeros((n, c), dtype=bool)
    for i, s in enumerate(sets):
        for k in s:
            if not (0 <= k < c):
                raise ValueError(f"target id {k} out of range for {c} classes")
            membership[i, k] = True
    aps = [
        average_precision(scores[:, k], membership[:, k])
        for k in range(c)
        if membership[:, k].any()
    ]
    if not aps:
        raise ValueError("no positive labels in any instance")
    return float(np.mean(aps))


# ---------------------------------------------------------------------------
# Multi-label micro/macro F1 (used by the emotion application's action branch)


def multilabel_counts(pred_multihot: np.ndarray, gt_multihot: np.ndarray) -> np.ndarray:
    """Per-class binary (TP, FP, FN) counts, shape (C, 3)."""
    p = np.asarray(pred_multihot, dtype=bool)
    g = np.asarray(gt_multihot, dtype=bool)
    if p.shape != g.shape or p.ndim != 2:
        raise ValueError("pred/gt multihot must share shape (N, C)")
    tp = (p & g).sum(axis=0)
    fp = (p & ~g).sum(axis=0)
    fn = (~p & g).sum(axis=0)
    return np.stack([tp, fp, fn], axis=1).astype(np.int64)


def multilabel_f1_micro(pred_multihot: np.ndarray, gt_multihot: np.ndarray) -> float:
    tp, fp, fn = multilabel_counts(pred_multihot, gt_multihot).sum(axis=0).astype(np.float64)
    pre = tp / (tp + fp) if tp + fp > 0 else 0.0
    rec = tp / (tp + fn) if tp + fn > 0 else 0.0
    return _f1(pre, rec)


def multilabel_f1_macro(pred_multihot: np.ndarray, gt_multihot: np.ndarray) -> float:
    counts = multilabel_counts(pred_multihot, gt_multihot).astype(np.float64)
    tp, fp, fn = counts[:, 0], counts[:, 1], counts[:, 2]
    pre = np.divide(tp, tp + fp, out=np.zeros_like(tp), where=tp + fp > 0)
    rec = np.divide(tp, tp + fn, out=np.zeros_like(tp), where=tp + fn > 0)
    return _f1(float(pre.mean()), float(rec.mean()))


def multilabel_per_class_pr(
    pred_multihot: np.ndarray, gt_multihot: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    counts = multilabel_counts(pred_multihot, gt_multihot).astype(np.float64)
    tp, fp, fn = counts[:, 0], counts[:, 1], counts[:, 2]
    pre = np.divide(tp, tp + fp, out=np.zeros_like(tp), where=tp + fp > 0)
    rec = np.divide(tp, tp + fn, out=np.zeros_like(tp), where=tp + fn > 0)
    return pre, rec


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class EmotionBlock:
    """Emotion-classification metrics plus the multi-label action mAP."""

    acc: float
    f1_weight: float
    uf1: float
    uar: float
    map: float

    def to_dict(self) -> dict:
        return {
            "acc": self.acc,
            "f1_weight": self.f1_weight,
            "uf1": self.uf1,
            "uar": self.uar,
            "map": self.map,
        }

    @staticmethod
    def from_dict(d: dict) -> "EmotionBlock":
        return EmotionBlock(
            acc=d["acc"], f1_weight=d["f1_weight"], uf1=d["uf1"], uar=d["uar"], map=d["map"]
        )


@dataclass(frozen=True)
class MetricsReport:
    """One evaluation's numbers. f1_mean is always the mean of the four F1s."""

    f1_micro_fine: float
    f1_macro_fine: float
    f1_micro_coarse: float
    f1_macro_coarse: float
    f1_mean: float
    acc_top1_fine: float
    acc_top5_fine: float
    acc_top1_coarse: float
    fine_precision: tuple = ()
    fine_recall: tuple = ()
    coarse_precision: tuple = ()
    coarse_recall: tuple = ()
    scale: str = "unit"
    emotion: EmotionBlock | None = None

    def __post_init__(self):
        if self.scale not in ("unit", "percent"):
            raise ValueError(f"scale must be unit or percent, got {self.scale!r}")
        expect = f1_mean(
            self.f1_macro_coarse, self.f1_micro_coarse, self.f1_macro_fine, self.f1_micro_fine
        )
        if self.f1_mean != expect:
            raise ValueError(f"f1_mean {self.f1_mean!r} is not the mean of the four F1 fields")

    def to_dict(self) -> dict:
        d = {
            "f1_micro_fine": self.f1_micro_fine,
            "f1_macro_fine": self.f1_macro_fine,
            "f1_micro_coarse": self.f1_micro_coarse,
            "f1_macro_coarse": self.f1_macro_coarse,
            "f1_mean": self.f1_mean,
            "acc_top1_fine": self.acc_top1_fine,
            "acc_top5_fine": self.acc_top5_fine,
            "acc_top1_coarse": self.acc_top1_coarse,
            "fine_precision": list(self.fine_precision),
            "fine_recall": list(self.fine_recall),
            "coarse_precision": list(self.coarse_precision),
            "coarse_recall": list(self.coarse_recall),
            "scale": self.scale,
        }
        if self.emotion is not None:
            d["emotion"] = self.emotion.to_dict()
        return d

    @staticmethod
    def from_dict(d: dict) -> "MetricsReport":
        emotion = EmotionBlock.from_dict(d["emotion"]) if "emotion" in d else None
        return MetricsReport(
            f1_micro_fine=d["f1_micro_fine"],
            f1_macro_fine=d["f1_macro_fine"],
            f1_micro_coarse=d["f1_micro_coarse"],
            f1_macro_coarse=d["f1_macro_coarse"],
            f1_mean=d["f1_mean"],
            acc_top1_fine=d["acc_top1_fine"],
            acc_top5_fine=d["acc_top5_fine"],
            acc_top1_coarse=d["acc_top1_coarse"],
            fine_precision=tuple(d["fine_precision"]),
            fine_recall=tuple(d["fine_recall"]),
            coarse_precision=tuple(d["coarse_precision"]),
            coarse_recall=tuple(d["coarse_recall"]),
            scale=d["scale"],
            emotion=emotion,
        )


def _maybe_percent(x: float, percent: bool) -> float:
    return 100.0 * x if percent else x


def build_report(
    fine_prob_rows: np.ndarray,
    fine_gts,
    taxonomy: LabelTaxonomy,
    percent: bool = False,
    emotion: EmotionBlock | None = None,
) -> MetricsReport:
    """Full single-label report from fine-class probability rows."""
    probs = np.asarray(fine_prob_rows, dtype=np.float64)
    gts = np.asarray(fine_gts, dtype=np.int64)
    if probs.ndim != 2 or probs.shape[1] != taxonomy.num_fine:
        raise ValueError(
            f"prob rows must be (N, {taxonomy.num_fine}), got {probs.shape}"
        )
    if len(gts) == 0:
        raise ValueError("cannot build a report from zero samples")
    preds = np.argmax(probs, axis=1)
    fine_cm = confusion_matrix(preds, gts, taxonomy.num_fine)
    coarse_cm, coarse = coarse_metrics_from_fine(probs, gts, taxonomy)
    fine_pre, fine_rec = per_class_precision_recall(fine_cm)
    coarse_pre, coarse_rec = per_class_precision_recall(coarse_cm)

    k5 = min(5, taxonomy.num_fine)
    mi_f = _maybe_percent(f1_micro(fine_cm), percent)
    ma_f = _maybe_percent(f1_macro(fine_cm), percent)
    mi_c = _maybe_percent(coarse["f1_micro"], percent)
    ma_c = _maybe_percent(coarse["f1_macro"], percent)
    return MetricsReport(
        f1_micro_fine=mi_f,
        f1_macro_fine=ma_f,
        f1_micro_coarse=mi_c,
        f1_macro_coarse=ma_c,
        f1_mean=f1_mean(ma_c, mi_c, ma_f, mi_f),
        acc_top1_fine=_maybe_percent(topk_accuracy(probs, gts, 1), percent),
        acc_top5_fine=_maybe_percent(topk_accuracy(probs, gts, k5), percent),
        acc_top1_coarse=_maybe_percent(coarse["top1"], percent),
        fine_precision=tuple(_maybe_percent(v, percent) for v in fine_pre.tolist()),
        fine_recall=tuple(_maybe_percent(v, percent) for v in fine_rec.tolist()),
        coarse_precision=tuple(_maybe_percent(v, percent) for v in coarse_pre.tolist()),
        coarse_recall=tuple(_maybe_percent(v, percent) for v in coarse_rec.tolist()),
        scale="percent" if percent else "unit",
        emotion=emotion,
    )


def build_multilabel_report(
    action_score_rows: np.ndarray,
    action_target_sets,
    emotion_prob_rows: np.ndarray,
    emotion_gts,
    taxonomy: LabelTaxonomy,
    num_emotions: int,
    percent: bool = False,
) -> MetricsReport:
    """Report for the multi-label action + emotion setting.

    Action F1 fields are threshold-0.5 multi-label micro/macro F1 (a class is
    predicted when its logistic score is >= 0.5); coarse multi-hot labels are
    the OR over each group's fine classes. acc_top1_fine is the fraction of
    clips whose highest-scoring fine class is a true label. The emotion block
    carries Acc / weighted F1 / UF1 / UAR on the emotion labels plus the
    action mAP.
    """
    scores = np.asarray(action_score_rows, dtype=np.float64)
    sets = [frozenset(int(k) for k in s) for s in action_target_sets]
    n, c = scores.shape
    if c != taxonomy.num_fine or len(sets) != n or n == 0:
        raise ValueError("score rows must be (N, num_fine) with one target set per row")

    gt_hot = np.zeros((n, c), dtype=bool)
    for i, s in enumerate(sets):
        for k in s:
            gt_hot[i, k] = True
    pred_hot = scores >= 0.5
    mapping = np.array([f.coarse_id for f in taxonomy.fine_labels])
    nc = taxonomy.num_coarse
    gt_coarse = np.zeros((n, nc), dtype=bool)
    pred_coarse = np.zeros((n, nc), dtype=bool)
    for g in range(nc):
        cols = mapping == g
        gt_coarse[:, g] = gt_hot[:, cols].any(axis=1)
        pred_coarse[:, g] = pred_hot[:, cols].any(axis=1)

    top_fine = np.argmax(scores, axis=1)
    top1_fine = float(np.mean([top_fine[i] in sets[i] for i in range(n)]))
    k5 = min(5, c)
    order = np.argsort(-scores, axis=1, kind="stable")
    top5_fine = float(np.mean([bool(gt_hot[i, order[i, :k5]].any()) for i in range(n)]))
    top_coarse = mapping[top_fine]
    top1_coarse = float(np.mean([bool(gt_coarse[i, top_coarse[i]]) for i in range(n)]))

    emo_probs = np.asarray(emotion_prob_rows, dtype=np.float64)
    emo_gts = np.asarray(emotion_gts, dtype=np.int64)
    emo_preds = np.argmax(emo_probs, axis=1)
    emo_cm = confusion_matrix(emo_preds, emo_gts, num_emotions)
    block = EmotionBlock(
        acc=_maybe_percent(accuracy(emo_cm), percent),
        f1_weight=_maybe_percent(weighted_f1(emo_cm), percent),
        uf1=_maybe_percent(uf1(emo_cm), percent),
        uar=_maybe_percent(uar(emo_cm), percent),
        map=_maybe_percent(multilabel_map(scores, sets), percent),
    )

    fine_pre, fine_rec = multilabel_per_class_pr(pred_hot, gt_hot)
    coarse_pre, coarse_rec = multilabel_per_class_pr(pred_coarse, gt_coarse)
    mi_f = _maybe_percent(multilabel_f1_micro(pred_hot, gt_hot), percent)
    ma_f = _maybe_percent(multilabel_f1_macro(pred_hot, gt_hot), percent)
    mi_c = _maybe_percent(multilabel_f1_micro(pred_coarse, gt_coarse), percent)
    ma_c = _maybe_percent(multilabel_f1_macro(pred_coarse, gt_coarse), percent)
    return MetricsReport(
        f1_micro_fine=mi_f,
        f1_macro_fine=ma_f,
        f1_micro_coarse=mi_c,
        f1_macro_coarse=ma_c,
        f1_mean=f1_mean(ma_c, mi_c, ma_f, mi_f),
        acc_top1_fine=_maybe_percent(top1_fine, percent),
        acc_top5_fine=_maybe_percent(top5_fine, percent),
        acc_top1_coarse=_maybe_percent(top1_coarse, percent),
        fine_precision=tuple(_maybe_percent(v, percent) for v in fine_pre.tolist()),
        fine_recall=tuple(_maybe_percent(v, percent) for v in fine_rec.tolist()),
        coarse_precision=tuple(_maybe_percent(v, percent) for v in coarse_pre.tolist()),
        coarse_recall=tuple(_maybe_percent(v, percent) for v in coarse_rec.tolist()),
        scale="percent" if percent else "unit",
        emotion=block,
    )

"""Training losses: cross-entropy, embedding alignment, total, multi-label BCE.

All losses are written against torch tensors so they participate in autograd,
and all use numerically stable formulations (max-subtraction for the softmax
log-partition, the |x| split for the logistic log-likelihood). Batch
reduction is the mean everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch


@dataclass(frozen=True)
class LossBundle:
    """The three scalars of one training step: total = l_cls + alpha * l_emb.

    Fields hold 0-dim tensors during training (so .total backpropagates) or
    plain floats after .detach_to_floats().
    """

    l_cls: torch.Tensor | float
    l_emb: torch.Tensor | float
    alpha: float
    total: torch.Tensor | float

    def detach_to_floats(self) -> "LossBundle":
        def f(x):
            return float(x.detach()) if isinstance(x, torch.Tensor) else float(x)

        return LossBundle(f(self.l_cls), f(self.l_emb), float(self.alpha), f(self.total))


def cross_entropy(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Mean −log softmax(logits)[target], stable under large logits.

    logits: (B, N) or (N,); targets: (B,) int64 or a scalar index.
    """
    if logits.dim() == 1:
        logits = logits[None, :]
        targets = torch.as_tensor(targets, device=logits.device).reshape(1)
    if logits.dim() != 2:
        raise ValueError(f"logits must be 1- or 2-dimensional, got {logits.dim()}")
    targets = targets.long()
    n = logits.shape[1]
    if targets.min() < 0 or targets.max() >= n:
        raise ValueError(f"target index out of range for {n} classes")
    m = logits.max(dim=1, keepdim=True).values
    lse = m.squeeze(1) + torch.log(torch.exp(logits - m).sum(dim=1))
    picked = logits.gather(1, targets[:, None]).squeeze(1)
    return (lse - picked).mean()


def embedding_loss(x_q: torch.Tensor, x_z: torch.Tensor) -> torch.Tensor:
    """Squared Euclidean distance ‖x_q − x_z‖², averaged over the batch.

    Accepts (D,) vectors or (B, D) batches; symmetric in its arguments.
    """
    if x_q.shape != x_z.shape:
        raise ValueError(f"shape mismatch {tuple(x_q.shape)} vs {tuple(x_z.shape)}")
    d = x_q - x_z
    if d.dim() == 1:
        return (d * d).sum()
    return (d * d).sum(dim=-1).mean()


def total_loss(l_cls: torch.Tensor, l_emb: torch.Tensor, alpha: float) -> LossBundle:
    """Combine the two terms: total = l_cls + alpha * l_emb.

    alpha = 0 returns l_cls itself as the total (bit-identical, no graph edge
    to the embedding branch), which is the ablation semantics of disabling
    the embedding term.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    total = l_cls if alpha == 0 else l_cls + alpha * l_emb
    return LossBundle(l_cls=l_cls, l_emb=l_emb, alpha=float(alpha), total=total)


def targets_to_multihot(target_sets, num_classes: int, device=None) -> torch.Tensor:
    """Convert an iterable of fine-id sets into a (B, N) 0/1 float tensor."""
    sets = [set(s) for s in target_sets]
    out = torch.zeros(len(sets), num_classes, device=device)
    for i, s in enumerate(sets):
        for k in s:
            if not (0 <= int(k) < num_classes):
                raise ValueError(f"target id {k} out of range for {num_classes} classes")
            out[i, int(k)] = 1.0
    return out


def bce_multilabel(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Stable binary cross-entropy between logistic(logits) and 0/1 targets.

    Per element: max(x, 0) − x·y + log(1 + exp(−|x|)); reduced by mean over
    classes, then mean over the batch. logits and targets share shape
    (B, N) or (N,).
    """
    if logits.shape != targets.shape:
        raise ValueError(f"shape mismatch {tuple(logits.shape)} vs {tuple(targets.shape)}")
    x, y = logits, targets
    per_elem = torch.clamp(x, min=0) - x * y + torch.log1p(torch.exp(-torch.abs(x)))
    per_sample = per_elem.mean(dim=-1)
    return per_sample.mean() if per_sample.dim() > 0 else per_sample

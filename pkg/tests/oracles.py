"""Independent brute-force reference implementations for the test suite.

Everything here is written the slow, obvious way (explicit Python loops,
float64 accumulation, no vectorization) so that agreement with the package
is evidence of correctness rather than shared structure. Do not import
package internals into this module beyond plain data containers.
"""
from __future__ import annotations

import math

import numpy as np


# ---------------------------------------------------------------------------
# Classification metrics from (pred, gt) pairs


def oracle_counts(preds, gts, num_classes):
    """counts[g][p] via an explicit loop."""
    counts = [[0] * num_classes for _ in range(num_classes)]
    for p, g in zip(preds, gts, strict=True):
        counts[g][p] += 1
    return counts


def oracle_per_class(counts):
    """Lists of (tp, fp, fn, support) per class."""
    n = len(counts)
    out = []
    for k in range(n):
        tp = counts[k][k]
        fp = sum(counts[g][k] for g in range(n)) - tp
        fn = sum(counts[k][p] for p in range(n)) - tp
        support = sum(counts[k])
        out.append((tp, fp, fn, support))
    return out


def _safe_div(a, b):
    return a / b if b else 0.0


def _f1_from_pr(pre, rec):
    if pre == rec:
        return pre
    if pre + rec == 0.0:
        return 0.0
    return 2.0 * pre * rec / (pre + rec)


def oracle_f1_micro(counts):
    tp = fp = fn = 0
    for k, (tpk, fpk, fnk, _) in enumerate(oracle_per_class(counts)):
        tp, fp, fn = tp + tpk, fp + fpk, fn + fnk
    return _f1_from_pr(_safe_div(tp, tp + fp), _safe_div(tp, tp + fn))


def oracle_f1_macro(counts):
    pcs = oracle_per_class(counts)
    pre = sum(_safe_div(tp, tp + fp) for tp, fp, _, _ in pcs) / len(pcs)
    rec = sum(_safe_div(tp, tp + fn) for tp, _, fn, _ in pcs) / len(pcs)
    return _f1_from_pr(pre, rec)


def oracle_accuracy(preds, gts):
    return sum(1 for p, g in zip(preds, gts, strict=True) if p == g) / len(gts)


def oracle_weighted_f1(counts):
    num = 0.0
    den = 0.0
    for tp, fp, fn, support in oracle_per_class(counts):
        f1 = _f1_from_pr(_safe_div(tp, tp + fp), _safe_div(tp, tp + fn))
        num += f1 * support
        den += support
    return num / den


def oracle_uf1(counts):
    vals = []
    for tp, fp, fn, support in oracle_per_class(counts):
        if support > 0:
            vals.append(_f1_from_pr(_safe_div(tp, tp + fp), _safe_div(tp, tp + fn)))
    return sum(vals) / len(vals)


def oracle_uar(counts):
    vals = []
    for tp, _, fn, support in oracle_per_class(counts):
        if support > 0:
            vals.append(_safe_div(tp, tp + fn))
    return sum(vals) / len(vals)


def oracle_topk(prob_rows, gts, k):
    """Ties toward the lower class id, matching the documented convention."""
    hits = 0
    for row, g in zip(prob_rows, gts, strict=True):
        order = sorted(range(len(row)), key=lambda j: (-row[j], j))
        if g in order[:k]:
            hits += 1
    return hits / len(gts)


def oracle_average_precision(scores, positives):
    """AP with stable ranking: ties keep original instance order."""
    n = len(scores)
    order = sorted(range(n), key=lambda i: (-scores[i], i))
    hits = 0
    total = 0.0
    n_pos = 0
    for rank, i in enumerate(order, start=1):
        if positives[i]:
            hits += 1
            total += hits / rank
            n_pos += 1
    return total / n_pos


def oracle_multilabel_map(score_rows, target_sets):
    n = len(score_rows)
    c = len(score_rows[0])
    aps = []
    for k in range(c):
        positives = [1 if k in target_sets[i] else 0 for i in range(n)]
        if sum(positives) == 0:
            continue
        aps.append(oracle_average_precision([row[k] for row in score_rows], positives))
    return sum(aps) / len(aps)


def oracle_multilabel_micro_f1(pred_rows, gt_rows):
    tp = fp = fn = 0
    for prow, grow in zip(pred_rows, gt_rows, strict=True):
        for p, g in zip(prow, grow, strict=True):
            if p and g:
                tp += 1
            elif p and not g:
                fp += 1
            elif g and not p:
                fn += 1
    return _f1_from_pr(_safe_div(tp, tp + fp), _safe_div(tp, tp + fn))


def oracle_multilabel_macro_f1(pred_rows, gt_rows):
    """F1 of the class-averaged precision and recall (macro P/R convention)."""
    c = len(pred_rows[0])
    pres, recs = [], []
    for k in range(c):
        tp = fp = fn = 0
        for prow, grow in zip(pred_rows, gt_rows, strict=True):
            p, g = prow[k], grow[k]
            if p and g:
                tp += 1
            elif p and not g:
                fp += 1
            elif g and not p:
                fn += 1
        pres.append(_safe_div(tp, tp + fp))
        recs.append(_safe_div(tp, tp + fn))
    return _f1_from_pr(sum(pres) / c, sum(recs) / c)


# ---------------------------------------------------------------------------
# Losses in float64


def oracle_cross_entropy(logits, targets):
    """Mean negative log softmax probability, computed per row in float64."""
    logits = np.asarray(logits, dtype=np.float64)
    total = 0.0
    for row, t in zip(logits, targets, strict=True):
        m = max(row)
        lse = m + math.log(sum(math.exp(v - m) for v in row))
        total += lse - row[t]
    return total / len(logits)


def oracle_sq_distance(x_q, x_z):
    """Mean over rows of the squared Euclidean distance."""
    x_q = np.asarray(x_q, dtype=np.float64)
    x_z = np.asarray(x_z, dtype=np.float64)
    total = 0.0
    for a, b in zip(x_q, x_z, strict=True):
        total += sum((ai - bi) ** 2 for ai, bi in zip(a, b))
    return total / len(x_q)


def oracle_bce(logits, targets):
    """Mean over classes then batch of -[y log s + (1-y) log (1-s)]."""
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    per_sample = []
    for row, trow in zip(logits, targets, strict=True):
        acc = 0.0
        for x, y in zip(row, trow):
            s = 1.0 / (1.0 + math.exp(-x))
            acc += -(y * math.log(s) + (1.0 - y) * math.log(1.0 - s))
        per_sample.append(acc / len(row))
    return sum(per_sample) / len(per_sample)


# ---------------------------------------------------------------------------
# Network building blocks as naive loops (float64)


def oracle_conv2d(x, weight, bias, stride=1, padding=0):
    """Plain cross-correlation with zero padding; x is (C_in, H, W)."""
    x = np.asarray(x, dtype=np.float64)
    weight = np.asarray(weight, dtype=np.float64)
    c_out, c_in, kh, kw = weight.shape
    cx, h, w = x.shape
    assert cx == c_in
    xp = np.zeros((c_in, h + 2 * padding, w + 2 * padding))
    xp[:, padding : padding + h, padding : padding + w] = x
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((c_out, oh, ow))
    for co in range(c_out):
        for oy in range(oh):
            for ox in range(ow):
                acc = float(bias[co])
                for ci in range(c_in):
                    for ky in range(kh):
                        for kx in range(kw):
                            acc += (
                                weight[co, ci, ky, kx]
                                * xp[ci, oy * stride + ky, ox * stride + kx]
                            )
                out[co, oy, ox] = acc
    return out


def oracle_maxpool2d(x, kernel, stride, padding):
    """Max pool with -inf padding; x is (C, H, W)."""
    x = np.asarray(x, dtype=np.float64)
    c, h, w = x.shape
    xp = np.full((c, h + 2 * padding, w + 2 * padding), -np.inf)
    xp[:, padding : padding + h, padding : padding + w] = x
    oh = (h + 2 * padding - kernel) // stride + 1
    ow = (w + 2 * padding - kernel) // stride + 1
    out = np.zeros((c, oh, ow))
    for ci in range(c):
        for oy in range(oh):
            for ox in range(ow):
                out[ci, oy, ox] = xp[
                    ci, oy * stride : oy * stride + kernel, ox * stride : ox * stride + kernel
                ].max()
    return out


def oracle_temporal_shift(x, num_frames, k):
    """x is (B*T, C, H, W); first k channels from t-1, next k from t+1."""
    x = np.asarray(x, dtype=np.float64)
    bt, c, h, w = x.shape
    b = bt // num_frames
    xt = x.reshape(b, num_frames, c, h, w)
    out = np.zeros_like(xt)
    for bi in range(b):
        for t in range(num_frames):
            for ci in range(c):
                if ci < k:
                    if t - 1 >= 0:
                        out[bi, t, ci] = xt[bi, t - 1, ci]
                elif ci < 2 * k:
                    if t + 1 < num_frames:
                        out[bi, t, ci] = xt[bi, t + 1, ci]
                else:
                    out[bi, t, ci] = xt[bi, t, ci]
    return out.reshape(bt, c, h, w)


def oracle_squeeze_excite(x, w1, b1, w2, b2):
    """Per sample: sigmoid(W2 relu(W1 mean(x) + b1) + b2) channel gates."""
    x = np.asarray(x, dtype=np.float64)
    b, c, h, w = x.shape
    out = np.zeros_like(x)
    for bi in range(b):
        z = [x[bi, ci].mean() for ci in range(c)]
        hid = []
        for j in range(len(b1)):
            acc = float(b1[j])
            for ci in range(c):
                acc += float(w1[j][ci]) * z[ci]
            hid.append(max(acc, 0.0))
        for ci in range(c):
            acc = float(b2[ci])
            for j in range(len(hid)):
                acc += float(w2[ci][j]) * hid[j]
            gate = 1.0 / (1.0 + math.exp(-acc))
            out[bi, ci] = x[bi, ci] * gate
    return out


def oracle_bilinear_resize(image, out_h, out_w):
    """Half-pixel-centre bilinear with edge clamping; image is (H, W) or (H, W, C)."""
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape[:2]
    out_shape = (out_h, out_w) + img.shape[2:]
    out = np.zeros(out_shape)
    for oy in range(out_h):
        sy = (oy + 0.5) * h / out_h - 0.5
        y0 = min(max(int(math.floor(sy)), 0), h - 1)
        y1 = min(y0 + 1, h - 1)
        wy = min(max(sy - y0, 0.0), 1.0)
        for ox in range(out_w):
            sx = (ox + 0.5) * w / out_w - 0.5
            x0 = min(max(int(math.floor(sx)), 0), w - 1)
            x1 = min(x0 + 1, w - 1)
            wx = min(max(sx - x0, 0.0), 1.0)
            top = img[y0, x0] * (1 - wx) + img[y0, x1] * wx
            bot = img[y1, x0] * (1 - wx) + img[y1, x1] * wx
            out[oy, ox] = top * (1 - wy) + bot * wy
    return out


def oracle_attention(q, k, v):
    """Single-head scaled dot-product attention on (T, d) float64 arrays."""
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    t, d = q.shape
    out = np.zeros_like(v)
    for i in range(t):
        scores = []
        for j in range(t):
            scores.append(sum(q[i, a] * k[j, a] for a in range(d)) / math.sqrt(d))
        m = max(scores)
        exps = [math.exp(s - m) for s in scores]
        z = sum(exps)
        for j in range(t):
            out[i] += (exps[j] / z) * v[j]
    return out


# ---------------------------------------------------------------------------
# Finite differences


def central_difference(f, x, eps=1e-6):
    """Gradient of scalar f at x (numpy array) by central differences."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x)
        flat[i] = orig - eps
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * eps)
    return grad


def relative_error(a, b):
    """max |a-b| / max(1, |a|, |b|), elementwise, as a scalar."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return float((np.abs(a - b) / denom).max())

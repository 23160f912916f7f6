"""Procedural micro-action video generation, frame sampling and preprocessing.

Generated datasets are the desk-scale stand-in for a real corpus: each clip
shows one or more bright "body part" blobs oscillating over a static textured
background, and the oscillation signature (amplitude / frequency / locus) is a
pure function of (fine class, seed, clip index). Low-amplitude classes differ
only in frequency and locus, so neighbouring classes are similar but distinct.

Dataset layout on disk::

    root/<split>/<clip_id>/frame_0000.png ...
    root/manifest.jsonl     one object per clip:
        {"clip_id","split","fine_ids","emotion_id"?,"face_box"?,"num_frames","fps"}
    root/taxonomy.json      synthetic taxonomy matching the GenSpec

Everything is deterministic: per-clip RNG streams are derived from
(seed, fine class, clip index), so generation is order-independent and a
(spec, seed) pair fixes every byte of output.
"""
from __future__ import annotations

import colorsys
import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .taxonomy import Annotation, LabelTaxonomy, load_taxonomy

# Fixed preprocessing constants (applied per channel after scaling to [0,1]).
CHANNEL_MEAN = 0.45
CHANNEL_STD = 0.225

# Blob colours per coarse group, RGB in 0..255. Cycled if num_coarse > len.
_GROUP_COLORS = [
    (235, 90, 90),
    (90, 235, 110),
    (100, 120, 240),
    (230, 220, 80),
    (200, 90, 220),
    (80, 220, 220),
    (240, 150, 70),
]

# Face-texture stripe parameters per emotion id: (dx, dy, period).
_FACE_PATTERNS = [
    (0.0, 1.0, 5.0),
    (1.0, 0.0, 5.0),
    (1.0, 1.0, 6.0),
    (0.0, 1.0, 2.5),
    (1.0, 0.0, 2.5),
    (1.0, -1.0, 6.0),
    (0.0, 1.0, 8.0),
    (1.0, 0.0, 8.0),
]

# Face-stripe colour tint per emotion id, RGB gains in 0..1.
_FACE_TINTS = [
    (1.0, 0.55, 0.55),
    (0.55, 1.0, 0.6),
    (0.6, 0.65, 1.0),
    (1.0, 0.95, 0.5),
    (0.95, 0.55, 1.0),
    (0.55, 1.0, 1.0),
    (1.0, 0.75, 0.5),
    (0.8, 0.8, 0.8),
]


# Channel levels 0,1,2,3 scaled to 0..235. Chosen by search so that every
# achievable label set (up to four co-occurring classes, all from one locus
# group) has a unique summed glow colour, with the per-slot disc term folded
# into the weighting; the worst-case gap between two label sets is 3.4 level
# units in RGB space, far above the rendering noise floor.
_GLOW_COLORS = tuple(
    tuple(235.0 * v / 3.0 for v in row)
    for row in (
        (3, 3, 3),
        (0, 0, 3),
        (0, 3, 2),
        (0, 2, 2),
        (3, 0, 3),
        (3, 3, 0),
        (3, 1, 1),
        (3, 0, 0),
    )
)


def _fine_color(k: int, num_fine: int) -> tuple[float, float, float]:
    """Distinct colour per fine class, RGB in 0..255.

    The first eight classes use a palette tuned so that superposed presences
    remain separable by their summed frame-mean colour; beyond eight a
    golden-angle hue wheel takes over.
    """
    if k < len(_GLOW_COLORS):
        return _GLOW_COLORS[k]
    r, g, b = colorsys.hsv_to_rgb((k * 0.618034) % 1.0, 0.85, 1.0)
    return (235.0 * r, 235.0 * g, 235.0 * b)


class GenSpecError(ValueError):
    """Raised for invalid generator specifications."""


@dataclass(frozen=True)
class ClipTensor:
    """A decoded clip: uint8 pixels of shape (T_raw, H, W, 3) plus metadata."""

    pixels: np.ndarray
    fps: int = 30
    clip_id: str = ""

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 4 or p.shape[3] != 3:
            raise ValueError(f"pixels must have shape (T,H,W,3), got {p.shape}")
        if p.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {p.dtype}")
        if p.shape[0] < 1 or p.shape[1] < 8 or p.shape[2] < 8:
            raise ValueError(f"clip too small: {p.shape}")

    @property
    def num_frames(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class GenSpec:
    """Parameters of a synthetic dataset.

    ``clips_per_class`` is the per-class clip budget; with
    ``long_tail_exponent`` set, class k instead receives
    ``max(4, round(clips_per_class * (k+1) ** -exponent))`` clips.
    ``emotion_classes`` switches to multi-label clips with an embedded face
    region whose stripe texture encodes the emotion id; ``actions_per_clip``
    then bounds how many distinct fine classes appear per clip.
    """

    num_fine: int = 6
    num_coarse: int = 2
    clips_per_class: int = 20
    long_tail_exponent: float | None = None
    raw_frames: int = 16
    height: int = 32
    width: int = 32
    motion_amplitude: float = 6.0
    seed: int = 0
    emotion_classes: int | None = None
    actions_per_clip: tuple[int, int] | None = None
    split_ratio: tuple[int, int, int] = (2, 1, 1)
    fps: int = 30

    def __post_init__(self):
        if not (self.num_fine >= self.num_coarse >= 1):
            raise GenSpecError(
                f"need num_fine >= num_coarse >= 1, got {self.num_fine}/{self.num_coarse}"
            )
        if self.clips_per_class < 4:
            raise GenSpecError("clips_per_class must be >= 4 so every split is non-empty")
        if self.raw_frames < 1:
            raise GenSpecError("raw_frames must be >= 1")
        if self.height < 8 or self.width < 8:
            raise GenSpecError("height/width must be >= 8")
        if self.motion_amplitude <= 0:
            raise GenSpecError("motion_amplitude must be positive")
        if self.seed < 0:
            raise GenSpecError("seed must be unsigned")
        if any(r < 0 for r in self.split_ratio) or self.split_ratio[0] <= 0:
            raise GenSpecError(f"bad split_ratio {self.split_ratio}")
        if self.emotion_classes is not None:
            if self.emotion_classes < 1 or self.emotion_classes > len(_FACE_PATTERNS):
                raise GenSpecError(
                    f"emotion_classes must be 1..{len(_FACE_PATTERNS)}"
                )
        if self.actions_per_clip is not None:
            lo, hi = self.actions_per_clip
            if not (1 <= lo <= hi <= self.num_fine):
                raise GenSpecError(f"bad actions_per_clip range {self.actions_per_clip}")
            if self.emotion_classes is None:
                raise GenSpecError("actions_per_clip requires emotion_classes")

    @property
    def multi_label(self) -> bool:
        return self.emotion_classes is not None

    def to_json(self) -> dict:
        d = asdict(self)
        d["actions_per_clip"] = (
            list(self.actions_per_clip) if self.actions_per_clip else None
        )
        d["split_ratio"] = list(self.split_ratio)
        return d

    @staticmethod
    def from_json(d: dict) -> "GenSpec":
        d = dict(d)
        if d.get("actions_per_clip") is not None:
            d["actions_per_clip"] = tuple(d["actions_per_clip"])
        if d.get("split_ratio") is not None:
            d["split_ratio"] = tuple(d["split_ratio"])
        return GenSpec(**d)


# ---------------------------------------------------------------------------
# Class bookkeeping


def class_counts(spec: GenSpec) -> list[int]:
    """Clips per fine class: uniform, or n_k = max(4, round(base*(k+1)^-g))."""
    if spec.long_tail_exponent is None:
        return [spec.clips_per_class] * spec.num_fine
    g = spec.long_tail_exponent
    # round() is Python banker's rounding; documented as part of the rule.
    return [
        max(4, round(spec.clips_per_class * (k + 1) ** -g)) for k in range(spec.num_fine)
    ]


def split_counts(n: int, ratio: tuple[int, int, int]) -> tuple[int, int, int]:
    """Partition n clips as (train, val, test); val/test floor their share."""
    total = sum(ratio)
    n_val = n * ratio[1] // total
    n_test = n * ratio[2] // total
    return n - n_val - n_test, n_val, n_test


def coarse_of_fine(k: int, num_fine: int, num_coarse: int) -> int:
    """Contiguous-block fine->coarse map used by synthetic taxonomies."""
    return k * num_coarse // num_fine


def synthetic_taxonomy_dict(spec: GenSpec) -> dict:
    return {
        "coarse": [
            {"id": g, "name": f"group g{g}"} for g in range(spec.num_coarse)
        ],
        "fine": [
            {
                "id": k,
                "name": f"action a{k:02d}",
                "words": ["action", f"a{k:02d}"],
                "coarse_id": coarse_of_fine(k, spec.num_fine, spec.num_coarse),
            }
            for k in range(spec.num_fine)
        ],
    }


# ---------------------------------------------------------------------------
# Drawing


def _motion_signature(spec: GenSpec, k: int) -> dict:
    """Deterministic per-class oscillation parameters.

    Amplitudes are distinct across all classes; classes sharing a coarse band
    (the locus) are told apart mainly by frequency and horizontal rest point.
    """
    g = coarse_of_fine(k, spec.num_fine, spec.num_coarse)
    first = min(
        kk for kk in range(spec.num_fine)
        if coarse_of_fine(kk, spec.num_fine, spec.num_coarse) == g
    )
    group_size = sum(
        1 for kk in range(spec.num_fine)
        if coarse_of_fine(kk, spec.num_fine, spec.num_coarse) == g
    )
    j = k - first
    amp = spec.motion_amplitude * (0.55 + 0.45 * (k + 1) / spec.num_fine)
    freq = 1.0 + 2.0 * (j % 4)
    return {
        "group": g,
        "slot": j,
        "group_size": group_size,
        "amplitude": amp,
        "frequency": freq,
        "vertical": j % 2 == 1,  # odd slots oscillate vertically inside the band
        "radius": 3.0 + 1.0 * (j % 3),  # disc size separates slots statically
        "shade": 0.7 + 0.3 * (j / max(1, group_size - 1)) if group_size > 1 else 1.0,
    }


def _draw_disc(frame: np.ndarray, cx: float, cy: float, radius: float, color):
    """Additively draw an anti-aliased disc; frame is float32 (H, W, 3)."""
    h, w = frame.shape[:2]
    x0, x1 = max(0, int(cx - radius - 1)), min(w, int(cx + radius + 2))
    y0, y1 = max(0, int(cy - radius - 1)), min(h, int(cy + radius + 2))
    if x0 >= x1 or y0 >= y1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dist = np.sqrt((xs - cx) ** 2 + (ys - cy) ** 2)
    cover = np.clip(radius + 0.5 - dist, 0.0, 1.0)
    for c in range(3):
        frame[y0:y1, x0:x1, c] += cover * color[c]


def _face_texture(h: int, w: int, emotion_id: int, phase: float) -> np.ndarray:
    dx, dy, period = _FACE_PATTERNS[emotion_id]
    tint = _FACE_TINTS[emotion_id]
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    wave = np.sin(2.0 * math.pi * (dx * xs + dy * ys) / period + phase)
    tex = 128.0 + 90.0 * wave
    return np.stack([tex * tint[0], tex * tint[1], tex * tint[2]], axis=-1)


def _render_clip(
    spec: GenSpec,
    fine_ids: list[int],
    emotion_id: int | None,
    rng: np.random.Generator,
) -> tuple[np.ndarray, list[int] | None]:
    """Render one clip; returns (uint8 frames (T,H,W,3), face_box or None)."""
    h, w, t_raw = spec.height, spec.width, spec.raw_frames

    face_box = None
    band_top = 0
    if spec.multi_label:
        # Reserve a top strip for the face region; blobs stay below it.
        fh = max(8, h // 3)
        face_box = [2, 2, min(w - 4, fh), fh - 2]
        band_top = fh + 2
    band_h = (h - band_top) / spec.num_coarse

    background = np.full((h, w, 3), 30.0, dtype=np.float64)
    background += rng.uniform(-6.0, 6.0, size=(h, w, 1))
    # static "torso" slab under the blobs
    background[band_top:, w // 3 : 2 * w // 3, :] += 35.0

    face_tex = None
    if face_box is not None:
        face_tex = _face_texture(
            face_box[3], face_box[2], emotion_id, phase=rng.uniform(0.0, 2 * math.pi)
        )

    blobs = []
    for k in fine_ids:
        sig = _motion_signature(spec, k)
        top = band_top + sig["group"] * band_h
        cy0 = top + band_h / 2 + rng.uniform(-1.0, 1.0)
        cx0 = w * (sig["slot"] + 0.5) / sig["group_size"] + rng.uniform(-1.0, 1.0)
        if spec.multi_label:
            # one hue per fine class, so co-occurring actions stay separable
            color = _fine_color(k, spec.num_fine)
        else:
            color = tuple(
                c * sig["shade"]
                for c in _GROUP_COLORS[sig["group"] % len(_GROUP_COLORS)]
            )
        blobs.append(
            {
                "k": k,
                "sig": sig,
                "cx0": cx0,
                "cy0": cy0,
                "phase": rng.uniform(0.0, 2 * math.pi),
                "color": color,
                "band": (top, top + band_h),
            }
        )

    glows = []
    if spec.multi_label:
        # Static per-class glow over the slot. Each class tints its slot with
        # its palette colour, so the set of present classes is readable off
        # the summed frame-mean colour; the grating only adds texture.
        ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
        for b in blobs:
            sig = b["sig"]
            x0 = int(round(w * sig["slot"] / sig["group_size"]))
            x1 = int(round(w * (sig["slot"] + 1) / sig["group_size"]))
            y0, y1 = int(round(b["band"][0])), int(round(b["band"][1]))
            theta = math.pi * b["k"] / spec.num_fine
            period = 8.0 if b["k"] % 2 == 0 else 11.0
            ramp = (xs * math.cos(theta) + ys * math.sin(theta)) / period
            grating = 0.75 + 0.25 * np.sin(2.0 * math.pi * ramp[y0:y1, x0:x1])
            patch = 0.35 * np.stack([grating * c for c in b["color"]], axis=-1)
            glows.append({"rect": (y0, y1, x0, x1), "patch": patch})

    frames = np.empty((t_raw, h, w, 3), dtype=np.uint8)
    for t in range(t_raw):
        frame = background.copy()
        for g in glows:
            y0, y1, x0, x1 = g["rect"]
            frame[y0:y1, x0:x1, :] += g["patch"]
        for b in blobs:
            sig = b["sig"]
            osc = sig["amplitude"] * math.sin(
                2.0 * math.pi * sig["frequency"] * t / t_raw + b["phase"]
            )
            if sig["vertical"]:
                cx, cy = b["cx0"], b["cy0"] + osc * 0.35
                cy = min(max(cy, b["band"][0] + 2), b["band"][1] - 2)
            else:
                cx, cy = b["cx0"] + osc, b["cy0"]
            # multi-label discs are dimmed so glow + disc never clips at 255
            disc = (
                tuple(0.4 * c for c in b["color"])
                if spec.multi_label
                else b["color"]
            )
            _draw_disc(frame, cx, cy, radius=sig["radius"], color=disc)
        if face_box is not None:
            x, y, bw, bh = face_box
            frame[y : y + bh, x : x + bw, :] = face_tex
        frames[t] = np.clip(frame, 0.0, 255.0).astype(np.uint8)
    return frames, face_box


# ---------------------------------------------------------------------------
# Dataset generation


def generate_dataset(spec: GenSpec, out_dir: str | Path) -> dict:
    """Write a full synthetic dataset; returns a manifest summary dict."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise GenSpecError(f"cannot create output directory {out}: {e}")
    if not spec.multi_label:
        rows = _generate_single_label(spec, out)
    else:
        rows = _generate_multi_label(spec, out)

    with open(out / "manifest.jsonl", "w") as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True) + "\n")
    with open(out / "taxonomy.json", "w") as f:
        json.dump(synthetic_taxonomy_dict(spec), f, indent=2, sort_keys=True)
        f.write("\n")

    per_split = {s: sum(1 for r in rows if r["split"] == s) for s in ("train", "val", "test")}
    return {
        "clips": len(rows),
        "per_split": per_split,
        "num_fine": spec.num_fine,
        "num_coarse": spec.num_coarse,
        "multi_label": spec.multi_label,
    }


def _write_clip(out: Path, split: str, clip_id: str, frames: np.ndarray):
    d = out / split / clip_id
    d.mkdir(parents=True, exist_ok=True)
    for t in range(frames.shape[0]):
        Image.fromarray(frames[t]).save(d / f"frame_{t:04d}.png")


def _generate_single_label(spec: GenSpec, out: Path) -> list[dict]:
    rows = []
    counts = class_counts(spec)
    for k in range(spec.num_fine):
        n_train, n_val, n_test = split_counts(counts[k], spec.split_ratio)
        splits = ["train"] * n_train + ["val"] * n_val + ["test"] * n_test
        for i, split in enumerate(splits):
            rng = np.random.default_rng([spec.seed, k, i])
            frames, _ = _render_clip(spec, [k], None, rng)
            clip_id = f"a{k:02d}_{i:04d}"
            _write_clip(out, split, clip_id, frames)
            rows.append(
                {
                    "clip_id": clip_id,
                    "split": split,
                    "fine_ids": [k],
                    "num_frames": spec.raw_frames,
                    "fps": spec.fps,
                }
            )
    return rows


def _generate_multi_label(spec: GenSpec, out: Path) -> list[dict]:
    rows = []
    n_emotions = spec.emotion_classes
    lo, hi = spec.actions_per_clip or (1, min(4, spec.num_fine))
    total = spec.clips_per_class * spec.num_fine
    # Emotion label is balanced round-robin; splits partition per emotion class.
    per_emotion = [
        total // n_emotions + (1 if e < total % n_emotions else 0)
        for e in range(n_emotions)
    ]
    emo_seen = [0] * n_emotions
    emo_splits = []
    for e in range(n_emotions):
        a, b, c = split_counts(per_emotion[e], spec.split_ratio)
        emo_splits.append(["train"] * a + ["val"] * b + ["test"] * c)
    for i in range(total):
        e = i % n_emotions
        split = emo_splits[e][emo_seen[e]]
        emo_seen[e] += 1
        rng = np.random.default_rng([spec.seed, spec.num_fine, i])
        # Co-occurring actions share one locus group: simultaneous
        # micro-actions come from one body region, and label sets drawn from
        # a single group keep unique summed glow colours.
        g = int(rng.integers(spec.num_coarse))
        members = [
            k
            for k in range(spec.num_fine)
            if coarse_of_fine(k, spec.num_fine, spec.num_coarse) == g
        ]
        n_actions = int(rng.integers(lo, min(hi, len(members)) + 1))
        fine_ids = sorted(int(x) for x in rng.choice(members, size=n_actions, replace=False))
        frames, face_box = _render_clip(spec, fine_ids, e, rng)
        clip_id = f"pro_{i:05d}"
        _write_clip(out, split, clip_id, frames)
        rows.append(
            {
                "clip_id": clip_id,
                "split": split,
                "fine_ids": fine_ids,
                "emotion_id": e,
                "face_box": face_box,
                "num_frames": spec.raw_frames,
                "fps": spec.fps,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Reading generated data back


def load_manifest(root: str | Path) -> list[dict]:
    path = Path(root) / "manifest.jsonl"
    rows = []
    with open(path) as f:
        for num, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{num}: bad manifest row: {e}")
    return rows


def manifest_annotation(row: dict) -> Annotation:
    return Annotation(
        clip_id=row["clip_id"],
        fine_ids=frozenset(row["fine_ids"]),
        split=row["split"],
        emotion_id=row.get("emotion_id"),
    )


def dataset_taxonomy(root: str | Path) -> LabelTaxonomy:
    return load_taxonomy(Path(root) / "taxonomy.json")


def read_frames_dir(clip_dir: str | Path, fps: int = 30) -> ClipTensor:
    """Load frame_*.png files (sorted by name) from a clip directory."""
    clip_dir = Path(clip_dir)
    files = sorted(clip_dir.glob("frame_*.png"))
    if not files:
        raise FileNotFoundError(f"no frame_*.png files in {clip_dir}")
    frames = np.stack([np.asarray(Image.open(f).convert("RGB")) for f in files])
    return ClipTensor(pixels=frames.astype(np.uint8), fps=fps, clip_id=clip_dir.name)


def read_clip(root: str | Path, split: str, clip_id: str, fps: int = 30) -> ClipTensor:
    return read_frames_dir(Path(root) / split / clip_id, fps=fps)


# ---------------------------------------------------------------------------
# Frame sampling


def segment_indices(num_raw: int, t: int, rng: np.random.Generator | None = None) -> list[int]:
    """Uniform segment sampling: indices of t frames out of num_raw.

    Raw frames are partitioned into t segments with integer boundaries
    start_i = floor(i*num_raw/t), end_i = floor((i+1)*num_raw/t). Without an
    RNG the centre frame start_i + (end_i-start_i)//2 of each segment is taken
    (empty segments fall back to start_i, so short clips repeat frames); with
    an RNG a frame is drawn uniformly from each non-empty segment.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    if num_raw < 1:
        raise ValueError("num_raw must be >= 1")
    out = []
    for i in range(t):
        start = i * num_raw // t
        end = (i + 1) * num_raw // t
        if end <= start:
            out.append(start)
        elif rng is None:
            out.append(start + (end - start) // 2)
        else:
            out.append(start + int(rng.integers(0, end - start)))
    return out


def sample_frames(clip: ClipTensor, t: int, rng: np.random.Generator | None = None) -> ClipTensor:
    """Select exactly t frames from a clip by uniform segment sampling."""
    idx = segment_indices(clip.num_frames, t, rng)
    return ClipTensor(pixels=clip.pixels[idx], fps=clip.fps, clip_id=clip.clip_id)


# ---------------------------------------------------------------------------
# Preprocessing


def bilinear_resize(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel-centre sampling and edge clamping.

    Accepts (H, W) or (H, W, C) float arrays; identity when sizes match.
    """
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img.copy()
    ys = (np.arange(out_h) + 0.5) * h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * w / out_w - 0.5
    y0 = np.clip(np.floor(ys), 0, h - 1).astype(int)
    x0 = np.clip(np.floor(xs), 0, w - 1).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)
    wx = np.clip(xs - x0, 0.0, 1.0)
    top = img[y0][:, x0] * (1 - wx)[None, :, None] + img[y0][:, x1] * wx[None, :, None] \
        if img.ndim == 3 else img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bot = img[y1][:, x0] * (1 - wx)[None, :, None] + img[y1][:, x1] * wx[None, :, None] \
        if img.ndim == 3 else img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    if img.ndim == 3:
        return top * (1 - wy)[:, None, None] + bot * wy[:, None, None]
    return top * (1 - wy)[:, None] + bot * wy[:, None]


def preprocess_clip(clip: ClipTensor, side: int) -> np.ndarray:
    """Resize frames to side x side, scale to [0,1], standardize per channel.

    Returns float32 of shape (T, side, side, 3). The normalization constants
    are fixed (mean 0.45, std 0.225 for every channel).
    """
    if side < 8:
        raise ValueError("side must be >= 8")
    t = clip.num_frames
    out = np.empty((t, side, side, 3), dtype=np.float32)
    for i in range(t):
        resized = bilinear_resize(clip.pixels[i].astype(np.float64), side, side)
        out[i] = ((resized / 255.0 - CHANNEL_MEAN) / CHANNEL_STD).astype(np.float32)
    return out


def desk_spec(**overrides) -> GenSpec:
    """The default desk-scale single-label GenSpec used by tests and docs."""
    base = GenSpec(
        num_fine=6,
        num_coarse=2,
        clips_per_class=20,
        raw_frames=16,
        height=32,
        width=32,
        motion_amplitude=6.0,
        seed=0,
    )
    return replace(base, **overrides) if overrides else base

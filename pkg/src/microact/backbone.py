"""Video backbone: stem, SE-gated temporally-shifted residual stages, classifier.

The network is a four-stage residual net over per-frame 2D convolutions.
Each residual block first gates its input channels with a squeeze-excitation
module, then exchanges a fraction of channels with the neighbouring frames
(temporal shift), applies a 3x3 convolution with a rectifier, and finally the
1x1 / 3x3 / 1x1 bottleneck trio before the shortcut addition. No batch
normalization is used anywhere; blocks start as near-identities because the
last convolution of every residual branch is zero-initialized.

Internally frames are folded into the batch axis: clips enter as
(B, T, 3, H, W) and feature maps flow as (B*T, C, H', W'). The temporal shift
is the only op that looks across the T axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import torch
from torch import nn
from torch.nn import functional as F

from .embedding import EMBED_DIM, FeatureProjector

# Stage output widths as multiples of base_width, and per-stage strides.
_STAGE_MULT = (4, 8, 16, 32)
_STAGE_STRIDE = (1, 2, 2, 2)


@dataclass(frozen=True)
class ModelConfig:
    """Backbone hyperparameters.

    base_width is the stem output width C; stage outputs are 4C, 8C, 16C, 32C.
    shift_fraction is the per-direction fraction of channels exchanged with
    each temporal neighbour (1/8 forward + 1/8 backward by default).
    """

    num_fine_classes: int
    base_width: int = 64
    stage_block_counts: tuple[int, int, int, int] = (3, 4, 6, 3)
    se_ratio: int = 4
    shift_fraction: Fraction = Fraction(1, 8)
    embed_dim: int = EMBED_DIM

    def __post_init__(self):
        if self.num_fine_classes < 2:
            raise ValueError("num_fine_classes must be >= 2")
        if self.base_width % 8 != 0 or self.base_width < 8:
            raise ValueError("base_width must be a positive multiple of 8")
        if self.se_ratio < 1 or self.base_width % self.se_ratio != 0:
            raise ValueError("se_ratio must be >= 1 and divide base_width")
        if len(self.stage_block_counts) != 4 or any(n < 1 for n in self.stage_block_counts):
            raise ValueError("stage_block_counts must be 4 positive ints")
        f = Fraction(self.shift_fraction)
        if not (0 < f <= Fraction(1, 2)):
            raise ValueError("shift_fraction must be in (0, 1/2]")
        if (f * self.base_width).denominator != 1:
            raise ValueError(
                f"shift_fraction {f} of base_width {self.base_width} is not an integer"
            )
        object.__setattr__(self, "shift_fraction", f)
        object.__setattr__(self, "stage_block_counts", tuple(self.stage_block_counts))

    @property
    def feature_dim(self) -> int:
        """Width of the final stage output (32C)."""
        return _STAGE_MULT[-1] * self.base_width

    def to_json(self) -> dict:
        return {
            "num_fine_classes": self.num_fine_classes,
            "base_width": self.base_width,
            "stage_block_counts": list(self.stage_block_counts),
            "se_ratio": self.se_ratio,
            "shift_fraction": [self.shift_fraction.numerator, self.shift_fraction.denominator],
            "embed_dim": self.embed_dim,
        }

    @staticmethod
    def from_json(d: dict) -> "ModelConfig":
        num, den = d["shift_fraction"]
        return ModelConfig(
            num_fine_classes=d["num_fine_classes"],
            base_width=d["base_width"],
            stage_block_counts=tuple(d["stage_block_counts"]),
            se_ratio=d["se_ratio"],
            shift_fraction=Fraction(num, den),
            embed_dim=d["embed_dim"],
        )


def desk_model_config(num_fine_classes: int, **overrides) -> ModelConfig:
    """Small configuration meant for 32x32 clips on CPU."""
    kwargs = dict(
        num_fine_classes=num_fine_classes,
        base_width=16,
        stage_block_counts=(1, 1, 1, 1),
        se_ratio=4,
    )
    kwargs.update(overrides)
    return ModelConfig(**kwargs)


def temporal_shift(x: torch.Tensor, num_frames: int, fraction: Fraction) -> torch.Tensor:
    """Exchange channel slices with temporal neighbours.

    x has shape (B*T, C, H, W) with T = num_frames. With k = C * fraction,
    channels [0, k) at frame t take their values from frame t-1 (frame 0 gets
    zeros), channels [k, 2k) take theirs from frame t+1 (the last frame gets
    zeros), and channels [2k, C) pass through unchanged.
    """
    if x.dim() != 4:
        raise ValueError(f"expected (B*T, C, H, W), got shape {tuple(x.shape)}")
    bt, c, h, w = x.shape
    if num_frames < 1 or bt % num_frames != 0:
        raise ValueError(f"batch axis {bt} is not a multiple of num_frames {num_frames}")
    kf = Fraction(c) * Fraction(fraction)
    if kf.denominator != 1 or kf < 1:
        raise ValueError(f"shift width C*fraction = {c}*{fraction} is not an integer >= 1")
    k = int(kf)
    if 2 * k > c:
        raise ValueError(f"2k = {2 * k} exceeds channel count {c}")
    b = bt // num_frames
    xt = x.view(b, num_frames, c, h, w)
    out = torch.zeros_like(xt)
    out[:, 1:, :k] = xt[:, :-1, :k]
    out[:, :-1, k : 2 * k] = xt[:, 1:, k : 2 * k]
    out[:, :, 2 * k :] = xt[:, :, 2 * k :]
    return out.view(bt, c, h, w)


class SqueezeExcite(nn.Module):
    """Channel gating: spatial mean -> FC(C, C/ratio) -> ReLU -> FC -> sigmoid.

    Gates lie strictly in (0, 1), so the output never exceeds the input in
    magnitude. Zero weights give every gate the value 0.5 exactly.
    """

    def __init__(self, channels: int, ratio: int):
        super().__init__()
        if ratio < 1 or channels % ratio != 0:
            raise ValueError(f"ratio {ratio} must be >= 1 and divide channels {channels}")
        self.fc1 = nn.Linear(channels, channels // ratio)
        self.fc2 = nn.Linear(channels // ratio, channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        z = x.mean(dim=(2, 3))
        gates = torch.sigmoid(self.fc2(F.relu(self.fc1(z))))
        return x * gates[:, :, None, None]


class ShiftSEBottleneck(nn.Module):
    """One residual block: SE -> shift -> 3x3+ReLU -> 1x1/3x3/1x1 -> add.

    The mid width of the bottleneck trio is out_channels/4, the stride sits in
    the trio's 3x3, and the shortcut is the identity unless width or stride
    changes, in which case a strided 1x1 projection is used. No rectifier
    follows the addition.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        stride: int,
        se_ratio: int,
        shift_fraction: Fraction,
    ):
        super().__init__()
        if out_channels % 4 != 0:
            raise ValueError("out_channels must be divisible by 4")
        mid = out_channels // 4
        self.se = SqueezeExcite(in_channels, se_ratio)
        self.shift_fraction = Fraction(shift_fraction)
        self.shift_conv = nn.Conv2d(in_channels, in_channels, 3, padding=1)
        self.conv1 = nn.Conv2d(in_channels, mid, 1)
        self.conv2 = nn.Conv2d(mid, mid, 3, stride=stride, padding=1)
        self.conv3 = nn.Conv2d(mid, out_channels, 1)
        if stride != 1 or in_channels != out_channels:
            self.shortcut = nn.Conv2d(in_channels, out_channels, 1, stride=stride)
        else:
            self.shortcut = None

    def forward(self, x: torch.Tensor, num_frames: int) -> torch.Tensor:
        y = self.se(x)
        y = temporal_shift(y, num_frames, self.shift_fraction)
        y = F.relu(self.shift_conv(y))
        y = F.relu(self.conv1(y))
        y = F.relu(self.conv2(y))
        y = self.conv3(y)
        s = x if self.shortcut is None else self.shortcut(x)
        return y + s


class MANet(nn.Module):
    """Backbone + linear classifier + joint-space projector.

    Accepts preprocessed clips of shape (B, T, 3, H, W) with H, W divisible
    by 32; the final feature map has shape (B, T, 32C, H/32, W/32).
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        c = config.base_width
        self.stem_conv = nn.Conv2d(3, c, 7, stride=2, padding=3)
        self.stem_pool = nn.MaxPool2d(3, stride=2, padding=1)
        self.stages = nn.ModuleList()
        in_ch = c
        for mult, stride, count in zip(_STAGE_MULT, _STAGE_STRIDE, config.stage_block_counts):
            out_ch = mult * c
            blocks = nn.ModuleList()
            for i in range(count):
                blocks.append(
                    ShiftSEBottleneck(
                        in_ch if i == 0 else out_ch,
                        out_ch,
                        stride if i == 0 else 1,
                        config.se_ratio,
                        config.shift_fraction,
                    )
                )
            self.stages.append(blocks)
            in_ch = out_ch
        self.classifier = nn.Linear(config.feature_dim, config.num_fine_classes)
        self.projector = FeatureProjector(config.feature_dim, config.embed_dim)
        self.reset_parameters()

    def reset_parameters(self):
        """Fan-in-scaled init; consumes the global torch RNG state.

        Gains are matched to what follows each layer: rectifier gain for
        convolutions feeding a ReLU, linear gain for the stem and shortcut
        projections (nothing nonlinear follows them). The last convolution of
        every residual branch starts at 10% of its fan-in scale and the
        projector's output layer at zero, so blocks begin as near-identities
        and the embedding branch ramps up gradually; both keep forward and
        gradient scale stable without normalization layers.
        """
        for m in self.modules():
            if isinstance(m, nn.Conv2d):
                nn.init.kaiming_normal_(m.weight, mode="fan_in", nonlinearity="relu")
                nn.init.zeros_(m.bias)
            elif isinstance(m, nn.Linear):
                nn.init.kaiming_uniform_(m.weight, a=math.sqrt(5))
                bound = 1.0 / math.sqrt(m.weight.shape[1])
                nn.init.uniform_(m.bias, -bound, bound)
        with torch.no_grad():
            nn.init.kaiming_normal_(
                self.stem_conv.weight, mode="fan_in", nonlinearity="linear"
            )
            # budget for the stem maxpool's max-selection amplification so the
            # network's internal scale stays near the input scale
            self.stem_conv.weight.mul_(0.5)
            for blocks in self.stages:
                for block in blocks:
                    nn.init.kaiming_normal_(
                        block.conv3.weight, mode="fan_in", nonlinearity="linear"
                    )
                    block.conv3.weight.mul_(0.1)
                    nn.init.zeros_(block.conv3.bias)
                    if block.shortcut is not None:
                        nn.init.kaiming_normal_(
                            block.shortcut.weight, mode="fan_in", nonlinearity="linear"
                        )
        last = self.projector.net[-1]
        nn.init.zeros_(last.weight)
        nn.init.zeros_(last.bias)

    def _check_input(self, clip: torch.Tensor):
        if clip.dim() != 5 or clip.shape[2] != 3:
            raise ValueError(f"expected (B, T, 3, H, W), got shape {tuple(clip.shape)}")
        if clip.shape[3] % 32 != 0 or clip.shape[4] % 32 != 0:
            raise ValueError(f"H and W must be divisible by 32, got {tuple(clip.shape[3:])}")

    def calibrate_stem(self, clip: torch.Tensor, target_std: float = 0.5) -> float:
        """Rescale the stem so the pooled feature std on ``clip`` hits target_std.

        Without normalization layers the forward scale at init varies with the
        weight draw; a hot draw puts the squared-distance alignment loss
        outside the stable region of momentum SGD. Two measure-and-rescale
        passes pin the scale (the SE gates make one pass slightly inexact).
        Deterministic given the same weights and batch. Returns the pooled
        std measured before calibration.
        """
        if target_std <= 0:
            raise ValueError("target_std must be positive")
        first = None
        with torch.no_grad():
            for _ in range(2):
                _, pooled = self.forward_features(clip)
                std = float(pooled.std())
                if first is None:
                    first = std
                if std == 0.0 or not math.isfinite(std):
                    raise ValueError("degenerate calibration batch: pooled std is 0 or non-finite")
                self.stem_conv.weight.mul_(target_std / std)
                self.stem_conv.bias.mul_(target_std / std)
        return first

    def stem(self, frames: torch.Tensor) -> torch.Tensor:
        """7x7 stride-2 convolution + 3x3 stride-2 max pool; spatial /4."""
        if frames.shape[2] % 4 != 0 or frames.shape[3] % 4 != 0:
            raise ValueError("stem input H, W must be divisible by 4")
        return self.stem_pool(self.stem_conv(frames))

    def feature_map(self, clip: torch.Tensor) -> torch.Tensor:
        """Final stage output, shape (B, T, 32C, H/32, W/32)."""
        self._check_input(clip)
        b, t = clip.shape[:2]
        x = clip.reshape(b * t, *clip.shape[2:])
        x = self.stem(x)
        for blocks in self.stages:
            for block in blocks:
                x = block(x, t)
        return x.view(b, t, *x.shape[1:])

    def forward_features(self, clip: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Final feature map plus the (B, 32C) vector pooled over T, H', W'."""
        fmap = self.feature_map(clip)
        pooled = fmap.mean(dim=(1, 3, 4))
        return fmap, pooled

    def pooled_per_frame(self, clip: torch.Tensor) -> torch.Tensor:
        """Spatially pooled per-frame features, shape (B, T, 32C)."""
        return self.feature_map(clip).mean(dim=(3, 4))

    def classify(self, pooled: torch.Tensor) -> torch.Tensor:
        """Affine map to fine-class logits; softmax is applied by callers."""
        return self.classifier(pooled)

    def project(self, pooled: torch.Tensor) -> torch.Tensor:
        """Projection X_z of the pooled feature into the label space."""
        return self.projector(pooled)

    def forward(self, clip: torch.Tensor) -> torch.Tensor:
        _, pooled = self.forward_features(clip)
        return self.classify(pooled)

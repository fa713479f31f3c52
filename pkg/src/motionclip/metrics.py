"""Frame fidelity and pose accuracy metrics.

Images are float arrays in ``[0, 1]`` shaped ``(H, W)`` or ``(H, W, C)``;
8-bit inputs are divided by 255.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.ndimage import correlate1d

from .keypoints import DEFAULT_CONF_MIN, KeypointSequence

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DEFAULT_PCK_ALPHA = 0.5


def as_image(a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.dtype == np.uint8:
        arr = arr / 255.0
    arr = arr.astype(np.float64, copy=False)
    if arr.ndim not in (2, 3) or min(arr.shape[:2]) < 1:
        raise ValueError(f"image must be (H, W) or (H, W, C), got shape {arr.shape}")
    if arr.ndim == 3 and arr.shape[2] not in (1, 3):
        raise ValueError(f"image must have 1 or 3 channels, got {arr.shape[2]}")
    return arr


def _pair(a, b):
    a, b = as_image(a), as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def l1(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean(np.abs(a - b)))


def mse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB with unit peak; ``inf`` when equal."""
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / err)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    # separable Gaussian, keeping only positions where the window fits
    half = g.size // 2
    out = correlate1d(correlate1d(img, g, axis=0, mode="constant"), g, axis=1, mode="constant")
    return out[half: img.shape[0] - half, half: img.shape[1] - half]


def ssim_map(a: np.ndarray, b: np.ndarray, size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Local SSIM over every full window of a single-channel pair."""
    g = gaussian_window(size, sigma)
    c1, c2 = SSIM_K1 ** 2, SSIM_K2 ** 2
    mu_a, mu_b = _filter_valid(a, g), _filter_valid(b, g)
    var_a = _filter_valid(a * a, g) - mu_a * mu_a
    var_b = _filter_valid(b * b, g) - mu_b * mu_b
    cov = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a, b, size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> float:
    """Mean SSIM with an 11x11 Gaussian window (sigma 1.5), averaged over channels."""
    a, b = _pair(a, b)
    if min(a.shape[:2]) < size:
        raise ValueError(f"image {a.shape[:2]} is smaller than the {size}x{size} window")
    if a.ndim == 2:
        return float(ssim_map(a, b, size, sigma).mean())
    per_channel = [ssim_map(a[..., c], b[..., c], size, sigma).mean() for c in range(a.shape[2])]
    return float(math.fsum(per_channel) / len(per_channel))


def pck_counts(pred: KeypointSequence, gt: KeypointSequence, alpha: float = DEFAULT_PCK_ALPHA,
               conf_min: float = DEFAULT_CONF_MIN):
    """Per-frame ``(correct, valid)`` counts.

    A ground-truth joint is valid when its confidence is at least
    ``conf_min``.  The tolerance in each frame is ``alpha`` times the
    diagonal of the box around that frame's valid ground-truth joints.
    """
    if pred.n_frames != gt.n_frames or pred.n_joints != gt.n_joints:
        raise ValueError(
            f"pred has {pred.n_frames}x{pred.n_joints} joints, gt has {gt.n_frames}x{gt.n_joints}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    counts = []
    for f in range(gt.n_frames):
        valid = gt.confidence[f] >= conf_min
        if not valid.any():
            counts.append((0, 0))
            continue
        pts = gt.xy[f][valid]
        span = pts.max(axis=0) - pts.min(axis=0)
        tol = alpha * math.hypot(span[0], span[1])
        err = np.hypot(*(pred.xy[f][valid] - pts).T)
        counts.append((int((err <= tol).sum()), int(valid.sum())))
    return counts


def pck(pred: KeypointSequence, gt: KeypointSequence, alpha: float = DEFAULT_PCK_ALPHA,
        conf_min: float = DEFAULT_CONF_MIN) -> float:
    """Percentage of valid ground-truth joints predicted within tolerance."""
    counts = pck_counts(pred, gt, alpha, conf_min)
    total = sum(v for _, v in counts)
    if total == 0:
        raise ValueError("no valid ground-truth joints in any frame")
    return 100.0 * sum(c for c, _ in counts) / total


@dataclass
class FrameMetrics:
    name: str
    psnr: float
    ssim: float
    l1: float


@dataclass
class MetricReport:
    psnr: float
    ssim: float
    l1: float
    pck: Optional[float] = None
    per_frame: List[FrameMetrics] = field(default_factory=list)

    @classmethod
    def from_frames(cls, frames: List[FrameMetrics], pck: Optional[float] = None) -> "MetricReport":
        if not frames:
            raise ValueError("no frames to aggregate")
        n = len(frames)
        # inf propagates through fsum, so one identical frame pair makes PSNR infinite
        return cls(
            psnr=math.fsum(f.psnr for f in frames) / n,
            ssim=math.fsum(f.ssim for f in frames) / n,
            l1=math.fsum(f.l1 for f in frames) / n,
            pck=pck,
            per_frame=list(frames),
        )

    def to_document(self, include_frames: bool = False) -> dict:
        doc = {
            "psnr": encode_db(self.psnr),
            "ssim": self.ssim,
            "l1": self.l1,
            "pck": self.pck,
        }
        if include_frames:
            doc["per_frame"] = [
                {"name": f.name, "psnr": encode_db(f.psnr), "ssim": f.ssim, "l1": f.l1}
                for f in self.per_frame
            ]
        return doc

    def frames_csv(self) -> str:
        lines = ["frame,psnr,ssim,l1"]
        for f in self.per_frame:
            lines.append(f"{f.name},{encode_db(f.psnr)},{f.ssim!r},{f.l1!r}")
        return "\n".join(lines) + "\n"


def encode_db(value: float):
    return "infinite" if math.isinf(value) else value


def decode_db(value) -> float:
    return math.inf if value == "infinite" else float(value)


def frame_metrics(name: str, a, b) -> FrameMetrics:
    return FrameMetrics(name, psnr(a, b), ssim(a, b), l1(a, b))

"""3D rotary position embedding with spatial low-frequency scaling.

Channel pairs ``(2j, 2j + 1)`` of a head are split into consecutive temporal,
height and width groups.  Within an axis with ``c`` pairs the frequencies are
``base ** (-(j - 1) / c)`` for ``j = 1..c``; the spatial variant multiplies the
last ``round(alpha * c)`` height and width frequencies (the slowest ones) by
``gamma = 1 + space_scale_factor * motion_scale``.

The module also holds the conditioning-latent layout: noisy, pose and
reference latents plus a first-frame mask stacked along channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple

import numpy as np

AXES = ("t", "h", "w")
DEFAULT_BASE = 10000.0
DEFAULT_ALPHA = 0.30
DEFAULT_MOTION_SCALE = 1.5
DEFAULT_SPACE_SCALE_FACTOR = 0.02

LATENT_CHANNELS = 16
MASK_CHANNELS = 4
COMPOSED_CHANNELS = 3 * LATENT_CHANNELS + MASK_CHANNELS


def default_pair_counts(head_dim: int) -> Tuple[int, int, int]:
    spatial = head_dim // 6
    return head_dim // 2 - 2 * spatial, spatial, spatial


def round_half_up(x: float) -> int:
    # epsilon: alpha * c products that should be exact halves can land a hair under
    return int(math.floor(x + 0.5 + 1e-9))


@dataclass(frozen=True)
class FrequencyLayout:
    head_dim: int
    pair_counts: Tuple[int, int, int] | None = None
    base: float = DEFAULT_BASE
    alpha: float = DEFAULT_ALPHA
    motion_scale: float = DEFAULT_MOTION_SCALE
    space_scale_factor: float = DEFAULT_SPACE_SCALE_FACTOR

    def __post_init__(self):
        if self.head_dim <= 0 or self.head_dim % 2:
            raise ValueError(f"head_dim must be a positive even integer, got {self.head_dim}")
        counts = self.pair_counts or default_pair_counts(self.head_dim)
        counts = tuple(int(c) for c in counts)
        if len(counts) != 3 or min(counts) < 0 or sum(counts) != self.head_dim // 2:
            raise ValueError(f"pair counts {counts} must be 3 non-negative ints summing to {self.head_dim // 2}")
        if not self.base > 1:
            raise ValueError(f"base must exceed 1, got {self.base}")
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        object.__setattr__(self, "pair_counts", counts)

    @property
    def gamma(self) -> float:
        return 1.0 + self.space_scale_factor * self.motion_scale

    def n_low(self, axis: str) -> int:
        return round_half_up(self.alpha * self.pair_counts[AXES.index(axis)])


class FrequencyTable(NamedTuple):
    """Per-axis frequencies plus notes from scaling (empty when clean)."""

    t: np.ndarray
    h: np.ndarray
    w: np.ndarray
    notes: Tuple[str, ...] = ()

    def concat(self) -> np.ndarray:
        return np.concatenate([self.t, self.h, self.w])

    @property
    def monotonic(self) -> bool:
        return all(np.all(np.diff(f) < 0) for f in (self.t, self.h, self.w))


def base_frequencies(layout: FrequencyLayout) -> FrequencyTable:
    freqs = []
    for c in layout.pair_counts:
        j = np.arange(c, dtype=np.float64)
        freqs.append(layout.base ** (-2.0 * j / (2 * c)) if c else np.empty(0))
    return FrequencyTable(*freqs)


def slf_scale(layout: FrequencyLayout, freqs: FrequencyTable | None = None) -> FrequencyTable:
    """Multiply the lowest ``alpha`` share of height and width frequencies by
    ``layout.gamma``.  The temporal axis is returned untouched."""
    if freqs is None:
        freqs = base_frequencies(layout)
    gamma = layout.gamma
    notes = list(freqs.notes)
    scaled = {"t": freqs.t}
    for axis in ("h", "w"):
        theta = getattr(freqs, axis).copy()
        k = layout.n_low(axis)
        if k == 0:
            notes.append(f"axis {axis}: no low-frequency channels at alpha={layout.alpha}")
        else:
            theta[-k:] *= gamma
            if k < theta.size and not theta[-k] < theta[-k - 1]:
                notes.append(f"axis {axis}: gamma={gamma} breaks frequency ordering")
        scaled[axis] = theta
    return FrequencyTable(scaled["t"], scaled["h"], scaled["w"], tuple(notes))


def rope_angles(positions, freqs: FrequencyTable) -> np.ndarray:
    """Rotation angle per channel pair, shape ``(..., d'/2)``."""
    pos = np.asarray(positions, dtype=np.float64)
    if pos.shape[-1] != 3:
        raise ValueError(f"positions need (t, h, w) coordinates, got shape {pos.shape}")
    parts = [pos[..., i, None] * f for i, f in enumerate((freqs.t, freqs.h, freqs.w))]
    return np.concatenate(parts, axis=-1)


def apply_rope(x, positions, freqs: FrequencyTable) -> np.ndarray:
    """Rotate channel pairs of ``x`` (shape ``(..., d')``) by the angles of
    their grid positions (shape ``(..., 3)``)."""
    x = np.asarray(x, dtype=np.float64)
    theta = rope_angles(positions, freqs)
    if x.shape[-1] != 2 * theta.shape[-1]:
        raise ValueError(f"vector has {x.shape[-1]} channels, frequencies cover {2 * theta.shape[-1]}")
    cos, sin = np.cos(theta), np.sin(theta)
    even, odd = x[..., 0::2], x[..., 1::2]
    out = np.empty(np.broadcast_shapes(x.shape, theta.shape[:-1] + x.shape[-1:]))
    out[..., 0::2] = even * cos - odd * sin
    out[..., 1::2] = even * sin + odd * cos
    return out


def attention_scores(queries, q_pos, keys, k_pos, layout: FrequencyLayout,
                     use_slf: bool = True) -> np.ndarray:
    """Scaled dot-product logits ``<R q_i, R k_j> / sqrt(d')``."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    keys = np.atleast_2d(np.asarray(keys, dtype=np.float64))
    if queries.shape[-1] != layout.head_dim or keys.shape[-1] != layout.head_dim:
        raise ValueError(
            f"head_dim {layout.head_dim} does not match queries {queries.shape[-1]} / keys {keys.shape[-1]}")
    freqs = base_frequencies(layout)
    if use_slf:
        freqs = slf_scale(layout, freqs)
    q = apply_rope(queries, q_pos, freqs)
    k = apply_rope(keys, k_pos, freqs)
    return q @ k.T / math.sqrt(layout.head_dim)


# -- conditioning latents -------------------------------------------------

def _check_block(name: str, block: np.ndarray, channels: int, frames: int | None = None):
    if block.ndim not in (4, 5):
        raise ValueError(f"{name} latent must be (C, T, H, W) or (B, C, T, H, W), got {block.shape}")
    c_axis = block.ndim - 4
    if block.shape[c_axis] != channels:
        raise ValueError(f"{name} latent needs {channels} channels, got {block.shape[c_axis]}")
    if frames is not None and block.shape[c_axis + 1] != frames:
        raise ValueError(f"{name} latent needs temporal extent {frames}, got {block.shape[c_axis + 1]}")


def reference_mask(shape: Sequence[int]) -> np.ndarray:
    """Mask of shape ``(..., 4, T, H, W)`` equal to one on the first frame."""
    *lead, t, h, w = shape
    mask = np.zeros((*lead, MASK_CHANNELS, t, h, w))
    mask[..., 0, :, :] = 1.0
    return mask


def place_reference(reference: np.ndarray, frames: int) -> np.ndarray:
    """Zero latent with ``frames`` time steps and ``reference`` at index 0."""
    out = np.zeros(reference.shape[:-3] + (frames,) + reference.shape[-2:], dtype=reference.dtype)
    out[..., 0, :, :] = reference[..., 0, :, :]
    return out


def compose_latents(noisy, pose, reference) -> np.ndarray:
    """Stack ``(noisy, pose, placed reference, mask)`` along channels.

    ``noisy`` and ``pose`` are ``(16, T, H, W)`` (optionally with a leading
    batch axis) and ``reference`` is ``(16, 1, H, W)``; the result has 52
    channels.
    """
    noisy, pose, reference = (np.asarray(a) for a in (noisy, pose, reference))
    _check_block("noisy", noisy, LATENT_CHANNELS)
    frames = noisy.shape[-3]
    if frames < 1:
        raise ValueError("noisy latent has no frames")
    _check_block("pose", pose, LATENT_CHANNELS, frames)
    _check_block("reference", reference, LATENT_CHANNELS, 1)
    if pose.shape != noisy.shape:
        raise ValueError(f"pose latent {pose.shape} does not match noisy latent {noisy.shape}")
    expected_ref = noisy.shape[:-3] + (1,) + noisy.shape[-2:]
    if reference.shape != expected_ref:
        raise ValueError(f"reference latent {reference.shape} does not match expected {expected_ref}")
    dtype = np.result_type(noisy, pose, reference)
    c_axis = noisy.ndim - 4
    mask = reference_mask(noisy.shape[:c_axis] + noisy.shape[-3:]).astype(dtype)
    return np.concatenate([noisy, pose, place_reference(reference, frames), mask], axis=c_axis).astype(dtype, copy=False)


def split_latents(composed) -> dict:
    """Inverse of :func:`compose_latents` by channel slicing."""
    composed = np.asarray(composed)
    c_axis = composed.ndim - 4
    if composed.shape[c_axis] != COMPOSED_CHANNELS:
        raise ValueError(f"composed latent needs {COMPOSED_CHANNELS} channels, got {composed.shape[c_axis]}")
    bounds = np.cumsum([0, LATENT_CHANNELS, LATENT_CHANNELS, LATENT_CHANNELS, MASK_CHANNELS])
    roles = ("noisy", "pose", "reference", "mask")
    out = {}
    for role, lo, hi in zip(roles, bounds[:-1], bounds[1:]):
        out[role] = np.take(composed, np.arange(lo, hi), axis=c_axis)
    return out

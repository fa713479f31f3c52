"""Morlet wavelet energy of a speed series and narrow-peak suppression.

The transform evaluates, for integer scale ``a`` and shift ``b``::

    W(a, b) = a**-0.5 * sum_t v[t] * conj(psi((t - b) / a))

with ``psi(u) = pi**-0.25 * (exp(i*w0*u) - k_a) * exp(-u**2 / 2)`` truncated to
``|u| <= 8``.  ``k_a`` is the constant that makes the sampled kernel sum to
exactly zero at scale ``a``; for ``a >= 2`` and ``w0 = 6`` it is below 1e-7,
but at ``a = 1`` the carrier aliases to near-DC and the correction matters.
The series is extended past both ends by symmetric reflection so a constant
input has zero energy everywhere, edges included.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import fftconvolve

from .motion import VelocitySeries

DEFAULT_PEAK_THRESHOLD = 3
SUPPORT_RADIUS = 8.0


@dataclass(frozen=True)
class CwtConfig:
    scale_min: int = 1
    scale_max: int = 128
    scale_step: int = 1
    morlet_omega0: float = 6.0

    def __post_init__(self):
        for name in ("scale_min", "scale_max", "scale_step"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value}")
        if self.scale_min > self.scale_max:
            raise ValueError(f"scale_min {self.scale_min} exceeds scale_max {self.scale_max}")
        if not self.morlet_omega0 > 0:
            raise ValueError(f"morlet_omega0 must be positive, got {self.morlet_omega0}")

    @property
    def scales(self) -> np.ndarray:
        return np.arange(self.scale_min, self.scale_max + 1, self.scale_step)


@dataclass(frozen=True)
class EnergySeries:
    raw: np.ndarray = field(repr=False)
    filtered: np.ndarray = field(repr=False)
    peak_threshold_frames: int | None = None

    def __len__(self):
        return len(self.raw)

    def to_csv(self) -> str:
        lines = ["sample_index,raw,filtered"]
        for i, (r, f) in enumerate(zip(self.raw.tolist(), self.filtered.tolist())):
            lines.append(f"{i},{r!r},{f!r}")
        return "\n".join(lines) + "\n"


def morlet_kernel(scale: int, omega0: float = 6.0) -> np.ndarray:
    """Sampled, scale-normalised wavelet ``a**-0.5 * psi(n / a)`` for
    ``n = -M..M`` with ``M = floor(8 * a)``.  The result sums to zero."""
    half = int(np.floor(SUPPORT_RADIUS * scale))
    u = np.arange(-half, half + 1) / scale
    envelope = np.exp(-0.5 * u * u)
    carrier = np.exp(1j * omega0 * u)
    # symmetric support: imaginary parts cancel, so the offset is real
    offset = np.dot(carrier.real, envelope) / envelope.sum()
    return np.pi ** -0.25 * (carrier - offset) * envelope / np.sqrt(scale)


def _as_array(v) -> np.ndarray:
    values = v.values if isinstance(v, VelocitySeries) else v
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("velocity series must be a non-empty 1-D sequence")
    return values


def cwt_matrix(v, cfg: CwtConfig = CwtConfig(), method: str = "fft") -> np.ndarray:
    """Complex coefficients with shape ``(n_scales, len(v))``.

    ``method="direct"`` evaluates the sum by explicit sliding windows and is
    kept for cross-checking; ``"fft"`` is the default.
    """
    x = _as_array(v)
    scales = cfg.scales
    pad = int(np.floor(SUPPORT_RADIUS * scales[-1]))
    xpad = np.pad(x, pad, mode="symmetric")
    n = x.size
    out = np.empty((scales.size, n), dtype=np.complex128)
    for row, a in enumerate(scales):
        k = np.conj(morlet_kernel(int(a), cfg.morlet_omega0))
        half = (k.size - 1) // 2
        seg = xpad[pad - half: pad + n + half]
        if method == "fft":
            out[row] = fftconvolve(seg, k[::-1], mode="valid")
        elif method == "direct":
            windows = np.lib.stride_tricks.sliding_window_view(seg, k.size)
            out[row] = windows @ k
        else:
            raise ValueError(f"unknown method {method!r}")
    return out


def energy_series(v, cfg: CwtConfig = CwtConfig()) -> EnergySeries:
    raw = np.abs(cwt_matrix(v, cfg)).sum(axis=0)
    return EnergySeries(raw, raw.copy())


def _peak_runs(x: np.ndarray):
    """Yield ``(left, right)`` for every strict local maximum, a plateau
    counting as one peak.  Samples at the series ends are never peaks."""
    n = x.size
    i = 1
    while i < n - 1:
        if x[i - 1] < x[i]:
            j = i
            while j + 1 < n - 1 and x[j + 1] == x[i]:
                j += 1
            if x[j + 1] < x[i]:
                yield i, j
            i = j + 1
        else:
            i += 1


def peak_supports(x: np.ndarray):
    """Return ``(left, right, width, prominence)`` rows for every peak.

    Prominence is measured against the higher of the two flanking minima,
    each minimum taken over the stretch between the peak and the nearest
    higher sample (or the series end).  The support is the contiguous run
    of samples around the peak at or above half prominence, and its width is
    the number of samples in that run.
    """
    x = np.asarray(x, dtype=np.float64)
    rows = []
    for left, right in _peak_runs(x):
        top = x[left]
        i = left
        while i > 0 and x[i - 1] <= top:
            i -= 1
        lo_left = x[i:left].min(initial=top)
        j = right
        while j < x.size - 1 and x[j + 1] <= top:
            j += 1
        lo_right = x[right + 1: j + 1].min(initial=top)
        prominence = top - max(lo_left, lo_right)
        level = top - 0.5 * prominence
        s, e = left, right
        while s > 0 and x[s - 1] >= level:
            s -= 1
        while e < x.size - 1 and x[e + 1] >= level:
            e += 1
        rows.append((s, e, e - s + 1, prominence))
    return rows


def filter_peaks(e: EnergySeries, threshold_frames: int = DEFAULT_PEAK_THRESHOLD) -> EnergySeries:
    """Zero the support of every peak narrower than ``threshold_frames``."""
    if threshold_frames < 1:
        raise ValueError(f"threshold_frames must be >= 1, got {threshold_frames}")
    filtered = e.raw.copy()
    for s, t, width, _ in peak_supports(e.raw):
        if width < threshold_frames:
            filtered[s: t + 1] = 0.0
    return replace(e, filtered=filtered, peak_threshold_frames=threshold_frames)

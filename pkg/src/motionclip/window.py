"""Fixed-length window of maximal filtered energy."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from itertools import accumulate

import numpy as np

DEFAULT_WINDOW_SECONDS = 6.0
DEFAULT_BOUNDARY_MARGIN = 10


@dataclass(frozen=True)
class WindowSelection:
    start_frame: int
    end_frame: int  # exclusive
    window_energy: float
    boundary_adjusted: bool
    whole_video: bool
    start_seconds: float
    duration_seconds: float

    def to_document(self) -> dict:
        return asdict(self)

    @classmethod
    def from_document(cls, doc: dict) -> "WindowSelection":
        return cls(
            start_frame=int(doc["start_frame"]),
            end_frame=int(doc["end_frame"]),
            window_energy=float(doc["window_energy"]),
            boundary_adjusted=bool(doc["boundary_adjusted"]),
            whole_video=bool(doc["whole_video"]),
            start_seconds=float(doc["start_seconds"]),
            duration_seconds=float(doc["duration_seconds"]),
        )


def window_length(window_seconds: float, fps: float) -> int:
    """Frames in a window, rounding halves up."""
    return int(math.floor(window_seconds * fps + 0.5))


def _exact_prefix(values: np.ndarray):
    """Prefix sums of ``values`` as exact integers in units of ``2**exp``.

    Floats are dyadic rationals, so scaling every mantissa onto the smallest
    exponent present gives exact integer arithmetic for the window sums.
    """
    parts = [math.frexp(x) for x in values.tolist()]
    exps = [e - 53 for m, e in parts if m != 0.0]
    base = min(exps, default=0)
    ints = [int(m * (1 << 53)) << (e - 53 - base) if m != 0.0 else 0 for m, e in parts]
    return [0, *accumulate(ints)], base


def _to_float(units: int, exp: int) -> float:
    # int / int true division is correctly rounded
    return float(units * (1 << exp)) if exp >= 0 else units / (1 << -exp)


def window_sums(energy: np.ndarray, length: int) -> np.ndarray:
    """Correctly rounded sums of ``energy[i:i+length]`` for every start
    ``i`` in ``0..len(energy)+1-length``; windows running past the end of
    the series are clipped.  Each value equals ``math.fsum`` of its window.
    """
    energy = np.asarray(energy, dtype=np.float64)
    n = energy.size
    prefix, exp = _exact_prefix(energy)
    starts = range(0, n + 2 - length)
    return np.array([_to_float(prefix[min(i + length, n)] - prefix[i], exp) for i in starts])


def _window_energy(energy: np.ndarray, start: int, stop: int) -> float:
    stop = min(stop, energy.size)
    if stop <= start:
        return 0.0
    prefix, exp = _exact_prefix(energy[start:stop])
    return _to_float(prefix[-1], exp)


def select_window(energy, fps: float, total_frames: int,
                  window_seconds: float = DEFAULT_WINDOW_SECONDS,
                  boundary_margin: int = DEFAULT_BOUNDARY_MARGIN) -> WindowSelection:
    """Pick the ``window_seconds`` span whose filtered energy is largest.

    ``energy`` is the filtered series (or an ``EnergySeries``) with one sample
    per frame interval.  Ties go to the earliest start.  A best start closer
    than ``boundary_margin`` frames to the beginning snaps to frame 0;
    otherwise a best window ending within the margin of the last frame snaps
    to the final full window.  Videos no longer than the window are kept
    whole.
    """
    values = getattr(energy, "filtered", energy)
    values = np.asarray(values, dtype=np.float64)
    if not fps > 0:
        raise ValueError(f"fps must be positive, got {fps}")
    if total_frames < 1:
        raise ValueError(f"total_frames must be >= 1, got {total_frames}")
    if not window_seconds > 0:
        raise ValueError(f"window_seconds must be positive, got {window_seconds}")
    if values.size != max(total_frames - 1, 0):
        raise ValueError(
            f"energy has {values.size} samples but {total_frames} frames need {max(total_frames - 1, 0)}")
    length = window_length(window_seconds, fps)
    if length < 1:
        raise ValueError(f"window of {window_seconds}s at {fps} fps is shorter than one frame")

    if total_frames <= length:
        return WindowSelection(
            start_frame=0, end_frame=total_frames,
            window_energy=_window_energy(values, 0, values.size),
            boundary_adjusted=False, whole_video=True,
            start_seconds=0.0, duration_seconds=total_frames / fps,
        )

    sums = window_sums(values, length)
    best = int(np.argmax(sums))  # first occurrence on ties
    start = best
    if best < boundary_margin:
        start = 0
    elif best + length > total_frames - boundary_margin:
        start = total_frames - length
    return WindowSelection(
        start_frame=start, end_frame=start + length,
        window_energy=float(sums[start]),
        boundary_adjusted=start != best, whole_video=False,
        start_seconds=start / fps, duration_seconds=length / fps,
    )

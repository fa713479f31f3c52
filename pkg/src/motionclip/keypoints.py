"""Keypoint documents: parsing, validation and trajectory cleaning.

A keypoint document is a single JSON object::

    {"fps": 30.0, "width": 1920, "height": 1080, "joints_per_frame": 17,
     "frames": [[[x, y, conf], ...], ...]}

Joint ordering follows COCO-17, so joint 0 is the nose.  Batch files hold one
document per line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

DEFAULT_CONF_MIN = 0.3
DEFAULT_OUTLIER_FACTOR = 5.0
LOCAL_STEPS = 8

COCO17_JOINTS = (
    "nose", "left_eye", "right_eye", "left_ear", "right_ear",
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
    "left_wrist", "right_wrist", "left_hip", "right_hip",
    "left_knee", "right_knee", "left_ankle", "right_ankle",
)


class KeypointFormatError(ValueError):
    """Raised for documents that do not follow the keypoint schema."""

    def __init__(self, message: str, frame: int | None = None):
        self.frame = frame
        super().__init__(message)


class DeadJointError(ValueError):
    """Raised when a joint has no valid observation anywhere in a sequence."""

    def __init__(self, joint: int):
        self.joint = joint
        super().__init__(f"joint {joint} has no valid observations")


@dataclass(frozen=True)
class KeypointSequence:
    """Per-frame 2D joints for one video.

    ``data`` has shape ``(frames, joints, 3)`` holding ``x, y, confidence``
    with coordinates in pixels.
    """

    fps: float
    frame_width: int
    frame_height: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        # own copy: freezing must not touch the caller's array
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[2] != 3:
            raise KeypointFormatError(f"expected (frames, joints, 3) array, got {data.shape}")
        if data.shape[0] == 0:
            raise KeypointFormatError("no frames")
        if data.shape[1] == 0:
            raise KeypointFormatError("frames have no joints", frame=0)
        if not self.fps > 0:
            raise KeypointFormatError(f"fps must be positive, got {self.fps}")
        if self.frame_width <= 0 or self.frame_height <= 0:
            raise KeypointFormatError(
                f"frame dimensions must be positive, got {self.frame_width}x{self.frame_height}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def n_joints(self) -> int:
        return self.data.shape[1]

    @property
    def xy(self) -> np.ndarray:
        return self.data[:, :, :2]

    @property
    def confidence(self) -> np.ndarray:
        return self.data[:, :, 2]

    @property
    def duration(self) -> float:
        return self.n_frames / self.fps

    def with_data(self, data: np.ndarray) -> "KeypointSequence":
        return KeypointSequence(self.fps, self.frame_width, self.frame_height, data)

    def to_document(self) -> dict:
        return {
            "fps": self.fps,
            "width": self.frame_width,
            "height": self.frame_height,
            "joints_per_frame": self.n_joints,
            "frames": self.data.tolist(),
        }


@dataclass
class CleaningReport:
    interpolated_count: int = 0
    outlier_count: int = 0
    # (joint index, interpolated, outliers)
    per_joint_counts: List[Tuple[int, int, int]] = field(default_factory=list)

    def to_document(self) -> dict:
        return {
            "interpolated_count": self.interpolated_count,
            "outlier_count": self.outlier_count,
            "per_joint_counts": [list(c) for c in self.per_joint_counts],
        }


def _require_number(doc: dict, key: str):
    if key not in doc:
        raise KeypointFormatError(f"missing field {key!r}")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise KeypointFormatError(f"field {key!r} must be a number")
    return value


def sequence_from_document(doc: dict) -> KeypointSequence:
    if not isinstance(doc, dict):
        raise KeypointFormatError("document must be a JSON object")
    fps = _require_number(doc, "fps")
    width = _require_number(doc, "width")
    height = _require_number(doc, "height")
    if fps <= 0:
        raise KeypointFormatError(f"fps must be positive, got {fps}")
    if width <= 0 or height <= 0 or int(width) != width or int(height) != height:
        raise KeypointFormatError(f"frame dimensions must be positive integers, got {width}x{height}")

    frames = doc.get("frames")
    if not isinstance(frames, list):
        raise KeypointFormatError("missing field 'frames'")
    if not frames:
        raise KeypointFormatError("no frames")

    declared = doc.get("joints_per_frame")
    expected = declared if declared is not None else None
    rows = []
    for i, frame in enumerate(frames):
        if not isinstance(frame, list):
            raise KeypointFormatError(f"frame {i} is not a list of joints", frame=i)
        if expected is None:
            expected = len(frame)
        if len(frame) != expected:
            raise KeypointFormatError(f"inconsistent joint count at frame {i}", frame=i)
        try:
            arr = np.asarray(frame, dtype=np.float64)
        except (TypeError, ValueError):
            raise KeypointFormatError(f"non-numeric joint values at frame {i}", frame=i) from None
        if arr.size and arr.shape != (expected, 3):
            raise KeypointFormatError(f"joints must be [x, y, conf] triples at frame {i}", frame=i)
        if not np.all(np.isfinite(arr)):
            raise KeypointFormatError(f"non-finite joint values at frame {i}", frame=i)
        rows.append(arr)
    if expected == 0:
        raise KeypointFormatError("frames have no joints", frame=0)
    return KeypointSequence(float(fps), int(width), int(height), np.stack(rows))


def parse_keypoints(raw: bytes | str) -> KeypointSequence:
    """Parse one keypoint document."""
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise KeypointFormatError(f"malformed document: {exc}") from None
    return sequence_from_document(doc)


def parse_keypoint_stream(raw: bytes | str) -> List[KeypointSequence]:
    """Parse either a single document or newline-delimited documents."""
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    try:
        return [sequence_from_document(json.loads(text))]
    except json.JSONDecodeError:
        pass
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise KeypointFormatError(f"malformed document on line {lineno}: {exc}") from None
        out.append(sequence_from_document(doc))
    if not out:
        raise KeypointFormatError("no documents")
    return out


def load_keypoints(path) -> KeypointSequence:
    with open(path, "rb") as fh:
        return parse_keypoints(fh.read())


def dump_keypoints(seq: KeypointSequence) -> str:
    return json.dumps(seq.to_document(), separators=(",", ":"))


def _predict(t: np.ndarray, pts: np.ndarray, centers: np.ndarray, offsets) -> np.ndarray:
    """Lagrange interpolation at ``t[centers]`` through ``centers + offsets``."""
    nodes = centers[:, None] + np.asarray(offsets)[None, :]
    tn = t[nodes].astype(np.float64)
    tc = t[centers].astype(np.float64)[:, None]
    w = np.ones(nodes.shape)
    for a in range(nodes.shape[1]):
        for b in range(nodes.shape[1]):
            if a != b:
                w[:, a] *= (tc[:, 0] - tn[:, b]) / (tn[:, a] - tn[:, b])
    return np.einsum("kq,kqc->kc", w, pts[nodes])


def _trend_deviation(t: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Distance of each sample from the polynomial through its (up to) two
    nearest neighbours on either side.  The first and last samples get 0."""
    m = len(t)
    dev = np.zeros(m)
    groups = [(np.arange(2, m - 2), (-2, -1, 1, 2))]
    for i in sorted({1, m - 2}):
        if 0 < i < m - 1:
            groups.append((np.array([i]), tuple(k for k in (-2, -1, 1, 2) if 0 <= i + k < m)))
    for centers, offsets in groups:
        if centers.size:
            dev[centers] = np.hypot(*(pts[centers] - _predict(t, pts, centers, offsets)).T)
    return dev


def _worst_outlier(t: np.ndarray, pts: np.ndarray, factor: float) -> int | None:
    """Index into ``t`` of the sample farthest off the local trend, if that
    distance exceeds ``factor`` times the typical step.

    The typical step is the larger of the joint's median step over the whole
    sequence and the median of the eight steps around the sample, so fast
    genuine motion is judged against its own speed.
    """
    if len(t) < 3:
        return None
    step = np.hypot(*np.diff(pts, axis=0).T)
    padded = np.pad(step, LOCAL_STEPS // 2, mode="edge")
    local = np.median(np.lib.stride_tricks.sliding_window_view(padded, LOCAL_STEPS), axis=1)
    limit = factor * np.maximum(np.median(step), local[: len(t)])
    # a still joint has zero typical step; don't chase rounding noise in the fit
    limit = np.maximum(limit, 1e-9 * (1.0 + np.abs(pts).max()))
    excess = _trend_deviation(t, pts) - limit
    worst = int(np.argmax(excess))
    return worst if excess[worst] > 0 else None


def clean_sequence(seq: KeypointSequence,
                   conf_min: float = DEFAULT_CONF_MIN,
                   outlier_factor: float = DEFAULT_OUTLIER_FACTOR,
                   ) -> Tuple[KeypointSequence, CleaningReport]:
    """Fill low-confidence joints and remove spike outliers.

    An outlier is a sample lying more than ``outlier_factor`` typical steps
    (see ``_worst_outlier``) away from the cubic through its neighbouring
    valid samples.  Outliers are removed worst first, one at a
    time, until none remain, so a single spike does not drag its neighbours
    along and a second pass finds nothing new.

    Low-confidence joints and outliers are replaced by linear interpolation
    between the nearest valid frames; gaps at either end hold the nearest
    valid coordinate.  Every replaced joint gets confidence 0 so fills stay
    distinguishable from observations.
    """
    if not 0.0 <= conf_min <= 1.0:
        raise ValueError(f"conf_min must be in [0, 1], got {conf_min}")
    if not outlier_factor > 0:
        raise ValueError(f"outlier_factor must be positive, got {outlier_factor}")

    data = seq.data.copy()
    frames = np.arange(seq.n_frames)
    report = CleaningReport()
    for j in range(seq.n_joints):
        valid = data[:, j, 2] >= conf_min
        if not valid.any():
            raise DeadJointError(j)
        n_low = int((~valid).sum())

        n_out = 0
        while True:
            idx = np.flatnonzero(valid)
            bad = _worst_outlier(idx, data[idx, j, :2], outlier_factor)
            if bad is None:
                break
            valid[idx[bad]] = False
            n_out += 1

        if n_low or n_out:
            idx = np.flatnonzero(valid)
            fill = ~valid
            for c in (0, 1):
                data[fill, j, c] = np.interp(frames[fill], idx, data[idx, j, c])
            data[fill, j, 2] = 0.0
        report.interpolated_count += n_low
        report.outlier_count += n_out
        report.per_joint_counts.append((j, n_low, n_out))
    return seq.with_data(data), report


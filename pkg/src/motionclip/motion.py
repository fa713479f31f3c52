"""Per-frame joint speed."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .keypoints import KeypointSequence

DEFAULT_JOINT = 0


@dataclass(frozen=True)
class VelocitySeries:
    """Joint speed in pixels/second on the ``N - 1`` intervals of an
    ``N``-frame sequence.  Sample ``t`` covers frames ``t -> t + 1``."""

    values: np.ndarray = field(repr=False)
    fps: float
    joint_index: int

    def __len__(self):
        return len(self.values)


def compute_velocity(seq: KeypointSequence, joint_index: int = DEFAULT_JOINT) -> VelocitySeries:
    if seq.n_frames < 2:
        raise ValueError(f"need at least 2 frames for a velocity series, got {seq.n_frames}")
    if not 0 <= joint_index < seq.n_joints:
        raise IndexError(f"joint index {joint_index} out of range for {seq.n_joints} joints")
    xy = seq.xy[:, joint_index, :]
    step = np.diff(xy, axis=0)
    speed = np.sqrt(step[:, 0] ** 2 + step[:, 1] ** 2) * seq.fps
    return VelocitySeries(speed, seq.fps, joint_index)


def velocity_csv(v: VelocitySeries) -> str:
    lines = ["frame_index,velocity"]
    lines += [f"{i},{x!r}" for i, x in enumerate(v.values.tolist())]
    return "\n".join(lines) + "\n"

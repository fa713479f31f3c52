"""Synthetic keypoint documents."""

import json

import numpy as np


def sequence_array(xy, n_joints=17, conf=0.9):
    """Broadcast one (frames, 2) trajectory to every joint."""
    xy = np.asarray(xy, dtype=float)
    data = np.empty((len(xy), n_joints, 3))
    data[:, :, :2] = xy[:, None, :]
    data[:, :, 2] = conf
    return data


def document(data, fps=30.0, width=1280, height=720):
    data = np.asarray(data, dtype=float)
    return {
        "fps": fps,
        "width": width,
        "height": height,
        "joints_per_frame": int(data.shape[1]),
        "frames": data.tolist(),
    }


def burst_trajectory(seconds=12.0, fps=30.0, burst_start=5.0, burst_seconds=2.0, seed=0):
    """Slow drift plus jitter, with a fast circular burst.

    Returns the (frames, 2) trajectory and the [first, last] burst frames.
    """
    rng = np.random.default_rng(seed)
    n = int(round(seconds * fps))
    t = np.arange(n) / fps
    x = 500 + 20 * np.sin(2 * np.pi * 0.1 * t) + rng.normal(0, 0.3, n)
    y = 300 + rng.normal(0, 0.3, n)
    burst = (t >= burst_start) & (t < burst_start + burst_seconds)
    phase = 2 * np.pi * 3.0 * (t - burst_start)
    x = x + np.where(burst, 25 * np.sin(phase), 0.0)
    y = y + np.where(burst, 20 * np.cos(phase) - 20, 0.0)
    frames = np.flatnonzero(burst)
    return np.stack([x, y], axis=1), (int(frames[0]), int(frames[-1]))


def write_document(path, data, **kw):
    path.write_text(json.dumps(document(data, **kw)))
    return path

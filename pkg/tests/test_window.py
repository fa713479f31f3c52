import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import oracles
from motionclip.wavelet import EnergySeries
from motionclip.window import WindowSelection, select_window, window_length, window_sums


@pytest.mark.parametrize("seconds, fps, frames", [
    (6.0, 30.0, 180), (6.0, 29.97, 180), (6.0, 25.0, 150), (0.5, 3.0, 2), (2.5, 1.0, 3), (1.0, 0.4, 0),
])
def test_window_length(seconds, fps, frames):
    assert window_length(seconds, fps) == frames


def test_window_sums_are_exact():
    # naive left-to-right addition loses the small terms here
    e = np.array([1e16, 1.0, -1e16, 1.0, 3.0])
    sums = window_sums(e, 3)
    assert sums.tolist() == [math.fsum(e[i:i + 3]) for i in range(len(sums))]
    assert sums[0] == 1.0


def test_window_sums_clip_last_start():
    assert window_sums(np.array([1.0, 2.0, 4.0]), 2).tolist() == [3.0, 6.0, 4.0]


def test_all_zero_energy_starts_at_zero():
    sel = select_window(np.zeros(359), 30.0, 360)
    assert (sel.start_frame, sel.end_frame) == (0, 180)
    assert sel.window_energy == 0.0
    assert not sel.boundary_adjusted and not sel.whole_video


def test_snap_to_start():
    e = np.zeros(299)
    e[5:15] = 1.0  # unique best start 5
    sel = select_window(e, 10.0, 300, 1.0)
    assert sel.start_frame == 0 and sel.boundary_adjusted
    assert sel.window_energy == 5.0


def test_snap_to_end():
    e = np.zeros(299)
    e[-4:] = 1.0
    sel = select_window(e, 10.0, 300, 2.0)
    assert (sel.start_frame, sel.end_frame) == (280, 300)
    assert sel.boundary_adjusted


def test_interior_untouched():
    e = np.zeros(299)
    e[150:160] = 1.0
    sel = select_window(e, 10.0, 300, 1.0)
    assert (sel.start_frame, sel.end_frame) == (150, 160)
    assert sel.start_seconds == 15.0 and sel.duration_seconds == 1.0
    assert sel.window_energy == 10.0


def test_short_video_kept_whole():
    sel = select_window(np.arange(99.0), 30.0, 100)
    assert sel.whole_video and (sel.start_frame, sel.end_frame) == (0, 100)
    assert sel.window_energy == math.fsum(range(99))
    assert sel.duration_seconds == pytest.approx(100 / 30)


def test_single_frame_video():
    sel = select_window(np.zeros(0), 30.0, 1)
    assert sel.whole_video and sel.end_frame == 1 and sel.window_energy == 0.0


def test_uses_filtered_series():
    raw = np.zeros(299)
    raw[100] = 50.0
    filtered = np.zeros(299)
    filtered[200:210] = 1.0
    sel = select_window(EnergySeries(raw, filtered), 10.0, 300, 1.0)
    assert sel.start_frame == 200


@pytest.mark.parametrize("kw, message", [
    (dict(fps=0.0), "fps"),
    (dict(total_frames=0), "total_frames"),
    (dict(window_seconds=-1.0), "window_seconds"),
    (dict(total_frames=50), "samples"),
    (dict(fps=0.1, window_seconds=1.0), "shorter than one frame"),
])
def test_invalid(kw, message):
    args = dict(energy=np.zeros(99), fps=30.0, total_frames=100, window_seconds=6.0)
    args.update(kw)
    with pytest.raises(ValueError, match=message):
        select_window(**args)


def test_document_roundtrip():
    sel = select_window(np.arange(299.0), 30.0, 300, 2.0)
    assert WindowSelection.from_document(sel.to_document()) == sel


@settings(max_examples=150, deadline=None)
@given(hnp.arrays(np.float64, st.integers(0, 200),
                  elements=st.one_of(st.floats(0, 1e12, allow_nan=False), st.sampled_from([0.0, 1.0]))),
       st.integers(1, 220), st.sampled_from([1.0, 24.0, 30.0]))
def test_matches_bruteforce(energy, length, fps):
    frames = energy.size + 1
    seconds = length / fps
    sel = select_window(energy, fps, frames, seconds)
    start, end, total, adjusted, whole = oracles.best_window_bruteforce(energy, fps, frames, seconds)
    assert (sel.start_frame, sel.end_frame, sel.window_energy) == (start, end, total)
    assert (sel.boundary_adjusted, sel.whole_video) == (adjusted, whole)
    assert 0 <= sel.start_frame < sel.end_frame <= frames

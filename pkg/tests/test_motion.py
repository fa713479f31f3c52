import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import oracles
from motionclip.keypoints import KeypointSequence
from motionclip.motion import compute_velocity, velocity_csv


def _seq(xy, fps=30.0, joints=2):
    data = np.zeros((len(xy), joints, 3))
    data[:, 0, :2] = xy
    data[:, :, 2] = 1.0
    return KeypointSequence(fps, 640, 480, data)


def test_three_four_five():
    v = compute_velocity(_seq([[0, 0], [3, 4], [3, 4]], fps=10.0))
    assert np.array_equal(v.values, [50.0, 0.0])
    assert len(v) == 2 and v.fps == 10.0 and v.joint_index == 0


def test_other_joint():
    seq = _seq([[0, 0], [1, 0]])
    assert np.array_equal(compute_velocity(seq, 1).values, [0.0])


def test_errors():
    with pytest.raises(ValueError, match="at least 2 frames"):
        compute_velocity(_seq([[0, 0]]))
    with pytest.raises(IndexError):
        compute_velocity(_seq([[0, 0], [1, 1]]), joint_index=2)


def test_csv():
    text = velocity_csv(compute_velocity(_seq([[0, 0], [3, 4], [3, 5]], fps=1.0)))
    assert text == "frame_index,velocity\n0,5.0\n1,1.0\n"


@settings(max_examples=80, deadline=None)
@given(hnp.arrays(np.float64, st.tuples(st.integers(2, 60), st.just(2)),
                  elements=st.floats(-1e4, 1e4, allow_nan=False)),
       st.floats(1, 240))
def test_matches_loop(xy, fps):
    v = compute_velocity(_seq(xy, fps))
    ref = oracles.velocity(xy.tolist(), fps)
    assert np.allclose(v.values, ref, rtol=1e-12, atol=0)
    assert np.all(v.values >= 0)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motionclip.rope import (COMPOSED_CHANNELS, FrequencyLayout, apply_rope, attention_scores,
                             base_frequencies, compose_latents, default_pair_counts, reference_mask,
                             round_half_up, slf_scale, split_latents)
from motionclip.rope_check import format_report, frequency_csv, selfcheck


def test_default_split():
    assert default_pair_counts(128) == (22, 21, 21)
    assert default_pair_counts(8) == (2, 1, 1)
    assert default_pair_counts(12) == (2, 2, 2)
    assert FrequencyLayout(128).pair_counts == (22, 21, 21)


@pytest.mark.parametrize("kw", [dict(head_dim=7), dict(head_dim=0), dict(head_dim=8, pair_counts=(1, 1, 1)),
                                dict(head_dim=8, base=1.0), dict(head_dim=8, alpha=1.5),
                                dict(head_dim=8, pair_counts=(5, -1, 0))])
def test_layout_checks(kw):
    with pytest.raises(ValueError):
        FrequencyLayout(**kw)


def test_base_frequencies_closed_form():
    f = base_frequencies(FrequencyLayout(12, pair_counts=(2, 2, 2), base=100.0))
    assert np.allclose(f.t, [1.0, 0.1], rtol=1e-15)
    assert f.monotonic


def test_gamma_and_low_count():
    layout = FrequencyLayout(128)
    assert layout.gamma == pytest.approx(1.03, abs=1e-15)
    assert layout.n_low("h") == round_half_up(0.3 * 21) == 6
    assert round_half_up(0.5) == 1 and round_half_up(2.5) == 3 and round_half_up(0.35 * 90) == 32


def test_scaling_targets_slowest_spatial_pairs():
    layout = FrequencyLayout(64)  # (12, 10, 10), three low pairs per spatial axis
    plain, scaled = base_frequencies(layout), slf_scale(layout)
    for axis in "hw":
        a, b = getattr(plain, axis), getattr(scaled, axis)
        assert np.array_equal(a[:-3], b[:-3])
        assert np.all(b[-3:] > a[-3:])
    assert scaled.notes == ()


def test_notes():
    tiny = slf_scale(FrequencyLayout(12, alpha=0.1))
    assert any("no low-frequency" in n for n in tiny.notes)
    wild = slf_scale(FrequencyLayout(64, space_scale_factor=100.0))
    assert any("ordering" in n for n in wild.notes) and not wild.monotonic


def test_rotation_of_single_pair():
    layout = FrequencyLayout(2, pair_counts=(1, 0, 0))
    f = base_frequencies(layout)
    out = apply_rope([1.0, 0.0], [math.pi / 2, 0, 0], f)
    assert np.allclose(out, [0.0, 1.0], atol=1e-15)


def test_shape_errors():
    layout = FrequencyLayout(8)
    f = base_frequencies(layout)
    with pytest.raises(ValueError):
        apply_rope(np.ones(6), [0, 0, 0], f)
    with pytest.raises(ValueError):
        apply_rope(np.ones(8), [0, 0], f)
    with pytest.raises(ValueError):
        attention_scores(np.ones((1, 6)), [[0, 0, 0]], np.ones((1, 8)), [[0, 0, 0]], layout)


def test_scores_match_manual():
    rng = np.random.default_rng(5)
    layout = FrequencyLayout(32)
    q, k = rng.normal(size=(3, 32)), rng.normal(size=(4, 32))
    qp, kp = rng.integers(0, 9, size=(3, 3)), rng.integers(0, 9, size=(4, 3))
    f = slf_scale(layout)
    manual = np.array([[apply_rope(qi, pi, f) @ apply_rope(kj, pj, f) for kj, pj in zip(k, kp)]
                       for qi, pi in zip(q, qp)]) / math.sqrt(32)
    assert np.allclose(attention_scores(q, qp, k, kp, layout), manual, rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 64).map(lambda n: 2 * n), st.integers(0, 2 ** 32 - 1))
def test_rotation_preserves_norm(d, seed):
    rng = np.random.default_rng(seed)
    f = slf_scale(FrequencyLayout(d))
    x = rng.normal(size=(5, d))
    pos = rng.uniform(-100, 100, size=(5, 3))
    assert np.allclose(np.linalg.norm(apply_rope(x, pos, f), axis=-1), np.linalg.norm(x, axis=-1), rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([8, 32, 128]), st.integers(0, 2 ** 32 - 1), st.booleans())
def test_relative_position(d, seed, slf):
    rng = np.random.default_rng(seed)
    layout = FrequencyLayout(d)
    q, k = rng.normal(size=(2, d)), rng.normal(size=(3, d))
    qp, kp = rng.integers(0, 40, size=(2, 3)), rng.integers(0, 40, size=(3, 3))
    shift = rng.integers(-100, 100, size=3)
    a = attention_scores(q, qp, k, kp, layout, use_slf=slf)
    b = attention_scores(q, qp + shift, k, kp + shift, layout, use_slf=slf)
    assert np.abs(a - b).max() <= 1e-10


def test_mask_and_channels():
    mask = reference_mask((3, 4, 5))
    assert mask.shape == (4, 3, 4, 5)
    assert mask[:, 0].all() and not mask[:, 1:].any()
    assert COMPOSED_CHANNELS == 52


def test_compose_keeps_dtype():
    z = np.zeros((16, 2, 3, 3), np.float32)
    out = compose_latents(z, z, z[:, :1])
    assert out.dtype == np.float32 and out.shape == (52, 2, 3, 3)


@pytest.mark.parametrize("shapes", [
    ((15, 2, 3, 3), (16, 2, 3, 3), (16, 1, 3, 3)),
    ((16, 2, 3, 3), (16, 3, 3, 3), (16, 1, 3, 3)),
    ((16, 2, 3, 3), (16, 2, 3, 3), (16, 2, 3, 3)),
    ((16, 2, 3, 3), (16, 2, 3, 3), (16, 1, 3, 4)),
    ((16, 3, 3), (16, 3, 3), (16, 1, 3)),
])
def test_compose_rejects(shapes):
    with pytest.raises(ValueError):
        compose_latents(*(np.zeros(s) for s in shapes))


def test_split_rejects():
    with pytest.raises(ValueError):
        split_latents(np.zeros((51, 1, 1, 1)))


def test_selfcheck_and_dump():
    results = selfcheck(seed=3)
    assert all(r.passed for r in results), format_report(results)
    lines = frequency_csv(FrequencyLayout(12)).splitlines()
    assert lines[0] == "axis,index,base,scaled,factor"
    assert len(lines) == 1 + 6

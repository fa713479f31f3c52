"""Randomized invariant checks for the rotary embedding kernel."""

from __future__ import annotations

from typing import List, NamedTuple

import numpy as np

from .rope import (COMPOSED_CHANNELS, FrequencyLayout, apply_rope, attention_scores,
                   base_frequencies, compose_latents, slf_scale, split_latents)


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def random_layout(rng: np.random.Generator, head_dim: int, **params) -> FrequencyLayout:
    """Random axis split of ``head_dim // 2`` pairs with every axis non-empty."""
    pairs = head_dim // 2
    cuts = np.sort(rng.choice(np.arange(1, pairs), size=2, replace=False))
    counts = (int(cuts[0]), int(cuts[1] - cuts[0]), int(pairs - cuts[1]))
    return FrequencyLayout(head_dim, counts, **params)


def random_positions(rng, n, grid=(16, 32, 32)):
    return np.stack([rng.integers(0, g, size=n) for g in grid], axis=1)


def check_translation(rng, cases=200, dims=(8, 32, 128), tol=1e-10) -> CheckResult:
    worst = 0.0
    for i in range(cases):
        d = dims[i % len(dims)]
        layout = random_layout(rng, d, motion_scale=rng.uniform(0.5, 3.0),
                               space_scale_factor=rng.uniform(0.0, 0.2))
        nq, nk = rng.integers(1, 8, size=2)
        q, k = rng.standard_normal((nq, d)), rng.standard_normal((nk, d))
        qp, kp = random_positions(rng, nq), random_positions(rng, nk)
        shift = rng.integers(-20, 21, size=3)
        for use_slf in (False, True):
            s0 = attention_scores(q, qp, k, kp, layout, use_slf)
            s1 = attention_scores(q, qp + shift, k, kp + shift, layout, use_slf)
            worst = max(worst, float(np.max(np.abs(s0 - s1))))
    return CheckResult("translation invariance", worst <= tol, f"max |delta score| = {worst:.3e}")


def check_identity(rng, cases=50) -> CheckResult:
    ok = True
    for i in range(cases):
        layout = random_layout(rng, int(rng.choice([8, 32, 128])), space_scale_factor=0.0,
                               motion_scale=rng.uniform(0.5, 3.0))
        base, scaled = base_frequencies(layout), slf_scale(layout)
        ok &= all(np.array_equal(a, b) for a, b in zip(base[:3], scaled[:3]))
    return CheckResult("zero space scale is standard rope", bool(ok), f"{cases} layouts")


def check_locality(rng, cases=50) -> CheckResult:
    worst = 0.0
    ok = True
    for i in range(cases):
        layout = random_layout(rng, int(rng.choice([8, 32, 128])))
        base, scaled = base_frequencies(layout).concat(), slf_scale(layout).concat()
        changed = np.flatnonzero(base != scaled)
        expected = layout.n_low("h") + layout.n_low("w")
        ok &= changed.size == expected
        if changed.size:
            worst = max(worst, float(np.max(np.abs(scaled[changed] / base[changed] - layout.gamma))))
    ok &= worst <= 1e-15
    return CheckResult("low-frequency scaling is local", bool(ok), f"max |ratio - gamma| = {worst:.1e}")


def check_norm(rng, cases=200, tol=1e-12) -> CheckResult:
    worst = 0.0
    for i in range(cases):
        d = int(rng.choice([8, 32, 128]))
        layout = random_layout(rng, d)
        x = rng.standard_normal(d)
        y = apply_rope(x, random_positions(rng, 1)[0], slf_scale(layout))
        worst = max(worst, abs(np.linalg.norm(y) - np.linalg.norm(x)) / np.linalg.norm(x))
    return CheckResult("rotation preserves norm", worst <= tol, f"max relative change = {worst:.1e}")


def check_composition(rng, cases=20) -> CheckResult:
    ok = True
    for i in range(cases):
        t, h, w = (int(v) for v in rng.integers(1, [10, 17, 17]))
        noisy = rng.standard_normal((16, t, h, w))
        pose = rng.standard_normal((16, t, h, w))
        ref = rng.standard_normal((16, 1, h, w))
        out = compose_latents(noisy, pose, ref)
        parts = split_latents(out)
        ok &= out.shape == (COMPOSED_CHANNELS, t, h, w)
        ok &= np.array_equal(parts["noisy"], noisy) and np.array_equal(parts["pose"], pose)
        ok &= np.array_equal(parts["reference"][:, :1], ref)
        ok &= not parts["reference"][:, 1:].any()
        ok &= set(np.unique(parts["mask"])) <= {0.0, 1.0}
        ok &= parts["mask"][:, 0].all() and not parts["mask"][:, 1:].any()
    return CheckResult("latent composition layout", bool(ok), f"{cases} random grids")


def selfcheck(seed: int = 0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    return [
        check_translation(rng),
        check_identity(rng),
        check_locality(rng),
        check_norm(rng),
        check_composition(rng),
    ]


def frequency_csv(layout: FrequencyLayout) -> str:
    base, scaled = base_frequencies(layout), slf_scale(layout)
    lines = ["axis,index,base,scaled,factor"]
    for axis, b_axis, s_axis in zip("thw", base[:3], scaled[:3]):
        for j, (b, s) in enumerate(zip(b_axis.tolist(), s_axis.tolist()), start=1):
            lines.append(f"{axis},{j},{b!r},{s!r},{s / b!r}")
    return "\n".join(lines) + "\n"


def format_report(results: List[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    rows = [f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}" for r in results]
    return "\n".join(rows)


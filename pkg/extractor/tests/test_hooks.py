import numpy as np
import pytest
import torch

from attnprobe import AttentionTap, SelfAttention2d


def _module_with_stash(heads, n, seed):
    rng = np.random.default_rng(seed)
    mod = SelfAttention2d(4 * heads, heads=heads)
    raw = rng.uniform(0.1, 1.0, size=(heads, n, n))
    raw /= raw.sum(axis=-1, keepdims=True)
    mod.last_attn = torch.from_numpy(raw)
    return mod, raw


def test_collect_is_head_sum_renormalised():
    mod, raw = _module_with_stash(heads=3, n=6, seed=0)
    tap = AttentionTap({4: mod})
    got = tap.collect()[4]
    want = raw.sum(axis=0)
    want /= want.sum(axis=1, keepdims=True)
    assert got.dtype == np.float32
    assert np.abs(got.astype(np.float64) - want).max() < 1e-7
    assert np.abs(got.sum(axis=1) - 1.0).max() < 1e-6
    assert mod.last_attn is None  # collection clears the stash


def test_tap_arms_and_disarms():
    mod = SelfAttention2d(8, heads=2)
    assert not mod.capture
    with AttentionTap({4: mod}) as tap:
        assert mod.capture
        x = torch.randn(1, 8, 2, 2)
        with torch.no_grad():
            mod(x)
        maps = tap.collect()
    assert not mod.capture
    assert maps[4].shape == (4, 4)


def test_collect_without_forward_raises():
    mod = SelfAttention2d(8, heads=2)
    with AttentionTap({16: mod}) as tap:
        with pytest.raises(RuntimeError, match="side 16"):
            tap.collect()


def test_entering_tap_discards_stale_capture():
    mod, _ = _module_with_stash(heads=2, n=4, seed=1)
    with AttentionTap({2: mod}) as tap:
        with pytest.raises(RuntimeError):
            tap.collect()  # the pre-existing stash must not leak through

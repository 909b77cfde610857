"""Attention taps: arm decoder self-attention modules, collect the maps.

A tap is a context manager over the modules of interest.  While armed,
each module stashes its post-softmax per-head attention on the forward
pass; on collection the per-head maps are summed across heads and the
rows renormalised back to probability simplices.  (Each head's rows
already sum to one, so the head sum has row mass equal to the head
count; the explicit renormalisation keeps the stored map row-stochastic
regardless of head count or accumulated float error.)
"""

import numpy as np


class AttentionTap:
    def __init__(self, modules: dict):
        """``modules`` maps spatial side -> SelfAttention2d."""
        self.modules = dict(modules)

    def __enter__(self):
        for mod in self.modules.values():
            mod.capture = True
            mod.last_attn = None
        return self

    def __exit__(self, *exc):
        for mod in self.modules.values():
            mod.capture = False
        return False

    def collect(self) -> dict:
        """Head-summed, row-renormalised maps {side: (N, N) float32}."""
        maps = {}
        for side, mod in self.modules.items():
            if mod.last_attn is None:
                raise RuntimeError(f"no attention captured at side {side}; "
                                   "did the forward pass run while armed?")
            a = mod.last_attn.sum(dim=0).numpy().astype(np.float64)
            a /= a.sum(axis=1, keepdims=True)
            maps[side] = a.astype(np.float32)
            mod.last_attn = None
        return maps

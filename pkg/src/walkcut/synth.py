"""Planted block-structured walk matrices for oracle testing.

A planted transition matrix has a known segment structure: each row
spreads ``intra`` of its mass uniformly over its own block (itself
included) and the remainder uniformly over everything else, optionally
perturbed by multiplicative noise and re-normalized.  Recovery of the
planted blocks is then an exact, checkable ground truth for the whole
segmentation pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attention import AttentionStack, default_weights


@dataclass
class PlantedSpec:
    """Planted block structure on a ``side x side`` grid.

    Attributes
    ----------
    side : int
    blocks : list of index arrays
        Disjoint patch index sets covering ``side * side`` exactly.
    intra : float
        In-block row mass, must exceed 0.5 so blocks dominate.
    noise : float
        Half-width of the multiplicative perturbation ``(1 + u)``,
        ``u ~ Uniform(-noise, noise)``; must stay below 1.
    seed : int
    """

    side: int
    blocks: list = field(repr=False)
    intra: float = 0.9
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.side < 2:
            raise ValueError("side must be at least 2")
        n = self.side * self.side
        joined = np.concatenate([np.asarray(b, dtype=np.int64) for b in self.blocks])
        if joined.size != n or np.unique(joined).size != n or joined.min() < 0 or joined.max() >= n:
            raise ValueError("blocks must partition the patch grid exactly")
        if any(np.asarray(b).size == 0 for b in self.blocks):
            raise ValueError("empty block")
        if not (0.5 < self.intra <= 1.0):
            raise ValueError(f"intra must lie in (0.5, 1], got {self.intra}")
        if not (0.0 <= self.noise < 1.0):
            raise ValueError(f"noise must lie in [0, 1), got {self.noise}")


def planted_labels(spec: PlantedSpec) -> np.ndarray:
    """Block index of every patch, shaped ``(side, side)``."""
    n = spec.side * spec.side
    labels = np.full(n, -1, dtype=np.int64)
    for b, members in enumerate(spec.blocks):
        labels[np.asarray(members, dtype=np.int64)] = b
    return labels.reshape(spec.side, spec.side)


def planted_transition(spec: PlantedSpec) -> tuple[np.ndarray, np.ndarray]:
    """Build the planted walk matrix and its label map.

    Returns
    -------
    (p, labels)
        ``p`` is ``(side**2, side**2)`` row-stochastic; with ``intra = 1``
        and ``noise = 0`` it is exactly block diagonal with uniform rows.
        ``labels`` is the ``(side, side)`` block map.
    """
    n = spec.side * spec.side
    p = np.zeros((n, n))
    for members in spec.blocks:
        idx = np.asarray(members, dtype=np.int64)
        size = idx.size
        rest = n - size
        if rest == 0:
            p[np.ix_(idx, idx)] = 1.0 / size
            continue
        out_share = (1.0 - spec.intra) / rest
        p[idx, :] = out_share
        p[np.ix_(idx, idx)] = spec.intra / size
    if spec.noise > 0:
        rng = np.random.default_rng(spec.seed)
        p *= 1.0 + rng.uniform(-spec.noise, spec.noise, size=(n, n))
        p /= p.sum(axis=1, keepdims=True)
    return p, planted_labels(spec)


def pooled_blocks(spec: PlantedSpec, side: int) -> list:
    """Project the planted blocks onto a coarser ``side x side`` grid.

    Each coarse cell takes the majority block of the fine cells it pools
    (ties to the lower block index).  Blocks that vanish at the coarse
    scale are dropped.
    """
    if spec.side % side != 0:
        raise ValueError(f"coarse side {side} must divide {spec.side}")
    factor = spec.side // side
    fine = planted_labels(spec)
    coarse = np.empty((side, side), dtype=np.int64)
    for i in range(side):
        for j in range(side):
            window = fine[i * factor : (i + 1) * factor, j * factor : (j + 1) * factor]
            coarse[i, j] = np.argmax(np.bincount(window.ravel()))
    flat = coarse.ravel()
    return [np.flatnonzero(flat == b) for b in range(len(spec.blocks)) if (flat == b).any()]


def planted_stack(spec: PlantedSpec, sides) -> AttentionStack:
    """Planted transitions at several resolutions as an attention stack.

    Every requested side must divide ``spec.side``; the block structure is
    grid-pooled onto each coarse grid and each resolution gets its own
    deterministic noise stream.  Weights are the side-proportional
    defaults, so the stack feeds straight into aggregation.
    """
    sides = sorted(set(int(s) for s in sides))
    if not sides:
        raise ValueError("no sides requested")
    maps = {}
    for s in sides:
        if s < 2 or spec.side % s != 0:
            raise ValueError(f"side {s} must be >= 2 and divide {spec.side}")
        sub = PlantedSpec(
            side=s,
            blocks=pooled_blocks(spec, s),
            intra=spec.intra,
            noise=spec.noise,
            seed=int(np.random.default_rng([spec.seed, s]).integers(2**31)),
        )
        maps[s], _ = planted_transition(sub)
    return AttentionStack(maps=maps, weights=default_weights(sides))


def random_blocks(side: int, n_blocks: int, seed: int = 0) -> list:
    """Random contiguous rectangular partition of the grid into blocks.

    Recursive binary splits of the largest remaining rectangle, axis and
    position drawn from the seeded generator.  Always yields exactly
    ``n_blocks`` contiguous regions.
    """
    if n_blocks < 1 or n_blocks > side * side:
        raise ValueError(f"cannot cut {side}x{side} grid into {n_blocks} blocks")
    rng = np.random.default_rng(seed)
    rects = [(0, 0, side, side)]  # (row, col, height, width)
    while len(rects) < n_blocks:
        rects.sort(key=lambda r: r[2] * r[3], reverse=True)
        r0, c0, h, w = rects.pop(0)
        if h == 1 and w == 1:
            raise ValueError("ran out of splittable rectangles")
        if w > h or (w == h and rng.integers(2)):
            cut = int(rng.integers(1, w))
            rects += [(r0, c0, h, cut), (r0, c0 + cut, h, w - cut)]
        else:
            cut = int(rng.integers(1, h))
            rects += [(r0, c0, cut, w), (r0 + cut, c0, h - cut, w)]
    blocks = []
    for r0, c0, h, w in rects:
        rows = np.arange(r0, r0 + h)
        cols = np.arange(c0, c0 + w)
        blocks.append((rows[:, None] * side + cols[None, :]).ravel())
    return blocks

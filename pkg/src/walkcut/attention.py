"""Multi-resolution attention loading, upsampling and aggregation.

Per-resolution self-attention tensors of shape ``(h*h, h*h)`` — one
row-stochastic map per query patch — are upsampled to a common grid and
averaged under per-resolution weights into a single transition matrix.
Key dimensions are upsampled bilinearly (half-pixel centres, edges
clamped); query dimensions are replicated nearest-neighbour, so each
high-resolution query reuses the map of the coarse patch containing it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor_store

# validation tolerances
ROW_SUM_ATOL = 1e-4
WEIGHT_SUM_ATOL = 1e-9


@dataclass
class AttentionStack:
    """Per-resolution attention maps plus their aggregation weights.

    Attributes
    ----------
    maps : dict
        ``side -> (side*side, side*side)`` arrays, row-stochastic.
    weights : dict
        ``side -> float`` aggregation weights summing to one.
    """

    maps: dict
    weights: dict


@dataclass
class TransitionMatrix:
    """A row-stochastic walk matrix over the ``side x side`` patch grid."""

    side: int
    p: np.ndarray


def default_weights(sides) -> dict:
    """Weights proportional to latent side length, normalized to sum 1."""
    sides = sorted(int(s) for s in sides)
    if not sides or any(s <= 0 for s in sides):
        raise ValueError("sides must be positive integers")
    total = float(sum(sides))
    return {s: s / total for s in sides}


def validate_stack(stack: AttentionStack) -> None:
    """Check stack invariants; raise ValueError on any violation.

    Rows must sum to 1 within ``ROW_SUM_ATOL``, entries must be finite and
    non-negative, map keys must agree with array sizes, and the weights must
    cover exactly the stored sides and sum to one.
    """
    if not stack.maps:
        raise ValueError("attention stack is empty")
    if set(stack.weights) != set(stack.maps):
        raise ValueError("weights and maps cover different resolutions")
    for side, s in stack.maps.items():
        n = side * side
        if s.ndim != 2 or s.shape != (n, n):
            raise ValueError(f"side {side}: expected shape {(n, n)}, got {s.shape}")
        if not np.isfinite(s).all():
            raise ValueError(f"side {side}: non-finite attention values")
        if (s < 0).any():
            raise ValueError(f"side {side}: negative attention values")
        sums = s.sum(axis=1)
        err = np.abs(sums - 1.0).max()
        if err > ROW_SUM_ATOL:
            raise ValueError(f"side {side}: rows deviate from stochastic by {err:.2e}")
    wsum = sum(stack.weights.values())
    if abs(wsum - 1.0) > WEIGHT_SUM_ATOL:
        raise ValueError(f"weights sum to {wsum!r}, expected 1")


def load_stack(entry, resolutions=None) -> AttentionStack:
    """Read the attention tensors of a manifest entry into a stack.

    Parameters
    ----------
    entry : tensor_store.ManifestEntry
    resolutions : iterable of int, optional
        Side lengths to load; defaults to everything the entry offers.
        Requesting a side the entry lacks raises KeyError.
    """
    sides = sorted(entry.attention) if resolutions is None else sorted(set(resolutions))
    maps = {}
    for side in sides:
        if side not in entry.attention:
            raise KeyError(f"{entry.image_id}: no attention tensor for side {side}")
        a = tensor_store.read_tensor(entry.attention[side]).astype(np.float64)
        maps[side] = a
    stack = AttentionStack(maps=maps, weights=default_weights(sides))
    validate_stack(stack)
    return stack


def bilinear_matrix(src: int, dst: int) -> np.ndarray:
    """1-D bilinear interpolation weights from ``src`` to ``dst`` samples.

    Uses half-pixel sample centres (source position of output ``j`` is
    ``(j + 0.5) * src / dst - 0.5``) with edge clamping, so for
    ``src == dst`` the matrix is the identity.  Rows sum to 1.
    """
    if src < 1 or dst < 1:
        raise ValueError("sample counts must be positive")
    pos = (np.arange(dst) + 0.5) * (src / dst) - 0.5
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    lo_c = np.clip(lo, 0, src - 1)
    hi_c = np.clip(lo + 1, 0, src - 1)
    w = np.zeros((dst, src))
    rows = np.arange(dst)
    np.add.at(w, (rows, lo_c), 1.0 - frac)
    np.add.at(w, (rows, hi_c), frac)
    return w


def upsample_attention_map(s: np.ndarray, target_side: int) -> np.ndarray:
    """Upsample one attention map to ``(target_side**2, target_side**2)``.

    Each source row, viewed as an ``h x h`` key map, is bilinearly
    interpolated to ``target_side x target_side`` and renormalized to sum 1.
    Each high-resolution query takes the (renormalized) map of the coarse
    patch that contains it.

    Parameters
    ----------
    s : ndarray
        ``(h*h, h*h)`` attention map, ``h >= 2`` and ``h`` dividing
        ``target_side``.
    target_side : int

    Returns
    -------
    ndarray
        ``(target_side**2, target_side**2)`` row-stochastic map.
    """
    n = s.shape[0]
    h = math.isqrt(n)
    if s.ndim != 2 or s.shape != (n, n) or h * h != n:
        raise ValueError(f"attention map must be (h*h, h*h), got {s.shape}")
    if h < 2:
        raise ValueError("source side must be at least 2")
    t = int(target_side)
    if t % h != 0:
        raise ValueError(f"source side {h} does not divide target {t}")

    w1 = bilinear_matrix(h, t)
    keys = s.reshape(n, h, h)
    up = w1 @ keys @ w1.T  # (n, t, t) via broadcasting
    up = up.reshape(n, t * t)
    sums = up.sum(axis=1, keepdims=True)
    if (sums <= 0).any():
        raise ValueError("upsampled row with non-positive mass")
    up /= sums

    if t == h:
        return up
    # nearest-neighbour replication over queries
    grid = (np.arange(t) * h) // t
    qmap = (grid[:, None] * h + grid[None, :]).ravel()
    return up[qmap]


def aggregate(stack: AttentionStack, enabled=None) -> TransitionMatrix:
    """Blend enabled resolutions into one transition matrix.

    Weights are renormalized over the enabled subset; every selected map is
    upsampled to the largest enabled side and the weighted sum is row
    renormalized.  Disabling a resolution therefore redistributes its weight
    proportionally rather than leaving mass missing.

    Parameters
    ----------
    stack : AttentionStack
    enabled : iterable of int, optional
        Subset of sides to blend; defaults to all sides in the stack.

    Returns
    -------
    TransitionMatrix
    """
    validate_stack(stack)
    sides = sorted(stack.maps) if enabled is None else sorted(set(int(s) for s in enabled))
    if not sides:
        raise ValueError("no resolutions enabled")
    missing = [s for s in sides if s not in stack.maps]
    if missing:
        raise ValueError(f"enabled resolutions absent from stack: {missing}")
    target = max(sides)
    for s in sides:
        if target % s != 0:
            raise ValueError(f"side {s} does not divide target side {target}")

    wsum = sum(stack.weights[s] for s in sides)
    n = target * target
    p = np.zeros((n, n))
    for s in sides:
        p += (stack.weights[s] / wsum) * upsample_attention_map(stack.maps[s], target)
    p /= p.sum(axis=1, keepdims=True)
    return TransitionMatrix(side=target, p=p)

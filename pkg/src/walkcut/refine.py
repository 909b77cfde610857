"""Full-resolution refinement of patch segmentations.

Each segment gets a prototype — the mean walk row of its member patches.
The patch-grid feature field (one walk row per patch) is bilinearly
interpolated up to the output size and every pixel is assigned to the
prototype with the highest cosine similarity.  Interpolation happens on the
*features*, not on per-segment score maps: the two orders differ, and the
feature order is the faithful one.  A score-interpolation shortcut is
available behind ``approximate=True`` for speed comparisons.

The faithful order would naively materialize an ``out_h x out_w x n`` float
field; the implementation runs in row tiles sized to a memory budget and is
bit-identical to the single-tile computation.
"""

from __future__ import annotations

import colorsys
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .attention import bilinear_matrix

DEFAULT_BUDGET_MB = 512


@dataclass
class LabelMap:
    """Integer segment labels on a pixel grid."""

    labels: np.ndarray

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def num_segments(self) -> int:
        return int(self.labels.max()) + 1


def segment_prototypes(p: np.ndarray, tree) -> np.ndarray:
    """Mean walk row of each segment, stacked ``(K, n)`` in label order."""
    mat = np.asarray(getattr(p, "p", p), dtype=np.float64)
    labels = tree.leaf_labels
    if mat.shape[0] != labels.shape[0]:
        raise ValueError(
            f"matrix rows {mat.shape[0]} do not match labeled patches {labels.shape[0]}"
        )
    k = int(labels.max()) + 1
    protos = np.empty((k, mat.shape[1]))
    for seg in range(k):
        members = labels == seg
        if not members.any():
            raise ValueError(f"segment {seg} has no members")
        protos[seg] = mat[members].mean(axis=0)
    return protos


def upsample_assign(
    p: np.ndarray,
    protos: np.ndarray,
    out_h: int,
    out_w: int,
    memory_budget_mb: float = DEFAULT_BUDGET_MB,
    approximate: bool = False,
) -> LabelMap:
    """Assign each output pixel to its cosine-nearest segment prototype.

    Parameters
    ----------
    p : ndarray
        ``(side*side, n)`` walk rows over the patch grid.
    protos : ndarray
        ``(K, n)`` segment prototypes.
    out_h, out_w : int
        Output size in pixels.
    memory_budget_mb : float
        Peak size of the materialized feature tile; smaller budgets mean
        more, narrower tiles with bit-identical output.
    approximate : bool
        Interpolate patch-level cosine scores instead of features — cheaper,
        but differs near segment boundaries.

    Returns
    -------
    LabelMap
        Ties in similarity resolve to the lowest segment index.
    """
    mat = np.asarray(getattr(p, "p", p), dtype=np.float64)
    side = math.isqrt(mat.shape[0])
    if side * side != mat.shape[0]:
        raise ValueError(f"row count {mat.shape[0]} is not a square grid")
    if out_h < 1 or out_w < 1:
        raise ValueError("output size must be positive")
    protos = np.asarray(protos, dtype=np.float64)
    if protos.ndim != 2 or protos.shape[1] != mat.shape[1]:
        raise ValueError("prototypes must be (K, n) matching the walk rows")
    pnorm = np.linalg.norm(protos, axis=1)
    if (pnorm <= 0).any():
        raise ValueError("zero-norm prototype")
    unit_protos = protos / pnorm[:, None]

    wy = bilinear_matrix(side, out_h)
    wx = bilinear_matrix(side, out_w)

    if approximate:
        scores = (mat / np.linalg.norm(mat, axis=1, keepdims=True)) @ unit_protos.T
        grid = scores.reshape(side, side, -1)
        up = np.tensordot(wy, grid, (1, 0))
        up = np.tensordot(up, wx, (1, 1)).transpose(0, 2, 1)
        return LabelMap(labels=np.argmax(up, axis=2).astype(np.int64))

    feat_dim = mat.shape[1]
    grid = mat.reshape(side, side, feat_dim)
    lo_y, hi_y, fy = _taps(side, out_h)
    lo_x, hi_x, fx = _taps(side, out_w)
    # tile arithmetic is strictly per-output-row (two-tap gathers and einsum
    # reductions), so any tiling is bit-identical to one big tile
    bytes_per_row = (out_w + side) * feat_dim * 8
    tile_rows = max(1, int(memory_budget_mb * 2**20 // bytes_per_row))
    labels = np.empty((out_h, out_w), dtype=np.int64)
    for r0 in range(0, out_h, tile_rows):
        r1 = min(r0 + tile_rows, out_h)
        wl = (1.0 - fy[r0:r1])[:, None, None]
        wh = fy[r0:r1][:, None, None]
        rows = grid[lo_y[r0:r1]] * wl + grid[hi_y[r0:r1]] * wh  # (R, side, n)
        feats = (
            rows[:, lo_x, :] * (1.0 - fx)[None, :, None]
            + rows[:, hi_x, :] * fx[None, :, None]
        )  # (R, out_w, n)
        flat = feats.reshape(-1, feat_dim)
        sim = np.einsum("pn,kn->pk", flat, unit_protos)
        norms = np.sqrt(np.einsum("pn,pn->p", flat, flat))
        norms[norms == 0] = 1.0  # all-zero features score 0 against everything
        cos = sim / norms[:, None]
        labels[r0:r1] = np.argmax(cos, axis=1).reshape(r1 - r0, out_w)
    return LabelMap(labels=labels)


def _taps(src: int, dst: int):
    # half-pixel-centre bilinear taps with edge clamping; matches
    # attention.bilinear_matrix row for row
    pos = (np.arange(dst) + 0.5) * (src / dst) - 0.5
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    return np.clip(lo, 0, src - 1), np.clip(lo + 1, 0, src - 1), frac


def write_label_png(label_map: LabelMap, path) -> None:
    """Store labels as grayscale PNG: 8-bit when they fit, else 16-bit."""
    labels = label_map.labels
    if labels.min() < 0:
        raise ValueError("labels must be non-negative")
    peak = int(labels.max())
    if peak < 256:
        img = Image.fromarray(labels.astype(np.uint8), mode="L")
    elif peak < 65536:
        img = Image.fromarray(labels.astype(np.uint16))
    else:
        raise ValueError(f"label {peak} exceeds 16-bit PNG range")
    img.save(path, format="PNG")


def read_label_png(path) -> np.ndarray:
    """Load a label PNG back into an integer array."""
    img = Image.open(path)
    a = np.asarray(img)
    if a.ndim != 2:
        raise ValueError(f"{path}: expected a single-channel label image, got shape {a.shape}")
    return a.astype(np.int64)


def segment_palette(k: int) -> np.ndarray:
    """K visually distinct RGB colors via golden-angle hue stepping."""
    colors = np.empty((k, 3), dtype=np.uint8)
    for i in range(k):
        hue = (i * 0.61803398875) % 1.0
        r, g, b = colorsys.hsv_to_rgb(hue, 0.65, 0.95)
        colors[i] = (int(r * 255), int(g * 255), int(b * 255))
    return colors


def write_overlay_png(label_map: LabelMap, image: np.ndarray, path, alpha: float = 0.5) -> None:
    """Composite a colorized segmentation onto an RGB image at given alpha."""
    labels = label_map.labels
    img = np.asarray(image)
    if img.shape[:2] != labels.shape:
        raise ValueError(
            f"image size {img.shape[:2]} does not match labels {labels.shape}"
        )
    if img.ndim == 2:
        img = np.stack([img] * 3, axis=2)
    palette = segment_palette(label_map.num_segments)
    colored = palette[labels]
    blended = ((1.0 - alpha) * img[..., :3] + alpha * colored).astype(np.uint8)
    Image.fromarray(blended, mode="RGB").save(path, format="PNG")

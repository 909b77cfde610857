"""k-step walk matrices and sub-walk restriction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_STEPS = 16
ROW_SUM_ATOL = 1e-4


@dataclass(frozen=True)
class WalkConfig:
    """Step count for the k-step walk; k=1 leaves the matrix untouched."""

    k: int = 1

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or isinstance(self.k, bool):
            raise ValueError("k must be an integer")
        if self.k < 1 or self.k > MAX_STEPS:
            raise ValueError(f"k must be in [1, {MAX_STEPS}], got {self.k}")


def matrix_power(p: np.ndarray, k: int) -> np.ndarray:
    """Compute the k-step transition matrix by repeated squaring.

    Parameters
    ----------
    p : ndarray
        Square row-stochastic matrix.
    k : int
        Step count, ``1 <= k <= 16``.

    Returns
    -------
    ndarray
        ``p`` raised to the k-th power with rows renormalized to sum 1.
        Accumulated floating error beyond ``1e-4`` per row (before the
        final renormalization) is treated as a corrupt input.
    """
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise ValueError("k must be an integer")
    if k < 1 or k > MAX_STEPS:
        raise ValueError(f"k must be in [1, {MAX_STEPS}], got {k}")
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError(f"expected a square matrix, got {p.shape}")

    out = np.array(p, dtype=np.float64)
    if k > 1:
        result = None
        base = out
        e = k
        while e:
            if e & 1:
                result = base.copy() if result is None else result @ base
            e >>= 1
            if e:
                base = base @ base
        out = result

    sums = out.sum(axis=1)
    if np.abs(sums - 1.0).max() > ROW_SUM_ATOL:
        raise ValueError("rows drifted from stochastic beyond tolerance; "
                         "input was not row-stochastic")
    return out / sums[:, None]


def restrict_renormalize(p: np.ndarray, subset) -> np.ndarray:
    """Restrict a walk matrix to a vertex subset and re-normalize rows.

    Rows that lose all their mass to the removed vertices become uniform
    over the subset, keeping the result a valid walk matrix.

    Parameters
    ----------
    p : ndarray
        Square matrix with non-negative entries.
    subset : array_like of int
        Distinct vertex indices; order is preserved in the output.
    """
    idx = np.asarray(subset, dtype=np.int64)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("subset must be a non-empty 1-D index array")
    if np.unique(idx).size != idx.size:
        raise ValueError("subset contains duplicate indices")
    sub = p[np.ix_(idx, idx)].astype(np.float64)
    sums = sub.sum(axis=1)
    dead = sums <= 0
    if dead.any():
        sub[dead] = 1.0 / idx.size
        sums[dead] = 1.0
    return sub / sums[:, None]

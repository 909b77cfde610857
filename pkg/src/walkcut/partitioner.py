"""Recursive two-way normalised-cut partitioning with automatic stopping.

A segmentation is grown as a binary tree: each node holds a vertex subset,
is split at the best Fiedler threshold, and the split is either accepted
(recurse into both sides) or rejected by the stopping rule (the node
becomes a segment).  Three rules are supported:

``fixed_ncut``
    stop when the split's normalised-cut value exceeds a fixed ``tau``.
``manc_ncut``
    stop when it reaches the graph's own ``n * T / (2 m)`` threshold,
    removing the hyperparameter.
``manc_scaled_mincut``
    stop when the (proxied or exact) minimum-cut weight divided by the
    total edge weight reaches the same threshold.

On the ``random_walk`` formulation each accepted side is restricted and
row-renormalized before recursion, and cut values are scored on the
symmetrized sub-walk ``(P + P^T) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attention import TransitionMatrix
from .graph import (
    AdjacencyMatrix,
    cut_cost,
    graph_stats,
    manc_threshold,
    min_cut,
)
from .spectral import (
    NUM_CANDIDATES,
    SpectralError,
    SplitResult,
    best_threshold_split,
    fiedler_stochastic,
    fiedler_symmetric,
)
from .walk import WalkConfig, matrix_power, restrict_renormalize

RULE_KINDS = ("fixed_ncut", "manc_ncut", "manc_scaled_mincut")
FORMULATIONS = ("adjacency", "random_walk")

# leaf stop reasons
STOP_THRESHOLD = "threshold"
STOP_TOO_SMALL = "too_small"
STOP_EDGELESS = "edgeless"
STOP_SPECTRAL = "spectral_failure"


@dataclass(frozen=True)
class StoppingRule:
    """Stopping-rule selection plus its (kind-dependent) parameters."""

    kind: str
    tau: float | None = None
    min_segment_size: int = 1
    mincut_mode: str = "proxy"

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown rule kind {self.kind!r}; pick from {RULE_KINDS}")
        if self.kind == "fixed_ncut":
            if self.tau is None:
                raise ValueError("fixed_ncut requires tau")
            if not (0.0 < self.tau < 2.0):
                raise ValueError(f"tau must lie in (0, 2), got {self.tau}")
        elif self.tau is not None:
            raise ValueError(f"{self.kind} determines its own threshold; tau must be None")
        if self.min_segment_size < 1:
            raise ValueError("min_segment_size must be at least 1")
        if self.mincut_mode not in ("proxy", "exact"):
            raise ValueError(f"mincut_mode must be 'proxy' or 'exact', got {self.mincut_mode!r}")


@dataclass
class TreeNode:
    """One tree node: a vertex subset plus split/stop diagnostics."""

    indices: np.ndarray = field(repr=False)
    children: tuple | None = None
    split_cost: float | None = None
    stop_reason: str | None = None
    rule_threshold: float | None = None

    @property
    def size(self) -> int:
        return int(self.indices.size)


@dataclass
class SegmentationTree:
    """Binary partition tree in preorder, plus per-vertex leaf labels."""

    n: int
    nodes: list
    leaf_labels: np.ndarray

    @property
    def num_segments(self) -> int:
        return int(self.leaf_labels.max()) + 1

    def leaves(self) -> list:
        return [i for i, nd in enumerate(self.nodes) if nd.children is None]

    def to_json_dict(self) -> dict:
        """JSON-ready dump; index sets are run-length encoded."""
        out = {"n": self.n, "num_segments": self.num_segments, "nodes": []}
        for i, nd in enumerate(self.nodes):
            out["nodes"].append(
                {
                    "id": i,
                    "size": nd.size,
                    "indices_rle": _rle(nd.indices),
                    "children": list(nd.children) if nd.children else None,
                    "split_cost": nd.split_cost,
                    "stop_reason": nd.stop_reason,
                    "rule_threshold": nd.rule_threshold,
                }
            )
        return out


def _rle(indices: np.ndarray) -> list:
    idx = np.sort(np.asarray(indices))
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) != 1)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [idx.size - 1]])
    return [[int(idx[s]), int(e - s + 1)] for s, e in zip(starts, ends)]


def should_stop(rule: StoppingRule, split: SplitResult, sub_adj, stats) -> bool:
    """Decide whether a proposed split is rejected under the rule.

    ``fixed_ncut`` stops strictly above ``tau``; the automatic rules stop at
    or above the graph's ``n*T/(2m)`` threshold — compared against the
    normalised-cut value (``manc_ncut``) or against the minimum cut scaled
    by total weight (``manc_scaled_mincut``).  The scaled variant defaults
    to the proposed split's own cut weight as a min-cut proxy; exact
    Stoer-Wagner is opt-in via the rule's ``mincut_mode``.
    """
    if rule.kind == "fixed_ncut":
        return split.cost > rule.tau
    thr = manc_threshold(stats)
    if rule.kind == "manc_ncut":
        return split.cost >= thr
    proxy = cut_cost(sub_adj, split.partition)
    mc = min_cut(sub_adj, mode=rule.mincut_mode, proxy_cut=proxy)
    if stats.total_weight <= 0:
        return True
    return mc / stats.total_weight >= thr


def recursive_ncut(
    matrix,
    formulation: str,
    rule: StoppingRule,
    walk: WalkConfig | None = None,
    num_candidates: int = NUM_CANDIDATES,
) -> SegmentationTree:
    """Grow the full segmentation tree for a walk or similarity matrix.

    Parameters
    ----------
    matrix : ndarray, AdjacencyMatrix or TransitionMatrix
        The final matrix to partition.  With ``formulation="random_walk"``
        a ``walk`` config with ``k > 1`` applies the k-step power here as a
        convenience; on the adjacency formulation the power must already
        have been applied to the walk matrix before similarity construction,
        so ``k > 1`` raises.
    formulation : {"adjacency", "random_walk"}
    rule : StoppingRule
    walk : WalkConfig, optional
    num_candidates : int
        Threshold candidates per split.

    Returns
    -------
    SegmentationTree
        Deterministic for fixed inputs; leaves are labeled ``0..K-1`` in
        preorder.  Nodes whose eigensolve fails become leaves marked
        ``spectral_failure`` rather than aborting the tree.
    """
    if formulation not in FORMULATIONS:
        raise ValueError(f"unknown formulation {formulation!r}; pick from {FORMULATIONS}")
    if isinstance(matrix, AdjacencyMatrix):
        mat = matrix.a
    elif isinstance(matrix, TransitionMatrix):
        mat = matrix.p
    else:
        mat = np.asarray(matrix)
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got {mat.shape}")
    if walk is not None and walk.k > 1:
        if formulation == "adjacency":
            raise ValueError(
                "k-step powers apply to the walk matrix before adjacency "
                "construction; pass the powered matrix instead"
            )
        mat = matrix_power(mat, walk.k)
    n = mat.shape[0]

    nodes: list[TreeNode] = []
    child_lists: dict[int, list] = {}
    stack = [(np.arange(n), -1)]
    while stack:
        indices, parent = stack.pop()
        nid = len(nodes)
        node = TreeNode(indices=indices)
        nodes.append(node)
        if parent >= 0:
            child_lists.setdefault(parent, []).append(nid)

        outcome = _evaluate_node(mat, indices, formulation, rule, num_candidates)
        if outcome["stop"]:
            node.stop_reason = outcome["reason"]
            node.split_cost = outcome.get("cost")
            node.rule_threshold = outcome.get("threshold")
            continue
        node.split_cost = outcome["cost"]
        node.rule_threshold = outcome.get("threshold")
        part = outcome["partition"]
        # push right side first so the left side is processed next (preorder)
        stack.append((indices[part.side_b], nid))
        stack.append((indices[part.side_a], nid))

    for pid, kids in child_lists.items():
        nodes[pid].children = tuple(kids)

    labels = np.full(n, -1, dtype=np.int64)
    k = 0
    for nd in nodes:
        if nd.children is None:
            labels[nd.indices] = k
            k += 1
    return SegmentationTree(n=n, nodes=nodes, leaf_labels=labels)


def _evaluate_node(mat, indices, formulation, rule, num_candidates):
    if indices.size < 2 * rule.min_segment_size:
        return {"stop": True, "reason": STOP_TOO_SMALL}

    if formulation == "adjacency":
        scored = mat[np.ix_(indices, indices)]
    else:
        sub_walk = restrict_renormalize(mat, indices)
        scored = 0.5 * (sub_walk + sub_walk.T)

    stats = graph_stats(scored)
    if stats.m == 0:
        return {"stop": True, "reason": STOP_EDGELESS}

    try:
        if formulation == "adjacency":
            fied = fiedler_symmetric(scored)
        else:
            fied = fiedler_stochastic(sub_walk)
        split = best_threshold_split(fied, scored, num_candidates)
    except SpectralError:
        return {"stop": True, "reason": STOP_SPECTRAL}

    threshold = rule.tau if rule.kind == "fixed_ncut" else manc_threshold(stats)
    if should_stop(rule, split, scored, stats):
        return {
            "stop": True,
            "reason": STOP_THRESHOLD,
            "cost": split.cost,
            "threshold": threshold,
        }
    return {
        "stop": False,
        "cost": split.cost,
        "threshold": threshold,
        "partition": split.partition,
    }

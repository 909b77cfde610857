"""walkcut: unsupervised segmentation by recursive normalised cuts on
self-attention random walks.

The pipeline: load per-resolution attention tensors, aggregate them into a
single row-stochastic walk matrix, optionally take a k-step power, build a
symmetric affinity graph (or stay in walk space), recursively bisect with
threshold-swept Fiedler vectors until a stopping rule fires, then paint
full-resolution label maps by cosine-matching pixels to segment prototypes.
"""

from .attention import (
    AttentionStack,
    TransitionMatrix,
    aggregate,
    bilinear_matrix,
    default_weights,
    load_stack,
    upsample_attention_map,
    validate_stack,
)
from .graph import (
    AdjacencyMatrix,
    Bipartition,
    DegeneratePartitionError,
    GraphStats,
    build_adjacency,
    cut_cost,
    graph_stats,
    manc_threshold,
    min_cut,
    ncut_cost,
)
from .metrics import (
    IGNORE_LABEL,
    ContingencyTable,
    MatchResult,
    MetricsReport,
    compute_metrics,
    contingency,
    evaluate_dataset,
    hungarian_match,
    oracle_merge,
)
from .partitioner import (
    SegmentationTree,
    StoppingRule,
    TreeNode,
    recursive_ncut,
    should_stop,
)
from .refine import (
    LabelMap,
    read_label_png,
    segment_prototypes,
    upsample_assign,
    write_label_png,
    write_overlay_png,
)
from .spectral import (
    ConvergenceError,
    DegenerateSpectrumError,
    FiedlerResult,
    SpectralError,
    SplitResult,
    ZeroDegreeError,
    best_threshold_split,
    fiedler_stochastic,
    fiedler_symmetric,
)
from .synth import (
    PlantedSpec,
    planted_labels,
    planted_stack,
    planted_transition,
    pooled_blocks,
    random_blocks,
)
from .tensor_store import (
    BadMagic,
    DuplicateImageId,
    ManifestEntry,
    ManifestError,
    TensorStoreError,
    TruncatedPayload,
    UnsupportedDtype,
    UnsupportedVersion,
    load_manifest,
    read_tensor,
    write_manifest,
    write_tensor,
)
from .walk import WalkConfig, matrix_power, restrict_renormalize

__version__ = "0.1.0"

__all__ = [
    "AttentionStack",
    "TransitionMatrix",
    "aggregate",
    "bilinear_matrix",
    "default_weights",
    "load_stack",
    "upsample_attention_map",
    "validate_stack",
    "AdjacencyMatrix",
    "Bipartition",
    "DegeneratePartitionError",
    "GraphStats",
    "build_adjacency",
    "cut_cost",
    "graph_stats",
    "manc_threshold",
    "min_cut",
    "ncut_cost",
    "IGNORE_LABEL",
    "ContingencyTable",
    "MatchResult",
    "MetricsReport",
    "compute_metrics",
    "contingency",
    "evaluate_dataset",
    "hungarian_match",
    "oracle_merge",
    "SegmentationTree",
    "StoppingRule",
    "TreeNode",
    "recursive_ncut",
    "should_stop",
    "LabelMap",
    "read_label_png",
    "segment_prototypes",
    "upsample_assign",
    "write_label_png",
    "write_overlay_png",
    "ConvergenceError",
    "DegenerateSpectrumError",
    "FiedlerResult",
    "SpectralError",
    "SplitResult",
    "ZeroDegreeError",
    "best_threshold_split",
    "fiedler_stochastic",
    "fiedler_symmetric",
    "PlantedSpec",
    "planted_labels",
    "planted_stack",
    "planted_transition",
    "pooled_blocks",
    "random_blocks",
    "BadMagic",
    "DuplicateImageId",
    "ManifestEntry",
    "ManifestError",
    "TensorStoreError",
    "TruncatedPayload",
    "UnsupportedDtype",
    "UnsupportedVersion",
    "load_manifest",
    "read_tensor",
    "write_manifest",
    "write_tensor",
    "WalkConfig",
    "matrix_power",
    "restrict_renormalize",
]

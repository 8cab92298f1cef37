"""Predict classifier generalization from latent geometry graphs.

Build k-nearest-neighbor similarity graphs over a model's hidden-layer
embeddings, measure how much the class labels vary along graph edges,
and reduce those measurements to the vr / wcv / vpm generalization
scores (optionally on mixup-augmented inputs). No validation set is
consulted anywhere.
"""

from .graph import (
    GraphConfig,
    LatentGraphBuilder,
    SparseGraph,
    build_lgg,
    combinatorial_laplacian,
    cosine_similarity,
    degree_normalize,
    knn_threshold,
    load_graph,
    median_heuristic_gamma,
    rbf_similarity,
    save_graph,
    symmetrize,
)
from .harness import (
    DEFAULT_ZOO,
    DataSpec,
    ZooModel,
    contrast_report,
    contrast_test,
    kendall_tau,
    run_zoo,
)
from .io import (
    ArrayFormatError,
    Dataset,
    ManifestError,
    MixedPool,
    load_manifest,
    one_hot,
    read_array_file,
    read_label_file,
    write_array_file,
)
from .mixup import MixupPlan, load_plan, make_plan, mix_rows, sample_beta, save_plan
from .refnet import (
    RefNet,
    RefNetClassifier,
    forward_with_taps,
    gaussian_blobs,
    generalization_gap,
    init_net,
    load_model,
    save_model,
    shuffle_labels,
    train_net,
)
from .rng import SplitMix64, graph_stream, mix_seed
from .scoring import (
    GeneralizationScorer,
    SampleShortfallWarning,
    ScorePreset,
    ScoreReport,
    run_score,
    sample_vertices,
    score_vpm,
    score_vr,
    score_wcv,
    sigma_for_layer,
    builtin_preset,
)
from .variation import label_variation, normalized_label_variation, total_edge_weight

__version__ = "0.1.0"

__all__ = [
    "ArrayFormatError",
    "DEFAULT_ZOO",
    "DataSpec",
    "Dataset",
    "GeneralizationScorer",
    "GraphConfig",
    "LatentGraphBuilder",
    "ManifestError",
    "MixedPool",
    "MixupPlan",
    "RefNet",
    "RefNetClassifier",
    "SampleShortfallWarning",
    "ScorePreset",
    "ScoreReport",
    "SparseGraph",
    "SplitMix64",
    "ZooModel",
    "build_lgg",
    "combinatorial_laplacian",
    "contrast_report",
    "contrast_test",
    "cosine_similarity",
    "degree_normalize",
    "forward_with_taps",
    "gaussian_blobs",
    "generalization_gap",
    "graph_stream",
    "init_net",
    "kendall_tau",
    "knn_threshold",
    "label_variation",
    "load_graph",
    "load_manifest",
    "load_model",
    "load_plan",
    "make_plan",
    "median_heuristic_gamma",
    "mix_rows",
    "mix_seed",
    "normalized_label_variation",
    "one_hot",
    "rbf_similarity",
    "read_array_file",
    "read_label_file",
    "run_score",
    "run_zoo",
    "sample_beta",
    "sample_vertices",
    "save_graph",
    "save_model",
    "save_plan",
    "score_vpm",
    "score_vr",
    "score_wcv",
    "shuffle_labels",
    "sigma_for_layer",
    "symmetrize",
    "builtin_preset",
    "total_edge_weight",
    "train_net",
    "write_array_file",
]

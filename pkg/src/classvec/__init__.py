"""Class-level embeddings from sparse layered activation vectors."""

__version__ = "0.1.0"

from .correlation import (
    GRAPH_MEASURES,
    HISTOGRAM_EDGES,
    IC_MEASURES,
    RhoDistribution,
    SweepEntry,
    evaluate_all,
    evaluate_class,
    layer_subset_sweep,
    rank_with_ties,
    spearman_rho,
)
from .equations import (
    DEFAULT_TOP_K,
    EquationResult,
    apply_difference,
    nearest_classes,
    solve_difference,
)
from .errors import (
    ClassVecError,
    CorrelationError,
    DisconnectedGraphError,
    EmptyDifferenceError,
    FormatError,
    ManifestError,
    ManifestMismatchError,
    TaxonomyError,
    UnknownClassError,
    UnknownSynsetError,
    ValidationError,
    ZeroVectorError,
)
from .manifold import (
    DistanceMatrix,
    EmbeddingCoordinates,
    NeighborGraph,
    classical_mds,
    geodesic_matrix,
    isomap,
    knn_graph,
)
from .pipeline import (
    AGGREGATION_MODES,
    DEFAULT_CONFIG,
    DISTANCE_METRICS,
    NORM_SCOPES,
    NORM_STAGES,
    ClassEmbedding,
    PipelineConfig,
    aggregate,
    build_class_embeddings,
    build_distance_matrix,
)
from .synthdata import GeneratorSpec, closed_form_cosine, generate
from .taxonomy import (
    SIMILARITY_MEASURES,
    ICTable,
    Taxonomy,
    jcn_sim,
    lch_sim,
    lin_sim,
    path_sim,
    res_sim,
    similarity,
    wup_sim,
)
from .vectors import (
    LayerManifest,
    LayerSpec,
    SparseActivationVector,
    apply_threshold,
    cosine_similarity,
    dot,
    euclidean_distance,
    l2_norm,
    normalize_by_layer,
    normalize_whole,
    restrict_to_groups,
    subtract,
)

__all__ = [
    "__version__",
    "ClassVecError",
    "CorrelationError",
    "DisconnectedGraphError",
    "EmptyDifferenceError",
    "FormatError",
    "ManifestError",
    "ManifestMismatchError",
    "TaxonomyError",
    "UnknownClassError",
    "UnknownSynsetError",
    "ValidationError",
    "ZeroVectorError",
    "LayerManifest",
    "LayerSpec",
    "SparseActivationVector",
    "apply_threshold",
    "cosine_similarity",
    "dot",
    "euclidean_distance",
    "l2_norm",
    "normalize_by_layer",
    "normalize_whole",
    "restrict_to_groups",
    "subtract",
    "DistanceMatrix",
    "EmbeddingCoordinates",
    "NeighborGraph",
    "classical_mds",
    "geodesic_matrix",
    "isomap",
    "knn_graph",
    "SIMILARITY_MEASURES",
    "ICTable",
    "Taxonomy",
    "jcn_sim",
    "lch_sim",
    "lin_sim",
    "path_sim",
    "res_sim",
    "similarity",
    "wup_sim",
    "AGGREGATION_MODES",
    "DEFAULT_CONFIG",
    "DISTANCE_METRICS",
    "NORM_SCOPES",
    "NORM_STAGES",
    "ClassEmbedding",
    "PipelineConfig",
    "aggregate",
    "build_class_embeddings",
    "build_distance_matrix",
    "GRAPH_MEASURES",
    "HISTOGRAM_EDGES",
    "IC_MEASURES",
    "RhoDistribution",
    "SweepEntry",
    "evaluate_all",
    "evaluate_class",
    "layer_subset_sweep",
    "rank_with_ties",
    "spearman_rho",
    "DEFAULT_TOP_K",
    "EquationResult",
    "apply_difference",
    "nearest_classes",
    "solve_difference",
    "GeneratorSpec",
    "closed_form_cosine",
    "generate",
]

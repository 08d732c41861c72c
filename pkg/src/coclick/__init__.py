"""Fuzzy co-clustering of clickstream data.

Users and pages are clustered separately (K-Means over fuzzy-similarity rows,
best of several restarts by Davies-Bouldin index) and the resulting blocks are
quantified with two relation-coefficient matrices.
"""

from .clustering import (
    ClusteringResult,
    DegenerateClusteringError,
    davies_bouldin,
    kmeans,
    kmeans_best_of,
)
from .cocluster import (
    CoClusterGrid,
    build_grid,
    relation_page_normalized,
    relation_user_normalized,
    top_interest,
)
from .fuzzymath import (
    FuzzySubsets,
    SimilarityMatrix,
    fuzzy_similarity,
    fuzzy_subsets,
    page_fuzzy_subsets,
    similarity_matrix,
    user_fuzzy_subsets,
)
from .ingest import (
    HitMatrix,
    LogTally,
    PageCatalog,
    ParseError,
    filter_users,
    parse_common_log_file,
    parse_sequence_file,
)
from .pipeline import PipelineConfig, RunManifest, run_pipeline, validate_config

__version__ = "0.1.0"

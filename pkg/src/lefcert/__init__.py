"""Certified robustness for few-shot classification over foundation-model embeddings.

The package scores queries with a trimmed-mean hybrid of feature and text
distances, derives worst-case score bounds under support-set poisoning, and
issues per-query and collective certificates that a brute-force oracle can
cross-check on small instances.
"""

from .bounds import (
    BoundTable,
    build_bound_table,
    closed_form_bounds,
    hoeffding_deviation,
    lipschitz_constant,
    traversal_bounds,
)
from .certify import Certificate, certify_episode, certify_sample
from .collective import (
    CollectiveResult,
    collective_certify,
    enumerate_allocations,
    query_breaks_under,
)
from .core import (
    CertConfig,
    Embedding,
    Episode,
    Metric,
    ScoreBundle,
    ThreatKind,
    ThreatModel,
    validate_episode,
)
from .distance import cosine_distance, l2_distance, metric_info, normalize
from .errors import ConfigError, DataError, FileError, LefcertError
from .harness import (
    EmbeddingPool,
    RunMetrics,
    SweepRecord,
    generate_synthetic_pool,
    run_collective_protocol,
    run_default_protocol,
    sample_episode,
    sweep,
)
from .io import (
    EmbeddingFileData,
    EmbeddingRecord,
    load_episode,
    load_pool,
    read_embeddings,
    save_episode,
    save_pool,
    write_embeddings,
    write_results,
    write_sweep_csv,
)
from .oracle import (
    ExtremalScores,
    InstanceCheck,
    OracleReport,
    check_instance,
    draw_instance,
    extremal_scores,
    oracle_check,
)
from .scoring import build_score_bundle, class_score, predict, scores_from_bundle, trimmed_sum
from .smoothing import NoisySampleSet, dual_constraint_params, smoothed_embedding

__version__ = "0.1.0"

__all__ = [
    "BoundTable",
    "CertConfig",
    "Certificate",
    "CollectiveResult",
    "ConfigError",
    "DataError",
    "Embedding",
    "EmbeddingFileData",
    "EmbeddingPool",
    "EmbeddingRecord",
    "Episode",
    "ExtremalScores",
    "FileError",
    "InstanceCheck",
    "LefcertError",
    "Metric",
    "NoisySampleSet",
    "OracleReport",
    "RunMetrics",
    "ScoreBundle",
    "SweepRecord",
    "ThreatKind",
    "ThreatModel",
    "build_bound_table",
    "build_score_bundle",
    "certify_episode",
    "certify_sample",
    "check_instance",
    "class_score",
    "closed_form_bounds",
    "collective_certify",
    "cosine_distance",
    "draw_instance",
    "dual_constraint_params",
    "enumerate_allocations",
    "extremal_scores",
    "generate_synthetic_pool",
    "hoeffding_deviation",
    "l2_distance",
    "lipschitz_constant",
    "load_episode",
    "load_pool",
    "metric_info",
    "normalize",
    "oracle_check",
    "predict",
    "query_breaks_under",
    "read_embeddings",
    "run_collective_protocol",
    "run_default_protocol",
    "sample_episode",
    "save_episode",
    "save_pool",
    "scores_from_bundle",
    "smoothed_embedding",
    "sweep",
    "traversal_bounds",
    "trimmed_sum",
    "validate_episode",
    "write_embeddings",
    "write_results",
    "write_sweep_csv",
]

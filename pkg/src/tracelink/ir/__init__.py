from .engines import (
    DEFAULT_THRESHOLD_METHODS,
    TECHNIQUES,
    SimilarityMatrix,
    TechniqueConfig,
    combine,
    compute_all,
    js_similarity,
    lda_similarity,
    lsi_similarity,
    min_max_normalize,
    nmf_similarity,
    serialize_matrices,
    vsm_similarity,
)
from .lda import lda_topic_distributions
from .nmf import nmf_factorize

__all__ = [
    "DEFAULT_THRESHOLD_METHODS",
    "TECHNIQUES",
    "SimilarityMatrix",
    "TechniqueConfig",
    "combine",
    "compute_all",
    "js_similarity",
    "lda_similarity",
    "lda_topic_distributions",
    "lsi_similarity",
    "min_max_normalize",
    "nmf_factorize",
    "nmf_similarity",
    "serialize_matrices",
    "vsm_similarity",
]

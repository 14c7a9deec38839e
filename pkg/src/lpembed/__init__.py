"""Isometric embeddings of finite subsets of l_p.

Rank tests for the pairwise-distance map, local realization of distance
matrices, dimension folding, and fixed-point embeddings into norms that are
(1 + delta)-equivalent to l_p^N.
"""

from .core import (
    EXHAUSTIVE,
    GREEDY,
    PTH_POWER,
    RAW,
    Configuration,
    PermutationMap,
    RankReport,
    UpperTriangularMatrix,
    eval_F,
    eval_F_tilde,
    gram_schmidt_rotate,
    has_property_K,
    in_G,
    jacobian_F,
    jacobian_signs_p1,
    make_H_configuration,
    normalize_to_R,
    rank_test,
)
from .embedding import (
    LINEAR_DISTORTION,
    LP_EXACT,
    WEIGHTED_P,
    EmbeddingResult,
    NormOracle,
    embed_into_norm,
    make_norm_oracle,
    phi_map,
    verify_embedding,
)
from .errors import (
    CapacityError,
    DegenerateInputError,
    DimensionError,
    FoldingFailureError,
    LinearDependenceError,
    NonConvergenceError,
    PreconditionError,
)
from .experiments import LineProbe, SampleCampaign, line_probe_determinant, property_k_survey, sample_G_density
from .realization import (
    RealizationResult,
    SolveOptions,
    estimate_perturbation_radius,
    realize_distance_matrix,
    realize_perturbation,
    reduce_dimension,
)

__version__ = "0.1.0"

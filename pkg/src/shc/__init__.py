"""Statistical significance of hierarchical clustering (SHC).

Monte Carlo tests at dendrogram nodes against a Gaussian null, combined with
a root-down procedure that controls the family-wise error rate.
"""
from .engine import (
    NodeTestResult,
    PValueKind,
    ShcConfig,
    ShcReport,
    ShcVariant,
    count_k_hat,
    gaussian_fit_p,
    node_test,
    run_shc,
)
from .hclust import (
    ClusterAssignment,
    DataMatrix,
    Dendrogram,
    LinkageKind,
    agglomerate,
    cut_k,
    node_split,
    pairwise_sq_euclidean,
)
from .index import CiValue, ClusterIndexKind, kmeans_two_ci, linkage_index, stronger_than, two_means_ci
from .null import EigenMethod, NullModel, estimate_sigma_b_sq, fit_null, sample_cov_eigenvalues, sample_null

__version__ = "0.1.0"

"""Per-node Monte Carlo tests and the FWER-controlling traversal."""
from __future__ import annotations

import enum
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from .errors import InvalidConfig, NodeTooSmall, TooFewObservations
from .hclust import (
    ClusterAssignment,
    Dendrogram,
    LinkageKind,
    _sq_dist_from_gram,
    agglomerate_dissimilarity,
    as_data_matrix,
    pairwise_sq_euclidean,
)
from .index import CiValue, ClusterIndexKind, kmeans_two_ci, stronger_than, two_means_ci
from .null import EigenMethod, fit_null, sample_null
from .rng import STREAM_KMEANS, STREAM_NULL, make_rng, seed_sequence

P_FLOOR = np.finfo(float).tiny
P_CEIL = np.nextafter(1.0, 0.0)


class ShcVariant(str, enum.Enum):
    SHC1 = "shc1"
    SHC2_LINKAGE = "shc2-l"
    SHC2_TWO_MEANS = "shc2-2"

    @property
    def index_kind(self) -> ClusterIndexKind:
        if self is ShcVariant.SHC2_LINKAGE:
            return ClusterIndexKind.LINKAGE_VALUE
        return ClusterIndexKind.TWO_MEANS_CI


class PValueKind(str, enum.Enum):
    EMPIRICAL = "empirical"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class ShcConfig:
    """Settings for one SHC run.

    ``low_dim_sample`` switches a node to the unthresholded sample spectrum
    whenever it has more observations than variables; thresholding is only
    applied in the p > n regime.
    """

    variant: ShcVariant = ShcVariant.SHC2_TWO_MEANS
    n_sim: int = 100
    alpha: float = 0.05
    n_min: int = 10
    eigen_method: EigenMethod = EigenMethod.SOFT
    linkage: LinkageKind = LinkageKind.WARD
    seed: int = 0
    p_value: PValueKind = PValueKind.EMPIRICAL
    low_dim_sample: bool = True
    kmeans_restarts: int = 10
    kmeans_max_iter: int = 100
    n_jobs: int | None = None

    def __post_init__(self):
        for name, kind in (("variant", ShcVariant), ("eigen_method", EigenMethod),
                           ("linkage", LinkageKind), ("p_value", PValueKind)):
            object.__setattr__(self, name, kind(getattr(self, name)))
        if self.n_sim < 1:
            raise InvalidConfig("n_sim must be >= 1")
        if not 0 < self.alpha < 1:
            raise InvalidConfig("alpha must lie in (0, 1)")
        if self.n_min < 3:
            raise InvalidConfig("n_min must be >= 3")

    def to_dict(self) -> dict:
        """Settings that affect results; ``n_jobs`` is deliberately left out."""
        out = {}
        for name in self.__dataclass_fields__:
            if name == "n_jobs":
                continue
            value = getattr(self, name)
            out[name] = value.value if isinstance(value, enum.Enum) else value
        return out


@dataclass(frozen=True)
class NodeTestResult:
    node: int
    n_j: int
    observed: CiValue | None
    null_indices: tuple
    p_empirical: float | None
    p_gaussian: float | None
    alpha_star: float
    tested: bool
    rejected: bool = False
    degenerate_nulls: bool = False

    def p_value(self, kind: PValueKind) -> float | None:
        return self.p_empirical if PValueKind(kind) is PValueKind.EMPIRICAL else self.p_gaussian


@dataclass(frozen=True)
class ShcReport:
    dendrogram: Dendrogram
    results: dict
    significant: tuple
    k_hat: int
    config: ShcConfig = field(default_factory=ShcConfig)
    row_labels: tuple | None = None

    def assignment(self) -> ClusterAssignment:
        """Clusters obtained by cutting the tree at every significant node."""
        return cut_at_nodes(self.dendrogram, self.significant)


def cut_at_nodes(dend: Dendrogram, nodes) -> ClusterAssignment:
    nodes = set(nodes)
    labels = np.empty(dend.n_leaves, dtype=int)
    stack, k = [dend.root], 0
    while stack:
        v = stack.pop()
        if v in nodes:
            stack.extend(reversed(dend.children(v)))
        else:
            labels[dend.leaves(v)] = k
            k += 1
    return ClusterAssignment(labels, k)


def count_k_hat(report: ShcReport) -> int:
    return len(report.significant) + 1


def alpha_star(alpha: float, n_j: int, n_total: int) -> float:
    return alpha * (n_j - 1) / (n_total - 1)


def empirical_p(null_indices, observed: CiValue) -> float:
    """Fraction of null indices indicating strictly stronger clustering."""
    null = np.asarray(null_indices, dtype=float)
    if observed.kind.smaller_is_stronger:
        stronger = np.count_nonzero(null < observed.value)
    else:
        stronger = np.count_nonzero(null > observed.value)
    return stronger / null.size


def gaussian_fit_p(null_indices, observed: CiValue) -> float:
    """Tail probability of ``observed`` under a normal fitted to the nulls.

    Lower tail for the 2-means CI, upper tail for the linkage value. When the
    nulls have zero spread the result is 0 if ``observed`` is stronger than
    their common value and 1 otherwise.
    """
    null = np.asarray(null_indices, dtype=float)
    mean = null.mean()
    sd = null.std(ddof=1) if null.size > 1 else 0.0
    if not sd > 0:
        return 0.0 if stronger_than(observed, CiValue(mean, observed.kind)) else 1.0
    z = (observed.value - mean) / sd
    p = norm.cdf(z) if observed.kind.smaller_is_stronger else norm.sf(z)
    return float(np.clip(p, P_FLOOR, P_CEIL))


def worker_count(config: ShcConfig) -> int:
    n = config.n_jobs or os.cpu_count() or 1
    cap = os.environ.get("SHC_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _ci_from_sq_dist(D: np.ndarray, left: np.ndarray) -> float:
    """2-means CI from pairwise squared distances (SS = sum D / 2n per group)."""
    n = D.shape[0]
    mask = np.zeros(n, dtype=bool)
    mask[left] = True
    tss = D.sum() / (2 * n)
    within = 0.0
    for part in (mask, ~mask):
        within += D[np.ix_(part, part)].sum() / (2 * part.sum())
    return min(within / tss, 1.0)


def _null_eigenvalues(X: np.ndarray, config: ShcConfig) -> np.ndarray:
    method = config.eigen_method
    n, p = X.shape
    if config.low_dim_sample and n > p:
        method = EigenMethod.SAMPLE
    return fit_null(X, method).eigenvalues


def _simulate_index(eig, n_j, config, node, b) -> float:
    X0 = sample_null(eig, n_j, make_rng(config.seed, STREAM_NULL, node, b))
    if config.variant is ShcVariant.SHC1:
        ci, _ = kmeans_two_ci(X0, config.kmeans_restarts, config.kmeans_max_iter,
                              seed=seed_sequence(config.seed, STREAM_KMEANS, node, b))
        return ci.value
    D = _sq_dist_from_gram(X0 @ X0.T)
    dend = agglomerate_dissimilarity(D, config.linkage)
    if config.variant is ShcVariant.SHC2_LINKAGE:
        return dend.height(dend.root)
    left = dend.leaves(dend.children(dend.root)[0])
    return _ci_from_sq_dist(D, left)


def _observed_index(X, left_mask, config, node, height) -> CiValue:
    if config.variant is ShcVariant.SHC2_LINKAGE:
        if height is None:
            D = pairwise_sq_euclidean(X)
            dend = agglomerate_dissimilarity(D, config.linkage)
            height = dend.height(dend.root)
        return CiValue(float(height), ClusterIndexKind.LINKAGE_VALUE)
    split = np.where(left_mask, 0, 1)
    if config.variant is ShcVariant.SHC2_TWO_MEANS:
        return two_means_ci(X, split)
    ward = split if config.linkage is LinkageKind.WARD else None
    ci, _ = kmeans_two_ci(X, config.kmeans_restarts, config.kmeans_max_iter,
                          seed=seed_sequence(config.seed, STREAM_KMEANS, node), ward_labels=ward)
    return ci


def node_test(data, split, config: ShcConfig, *, node: int = 0, n_total: int | None = None,
              height: float | None = None, known_eigenvalues=None) -> NodeTestResult:
    """Monte Carlo test of one node; the rejection decision is left to the caller.

    ``data`` holds only the node's observations and ``split`` gives the row
    indices of its left and right subtrees. ``height`` is the node's merge
    height (recomputed if omitted). ``known_eigenvalues`` replaces the
    estimated null spectrum, for calibration checks with a known covariance.
    """
    X = as_data_matrix(data).values
    left, right = (np.asarray(s, dtype=int) for s in split)
    n_j = len(left) + len(right)
    if n_j != X.shape[0]:
        raise ValueError("split does not cover the node's observations")
    if n_j < config.n_min:
        raise NodeTooSmall(f"node {node} has {n_j} < n_min = {config.n_min} observations")
    n_total = n_j if n_total is None else n_total
    left_mask = np.zeros(n_j, dtype=bool)
    left_mask[left] = True

    observed = _observed_index(X, left_mask, config, node, height)
    if known_eigenvalues is not None:
        eig = np.asarray(known_eigenvalues, dtype=float)
    else:
        eig = _null_eigenvalues(X, config)

    sims = range(config.n_sim)
    workers = worker_count(config)
    if workers == 1:
        null = [_simulate_index(eig, n_j, config, node, b) for b in sims]
    else:
        with ThreadPoolExecutor(workers) as pool:
            null = list(pool.map(lambda b: _simulate_index(eig, n_j, config, node, b), sims))
    null = np.asarray(null)

    sd = null.std(ddof=1) if null.size > 1 else 0.0
    return NodeTestResult(
        node=node,
        n_j=n_j,
        observed=observed,
        null_indices=tuple(null.tolist()),
        p_empirical=empirical_p(null, observed),
        p_gaussian=gaussian_fit_p(null, observed),
        alpha_star=alpha_star(config.alpha, n_j, n_total),
        tested=True,
        degenerate_nulls=not sd > 0,
    )


def run_shc(data, config: ShcConfig | None = None, *, known_eigenvalues=None) -> ShcReport:
    """Cluster ``data`` and test nodes from the root down with FWER control.

    A node is rejected when its p-value falls below
    ``alpha * (n_j - 1) / (N - 1)`` and its parent was rejected (the root has
    no parent). Nodes smaller than ``n_min`` are recorded as untested.
    """
    config = config or ShcConfig()
    data = as_data_matrix(data)
    n = data.n
    if n < max(4, config.n_min):
        raise TooFewObservations(f"need at least {max(4, config.n_min)} observations, got {n}")
    X = data.values
    dend = agglomerate_dissimilarity(pairwise_sq_euclidean(X), config.linkage)

    results, significant = {}, []
    queue = deque([dend.root])
    while queue:
        node = queue.popleft()
        members = dend.leaves(node)
        n_j = len(members)
        if n_j < config.n_min:
            results[node] = NodeTestResult(node, n_j, None, (), None, None,
                                           alpha_star(config.alpha, n_j, n), tested=False)
            continue
        left_leaves = dend.leaves(dend.children(node)[0])
        left = np.searchsorted(members, left_leaves)
        right = np.setdiff1d(np.arange(n_j), left)
        res = node_test(X[members], (left, right), config, node=node, n_total=n,
                        height=dend.height(node), known_eigenvalues=known_eigenvalues)
        rejected = res.p_value(config.p_value) < res.alpha_star
        results[node] = replace(res, rejected=rejected)
        if rejected:
            significant.append(node)
            queue.extend(c for c in dend.children(node) if dend.is_internal(c))
    k_hat = len(significant) + 1
    return ShcReport(dend, results, tuple(significant), k_hat, config, data.row_labels)

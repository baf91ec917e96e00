"""Cluster-strength indices: the 2-means cluster index and the linkage value."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateData, KindMismatch, TooFewObservations
from .hclust import ClusterAssignment, Dendrogram, agglomerate, as_data_matrix, cut_k
from .rng import make_rng


class ClusterIndexKind(str, enum.Enum):
    TWO_MEANS_CI = "two_means_ci"
    LINKAGE_VALUE = "linkage_value"

    @property
    def smaller_is_stronger(self) -> bool:
        return self is ClusterIndexKind.TWO_MEANS_CI


@dataclass(frozen=True)
class CiValue:
    value: float
    kind: ClusterIndexKind

    @property
    def direction(self) -> str:
        return "smaller" if self.kind.smaller_is_stronger else "larger"


def stronger_than(a: CiValue, b: CiValue) -> bool:
    """True when ``a`` indicates strictly stronger clustering than ``b``."""
    if a.kind != b.kind:
        raise KindMismatch(f"cannot compare {a.kind.value} with {b.kind.value}")
    if a.kind.smaller_is_stronger:
        return a.value < b.value
    return a.value > b.value


def _ci_from_labels(X: np.ndarray, labels: np.ndarray, tss: float) -> float:
    within = 0.0
    for g in (0, 1):
        part = X[labels == g]
        within += float(((part - part.mean(axis=0)) ** 2).sum())
    return min(within / tss, 1.0)


def _total_ss(X: np.ndarray) -> float:
    return float(((X - X.mean(axis=0)) ** 2).sum())


def two_means_ci(data, assignment: ClusterAssignment | np.ndarray) -> CiValue:
    """Within-cluster over total sum of squares for a two-cluster partition."""
    X = as_data_matrix(data).values
    labels = assignment.labels if isinstance(assignment, ClusterAssignment) else np.asarray(assignment)
    if labels.shape != (X.shape[0],) or set(np.unique(labels)) != {0, 1}:
        raise ValueError("assignment must label every row 0 or 1 with both clusters non-empty")
    tss = _total_ss(X)
    if tss <= 0:
        raise DegenerateData("total sum of squares is zero")
    return CiValue(_ci_from_labels(X, labels, tss), ClusterIndexKind.TWO_MEANS_CI)


def linkage_index(dend: Dendrogram, node: int) -> CiValue:
    return CiValue(dend.height(node), ClusterIndexKind.LINKAGE_VALUE)


class _GramState:
    """Cluster sums kept through the Gram matrix so moves cost O(n), not O(np).

    ``xs[:, g]`` holds x_i . S_g and ``ss[g]`` holds |S_g|^2, where S_g is
    the coordinate sum of cluster g.
    """

    def __init__(self, K, labels):
        self.K = K
        self.labels = labels.copy()
        onehot = np.stack([self.labels == 0, self.labels == 1], axis=1).astype(float)
        self.counts = onehot.sum(axis=0)
        self.xs = K @ onehot
        self.ss = np.einsum("ig,ig->g", onehot, self.xs)

    def sq_dist_to_centers(self):
        n = np.maximum(self.counts, 1.0)
        return np.diag(self.K)[:, None] - 2.0 * self.xs / n + self.ss / n ** 2

    def move(self, i, to):
        frm = self.labels[i]
        col = self.K[:, i]
        self.ss[frm] += -2.0 * self.xs[i, frm] + self.K[i, i]
        self.ss[to] += 2.0 * self.xs[i, to] + self.K[i, i]
        self.xs[:, frm] -= col
        self.xs[:, to] += col
        self.counts[frm] -= 1
        self.counts[to] += 1
        self.labels[i] = to


def _lloyd(K, labels, max_iter):
    """Two-cluster Lloyd iterations until the assignment stops changing."""
    for _ in range(max_iter):
        state = _GramState(K, labels)
        if state.counts.min() == 0:
            labels = _reseed_empty(state, int(np.argmin(state.counts)))
            state = _GramState(K, labels)
        new = np.argmin(state.sq_dist_to_centers(), axis=1)
        if np.array_equal(new, labels):
            break
        labels = new
    state = _GramState(K, labels)
    if state.counts.min() == 0:
        labels = _reseed_empty(state, int(np.argmin(state.counts)))
    return labels


def _hartigan(K, labels, max_moves):
    """Single-point transfers that lower the within-cluster sum of squares.

    Lloyd can stop at a partition where moving one point still helps; the
    exact change from moving x out of cluster a into b is
    n_b/(n_b+1)|x-c_b|^2 - n_a/(n_a-1)|x-c_a|^2.
    """
    state = _GramState(K, labels)
    rows = np.arange(K.shape[0])
    for _ in range(max_moves):
        d2 = state.sq_dist_to_centers()
        own, other = state.labels, 1 - state.labels
        n_own, n_other = state.counts[own], state.counts[other]
        with np.errstate(divide="ignore", invalid="ignore"):
            leave = np.where(n_own > 1, n_own / (n_own - 1) * d2[rows, own], -np.inf)
        gain = leave - n_other / (n_other + 1) * d2[rows, other]
        i = int(np.argmax(gain))
        if not gain[i] > 1e-12 * max(1.0, leave[i]):
            break
        state.move(i, other[i])
    return state.labels


def _reseed_empty(state, empty):
    far = int(np.argmax(state.sq_dist_to_centers()[:, 1 - empty]))
    labels = state.labels.copy()
    labels[far] = empty
    return labels


def _plusplus_seed(K, rng):
    n = K.shape[0]
    diag = np.diag(K)
    first = int(rng.integers(n))
    d2 = np.maximum(diag + diag[first] - 2.0 * K[:, first], 0.0)
    total = d2.sum()
    second = int(rng.choice(n, p=d2 / total)) if total > 0 else int(rng.integers(n))
    score = -2.0 * K[:, [first, second]] + diag[[first, second]]
    labels = np.argmin(score, axis=1)
    labels[first], labels[second] = 0, 1
    return labels


def kmeans_two_ci(data, restarts: int = 10, max_iter: int = 100, seed=0,
                  ward_labels: np.ndarray | None = None) -> tuple[CiValue, ClusterAssignment]:
    """Approximate the optimal 2-means CI with restarted Lloyd iterations,
    each finished by single-point Hartigan transfers.

    One run starts from the root split of Ward's clustering (pass
    ``ward_labels`` to reuse a split already computed); ``restarts`` more
    start from k-means++ seedings. Restart ``r`` draws from its own child
    stream of ``seed``, so adding restarts never worsens the result.
    """
    X = as_data_matrix(data).values
    n = X.shape[0]
    if n < 2:
        raise TooFewObservations("2-means needs at least 2 observations")
    X = X - X.mean(axis=0)
    tss = _total_ss(X)
    if tss <= 0:
        raise DegenerateData("total sum of squares is zero")
    if ward_labels is None:
        ward_labels = cut_k(agglomerate(X), 2).labels
    K = X @ X.T
    starts = [np.asarray(ward_labels)]
    starts += [_plusplus_seed(K, make_rng(seed, r)) for r in range(restarts)]

    best_ci, best = np.inf, None
    for start in starts:
        labels = _hartigan(K, _lloyd(K, start.copy(), max_iter), max_iter * n)
        ci = _ci_from_labels(X, labels, tss)
        if ci < best_ci:
            best_ci, best = ci, labels
    # canonical labelling: observation 0 is in cluster 0
    if best[0] == 1:
        best = 1 - best
    return CiValue(best_ci, ClusterIndexKind.TWO_MEANS_CI), ClusterAssignment(best, 2)

"""Agglomerative hierarchical clustering on squared Euclidean dissimilarity.

Leaves are numbered ``0..N-1``; the internal node created by the ``i``-th
merge (0-based) gets id ``N + i``, so the root is always ``2N - 2``.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidConfig, InvalidData, InvalidK, NotInternal, TooFewObservations


class LinkageKind(str, enum.Enum):
    WARD = "ward"
    SINGLE = "single"
    COMPLETE = "complete"
    AVERAGE = "average"


@dataclass(frozen=True)
class DataMatrix:
    """N observations (rows) by p variables (columns), optionally labelled."""

    values: np.ndarray
    row_labels: tuple[str, ...] | None = None
    col_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise InvalidData(f"expected a non-empty 2-d matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidData("matrix contains NaN or infinite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        n, p = values.shape
        if self.row_labels is not None:
            rows = tuple(str(r) for r in self.row_labels)
            if len(rows) != n:
                raise InvalidData(f"{len(rows)} row labels for {n} rows")
            if len(set(rows)) != n:
                raise InvalidData("row labels are not unique")
            object.__setattr__(self, "row_labels", rows)
        if self.col_labels is not None:
            cols = tuple(str(c) for c in self.col_labels)
            if len(cols) != p:
                raise InvalidData(f"{len(cols)} column labels for {p} columns")
            object.__setattr__(self, "col_labels", cols)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def subset(self, rows) -> "DataMatrix":
        rows = np.asarray(rows, dtype=int)
        labels = None
        if self.row_labels is not None:
            labels = tuple(self.row_labels[i] for i in rows)
        return DataMatrix(self.values[rows], labels, self.col_labels)


def as_data_matrix(data) -> DataMatrix:
    if isinstance(data, DataMatrix):
        return data
    return DataMatrix(np.asarray(data, dtype=float))


class Merge(NamedTuple):
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        if labels.ndim != 1 or np.any(labels < 0) or np.any(labels >= self.k):
            raise InvalidK("labels out of range")
        if len(np.unique(labels)) != self.k:
            raise InvalidK("every cluster must be non-empty")
        object.__setattr__(self, "labels", labels)

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)


@dataclass(frozen=True)
class Dendrogram:
    n_leaves: int
    merges: tuple[Merge, ...]
    _parent: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        merges = tuple(Merge(int(a), int(b), float(h), int(s)) for a, b, h, s in self.merges)
        object.__setattr__(self, "merges", merges)
        if len(merges) != self.n_leaves - 1:
            raise InvalidData(f"{len(merges)} merges for {self.n_leaves} leaves")
        parent = {}
        for i, m in enumerate(merges):
            node = self.n_leaves + i
            for child in (m.left, m.right):
                if child >= node or child in parent:
                    raise InvalidData(f"node {child} used illegally in merge {i}")
                parent[child] = node
            if m.size != self.size(m.left) + self.size(m.right):
                raise InvalidData(f"size mismatch at merge {i}")
        object.__setattr__(self, "_parent", parent)

    @property
    def root(self) -> int:
        return 2 * self.n_leaves - 2

    @property
    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges])

    def is_internal(self, node: int) -> bool:
        return self.n_leaves <= node <= self.root

    def _merge(self, node: int) -> Merge:
        if not self.is_internal(node):
            raise NotInternal(f"node {node} is not an internal node")
        return self.merges[node - self.n_leaves]

    def children(self, node: int) -> tuple[int, int]:
        m = self._merge(node)
        return m.left, m.right

    def height(self, node: int) -> float:
        return self._merge(node).height

    def size(self, node: int) -> int:
        if 0 <= node < self.n_leaves:
            return 1
        return self._merge(node).size

    def parent(self, node: int) -> int | None:
        return self._parent.get(node)

    def leaves(self, node: int) -> np.ndarray:
        """Sorted leaf ids under ``node``."""
        if 0 <= node < self.n_leaves:
            return np.array([node])
        out, stack = [], [node]
        while stack:
            v = stack.pop()
            if v < self.n_leaves:
                out.append(v)
            else:
                stack.extend(self.children(v))
        return np.sort(np.array(out))

    def breadth_first(self, start: int | None = None):
        """Internal nodes in breadth-first order, left child before right."""
        queue = deque([self.root if start is None else start])
        while queue:
            v = queue.popleft()
            if self.is_internal(v):
                yield v
                queue.extend(self.children(v))

    def leaf_order(self) -> list[int]:
        """Left-to-right leaf order for drawing without crossings."""
        order, stack = [], [self.root]
        while stack:
            v = stack.pop()
            if v < self.n_leaves:
                order.append(v)
            else:
                left, right = self.children(v)
                stack.extend((right, left))
        return order


def pairwise_sq_euclidean(data) -> np.ndarray:
    """N x N matrix of squared Euclidean distances between rows."""
    X = as_data_matrix(data).values
    X = X - X.mean(axis=0)
    return _sq_dist_from_gram(X @ X.T)


def _sq_dist_from_gram(G: np.ndarray) -> np.ndarray:
    sq = np.diag(G)
    D = sq[:, None] + sq[None, :] - 2.0 * G
    D = np.triu(D, 1)
    np.maximum(D, 0.0, out=D)
    return D + D.T


def agglomerate(data, linkage: LinkageKind | str = LinkageKind.WARD,
                dissimilarity: str = "sqeuclidean") -> Dendrogram:
    if dissimilarity != "sqeuclidean":
        raise InvalidConfig(f"unsupported dissimilarity {dissimilarity!r}")
    data = as_data_matrix(data)
    if data.n < 2:
        raise TooFewObservations("agglomeration needs at least 2 observations")
    return agglomerate_dissimilarity(pairwise_sq_euclidean(data), linkage)


def agglomerate_dissimilarity(D: np.ndarray, linkage: LinkageKind | str = LinkageKind.WARD) -> Dendrogram:
    """Cluster from a precomputed squared-Euclidean dissimilarity matrix.

    Uses the Lance-Williams update.  When several pairs attain the minimum,
    the pair with the lexicographically smallest (min node id, max node id)
    is merged.
    """
    linkage = LinkageKind(linkage)
    n = D.shape[0]
    if n < 2:
        raise TooFewObservations("agglomeration needs at least 2 observations")
    D = np.array(D, dtype=float, copy=True)
    np.fill_diagonal(D, np.inf)
    node_of = np.arange(n)
    sizes = np.ones(n)
    merges = []
    for step in range(n - 1):
        row_min = D.min(axis=1)
        h = row_min.min()
        rows = np.flatnonzero(row_min == h)
        if len(rows) == 2:
            i, j = rows
        else:
            i, j = _break_tie(D, rows, h, node_of)
        if node_of[i] > node_of[j]:
            i, j = j, i
        ni, nj = sizes[i], sizes[j]
        if linkage is LinkageKind.WARD:
            nk = sizes
            new = ((ni + nk) * D[i] + (nj + nk) * D[j] - nk * h) / (ni + nj + nk)
        elif linkage is LinkageKind.SINGLE:
            new = np.minimum(D[i], D[j])
        elif linkage is LinkageKind.COMPLETE:
            new = np.maximum(D[i], D[j])
        else:
            new = (ni * D[i] + nj * D[j]) / (ni + nj)
        merges.append(Merge(int(node_of[i]), int(node_of[j]), float(h), int(ni + nj)))
        # the merged cluster lives in slot i; slot j is retired
        D[i, :] = new
        D[:, i] = new
        D[j, :] = np.inf
        D[:, j] = np.inf
        D[i, i] = np.inf
        node_of[i] = n + step
        sizes[i] = ni + nj
    return Dendrogram(n, tuple(merges))


def _break_tie(D, rows, h, node_of):
    pairs = []
    for r in rows:
        for c in np.flatnonzero(D[r] == h):
            a, b = sorted((node_of[r], node_of[c]))
            pairs.append((a, b, r, c))
    _, _, i, j = min(pairs)
    return i, j


def linkage_between(D: np.ndarray, a: Sequence[int], b: Sequence[int],
                    linkage: LinkageKind | str = LinkageKind.WARD) -> float:
    """Linkage value between row sets ``a`` and ``b`` of a squared-distance matrix."""
    linkage = LinkageKind(linkage)
    a, b = np.asarray(a), np.asarray(b)
    cross = D[np.ix_(a, b)]
    if linkage is LinkageKind.SINGLE:
        return float(cross.min())
    if linkage is LinkageKind.COMPLETE:
        return float(cross.max())
    if linkage is LinkageKind.AVERAGE:
        return float(cross.mean())
    na, nb = len(a), len(b)
    # ||mean_a - mean_b||^2 written purely in terms of pairwise distances
    gap = cross.mean() - 0.5 * D[np.ix_(a, a)].mean() - 0.5 * D[np.ix_(b, b)].mean()
    return float(2.0 * na * nb / (na + nb) * max(gap, 0.0))


def cut_k(dend: Dendrogram, k: int) -> ClusterAssignment:
    """Partition into ``k`` clusters by undoing the last ``k - 1`` merges."""
    n = dend.n_leaves
    if not 1 <= k <= n:
        raise InvalidK(f"k must be in [1, {n}], got {k}")
    owner = list(range(2 * n - 1))

    def find(v):
        while owner[v] != v:
            owner[v] = owner[owner[v]]
            v = owner[v]
        return v

    for i, m in enumerate(dend.merges[: n - k]):
        owner[m.left] = n + i
        owner[m.right] = n + i
    roots = [find(leaf) for leaf in range(n)]
    relabel: dict[int, int] = {}
    labels = np.array([relabel.setdefault(r, len(relabel)) for r in roots])
    return ClusterAssignment(labels, k)


def node_split(dend: Dendrogram, node: int) -> tuple[np.ndarray, np.ndarray]:
    left, right = dend.children(node)
    return dend.leaves(left), dend.leaves(right)

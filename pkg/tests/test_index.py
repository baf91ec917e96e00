import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from shc.errors import DegenerateData, KindMismatch
from shc.hclust import ClusterAssignment, agglomerate, cut_k
from shc.index import CiValue, ClusterIndexKind, kmeans_two_ci, linkage_index, stronger_than, two_means_ci

from conftest import random_orthogonal

CI = ClusterIndexKind.TWO_MEANS_CI
LINK = ClusterIndexKind.LINKAGE_VALUE


def ss_oracle(X, labels):
    """Sums of squares written out term by term."""
    X = np.asarray(X, dtype=float)
    grand = X.mean(axis=0)
    tss = sum(float(np.sum((x - grand) ** 2)) for x in X)
    within = 0.0
    for g in set(labels):
        rows = [x for x, l in zip(X, labels) if l == g]
        c = np.mean(rows, axis=0)
        within += sum(float(np.sum((x - c) ** 2)) for x in rows)
    return within / tss


def exhaustive_min_ci(X):
    n = len(X)
    best = np.inf
    for mask in range(1, 2 ** (n - 1)):
        labels = [(mask >> i) & 1 for i in range(n)]
        best = min(best, ss_oracle(X, labels))
    return best


def test_ci_trivial_values():
    assert two_means_ci([[0.0], [2.0]], [0, 1]).value == 0.0
    ci = two_means_ci([[0.0], [1.0], [3.0], [4.0]], [0, 0, 1, 1])
    assert ci.value == pytest.approx(0.1)
    assert ci.kind is CI


def test_ci_matches_oracle(rng):
    X = rng.standard_normal((8, 2))
    for _ in range(20):
        labels = rng.integers(0, 2, size=8)
        if len(set(labels)) < 2:
            continue
        assert two_means_ci(X, labels).value == pytest.approx(ss_oracle(X, labels), abs=1e-12)


def test_ci_accepts_assignment_and_rejects_degenerate():
    assignment = ClusterAssignment(np.array([0, 1, 1]), 2)
    assert 0 <= two_means_ci([[0.0], [1.0], [1.5]], assignment).value <= 1
    with pytest.raises(DegenerateData):
        two_means_ci([[1.0, 1.0], [1.0, 1.0]], [0, 1])
    with pytest.raises(DegenerateData):
        kmeans_two_ci([[1.0], [1.0], [1.0]])


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(3, 12), st.integers(1, 4)),
              elements=st.floats(-100, 100, allow_nan=False)),
       st.integers(0, 2 ** 16))
def test_ci_in_unit_interval(X, label_seed):
    labels = np.random.default_rng(label_seed).integers(0, 2, size=len(X))
    labels[0], labels[1] = 0, 1
    if ((X - X.mean(axis=0)) ** 2).sum() < 1e-9:
        return
    assert 0.0 <= two_means_ci(X, labels).value <= 1.0


def test_kmeans_separates_two_pairs():
    X = np.array([[0, 0], [0, 1], [10, 0], [10, 1]], dtype=float)
    ci, assignment = kmeans_two_ci(X, restarts=5, seed=1)
    labels = assignment.labels
    assert labels[0] == labels[1] != labels[2] == labels[3]
    assert ci.value == pytest.approx(exhaustive_min_ci(X), abs=1e-12)
    # written out: within = 4 * 0.25, total = 4 * 25 + 4 * 0.25
    assert ci.value == pytest.approx(1.0 / 101.0)


def test_kmeans_two_points_is_zero():
    ci, _ = kmeans_two_ci([[0.0, 1.0], [3.0, -2.0]], restarts=3)
    assert ci.value == 0.0


def test_kmeans_matches_exhaustive_minimum():
    rng = np.random.default_rng(8)
    for case in range(100):
        n = int(rng.integers(2, 9))
        X = rng.standard_normal((n, int(rng.integers(1, 5)))) * rng.uniform(0.2, 3, size=1)
        ci, assignment = kmeans_two_ci(X, restarts=20, seed=case)
        assert ci.value == pytest.approx(exhaustive_min_ci(X), abs=1e-9)
        assert ci.value == pytest.approx(two_means_ci(X, assignment).value, abs=1e-12)


def test_kmeans_never_worse_than_ward_split(rng):
    for _ in range(20):
        X = rng.standard_normal((30, 5))
        ward = two_means_ci(X, cut_k(agglomerate(X), 2)).value
        assert kmeans_two_ci(X, restarts=3, seed=2)[0].value <= ward + 1e-12


def test_kmeans_nonincreasing_in_restarts(rng):
    X = rng.standard_normal((40, 3))
    values = [kmeans_two_ci(X, restarts=r, seed=17)[0].value for r in range(0, 15)]
    assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))


def test_indices_invariant_to_rotation_and_shift(rng):
    X = rng.standard_normal((20, 4))
    Y = X @ random_orthogonal(rng, 4) + 5.0
    labels = cut_k(agglomerate(X), 2).labels
    assert two_means_ci(X, labels).value == pytest.approx(two_means_ci(Y, labels).value, abs=1e-9)
    assert kmeans_two_ci(X, seed=3)[0].value == pytest.approx(kmeans_two_ci(Y, seed=3)[0].value, abs=1e-9)
    a, b = agglomerate(X), agglomerate(Y)
    assert linkage_index(a, a.root).value == pytest.approx(linkage_index(b, b.root).value, abs=1e-9)


def test_linkage_index(rng, five_points):
    x, y = np.array([0.0, 1.0]), np.array([2.0, 3.0])
    dend = agglomerate([x, y])
    assert linkage_index(dend, dend.root) == CiValue(8.0, LINK)
    dend = agglomerate(five_points)
    assert linkage_index(dend, dend.root).value == max(m.height for m in dend.merges)
    dend = agglomerate(rng.standard_normal((15, 3)))
    assert linkage_index(dend, dend.root).value == dend.merges[-1].height
    from shc.errors import NotInternal
    with pytest.raises(NotInternal):
        linkage_index(dend, 0)


def test_stronger_than():
    assert stronger_than(CiValue(0.3, CI), CiValue(0.5, CI))
    assert not stronger_than(CiValue(10, LINK), CiValue(12, LINK))
    assert not stronger_than(CiValue(0.4, CI), CiValue(0.4, CI))
    assert not stronger_than(CiValue(7, LINK), CiValue(7, LINK))
    with pytest.raises(KindMismatch):
        stronger_than(CiValue(0.3, CI), CiValue(3, LINK))


def test_kmeans_escapes_lloyd_fixed_point():
    # Lloyd alone stops at {0.336, 0.889, 1.19} vs the rest; one transfer improves it
    X = np.array([0.33577404, -1.27015495, -0.06912333, 0.16638086,
                  -0.40045834, 0.00082599, 1.19085666, 0.88923058])[:, None]
    ci, _ = kmeans_two_ci(X, restarts=20, seed=7)
    assert ci.value == pytest.approx(exhaustive_min_ci(X), abs=1e-9)

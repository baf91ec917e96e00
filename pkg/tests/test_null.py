import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shc.errors import DegenerateData, TooFewObservations
from shc.null import (
    EigenMethod,
    estimate_sigma_b_sq,
    fit_null,
    sample_cov_eigenvalues,
    sample_null,
    soft_threshold,
)


def dense_spectrum(X):
    return np.sort(np.linalg.eigvalsh(np.cov(X, rowvar=False)))[::-1]


def test_identical_rows_give_zero_spectrum():
    ev = sample_cov_eigenvalues(np.tile([1.0, 2.0, 3.0], (3, 1)))
    np.testing.assert_allclose(ev, 0.0, atol=1e-14)
    assert len(ev) == 2


def test_one_axis_spread():
    X = [[-1.0, 0.0], [1.0, 0.0]]
    np.testing.assert_allclose(sample_cov_eigenvalues(X), [2.0])
    np.testing.assert_allclose(fit_null(X, "sample").eigenvalues, [2.0, 0.0], atol=1e-14)


def test_gram_trick_matches_dense_10x200(rng):
    X = rng.standard_normal((10, 200))
    np.testing.assert_allclose(sample_cov_eigenvalues(X), dense_spectrum(X)[:9], atol=1e-8)


def test_gram_trick_matches_dense_many_shapes():
    rng = np.random.default_rng(4)
    for _ in range(25):
        n, p = int(rng.integers(2, 40)), int(rng.integers(1, 301))
        X = rng.standard_normal((n, p)) * rng.uniform(0.5, 3, size=p)
        k = min(n - 1, p)
        np.testing.assert_allclose(sample_cov_eigenvalues(X), dense_spectrum(X)[:k], atol=1e-8)


def test_spectrum_needs_two_rows():
    with pytest.raises(TooFewObservations):
        sample_cov_eigenvalues([[1.0, 2.0]])


def test_sigma_b_of_standard_normal():
    for seed in range(20):
        X = np.random.default_rng(seed).standard_normal((50, 1000))
        assert 0.8 <= estimate_sigma_b_sq(X) <= 1.2


def test_sigma_b_scale_equivariance(rng):
    X = rng.standard_normal((20, 30))
    assert estimate_sigma_b_sq(3.0 * X) == pytest.approx(9.0 * estimate_sigma_b_sq(X), rel=1e-12)


def test_sigma_b_degenerate():
    with pytest.raises(DegenerateData):
        estimate_sigma_b_sq(np.full((5, 4), 2.5))


def test_hard_threshold_definition(rng):
    X = rng.standard_normal((15, 40))
    model = fit_null(X, EigenMethod.HARD)
    sigma = estimate_sigma_b_sq(X)
    padded = np.zeros(40)
    padded[:14] = sample_cov_eigenvalues(X)
    np.testing.assert_allclose(model.eigenvalues, np.sort(np.maximum(padded, sigma))[::-1])
    assert np.all(model.eigenvalues >= sigma)
    assert model.sigma_b_sq == sigma


def test_hard_threshold_only_raises_small_entries(rng):
    X = rng.standard_normal((300, 4)) * [10.0, 9.0, 1.0, 0.5]
    model = fit_null(X, EigenMethod.HARD)
    raw, sigma = model.raw_eigenvalues, model.sigma_b_sq
    keep = raw >= sigma
    assert keep.any() and not keep.all()
    np.testing.assert_array_equal(model.eigenvalues[keep], raw[keep])
    np.testing.assert_array_equal(model.eigenvalues[~keep], sigma)


def test_spike_detected():
    scale = np.ones(1000)
    scale[0] = 10.0
    for seed in range(20):
        X = np.random.default_rng(seed).standard_normal((50, 1000)) * scale
        model = fit_null(X, EigenMethod.SOFT)
        big = np.count_nonzero(model.eigenvalues > 2 * model.sigma_b_sq)
        # a handful out of 49 non-zero raw eigenvalues and p = 1000
        assert 1 <= big <= 15
        assert 100 / 3 <= model.eigenvalues[0] <= 300
        assert model.eigenvalues[0] > 5 * model.eigenvalues[1]


def test_soft_preserves_total_variance(rng):
    X = rng.standard_normal((30, 500)) * np.r_[np.full(5, 6.0), np.ones(495)]
    model = fit_null(X, EigenMethod.SOFT)
    raw_total = model.raw_eigenvalues.sum()
    assert raw_total >= 500 * model.sigma_b_sq
    assert model.eigenvalues.sum() == pytest.approx(raw_total, rel=1e-6)
    assert np.all(model.eigenvalues >= model.sigma_b_sq)
    assert np.all(np.diff(model.eigenvalues) <= 0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=60), st.floats(1e-3, 50))
def test_soft_threshold_total(raw, sigma):
    raw = np.sort(np.array(raw))[::-1]
    out = soft_threshold(raw, sigma)
    assert np.all(out >= sigma * (1 - 1e-12))
    expected = max(raw.sum(), raw.size * sigma)
    assert out.sum() == pytest.approx(expected, rel=1e-6)
    # a common shift: differences among unfloored entries are kept
    kept = out > sigma * (1 + 1e-9)
    if kept.sum() >= 2:
        np.testing.assert_allclose(np.diff(out[kept]), np.diff(raw[kept]), atol=1e-6 * max(1.0, raw.max()))


def test_fit_null_shift_invariant(rng):
    X = rng.standard_normal((20, 60))
    for method in EigenMethod:
        a = fit_null(X, method).eigenvalues
        b = fit_null(X + rng.normal(0, 50, size=60), method).eigenvalues
        np.testing.assert_allclose(a, b, atol=1e-8)


def test_sample_null_variance():
    Z = sample_null(np.ones(10), 10000, seed=3)
    assert Z.shape == (10000, 10)
    assert np.all((Z.var(axis=0, ddof=1) > 0.8) & (Z.var(axis=0, ddof=1) < 1.2))


def test_sample_null_deterministic_and_zero_columns(rng):
    model = fit_null(rng.standard_normal((5, 8)), EigenMethod.SAMPLE)
    a = sample_null(model, 6, seed=42)
    b = sample_null(model, 6, seed=42)
    assert a.tobytes() == b.tobytes()
    zero = model.eigenvalues == 0
    assert zero.any()
    assert np.all(a[:, zero] == 0)
    with pytest.raises(TooFewObservations):
        sample_null(model, 1)

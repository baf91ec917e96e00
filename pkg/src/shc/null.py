"""Gaussian null estimation under the factor-analysis covariance model.

Both cluster indices are invariant to translation and rotation, so the null
only needs a covariance spectrum: data are simulated from N(0, diag(lambda)).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateData, TooFewObservations
from .hclust import as_data_matrix
from .rng import make_rng

MAD_CONSISTENCY = 0.6744898


class EigenMethod(str, enum.Enum):
    HARD = "hard"
    SOFT = "soft"
    SAMPLE = "sample"


@dataclass(frozen=True)
class NullModel:
    eigenvalues: np.ndarray
    sigma_b_sq: float
    method: EigenMethod
    n_source: int
    raw_eigenvalues: np.ndarray

    @property
    def p(self) -> int:
        return len(self.eigenvalues)


def sample_cov_eigenvalues(data) -> np.ndarray:
    """Top ``min(N-1, p)`` eigenvalues of the sample covariance, descending.

    Uses the N x N Gram matrix of the centered rows when p > N; it shares its
    non-zero spectrum with the p x p covariance.
    """
    X = as_data_matrix(data).values
    n, p = X.shape
    if n < 2:
        raise TooFewObservations("covariance needs at least 2 observations")
    Xc = X - X.mean(axis=0)
    if p > n:
        M = Xc @ Xc.T
    else:
        M = Xc.T @ Xc
    ev = np.linalg.eigvalsh(M)[::-1][: min(n - 1, p)] / (n - 1)
    return np.maximum(ev, 0.0)


def estimate_sigma_b_sq(data) -> float:
    """Robust background-noise variance from the MAD of all centered entries."""
    X = as_data_matrix(data).values
    entries = (X - X.mean(axis=0)).ravel()
    mad = np.median(np.abs(entries - np.median(entries)))
    if mad <= 0:
        raise DegenerateData("median absolute deviation is zero")
    return float((mad / MAD_CONSISTENCY) ** 2)


def soft_threshold(raw: np.ndarray, sigma_b_sq: float, tol: float = 1e-12) -> np.ndarray:
    """Shrink ``raw`` by a common tau, flooring at ``sigma_b_sq``.

    tau >= 0 is chosen by bisection so the total variance is preserved; when
    the raw total is below ``p * sigma_b_sq`` every entry sits at the floor.
    """
    raw = np.asarray(raw, dtype=float)
    target = raw.sum()
    if target <= raw.size * sigma_b_sq:
        return np.full(raw.size, sigma_b_sq)

    def total(tau):
        return np.maximum(raw - tau, sigma_b_sq).sum()

    lo, hi = 0.0, max(raw.max() - sigma_b_sq, 0.0)
    if total(lo) <= target:
        return np.maximum(raw, sigma_b_sq)
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if total(mid) > target:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    out = np.maximum(raw - tau, sigma_b_sq)
    # piecewise-linear in tau: solve exactly on the final active set
    active = raw - tau > sigma_b_sq
    if active.any():
        tau = (raw[active].sum() - (target - sigma_b_sq * (~active).sum())) / active.sum()
        out = np.where(active, raw - tau, sigma_b_sq)
    return out


def fit_null(data, method: EigenMethod | str = EigenMethod.SOFT) -> NullModel:
    """Estimate the null spectrum from ``data`` (rows are observations)."""
    method = EigenMethod(method)
    data = as_data_matrix(data)
    raw = sample_cov_eigenvalues(data)
    padded = np.zeros(data.p)
    padded[: len(raw)] = raw
    if method is EigenMethod.SAMPLE:
        # sigma_b^2 is informational only here and may be undefined
        try:
            sigma = estimate_sigma_b_sq(data)
        except DegenerateData:
            sigma = float("nan")
        eig = padded
    else:
        sigma = estimate_sigma_b_sq(data)
        if method is EigenMethod.HARD:
            eig = np.maximum(padded, sigma)
        else:
            eig = soft_threshold(padded, sigma)
    eig = np.sort(eig)[::-1]
    eig.setflags(write=False)
    raw.setflags(write=False)
    return NullModel(eig, sigma, method, data.n, raw)


def sample_null(model: NullModel | np.ndarray, n: int, seed=0) -> np.ndarray:
    """``n`` draws from N(0, diag(eigenvalues)); deterministic in ``seed``.

    ``seed`` may be a ``numpy.random.Generator`` to draw from an existing stream.
    """
    if n < 2:
        raise TooFewObservations("null samples need n >= 2")
    eig = model.eigenvalues if isinstance(model, NullModel) else np.asarray(model, dtype=float)
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    return rng.standard_normal((n, len(eig))) * np.sqrt(eig)

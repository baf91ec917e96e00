"""Mixture designs, replicate runners and result tables for simulation studies."""
from __future__ import annotations

import csv
import enum
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .engine import PValueKind, ShcConfig, ShcVariant, run_shc
from .errors import InvalidDesign, IoError
from .hclust import DataMatrix
from .rng import STREAM_REPLICATE, make_rng, seed_sequence

TABLE_COLUMNS = ("design", "p", "delta", "variant", "n_reps", "count_correct", "mean_p", "median_time_sec")


class DesignKind(str, enum.Enum):
    SPIKE_NULL = "spike-null"
    TWO_CLUSTER = "two-cluster"
    LINE_THREE = "line3"
    TRIANGLE_THREE = "triangle3"
    SQUARE_FOUR = "square4"
    TETRAHEDRON_FOUR = "tetrahedron4"
    RECTANGLE_FOUR = "rectangle4"
    STRETCHED_TETRA_FOUR = "stretched-tetra4"


_N_COMPONENTS = {
    DesignKind.SPIKE_NULL: 1,
    DesignKind.TWO_CLUSTER: 2,
    DesignKind.LINE_THREE: 3,
    DesignKind.TRIANGLE_THREE: 3,
    DesignKind.SQUARE_FOUR: 4,
    DesignKind.TETRAHEDRON_FOUR: 4,
    DesignKind.RECTANGLE_FOUR: 4,
    DesignKind.STRETCHED_TETRA_FOUR: 4,
}

_EMBED_DIM = {
    DesignKind.SPIKE_NULL: 1,
    DesignKind.TWO_CLUSTER: 1,
    DesignKind.LINE_THREE: 1,
    DesignKind.TRIANGLE_THREE: 2,
    DesignKind.SQUARE_FOUR: 2,
    DesignKind.TETRAHEDRON_FOUR: 3,
    DesignKind.RECTANGLE_FOUR: 2,
    DesignKind.STRETCHED_TETRA_FOUR: 3,
}


@dataclass(frozen=True)
class MixtureDesign:
    kind: DesignKind
    p: int
    n_per_component: int = 50
    delta: float = 0.0
    spike: tuple[int, float] | None = None
    sigmas: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", DesignKind(self.kind))
        if self.delta < 0:
            raise InvalidDesign("delta must be non-negative")
        if self.n_per_component < 1:
            raise InvalidDesign("n_per_component must be positive")
        if self.p < _EMBED_DIM[self.kind]:
            raise InvalidDesign(f"{self.kind.value} needs p >= {_EMBED_DIM[self.kind]}, got {self.p}")
        if self.kind is DesignKind.SPIKE_NULL:
            if self.spike is None:
                raise InvalidDesign("spike-null design needs spike=(w, v)")
            w, v = self.spike
            if not 0 <= w <= self.p or v < 1:
                raise InvalidDesign("spike needs 0 <= w <= p and v >= 1")
        if self.sigmas is not None and len(self.sigmas) != self.n_components:
            raise InvalidDesign("one variance per component is required")

    @property
    def n_components(self) -> int:
        return _N_COMPONENTS[self.kind]

    @property
    def true_k(self) -> int:
        return self.n_components

    @property
    def n(self) -> int:
        return self.n_per_component * self.n_components

    def variances(self) -> tuple[float, ...]:
        return self.sigmas or (1.0,) * self.n_components


def component_means(design: MixtureDesign) -> np.ndarray:
    """K x p matrix of component means; only the leading coordinates are non-zero."""
    d = design.delta
    h3 = math.sqrt(3.0) / 2.0
    kind = design.kind
    if kind is DesignKind.SPIKE_NULL:
        pts = [[0.0]]
    elif kind is DesignKind.TWO_CLUSTER:
        pts = [[0.0], [d]]
    elif kind is DesignKind.LINE_THREE:
        pts = [[0.0], [d], [2 * d]]
    elif kind is DesignKind.TRIANGLE_THREE:
        pts = [[0, 0], [d, 0], [d / 2, h3 * d]]
    elif kind is DesignKind.SQUARE_FOUR:
        pts = [[0, 0], [d, 0], [0, d], [d, d]]
    elif kind is DesignKind.RECTANGLE_FOUR:
        pts = [[0, 0], [d, 0], [0, 1.5 * d], [d, 1.5 * d]]
    else:
        base = [[0, 0, 0], [d, 0, 0], [d / 2, h3 * d, 0]]
        centroid = np.mean(base, axis=0)
        edge = d if kind is DesignKind.TETRAHEDRON_FOUR else 1.5 * d
        # apex over the base centroid, at distance `edge` from each base vertex
        height = math.sqrt(edge ** 2 - d ** 2 / 3.0)
        pts = base + [[centroid[0], centroid[1], height]]
    pts = np.asarray(pts, dtype=float)
    means = np.zeros((len(pts), design.p))
    means[:, : pts.shape[1]] = pts
    return means


def generate(design: MixtureDesign, seed=0) -> tuple[DataMatrix, np.ndarray]:
    """Draw ``n_per_component`` observations from each component."""
    rng = make_rng(seed)
    labels = np.repeat(np.arange(design.n_components), design.n_per_component)
    Z = rng.standard_normal((design.n, design.p))
    if design.kind is DesignKind.SPIKE_NULL:
        w, v = design.spike
        scale = np.ones(design.p)
        scale[:w] = math.sqrt(v)
        return DataMatrix(Z * scale), labels
    sd = np.sqrt(np.asarray(design.variances()))
    X = component_means(design)[labels] + Z * sd[labels, None]
    return DataMatrix(X), labels


def theoretical_mixture_spectrum(n, m, mu1, mu2, s1_sq, s2_sq, p) -> np.ndarray:
    """Spectrum of the best-fit Gaussian to a two-component spherical mixture."""
    gap = float(np.sum((np.asarray(mu1, dtype=float) - np.asarray(mu2, dtype=float)) ** 2))
    w = n * m / (n + m)
    rest = w * (s1_sq / m + s2_sq / n)
    out = np.full(p, rest)
    out[0] = w * (gap / (n + m) + s1_sq / m + s2_sq / n)
    return np.sort(out)[::-1]


@dataclass(frozen=True)
class ReplicateOutcome:
    k_hat: int
    root_p_empirical: float
    root_p_gaussian: float
    wall_time_sec: float
    seed: int


@dataclass(frozen=True)
class StudySummary:
    count_correct_k: int
    mean_p: float
    median_time: float


@dataclass(frozen=True)
class StudyResult:
    design: MixtureDesign
    variant: ShcVariant
    n_replicates: int
    outcomes: tuple[ReplicateOutcome, ...]
    p_value: PValueKind = PValueKind.EMPIRICAL
    summary: StudySummary = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "variant", ShcVariant(self.variant))
        object.__setattr__(self, "p_value", PValueKind(self.p_value))
        object.__setattr__(self, "summary", summarize(self.outcomes, self.design.true_k, self.p_value))


def summarize(outcomes, true_k: int, p_value=PValueKind.EMPIRICAL) -> StudySummary:
    outcomes = list(outcomes)
    if not outcomes:
        return StudySummary(0, float("nan"), float("nan"))
    attr = "root_p_empirical" if PValueKind(p_value) is PValueKind.EMPIRICAL else "root_p_gaussian"
    return StudySummary(
        count_correct_k=sum(o.k_hat == true_k for o in outcomes),
        mean_p=float(np.mean([getattr(o, attr) for o in outcomes])),
        median_time=float(np.median([o.wall_time_sec for o in outcomes])),
    )


def replicate_seed(seed: int, r: int) -> int:
    return int(seed_sequence(seed, STREAM_REPLICATE, r).generate_state(1)[0])


def run_replicate(design: MixtureDesign, config: ShcConfig, r: int) -> ReplicateOutcome:
    seed = replicate_seed(config.seed, r)
    data, _ = generate(design, seed)
    start = time.perf_counter()
    report = run_shc(data, replace(config, seed=seed))
    elapsed = time.perf_counter() - start
    root = report.results[report.dendrogram.root]
    return ReplicateOutcome(report.k_hat, root.p_empirical, root.p_gaussian, elapsed, seed)


def run_study(design: MixtureDesign, variant: ShcVariant | str, n_replicates: int,
              config: ShcConfig | None = None, progress=None) -> StudyResult:
    """Run ``n_replicates`` independent generate + SHC replicates."""
    config = replace(config or ShcConfig(), variant=ShcVariant(variant))
    outcomes = []
    for r in range(n_replicates):
        outcomes.append(run_replicate(design, config, r))
        if progress is not None:
            progress(r, outcomes[-1])
    return StudyResult(design, config.variant, n_replicates, tuple(outcomes), config.p_value)


def emit_table(results, path, timing: bool = True) -> None:
    """Write study summaries as CSV, one row per study.

    With ``timing=False`` the median-time column is written as ``nan`` so the
    file depends only on the seeds.
    """
    results = list(results)
    if not results:
        raise ValueError("no results to write")
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TABLE_COLUMNS)
            for res in results:
                s = res.summary
                writer.writerow([res.design.kind.value, res.design.p, repr(float(res.design.delta)),
                                 res.variant.value, res.n_replicates, s.count_correct_k,
                                 repr(s.mean_p), repr(s.median_time) if timing else "nan"])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_table(path) -> list[dict]:
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        out.append({
            "design": row["design"],
            "p": int(row["p"]),
            "delta": float(row["delta"]),
            "variant": row["variant"],
            "n_reps": int(row["n_reps"]),
            "count_correct": int(row["count_correct"]),
            "mean_p": float(row["mean_p"]),
            "median_time_sec": float(row["median_time_sec"]),
        })
    return out

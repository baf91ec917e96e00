"""Matrix files and the expression preprocessing pipeline.

Expression matrices are stored genes x samples (one row per gene, first row
holds sample ids); clustering treats samples as observations, so
``ExpressionMatrix.to_data_matrix`` transposes.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateData, DegenerateSample, InvalidConfig, InvalidData, IoError, ParseError
from .hclust import DataMatrix


@dataclass(frozen=True)
class ExpressionMatrix:
    values: np.ndarray
    gene_ids: tuple[str, ...]
    sample_ids: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2:
            raise InvalidData("expression values must be a 2-d matrix")
        genes, samples = tuple(map(str, self.gene_ids)), tuple(map(str, self.sample_ids))
        if values.shape != (len(genes), len(samples)):
            raise InvalidData(f"values shape {values.shape} does not match "
                              f"{len(genes)} genes x {len(samples)} samples")
        if len(set(genes)) != len(genes) or len(set(samples)) != len(samples):
            raise InvalidData("gene and sample ids must be unique")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "gene_ids", genes)
        object.__setattr__(self, "sample_ids", samples)

    def with_values(self, values, gene_ids=None) -> "ExpressionMatrix":
        return ExpressionMatrix(values, self.gene_ids if gene_ids is None else gene_ids, self.sample_ids)

    def to_data_matrix(self) -> DataMatrix:
        return DataMatrix(self.values.T, self.sample_ids, self.gene_ids)


@dataclass(frozen=True)
class PreprocessConfig:
    uq_normalize: bool = False
    replace_zeros: bool = False
    top_genes: int | None = None
    log_base: float = 2.0
    log: bool = True
    filter_before_log: bool = False

    def __post_init__(self):
        if self.top_genes is not None and self.top_genes < 2:
            raise InvalidConfig("top_genes must be at least 2")


def _delimiter(path: Path) -> str:
    return "," if path.suffix.lower() == ".csv" else "\t"


def _parse_float(cell: str, line: int, column: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell!r} in column {column}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite cell {cell!r} in column {column}", line)
    return value


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _read_rows(path: Path) -> list[list[str]]:
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh, delimiter=_delimiter(path))]
    except FileNotFoundError:
        raise IoError(f"no such file: {path}") from None
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    while rows and not any(c.strip() for c in rows[-1]):
        rows.pop()
    if not rows:
        raise ParseError(f"{path} is empty", 1)
    return rows


def _check_unique(ids, what, line_of):
    seen = {}
    for i, name in enumerate(ids):
        if name in seen:
            raise ParseError(f"duplicate {what} id {name!r}", line_of(i))
        seen[name] = i


def read_expression(path) -> ExpressionMatrix:
    """Genes x samples file: first row sample ids, first column gene ids."""
    path = Path(path)
    rows = _read_rows(path)
    header = rows[0]
    samples = header[1:]
    _check_unique(samples, "sample", lambda i: 1)
    genes, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, found {len(row)}", lineno)
        genes.append(row[0])
        values.append([_parse_float(c, lineno, j + 2) for j, c in enumerate(row[1:])])
    _check_unique(genes, "gene", lambda i: i + 2)
    if not values:
        raise ParseError("no data rows", 2)
    return ExpressionMatrix(np.array(values), genes, samples)


def read_observations(path) -> DataMatrix:
    """Observations x variables; header row and label column are optional.

    A first row with any non-numeric cell is a header. The first column holds
    row labels when every data row starts with a non-numeric cell.
    """
    path = Path(path)
    rows = _read_rows(path)
    width = len(rows[0])
    has_header = not all(_is_number(c) for c in rows[0][1:]) or (
        width == 1 and not _is_number(rows[0][0]))
    body_start = 1 if has_header else 0
    body = rows[body_start:]
    if not body:
        raise ParseError("no data rows", body_start + 1)
    has_labels = width > 1 and all(row and not _is_number(row[0]) for row in body)
    labels, values = [], []
    for lineno, row in enumerate(body, start=body_start + 1):
        if len(row) != width:
            raise ParseError(f"expected {width} cells, found {len(row)}", lineno)
        cells = row[1:] if has_labels else row
        if has_labels:
            labels.append(row[0])
        values.append([_parse_float(c, lineno, j + 1 + has_labels) for j, c in enumerate(cells)])
    if has_labels:
        _check_unique(labels, "row", lambda i: i + body_start + 1)
    col_labels = None
    if has_header:
        col_labels = rows[0][1:] if has_labels else rows[0]
    return DataMatrix(np.array(values), labels or None, col_labels)


def read_matrix(path, rows_are: str = "observations"):
    """Read ``path`` as observations (DataMatrix) or genes (ExpressionMatrix)."""
    if rows_are == "genes":
        return read_expression(path)
    if rows_are == "observations":
        return read_observations(path)
    raise InvalidConfig(f"rows_are must be 'observations' or 'genes', got {rows_are!r}")


def _fmt(x: float) -> str:
    return repr(float(x))


def write_matrix(matrix, path) -> None:
    path = Path(path)
    if isinstance(matrix, ExpressionMatrix):
        header = ["gene", *matrix.sample_ids]
        labels, values = matrix.gene_ids, matrix.values
    else:
        values = matrix.values
        labels = matrix.row_labels
        header = None
        if matrix.col_labels is not None:
            header = (["id"] if labels is not None else []) + list(matrix.col_labels)
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, delimiter=_delimiter(path), lineterminator="\n")
            if header is not None:
                writer.writerow(header)
            for i, row in enumerate(values):
                cells = [_fmt(v) for v in row]
                writer.writerow(([labels[i]] if labels is not None else []) + cells)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def uq_normalize(expr: ExpressionMatrix) -> ExpressionMatrix:
    """Scale each sample so its upper quartile of non-zero values is the common mean."""
    X = expr.values
    uq = np.empty(X.shape[1])
    for j in range(X.shape[1]):
        nz = X[:, j][X[:, j] != 0]
        if nz.size == 0:
            raise DegenerateSample(f"sample {expr.sample_ids[j]!r} has no non-zero values")
        uq[j] = np.percentile(nz, 75)
    if np.any(uq <= 0):
        raise DegenerateSample("upper quartile must be positive")
    return expr.with_values(X * (uq.mean() / uq))


def replace_zeros(expr: ExpressionMatrix) -> ExpressionMatrix:
    X = expr.values
    nz = X[X != 0]
    if nz.size == 0:
        raise DegenerateData("matrix has no non-zero entries")
    return expr.with_values(np.where(X == 0, nz.min(), X))


def log_transform(expr: ExpressionMatrix, base: float = 2.0) -> ExpressionMatrix:
    X = expr.values
    if np.any(X <= 0):
        raise InvalidData("log transform needs strictly positive entries")
    return expr.with_values(np.log(X) / np.log(base) if base != 2 else np.log2(X))


def gene_mad(expr: ExpressionMatrix) -> np.ndarray:
    X = expr.values
    med = np.median(X, axis=1, keepdims=True)
    return np.median(np.abs(X - med), axis=1)


def mad_filter(expr: ExpressionMatrix, g: int) -> ExpressionMatrix:
    """Keep the ``g`` genes with largest MAD, in their original order."""
    n_genes = len(expr.gene_ids)
    if not 1 <= g <= n_genes:
        raise InvalidConfig(f"top_genes must be in [1, {n_genes}], got {g}")
    keep = np.sort(np.argsort(-gene_mad(expr), kind="stable")[:g])
    return ExpressionMatrix(expr.values[keep], [expr.gene_ids[i] for i in keep], expr.sample_ids)


def preprocess(expr: ExpressionMatrix, config: PreprocessConfig) -> ExpressionMatrix:
    """Normalize, fill zeros, log-transform and gene-filter, in that order."""
    if config.uq_normalize:
        expr = uq_normalize(expr)
    if config.replace_zeros:
        expr = replace_zeros(expr)
    if config.top_genes is not None and config.filter_before_log:
        expr = mad_filter(expr, config.top_genes)
    if config.log:
        expr = log_transform(expr, config.log_base)
    if config.top_genes is not None and not config.filter_before_log:
        expr = mad_filter(expr, config.top_genes)
    return expr

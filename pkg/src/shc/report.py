"""Writers for SHC reports: JSON, Newick with annotations, and SVG dendrograms."""
from __future__ import annotations

import json
import re
from pathlib import Path
from xml.sax.saxutils import escape

from .engine import NodeTestResult, PValueKind, ShcConfig, ShcReport
from .errors import InvalidConfig, IoError
from .hclust import Dendrogram
from .index import CiValue, ClusterIndexKind

SCHEMA_VERSION = 1


def _write_text(path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def report_to_dict(report: ShcReport) -> dict:
    dend = report.dendrogram
    results = []
    for node, res in report.results.items():
        results.append({
            "node": node,
            "n_j": res.n_j,
            "observed": None if res.observed is None else
            {"value": res.observed.value, "kind": res.observed.kind.value},
            "p_empirical": res.p_empirical,
            "p_gaussian": res.p_gaussian,
            "alpha_star": res.alpha_star,
            "tested": res.tested,
            "rejected": res.rejected,
            "degenerate_nulls": res.degenerate_nulls,
            "null_indices": list(res.null_indices),
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "n_leaves": dend.n_leaves,
        "row_labels": None if report.row_labels is None else list(report.row_labels),
        "merges": [
            {"node": dend.n_leaves + i, "left": m.left, "right": m.right, "height": m.height, "size": m.size}
            for i, m in enumerate(dend.merges)
        ],
        "results": results,
        "significant": list(report.significant),
        "k_hat": report.k_hat,
        "config": report.config.to_dict(),
    }


def report_from_dict(doc: dict) -> ShcReport:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise InvalidConfig(f"unsupported report schema {doc.get('schema_version')!r}")
    dend = Dendrogram(doc["n_leaves"], tuple((m["left"], m["right"], m["height"], m["size"])
                                             for m in doc["merges"]))
    results = {}
    for r in doc["results"]:
        obs = r["observed"]
        results[r["node"]] = NodeTestResult(
            node=r["node"],
            n_j=r["n_j"],
            observed=None if obs is None else CiValue(obs["value"], ClusterIndexKind(obs["kind"])),
            null_indices=tuple(r["null_indices"]),
            p_empirical=r["p_empirical"],
            p_gaussian=r["p_gaussian"],
            alpha_star=r["alpha_star"],
            tested=r["tested"],
            rejected=r["rejected"],
            degenerate_nulls=r["degenerate_nulls"],
        )
    labels = doc.get("row_labels")
    return ShcReport(dend, results, tuple(doc["significant"]), doc["k_hat"],
                     ShcConfig(**doc["config"]), None if labels is None else tuple(labels))


def to_json(report: ShcReport) -> str:
    return json.dumps(report_to_dict(report), indent=1) + "\n"


def read_report(path) -> ShcReport:
    with open(path) as fh:
        return report_from_dict(json.load(fh))


def _leaf_name(report: ShcReport, leaf: int) -> str:
    name = report.row_labels[leaf] if report.row_labels is not None else str(leaf)
    if re.search(r"[\s(),:;\[\]']", name):
        return "'" + name.replace("'", "''") + "'"
    return name


def _num(x: float) -> str:
    return f"{x:.6g}"


def to_newick(report: ShcReport) -> str:
    """Newick string; tested nodes carry ``[&p=...,alpha_star=...]`` comments.

    Branch lengths are the height differences between a node and its parent.
    """
    dend = report.dendrogram
    kind = report.config.p_value

    def height(v):
        return dend.height(v) if dend.is_internal(v) else 0.0

    def annotate(v):
        res = report.results.get(v)
        if res is None or not res.tested:
            return ""
        return (f"[&p={_num(res.p_value(kind))},alpha_star={_num(res.alpha_star)},"
                f"rejected={'true' if res.rejected else 'false'}]")

    # iterative post-order keeps deep single-linkage chains off the call stack
    text = {}
    stack = [(dend.root, False)]
    while stack:
        v, done = stack.pop()
        if not dend.is_internal(v):
            text[v] = _leaf_name(report, v)
            continue
        left, right = dend.children(v)
        if not done:
            stack.extend(((v, True), (right, False), (left, False)))
            continue
        h = dend.height(v)
        parts = [f"{text.pop(c)}:{_num(h - height(c))}" for c in (left, right)]
        text[v] = f"({','.join(parts)}){annotate(v)}"
    return text[dend.root] + ";\n"


def to_svg(report: ShcReport, width: int = 900, height: int = 520) -> str:
    """Dendrogram drawing with significant, tested and untested nodes styled apart.

    Each tested node gets one ``node-label`` text element reading
    ``p=..., α*=...``.
    """
    dend = report.dendrogram
    n = dend.n_leaves
    kind = report.config.p_value
    margin_l, margin_r, margin_t, margin_b = 50, 30, 40, 60
    order = dend.leaf_order()
    slot = {leaf: i for i, leaf in enumerate(order)}
    step = (width - margin_l - margin_r) / max(n - 1, 1)
    top = max(dend.heights.max(), 1e-12)

    def y_of(h):
        return margin_t + (1.0 - h / top) * (height - margin_t - margin_b)

    x = {leaf: margin_l + slot[leaf] * step for leaf in range(n)}
    for i, m in enumerate(dend.merges):
        x[n + i] = 0.5 * (x[m.left] + x[m.right])

    significant = set(report.significant)
    tested = {v for v, r in report.results.items() if r.tested}
    lines, labels = [], []
    for i, m in enumerate(dend.merges):
        v = n + i
        if v in significant:
            cls = "significant"
        elif v in tested:
            cls = "tested"
        else:
            cls = "untested"
        yv = y_of(m.height)
        for c in (m.left, m.right):
            yc = y_of(dend.height(c)) if dend.is_internal(c) else y_of(0.0)
            lines.append(f'<line class="{cls}" x1="{x[c]:.2f}" y1="{yc:.2f}" x2="{x[c]:.2f}" y2="{yv:.2f}"/>')
        lines.append(f'<line class="{cls}" x1="{x[m.left]:.2f}" y1="{yv:.2f}" x2="{x[m.right]:.2f}" y2="{yv:.2f}"/>')
        if v in tested:
            res = report.results[v]
            text = escape(f"p={_num(res.p_value(kind))}, α*={_num(res.alpha_star)}")
            fill = "#c0392b" if v in significant else "#000000"
            labels.append(f'<text class="node-label" x="{x[v] + 4:.2f}" y="{yv - 4:.2f}" '
                          f'fill="{fill}">{text}</text>')
    leaf_text = []
    if n <= 60:
        for leaf in range(n):
            name = escape(report.row_labels[leaf] if report.row_labels is not None else str(leaf))
            leaf_text.append(f'<text class="leaf-label" x="{x[leaf]:.2f}" y="{height - margin_b + 14}" '
                             f'transform="rotate(90 {x[leaf]:.2f} {height - margin_b + 14})">{name}</text>')
    style = (
        "line{stroke-linecap:square}"
        ".significant{stroke:#c0392b;stroke-width:2.5}"
        ".tested{stroke:#000000;stroke-width:1.5}"
        ".untested{stroke:#999999;stroke-width:1;stroke-dasharray:3,2}"
        "text{font-family:sans-serif}"
        ".node-label{font-size:11px}"
        ".leaf-label{font-size:8px;fill:#555555}"
    )
    body = "\n".join(lines + labels + leaf_text)
    title = escape(f"SHC dendrogram ({report.config.variant.value}, K={report.k_hat})")
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f"<title>{title}</title>\n<style>{style}</style>\n"
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>\n{body}\n</svg>\n'
    )


def write_report(report: ShcReport, fmt: str, path) -> None:
    if fmt == "json":
        text = to_json(report)
    elif fmt == "newick":
        text = to_newick(report)
    elif fmt == "svg":
        text = to_svg(report)
    else:
        raise InvalidConfig(f"unknown report format {fmt!r}")
    _write_text(path, text)

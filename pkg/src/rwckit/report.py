"""Analysis artifacts: clustered-curve SVGs, scree SVGs, CSV/JSON summaries.

All artifacts are deterministic: identical analysis state yields byte-identical
files, so re-emission over an existing directory is an exact overwrite.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cluster import ClusterModel, ScreeCurve
from .errors import InvalidCurveError, LengthMismatchError
from .rwc import RwcMatrix, write_rwc_csv
from .svg import PALETTE, LinearScale, SvgCanvas, format_tick

_SCHEMA_VERSION = 1

# canvas geometry shared by both chart kinds
_W, _H = 720, 440
_LEFT, _RIGHT, _TOP, _BOTTOM = 64, 560, 40, 390


def _x_ticks(count: int) -> list[int]:
    step = max(1, math.ceil(count / 12))
    ticks = list(range(0, count, step))
    if ticks[-1] != count - 1:
        ticks.append(count - 1)
    return ticks


def _draw_axes(canvas: SvgCanvas, title: str) -> None:
    canvas.line(_LEFT, _TOP, _LEFT, _BOTTOM, cls="axis")
    canvas.line(_LEFT, _BOTTOM, _RIGHT, _BOTTOM, cls="axis")
    if title:
        canvas.text((_LEFT + _RIGHT) / 2, _TOP - 18, title, size=14)


def _draw_y_axis(canvas: SvgCanvas, scale: LinearScale, lo: float, hi: float) -> None:
    for i in range(5):
        v = lo + (hi - lo) * i / 4
        y = scale(v)
        canvas.line(_LEFT - 4, y, _LEFT, y, cls="tick")
        canvas.text(_LEFT - 8, y + 4, format_tick(v), anchor="end")


def _draw_legend(canvas: SvgCanvas, k: int) -> None:
    x0 = _RIGHT + 16
    for c in range(k):
        y = _TOP + 14 + 18 * c
        canvas.line(x0, y, x0 + 22, y, stroke=PALETTE[c % len(PALETTE)],
                    width=2.5, cls="legend-swatch")
        canvas.text(x0 + 28, y + 4, f"cluster {c}", anchor="start")


def render_cluster_curves(matrix: RwcMatrix, model: ClusterModel, out,
                          title: str = "") -> None:
    """One polyline per layer, stroke color fixed by cluster id.

    Colors cycle through the documented 10-color palette; axes carry epoch
    tick labels (column t is the change during epoch t+1) and the legend has
    one entry per cluster.
    """
    if len(model.assignments) != matrix.n_layers:
        raise LengthMismatchError(
            f"{len(model.assignments)} assignments for {matrix.n_layers} layers"
        )
    T = matrix.n_transitions
    ymax = float(matrix.values.max()) if matrix.values.size else 1.0
    if ymax <= 0.0:
        ymax = 1.0
    xscale = LinearScale(0, max(T - 1, 1), _LEFT, _RIGHT)
    yscale = LinearScale(0.0, ymax, _BOTTOM, _TOP)

    canvas = SvgCanvas(_W, _H)
    _draw_axes(canvas, title)
    _draw_y_axis(canvas, yscale, 0.0, ymax)
    for t in _x_ticks(T):
        x = xscale(t)
        canvas.line(x, _BOTTOM, x, _BOTTOM + 4, cls="tick")
        canvas.text(x, _BOTTOM + 16, str(t + 1))
    canvas.text((_LEFT + _RIGHT) / 2, _BOTTOM + 34, "epoch")

    for row, cluster in zip(matrix.values, model.assignments):
        points = [(xscale(t), yscale(v)) for t, v in enumerate(row)]
        canvas.polyline(points, stroke=PALETTE[int(cluster) % len(PALETTE)],
                        cls="layer-curve")
    _draw_legend(canvas, model.k)
    canvas.write(out)


def render_scree(curve: ScreeCurve, out, title: str = "") -> None:
    """Inertia vs K: one point per candidate, a connecting polyline, and a
    ring marker at the chosen K."""
    if not curve.ks:
        raise InvalidCurveError("cannot render an empty scree curve")
    ymax = max(curve.inertias)
    if ymax <= 0.0:
        ymax = 1.0
    xscale = LinearScale(curve.ks[0], max(curve.ks[-1], curve.ks[0] + 1),
                         _LEFT, _RIGHT)
    yscale = LinearScale(0.0, ymax, _BOTTOM, _TOP)

    canvas = SvgCanvas(_W, _H)
    _draw_axes(canvas, title)
    _draw_y_axis(canvas, yscale, 0.0, ymax)
    for k in curve.ks:
        x = xscale(k)
        canvas.line(x, _BOTTOM, x, _BOTTOM + 4, cls="tick")
        canvas.text(x, _BOTTOM + 16, str(k))
    canvas.text((_LEFT + _RIGHT) / 2, _BOTTOM + 34, "clusters (K)")

    points = [(xscale(k), yscale(v)) for k, v in zip(curve.ks, curve.inertias)]
    canvas.polyline(points, stroke=PALETTE[0], cls="scree-curve")
    for (x, y) in points:
        canvas.circle(x, y, 3.5, PALETTE[0], cls="point")
    cx = xscale(curve.chosen_k)
    cy = yscale(curve.inertias[curve.ks.index(curve.chosen_k)])
    canvas.ring(cx, cy, 6.5, "#d62728", cls="chosen")
    canvas.text(cx, cy - 12, f"K={curve.chosen_k}", fill="#d62728")
    canvas.write(out)


def write_clusters_json(layer_names, model: ClusterModel, path) -> None:
    doc = {
        "k": int(model.k),
        "seed": int(model.seed),
        "inertia": float(model.inertia),
        "assignments": [
            {"layer": name, "cluster": int(c)}
            for name, c in zip(layer_names, model.assignments)
        ],
        "centroids": [[float(v) for v in row] for row in model.centroids],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_scree_csv(curve: ScreeCurve, path) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "inertia", "chosen"])
        for k, inertia in zip(curve.ks, curve.inertias):
            writer.writerow([k, repr(float(inertia)), int(k == curve.chosen_k)])


def write_pca_csv(layer_names, scores: np.ndarray, path) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["layer"] + [f"pc{j + 1}" for j in range(scores.shape[1])])
        for name, row in zip(layer_names, scores):
            writer.writerow([name] + [repr(float(v)) for v in row])


@dataclass
class GroupResult:
    """Per-group analysis bundle: features, clustering, and optional extras."""

    group: str
    matrix: RwcMatrix
    cluster: ClusterModel
    scree: ScreeCurve | None = None
    pca_scores: np.ndarray | None = None
    pca_variance_ratio: np.ndarray | None = None


@dataclass
class AnalysisReport:
    """Everything one analysis run produced, ready for serialization."""

    run_id: str
    groups: list[GroupResult]
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        seen: set[str] = set()
        for g in self.groups:
            for name in g.matrix.layer_names:
                if name in seen:
                    raise ValueError(
                        f"layer {name!r} appears in more than one group"
                    )
                seen.add(name)


def _sanitize(name: str) -> str:
    cleaned = re.sub(r"[^\w.-]", "_", name)
    return cleaned or "_"


def _group_directories(groups) -> dict[str, str]:
    dirs: dict[str, str] = {}
    used: set[str] = set()
    for g in groups:
        base = _sanitize(g.group)
        candidate, suffix = base, 1
        while candidate in used:
            suffix += 1
            candidate = f"{base}_{suffix}"
        used.add(candidate)
        dirs[g.group] = candidate
    return dirs


def write_summary(report: AnalysisReport, out_dir) -> list[Path]:
    """Emit report.json plus per-group rwc.csv, clusters.json, scree.csv and SVGs.

    Returns the list of written paths; every path is verified to exist.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dirs = _group_directories(report.groups)
    written: list[Path] = []
    group_docs = []

    for g in report.groups:
        gdir = out_dir / dirs[g.group]
        gdir.mkdir(parents=True, exist_ok=True)
        files: dict[str, str | None] = {}

        rwc_path = gdir / "rwc.csv"
        write_rwc_csv(g.matrix, rwc_path)
        files["rwc_csv"] = f"{dirs[g.group]}/rwc.csv"
        written.append(rwc_path)

        clusters_path = gdir / "clusters.json"
        write_clusters_json(g.matrix.layer_names, g.cluster, clusters_path)
        files["clusters_json"] = f"{dirs[g.group]}/clusters.json"
        written.append(clusters_path)

        curves_path = gdir / "curves.svg"
        render_cluster_curves(g.matrix, g.cluster, curves_path, title=g.group)
        files["curves_svg"] = f"{dirs[g.group]}/curves.svg"
        written.append(curves_path)

        if g.scree is not None:
            scree_csv = gdir / "scree.csv"
            write_scree_csv(g.scree, scree_csv)
            files["scree_csv"] = f"{dirs[g.group]}/scree.csv"
            written.append(scree_csv)
            scree_svg = gdir / "scree.svg"
            render_scree(g.scree, scree_svg, title=g.group)
            files["scree_svg"] = f"{dirs[g.group]}/scree.svg"
            written.append(scree_svg)
        else:
            files["scree_csv"] = None
            files["scree_svg"] = None

        if g.pca_scores is not None:
            pca_path = gdir / "pca.csv"
            write_pca_csv(g.matrix.layer_names, g.pca_scores, pca_path)
            files["pca_csv"] = f"{dirs[g.group]}/pca.csv"
            written.append(pca_path)
        else:
            files["pca_csv"] = None

        group_docs.append({
            "group": g.group,
            "directory": dirs[g.group],
            "layers": list(g.matrix.layer_names),
            "n_transitions": g.matrix.n_transitions,
            "cluster": {
                "k": int(g.cluster.k),
                "seed": int(g.cluster.seed),
                "n_init": int(g.cluster.n_init),
                "inertia": float(g.cluster.inertia),
                "iterations_run": int(g.cluster.iterations_run),
                "assignments": [
                    {"layer": name, "cluster": int(c)}
                    for name, c in zip(g.matrix.layer_names, g.cluster.assignments)
                ],
            },
            "scree": None if g.scree is None else {
                "ks": list(g.scree.ks),
                "inertias": [float(v) for v in g.scree.inertias],
                "chosen_k": int(g.scree.chosen_k),
            },
            "pca": None if g.pca_variance_ratio is None else {
                "explained_variance_ratio": [
                    float(v) for v in g.pca_variance_ratio
                ],
            },
            "files": files,
        })

    doc = {
        "schema_version": _SCHEMA_VERSION,
        "run_id": report.run_id,
        "config": report.config,
        "groups": group_docs,
    }
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    written.append(report_path)

    for path in written:
        if not path.exists():
            raise OSError(f"expected artifact missing after emission: {path}")
    return written


def late_layer_share(matrix: RwcMatrix, late_fraction: float = 0.5) -> np.ndarray:
    """Per-transition share of total change mass carried by the late layers.

    The late block is the last ``ceil(L * late_fraction)`` rows in layer
    order. A transition with zero total mass contributes a share of 0.
    """
    if not 0.0 < late_fraction <= 1.0:
        raise ValueError(f"late_fraction must be in (0, 1], got {late_fraction}")
    n_late = max(1, math.ceil(matrix.n_layers * late_fraction))
    totals = matrix.values.sum(axis=0)
    late = matrix.values[matrix.n_layers - n_late:].sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        share = np.where(totals > 0, late / np.where(totals > 0, totals, 1.0), 0.0)
    return share


def write_complexity_comparison(runs: list[tuple[str, RwcMatrix]], out_path,
                                late_fraction: float = 0.5) -> None:
    """Compare the late-layer change share across runs and write it as JSON.

    The metric is reported, not judged: downstream readers decide what a
    rising or falling late-layer share means for their task.
    """
    entries = []
    for label, matrix in runs:
        share = late_layer_share(matrix, late_fraction)
        n_late = max(1, math.ceil(matrix.n_layers * late_fraction))
        entries.append({
            "label": label,
            "n_layers": matrix.n_layers,
            "n_late_layers": n_late,
            "per_transition_share": [float(v) for v in share],
            "mean_share": float(share.mean()),
        })
    doc = {
        "schema_version": _SCHEMA_VERSION,
        "metric": "late_layer_rwc_share",
        "late_fraction": late_fraction,
        "runs": entries,
    }
    Path(out_path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

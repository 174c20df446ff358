"""End-to-end analysis: manifest -> features -> clamp -> split -> cluster -> report."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cluster import ClusterModel, ScreeCurve, kmeans_fit, scree_models
from .decomposition import TrendPCA
from .errors import DegenerateDataError, DimensionTooSmallError
from .report import AnalysisReport, GroupResult, write_summary
from .rwc import RwcMatrix, build_rwc_matrix, clamp_outliers
from .snapshots import load_manifest, load_run
from .taxonomy import assign_groups, split_matrix

DEFAULT_GROUP = "all"
THREADS_ENV = "RWC_SCOPE_THREADS"


def scope_threads() -> int | None:
    """Optional cap on internal worker parallelism, from the environment.

    The current implementation runs the analysis stages sequentially (the
    scree chain is order-dependent), so any positive cap is trivially
    honored; the value is still validated so misconfiguration surfaces.
    """
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{THREADS_ENV} must be >= 1, got {value}")
    return value


@dataclass
class PipelineConfig:
    """All knobs of the analysis pipeline in one bundle."""

    manifest: Path
    out_dir: Path
    clamp_multiplier: float = 2.0
    clamp_scope: str = "layer"
    clamp_enabled: bool = True
    min_params: int = 0
    cluster_space: str = "raw"
    k: int | None = None  # None selects the elbow automatically
    k_max: int = 10
    seed: int = 42
    n_init: int = 10
    threads: int | None = field(default_factory=scope_threads)

    def __post_init__(self):
        self.manifest = Path(self.manifest)
        self.out_dir = Path(self.out_dir)
        if self.k_max < 2:
            raise ValueError(f"k_max must be >= 2, got {self.k_max}")
        if self.k is not None and not 1 <= self.k <= self.k_max:
            raise ValueError(
                f"explicit k={self.k} must lie in [1, k_max={self.k_max}]"
            )
        if self.cluster_space not in ("raw", "pca2"):
            raise ValueError(
                f"cluster_space must be raw or pca2, got {self.cluster_space!r}"
            )

    def as_dict(self) -> dict:
        return {
            "clamp": {
                "enabled": self.clamp_enabled,
                "multiplier": self.clamp_multiplier,
                "scope": self.clamp_scope,
            },
            "min_params": self.min_params,
            "cluster_space": self.cluster_space,
            "k": self.k if self.k is not None else "auto",
            "k_max": self.k_max,
            "seed": self.seed,
            "n_init": self.n_init,
        }


def compute_feature_matrix(config: PipelineConfig) -> tuple[RwcMatrix, object]:
    """Load the run and produce the (optionally clamped) feature matrix."""
    manifest = load_manifest(config.manifest)
    snapshots = load_run(manifest)
    matrix = build_rwc_matrix(snapshots, min_params=config.min_params)
    if config.clamp_enabled:
        matrix = clamp_outliers(matrix, config.clamp_multiplier, config.clamp_scope)
    return matrix, manifest


def _fit_pca(matrix: RwcMatrix):
    """Best-effort 2-D reduction; tiny or degenerate groups yield None."""
    if min(matrix.n_layers, matrix.n_transitions) < 2:
        return None, None
    try:
        pca = TrendPCA(n_components=2).fit(matrix.values)
    except DegenerateDataError:
        return None, None
    return pca.transform(matrix.values), pca.explained_variance_ratio_


def _single_cluster(points: np.ndarray, seed: int) -> ClusterModel:
    return kmeans_fit(points, 1, seed=seed, n_init=1)


def analyze_group(group: str, matrix: RwcMatrix,
                  config: PipelineConfig) -> GroupResult:
    scores, variance_ratio = _fit_pca(matrix)

    if config.cluster_space == "pca2":
        if scores is None:
            raise DimensionTooSmallError(
                f"group {group!r} is too small or degenerate for the pca2 "
                f"clustering space ({matrix.n_layers} layers, "
                f"{matrix.n_transitions} transitions)"
            )
        points = scores
    else:
        points = matrix.values

    if config.k is not None:
        model = kmeans_fit(points, config.k, seed=config.seed, n_init=config.n_init)
        curve = None
    else:
        n_distinct = np.unique(points, axis=0).shape[0]
        k_max_eff = min(config.k_max, n_distinct)
        if k_max_eff < 2:
            model = _single_cluster(points, config.seed)
            curve = ScreeCurve(ks=[1], inertias=[model.inertia], chosen_k=1)
        else:
            curve, models = scree_models(
                points, k_max_eff, seed=config.seed, n_init=config.n_init
            )
            model = models[curve.chosen_k]

    return GroupResult(
        group=group,
        matrix=matrix,
        cluster=model,
        scree=curve,
        pca_scores=scores,
        pca_variance_ratio=variance_ratio,
    )


def analyze_run(config: PipelineConfig) -> AnalysisReport:
    """Run the full chain and emit every artifact into ``config.out_dir``."""
    matrix, manifest = compute_feature_matrix(config)

    if manifest.taxonomy_rules:
        grouping = assign_groups(matrix.layer_names, manifest.taxonomy_rules)
        groups = split_matrix(matrix, grouping)
    else:
        groups = {DEFAULT_GROUP: matrix}

    results = [
        analyze_group(name, sub, config) for name, sub in groups.items()
    ]
    report = AnalysisReport(
        run_id=manifest.run_id, groups=results, config=config.as_dict()
    )
    write_summary(report, config.out_dir)
    return report

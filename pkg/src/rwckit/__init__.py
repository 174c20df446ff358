"""Layer-wise learning-trend analysis toolkit.

Computes per-layer relative weight change across epoch snapshots, clamps
outliers, reduces trend trajectories with PCA, clusters layers that learn
alike via k-means++ with elbow selection, and emits deterministic reports.
"""

from .cluster import (
    ClusterModel,
    KMeans,
    ScreeCurve,
    adjusted_rand_index,
    compute_inertia,
    kmeans_fit,
    kmeans_plusplus,
    scree,
    scree_models,
)
from .decomposition import TrendPCA
from .errors import RwckitError
from .pipeline import PipelineConfig, analyze_run, compute_feature_matrix
from .report import (
    AnalysisReport,
    GroupResult,
    late_layer_share,
    render_cluster_curves,
    render_scree,
    write_complexity_comparison,
    write_summary,
)
from .rwc import (
    OutlierClamp,
    RwcMatrix,
    build_rwc_matrix,
    clamp_outliers,
    rwc_layer,
    write_rwc_csv,
)
from .snapshots import (
    LayerTensor,
    RunManifest,
    WeightSnapshot,
    load_manifest,
    load_run,
    read_snapshot,
    save_manifest,
    write_snapshot,
)
from .taxonomy import (
    EFFICIENTNET_PRIMITIVES,
    RESNET_BLOCKS,
    TaxonomyRule,
    assign_groups,
    split_matrix,
)
from .trainer import AdamState, Mlp, MlpSpec, SyntheticTask, adam_step, make_blobs, train_run

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AnalysisReport",
    "ClusterModel",
    "EFFICIENTNET_PRIMITIVES",
    "GroupResult",
    "KMeans",
    "LayerTensor",
    "Mlp",
    "MlpSpec",
    "OutlierClamp",
    "PipelineConfig",
    "RESNET_BLOCKS",
    "RunManifest",
    "RwcMatrix",
    "RwckitError",
    "ScreeCurve",
    "SyntheticTask",
    "TaxonomyRule",
    "TrendPCA",
    "WeightSnapshot",
    "adam_step",
    "adjusted_rand_index",
    "analyze_run",
    "assign_groups",
    "build_rwc_matrix",
    "clamp_outliers",
    "compute_feature_matrix",
    "compute_inertia",
    "kmeans_fit",
    "kmeans_plusplus",
    "late_layer_share",
    "load_manifest",
    "load_run",
    "make_blobs",
    "read_snapshot",
    "render_cluster_curves",
    "render_scree",
    "rwc_layer",
    "save_manifest",
    "scree",
    "scree_models",
    "split_matrix",
    "train_run",
    "write_complexity_comparison",
    "write_rwc_csv",
    "write_snapshot",
    "write_summary",
    "__version__",
]

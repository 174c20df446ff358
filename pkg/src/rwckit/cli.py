"""Command-line surface: validate / rwc / scree / cluster / analyze /
train-demo / compare.

Exit status is 0 only when every requested artifact was written; typed
failures print ``ERROR <ClassName>: <message>`` on stderr so scripts can
branch on the error name.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .cluster import kmeans_fit, scree_models
from .errors import RwckitError
from .pipeline import PipelineConfig, analyze_run, compute_feature_matrix
from .report import (
    write_clusters_json,
    write_complexity_comparison,
    write_scree_csv,
)
from .rwc import write_rwc_csv
from .snapshots import load_manifest, load_run
from .trainer import MlpSpec, SyntheticTask, train_run


def _k_value(text: str):
    if text == "auto":
        return None
    return int(text)


def _hidden_dims(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"--hidden expects comma-separated integers, got {text!r}"
        ) from None


def _add_manifest_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--manifest", required=True, type=Path,
                        help="path to the run manifest JSON")


def _add_feature_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--clamp-multiplier", type=float, default=2.0,
                        help="outlier threshold in standard deviations")
    parser.add_argument("--clamp-scope", choices=("layer", "global"),
                        default="layer")
    parser.add_argument("--no-clamp", action="store_true",
                        help="skip outlier clamping")
    parser.add_argument("--min-params", type=int, default=0,
                        help="drop layers with fewer elements than this")


def _add_cluster_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cluster-space", choices=("raw", "pca2"),
                        default="raw")
    parser.add_argument("--k", type=_k_value, default=None, metavar="INT|auto",
                        help="cluster count; 'auto' picks the scree elbow")
    parser.add_argument("--k-max", type=int, default=10)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--n-init", type=int, default=10)


def _config_from_args(args, out_dir) -> PipelineConfig:
    return PipelineConfig(
        manifest=args.manifest,
        out_dir=out_dir,
        clamp_multiplier=args.clamp_multiplier,
        clamp_scope=args.clamp_scope,
        clamp_enabled=not args.no_clamp,
        min_params=args.min_params,
        cluster_space=getattr(args, "cluster_space", "raw"),
        k=getattr(args, "k", None),
        k_max=getattr(args, "k_max", 10),
        seed=getattr(args, "seed", 42),
        n_init=getattr(args, "n_init", 10),
    )


def _clustering_points(config: PipelineConfig):
    from .decomposition import TrendPCA

    matrix, _ = compute_feature_matrix(config)
    if config.cluster_space == "pca2":
        points = TrendPCA(n_components=2).fit_transform(matrix.values)
    else:
        points = matrix.values
    return matrix, points


def cmd_validate(args) -> int:
    manifest = load_manifest(args.manifest)
    snapshots = load_run(manifest)
    for snap in snapshots:
        total = sum(t.size for t in snap.layers)
        print(f"epoch {snap.epoch_index}: {len(snap.layers)} layers, "
              f"{total} parameters")
    print(f"run {manifest.run_id!r}: {len(snapshots)} snapshots consistent")
    return 0


def cmd_rwc(args) -> int:
    config = _config_from_args(args, args.out.parent)
    matrix, _ = compute_feature_matrix(config)
    write_rwc_csv(matrix, args.out)
    print(f"wrote {args.out} ({matrix.n_layers} layers x "
          f"{matrix.n_transitions} transitions)")
    return 0


def cmd_scree(args) -> int:
    config = _config_from_args(args, args.out.parent)
    _, points = _clustering_points(config)
    curve, _ = scree_models(points, min(config.k_max, points.shape[0]),
                            seed=config.seed, n_init=config.n_init)
    write_scree_csv(curve, args.out)
    print(f"wrote {args.out} (chosen_k={curve.chosen_k})")
    return 0


def cmd_cluster(args) -> int:
    config = _config_from_args(args, args.out.parent)
    matrix, points = _clustering_points(config)
    if config.k is None:
        curve, models = scree_models(points, min(config.k_max, points.shape[0]),
                                     seed=config.seed, n_init=config.n_init)
        model = models[curve.chosen_k]
    else:
        model = kmeans_fit(points, config.k, seed=config.seed,
                           n_init=config.n_init)
    write_clusters_json(matrix.layer_names, model, args.out)
    print(f"wrote {args.out} (k={model.k}, inertia={model.inertia:.6g})")
    return 0


def cmd_analyze(args) -> int:
    config = _config_from_args(args, args.out)
    report = analyze_run(config)
    print(f"wrote report for run {report.run_id!r} to {config.out_dir} "
          f"({len(report.groups)} group(s))")
    return 0


def cmd_train_demo(args) -> int:
    task = SyntheticTask(
        num_classes=args.classes,
        samples_per_class=args.samples_per_class,
        input_dim=args.input_dim,
        spread=args.spread,
        noise=args.noise,
        seed=args.task_seed if args.task_seed is not None else args.seed,
    )
    spec = MlpSpec(input_dim=args.input_dim, num_classes=args.classes,
                   hidden_dims=args.hidden)
    manifest = train_run(
        task, spec, epochs=args.epochs, batch_size=args.batch_size,
        lr=args.lr, seed=args.seed, out_dir=args.out,
        snapshot_dtype=args.snapshot_dtype,
    )
    accuracy = manifest.hyperparameters["final_train_accuracy"]
    print(f"trained {manifest.run_id}: {len(manifest.snapshot_paths)} snapshots, "
          f"final train accuracy {accuracy:.4f}")
    print(f"manifest: {Path(args.out) / 'run.json'}")
    return 0


def cmd_compare(args) -> int:
    runs = []
    for manifest_path in args.manifests:
        config = PipelineConfig(
            manifest=manifest_path,
            out_dir=args.out.parent,
            clamp_multiplier=args.clamp_multiplier,
            clamp_scope=args.clamp_scope,
            clamp_enabled=not args.no_clamp,
            min_params=args.min_params,
        )
        matrix, manifest = compute_feature_matrix(config)
        runs.append((manifest.run_id, matrix))
    write_complexity_comparison(runs, args.out, late_fraction=args.late_fraction)
    print(f"wrote {args.out} comparing {len(runs)} runs")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rwckit",
        description="Layer-wise relative weight change analysis toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a snapshot run for consistency")
    _add_manifest_arg(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("rwc", help="compute the change matrix as CSV")
    _add_manifest_arg(p)
    _add_feature_args(p)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_rwc)

    p = sub.add_parser("scree", help="inertia-vs-K curve with elbow choice")
    _add_manifest_arg(p)
    _add_feature_args(p)
    _add_cluster_args(p)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_scree)

    p = sub.add_parser("cluster", help="cluster layers and write clusters.json")
    _add_manifest_arg(p)
    _add_feature_args(p)
    _add_cluster_args(p)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("analyze", help="full pipeline into a report directory")
    _add_manifest_arg(p)
    _add_feature_args(p)
    _add_cluster_args(p)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train-demo", help="train a demo MLP and export snapshots")
    p.add_argument("--task", choices=("blobs",), default="blobs")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--samples-per-class", type=int, default=300)
    p.add_argument("--input-dim", type=int, default=16)
    p.add_argument("--hidden", type=_hidden_dims, default=(64, 64, 64, 64),
                   metavar="D1,D2,...")
    p.add_argument("--epochs", type=int, default=25)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--task-seed", type=int, default=None,
                   help="dataset seed; defaults to --seed")
    p.add_argument("--spread", type=float, default=5.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--snapshot-dtype", choices=("f32", "f64"), default="f64")
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_train_demo)

    p = sub.add_parser("compare",
                       help="late-layer change share across two or more runs")
    p.add_argument("manifests", nargs="+", type=Path)
    _add_feature_args(p)
    p.add_argument("--late-fraction", type=float, default=0.5)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RwckitError, OSError, ValueError) as exc:
        print(f"ERROR {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

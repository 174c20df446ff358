"""Shared test oracles: naive references kept independent of the library code."""

from __future__ import annotations

import itertools
import math
from pathlib import Path

import numpy as np

from rwckit import LayerTensor, RunManifest, WeightSnapshot, save_manifest, write_snapshot


def ulp_close(a: float, b: float, ulps: int = 8) -> bool:
    """True when a and b differ by at most `ulps` units in the last place."""
    if a == b:
        return True
    scale = np.spacing(max(abs(a), abs(b)))
    return abs(a - b) <= ulps * scale


def naive_rwc_matrix(snapshots, min_params: int = 0):
    """Double-loop reference: plain Python sums, no vectorization."""
    names = []
    rows = []
    for idx, tensor in enumerate(snapshots[0].layers):
        flat0 = [float(v) for v in np.asarray(tensor.values).ravel()]
        if len(flat0) < min_params:
            continue
        names.append(tensor.name)
        row = []
        for t in range(len(snapshots) - 1):
            prev = [float(v) for v in
                    np.asarray(snapshots[t].layers[idx].values).ravel()]
            curr = [float(v) for v in
                    np.asarray(snapshots[t + 1].layers[idx].values).ravel()]
            num = 0.0
            den = 0.0
            for p, c in zip(prev, curr):
                num += abs(c - p)
                den += abs(p)
            row.append(num / den)
        rows.append(row)
    return names, rows


def brute_force_kmeans_inertia(X: np.ndarray, k: int) -> float:
    """Exhaustive-partition optimum over all assignments of points to k clusters."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    best = math.inf
    for assignment in itertools.product(range(k), repeat=n):
        labels = np.asarray(assignment)
        inertia = 0.0
        for c in range(k):
            members = X[labels == c]
            if members.shape[0] == 0:
                continue
            centroid = members.mean(axis=0)
            inertia += float(((members - centroid) ** 2).sum())
        if inertia < best:
            best = inertia
    return best


def snapshots_from_series(series: dict[str, list], start_epoch: int = 0):
    """Build a snapshot sequence from {layer_name: [weights_at_t, ...]}."""
    lengths = {len(v) for v in series.values()}
    assert len(lengths) == 1, "all layers need the same number of epochs"
    (n_epochs,) = lengths
    snapshots = []
    for t in range(n_epochs):
        layers = [
            LayerTensor(name, np.asarray(values[t], dtype=np.float64))
            for name, values in series.items()
        ]
        snapshots.append(WeightSnapshot(epoch_index=start_epoch + t, layers=layers))
    return snapshots


TREND_T = 24
TREND_PER_FAMILY = 10


def trend_family_bases(T: int = TREND_T) -> dict[str, np.ndarray]:
    """Three well-separated trend shapes: rising, falling, flat."""
    t = np.arange(T) / (T - 1)
    return {
        "rise": 0.1 + 0.8 * t,
        "fall": 0.9 - 0.8 * t,
        "flat": np.full(T, 0.1),
    }


def trend_family_rows(seed: int, T: int = TREND_T,
                      per_family: int = TREND_PER_FAMILY):
    """Layer trend curves in 3 families with +/-5% multiplicative noise.

    Returns (names, rows, truth_labels).
    """
    rng = np.random.default_rng(seed)
    names, rows, truth = [], [], []
    for fam_id, (fam, base) in enumerate(trend_family_bases(T).items()):
        for i in range(per_family):
            noise = rng.uniform(-0.05, 0.05, T)
            rows.append(base * (1.0 + noise))
            names.append(f"{fam}{i:02d}")
            truth.append(fam_id)
    return names, np.asarray(rows), np.asarray(truth)


def write_trend_run(out_dir: Path, seed: int, T: int = TREND_T,
                    per_family: int = TREND_PER_FAMILY):
    """Materialize the trend families as a real snapshot run on disk.

    Each layer is a single positive scalar updated as w *= (1 + r_t), so its
    change-ratio curve equals the designed r_t up to float rounding.

    Returns (manifest_path, truth_labels).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names, rows, truth = trend_family_rows(seed, T=T, per_family=per_family)

    weights = np.ones(len(names), dtype=np.float64)
    snapshot_names = []
    for epoch in range(T + 1):
        layers = [
            LayerTensor(name, np.array([w], dtype=np.float64))
            for name, w in zip(names, weights)
        ]
        fname = f"epoch_{epoch:03d}.wsnp"
        write_snapshot(WeightSnapshot(epoch, layers), out_dir / fname)
        snapshot_names.append(fname)
        if epoch < T:
            weights = weights * (1.0 + rows[:, epoch])

    manifest = RunManifest(
        run_id=f"trends_seed{seed}",
        model_name="synthetic_trends",
        dataset_name="synthetic",
        snapshot_paths=snapshot_names,
        base_dir=out_dir,
    )
    manifest_path = out_dir / "run.json"
    save_manifest(manifest, manifest_path)
    return manifest_path, truth

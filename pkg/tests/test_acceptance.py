"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete. Stated runtime budgets are asserted.
"""

import functools
import json
import time

import numpy as np
import pytest
from sklearn.linear_model import LogisticRegression

from rwckit import (
    RwcMatrix,
    TrendPCA,
    adjusted_rand_index,
    build_rwc_matrix,
    clamp_outliers,
    kmeans_fit,
    load_manifest,
    scree_models,
)
from rwckit.cli import main
from rwckit.cluster import _elbow_k
from rwckit.trainer import Mlp, MlpSpec, SyntheticTask, make_blobs

from helpers import (
    brute_force_kmeans_inertia,
    naive_rwc_matrix,
    snapshots_from_series,
    trend_family_rows,
    ulp_close,
    write_trend_run,
)


def criterion(number, description):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                detail = fn(*args, **kwargs)
            except BaseException:
                print(f"[ACCEPTANCE] criterion {number} FAIL - {description}")
                raise
            elapsed = time.perf_counter() - start
            extra = f" ({detail})" if detail else ""
            print(f"[ACCEPTANCE] criterion {number} PASS - {description}"
                  f"{extra} [{elapsed:.2f}s]")
        return wrapper
    return decorate


@criterion(1, "change-ratio oracle: 200 random runs within 8 ulps of the "
              "naive reference, scale invariance over c in [1e-3, 1e3]")
def test_criterion_1_rwc_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(1001)
    for _ in range(200):
        n_layers = int(rng.integers(1, 6))
        n_epochs = int(rng.integers(2, 7))
        series = {}
        for i in range(n_layers):
            size = int(rng.integers(1, 12))
            series[f"l{i}"] = [
                rng.standard_normal(size) + 0.7 for _ in range(n_epochs)
            ]
        snaps = snapshots_from_series(series)
        matrix = build_rwc_matrix(snaps)
        names, rows = naive_rwc_matrix(snaps)
        assert matrix.layer_names == names
        for got_row, ref_row in zip(matrix.values, rows):
            for got, ref in zip(got_row, ref_row):
                assert ulp_close(got, ref, ulps=8)

        # random c in [1e-3, 1e3] drawn from the exactly representable
        # power-of-two grid: scaling the inputs is then rounding-free, so
        # any ulp drift is attributable to the operation itself
        c = float(2.0 ** rng.integers(-9, 10))
        scaled = snapshots_from_series({
            name: [c * np.asarray(v) for v in values]
            for name, values in series.items()
        })
        scaled_matrix = build_rwc_matrix(scaled)
        for a_row, b_row in zip(matrix.values, scaled_matrix.values):
            for a, b in zip(a_row, b_row):
                assert ulp_close(a, b, ulps=8)
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"runtime {elapsed:.2f}s exceeds 5s budget"
    return f"200 runs in {elapsed:.2f}s"


@criterion(2, "outlier clamp: exact spike example, constant/singleton rows "
              "unchanged, replaced entries equal the original mean")
def test_criterion_2_clamp_suite():
    start = time.perf_counter()

    spike = RwcMatrix(["row"], [[1, 1, 1, 1, 1, 1, 1, 1, 1, 21]])
    np.testing.assert_array_equal(
        clamp_outliers(spike, multiplier=2.0).values,
        [[1, 1, 1, 1, 1, 1, 1, 1, 1, 3]],
    )

    constant = RwcMatrix(["row"], [[5.0, 5.0, 5.0]])
    np.testing.assert_array_equal(clamp_outliers(constant).values,
                                  constant.values)
    singleton = RwcMatrix(["row"], [[7.5]])
    np.testing.assert_array_equal(clamp_outliers(singleton).values, [[7.5]])

    rng = np.random.default_rng(1002)
    for _ in range(100):
        row = np.abs(rng.standard_normal(int(rng.integers(1, 40)))) * 5.0
        multiplier = float(rng.uniform(0.5, 3.0))
        out = clamp_outliers(RwcMatrix(["r"], row[None, :]),
                             multiplier=multiplier).values[0]
        mean, std = row.mean(), row.std()
        for orig, new in zip(row, out):
            if abs(orig - mean) > multiplier * std:
                assert new == mean
            else:
                assert new == orig
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"runtime {elapsed:.2f}s exceeds 1s budget"
    return f"{elapsed:.2f}s"


@criterion(3, "k-means equals the exhaustive-partition optimum on >=95/100 "
              "small instances and never undercuts it; objective is checked "
              "non-increasing at every Lloyd iteration")
def test_criterion_3_kmeans_brute_force():
    start = time.perf_counter()
    rng = np.random.default_rng(1003)
    equal = 0
    for _ in range(100):
        n = int(rng.integers(3, 9))
        d = int(rng.integers(1, 3))
        k = int(rng.integers(2, 4))
        X = rng.standard_normal((n, d))
        model = kmeans_fit(X, k, seed=0, n_init=50)
        best = brute_force_kmeans_inertia(X, k)
        tol = 1e-9 * max(1.0, best)
        assert model.inertia >= best - tol, "inertia undercuts the optimum"
        if model.inertia <= best + tol:
            equal += 1
        hist = model.inertia_history
        assert all(b <= a * (1 + 1e-12) + 1e-15
                   for a, b in zip(hist, hist[1:]))
    assert equal >= 95, f"matched optimum only {equal}/100 times"
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"runtime {elapsed:.2f}s exceeds 30s budget"
    return f"{equal}/100 optimal in {elapsed:.2f}s"


@criterion(4, "synthetic 3-family recovery: auto-K picks 3 with ARI >= 0.9 "
              "on >=95/100 seeds through the analysis pipeline")
def test_criterion_4_cluster_recovery(tmp_path):
    start = time.perf_counter()
    recovered = 0
    for seed in range(100):
        names, rows, truth = trend_family_rows(seed)
        matrix = clamp_outliers(RwcMatrix(names, rows))
        k_max = min(10, np.unique(matrix.values, axis=0).shape[0])
        curve, models = scree_models(matrix.values, k_max, seed=seed,
                                     n_init=10)
        model = models[curve.chosen_k]
        ari = adjusted_rand_index(truth, model.assignments)
        if curve.chosen_k == 3 and ari >= 0.9:
            recovered += 1
    assert recovered >= 95, f"recovered only {recovered}/100 seeds"

    # one seed exercised end to end through files and the CLI
    manifest, truth = write_trend_run(tmp_path / "run", seed=0)
    out = tmp_path / "report"
    assert main(["analyze", "--manifest", str(manifest), "--out", str(out),
                 "--seed", "0"]) == 0
    doc = json.loads((out / "report.json").read_text())
    group = doc["groups"][0]
    assert group["group"] == "all"
    assert group["scree"]["chosen_k"] == 3
    labels = [a["cluster"] for a in group["cluster"]["assignments"]]
    assert adjusted_rand_index(truth, labels) >= 0.9

    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"runtime {elapsed:.2f}s exceeds 10s budget"
    return f"{recovered}/100 seeds in {elapsed:.2f}s"


@criterion(5, "elbow rule: inertia [100, 20, 15, 12, 10] chooses K=2")
def test_criterion_5_elbow_rule():
    assert _elbow_k([1, 2, 3, 4, 5], [100.0, 20.0, 15.0, 12.0, 10.0]) == 2
    return None


@criterion(6, "PCA: orthonormality <= 1e-9, rank-1 ratio 1.0, rank-2 "
              "reconstruction <= 1e-9 rel, deterministic over 100 repeats")
def test_criterion_6_pca_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(1006)

    for _ in range(50):
        X = rng.standard_normal((int(rng.integers(3, 15)),
                                 int(rng.integers(2, 10))))
        k = min(2, min(X.shape))
        pca = TrendPCA(k).fit(X)
        gram = pca.components_ @ pca.components_.T
        assert np.abs(gram - np.eye(k)).max() <= 1e-9
        assert pca.explained_variance_[0] >= pca.explained_variance_[-1]

    line = np.outer(rng.standard_normal(6), rng.standard_normal(4))
    pca = TrendPCA(1).fit(line)
    assert abs(pca.explained_variance_ratio_[0] - 1.0) <= 1e-9

    for _ in range(20):
        basis = rng.standard_normal((2, 7))
        coeffs = rng.standard_normal((9, 2))
        X = coeffs @ basis + rng.standard_normal(7)
        pca = TrendPCA(2).fit(X)
        rebuilt = pca.inverse_transform(pca.transform(X))
        assert np.linalg.norm(rebuilt - X) / np.linalg.norm(X) <= 1e-9

    X = rng.standard_normal((10, 6))
    ref = TrendPCA(2).fit(X)
    for _ in range(100):
        again = TrendPCA(2).fit(X)
        assert np.array_equal(again.components_, ref.components_)
        for comp in again.components_:
            assert comp[int(np.argmax(np.abs(comp)))] > 0

    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"runtime {elapsed:.2f}s exceeds 5s budget"
    return f"{elapsed:.2f}s"


@criterion(7, "analytic gradients match central differences (h=1e-4) within "
              "1e-5 relative on a 2-16-3 MLP over 20 random points")
def test_criterion_7_gradient_check():
    start = time.perf_counter()
    rng = np.random.default_rng(1007)
    spec = MlpSpec(input_dim=2, num_classes=3, hidden_dims=(16,))
    h = 1e-4

    def draw_smooth_point(seed):
        # the loss is non-differentiable where a hidden pre-activation is 0;
        # central differences are only valid when every pre-activation stays
        # on one side of the kink across the +/-h sweep, so reject draws
        # whose pre-activations sit within perturbation reach of 0
        model = Mlp(spec, np.random.default_rng(seed))
        X = rng.standard_normal((5, 2))
        y = rng.integers(0, 3, 5)
        _, (_, pre_acts) = model.forward(X)
        margin = 20 * h * max(1.0, float(np.abs(X).max()))
        if min(float(np.abs(z).min()) for z in pre_acts[:-1]) <= margin:
            return None
        return model, X, y

    checked = 0
    seed = 2000
    while checked < 20:
        seed += 1
        drawn = draw_smooth_point(seed)
        if drawn is None:
            continue
        model, X, y = drawn
        _, grad_w, grad_b = model.loss_and_grads(X, y)
        analytic = grad_w + grad_b
        for param, grad in zip(model.weights + model.biases, analytic):
            it = np.nditer(param, flags=["multi_index"])
            while not it.finished:
                idx = it.multi_index
                original = param[idx]
                param[idx] = original + h
                plus, _, _ = model.loss_and_grads(X, y)
                param[idx] = original - h
                minus, _, _ = model.loss_and_grads(X, y)
                param[idx] = original
                fd = (plus - minus) / (2 * h)
                assert abs(grad[idx] - fd) <= 1e-5 * max(abs(fd), abs(grad[idx])) + 1e-8
                it.iternext()
        checked += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"runtime {elapsed:.2f}s exceeds 10s budget"
    return f"{checked} points in {elapsed:.2f}s"


@criterion(8, "end-to-end desk-scale run: 26 snapshots, finite non-negative "
              "L x 25 matrix, train accuracy >= 0.95, byte-identical re-run")
def test_criterion_8_end_to_end(tmp_path):
    start = time.perf_counter()
    run_dir = tmp_path / "run"
    assert main(["train-demo", "--task", "blobs", "--classes", "3",
                 "--samples-per-class", "300", "--epochs", "25",
                 "--lr", "0.001", "--batch-size", "32", "--seed", "42",
                 "--out", str(run_dir)]) == 0

    manifest = load_manifest(run_dir / "run.json")
    assert len(manifest.snapshot_paths) == 26
    accuracy = manifest.hyperparameters["final_train_accuracy"]
    assert accuracy >= 0.95, f"train accuracy {accuracy:.4f} below 0.95"

    # separability cross-check: a linear baseline must also clear the bar
    task = SyntheticTask(num_classes=3, samples_per_class=300, input_dim=16,
                         seed=42)
    X, y = make_blobs(task)
    baseline = LogisticRegression(max_iter=1000).fit(X, y).score(X, y)
    assert baseline >= 0.95

    out1, out2 = tmp_path / "report1", tmp_path / "report2"
    for out in (out1, out2):
        assert main(["analyze", "--manifest", str(run_dir / "run.json"),
                     "--out", str(out), "--seed", "42"]) == 0

    doc = json.loads((out1 / "report.json").read_text())
    group = doc["groups"][0]
    assert len(group["layers"]) == 10  # 5 weight + 5 bias tensors
    assert group["n_transitions"] == 25

    rwc_lines = (out1 / group["directory"] / "rwc.csv").read_text().splitlines()
    assert len(rwc_lines) == 1 + 10
    for line in rwc_lines[1:]:
        values = [float(v) for v in line.split(",")[1:]]
        assert len(values) == 25
        assert all(np.isfinite(v) and v >= 0 for v in values)

    tree1 = {p.relative_to(out1).as_posix(): p.read_bytes()
             for p in out1.rglob("*") if p.is_file()}
    tree2 = {p.relative_to(out2).as_posix(): p.read_bytes()
             for p in out2.rglob("*") if p.is_file()}
    assert tree1 == tree2

    elapsed = time.perf_counter() - start
    assert elapsed < 120.0, f"runtime {elapsed:.2f}s exceeds 2min budget"
    return f"accuracy {accuracy:.4f} in {elapsed:.2f}s"


@criterion(9, "task-complexity comparison: late-layer share report emitted "
              "for C=3 vs C=50 (direction reported, not asserted)")
def test_criterion_9_complexity_comparison(tmp_path):
    runs = {}
    for classes in (3, 50):
        out = tmp_path / f"c{classes}"
        assert main(["train-demo", "--task", "blobs",
                     "--classes", str(classes),
                     "--samples-per-class", "60", "--epochs", "25",
                     "--lr", "0.001", "--batch-size", "32", "--seed", "42",
                     "--out", str(out)]) == 0
        runs[classes] = out / "run.json"

    cmp_path = tmp_path / "comparison.json"
    assert main(["compare", str(runs[3]), str(runs[50]),
                 "--out", str(cmp_path)]) == 0

    doc = json.loads(cmp_path.read_text())
    assert doc["metric"] == "late_layer_rwc_share"
    assert len(doc["runs"]) == 2
    shares = {}
    for entry in doc["runs"]:
        assert len(entry["per_transition_share"]) == 25
        assert all(np.isfinite(v) for v in entry["per_transition_share"])
        shares[entry["label"]] = entry["mean_share"]
    direction = "higher" if shares["blobs_c50_seed42"] > shares["blobs_c3_seed42"] \
        else "not higher"
    return (f"mean late-layer share C=3 {shares['blobs_c3_seed42']:.4f}, "
            f"C=50 {shares['blobs_c50_seed42']:.4f} "
            f"(C=50 {direction}; observational)")

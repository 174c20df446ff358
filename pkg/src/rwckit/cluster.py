"""k-means clustering of layer trends with k-means++ seeding and elbow selection.

Restarts are seeded deterministically (restart ``i`` uses generator seed
``seed + i``) and the best-of-restarts model is returned. The per-iteration
objective is checked to be non-increasing on every Lloyd step; empty clusters
are repaired by relabeling the farthest point, which preserves that guarantee
because the repaired partition's within-cluster sum of squares can only drop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .errors import (
    DegenerateInputError,
    InvalidCurveError,
    KMaxTooLargeError,
    KTooLargeError,
    TooFewDistinctPointsError,
)
from .validation import as_float_matrix, check_equal_length

INERTIA_RTOL = 1e-9


@dataclass
class ClusterModel:
    """Fitted clustering: centroids, assignments, objective, and provenance."""

    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    seed: int
    n_init: int
    iterations_run: int
    inertia_history: list[float] = field(default_factory=list, repr=False)


@dataclass
class ScreeCurve:
    """Inertia over candidate cluster counts plus the elbow choice."""

    ks: list[int]
    inertias: list[float]
    chosen_k: int

    def __post_init__(self):
        if not self.ks:
            raise InvalidCurveError("scree curve has no candidate K values")
        if len(self.ks) != len(self.inertias):
            raise InvalidCurveError("ks and inertias differ in length")
        if list(self.ks) != sorted(self.ks) or len(set(self.ks)) != len(self.ks):
            raise InvalidCurveError("ks must be strictly ascending")
        if self.chosen_k not in self.ks:
            raise InvalidCurveError(f"chosen_k={self.chosen_k} not among ks")
        slack = INERTIA_RTOL * self.inertias[0]
        for a, b in zip(self.inertias, self.inertias[1:]):
            if b > a + slack:
                raise InvalidCurveError(
                    f"inertia increases along K ({a} -> {b}); "
                    "raise n_init or inspect the data"
                )


def compute_inertia(X, labels, centroids) -> float:
    """Sum of squared distances of points to their assigned centroids."""
    X = np.asarray(X, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    diff = X - centroids[np.asarray(labels)]
    return float((diff * diff).sum())


def kmeans_plusplus(X, k: int, rng: np.random.Generator) -> np.ndarray:
    """Choose k initial centroids by squared-distance (D^2) sampling.

    The first centroid is drawn uniformly from the rows of ``X``; each later
    one is drawn with probability proportional to the squared Euclidean
    distance to the nearest centroid chosen so far.
    """
    X = as_float_matrix(X)
    n_distinct = np.unique(X, axis=0).shape[0]
    if n_distinct < k:
        raise TooFewDistinctPointsError(
            f"need at least k={k} distinct points, got {n_distinct}"
        )
    return _seed_centroids(X, k, rng)


def _seed_centroids(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    # distinct-point precondition already checked by the caller
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]), dtype=np.float64)
    idx = int(rng.integers(n))
    centroids[0] = X[idx]
    diff = X - centroids[0]
    d2 = (diff * diff).sum(axis=1)
    for j in range(1, k):
        # inverse-CDF draw proportional to d2; zero-mass points are never hit
        cdf = np.cumsum(d2)
        idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        centroids[j] = X[idx]
        diff = X - centroids[j]
        d2 = np.minimum(d2, (diff * diff).sum(axis=1))
    return centroids


def _lloyd(X: np.ndarray, centroids: np.ndarray, max_iter: int, tol: float):
    """Lloyd iterations from given initial centroids.

    Returns (labels, centroids, inertia, n_iter, history). The recorded
    objective is the within-cluster sum of squares after each mean update,
    which is mathematically non-increasing; a violation beyond float slack
    indicates a broken objective computation and raises immediately.
    """
    n, _ = X.shape
    k = centroids.shape[0]
    x_sq = (X * X).sum(axis=1)
    rows = np.arange(n)
    history: list[float] = []
    prev_inertia = np.inf
    labels = np.zeros(n, dtype=np.intp)

    for _ in range(max_iter):
        c_sq = (centroids * centroids).sum(axis=1)
        d2 = x_sq[:, None] + c_sq[None, :] - 2.0 * (X @ centroids.T)
        labels = np.argmin(d2, axis=1)
        counts = np.bincount(labels, minlength=k)

        if (counts == 0).any():
            pointd = np.maximum(d2[rows, labels], 0.0)
            for empty in np.flatnonzero(counts == 0):
                movable = counts[labels] >= 2
                p = int(np.argmax(np.where(movable, pointd, -1.0)))
                counts[labels[p]] -= 1
                counts[empty] += 1
                labels[p] = empty
                pointd[p] = 0.0

        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, X)
        new_centroids = sums / counts[:, None]

        diff = X - new_centroids[labels]
        inertia = float((diff * diff).sum())
        if inertia > prev_inertia * (1.0 + 1e-12) + 1e-15:
            raise RuntimeError(
                f"k-means objective increased ({prev_inertia} -> {inertia})"
            )
        history.append(inertia)
        prev_inertia = inertia

        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if shift <= tol:
            break

    return labels, centroids, prev_inertia, len(history), history


def kmeans_fit(X, k: int, seed: int = 42, n_init: int = 10,
               max_iter: int = 300, tol: float = 1e-6) -> ClusterModel:
    """Best-of-``n_init`` k-means with k-means++ seeding.

    Restart ``i`` draws its seeding from ``numpy.random.default_rng(seed + i)``;
    the model with the lowest inertia wins, earlier restarts winning ties.
    """
    X = as_float_matrix(X)
    n = X.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise KTooLargeError(f"k={k} exceeds the number of points ({n})")
    if n_init < 1 or max_iter < 1 or tol <= 0:
        raise ValueError("n_init and max_iter must be >= 1 and tol > 0")
    n_distinct = np.unique(X, axis=0).shape[0]
    if n_distinct < k:
        raise DegenerateInputError(
            f"only {n_distinct} distinct points for k={k} clusters"
        )

    best: ClusterModel | None = None
    # k=1 always converges to the global mean; extra restarts are identical
    effective_n_init = 1 if k == 1 else n_init
    for restart in range(effective_n_init):
        rng = np.random.default_rng(seed + restart)
        init = _seed_centroids(X, k, rng)
        labels, centroids, inertia, n_iter, history = _lloyd(X, init, max_iter, tol)
        if best is None or inertia < best.inertia:
            best = ClusterModel(
                k=k,
                centroids=centroids,
                assignments=labels,
                inertia=inertia,
                seed=seed,
                n_init=n_init,
                iterations_run=n_iter,
                inertia_history=history,
            )
    return best


class KMeans(BaseEstimator, ClusterMixin):
    """Estimator wrapper around :func:`kmeans_fit`.

    Parameters
    ----------
    n_clusters : int, default=2
    random_state : int, default=42
        Base seed; restart ``i`` uses ``random_state + i``.
    n_init : int, default=10
    max_iter : int, default=300
    tol : float, default=1e-6
        Convergence threshold on the maximum centroid displacement.

    Attributes
    ----------
    cluster_centers_, labels_, inertia_, n_iter_
    """

    def __init__(self, n_clusters: int = 2, random_state: int = 42,
                 n_init: int = 10, max_iter: int = 300, tol: float = 1e-6):
        self.n_clusters = n_clusters
        self.random_state = random_state
        self.n_init = n_init
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        model = kmeans_fit(
            X, self.n_clusters, seed=self.random_state, n_init=self.n_init,
            max_iter=self.max_iter, tol=self.tol,
        )
        self.cluster_centers_ = model.centroids
        self.labels_ = model.assignments
        self.inertia_ = model.inertia
        self.n_iter_ = model.iterations_run
        self.model_ = model
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "cluster_centers_")
        X = as_float_matrix(X)
        c = self.cluster_centers_
        d2 = (X * X).sum(1)[:, None] + (c * c).sum(1)[None, :] - 2.0 * (X @ c.T)
        return np.argmin(d2, axis=1)


def _elbow_k(ks: list[int], inertias: list[float]) -> int:
    """Largest second difference of the inertia curve; ties go to smaller K.

    With only K=1..2 available there is no interior point, so 2 is returned.
    """
    if len(ks) == 2:
        return 2
    by_k = dict(zip(ks, inertias))
    best_k, best_sd = None, -np.inf
    for K in ks[1:-1]:
        sd = (by_k[K - 1] - by_k[K]) - (by_k[K] - by_k[K + 1])
        if sd > best_sd:
            best_k, best_sd = K, sd
    return best_k


def scree_models(X, k_max: int, seed: int = 42,
                 n_init: int = 10) -> tuple[ScreeCurve, dict[int, ClusterModel]]:
    """Fit K = 1..k_max and pick the elbow; returns the curve and all models.

    Each K >= 2 additionally tries one warm start built from the K-1 model
    plus its farthest point. That refinement never loses to the cold fits and
    makes the inertia curve non-increasing by construction, at the cost of
    evaluating the K values sequentially.
    """
    X = as_float_matrix(X)
    n = X.shape[0]
    if k_max < 2:
        raise ValueError(f"k_max must be >= 2, got {k_max}")
    if k_max > n:
        raise KMaxTooLargeError(f"k_max={k_max} exceeds the number of points ({n})")

    models: dict[int, ClusterModel] = {}
    for k in range(1, k_max + 1):
        model = kmeans_fit(X, k, seed=seed, n_init=n_init)
        if k > 1:
            prev = models[k - 1]
            pointd = ((X - prev.centroids[prev.assignments]) ** 2).sum(axis=1)
            warm_init = np.vstack([prev.centroids, X[int(np.argmax(pointd))]])
            labels, centroids, inertia, n_iter, history = _lloyd(
                X, warm_init, max_iter=300, tol=1e-6
            )
            if inertia < model.inertia:
                model = ClusterModel(
                    k=k, centroids=centroids, assignments=labels,
                    inertia=inertia, seed=seed, n_init=n_init,
                    iterations_run=n_iter, inertia_history=history,
                )
        models[k] = model

    ks = list(range(1, k_max + 1))
    inertias = [models[k].inertia for k in ks]
    curve = ScreeCurve(ks=ks, inertias=inertias, chosen_k=_elbow_k(ks, inertias))
    return curve, models


def scree(X, k_max: int, seed: int = 42, n_init: int = 10) -> ScreeCurve:
    """Inertia-vs-K curve with the elbow marked as ``chosen_k``."""
    curve, _ = scree_models(X, k_max, seed=seed, n_init=n_init)
    return curve


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected agreement between two labelings, in [-1, 1].

    Computed from the pair-counting contingency table with exact integer
    binomials; label permutations do not change the result.
    """
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    check_equal_length(a, b, "label sequences")
    n = a.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 labels, got {n}")

    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def comb2(x):
        return int(x) * (int(x) - 1) // 2

    sum_cells = sum(comb2(v) for v in table.ravel())
    sum_rows = sum(comb2(v) for v in table.sum(axis=1))
    sum_cols = sum(comb2(v) for v in table.sum(axis=0))
    total = comb2(n)

    expected = sum_rows * sum_cols / total
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))

"""Principal component reduction of layer trend trajectories.

Projects the layers x transitions matrix onto its top variance directions
(2 by default) for scree visualization and as an optional clustering space.
Implemented as an eigendecomposition of the small transitions x transitions
covariance; fully deterministic via an explicit sign convention and an
equal-eigenvalue tie-break.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import (
    DegenerateDataError,
    DimensionMismatchError,
    DimensionTooSmallError,
)
from .validation import as_float_matrix


def _normalize_sign(component: np.ndarray) -> np.ndarray:
    # first entry attaining the max absolute value is made positive
    pivot = int(np.argmax(np.abs(component)))
    return -component if component[pivot] < 0 else component


class TrendPCA(BaseEstimator, TransformerMixin):
    """Deterministic PCA over trend matrices.

    Parameters
    ----------
    n_components : int, default=2
        Number of principal directions to keep; must not exceed
        ``min(n_rows, n_columns)`` of the training matrix.

    Attributes
    ----------
    mean_ : ndarray of shape (n_columns,)
        Column means of the training matrix.
    components_ : ndarray of shape (n_components, n_columns)
        Orthonormal rows in descending eigenvalue order. Within each
        component the entry of largest absolute value is positive; exactly
        tied eigenvalues are ordered lexicographically descending.
    explained_variance_ : ndarray of shape (n_components,)
        Population variance (divide-by-N) captured by each component.
    explained_variance_ratio_ : ndarray of shape (n_components,)
        ``explained_variance_`` divided by the total population variance.
    """

    def __init__(self, n_components: int = 2):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = as_float_matrix(X)
        n_rows, n_cols = X.shape
        if self.n_components < 1:
            raise ValueError(f"n_components must be >= 1, got {self.n_components}")
        if n_rows < 2:
            raise DimensionTooSmallError(
                f"need at least 2 rows to fit, got {n_rows}"
            )
        if self.n_components > min(n_rows, n_cols):
            raise DimensionTooSmallError(
                f"n_components={self.n_components} exceeds "
                f"min(n_rows, n_cols)={min(n_rows, n_cols)}"
            )

        mean = X.mean(axis=0)
        centered = X - mean
        if not centered.any():
            raise DegenerateDataError(
                "all rows are identical; the centered matrix is exactly zero"
            )

        cov = centered.T @ centered / n_rows
        eigvals, eigvecs = np.linalg.eigh(cov)
        eigvals = np.maximum(eigvals, 0.0)  # clip eigh roundoff on a PSD matrix

        order = np.argsort(-eigvals, kind="stable")
        eigvals = eigvals[order]
        components = [_normalize_sign(eigvecs[:, j]) for j in order]

        # exactly equal eigenvalues: order their components lexicographically
        # descending so repeated fits are byte-identical
        start = 0
        while start < len(eigvals):
            stop = start
            while stop + 1 < len(eigvals) and eigvals[stop + 1] == eigvals[start]:
                stop += 1
            if stop > start:
                components[start:stop + 1] = sorted(
                    components[start:stop + 1], key=tuple, reverse=True
                )
            start = stop + 1

        total = float(eigvals.sum())
        k = self.n_components
        self.mean_ = mean
        self.components_ = np.vstack(components[:k])
        self.explained_variance_ = eigvals[:k].copy()
        self.explained_variance_ratio_ = self.explained_variance_ / total
        self.n_features_in_ = n_cols
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "components_")
        X = as_float_matrix(X)
        if X.shape[1] != self.mean_.shape[0]:
            raise DimensionMismatchError(
                f"expected {self.mean_.shape[0]} columns, got {X.shape[1]}"
            )
        return (X - self.mean_) @ self.components_.T

    def inverse_transform(self, scores) -> np.ndarray:
        check_is_fitted(self, "components_")
        scores = as_float_matrix(scores, "scores")
        if scores.shape[1] != self.components_.shape[0]:
            raise DimensionMismatchError(
                f"expected {self.components_.shape[0]} score columns, "
                f"got {scores.shape[1]}"
            )
        return scores @ self.components_ + self.mean_

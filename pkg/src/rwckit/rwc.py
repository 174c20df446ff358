"""Relative weight change: per-layer change ratios and outlier clamping.

The change ratio for a layer between consecutive epochs is the L1 norm of the
elementwise weight difference divided by the L1 norm of the earlier weights.
Stacking one row per layer and one column per epoch transition yields the
feature matrix that the clustering stages consume.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import (
    LengthMismatchError,
    NoLayersRemainingError,
    ZeroDenominatorError,
)
from .snapshots import WeightSnapshot, validate_run
from .validation import as_float_matrix, check_positive

CLAMP_SCOPES = ("layer", "global")


@dataclass
class RwcMatrix:
    """Layers x transitions matrix of change ratios.

    Row ``l`` tracks one layer; column ``t`` holds its relative weight change
    between snapshot ``t`` and snapshot ``t + 1``. Entries are finite and
    non-negative.
    """

    layer_names: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = as_float_matrix(self.values, "values")
        if len(self.layer_names) != self.values.shape[0]:
            raise ValueError(
                f"{len(self.layer_names)} layer names for "
                f"{self.values.shape[0]} rows"
            )
        if self.values.shape[1] < 1:
            raise ValueError("matrix needs at least one transition column")
        if self.values.size and self.values.min() < 0:
            raise ValueError("change ratios must be non-negative")

    @property
    def n_layers(self) -> int:
        return self.values.shape[0]

    @property
    def n_transitions(self) -> int:
        return self.values.shape[1]

    def column_labels(self) -> list[str]:
        return [f"t{i}" for i in range(self.n_transitions)]


def rwc_layer(prev, curr) -> float:
    """Relative weight change between two flat weight vectors.

    Returns ``||curr - prev||_1 / ||prev||_1``; scale-invariant and >= 0.
    """
    prev = np.asarray(prev, dtype=np.float64).ravel()
    curr = np.asarray(curr, dtype=np.float64).ravel()
    if prev.size != curr.size:
        raise LengthMismatchError(
            f"weight vectors have different lengths: {prev.size} vs {curr.size}"
        )
    if prev.size == 0:
        raise ValueError("weight vectors must be non-empty")
    if not (np.all(np.isfinite(prev)) and np.all(np.isfinite(curr))):
        raise ValueError("weight vectors contain non-finite values")
    denom = float(np.abs(prev).sum())
    if denom == 0.0:
        raise ZeroDenominatorError("previous weights have zero L1 norm")
    return float(np.abs(curr - prev).sum() / denom)


def build_rwc_matrix(snapshots: Sequence[WeightSnapshot],
                     min_params: int = 0) -> RwcMatrix:
    """Assemble the layers x transitions change matrix from a snapshot run.

    Layers with fewer than ``min_params`` elements are dropped (bias vectors
    and scalar normalization parameters are typically filtered here).
    """
    validate_run(snapshots)
    if min_params < 0:
        raise ValueError(f"min_params must be >= 0, got {min_params}")

    kept = [
        i for i, tensor in enumerate(snapshots[0].layers)
        if tensor.size >= min_params
    ]
    if not kept:
        raise NoLayersRemainingError(
            f"min_params={min_params} filtered out all "
            f"{len(snapshots[0].layers)} layers"
        )

    names = [snapshots[0].layers[i].name for i in kept]
    n_transitions = len(snapshots) - 1
    values = np.empty((len(kept), n_transitions), dtype=np.float64)
    for row, i in enumerate(kept):
        for t in range(n_transitions):
            prev = snapshots[t].layers[i].values
            curr = snapshots[t + 1].layers[i].values
            try:
                values[row, t] = rwc_layer(prev, curr)
            except ZeroDenominatorError as exc:
                raise ZeroDenominatorError(
                    f"layer {names[row]!r} has zero L1 norm at transition {t} "
                    f"(epoch {snapshots[t].epoch_index})"
                ) from exc
    return RwcMatrix(layer_names=names, values=values)


def _clamp_population(values: np.ndarray, multiplier: float) -> np.ndarray:
    """Replace entries deviating more than multiplier*std from the mean.

    Population (divide-by-N) statistics; a zero-spread population passes
    through unchanged because no deviation can exceed zero.
    """
    mean = values.mean()
    std = values.std()
    out = values.copy()
    out[np.abs(values - mean) > multiplier * std] = mean
    return out


def clamp_outliers(matrix: RwcMatrix, multiplier: float = 2.0,
                   scope: str = "layer") -> RwcMatrix:
    """Return a new matrix with population outliers pulled to the mean.

    With ``scope="layer"`` each row is its own sample population; with
    ``scope="global"`` the whole matrix is one population. The input matrix
    is never mutated.
    """
    check_positive(multiplier, "multiplier")
    if scope not in CLAMP_SCOPES:
        raise ValueError(f"scope must be one of {CLAMP_SCOPES}, got {scope!r}")
    if scope == "global":
        clamped = _clamp_population(matrix.values.ravel(), multiplier)
        clamped = clamped.reshape(matrix.values.shape)
    else:
        clamped = np.vstack([
            _clamp_population(row, multiplier) for row in matrix.values
        ])
    return RwcMatrix(layer_names=list(matrix.layer_names), values=clamped)


class OutlierClamp(BaseEstimator, TransformerMixin):
    """Stateless transformer form of :func:`clamp_outliers`.

    Population statistics are computed from the matrix being transformed,
    so ``fit`` only validates parameters. Accepts either an
    :class:`RwcMatrix` or a plain 2-D array and returns the same kind.

    Parameters
    ----------
    multiplier : float, default=2.0
        Deviations beyond ``multiplier * std`` are replaced by the mean.
    scope : {"layer", "global"}, default="layer"
        Whether each row or the whole matrix forms the sample population.
    """

    def __init__(self, multiplier: float = 2.0, scope: str = "layer"):
        self.multiplier = multiplier
        self.scope = scope

    def _check_params(self) -> None:
        check_positive(self.multiplier, "multiplier")
        if self.scope not in CLAMP_SCOPES:
            raise ValueError(
                f"scope must be one of {CLAMP_SCOPES}, got {self.scope!r}"
            )

    def fit(self, X, y=None):
        self._check_params()
        return self

    def transform(self, X):
        self._check_params()
        if isinstance(X, RwcMatrix):
            return clamp_outliers(X, self.multiplier, self.scope)
        arr = as_float_matrix(X)
        wrapped = RwcMatrix([f"row{i}" for i in range(arr.shape[0])], arr)
        return clamp_outliers(wrapped, self.multiplier, self.scope).values


def write_rwc_csv(matrix: RwcMatrix, path_or_file) -> None:
    """CSV export: header ``layer,t0..t{T-1}``, full round-trip precision."""
    def _write(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["layer"] + matrix.column_labels())
        for name, row in zip(matrix.layer_names, matrix.values):
            writer.writerow([name] + [repr(v) for v in row.tolist()])

    if isinstance(path_or_file, io.TextIOBase):
        _write(path_or_file)
    else:
        with open(Path(path_or_file), "w", encoding="utf-8", newline="") as fh:
            _write(fh)

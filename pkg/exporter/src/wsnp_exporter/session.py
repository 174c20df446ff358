"""Epoch-boundary export of named model parameters to WSNP snapshot files.

The session depends only on a "named parameter map of numeric arrays": any
mapping from layer name to something ``numpy.asarray`` accepts, including
framework tensors exposing ``detach`` / ``cpu`` / ``numpy``. Snapshot bytes
follow the published WSNP layout (little-endian; magic ``WSNP``; version 1;
flags 0; epoch and layer count as u32; per layer a u16-length UTF-8 name,
u8 dtype code 0=f32 / 1=f64, u8 rank, u32 dims, then the row-major IEEE-754
payload), so any conforming reader can consume them. The manifest JSON is
rewritten atomically after every capture.
"""

from __future__ import annotations

import json
import os
import re
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"WSNP"
VERSION = 1

DTYPE_POLICIES = ("cast-f32", "keep")


class ExportError(Exception):
    """Base class for exporter failures."""


class NonFiniteParameterError(ExportError):
    """A parameter contains NaN or infinity; nothing was written."""


class EmptySessionError(ExportError):
    """finalize() was called before any capture succeeded."""


def _compile_patterns(patterns) -> list[re.Pattern] | None:
    if patterns is None:
        return None
    if isinstance(patterns, str):
        patterns = [patterns]
    return [re.compile(p) for p in patterns]


def _to_ndarray(value) -> np.ndarray:
    # duck-typed framework shim: torch-style tensors expose detach/cpu/numpy
    if hasattr(value, "detach"):
        value = value.detach()
    if hasattr(value, "cpu"):
        value = value.cpu()
    if hasattr(value, "numpy"):
        value = value.numpy()
    return np.asarray(value)


class ExportSession:
    """Collects one snapshot per epoch and maintains the run manifest.

    Usable as a context manager; on a clean exit the session is finalized
    automatically if at least one capture happened.

    Parameters
    ----------
    out_dir : path
        Directory receiving ``epoch_{n:03d}.wsnp`` files and the manifest.
    run_id : str
    model_name, dataset_name : str, optional
        Manifest metadata.
    include, exclude : str or sequence of str, optional
        Regular expressions searched against parameter names. A parameter is
        kept when it matches any include pattern (or include is unset) and
        matches no exclude pattern.
    dtype_policy : {"cast-f32", "keep"}, default "cast-f32"
        ``cast-f32`` stores every tensor as float32 (half the bytes);
        ``keep`` preserves float64 inputs, storing everything else as
        float32.
    """

    def __init__(self, out_dir, run_id: str, model_name: str = "",
                 dataset_name: str = "", include=None, exclude=None,
                 dtype_policy: str = "cast-f32",
                 manifest_name: str = "run.json"):
        if dtype_policy not in DTYPE_POLICIES:
            raise ValueError(
                f"dtype_policy must be one of {DTYPE_POLICIES}, "
                f"got {dtype_policy!r}"
            )
        self.out_dir = Path(out_dir)
        self.run_id = run_id
        self.model_name = model_name
        self.dataset_name = dataset_name
        self.dtype_policy = dtype_policy
        self.manifest_name = manifest_name
        self._include = _compile_patterns(include)
        self._exclude = _compile_patterns(exclude)
        self._epoch = 0
        self._snapshots: list[str] = []
        self._hyperparameters: dict | None = None
        self._finalized = False

    # -- context manager -------------------------------------------------

    def __enter__(self) -> "ExportSession":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None and self._snapshots and not self._finalized:
            self.finalize(self._hyperparameters)

    # -- capture ----------------------------------------------------------

    def _keep(self, name: str) -> bool:
        if self._include is not None and \
                not any(p.search(name) for p in self._include):
            return False
        if self._exclude is not None and \
                any(p.search(name) for p in self._exclude):
            return False
        return True

    def _store_dtype(self, arr: np.ndarray) -> np.dtype:
        if self.dtype_policy == "keep" and arr.dtype == np.float64:
            return np.dtype("<f8")
        return np.dtype("<f4")

    def _encode(self, epoch: int,
                tensors: list[tuple[str, np.ndarray]]) -> bytes:
        parts = [struct.pack("<4sHHII", MAGIC, VERSION, 0, epoch, len(tensors))]
        for name, arr in tensors:
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ExportError(f"parameter name too long: {name[:32]!r}...")
            dtype = self._store_dtype(arr)
            code = 0 if dtype.itemsize == 4 else 1
            parts.append(struct.pack("<H", len(encoded)))
            parts.append(encoded)
            parts.append(struct.pack("<BB", code, arr.ndim))
            parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
            parts.append(np.ascontiguousarray(arr, dtype=dtype).tobytes())
        return b"".join(parts)

    def capture(self, named_parameters: Mapping[str, object]) -> Path:
        """Write one snapshot for the current epoch and advance the counter.

        All parameters are converted and validated before any bytes reach
        disk; a non-finite value aborts the capture with nothing written.
        """
        tensors: list[tuple[str, np.ndarray]] = []
        for name, value in named_parameters.items():
            if not self._keep(name):
                continue
            arr = _to_ndarray(value)
            if arr.ndim == 0:
                arr = arr.reshape(1)
            if arr.size == 0 or any(d == 0 for d in arr.shape):
                raise ExportError(f"parameter {name!r} has an empty dimension")
            if not np.issubdtype(arr.dtype, np.floating):
                arr = arr.astype(np.float64)
            if not np.all(np.isfinite(arr)):
                raise NonFiniteParameterError(
                    f"parameter {name!r} contains non-finite values"
                )
            tensors.append((name, arr))
        if not tensors:
            raise ExportError("capture received no parameters after filtering")

        payload = self._encode(self._epoch, tensors)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        fname = f"epoch_{self._epoch:03d}.wsnp"
        path = self.out_dir / fname
        path.write_bytes(payload)
        self._snapshots.append(fname)
        self._epoch += 1
        self._write_manifest()
        return path

    # -- manifest ---------------------------------------------------------

    def _manifest_doc(self) -> dict:
        doc = {
            "run_id": self.run_id,
            "model_name": self.model_name,
            "dataset_name": self.dataset_name,
            "snapshots": list(self._snapshots),
        }
        if self._hyperparameters is not None:
            doc["hyperparameters"] = self._hyperparameters
        return doc

    def _write_manifest(self) -> Path:
        # temp-file plus rename keeps the manifest whole under interruption
        target = self.out_dir / self.manifest_name
        tmp = target.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(self._manifest_doc(), indent=2,
                                  sort_keys=True) + "\n")
        os.replace(tmp, target)
        return target

    def finalize(self, hyperparameters: Mapping | None = None) -> Path:
        """Record hyperparameters and rewrite the manifest; returns its path."""
        if not self._snapshots:
            raise EmptySessionError("no snapshots captured; nothing to finalize")
        if hyperparameters is not None:
            self._hyperparameters = dict(hyperparameters)
        path = self._write_manifest()
        self._finalized = True
        return path

    @property
    def epoch(self) -> int:
        return self._epoch

    @property
    def snapshot_names(self) -> list[str]:
        return list(self._snapshots)

"""Weight-snapshot container (WSNP) and run manifest.

WSNP is a little-endian binary layout holding every parameter tensor of a
model at one epoch:

====================  =======  =============================================
field                 width    meaning
====================  =======  =============================================
magic                 4        ASCII ``WSNP``
version               u16      format version, currently 1
flags                 u16      reserved, must be 0
epoch_index           u32      0-based epoch ordinal
layer_count           u32      number of layer records that follow
-- per layer --
name_len              u16      byte length of the UTF-8 name
name                  var      UTF-8 layer name
dtype                 u8       0 = float32, 1 = float64
rank                  u8       number of dimensions, >= 1
dims                  rank*4   u32 per dimension, all positive
payload               var      product(dims) IEEE-754 values, row-major
====================  =======  =============================================

One file per epoch plus a JSON manifest; non-finite values are rejected at
the write boundary so downstream ratio computations stay well-defined.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    InvalidNameError,
    InvalidSnapshotError,
    MagicMismatchError,
    MissingLayerError,
    RunConsistencyError,
    ShapeMismatchError,
    SnapshotFormatError,
    TruncatedError,
    UnsupportedVersionError,
)
from .taxonomy import TaxonomyRule

MAGIC = b"WSNP"
VERSION = 1

_F32, _F64 = 0, 1
_CODE_TO_DTYPE = {_F32: np.dtype("<f4"), _F64: np.dtype("<f8")}
_ITEMSIZE = {_F32: 4, _F64: 8}

_U16_MAX = 0xFFFF
_U32_MAX = 0xFFFFFFFF


@dataclass
class LayerTensor:
    """A named parameter tensor; ``values`` is float32 or float64, rank >= 1."""

    name: str
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.dtype not in (np.float32, np.float64):
            self.values = self.values.astype(np.float64)
        if self.values.ndim == 0:
            self.values = self.values.reshape(1)

    @property
    def dtype_code(self) -> int:
        return _F32 if self.values.dtype == np.float32 else _F64

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.values.shape)

    @property
    def size(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LayerTensor):
            return NotImplemented
        return (
            self.name == other.name
            and self.values.dtype == other.values.dtype
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values)
        )


@dataclass
class WeightSnapshot:
    """All parameter tensors of a model at one epoch, in a fixed layer order."""

    epoch_index: int
    layers: list[LayerTensor]

    @property
    def layer_names(self) -> list[str]:
        return [t.name for t in self.layers]

    def validate(self) -> None:
        if self.epoch_index < 0 or self.epoch_index > _U32_MAX:
            raise InvalidSnapshotError(
                f"epoch_index {self.epoch_index} outside [0, 2^32)"
            )
        if not self.layers:
            raise InvalidSnapshotError("snapshot must contain ≥1 layer")
        seen: set[str] = set()
        for tensor in self.layers:
            if tensor.name in seen:
                raise InvalidSnapshotError(f"duplicate layer name {tensor.name!r}")
            seen.add(tensor.name)
            if tensor.values.ndim < 1:
                raise InvalidSnapshotError(f"layer {tensor.name!r} has rank 0")
            if any(d <= 0 for d in tensor.values.shape):
                raise InvalidSnapshotError(
                    f"layer {tensor.name!r} has a non-positive dimension"
                )
            if not np.all(np.isfinite(tensor.values)):
                raise InvalidSnapshotError(
                    f"layer {tensor.name!r} contains non-finite values"
                )

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightSnapshot):
            return NotImplemented
        return self.epoch_index == other.epoch_index and self.layers == other.layers


def write_snapshot(snapshot: WeightSnapshot, path) -> None:
    """Serialize a validated snapshot to ``path`` in the WSNP layout."""
    snapshot.validate()
    parts = [
        struct.pack(
            "<4sHHII", MAGIC, VERSION, 0, snapshot.epoch_index, len(snapshot.layers)
        )
    ]
    for tensor in snapshot.layers:
        name = tensor.name.encode("utf-8")
        if len(name) > _U16_MAX:
            raise InvalidSnapshotError(f"layer name too long: {tensor.name[:32]!r}...")
        rank = tensor.values.ndim
        if rank > 0xFF:
            raise InvalidSnapshotError(f"layer {tensor.name!r} rank {rank} > 255")
        if any(d > _U32_MAX for d in tensor.values.shape):
            raise InvalidSnapshotError(f"layer {tensor.name!r} dimension exceeds u32")
        parts.append(struct.pack("<H", len(name)))
        parts.append(name)
        parts.append(struct.pack("<BB", tensor.dtype_code, rank))
        parts.append(struct.pack(f"<{rank}I", *tensor.values.shape))
        payload = np.ascontiguousarray(
            tensor.values, dtype=_CODE_TO_DTYPE[tensor.dtype_code]
        )
        parts.append(payload.tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Cursor:
    """Sequential reader over a byte buffer; short reads raise TruncatedError."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise TruncatedError(
                f"expected {n} bytes at offset {self.pos}, "
                f"only {len(self.data) - self.pos} remain"
            )
        chunk = self.data[self.pos:end]
        self.pos = end
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    @property
    def exhausted(self) -> bool:
        return self.pos == len(self.data)


def read_snapshot(path) -> WeightSnapshot:
    """Parse a WSNP file, rejecting anything that fails the byte layout."""
    data = Path(path).read_bytes()
    cur = _Cursor(data)

    magic = cur.take(4)
    if magic != MAGIC:
        raise MagicMismatchError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version, flags = cur.unpack("<HH")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}")
    if flags != 0:
        raise SnapshotFormatError(f"reserved flags must be 0, got {flags}")
    epoch_index, layer_count = cur.unpack("<II")
    if layer_count == 0:
        raise SnapshotFormatError("snapshot must contain ≥1 layer")

    layers: list[LayerTensor] = []
    seen: set[str] = set()
    for _ in range(layer_count):
        (name_len,) = cur.unpack("<H")
        raw_name = cur.take(name_len)
        try:
            name = raw_name.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InvalidNameError(f"layer name is not valid UTF-8: {raw_name!r}") from exc
        if name in seen:
            raise SnapshotFormatError(f"duplicate layer name {name!r}")
        seen.add(name)
        dtype_code, rank = cur.unpack("<BB")
        if dtype_code not in _CODE_TO_DTYPE:
            raise SnapshotFormatError(f"unknown dtype code {dtype_code}")
        if rank < 1:
            raise SnapshotFormatError(f"layer {name!r} has rank 0")
        dims = cur.unpack(f"<{rank}I")
        if any(d == 0 for d in dims):
            raise SnapshotFormatError(f"layer {name!r} has a zero dimension")
        count = 1
        for d in dims:
            count *= d
        payload = cur.take(count * _ITEMSIZE[dtype_code])
        values = (
            np.frombuffer(payload, dtype=_CODE_TO_DTYPE[dtype_code], count=count)
            .reshape(dims)
            .copy()
        )
        if not np.all(np.isfinite(values)):
            raise SnapshotFormatError(f"layer {name!r} contains non-finite values")
        layers.append(LayerTensor(name, values))

    if not cur.exhausted:
        raise SnapshotFormatError(
            f"{len(data) - cur.pos} trailing bytes after last layer"
        )
    return WeightSnapshot(epoch_index=epoch_index, layers=layers)


@dataclass
class RunManifest:
    """Ordered list of snapshot files plus run metadata and taxonomy rules."""

    run_id: str
    model_name: str = ""
    dataset_name: str = ""
    snapshot_paths: list[str] = field(default_factory=list)
    taxonomy_rules: list[TaxonomyRule] | None = None
    hyperparameters: dict | None = None
    base_dir: Path = field(default_factory=Path)

    def resolved_paths(self) -> list[Path]:
        return [Path(self.base_dir) / p for p in self.snapshot_paths]


def save_manifest(manifest: RunManifest, path) -> None:
    doc: dict = {
        "run_id": manifest.run_id,
        "model_name": manifest.model_name,
        "dataset_name": manifest.dataset_name,
        "snapshots": list(manifest.snapshot_paths),
    }
    if manifest.taxonomy_rules is not None:
        doc["taxonomy_rules"] = [
            {"group": r.group, "pattern": r.pattern, "priority": r.priority}
            for r in manifest.taxonomy_rules
        ]
    if manifest.hyperparameters is not None:
        doc["hyperparameters"] = manifest.hyperparameters
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_manifest(path) -> RunManifest:
    path = Path(path)
    doc = json.loads(path.read_text())
    rules = None
    if "taxonomy_rules" in doc and doc["taxonomy_rules"] is not None:
        rules = [
            TaxonomyRule(
                group=entry["group"],
                pattern=entry["pattern"],
                priority=int(entry.get("priority", 0)),
            )
            for entry in doc["taxonomy_rules"]
        ]
    return RunManifest(
        run_id=doc["run_id"],
        model_name=doc.get("model_name", ""),
        dataset_name=doc.get("dataset_name", ""),
        snapshot_paths=list(doc["snapshots"]),
        taxonomy_rules=rules,
        hyperparameters=doc.get("hyperparameters"),
        base_dir=path.parent,
    )


def validate_run(snapshots: Sequence[WeightSnapshot]) -> None:
    """Enforce cross-snapshot layer-name, order, shape, and epoch consistency."""
    if len(snapshots) < 2:
        raise RunConsistencyError(
            f"run has {len(snapshots)} snapshot(s); ≥2 snapshots required"
        )
    ref = snapshots[0]
    ref_names = ref.layer_names
    ref_set = set(ref_names)
    for snap in snapshots[1:]:
        names = snap.layer_names
        name_set = set(names)
        for missing in ref_set - name_set:
            raise MissingLayerError(missing, snap.epoch_index)
        for extra in name_set - ref_set:
            raise MissingLayerError(extra, ref.epoch_index)
        if names != ref_names:
            raise RunConsistencyError(
                f"layer order differs between epochs "
                f"{ref.epoch_index} and {snap.epoch_index}"
            )
        for a, b in zip(ref.layers, snap.layers):
            if a.shape != b.shape:
                raise ShapeMismatchError(
                    a.name, ref.epoch_index, snap.epoch_index, a.shape, b.shape
                )
    epochs = [s.epoch_index for s in snapshots]
    if any(e2 <= e1 for e1, e2 in zip(epochs, epochs[1:])):
        raise RunConsistencyError(
            f"epoch indices must be strictly increasing in file order, got {epochs}"
        )


def load_run(manifest: RunManifest) -> list[WeightSnapshot]:
    """Read all snapshots of a run in manifest order and validate consistency."""
    snapshots = [read_snapshot(p) for p in manifest.resolved_paths()]
    validate_run(snapshots)
    return snapshots

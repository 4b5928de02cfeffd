"""Labeled feature-vector store with a checksummed binary on-disk format.

File layout (little-endian):

    magic   4 bytes  b"FSOS"
    version u32      currently 1
    dim     u32      feature dimension D
    count   u64      number of records N
    classes u32      number of classes C
    records N x (u32 label, D x float32)
    crc32   u32      CRC-32 of the records region

A JSON sidecar ``<path>.meta.json`` carries class names and the per-class
base/val/test split assignment, so splits can be re-cut without touching
the binary payload.
"""

from __future__ import annotations

import csv
import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, StoreError

MAGIC = b"FSOS"
VERSION = 1
SPLITS = ("base", "val", "test")

_HEADER = struct.Struct("<4sIIQI")


@dataclass(frozen=True)
class FeatureSet:
    """Immutable table of D-dimensional float32 vectors with dense class labels.

    Split assignment is per class: every class id maps to exactly one of
    ``base``, ``val`` or ``test``, so a class never straddles splits. All
    invariants are checked eagerly at construction; the arrays are frozen
    afterwards and safe to share across threads.
    """

    vectors: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    split_of_class: dict[int, str]

    def __post_init__(self) -> None:
        vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        validate_feature_set(self)
        vectors.flags.writeable = False
        labels.flags.writeable = False

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def classes_in_split(self, split: str) -> list[int]:
        if split not in SPLITS:
            raise DataError(f"unknown split {split!r}; expected one of {SPLITS}")
        return sorted(c for c, s in self.split_of_class.items() if s == split)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)


def validate_feature_set(fs: FeatureSet) -> None:
    """Check every FeatureSet invariant, raising DataError with a precise cause."""
    if fs.vectors.ndim != 2:
        raise DataError(f"vectors must be a 2-D array, got shape {fs.vectors.shape}")
    n, dim = fs.vectors.shape
    if n == 0 or dim == 0:
        raise DataError(f"empty feature table (N={n}, D={dim})")
    if fs.labels.shape != (n,):
        raise DataError(
            f"labels shape {fs.labels.shape} does not match {n} vectors"
        )
    c = len(fs.class_names)
    if c == 0:
        raise DataError("no classes declared")
    bad = np.argwhere(~np.isfinite(fs.vectors))
    if bad.size:
        i, j = bad[0]
        raise DataError(f"non-finite component at vector {i}, component {j}")
    if fs.labels.min() < 0 or fs.labels.max() >= c:
        i = int(np.argmax((fs.labels < 0) | (fs.labels >= c)))
        raise DataError(
            f"label {int(fs.labels[i])} at vector {i} out of range [0, {c})"
        )
    counts = np.bincount(fs.labels, minlength=c)
    if (counts == 0).any():
        empty = int(np.argmax(counts == 0))
        raise DataError(f"class {empty} ({fs.class_names[empty]!r}) has no vectors")
    if set(fs.split_of_class) != set(range(c)):
        missing = sorted(set(range(c)) - set(fs.split_of_class))
        extra = sorted(set(fs.split_of_class) - set(range(c)))
        raise DataError(
            f"split assignment must cover classes 0..{c - 1} exactly "
            f"(missing {missing}, extraneous {extra})"
        )
    for cid, split in fs.split_of_class.items():
        if split not in SPLITS:
            raise DataError(f"class {cid} assigned to unknown split {split!r}")


def base_mean(fs: FeatureSet) -> np.ndarray:
    """Arithmetic mean of all vectors belonging to base-split classes."""
    base_classes = fs.classes_in_split("base")
    mask = np.isin(fs.labels, base_classes)
    if not mask.any():
        raise DataError("no base-split vectors; cannot compute base mean")
    return fs.vectors[mask].astype(np.float64).mean(axis=0)


def _record_dtype(dim: int) -> np.dtype:
    return np.dtype([("label", "<u4"), ("vec", "<f4", (dim,))])


def save_feature_store(fs: FeatureSet, path: str | Path) -> None:
    """Write the binary store plus its JSON sidecar.

    The float32 payload round-trips bit-exactly through load_feature_store.
    """
    validate_feature_set(fs)
    path = Path(path)
    records = np.empty(fs.n, dtype=_record_dtype(fs.dim))
    records["label"] = fs.labels.astype(np.uint32)
    records["vec"] = fs.vectors
    payload = records.tobytes()
    header = _HEADER.pack(MAGIC, VERSION, fs.dim, fs.n, fs.n_classes)
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    path.write_bytes(header + payload + struct.pack("<I", crc))

    splits = {s: fs.classes_in_split(s) for s in SPLITS}
    meta = {"class_names": list(fs.class_names), "splits": splits}
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True))


def sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + ".meta.json")


def load_feature_store(path: str | Path) -> FeatureSet:
    """Load and fully validate a feature store written by save_feature_store."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise StoreError(f"cannot read {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise StoreError(
            f"{path}: file too short for header ({len(raw)} < {_HEADER.size} bytes)"
        )
    magic, version, dim, n, c = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise StoreError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise StoreError(f"{path}: unsupported version {version}, expected {VERSION}")
    if dim == 0 or n == 0 or c == 0:
        raise StoreError(f"{path}: header declares empty store (D={dim}, N={n}, C={c})")

    record_size = 4 + 4 * dim
    payload_start = _HEADER.size
    payload_size = n * record_size
    available = len(raw) - payload_start - 4
    if available < payload_size:
        complete = max(0, (len(raw) - payload_start)) // record_size
        raise StoreError(
            f"{path}: truncated payload; header declares {n} records but record "
            f"{complete + 1} is missing or incomplete "
            f"(byte offset {payload_start + complete * record_size})"
        )
    if available > payload_size:
        raise StoreError(
            f"{path}: {available - payload_size} unexpected trailing bytes after checksum"
        )

    payload = raw[payload_start : payload_start + payload_size]
    (stored_crc,) = struct.unpack_from("<I", raw, payload_start + payload_size)
    actual_crc = zlib.crc32(payload) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise StoreError(
            f"{path}: checksum mismatch (stored {stored_crc:#010x}, "
            f"computed {actual_crc:#010x})"
        )

    records = np.frombuffer(payload, dtype=_record_dtype(dim))
    labels = records["label"].astype(np.int64)
    vectors = np.array(records["vec"], dtype=np.float32)

    out_of_range = np.flatnonzero(labels >= c)
    if out_of_range.size:
        i = int(out_of_range[0])
        raise StoreError(
            f"{path}: label {int(labels[i])} out of range [0, {c}) in record {i} "
            f"(byte offset {payload_start + i * record_size})"
        )
    bad = np.argwhere(~np.isfinite(vectors))
    if bad.size:
        i, j = bad[0]
        raise StoreError(
            f"{path}: non-finite value at vector {i}, component {j} "
            f"(byte offset {payload_start + i * record_size + 4 + 4 * int(j)})"
        )

    meta_path = sidecar_path(path)
    if not meta_path.exists():
        raise StoreError(f"missing sidecar metadata {meta_path}")
    try:
        meta = json.loads(meta_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise StoreError(f"{meta_path}: unreadable sidecar ({exc})") from exc
    class_names = meta.get("class_names")
    splits = meta.get("splits")
    if not isinstance(class_names, list) or len(class_names) != c:
        raise StoreError(
            f"{meta_path}: class_names must list exactly {c} names"
        )
    if not isinstance(splits, dict) or set(splits) != set(SPLITS):
        raise StoreError(f"{meta_path}: splits must have exactly the keys {SPLITS}")
    split_of_class: dict[int, str] = {}
    for split, ids in splits.items():
        for cid in ids:
            if not isinstance(cid, int) or not 0 <= cid < c:
                raise StoreError(f"{meta_path}: class id {cid!r} invalid for C={c}")
            if cid in split_of_class:
                raise StoreError(f"{meta_path}: class {cid} assigned to two splits")
            split_of_class[cid] = split
    if len(split_of_class) != c:
        missing = sorted(set(range(c)) - set(split_of_class))
        raise StoreError(f"{meta_path}: classes {missing} missing a split assignment")

    try:
        return FeatureSet(
            vectors=vectors,
            labels=labels,
            class_names=tuple(str(name) for name in class_names),
            split_of_class=split_of_class,
        )
    except DataError as exc:
        raise StoreError(f"{path}: {exc}") from exc


def ingest_csv(csv_path: str | Path, splits_path: str | Path, out_path: str | Path) -> FeatureSet:
    """Convert a ``label,f0,...,f{D-1}`` CSV plus a split file into a binary store.

    Labels may be arbitrary strings; dense class ids are assigned in sorted
    label order and the original strings become class names. The split file
    is JSON with base/val/test lists naming classes by name or by id.
    """
    csv_path = Path(csv_path)
    tokens: list[str] = []
    rows: list[list[float]] = []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if lineno == 1 and len(row) >= 2:
                try:
                    float(row[1])
                except ValueError:
                    continue  # header row
            if len(row) < 2:
                raise DataError(f"{csv_path}:{lineno}: need label plus >=1 feature")
            try:
                rows.append([float(x) for x in row[1:]])
            except ValueError as exc:
                raise DataError(f"{csv_path}:{lineno}: bad feature value ({exc})") from exc
            tokens.append(row[0])
    if not rows:
        raise DataError(f"{csv_path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{csv_path}: inconsistent feature counts {sorted(widths)}")

    class_names = sorted(set(tokens))
    name_to_id = {name: i for i, name in enumerate(class_names)}
    labels = np.array([name_to_id[t] for t in tokens], dtype=np.int64)
    vectors = np.array(rows, dtype=np.float32)

    try:
        split_spec = json.loads(Path(splits_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read split file {splits_path}: {exc}") from exc
    if not isinstance(split_spec, dict) or not set(split_spec) <= set(SPLITS):
        raise DataError(f"{splits_path}: expected a JSON object with keys from {SPLITS}")
    split_of_class: dict[int, str] = {}
    for split in SPLITS:
        for ref in split_spec.get(split, []):
            if isinstance(ref, str):
                if ref not in name_to_id:
                    raise DataError(f"{splits_path}: unknown class name {ref!r}")
                cid = name_to_id[ref]
            else:
                cid = int(ref)
            if cid in split_of_class:
                raise DataError(f"{splits_path}: class {cid} assigned to two splits")
            split_of_class[cid] = split

    fs = FeatureSet(
        vectors=vectors,
        labels=labels,
        class_names=tuple(class_names),
        split_of_class=split_of_class,
    )
    save_feature_store(fs, out_path)
    return fs

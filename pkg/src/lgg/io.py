"""Array files, label encoding, and the dataset manifest.

Two on-disk array formats are supported:

* ``.npy`` v1.0, restricted to little-endian C-order arrays of dtype
  ``<f4``, ``<f8``, ``<i4`` or ``<i8`` with 1 or 2 dimensions. The header
  is the standard textual mapping, padded with spaces to a multiple of 64
  bytes and terminated by a newline, so files written here load with
  ``numpy.load`` and vice versa.
* Headerless CSV of decimal numbers, one row per line.

Everything is widened to float64 (or int64 for labels) on load; a 1-D
array of length N is treated as an N x 1 matrix where a matrix is
expected. Loaded objects are immutable by convention and safe to share
across workers.

The manifest is a UTF-8 JSON document tying together per-layer embedding
files, a label file and (optionally) raw inputs plus a mixup section::

    {"layers": [{"name": str, "file": str, "depth_from_end": int}, ...],
     "labels": str, "num_classes": int, "inputs": str?,
     "mixup": {"plan": str,
               "layers": [{"name": str, "file": str, "depth_from_end": int}],
               "soft_labels": str}?}

File paths are resolved relative to the manifest's directory. All
cross-file consistency (row counts, class counts, plan indices) is
checked at load time.
"""

from __future__ import annotations

import ast
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .mixup import MixupPlan, load_plan
from .validation import check_hard_labels, check_label_matrix

_MAGIC = b"\x93NUMPY"
_SUPPORTED_DESCRS = {
    "<f4": np.dtype("<f4"),
    "<f8": np.dtype("<f8"),
    "<i4": np.dtype("<i4"),
    "<i8": np.dtype("<i8"),
}


class ArrayFormatError(ValueError):
    """Raised for malformed or unsupported array files."""


class ManifestError(ValueError):
    """Raised for invalid or inconsistent dataset manifests."""


# ---------------------------------------------------------------------------
# .npy reading / writing
# ---------------------------------------------------------------------------

def write_array_file(path, array: np.ndarray, dtype: str | None = None) -> None:
    """Write ``array`` as a ``.npy`` v1.0 file.

    ``dtype`` must be one of ``<f4``, ``<f8``, ``<i4``, ``<i8``; by default
    floats are stored as ``<f8`` and integers as ``<i8``.
    """
    array = np.asarray(array)
    if array.ndim not in (1, 2):
        raise ArrayFormatError(f"only 1-D/2-D arrays supported, got {array.ndim}-D")
    if dtype is None:
        dtype = "<i8" if np.issubdtype(array.dtype, np.integer) else "<f8"
    if dtype not in _SUPPORTED_DESCRS:
        raise ArrayFormatError(f"unsupported dtype {dtype!r}")
    data = np.ascontiguousarray(array.astype(_SUPPORTED_DESCRS[dtype]))
    shape = "(%d,)" % data.shape if data.ndim == 1 else "(%d, %d)" % data.shape
    header = "{'descr': '%s', 'fortran_order': False, 'shape': %s, }" % (dtype, shape)
    # magic(6) + version(2) + header-length(2) + header, padded to 64 bytes
    unpadded = len(_MAGIC) + 2 + 2 + len(header) + 1
    pad = (-unpadded) % 64
    header_bytes = (header + " " * pad + "\n").encode("latin1")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(b"\x01\x00")
        fh.write(struct.pack("<H", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(data.tobytes(order="C"))


def _parse_npy_header(raw: bytes, path) -> tuple[np.dtype, tuple[int, ...]]:
    try:
        mapping = ast.literal_eval(raw.decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise ArrayFormatError(f"{path}: malformed .npy header: {exc}") from None
    if not isinstance(mapping, dict) or set(mapping) != {
        "descr", "fortran_order", "shape",
    }:
        raise ArrayFormatError(f"{path}: .npy header missing required keys")
    descr = mapping["descr"]
    if descr not in _SUPPORTED_DESCRS:
        raise ArrayFormatError(
            f"{path}: unsupported dtype {descr!r} "
            f"(supported: {sorted(_SUPPORTED_DESCRS)})"
        )
    if mapping["fortran_order"] is not False:
        raise ArrayFormatError(f"{path}: fortran_order arrays are not supported")
    shape = mapping["shape"]
    if (
        not isinstance(shape, tuple)
        or not 1 <= len(shape) <= 2
        or not all(isinstance(s, int) and s >= 0 for s in shape)
    ):
        raise ArrayFormatError(f"{path}: unsupported shape {shape!r}")
    return _SUPPORTED_DESCRS[descr], shape


def _read_npy(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 10 or blob[:6] != _MAGIC:
        raise ArrayFormatError(f"{path}: not a .npy file (bad magic)")
    if blob[6:8] != b"\x01\x00":
        raise ArrayFormatError(
            f"{path}: unsupported .npy version {blob[6]}.{blob[7]} (only 1.0)"
        )
    (hlen,) = struct.unpack("<H", blob[8:10])
    if len(blob) < 10 + hlen:
        raise ArrayFormatError(f"{path}: truncated .npy header")
    dtype, shape = _parse_npy_header(blob[10 : 10 + hlen], path)
    payload = blob[10 + hlen :]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(payload) != expected:
        raise ArrayFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    return np.frombuffer(payload, dtype=dtype).reshape(shape)


def _read_csv(path) -> np.ndarray:
    rows: list[list[float]] = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rows.append([float(tok) for tok in line.split(",")])
                except ValueError as exc:
                    raise ArrayFormatError(f"{path}: line {lineno}: {exc}") from None
                if len(rows[-1]) != len(rows[0]):
                    raise ArrayFormatError(
                        f"{path}: ragged CSV (line {lineno} has {len(rows[-1])} "
                        f"values, line 1 has {len(rows[0])})"
                    )
    except UnicodeDecodeError:
        raise ArrayFormatError(
            f"{path}: neither a .npy file nor UTF-8 CSV"
        ) from None
    if not rows:
        raise ArrayFormatError(f"{path}: empty CSV file")
    return np.array(rows, dtype=np.float64)


def _load_raw(path) -> np.ndarray:
    """Load .npy or CSV as-is (dispatch on magic bytes)."""
    path = Path(path)
    if not path.exists():
        raise ArrayFormatError(f"{path}: no such file")
    with open(path, "rb") as fh:
        head = fh.read(6)
    return _read_npy(path) if head[: len(_MAGIC)] == _MAGIC else _read_csv(path)


def read_array_file(path) -> np.ndarray:
    """Load an embedding matrix, widened to float64, shape N x D.

    A 1-D array of length N becomes N x 1. Non-finite entries are rejected.
    """
    arr = np.asarray(_load_raw(path), dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if not np.all(np.isfinite(arr)):
        i, j = map(int, np.argwhere(~np.isfinite(arr))[0])
        raise ArrayFormatError(f"{path}: non-finite value at row {i}, column {j}")
    return arr


def read_label_file(path, num_classes: int) -> np.ndarray:
    """Load labels: a length-N integer vector (hard) or N x C matrix (soft).

    Shape disambiguates the two cases. Hard labels come back as int64;
    soft labels as a validated float64 label matrix.
    """
    arr = np.asarray(_load_raw(path))
    if arr.ndim == 2 and arr.shape[1] > 1:
        return check_label_matrix(arr, num_classes, name=str(path))
    return check_hard_labels(arr, num_classes, name=str(path))


# ---------------------------------------------------------------------------
# Label encoding
# ---------------------------------------------------------------------------

def one_hot(labels, num_classes: int) -> np.ndarray:
    """One-hot encode an integer label vector into an N x C matrix."""
    y = check_hard_labels(labels, num_classes)
    out = np.zeros((y.shape[0], num_classes), dtype=np.float64)
    out[np.arange(y.shape[0]), y] = 1.0
    return out


# ---------------------------------------------------------------------------
# Dataset manifest
# ---------------------------------------------------------------------------

@dataclass
class MixedPool:
    """Pre-embedded mixup vertices: one plan, per-layer embeddings, soft labels."""

    plan: MixupPlan
    layers: dict[int, np.ndarray]
    layer_names: dict[int, str]
    soft_labels: np.ndarray

    @property
    def size(self) -> int:
        return self.soft_labels.shape[0]


@dataclass
class Dataset:
    """A loaded, validated dataset: per-depth embeddings plus labels.

    ``layers`` maps depth_from_end (1 = last layer) to an N x D embedding
    matrix. ``embedder``, when set, maps a batch of raw inputs to such a
    dict and enables on-the-fly mixup without pre-embedded files.
    """

    layers: dict[int, np.ndarray]
    labels: np.ndarray
    num_classes: int
    layer_names: dict[int, str] = field(default_factory=dict)
    inputs: np.ndarray | None = None
    mixed: MixedPool | None = None
    embedder: Callable[[np.ndarray], dict[int, np.ndarray]] | None = None

    @property
    def n_samples(self) -> int:
        return self.labels.shape[0]

    def depths(self) -> list[int]:
        return sorted(self.layers)


def _layer_entries(raw, section: str) -> list[tuple[str, str, int]]:
    if not isinstance(raw, list) or not raw:
        raise ManifestError(f"{section}: 'layers' must be a non-empty list")
    out = []
    seen: dict[int, str] = {}
    for entry in raw:
        try:
            name, file, depth = entry["name"], entry["file"], entry["depth_from_end"]
        except (TypeError, KeyError) as exc:
            raise ManifestError(f"{section}: layer entry missing key {exc}") from None
        if not isinstance(depth, int) or depth < 1:
            raise ManifestError(
                f"{section}: layer {name!r} has invalid depth_from_end {depth!r}"
            )
        if depth in seen:
            raise ManifestError(
                f"{section}: duplicate depth_from_end {depth} "
                f"(layers {seen[depth]!r} and {name!r})"
            )
        seen[depth] = name
        out.append((str(name), str(file), depth))
    return out


def load_manifest(path) -> Dataset:
    """Load and validate a dataset manifest, eagerly loading all arrays.

    Raises :class:`ManifestError` naming the offending layer or section on
    any inconsistency; a returned Dataset never disagrees on N.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from None
    for key in ("layers", "labels", "num_classes"):
        if key not in doc:
            raise ManifestError(f"{path}: missing required key {key!r}")
    num_classes = doc["num_classes"]
    if not isinstance(num_classes, int) or num_classes < 1:
        raise ManifestError(f"{path}: num_classes must be a positive integer")
    base = path.parent

    labels = read_label_file(base / doc["labels"], num_classes)
    if labels.ndim != 1:
        raise ManifestError(
            f"{path}: top-level labels must be hard (integer vector), "
            f"got a {labels.shape} matrix"
        )
    n = labels.shape[0]

    layers: dict[int, np.ndarray] = {}
    layer_names: dict[int, str] = {}
    for name, file, depth in _layer_entries(doc["layers"], str(path)):
        try:
            arr = read_array_file(base / file)
        except ArrayFormatError as exc:
            raise ManifestError(f"{path}: layer {name!r}: {exc}") from None
        if arr.shape[0] != n:
            raise ManifestError(
                f"{path}: layer {name!r} has {arr.shape[0]} rows, "
                f"labels have {n}"
            )
        layers[depth] = arr
        layer_names[depth] = name

    inputs = None
    if doc.get("inputs"):
        inputs = read_array_file(base / doc["inputs"])
        if inputs.shape[0] != n:
            raise ManifestError(
                f"{path}: inputs has {inputs.shape[0]} rows, labels have {n}"
            )

    mixed = None
    if doc.get("mixup"):
        mix = doc["mixup"]
        for key in ("plan", "layers", "soft_labels"):
            if key not in mix:
                raise ManifestError(f"{path}: mixup section missing key {key!r}")
        plan = load_plan(base / mix["plan"])
        for i, j, _ in plan.entries:
            if i >= n or j >= n:
                raise ManifestError(
                    f"{path}: mixup plan references sample {max(i, j)}, "
                    f"dataset has {n}"
                )
        soft = read_label_file(base / mix["soft_labels"], num_classes)
        if soft.ndim != 2:
            raise ManifestError(f"{path}: mixup soft_labels must be an N x C matrix")
        m = len(plan.entries)
        if soft.shape[0] != m:
            raise ManifestError(
                f"{path}: mixup soft_labels has {soft.shape[0]} rows, "
                f"plan has {m} entries"
            )
        mlayers: dict[int, np.ndarray] = {}
        mnames: dict[int, str] = {}
        for name, file, depth in _layer_entries(mix["layers"], f"{path} (mixup)"):
            try:
                arr = read_array_file(base / file)
            except ArrayFormatError as exc:
                raise ManifestError(
                    f"{path}: mixed layer {name!r}: {exc}"
                ) from None
            if arr.shape[0] != m:
                raise ManifestError(
                    f"{path}: mixed layer {name!r} has {arr.shape[0]} rows, "
                    f"plan has {m} entries"
                )
            mlayers[depth] = arr
            mnames[depth] = name
        mixed = MixedPool(plan=plan, layers=mlayers, layer_names=mnames, soft_labels=soft)

    return Dataset(
        layers=layers,
        labels=labels,
        num_classes=num_classes,
        layer_names=layer_names,
        inputs=inputs,
        mixed=mixed,
    )

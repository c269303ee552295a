"""Little-endian binary containers for datasets, models and encodings.

Dataset (.spvd)::

    "SPVD" | u32 version=1 | u32 D | u64 image count
    per image: u32 id length | UTF-8 id | u32 W | u32 H | u32 N
               | N x (f32 x, f32 y, f32 w, f32 h) | N x D f32 features

Model (.spvm)::

    "SPVM" | u8 kind (1 = PCA, 2 = codebook) | u32 rows | u32 cols
    | rows x cols f64, row-major  (+ one row of cols f64 mean for PCA)

Encodings (.spve)::

    "SPVE" | u32 version=1 | u32 level | u32 K | u32 d | u64 count
    per encoding: u32 id length | UTF-8 id | n_cells x u32 region counts
                  | n_cells*K*d f32 values

Every binary file gets a JSON sidecar (same stem, ".json") echoing its
header. The binary is authoritative; the sidecar is never read back.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from .codebook import Codebook
from .datamodel import EncodedRepresentation, ImageRecord, PyramidSpec, validate_image
from .pca import PcaModel

DATASET_MAGIC = b"SPVD"
MODEL_MAGIC = b"SPVM"
ENCODING_MAGIC = b"SPVE"
FORMAT_VERSION = 1

KIND_PCA = 1
KIND_CODEBOOK = 2
KIND_NAMES = {KIND_PCA: "pca", KIND_CODEBOOK: "codebook"}

_DATASET_HEADER = struct.Struct("<4sIIQ")
_IMAGE_HEADER = struct.Struct("<III")
_MODEL_HEADER = struct.Struct("<4sBII")
_ENCODING_HEADER = struct.Struct("<4sIIIIQ")
_U32 = struct.Struct("<I")


class FormatError(ValueError):
    """A file does not parse as the container it claims to be."""


class TruncatedFileError(FormatError):
    pass


class ModelKindError(FormatError):
    """A model file holds a different kind of model than requested."""


class InvalidRecordError(ValueError):
    def __init__(self, image_id, violations):
        self.image_id = image_id
        self.violations = list(violations)
        super().__init__(f"image {image_id!r} is invalid: " + "; ".join(self.violations))


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def _write_sidecar(path, info: dict) -> None:
    sidecar_path(path).write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise TruncatedFileError(f"unexpected end at {what}")
    return buf


def _write_id(f: BinaryIO, image_id: str) -> None:
    raw = image_id.encode("utf-8")
    f.write(_U32.pack(len(raw)))
    f.write(raw)


def _read_id(f: BinaryIO, what: str) -> str:
    (n,) = _U32.unpack(_read_exact(f, 4, what))
    return _read_exact(f, n, what).decode("utf-8")


# -- datasets ---------------------------------------------------------------

def _dataset_dim(records: list[ImageRecord]) -> int:
    for rec in records:
        for r in rec.regions:
            return r.features.size
    raise ValueError("cannot infer descriptor dimension from records without regions")


def write_dataset(path, records: Iterable[ImageRecord], dim: int | None = None) -> None:
    """Validate and write `records`; refuses the whole file on any violation.

    `dim` is required only when `records` is empty.
    """
    records = list(records)
    if dim is None:
        dim = _dataset_dim(records) if records else None
    if dim is None or dim < 1:
        raise ValueError("descriptor dimension must be given (>= 1) for an empty dataset")
    for rec in records:
        problems = validate_image(rec, dim)
        for name, v in (("width", rec.width), ("height", rec.height)):
            if not 0 < v < 2**32 or v != int(v):
                problems.append(f"image {name} {v} is not storable as u32")
        if problems:
            raise InvalidRecordError(rec.id, problems)
    with open(path, "wb") as f:
        f.write(_DATASET_HEADER.pack(DATASET_MAGIC, FORMAT_VERSION, dim, len(records)))
        for rec in records:
            _write_id(f, rec.id)
            f.write(_IMAGE_HEADER.pack(int(rec.width), int(rec.height), rec.n_regions))
            f.write(rec.boxes().astype("<f4").tobytes())
            f.write(rec.features().astype("<f4").tobytes())
    _write_sidecar(path, {
        "format": "SPVD", "version": FORMAT_VERSION, "dim": dim, "image_count": len(records),
    })


def read_dataset_header(path) -> tuple[int, int]:
    """(D, image count) of a dataset file."""
    with open(path, "rb") as f:
        return _read_dataset_header(f)


def _read_dataset_header(f: BinaryIO) -> tuple[int, int]:
    head = f.read(_DATASET_HEADER.size)
    if len(head) < 4 or head[:4] != DATASET_MAGIC:
        raise FormatError("not a dataset file")
    if len(head) != _DATASET_HEADER.size:
        raise TruncatedFileError("unexpected end in dataset header")
    _, version, dim, count = _DATASET_HEADER.unpack(head)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported dataset version {version}")
    if dim < 1:
        raise FormatError("dataset declares descriptor dimension 0")
    return dim, count


def read_dataset(path) -> Iterator[ImageRecord]:
    """Yield records in file order, one image in memory at a time."""
    with open(path, "rb") as f:
        dim, count = _read_dataset_header(f)
        for i in range(count):
            what = f"image {i}"
            image_id = _read_id(f, what)
            width, height, n = _IMAGE_HEADER.unpack(_read_exact(f, _IMAGE_HEADER.size, what))
            boxes = np.frombuffer(_read_exact(f, 16 * n, what), dtype="<f4").reshape(n, 4)
            feats = np.frombuffer(_read_exact(f, 4 * n * dim, what), dtype="<f4").reshape(n, dim)
            yield ImageRecord.from_arrays(image_id, width, height, boxes.astype(np.float64), feats)


# -- models -------------------------------------------------------------------

def save_model(path, model: PcaModel | Codebook) -> None:
    """Write a PCA model or codebook at full float64 precision."""
    if isinstance(model, PcaModel):
        kind, matrix = KIND_PCA, model.basis
        payload = np.vstack([model.basis, model.mean[None, :]])
        info = {"output_dim": model.output_dim, "input_dim": model.input_dim}
    elif isinstance(model, Codebook):
        kind, matrix = KIND_CODEBOOK, model.centroids
        payload = model.centroids
        info = {"n_words": model.n_words, "dim": model.dim, "inertia": model.inertia}
    else:
        raise TypeError(f"cannot save object of type {type(model).__name__}")
    rows, cols = matrix.shape
    with open(path, "wb") as f:
        f.write(_MODEL_HEADER.pack(MODEL_MAGIC, kind, rows, cols))
        f.write(np.ascontiguousarray(payload, dtype="<f8").tobytes())
    _write_sidecar(path, {"format": "SPVM", "kind": KIND_NAMES[kind], "shape": [rows, cols], **info})


def read_model_header(path) -> tuple[int, int, int]:
    """(kind, rows, cols) of a model file."""
    with open(path, "rb") as f:
        return _read_model_header(f)


def _read_model_header(f: BinaryIO) -> tuple[int, int, int]:
    head = f.read(_MODEL_HEADER.size)
    if len(head) < 4 or head[:4] != MODEL_MAGIC:
        raise FormatError("not a model file")
    if len(head) != _MODEL_HEADER.size:
        raise TruncatedFileError("unexpected end in model header")
    _, kind, rows, cols = _MODEL_HEADER.unpack(head)
    if kind not in KIND_NAMES:
        raise FormatError(f"unknown model kind {kind}")
    return kind, rows, cols


def load_model(path, expect: type | None = None) -> PcaModel | Codebook:
    """Load a model; `expect` (PcaModel or Codebook) enforces the kind byte."""
    with open(path, "rb") as f:
        kind, rows, cols = _read_model_header(f)
        if expect is not None:
            wanted = {PcaModel: KIND_PCA, Codebook: KIND_CODEBOOK}[expect]
            if kind != wanted:
                raise ModelKindError(
                    f"{path} holds a {KIND_NAMES[kind]} model, expected {KIND_NAMES[wanted]}"
                )
        n_rows = rows + 1 if kind == KIND_PCA else rows
        payload = np.frombuffer(
            _read_exact(f, 8 * n_rows * cols, "model payload"), dtype="<f8"
        ).reshape(n_rows, cols)
        if f.read(1):
            raise FormatError("trailing bytes after model payload")
    payload = payload.astype(np.float64)
    if kind == KIND_PCA:
        return PcaModel(payload[-1], payload[:-1])
    return Codebook(payload)


# -- encodings ----------------------------------------------------------------

def save_encodings(path, encodings: Iterable[EncodedRepresentation]) -> None:
    """Write encodings sharing one (level, K, d) as float32."""
    encodings = list(encodings)
    if encodings:
        first = encodings[0]
        key = (first.spec.level, first.n_words, first.desc_dim)
        for e in encodings[1:]:
            other = (e.spec.level, e.n_words, e.desc_dim)
            if other != key:
                raise ValueError(
                    f"mixed encoding shapes: {e.image_id!r} has (level, K, d) = {other}, "
                    f"expected {key} (dims {first.vector.size} vs {e.vector.size})"
                )
    else:
        key = (1, 0, 0)
    level, k, d = key
    n_cells = PyramidSpec(level).n_cells
    with open(path, "wb") as f:
        f.write(_ENCODING_HEADER.pack(ENCODING_MAGIC, FORMAT_VERSION, level, k, d, len(encodings)))
        for e in encodings:
            _write_id(f, e.image_id)
            counts = e.cell_counts if e.cell_counts is not None else (0,) * n_cells
            f.write(np.asarray(counts, dtype="<u4").tobytes())
            f.write(e.vector.astype("<f4").tobytes())
    _write_sidecar(path, {
        "format": "SPVE", "version": FORMAT_VERSION, "level": level, "n_words": k,
        "desc_dim": d, "vector_dim": PyramidSpec(level).dim(k, d), "count": len(encodings),
    })


def read_encoding_header(path) -> tuple[int, int, int, int]:
    """(level, K, d, count) of an encodings file."""
    with open(path, "rb") as f:
        return _read_encoding_header(f)


def _read_encoding_header(f: BinaryIO) -> tuple[int, int, int, int]:
    head = f.read(_ENCODING_HEADER.size)
    if len(head) < 4 or head[:4] != ENCODING_MAGIC:
        raise FormatError("not an encodings file")
    if len(head) != _ENCODING_HEADER.size:
        raise TruncatedFileError("unexpected end in encodings header")
    _, version, level, k, d, count = _ENCODING_HEADER.unpack(head)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported encodings version {version}")
    return level, k, d, count


def load_encodings(path) -> list[EncodedRepresentation]:
    with open(path, "rb") as f:
        level, k, d, count = _read_encoding_header(f)
        spec = PyramidSpec(level)
        dim = spec.dim(k, d)
        out = []
        for i in range(count):
            what = f"encoding {i}"
            image_id = _read_id(f, what)
            counts = np.frombuffer(_read_exact(f, 4 * spec.n_cells, what), dtype="<u4")
            vec = np.frombuffer(_read_exact(f, 4 * dim, what), dtype="<f4")
            out.append(EncodedRepresentation(image_id, spec, k, d, vec.astype(np.float64), tuple(counts)))
    return out


def export_csv(encodings: Iterable[EncodedRepresentation], out=None) -> str | None:
    """One row per encoding: id, then every value. Writes to `out` if given."""
    buf = io.StringIO() if out is None else out
    writer = csv.writer(buf, lineterminator="\n")
    for e in encodings:
        writer.writerow([e.image_id, *(repr(float(np.float32(v))) for v in e.vector)])
    return buf.getvalue() if out is None else None


def sniff(path) -> bytes:
    """First four bytes of a file, for format detection."""
    with open(path, "rb") as f:
        return f.read(4)

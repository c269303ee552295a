"""Spatial-pyramid VLAD coding of region descriptors.

Per cell: hard-assign projected descriptors to their nearest codeword, sum
the residuals per codeword, then signed-square-root and L2 normalize the
cell vector. Cells are concatenated as level 1, level-2 cells TL, TR, BL,
BR, then level-3 cells left, middle, right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebook import Codebook, assign
from .datamodel import (
    CELLS_PER_LEVEL,
    EncodedRepresentation,
    ImageRecord,
    PyramidSpec,
    RegionDescriptor,
    region_center,
    region_scale,
)
from .pca import PcaModel, project

NORM_MODES = ("ssr", "intra")


@dataclass(frozen=True)
class CellId:
    level: int
    index: int

    def __post_init__(self):
        if self.level not in CELLS_PER_LEVEL:
            raise ValueError(f"no pyramid level {self.level}")
        if not 0 <= self.index < CELLS_PER_LEVEL[self.level]:
            raise ValueError(f"cell index {self.index} out of range for level {self.level}")

    @property
    def name(self) -> str:
        return {
            1: ("whole",),
            2: ("top-left", "top-right", "bottom-left", "bottom-right"),
            3: ("left", "middle", "right"),
        }[self.level][self.index]


@dataclass(frozen=True)
class AugmentedDescriptor:
    base: np.ndarray
    rel_x: float
    rel_y: float
    log_scale: float

    def vector(self) -> np.ndarray:
        return np.concatenate([self.base, [self.rel_x, self.rel_y, self.log_scale]])

    def __len__(self) -> int:
        return self.base.size + 3


def _canonical_order(X: np.ndarray) -> np.ndarray:
    # lexicographic row order makes accumulation independent of input order
    if len(X) < 2:
        return np.arange(len(X))
    return np.lexsort(X.T[::-1])


def vlad_raw(cb: Codebook, descriptors) -> np.ndarray:
    """Unnormalized VLAD: per-codeword residual sums, flattened to K*d."""
    X = np.asarray(descriptors, dtype=np.float64)
    if X.size == 0:
        return np.zeros(cb.n_words * cb.dim)
    X = np.atleast_2d(X)
    if X.shape[1] != cb.dim:
        raise ValueError(f"descriptor length {X.shape[1]} does not match codebook dim {cb.dim}")
    X = X[_canonical_order(X)]
    labels = assign(cb, X)
    out = np.zeros((cb.n_words, cb.dim))
    np.add.at(out, labels, X - cb.centroids[labels])
    return out.ravel()


def normalize_ssr(v) -> np.ndarray:
    """sign(v) * sqrt(|v|), then scaled to unit L2 norm. Zeros stay zeros."""
    v = np.asarray(v, dtype=np.float64)
    s = np.sign(v) * np.sqrt(np.abs(v))
    norm = np.linalg.norm(s)
    return s / norm if norm > 0 else np.zeros_like(s)


def normalize_intra(v, n_words: int) -> np.ndarray:
    """Per-codeword-block L2, then global L2."""
    blocks = np.asarray(v, dtype=np.float64).reshape(n_words, -1)
    norms = np.linalg.norm(blocks, axis=1, keepdims=True)
    blocks = np.divide(blocks, norms, out=np.zeros_like(blocks), where=norms > 0)
    flat = blocks.ravel()
    norm = np.linalg.norm(flat)
    return flat / norm if norm > 0 else flat


def _normalize(v, n_words: int, mode: str) -> np.ndarray:
    if mode == "ssr":
        return normalize_ssr(v)
    if mode == "intra":
        return normalize_intra(v, n_words)
    raise ValueError(f"unknown normalization mode {mode!r}; expected one of {NORM_MODES}")


def cell_indices(level: int, width: float, height: float, centers) -> np.ndarray:
    """Vectorized cell index for (N, 2) region centers at `level`."""
    c = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    if level == 1:
        return np.zeros(len(c), dtype=np.int64)
    if level == 2:
        col = (c[:, 0] >= width / 2).astype(np.int64)
        row = (c[:, 1] >= height / 2).astype(np.int64)
        return 2 * row + col
    if level == 3:
        return np.clip(np.floor(3 * c[:, 0] / width), 0, 2).astype(np.int64)
    raise ValueError(f"no pyramid level {level}")


def assign_cell(level: int, width: float, height: float, r: RegionDescriptor) -> CellId:
    """Cell containing the center of `r`; boundary centers go to the higher index."""
    if level not in (2, 3):
        raise ValueError(f"cell assignment is defined for levels 2 and 3, got {level}")
    idx = cell_indices(level, width, height, [region_center(r)])[0]
    return CellId(level, int(idx))


def pyramid_raw(pca: PcaModel, cb: Codebook, rec: ImageRecord, spec: PyramidSpec):
    """Unnormalized per-cell VLAD vectors.

    Returns a list of (CellId, raw vector, region count) in concatenation
    order.
    """
    if pca.output_dim != cb.dim:
        raise ValueError(f"PCA output dim {pca.output_dim} does not match codebook dim {cb.dim}")
    Z = project(pca, rec.features())
    centers = rec.centers()
    cells = []
    for level in range(1, spec.level + 1):
        idx = cell_indices(level, rec.width, rec.height, centers)
        for i in range(CELLS_PER_LEVEL[level]):
            members = Z[idx == i]
            cells.append((CellId(level, i), vlad_raw(cb, members), len(members)))
    return cells


def encode_pyramid(
    pca: PcaModel, cb: Codebook, rec: ImageRecord, spec: PyramidSpec, mode: str = "ssr"
) -> EncodedRepresentation:
    cells = pyramid_raw(pca, cb, rec, spec)
    vector = np.concatenate([_normalize(raw, cb.n_words, mode) for _, raw, _ in cells])
    return EncodedRepresentation(
        rec.id, spec, cb.n_words, cb.dim, vector, tuple(n for _, _, n in cells)
    )


def _geometry_terms(boxes: np.ndarray, width: float, height: float) -> np.ndarray:
    # centers may sit past the frame by the box slack; clamp so offsets stay in [-0.5, 0.5]
    cx = np.clip(boxes[:, 0] + boxes[:, 2] / 2, 0.0, width)
    cy = np.clip(boxes[:, 1] + boxes[:, 3] / 2, 0.0, height)
    frame_scale = math.log(math.sqrt(width * height))
    log_scale = np.array([math.log(math.sqrt(w * h)) for w, h in boxes[:, 2:4]]) - frame_scale
    return np.column_stack([cx / width - 0.5, cy / height - 0.5, log_scale])


def augment(r: RegionDescriptor, projected, width: float, height: float) -> AugmentedDescriptor:
    """Append relative center offsets and relative log-scale to a projected descriptor."""
    if not (width > 0 and height > 0):
        raise ValueError("image width and height must be positive")
    cx, cy = region_center(r)
    cx = min(max(cx, 0.0), width)
    cy = min(max(cy, 0.0), height)
    return AugmentedDescriptor(
        np.asarray(projected, dtype=np.float64).ravel(),
        cx / width - 0.5,
        cy / height - 0.5,
        math.log(region_scale(r)) - math.log(math.sqrt(width * height)),
    )


def augmented_descriptors(pca: PcaModel, rec: ImageRecord) -> np.ndarray:
    """(N, d + 3) projected descriptors with geometry appended."""
    Z = project(pca, rec.features())
    return np.hstack([Z, _geometry_terms(rec.boxes(), rec.width, rec.height)])


def encode_augmented(pca: PcaModel, cb_aug: Codebook, rec: ImageRecord, mode: str = "ssr") -> EncodedRepresentation:
    """Single-cell VLAD over geometry-augmented descriptors, length K * (d + 3)."""
    if cb_aug.dim != pca.output_dim + 3:
        raise ValueError(
            f"augmented codebook dim {cb_aug.dim} must equal PCA output dim + 3 = {pca.output_dim + 3}"
        )
    A = augmented_descriptors(pca, rec)
    vector = _normalize(vlad_raw(cb_aug, A), cb_aug.n_words, mode)
    return EncodedRepresentation(rec.id, PyramidSpec(1), cb_aug.n_words, cb_aug.dim, vector, (len(A),))


def concat_global(enc: EncodedRepresentation | np.ndarray, global_desc) -> np.ndarray:
    """Whole-image descriptor followed by the pyramid vector."""
    vec = enc.vector if isinstance(enc, EncodedRepresentation) else np.asarray(enc, dtype=np.float64)
    g = np.asarray(global_desc, dtype=np.float64).ravel()
    return np.concatenate([g, vec])

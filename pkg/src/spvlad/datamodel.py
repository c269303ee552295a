"""Value types shared across the pipeline, plus box geometry helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Float boxes from proposal tools may overshoot the frame by rounding.
BOX_SLACK = 0.5

CELLS_PER_LEVEL = {1: 1, 2: 4, 3: 3}


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RegionDescriptor:
    """One proposal box (left, top, width, height) and its feature vector.

    Construction does not reject bad boxes so that `validate_image` can
    report them; writers refuse invalid records.
    """

    x: float
    y: float
    w: float
    h: float
    features: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "features", _frozen_array(self.features).ravel())

    @property
    def box(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class ImageRecord:
    id: str
    width: float
    height: float
    regions: tuple[RegionDescriptor, ...]

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))

    @classmethod
    def from_arrays(cls, image_id: str, width, height, boxes, features) -> "ImageRecord":
        boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
        features = np.asarray(features)
        if features.ndim != 2 or len(features) != len(boxes):
            raise ValueError(
                f"expected {len(boxes)} feature rows, got array of shape {features.shape}"
            )
        regions = tuple(
            RegionDescriptor(float(b[0]), float(b[1]), float(b[2]), float(b[3]), f)
            for b, f in zip(boxes, features)
        )
        return cls(image_id, width, height, regions)

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    def boxes(self) -> np.ndarray:
        """(N, 4) array of (x, y, w, h)."""
        if not self.regions:
            return np.zeros((0, 4))
        return np.array([r.box for r in self.regions], dtype=np.float64)

    def features(self) -> np.ndarray:
        """(N, D) float64 feature matrix."""
        if not self.regions:
            return np.zeros((0, 0))
        return np.vstack([r.features for r in self.regions])

    def centers(self) -> np.ndarray:
        b = self.boxes()
        return np.column_stack([b[:, 0] + b[:, 2] / 2, b[:, 1] + b[:, 3] / 2])


@dataclass(frozen=True)
class PyramidSpec:
    """Pyramid depth: level 1 is 1x1, level 2 adds 2x2, level 3 adds 3x1."""

    level: int = 2

    def __post_init__(self):
        if self.level not in CELLS_PER_LEVEL:
            raise ValueError(f"pyramid level must be 1, 2 or 3, got {self.level!r}")

    @property
    def n_cells(self) -> int:
        return sum(CELLS_PER_LEVEL[lv] for lv in range(1, self.level + 1))

    def cells(self) -> list[tuple[int, int]]:
        """(level, index) pairs in concatenation order."""
        return [
            (lv, i)
            for lv in range(1, self.level + 1)
            for i in range(CELLS_PER_LEVEL[lv])
        ]

    def dim(self, n_words: int, desc_dim: int) -> int:
        return self.n_cells * n_words * desc_dim


def cell_layout(spec: PyramidSpec, n_words: int, desc_dim: int) -> list[tuple[int, int, int, int]]:
    """(level, cell index, offset, length) for every cell of `spec`."""
    length = n_words * desc_dim
    return [
        (lv, i, k * length, length) for k, (lv, i) in enumerate(spec.cells())
    ]


@dataclass(frozen=True)
class EncodedRepresentation:
    image_id: str
    spec: PyramidSpec
    n_words: int
    desc_dim: int
    vector: np.ndarray = field(repr=False)
    # regions pooled into each cell, same order as the layout
    cell_counts: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "vector", _frozen_array(self.vector).ravel())
        expected = self.spec.dim(self.n_words, self.desc_dim)
        if self.vector.size != expected:
            raise ValueError(
                f"vector length {self.vector.size} does not match "
                f"{self.spec.n_cells} cells x K={self.n_words} x d={self.desc_dim} = {expected}"
            )
        if self.cell_counts is not None:
            object.__setattr__(self, "cell_counts", tuple(int(c) for c in self.cell_counts))

    @property
    def layout(self) -> list[tuple[int, int, int, int]]:
        return cell_layout(self.spec, self.n_words, self.desc_dim)

    def cell_slices(self) -> list[np.ndarray]:
        return [self.vector[off:off + n] for _, _, off, n in self.layout]

    def cell_norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(s) for s in self.cell_slices()])


def region_center(r: RegionDescriptor) -> tuple[float, float]:
    return (r.x + r.w / 2, r.y + r.h / 2)


def region_scale(r: RegionDescriptor) -> float:
    """Geometric-mean side length sqrt(w * h)."""
    return math.sqrt(r.w * r.h)


def validate_image(rec: ImageRecord, dim: int) -> list[str]:
    """Every invariant violation of `rec` against a dataset dimension `dim`.

    An empty list means the record is valid.
    """
    problems = []
    if not isinstance(rec.id, str):
        problems.append("image id is not a string")
    if not rec.width > 0:
        problems.append(f"non-positive image width {rec.width}")
    if not rec.height > 0:
        problems.append(f"non-positive image height {rec.height}")
    if not rec.regions:
        problems.append("image has no regions")
    for i, r in enumerate(rec.regions):
        if not r.w > 0:
            problems.append(f"non-positive width at region {i}")
        if not r.h > 0:
            problems.append(f"non-positive height at region {i}")
        if not r.x >= 0:
            problems.append(f"negative left edge at region {i}")
        if not r.y >= 0:
            problems.append(f"negative top edge at region {i}")
        if r.x + r.w > rec.width + BOX_SLACK:
            problems.append(f"box exceeds image width at region {i}")
        if r.y + r.h > rec.height + BOX_SLACK:
            problems.append(f"box exceeds image height at region {i}")
        if r.features.size != dim:
            problems.append(
                f"dimension mismatch at region {i}: {r.features.size} features, expected {dim}"
            )
        elif not np.all(np.isfinite(r.features)):
            problems.append(f"non-finite feature value at region {i}")
    return problems


"""PCA reduction of region descriptors, fitted by SVD of the centered sample."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .datamodel import ImageRecord

DEFAULT_SAMPLE_SIZE = 250_000
STANDARD_DIMS = (128, 256, 512, 1024)


@dataclass(frozen=True)
class PcaModel:
    """Mean vector (D,) and orthonormal basis (d, D); no whitening."""

    mean: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).ravel()
        basis = np.atleast_2d(np.array(self.basis, dtype=np.float64))
        if basis.shape[1] != mean.size:
            raise ValueError(
                f"basis has {basis.shape[1]} columns but mean has length {mean.size}"
            )
        if basis.shape[0] > basis.shape[1]:
            raise ValueError(f"output dim {basis.shape[0]} exceeds input dim {basis.shape[1]}")
        mean.setflags(write=False)
        basis.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "basis", basis)

    @property
    def input_dim(self) -> int:
        return self.mean.size

    @property
    def output_dim(self) -> int:
        return self.basis.shape[0]

    def truncate(self, d: int) -> "PcaModel":
        """Keep the top `d` directions of this model."""
        if not 1 <= d <= self.output_dim:
            raise ValueError(f"cannot truncate a {self.output_dim}-dim model to {d}")
        return PcaModel(self.mean, self.basis[:d])

    def project(self, x) -> np.ndarray:
        return project(self, x)

    def reconstruct(self, z) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) @ self.basis + self.mean


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    # largest-magnitude component of each row made positive (first on ties)
    idx = np.argmax(np.abs(basis), axis=1)
    signs = np.sign(basis[np.arange(len(basis)), idx])
    signs[signs == 0] = 1.0
    return basis * signs[:, None]


def fit_pca(sample, d: int, seed: int = 0) -> PcaModel:
    """Fit a `d`-dimensional PCA on an (N, D) sample.

    The exact SVD path is deterministic on its own; `seed` is kept so the
    signature matches the rest of the training API and is currently unused.
    """
    X = np.asarray(sample, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"sample must be a 2-D array, got shape {X.shape}")
    n, D = X.shape
    if d < 1 or d > D:
        raise ValueError(f"output dim must be in [1, {D}], got {d}")
    if n < d:
        raise ValueError(f"sample of {n} descriptors is smaller than output dim {d}")
    mean = X.mean(axis=0)
    centered = X - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s.size == 0 or s[0] <= np.finfo(np.float64).eps * max(n, D) * max(1.0, np.abs(X).max()):
        raise ValueError("degenerate covariance: sample has zero variance")
    return PcaModel(mean, _fix_signs(vt[:d]))


def project(model: PcaModel, x) -> np.ndarray:
    """basis @ (x - mean), for a single descriptor or an (N, D) batch."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise ValueError(
            f"descriptor length {x.shape[-1]} does not match PCA input dim {model.input_dim}"
        )
    return (x - model.mean) @ model.basis.T


def sample_regions(records: Iterable[ImageRecord], cap: int = DEFAULT_SAMPLE_SIZE, seed: int = 0) -> np.ndarray:
    """Uniform reservoir sample of min(cap, total) region descriptors.

    Single pass over `records`; returns a float32 (n, D) array in reservoir
    order.
    """
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    rng = np.random.default_rng(seed)
    reservoir = None
    seen = 0
    for rec in records:
        feats = rec.features().astype(np.float32)
        n = len(feats)
        if n == 0:
            continue
        if reservoir is None:
            reservoir = np.empty((cap, feats.shape[1]), dtype=np.float32)
        fill = min(max(cap - seen, 0), n)
        if fill:
            reservoir[seen:seen + fill] = feats[:fill]
        if fill < n:
            # Algorithm R: item t (0-based) replaces slot j ~ U[0, t] when j < cap
            t = np.arange(seen + fill, seen + n)
            j = rng.integers(0, t + 1)
            for src, slot in zip(np.nonzero(j < cap)[0] + fill, j[j < cap]):
                reservoir[slot] = feats[src]
        seen += n
    if reservoir is None:
        raise ValueError("cannot sample from an empty dataset")
    return reservoir[:min(cap, seen)].copy()

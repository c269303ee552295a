"""K-means codeword learning with k-means++ seeding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STANDARD_CLUSTER_COUNTS = (1, 2, 4, 8, 64)


@dataclass(frozen=True)
class Codebook:
    centroids: np.ndarray
    inertia: float | None = None
    # inertia after every assignment step, non-increasing
    trace: tuple[float, ...] = ()
    n_iter: int = 0

    def __post_init__(self):
        c = np.atleast_2d(np.array(self.centroids, dtype=np.float64))
        if c.shape[0] < 1:
            raise ValueError("a codebook needs at least one centroid")
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)
        object.__setattr__(self, "trace", tuple(float(v) for v in self.trace))

    @property
    def n_words(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def assign(self, x) -> np.ndarray | int:
        return assign(self, x)


def squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(N, K) squared Euclidean distances.

    Computed by explicit differences, one centroid at a time, so exact ties
    stay exact (the |x|^2 - 2xc + |c|^2 expansion would break them).
    """
    out = np.empty((len(points), len(centroids)))
    for k, c in enumerate(centroids):
        diff = points - c
        out[:, k] = np.einsum("ij,ij->i", diff, diff)
    return out


def _nearest(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = squared_distances(points, centroids)
    labels = np.argmin(d2, axis=1)  # first minimum -> lowest index on ties
    return labels, d2[np.arange(len(points)), labels]


def _as_points(points) -> np.ndarray:
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"points must be a 2-D array, got shape {X.shape}")
    return X


def seed_plusplus(points, k: int, seed: int = 0) -> np.ndarray:
    """k-means++ seeding: first center uniform, then D^2-weighted draws."""
    X = _as_points(points)
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    n_distinct = len(np.unique(X, axis=0)) if len(X) else 0
    if n_distinct < k:
        raise ValueError(f"need at least {k} distinct points, got {n_distinct}")
    rng = np.random.default_rng(seed)
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(len(X))]
    d2 = squared_distances(X, centers[:1])[:, 0]
    for i in range(1, k):
        # inverse-CDF draw over cumulative weights keeps this reproducible
        cum = np.cumsum(d2)
        idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        idx = min(idx, len(X) - 1)
        while d2[idx] == 0:  # guard against landing on a zero-weight point at the edge
            idx -= 1
        centers[i] = X[idx]
        d2 = np.minimum(d2, squared_distances(X, centers[i:i + 1])[:, 0])
    return centers


def _update(X, labels, d2, k, prev):
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, labels, X)
    counts = np.bincount(labels, minlength=k)
    new = prev.copy()
    full = counts > 0
    new[full] = sums[full] / counts[full, None]
    empty = np.nonzero(~full)[0]
    if empty.size:
        # move each dead centroid onto the worst-fit point still unclaimed
        order = np.argsort(-d2, kind="stable")
        for j, p in zip(empty, order):
            new[j] = X[p]
    return new


def lloyd(points, init, max_iter: int = 100, tol: float = 1e-6) -> Codebook:
    """Lloyd iterations from `init` until relative inertia gain < `tol`.

    Returns the fitted codebook with its per-iteration inertia trace.
    """
    X = _as_points(points)
    C = np.array(init, dtype=np.float64, copy=True)
    if len(X) == 0:
        raise ValueError("cannot run k-means on an empty point set")
    if C.ndim != 2 or C.shape[1] != X.shape[1]:
        raise ValueError(
            f"init must have shape (K, {X.shape[1]}), got {C.shape}"
        )
    k = len(C)
    trace = []
    labels, d2 = _nearest(X, C)
    trace.append(float(d2.sum()))
    n_iter = 0
    for _ in range(max_iter):
        C = _update(X, labels, d2, k, C)
        n_iter += 1
        new_labels, d2 = _nearest(X, C)
        inertia = float(d2.sum())
        prev = trace[-1]
        trace.append(inertia)
        stable = np.array_equal(new_labels, labels)
        labels = new_labels
        if stable or prev - inertia <= tol * prev:
            break
    return Codebook(C, trace[-1], tuple(trace), n_iter)


def train_codebook(points, k: int, seed: int = 0, max_iter: int = 100, tol: float = 1e-6) -> Codebook:
    X = _as_points(points)
    return lloyd(X, seed_plusplus(X, k, seed), max_iter=max_iter, tol=tol)


def assign(cb: Codebook, x) -> np.ndarray | int:
    """Nearest centroid index (lowest on ties), for one vector or a batch."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != cb.dim:
        raise ValueError(f"vector length {x.shape[-1]} does not match codebook dim {cb.dim}")
    if x.ndim == 1:
        return int(_nearest(x[None, :], cb.centroids)[0][0])
    return _nearest(x, cb.centroids)[0]

"""Dense-matrix primitives shared by the fitters, model selection and metrics.

Matrices are plain float64 numpy arrays in row-major order. Hard partitions
travel as integer label vectors (cluster indices ``0 .. n_clusters-1``)
together with their cluster count; :func:`onehot` expands them to the binary
row-stochastic membership matrix when matrix algebra needs it.

All functions are pure: inputs are never mutated and results are fresh
arrays, so values can be shared freely across threads.
"""

from __future__ import annotations

import numpy as np

#: absolute tolerance for matrix identities checked in tests (doubles,
#: desk-scale shapes)
IDENTITY_ATOL = 1e-12


def as_matrix(values, *, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite float64 2-D array (C order)."""
    x = np.ascontiguousarray(values, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError(f"{name} contains non-finite entries")
    return x


def row_normalize(m) -> tuple[np.ndarray, np.ndarray]:
    """Scale every row with nonzero Euclidean norm to unit norm.

    All-zero rows are passed through unchanged rather than raising: pruned
    corpora can produce them transiently and a fit must stay total.

    Returns
    -------
    normalized : np.ndarray
        Copy of `m` with unit-norm rows where possible.
    zero_rows : np.ndarray
        Indices of rows that were all zero (returned unchanged, flagged).
    """
    x = as_matrix(m)
    norms = np.linalg.norm(x, axis=1)
    zero_rows = np.flatnonzero(norms == 0.0)
    denom = np.where(norms == 0.0, 1.0, norms)
    return x / denom[:, None], zero_rows


def cosine_dissimilarity(a, b) -> float:
    """1 minus the cosine of the angle between two nonzero vectors.

    Lies in [0, 2]; 0 for equal (or positively proportional) vectors,
    1 for orthogonal ones.
    """
    va = np.asarray(a, dtype=np.float64).ravel()
    vb = np.asarray(b, dtype=np.float64).ravel()
    if va.shape != vb.shape:
        raise ValueError(f"length mismatch: {va.shape[0]} vs {vb.shape[0]}")
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ValueError("undefined angle: zero vector")
    return 1.0 - float(va @ vb) / (na * nb)


def as_labels(labels, n_clusters: int | None = None, *, n_objects: int | None = None,
              name: str = "labels") -> tuple[np.ndarray, int]:
    """Validate a label vector; returns (labels, n_clusters).

    `n_clusters` defaults to ``labels.max() + 1``.
    """
    lab = np.asarray(labels)
    if lab.ndim != 1 or lab.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector")
    lab = lab.astype(np.intp, copy=False)
    if lab.min() < 0:
        raise ValueError(f"{name} contains negative cluster indices")
    k = int(lab.max()) + 1 if n_clusters is None else int(n_clusters)
    if lab.max() >= k:
        raise ValueError(f"{name} references cluster {int(lab.max())} but n_clusters={k}")
    if n_objects is not None and lab.size != n_objects:
        raise ValueError(f"{name} has {lab.size} entries, expected {n_objects}")
    return lab, k


def onehot(labels, n_clusters: int | None = None) -> np.ndarray:
    """Binary row-stochastic membership matrix for a label vector."""
    lab, k = as_labels(labels, n_clusters)
    return (lab[:, None] == np.arange(k)[None, :]).astype(np.float64)


def cluster_sizes(labels, n_clusters: int | None = None) -> np.ndarray:
    lab, k = as_labels(labels, n_clusters)
    return np.bincount(lab, minlength=k)


def membership_pinv(labels, n_clusters: int | None = None) -> np.ndarray:
    """Moore-Penrose inverse (U'U)^-1 U' of a membership matrix, as K x N.

    U'U is diagonal with the cluster sizes, so this is U' with row k divided
    by the size of cluster k. Every cluster must be non-empty.
    """
    lab, k = as_labels(labels, n_clusters)
    sizes = np.bincount(lab, minlength=k)
    if (sizes == 0).any():
        empty = int(np.flatnonzero(sizes == 0)[0])
        raise ValueError(f"singular U'U: cluster {empty} is empty")
    return onehot(lab, k).T / sizes[:, None]


def projection(labels, n_clusters: int | None = None) -> np.ndarray:
    """Projection H = U (U'U)^-1 U' onto the cluster-indicator column space.

    Symmetric, idempotent, trace equal to the number of clusters.
    """
    u = onehot(*as_labels(labels, n_clusters))
    return u @ membership_pinv(labels, n_clusters)


def normalized_cosine_objective(x, xt) -> float:
    """Cosine between two matrices under the trace inner product.

    tr(X'Xt) / sqrt(tr(X'X) tr(Xt'Xt)); upper bounded by 1 and equal to 1
    exactly when `xt` is a positive multiple of `x`.
    """
    a = as_matrix(x, name="x")
    b = as_matrix(xt, name="xt")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    ta = float((a * a).sum())
    tb = float((b * b).sum())
    if ta == 0.0 or tb == 0.0:
        raise ValueError("undefined objective: all-zero matrix")
    return float((a * b).sum()) / np.sqrt(ta * tb)

"""Planted co-cluster data generator for recovery and selection studies.

A dataset is built as X = U Ybar_pert V' + eps_centroid * Z where U, V are
random non-empty memberships, Ybar_pert perturbs equidistant unit-norm
centroids by eps_cluster (degrading between-cluster separation) and Z is
standard normal entrywise noise (within-cluster spread). Everything is a
pure function of the arguments plus the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrixlab import onehot, row_normalize


@dataclass
class SyntheticDataset:
    """A generated matrix together with its planted ground truth."""

    x: np.ndarray
    true_u: np.ndarray
    true_v: np.ndarray
    true_y: np.ndarray
    n_row_clusters: int
    n_col_clusters: int
    eps_centroid: float
    eps_cluster: float
    seed: int
    #: centroid rows are pairwise equidistant only when Q >= K-1; below that
    #: the simplex embedding is truncated and this flag records it
    equidistant_centroids: bool


def gen_membership(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Random labels over k clusters, none empty.

    The first k objects are pre-assigned to distinct clusters, the remaining
    n-k draw uniformly, and the object order is then randomly permuted.
    """
    if k > n:
        raise ValueError(f"cannot place {k} non-empty clusters on {n} objects")
    labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
    return labels[rng.permutation(n)].astype(np.intp)


def gen_centroids(k: int, q: int) -> np.ndarray:
    """K unit-norm centroid rows, pairwise equidistant whenever q >= k-1.

    Vertices of a regular (k-1)-simplex are embedded into q dimensions by
    classical multidimensional scaling: double-center the squared-distance
    matrix, keep the top min(k-1, q) eigenpairs, scale eigenvectors by the
    square roots of their eigenvalues, zero-pad to q columns and normalize
    the rows. For q < k-1 the embedding is a truncation and equidistance is
    only approximate.
    """
    if k < 1 or q < 1:
        raise ValueError("cluster counts must be >= 1")
    if k == 1:
        y = np.zeros((1, q))
        y[0, 0] = 1.0
        return y
    d2 = np.ones((k, k)) - np.eye(k)
    centering = np.eye(k) - np.full((k, k), 1.0 / k)
    b = -0.5 * centering @ d2 @ centering
    eigvals, eigvecs = np.linalg.eigh(b)
    order = np.argsort(eigvals)[::-1][: min(k - 1, q)]
    coords = eigvecs[:, order] * np.sqrt(np.clip(eigvals[order], 0.0, None))
    y = np.zeros((k, q))
    y[:, : coords.shape[1]] = coords
    normalized, _ = row_normalize(y)
    return normalized


def gen_dataset(n: int, j: int, k: int, q: int, eps_centroid: float,
                eps_cluster: float, seed: int) -> SyntheticDataset:
    """Generate a planted dataset; deterministic given the arguments.

    The random stream draws, in order: U, V, the centroid perturbation W and
    the entrywise noise Z. The perturbed centroid matrix is re-normalized by
    rows so that noise rotates the centroid directions instead of inflating
    their magnitude; `true_y` stores that unit-row matrix, which is what a
    spherical fit estimates.
    """
    if eps_centroid < 0.0 or eps_cluster < 0.0:
        raise ValueError("error levels must be >= 0")
    rng = np.random.default_rng(seed)
    true_u = gen_membership(n, k, rng)
    true_v = gen_membership(j, q, rng)
    base = gen_centroids(k, q)
    w = rng.standard_normal((k, q))
    z = rng.standard_normal((n, j))
    true_y, _ = row_normalize(base + eps_cluster * w)
    x = onehot(true_u, k) @ true_y @ onehot(true_v, q).T + eps_centroid * z
    return SyntheticDataset(
        x=x,
        true_u=true_u,
        true_v=true_v,
        true_y=true_y,
        n_row_clusters=k,
        n_col_clusters=q,
        eps_centroid=float(eps_centroid),
        eps_cluster=float(eps_cluster),
        seed=int(seed),
        equidistant_centroids=q >= k - 1,
    )

"""Partition and centroid recovery metrics.

The adjusted Rand index is computed in exact rational arithmetic and
converted to float at the end, so hand-checkable values (1, -0.5, ...) come
out exact. Centroid comparisons first align the arbitrary cluster labels of
the estimate to the truth by maximizing the contingency-table trace.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .clusterers import update_centroids_sdkm, sdkm_objective
from .matrixlab import as_labels, as_matrix, row_normalize


@dataclass
class RecoveryReport:
    """How well a fitted model recovers a planted truth."""

    ari_u: float
    ari_v: float
    rmse: float
    nrmse1: float
    nrmse2: float
    alignment_u: np.ndarray
    alignment_v: np.ndarray


def contingency(labels_a, labels_b) -> np.ndarray:
    """Cross-tabulation: cell (a, b) counts objects in cluster a of the first
    partition and cluster b of the second."""
    la, ka = as_labels(labels_a, name="labels_a")
    lb, kb = as_labels(labels_b, name="labels_b")
    if la.size != lb.size:
        raise ValueError(f"object count mismatch: {la.size} vs {lb.size}")
    table = np.zeros((ka, kb), dtype=np.int64)
    np.add.at(table, (la, lb), 1)
    return table


def ari(labels_a, labels_b) -> float:
    """Hubert-Arabie adjusted Rand index between two hard partitions.

    1 for identical partitions up to relabeling; expectation 0 under the
    permutation null. Exact rational arithmetic internally.
    """
    table = contingency(labels_a, labels_b)
    n = int(table.sum())
    index = sum(comb(int(c), 2) for c in table.ravel())
    sum_a = sum(comb(int(c), 2) for c in table.sum(axis=1))
    sum_b = sum(comb(int(c), 2) for c in table.sum(axis=0))
    total = comb(n, 2)
    if total == 0:
        return 1.0
    expected = Fraction(sum_a * sum_b, total)
    maximum = Fraction(sum_a + sum_b, 2)
    if maximum == expected:
        return 1.0
    return float((index - expected) / (maximum - expected))


def align_clusters(true_labels, est_labels) -> np.ndarray:
    """Permutation mapping estimated cluster e to true cluster perm[e],
    maximizing the trace of the aligned contingency table.

    Exhaustive over the k! permutations for k <= 8, greedy maximal matching
    beyond. Requires equal cluster counts.
    """
    _, kt = as_labels(true_labels)
    _, ke = as_labels(est_labels)
    if kt != ke:
        raise ValueError(f"cluster count mismatch: {kt} vs {ke}")
    k = kt
    table = contingency(true_labels, est_labels)
    if k <= 8:
        best_perm, best_trace = None, -1
        for perm in itertools.permutations(range(k)):
            t = sum(int(table[perm[e], e]) for e in range(k))
            if t > best_trace:
                best_trace, best_perm = t, perm
        return np.array(best_perm, dtype=np.intp)
    perm = np.full(k, -1, dtype=np.intp)
    used_true = np.zeros(k, dtype=bool)
    used_est = np.zeros(k, dtype=bool)
    order = np.argsort(table.ravel())[::-1]
    for flat in order:
        t, e = divmod(int(flat), k)
        if not used_true[t] and not used_est[e]:
            perm[e] = t
            used_true[t] = True
            used_est[e] = True
    return perm


def centroid_rmse(true_y, est_y, align_u, align_v) -> tuple[float, float, float]:
    """RMSE between true and label-aligned estimated centroids, plus its two
    normalizations.

    nrmse1 divides by the range of the true matrix, nrmse2 by the Frobenius
    norm of the centered true matrix; either is NaN when its denominator is
    zero (flagged, not an error).
    """
    yt = as_matrix(true_y, name="true_y")
    ye = as_matrix(est_y, name="est_y")
    if yt.shape != ye.shape:
        raise ValueError(f"centroid shape mismatch: {yt.shape} vs {ye.shape}")
    pu = np.asarray(align_u, dtype=np.intp)
    pv = np.asarray(align_v, dtype=np.intp)
    aligned = np.empty_like(ye)
    aligned[pu[:, None], pv[None, :]] = ye
    diff = yt - aligned
    rmse = float(np.sqrt(np.mean(diff * diff)))
    value_range = float(yt.max() - yt.min())
    nrmse1 = rmse / value_range if value_range > 0.0 else float("nan")
    centered = yt - yt.mean()
    norm = float(np.linalg.norm(centered))
    nrmse2 = rmse / norm if norm > 0.0 else float("nan")
    return rmse, nrmse1, nrmse2


def detect_local_maximum(fit_objective: float, true_objective: float,
                         tol: float = 1e-9) -> bool:
    """True when a fit ended strictly below the objective attainable at the
    planted truth (the fit is trapped in a local maximum)."""
    return fit_objective < true_objective - tol


def true_partition_objective(x, true_u, true_v) -> float:
    """Normalized objective at the planted partitions: row-normalize the
    data, run one centroid update on the true memberships, evaluate."""
    xn, _ = row_normalize(x)
    ybar = update_centroids_sdkm(xn, true_u, true_v)
    _, normalized = sdkm_objective(xn, true_u, true_v, ybar)
    return normalized


def recovery_report(true_u, true_v, true_y, est_u, est_v, est_y) -> RecoveryReport:
    """Full recovery evaluation of a fitted co-clustering against a truth."""
    align_u = align_clusters(true_u, est_u)
    align_v = align_clusters(true_v, est_v)
    rmse, nrmse1, nrmse2 = centroid_rmse(true_y, est_y, align_u, align_v)
    return RecoveryReport(
        ari_u=ari(true_u, est_u),
        ari_v=ari(true_v, est_v),
        rmse=rmse,
        nrmse1=nrmse1,
        nrmse2=nrmse2,
        alignment_u=align_u,
        alignment_v=align_v,
    )

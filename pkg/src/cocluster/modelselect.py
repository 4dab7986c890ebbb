"""Pseudo-F index and (K, Q) grid search for choosing the cluster counts.

The index is the ratio of between-block to within-block deviance, each
scaled by its degrees of freedom:

    pF = ||H_U X H_V - mean(X)||^2 / (KQ - 1)
         -------------------------------------
         ||X - H_U X H_V||^2 / (NJ - KQ)

where H_U X H_V is the block-mean reconstruction of X under the fitted
partitions and mean(X) is the global mean subtracted from every entry.
Higher is better; the grid search picks the (K, Q) cell with the largest
defined value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clusterers import CoClusterModel, FitConfig, multi_start
from .matrixlab import as_labels, as_matrix, onehot, row_normalize
from .util import hash64, parallel_map


@dataclass
class PseudoFGrid:
    """Pseudo-F scores over a (K, Q) grid.

    Undefined cells (KQ = 1 or KQ = NJ, or a failed fit) hold NaN and are
    excluded from the argmax; exact fits hold +inf and win it. Ties go to
    the smaller K, then the smaller Q.
    """

    k_values: list[int]
    q_values: list[int]
    scores: np.ndarray
    best_k: int | None
    best_q: int | None
    models: dict[tuple[int, int], CoClusterModel] | None = None


def pseudo_f(x, u_labels, v_labels) -> float:
    """Pseudo-F of a co-partition of `x`.

    Returns +inf on an exact block fit (zero within-block deviance) and 0.0
    for a globally constant matrix. Requires 1 < KQ < NJ and non-empty
    clusters.
    """
    xm = as_matrix(x)
    n, j = xm.shape
    ulab, k = as_labels(u_labels, n_objects=n, name="u_labels")
    vlab, q = as_labels(v_labels, n_objects=j, name="v_labels")
    if k * q <= 1 or k * q >= n * j:
        raise ValueError(f"pseudo-F undefined for KQ={k * q} with NJ={n * j}")
    nu = np.bincount(ulab, minlength=k)
    nv = np.bincount(vlab, minlength=q)
    if (nu == 0).any() or (nv == 0).any():
        raise ValueError("empty cluster")
    means = (onehot(ulab, k).T @ xm @ onehot(vlab, q)) / (nu[:, None] * nv[None, :])
    recon = means[ulab][:, vlab]            # H_U X H_V
    grand = xm.mean()
    between = float(((recon - grand) ** 2).sum()) / (k * q - 1)
    within = float(((xm - recon) ** 2).sum()) / (n * j - k * q)
    if within == 0.0:
        return math.inf if between > 0.0 else 0.0
    return between / within


def grid_search(x, k_values, q_values, config: FitConfig,
                retain_models: bool = False) -> PseudoFGrid:
    """Fit SDKM and score pseudo-F for every (K, Q) in the grid.

    Cells are fit independently (no warm starts); cell (K, Q) derives its
    seed from hash64(config.seed, K, Q), so any cell can be reproduced in
    isolation. Pseudo-F is evaluated on the same row-normalized matrix the
    fits see. A cell whose fit or score fails is flagged NaN and the search
    continues.
    """
    xm = as_matrix(x)
    ks = [int(k) for k in k_values]
    qs = [int(q) for q in q_values]
    if not ks or not qs:
        raise ValueError("empty grid")
    for k in ks:
        if not 1 < k <= xm.shape[0]:
            raise ValueError(f"K={k} outside (1, {xm.shape[0]}]")
    for q in qs:
        if not 1 < q <= xm.shape[1]:
            raise ValueError(f"Q={q} outside (1, {xm.shape[1]}]")
    xn, _ = row_normalize(xm)

    def fit_cell(cell: tuple[int, int]):
        k, q = cell
        cfg = FitConfig(
            n_row_clusters=k,
            n_col_clusters=q,
            n_starts=config.n_starts,
            max_iter=config.max_iter,
            tol=config.tol,
            seed=hash64(config.seed, k, q),
            algorithm="sdkm",
        )
        try:
            model = multi_start(xm, cfg)
            score = pseudo_f(xn, model.row_labels, model.col_labels)
        except ValueError:
            return float("nan"), None
        return score, model

    cells = [(k, q) for k in ks for q in qs]
    outcomes = parallel_map(fit_cell, cells)

    scores = np.full((len(ks), len(qs)), np.nan)
    models: dict[tuple[int, int], CoClusterModel] = {}
    for (k, q), (score, model) in zip(cells, outcomes):
        scores[ks.index(k), qs.index(q)] = score
        if retain_models and model is not None:
            models[(k, q)] = model

    best_k = best_q = None
    best = -math.inf
    for ik, k in enumerate(ks):
        for iq, q in enumerate(qs):
            s = scores[ik, iq]
            if not math.isnan(s) and s > best:
                best, best_k, best_q = s, k, q
    return PseudoFGrid(
        k_values=ks,
        q_values=qs,
        scores=scores,
        best_k=best_k,
        best_q=best_q,
        models=models if retain_models else None,
    )

"""The three fitters: spherical k-means (SKM), double k-means (DKM) and
spherical double k-means (SDKM).

All three alternate membership and centroid updates from seeded random
starts. SDKM and SKM maximize a cosine objective on row-normalized data;
DKM minimizes the squared reconstruction error on the raw matrix.

Monotonicity of the recorded objective trace is enforced at the stopping
check: an outer iteration whose relative improvement falls below the
tolerance ends the fit, and if that final candidate is strictly worse than
the current state (possible, because the row-normalized centroid update and
the empty-cluster repair are not exact conditional maximizers), the fit
returns the current state instead of adopting the candidate. The trace
therefore lists the objective of every adopted state, one entry per outer
iteration plus the initial value.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .matrixlab import as_labels, as_matrix, onehot, row_normalize
from .util import parallel_map

ALGORITHMS = ("skm", "dkm", "sdkm")

#: floor used in the relative-improvement stopping rule
_REL_FLOOR = 1e-300


@dataclass(frozen=True)
class FitConfig:
    """Resolved fitting parameters.

    `tol` is the relative objective improvement below which a fit is
    declared converged; `n_starts` random initializations are tried and the
    best objective wins, ties going to the lowest start index.
    """

    n_row_clusters: int
    n_col_clusters: int
    n_starts: int = 20
    max_iter: int = 100
    tol: float = 1e-9
    seed: int = 0
    algorithm: str = "sdkm"

    def __post_init__(self):
        if self.n_row_clusters < 1 or self.n_col_clusters < 1:
            raise ValueError("cluster counts must be >= 1")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0.0:
            raise ValueError("tol must be > 0")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")

    def validate_shape(self, n_rows: int, n_cols: int) -> None:
        if self.n_row_clusters > n_rows:
            raise ValueError(
                f"K={self.n_row_clusters} exceeds number of rows {n_rows}")
        if self.n_col_clusters > n_cols:
            raise ValueError(
                f"Q={self.n_col_clusters} exceeds number of columns {n_cols}")


@dataclass
class CoClusterModel:
    """A fitted co-clustering: memberships, centroids and fit diagnostics.

    `objective_trace` holds the per-iteration convergence objective of the
    winning start: the normalized cosine objective for SKM/SDKM
    (non-decreasing) and the squared residual for DKM (non-increasing).
    Centroid rows are unit-norm for SKM/SDKM (zero rows flagged); DKM
    centroids are raw block means.
    """

    algorithm: str
    row_labels: np.ndarray
    col_labels: np.ndarray
    centroids: np.ndarray
    objective_raw: float
    objective_normalized: float
    objective_trace: list[float]
    converged: bool
    n_iterations: int
    best_start_index: int
    config: FitConfig
    column_norms_of_centroids: np.ndarray = field(default_factory=lambda: np.empty(0))
    flagged_zero_rows: list[int] = field(default_factory=list)

    @property
    def n_row_clusters(self) -> int:
        return self.centroids.shape[0]

    @property
    def n_col_clusters(self) -> int:
        return self.centroids.shape[1]


# ---------------------------------------------------------------------------
# update steps
# ---------------------------------------------------------------------------

def _repair_empty(labels: np.ndarray, n_clusters: int, fit_scores: np.ndarray,
                  *, maximize: bool) -> np.ndarray:
    """Fill empty clusters by donating the worst-fitting object.

    `fit_scores[i, c]` is the fit of object i under cluster c (similarity if
    `maximize`, squared distance otherwise). Empty clusters are processed in
    ascending index; the donor is the object with the worst fit to its
    current cluster among clusters that keep >= 2 members, ties going to the
    lowest object index.
    """
    labels = labels.copy()
    n = labels.shape[0]
    for c in range(n_clusters):
        while not (labels == c).any():
            sizes = np.bincount(labels, minlength=n_clusters)
            eligible = sizes[labels] >= 2
            current = fit_scores[np.arange(n), labels]
            if maximize:
                masked = np.where(eligible, current, np.inf)
                donor = int(np.argmin(masked))
            else:
                masked = np.where(eligible, current, -np.inf)
                donor = int(np.argmax(masked))
            labels[donor] = c
    return labels


def update_row_memberships(x, centroids, v_labels) -> np.ndarray:
    """Assign each row to the cluster maximizing its inner product with the
    corresponding row of Ybar V'.

    Ties break to the lowest cluster index; clusters emptied by the argmax
    are repaired by reassigning worst-fitting objects.
    """
    xm = as_matrix(x)
    ybar = as_matrix(centroids, name="centroids")
    k, q = ybar.shape
    vlab, _ = as_labels(v_labels, q, n_objects=xm.shape[1], name="v_labels")
    rows = ybar[:, vlab]                # K x J, == Ybar V'
    scores = xm @ rows.T                # N x K
    labels = np.argmax(scores, axis=1)
    return _repair_empty(labels, k, scores, maximize=True)


def update_col_memberships(x, u_labels, centroids) -> np.ndarray:
    """Column-wise mirror of :func:`update_row_memberships`: each column goes
    to the cluster maximizing its inner product with the matching column of
    U Ybar."""
    xm = as_matrix(x)
    ybar = as_matrix(centroids, name="centroids")
    k, q = ybar.shape
    ulab, _ = as_labels(u_labels, k, n_objects=xm.shape[0], name="u_labels")
    cols = ybar[ulab, :]                # N x Q, == U Ybar
    scores = xm.T @ cols                # J x Q
    labels = np.argmax(scores, axis=1)
    return _repair_empty(labels, q, scores, maximize=True)


def _block_means(x: np.ndarray, ulab: np.ndarray, vlab: np.ndarray,
                 k: int, q: int) -> np.ndarray:
    """(U'U)^-1 U' X V (V'V)^-1: the K x Q matrix of block means."""
    nu = np.bincount(ulab, minlength=k)
    nv = np.bincount(vlab, minlength=q)
    if (nu == 0).any() or (nv == 0).any():
        raise ValueError("singular U'U or V'V: empty cluster")
    g = onehot(ulab, k).T @ x @ onehot(vlab, q)
    return g / (nu[:, None] * nv[None, :])


def update_centroids_dkm(x, u_labels, v_labels) -> np.ndarray:
    """Block means (U'U)^-1 U' X V (V'V)^-1, not normalized."""
    xm = as_matrix(x)
    ulab, k = as_labels(u_labels, n_objects=xm.shape[0], name="u_labels")
    vlab, q = as_labels(v_labels, n_objects=xm.shape[1], name="v_labels")
    return _block_means(xm, ulab, vlab, k, q)


def update_centroids_sdkm(x, u_labels, v_labels) -> np.ndarray:
    """Block means with every row scaled to unit norm (zero rows flagged by
    :func:`cocluster.matrixlab.row_normalize` semantics, i.e. passed
    through)."""
    normalized, _ = row_normalize(update_centroids_dkm(x, u_labels, v_labels))
    return normalized


def sdkm_objective(x, u_labels, v_labels, centroids) -> tuple[float, float]:
    """Raw trace tr(X' U Ybar V') and its normalized form.

    The normalized value divides by sqrt(tr(X'X) tr(U Ybar V' V Ybar' U'))
    and is bounded above by 1, with equality when X coincides with the
    reconstruction.
    """
    xm = as_matrix(x)
    ybar = as_matrix(centroids, name="centroids")
    k, q = ybar.shape
    ulab, _ = as_labels(u_labels, k, n_objects=xm.shape[0], name="u_labels")
    vlab, _ = as_labels(v_labels, q, n_objects=xm.shape[1], name="v_labels")
    nu = np.bincount(ulab, minlength=k)
    nv = np.bincount(vlab, minlength=q)
    g = onehot(ulab, k).T @ xm @ onehot(vlab, q)
    raw = float((g * ybar).sum())
    tr_xx = float((xm * xm).sum())
    tr_tt = float(((nu[:, None] * nv[None, :]) * ybar * ybar).sum())
    if tr_xx == 0.0 or tr_tt == 0.0:
        raise ValueError("undefined objective: zero denominator")
    return raw, raw / np.sqrt(tr_xx * tr_tt)


def dkm_residual(x, u_labels, v_labels, centroids) -> float:
    """Squared Frobenius norm of X - U Ybar V'."""
    xm = as_matrix(x)
    ybar = as_matrix(centroids, name="centroids")
    ulab, _ = as_labels(u_labels, ybar.shape[0], n_objects=xm.shape[0])
    vlab, _ = as_labels(v_labels, ybar.shape[1], n_objects=xm.shape[1])
    recon = ybar[ulab][:, vlab]
    diff = xm - recon
    return float((diff * diff).sum())


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def random_labels(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Random membership with guaranteed non-empty clusters.

    The first k objects get distinct clusters, the rest draw uniformly, and
    the object order is then randomly permuted (same construction as the
    synthetic generator's memberships).
    """
    if k > n:
        raise ValueError(f"cannot place {k} non-empty clusters on {n} objects")
    labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
    return labels[rng.permutation(n)].astype(np.intp)


# ---------------------------------------------------------------------------
# single-start loops
# ---------------------------------------------------------------------------

@dataclass
class _StartResult:
    row_labels: np.ndarray
    col_labels: np.ndarray
    centroids: np.ndarray
    trace: list[float]
    converged: bool
    n_iterations: int


def _relative_change(new: float, prev: float) -> float:
    return (new - prev) / max(abs(prev), _REL_FLOOR)


def _sdkm_start(xn: np.ndarray, k: int, q: int, rng: np.random.Generator | None,
                max_iter: int, tol: float, *, freeze_u: bool = False,
                freeze_v: bool = False, init_u=None, init_v=None) -> _StartResult:
    """One SDKM run from a random or given initialization.

    `freeze_u` / `freeze_v` pin the corresponding membership to the identity
    partition (each object its own cluster) and skip its update; the frozen
    side draws nothing from `rng`, which keeps seed streams comparable with
    the degenerate single-sided fits.
    """
    n, j = xn.shape
    if freeze_u:
        ulab = np.arange(n, dtype=np.intp)
    elif init_u is not None:
        ulab, _ = as_labels(init_u, k, n_objects=n, name="init_u")
    else:
        ulab = random_labels(n, k, rng)
    if freeze_v:
        vlab = np.arange(j, dtype=np.intp)
    elif init_v is not None:
        vlab, _ = as_labels(init_v, q, n_objects=j, name="init_v")
    else:
        vlab = random_labels(j, q, rng)

    ybar = update_centroids_sdkm(xn, ulab, vlab)
    _, f_prev = sdkm_objective(xn, ulab, vlab, ybar)
    trace = [f_prev]
    converged = False
    n_iter = 0
    for _ in range(max_iter):
        cand_u = ulab if freeze_u else update_row_memberships(xn, ybar, vlab)
        cand_y = update_centroids_sdkm(xn, cand_u, vlab)
        cand_v = vlab if freeze_v else update_col_memberships(xn, cand_u, cand_y)
        cand_y = update_centroids_sdkm(xn, cand_u, cand_v)
        _, f = sdkm_objective(xn, cand_u, cand_v, cand_y)
        n_iter += 1
        if _relative_change(f, f_prev) < tol:
            converged = True
            if f >= f_prev:
                ulab, vlab, ybar = cand_u, cand_v, cand_y
                trace.append(f)
            break
        ulab, vlab, ybar = cand_u, cand_v, cand_y
        trace.append(f)
        f_prev = f
    return _StartResult(ulab, vlab, ybar, trace, converged, n_iter)


def _skm_start(xn: np.ndarray, k: int, rng: np.random.Generator,
               max_iter: int, tol: float) -> _StartResult:
    """One spherical k-means run on the rows (V is the identity partition)."""
    n, j = xn.shape
    ulab = random_labels(n, k, rng)
    vlab = np.arange(j, dtype=np.intp)

    sizes = np.bincount(ulab, minlength=k)
    means = onehot(ulab, k).T @ xn / sizes[:, None]
    cent, _ = row_normalize(means)
    _, f_prev = sdkm_objective(xn, ulab, vlab, cent)
    trace = [f_prev]
    converged = False
    n_iter = 0
    for _ in range(max_iter):
        scores = xn @ cent.T
        cand_u = _repair_empty(np.argmax(scores, axis=1), k, scores, maximize=True)
        sizes = np.bincount(cand_u, minlength=k)
        means = onehot(cand_u, k).T @ xn / sizes[:, None]
        cand_c, _ = row_normalize(means)
        _, f = sdkm_objective(xn, cand_u, vlab, cand_c)
        n_iter += 1
        if _relative_change(f, f_prev) < tol:
            converged = True
            if f >= f_prev:
                ulab, cent = cand_u, cand_c
                trace.append(f)
            break
        ulab, cent = cand_u, cand_c
        trace.append(f)
        f_prev = f
    return _StartResult(ulab, vlab, cent, trace, converged, n_iter)


def _dkm_start(x: np.ndarray, k: int, q: int, rng: np.random.Generator | None,
               max_iter: int, tol: float, *, freeze_u: bool = False,
               freeze_v: bool = False, init_u=None, init_v=None) -> _StartResult:
    """One DKM run: alternating least-squares assignments and block means."""
    n, j = x.shape
    row_sq = (x * x).sum(axis=1)
    col_sq = (x * x).sum(axis=0)
    if freeze_u:
        ulab = np.arange(n, dtype=np.intp)
    elif init_u is not None:
        ulab, _ = as_labels(init_u, k, n_objects=n, name="init_u")
    else:
        ulab = random_labels(n, k, rng)
    if freeze_v:
        vlab = np.arange(j, dtype=np.intp)
    elif init_v is not None:
        vlab, _ = as_labels(init_v, q, n_objects=j, name="init_v")
    else:
        vlab = random_labels(j, q, rng)

    ybar = update_centroids_dkm(x, ulab, vlab)
    f_prev = dkm_residual(x, ulab, vlab, ybar)
    trace = [f_prev]
    converged = False
    n_iter = 0
    for _ in range(max_iter):
        if freeze_u:
            cand_u = ulab
        else:
            rows = ybar[:, vlab]                       # K x J
            d2 = row_sq[:, None] - 2.0 * (x @ rows.T) + (rows * rows).sum(axis=1)[None, :]
            cand_u = _repair_empty(np.argmin(d2, axis=1), k, d2, maximize=False)
        cand_y = update_centroids_dkm(x, cand_u, vlab)
        if freeze_v:
            cand_v = vlab
        else:
            cols = cand_y[cand_u, :]                   # N x Q
            d2c = col_sq[:, None] - 2.0 * (x.T @ cols) + (cols * cols).sum(axis=0)[None, :]
            cand_v = _repair_empty(np.argmin(d2c, axis=1), q, d2c, maximize=False)
        cand_y = update_centroids_dkm(x, cand_u, cand_v)
        f = dkm_residual(x, cand_u, cand_v, cand_y)
        n_iter += 1
        if _relative_change(f_prev, f) < tol:          # relative decrease
            converged = True
            if f <= f_prev:
                ulab, vlab, ybar = cand_u, cand_v, cand_y
                trace.append(f)
            break
        ulab, vlab, ybar = cand_u, cand_v, cand_y
        trace.append(f)
        f_prev = f
    return _StartResult(ulab, vlab, ybar, trace, converged, n_iter)


# ---------------------------------------------------------------------------
# multi-start driver and public fit functions
# ---------------------------------------------------------------------------

def _finalize(x: np.ndarray, algorithm: str, result: _StartResult, start_index: int,
              config: FitConfig, zero_rows: np.ndarray) -> CoClusterModel:
    if algorithm == "dkm":
        raw = result.trace[-1]
        recon = result.centroids[result.row_labels][:, result.col_labels]
        denom = float((x * x).sum()) * float((recon * recon).sum())
        normalized = float((x * recon).sum()) / np.sqrt(denom) if denom > 0.0 else 0.0
    else:
        raw, normalized = sdkm_objective(x, result.row_labels, result.col_labels,
                                         result.centroids)
    return CoClusterModel(
        algorithm=algorithm,
        row_labels=result.row_labels,
        col_labels=result.col_labels,
        centroids=result.centroids,
        objective_raw=raw,
        objective_normalized=normalized,
        objective_trace=result.trace,
        converged=result.converged,
        n_iterations=result.n_iterations,
        best_start_index=start_index,
        config=config,
        column_norms_of_centroids=np.linalg.norm(result.centroids, axis=0),
        flagged_zero_rows=[int(i) for i in zero_rows],
    )


def multi_start(x, config: FitConfig, *, freeze_u: bool = False,
                freeze_v: bool = False) -> CoClusterModel:
    """Fit `config.algorithm` from `config.n_starts` seeded initializations.

    Start s draws its random stream from (config.seed, s); the best
    objective wins, ties going to the lowest start index, so the result is a
    pure function of (x, config). Starts may run on threads (see
    COCLUSTER_THREADS); the reduction is order-independent.
    """
    xm = as_matrix(x)
    config.validate_shape(*xm.shape)
    k, q = config.n_row_clusters, config.n_col_clusters
    algorithm = config.algorithm
    if freeze_u and k != xm.shape[0]:
        raise ValueError("freeze_u requires K == number of rows")
    if freeze_v and q != xm.shape[1]:
        raise ValueError("freeze_v requires Q == number of columns")
    if algorithm == "skm" and q != xm.shape[1]:
        raise ValueError("skm requires Q == number of columns (V is the identity)")

    if algorithm == "dkm":
        data = xm
        zero_rows = np.empty(0, dtype=np.intp)
    else:
        data, zero_rows = row_normalize(xm)

    def run(start: int) -> _StartResult:
        rng = np.random.default_rng([config.seed, start])
        if algorithm == "sdkm":
            return _sdkm_start(data, k, q, rng, config.max_iter, config.tol,
                               freeze_u=freeze_u, freeze_v=freeze_v)
        if algorithm == "skm":
            return _skm_start(data, k, rng, config.max_iter, config.tol)
        return _dkm_start(data, k, q, rng, config.max_iter, config.tol,
                          freeze_u=freeze_u, freeze_v=freeze_v)

    results = parallel_map(run, range(config.n_starts))
    better = (lambda a, b: a < b) if algorithm == "dkm" else (lambda a, b: a > b)
    best = 0
    for s in range(1, config.n_starts):
        if better(results[s].trace[-1], results[best].trace[-1]):
            best = s
    return _finalize(data, algorithm, results[best], best, config, zero_rows)


def sdkm_fit(x, config: FitConfig) -> CoClusterModel:
    """Best SDKM model over the configured random starts."""
    return multi_start(x, replace(config, algorithm="sdkm"))


def dkm_fit(x, config: FitConfig) -> CoClusterModel:
    """Best DKM model over the configured random starts."""
    return multi_start(x, replace(config, algorithm="dkm"))


def skm_fit(x, n_clusters: int, config: FitConfig) -> CoClusterModel:
    """Spherical k-means on the rows; the column partition is the identity."""
    xm = as_matrix(x)
    cfg = replace(config, algorithm="skm", n_row_clusters=n_clusters,
                  n_col_clusters=xm.shape[1])
    return multi_start(xm, cfg)


def fit_from_init(x, config: FitConfig, init_u, init_v) -> CoClusterModel:
    """Single run of the configured algorithm from explicit initial
    memberships (no random draws). Useful for degeneracy and symmetry
    checks."""
    xm = as_matrix(x)
    config.validate_shape(*xm.shape)
    k, q = config.n_row_clusters, config.n_col_clusters
    if config.algorithm == "dkm":
        data = xm
        zero_rows = np.empty(0, dtype=np.intp)
        result = _dkm_start(data, k, q, None, config.max_iter, config.tol,
                            init_u=init_u, init_v=init_v)
    elif config.algorithm == "sdkm":
        data, zero_rows = row_normalize(xm)
        result = _sdkm_start(data, k, q, None, config.max_iter, config.tol,
                             init_u=init_u, init_v=init_v)
    else:
        raise ValueError("fit_from_init supports sdkm and dkm")
    return _finalize(data, config.algorithm, result, 0, config, zero_rows)

"""File formats: matrix CSV, model and truth JSON, grid and recovery CSVs.

Numbers are serialized with 17 significant digits so reruns are
byte-identical and values round-trip exactly. Cluster labels are written
1-based in files (cluster indices 1..K) and converted back to the 0-based
arrays used in the API; positional indices (row numbers, start indices)
stay 0-based. All writes go through a temp-file rename.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

import numpy as np

from .clusterers import CoClusterModel, FitConfig
from .modelselect import PseudoFGrid
from .synthgen import SyntheticDataset

MODEL_JSON_FIELDS = (
    "algorithm", "K", "Q", "seed", "n_starts", "tol", "max_iter",
    "row_labels", "col_labels", "centroids", "objective_raw",
    "objective_normalized", "objective_trace", "converged", "n_iterations",
    "column_norms_of_centroids", "flagged_zero_rows",
)


def format17(value) -> str:
    """Shortest-exact decimal text for a float (17 significant digits)."""
    return format(float(value), ".17g")


def dumps_json(obj) -> str:
    """Serialize to JSON preserving dict order, floats via :func:`format17`."""
    out: list[str] = []
    _write_json(obj, out, 0)
    out.append("\n")
    return "".join(out)


def _write_json(obj, out: list[str], depth: int) -> None:
    pad = "  " * depth
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            out.append(f'{pad}  "{key}": ')
            _write_json(value, out, depth + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            out.append("[]")
            return
        out.append("[")
        for i, value in enumerate(obj):
            _write_json(value, out, depth + 1)
            if i < len(obj) - 1:
                out.append(", ")
        out.append("]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format17(obj))
    elif isinstance(obj, str):
        escaped = obj.replace("\\", "\\\\").replace('"', '\\"')
        out.append(f'"{escaped}"')
    elif obj is None:
        out.append("null")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_atomic(path, text: str) -> Path:
    """Write text via a temporary file and rename; returns the path."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, target)
    return target


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# matrix CSV
# ---------------------------------------------------------------------------

def matrix_csv_text(x: np.ndarray, row_ids, col_ids) -> str:
    """Shared dense-matrix CSV: blank corner cell, column ids across the
    first row, row ids down the first column, values as decimal literals."""
    x = np.asarray(x, dtype=np.float64)
    row_ids = [str(r) for r in row_ids]
    col_ids = [str(c) for c in col_ids]
    if len(row_ids) != x.shape[0] or len(col_ids) != x.shape[1]:
        raise ValueError("id lengths do not match matrix shape")
    for ident in row_ids + col_ids:
        if "," in ident or "\n" in ident:
            raise ValueError(f"identifier not representable in CSV: {ident!r}")
    lines = ["," + ",".join(col_ids)]
    for rid, row in zip(row_ids, x):
        lines.append(rid + "," + ",".join(format17(v) for v in row))
    return "\n".join(lines) + "\n"


def write_matrix_csv(path, x, row_ids, col_ids) -> Path:
    return write_atomic(path, matrix_csv_text(x, row_ids, col_ids))


def read_matrix_csv(path) -> tuple[np.ndarray, list[str], list[str]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"empty matrix CSV: {path}")
    header = lines[0].split(",")
    if header[0] != "":
        raise ValueError(f"matrix CSV must have a blank corner cell: {path}")
    col_ids = header[1:]
    row_ids: list[str] = []
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(col_ids) + 1:
            raise ValueError(f"{path}:{lineno}: expected {len(col_ids) + 1} cells")
        row_ids.append(cells[0])
        rows.append([float(c) for c in cells[1:]])
    x = np.asarray(rows, dtype=np.float64)
    if not np.isfinite(x).all():
        raise ValueError(f"non-finite values in {path}")
    return x, row_ids, col_ids


# ---------------------------------------------------------------------------
# model JSON
# ---------------------------------------------------------------------------

def model_json_dict(model: CoClusterModel) -> dict:
    return {
        "algorithm": model.algorithm,
        "K": model.n_row_clusters,
        "Q": model.n_col_clusters,
        "seed": model.config.seed,
        "n_starts": model.config.n_starts,
        "tol": model.config.tol,
        "max_iter": model.config.max_iter,
        "row_labels": [int(l) + 1 for l in model.row_labels],
        "col_labels": [int(l) + 1 for l in model.col_labels],
        "centroids": [float(v) for v in model.centroids.ravel()],
        "objective_raw": model.objective_raw,
        "objective_normalized": model.objective_normalized,
        "objective_trace": [float(v) for v in model.objective_trace],
        "converged": model.converged,
        "n_iterations": model.n_iterations,
        "column_norms_of_centroids": [float(v) for v in model.column_norms_of_centroids],
        "flagged_zero_rows": [int(i) for i in model.flagged_zero_rows],
    }


def write_model_json(path, model: CoClusterModel) -> Path:
    return write_atomic(path, dumps_json(model_json_dict(model)))


def read_model_json(path) -> CoClusterModel:
    import json

    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    k, q = int(raw["K"]), int(raw["Q"])
    config = FitConfig(
        n_row_clusters=k,
        n_col_clusters=q,
        n_starts=int(raw["n_starts"]),
        max_iter=int(raw["max_iter"]),
        tol=float(raw["tol"]),
        seed=int(raw["seed"]),
        algorithm=raw["algorithm"],
    )
    return CoClusterModel(
        algorithm=raw["algorithm"],
        row_labels=np.asarray(raw["row_labels"], dtype=np.intp) - 1,
        col_labels=np.asarray(raw["col_labels"], dtype=np.intp) - 1,
        centroids=np.asarray(raw["centroids"], dtype=np.float64).reshape(k, q),
        objective_raw=float(raw["objective_raw"]),
        objective_normalized=float(raw["objective_normalized"]),
        objective_trace=[float(v) for v in raw["objective_trace"]],
        converged=bool(raw["converged"]),
        n_iterations=int(raw["n_iterations"]),
        best_start_index=0,
        config=config,
        column_norms_of_centroids=np.asarray(raw["column_norms_of_centroids"]),
        flagged_zero_rows=[int(i) for i in raw["flagged_zero_rows"]],
    )


# ---------------------------------------------------------------------------
# synthetic dataset bundle
# ---------------------------------------------------------------------------

def truth_json_dict(ds: SyntheticDataset) -> dict:
    return {
        "K": ds.n_row_clusters,
        "Q": ds.n_col_clusters,
        "row_labels": [int(l) + 1 for l in ds.true_u],
        "col_labels": [int(l) + 1 for l in ds.true_v],
        "centroids": [float(v) for v in ds.true_y.ravel()],
        "eps_centroid": ds.eps_centroid,
        "eps_cluster": ds.eps_cluster,
        "seed": ds.seed,
        "equidistant_centroids": ds.equidistant_centroids,
    }


def write_truth_json(path, ds: SyntheticDataset) -> Path:
    return write_atomic(path, dumps_json(truth_json_dict(ds)))


def read_truth_json(path) -> dict:
    import json

    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    k, q = int(raw["K"]), int(raw["Q"])
    return {
        "K": k,
        "Q": q,
        "row_labels": np.asarray(raw["row_labels"], dtype=np.intp) - 1,
        "col_labels": np.asarray(raw["col_labels"], dtype=np.intp) - 1,
        "centroids": np.asarray(raw["centroids"], dtype=np.float64).reshape(k, q),
        "eps_centroid": float(raw["eps_centroid"]),
        "eps_cluster": float(raw["eps_cluster"]),
        "seed": int(raw["seed"]),
    }


def save_dataset_bundle(prefix, ds: SyntheticDataset) -> tuple[Path, Path]:
    """Matrix CSV plus truth JSON under a common path prefix."""
    prefix = Path(prefix)
    row_ids = [f"r{i + 1}" for i in range(ds.x.shape[0])]
    col_ids = [f"c{j + 1}" for j in range(ds.x.shape[1])]
    matrix_path = write_matrix_csv(prefix.with_name(prefix.name + ".matrix.csv"),
                                   ds.x, row_ids, col_ids)
    truth_path = write_truth_json(prefix.with_name(prefix.name + ".truth.json"), ds)
    return matrix_path, truth_path


# ---------------------------------------------------------------------------
# grid / recovery / contingency CSVs
# ---------------------------------------------------------------------------

def _grid_cell(value: float, fmt) -> str:
    if np.isnan(value):
        return "NA"
    if np.isinf(value):
        return "Inf"
    return fmt(value)


def grid_csv_text(grid: PseudoFGrid, *, full_precision: bool) -> str:
    """Header row = Q values, first column = K values; display cells carry
    one decimal, the full-precision companion 17 significant digits."""
    fmt = format17 if full_precision else (lambda v: f"{v:.1f}")
    lines = ["K\\Q," + ",".join(str(q) for q in grid.q_values)]
    for ik, k in enumerate(grid.k_values):
        cells = [_grid_cell(grid.scores[ik, iq], fmt)
                 for iq in range(len(grid.q_values))]
        lines.append(f"{k}," + ",".join(cells))
    return "\n".join(lines) + "\n"


RECOVERY_COLUMNS = ("run_id", "eps", "ari_u", "ari_v", "rmse", "nrmse1",
                    "nrmse2", "objective", "converged", "n_iterations")


def recovery_row(run_id: int, eps: float, report, objective: float,
                 converged: bool, n_iterations: int) -> dict:
    return {
        "run_id": run_id,
        "eps": eps,
        "ari_u": report.ari_u,
        "ari_v": report.ari_v,
        "rmse": report.rmse,
        "nrmse1": report.nrmse1,
        "nrmse2": report.nrmse2,
        "objective": objective,
        "converged": converged,
        "n_iterations": n_iterations,
    }


def csv_text(columns, rows) -> str:
    """Plain CSV from dict rows; floats via :func:`format17`, NaN as NA."""
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for col in columns:
            v = row[col]
            if isinstance(v, bool):
                cells.append("true" if v else "false")
            elif isinstance(v, (float, np.floating)):
                cells.append("NA" if np.isnan(v) else format17(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def contingency_csv_text(table: np.ndarray, row_prefix: str = "a",
                         col_prefix: str = "b") -> str:
    header = "," + ",".join(f"{col_prefix}{j + 1}" for j in range(table.shape[1]))
    lines = [header]
    for i, row in enumerate(table):
        lines.append(f"{row_prefix}{i + 1}," + ",".join(str(int(c)) for c in row))
    return "\n".join(lines) + "\n"

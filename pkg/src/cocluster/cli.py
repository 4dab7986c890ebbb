"""Command line front end.

Subcommands cover the three workflows: text preprocessing (`prep`), fitting
and model selection (`fit`, `select`), and the seeded simulation studies
(`simulate select|recover|starts`) with their evaluation companions
(`eval`, `compare`, `report`).

Every command resolves its parameters, runs, and then writes its outputs
(write-temp-rename) plus a `<out>.manifest.json` describing the run. Reruns
with identical inputs and seed produce byte-identical numeric outputs; the
manifest carries the timestamps. Exit code 0 means every output was
written.
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .clusterers import FitConfig, dkm_fit, sdkm_fit, skm_fit
from .evalmetrics import (ari, contingency, detect_local_maximum,
                          recovery_report, true_partition_objective)
from .fileio import (RECOVERY_COLUMNS, contingency_csv_text, csv_text,
                     dumps_json, format17, grid_csv_text, matrix_csv_text,
                     model_json_dict, read_matrix_csv, read_model_json,
                     read_truth_json, recovery_row, sha256_file,
                     truth_json_dict, write_atomic)
from .modelselect import grid_search
from .synthgen import gen_dataset
from .textpipeline import (PrepConfig, build_dtm, load_lemma_map,
                           load_stopwords, prune, tfidf)
from .util import hash64

_SIM_DEFAULTS = {
    # per-kind planted dimensions; chosen to reproduce the published
    # selection / recovery / random-starts profiles at desk scale
    "select": dict(n_rows=120, n_cols=40, k=4, q=3, eps=0.1, runs=100),
    "recover": dict(n_rows=100, n_cols=30, k=3, q=2, eps=0.1, runs=500),
    "starts": dict(n_rows=200, n_cols=16, k=8, q=2, eps=1.5, runs=100),
}

STARTS_SWEEP_DEFAULT = "1,5,10,20,30,40,50,70,100"


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _parse_range(text: str) -> list[int]:
    try:
        lo, hi = text.split(":")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise ValueError(f"range must look like A:B, got {text!r}") from None
    if hi < lo:
        raise ValueError(f"empty range {text!r}")
    return list(range(lo, hi + 1))


class _Outputs:
    """Collects output files and writes them together, manifest last."""

    def __init__(self, command: str, out_prefix: str, config: dict,
                 seed: int, inputs: list[str]):
        self.prefix = Path(out_prefix)
        self.command = command
        self.config = config
        self.seed = seed
        self.inputs = inputs
        self.started = _utcnow()
        self.files: list[tuple[Path, str]] = []

    def add(self, suffix: str, text: str) -> Path:
        path = self.prefix.with_name(self.prefix.name + suffix)
        self.files.append((path, text))
        return path

    def commit(self) -> list[Path]:
        manifest = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "tool_version": __version__,
            "input_digests": {name: sha256_file(name) for name in self.inputs},
            "started": self.started,
            "finished": _utcnow(),
        }
        written: list[Path] = []
        try:
            for path, text in self.files:
                written.append(write_atomic(path, text))
            written.append(write_atomic(
                self.prefix.with_name(self.prefix.name + ".manifest.json"),
                dumps_json(manifest)))
        except BaseException:
            for path in written:
                path.unlink(missing_ok=True)
            raise
        return written


def _fit_config(args, k: int, q: int, algorithm: str) -> FitConfig:
    return FitConfig(
        n_row_clusters=k,
        n_col_clusters=q,
        n_starts=args.starts,
        max_iter=args.max_iter,
        tol=args.tol,
        seed=args.seed,
        algorithm=algorithm,
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_prep(args) -> int:
    stopwords = load_stopwords(args.stopwords) if args.stopwords else None
    lemma_map = load_lemma_map(args.lemma_map) if args.lemma_map else None
    config = PrepConfig(
        stopwords=stopwords if stopwords is not None else PrepConfig.stopwords,
        lemma_map=lemma_map,
        stem=not args.no_stem,
    )
    dtm = build_dtm(args.input, config)
    pruned = prune(dtm, args.min_freq)
    weighted = tfidf(pruned)
    stats = pruned.stats
    stats.sparsity_after_weighting = float((weighted == 0.0).mean())

    inputs = [p for p in (args.stopwords, args.lemma_map) if p]
    out = _Outputs("prep", args.out, {
        "input": str(args.input), "min_freq": args.min_freq,
        "stopwords": args.stopwords, "lemma_map": args.lemma_map,
        "stem": not args.no_stem,
    }, seed=0, inputs=inputs)
    out.add(".matrix.csv", matrix_csv_text(weighted, pruned.vocabulary, pruned.doc_ids))
    out.add(".vocab.txt", "\n".join(pruned.vocabulary) + "\n")
    out.add(".stats.json", dumps_json({
        "n_documents": stats.n_documents,
        "n_tokens": stats.n_tokens,
        "n_types": stats.n_types,
        "n_hapaxes": stats.n_hapaxes,
        "type_token_ratio": stats.type_token_ratio,
        "hapax_share": stats.hapax_share,
        "sparsity_after_weighting": stats.sparsity_after_weighting,
        "n_terms_after_pruning": len(pruned.vocabulary),
        "empty_documents": stats.empty_documents,
        "skipped_files": stats.skipped_files,
    }))
    out.commit()
    print(f"prep: {stats.n_documents} documents, {len(pruned.vocabulary)} terms "
          f"after pruning, sparsity {stats.sparsity_after_weighting:.4f}")
    return 0


def cmd_fit(args) -> int:
    x, _, _ = read_matrix_csv(args.input)
    if args.algorithm == "skm":
        config = _fit_config(args, args.k, x.shape[1], "skm")
        model = skm_fit(x, args.k, config)
    else:
        if args.q is None:
            raise ValueError("--q is required for dkm/sdkm")
        config = _fit_config(args, args.k, args.q, args.algorithm)
        model = sdkm_fit(x, config) if args.algorithm == "sdkm" else dkm_fit(x, config)

    out = _Outputs("fit", args.out, {
        "input": str(args.input), "algorithm": args.algorithm, "k": args.k,
        "q": args.q, "starts": args.starts, "tol": args.tol,
        "max_iter": args.max_iter, "seed": args.seed,
    }, seed=args.seed, inputs=[args.input])
    out.add(".model.json", dumps_json(model_json_dict(model)))
    out.commit()
    print(f"fit: {args.algorithm} objective_normalized="
          f"{format17(model.objective_normalized)} converged={model.converged}")
    return 0


def cmd_select(args) -> int:
    x, _, _ = read_matrix_csv(args.input)
    k_values = _parse_range(args.k_range)
    q_values = _parse_range(args.q_range)
    config = _fit_config(args, k_values[0], q_values[0], "sdkm")
    grid = grid_search(x, k_values, q_values, config)

    out = _Outputs("select", args.out, {
        "input": str(args.input), "k_range": args.k_range,
        "q_range": args.q_range, "starts": args.starts, "tol": args.tol,
        "max_iter": args.max_iter, "seed": args.seed,
    }, seed=args.seed, inputs=[args.input])
    out.add(".grid.csv", grid_csv_text(grid, full_precision=False))
    out.add(".grid_full.csv", grid_csv_text(grid, full_precision=True))
    out.commit()
    print(f"select: best K={grid.best_k} Q={grid.best_q}")
    return 0


def cmd_eval(args) -> int:
    model = read_model_json(args.model)
    truth = read_truth_json(args.truth)
    if model.row_labels.size != truth["row_labels"].size:
        raise ValueError("row count mismatch between model and truth")
    if model.col_labels.size != truth["col_labels"].size:
        raise ValueError("column count mismatch between model and truth")
    report = recovery_report(truth["row_labels"], truth["col_labels"],
                             truth["centroids"], model.row_labels,
                             model.col_labels, model.centroids)
    row = recovery_row(0, truth["eps_centroid"], report,
                       model.objective_normalized, model.converged,
                       model.n_iterations)
    row["alignment_u"] = "|".join(str(int(p) + 1) for p in report.alignment_u)
    row["alignment_v"] = "|".join(str(int(p) + 1) for p in report.alignment_v)

    out = _Outputs("eval", args.out, {
        "model": str(args.model), "truth": str(args.truth),
    }, seed=0, inputs=[args.model, args.truth])
    out.add(".recovery.csv",
            csv_text(RECOVERY_COLUMNS + ("alignment_u", "alignment_v"), [row]))
    out.commit()
    print(f"eval: ari_u={format17(report.ari_u)} ari_v={format17(report.ari_v)} "
          f"rmse={format17(report.rmse)}")
    return 0


def cmd_compare(args) -> int:
    model_a = read_model_json(args.model_a)
    model_b = read_model_json(args.model_b)
    if args.axis == "rows":
        labels_a, labels_b = model_a.row_labels, model_b.row_labels
    else:
        labels_a, labels_b = model_a.col_labels, model_b.col_labels
    if labels_a.size != labels_b.size:
        raise ValueError(f"object count mismatch on axis {args.axis}: "
                         f"{labels_a.size} vs {labels_b.size}")
    table = contingency(labels_a, labels_b)
    score = ari(labels_a, labels_b)

    out = _Outputs("compare", args.out, {
        "model_a": str(args.model_a), "model_b": str(args.model_b),
        "axis": args.axis,
    }, seed=0, inputs=[args.model_a, args.model_b])
    out.add(".contingency.csv", contingency_csv_text(table))
    out.add(".summary.csv", csv_text(
        ("axis", "n_objects", "ari"),
        [{"axis": args.axis, "n_objects": int(labels_a.size), "ari": score}]))
    out.commit()
    print(f"compare: axis={args.axis} ari={format17(score)}")
    return 0


def cmd_report(args) -> int:
    model = read_model_json(args.model)
    x, row_ids, _ = read_matrix_csv(args.input)
    vocab = [w for w in Path(args.vocab).read_text(encoding="utf-8").splitlines() if w]
    if len(vocab) != x.shape[0]:
        raise ValueError(f"vocabulary length {len(vocab)} does not match "
                         f"matrix rows {x.shape[0]}")
    if model.row_labels.size != x.shape[0]:
        raise ValueError("model row labels do not match matrix rows")

    weights = x.sum(axis=1)
    top_rows = []
    for cluster in range(model.n_row_clusters):
        members = np.flatnonzero(model.row_labels == cluster)
        order = members[np.argsort(-weights[members], kind="stable")]
        for rank, idx in enumerate(order[: args.top], start=1):
            top_rows.append({
                "cluster": cluster + 1,
                "rank": rank,
                "term": vocab[idx],
                "weight": float(weights[idx]),
            })
    size_rows = []
    for cluster in range(model.n_row_clusters):
        size_rows.append({"axis": "rows", "cluster": cluster + 1,
                          "size": int((model.row_labels == cluster).sum())})
    for cluster in range(model.n_col_clusters):
        size_rows.append({"axis": "cols", "cluster": cluster + 1,
                          "size": int((model.col_labels == cluster).sum())})

    out = _Outputs("report", args.out, {
        "model": str(args.model), "input": str(args.input),
        "vocab": str(args.vocab), "top": args.top,
    }, seed=0, inputs=[args.model, args.input, args.vocab])
    out.add(".top_terms.csv", csv_text(("cluster", "rank", "term", "weight"), top_rows))
    out.add(".cluster_sizes.csv", csv_text(("axis", "cluster", "size"), size_rows))
    out.commit()
    print(f"report: {model.n_row_clusters} row clusters, top {args.top} terms each")
    return 0


# ---------------------------------------------------------------------------
# simulation studies
# ---------------------------------------------------------------------------

def _sim_params(args) -> tuple[int, int, int, int, float, float, int]:
    d = _SIM_DEFAULTS[args.kind]
    n = args.n_rows if args.n_rows is not None else d["n_rows"]
    j = args.n_cols if args.n_cols is not None else d["n_cols"]
    k = args.k if args.k is not None else d["k"]
    q = args.q if args.q is not None else d["q"]
    eps = args.eps if args.eps is not None else d["eps"]
    eps_c = args.eps_centroid if args.eps_centroid is not None else eps
    eps_k = args.eps_cluster if args.eps_cluster is not None else eps
    runs = args.runs if args.runs is not None else d["runs"]
    return n, j, k, q, eps_c, eps_k, runs


def _simulate_recover(args, out: _Outputs) -> str:
    n, j, k, q, eps_c, eps_k, runs = _sim_params(args)
    rows = []
    for run in range(runs):
        ds = gen_dataset(n, j, k, q, eps_c, eps_k, hash64(args.seed, run, 0))
        config = FitConfig(k, q, n_starts=args.starts, max_iter=args.max_iter,
                           tol=args.tol, seed=hash64(args.seed, run, 1))
        model = sdkm_fit(ds.x, config)
        report = recovery_report(ds.true_u, ds.true_v, ds.true_y,
                                 model.row_labels, model.col_labels,
                                 model.centroids)
        rows.append(recovery_row(run, eps_c, report, model.objective_normalized,
                                 model.converged, model.n_iterations))
    out.add(".runs.csv", csv_text(RECOVERY_COLUMNS, rows))
    summary = []
    for metric in ("ari_u", "ari_v", "rmse", "nrmse1", "nrmse2"):
        values = np.array([r[metric] for r in rows], dtype=np.float64)
        summary.append({"metric": metric, "eps": eps_c,
                        "mean": float(np.mean(values)),
                        "median": float(np.median(values))})
    out.add(".summary.csv", csv_text(("metric", "eps", "mean", "median"), summary))
    mean_ari = float(np.mean([r["ari_u"] for r in rows]))
    return f"recover: {runs} runs at eps={eps_c:g}, mean ARI(U)={mean_ari:.3f}"


def _simulate_select(args, out: _Outputs) -> str:
    n, j, k, q, eps_c, eps_k, runs = _sim_params(args)
    k_values = _parse_range(args.k_range)
    q_values = _parse_range(args.q_range)
    rows = []
    counts: dict[tuple[int, int], int] = {}
    for run in range(runs):
        ds = gen_dataset(n, j, k, q, eps_c, eps_k, hash64(args.seed, run, 0))
        config = FitConfig(k_values[0], q_values[0], n_starts=args.starts,
                           max_iter=args.max_iter, tol=args.tol,
                           seed=hash64(args.seed, run, 1))
        grid = grid_search(ds.x, k_values, q_values, config)
        rows.append({"run_id": run, "eps": eps_c,
                     "best_k": grid.best_k, "best_q": grid.best_q})
        counts[(grid.best_k, grid.best_q)] = counts.get((grid.best_k, grid.best_q), 0) + 1
    out.add(".runs.csv", csv_text(("run_id", "eps", "best_k", "best_q"), rows))
    summary = [{"K": kk, "Q": qq, "count": counts.get((kk, qq), 0)}
               for kk in k_values for qq in q_values]
    out.add(".summary.csv", csv_text(("K", "Q", "count"), summary))
    modal = max(counts.items(), key=lambda item: item[1])
    return (f"select: {runs} runs at eps={eps_c:g}; modal cell "
            f"K={modal[0][0]} Q={modal[0][1]} ({modal[1]} runs)")


def _simulate_starts(args, out: _Outputs) -> str:
    n, j, k, q, eps_c, eps_k, runs = _sim_params(args)
    starts_list = [int(s) for s in args.starts_list.split(",") if s]
    if not starts_list or min(starts_list) < 1:
        raise ValueError(f"bad starts list {args.starts_list!r}")
    rows = []
    trapped: dict[int, int] = {ns: 0 for ns in starts_list}
    for run in range(runs):
        ds = gen_dataset(n, j, k, q, eps_c, eps_k, hash64(args.seed, run, 0))
        f_true = true_partition_objective(ds.x, ds.true_u, ds.true_v)
        fit_seed = hash64(args.seed, run, 1)
        for ns in starts_list:
            config = FitConfig(k, q, n_starts=ns, max_iter=args.max_iter,
                               tol=args.tol, seed=fit_seed)
            model = sdkm_fit(ds.x, config)
            is_trapped = detect_local_maximum(model.objective_normalized, f_true)
            trapped[ns] += is_trapped
            rows.append({"run_id": run, "n_starts": ns,
                         "objective": model.objective_normalized,
                         "true_objective": f_true, "trapped": is_trapped})
    out.add(".runs.csv", csv_text(
        ("run_id", "n_starts", "objective", "true_objective", "trapped"), rows))
    summary = [{"n_starts": ns, "runs": runs, "trapped": trapped[ns],
                "local_maxima_pct": 100.0 * trapped[ns] / runs}
               for ns in starts_list]
    out.add(".summary.csv", csv_text(
        ("n_starts", "runs", "trapped", "local_maxima_pct"), summary))
    shares = ", ".join(f"{ns}:{100.0 * trapped[ns] / runs:.0f}%" for ns in starts_list)
    return f"starts: {runs} runs at eps={eps_c:g}; local maxima {shares}"


def cmd_simulate(args) -> int:
    n, j, k, q, eps_c, eps_k, runs = _sim_params(args)
    out = _Outputs(f"simulate-{args.kind}", args.out, {
        "kind": args.kind, "n_rows": n, "n_cols": j, "k": k, "q": q,
        "eps_centroid": eps_c, "eps_cluster": eps_k, "runs": runs,
        "starts": args.starts, "tol": args.tol, "max_iter": args.max_iter,
        "seed": args.seed,
        "k_range": args.k_range, "q_range": args.q_range,
        "starts_list": args.starts_list,
    }, seed=args.seed, inputs=[])
    if args.kind == "recover":
        message = _simulate_recover(args, out)
    elif args.kind == "select":
        message = _simulate_select(args, out)
    else:
        message = _simulate_starts(args, out)
    out.commit()
    print(message)
    return 0


def cmd_generate(args) -> int:
    """Write one planted dataset bundle (matrix CSV + truth JSON)."""
    eps_c = args.eps_centroid if args.eps_centroid is not None else args.eps
    eps_k = args.eps_cluster if args.eps_cluster is not None else args.eps
    ds = gen_dataset(args.n_rows, args.n_cols, args.k, args.q, eps_c, eps_k,
                     args.seed)
    out = _Outputs("generate", args.out, {
        "n_rows": args.n_rows, "n_cols": args.n_cols, "k": args.k,
        "q": args.q, "eps_centroid": eps_c, "eps_cluster": eps_k,
        "seed": args.seed,
    }, seed=args.seed, inputs=[])
    row_ids = [f"r{i + 1}" for i in range(ds.x.shape[0])]
    col_ids = [f"c{j + 1}" for j in range(ds.x.shape[1])]
    out.add(".matrix.csv", matrix_csv_text(ds.x, row_ids, col_ids))
    out.add(".truth.json", dumps_json(truth_json_dict(ds)))
    out.commit()
    print(f"generate: wrote {args.out}.matrix.csv and {args.out}.truth.json")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_fit_flags(p, starts_default: int = 20):
    p.add_argument("--starts", type=int, default=starts_default,
                   help="random starts per fit")
    p.add_argument("--tol", type=float, default=1e-9,
                   help="relative objective improvement for convergence")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cocluster",
        description="Co-clustering under cosine similarity: spherical double "
                    "k-means, baselines, model selection and simulations.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", help="corpus directory -> TF-IDF matrix CSV")
    p.add_argument("--input", required=True, help="directory of .txt files")
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--min-freq", type=int, default=11,
                   help="drop terms with corpus frequency <= this")
    p.add_argument("--stopwords", help="stopword file, one term per line")
    p.add_argument("--lemma-map", help="TAB-separated term->lemma file")
    p.add_argument("--no-stem", action="store_true",
                   help="disable the built-in suffix stripper")
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("fit", help="fit one model to a matrix CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--algorithm", choices=("skm", "dkm", "sdkm"), default="sdkm")
    p.add_argument("--k", type=int, required=True, help="row clusters")
    p.add_argument("--q", type=int, help="column clusters (dkm/sdkm)")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="pseudo-F grid search over (K, Q)")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k-range", default="2:10", help="inclusive range A:B")
    p.add_argument("--q-range", default="2:10", help="inclusive range A:B")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate",
                       help="seeded Monte-Carlo studies on planted data")
    p.add_argument("kind", choices=("select", "recover", "starts"))
    p.add_argument("--out", required=True)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--eps", type=float, default=None,
                   help="sets both error levels")
    p.add_argument("--eps-centroid", type=float, default=None)
    p.add_argument("--eps-cluster", type=float, default=None)
    p.add_argument("--n-rows", type=int, default=None)
    p.add_argument("--n-cols", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="planted row clusters")
    p.add_argument("--q", type=int, default=None, help="planted column clusters")
    p.add_argument("--k-range", default="2:5")
    p.add_argument("--q-range", default="2:5")
    p.add_argument("--starts-list", default=STARTS_SWEEP_DEFAULT,
                   help="random-start counts swept by kind=starts")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("generate", help="write one planted dataset bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--n-rows", type=int, required=True)
    p.add_argument("--n-cols", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--eps-centroid", type=float, default=None)
    p.add_argument("--eps-cluster", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="score a fitted model against a truth JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="contingency table and ARI of two models")
    p.add_argument("--model-a", required=True)
    p.add_argument("--model-b", required=True)
    p.add_argument("--axis", choices=("rows", "cols"), default="rows")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="top terms per row cluster")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="matrix CSV the model was fit on")
    p.add_argument("--vocab", required=True, help="one term per matrix row")
    p.add_argument("--top", type=int, default=30)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line pipeline: preprocess, optimize, evaluate, compare, report.

Exit codes are a stable scripting contract: 0 success, 1 partial or data
failure, 2 usage or validation failure. Every command writes a run_meta
file recording its effective parameters and seed; none of the outputs
embed timestamps, so fixed-seed runs are byte-reproducible.
"""

from __future__ import annotations

import argparse
import html
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, dataio, ensemble, imaging, metrics, plots
from .core import (
    Bounds,
    InvalidConfig,
    SsaConfig,
    ValidationError,
    class_names,
    make_labels,
    make_weights,
)

log = logging.getLogger("salp_ensemble")

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def _configure_logging() -> None:
    level = os.environ.get("SALP_ENSEMBLE_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _write_run_meta(output_dir: Path, command: str, params: dict) -> None:
    # one meta file per command, so commands sharing a run dir never clobber
    # each other's provenance
    with open(output_dir / f"run_meta_{command}.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"command={command}\n")
        fh.write(f"version={__version__}\n")
        for key in sorted(params):
            fh.write(f"{key}={params[key]}\n")


def _parse_tiles(raw: str) -> tuple[int, int]:
    try:
        ty, tx = (int(p) for p in raw.lower().split("x"))
        return ty, tx
    except ValueError:
        raise InvalidConfig(f"--clahe-tiles expects ROWSxCOLS, got {raw!r}") from None


def _parse_bounds(raw: str, dimensions: int) -> Bounds:
    try:
        lo, hi = (float(p) for p in raw.split(","))
    except ValueError:
        raise InvalidConfig(f"--bounds expects LOW,HIGH, got {raw!r}") from None
    return Bounds(np.full(dimensions, lo), np.full(dimensions, hi))


def _fusion_config(args) -> imaging.FusionConfig:
    return imaging.FusionConfig(
        levels=args.wavelet_levels,
        clahe_clip=args.clahe_clip,
        clahe_tiles=_parse_tiles(args.clahe_tiles),
        gamma=args.gamma,
        parallel_branches=args.parallel_branches,
    )


def _load_aligned(pred_paths, labels_path):
    labels = dataio.load_labels(labels_path)
    tables = [dataio.load_predictions(p) for p in pred_paths]
    matrices = dataio.align_to_labels(labels, tables, [str(p) for p in pred_paths])
    return labels, matrices


def _model_names(args, pred_paths) -> list[str]:
    if args.names:
        if len(args.names) != len(pred_paths):
            raise InvalidConfig(f"{len(args.names)} names for {len(pred_paths)} prediction files")
        return list(args.names)
    return [Path(p).stem for p in pred_paths]


# ---------------------------------------------------------------------------
# preprocess


def cmd_preprocess(args) -> int:
    input_dir = Path(args.input_dir)
    output_dir = Path(args.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    cfg = _fusion_config(args)

    paths = sorted(p for p in input_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        print(f"no images found in {input_dir}", file=sys.stderr)
        return EXIT_PARTIAL

    failures: list[tuple[Path, str]] = []
    for path in paths:
        try:
            img = imaging.read_image(path)
            fused = imaging.full_pipeline(img, cfg)
            normalized = imaging.resize_normalize(fused, side=args.resize)
            out = imaging.Image(imaging.to_u8(normalized.data * 255.0))
            imaging.write_png(out, output_dir / (path.stem + ".png"))
            log.info("processed %s", path.name)
        except Exception as exc:  # keep going; report the full failure list
            failures.append((path, str(exc)))

    _write_run_meta(
        output_dir,
        "preprocess",
        {
            "input_dir": input_dir,
            "resize": args.resize,
            "gamma": cfg.gamma,
            "clahe_clip": cfg.clahe_clip,
            "clahe_tiles": f"{cfg.clahe_tiles[0]}x{cfg.clahe_tiles[1]}",
            "wavelet_levels": cfg.levels,
            "parallel_branches": cfg.parallel_branches,
            "seed": args.seed,
        },
    )
    if failures:
        for path, message in failures:
            print(f"failed: {path}: {message}", file=sys.stderr)
        print(f"{len(paths) - len(failures)}/{len(paths)} images processed", file=sys.stderr)
        return EXIT_PARTIAL
    print(f"{len(paths)} images written to {output_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# optimize


def _holdout_indices(truth: np.ndarray, fraction: float, seed: int) -> np.ndarray:
    """Stratified holdout mask: True = held out for honest accuracy."""
    rng = np.random.Generator(np.random.PCG64(seed))
    mask = np.zeros(truth.shape[0], dtype=bool)
    for label in np.unique(truth):
        idx = np.nonzero(truth == label)[0]
        n_hold = max(1, round(idx.size * fraction)) if idx.size > 1 else 0
        chosen = rng.permutation(idx.size)[:n_hold]
        mask[idx[chosen]] = True
    return mask


def cmd_optimize(args) -> int:
    output_dir = Path(args.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    if len(args.predictions) < 2:
        raise InvalidConfig("optimize needs at least 2 prediction files")
    labels, matrices = _load_aligned(args.predictions, args.labels)
    names = _model_names(args, args.predictions)
    n = len(matrices)

    truth = labels.labels.labels
    holdout = None
    if args.holdout_fraction > 0.0:
        holdout = _holdout_indices(truth, args.holdout_fraction, args.seed)
        fit_matrices = [
            dataio.PredictionMatrix(np.ascontiguousarray(m.data[~holdout])) for m in matrices
        ]
        fit_problem = ensemble.EnsembleProblem(
            tuple(fit_matrices), make_labels(truth[~holdout]), tuple(names)
        )
    else:
        fit_problem = ensemble.EnsembleProblem(tuple(matrices), labels.labels, tuple(names))

    config = SsaConfig(
        num_salps=args.salps,
        max_iterations=args.iterations,
        dimensions=n,
        bounds=_parse_bounds(args.bounds, n),
        seed=args.seed,
    )
    weights, accuracy, result = ensemble.optimize_ensemble(fit_problem, config)

    full_problem = ensemble.EnsembleProblem(tuple(matrices), labels.labels, tuple(names))
    objective = ensemble.accuracy_objective(full_problem)
    single_accuracies = [objective(seed_w) for seed_w in np.eye(n)]

    dataio.save_weights(weights, names, output_dir / "weights.csv")
    dataio.save_report(result, output_dir / "history.csv")
    with open(output_dir / "optimization.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("report_type=optimization_summary\n")
        fh.write("models=" + ",".join(names) + "\n")
        fh.write(f"accuracy={accuracy:.6f}\n")
        fh.write(f"accuracy_exact={accuracy!r}\n")
        for name, acc in zip(names, single_accuracies):
            fh.write(f"single_model_accuracy_{name}={acc!r}\n")
        if holdout is not None:
            hold_problem = ensemble.EnsembleProblem(
                tuple(dataio.PredictionMatrix(np.ascontiguousarray(m.data[holdout])) for m in matrices),
                make_labels(truth[holdout]),
                tuple(names),
            )
            hold_acc = ensemble.accuracy_objective(hold_problem)(weights.w)
            fh.write(f"holdout_fraction={args.holdout_fraction}\n")
            fh.write(f"holdout_accuracy={hold_acc!r}\n")
        fh.write(f"evaluations={result.evaluations}\n")

    _write_run_meta(
        output_dir,
        "optimize",
        {
            "predictions": ";".join(str(p) for p in args.predictions),
            "labels": args.labels,
            "models": ",".join(names),
            "salps": args.salps,
            "iterations": args.iterations,
            "bounds": args.bounds,
            "holdout_fraction": args.holdout_fraction,
            "seed": args.seed,
        },
    )
    print(f"accuracy={accuracy:.6f}")
    print(f"weights={' '.join(f'{w:.6f}' for w in weights.w)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate


def cmd_evaluate(args) -> int:
    output_dir = Path(args.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    labels, matrices = _load_aligned(args.predictions, args.labels)
    names = _model_names(args, args.predictions)
    weight_names, weights = dataio.load_weights(args.weights)
    if len(weights) != len(matrices):
        raise InvalidConfig(f"{len(weights)} weights for {len(matrices)} prediction files")

    problem = ensemble.EnsembleProblem(tuple(matrices), labels.labels, tuple(names))
    aggregated = ensemble.weighted_aggregate(problem, weights.w)
    predicted = ensemble.aggregate_labels(aggregated)
    truth = labels.labels
    k = problem.n_classes
    names_k = class_names(k)

    cm = metrics.confusion_matrix(truth, predicted, k)
    report = metrics.class_report(cm, names_k)
    roc = metrics.roc_curve_micro(truth, aggregated)
    pr = metrics.pr_curve_micro(truth, aggregated)

    dataio.save_report(report, output_dir / "report.txt")
    dataio.save_confusion_matrix(cm.counts, names_k, output_dir / "confusion_matrix.csv")
    dataio.save_report(roc, output_dir / "roc.csv")
    dataio.save_report(pr, output_dir / "pr.csv")
    plots.save_roc_svg(roc, output_dir / "roc.svg")
    plots.save_pr_svg(pr, output_dir / "pr.svg")

    # aggregated scores renormalized to probability rows, usable by `compare`
    total = float(weights.w.sum())
    if total > 0.0:
        table = dataio.PredictionTable(
            labels.sample_ids, dataio.validate_prediction_matrix(aggregated / total)
        )
        dataio.save_predictions(table, output_dir / "ensemble_predictions.csv")

    _write_run_meta(
        output_dir,
        "evaluate",
        {
            "predictions": ";".join(str(p) for p in args.predictions),
            "labels": args.labels,
            "weights_file": args.weights,
            "weights": " ".join(repr(float(w)) for w in weights.w),
            "models": ",".join(names),
            "seed": args.seed,
        },
    )
    print(f"accuracy={report.accuracy:.6f}")
    print(f"auc={roc.summary:.6f}")
    print(f"ap={pr.summary:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare


def cmd_compare(args) -> int:
    output_dir = Path(args.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    labels = dataio.load_labels(args.labels)
    table_a = dataio.load_predictions(args.predictions_a)
    table_b = dataio.load_predictions(args.predictions_b)
    matrix_a, matrix_b = dataio.align_to_labels(
        labels, [table_a, table_b], [str(args.predictions_a), str(args.predictions_b)]
    )
    pred_a = ensemble.aggregate_labels(matrix_a.data)
    pred_b = ensemble.aggregate_labels(matrix_b.data)

    result = metrics.mcnemar(labels.labels, pred_a, pred_b)
    dataio.save_report(result, output_dir / "mcnemar.txt")
    _write_run_meta(
        output_dir,
        "compare",
        {
            "predictions_a": args.predictions_a,
            "predictions_b": args.predictions_b,
            "labels": args.labels,
            "seed": args.seed,
        },
    )
    verdict = "significant" if result.p_value < 0.05 else "not significant"
    print(f"b={result.discordant_b} c={result.discordant_c} method={result.method}")
    print(f"statistic={result.statistic:.6f}")
    print(f"p_value={result.p_value:.6f}")
    print(f"verdict: {verdict} at alpha=0.05")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


_REQUIRED_ARTIFACTS = ("report.txt", "confusion_matrix.csv", "roc.csv", "pr.csv")


def _table_html(headers, rows) -> str:
    head = "".join(f"<th>{html.escape(str(h))}</th>" for h in headers)
    body = "".join(
        "<tr>" + "".join(f"<td>{html.escape(str(c))}</td>" for c in row) + "</tr>" for row in rows
    )
    return f"<table><thead><tr>{head}</tr></thead><tbody>{body}</tbody></table>"


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    missing = [name for name in _REQUIRED_ARTIFACTS if not (run_dir / name).exists()]
    if missing:
        print(f"missing artifacts in {run_dir}: {', '.join(missing)}", file=sys.stderr)
        return EXIT_USAGE

    report = dataio.load_class_report(run_dir / "report.txt")
    cm_names, cm = dataio.load_confusion_matrix(run_dir / "confusion_matrix.csv")
    roc = dataio.load_curve(run_dir / "roc.csv")
    pr = dataio.load_curve(run_dir / "pr.csv")

    plots.save_roc_svg(roc, run_dir / "roc.svg")
    plots.save_pr_svg(pr, run_dir / "pr.svg")

    sections = ["<h1>Ensemble evaluation report</h1>"]
    sections.append(f"<p>Accuracy: <b>{report.accuracy:.6f}</b> &mdash; "
                    f"AUC: {roc.summary:.6f} &mdash; AP: {pr.summary:.6f}</p>")

    sections.append("<h2>Per-class metrics (macro averages in the last row)</h2>")
    rows = [
        (c.name, f"{c.precision:.4f}", f"{c.recall:.4f}", f"{c.f1:.4f}", c.support)
        for c in report.per_class
    ]
    rows.append(
        ("macro", f"{report.macro_precision:.4f}", f"{report.macro_recall:.4f}",
         f"{report.macro_f1:.4f}", sum(c.support for c in report.per_class))
    )
    sections.append(_table_html(("class", "precision", "recall", "f1", "support"), rows))

    sections.append("<h2>Confusion matrix (rows = true, columns = predicted)</h2>")
    sections.append(
        _table_html(("true\\predicted", *cm_names),
                    [(name, *row) for name, row in zip(cm_names, cm.tolist())])
    )

    weights_path = run_dir / "weights.csv"
    if weights_path.exists():
        names, weights = dataio.load_weights(weights_path)
        normalized = weights.normalized()
        sections.append("<h2>Ensemble weights</h2>")
        sections.append(
            _table_html(("model", "weight", "normalized"),
                        [(n, f"{w:.6f}", f"{s:.6f}") for n, w, s in zip(names, weights.w, normalized)])
        )

    mcnemar_path = run_dir / "mcnemar.txt"
    if mcnemar_path.exists():
        mc = dataio.load_mcnemar(mcnemar_path)
        verdict = "significant" if mc.p_value < 0.05 else "not significant"
        sections.append("<h2>McNemar's test</h2>")
        sections.append(
            _table_html(("b", "c", "statistic", "p-value", "method", "verdict at alpha=0.05"),
                        [(mc.discordant_b, mc.discordant_c, f"{mc.statistic:.6f}",
                          f"{mc.p_value:.6f}", mc.method, verdict)])
        )

    svg_sections = [("ROC curve", run_dir / "roc.svg"), ("Precision-Recall curve", run_dir / "pr.svg")]
    history_path = run_dir / "history.csv"
    if history_path.exists():
        history = dataio.load_history(history_path)
        plots.save_convergence_svg(history.history, run_dir / "convergence.svg")
        svg_sections.append(("Convergence", run_dir / "convergence.svg"))

    for title, svg_path in svg_sections:
        sections.append(f"<h2>{html.escape(title)}</h2>")
        sections.append(svg_path.read_text(encoding="utf-8"))

    out_path = Path(args.output) if args.output else run_dir / "report.html"
    body = "\n".join(sections)
    page = (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
        "<title>salp-ensemble report</title>"
        "<style>body{font-family:sans-serif;max-width:60em;margin:2em auto;}"
        "table{border-collapse:collapse;}td,th{border:1px solid #999;padding:0.3em 0.7em;}"
        "</style></head><body>\n" + body + "\n</body></html>\n"
    )
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(page)
    print(f"report written to {out_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="salp-ensemble",
        description="Swarm-optimized classifier-ensemble weights, image fusion "
        "preprocessing, and evaluation metrics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
        p.add_argument("--output-dir", required=True, help="directory for run outputs")

    p = sub.add_parser("preprocess", help="CLAHE + gamma + wavelet fusion, resize, normalize")
    add_common(p)
    p.add_argument("--input-dir", required=True)
    p.add_argument("--resize", type=int, default=224, help="output side length (default 224)")
    p.add_argument("--gamma", type=float, default=0.8)
    p.add_argument("--clahe-clip", type=float, default=2.0)
    p.add_argument("--clahe-tiles", default="8x8", help="tile grid ROWSxCOLS (default 8x8)")
    p.add_argument("--wavelet-levels", type=int, default=1)
    p.add_argument("--parallel-branches", action="store_true",
                   help="fuse clahe(img) with gamma(img) instead of gamma(clahe(img))")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("optimize", help="search ensemble weights with the salp swarm")
    add_common(p)
    p.add_argument("--predictions", nargs="+", required=True, help="N prediction CSVs")
    p.add_argument("--labels", required=True)
    p.add_argument("--names", nargs="*", default=None, help="model display names")
    p.add_argument("--salps", type=int, default=100)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--bounds", default="0,1", help="weight bounds LOW,HIGH (default 0,1)")
    p.add_argument("--holdout-fraction", type=float, default=0.0,
                   help="stratified fraction held out of the fitness set (default 0: "
                   "optimize on the full set)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evaluate", help="score fixed weights: report, curves, plots")
    add_common(p)
    p.add_argument("--predictions", nargs="+", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--weights", required=True, help="weights CSV from `optimize`")
    p.add_argument("--names", nargs="*", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="McNemar's paired test between two models")
    add_common(p)
    p.add_argument("--predictions-a", required=True)
    p.add_argument("--predictions-b", required=True)
    p.add_argument("--labels", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="render a self-contained HTML summary of a run dir")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--output", default=None, help="output HTML path (default RUN_DIR/report.html)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, dataio.ParseError, dataio.UnknownSampleId,
            dataio.DuplicateSampleId, dataio.EmptyDataset) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

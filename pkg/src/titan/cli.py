"""Command-line interface.

Subcommands cover the full experiment loop: generate synthetic data,
assemble datasets from raw road/incident/speed files, train the grouped
multi-task model or a baseline, predict, evaluate models side by side,
sweep the group count, and dump group-assignment reports.

Exit codes: 0 success, 2 input/config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import baselines, evaluation, features, roadnet, solver, storage, synth
from .errors import InputError, NumericalAbort

log = logging.getLogger("titan")

EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL = 3


def _load_hyperparams(args):
    hp = storage.read_hyperparams(args.config) if args.config else solver.Hyperparams()
    if getattr(args, "seed", None) is not None:
        hp = dataclasses.replace(hp, seed=args.seed)
    if getattr(args, "no_orth", False):
        hp = dataclasses.replace(hp, orthogonality=False)
    return hp


def cmd_synth(args):
    config = storage.read_synth_config(args.config) if args.config else synth.SynthConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    train, test, truth = synth.generate(config)
    storage.write_dataset(args.out, train, test, truth)
    log.info(
        "wrote dataset: %d tasks, p=%d, %d train / %d test rows per task",
        train.n_tasks, train.p, train.tasks[0].n, test.tasks[0].n,
    )
    return 0


def cmd_train(args):
    train, _ = storage.read_dataset(args.dataset)
    hp = _load_hyperparams(args)
    started = time.perf_counter()
    model = solver.fit(train, hp)
    elapsed = time.perf_counter() - started
    storage.write_model(args.out, model)
    print(
        f"iterations={model.iterations} converged={model.converged} "
        f"primal_residual={model.final_residuals[0]:.3e} "
        f"dual_residual={model.final_residuals[1]:.3e} "
        f"orth_gap={model.orth_gap:.3e} wall_time_s={elapsed:.2f}"
    )
    return 0


def cmd_train_baseline(args):
    train, test = storage.read_dataset(args.dataset)
    grid = [args.lam] if args.lam is not None else list(baselines.default_grid(args.kind))
    best = None
    for lam in grid:
        model = baselines.fit_baseline(args.kind, train, lam)
        score = evaluation.pooled_rmse(model, test)
        log.info("%s lambda=%g pooled test rmse=%.4f", args.kind, lam, score)
        if best is None or score < best[0]:
            best = (score, model)
    storage.write_model(args.out, best[1])
    print(f"kind={args.kind} lambda={best[1].lam:g} pooled_test_rmse={best[0]:.4f}")
    return 0


def cmd_predict(args):
    model = storage.read_model(args.model)
    X = storage.read_matrix_csv(args.x)
    started = time.perf_counter()
    if isinstance(model, solver.TrainedModel):
        yhat = solver.predict(model, X, args.task)
    else:
        yhat = baselines.baseline_predict(model, X, args.task)
    elapsed = time.perf_counter() - started
    storage.write_matrix_csv(args.out, np.asarray(yhat)[:, None])
    log.info("predicted %d rows, mean latency %.4f ms/row", len(yhat), 1000.0 * elapsed / len(yhat))
    return 0


def cmd_evaluate(args):
    _, test = storage.read_dataset(args.dataset)
    reports = []
    label_counts = {}
    for path in args.model:
        model = storage.read_model(path)
        rep = evaluation.evaluate(model, test)
        n = label_counts.get(rep.method, 0) + 1
        label_counts[rep.method] = n
        if n > 1:  # disambiguate repeated kinds deterministically
            rep = dataclasses.replace(rep, method=f"{rep.method}#{n}")
        reports.append(rep)
        overall = rep.overall
        print(
            f"{rep.method}: pooled rmse={overall.rmse:.4f} mae={overall.mae:.4f} "
            f"mape={overall.mape_percent:.4f}%"
        )
    Path(args.out).write_text(evaluation.emit_report_csv(reports), encoding="utf-8")
    return 0


def cmd_sweep_k(args):
    train, test = storage.read_dataset(args.dataset)
    hp = _load_hyperparams(args)
    try:
        k_values = [int(v) for v in args.k.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"--k must be a comma-separated integer list, got {args.k!r}") from None
    reports = evaluation.sweep_group_count(train, test, hp, k_values)
    Path(args.out).write_text(evaluation.emit_report_csv(reports), encoding="utf-8")
    for rep in reports:
        print(f"k={rep.k}: pooled rmse={rep.overall.rmse:.4f}")
    return 0


def cmd_report_groups(args):
    model = storage.read_model(args.model)
    if not isinstance(model, solver.TrainedModel):
        raise InputError("group reports require a grouped model, not a baseline")
    top = evaluation.top_group_per_task(model)
    overlap = evaluation.support_overlap_matrix(model.Q)
    obj = {
        "tasks": {
            road: {"group": idx, "q": [float(v) for v in q]} for road, (idx, q) in top.items()
        },
        "Q": [[float(v) for v in row] for row in model.Q],
        "support_overlap": [[float(v) for v in row] for row in overlap],
    }
    Path(args.out).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_assemble(args):
    graph = roadnet.build_line_graph(roadnet.load_edge_list(args.edges))
    incidents = features.load_incidents_csv(args.incidents)
    series_by_road = {}
    for road in graph.tasks:
        path = Path(args.speeds_dir) / f"{road}.csv"
        series_by_road[road] = features.load_speed_csv(path, road)
    train, test = features.assemble_dataset(
        incidents, series_by_road, graph, args.h, args.t,
        split=args.split, seed=args.seed if args.seed is not None else 0,
        standardize=args.standardize,
    )
    storage.write_dataset(args.out, train, test)
    log.info("assembled %d tasks from %d incidents", train.n_tasks, len(incidents))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="titan",
        description="Multi-task traffic incident duration prediction with grouped temporal features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset directory")
    p.add_argument("--config", help="SynthConfig JSON path (defaults used when omitted)")
    p.add_argument("--out", required=True, help="dataset directory to write")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the grouped multi-task model")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--config", help="Hyperparams JSON path (defaults used when omitted)")
    p.add_argument("--out", required=True, help="model JSON to write")
    p.add_argument("--seed", type=int, help="override the hyperparameter seed")
    p.add_argument("--no-orth", action="store_true",
                   help="disable the orthogonality penalty path (debug/ablation)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("train-baseline", help="train a reference model over its default grid")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", required=True, choices=baselines.BASELINE_KINDS)
    p.add_argument("--lam", type=float, help="single penalty instead of the default grid")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_baseline)

    p = sub.add_parser("predict", help="predict durations for feature rows")
    p.add_argument("--model", required=True)
    p.add_argument("--x", required=True, help="feature CSV, one row per incident")
    p.add_argument("--task", required=True, help="road id")
    p.add_argument("--out", required=True, help="predictions CSV to write")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score models on a dataset's test split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", action="append", required=True,
                   help="model JSON (repeat for side-by-side comparison)")
    p.add_argument("--out", required=True, help="report CSV to write")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep-k", help="train and score across group counts")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", help="base Hyperparams JSON")
    p.add_argument("--k", required=True, help="comma-separated group counts")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-orth", action="store_true")
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("report-groups", help="dump per-task top groups and Q diagnostics")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="report JSON to write")
    p.set_defaults(func=cmd_report_groups)

    p = sub.add_parser("assemble", help="build a dataset directory from raw road/incident/speed files")
    p.add_argument("--edges", required=True, help="road-network edge list (vertex vertex road)")
    p.add_argument("--incidents", required=True, help="incident CSV")
    p.add_argument("--speeds-dir", required=True, help="directory of <road>.csv speed files")
    p.add_argument("--h", type=int, required=True, help="detection window length")
    p.add_argument("--t", type=int, required=True, help="early-verification window length")
    p.add_argument("--split", type=float, default=0.8)
    p.add_argument("--seed", type=int)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assemble)

    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except NumericalAbort as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands: ``discover``, ``generate``, ``bench-cycles``, ``sweep``,
``metrics``. Settings may come from a JSON config file (``--config``);
explicit flags override it. Exit codes: 0 success, 1 configuration or I/O
error, 2 every seed failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields

import numpy as np

from .evalprune import compute_metrics
from .experiment import (
    METHODS,
    AllSeedsFailed,
    BenchmarkMismatch,
    InstanceConfig,
    RunConfig,
    bench_cycle_tracking,
    dumps_report,
    make_instance,
    run_experiment,
    sweep,
    write_sweep_csv,
)
from .io import ensure_parent, load_truth, write_dataset, write_edge_list
from .scoring import BACKENDS, KINDS
from .synth import MECHANISMS, SemSpec, sample_data, sample_er_dag

log = logging.getLogger("dagsearch")

EXIT_OK, EXIT_CONFIG, EXIT_ALL_FAILED = 0, 1, 2


def _add_run_options(p):
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--score", dest="score_kind", choices=KINDS)
    p.add_argument("--backend", choices=BACKENDS)
    p.add_argument("--budget", dest="edge_budget", type=int,
                   help="edge budget b (defaults to the ground-truth edge count)")
    p.add_argument("--sims", dest="sims_multiplier", type=int, help="simulation multiplier b_sims")
    p.add_argument("--horizon", type=int)
    p.add_argument("--cp", dest="exploration_constant", type=float)
    p.add_argument("--seed", dest="seeds", type=int, nargs="+")
    p.add_argument("--prune", action="store_true", default=None)
    p.add_argument("--significance", type=float)
    p.add_argument("--standardize", action="store_true", default=None)
    p.add_argument("--budget-only", dest="greedy_require_improvement",
                   action="store_false", default=None,
                   help="greedy keeps adding edges until the budget even without improvement")
    p.add_argument("--workers", type=int)


def _run_config(args, **extra) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            values.update(json.load(fh))
    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for name in known:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    values.update({k: v for k, v in extra.items() if v is not None})
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def cmd_discover(args):
    cfg = _run_config(args, dataset_path=args.data, truth_path=args.truth, output_path=args.output)
    report = run_experiment(cfg)
    if not cfg.output_path:
        print(dumps_report(report))
    for key, stat in report["aggregate"].items():
        log.info("%s: %.4f +- %.4f", key, stat["mean"], stat["ci95"])
    return EXIT_OK


def cmd_generate(args):
    rng = np.random.default_rng(args.seed)
    dag = sample_er_dag(args.d, args.edges, args.edge_prob, rng)
    dataset = sample_data(SemSpec(dag, args.mechanism, args.noise_std), args.n, rng)
    write_dataset(ensure_parent(args.out_data), dataset)
    write_edge_list(ensure_parent(args.out_truth), dag)
    log.info("wrote %d x %d data with %d true edges", dataset.n, dataset.d, dag.n_edges)
    return EXIT_OK


def cmd_bench(args):
    try:
        table = bench_cycle_tracking(
            args.d_values, args.edge_prob, args.sims, args.seeds, n=args.n,
            mechanism=args.mechanism, backend=args.backend, horizon=args.horizon,
        )
    except BenchmarkMismatch as exc:
        log.error("correctness gate failed: %s", exc)
        return EXIT_CONFIG
    text = json.dumps(table, indent=2)
    if args.output:
        ensure_parent(args.output).write_text(text + "\n", encoding="utf-8")
    print(f"{'d':>4} {'incremental_s':>14} {'naive_s':>10} {'speedup':>8}")
    for row in table:
        print(f"{row['d']:>4} {row['incremental_seconds']:>14.3f} "
              f"{row['naive_seconds']:>10.3f} {row['speedup']:>8.2f}")
    return EXIT_OK


def cmd_sweep(args):
    base = _run_config(args)
    inst = InstanceConfig(d=args.d, edge_count=args.edges, n=args.n,
                          mechanism=args.mechanism, noise_std=args.noise_std, seed=args.instance_seed)
    rows = sweep(base, inst, args.axis, args.values, args.methods, args.instances)
    write_sweep_csv(args.output, rows)
    log.info("wrote %d rows to %s", len(rows), args.output)
    return EXIT_OK


def cmd_metrics(args):
    truth = load_truth(args.truth, args.d)
    predicted = load_truth(args.predicted, args.d)
    print(json.dumps(compute_metrics(predicted, truth).as_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dagsearch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="construct (and optionally prune) a DAG from data")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--truth", help="ground-truth edge list or adjacency CSV")
    p.add_argument("--output", help="report JSON path (printed to stdout if omitted)")
    _add_run_options(p)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("generate", help="sample a synthetic ER instance")
    p.add_argument("--d", type=int, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--edges", type=int)
    group.add_argument("--edge-prob", type=float)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--mechanism", choices=MECHANISMS, default="linear")
    p.add_argument("--noise-std", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-data", required=True)
    p.add_argument("--out-truth", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench-cycles", help="incremental vs naive cycle tracking timings")
    p.add_argument("--d-values", type=int, nargs="+", default=[10, 20, 30, 40, 50])
    p.add_argument("--edge-prob", type=float, default=0.1)
    p.add_argument("--sims", type=int, default=10)
    p.add_argument("--seed", dest="seeds", type=int, nargs="+", default=[0])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--mechanism", choices=MECHANISMS, default="quadratic")
    p.add_argument("--backend", choices=BACKENDS, default="quadratic")
    p.add_argument("--horizon", type=int)
    p.add_argument("--output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="vary edge count or dataset size on synthetic graphs")
    p.add_argument("--axis", choices=["edge_count", "n_datapoints"], required=True)
    p.add_argument("--values", type=int, nargs="+", required=True)
    p.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--edges", type=int, default=15)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--mechanism", choices=MECHANISMS, default="gp_sample")
    p.add_argument("--noise-std", type=float, default=1.0)
    p.add_argument("--instances", type=int, default=1)
    p.add_argument("--instance-seed", type=int, default=0)
    p.add_argument("--output", required=True, help="long-format CSV path")
    _add_run_options(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("metrics", help="TPR/FDR/SHD of a predicted graph")
    p.add_argument("--predicted", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except AllSeedsFailed as exc:
        log.error("all seeds failed: %s", exc)
        return EXIT_ALL_FAILED
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

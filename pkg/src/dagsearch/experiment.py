"""Experiment orchestration: construct-then-prune runs, sweeps, benchmarks."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import stats

from . import baselines
from .dag_space import Dag
from .env import EnvConfig
from .evalprune import DEFAULT_SIGNIFICANCE, compute_metrics, prune
from .io import ensure_parent, load_dataset, load_truth
from .scoring import ObservationDataset, Scorer
from .search import SearchConfig, run_search
from .synth import SemSpec, sample_data, sample_er_dag

log = logging.getLogger(__name__)

REPORT_VERSION = 1
METHODS = ("cduct", "greedy", "random_search", "random_sampling")


class AllSeedsFailed(RuntimeError):
    pass


class BenchmarkMismatch(RuntimeError):
    pass


@dataclass
class RunConfig:
    method: str = "cduct"
    score_kind: str = "DV"
    backend: str = "linear"
    edge_budget: Optional[int] = None
    sims_multiplier: int = 1000
    horizon: Optional[int] = None
    exploration_constant: float = 0.5
    seeds: list[int] = field(default_factory=lambda: [0])
    dataset_path: Optional[str] = None
    truth_path: Optional[str] = None
    prune: bool = False
    significance: float = DEFAULT_SIGNIFICANCE
    standardize: bool = False
    output_path: Optional[str] = None
    greedy_require_improvement: bool = True
    workers: int = 1

    def validate(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.edge_budget is not None and self.edge_budget < 0:
            raise ValueError("edge_budget must be >= 0")
        if self.sims_multiplier < 1:
            raise ValueError("sims_multiplier must be >= 1")
        if not 0 < self.significance < 1:
            raise ValueError("significance must lie in (0, 1)")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def construct(method, dataset, env_cfg, cfg: RunConfig, seed, scorer):
    if method == "cduct":
        search_cfg = SearchConfig(cfg.exploration_constant, cfg.sims_multiplier, cfg.horizon, seed)
        return run_search(dataset, env_cfg, search_cfg, scorer)
    if method == "greedy":
        return baselines.greedy_search(dataset, env_cfg, scorer, cfg.greedy_require_improvement)
    rng = np.random.default_rng(seed)
    if method == "random_search":
        return baselines.random_search(dataset, env_cfg, scorer, rng, cfg.sims_multiplier)
    if method == "random_sampling":
        return baselines.random_sampling(dataset, env_cfg, scorer, rng)
    raise ValueError(f"unknown method {method!r}")


def _resolve_budget(cfg, dataset, truth):
    if cfg.edge_budget is not None:
        return cfg.edge_budget
    if truth is None:
        raise ValueError("edge_budget is required when no ground truth is given")
    return truth.n_edges


def run_seed(dataset: ObservationDataset, truth: Optional[Dag], cfg: RunConfig, seed: int, scorer=None):
    """One construct (and optional prune) run. Returns ``(row, wall_time)``."""
    scorer = scorer or Scorer(dataset, cfg.score_kind, cfg.backend)
    env_cfg = EnvConfig(_resolve_budget(cfg, dataset, truth), Dag(dataset.d))
    result = construct(cfg.method, dataset, env_cfg, cfg, seed, scorer)
    row = {
        "seed": seed,
        "method": cfg.method,
        "reward": result.best_reward,
        "n_edges": result.final_dag.n_edges,
        "score_evaluations": result.score_evaluations,
        "edges": [list(e) for e in result.final_dag.edges],
    }
    if truth is not None:
        row["construct"] = compute_metrics(result.final_dag, truth).as_dict()
    if cfg.prune:
        pruned = prune(dataset, result.final_dag, cfg.significance, cfg.backend)
        row["pruned_edges"] = [list(e) for e in pruned.edges]
        row["pruned_reward"] = scorer.reward(pruned)
        if truth is not None:
            row["pruned"] = compute_metrics(pruned, truth).as_dict()
    return row, result.wall_time


def _safe_seed(args):
    dataset, truth, cfg, seed = args
    try:
        return run_seed(dataset, truth, cfg, seed)
    except Exception as exc:  # recorded per seed; the run goes on
        log.exception("seed %s failed", seed)
        return {"seed": seed, "method": cfg.method, "error": f"{type(exc).__name__}: {exc}"}, None


def mean_ci(values) -> dict:
    """Mean and 95% Student-t confidence half-width."""
    values = [float(v) for v in values]
    k = len(values)
    mean = sum(values) / k
    if k < 2:
        return {"mean": mean, "ci95": 0.0, "count": k}
    sd = float(np.std(values, ddof=1))
    half = float(stats.t.ppf(0.975, k - 1)) * sd / math.sqrt(k)
    return {"mean": mean, "ci95": half, "count": k}


def _flatten(row):
    flat = {}
    for key in ("reward", "n_edges", "score_evaluations", "pruned_reward"):
        if key in row:
            flat[key] = row[key]
    for section in ("construct", "pruned"):
        for name in ("tpr", "fdr", "shd"):
            if section in row:
                flat[f"{section}.{name}"] = row[section][name]
    return flat


def aggregate(rows) -> dict:
    ok = [_flatten(r) for r in rows if "error" not in r]
    keys = sorted({k for r in ok for k in r})
    return {k: mean_ci([r[k] for r in ok if k in r]) for k in keys}


def run_on_dataset(dataset, truth, cfg: RunConfig) -> dict:
    cfg.validate()
    if cfg.standardize:
        dataset = dataset.standardized()
    jobs = [(dataset, truth, cfg, s) for s in cfg.seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_safe_seed, jobs))
    else:
        outcomes = list(map(_safe_seed, jobs))
    rows = [o[0] for o in outcomes]
    if all("error" in r for r in rows):
        raise AllSeedsFailed("; ".join(r["error"] for r in rows))
    times = [o[1] for o in outcomes]
    return {
        "version": REPORT_VERSION,
        "config": asdict(cfg),
        "seeds": rows,
        "aggregate": aggregate(rows),
        "timings": {
            "construct_seconds": times,
            "total_construct_seconds": sum(t for t in times if t is not None),
        },
    }


def run_experiment(cfg: RunConfig) -> dict:
    cfg.validate()
    if cfg.dataset_path is None:
        raise ValueError("dataset_path is required")
    dataset = load_dataset(cfg.dataset_path)
    truth = load_truth(cfg.truth_path, dataset.d) if cfg.truth_path else None
    report = run_on_dataset(dataset, truth, cfg)
    if cfg.output_path:
        write_report(cfg.output_path, report)
    return report


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def write_report(path, report: dict, overwrite: bool = False) -> None:
    path = ensure_parent(path)
    if path.exists() and not overwrite:
        raise FileExistsError(f"{path} exists; reports are never overwritten")
    path.write_text(dumps_report(report) + "\n", encoding="utf-8")


# -- synthetic instances ---------------------------------------------------

@dataclass
class InstanceConfig:
    d: int = 10
    edge_count: Optional[int] = 15
    edge_prob: Optional[float] = None
    n: int = 1000
    mechanism: str = "gp_sample"
    noise_std: float = 1.0
    seed: int = 0


def make_instance(icfg: InstanceConfig) -> ObservationDataset:
    rng = np.random.default_rng(icfg.seed)
    edge_count = icfg.edge_count if icfg.edge_prob is None else None
    dag = sample_er_dag(icfg.d, edge_count, icfg.edge_prob, rng)
    return sample_data(SemSpec(dag, icfg.mechanism, icfg.noise_std), icfg.n, rng)


SWEEP_AXES = {"edge_count": "edge_count", "n_datapoints": "n"}
SWEEP_COLUMNS = [
    "axis", "value", "instance", "method", "seed", "reward", "n_edges",
    "score_evaluations", "construct_tpr", "construct_fdr", "construct_shd",
    "pruned_tpr", "pruned_fdr", "pruned_shd", "error",
]


def sweep(base: RunConfig, instance: InstanceConfig, axis: str, values, methods,
          n_instances: int = 1) -> list[dict]:
    """Long-format rows, one per (value, instance, method, seed)."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {sorted(SWEEP_AXES)}")
    rows = []
    for value in values:
        for k in range(n_instances):
            icfg = replace(instance, **{SWEEP_AXES[axis]: int(value)}, seed=instance.seed + k)
            dataset = make_instance(icfg)
            for method in methods:
                report = run_on_dataset(dataset, dataset.truth, replace(base, method=method))
                for r in report["seeds"]:
                    out = {"axis": axis, "value": value, "instance": icfg.seed,
                           "method": method, "seed": r["seed"], "error": r.get("error", "")}
                    for key in ("reward", "n_edges", "score_evaluations"):
                        out[key] = r.get(key, "")
                    for section in ("construct", "pruned"):
                        for name in ("tpr", "fdr", "shd"):
                            out[f"{section}_{name}"] = r.get(section, {}).get(name, "")
                    rows.append(out)
    return rows


def write_sweep_csv(path, rows) -> None:
    path = ensure_parent(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


# -- cycle-tracking benchmark ------------------------------------------------

def _timed_search(dataset, budget, naive, search_cfg, backend, min_seconds=0.0):
    """Best wall time over repeated runs, repeating until ``min_seconds`` elapsed.

    Each repeat gets a fresh scorer so regression caching is not shared.
    """
    env_cfg = EnvConfig(budget, Dag(dataset.d), naive_tracking=naive)
    best, spent, result = math.inf, 0.0, None
    while result is None or spent < min_seconds:
        scorer = Scorer(dataset, "DV", backend)
        started = time.perf_counter()
        result = run_search(dataset, env_cfg, search_cfg, scorer)
        took = time.perf_counter() - started
        best, spent = min(best, took), spent + took
    return result, best


def bench_cycle_tracking(
    d_values,
    edge_prob: float = 0.1,
    sims_multiplier: int = 10,
    seeds=(0,),
    n: int = 1000,
    mechanism: str = "quadratic",
    backend: str = "quadratic",
    exploration_constant: float = 0.5,
    horizon: Optional[int] = None,
    min_seconds: float = 2.0,
) -> list[dict]:
    """Time tree search with incremental versus traversal-based cycle tracking.

    Both variants see the same instance, scorer settings and seed; any
    difference in their outputs raises :class:`BenchmarkMismatch`. Runs
    shorter than ``min_seconds`` are repeated and the fastest time is kept.
    """
    warm = make_instance(InstanceConfig(d=4, edge_count=2, n=20, mechanism="linear"))
    for naive in (False, True):
        _timed_search(warm, 2, naive, SearchConfig(sims_multiplier=1), "linear")
    table = []
    for d in d_values:
        fast_times, slow_times = [], []
        for seed in seeds:
            dataset = make_instance(InstanceConfig(d=d, edge_count=None, edge_prob=edge_prob,
                                                   n=n, mechanism=mechanism, seed=seed))
            budget = dataset.truth.n_edges
            search_cfg = SearchConfig(exploration_constant, sims_multiplier, horizon, seed)
            fast, t_fast = _timed_search(dataset, budget, False, search_cfg, backend, min_seconds)
            slow, t_slow = _timed_search(dataset, budget, True, search_cfg, backend, min_seconds)
            if fast.best_actions != slow.best_actions or fast.best_reward != slow.best_reward:
                raise BenchmarkMismatch(f"d={d} seed={seed}: tracking variants disagree")
            fast_times.append(t_fast)
            slow_times.append(t_slow)
            log.info("d=%d seed=%d incremental %.2fs naive %.2fs", d, seed, t_fast, t_slow)
        table.append({
            "d": d,
            "incremental_seconds": float(np.mean(fast_times)),
            "naive_seconds": float(np.mean(slow_times)),
            "speedup": float(np.mean(slow_times) / np.mean(fast_times)),
            "seeds": list(seeds),
        })
    return table

"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--d 10 30 50 100] [--repeat 200]

Kernel timings call both implementations directly. ``--search`` also times a
short tree search in two subprocesses, one with DAGSEARCH_DISABLE_NUMBA=1.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from dagsearch import kernels
from dagsearch.dag_space import cycle_set_init
from dagsearch.synth import sample_er_dag

SEARCH_SNIPPET = """
import time
from dagsearch.dag_space import Dag
from dagsearch.env import EnvConfig
from dagsearch.experiment import InstanceConfig, make_instance
from dagsearch.scoring import Scorer
from dagsearch.search import SearchConfig, run_search
ds = make_instance(InstanceConfig(d={d}, edge_count=None, edge_prob=0.1, n=200, mechanism="linear"))
cfg = EnvConfig(min(ds.truth.n_edges, 10), Dag({d}))
run_search(ds, cfg, SearchConfig(sims_multiplier=1, horizon=8), Scorer(ds))
t = time.perf_counter()
run_search(ds, cfg, SearchConfig(sims_multiplier=5, horizon=8), Scorer(ds))
print(time.perf_counter() - t)
"""


def per_call(fn, repeat):
    fn()
    started = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - started) / repeat


def kernel_rows(d, repeat, rng):
    dag = sample_er_dag(d, edge_prob=0.1, rng=rng)
    ccs = cycle_set_init(dag)
    n_steps = 16
    uniforms = rng.random(n_steps)
    rows = []
    for name, impl in (("numpy", kernels.numpy_impl), ("numba", kernels.numba_impl)):
        if impl is None:
            continue

        def rollout(naive):
            adj, forb = dag.bits.copy(), ccs.forbidden.copy()
            desc, anc = ccs.desc.copy(), ccs.anc.copy()
            out = np.empty(n_steps, dtype=np.int64)
            impl.rollout(adj, desc, anc, forb, -1, n_steps, uniforms, naive, out)

        rows.append((name, {
            "rollout": per_call(lambda: rollout(False), repeat),
            "rollout_naive": per_call(lambda: rollout(True), max(1, repeat // 10)),
            "avail_stubs": per_call(lambda: impl.avail_stubs(dag.bits, ccs.forbidden), repeat),
        }))
    return rows


def search_seconds(d, disable_numba):
    env = dict(os.environ)
    if disable_numba:
        env["DAGSEARCH_DISABLE_NUMBA"] = "1"
    else:
        env.pop("DAGSEARCH_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", SEARCH_SNIPPET.format(d=d)],
                         env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--d", type=int, nargs="+", default=[10, 30, 50, 100])
    parser.add_argument("--repeat", type=int, default=200)
    parser.add_argument("--search", action="store_true")
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'d':>4} {'impl':>6} {'rollout_us':>11} {'naive_us':>10} {'stubs_us':>9}")
    for d in args.d:
        for name, t in kernel_rows(d, args.repeat, rng):
            print(f"{d:>4} {name:>6} {t['rollout'] * 1e6:>11.1f} "
                  f"{t['rollout_naive'] * 1e6:>10.1f} {t['avail_stubs'] * 1e6:>9.1f}")
    if args.search:
        print(f"\n{'d':>4} {'numba_s':>8} {'numpy_s':>8} {'ratio':>6}")
        for d in args.d:
            fast, slow = search_seconds(d, False), search_seconds(d, True)
            print(f"{d:>4} {fast:>8.2f} {slow:>8.2f} {slow / fast:>6.1f}")


if __name__ == "__main__":
    main()

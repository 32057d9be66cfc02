"""Greedy search and random trajectory baselines on the shared MDP."""

from __future__ import annotations

import math
import time

import numpy as np

from . import env as envlib
from . import kernels
from .env import EnvConfig
from .search import SearchResult

BASELINES = ("greedy", "random_search", "random_sampling")


def greedy_search(dataset, env_config: EnvConfig, scorer, require_improvement: bool = True) -> SearchResult:
    """Repeatedly add the valid edge giving the lowest score.

    Each candidate ``x -> y`` only changes node ``y``'s term, so it costs one
    regression at most. Ties go to the lexicographically smallest ``(x, y)``. With
    ``require_improvement`` the search also stops when no edge lowers the
    score.
    """
    started = time.perf_counter()
    evals0 = scorer.n_evaluations
    state = envlib.initial_state(env_config)
    parents = scorer.parent_sets(state.dag)
    terms = scorer.terms(parents)
    m = state.dag.n_edges
    current = scorer.total(terms, m)
    actions: list[int] = []
    while not envlib.is_terminal(state, env_config):
        best, best_edge = math.inf, None
        adj, forb = state.dag.bits, state.ccs.forbidden
        for x in kernels.avail_stubs(adj, forb).tolist():
            for y in kernels.avail_targets(adj, forb, x).tolist():
                trial = list(terms)
                trial[y] = scorer.node_term(y, tuple(sorted(parents[y] + (x,))))
                value = scorer.total(trial, m + 1)
                if value < best:
                    best, best_edge = value, (x, y)
        if best_edge is None or (require_improvement and not best < current):
            break
        x, y = best_edge
        state = envlib.step(envlib.step(state, x), y)
        actions += [x, y]
        parents[y] = tuple(sorted(parents[y] + (x,)))
        terms[y] = scorer.node_term(y, parents[y])
        m += 1
        current = best
    return SearchResult(
        best_actions=actions,
        best_reward=scorer.reward(state.dag),
        final_dag=state.dag,
        score_evaluations=scorer.n_evaluations - evals0,
        wall_time=time.perf_counter() - started,
    )


def _trajectory(cfg, start, scorer, rng):
    out = envlib.rollout(start, cfg, 2 * cfg.edge_budget, rng)
    return scorer.reward(out.dag), out


def random_sampling(dataset, env_config: EnvConfig, scorer, rng: np.random.Generator) -> SearchResult:
    """A single uniformly random trajectory played to the end."""
    return random_search(dataset, env_config, scorer, rng, n_trajectories=1)


def random_search(
    dataset,
    env_config: EnvConfig,
    scorer,
    rng: np.random.Generator,
    sims_multiplier: int = 1,
    n_trajectories: int | None = None,
) -> SearchResult:
    """Best of ``K`` random trajectories, ``K = sims_multiplier * d * 2b`` by default.

    That ``K`` equals the simulation count of a tree search run that takes
    ``2b`` real steps with the same multiplier.
    """
    started = time.perf_counter()
    evals0 = scorer.n_evaluations
    start = envlib.initial_state(env_config)
    if n_trajectories is None:
        n_trajectories = sims_multiplier * dataset.d * 2 * env_config.edge_budget
    best_reward, best = scorer.reward(start.dag), None
    if n_trajectories > 0 and not envlib.is_terminal(start, env_config):
        best_reward = -math.inf
        for _ in range(n_trajectories):
            r, out = _trajectory(env_config, start, scorer, rng)
            if r > best_reward:
                best_reward, best = r, out
    actions = [] if best is None else best.actions
    final = start.dag if best is None else best.dag
    return SearchResult(
        best_actions=actions,
        best_reward=best_reward,
        final_dag=final,
        score_evaluations=scorer.n_evaluations - evals0,
        wall_time=time.perf_counter() - started,
    )

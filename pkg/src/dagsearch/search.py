"""UCT tree search over the DAG-construction MDP.

Each real step builds a fresh tree at the current state and runs
``sims_multiplier * d`` simulations (selection/expansion, random rollout,
backup). The root then advances to the child with the best mean return.
The best complete trajectory seen over the whole run is memoised and
returned.

Random draws come from one ``numpy.random.Generator`` in a fixed order per
simulation: the expansion index first, then the rollout uniforms.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import env as envlib
from .dag_space import Dag
from .env import DagState, EnvConfig


@dataclass(frozen=True)
class SearchConfig:
    exploration_constant: float = 0.5
    sims_multiplier: int = 10
    horizon: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if not self.exploration_constant > 0:
            raise ValueError("exploration constant must be positive")
        if self.sims_multiplier < 1:
            raise ValueError("sims_multiplier must be >= 1")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be >= 1")


def default_horizon(d: int, edge_budget: int) -> int:
    """Full episode for small graphs, 16 steps around d=20, 8 for larger ones."""
    if d <= 11:
        return max(1, 2 * edge_budget)
    if d <= 30:
        return 16
    return 8


@dataclass
class SearchResult:
    best_actions: list[int]
    best_reward: float
    final_dag: Dag
    score_evaluations: int
    wall_time: float
    # best reward after each real step (tree search only)
    history: list[float] = field(default_factory=list)


class SearchTreeNode:
    """Tree node. Child statistics live in arrays indexed like ``actions``.

    ``parents``/``terms`` hold the per-node parent sets and score terms of
    the node's graph, derived from the parent node on creation.
    """

    __slots__ = ("state", "action", "parent", "slot", "visits", "total_return",
                 "actions", "children", "untried", "child_visits", "child_totals",
                 "terminal", "parents", "terms", "m")

    def __init__(self, state: DagState, cfg: EnvConfig, action=None, parent=None, slot=-1):
        self.state = state
        self.action = action
        self.parent = parent
        self.slot = slot
        self.visits = 0
        self.total_return = 0.0
        # below the budget a state is terminal exactly when it has no actions
        self.actions = [] if state.t >= 2 * cfg.edge_budget else envlib.valid_actions(state)
        self.terminal = not self.actions
        self.untried = list(range(len(self.actions)))
        self.children: dict[int, SearchTreeNode] = {}
        self.child_visits = np.zeros(len(self.actions))
        self.child_totals = np.zeros(len(self.actions))
        self.parents = self.terms = None
        self.m = 0

    @property
    def mean(self) -> float:
        return self.total_return / self.visits

    def attach_scores(self, scorer) -> None:
        """Fill ``parents``/``terms``, reusing the parent node's lists."""
        up = self.parent
        if up is None or up.terms is None:
            self.parents = scorer.parent_sets(self.state.dag)
            self.terms = scorer.terms(self.parents)
            self.m = self.state.dag.n_edges
        elif self.state.dag is up.state.dag:
            self.parents, self.terms, self.m = up.parents, up.terms, up.m
        else:
            x, y = up.state.stub, self.action
            self.parents = list(up.parents)
            self.terms = list(up.terms)
            self.parents[y] = tuple(sorted(self.parents[y] + (x,)))
            self.terms[y] = scorer.node_term(y, self.parents[y])
            self.m = up.m + 1


def ucb_values(node: SearchTreeNode, cp: float) -> np.ndarray:
    visits = node.child_visits
    return node.child_totals / visits + 2 * cp * np.sqrt(2 * math.log(node.visits) / visits)


def best_uct_child(node: SearchTreeNode, cp: float) -> SearchTreeNode:
    """UCB1 choice among fully expanded children; ties go to the lower action."""
    slot = int(np.argmax(ucb_values(node, cp)))
    return node.children[node.actions[slot]]


def tree_policy(root: SearchTreeNode, cfg: EnvConfig, cp: float, rng: np.random.Generator):
    """Descend by UCB1, expand one untried action. Returns ``(border, actions)``."""
    node, path = root, []
    while not node.terminal:
        if node.untried:
            slot = node.untried.pop(int(rng.integers(len(node.untried))))
            a = node.actions[slot]
            child = SearchTreeNode(envlib.step_unchecked(node.state, a), cfg, a, node, slot)
            node.children[a] = child
            path.append(a)
            return child, path
        node = best_uct_child(node, cp)
        path.append(node.action)
    return node, path


def sim_policy(border: SearchTreeNode, cfg: EnvConfig, horizon: int, scorer, rng):
    """Random rollout from ``border``. Returns ``(raw return, rollout)``.

    The end graph is scored from the border's node terms plus the terms of
    nodes that gained parents during the rollout.
    """
    if border.terms is None:
        border.attach_scores(scorer)
    steps = 0 if border.terminal else min(horizon, 2 * cfg.edge_budget - border.state.t)
    out = envlib.rollout(border.state, cfg, steps, rng)
    if border.terminal:
        out.complete = True
    terms = border.terms
    if out.edges:
        parents = list(border.parents)
        terms = list(terms)
        for x, y in out.edges:
            parents[y] = parents[y] + (x,)
        for y in {y for _, y in out.edges}:
            parents[y] = tuple(sorted(parents[y]))
            terms[y] = scorer.node_term(y, parents[y])
    return -scorer.total(terms, border.m + len(out.edges)), out


def backup(node: Optional[SearchTreeNode], value: float) -> None:
    while node is not None:
        node.visits += 1
        node.total_return += value
        if node.parent is not None:
            node.parent.child_visits[node.slot] += 1
            node.parent.child_totals[node.slot] += value
        node = node.parent


def max_child(node: SearchTreeNode) -> SearchTreeNode:
    """Highest mean return; ties go to more visits, then the lower action."""
    visited = [c for c in node.children.values() if c.visits > 0]
    if not visited:
        raise ValueError("max_child needs at least one visited child")
    return max(visited, key=lambda c: (c.mean, c.visits, -c.action))


class _MinMax:
    """Running min/max normaliser for one root's simulation batch."""

    def __init__(self):
        self.lo = math.inf
        self.hi = -math.inf

    def __call__(self, r: float) -> float:
        self.lo = min(self.lo, r)
        self.hi = max(self.hi, r)
        if self.hi == self.lo:
            return 0.5
        return (r - self.lo) / (self.hi - self.lo)


def run_search(dataset, env_config: EnvConfig, search_config: SearchConfig, scorer) -> SearchResult:
    if env_config.initial_dag.d != dataset.d:
        raise ValueError("initial DAG and dataset disagree on the number of variables")
    started = time.perf_counter()
    evals0 = scorer.n_evaluations
    rng = np.random.default_rng(search_config.seed)
    d = dataset.d
    cp = search_config.exploration_constant
    horizon = search_config.horizon or default_horizon(d, env_config.edge_budget)
    n_sims = search_config.sims_multiplier * d

    root = SearchTreeNode(envlib.initial_state(env_config), env_config)
    root.attach_scores(scorer)
    best_actions: list[int] = []
    best_reward = -math.inf
    past: list[int] = []
    history: list[float] = []
    while not root.terminal:
        norm = _MinMax()
        for _ in range(n_sims):
            border, tree_actions = tree_policy(root, env_config, cp, rng)
            r, out = sim_policy(border, env_config, horizon, scorer, rng)
            backup(border, norm(r))
            if r > best_reward and out.complete:
                best_actions = past + tree_actions + out.actions
                best_reward = r
        history.append(best_reward)
        child = max_child(root)
        past.append(child.action)
        # fresh tree rooted at the chosen state
        root = SearchTreeNode(child.state, env_config)
        root.parents, root.terms, root.m = child.parents, child.terms, child.m
    # the realised trajectory also counts as a complete candidate
    final_reward = -scorer.total(root.terms, root.m)
    if final_reward > best_reward:
        best_actions, best_reward = list(past), final_reward
    final = envlib.replay(env_config, best_actions)
    return SearchResult(
        best_actions=best_actions,
        best_reward=best_reward,
        final_dag=final.dag,
        score_evaluations=scorer.n_evaluations - evals0,
        wall_time=time.perf_counter() - started,
        history=history,
    )

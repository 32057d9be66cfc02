import itertools
import math

import numpy as np
import pytest

from dagsearch import env as envlib
from dagsearch.dag_space import Dag
from dagsearch.env import EnvConfig
from dagsearch.scoring import ObservationDataset, Scorer
from dagsearch.search import (
    SearchConfig,
    SearchTreeNode,
    _MinMax,
    backup,
    best_uct_child,
    default_horizon,
    max_child,
    run_search,
    sim_policy,
    tree_policy,
)


def one_edge_data(n=200, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 3))
    x[:, 1] += 2.0 * x[:, 0]
    return ObservationDataset(x)


def brute_force_best(scorer, d, budget):
    pairs = [(i, j) for i in range(d) for j in range(d) if i != j]
    best = -math.inf
    for k in range(budget + 1):
        for edges in itertools.combinations(pairs, k):
            dag = Dag(d, edges, check=False)
            if dag.is_acyclic():
                best = max(best, scorer.reward(dag))
    return best


def root_with_children(cfg, stats):
    root = SearchTreeNode(envlib.initial_state(cfg), cfg)
    for a, (total, visits) in stats.items():
        slot = root.actions.index(a)
        child = SearchTreeNode(envlib.step(root.state, a), cfg, a, root, slot)
        child.visits, child.total_return = visits, total
        root.children[a] = child
        root.child_visits[slot] = visits
        root.child_totals[slot] = total
        root.untried.remove(slot)
    root.visits = sum(v for _, v in stats.values())
    return root


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SearchConfig(exploration_constant=0)
        with pytest.raises(ValueError):
            SearchConfig(sims_multiplier=0)
        with pytest.raises(ValueError):
            SearchConfig(horizon=0)

    def test_default_horizon(self):
        assert default_horizon(10, 15) == 30
        assert default_horizon(20, 40) == 16
        assert default_horizon(50, 113) == 8


class TestTreePolicy:
    def test_fresh_root_expands_one_child(self):
        cfg = EnvConfig(2, Dag(4))
        root = SearchTreeNode(envlib.initial_state(cfg), cfg)
        border, path = tree_policy(root, cfg, 0.05, np.random.default_rng(0))
        assert len(path) == 1 and border.parent is root
        assert list(root.children) == path and len(root.untried) == 3

    def test_ucb_prefers_higher_value(self):
        cfg = EnvConfig(1, Dag(2))
        root = root_with_children(cfg, {0: (5.0, 5), 1: (0.0, 5)})
        assert best_uct_child(root, 0.05).action == 0
        root = root_with_children(cfg, {0: (0.0, 5), 1: (5.0, 5)})
        assert best_uct_child(root, 0.05).action == 1

    def test_ucb_exploration_term(self):
        cfg = EnvConfig(1, Dag(2))
        # bonus 2 * cp * sqrt(2 ln 10 / n): with cp = 1 the rarely visited child wins
        root = root_with_children(cfg, {0: (8.1, 9), 1: (0.0, 1)})
        assert best_uct_child(root, 1.0).action == 1
        assert best_uct_child(root, 0.05).action == 0

    def test_terminal_node_returned_without_expansion(self):
        cfg = EnvConfig(0, Dag(3))
        root = SearchTreeNode(envlib.initial_state(cfg), cfg)
        border, path = tree_policy(root, cfg, 0.05, np.random.default_rng(0))
        assert border is root and path == [] and root.terminal


class TestSimPolicy:
    def test_terminal_border(self):
        ds = one_edge_data()
        scorer = Scorer(ds)
        cfg = EnvConfig(1, Dag(3))
        state = envlib.replay(cfg, [0, 1])
        node = SearchTreeNode(state, cfg)
        r, out = sim_policy(node, cfg, 10, scorer, np.random.default_rng(0))
        assert out.actions == [] and out.complete
        assert r == scorer.reward(state.dag)

    def test_full_horizon_is_complete_and_scored(self):
        ds = ObservationDataset(np.random.default_rng(1).normal(size=(50, 5)))
        scorer = Scorer(ds)
        cfg = EnvConfig(3, Dag(5))
        node = SearchTreeNode(envlib.initial_state(cfg), cfg)
        for seed in range(10):
            r, out = sim_policy(node, cfg, 6, scorer, np.random.default_rng(seed))
            assert out.complete and out.dag.n_edges == 3
            assert r == scorer.reward(out.dag)

    def test_reproducible(self):
        ds = ObservationDataset(np.random.default_rng(1).normal(size=(50, 5)))
        cfg = EnvConfig(3, Dag(5))
        node = SearchTreeNode(envlib.initial_state(cfg), cfg)
        a = sim_policy(node, cfg, 4, Scorer(ds), np.random.default_rng(3))
        b = sim_policy(node, cfg, 4, Scorer(ds), np.random.default_rng(3))
        assert a[0] == b[0] and a[1].actions == b[1].actions and not a[1].complete


class TestBackup:
    def test_chain(self):
        cfg = EnvConfig(2, Dag(3))
        root = SearchTreeNode(envlib.initial_state(cfg), cfg)
        a = SearchTreeNode(envlib.step(root.state, 0), cfg, 0, root, 0)
        b = SearchTreeNode(envlib.step(a.state, 1), cfg, 1, a, 0)
        backup(b, 0.3)
        assert [n.visits for n in (root, a, b)] == [1, 1, 1]
        assert all(n.total_return == 0.3 for n in (root, a, b))
        backup(a, 0.7)
        assert root.mean == pytest.approx(0.5)
        assert root.child_visits[0] == 2 and a.child_visits[0] == 1

    def test_visits_non_increasing_along_paths(self):
        cfg = EnvConfig(2, Dag(4))
        root = SearchTreeNode(envlib.initial_state(cfg), cfg)
        rng = np.random.default_rng(0)
        for _ in range(100):
            border, _ = tree_policy(root, cfg, 0.05, rng)
            backup(border, float(rng.random()))
        stack = [root]
        while stack:
            node = stack.pop()
            kids = list(node.children.values())
            assert node.visits >= sum(k.visits for k in kids)
            assert all(k.visits <= node.visits for k in kids)
            stack.extend(kids)


class TestMaxChild:
    def make(self, stats):
        return root_with_children(EnvConfig(2, Dag(3)), stats)

    def test_highest_mean(self):
        assert max_child(self.make({0: (0.5, 1), 1: (0.9, 1)})).action == 1

    def test_ties(self):
        assert max_child(self.make({0: (5.0, 10), 2: (1.5, 3)})).action == 0
        assert max_child(self.make({1: (1.0, 2), 2: (1.0, 2)})).action == 1

    def test_no_children(self):
        cfg = EnvConfig(1, Dag(3))
        with pytest.raises(ValueError):
            max_child(SearchTreeNode(envlib.initial_state(cfg), cfg))


def test_minmax_normaliser():
    norm = _MinMax()
    assert norm(-5.0) == 0.5
    assert norm(-3.0) == 1.0
    assert norm(-4.0) == 0.5
    assert norm(-7.0) == 0.0


class TestRunSearch:
    def test_zero_budget(self):
        ds = one_edge_data()
        scorer = Scorer(ds)
        res = run_search(ds, EnvConfig(0, Dag(3)), SearchConfig(seed=1), scorer)
        assert res.best_actions == [] and res.best_reward == scorer.reward(Dag(3))

    def test_single_edge_instance(self):
        ds = one_edge_data()
        scorer = Scorer(ds)
        res = run_search(ds, EnvConfig(1, Dag(3)), SearchConfig(sims_multiplier=20, seed=2), scorer)
        assert {tuple(res.best_actions)} <= {(0, 1), (1, 0)}
        assert res.best_reward == pytest.approx(brute_force_best(scorer, 3, 1), abs=1e-9)

    def test_replay_determinism_and_accounting(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(100, 6))
        x[:, 3] += x[:, 0] - x[:, 1]
        x[:, 5] += x[:, 3] ** 2
        ds = ObservationDataset(x)
        cfg = EnvConfig(4, Dag(6))
        scfg = SearchConfig(sims_multiplier=5, seed=11)
        a = run_search(ds, cfg, scfg, Scorer(ds, "DV", "quadratic"))
        b = run_search(ds, cfg, scfg, Scorer(ds, "DV", "quadratic"))
        assert a.best_actions == b.best_actions and a.best_reward == b.best_reward
        assert a.history == b.history
        replayed = envlib.replay(cfg, a.best_actions)
        assert replayed.dag == a.final_dag
        assert Scorer(ds, "DV", "quadratic").reward(a.final_dag) == a.best_reward
        steps = len(a.history)
        assert a.score_evaluations <= steps * 5 * 6 + 1
        assert all(x <= y for x, y in zip(a.history, a.history[1:]))

    def test_dimension_mismatch(self):
        ds = one_edge_data()
        with pytest.raises(ValueError):
            run_search(ds, EnvConfig(1, Dag(4)), SearchConfig(), Scorer(ds))

    def test_starts_from_initial_graph(self):
        ds = one_edge_data()
        start = Dag(3, [(0, 1)])
        res = run_search(ds, EnvConfig(1, start), SearchConfig(sims_multiplier=5), Scorer(ds))
        assert res.final_dag.has_edge(0, 1) and res.final_dag.n_edges == 2

    @pytest.mark.parametrize("naive", [False, True])
    def test_reduced_horizon(self, naive):
        rng = np.random.default_rng(4)
        ds = ObservationDataset(rng.normal(size=(50, 5)))
        cfg = EnvConfig(4, Dag(5), naive_tracking=naive)
        res = run_search(ds, cfg, SearchConfig(sims_multiplier=3, horizon=2), Scorer(ds))
        assert envlib.replay(cfg, res.best_actions).dag == res.final_dag
        assert res.final_dag.n_edges == 4

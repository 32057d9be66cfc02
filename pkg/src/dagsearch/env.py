"""Incremental DAG-construction MDP.

An edge is added in two MDP steps: an even step picks the source node (the
edge stub), the following odd step picks the target. Episodes end once the
edge budget ``b`` is spent (``t == 2b``) or no action is valid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .dag_space import CycleCandidateSet, Dag, cycle_set_init, cycle_set_update


class InvalidActionError(ValueError):
    pass


@dataclass(frozen=True)
class DagState:
    dag: Dag
    stub: Optional[int]
    t: int
    ccs: CycleCandidateSet

    def __post_init__(self):
        if (self.stub is not None) != (self.t % 2 == 1):
            raise ValueError(f"stub {self.stub!r} inconsistent with timestep {self.t}")


@dataclass(frozen=True)
class EnvConfig:
    edge_budget: int
    initial_dag: Dag
    naive_tracking: bool = False

    def __post_init__(self):
        d = self.initial_dag.d
        if self.edge_budget < 0:
            raise ValueError("edge budget must be >= 0")
        room = d * (d - 1) // 2 - self.initial_dag.n_edges
        if self.edge_budget > room:
            raise ValueError(
                f"edge budget {self.edge_budget} exceeds the {room} edges a DAG on {d} nodes can still take"
            )

    @property
    def horizon_limit(self) -> int:
        return 2 * self.edge_budget


def initial_state(cfg: EnvConfig) -> DagState:
    ccs = cycle_set_init(cfg.initial_dag, naive=cfg.naive_tracking)
    return DagState(cfg.initial_dag, None, 0, ccs)


def valid_actions(state: DagState) -> list[int]:
    """Selectable nodes in ascending order.

    Stubs are restricted to nodes with at least one target that is neither
    forbidden nor an existing edge, so an odd step always has an action.
    """
    adj, forb = state.dag.bits, state.ccs.forbidden
    if state.stub is None:
        return kernels.avail_stubs(adj, forb).tolist()
    return kernels.avail_targets(adj, forb, state.stub).tolist()


def step(state: DagState, action: int) -> DagState:
    action = int(action)
    adj, forb = state.dag.bits, state.ccs.forbidden
    if not 0 <= action < state.dag.d:
        raise InvalidActionError(f"action {action} out of range at t={state.t}")
    if state.stub is None:
        if action not in kernels.avail_stubs(adj, forb):
            raise InvalidActionError(f"node {action} cannot be an edge stub at t={state.t}")
        return DagState(state.dag, action, state.t + 1, state.ccs)
    if action not in kernels.avail_targets(adj, forb, state.stub):
        raise InvalidActionError(
            f"edge ({state.stub}, {action}) is invalid at t={state.t}"
        )
    return step_unchecked(state, action)


def step_unchecked(state: DagState, action: int) -> DagState:
    """``step`` for an action already taken from ``valid_actions(state)``."""
    if state.stub is None:
        return DagState(state.dag, action, state.t + 1, state.ccs)
    bits = state.dag.bits.copy()
    bits[state.stub, action >> 6] |= np.uint64(1) << np.uint64(action & 63)
    dag = Dag.from_bits(bits, copy=False)
    ccs = cycle_set_update(state.ccs, dag, (state.stub, action))
    return DagState(dag, None, state.t + 1, ccs)


def is_terminal(state: DagState, cfg: EnvConfig) -> bool:
    if state.t >= 2 * cfg.edge_budget:
        return True
    stub = -1 if state.stub is None else state.stub
    return not kernels.has_valid_action(state.dag.bits, state.ccs.forbidden, stub)


def terminal_reward(state: DagState, cfg: EnvConfig, scorer) -> float:
    """Negated score of the state's graph (the only non-zero reward)."""
    return scorer.reward(state.dag)


def replay(cfg: EnvConfig, actions) -> DagState:
    state = initial_state(cfg)
    for a in actions:
        state = step(state, a)
    return state


_EMPTY = np.zeros((1, 1), dtype=np.uint64)


@dataclass
class Rollout:
    actions: list[int]
    dag: Dag
    t: int
    complete: bool = False
    edges: list[tuple[int, int]] = field(default_factory=list)


def rollout(state: DagState, cfg: EnvConfig, n_steps: int, rng: np.random.Generator) -> Rollout:
    """Uniform-random continuation of ``state`` for at most ``n_steps`` steps.

    Draws exactly ``n_steps`` uniforms from ``rng`` regardless of how many are
    used, so the stream position depends only on ``n_steps``.
    """
    n_steps = max(0, min(n_steps, 2 * cfg.edge_budget - state.t))
    uniforms = rng.random(n_steps)
    adj = state.dag.bits.copy()
    forb = state.ccs.forbidden.copy()
    if state.ccs.naive:
        desc = anc = _EMPTY
    else:
        desc, anc = state.ccs.desc.copy(), state.ccs.anc.copy()
    actions = np.full(n_steps, -1, dtype=np.int64)
    stub = -1 if state.stub is None else state.stub
    taken, stub = kernels.rollout(
        adj, desc, anc, forb, stub, n_steps, uniforms, state.ccs.naive, actions
    )
    t = state.t + int(taken)
    complete = t >= 2 * cfg.edge_budget or not kernels.has_valid_action(adj, forb, stub)
    taken_actions = actions[:taken].tolist()
    return Rollout(taken_actions, Dag.from_bits(adj, copy=False), t, complete,
                   _edges_of(state.stub, taken_actions))


def _edges_of(stub, actions):
    edges = []
    for a in actions:
        if stub is None:
            stub = a
        else:
            edges.append((stub, a))
            stub = None
    return edges

import numpy as np

from dagsearch import env as envlib
from dagsearch.dag_space import Dag


def random_dag(rng, d, p=0.3):
    order = rng.permutation(d)
    edges = [
        (int(order[a]), int(order[b]))
        for a in range(d)
        for b in range(a + 1, d)
        if rng.random() < p
    ]
    return Dag(d, edges)


def random_episode(cfg, rng):
    """States visited by a uniform-random policy until termination."""
    state = envlib.initial_state(cfg)
    states = [state]
    while not envlib.is_terminal(state, cfg):
        actions = envlib.valid_actions(state)
        state = envlib.step(state, actions[int(rng.integers(len(actions)))])
        states.append(state)
    return states


def reachable(dag, src):
    mat = dag.matrix()
    seen, stack = {src}, [src]
    while stack:
        u = stack.pop()
        for w in np.flatnonzero(mat[u]).tolist():
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen

"""DAG representation and cycle-inducing candidate tracking.

A :class:`CycleCandidateSet` holds the forbidden candidate edges of a DAG
(non-edges whose insertion would close a directed cycle) together with the
closed descendant/ancestor sets of every node. After an edge ``i -> j`` is
inserted, the new forbidden pairs are exactly the non-edges running from a
descendant of ``j`` to an ancestor of ``i``; :func:`cycle_set_update` applies
that rule with bitwise operations and no graph traversal.
"""

from __future__ import annotations

import graphlib
from typing import Iterable, Optional

import numpy as np

from . import kernels


class CycleError(ValueError):
    """Raised when a graph that must be acyclic contains a directed cycle."""


class Dag:
    """Directed acyclic graph on nodes ``0..d-1`` backed by adjacency bitsets.

    Instances are treated as immutable; operations that add edges return new
    objects.
    """

    __slots__ = ("d", "bits")

    def __init__(self, d: int, edges: Iterable[tuple[int, int]] = (), check: bool = True):
        if d < 1:
            raise ValueError(f"node count must be >= 1, got {d}")
        self.d = int(d)
        self.bits = np.zeros((self.d, kernels.n_words(self.d)), dtype=np.uint64)
        for i, j in edges:
            i, j = int(i), int(j)
            if not (0 <= i < d and 0 <= j < d):
                raise ValueError(f"edge ({i}, {j}) out of range for d={d}")
            if i == j:
                raise CycleError(f"self-loop on node {i}")
            self.bits[i, j >> 6] |= np.uint64(1) << np.uint64(j & 63)
        if check and not self.is_acyclic():
            raise CycleError("graph contains a directed cycle")

    @classmethod
    def from_bits(cls, bits: np.ndarray, copy: bool = True) -> "Dag":
        obj = cls.__new__(cls)
        obj.d = bits.shape[0]
        obj.bits = bits.copy() if copy else bits
        return obj

    @classmethod
    def from_matrix(cls, mat, check: bool = True) -> "Dag":
        mat = np.asarray(mat).astype(bool)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"adjacency matrix must be square, got {mat.shape}")
        if mat.diagonal().any():
            raise CycleError("self-loop in adjacency matrix")
        obj = cls.from_bits(kernels.pack_rows(mat), copy=False)
        if check and not obj.is_acyclic():
            raise CycleError("graph contains a directed cycle")
        return obj

    def matrix(self) -> np.ndarray:
        return kernels.unpack_rows(self.bits, self.d)

    @property
    def edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(self.matrix())
        return list(zip(rows.tolist(), cols.tolist()))

    @property
    def n_edges(self) -> int:
        return int(self.matrix().sum())

    def has_edge(self, i: int, j: int) -> bool:
        return bool((int(self.bits[i, j >> 6]) >> (j & 63)) & 1)

    def parents(self, i: int) -> tuple[int, ...]:
        return tuple(np.flatnonzero(self.matrix()[:, i]).tolist())

    def parent_sets(self) -> list[tuple[int, ...]]:
        mat = self.matrix()
        return [tuple(np.flatnonzero(mat[:, i]).tolist()) for i in range(self.d)]

    def out_degree(self, i: int) -> int:
        return int(self.matrix()[i].sum())

    def with_edge(self, i: int, j: int) -> "Dag":
        return Dag(self.d, self.edges + [(i, j)])

    def topological_order(self) -> list[int]:
        """Raises :class:`CycleError` if the graph is cyclic."""
        mat = self.matrix()
        sorter = graphlib.TopologicalSorter(
            {j: np.flatnonzero(mat[:, j]).tolist() for j in range(self.d)}
        )
        try:
            return list(sorter.static_order())
        except graphlib.CycleError as exc:
            raise CycleError("graph contains a directed cycle") from exc

    def is_acyclic(self) -> bool:
        try:
            self.topological_order()
        except CycleError:
            return False
        return True

    def __eq__(self, other):
        if not isinstance(other, Dag):
            return NotImplemented
        return self.d == other.d and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.d, self.bits.tobytes()))

    def __repr__(self):
        return f"Dag(d={self.d}, edges={self.edges})"


class CycleCandidateSet:
    """Forbidden candidate edges plus closed reachability sets, as bitsets.

    ``desc[v]`` and ``anc[v]`` include ``v`` itself. With ``naive=True`` the
    reachability sets are not kept (``None``) and the forbidden set is
    recomputed by per-candidate traversal on every update.
    """

    __slots__ = ("forbidden", "desc", "anc", "naive")

    def __init__(self, forbidden, desc, anc, naive=False):
        self.forbidden = forbidden
        self.desc = desc
        self.anc = anc
        self.naive = naive

    @property
    def d(self) -> int:
        return self.forbidden.shape[0]

    def copy(self) -> "CycleCandidateSet":
        return CycleCandidateSet(
            self.forbidden.copy(),
            None if self.desc is None else self.desc.copy(),
            None if self.anc is None else self.anc.copy(),
            self.naive,
        )

    def forbidden_pairs(self) -> set[tuple[int, int]]:
        rows, cols = np.nonzero(kernels.unpack_rows(self.forbidden, self.d))
        return set(zip(rows.tolist(), cols.tolist()))

    def descendants(self, v: int) -> set[int]:
        return _row_members(self.desc[v], self.d)

    def ancestors(self, v: int) -> set[int]:
        return _row_members(self.anc[v], self.d)


def _row_members(row, d):
    return set(np.flatnonzero(kernels.unpack_rows(row[None, :], d)[0]).tolist())


def _closure(dag: Dag) -> tuple[np.ndarray, np.ndarray]:
    """Closed descendant and ancestor bitsets, by reverse topological sweep."""
    mat = dag.matrix()
    reach = np.eye(dag.d, dtype=bool)
    for v in reversed(dag.topological_order()):
        for c in np.flatnonzero(mat[v]):
            reach[v] |= reach[c]
    return kernels.pack_rows(reach), kernels.pack_rows(reach.T)


def cycle_set_oracle(dag: Dag) -> set[tuple[int, int]]:
    """Cycle-inducing candidates by an explicit traversal per non-edge.

    ``x -> y`` closes a cycle iff ``x`` is reachable from ``y``.
    """
    if not dag.is_acyclic():
        raise CycleError("oracle requires an acyclic graph")
    succ = [[] for _ in range(dag.d)]
    for i, j in dag.edges:
        succ[i].append(j)
    out = set()
    for x in range(dag.d):
        for y in range(dag.d):
            if x == y or y in succ[x]:
                continue
            stack, seen = [y], {y}
            while stack:
                u = stack.pop()
                if u == x:
                    out.add((x, y))
                    break
                for w in succ[u]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
    return out


def cycle_set_init(
    dag: Dag, first_edge: Optional[tuple[int, int]] = None, naive: bool = False
) -> CycleCandidateSet:
    """Initial candidate set.

    With ``first_edge`` the result describes ``dag`` after that edge has been
    inserted. From an empty graph this is simply the reversed edge; otherwise
    the oracle is run once.
    """
    if not dag.is_acyclic():
        raise CycleError("cannot initialise candidates for a cyclic graph")
    if first_edge is not None:
        i, j = first_edge
        if i == j or dag.has_edge(i, j):
            raise ValueError(f"first edge {first_edge} is a self-loop or already present")
        target = dag if dag.n_edges else None
        dag = dag.with_edge(i, j)
        if target is None:
            forbidden = np.zeros_like(dag.bits)
            forbidden[j, i >> 6] |= np.uint64(1) << np.uint64(i & 63)
            return _finish(dag, forbidden, naive)
    forbidden = np.zeros_like(dag.bits)
    if dag.n_edges:
        pairs = cycle_set_oracle(dag)
        mat = np.zeros((dag.d, dag.d), dtype=bool)
        for x, y in pairs:
            mat[x, y] = True
        forbidden = kernels.pack_rows(mat)
    return _finish(dag, forbidden, naive)


def _finish(dag, forbidden, naive):
    if naive:
        return CycleCandidateSet(forbidden, None, None, naive=True)
    desc, anc = _closure(dag)
    return CycleCandidateSet(forbidden, desc, anc)


def cycle_set_update(
    ccs: CycleCandidateSet, dag_after: Dag, added_edge: tuple[int, int]
) -> CycleCandidateSet:
    """Candidate set after ``added_edge`` (already present in ``dag_after``)."""
    i, j = added_edge
    out = ccs.copy()
    adj = dag_after.bits.copy()
    if out.naive:
        kernels.naive_forbidden(adj, out.forbidden)
    else:
        kernels.add_edge_incremental(adj, out.desc, out.anc, out.forbidden, i, j)
    return out


def connectable(ccs: CycleCandidateSet, dag: Dag, i: int) -> set[int]:
    """Targets ``j != i`` whose edge ``i -> j`` would not close a cycle."""
    if not 0 <= i < dag.d:
        raise IndexError(f"node {i} out of range for d={dag.d}")
    blocked = _row_members(ccs.forbidden[i], ccs.d)
    return {j for j in range(dag.d) if j != i and j not in blocked}

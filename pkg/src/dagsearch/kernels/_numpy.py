"""Pure-numpy kernels (reference path, used when numba is disabled)."""

from functools import lru_cache

import numpy as np

_ONE = np.uint64(1)


def n_words(d):
    return (d + 63) >> 6


def unpack_rows(bits, d):
    """``(d, W)`` uint64 bitsets -> ``(d, d)`` bool matrix."""
    as_bytes = np.ascontiguousarray(bits, dtype="<u8").view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :d].astype(bool)


def pack_rows(mat):
    """``(r, d)`` bool matrix -> ``(r, W)`` uint64 bitsets."""
    mat = np.asarray(mat, dtype=bool)
    r, d = mat.shape
    w = n_words(d)
    padded = np.zeros((r, w * 64), dtype=bool)
    padded[:, :d] = mat
    packed = np.packbits(padded, axis=1, bitorder="little")
    return packed.view("<u8").astype(np.uint64)


@lru_cache(maxsize=64)
def _masks(d):
    full = pack_rows(np.ones((1, d), dtype=bool))[0]
    not_self = pack_rows(~np.eye(d, dtype=bool))
    full.setflags(write=False)
    not_self.setflags(write=False)
    return full, not_self


def _members(row, d):
    return np.flatnonzero(unpack_rows(row[None, :], d)[0])


def _free(adj, forb):
    full, not_self = _masks(adj.shape[0])
    return ~(forb | adj) & full & not_self


def add_edge_incremental(adj, desc, anc, forb, i, j):
    """Insert ``i -> j`` and fold the newly cycle-inducing pairs into ``forb``.

    Every ancestor of ``i`` gains the descendants of ``j`` and vice versa;
    each descendant ``x`` of ``j`` may no longer point at any ancestor of ``i``.
    """
    d = adj.shape[0]
    adj[i, j >> 6] |= _ONE << np.uint64(j & 63)
    de_j = desc[j].copy()
    an_i = anc[i].copy()
    up = _members(an_i, d)
    down = _members(de_j, d)
    desc[up] |= de_j
    anc[down] |= an_i
    forb[down] |= an_i & ~adj[down]


def _reaches(succ, src, dst):
    d = succ.shape[0]
    seen = np.zeros(d, dtype=bool)
    seen[src] = True
    frontier = seen.copy()
    while frontier.any():
        if seen[dst]:
            return True
        nxt = succ[frontier].any(axis=0) & ~seen
        seen |= nxt
        frontier = nxt
    return bool(seen[dst])


def naive_forbidden(adj, forb):
    """Recompute ``forb`` from scratch with one traversal per candidate edge."""
    d = adj.shape[0]
    succ = unpack_rows(adj, d)
    out = np.zeros((d, d), dtype=bool)
    for x in range(d):
        for y in range(d):
            if x == y or succ[x, y]:
                continue
            # x -> y closes a cycle iff y already reaches x
            out[x, y] = _reaches(succ, y, x)
    forb[:] = pack_rows(out)


def avail_stubs(adj, forb):
    return np.flatnonzero(_free(adj, forb).any(axis=1))


def avail_targets(adj, forb, k):
    full, not_self = _masks(adj.shape[0])
    row = ~(forb[k] | adj[k]) & full & not_self[k]
    return _members(row, adj.shape[0])


def has_valid_action(adj, forb, stub):
    if stub < 0:
        return bool(_free(adj, forb).any())
    return avail_targets(adj, forb, stub).size > 0


def _pick(options, u):
    k = min(int(u * options.size), options.size - 1)
    return int(options[k])


def rollout(adj, desc, anc, forb, stub, n_steps, uniforms, naive, actions_out):
    """Uniform random play for up to ``n_steps`` MDP steps, in place.

    Returns ``(steps_taken, stub)``; stops early when no action is valid.
    """
    taken = 0
    for s in range(n_steps):
        if stub < 0:
            options = avail_stubs(adj, forb)
            if options.size == 0:
                break
            stub = _pick(options, uniforms[s])
            actions_out[s] = stub
        else:
            options = avail_targets(adj, forb, stub)
            if options.size == 0:
                break
            target = _pick(options, uniforms[s])
            actions_out[s] = target
            if naive:
                adj[stub, target >> 6] |= _ONE << np.uint64(target & 63)
                naive_forbidden(adj, forb)
            else:
                add_edge_incremental(adj, desc, anc, forb, stub, target)
            stub = -1
        taken += 1
    return taken, stub

"""numba-compiled kernels; same signatures and results as ``_numpy``."""

import numpy as np
from numba import njit

_ONE = np.uint64(1)
_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, inline="always")
def _bit(row, k):
    return (row[k >> 6] >> np.uint64(k & 63)) & _ONE


@njit(cache=True, inline="always")
def _set(row, k):
    row[k >> 6] |= _ONE << np.uint64(k & 63)


@njit(cache=True)
def _word_mask(d, w):
    rem = d - 64 * w
    if rem >= 64:
        return _ALL
    return (_ONE << np.uint64(rem)) - _ONE


@njit(cache=True)
def add_edge_incremental(adj, desc, anc, forb, i, j):
    d, nw = adj.shape
    _set(adj[i], j)
    de_j = desc[j].copy()
    an_i = anc[i].copy()
    for a in range(d):
        if _bit(an_i, a):
            for w in range(nw):
                desc[a, w] |= de_j[w]
    for x in range(d):
        if _bit(de_j, x):
            for w in range(nw):
                anc[x, w] |= an_i[w]
                forb[x, w] |= an_i[w] & ~adj[x, w]


@njit(cache=True)
def naive_forbidden(adj, forb):
    d, nw = adj.shape
    # CSR successor lists
    ptr = np.zeros(d + 1, dtype=np.int64)
    for x in range(d):
        c = 0
        for y in range(d):
            if _bit(adj[x], y):
                c += 1
        ptr[x + 1] = ptr[x] + c
    succ = np.empty(ptr[d], dtype=np.int64)
    for x in range(d):
        p = ptr[x]
        for y in range(d):
            if _bit(adj[x], y):
                succ[p] = y
                p += 1
    forb[:, :] = 0
    seen = np.zeros(d, dtype=np.bool_)
    stack = np.empty(d, dtype=np.int64)
    for x in range(d):
        for y in range(d):
            if x == y or _bit(adj[x], y):
                continue
            # x -> y closes a cycle iff y already reaches x
            seen[:] = False
            seen[y] = True
            stack[0] = y
            top = 1
            found = False
            while top > 0 and not found:
                top -= 1
                v = stack[top]
                for p in range(ptr[v], ptr[v + 1]):
                    u = succ[p]
                    if u == x:
                        found = True
                        break
                    if not seen[u]:
                        seen[u] = True
                        stack[top] = u
                        top += 1
            if found:
                _set(forb[x], y)


@njit(cache=True)
def _free_word(adj, forb, k, w, d):
    word = ~(forb[k, w] | adj[k, w]) & _word_mask(d, w)
    if (k >> 6) == w:
        word &= ~(_ONE << np.uint64(k & 63))
    return word


@njit(cache=True)
def _stub_ok(adj, forb, k, d):
    for w in range(adj.shape[1]):
        if _free_word(adj, forb, k, w, d) != 0:
            return True
    return False


@njit(cache=True)
def _count_targets(adj, forb, k, d):
    c = 0
    for w in range(adj.shape[1]):
        word = _free_word(adj, forb, k, w, d)
        while word:
            word &= word - _ONE
            c += 1
    return c


@njit(cache=True)
def avail_stubs(adj, forb):
    d = adj.shape[0]
    out = np.empty(d, dtype=np.int64)
    c = 0
    for k in range(d):
        if _stub_ok(adj, forb, k, d):
            out[c] = k
            c += 1
    return out[:c]


@njit(cache=True)
def avail_targets(adj, forb, k):
    d = adj.shape[0]
    out = np.empty(d, dtype=np.int64)
    c = 0
    for y in range(d):
        if y != k and not _bit(forb[k], y) and not _bit(adj[k], y):
            out[c] = y
            c += 1
    return out[:c]


@njit(cache=True)
def has_valid_action(adj, forb, stub):
    d = adj.shape[0]
    if stub >= 0:
        return _stub_ok(adj, forb, stub, d)
    for k in range(d):
        if _stub_ok(adj, forb, k, d):
            return True
    return False


@njit(cache=True)
def _pick_index(u, count):
    k = np.int64(u * count)
    if k > count - 1:
        k = count - 1
    return k


@njit(cache=True)
def rollout(adj, desc, anc, forb, stub, n_steps, uniforms, naive, actions_out):
    d = adj.shape[0]
    taken = 0
    for s in range(n_steps):
        if stub < 0:
            count = 0
            for k in range(d):
                if _stub_ok(adj, forb, k, d):
                    count += 1
            if count == 0:
                break
            want = _pick_index(uniforms[s], count)
            for k in range(d):
                if _stub_ok(adj, forb, k, d):
                    if want == 0:
                        stub = k
                        break
                    want -= 1
            actions_out[s] = stub
        else:
            count = _count_targets(adj, forb, stub, d)
            if count == 0:
                break
            want = _pick_index(uniforms[s], count)
            target = -1
            for y in range(d):
                if y != stub and not _bit(forb[stub], y) and not _bit(adj[stub], y):
                    if want == 0:
                        target = y
                        break
                    want -= 1
            actions_out[s] = target
            if naive:
                _set(adj[stub], target)
                naive_forbidden(adj, forb)
            else:
                add_edge_incremental(adj, desc, anc, forb, stub, target)
            stub = -1
        taken += 1
    return taken, stub

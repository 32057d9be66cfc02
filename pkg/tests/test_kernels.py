import subprocess
import sys

import numpy as np
import pytest

from dagsearch import kernels
from dagsearch.dag_space import Dag, _closure, cycle_set_init, cycle_set_oracle

from helpers import random_dag

impls = [kernels.numpy_impl]
if kernels.numba_impl is not None:
    impls.append(kernels.numba_impl)


@pytest.mark.parametrize("d", [1, 5, 63, 64, 65, 130])
def test_pack_roundtrip(d):
    rng = np.random.default_rng(d)
    mat = rng.random((d, d)) < 0.3
    bits = kernels.pack_rows(mat)
    assert bits.shape == (d, kernels.n_words(d))
    assert np.array_equal(kernels.unpack_rows(bits, d), mat)


def test_bit_layout():
    mat = np.zeros((70, 70), dtype=bool)
    mat[3, 66] = True
    bits = kernels.pack_rows(mat)
    assert bits[3, 1] == np.uint64(1) << np.uint64(2)


@pytest.mark.parametrize("impl", impls, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@pytest.mark.parametrize("d", [4, 9, 70])
def test_incremental_and_naive_agree_with_oracle(impl, d):
    rng = np.random.default_rng(d)
    dag = random_dag(rng, d, p=0.05 if d > 20 else 0.3)
    forb_set = cycle_set_oracle(dag)
    mat = dag.matrix()
    pairs = [(x, y) for x in range(d) for y in range(d)
             if x != y and not mat[x, y] and (x, y) not in forb_set]
    x, y = pairs[int(rng.integers(len(pairs)))]
    mat[x, y] = True
    after = Dag.from_matrix(mat)
    expected = cycle_set_oracle(after)

    ccs = cycle_set_init(dag)
    adj = after.bits.copy()
    impl.add_edge_incremental(adj, ccs.desc, ccs.anc, ccs.forbidden, x, y)
    assert _pairs(ccs.forbidden, d) == expected
    desc, anc = _closure(after)
    assert np.array_equal(ccs.desc, desc) and np.array_equal(ccs.anc, anc)

    forb = cycle_set_init(dag).forbidden
    impl.naive_forbidden(after.bits.copy(), forb)
    assert _pairs(forb, d) == expected


def _pairs(bits, d):
    rows, cols = np.nonzero(kernels.unpack_rows(bits, d))
    return set(zip(rows.tolist(), cols.tolist()))


@pytest.mark.skipif(kernels.numba_impl is None, reason="numba unavailable")
@pytest.mark.parametrize("d", [3, 12, 66])
@pytest.mark.parametrize("naive", [False, True])
def test_rollout_parity(d, naive):
    rng = np.random.default_rng(7 * d)
    for trial in range(20):
        dag = random_dag(rng, d, p=0.1)
        ccs = cycle_set_init(dag)
        stub = -1
        if trial % 2:
            stubs = kernels.numpy_impl.avail_stubs(dag.bits, ccs.forbidden)
            if len(stubs):
                stub = int(stubs[0])
        n_steps = int(rng.integers(0, 2 * d))
        uniforms = rng.random(n_steps)
        outs = []
        for impl in (kernels.numpy_impl, kernels.numba_impl):
            adj, forb = dag.bits.copy(), ccs.forbidden.copy()
            desc, anc = ccs.desc.copy(), ccs.anc.copy()
            actions = np.full(n_steps, -1, dtype=np.int64)
            taken, last = impl.rollout(adj, desc, anc, forb, stub, n_steps, uniforms, naive, actions)
            outs.append((int(taken), int(last), actions.tolist(), adj.tobytes(), forb.tobytes()))
            if not naive:
                outs[-1] += (desc.tobytes(), anc.tobytes())
        assert outs[0] == outs[1]


@pytest.mark.skipif(kernels.numba_impl is None, reason="numba unavailable")
def test_action_queries_parity():
    rng = np.random.default_rng(0)
    for d in (2, 5, 40, 70):
        for _ in range(10):
            dag = random_dag(rng, d, p=0.6)
            forb = cycle_set_init(dag).forbidden
            a = kernels.numpy_impl.avail_stubs(dag.bits, forb)
            b = kernels.numba_impl.avail_stubs(dag.bits, forb)
            assert a.tolist() == b.tolist()
            for k in range(d):
                assert (kernels.numpy_impl.avail_targets(dag.bits, forb, k).tolist()
                        == kernels.numba_impl.avail_targets(dag.bits, forb, k).tolist())
            for stub in [-1] + list(range(d)):
                assert (kernels.numpy_impl.has_valid_action(dag.bits, forb, stub)
                        == kernels.numba_impl.has_valid_action(dag.bits, forb, stub))


def test_env_flag_selects_numpy():
    code = "from dagsearch import kernels; print(kernels.USE_NUMBA)"
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True,
        env={"DAGSEARCH_DISABLE_NUMBA": "1", "PATH": ""}, check=True,
    )
    assert out.stdout.strip() == "False"

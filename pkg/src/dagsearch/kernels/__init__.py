"""Bitset kernels for DAG construction.

Adjacency, reachability and forbidden-edge sets are stored as ``(d, W)``
arrays of ``uint64`` words, ``W = ceil(d / 64)``; row ``v`` holds the bitset
of nodes related to ``v`` (bit ``u`` lives in word ``u >> 6``).

Two interchangeable implementations exist: numba-compiled loops and a pure
numpy path. The numba path is used when numba imports and the environment
variable ``DAGSEARCH_DISABLE_NUMBA`` is unset (or ``0``). Both consume the
same random uniforms, so results are identical across paths.
"""

import os

from . import _numpy as numpy_impl

__all__ = [
    "USE_NUMBA",
    "numpy_impl",
    "numba_impl",
    "n_words",
    "pack_rows",
    "unpack_rows",
    "add_edge_incremental",
    "naive_forbidden",
    "avail_stubs",
    "avail_targets",
    "has_valid_action",
    "rollout",
]


def _numba_requested():
    flag = os.environ.get("DAGSEARCH_DISABLE_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no")


numba_impl = None
if _numba_requested():
    try:
        from . import _numba as numba_impl
    except ImportError:  # pragma: no cover - numba missing
        numba_impl = None

USE_NUMBA = numba_impl is not None
_impl = numba_impl if USE_NUMBA else numpy_impl

n_words = numpy_impl.n_words
pack_rows = numpy_impl.pack_rows
unpack_rows = numpy_impl.unpack_rows

add_edge_incremental = _impl.add_edge_incremental
naive_forbidden = _impl.naive_forbidden
avail_stubs = _impl.avail_stubs
avail_targets = _impl.avail_targets
has_valid_action = _impl.has_valid_action
rollout = _impl.rollout

"""BIC scores over DAGs from per-node regression residuals.

Both variants are sums of per-node terms plus ``m log n``::

    DV(G) = sum_i n log(RSS_i / n) + m log n
    EV(G) = n d log(sum_i RSS_i / (n d)) + m log n

``RSS_i`` comes from regressing column ``i`` on its parents; it depends on
the parent set only, so it is memoised in a :class:`ScoreCache`.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist, pdist

from .dag_space import Dag

KINDS = ("DV", "EV")
BACKENDS = ("linear", "quadratic", "gaussian_process")

# RSS is floored at RSS_FLOOR * n before taking logs
RSS_FLOOR = 1e-8


class ScoringError(RuntimeError):
    pass


@dataclass
class ObservationDataset:
    data: np.ndarray
    column_names: Optional[list[str]] = None
    truth: Optional[Dag] = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"data must be a non-empty n x d matrix, got shape {data.shape}")
        if not np.isfinite(data).all():
            raise ValueError("data contains NaN or infinite entries")
        self.data = np.ascontiguousarray(data)
        if self.column_names is None:
            self.column_names = [f"x{i}" for i in range(data.shape[1])]
        elif len(self.column_names) != data.shape[1]:
            raise ValueError("column_names length does not match the number of columns")
        if self.truth is not None and self.truth.d != data.shape[1]:
            raise ValueError("ground-truth DAG size does not match the data")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def standardized(self) -> "ObservationDataset":
        sd = self.data.std(axis=0)
        sd[sd == 0] = 1.0
        z = (self.data - self.data.mean(axis=0)) / sd
        return ObservationDataset(z, list(self.column_names), self.truth)


@dataclass(frozen=True)
class ScoreFunctionKind:
    kind: str = "DV"
    backend: str = "linear"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown score kind {self.kind!r}; expected one of {KINDS}")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; expected one of {BACKENDS}")


class ScoreCache:
    """RSS values keyed by ``(node, sorted parent tuple)``; never invalidated."""

    def __init__(self):
        self._store: dict[tuple[int, tuple[int, ...]], float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key):
        value = self._store.get(key)
        if value is None:
            self.misses += 1
        else:
            self.hits += 1
        return value

    def put(self, key, value: float) -> float:
        if not value >= 0:
            raise ScoringError(f"RSS for {key} is {value}")
        with self._lock:
            return self._store.setdefault(key, value)

    def __len__(self):
        return len(self._store)


def quadratic_features(x: np.ndarray) -> np.ndarray:
    """Intercept, linear terms and all products ``p * q`` with ``p <= q``."""
    n, k = x.shape
    cols = [np.ones(n)]
    cols.extend(x[:, p] for p in range(k))
    for p in range(k):
        for q in range(p, k):
            cols.append(x[:, p] * x[:, q])
    return np.column_stack(cols)


def _lstsq_rss(design, y):
    # normal equations are several times faster than an SVD solve at these
    # shapes (n rows, a handful of columns); singular designs fall back
    gram = design.T @ design
    try:
        factor = cho_factor(gram, check_finite=False)
        pivots = np.diag(factor[0]) ** 2
        if pivots.min() < 1e-10 * gram.diagonal().max():
            raise np.linalg.LinAlgError("near-singular design")
        coef = cho_solve(factor, design.T @ y, check_finite=False)
    except np.linalg.LinAlgError:
        coef = np.linalg.lstsq(design, y, rcond=None)[0]
    resid = y - design @ coef
    return float(resid @ resid)


def _gp_rss(x, y, noise_ratio, jitter):
    sample = x[:2000]
    dists = pdist(sample)
    scale = float(np.median(dists)) if dists.size else 1.0
    if scale <= 0:
        scale = 1.0
    gram = np.exp(-cdist(x, x, "sqeuclidean") / (2 * scale**2))
    yc = y - y.mean()
    noise = noise_ratio * float(yc @ yc) / len(y)
    factor = cho_factor(gram + (noise + jitter) * np.eye(len(y)), lower=True)
    fitted = gram @ cho_solve(factor, yc)
    resid = yc - fitted
    return float(resid @ resid)


def fit_rss(
    data: np.ndarray,
    node: int,
    parents: Sequence[int],
    backend: str = "linear",
    gp_noise_ratio: float = 0.1,
    gp_jitter: float = 1e-6,
) -> float:
    """Uncached residual sum of squares of ``data[:, node]`` given ``parents``."""
    y = data[:, node]
    if not parents:
        yc = y - y.mean()
        return float(yc @ yc)
    x = data[:, list(parents)]
    if backend == "linear":
        return _lstsq_rss(np.column_stack([np.ones(len(y)), x]), y)
    if backend == "quadratic":
        return _lstsq_rss(quadratic_features(x), y)
    if backend == "gaussian_process":
        return _gp_rss(x, y, gp_noise_ratio, gp_jitter)
    raise ValueError(f"unknown backend {backend!r}")


def node_term(rss: float, n: int, kind: str) -> float:
    """Per-node summand: ``n log(RSS/n)`` for DV, the raw RSS for EV."""
    if kind == "DV":
        return n * math.log(max(rss, RSS_FLOOR * n) / n)
    return rss


def combine_terms(terms: Sequence[float], m: int, n: int, kind: str) -> float:
    """Score from per-node terms.

    ``math.fsum`` is exactly rounded, so the result does not depend on how
    the term list was assembled.
    """
    try:
        total = math.fsum(terms)
    except OverflowError as exc:
        raise ScoringError("score overflow") from exc
    if kind == "EV":
        d = len(terms)
        total = n * d * math.log(max(total, RSS_FLOOR * n) / (n * d))
    total += m * math.log(n)
    if not math.isfinite(total):
        raise ScoringError(f"non-finite score {total}")
    return total


def combine(rss: Sequence[float], m: int, n: int, kind: str) -> float:
    return combine_terms([node_term(r, n, kind) for r in rss], m, n, kind)


class Scorer:
    """Scores DAGs against one dataset with a fixed score kind and backend.

    ``n_evaluations`` counts whole-graph score computations.
    """

    def __init__(
        self,
        dataset: ObservationDataset,
        kind: str | ScoreFunctionKind = "DV",
        backend: str = "linear",
        cache: Optional[ScoreCache] = None,
        gp_noise_ratio: float = 0.1,
        gp_jitter: float = 1e-6,
    ):
        if isinstance(kind, ScoreFunctionKind):
            self.kind = kind
        else:
            self.kind = ScoreFunctionKind(kind, backend)
        self.dataset = dataset
        self.cache = cache if cache is not None else ScoreCache()
        self.gp_noise_ratio = gp_noise_ratio
        self.gp_jitter = gp_jitter
        self.n_evaluations = 0
        self._terms: dict[tuple[int, tuple[int, ...]], float] = {}

    def node_rss(self, node: int, parents: Sequence[int]) -> float:
        key = (int(node), tuple(sorted(int(p) for p in parents)))
        if node in key[1]:
            raise ValueError(f"node {node} listed among its own parents")
        if len(set(key[1])) != len(key[1]):
            raise ValueError(f"duplicate parents for node {node}: {parents}")
        return self._cached_rss(key)

    def _cached_rss(self, key):
        value = self.cache.get(key)
        if value is None:
            value = fit_rss(
                self.dataset.data, key[0], key[1], self.kind.backend,
                self.gp_noise_ratio, self.gp_jitter,
            )
            value = self.cache.put(key, value)
        return value

    def node_term(self, node: int, parents: tuple[int, ...]) -> float:
        """Score summand of ``node`` with the sorted parent tuple ``parents``."""
        key = (node, parents)
        term = self._terms.get(key)
        if term is None:
            term = node_term(self._cached_rss(key), self.dataset.n, self.kind.kind)
            self._terms[key] = term
        return term

    def parent_sets(self, dag: Dag) -> list[tuple[int, ...]]:
        nodes, parents = np.nonzero(dag.matrix().T)
        bounds = np.searchsorted(nodes, np.arange(dag.d + 1)).tolist()
        parents = parents.tolist()
        return [tuple(parents[bounds[i]:bounds[i + 1]]) for i in range(dag.d)]

    def terms(self, parent_sets: Sequence[tuple[int, ...]]) -> list[float]:
        return [self.node_term(i, pa) for i, pa in enumerate(parent_sets)]

    def rss_vector(self, dag: Dag) -> list[float]:
        return [self._cached_rss((i, pa)) for i, pa in enumerate(self.parent_sets(dag))]

    def combine(self, rss: Sequence[float], m: int) -> float:
        return combine(rss, m, self.dataset.n, self.kind.kind)

    def total(self, terms: Sequence[float], m: int) -> float:
        """Score from precomputed node terms; counts as one evaluation."""
        self.n_evaluations += 1
        return combine_terms(terms, m, self.dataset.n, self.kind.kind)

    def score(self, dag: Dag) -> float:
        if dag.d != self.dataset.d:
            raise ValueError(f"DAG has {dag.d} nodes but data has {self.dataset.d} columns")
        return self.total(self.terms(self.parent_sets(dag)), dag.n_edges)

    def reward(self, dag: Dag) -> float:
        return -self.score(dag)


def node_rss(dataset, node, parents, backend="linear", cache: Optional[ScoreCache] = None) -> float:
    return Scorer(dataset, "DV", backend, cache=cache).node_rss(node, parents)


def score(dataset, dag, kind: ScoreFunctionKind, cache: Optional[ScoreCache] = None) -> float:
    return Scorer(dataset, kind, cache=cache).score(dag)


def reward_of(dataset, dag, kind: ScoreFunctionKind, cache: Optional[ScoreCache] = None) -> float:
    return -score(dataset, dag, kind, cache)

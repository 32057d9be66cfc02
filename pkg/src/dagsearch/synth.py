"""Synthetic Erdős–Rényi DAGs and additive-noise SEM data."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .dag_space import Dag
from .scoring import ObservationDataset

MECHANISMS = ("linear", "quadratic", "gp_sample")

# exact GP draws up to this many samples, random Fourier features above
GP_EXACT_LIMIT = 2000


def sample_er_dag(
    d: int,
    edge_count: Optional[int] = None,
    edge_prob: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
) -> Dag:
    """Random DAG consistent with a uniformly drawn topological order."""
    if (edge_count is None) == (edge_prob is None):
        raise ValueError("give exactly one of edge_count and edge_prob")
    rng = rng if rng is not None else np.random.default_rng()
    order = rng.permutation(d)
    lo, hi = np.triu_indices(d, k=1)
    n_pairs = lo.size
    if edge_count is not None:
        if not 0 <= edge_count <= n_pairs:
            raise ValueError(f"edge_count {edge_count} outside [0, {n_pairs}] for d={d}")
        chosen = rng.choice(n_pairs, size=edge_count, replace=False)
    else:
        if not 0.0 <= edge_prob <= 1.0:
            raise ValueError(f"edge_prob {edge_prob} outside [0, 1]")
        chosen = np.flatnonzero(rng.random(n_pairs) < edge_prob)
    mat = np.zeros((d, d), dtype=bool)
    mat[order[lo[chosen]], order[hi[chosen]]] = True
    return Dag.from_matrix(mat)


@dataclass(frozen=True)
class SemSpec:
    dag: Dag
    mechanism: str = "linear"
    noise_std: float = 1.0
    weight_range: tuple[float, float] = (0.5, 2.0)
    gp_length_scale: float = 1.0
    gp_features: int = 500

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}; expected one of {MECHANISMS}")
        if not self.noise_std > 0:
            raise ValueError("noise_std must be positive")


def _signed_uniform(rng, size, lo, hi):
    return rng.uniform(lo, hi, size) * rng.choice([-1.0, 1.0], size)


def _standardize(x):
    sd = x.std(axis=0)
    sd[sd == 0] = 1.0
    return (x - x.mean(axis=0)) / sd


def _gp_draw(z, spec, rng):
    n = z.shape[0]
    ell = spec.gp_length_scale
    if n <= GP_EXACT_LIMIT:
        gram = np.exp(-cdist(z, z, "sqeuclidean") / (2 * ell**2))
        chol = np.linalg.cholesky(gram + 1e-6 * np.eye(n))
        return chol @ rng.standard_normal(n)
    # random Fourier features for the same RBF kernel
    k = spec.gp_features
    omega = rng.standard_normal((z.shape[1], k)) / ell
    phase = rng.uniform(0, 2 * np.pi, k)
    feats = np.sqrt(2.0 / k) * np.cos(z @ omega + phase)
    return feats @ rng.standard_normal(k)


def _mechanism(x_pa, spec, rng):
    k = x_pa.shape[1]
    lo, hi = spec.weight_range
    if spec.mechanism == "linear":
        return x_pa @ _signed_uniform(rng, k, lo, hi)
    z = _standardize(x_pa)
    if spec.mechanism == "quadratic":
        out = z @ _signed_uniform(rng, k, lo, hi)
        for p in range(k):
            for q in range(p, k):
                if rng.random() < 0.5:
                    out += _signed_uniform(rng, 1, lo, hi)[0] * z[:, p] * z[:, q]
        return out
    return _gp_draw(z, spec, rng)


def sample_data(spec: SemSpec, n: int, rng: np.random.Generator) -> ObservationDataset:
    """Draw ``n`` samples, each variable a function of its parents plus Gaussian noise.

    Quadratic and GP mechanisms act on standardised parent values so that
    magnitudes stay bounded along long chains.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    dag = spec.dag
    x = np.zeros((n, dag.d))
    parents = dag.parent_sets()
    for v in dag.topological_order():
        noise = rng.normal(0.0, spec.noise_std, n)
        if parents[v]:
            x[:, v] = _mechanism(x[:, list(parents[v])], spec, rng) + noise
        else:
            x[:, v] = noise
    return ObservationDataset(x, truth=dag)

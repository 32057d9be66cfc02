"""Structure-recovery metrics and significance-based edge pruning."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .dag_space import Dag
from .scoring import RSS_FLOOR, quadratic_features

DEFAULT_SIGNIFICANCE = 0.001


@dataclass(frozen=True)
class GraphMetrics:
    tpr: float
    fdr: float
    shd: int
    true_positives: int
    false_positives: int
    false_negatives: int
    reversed: int

    def as_dict(self):
        return asdict(self)


def compute_metrics(predicted: Dag, truth: Dag) -> GraphMetrics:
    """TPR, FDR and SHD of ``predicted`` against ``truth``.

    A reversed edge is one false discovery and one unit of SHD. FDR of an
    empty prediction is 0; TPR against an empty truth is 1.
    """
    if predicted.d != truth.d:
        raise ValueError(f"node counts differ: {predicted.d} vs {truth.d}")
    p = predicted.matrix()
    t = truth.matrix()
    tp = int((p & t).sum())
    fp = int((p & ~t).sum())
    fn = int((t & ~p).sum())
    rev = int((p & t.T).sum())
    n_pred, n_true = tp + fp, tp + fn
    # pairwise: any difference in the {none, i->j, j->i} state of a pair costs 1
    upper = np.triu(np.ones_like(p), k=1)
    shd = int((((p != t) | (p.T != t.T)) & upper).sum())
    return GraphMetrics(
        tpr=tp / n_true if n_true else 1.0,
        fdr=fp / n_pred if n_pred else 0.0,
        shd=shd,
        true_positives=tp,
        false_positives=fp,
        false_negatives=fn,
        reversed=rev,
    )


def _ols(design, y):
    coef = np.linalg.lstsq(design, y, rcond=None)[0]
    resid = y - design @ coef
    rss = max(float(resid @ resid), RSS_FLOOR * len(y))
    return coef, rss


def _linear_keep(x, y, alpha):
    n, k = x.shape
    design = np.column_stack([np.ones(n), x])
    dof = n - k - 1
    if dof <= 0:
        return np.ones(k, dtype=bool)
    coef, rss = _ols(design, y)
    cov = (rss / dof) * np.linalg.pinv(design.T @ design)
    se = np.sqrt(np.maximum(np.diag(cov)[1:], 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = np.abs(coef[1:]) / se
    tstat = np.where(se > 0, tstat, np.where(coef[1:] != 0, np.inf, 0.0))
    pvals = 2 * stats.t.sf(tstat, dof)
    return pvals < alpha


def _quadratic_keep(x, y, alpha):
    n, k = x.shape
    full = quadratic_features(x)
    dof = n - np.linalg.matrix_rank(full)
    if dof <= 0:
        return np.ones(k, dtype=bool)
    _, rss_full = _ols(full, y)
    keep = np.ones(k, dtype=bool)
    for p in range(k):
        others = [q for q in range(k) if q != p]
        reduced = quadratic_features(x[:, others])
        extra = full.shape[1] - reduced.shape[1]
        _, rss_red = _ols(reduced, y)
        f = ((rss_red - rss_full) / extra) / (rss_full / dof)
        keep[p] = stats.f.sf(max(f, 0.0), extra, dof) < alpha
    return keep


def prune(dataset, dag: Dag, significance: float = DEFAULT_SIGNIFICANCE, backend: str = "linear") -> Dag:
    """Drop parent edges that are not significant at ``significance``.

    Linear backend: two-sided t-test on each OLS coefficient. Quadratic and
    GP backends: partial F-test removing all quadratic terms involving the
    parent. All tests for a node use the same full-parent fit.
    """
    if not 0 < significance < 1:
        raise ValueError("significance must lie in (0, 1)")
    data = dataset.data
    keep_mat = dag.matrix().copy()
    for i, parents in enumerate(dag.parent_sets()):
        if not parents:
            continue
        x = data[:, list(parents)]
        y = data[:, i]
        if backend == "linear":
            keep = _linear_keep(x, y, significance)
        else:
            keep = _quadratic_keep(x, y, significance)
        for p, k in zip(parents, keep):
            keep_mat[p, i] = bool(k)
    return Dag.from_matrix(keep_mat, check=False)

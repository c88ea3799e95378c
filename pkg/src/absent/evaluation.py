"""Cosine k-NN retrieval, precision@k, and the two closed-form linear baselines."""

from __future__ import annotations

import csv
import io
import logging
import os
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import GanModel, normalize_rows, project_corpus
from .numerics import DTYPE

log = logging.getLogger(__name__)

RIDGE_COND = 1e12


@dataclass
class RetrievalIndex:
    targets: np.ndarray
    ids: list

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=DTYPE)
        if len(self.ids) != len(self.targets):
            raise ValueError("one id per target row required")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("retrieval ids must be unique")
        norms = np.linalg.norm(self.targets, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("retrieval targets must be unit rows")

    def __len__(self):
        return len(self.ids)


def _distances(queries: np.ndarray, targets: np.ndarray) -> np.ndarray:
    q = normalize_rows(np.atleast_2d(np.asarray(queries, dtype=DTYPE)))
    return 1.0 - q @ targets.T


def knn_retrieve(query: np.ndarray, index: RetrievalIndex, k: int) -> list:
    """Ids of the ``k`` targets nearest to ``query`` in cosine distance; ties go to the lower row."""
    if not 0 < k <= len(index):
        raise ValueError(f"k={k} must be in [1, {len(index)}]")
    d = _distances(query, index.targets)[0]
    order = np.argsort(d, kind="stable")[:k]
    return [index.ids[i] for i in order]


def ground_truth_ranks(queries: np.ndarray, targets: np.ndarray, truth: np.ndarray, threads: int | None = None) -> np.ndarray:
    """1-based rank of ``targets[truth[i]]`` for each query under the same ordering as :func:`knn_retrieve`."""
    from threadpoolctl import threadpool_limits

    if threads is None:
        env = os.environ.get("ABSENT_THREADS")
        threads = int(env) if env else None
    with threadpool_limits(limits=threads):
        d = _distances(queries, targets)
    truth = np.asarray(truth)
    rows = np.arange(len(truth))
    td = d[rows, truth][:, None]
    cols = np.arange(d.shape[1])[None, :]
    ahead = (d < td) | ((d == td) & (cols < truth[:, None]))
    return ahead.sum(axis=1) + 1


def precision_at_k(ranks: Sequence[int], k: int) -> float:
    ranks = np.asarray(ranks)
    if ranks.size == 0:
        raise ValueError("precision@k over an empty query set")
    if np.any(ranks < 1):
        raise ValueError("ranks are 1-based")
    return float(np.mean(ranks <= k))


@dataclass
class EvalReport:
    direction: str
    precision: dict[int, float]
    n_queries: int
    pool_size: int
    ranks: np.ndarray = field(repr=False, default=None)

    def rows(self) -> list[tuple]:
        return [(self.direction, k, self.precision[k], self.n_queries, self.pool_size) for k in sorted(self.precision)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["direction", "k", "precision", "n_queries", "pool_size"])
        for direction, k, p, n, pool in self.rows():
            w.writerow([direction, k, repr(p), n, pool])
        return buf.getvalue()

    def table(self) -> str:
        lines = [f"{'direction':<10} {'k':>4} {'P@k':>8} {'queries':>8} {'pool':>8}"]
        for direction, k, p, n, pool in self.rows():
            lines.append(f"{direction:<10} {k:>4} {p:>8.4f} {n:>8} {pool:>8}")
        return "\n".join(lines)


def _as_mapper(mapping, direction: str) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(mapping, GanModel):
        d = {"x2y": "x_to_y", "y2x": "y_to_x", "x1_to_x2": "x_to_y"}.get(direction, direction)
        return lambda m: project_corpus(mapping, m, d)
    if callable(mapping):
        return mapping
    W = np.asarray(mapping, dtype=DTYPE)
    return lambda m: m @ W.T


def evaluate(mapping, queries: np.ndarray, targets: np.ndarray, truth=None, ks=(1, 5, 10), direction: str = "x2y", candidates: np.ndarray | None = None) -> EvalReport:
    """Retrieve every mapped query among ``targets`` and score precision@k.

    ``mapping`` is a :class:`GanModel` (projected in eval mode along ``direction``),
    a ``(d, d)`` linear map applied as ``q @ W.T``, or any row-wise callable.
    ``truth[i]`` is the target row of query ``i`` (defaults to ``i``).
    ``candidates`` overrides the pool with already-mapped target rows (zero-shot use).
    """
    queries = np.asarray(queries, dtype=DTYPE)
    pool = np.asarray(targets if candidates is None else candidates, dtype=DTYPE)
    truth = np.arange(len(queries)) if truth is None else np.asarray(truth)
    if len(truth) != len(queries):
        raise ValueError("one ground-truth target per query required")
    if len(queries) == 0:
        raise ValueError("no queries to evaluate")
    if truth.min() < 0 or truth.max() >= len(pool):
        raise ValueError("a query's ground-truth target is missing from the candidate pool")
    mapped = _as_mapper(mapping, direction)(queries)
    ranks = ground_truth_ranks(mapped, normalize_rows(pool), truth)
    ks = sorted(set(int(k) for k in ks))
    if any(k < 1 for k in ks):
        raise ValueError("k must be >= 1")
    return EvalReport(direction, {k: precision_at_k(ranks, k) for k in ks}, len(queries), len(pool), ranks)


def evaluate_pairs(mapping, src: np.ndarray, tgt: np.ndarray, rows: np.ndarray, direction: str = "x2y", ks=(1, 5, 10)) -> EvalReport:
    """Evaluate test pairs given as ``(source row, target row)`` index pairs.

    Each pair is one query; the pool is the distinct rows on the other side of
    the test pairs. ``x1_to_x2`` treats ``src``/``tgt`` as two source languages
    and retrieves in the shared space both are projected into by ``g_x``.
    """
    rows = np.asarray(rows, dtype=np.int64).reshape(-1, 2)
    q_side, p_side = (1, 0) if direction == "y2x" else (0, 1)
    queries = (tgt if q_side else src)[rows[:, q_side]]
    pool_rows, truth = np.unique(rows[:, p_side], return_inverse=True)
    pool = (src if p_side == 0 else tgt)[pool_rows]
    if direction == "x1_to_x2":
        if not isinstance(mapping, GanModel):
            raise ValueError("x1_to_x2 retrieval needs a trained model")
        return evaluate(mapping, queries, pool, truth, ks, direction, candidates=project_corpus(mapping, pool, "x_to_y"))
    return evaluate(mapping, queries, pool, truth, ks, direction)


def baseline_least_squares(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``W`` minimizing ``||X W^T - Y||_F^2 + rho ||W||_F^2`` by the normal equations.

    ``rho = 1e-6 tr(X^T X) / d`` when the plain system is underdetermined
    (``m < d``) or ill-conditioned; otherwise ``rho = 0`` and exact linear maps
    are recovered exactly.
    """
    x = np.asarray(x, dtype=DTYPE)
    y = np.asarray(y, dtype=DTYPE)
    if x.shape != y.shape:
        raise ValueError(f"paired inputs differ in shape: {x.shape} vs {y.shape}")
    m, d = x.shape
    gram = x.T @ x
    cond = np.linalg.cond(gram)
    rho = 0.0
    if m < d or not cond <= RIDGE_COND:
        rho = 1e-6 * np.trace(gram) / d
        gram = gram + rho * np.eye(d)
        cond = np.linalg.cond(gram)
        if cond > RIDGE_COND:
            warnings.warn(f"least-squares system is ill-conditioned even with ridge (cond ~ {cond:.2e})")
    log.debug("least squares: rho %.3e, condition estimate %.3e", rho, cond)
    # (X^T X + rho I) W^T = X^T Y
    return np.linalg.solve(gram, x.T @ y).T


def baseline_procrustes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Orthogonal ``W = U V^T`` from the SVD of ``Y^T X``; maps rows as ``x @ W.T``."""
    x = np.asarray(x, dtype=DTYPE)
    y = np.asarray(y, dtype=DTYPE)
    if x.shape != y.shape:
        raise ValueError(f"paired inputs differ in shape: {x.shape} vs {y.shape}")
    m = y.T @ x
    u, s, vt = np.linalg.svd(m)
    if s[-1] <= 1e-12 * max(s[0], 1e-300):
        warnings.warn("cross-covariance is rank deficient; the orthogonal map is not unique")
    return u @ vt

"""Parallel-corpus ingestion, seeded splits, mismatch sampling and batch assembly.

All index sets refer to positions in the (deduplicated) pair list, so source row
``i`` and target row ``i`` of the embedded corpora form the true pair ``i``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class ParallelCorpus:
    pairs: list[tuple[str, str]]
    source_lang: str = "src"
    target_lang: str = "tgt"
    duplicates_removed: int = 0

    def __len__(self) -> int:
        return len(self.pairs)


def load_parallel_tsv(path, source_lang="src", target_lang="tgt") -> ParallelCorpus:
    """Read ``source<TAB>target`` lines; exact duplicate pairs are dropped."""
    seen = set()
    pairs = []
    dupes = 0
    with open(path, encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ValueError(f"{path}:{lineno}: expected exactly one TAB, found {len(fields) - 1}")
            src, tgt = fields[0].strip(), fields[1].strip()
            if not src or not tgt:
                raise ValueError(f"{path}:{lineno}: empty side in pair")
            if (src, tgt) in seen:
                dupes += 1
                continue
            seen.add((src, tgt))
            pairs.append((src, tgt))
    log.info("loaded %d pairs from %s (%d duplicates dropped)", len(pairs), path, dupes)
    return ParallelCorpus(pairs, source_lang, target_lang, dupes)


def write_parallel_tsv(path, pairs) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for src, tgt in pairs:
            fh.write(f"{src}\t{tgt}\n")


@dataclass(frozen=True)
class DatasetSplit:
    train: np.ndarray
    test: np.ndarray
    labeled: np.ndarray
    unlabeled: np.ndarray
    seed: int

    @property
    def n_pairs(self) -> int:
        return len(self.train) + len(self.test)


def split(corpus, test_fraction: float, labeled_ratio: float, seed: int) -> DatasetSplit:
    """Shuffle by ``seed``, carve the test set first, then the labeled part of train.

    ``corpus`` may be a :class:`ParallelCorpus` or a pair count.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if not 0.0 < labeled_ratio <= 1.0:
        raise ValueError(f"labeled_ratio must be in (0, 1], got {labeled_ratio}")
    n = corpus if isinstance(corpus, (int, np.integer)) else len(corpus)
    order = np.random.default_rng(seed).permutation(n)
    n_test = int(round(test_fraction * n))
    test, train = order[:n_test], order[n_test:]
    n_lab = int(round(labeled_ratio * len(train)))
    return DatasetSplit(
        train=train,
        test=test,
        labeled=train[:n_lab],
        unlabeled=train[n_lab:],
        seed=seed,
    )


def make_split(train, test, labeled, seed=0) -> DatasetSplit:
    """Build a split from explicit index lists (checked for consistency)."""
    train, test, labeled = (np.asarray(a, dtype=np.int64) for a in (train, test, labeled))
    if np.intersect1d(train, test).size:
        raise ValueError("train and test overlap")
    if np.setdiff1d(labeled, train).size:
        raise ValueError("labeled indices must be a subset of train")
    unlabeled = np.setdiff1d(train, labeled)
    return DatasetSplit(train, test, labeled, unlabeled, seed)


@dataclass(frozen=True)
class MismatchSet:
    pairs: np.ndarray  # (n, 2) source index, target index
    seed: int

    def __len__(self) -> int:
        return len(self.pairs)


def sample_mismatch(split: DatasetSplit, n: int | None = None, seed: int = 0) -> MismatchSet:
    """Draw ``n`` (default ``|labeled|``) uniform train-index pairs ``(i, j)`` with ``i != j``."""
    train = split.train
    if n is None:
        n = len(split.labeled)
    if n > 0 and len(train) < 2:
        raise ValueError("need at least two training pairs to sample mismatches")
    rng = np.random.default_rng(seed)
    a = rng.integers(0, len(train), size=n)
    # uniform over the other len(train) - 1 positions
    b = rng.integers(0, len(train) - 1, size=n) if n else np.zeros(0, dtype=np.int64)
    b = b + (b >= a)
    return MismatchSet(np.stack([train[a], train[b]], axis=1).astype(np.int64), seed)


@dataclass
class Batch:
    x: np.ndarray
    y: np.ndarray
    x_mis: np.ndarray
    y_mis: np.ndarray
    x_pool: np.ndarray
    y_pool: np.ndarray
    # provenance, for leakage and coverage checks
    pair_idx: np.ndarray
    mismatch_idx: np.ndarray
    x_pool_idx: np.ndarray
    y_pool_idx: np.ndarray

    def __len__(self) -> int:
        return len(self.x)


def _epoch_rng(seed: int, epoch: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, epoch, stream])


def make_batches(
    split: DatasetSplit,
    mismatch: MismatchSet | None,
    embedded_src: np.ndarray,
    embedded_tgt: np.ndarray,
    batch_size: int,
    seed: int,
    epoch: int = 0,
) -> Iterator[Batch]:
    """Yield one epoch of batches over the shuffled labeled pairs.

    Each batch carries as many mismatch pairs and x/y pool rows as true pairs.
    Pool rows are drawn (independently for x and y) from all train indices, so
    unlabeled data enters training here. A trailing batch of size < 2 is skipped.
    """
    if batch_size < 2:
        raise ValueError(f"batch_size must be >= 2 for batch norm, got {batch_size}")
    order = _epoch_rng(seed, epoch, 0).permutation(split.labeled)
    x_pool_order = _cycle(_epoch_rng(seed, epoch, 1), split.train, len(order))
    y_pool_order = _cycle(_epoch_rng(seed, epoch, 2), split.train, len(order))
    mis = mismatch.pairs if mismatch is not None else np.zeros((0, 2), dtype=np.int64)
    for start in range(0, len(order), batch_size):
        idx = order[start : start + batch_size]
        n = len(idx)
        if n < 2:
            continue
        m = mis[start : start + n]
        xp = x_pool_order[start : start + n]
        yp = y_pool_order[start : start + n]
        yield Batch(
            x=embedded_src[idx],
            y=embedded_tgt[idx],
            x_mis=embedded_src[m[:, 0]],
            y_mis=embedded_tgt[m[:, 1]],
            x_pool=embedded_src[xp],
            y_pool=embedded_tgt[yp],
            pair_idx=idx,
            mismatch_idx=m,
            x_pool_idx=xp,
            y_pool_idx=yp,
        )


def _cycle(rng: np.random.Generator, pool: np.ndarray, n: int) -> np.ndarray:
    """``n`` draws from ``pool`` by concatenated permutations (without replacement per pass)."""
    out = []
    total = 0
    while total < n:
        perm = rng.permutation(pool)
        out.append(perm)
        total += len(perm)
    return np.concatenate(out)[:n] if out else np.zeros(0, dtype=np.int64)


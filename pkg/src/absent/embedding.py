"""Word-vector loading and bag-of-vectors sentence embeddings (plain or TF-IDF)."""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .numerics import DTYPE

PUNCT = ".,!?;:\"'()[]«»¡¿"
SCHEMES = ("plain", "tfidf")


@dataclass
class WordVectors:
    vocab: dict[str, int]
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vectors[self.vocab[token]]


def load_word_vectors(path, max_vocab: int | None = None) -> WordVectors:
    """Parse the fastText text format: a ``"V d"`` header, then ``token v1 ... vd`` lines.

    Reads ``min(V, max_vocab)`` entries in file order. Repeated tokens keep their
    first vector and trigger a warning.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise ValueError(f"{path}:1: malformed header, expected 'V d'")
        n_words, dim = int(header[0]), int(header[1])
        if dim <= 0:
            raise ValueError(f"{path}:1: dimension must be positive")
        limit = n_words if max_vocab is None else min(n_words, max_vocab)
        vectors = np.empty((limit, dim), dtype=DTYPE)
        vocab: dict[str, int] = {}
        row = 0
        seen = 0
        for lineno, line in enumerate(fh, start=2):
            if seen >= limit:
                break
            seen += 1
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"{path}:{lineno}: expected {dim + 1} fields, got {len(parts)}")
            try:
                vec = np.array(parts[1:], dtype=DTYPE)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric vector component") from None
            token = parts[0]
            if token in vocab:
                warnings.warn(f"{path}:{lineno}: duplicate token {token!r} ignored")
                continue
            vocab[token] = row
            vectors[row] = vec
            row += 1
    if seen < limit:
        raise ValueError(f"{path}: header announces {n_words} entries but only {seen} follow")
    return WordVectors(vocab, vectors[:row])


def tokenize(sentence: str) -> list[str]:
    """Lowercase, split on whitespace, strip surrounding punctuation, drop empties."""
    out = []
    for tok in sentence.lower().split():
        tok = tok.strip(PUNCT)
        if tok:
            out.append(tok)
    return out


@dataclass
class IdfTable:
    doc_count: int
    df: dict[str, int]

    def idf(self, token: str) -> float:
        """Smoothed ``ln((1 + N) / (1 + df)) + 1``; unseen tokens get ``df = 0``."""
        return math.log((1 + self.doc_count) / (1 + self.df.get(token, 0))) + 1.0


def build_idf(corpus: Iterable[Sequence[str]]) -> IdfTable:
    df: Counter = Counter()
    n = 0
    for tokens in corpus:
        n += 1
        df.update(set(tokens))
    if n == 0:
        raise ValueError("cannot build idf from an empty corpus")
    return IdfTable(n, dict(df))


def embed_sentence(tokens: Sequence[str], vectors: WordVectors, scheme: str = "plain", idf: IdfTable | None = None) -> np.ndarray | None:
    """Unit-norm bag-of-vectors embedding, or ``None`` when nothing usable remains.

    ``plain`` averages in-vocabulary vectors; ``tfidf`` sums ``count * idf * v`` over
    distinct in-vocabulary tokens. Both are L2-normalized.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if scheme == "tfidf" and idf is None:
        raise ValueError("tfidf scheme needs an idf table")
    counts = Counter(t for t in tokens if t in vectors.vocab)
    if not counts:
        return None
    acc = np.zeros(vectors.dim, dtype=DTYPE)
    for tok, c in counts.items():
        w = c if scheme == "plain" else c * idf.idf(tok)
        acc += w * vectors[tok]
    norm = np.linalg.norm(acc)
    if norm == 0.0 or not np.isfinite(norm):
        return None
    return acc / norm


@dataclass
class EmbeddedCorpus:
    """Embeddings of the non-empty sentences, in input order.

    ``kept[i]`` is the input position of row ``i``; ``empty`` lists input
    positions that had no usable token.
    """

    embeddings: np.ndarray
    sentence_ids: list
    scheme: str
    kept: list[int]
    empty: list[int]

    def row_of(self) -> dict:
        return {sid: i for i, sid in enumerate(self.sentence_ids)}


def embed_corpus(sentences: Sequence[str], vectors: WordVectors, scheme: str = "plain", idf: IdfTable | None = None, ids: Sequence | None = None) -> EmbeddedCorpus:
    """Tokenize and embed every sentence; empty ones are excluded and reported.

    For ``tfidf`` without an explicit table, idf is computed from ``sentences``.
    """
    token_lists = [tokenize(s) for s in sentences]
    if scheme == "tfidf" and idf is None:
        idf = build_idf(token_lists)
    ids = list(range(len(sentences))) if ids is None else list(ids)
    rows, kept, empty = [], [], []
    for i, toks in enumerate(token_lists):
        v = embed_sentence(toks, vectors, scheme, idf)
        if v is None:
            empty.append(i)
        else:
            rows.append(v)
            kept.append(i)
    emb = np.vstack(rows) if rows else np.zeros((0, vectors.dim), dtype=DTYPE)
    return EmbeddedCorpus(emb, [ids[i] for i in kept], scheme, kept, empty)

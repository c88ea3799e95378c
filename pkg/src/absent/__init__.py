"""Adversarial bi-directional mapping between sentence-embedding spaces, in numpy."""

from .checkpoint import load_embeddings, load_model, save_embeddings, save_model
from .corpus import DatasetSplit, ParallelCorpus, load_parallel_tsv, make_batches, sample_mismatch, split
from .embedding import build_idf, embed_corpus, embed_sentence, load_word_vectors, tokenize
from .evaluation import (
    EvalReport,
    RetrievalIndex,
    baseline_least_squares,
    baseline_procrustes,
    evaluate,
    evaluate_pairs,
    knn_retrieve,
    precision_at_k,
)
from .model import GanModel, init_model, project_corpus
from .training import TrainConfig, TrainReport, train, train_multilingual, train_unidirectional

__all__ = [
    "DatasetSplit", "EvalReport", "GanModel", "ParallelCorpus", "RetrievalIndex", "TrainConfig", "TrainReport",
    "baseline_least_squares", "baseline_procrustes", "build_idf", "embed_corpus", "embed_sentence", "evaluate",
    "evaluate_pairs", "init_model", "knn_retrieve", "load_embeddings", "load_model", "load_parallel_tsv",
    "load_word_vectors", "make_batches", "precision_at_k", "project_corpus", "sample_mismatch", "save_embeddings",
    "save_model", "split", "tokenize", "train", "train_multilingual", "train_unidirectional",
]

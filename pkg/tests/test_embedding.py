import math
import warnings

import numpy as np
import pytest

from absent.embedding import WordVectors, build_idf, embed_corpus, embed_sentence, load_word_vectors, tokenize
from conftest import write_vectors


def vecs(table):
    words = list(table)
    return WordVectors({w: i for i, w in enumerate(words)}, np.array([table[w] for w in words], dtype=float))


# -- parsing --------------------------------------------------------------

def test_minimal_vector_file(tmp_path):
    p = tmp_path / "v.vec"
    p.write_text("2 3\na 1 0 0\nb 0 1 0\n")
    wv = load_word_vectors(p)
    assert wv.dim == 3 and len(wv) == 2
    assert np.array_equal(wv["b"], [0.0, 1.0, 0.0])


def test_trailing_space_tolerated(tmp_path):
    p = tmp_path / "v.vec"
    p.write_text("1 2\na 0.5 0.25 \n")
    assert np.array_equal(load_word_vectors(p)["a"], [0.5, 0.25])


@pytest.mark.parametrize(
    "text, match",
    [
        ("5 3\na 1 0 0\nb 0 1 0\nc 0 0 1\nd 1 1 1\n", "announces 5 entries but only 4"),
        ("2 3\na 1 0 0\nb 0 1\n", r":3: expected 4 fields"),
        ("1 2\na 1 x\n", r":2: non-numeric"),
        ("x 3\n", ":1: malformed header"),
    ],
)
def test_parser_errors_carry_context(tmp_path, text, match):
    p = tmp_path / "bad.vec"
    p.write_text(text)
    with pytest.raises(ValueError, match=match):
        load_word_vectors(p)


def test_duplicate_token_keeps_first(tmp_path):
    p = tmp_path / "v.vec"
    p.write_text("3 2\na 1 0\nb 0 1\na 5 5\n")
    with pytest.warns(UserWarning, match="duplicate token 'a'"):
        wv = load_word_vectors(p)
    assert len(wv) == 2 and np.array_equal(wv["a"], [1.0, 0.0])


def test_max_vocab(tmp_path):
    p = tmp_path / "v.vec"
    p.write_text("3 1\na 1\nb 2\nc 3\n")
    wv = load_word_vectors(p, max_vocab=2)
    assert list(wv.vocab) == ["a", "b"]


def test_large_file_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    words = [f"w{i}" for i in range(10_000)]
    m = rng.standard_normal((10_000, 16))
    p = tmp_path / "big.vec"
    write_vectors(p, words, m)
    wv = load_word_vectors(p)
    # independent line-by-line parse
    lines = p.read_text().splitlines()[1:]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for line in lines[::97]:
            tok, *vals = line.split()
            assert np.array_equal(wv[tok], np.array([float(v) for v in vals]))
    assert len(wv) == 10_000


# -- tokenization and idf -------------------------------------------------

def test_tokenize():
    assert tokenize("Ich finde keine Worte.") == ["ich", "finde", "keine", "worte"]
    assert tokenize("") == []
    assert tokenize("  A  b ") == ["a", "b"]
    assert tokenize("« Hola ! »") == ["hola"]


def test_idf_values():
    idf = build_idf([["a", "b"], ["a"]])
    assert idf.idf("a") == pytest.approx(1.0, abs=1e-15)
    assert idf.idf("b") == pytest.approx(1.405465, abs=1e-6)
    assert idf.idf("b") == pytest.approx(math.log(1.5) + 1, abs=1e-15)


def test_df_counts_once_per_sentence():
    idf = build_idf([["a"] * 5, ["b"]])
    assert idf.df["a"] == 1


def test_empty_idf_corpus():
    with pytest.raises(ValueError):
        build_idf([])


# -- sentence embeddings --------------------------------------------------

def test_plain_average():
    wv = vecs({"a": [1.0, 0.0], "b": [0.0, 1.0]})
    assert np.allclose(embed_sentence(["a", "b"], wv), [2**-0.5, 2**-0.5], atol=1e-15)


def test_single_token_same_under_both_schemes():
    wv = vecs({"a": [3.0, 4.0], "b": [0.0, 1.0]})
    idf = build_idf([["a"], ["b", "a"]])
    plain = embed_sentence(["a"], wv)
    assert np.allclose(plain, [0.6, 0.8], atol=1e-15)
    assert np.allclose(embed_sentence(["a"], wv, "tfidf", idf), plain, atol=1e-15)


def test_oov_and_zero_sentences():
    wv = vecs({"a": [1.0, 0.0], "b": [-1.0, 0.0]})
    assert embed_sentence(["zzz"], wv) is None
    assert embed_sentence(["a", "b"], wv) is None
    assert embed_sentence([], wv) is None


def test_tfidf_needs_table_and_valid_scheme():
    wv = vecs({"a": [1.0]})
    with pytest.raises(ValueError):
        embed_sentence(["a"], wv, "tfidf")
    with pytest.raises(ValueError):
        embed_sentence(["a"], wv, "bm25")


def tfidf_oracle(sentences, table):
    """From first principles: tf counts, smoothed idf, weighted sum, L2 norm."""
    docs = [s.lower().replace(".", "").split() for s in sentences]
    n = len(docs)
    out = []
    for doc in docs:
        acc = [0.0] * len(next(iter(table.values())))
        for tok in sorted(set(doc)):
            if tok not in table:
                continue
            tf = doc.count(tok)
            df = sum(tok in d for d in docs)
            w = tf * (math.log((1 + n) / (1 + df)) + 1)
            acc = [a + w * v for a, v in zip(acc, table[tok])]
        norm = math.sqrt(sum(a * a for a in acc))
        out.append([a / norm for a in acc])
    return np.array(out)


def toy_corpus(n_sent, seed):
    rng = np.random.default_rng(seed)
    words = [f"t{i}" for i in range(15)]
    table = {w: list(rng.standard_normal(6)) for w in words}
    sents = [" ".join(rng.choice(words, size=rng.integers(2, 9))) + "." for _ in range(n_sent)]
    return sents, table


@pytest.mark.parametrize("n_sent", [3, 20])
def test_tfidf_matches_oracle(n_sent):
    sents, table = toy_corpus(n_sent, n_sent)
    emb = embed_corpus(sents, vecs(table), "tfidf")
    assert np.max(np.abs(emb.embeddings - tfidf_oracle(sents, table))) < 1e-12


def test_embed_corpus_reports_empty_and_unit_norms():
    wv = vecs({"a": [1.0, 2.0], "b": [0.5, -1.0]})
    emb = embed_corpus(["a b", "nothing here", "b b a"], wv, ids=["s1", "s2", "s3"])
    assert emb.empty == [1] and emb.kept == [0, 2]
    assert emb.sentence_ids == ["s1", "s3"]
    assert np.allclose(np.linalg.norm(emb.embeddings, axis=1), 1.0, atol=1e-9)

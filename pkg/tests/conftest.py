import numpy as np
import pytest


def write_vectors(path, words, vecs):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(words)} {vecs.shape[1]}\n")
        for w, v in zip(words, vecs):
            fh.write(w + " " + " ".join(f"{x:.9f}" for x in v) + "\n")


def make_bilingual(root, n_sent=240, vocab=120, d=12, seed=0):
    """Two toy languages whose word vectors differ by a fixed rotation.

    Sentence ``i`` in the target language translates sentence ``i`` word for word,
    so averaged sentence embeddings are related by the same rotation.
    """
    rng = np.random.default_rng(seed)
    src_vecs = rng.standard_normal((vocab, d))
    rot, _ = np.linalg.qr(rng.standard_normal((d, d)))
    tgt_vecs = src_vecs @ rot
    src_words = [f"s{i}" for i in range(vocab)]
    tgt_words = [f"t{i}" for i in range(vocab)]
    write_vectors(root / "src.vec", src_words, src_vecs)
    write_vectors(root / "tgt.vec", tgt_words, tgt_vecs)
    pairs = set()
    lines = []
    while len(lines) < n_sent:
        idx = rng.integers(0, vocab, size=rng.integers(3, 7))
        key = tuple(idx)
        if key in pairs:
            continue
        pairs.add(key)
        lines.append(" ".join(src_words[i] for i in idx) + "\t" + " ".join(tgt_words[i] for i in idx))
    (root / "pairs.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return {"src_vec": root / "src.vec", "tgt_vec": root / "tgt.vec", "pairs": root / "pairs.tsv", "rotation": rot}


def add_second_source(root, data, seed=1):
    """A third toy language ``u`` with its own rotation of the source vectors, paired with the target side."""
    from absent.embedding import load_word_vectors

    rng = np.random.default_rng(seed)
    src = load_word_vectors(data["src_vec"])
    rot, _ = np.linalg.qr(rng.standard_normal((src.dim, src.dim)))
    words = [w.replace("s", "u", 1) for w in src.vocab]
    write_vectors(root / "src2.vec", words, src.vectors @ rot)
    lines = data["pairs"].read_text(encoding="utf-8").splitlines()
    out = []
    for line in lines:
        s_side, t_side = line.split("\t")
        out.append(" ".join(w.replace("s", "u", 1) for w in s_side.split()) + "\t" + t_side)
    (root / "pairs2.tsv").write_text("\n".join(out) + "\n", encoding="utf-8")
    return {**data, "src2_vec": root / "src2.vec", "pairs2": root / "pairs2.tsv"}


@pytest.fixture
def bilingual(tmp_path):
    return make_bilingual(tmp_path)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

import numpy as np
import pytest

from absent.corpus import load_parallel_tsv, make_batches, make_split, sample_mismatch, split, write_parallel_tsv


def test_single_pair(tmp_path):
    p = tmp_path / "p.tsv"
    p.write_text("hallo\thello\n")
    assert load_parallel_tsv(p).pairs == [("hallo", "hello")]


@pytest.mark.parametrize("text, match", [("a b c\n", ":1: expected exactly one TAB"), ("a\tb\nx\ty\tz\n", ":2:"), ("a\t \n", ":1: empty side")])
def test_tsv_errors(tmp_path, text, match):
    p = tmp_path / "p.tsv"
    p.write_text(text)
    with pytest.raises(ValueError, match=match):
        load_parallel_tsv(p)


def test_duplicates_dropped(tmp_path):
    lines = [f"s{i}\tt{i}" for i in range(97)] + ["s3\tt3", "s50\tt50", "s96\tt96"]
    np.random.default_rng(0).shuffle(lines)
    p = tmp_path / "p.tsv"
    p.write_text("\n".join(lines) + "\n")
    corpus = load_parallel_tsv(p)
    assert len(corpus) == len(set(lines)) == 97
    assert corpus.duplicates_removed == 3


def test_write_then_read(tmp_path):
    pairs = [("ä b", "c"), ("d", "é f")]
    write_parallel_tsv(tmp_path / "p.tsv", pairs)
    assert load_parallel_tsv(tmp_path / "p.tsv").pairs == pairs


def test_split_sizes():
    sp = split(100, 0.1, 0.2, seed=0)
    assert (len(sp.test), len(sp.labeled), len(sp.unlabeled)) == (10, 18, 72)
    assert len(np.intersect1d(sp.train, sp.test)) == 0
    assert sorted(np.concatenate([sp.train, sp.test])) == list(range(100))


def test_split_full_ratio_and_determinism():
    assert len(split(100, 0.1, 1.0, seed=3).unlabeled) == 0
    a, b = split(500, 0.1, 0.2, seed=9), split(500, 0.1, 0.2, seed=9)
    for f in ("train", "test", "labeled", "unlabeled"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    with pytest.raises(ValueError):
        split(100, 0.1, 0.0, seed=0)


def test_make_split_checks():
    with pytest.raises(ValueError):
        make_split([0, 1], [1, 2], [0])
    with pytest.raises(ValueError):
        make_split([0, 1], [2], [5])


def test_mismatch_default_size_and_distinct():
    sp = split(100, 0.1, 0.2, seed=0)
    ms = sample_mismatch(sp, seed=1)
    assert len(ms) == len(sp.labeled)
    assert np.all(ms.pairs[:, 0] != ms.pairs[:, 1])
    assert np.all(np.isin(ms.pairs, sp.train))


def test_mismatch_uniform_chi_square():
    sp = make_split(np.arange(100), [], np.arange(20))
    ms = sample_mismatch(sp, n=10_000, seed=4)
    counts = np.bincount(ms.pairs[:, 1], minlength=100)
    expected = 10_000 / 100
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    # chi-square with 99 dof: mean 99, sd sqrt(198)
    assert abs(chi2 - 99) < 5 * np.sqrt(198)
    assert np.all(np.abs(counts - expected) < 5 * np.sqrt(expected))


def emb(n, d=4, seed=0):
    return np.random.default_rng(seed).standard_normal((n, d))


def test_batch_sizes_and_leakage():
    sp = split(100, 0.1, 0.2, seed=0)
    ms = sample_mismatch(sp, seed=0)
    x, y = emb(100), emb(100, seed=1)
    batches = list(make_batches(sp, ms, x, y, 8, seed=0))
    assert [len(b) for b in batches] == [8, 8, 2]
    seen = np.concatenate([b.pair_idx for b in batches])
    assert sorted(seen) == sorted(sp.labeled)
    for b in batches:
        used = np.concatenate([b.pair_idx, b.mismatch_idx.ravel(), b.x_pool_idx, b.y_pool_idx])
        assert not np.isin(used, sp.test).any()
        assert np.array_equal(b.x, x[b.pair_idx]) and np.array_equal(b.y_pool, y[b.y_pool_idx])
        assert len(b.x_mis) == len(b.x_pool) == len(b)


def test_trailing_singleton_batch_skipped():
    sp = make_split(np.arange(30), [], np.arange(9))
    batches = list(make_batches(sp, None, emb(30), emb(30), 4, seed=0))
    assert [len(b) for b in batches] == [4, 4]
    with pytest.raises(ValueError):
        list(make_batches(sp, None, emb(30), emb(30), 1, seed=0))


def test_pools_from_labeled_when_no_unlabeled():
    sp = split(50, 0.2, 1.0, seed=2)
    for b in make_batches(sp, None, emb(50), emb(50), 8, seed=0):
        assert np.isin(b.x_pool_idx, sp.labeled).all() and np.isin(b.y_pool_idx, sp.labeled).all()


def test_pools_cover_unlabeled_rows():
    sp = split(400, 0.1, 0.5, seed=1)
    xs = np.concatenate([b.x_pool_idx for b in make_batches(sp, None, emb(400), emb(400), 16, seed=0)])
    assert np.isin(xs, sp.unlabeled).any()
    assert len(np.unique(xs)) == len(xs)  # one pass of a permutation


def test_batches_deterministic():
    sp = split(200, 0.1, 0.3, seed=0)
    ms = sample_mismatch(sp, seed=5)
    x, y = emb(200), emb(200, seed=1)
    a = list(make_batches(sp, ms, x, y, 16, seed=3, epoch=2))
    b = list(make_batches(sp, ms, x, y, 16, seed=3, epoch=2))
    c = list(make_batches(sp, ms, x, y, 16, seed=3, epoch=3))
    assert all(np.array_equal(p.pair_idx, q.pair_idx) and np.array_equal(p.y_pool_idx, q.y_pool_idx) for p, q in zip(a, b))
    assert not np.array_equal(a[0].pair_idx, c[0].pair_idx)

"""
The command-line pipeline on a toy corpus
=========================================

Writes two toy languages (word vectors related by a rotation, sentences that
translate word for word), then runs ``embed``, ``train``, ``eval`` and
``baseline`` through ``python -m absent``. With ``SOURCE_DATE_EPOCH`` set, a
second training run reproduces the checkpoint byte for byte.
"""

import os
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

root = Path(tempfile.mkdtemp(prefix="absent-demo-"))
rng = np.random.default_rng(0)
vocab, d = 150, 16
src = rng.standard_normal((vocab, d))
rot, _ = np.linalg.qr(rng.standard_normal((d, d)))
for name, prefix, vecs in (("src.vec", "s", src), ("tgt.vec", "t", src @ rot)):
    lines = [f"{vocab} {d}"] + [f"{prefix}{i} " + " ".join(f"{v:.6f}" for v in row) for i, row in enumerate(vecs)]
    (root / name).write_text("\n".join(lines) + "\n")
sents = {tuple(rng.integers(0, vocab, rng.integers(3, 8))) for _ in range(400)}
(root / "pairs.tsv").write_text("".join(" ".join(f"s{i}" for i in s) + "\t" + " ".join(f"t{i}" for i in s) + "\n" for s in sents))

env = {**os.environ, "SOURCE_DATE_EPOCH": "1700000000"}


def absent(*args):
    cmd = [sys.executable, "-m", "absent", *map(str, args)]
    print("$ absent", " ".join(map(str, args)).replace(str(root) + "/", ""))
    out = subprocess.run(cmd, env=env, check=True, capture_output=True, text=True).stdout
    print(out.rstrip() or "(ok)")


for side, vec in (("source", "src.vec"), ("target", "tgt.vec")):
    absent("embed", "--vectors", root / vec, "--corpus", root / "pairs.tsv", "--column", side, "--out", root / f"{side}.emb")
common = ["--src-emb", root / "source.emb", "--tgt-emb", root / "target.emb", "--pairs", root / "pairs.tsv"]
for run in ("a", "b"):
    absent("train", *common, "--epochs", 5, "--seed", 1, "--lambda", 10, "--out", root / f"{run}.ckpt")
absent("eval", "--ckpt", root / "a.ckpt", "--test-pairs", root / "a.test.tsv")
absent("baseline", "--method", "procrustes", *common, "--labeled-ratio", 0.2, "--seed", 1)
same = (root / "a.ckpt").read_bytes() == (root / "b.ckpt").read_bytes()
print("identical checkpoints:", same)

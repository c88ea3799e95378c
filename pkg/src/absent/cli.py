"""Command-line entry point: embed, train, train-multi, eval, baseline.

Failures print one line prefixed ``absent-error:`` to stderr and exit non-zero.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from .corpus import load_parallel_tsv, split as split_pairs, write_parallel_tsv
from .embedding import SCHEMES, embed_corpus, build_idf, load_word_vectors, tokenize
from .evaluation import baseline_least_squares, baseline_procrustes, evaluate_pairs
from .model import normalize_rows
from .training import TrainConfig, train, train_multilingual

log = logging.getLogger("absent")


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"absent-error: {message}\n")
        sys.exit(2)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def git_blob_hash(path) -> str:
    data = Path(path).read_bytes()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _read_sentences(path, column: str | None) -> list[str]:
    if column is None:
        with open(path, encoding="utf-8") as fh:
            return [line.rstrip("\n").rstrip("\r") for line in fh if line.strip()]
    pairs = load_parallel_tsv(path).pairs
    side = 0 if column == "source" else 1
    return [p[side] for p in pairs]


def cmd_embed(args) -> int:
    vectors = load_word_vectors(args.vectors, args.max_vocab)
    sentences = list(dict.fromkeys(_read_sentences(args.corpus, args.column)))
    idf = None
    if args.scheme == "tfidf":
        source = sentences if args.idf_corpus is None else _read_sentences(args.idf_corpus, args.column)
        idf = build_idf(tokenize(s) for s in source)
    emb = embed_corpus(sentences, vectors, args.scheme, idf, ids=sentences)
    if emb.empty:
        log.warning("%d sentences had no in-vocabulary token and were excluded", len(emb.empty))
    meta = {
        "scheme": args.scheme,
        "vectors_sha256": sha256_file(args.vectors),
        "corpus_sha256": sha256_file(args.corpus),
        "excluded": len(emb.empty),
    }
    ckpt.save_embeddings(args.out, emb.embeddings, emb.sentence_ids, meta)
    print(f"embedded {len(emb.sentence_ids)} sentences (dim {vectors.dim}, {len(emb.empty)} excluded) -> {args.out}")
    return 0


def _load_emb(path):
    emb, ids, meta = ckpt.load_embeddings(path)
    return normalize_rows(emb), ids, meta


def _align(pairs, src_ids, tgt_ids):
    """Row indices of each pair whose two sentences are both embedded."""
    srow = {s: i for i, s in enumerate(src_ids)}
    trow = {t: i for i, t in enumerate(tgt_ids)}
    kept = [(s, t) for s, t in pairs if s in srow and t in trow]
    if len(kept) < len(pairs):
        log.warning("%d pairs dropped: a side has no embedding", len(pairs) - len(kept))
    rows = np.array([(srow[s], trow[t]) for s, t in kept], dtype=np.int64).reshape(-1, 2)
    return kept, rows


def _config_from_args(args) -> TrainConfig:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text(encoding="utf-8"))
    overrides = {
        "lambda": args.lam,
        "epochs": args.epochs,
        "seed": args.seed,
        "lr": args.lr,
        "batch_size": args.batch_size,
        "labeled_ratio": args.labeled_ratio,
        "variant": getattr(args, "variant", None),
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    if args.no_mismatch:
        base["use_mismatch"] = False
    if args.saturating:
        base["saturating_generator"] = True
    if args.fixed_mismatch:
        base["resample_mismatch"] = False
    return TrainConfig.from_dict(base)


def _manifest(config: TrainConfig, inputs: dict, artifacts: dict, command: str, test_fraction: float) -> dict:
    return {
        "command": command,
        "config": config.to_dict(),
        "seed": config.seed,
        "test_fraction": test_fraction,
        "inputs": {
            name: {"path": str(p), "sha256": sha256_file(p), "git_blob": git_blob_hash(p)}
            for name, p in inputs.items()
        },
        "artifacts": {k: str(v) for k, v in artifacts.items()},
        "reproducible": ckpt.reproducible_mode(),
    }


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _prepare_pairs(pairs_path, src_emb_path, tgt_emb_path):
    xs, src_ids, _ = _load_emb(src_emb_path)
    ys, tgt_ids, _ = _load_emb(tgt_emb_path)
    if xs.shape[1] != ys.shape[1]:
        raise CliError(f"embedding dims differ: {xs.shape[1]} vs {ys.shape[1]}")
    kept, rows = _align(load_parallel_tsv(pairs_path).pairs, src_ids, tgt_ids)
    if len(kept) < 4:
        raise CliError(f"only {len(kept)} usable pairs in {pairs_path}")
    return kept, xs[rows[:, 0]], ys[rows[:, 1]]


def cmd_train(args) -> int:
    config = _config_from_args(args)
    kept, x, y = _prepare_pairs(args.pairs, args.src_emb, args.tgt_emb)
    sp = split_pairs(len(kept), args.test_fraction, config.labeled_ratio, config.seed)
    out = Path(args.out)
    test_path = out.with_suffix(".test.tsv")
    log_path = out.with_suffix(".losses.csv")
    manifest_path = out.with_suffix(".manifest.json")
    write_parallel_tsv(test_path, [kept[i] for i in sp.test])
    meta = {
        "src_emb": str(args.src_emb),
        "tgt_emb": str(args.tgt_emb),
        "src_emb_sha256": sha256_file(args.src_emb),
        "tgt_emb_sha256": sha256_file(args.tgt_emb),
        "test_fraction": args.test_fraction,
    }
    report, _ = train(sp, (x, y), config, checkpoint_path=out, metadata=meta)
    report.write_csv(log_path, timings=not ckpt.reproducible_mode())
    manifest = _manifest(
        config,
        {"src_emb": args.src_emb, "tgt_emb": args.tgt_emb, "pairs": args.pairs},
        {"checkpoint": out, "loss_csv": log_path, "test_pairs": test_path},
        "train",
        args.test_fraction,
    )
    _write_json(manifest_path, manifest)
    last = report.records[-1] if report.records else None
    print(f"trained {config.variant} for {config.epochs} epochs on {len(sp.labeled)} labeled / {len(sp.train)} train pairs")
    if last:
        print(f"final distance loss {last.distance_loss:.4f}; checkpoint -> {out}")
    return 0


def cmd_train_multi(args) -> int:
    if args.x1x2_pairs:
        raise CliError("zero-shot training takes no X1-X2 pairs; supervision is X1-Y and X2-Y only")
    config = _config_from_args(args)
    kept1, x1, y1 = _prepare_pairs(args.pairs1, args.src1_emb, args.tgt_emb)
    kept2, x2, y2 = _prepare_pairs(args.pairs2, args.src2_emb, args.tgt_emb)
    sp1 = split_pairs(len(kept1), args.test_fraction, config.labeled_ratio, config.seed)
    sp2 = split_pairs(len(kept2), args.test_fraction, config.labeled_ratio, config.seed + 1)
    out = Path(args.out)
    write_parallel_tsv(out.with_suffix(".test1.tsv"), [kept1[i] for i in sp1.test])
    write_parallel_tsv(out.with_suffix(".test2.tsv"), [kept2[i] for i in sp2.test])
    meta = {
        "src1_emb": str(args.src1_emb),
        "src2_emb": str(args.src2_emb),
        "tgt_emb": str(args.tgt_emb),
        "src_emb": str(args.src1_emb),
    }
    report, _ = train_multilingual(sp1, sp2, x1, x2, y1, y2, config, checkpoint_path=out, metadata=meta)
    log_path = out.with_suffix(".losses.csv")
    report.write_csv(log_path, timings=not ckpt.reproducible_mode())
    manifest = _manifest(
        config,
        {"src1_emb": args.src1_emb, "src2_emb": args.src2_emb, "tgt_emb": args.tgt_emb,
         "pairs1": args.pairs1, "pairs2": args.pairs2},
        {"checkpoint": out, "loss_csv": log_path},
        "train-multi",
        args.test_fraction,
    )
    _write_json(out.with_suffix(".manifest.json"), manifest)
    print(f"trained shared multilingual model for {config.epochs} epochs; checkpoint -> {out}")
    return 0


def _parse_ks(text: str) -> list[int]:
    try:
        ks = [int(k) for k in text.split(",") if k.strip()]
    except ValueError:
        raise CliError(f"bad --k list {text!r}") from None
    if not ks or any(k < 1 for k in ks):
        raise CliError(f"bad --k list {text!r}")
    return ks


def _emit(report, out_path):
    print(report.table())
    if out_path:
        Path(out_path).write_text(report.to_csv(), encoding="utf-8")


def run_eval(ckpt_path, test_pairs, direction, ks, src_emb=None, tgt_emb=None):
    """Library-level body of ``absent eval`` (returns the :class:`EvalReport`)."""
    model, meta = ckpt.load_model(ckpt_path)
    pairs = load_parallel_tsv(test_pairs).pairs
    if direction == "x1_to_x2":
        if meta.get("variant") != "multilingual":
            raise CliError("--direction x1_to_x2 needs a multilingual checkpoint")
        xs1, ids1, _ = _load_emb(src_emb or meta["src1_emb"])
        xs2, ids2, _ = _load_emb(tgt_emb or meta["src2_emb"])
        _, rows = _align(pairs, ids1, ids2)
        return evaluate_pairs(model, xs1, xs2, rows, "x1_to_x2", ks)
    if direction not in ("x2y", "y2x"):
        raise CliError(f"unknown direction {direction!r}")
    if direction == "y2x" and meta.get("variant") == "uni_sent":
        raise CliError("uni_sent checkpoints only map x2y")
    xs, src_ids, _ = _load_emb(src_emb or meta["src_emb"])
    ys, tgt_ids, _ = _load_emb(tgt_emb or meta["tgt_emb"])
    if xs.shape[1] != model.dim or ys.shape[1] != model.dim:
        raise CliError(f"embedding dim does not match checkpoint dim {model.dim}")
    _, rows = _align(pairs, src_ids, tgt_ids)
    return evaluate_pairs(model, xs, ys, rows, direction, ks)


def cmd_eval(args) -> int:
    report = run_eval(args.ckpt, args.test_pairs, args.direction, _parse_ks(args.k), args.src_emb, args.tgt_emb)
    _emit(report, args.out)
    return 0


def cmd_baseline(args) -> int:
    ks = _parse_ks(args.k)
    kept, x, y = _prepare_pairs(args.pairs, args.src_emb, args.tgt_emb)
    sp = split_pairs(len(kept), args.test_fraction, args.labeled_ratio, args.seed)
    fit = {"lsq": baseline_least_squares, "procrustes": baseline_procrustes}[args.method]
    W = fit(x[sp.labeled], y[sp.labeled])
    rows = np.stack([sp.test, sp.test], axis=1)
    report = evaluate_pairs(W, x, y, rows, "x2y", ks)
    print(f"{args.method} fit on {len(sp.labeled)} labeled pairs")
    _emit(report, args.out)
    return 0


def _add_train_flags(p, multi=False):
    p.add_argument("--config", help="JSON file of training settings; flags override it")
    p.add_argument("--labeled-ratio", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    if not multi:
        p.add_argument("--variant", choices=("absent", "uni_sent"), default=None)
    p.add_argument("--no-mismatch", action="store_true")
    p.add_argument("--fixed-mismatch", action="store_true", help="sample mismatch pairs once, not every epoch")
    p.add_argument("--saturating", action="store_true")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--test-fraction", type=float, default=0.1)
    p.add_argument("--out", required=True, help="checkpoint path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="absent", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("embed", help="embed sentences as averaged word vectors")
    p.add_argument("--vectors", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--column", choices=("source", "target"), help="read one side of a TSV pair file")
    p.add_argument("--scheme", choices=SCHEMES, default="plain")
    p.add_argument("--idf-corpus", help="sentences to compute idf from (default: --corpus)")
    p.add_argument("--max-vocab", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train", help="train a bidirectional (or uni_sent) mapping")
    p.add_argument("--src-emb", required=True)
    p.add_argument("--tgt-emb", required=True)
    p.add_argument("--pairs", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("train-multi", help="train one model on X1-Y and X2-Y pairs")
    p.add_argument("--src1-emb", required=True)
    p.add_argument("--src2-emb", required=True)
    p.add_argument("--tgt-emb", required=True)
    p.add_argument("--pairs1", required=True)
    p.add_argument("--pairs2", required=True)
    p.add_argument("--x1x2-pairs", help=argparse.SUPPRESS)
    _add_train_flags(p, multi=True)
    p.set_defaults(func=cmd_train_multi)

    p = sub.add_parser("eval", help="precision@k retrieval on test pairs")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--test-pairs", required=True)
    p.add_argument("--direction", choices=("x2y", "y2x", "x1_to_x2"), default="x2y")
    p.add_argument("--k", default="1,5,10")
    p.add_argument("--src-emb", help="override the source embedding file recorded in the checkpoint")
    p.add_argument("--tgt-emb", help="override the target embedding file recorded in the checkpoint")
    p.add_argument("--out", help="write the report as CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="fit and evaluate a linear baseline")
    p.add_argument("--method", choices=("lsq", "procrustes"), required=True)
    p.add_argument("--src-emb", required=True)
    p.add_argument("--tgt-emb", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--labeled-ratio", type=float, default=1.0)
    p.add_argument("--test-fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", default="1,5,10")
    p.add_argument("--out")
    p.set_defaults(func=cmd_baseline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single-line error contract
        msg = str(exc).replace("\n", " ")
        sys.stderr.write(f"absent-error: {type(exc).__name__}: {msg}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())

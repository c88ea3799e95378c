"""Adversarial bi-directional training: loss terms, alternating updates, variants.

Discriminator arguments are always ordered (X-domain vector, Y-domain vector):
real pairs ``(x, y)``, fake pairs ``(x, G_X(x))`` and ``(G_Y(y), y)``, mismatch
pairs ``(x', y')``. Expectations are mini-batch means.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from .corpus import Batch, DatasetSplit, make_batches, sample_mismatch
from .model import HIDDEN, DiscriminatorNet, GanModel, init_model
from .numerics import DTYPE, AdamState, adam_step, sigmoid

log = logging.getLogger(__name__)

PROB_CLAMP = 1e-7
VARIANTS = ("absent", "uni_sent")


@dataclass
class TrainConfig:
    lam: float = 1.0
    lr: float = 0.002
    batch_size: int = 128
    epochs: int = 100
    seed: int = 0
    beta1: float = 0.5
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    variant: str = "absent"
    use_mismatch: bool = True
    resample_mismatch: bool = True
    saturating_generator: bool = False
    normalize_fakes: bool = False
    labeled_ratio: float = 0.2
    gen_hidden: tuple = HIDDEN
    disc_hidden: tuple = HIDDEN

    def __post_init__(self):
        self.gen_hidden = tuple(self.gen_hidden)
        self.disc_hidden = tuple(self.disc_hidden)
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not 0.0 < self.labeled_ratio <= 1.0:
            raise ValueError(f"labeled_ratio must be in (0, 1], got {self.labeled_ratio}")
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")

    @property
    def unidirectional(self) -> bool:
        return self.variant == "uni_sent"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["gen_hidden"] = list(self.gen_hidden)
        d["disc_hidden"] = list(self.disc_hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=DTYPE)
    v = np.asarray(v, dtype=DTYPE)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine distance undefined for a zero-norm vector")
    return float(1.0 - u @ v / (nu * nv))


def _row_cosine(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise ``1 - cos(u_i, v_i)`` and its gradient with respect to ``v``."""
    nu = np.linalg.norm(u, axis=1)
    nv = np.linalg.norm(v, axis=1)
    if np.any(nu == 0) or np.any(nv == 0):
        raise ValueError("cosine distance undefined for a zero-norm row")
    c = np.einsum("ij,ij->i", u, v) / (nu * nv)
    grad_v = -(u / (nu * nv)[:, None] - c[:, None] * v / (nv**2)[:, None])
    return 1.0 - c, grad_v


@dataclass
class Fakes:
    """One train-mode generator pass over ``[labeled; pool]`` rows of a batch."""

    n: int
    gx: np.ndarray
    gy: np.ndarray | None
    unit: bool = False  # discriminators see L2-normalized pool fakes

    def _shown(self, g):
        return g / np.linalg.norm(g, axis=1, keepdims=True) if self.unit else g

    def shown_backward(self, raw: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """Map a gradient w.r.t. the rows shown to a discriminator back onto ``raw``."""
        if not self.unit:
            return grad
        nr = np.linalg.norm(raw, axis=1, keepdims=True)
        u = raw / nr
        return (grad - np.sum(grad * u, axis=1, keepdims=True) * u) / nr

    @property
    def gx_labeled(self):
        return self.gx[: self.n]

    @property
    def gx_pool(self):
        return self._shown(self.gx[self.n :])

    @property
    def gy_labeled(self):
        return self.gy[: self.n]

    @property
    def gy_pool(self):
        return self._shown(self.gy[self.n :])


def generate(model: GanModel, batch: Batch, unidirectional: bool = False, unit: bool = False) -> Fakes:
    # labeled and pool rows share one forward, so batch-norm statistics cover both
    n = len(batch)
    gx = model.g_x.forward(np.vstack([batch.x, batch.x_pool]), train=True)
    gy = None if unidirectional else model.g_y.forward(np.vstack([batch.y, batch.y_pool]), train=True)
    return Fakes(n, gx, gy, unit)


# A segment is one expectation term: (a rows, b rows, sign). sign=+1 means
# mean log D(a, b); sign=-1 means mean log(1 - D(a, b)).
Segment = tuple[np.ndarray, np.ndarray, int]


def _clamped_log(p: np.ndarray) -> np.ndarray:
    return np.log(np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP))


def _disc_value(net: DiscriminatorNet, segments: Sequence[Segment]):
    """Sum of segment means and its gradient with respect to the logits.

    Log values use probabilities clamped to ``[1e-7, 1 - 1e-7]``; the gradient is
    the unclamped logit-space derivative, so it stays informative when ``D``
    saturates.
    """
    segments = [s for s in segments if len(s[0])]
    a = np.vstack([s[0] for s in segments])
    b = np.vstack([s[1] for s in segments])
    p = sigmoid(net.logits(a, b))
    value = 0.0
    dz = np.empty_like(p)
    start = 0
    for seg_a, _, sign in segments:
        sl = slice(start, start + len(seg_a))
        ps = p[sl]
        if sign > 0:
            value += float(np.mean(_clamped_log(ps)))
            dz[sl] = (1.0 - ps) / len(ps)
        else:
            value += float(np.mean(_clamped_log(1.0 - ps)))
            dz[sl] = -ps / len(ps)
        start = sl.stop
    return value, dz, [len(s[0]) for s in segments]


def _split_rows(g: np.ndarray, sizes: Sequence[int]) -> list[np.ndarray]:
    return np.split(g, np.cumsum(sizes)[:-1])


def _real_segments(batch: Batch, fakes: Fakes) -> list[Segment]:
    segs = [(batch.x, batch.y, +1), (batch.x_pool, fakes.gx_pool, -1)]
    if fakes.gy is not None:
        segs.append((fakes.gy_pool, batch.y_pool, -1))
    return segs


def _dom_segments(batch: Batch, fakes: Fakes, flip: bool = False) -> list[Segment]:
    s = -1 if flip else 1
    return [(batch.x_pool, fakes.gx_pool, s), (fakes.gy_pool, batch.y_pool, -s)]


def real_loss(batch: Batch, model: GanModel, fakes: Fakes | None = None, unidirectional: bool = False) -> float:
    """``mean log D_real(x, y) + mean log(1 - D_real(x, G_X(x))) [+ mean log(1 - D_real(G_Y(y), y))]``."""
    fakes = fakes or generate(model, batch, unidirectional)
    return _disc_value(model.d_real, _real_segments(batch, fakes))[0]


def mismatch_loss(batch: Batch, model: GanModel) -> float:
    """``mean log(1 - D_real(x', y'))``; no generator is involved."""
    if len(batch.x_mis) == 0:
        raise ValueError("batch carries no mismatch pairs")
    return _disc_value(model.d_real, [(batch.x_mis, batch.y_mis, -1)])[0]


def domain_loss(batch: Batch, model: GanModel, fakes: Fakes | None = None) -> float:
    """``mean log D_dom(x, G_X(x)) + mean log(1 - D_dom(G_Y(y), y))``."""
    fakes = fakes or generate(model, batch)
    return _disc_value(model.d_dom, _dom_segments(batch, fakes))[0]


def distance_loss(x, y, g_x, g_y=None) -> float:
    """Batch mean of ``f_d(x, G_Y(y)) + f_d(y, G_X(x))``.

    ``g_x``/``g_y`` are callables (or already-projected arrays). With ``g_y=None``
    only the ``f_d(y, G_X(x))`` term is kept.
    """
    x = np.asarray(x, dtype=DTYPE)
    y = np.asarray(y, dtype=DTYPE)
    if len(x) == 0:
        raise ValueError("distance loss over an empty batch")
    gx = g_x(x) if callable(g_x) else np.asarray(g_x, dtype=DTYPE)
    total = _row_cosine(y, gx)[0]
    if g_y is not None:
        gy = g_y(y) if callable(g_y) else np.asarray(g_y, dtype=DTYPE)
        total = total + _row_cosine(x, gy)[0]
    return float(np.mean(total))


@dataclass
class StepLosses:
    d_real_loss: float
    d_dom_loss: float
    g_loss: float
    distance_loss: float


def discriminator_objective(model: GanModel, batch: Batch, fakes: Fakes, config: TrainConfig):
    """Fill discriminator gradients of ``-(L_real + L_mis + L_dom)``.

    Returns ``(L_real + L_mis, L_dom)``; ``L_dom`` is 0 for the unidirectional variant.
    """
    segs = _real_segments(batch, fakes)
    if config.use_mismatch and len(batch.x_mis):
        segs.append((batch.x_mis, batch.y_mis, -1))
    model.d_real.zero_grad()
    v_real, dz, _ = _disc_value(model.d_real, segs)
    model.d_real.backward_logits(-dz)
    v_dom = 0.0
    if not config.unidirectional:
        model.d_dom.zero_grad()
        v_dom, dz, _ = _disc_value(model.d_dom, _dom_segments(batch, fakes))
        model.d_dom.backward_logits(-dz)
    return v_real, v_dom


def generator_objective(model: GanModel, batch: Batch, config: TrainConfig, fakes: Fakes | None = None, backward: bool = True):
    """Fill generator gradients of the generator objective; returns ``(value, L_d)``.

    Default (non-saturating): ``lam * L_d - mean log D_real(fake)`` over both fake
    kinds, plus the label-flipped domain term
    ``- mean log(1 - D_dom(x, G_X(x))) - mean log D_dom(G_Y(y), y)``.
    With ``saturating_generator`` the objective is ``lam * L_d + L_real + L_dom``.
    ``backward=False`` only evaluates the objective and leaves every gradient alone.
    """
    uni = config.unidirectional
    if fakes is None:
        fakes = generate(model, batch, uni, config.normalize_fakes)
    n = fakes.n
    grad_gx = np.zeros_like(fakes.gx)
    grad_gy = None if uni else np.zeros_like(fakes.gy)
    # adversarial gradients w.r.t. the pool fakes as the discriminators see them
    adv_gx = np.zeros((len(fakes.gx) - n, fakes.gx.shape[1]))
    adv_gy = None if uni else np.zeros_like(adv_gx)

    # distance term
    d_y, g = _row_cosine(batch.y, fakes.gx_labeled)
    grad_gx[:n] += config.lam * g / n
    dist = d_y
    if not uni:
        d_x, g = _row_cosine(batch.x, fakes.gy_labeled)
        grad_gy[:n] += config.lam * g / n
        dist = dist + d_x
    l_d = float(np.mean(dist))
    value = config.lam * l_d

    # adversarial terms against D_real
    if config.saturating_generator:
        segs, coef = _real_segments(batch, fakes), 1.0
    else:
        segs = [(batch.x_pool, fakes.gx_pool, +1)]
        if not uni:
            segs.append((fakes.gy_pool, batch.y_pool, +1))
        coef = -1.0
    v, dz, sizes = _disc_value(model.d_real, segs)
    value += coef * v
    if not backward:
        if not uni:
            segs = _dom_segments(batch, fakes, flip=not config.saturating_generator)
            value += coef * _disc_value(model.d_dom, segs)[0]
        return value, l_d
    # discriminator parameter gradients are a by-product here; only input gradients are used
    model.d_real.zero_grad()
    ga, gb = model.d_real.backward_logits(coef * dz)
    ga, gb = _split_rows(ga, sizes), _split_rows(gb, sizes)
    fx = 1 if config.saturating_generator else 0  # index of the fake-x segment
    adv_gx += gb[fx]
    if not uni:
        adv_gy += ga[fx + 1]

        # adversarial terms against D_dom
        if config.saturating_generator:
            segs, coef = _dom_segments(batch, fakes), 1.0
        else:
            segs, coef = _dom_segments(batch, fakes, flip=True), -1.0
        v, dz, sizes = _disc_value(model.d_dom, segs)
        value += coef * v
        model.d_dom.zero_grad()
        ga, gb = model.d_dom.backward_logits(coef * dz)
        adv_gx += gb[: sizes[0]]
        adv_gy += ga[sizes[0] :]

    grad_gx[n:] += fakes.shown_backward(fakes.gx[n:], adv_gx)
    if not uni:
        grad_gy[n:] += fakes.shown_backward(fakes.gy[n:], adv_gy)
    model.g_x.zero_grad()
    model.g_x.backward(grad_gx)
    if not uni:
        model.g_y.zero_grad()
        model.g_y.backward(grad_gy)
    return value, l_d


def _check_finite(losses: StepLosses) -> None:
    for k, v in asdict(losses).items():
        if not np.isfinite(v):
            raise FloatingPointError(f"non-finite {k} = {v}; lower the learning rate or check inputs")


def make_optimizers(model: GanModel, config: TrainConfig) -> dict[str, AdamState]:
    return {
        name: AdamState(config.lr, config.beta1, config.beta2, config.adam_epsilon)
        for name in model.networks()
    }


def _scaled(grads, scale):
    return grads if scale == 1.0 else [g * scale for g in grads]


def d_phase(model, batch, fakes, config, opt, scale=1.0):
    v_real, v_dom = discriminator_objective(model, batch, fakes, config)
    adam_step(opt["d_real"], model.d_real.params, _scaled(model.d_real.grads, scale))
    if not config.unidirectional:
        adam_step(opt["d_dom"], model.d_dom.params, _scaled(model.d_dom.grads, scale))
    return v_real, v_dom


def g_phase(model, batch, fakes, config, opt, scale=1.0):
    value, l_d = generator_objective(model, batch, config, fakes)
    adam_step(opt["g_x"], model.g_x.params, _scaled(model.g_x.grads, scale))
    if not config.unidirectional:
        adam_step(opt["g_y"], model.g_y.params, _scaled(model.g_y.grads, scale))
    return value, l_d


def train_step(batch: Batch, model: GanModel, config: TrainConfig, opt: dict, scale: float = 1.0) -> StepLosses:
    """One discriminator ascent step followed by one generator descent step.

    The generator pass is shared: discriminators do not change generator
    parameters, so the cached activations stay valid for the generator phase.
    """
    fakes = generate(model, batch, config.unidirectional, config.normalize_fakes)
    v_real, v_dom = d_phase(model, batch, fakes, config, opt, scale)
    g_value, l_d = g_phase(model, batch, fakes, config, opt, scale)
    losses = StepLosses(v_real, v_dom, g_value, l_d)
    _check_finite(losses)
    return losses


@dataclass
class EpochRecord:
    epoch: int
    d_real_loss: float
    d_dom_loss: float
    g_loss: float
    distance_loss: float
    seconds: float
    pair: int | None = None
    batch: int | None = None


@dataclass
class TrainReport:
    records: list[EpochRecord] = field(default_factory=list)
    checkpoint: str | None = None

    def write_csv(self, path, timings: bool = True) -> None:
        """Write the loss log; ``timings=False`` zeroes the wall-clock column."""
        per_batch = any(r.pair is not None for r in self.records)
        cols = ["epoch"] + (["batch", "pair"] if per_batch else [])
        cols += ["d_real_loss", "d_dom_loss", "g_loss", "distance_loss", "seconds"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in self.records:
                row = [r.epoch] + ([r.batch, r.pair] if per_batch else [])
                row += [repr(r.d_real_loss), repr(r.d_dom_loss), repr(r.g_loss), repr(r.distance_loss)]
                row.append(f"{r.seconds:.3f}" if timings else "0")
                w.writerow(row)


def derived_seeds(seed: int, n: int = 3) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


def _validate_embeddings(src, tgt, split: DatasetSplit):
    src = np.asarray(src, dtype=DTYPE)
    tgt = np.asarray(tgt, dtype=DTYPE)
    if src.ndim != 2 or tgt.ndim != 2 or src.shape[1] != tgt.shape[1]:
        raise ValueError(f"source/target embedding shapes disagree: {src.shape} vs {tgt.shape}")
    if len(src) != len(tgt):
        raise ValueError("source and target embeddings must be aligned row by row")
    top = max(int(split.train.max(initial=-1)), int(split.test.max(initial=-1)))
    if top >= len(src):
        raise ValueError(f"split references row {top} but only {len(src)} rows exist")
    return src, tgt


def _epoch_mismatch(split, config, mis_seed, epoch):
    if not config.use_mismatch:
        return None
    return sample_mismatch(split, seed=mis_seed + (epoch if config.resample_mismatch else 0))


def train(split: DatasetSplit, embeddings, config: TrainConfig, checkpoint_path=None, metadata=None):
    """Train a model on aligned ``(source, target)`` embeddings.

    Returns ``(TrainReport, GanModel)``. ``variant='uni_sent'`` trains only
    ``g_x`` and ``d_real``.
    """
    src, tgt = _validate_embeddings(*embeddings, split)
    model_seed, batch_seed, mis_seed = derived_seeds(config.seed)
    model = init_model(src.shape[1], model_seed, config.gen_hidden, config.disc_hidden)
    opt = make_optimizers(model, config)
    report = TrainReport()
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        mismatch = _epoch_mismatch(split, config, mis_seed, epoch)
        steps = [
            train_step(b, model, config, opt)
            for b in make_batches(split, mismatch, src, tgt, config.batch_size, batch_seed, epoch)
        ]
        if not steps:
            raise ValueError("no batch of size >= 2 could be formed from the labeled set")
        means = [float(np.mean([getattr(s, k) for s in steps])) for k in ("d_real_loss", "d_dom_loss", "g_loss", "distance_loss")]
        rec = EpochRecord(epoch + 1, *means, seconds=time.perf_counter() - t0)
        report.records.append(rec)
        log.info("epoch %d: d_real %.4f d_dom %.4f g %.4f dist %.4f", rec.epoch, *means)
    if checkpoint_path is not None:
        from .checkpoint import save_model

        meta = {"variant": config.variant, "config": config.to_dict(), "seed": config.seed}
        meta.update(metadata or {})
        save_model(checkpoint_path, model, meta)
        report.checkpoint = str(checkpoint_path)
    return report, model


def train_unidirectional(split: DatasetSplit, embeddings, config: TrainConfig, **kwargs):
    """The uni-Sent variant: only ``g_x`` against ``d_real``, no domain discriminator."""
    if not config.unidirectional:
        config = TrainConfig.from_dict({**config.to_dict(), "variant": "uni_sent"})
    return train(split, embeddings, config, **kwargs)


def multilingual_schedule(n1: int, n2: int) -> list[tuple[int, int]]:
    """Interleave batch streams: (pair, batch index) as 1,2,1,2,... then the longer tail."""
    order = []
    for i in range(max(n1, n2)):
        if i < n1:
            order.append((1, i))
        if i < n2:
            order.append((2, i))
    return order


def train_multilingual(split1: DatasetSplit, split2: DatasetSplit, emb_x1, emb_x2, emb_y1, emb_y2, config: TrainConfig, checkpoint_path=None, metadata=None):
    """One shared model over (X1, Y) and (X2, Y) supervision, batches alternating.

    ``emb_y1``/``emb_y2`` are the target-side rows aligned with each pair list
    (both live in the shared Y space). Every step's gradients are scaled by 1/2.
    No batch ever combines X1 rows with X2 rows.
    """
    x1, y1 = _validate_embeddings(emb_x1, emb_y1, split1)
    x2, y2 = _validate_embeddings(emb_x2, emb_y2, split2)
    if x1.shape[1] != x2.shape[1]:
        raise ValueError(f"language dimensions differ: {x1.shape[1]} vs {x2.shape[1]}")
    if config.unidirectional:
        raise ValueError("multilingual training uses the bidirectional model")
    model_seed, batch_seed, mis_seed = derived_seeds(config.seed)
    model = init_model(x1.shape[1], model_seed, config.gen_hidden, config.disc_hidden)
    opt = make_optimizers(model, config)
    report = TrainReport()
    streams = {1: (split1, x1, y1), 2: (split2, x2, y2)}
    for epoch in range(config.epochs):
        batches = {}
        for k, (sp, xs, ys) in streams.items():
            mismatch = _epoch_mismatch(sp, config, mis_seed + 7919 * k, epoch)
            batches[k] = list(make_batches(sp, mismatch, xs, ys, config.batch_size, batch_seed + k, epoch))
        for pair, i in multilingual_schedule(len(batches[1]), len(batches[2])):
            t0 = time.perf_counter()
            s = train_step(batches[pair][i], model, config, opt, scale=0.5)
            report.records.append(
                EpochRecord(epoch + 1, s.d_real_loss, s.d_dom_loss, s.g_loss, s.distance_loss,
                            time.perf_counter() - t0, pair=pair, batch=i)
            )
    if checkpoint_path is not None:
        from .checkpoint import save_model

        meta = {"variant": "multilingual", "config": config.to_dict(), "seed": config.seed}
        meta.update(metadata or {})
        save_model(checkpoint_path, model, meta)
        report.checkpoint = str(checkpoint_path)
    return report, model

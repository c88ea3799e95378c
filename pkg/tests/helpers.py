"""Small fixtures shared by the unit and acceptance tests."""

import numpy as np

from absent.corpus import Batch
from absent.model import init_model

SMALL_GEN = (12, 10, 9)
SMALL_DISC = (7, 6, 5)


def unit_rows(rng, n, d):
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_batch(rng, n=4, d=8):
    """A batch of unit rows with ``n`` pairs, ``n`` mismatches and ``n`` pool rows per side."""
    idx = np.arange(n)
    return Batch(
        x=unit_rows(rng, n, d),
        y=unit_rows(rng, n, d),
        x_mis=unit_rows(rng, n, d),
        y_mis=unit_rows(rng, n, d),
        x_pool=unit_rows(rng, n, d),
        y_pool=unit_rows(rng, n, d),
        pair_idx=idx,
        mismatch_idx=np.stack([idx, idx[::-1]], axis=1),
        x_pool_idx=idx,
        y_pool_idx=idx,
    )


def small_model(seed, d=8):
    """A narrow model for gradient checks.

    With only a handful of ReLU units a row can have every unit dead, and a zero
    output bias would then give an exactly zero generator output (undefined
    cosine). A small random output bias rules that degenerate case out.
    """
    m = init_model(d, seed, SMALL_GEN, SMALL_DISC)
    rng = np.random.default_rng(seed + 1000)
    for g in (m.g_x, m.g_y):
        g.layers[-2].b[...] = 0.1 * rng.standard_normal(d)
    return m


def zero_head(net):
    """Zero the final affine layer so every output is exactly sigmoid(0) = 0.5."""
    last = net.layers[-1]
    last.W[...] = 0.0
    last.b[...] = 0.0


def checksum(net):
    return [p.copy() for p in net.params]

"""Synthetic paired embedding spaces with a known non-linear relation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import normalize_rows


def sphere(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    return normalize_rows(rng.standard_normal((n, d)))


@dataclass
class RandomWarp:
    """``v -> normalize(tanh(A2 relu(A1 v)))`` with Gaussian ``A1`` (h x d) and ``A2`` (d x h)."""

    A1: np.ndarray
    A2: np.ndarray

    @classmethod
    def sample(cls, d: int, rng: np.random.Generator, hidden: int | None = None, gain: float = 2.0) -> "RandomWarp":
        hidden = hidden or 2 * d
        # unit-norm inputs give A1 v ~ N(0, 1) per unit; gain pushes tanh past its linear range
        A1 = rng.standard_normal((hidden, d))
        A2 = rng.standard_normal((d, hidden)) * gain * np.sqrt(2.0 / hidden)
        return cls(A1, A2)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return normalize_rows(np.tanh(np.maximum(v @ self.A1.T, 0.0) @ self.A2.T))


def add_noise(v: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Isotropic Gaussian noise, then back onto the unit sphere."""
    return normalize_rows(v + sigma * rng.standard_normal(v.shape))


def nonlinear_pairs(n: int = 5000, d: int = 20, sigma: float = 0.01, seed: int = 0):
    """Sources on the unit sphere, targets ``normalize(tanh(A2 relu(A1 x)))`` plus noise.

    Returns ``(x, y, warp)``; row ``i`` of ``x`` and ``y`` is a true pair.
    """
    rng = np.random.default_rng(seed)
    warp = RandomWarp.sample(d, rng)
    x = sphere(n, d, rng)
    y = add_noise(warp(x), sigma, rng)
    return x, y, warp


def _subspace(d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """A random ``(d, k)`` matrix with orthonormal columns."""
    q, _ = np.linalg.qr(rng.standard_normal((d, k)))
    return q


def three_spaces(n1: int, n2: int, n_test: int, d: int = 20, sigma: float = 0.01, seed: int = 0, latent: int | None = None):
    """Two source spaces linked to a shared target space only through a latent sphere.

    Latent points ``u`` (dimension ``latent``, default ``d // 2``) are embedded into
    each space through its own random subspace ``B``: ``X1 = B1 u``,
    ``X2 = warp_2(B2 u)``, ``Y = warp_y(By u)``, each with noise. Separate
    subspaces keep the two source languages apart in R^d, so one shared
    generator can tell its inputs apart. The (X1, Y) and (X2, Y) training sets
    use disjoint latents, so no X1 row ever corresponds to an X2 training row;
    the test set holds ``n_test`` fresh latents observed in all three spaces.
    """
    rng = np.random.default_rng(seed)
    k = latent or d // 2
    b1, b2, by = (_subspace(d, k, rng) for _ in range(3))
    warp_y = RandomWarp.sample(d, rng)
    warp_2 = RandomWarp.sample(d, rng)
    u1, u2, ut = sphere(n1, k, rng), sphere(n2, k, rng), sphere(n_test, k, rng)

    def view(u):
        return (
            add_noise(u @ b1.T, sigma, rng),
            add_noise(warp_y(u @ by.T), sigma, rng),
            add_noise(warp_2(u @ b2.T), sigma, rng),
        )

    x1_a, y_a, _ = view(u1)
    _, y_b, x2_b = view(u2)
    x1_t, y_t, x2_t = view(ut)
    return {
        "pair1": (x1_a, y_a),
        "pair2": (x2_b, y_b),
        "test": (x1_t, x2_t, y_t),
    }

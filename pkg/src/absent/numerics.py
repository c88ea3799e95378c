"""Small dense-layer engine: affine, batch norm, activations, Adam, gradient checks.

Every layer caches what it needs during ``forward`` and consumes that cache in
``backward``. Parameter gradients accumulate into ``grads`` (same order as
``params``) and are reset with :meth:`zero_grad`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DTYPE = np.float64


def _check_2d(x: np.ndarray, cols: int, what: str) -> None:
    if x.ndim != 2 or x.shape[1] != cols:
        raise ValueError(f"{what}: expected input of shape (n, {cols}), got {x.shape}")


class Layer:
    params: list[np.ndarray]
    grads: list[np.ndarray]

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        raise NotImplementedError

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def zero_grad(self) -> None:
        for g in self.grads:
            g.fill(0.0)


class AffineLayer(Layer):
    """``out[i] = W @ x[i] + b`` with ``W`` stored as (out, in)."""

    def __init__(self, W: np.ndarray, b: np.ndarray | None = None):
        W = np.asarray(W, dtype=DTYPE)
        if W.ndim != 2:
            raise ValueError(f"weight must be 2-D, got shape {W.shape}")
        b = np.zeros(W.shape[0], dtype=DTYPE) if b is None else np.asarray(b, dtype=DTYPE)
        if b.shape != (W.shape[0],):
            raise ValueError(f"bias shape {b.shape} does not match weight rows {W.shape[0]}")
        self.W = W
        self.b = b
        self.gradW = np.zeros_like(W)
        self.gradb = np.zeros_like(b)
        self.params = [self.W, self.b]
        self.grads = [self.gradW, self.gradb]
        self._input: np.ndarray | None = None

    @property
    def in_features(self) -> int:
        return self.W.shape[1]

    @property
    def out_features(self) -> int:
        return self.W.shape[0]

    @classmethod
    def glorot(cls, fan_in: int, fan_out: int, rng: np.random.Generator) -> "AffineLayer":
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return cls(rng.uniform(-limit, limit, size=(fan_out, fan_in)))

    def forward(self, x, train=True):
        x = np.asarray(x, dtype=DTYPE)
        _check_2d(x, self.in_features, "affine_forward")
        self._input = x
        return x @ self.W.T + self.b

    def backward(self, upstream):
        if self._input is None:
            raise RuntimeError("affine_backward called before forward")
        upstream = np.asarray(upstream, dtype=DTYPE)
        expected = (self._input.shape[0], self.out_features)
        if upstream.shape != expected:
            raise ValueError(f"affine_backward: upstream shape {upstream.shape}, expected {expected}")
        self.gradW += upstream.T @ self._input
        self.gradb += upstream.sum(axis=0)
        return upstream @ self.W


class BatchNormLayer(Layer):
    """Per-feature batch normalization with biased batch variance.

    Running statistics follow ``running = momentum * running + (1 - momentum) * batch``
    and are only used in eval mode.
    """

    def __init__(self, width: int, momentum: float = 0.9, epsilon: float = 1e-5):
        self.width = width
        self.momentum = momentum
        self.epsilon = epsilon
        self.gamma = np.ones(width, dtype=DTYPE)
        self.beta = np.zeros(width, dtype=DTYPE)
        self.running_mean = np.zeros(width, dtype=DTYPE)
        self.running_var = np.ones(width, dtype=DTYPE)
        self.grad_gamma = np.zeros(width, dtype=DTYPE)
        self.grad_beta = np.zeros(width, dtype=DTYPE)
        self.params = [self.gamma, self.beta]
        self.grads = [self.grad_gamma, self.grad_beta]
        self._cache = None

    def forward(self, x, train=True):
        x = np.asarray(x, dtype=DTYPE)
        _check_2d(x, self.width, "batchnorm_forward")
        if not train:
            self._cache = None
            return (x - self.running_mean) / np.sqrt(self.running_var + self.epsilon) * self.gamma + self.beta
        if x.shape[0] < 2:
            raise ValueError("batch too small for batch norm")
        mean = x.mean(axis=0)
        centered = x - mean
        var = (centered**2).mean(axis=0)
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        x_hat = centered * inv_std
        self.running_mean *= self.momentum
        self.running_mean += (1.0 - self.momentum) * mean
        self.running_var *= self.momentum
        self.running_var += (1.0 - self.momentum) * var
        self._cache = (x_hat, inv_std)
        return x_hat * self.gamma + self.beta

    def backward(self, upstream):
        if self._cache is None:
            raise RuntimeError("batchnorm_backward needs a preceding train-mode forward")
        x_hat, inv_std = self._cache
        upstream = np.asarray(upstream, dtype=DTYPE)
        if upstream.shape != x_hat.shape:
            raise ValueError(f"batchnorm_backward: upstream shape {upstream.shape}, expected {x_hat.shape}")
        self.grad_gamma += (upstream * x_hat).sum(axis=0)
        self.grad_beta += upstream.sum(axis=0)
        d_hat = upstream * self.gamma
        n = x_hat.shape[0]
        return inv_std / n * (n * d_hat - d_hat.sum(axis=0) - x_hat * (d_hat * x_hat).sum(axis=0))


class Activation(Layer):
    """Elementwise nonlinearity: ``relu``, ``leaky_relu``, ``tanh`` or ``sigmoid``."""

    KINDS = ("relu", "leaky_relu", "tanh", "sigmoid")

    def __init__(self, kind: str, alpha: float = 0.2):
        if kind not in self.KINDS:
            raise ValueError(f"unknown activation {kind!r}; expected one of {self.KINDS}")
        self.kind = kind
        self.alpha = alpha
        self.params = []
        self.grads = []
        self._cache: np.ndarray | None = None

    def forward(self, x, train=True):
        x = np.asarray(x, dtype=DTYPE)
        if self.kind == "relu":
            self._cache = x
            return np.maximum(x, 0.0)
        if self.kind == "leaky_relu":
            self._cache = x
            return np.where(x > 0, x, self.alpha * x)
        if self.kind == "tanh":
            out = np.tanh(x)
        else:
            out = sigmoid(x)
        self._cache = out
        return out

    def backward(self, upstream):
        if self._cache is None:
            raise RuntimeError("activation backward called before forward")
        c = self._cache
        if self.kind == "relu":
            return upstream * (c > 0)
        if self.kind == "leaky_relu":
            return upstream * np.where(c > 0, 1.0, self.alpha)
        if self.kind == "tanh":
            return upstream * (1.0 - c * c)
        return upstream * c * (1.0 - c)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    x = np.asarray(x, dtype=DTYPE)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Sequential:
    """A chain of layers with a shared forward/backward."""

    def __init__(self, layers: Sequence[Layer]):
        self.layers = list(layers)

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            upstream = layer.backward(upstream)
        return upstream

    @property
    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    @property
    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads]

    def zero_grad(self) -> None:
        for layer in self.layers:
            layer.zero_grad()

    def num_params(self) -> int:
        return sum(p.size for p in self.params)


@dataclass
class AdamState:
    """Adam moments for one parameter list. ``m``/``v`` are created on first step."""

    lr: float = 0.002
    beta1: float = 0.5
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
    """Bias-corrected Adam update, applied to ``params`` in place."""
    if len(params) != len(grads):
        raise ValueError(f"{len(params)} params but {len(grads)} grads")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"adam_step: param shape {p.shape} != grad shape {g.shape}")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    elif len(state.m) != len(params) or any(m.shape != p.shape for m, p in zip(state.m, params)):
        raise ValueError("adam_step: parameter shapes changed since the first step")
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.epsilon)


@dataclass
class GradCheckReport:
    max_rel_err: float
    passed: bool
    per_param: list[float]
    zero_params: list[int] = field(default_factory=list)


def finite_diff_check(
    loss_fn: Callable[[], tuple[float, Sequence[np.ndarray]]],
    params: Sequence[np.ndarray],
    tolerance: float = 1e-5,
    h: float = 1e-6,
    zero_tol: float = 1e-7,
    value_fn: Callable[[], float] | None = None,
) -> GradCheckReport:
    """Compare analytic gradients against central differences on every entry.

    ``loss_fn()`` must return ``(loss, grads)`` for the current parameter values,
    with ``grads`` aligned to ``params``. Parameters are perturbed in place and
    restored afterwards. The relative error of one parameter array is
    ``||analytic - numeric|| / (||analytic|| + ||numeric||)``. When both norms are
    below ``zero_tol`` the gradient is structurally zero (e.g. an affine bias
    feeding batch norm), the ratio only measures stencil noise, and the array is
    recorded as ``0.0`` in ``per_param`` and listed in ``zero_params``.
    ``value_fn()``, when given, returns the loss alone and is used for the
    perturbed evaluations (skipping the backward pass).
    """
    loss, analytic = loss_fn()
    if not np.isfinite(loss):
        raise FloatingPointError(f"loss is not finite: {loss}")
    analytic = [np.array(g, dtype=DTYPE, copy=True) for g in analytic]
    if value_fn is None:
        value_fn = lambda: loss_fn()[0]  # noqa: E731
    errors = []
    zeros = []
    for pi, (p, a) in enumerate(zip(params, analytic)):
        numeric = np.zeros_like(p, dtype=DTYPE)
        flat = p.reshape(-1)
        num_flat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            plus = value_fn()
            flat[i] = orig - h
            minus = value_fn()
            flat[i] = orig
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise FloatingPointError("loss became non-finite under perturbation")
            num_flat[i] = (plus - minus) / (2 * h)
        na, nn = np.linalg.norm(a), np.linalg.norm(numeric)
        if na < zero_tol and nn < zero_tol:
            zeros.append(pi)
            errors.append(0.0)
            continue
        errors.append(float(np.linalg.norm(a - numeric) / (na + nn)))
    worst = max(errors) if errors else 0.0
    return GradCheckReport(worst, worst < tolerance, errors, zeros)

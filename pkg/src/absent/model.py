"""The four networks: two generators and two pair discriminators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import DTYPE, Activation, AffineLayer, BatchNormLayer, Sequential, sigmoid

HIDDEN = (512, 1024, 512)


class GeneratorNet(Sequential):
    """Affine+BatchNorm+ReLU blocks followed by Affine back to ``dim`` and tanh."""

    def __init__(self, dim: int, rng: np.random.Generator, hidden=HIDDEN, momentum=0.9, epsilon=1e-5):
        layers = []
        fan_in = dim
        for width in hidden:
            layers += [
                AffineLayer.glorot(fan_in, width, rng),
                BatchNormLayer(width, momentum, epsilon),
                Activation("relu"),
            ]
            fan_in = width
        layers += [AffineLayer.glorot(fan_in, dim, rng), Activation("tanh")]
        super().__init__(layers)
        self.dim = dim
        self.hidden = tuple(hidden)

    def forward(self, x, train=True):
        x = np.asarray(x, dtype=DTYPE)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ValueError(f"generator expects (n, {self.dim}) input, got {x.shape}")
        if train and x.shape[0] < 2:
            raise ValueError("batch too small for batch norm")
        return super().forward(x, train)

    def batchnorms(self) -> list[BatchNormLayer]:
        return [layer for layer in self.layers if isinstance(layer, BatchNormLayer)]


class DiscriminatorNet(Sequential):
    """Scores a concatenated ``(a, b)`` pair with a probability in (0, 1).

    The sigmoid head is applied outside the layer stack so losses can work on
    logits; :meth:`logits` and :meth:`backward_logits` expose that path.
    """

    def __init__(self, dim: int, rng: np.random.Generator, hidden=HIDDEN, alpha=0.2):
        layers = []
        fan_in = 2 * dim
        for width in hidden:
            layers += [AffineLayer.glorot(fan_in, width, rng), Activation("leaky_relu", alpha)]
            fan_in = width
        layers.append(AffineLayer.glorot(fan_in, 1, rng))
        super().__init__(layers)
        self.dim = dim
        self.hidden = tuple(hidden)

    def logits(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=DTYPE)
        b = np.asarray(b, dtype=DTYPE)
        if a.ndim != 2 or b.ndim != 2 or a.shape != b.shape or a.shape[1] != self.dim:
            raise ValueError(f"discriminator expects two (n, {self.dim}) inputs, got {a.shape} and {b.shape}")
        return super().forward(np.hstack([a, b]))[:, 0]

    def backward_logits(self, d_logits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Backpropagate ``dLoss/dlogit`` (shape (n,)); returns grads for ``a`` and ``b``."""
        g = super().backward(np.asarray(d_logits, dtype=DTYPE)[:, None])
        return g[:, : self.dim], g[:, self.dim :]

    def __call__(self, a, b):
        return sigmoid(self.logits(a, b))


@dataclass
class GanModel:
    g_x: GeneratorNet
    g_y: GeneratorNet
    d_real: DiscriminatorNet
    d_dom: DiscriminatorNet
    dim: int

    def networks(self) -> dict[str, Sequential]:
        return {"g_x": self.g_x, "g_y": self.g_y, "d_real": self.d_real, "d_dom": self.d_dom}

    def state_dict(self) -> dict[str, np.ndarray]:
        """Flat name -> array view of every parameter and batch-norm statistic."""
        out = {}
        for net_name, net in self.networks().items():
            for i, layer in enumerate(net.layers):
                if isinstance(layer, AffineLayer):
                    out[f"{net_name}.{i}.W"] = layer.W
                    out[f"{net_name}.{i}.b"] = layer.b
                elif isinstance(layer, BatchNormLayer):
                    out[f"{net_name}.{i}.gamma"] = layer.gamma
                    out[f"{net_name}.{i}.beta"] = layer.beta
                    out[f"{net_name}.{i}.running_mean"] = layer.running_mean
                    out[f"{net_name}.{i}.running_var"] = layer.running_var
        return out

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = self.state_dict()
        missing = set(own) - set(state)
        if missing:
            raise KeyError(f"state is missing tensors: {sorted(missing)[:5]}")
        for name, arr in own.items():
            src = np.asarray(state[name], dtype=DTYPE).reshape(arr.shape)
            arr[...] = src


def init_model(dim: int, seed: int, gen_hidden=HIDDEN, disc_hidden=HIDDEN) -> GanModel:
    """Glorot-uniform weights, zero biases, identity batch norm; fully determined by ``seed``."""
    if dim <= 0:
        raise ValueError(f"dim must be positive, got {dim}")
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)]
    return GanModel(
        g_x=GeneratorNet(dim, rngs[0], gen_hidden),
        g_y=GeneratorNet(dim, rngs[1], gen_hidden),
        d_real=DiscriminatorNet(dim, rngs[2], disc_hidden),
        d_dom=DiscriminatorNet(dim, rngs[3], disc_hidden),
        dim=dim,
    )


def generator_forward(net: GeneratorNet, x: np.ndarray, mode: str = "train") -> np.ndarray:
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    return net.forward(x, train=mode == "train")


def discriminator_forward(net: DiscriminatorNet, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return net(a, b)


def normalize_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a zero row")
    return m / norms


def project_corpus(model: GanModel, embeddings: np.ndarray, direction: str) -> np.ndarray:
    """Map rows into the other space in eval mode and L2-normalize them.

    ``x_to_y`` uses ``g_x``; ``y_to_x`` uses ``g_y``.
    """
    nets = {"x_to_y": model.g_x, "y_to_x": model.g_y}
    if direction not in nets:
        raise ValueError(f"direction must be one of {sorted(nets)}, got {direction!r}")
    embeddings = np.asarray(embeddings, dtype=DTYPE)
    if embeddings.ndim != 2 or embeddings.shape[1] != model.dim:
        raise ValueError(f"expected (n, {model.dim}) embeddings, got {embeddings.shape}")
    return normalize_rows(nets[direction].forward(embeddings, train=False))

"""Minimal neural substrate: dense stacks, exact reverse-mode gradients,
max-pool reduction, MSE loss, Adam with per-epoch learning-rate decay, and
bitwise checkpointing. Everything runs in float64; forward passes are
deterministic, and gradients are validated against finite differences in
the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blockfile import read_blockfile, write_blockfile
from .errors import DomainError, ShapeError, StateError, TrainingError

CKPT_MAGIC = "BWBCKPT"
CKPT_VERSION = 1

ACTIVATIONS = ("relu", "tanh", "identity")


def act_forward(name: str, pre: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(pre, 0.0)
    if name == "tanh":
        return np.tanh(pre)
    if name == "identity":
        return pre
    raise DomainError(f"unknown activation {name!r}")


def act_backward(name: str, pre: np.ndarray, post: np.ndarray,
                 dpost: np.ndarray) -> np.ndarray:
    if name == "relu":
        return dpost * (pre > 0.0)
    if name == "tanh":
        return dpost * (1.0 - post * post)
    if name == "identity":
        return dpost
    raise DomainError(f"unknown activation {name!r}")


@dataclass
class DenseLayer:
    """Affine map plus activation: y = act(x @ W.T + b)."""

    weights: np.ndarray  # (n_out, n_in)
    biases: np.ndarray   # (n_out,)
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")
        if self.weights.shape[0] != self.biases.shape[0]:
            raise ShapeError("bias length must match weight rows")

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    def affine(self, x: np.ndarray) -> np.ndarray:
        if x.shape[1] != self.n_in:
            raise ShapeError(f"input width {x.shape[1]} != layer width {self.n_in}")
        return x @ self.weights.T + self.biases

    def affine_backward(self, dpre: np.ndarray, x: np.ndarray):
        """(dx, dW, db) for the affine part, given upstream dpre."""
        return dpre @ self.weights, dpre.T @ x, dpre.sum(axis=0)


class Mlp:
    """A stack of dense layers with cached-forward/backward training support."""

    def __init__(self, layers: list[DenseLayer]):
        self.layers = layers

    @property
    def widths(self) -> list[int]:
        return [self.layers[0].n_in] + [l.n_out for l in self.layers]

    @property
    def activations(self) -> list[str]:
        return [l.activation for l in self.layers]

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = act_forward(layer.activation, layer.affine(x))
        return x

    def forward_cached(self, x: np.ndarray):
        """Forward pass keeping (input, pre-activation, post) per layer."""
        cache = []
        for layer in self.layers:
            pre = layer.affine(x)
            post = act_forward(layer.activation, pre)
            cache.append((x, pre, post))
            x = post
        return x, cache

    def backward(self, dy: np.ndarray, cache):
        """Exact reverse-mode gradients.

        Returns (dx, grads) where grads lists (dW, db) per layer in order.
        """
        if cache is None:
            raise StateError("backward called without a cached forward pass")
        if len(cache) != len(self.layers):
            raise StateError("cache does not match this layer stack")
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.layers)
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            x, pre, post = cache[i]
            dpre = act_backward(layer.activation, pre, post, dy)
            dy, dw, db = layer.affine_backward(dpre, x)
            grads[i] = (dw, db)
        return dy, grads

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.append(layer.weights)
            out.append(layer.biases)
        return out

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())


def flatten_grads(grads) -> list[np.ndarray]:
    """[(dW, db), ...] -> flat list aligned with Mlp.parameters()."""
    out = []
    for dw, db in grads:
        out.append(dw)
        out.append(db)
    return out


def init_dense(rng: np.random.Generator, n_in: int, n_out: int,
               activation: str = "relu") -> DenseLayer:
    """Kaiming-uniform for relu layers, Xavier-uniform otherwise; zero biases."""
    if activation == "relu":
        limit = np.sqrt(6.0 / n_in)
    else:
        limit = np.sqrt(6.0 / (n_in + n_out))
    weights = rng.uniform(-limit, limit, size=(n_out, n_in))
    return DenseLayer(weights=weights, biases=np.zeros(n_out), activation=activation)


def init_mlp(rng: np.random.Generator, widths: list[int],
             activations: list[str]) -> Mlp:
    if len(activations) != len(widths) - 1:
        raise ShapeError("need one activation per layer")
    layers = [init_dense(rng, widths[i], widths[i + 1], activations[i])
              for i in range(len(activations))]
    return Mlp(layers)


# ---------------------------------------------------------------------------
# reductions and loss

def max_pool_over_rows(features: np.ndarray):
    """Columnwise maximum of an (N, k) matrix: (pooled (k,), argmax rows (k,)).

    The argmax keeps the first maximal row per column, which is where the
    backward pass routes the gradient.
    """
    features = np.asarray(features)
    if features.ndim != 2 or features.shape[0] < 1:
        raise DomainError("max_pool_over_rows needs a non-empty (N, k) matrix")
    return features.max(axis=0), features.argmax(axis=0)


def max_pool_backward(dpooled: np.ndarray, argmax: np.ndarray, n_rows: int) -> np.ndarray:
    out = np.zeros((n_rows, dpooled.shape[0]))
    out[argmax, np.arange(dpooled.shape[0])] = dpooled
    return out


def max_pool_batched(features: np.ndarray):
    """(B, N, k) -> pooled (B, k) and argmax (B, k)."""
    if features.ndim != 3 or features.shape[1] < 1:
        raise DomainError("max_pool_batched needs a non-empty (B, N, k) array")
    return features.max(axis=1), features.argmax(axis=1)


def max_pool_batched_backward(dpooled: np.ndarray, argmax: np.ndarray,
                              n_rows: int) -> np.ndarray:
    b, k = dpooled.shape
    out = np.zeros((b, n_rows, k))
    bi = np.arange(b)[:, None]
    ki = np.arange(k)[None, :]
    out[bi, argmax, ki] = dpooled
    return out


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean squared error over all elements and its gradient w.r.t. pred."""
    if pred.shape != target.shape:
        raise ShapeError(f"pred shape {pred.shape} != target shape {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    return loss, (2.0 / diff.size) * diff


# ---------------------------------------------------------------------------
# Adam with per-epoch learning-rate decay

@dataclass
class AdamState:
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    lr0: float = 1e-3
    decay: float = 0.97
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    epoch: int = 0

    @property
    def lr(self) -> float:
        return self.lr0 * self.decay ** self.epoch


def adam_init(params: list[np.ndarray], lr0: float = 1e-3,
              decay: float = 0.97) -> AdamState:
    return AdamState(first_moment=[np.zeros_like(p) for p in params],
                     second_moment=[np.zeros_like(p) for p in params],
                     lr0=lr0, decay=decay)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState) -> None:
    """One in-place Adam update with bias correction.

    A non-finite gradient raises TrainingError before any parameter or
    moment is touched, so the step is skipped cleanly.
    """
    if len(params) != len(grads):
        raise ShapeError("params and grads length mismatch")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient; step skipped")
    state.step += 1
    t = state.step
    lr = state.lr
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


# ---------------------------------------------------------------------------
# checkpoints

def save_checkpoint(path, manifest: dict, arrays: dict[str, np.ndarray]) -> None:
    write_blockfile(path, CKPT_MAGIC, CKPT_VERSION, manifest, arrays)


def load_checkpoint(path):
    return read_blockfile(path, CKPT_MAGIC, CKPT_VERSION)


def mlp_arrays(prefix: str, mlp: Mlp) -> dict[str, np.ndarray]:
    out = {}
    for i, layer in enumerate(mlp.layers):
        out[f"{prefix}.w{i}"] = layer.weights
        out[f"{prefix}.b{i}"] = layer.biases
    return out


def mlp_spec(mlp: Mlp) -> dict:
    return {"widths": mlp.widths, "activations": mlp.activations}


def mlp_from_arrays(prefix: str, spec: dict, arrays: dict[str, np.ndarray]) -> Mlp:
    layers = []
    for i, act in enumerate(spec["activations"]):
        layers.append(DenseLayer(weights=arrays[f"{prefix}.w{i}"],
                                 biases=arrays[f"{prefix}.b{i}"],
                                 activation=act))
    return Mlp(layers)

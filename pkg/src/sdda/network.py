"""Feed-forward classifier with a linear adapted layer, written out by hand.

``layer_dims = [d_in, h_1, ..., h_p, L, k]``: hidden layers use the chosen
nonlinearity, the adapted layer (width ``L``) and the output layer are
affine. Source and target streams share one ``MlpParams``; there is no
per-stream state.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, NumericError
from .numerics import as_matrix

ACTIVATIONS = ("relu", "tanh")


@dataclass
class MlpParams:
    layer_dims: tuple
    weights: list
    biases: list
    hidden_activation: str = "relu"

    def __post_init__(self):
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        if len(self.layer_dims) < 2 or min(self.layer_dims) < 1:
            raise ArgumentError("layer_dims needs at least two positive entries")
        if self.hidden_activation not in ACTIVATIONS:
            raise ArgumentError(f"hidden_activation must be one of {ACTIVATIONS}")
        if len(self.weights) != self.num_layers or len(self.biases) != self.num_layers:
            raise ArgumentError("one weight matrix and one bias vector per layer required")
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_dims[l], self.layer_dims[l + 1])
            if W.shape != shape or b.shape != (shape[1],):
                raise ArgumentError(f"layer {l}: expected W{shape} and b({shape[1]},)")

    @property
    def num_layers(self):
        return len(self.layer_dims) - 1

    @property
    def adapted_width(self):
        return self.layer_dims[-2]

    def arrays(self):
        """Parameters in a fixed order: W0, b0, W1, b1, ..."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def with_arrays(self, arrays):
        return MlpParams(self.layer_dims, list(arrays[0::2]), list(arrays[1::2]), self.hidden_activation)

    def copy(self):
        return self.with_arrays([a.copy() for a in self.arrays()])

    def to_vector(self):
        return np.concatenate([a.ravel() for a in self.arrays()])

    def from_vector(self, vec):
        vec = np.asarray(vec, dtype=np.float64)
        need = sum(a.size for a in self.arrays())
        if vec.shape != (need,):
            raise ArgumentError(f"vector has shape {vec.shape}, parameters need ({need},)")
        arrays, pos = [], 0
        for a in self.arrays():
            arrays.append(vec[pos:pos + a.size].reshape(a.shape).copy())
            pos += a.size
        return self.with_arrays(arrays)

    def zeros_like(self):
        return self.with_arrays([np.zeros_like(a) for a in self.arrays()])


def init_params(layer_dims, rng, hidden_activation="relu"):
    """Glorot-uniform weights drawn from ``rng``, zero biases."""
    dims = [int(d) for d in layer_dims]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform_range(fan_in * fan_out, -limit, limit).reshape(fan_in, fan_out)
        weights.append(W)
        biases.append(np.zeros(fan_out))
    return MlpParams(tuple(dims), weights, biases, hidden_activation)


@dataclass
class ForwardCache:
    inputs: list  # inputs[l] is what layer l consumed
    pre_activations: list
    adapted_features: np.ndarray = field(repr=False)


def forward(params, X):
    """Run the network; returns ``(logits, cache)``."""
    X = as_matrix(X, "input")
    if X.shape[1] != params.layer_dims[0]:
        raise ArgumentError(f"input has {X.shape[1]} columns, network expects {params.layer_dims[0]}")
    n = params.num_layers
    inputs, pre = [], []
    a = X
    for l, (W, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(a)
        z = a @ W + b
        pre.append(z)
        if l < n - 2:
            a = np.maximum(z, 0.0) if params.hidden_activation == "relu" else np.tanh(z)
        else:
            a = z
    return a, ForwardCache(inputs, pre, inputs[-1])


def softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits, labels):
    """Mean softmax cross-entropy; returns ``(loss, dlogits)``."""
    logits = as_matrix(logits, "logits")
    b, k = logits.shape
    y = np.asarray(labels)
    if y.shape != (b,) or not np.issubdtype(y.dtype, np.integer):
        raise ArgumentError("labels must be an integer vector with one entry per row")
    if b and (y.min() < 0 or y.max() >= k):
        raise ArgumentError(f"labels must lie in [0, {k})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(b)
    loss = float(np.mean(lse - shifted[rows, y]))
    d = np.exp(shifted - lse[:, None])
    d[rows, y] -= 1.0
    return loss, d / b


def backward(params, cache, dlogits=None, dadapted=None):
    """Parameter gradients, as an ``MlpParams`` of the same shapes.

    ``dadapted`` (``b x L``) is added to the signal arriving at the adapted
    layer's output before it continues downward. Either argument may be
    omitted, not both.
    """
    if dlogits is None and dadapted is None:
        raise ArgumentError("backward needs dlogits, dadapted, or both")
    n = params.num_layers
    b = cache.inputs[0].shape[0]
    gW = [None] * n
    gb = [None] * n

    out_layer = n - 1
    if dlogits is not None:
        g = as_matrix(dlogits, "dlogits")
        if g.shape != (b, params.layer_dims[-1]):
            raise ArgumentError(f"dlogits must have shape {(b, params.layer_dims[-1])}")
        gW[out_layer] = cache.inputs[out_layer].T @ g
        gb[out_layer] = g.sum(axis=0)
        g = g @ params.weights[out_layer].T
    else:
        gW[out_layer] = np.zeros_like(params.weights[out_layer])
        gb[out_layer] = np.zeros_like(params.biases[out_layer])
        g = None

    if dadapted is not None:
        d = as_matrix(dadapted, "dadapted")
        if d.shape != (b, params.adapted_width):
            raise ArgumentError(f"dadapted must have shape {(b, params.adapted_width)}")
        g = d if g is None else g + d

    for l in range(n - 2, -1, -1):
        if l < n - 2:
            z = cache.pre_activations[l]
            if params.hidden_activation == "relu":
                g = g * (z > 0.0)
            else:
                t = np.tanh(z)
                g = g * (1.0 - t * t)
        gW[l] = cache.inputs[l].T @ g
        gb[l] = g.sum(axis=0)
        if l > 0:
            g = g @ params.weights[l].T
    return MlpParams(params.layer_dims, gW, gb, params.hidden_activation)


def add_gradients(a, b):
    return a.with_arrays([x + y for x, y in zip(a.arrays(), b.arrays())])


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, beta1=0.9, beta2=0.999, eps=1e-8):
        zeros = [np.zeros_like(a) for a in params.arrays()]
        return cls([z.copy() for z in zeros], zeros, 0, beta1, beta2, eps)


def adam_step(state, params, grads, lr):
    """One bias-corrected Adam update; returns ``(new_state, new_params)``."""
    if not lr > 0:
        raise ArgumentError("learning rate must be positive")
    g_arrays = grads.arrays()
    p_arrays = params.arrays()
    if len(g_arrays) != len(p_arrays) or any(g.shape != p.shape for g, p in zip(g_arrays, p_arrays)):
        raise ArgumentError("gradient shapes do not match parameters")
    for i, g in enumerate(g_arrays):
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in parameter array {i}", where=i)
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new_m, new_v, new_p = [], [], []
    for p, g, m, v in zip(p_arrays, g_arrays, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        new_p.append(p - lr * (m / c1) / (np.sqrt(v / c2) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return AdamState(new_m, new_v, t, b1, b2, state.eps), params.with_arrays(new_p)

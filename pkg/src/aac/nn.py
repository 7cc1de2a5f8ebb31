"""Dense networks with hand-written reverse-mode gradients.

Fixed topology only: an input layer, a stack of equally-treated hidden
layers with a configurable activation (SELU by default, SiLU selectable),
and a linear output layer. Parameters live in one flat float64 vector;
per-layer weight matrices and bias vectors are reshaped views into it, so
optimizer steps are single vectorised passes and checkpointing is a header
plus one little-endian double blob.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772

try:  # compiled elementwise kernels; the numpy forms below are the fallback
    from numba import njit as _njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    _njit = None


def _selu(z):
    return SELU_LAMBDA * np.where(z > 0, z, SELU_ALPHA * np.expm1(np.minimum(z, 0.0)))


def _selu_value_grad(z):
    # Shares the single expm1 pass between value and derivative.
    neg = np.expm1(np.minimum(z, 0.0))
    pos = z > 0
    value = SELU_LAMBDA * np.where(pos, z, SELU_ALPHA * neg)
    grad = SELU_LAMBDA * np.where(pos, 1.0, SELU_ALPHA * (neg + 1.0))
    return value, grad


if _njit is not None:
    @_njit(cache=True)
    def _selu_flat(z):
        out = np.empty_like(z)
        for i in range(z.size):
            x = z[i]
            out[i] = SELU_LAMBDA * x if x > 0.0 else \
                SELU_LAMBDA * SELU_ALPHA * np.expm1(x)
        return out

    @_njit(cache=True)
    def _selu_value_grad_flat(z):
        value = np.empty_like(z)
        grad = np.empty_like(z)
        for i in range(z.size):
            x = z[i]
            if x > 0.0:
                value[i] = SELU_LAMBDA * x
                grad[i] = SELU_LAMBDA
            else:
                e = np.expm1(x)
                value[i] = SELU_LAMBDA * SELU_ALPHA * e
                grad[i] = SELU_LAMBDA * SELU_ALPHA * (e + 1.0)
        return value, grad

    def _selu(z):  # noqa: F811 - compiled override
        return _selu_flat(np.ascontiguousarray(z).ravel()).reshape(z.shape)

    def _selu_value_grad(z):  # noqa: F811 - compiled override
        value, grad = _selu_value_grad_flat(np.ascontiguousarray(z).ravel())
        return value.reshape(z.shape), grad.reshape(z.shape)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _silu(z):
    return z * _sigmoid(z)


def _silu_value_grad(z):
    s = _sigmoid(z)
    return z * s, s * (1.0 + z * (1.0 - s))


ACTIVATIONS = {
    "selu": (_selu, _selu_value_grad),
    "silu": (_silu, _silu_value_grad),
}


class Mlp:
    """Multi-layer perceptron over a flat parameter vector.

    ``layer_sizes`` runs input to output, e.g. ``[12, 128, 128, 128, 2]``.
    Initialisation is LeCun normal (std = 1/sqrt(fan_in)) with zero biases.
    """

    def __init__(self, layer_sizes: Sequence[int], activation: str = "selu",
                 rng: Optional[np.random.Generator] = None,
                 theta: Optional[np.ndarray] = None):
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output layers")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}; "
                             f"choose from {sorted(ACTIVATIONS)}")
        self.layer_sizes = [int(n) for n in layer_sizes]
        self.activation = activation
        self._act, self._act_value_grad = ACTIVATIONS[activation]

        self.n_params = sum((a + 1) * b for a, b in zip(self.layer_sizes[:-1],
                                                        self.layer_sizes[1:]))
        if theta is not None:
            theta = np.asarray(theta, dtype=np.float64)
            if theta.shape != (self.n_params,):
                raise ValueError(f"theta has {theta.shape}, expected ({self.n_params},)")
            self.theta = theta.copy()
        else:
            self.theta = np.zeros(self.n_params)
        self.weights, self.biases = self._views(self.theta)
        if theta is None and rng is not None:
            for w in self.weights:
                w[:] = rng.normal(0.0, 1.0 / np.sqrt(w.shape[0]), size=w.shape)

    def _views(self, flat: np.ndarray):
        weights, biases, offset = [], [], 0
        for a, b in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            weights.append(flat[offset:offset + a * b].reshape(a, b))
            offset += a * b
            biases.append(flat[offset:offset + b])
            offset += b
        return weights, biases

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    def set_theta(self, flat: np.ndarray) -> None:
        self.theta[:] = flat

    def copy(self) -> "Mlp":
        return Mlp(self.layer_sizes, self.activation, theta=self.theta)

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[1] != self.in_dim:
            raise ValueError(f"input width {h.shape[1]}, expected {self.in_dim}")
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = self._act(h @ w + b)
        y = h @ self.weights[-1] + self.biases[-1]
        return y[0] if single else y

    def forward_cached(self, x: np.ndarray):
        """Batched forward keeping activations and their local gradients."""
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"input shape {x.shape}, expected (batch, {self.in_dim})")
        hs: List[np.ndarray] = [x]
        grads: List[np.ndarray] = []
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h, g = self._act_value_grad(h @ w + b)
            hs.append(h)
            grads.append(g)
        y = h @ self.weights[-1] + self.biases[-1]
        return y, (hs, grads)

    def backward(self, cache, upstream: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Gradient of sum(output * upstream) w.r.t. parameters and input."""
        hs, act_grads = cache
        if upstream.shape != (hs[0].shape[0], self.out_dim):
            raise ValueError(f"upstream shape {upstream.shape}, expected "
                             f"({hs[0].shape[0]}, {self.out_dim})")
        grad = np.empty(self.n_params)
        gw, gb = self._views(grad)

        delta = upstream
        np.dot(hs[-1].T, delta, out=gw[-1])
        gb[-1][:] = delta.sum(axis=0)
        for i in range(len(self.weights) - 2, -1, -1):
            delta = (delta @ self.weights[i + 1].T) * act_grads[i]
            np.dot(hs[i].T, delta, out=gw[i])
            gb[i][:] = delta.sum(axis=0)
        grad_input = delta @ self.weights[0].T
        return grad, grad_input


def forward(net: Mlp, x) -> np.ndarray:
    return net.forward(x)


def gradients(net: Mlp, x, upstream) -> Tuple[np.ndarray, np.ndarray]:
    """Exact reverse-mode gradient of ``output . upstream``.

    Returns the flat parameter gradient and the gradient w.r.t. the input,
    matching the input's shape (single vector or batch).
    """
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    ub = upstream[None, :] if single else upstream
    _, cache = net.forward_cached(xb)
    grad, grad_in = net.backward(cache, ub)
    return grad, (grad_in[0] if single else grad_in)


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(n_params: int, lr: float) -> AdamState:
    return AdamState(m=np.zeros(n_params), v=np.zeros(n_params), step=0, lr=lr)


def _adam_math(theta, grad, m0, v0, step, lr, beta1, beta2, eps):
    m = beta1 * m0
    m += (1.0 - beta1) * grad
    v = beta2 * v0
    v += (1.0 - beta2) * grad * grad
    # theta - lr * m_hat / (sqrt(v_hat) + eps) with the bias corrections
    # m_hat = m / (1 - b1^t), v_hat = v / (1 - b2^t) folded into the scalars.
    denom = np.sqrt(v)
    denom *= 1.0 / np.sqrt(1.0 - beta2 ** step)
    denom += eps
    update = m / denom
    update *= lr / (1.0 - beta1 ** step)
    return theta - update, m, v


if _njit is not None:
    @_njit(cache=True)
    def _adam_math(theta, grad, m0, v0, step, lr, beta1, beta2, eps):  # noqa: F811
        n = theta.size
        new_theta = np.empty(n)
        m = np.empty(n)
        v = np.empty(n)
        c1 = lr / (1.0 - beta1 ** step)
        c2 = 1.0 / np.sqrt(1.0 - beta2 ** step)
        for i in range(n):
            mi = beta1 * m0[i] + (1.0 - beta1) * grad[i]
            vi = beta2 * v0[i] + (1.0 - beta2) * grad[i] * grad[i]
            m[i] = mi
            v[i] = vi
            new_theta[i] = theta[i] - c1 * mi / (np.sqrt(vi) * c2 + eps)
        return new_theta, m, v


def adam_step(theta: np.ndarray, grad: np.ndarray,
              state: AdamState) -> Tuple[np.ndarray, AdamState]:
    """One bias-corrected adaptive-moment update; returns new values."""
    if theta.shape != grad.shape or theta.shape != state.m.shape:
        raise ValueError("theta, grad, and optimizer state shapes must match")
    step = state.step + 1
    new_theta, m, v = _adam_math(theta, grad, state.m, state.v, step,
                                 state.lr, state.beta1, state.beta2, state.eps)
    return new_theta, AdamState(m=m, v=v, step=step, lr=state.lr,
                                beta1=state.beta1, beta2=state.beta2, eps=state.eps)


# -- checkpoints ---------------------------------------------------------------
#
# Layout: magic b"AACD", u32 version, u32 header length, UTF-8 JSON header,
# then every array raveled C-order as little-endian float64, concatenated in
# header order. The header records {"meta": {...}, "arrays": [{"name", "shape"}]}.

CHECKPOINT_MAGIC = b"AACD"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, arrays: Dict[str, np.ndarray], meta: Optional[dict] = None) -> None:
    header = {
        "meta": meta or {},
        "arrays": [{"name": name, "shape": list(arr.shape)}
                   for name, arr in arrays.items()],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for arr in arrays.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> Tuple[Dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"not a checkpoint file: bad magic {magic!r}")
        version, header_len = struct.unpack("<II", fh.read(8))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays: Dict[str, np.ndarray] = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(8 * count), dtype="<f8").astype(np.float64)
            arrays[entry["name"]] = data.reshape(shape)
    return arrays, header["meta"]

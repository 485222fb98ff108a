"""Fully connected tanh networks with hand-written reverse mode and Adam."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import DimensionMismatch, NoForwardRecorded


@dataclass
class Mlp:
    """Affine layers with tanh between them and an identity output.

    ``weights[i]`` has shape ``(sizes[i], sizes[i + 1])``. Inputs may be a
    single vector or a batch of row vectors.
    """

    sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    _tape: list | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        if len(self.sizes) < 2:
            raise DimensionMismatch("an MLP needs at least an input and an output size")
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.weights):
            raise DimensionMismatch("layer count does not match sizes")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[i], self.sizes[i + 1]) or b.shape != (self.sizes[i + 1],):
                raise DimensionMismatch(f"layer {i} has shape {w.shape}/{b.shape}")

    @classmethod
    def init(cls, sizes: Sequence[int], rng: np.random.Generator, scale: float = 1.0) -> "Mlp":
        """Glorot-uniform weights and zero biases."""
        weights, biases = [], []
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            lim = scale * np.sqrt(6.0 / (n_in + n_out))
            weights.append(rng.uniform(-lim, lim, size=(n_in, n_out)))
            biases.append(np.zeros(n_out))
        return cls(tuple(sizes), weights, biases)

    @classmethod
    def zeros(cls, sizes: Sequence[int]) -> "Mlp":
        return cls(tuple(sizes), [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
                   [np.zeros(b) for b in sizes[1:]])

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def params(self) -> list[np.ndarray]:
        """Parameter arrays in the order ``w0, b0, w1, b1, ...`` (views)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[-1] != self.sizes[0]:
            raise DimensionMismatch(f"expected input of size {self.sizes[0]}, got {h.shape[-1]}")
        tape = [h]
        last = self.n_layers - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.tanh(h)
            tape.append(h)
        self._tape = tape
        return h[0] if single else h

    __call__ = forward

    def backward(self, adjoint) -> tuple[list[np.ndarray], np.ndarray]:
        """Gradients of ``sum(adjoint * output)`` for the last recorded forward pass.

        Returns ``(grads, input_grad)`` where ``grads`` follows :attr:`params`.
        Batch contributions are summed.
        """
        if self._tape is None:
            raise NoForwardRecorded("call forward before backward")
        g = np.asarray(adjoint, dtype=float)
        single = g.ndim == 1
        if single:
            g = g[None, :]
        tape = self._tape
        if g.shape != tape[-1].shape:
            raise DimensionMismatch(f"adjoint shape {g.shape} does not match output {tape[-1].shape}")
        grads: list[np.ndarray] = [None] * (2 * self.n_layers)
        for i in range(self.n_layers - 1, -1, -1):
            if i < self.n_layers - 1:
                g = g * (1.0 - tape[i + 1] ** 2)
            grads[2 * i] = tape[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return grads, (g[0] if single else g)

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.params)

    def to_dict(self) -> dict:
        return {
            "arch": list(self.sizes),
            "layers": [{"w": w.ravel().tolist(), "b": b.tolist()} for w, b in zip(self.weights, self.biases)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Mlp":
        sizes = tuple(data["arch"])
        ws, bs = [], []
        for i, layer in enumerate(data["layers"]):
            ws.append(np.array(layer["w"], dtype=float).reshape(sizes[i], sizes[i + 1]))
            bs.append(np.array(layer["b"], dtype=float))
        return cls(sizes, ws, bs)


def mlp_forward(m: Mlp, x) -> np.ndarray:
    return m.forward(x)


def mlp_gradients(m: Mlp, loss_adjoint) -> list[np.ndarray]:
    """Parameter gradients given dLoss/dOutput for the recorded forward pass."""
    return m.backward(loss_adjoint)[0]


class Adam:
    """Adaptive-moment optimizer updating a list of arrays in place."""

    def __init__(self, params: list[np.ndarray], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

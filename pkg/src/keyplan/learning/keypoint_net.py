"""Sequential keypoint regression.

The network sees the environment grids with the current keypoint in the
start block and the final target in the goal block, followed by both
points in unit coordinates. It predicts the next keypoint in unit
coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import DimensionMismatch, EmptyDataset, InvalidParams, NoTermination
from ..geometry import Point2, Workspace
from ..keypoints import KeypointSequence
from .cvae import TrainConfig, _check_finite
from .encoding import condition_vector, denormalize_point, normalize_point, occupancy_grid
from .mlp import Adam, Mlp


@dataclass
class KeypointNet:
    mlp: Mlp
    grid: int = 16
    history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.mlp.sizes[0] != 3 * self.grid ** 2 + 4 or self.mlp.sizes[-1] != 2:
            raise DimensionMismatch("keypoint net must map grids plus two points to one point")

    def predict(self, w: Workspace, current, target, occupancy=None) -> np.ndarray:
        """Next keypoint in world coordinates, clamped into the bounds."""
        u = self.mlp.forward(condition_vector(w, current, target, self.grid, occupancy))
        return denormalize_point(w, np.clip(u, 0.0, 1.0))

    def to_dict(self) -> dict:
        d = self.mlp.to_dict()
        return {"kind": "keypoint_net", "arch": d["arch"], "grid": self.grid, "layers": d["layers"],
                "history": list(self.history)}

    @classmethod
    def from_dict(cls, d: dict) -> "KeypointNet":
        return cls(Mlp.from_dict(d), int(d["grid"]), list(d.get("history", [])))


def unroll_sequence(w: Workspace, points: Sequence, G: int = 16, occupancy=None):
    """(input, label) pairs for one keypoint sequence whose last point is the target."""
    occ = occupancy_grid(w, G) if occupancy is None else occupancy
    target = points[-1]
    xs, ys = [], []
    for cur, nxt in zip(points[:-1], points[1:]):
        xs.append(condition_vector(w, cur, target, G, occ))
        ys.append(normalize_point(w, nxt))
    return np.array(xs), np.array(ys)


def train_keypoint_net(inputs, labels, config: TrainConfig = TrainConfig(), grid: int = 16) -> KeypointNet:
    """Mean squared error regression with Adam on minibatches."""
    X = np.asarray(inputs, dtype=float)
    Y = np.asarray(labels, dtype=float)
    if len(X) == 0:
        raise EmptyDataset("no keypoint examples")
    if Y.shape != (len(X), 2):
        raise DimensionMismatch("labels must be an (N, 2) array")
    rng = np.random.default_rng(config.seed)
    net = KeypointNet(Mlp.init((X.shape[1], *config.hidden, 2), rng), grid)
    opt = Adam(net.mlp.params, lr=config.lr)
    n = len(X)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, config.batch_size):
            idx = order[s:s + config.batch_size]
            diff = net.mlp.forward(X[idx]) - Y[idx]
            loss = float(np.sum(diff * diff)) / len(idx)
            _check_finite(loss, epoch)
            total += loss * len(idx)
            grads, _ = net.mlp.backward(2.0 * diff / len(idx))
            opt.step(grads)
        net.history.append(total / n)
    return net


def predict_keypoints(net, x_init, x_target, w: Workspace, delta: float, max_steps: int = 12) -> KeypointSequence:
    """Roll the network forward from ``x_init`` until a prediction lands within ``delta`` of ``x_target``.

    ``net`` may be any object with a ``predict(w, current, target, occupancy)``
    method. The returned points start with ``x_init``.
    """
    if delta <= 0 or max_steps <= 0:
        raise InvalidParams("delta and max_steps must be positive")
    target = np.asarray(x_target, dtype=float)
    cur = np.asarray(x_init, dtype=float)
    occ = occupancy_grid(w, getattr(net, "grid", 16))
    points = [Point2(float(cur[0]), float(cur[1]))]
    for _ in range(max_steps):
        nxt = np.asarray(net.predict(w, cur, target, occ), dtype=float)
        points.append(Point2(float(nxt[0]), float(nxt[1])))
        if math.hypot(*(nxt - target)) < delta:
            cost = sum(math.hypot(b.x - a.x, b.y - a.y) for a, b in zip(points, points[1:]))
            return KeypointSequence(tuple(points), (), cost)
        cur = nxt
    raise NoTermination(f"no keypoint within {delta} of the target after {max_steps} steps", tuple(points))

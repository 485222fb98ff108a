"""Mixture of local CVAE samplers with a uniform fallback, and online synthesis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import BadWeights, InvalidParams
from ..geometry import Point2
from ..learning.cvae import CvaeModel, sample_cvae
from ..learning.encoding import condition_vector, occupancy_grid
from ..learning.keypoint_net import predict_keypoints
from ..planner import PlanningProblem

UNIFORM = -1


class MixtureSampler:
    """With probability ``lam`` draw uniformly, else from local ``i`` with probability ``weights[i]``.

    Each draw's origin is appended to :attr:`provenance`: the component
    index, or ``-1`` for the uniform fallback.
    """

    def __init__(self, model: CvaeModel | None, conds: Sequence[np.ndarray], weights, lam: float,
                 low, high, seed: int = 0, batch: int = 64):
        weights = np.asarray(weights, dtype=float)
        if not 0.0 <= lam <= 1.0:
            raise InvalidParams(f"lambda must lie in [0, 1], got {lam}")
        if len(weights) != len(conds):
            raise BadWeights("one weight per local sampler is required")
        if len(weights) == 0:
            if lam != 1.0:
                raise BadWeights("without local samplers lambda must be 1")
        elif np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise BadWeights(f"weights must be non-negative and sum to 1, got {weights.sum()!r}")
        if len(conds) and model is None:
            raise InvalidParams("local samplers need a model")
        self.model = model
        self.conds = [np.asarray(c, dtype=float) for c in conds]
        self.weights = weights
        self.lam = float(lam)
        self.low = np.asarray(low, dtype=float)
        self.high = np.asarray(high, dtype=float)
        self.dim = len(self.low)
        self.rng = np.random.default_rng(seed)
        self.batch = batch
        self._bufs = [np.empty((0, self.dim)) for _ in self.conds]
        self._pos = [0] * len(self.conds)
        self.provenance: list[int] = []

    def _local(self, i: int) -> np.ndarray:
        if self._pos[i] >= len(self._bufs[i]):
            self._bufs[i] = sample_cvae(self.model, self.conds[i], self.batch, self.rng)
            self._pos[i] = 0
        x = self._bufs[i][self._pos[i]]
        self._pos[i] += 1
        return x

    def sample(self) -> np.ndarray:
        if not self.conds or self.rng.random() < self.lam:
            self.provenance.append(UNIFORM)
            return self.rng.uniform(self.low, self.high)
        i = int(self.rng.choice(len(self.weights), p=self.weights)) if len(self.weights) > 1 else 0
        self.provenance.append(i)
        return self._local(i)

    def provenance_labels(self) -> list:
        return ["uniform" if p == UNIFORM else p for p in self.provenance]


def synthesize_samplers(locals_: Sequence[tuple[np.ndarray, float]], lam: float, model: CvaeModel,
                        seed: int, low, high) -> MixtureSampler:
    conds = [c for c, _ in locals_]
    weights = [w for _, w in locals_]
    return MixtureSampler(model, conds, weights, lam, low, high, seed)


@dataclass(frozen=True)
class OnlineConfig:
    delta_frac: float = 0.1
    max_steps: int = 12
    grid: int = 16
    seed: int = 0


def online_keypoints(net, problem: PlanningProblem, config: OnlineConfig = OnlineConfig()) -> list[Point2]:
    """Predicted keypoints in the workspace, with the final prediction snapped onto the goal."""
    robot, w = problem.robot, problem.workspace
    start = robot.tip(problem.x_init)
    goal = robot.tip(problem.target)
    seq = predict_keypoints(net, start, goal, w, config.delta_frac * w.diag, config.max_steps)
    pts = list(seq.points)
    pts[-1] = Point2(float(goal[0]), float(goal[1]))
    return pts


def online_execute(models, problem: PlanningProblem, lam: float = 0.5,
                   config: OnlineConfig = OnlineConfig()) -> MixtureSampler:
    """Predict keypoints, condition one local sampler per consecutive pair and mix them equally.

    ``models`` is a ``(keypoint_net, cvae)`` pair.
    """
    net, cvae = models
    w = problem.workspace
    pts = online_keypoints(net, problem, config)
    occ = occupancy_grid(w, config.grid)
    conds = [condition_vector(w, a, b, config.grid, occ) for a, b in zip(pts, pts[1:])]
    n = len(conds)
    lo, hi = problem.config_bounds
    return synthesize_samplers([(c, 1.0 / n) for c in conds], lam, cvae, config.seed, lo, hi)


def global_cvae_sampler(cvae: CvaeModel, problem: PlanningProblem, lam: float, seed: int, grid: int = 16):
    """A single CVAE conditioned on the whole problem's start and goal."""
    w = problem.workspace
    a, b = problem.robot.tip(problem.x_init), problem.robot.tip(problem.target)
    lo, hi = problem.config_bounds
    return MixtureSampler(cvae, [condition_vector(w, a, b, grid)], [1.0], lam, lo, hi, seed)

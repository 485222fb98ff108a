"""RRT and RRT* over an abstract sample source.

Edges are checked at a fixed configuration-space resolution. The planner
draws a goal-bias sample (the target itself) with probability
``goal_bias`` no matter which sampler is plugged in. These draws are
not counted as sampler draws.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Protocol

import numpy as np

from .errors import InvalidParams
from .geometry import Workspace
from .robots import Path, interpolate


class SampleSource(Protocol):
    dim: int

    def sample(self) -> np.ndarray: ...


class UniformSampler:
    """Uniform draws over an axis-aligned configuration box."""

    def __init__(self, low, high, seed: int = 0, batch: int = 256):
        self.low = np.asarray(low, dtype=float)
        self.high = np.asarray(high, dtype=float)
        self.dim = len(self.low)
        self.rng = np.random.default_rng(seed)
        self.batch = batch
        self._buf = np.empty((0, self.dim))
        self._i = 0

    def sample(self) -> np.ndarray:
        if self._i >= len(self._buf):
            self._buf = self.rng.uniform(self.low, self.high, size=(self.batch, self.dim))
            self._i = 0
        x = self._buf[self._i]
        self._i += 1
        return x


@dataclass(frozen=True)
class PlanningProblem:
    robot: object
    workspace: Workspace
    x_init: np.ndarray
    target: np.ndarray
    goal_radius: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "x_init", np.asarray(self.x_init, dtype=float))
        object.__setattr__(self, "target", np.asarray(self.target, dtype=float))

    @property
    def config_bounds(self):
        return self.robot.config_bounds(self.workspace)

    @property
    def config_diag(self) -> float:
        lo, hi = self.config_bounds
        return float(np.linalg.norm(hi - lo))

    def uniform_sampler(self, seed: int = 0) -> UniformSampler:
        lo, hi = self.config_bounds
        return UniformSampler(lo, hi, seed)


@dataclass(frozen=True)
class PlannerParams:
    """Planner settings; ``None`` fields derive from the configuration box.

    ``step`` defaults to ``0.05 * diag``, ``resolution`` to ``step / 10``
    and the goal radius to ``step``.
    """

    max_iters: int = 3000
    step: float | None = None
    resolution: float | None = None
    goal_bias: float = 0.05
    gamma: float | None = None
    seed: int = 0

    def resolved(self, problem: PlanningProblem) -> "PlannerParams":
        step = self.step if self.step is not None else 0.05 * problem.config_diag
        res = self.resolution if self.resolution is not None else step / 10.0
        gamma = self.gamma if self.gamma is not None else rrt_star_gamma(problem)
        p = replace(self, step=step, resolution=res, gamma=gamma)
        if p.step <= 0 or p.max_iters <= 0 or p.resolution <= 0:
            raise InvalidParams("step, resolution and max_iters must be positive")
        if not 0.0 <= p.goal_bias <= 1.0:
            raise InvalidParams("goal_bias must lie in [0, 1]")
        return p


def rrt_star_gamma(problem: PlanningProblem) -> float:
    """Standard RRT* constant with the configuration-box volume."""
    lo, hi = problem.config_bounds
    d = len(lo)
    volume = float(np.prod(hi - lo))
    unit_ball = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)
    return 2.0 * (1.0 + 1.0 / d) ** (1.0 / d) * (volume / unit_ball) ** (1.0 / d)


@dataclass
class PlanResult:
    status: str
    path: Path | None
    iterations: int
    elapsed: float
    samples_drawn: int
    valid_samples: int
    first_solution_iter: int | None = None
    cost_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    valid_trace: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    drawn_trace: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def success(self) -> bool:
        return self.status == "Success"

    @property
    def cost(self) -> float:
        return self.path.cost if self.path is not None else math.inf

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "status": self.status,
            "iterations": self.iterations,
            "samples_drawn": self.samples_drawn,
            "valid_samples": self.valid_samples,
            "first_solution_iter": self.first_solution_iter,
            "cost": None if self.path is None else self.path.cost,
            "path": None if self.path is None else self.path.configurations.tolist(),
        }
        if include_timing:
            out["elapsed"] = self.elapsed
        return out


def edge_collides(robot, a, b, w: Workspace, resolution: float) -> bool:
    return bool(np.any(robot.collides_many(interpolate(robot, a, b, resolution), w)))


def edges_collide(robot, sources: np.ndarray, b, w: Workspace, resolution: float) -> np.ndarray:
    """Batched check of edges ``sources[i] -> b``."""
    if len(sources) == 0:
        return np.zeros(0, dtype=bool)
    d = robot.difference(sources, b)
    k = np.maximum(1, np.ceil(np.sqrt(np.sum(d * d, axis=1)) / resolution).astype(int))
    counts = k + 1
    owner = np.repeat(np.arange(len(sources)), counts)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    t = (np.arange(counts.sum()) - np.repeat(starts, counts)) / np.repeat(k, counts)
    pts = robot.normalize(sources[owner] + t[:, None] * d[owner])
    hit = robot.collides_many(pts, w)
    return np.logical_or.reduceat(hit, starts)


def validate_path(path: Path, robot, w: Workspace, resolution: float | None = None) -> bool:
    """Every interpolated configuration along the path is collision-free."""
    if resolution is None:
        lo, hi = robot.config_bounds(w)
        resolution = 0.005 * float(np.linalg.norm(hi - lo))
    cfg = path.configurations
    for a, b in zip(cfg, cfg[1:]):
        if edge_collides(robot, a, b, w, resolution):
            return False
    return True


class _Tree:
    def __init__(self, root, capacity, dim):
        self.nodes = np.empty((capacity, dim))
        self.parent = np.full(capacity, -1, dtype=int)
        self.cost = np.zeros(capacity)
        self.children: list[list[int]] = [[] for _ in range(capacity)]
        self.nodes[0] = root
        self.n = 1

    def add(self, x, parent, cost) -> int:
        i = self.n
        self.nodes[i] = x
        self.parent[i] = parent
        self.cost[i] = cost
        self.children[parent].append(i)
        self.n += 1
        return i

    def reparent(self, i, new_parent, new_cost):
        old = self.parent[i]
        self.children[old].remove(i)
        self.children[new_parent].append(i)
        self.parent[i] = new_parent
        delta = self.cost[i] - new_cost
        stack = [i]
        self.cost[i] = new_cost
        while stack:
            j = stack.pop()
            for c in self.children[j]:
                self.cost[c] -= delta
                stack.append(c)

    def branch(self, i) -> list[int]:
        out = [i]
        while self.parent[out[-1]] >= 0:
            out.append(int(self.parent[out[-1]]))
        return out[::-1]


def _check_problem(problem: PlanningProblem):
    robot = problem.robot
    if problem.x_init.shape != (robot.dim,) or problem.target.shape != (robot.dim,):
        raise InvalidParams("x_init and target must match the robot dimension")


def plan_rrt(problem: PlanningProblem, source: SampleSource, params: PlannerParams = PlannerParams()) -> PlanResult:
    return _plan(problem, source, params, star=False)


def plan_rrt_star(problem: PlanningProblem, source: SampleSource, params: PlannerParams = PlannerParams()) -> PlanResult:
    return _plan(problem, source, params, star=True)


def _plan(problem: PlanningProblem, source, params: PlannerParams, star: bool) -> PlanResult:
    _check_problem(problem)
    p = params.resolved(problem)
    robot, w = problem.robot, problem.workspace
    rho = problem.goal_radius if problem.goal_radius is not None else p.step
    target = problem.target
    rng = np.random.default_rng(p.seed)
    t0 = time.perf_counter()
    d = robot.dim

    if robot.distance(problem.x_init, target) <= rho and not edge_collides(robot, problem.x_init, target, w, p.resolution):
        path = Path(np.vstack([problem.x_init, target]), robot.periodic)
        cost = path.cost
        return PlanResult("Success", path, 0, time.perf_counter() - t0, 0, 0, 0,
                          np.full(0, cost), np.zeros(0, dtype=int), np.zeros(0, dtype=int))

    tree = _Tree(problem.x_init, p.max_iters + 1, d)
    goal_nodes: list[int] = []
    goal_link = np.zeros(p.max_iters + 1)
    best = math.inf
    best_node = -1
    first = None
    drawn = valid = 0
    cost_trace = np.full(p.max_iters, math.inf)
    valid_trace = np.zeros(p.max_iters, dtype=int)
    drawn_trace = np.zeros(p.max_iters, dtype=int)
    it = 0
    for it in range(1, p.max_iters + 1):
        if rng.random() < p.goal_bias:
            x = target
        else:
            x = np.asarray(source.sample(), dtype=float)
            drawn += 1
            if not robot.collides_many(x[None, :], w)[0]:
                valid += 1
        k = it - 1
        drawn_trace[k] = drawn
        valid_trace[k] = valid

        n = tree.n
        dist = robot.distance(tree.nodes[:n], x)
        near_i = int(np.argmin(dist))
        dn = dist[near_i]
        if dn <= 1e-12:
            cost_trace[k] = best
            continue
        if dn > p.step:
            x_new = robot.normalize(tree.nodes[near_i] + robot.difference(tree.nodes[near_i], x) * (p.step / dn))
        else:
            x_new = robot.normalize(np.array(x, dtype=float))
        if robot.collides_many(x_new[None, :], w)[0]:
            cost_trace[k] = best
            continue

        if star:
            radius = min(p.gamma * (math.log(n + 1) / (n + 1)) ** (1.0 / d), p.step)
            dnew = robot.distance(tree.nodes[:n], x_new)
            near = np.flatnonzero(dnew <= radius)
            if near_i not in near:
                near = np.append(near, near_i)
            via = tree.cost[near] + dnew[near]
            order = np.argsort(via, kind="stable")
            bad = edges_collide(robot, tree.nodes[near[order]], x_new, w, p.resolution)
            ok = np.flatnonzero(~bad)
            if len(ok) == 0:
                cost_trace[k] = best
                continue
            parent = int(near[order[ok[0]]])
            new = tree.add(x_new, parent, tree.cost[parent] + dnew[parent])
            # rewire neighbours that get cheaper through the new node
            others = near[near != parent]
            if len(others):
                cand = tree.cost[new] + dnew[others]
                better = others[cand < tree.cost[others] - 1e-12]
                if len(better):
                    bad = edges_collide(robot, tree.nodes[better], x_new, w, p.resolution)
                    for j in better[~bad]:
                        c = tree.cost[new] + dnew[j]
                        if c < tree.cost[j] - 1e-12:
                            tree.reparent(int(j), new, c)
        else:
            if edges_collide(robot, tree.nodes[near_i][None, :], x_new, w, p.resolution)[0]:
                cost_trace[k] = best
                continue
            new = tree.add(x_new, near_i, tree.cost[near_i] + robot.distance(tree.nodes[near_i], x_new))

        dg = float(robot.distance(x_new, target))
        if dg <= rho and (dg == 0.0 or not edge_collides(robot, x_new, target, w, p.resolution)):
            goal_nodes.append(new)
            goal_link[new] = dg
        if goal_nodes:
            gn = np.array(goal_nodes)
            totals = tree.cost[gn] + goal_link[gn]
            j = int(np.argmin(totals))
            if totals[j] < best:
                best = float(totals[j])
                best_node = int(gn[j])
            if first is None:
                first = it
        cost_trace[k] = best
        if first is not None and not star:
            break

    elapsed = time.perf_counter() - t0
    iters = it
    cost_trace = cost_trace[:iters]
    valid_trace = valid_trace[:iters]
    drawn_trace = drawn_trace[:iters]
    if best_node < 0:
        return PlanResult("Timeout", None, iters, elapsed, drawn, valid, None, cost_trace, valid_trace, drawn_trace)
    branch = tree.branch(best_node)
    cfg = tree.nodes[branch]
    if goal_link[best_node] > 0.0:
        cfg = np.vstack([cfg, target])
    path = Path(cfg.copy(), robot.periodic)
    return PlanResult("Success", path, iters, elapsed, drawn, valid, first, cost_trace, valid_trace, drawn_trace)

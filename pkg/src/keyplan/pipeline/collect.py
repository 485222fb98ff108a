"""Training data collection: keypoint search with a feasibility repair loop.

The workspace is decomposed, keypoint candidates are connected, and the
shortest keypoint sequence is handed to a planner one subproblem at a
time. A subproblem that cannot be solved, or whose only solutions wander
back into cells already crossed, has its terminal's edges removed from the
graph and the search restarts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..bsp import build_bsp, leaf_cells
from ..errors import Infeasible, NoPath, StartOrGoalInCollision, Unreachable
from ..geometry import Point2, Segment, Workspace, segment_collides
from ..keypoints import (
    GOAL,
    KeypointSequence,
    Verdict,
    build_connectivity_graph,
    examine_path,
    keypoint_candidates,
    merge_with_anchors,
    repair_graph,
    select_shortest,
    shortest_keypoint_sequence,
    trace_cells,
)
from ..planner import PlannerParams, PlanningProblem, UniformSampler, edge_collides, plan_rrt, validate_path
from ..robots import Path, PlanarArm, PointRobot, config_collides, inverse_kinematics, robot_from_dict, workspace_trace


@dataclass(frozen=True)
class CollectConfig:
    resolution: int = 3
    merge_frac: float = 0.05
    margin_frac: float = 0.01
    attempts: int = 3
    max_iters: int = 3000
    goal_bias: float = 0.2
    max_repairs: int = 60
    seed: int = 0
    direct_first: bool = True

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "CollectConfig":
        return cls(**d)


@dataclass
class DatasetRecord:
    """One solved problem: merged keypoints and the configuration path of every merged segment."""

    workspace: Workspace
    robot: object
    x_init: np.ndarray
    x_target: np.ndarray
    keypoints: list[Point2]
    paths: list[np.ndarray]
    seed: int
    env_seed: int | None = None
    repairs: int = 0
    raw_keypoints: list[Point2] = field(default_factory=list)

    @property
    def subproblems(self) -> list[tuple[Point2, Point2, np.ndarray]]:
        return [(a, b, p) for a, b, p in zip(self.keypoints, self.keypoints[1:], self.paths)]

    def validate(self, resolution: float | None = None) -> bool:
        return all(validate_path(Path(p, self.robot.periodic), self.robot, self.workspace, resolution)
                   for p in self.paths)

    def to_dict(self) -> dict:
        return {
            "env": self.workspace.to_dict(),
            "env_seed": self.env_seed,
            "robot": self.robot.to_dict(),
            "x_init": self.x_init.tolist(),
            "x_target": self.x_target.tolist(),
            "keypoints": [[p[0], p[1]] for p in self.keypoints],
            "raw_keypoints": [[p[0], p[1]] for p in self.raw_keypoints],
            "paths": [p.tolist() for p in self.paths],
            "seed": self.seed,
            "repairs": self.repairs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetRecord":
        return cls(
            Workspace.from_dict(d["env"]),
            robot_from_dict(d["robot"]),
            np.array(d["x_init"], dtype=float),
            np.array(d["x_target"], dtype=float),
            [Point2(*p) for p in d["keypoints"]],
            [np.array(p, dtype=float) for p in d["paths"]],
            int(d["seed"]),
            d.get("env_seed"),
            int(d.get("repairs", 0)),
            [Point2(*p) for p in d.get("raw_keypoints", [])],
        )


def _tip(robot, q) -> Point2:
    t = robot.tip(np.asarray(q, dtype=float))
    return Point2(float(t[0]), float(t[1]))


def _subgoal_configs(robot, w: Workspace, k: Point2) -> list[np.ndarray]:
    """Collision-free configurations placing the robot (tip) at keypoint ``k``."""
    if isinstance(robot, PlanarArm):
        try:
            sols = inverse_kinematics(robot, k)
        except Unreachable:
            return []
        return [q for q in sols if not config_collides(robot, q, w)]
    q = np.array([k.x, k.y])
    return [] if config_collides(robot, q, w) else [q]


class _Collector:
    def __init__(self, w: Workspace, robot, x_init, x_target, config: CollectConfig):
        self.w, self.robot, self.cfg = w, robot, config
        self.x_init = np.asarray(x_init, dtype=float)
        self.x_target = np.asarray(x_target, dtype=float)
        self.tree = build_bsp(w)
        self.cells = leaf_cells(self.tree)
        self.margin = config.margin_frac * w.diag
        self.cache: dict = {}
        self.runs = 0

    def solve(self, q0: np.ndarray, node: int, k: Point2, visited: set[int]):
        """Shortest accepted path from ``q0`` to a configuration at keypoint ``k``."""
        key = (q0.tobytes(), node, tuple(sorted(visited)))
        if key in self.cache:
            return self.cache[key]
        goals = [self.x_target] if node == GOAL else _subgoal_configs(self.robot, self.w, k)
        accepted = []
        for qg in goals:
            if self.cfg.direct_first:
                # a free straight edge is the shortest path there is, so no sampling is needed
                direct = self._direct(q0, qg, visited)
                if direct is not None:
                    accepted.append(direct)
                    continue
            for a in range(self.cfg.attempts):
                seed = self.cfg.seed * 1_000_003 + self.runs
                self.runs += 1
                problem = PlanningProblem(self.robot, self.w, q0, qg)
                lo, hi = problem.config_bounds
                params = PlannerParams(max_iters=self.cfg.max_iters, goal_bias=self.cfg.goal_bias, seed=seed)
                res = plan_rrt(problem, UniformSampler(lo, hi, seed), params)
                if not res.success:
                    continue
                path = res.path
                if not np.allclose(path.end, qg):
                    continue
                trace = workspace_trace(self.robot, path, self.w)
                if examine_path(trace, self.cells, visited, self.margin) is Verdict.ACCEPT:
                    accepted.append(path)
        best = select_shortest(accepted)
        self.cache[key] = best
        return best

    def _direct(self, q0, qg, visited):
        problem = PlanningProblem(self.robot, self.w, q0, qg)
        if edge_collides(self.robot, q0, qg, self.w, 0.005 * problem.config_diag):
            return None
        if isinstance(self.robot, PointRobot) and segment_collides(Segment(Point2(*q0), Point2(*qg)), self.w):
            return None
        path = Path(np.vstack([q0, qg]), self.robot.periodic)
        trace = workspace_trace(self.robot, path, self.w)
        if examine_path(trace, self.cells, visited, self.margin) is Verdict.ACCEPT:
            return path
        return None

    def run(self):
        start, goal = _tip(self.robot, self.x_init), _tip(self.robot, self.x_target)
        cands = keypoint_candidates(self.tree.free_boundaries, self.cfg.resolution, tree=self.tree)
        try:
            g = build_connectivity_graph(self.cells, cands, start, goal, self.w)
        except StartOrGoalInCollision as e:
            raise Infeasible(str(e)) from e
        repairs = 0
        while True:
            try:
                seq = shortest_keypoint_sequence(g)
            except NoPath as e:
                raise Infeasible("keypoint graph exhausted") from e
            paths, failed = self._follow(seq)
            if failed is None:
                return seq, paths, repairs
            repairs += 1
            if repairs > self.cfg.max_repairs:
                raise Infeasible(f"gave up after {self.cfg.max_repairs} repairs")
            try:
                repair_graph(g, failed, seq)
            except NoPath as e:
                raise Infeasible(str(e)) from e

    def _follow(self, seq: KeypointSequence):
        q = self.x_init
        # the start cell counts as passed: leaving it and coming back is a revisit
        visited = set(trace_cells(self.robot.tip(q)[None, :], self.cells))
        paths = []
        for i in range(1, len(seq.points)):
            node = seq.node_ids[i]
            path = self.solve(q, node, seq.points[i], visited)
            if path is None:
                return None, node
            paths.append(path)
            visited.update(trace_cells(workspace_trace(self.robot, path, self.w), self.cells, self.margin))
            q = path.end
        return paths, None


def collect_training_example(w: Workspace, robot, x_init, x_target, config: CollectConfig = CollectConfig(),
                             env_seed: int | None = None) -> DatasetRecord:
    """Solve one problem through keypoints and return the merged record.

    Raises ``Infeasible`` when the repair loop runs out of graph edges or
    repairs.
    """
    c = _Collector(w, robot, x_init, x_target, config)
    seq, paths, repairs = c.run()
    points, anchors = merge_with_anchors(seq, config.merge_frac * w.diag)
    merged_paths = []
    for a, b in zip(anchors, anchors[1:]):
        parts = [paths[a].configurations] + [p.configurations[1:] for p in paths[a + 1:b]]
        merged_paths.append(np.vstack(parts))
    rec = DatasetRecord(w, robot, c.x_init, c.x_target, [Point2(*p) for p in points], merged_paths,
                        config.seed, env_seed, repairs, list(seq.points))
    if not rec.validate():
        raise Infeasible("a collected path failed re-validation")
    return rec

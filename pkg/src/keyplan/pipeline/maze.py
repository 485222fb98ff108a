"""Random rectilinear mazes for the point robot and two-gap worlds for the arm."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import GenerationFailed, InvalidParams
from ..geometry import ConvexPolygon, Point2, Segment, Workspace, point_in_free_space, segment_collides
from ..robots import PlanarArm, config_collides, inverse_kinematics


def wall_piece(x0, y0, x1, y1, on_floor: bool) -> ConvexPolygon:
    """Rectangle whose facet on the outer bound is listed between its two long sides.

    The ordering makes the long sides the first facets tried by the BSP
    tie-break, so a wall is cut out as a strip before its gap is split off.
    """
    if on_floor:
        # left, bottom, right, top
        return ConvexPolygon(((x0, y1), (x0, y0), (x1, y0), (x1, y1)))
    # right, top, left, bottom
    return ConvexPolygon(((x1, y0), (x1, y1), (x0, y1), (x0, y0)))


@dataclass(frozen=True)
class MazeConfig:
    bounds: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)
    walls: tuple[int, int] = (3, 3)
    thickness: tuple[float, float] = (0.18, 0.22)
    gap_width: tuple[float, float] = (0.08, 0.12)
    gap_center: tuple[float, float] = (0.2, 0.8)
    jitter: float = 0.02
    margin: float = 0.03
    retries: int = 50

    def __post_init__(self):
        if self.walls[0] < 1 or self.walls[1] < self.walls[0]:
            raise InvalidParams("wall count range must be positive and ordered")
        if self.gap_width[0] <= 0 or self.gap_width[1] < self.gap_width[0]:
            raise InvalidParams("gap width range must be positive and ordered")

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "MazeConfig":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


def _try_maze(rng: np.random.Generator, cfg: MazeConfig):
    x0, y0, x1, y1 = cfg.bounds
    W, H = x1 - x0, y1 - y0
    n = int(rng.integers(cfg.walls[0], cfg.walls[1] + 1))
    t = rng.uniform(*cfg.thickness, size=n) * W
    room = (W - t.sum()) / (n + 1)
    if room <= 2 * cfg.margin * W:
        return None
    obstacles = []
    walls = []
    x = x0 + room
    for i in range(n):
        xl = x + rng.uniform(-cfg.jitter, cfg.jitter) * W
        xr = xl + t[i]
        g = rng.uniform(*cfg.gap_width) * H
        c = y0 + rng.uniform(*cfg.gap_center) * H
        lo, hi = c - 0.5 * g, c + 0.5 * g
        if lo <= y0 or hi >= y1:
            return None
        obstacles.append(wall_piece(xl, y0, xr, lo, True))
        obstacles.append(wall_piece(xl, hi, xr, y1, False))
        walls.append((xl, xr))
        x += room + t[i]
    w = Workspace(cfg.bounds, tuple(obstacles))
    m = cfg.margin * W

    def pick(left, right):
        for _ in range(20):
            p = Point2(float(rng.uniform(left + m, right - m)), float(rng.uniform(y0 + m, y1 - m)))
            if point_in_free_space(p, w):
                return p
        return None

    start = pick(x0, walls[0][0])
    goal = pick(walls[-1][1], x1)
    if start is None or goal is None:
        return None
    return w, start, goal


def generate_maze(seed: int, config: MazeConfig = MazeConfig()):
    """Vertical walls with one gap each; start left of the first wall and goal right of the last."""
    rng = np.random.default_rng(seed)
    for _ in range(config.retries):
        out = _try_maze(rng, config)
        if out is not None:
            w, s, g = out
            return w, np.array(s), np.array(g)
    raise GenerationFailed(f"no valid maze after {config.retries} attempts (seed {seed})")


@dataclass(frozen=True)
class ArmWorldConfig:
    bounds: tuple[float, float, float, float] = (-1.0, -1.0, 1.0, 1.0)
    base: tuple[float, float] = (0.0, -0.6)
    links: tuple[float, ...] = (0.45, 0.4, 0.35)
    width_frac: float = 0.02
    wall_y: tuple[float, float] = (-0.05, 0.05)
    gap_width: tuple[float, float] = (0.22, 0.3)
    retries: int = 100

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ArmWorldConfig":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


def generate_arm_world(seed: int, config: ArmWorldConfig = ArmWorldConfig()):
    """Horizontal wall with two gaps above an arm; the tip starts below it and must reach through the other gap.

    Returns ``(workspace, arm, q_init, q_target)``.
    """
    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = config.bounds
    wl, wh = config.wall_y
    w_diag = math.hypot(x1 - x0, y1 - y0)
    arm = PlanarArm(Point2(*config.base), config.links, config.width_frac * w_diag)
    for _ in range(config.retries):
        g1 = rng.uniform(*config.gap_width)
        g2 = rng.uniform(*config.gap_width)
        c1 = rng.uniform(-0.55, -0.25)
        c2 = rng.uniform(0.25, 0.55)
        xs = [x0, c1 - g1 / 2, c1 + g1 / 2, c2 - g2 / 2, c2 + g2 / 2, x1]
        obstacles = tuple(_horizontal_piece(xs[2 * i], xs[2 * i + 1], wl, wh) for i in range(3))
        w = Workspace(config.bounds, obstacles)
        # tip targets above the wall, one over each gap
        side = rng.permutation([c1, c2])
        p_init = Point2(float(side[0] + rng.uniform(-0.05, 0.05)), float(wh + rng.uniform(0.08, 0.2)))
        p_goal = Point2(float(side[1] + rng.uniform(-0.05, 0.05)), float(wh + rng.uniform(0.08, 0.2)))
        q_init = _free_ik(arm, p_init, w)
        q_goal = _free_ik(arm, p_goal, w)
        if q_init is None or q_goal is None:
            continue
        return w, arm, q_init, q_goal
    raise GenerationFailed(f"no valid arm world after {config.retries} attempts (seed {seed})")


def _horizontal_piece(xa, xb, ya, yb) -> ConvexPolygon:
    # top, left, bottom, right: horizontal sides are tried first
    return ConvexPolygon(((xb, yb), (xa, yb), (xa, ya), (xb, ya)))


def _free_ik(arm: PlanarArm, p, w: Workspace):
    try:
        sols = inverse_kinematics(arm, p)
    except Exception:
        return None
    for q in sols:
        if not config_collides(arm, q, w):
            return np.asarray(q, dtype=float)
    return None


def straight_line_blocked(w: Workspace, start, goal) -> bool:
    return segment_collides(Segment(Point2(*start), Point2(*goal)), w)

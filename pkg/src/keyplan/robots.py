"""Robot models: a 2D point robot and a planar revolute arm.

Both expose the same small interface used by the planners: a
configuration box, a metric (``difference``/``distance``), interpolation
and a batched collision test against a :class:`Workspace`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidParams, Unreachable
from .geometry import EPS, Point2, Workspace, in_bounds, points_free

TWO_PI = 2.0 * math.pi


def wrap_angles(q):
    """Map angles into ``(-pi, pi]``."""
    return math.pi - np.mod(math.pi - np.asarray(q, dtype=float), TWO_PI)


@dataclass(frozen=True)
class Path:
    configurations: np.ndarray
    periodic: bool = False

    def __post_init__(self):
        arr = np.asarray(self.configurations, dtype=float)
        if arr.ndim != 2 or len(arr) < 2:
            raise ValueError("a path needs at least two configurations")
        object.__setattr__(self, "configurations", arr)

    @property
    def cost(self) -> float:
        return path_cost(self)

    @property
    def start(self) -> np.ndarray:
        return self.configurations[0]

    @property
    def end(self) -> np.ndarray:
        return self.configurations[-1]


def _steps(path: Path) -> np.ndarray:
    d = np.diff(path.configurations, axis=0)
    if path.periodic:
        d = wrap_angles(d)
    return d


def path_cost(path: Path) -> float:
    """Sum of consecutive configuration distances (angles wrap for arms)."""
    return float(np.sum(np.linalg.norm(_steps(path), axis=1)))


class PointRobot:
    kind = "point"
    periodic = False

    @property
    def dim(self) -> int:
        return 2

    def config_bounds(self, w: Workspace) -> tuple[np.ndarray, np.ndarray]:
        x0, y0, x1, y1 = w.bounds
        return np.array([x0, y0]), np.array([x1, y1])

    def difference(self, a, b):
        return np.subtract(b, a, dtype=float)

    def distance(self, a, b):
        d = np.subtract(b, a, dtype=float)
        return np.sqrt(np.sum(d * d, axis=-1))

    def normalize(self, q):
        return np.asarray(q, dtype=float)

    def tip(self, q) -> np.ndarray:
        return np.asarray(q, dtype=float)

    def tips(self, qs) -> np.ndarray:
        return np.asarray(qs, dtype=float)

    def tip_speed_bound(self) -> float:
        """Upper bound on tip displacement per unit of configuration distance."""
        return 1.0

    def collides_many(self, qs, w: Workspace) -> np.ndarray:
        qs = np.atleast_2d(np.asarray(qs, dtype=float))
        if qs.shape[1] != 2:
            raise DimensionMismatch(f"point robot expects 2 coordinates, got {qs.shape[1]}")
        return ~points_free(qs, w)

    def to_dict(self) -> dict:
        return {"type": "point"}


@dataclass(frozen=True)
class PlanarArm:
    base: Point2
    link_lengths: tuple[float, ...]
    link_width: float

    kind = "arm"
    periodic = True

    def __post_init__(self):
        object.__setattr__(self, "base", Point2(float(self.base[0]), float(self.base[1])))
        lengths = tuple(float(l) for l in self.link_lengths)
        object.__setattr__(self, "link_lengths", lengths)
        if not 2 <= len(lengths) <= 6:
            raise InvalidParams("arm must have between 2 and 6 links")
        if any(l <= 0 for l in lengths) or self.link_width <= 0:
            raise InvalidParams("link lengths and width must be positive")

    @property
    def dim(self) -> int:
        return len(self.link_lengths)

    @property
    def reach(self) -> float:
        return float(sum(self.link_lengths))

    def config_bounds(self, w: Workspace | None = None):
        n = self.dim
        return np.full(n, -math.pi), np.full(n, math.pi)

    def difference(self, a, b):
        return wrap_angles(np.subtract(b, a, dtype=float))

    def distance(self, a, b):
        d = wrap_angles(np.subtract(b, a, dtype=float))
        return np.sqrt(np.sum(d * d, axis=-1))

    def normalize(self, q):
        return wrap_angles(q)

    def joints(self, qs) -> np.ndarray:
        """Base and joint positions, shape ``(..., n + 1, 2)``."""
        qs = np.asarray(qs, dtype=float)
        if qs.shape[-1] != self.dim:
            raise DimensionMismatch(f"arm has {self.dim} joints, got {qs.shape[-1]} angles")
        th = np.cumsum(qs, axis=-1)
        lengths = np.array(self.link_lengths)
        steps = np.stack([lengths * np.cos(th), lengths * np.sin(th)], axis=-1)
        out = np.concatenate([np.zeros(qs.shape[:-1] + (1, 2)), np.cumsum(steps, axis=-2)], axis=-2)
        return out + np.array(self.base)

    def tip(self, q) -> np.ndarray:
        return self.joints(q)[..., -1, :]

    def tips(self, qs) -> np.ndarray:
        return self.joints(qs)[..., -1, :]

    def tip_speed_bound(self) -> float:
        return self.reach

    def jacobian(self, q) -> np.ndarray:
        th = np.cumsum(q)
        lengths = np.array(self.link_lengths)
        dx = -lengths * np.sin(th)
        dy = lengths * np.cos(th)
        # column i sums contributions of links i..n-1
        return np.vstack([np.cumsum(dx[::-1])[::-1], np.cumsum(dy[::-1])[::-1]])

    def link_rectangles(self, qs) -> np.ndarray:
        """Corner coordinates of every link, shape ``(..., n, 4, 2)``."""
        j = self.joints(qs)
        a, b = j[..., :-1, :], j[..., 1:, :]
        u = (b - a) / np.array(self.link_lengths)[:, None]
        v = np.stack([-u[..., 1], u[..., 0]], axis=-1) * (0.5 * self.link_width)
        return np.stack([a - v, b - v, b + v, a + v], axis=-2)

    def collides_many(self, qs, w: Workspace) -> np.ndarray:
        qs = np.atleast_2d(np.asarray(qs, dtype=float))
        rects = self.link_rectangles(qs)  # (B, n, 4, 2)
        hit = ~np.all(in_bounds(rects, w), axis=(-1, -2))
        if not w.obstacles:
            return hit
        j = self.joints(qs)
        a, b = j[:, :-1, :], j[:, 1:, :]
        center = 0.5 * (a + b)
        u = (b - a) / np.array(self.link_lengths)[:, None]
        v = np.stack([-u[..., 1], u[..., 0]], axis=-1)
        half_len = 0.5 * np.array(self.link_lengths)
        half_w = 0.5 * self.link_width
        for o in w.obstacles:
            verts = o.array
            normals, offsets = o._normals
            lows = (verts @ normals.T).min(axis=0)
            proj = rects @ normals.T  # (B, n, 4, K)
            pmin, pmax = proj.min(axis=-2), proj.max(axis=-2)
            sep = np.any((pmin > offsets + EPS) | (pmax < lows - EPS), axis=-1)
            for axis, half in ((u, half_len), (v, half_w)):
                pv = np.einsum("bnd,kd->bnk", axis, verts)
                c = np.einsum("bnd,bnd->bn", axis, center)
                sep |= (pv.min(axis=-1) > c + half + EPS) | (pv.max(axis=-1) < c - half - EPS)
            hit |= np.any(~sep, axis=-1)
        return hit

    def to_dict(self) -> dict:
        return {"type": "arm", "base": [self.base.x, self.base.y], "links": list(self.link_lengths),
                "width": self.link_width}


def robot_from_dict(data: dict):
    if data.get("type") == "point":
        return PointRobot()
    if data.get("type") == "arm":
        return PlanarArm(Point2(*data["base"]), tuple(data["links"]), float(data["width"]))
    raise InvalidParams(f"unknown robot description {data!r}")


def forward_kinematics(arm: PlanarArm, q) -> list[Point2]:
    """Base followed by every joint and the tip."""
    q = np.asarray(q, dtype=float)
    if q.shape != (arm.dim,):
        raise DimensionMismatch(f"expected {arm.dim} angles, got shape {q.shape}")
    return [Point2(*p) for p in arm.joints(q)]


IK_SEEDS = 16
IK_TOL = 1e-6
IK_DEDUP = 1e-3


def _reach_annulus(arm: PlanarArm) -> tuple[float, float]:
    lengths = arm.link_lengths
    total = sum(lengths)
    inner = max(0.0, 2.0 * max(lengths) - total)
    return inner, total


def inverse_kinematics(arm: PlanarArm, target) -> list[np.ndarray]:
    """All IK solutions found for placing the tip at ``target``.

    Two links are solved in closed form (elbow up and down). Longer
    chains use damped least squares from a fixed set of seeds. In both
    cases solutions within ``IK_DEDUP`` radians of each other are merged.
    """
    target = np.asarray(target, dtype=float)
    rel = target - np.array(arm.base)
    r = math.hypot(*rel)
    inner, outer = _reach_annulus(arm)
    if r > outer + 1e-9 or r < inner - 1e-9:
        raise Unreachable(f"target at distance {r:.6g} outside reach annulus [{inner:.6g}, {outer:.6g}]")
    if arm.dim == 2:
        cands = _ik_two_link(arm, rel, r)
    else:
        cands = _ik_dls(arm, target)
    out: list[np.ndarray] = []
    for q in cands:
        q = wrap_angles(q)
        if np.hypot(*(arm.tip(q) - target)) > IK_TOL:
            continue
        if any(np.max(np.abs(wrap_angles(q - p))) <= IK_DEDUP for p in out):
            continue
        out.append(q)
    return out


def _ik_two_link(arm, rel, r):
    l1, l2 = arm.link_lengths
    c2 = (r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    c2 = min(1.0, max(-1.0, c2))
    sols = []
    for sign in (1.0, -1.0):
        q2 = sign * math.acos(c2)
        q1 = math.atan2(rel[1], rel[0]) - math.atan2(l2 * math.sin(q2), l1 + l2 * math.cos(q2))
        sols.append(np.array([q1, q2]))
    return sols


def ik_seeds(n: int) -> np.ndarray:
    return np.random.default_rng(20240613).uniform(-math.pi, math.pi, size=(IK_SEEDS, n))


def _ik_dls(arm, target, damping=0.05, iters=400):
    sols = []
    for q in ik_seeds(arm.dim):
        q = q.copy()
        for _ in range(iters):
            e = target - arm.tip(q)
            err = math.hypot(*e)
            if err < 1e-12:
                break
            J = arm.jacobian(q)
            lam = damping if err > 1e-4 else 0.0
            A = J @ J.T + (lam * lam) * np.eye(2)
            q = q + J.T @ np.linalg.solve(A, e)
        sols.append(q)
    return sols


def config_collides(robot, q, w: Workspace) -> bool:
    q = np.asarray(q, dtype=float)
    if q.shape != (robot.dim,):
        raise DimensionMismatch(f"expected configuration of size {robot.dim}, got shape {q.shape}")
    return bool(robot.collides_many(q[None, :], w)[0])


def interpolate(robot, a, b, resolution: float) -> np.ndarray:
    """Configurations from ``a`` to ``b`` spaced at most ``resolution`` apart, endpoints included."""
    a = np.asarray(a, dtype=float)
    d = robot.difference(a, b)
    k = max(1, int(math.ceil(float(np.linalg.norm(d)) / resolution)))
    t = np.linspace(0.0, 1.0, k + 1)[:, None]
    return robot.normalize(a + t * d)


def densify(robot, configs, resolution: float) -> np.ndarray:
    """Insert configurations so consecutive ones are at most ``resolution`` apart."""
    configs = np.asarray(configs, dtype=float)
    parts = [configs[:1]]
    for a, b in zip(configs, configs[1:]):
        parts.append(interpolate(robot, a, b, resolution)[1:])
    return np.vstack(parts)


def workspace_trace(robot, path: Path, w: Workspace) -> np.ndarray:
    """Tip positions along ``path`` with gaps of at most ``0.01 * diag(bounds)``."""
    spacing = 0.01 * w.diag
    # tip speed bound turns a config-space step into a workspace bound
    step = spacing / (robot.tip_speed_bound() * math.sqrt(robot.dim))
    dense = densify(robot, path.configurations, step)
    return robot.tips(dense)

"""2D geometric kernel: convex polygons, half-planes, segments and collision predicates.

Obstacles are closed sets, so touching an obstacle boundary counts as a
collision. All predicates use an absolute degeneracy tolerance of ``EPS``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateWorkspace, InvalidGeometry

EPS = 1e-12
REL_EPS = 1e-9


class Point2(NamedTuple):
    x: float
    y: float


def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def polygon_area(pts: Sequence[Sequence[float]]) -> float:
    """Signed shoelace area (positive for counter-clockwise order)."""
    a = 0.0
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        a += x0 * y1 - x1 * y0
    return 0.5 * a


def clean_ring(pts, tol: float = EPS):
    """Drop repeated and collinear vertices of a convex ring.

    Returns a list of ``Point2`` or ``None`` when fewer than three
    vertices survive.
    """
    out = []
    for p in pts:
        p = Point2(float(p[0]), float(p[1]))
        if out and abs(out[-1].x - p.x) <= tol and abs(out[-1].y - p.y) <= tol:
            continue
        out.append(p)
    while len(out) > 1 and abs(out[0].x - out[-1].x) <= tol and abs(out[0].y - out[-1].y) <= tol:
        out.pop()
    changed = True
    while changed and len(out) >= 3:
        changed = False
        n = len(out)
        for i in range(n):
            a, b, c = out[i - 1], out[i], out[(i + 1) % n]
            ac = math.hypot(c.x - a.x, c.y - a.y)
            if ac <= tol:
                del out[i]
                changed = True
                break
            dist = abs(_cross(a.x, a.y, c.x, c.y, b.x, b.y)) / ac
            if dist <= tol:
                del out[i]
                changed = True
                break
    if len(out) < 3:
        return None
    return out


@dataclass(frozen=True)
class Halfplane:
    """The closed set ``{p : normal . p <= offset}`` with a unit normal."""

    normal: tuple[float, float]
    offset: float

    def __post_init__(self):
        nx, ny = self.normal
        if abs(math.hypot(nx, ny) - 1.0) > REL_EPS:
            raise InvalidGeometry(f"halfplane normal {self.normal} is not unit length")
        object.__setattr__(self, "normal", (float(nx), float(ny)))
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def through(cls, a, b) -> "Halfplane":
        """Half-plane to the left of the directed line ``a -> b``.

        For an edge of a counter-clockwise polygon this is the side that
        contains the polygon, with the normal pointing outward.
        """
        dx, dy = b[0] - a[0], b[1] - a[1]
        length = math.hypot(dx, dy)
        if length <= EPS:
            raise InvalidGeometry("cannot build a line through coincident points")
        nx, ny = dy / length, -dx / length
        return cls((nx, ny), nx * a[0] + ny * a[1])

    def signed_distance(self, p) -> float:
        return self.normal[0] * p[0] + self.normal[1] * p[1] - self.offset

    def direction(self) -> tuple[float, float]:
        """Unit vector along the boundary line."""
        return (-self.normal[1], self.normal[0])

    def flipped(self) -> "Halfplane":
        return Halfplane((-self.normal[0], -self.normal[1]), -self.offset)


@dataclass(frozen=True)
class Segment:
    a: Point2
    b: Point2

    def __post_init__(self):
        a = Point2(float(self.a[0]), float(self.a[1]))
        b = Point2(float(self.b[0]), float(self.b[1]))
        if math.hypot(b.x - a.x, b.y - a.y) <= EPS:
            raise InvalidGeometry("degenerate segment")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self) -> float:
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)

    @property
    def midpoint(self) -> Point2:
        return Point2(0.5 * (self.a.x + self.b.x), 0.5 * (self.a.y + self.b.y))

    def point_at(self, t: float) -> Point2:
        return Point2(self.a.x + t * (self.b.x - self.a.x), self.a.y + t * (self.b.y - self.a.y))

    def reversed(self) -> "Segment":
        return Segment(self.b, self.a)


@dataclass(frozen=True, eq=True)
class ConvexPolygon:
    """Strictly convex polygon with counter-clockwise vertices."""

    vertices: tuple[Point2, ...]

    def __post_init__(self):
        verts = tuple(Point2(float(v[0]), float(v[1])) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise InvalidGeometry("polygon needs at least three vertices")
        for v in verts:
            if not (math.isfinite(v.x) and math.isfinite(v.y)):
                raise InvalidGeometry("non-finite polygon vertex")
        if polygon_area(verts) <= 0.0:
            raise InvalidGeometry("polygon must be counter-clockwise with non-zero area")
        n = len(verts)
        for i in range(n):
            a, b, c = verts[i - 1], verts[i], verts[(i + 1) % n]
            ab = math.hypot(b.x - a.x, b.y - a.y)
            if ab <= EPS:
                raise InvalidGeometry("repeated polygon vertex")
            # distance of c to the line a->b, negative means a right turn
            if _cross(a.x, a.y, b.x, b.y, c.x, c.y) / ab < -REL_EPS:
                raise InvalidGeometry("polygon is not convex")

    @classmethod
    def from_points(cls, pts) -> "ConvexPolygon":
        """Build a polygon, fixing orientation and dropping collinear vertices."""
        ring = clean_ring(pts)
        if ring is None:
            raise InvalidGeometry("degenerate polygon")
        if polygon_area(ring) < 0:
            ring = ring[::-1]
        return cls(tuple(ring))

    @classmethod
    def rectangle(cls, xmin, ymin, xmax, ymax) -> "ConvexPolygon":
        return cls(((xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)))

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)

    @cached_property
    def area(self) -> float:
        return polygon_area(self.vertices)

    @cached_property
    def centroid(self) -> Point2:
        a = 0.0
        cx = cy = 0.0
        n = len(self.vertices)
        x0, y0 = self.vertices[0]
        for i in range(1, n - 1):
            x1, y1 = self.vertices[i]
            x2, y2 = self.vertices[i + 1]
            t = _cross(x0, y0, x1, y1, x2, y2)
            a += t
            cx += t * (x0 + x1 + x2)
            cy += t * (y0 + y1 + y2)
        return Point2(cx / (3.0 * a), cy / (3.0 * a))

    def edges(self) -> list[tuple[Point2, Point2]]:
        n = len(self.vertices)
        return [(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    @cached_property
    def halfplanes(self) -> tuple[Halfplane, ...]:
        return tuple(Halfplane.through(a, b) for a, b in self.edges())

    @cached_property
    def _normals(self) -> tuple[np.ndarray, np.ndarray]:
        hs = self.halfplanes
        return np.array([h.normal for h in hs]), np.array([h.offset for h in hs])

    def contains(self, p, tol: float = EPS) -> bool:
        """Closed containment test."""
        n, d = self._normals
        return bool(np.all(n @ np.asarray(p, dtype=float) - d <= tol))

    def contains_many(self, pts: np.ndarray, tol: float = EPS) -> np.ndarray:
        n, d = self._normals
        return np.all(np.asarray(pts, dtype=float) @ n.T - d <= tol, axis=1)

    def to_list(self) -> list[list[float]]:
        return [[v.x, v.y] for v in self.vertices]


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned bounds ``(xmin, ymin, xmax, ymax)`` plus convex obstacles."""

    bounds: tuple[float, float, float, float]
    obstacles: tuple[ConvexPolygon, ...] = field(default_factory=tuple)

    def __post_init__(self):
        b = tuple(float(v) for v in self.bounds)
        if len(b) != 4 or not all(math.isfinite(v) for v in b):
            raise InvalidGeometry("bounds must be four finite numbers")
        if b[2] - b[0] <= 0 or b[3] - b[1] <= 0:
            raise DegenerateWorkspace(f"bounds {b} have zero area")
        object.__setattr__(self, "bounds", b)
        obs = tuple(o if isinstance(o, ConvexPolygon) else ConvexPolygon.from_points(o) for o in self.obstacles)
        object.__setattr__(self, "obstacles", obs)
        for o in obs:
            for v in o.vertices:
                if not (b[0] - EPS <= v.x <= b[2] + EPS and b[1] - EPS <= v.y <= b[3] + EPS):
                    raise InvalidGeometry(f"obstacle vertex {v} outside bounds")
        for i in range(len(obs)):
            for j in range(i + 1, len(obs)):
                if _interiors_overlap(obs[i], obs[j]):
                    raise InvalidGeometry(f"obstacles {i} and {j} overlap")

    @property
    def width(self) -> float:
        return self.bounds[2] - self.bounds[0]

    @property
    def height(self) -> float:
        return self.bounds[3] - self.bounds[1]

    @property
    def diag(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def area(self) -> float:
        return self.width * self.height

    @cached_property
    def bounds_polygon(self) -> ConvexPolygon:
        return ConvexPolygon.rectangle(*self.bounds)

    @cached_property
    def _edge_arrays(self):
        """Stacked outward normals/offsets of all obstacle edges plus group starts."""
        if not self.obstacles:
            return (np.zeros((0, 2)), np.zeros(0), np.zeros(0, dtype=int), np.zeros((0, 2)),
                    np.zeros(0, dtype=int), np.zeros(0))
        normals, offsets, starts, verts, vstarts, lows = [], [], [], [], [], []
        k = kv = 0
        for o in self.obstacles:
            n, d = o._normals
            starts.append(k)
            vstarts.append(kv)
            normals.append(n)
            offsets.append(d)
            verts.append(o.array)
            # lowest projection of the obstacle onto each of its own edge normals
            lows.append((o.array @ n.T).min(axis=0))
            k += len(d)
            kv += len(o.vertices)
        return (np.vstack(normals), np.concatenate(offsets), np.array(starts),
                np.vstack(verts), np.array(vstarts), np.concatenate(lows))

    @classmethod
    def from_dict(cls, data: dict) -> "Workspace":
        return cls(tuple(data["bounds"]), tuple(ConvexPolygon.from_points(o) for o in data.get("obstacles", [])))

    def to_dict(self) -> dict:
        return {"bounds": list(self.bounds), "obstacles": [o.to_list() for o in self.obstacles]}

    @classmethod
    def load(cls, path) -> "Workspace":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)


def _interiors_overlap(p: ConvexPolygon, q: ConvexPolygon) -> bool:
    """Separating-axis test where touching does not count as overlap."""
    for poly, other in ((p, q), (q, p)):
        n, d = poly._normals
        proj = other.array @ n.T - d  # (verts of other, edges of poly)
        if np.any(np.all(proj >= -REL_EPS, axis=0)):
            return False
    return True


def in_bounds(pts: np.ndarray, w: Workspace, tol: float = EPS) -> np.ndarray:
    x0, y0, x1, y1 = w.bounds
    pts = np.asarray(pts, dtype=float)
    return ((pts[..., 0] >= x0 - tol) & (pts[..., 0] <= x1 + tol)
            & (pts[..., 1] >= y0 - tol) & (pts[..., 1] <= y1 + tol))


def points_in_obstacles(pts: np.ndarray, w: Workspace, tol: float = EPS) -> np.ndarray:
    """Boolean mask: point lies in some closed obstacle."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if not w.obstacles:
        return np.zeros(len(pts), dtype=bool)
    normals, offsets, starts = w._edge_arrays[:3]
    s = pts @ normals.T - offsets
    worst = np.maximum.reduceat(s, starts, axis=1)
    return np.any(worst <= tol, axis=1)


def points_free(pts: np.ndarray, w: Workspace) -> np.ndarray:
    """Vectorised ``point_in_free_space`` over an ``(n, 2)`` array."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return in_bounds(pts, w) & ~points_in_obstacles(pts, w)


def point_in_free_space(p, w: Workspace) -> bool:
    return bool(points_free(np.asarray(p, dtype=float)[None, :], w)[0])


def segment_collides(s: Segment, w: Workspace) -> bool:
    """True iff ``s`` touches a closed obstacle or leaves the bounds."""
    a = np.array(s.a, dtype=float)
    b = np.array(s.b, dtype=float)
    if not bool(np.all(in_bounds(np.vstack([a, b]), w))):
        return True
    if not w.obstacles:
        return False
    normals, offsets, starts, verts, vstarts, lows = w._edge_arrays
    pa = normals @ a
    pb = normals @ b
    sep_edge = (np.minimum(pa, pb) > offsets + EPS) | (np.maximum(pa, pb) < lows - EPS)
    sep_poly = np.logical_or.reduceat(sep_edge, starts)
    d = b - a
    m = np.array([-d[1], d[0]]) / math.hypot(d[0], d[1])
    pv = verts @ m - m @ a
    sep_seg = (np.minimum.reduceat(pv, vstarts) > EPS) | (np.maximum.reduceat(pv, vstarts) < -EPS)
    return bool(np.any(~(sep_poly | sep_seg)))


def line_polygon_interval(h: Halfplane, poly: ConvexPolygon, tol: float = EPS):
    """Interval of the boundary line of ``h`` inside closed ``poly``.

    The line is parametrised as ``offset * normal + t * direction``.
    Returns ``(t0, t1)`` or ``None``; a single touching point gives ``t0 == t1``.
    """
    nx, ny = h.normal
    ux, uy = -ny, nx
    ox, oy = nx * h.offset, ny * h.offset
    lo, hi = -math.inf, math.inf
    for e in poly.halfplanes:
        # e: ex*x + ey*y <= ed along p(t) = o + t u
        den = e.normal[0] * ux + e.normal[1] * uy
        num = e.offset - (e.normal[0] * ox + e.normal[1] * oy)
        if abs(den) <= 1e-15:
            if num < -tol:
                return None
            continue
        t = num / den
        if den > 0:
            hi = min(hi, t + tol / abs(den))
        else:
            lo = max(lo, t - tol / abs(den))
        if lo > hi:
            return None
    return lo, hi


def clip_halfplane_to_cell(h: Halfplane, cell: ConvexPolygon):
    """Segment of the boundary line of ``h`` inside ``cell``, or ``None``.

    A line that only touches the cell (at a vertex or along an edge)
    misses the interior and yields ``None``.
    """
    s = cell.array @ np.array(h.normal) - h.offset
    if not (s.max() > EPS and s.min() < -EPS):
        return None
    u = np.array(h.direction())
    pts = []
    n = len(s)
    v = cell.array
    for i in range(n):
        j = (i + 1) % n
        if abs(s[i]) <= EPS:
            pts.append(v[i])
        if (s[i] < -EPS and s[j] > EPS) or (s[i] > EPS and s[j] < -EPS):
            t = s[i] / (s[i] - s[j])
            pts.append(v[i] + t * (v[j] - v[i]))
    pts = np.array(pts)
    proj = pts @ u
    a, b = pts[int(np.argmin(proj))], pts[int(np.argmax(proj))]
    if math.hypot(*(b - a)) <= EPS:
        return None
    return Segment(Point2(*a), Point2(*b))


def split_polygon(cell: ConvexPolygon, h: Halfplane):
    """Split ``cell`` by ``h`` into ``(inside, outside)``; empty parts are ``None``."""
    v = cell.array
    s = v @ np.array(h.normal) - h.offset
    if s.max() <= EPS:
        return cell, None
    if s.min() >= -EPS:
        return None, cell
    inside, outside = [], []
    n = len(s)
    for i in range(n):
        j = (i + 1) % n
        if s[i] <= EPS:
            inside.append(v[i])
        if s[i] >= -EPS:
            outside.append(v[i])
        if (s[i] < -EPS and s[j] > EPS) or (s[i] > EPS and s[j] < -EPS):
            t = s[i] / (s[i] - s[j])
            p = v[i] + t * (v[j] - v[i])
            inside.append(p)
            outside.append(p)
    floor = EPS * max(1.0, cell.area)
    return _polygon_or_none(inside, floor), _polygon_or_none(outside, floor)


def _polygon_or_none(pts, min_area: float):
    ring = clean_ring(pts)
    if ring is None or polygon_area(ring) <= min_area:
        return None
    try:
        return ConvexPolygon(tuple(ring))
    except InvalidGeometry:
        return None


def clip_segment_to_polygon(a, b, poly: ConvexPolygon, tol: float = EPS):
    """Parametric sub-interval ``(t0, t1)`` of segment ``a -> b`` inside closed ``poly``."""
    a = np.asarray(a, dtype=float)
    d = np.asarray(b, dtype=float) - a
    n, off = poly._normals
    num = off - n @ a
    den = n @ d
    t0, t1 = 0.0, 1.0
    for k in range(len(num)):
        if abs(den[k]) <= 1e-15:
            if num[k] < -tol:
                return None
            continue
        t = num[k] / den[k]
        if den[k] > 0:
            t1 = min(t1, t)
        else:
            t0 = max(t0, t)
        if t0 > t1:
            return None
    return t0, t1

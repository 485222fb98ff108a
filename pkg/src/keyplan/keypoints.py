"""Keypoint candidates, the connectivity graph and keypoint selection.

Candidates sit on the free BSP boundaries. Within a convex free cell,
every pair of candidates on its boundary is joined by a straight edge.
The start and goal become two extra virtual nodes. Dijkstra over this
graph selects the keypoint sequence. The repair loop removes edges until
the robot can follow the sequence.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .bsp import EPS_OFF, BspTree
from .errors import EvenResolution, NoPath, StartOrGoalInCollision
from .geometry import ConvexPolygon, Point2, Segment, Workspace, point_in_free_space, segment_collides

START = 0
GOAL = 1
FIRST_CANDIDATE_ID = 2


@dataclass(frozen=True)
class KeypointCandidate:
    id: int
    position: Point2
    boundary_index: int
    adjacent_cells: tuple[int, int]


@dataclass
class ConnectivityGraph:
    nodes: dict[int, Point2]
    edges: list[tuple[int, int, float]]
    removed_edges: set[int] = field(default_factory=set)

    def __post_init__(self):
        self._adj: dict[int, list[tuple[int, int]]] = {n: [] for n in self.nodes}
        self._index: dict[tuple[int, int], int] = {}
        for k, (u, v, _) in enumerate(self.edges):
            self._adj[u].append((v, k))
            self._adj[v].append((u, k))
            self._index[(min(u, v), max(u, v))] = k

    def edge_id(self, u: int, v: int) -> int:
        return self._index[(min(u, v), max(u, v))]

    def neighbors(self, u: int):
        for v, k in self._adj[u]:
            if k not in self.removed_edges:
                yield v, k

    def active_edges(self) -> list[tuple[int, int, float]]:
        return [e for k, e in enumerate(self.edges) if k not in self.removed_edges]

    def to_dict(self) -> dict:
        return {
            "nodes": {str(k): [p[0], p[1]] for k, p in sorted(self.nodes.items())},
            "edges": [[u, v, w] for u, v, w in self.edges],
            "removed": sorted(self.removed_edges),
        }


@dataclass(frozen=True)
class KeypointSequence:
    points: tuple[Point2, ...]
    node_ids: tuple[int, ...] = ()
    cost: float = 0.0


def keypoint_candidates(
    boundaries: Sequence[Segment],
    resolution: int = 3,
    *,
    tree: BspTree | None = None,
    workspace: Workspace | None = None,
) -> list[KeypointCandidate]:
    """Evenly spaced candidates on each boundary, endpoints excluded.

    An odd ``resolution`` always places one candidate on the midpoint.
    When ``tree`` is given, each candidate records the two free cells on
    either side of its boundary.
    """
    if resolution < 1 or resolution % 2 == 0:
        raise EvenResolution(f"resolution must be a positive odd integer, got {resolution}")
    w = workspace if workspace is not None else (tree.workspace if tree is not None else None)
    planes = None
    if tree is not None:
        planes = {b.segment: b.plane for b in tree.boundaries}
    out = []
    next_id = FIRST_CANDIDATE_ID
    for bi, seg in enumerate(boundaries):
        for i in range(1, resolution + 1):
            p = seg.point_at(i / (resolution + 1))
            if w is not None and not point_in_free_space(p, w):
                continue
            cells = (-1, -1)
            if tree is not None:
                cells = _flanking_cells(tree, p, seg, planes.get(seg))
                if cells is None:
                    continue
            out.append(KeypointCandidate(next_id, p, bi, cells))
            next_id += 1
    return out


def _flanking_cells(tree: BspTree, p: Point2, seg: Segment, plane):
    if plane is not None:
        n = np.array(plane.normal)
    else:
        d = np.array(seg.b) - np.array(seg.a)
        n = np.array([d[1], -d[0]]) / np.hypot(*d)
    p = np.array(p)
    a = tree.free_cell_index(p - EPS_OFF * n)
    b = tree.free_cell_index(p + EPS_OFF * n)
    if a is None or b is None or a == b:
        return None
    return (a, b)


def _containing_cells(cells: Sequence[ConvexPolygon], p, tol: float = 1e-9) -> list[int]:
    return [i for i, c in enumerate(cells) if c.contains(p, tol=tol)]


def build_connectivity_graph(
    cells: Sequence[ConvexPolygon],
    candidates: Sequence[KeypointCandidate],
    start,
    goal,
    w: Workspace,
) -> ConnectivityGraph:
    """Join every pair of nodes sharing a free cell by a collision-free straight edge."""
    start = Point2(float(start[0]), float(start[1]))
    goal = Point2(float(goal[0]), float(goal[1]))
    if not point_in_free_space(start, w) or not point_in_free_space(goal, w):
        raise StartOrGoalInCollision("start and goal must be collision-free")
    members: dict[int, list[int]] = {i: [] for i in range(len(cells))}
    nodes: dict[int, Point2] = {START: start, GOAL: goal}
    for cell in _containing_cells(cells, start):
        members[cell].append(START)
    for cell in _containing_cells(cells, goal):
        members[cell].append(GOAL)
    for c in candidates:
        nodes[c.id] = c.position
        for cell in c.adjacent_cells:
            if cell in members and c.id not in members[cell]:
                members[cell].append(c.id)
    seen = set()
    edges = []
    for cell in range(len(cells)):
        ids = sorted(members[cell])
        for i, u in enumerate(ids):
            for v in ids[i + 1:]:
                if (u, v) in seen:
                    continue
                seen.add((u, v))
                pu, pv = nodes[u], nodes[v]
                length = math.hypot(pv.x - pu.x, pv.y - pu.y)
                if length <= 0.0:
                    continue
                if segment_collides(Segment(pu, pv), w):
                    continue
                edges.append((u, v, length))
    return ConnectivityGraph(nodes, edges)


def shortest_keypoint_sequence(g: ConnectivityGraph, source: int = START, target: int = GOAL) -> KeypointSequence:
    """Dijkstra from start to goal, skipping removed edges.

    At equal distance the smaller node id is settled first, and a
    predecessor only changes on a strict improvement.
    """
    dist = {source: 0.0}
    pred: dict[int, int] = {}
    done = set()
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == target:
            break
        for v, k in g.neighbors(u):
            if v in done:
                continue
            nd = d + g.edges[k][2]
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    if target not in done:
        raise NoPath("goal unreachable in connectivity graph")
    ids = [target]
    while ids[-1] != source:
        ids.append(pred[ids[-1]])
    ids.reverse()
    return KeypointSequence(tuple(g.nodes[i] for i in ids), tuple(ids), dist[target])


def merge_pass(points: list, anchors: list, eps: float) -> bool:
    """One left-to-right merge pass over interior keypoints, in place."""
    changed = False
    i = 1
    while i < len(points) - 2:
        a, b = points[i], points[i + 1]
        if math.hypot(b[0] - a[0], b[1] - a[1]) < eps:
            points[i + 1] = Point2(0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]))
            del points[i]
            del anchors[i]
            changed = True
        else:
            i += 1
    return changed


def merge_with_anchors(seq: KeypointSequence, eps: float):
    """Merge keypoints and report, for each survivor, its last original index."""
    if eps <= 0:
        raise ValueError("eps_merge must be positive")
    points = list(seq.points)
    anchors = list(range(len(points)))
    while merge_pass(points, anchors, eps):
        pass
    return points, anchors


def merge_keypoints(seq: KeypointSequence, eps: float) -> KeypointSequence:
    """Replace close interior pairs by their midpoint; start and goal stay put.

    Passes repeat until none changes anything, so every interior pair ends
    at least ``eps`` apart. The first pass alone settles most inputs.
    """
    points, anchors = merge_with_anchors(seq, eps)
    ids = tuple(seq.node_ids[a] for a in anchors) if seq.node_ids else ()
    cost = sum(math.hypot(q[0] - p[0], q[1] - p[1]) for p, q in zip(points, points[1:]))
    return KeypointSequence(tuple(Point2(*p) for p in points), ids, cost)


class Verdict(Enum):
    ACCEPT = "accept"
    REJECT = "reject"


def trace_cells(trace, cells: Sequence[ConvexPolygon], margin: float = 0.0) -> list[int]:
    """Run-length compressed sequence of free cells visited by a workspace trace.

    Trace points within ``margin`` of either end are skipped: those ends
    sit on cell boundaries and their cell is ambiguous.
    """
    pts = np.asarray(trace, dtype=float)
    if len(pts) == 0:
        return []
    keep = np.ones(len(pts), dtype=bool)
    if margin > 0:
        keep &= np.hypot(*(pts - pts[0]).T) > margin
        keep &= np.hypot(*(pts - pts[-1]).T) > margin
    owner = np.full(len(pts), -1)
    for ci in range(len(cells) - 1, -1, -1):
        owner[cells[ci].contains_many(pts, tol=1e-9)] = ci
    seq = []
    for o, k in zip(owner, keep):
        if not k or o < 0:
            continue
        if not seq or seq[-1] != o:
            seq.append(int(o))
    return seq


def examine_path(trace, cells: Sequence[ConvexPolygon], visited_cells: Iterable[int], margin: float = 0.0) -> Verdict:
    """Reject a trace that enters an already visited cell after its first run."""
    visited = set(visited_cells)
    seq = trace_cells(trace, cells, margin)
    if any(c in visited for c in seq[1:]):
        return Verdict.REJECT
    return Verdict.ACCEPT


def select_shortest(paths):
    """Criterion-2 selection: shortest accepted path, earliest on ties."""
    best = None
    for i, p in enumerate(paths):
        if best is None or p.cost < best[1].cost:
            best = (i, p)
    return None if best is None else best[1]


def repair_graph(g: ConnectivityGraph, failed_terminal: int, sequence: KeypointSequence) -> ConnectivityGraph:
    """Remove edges of ``sequence`` that touch ``failed_terminal``.

    Returns the same graph object. Raises ``NoPath`` if nothing could be
    removed, since the repair loop would otherwise stall.
    """
    ids = sequence.node_ids
    removed = 0
    for u, v in zip(ids, ids[1:]):
        if failed_terminal in (u, v):
            k = g.edge_id(u, v)
            if k not in g.removed_edges:
                g.removed_edges.add(k)
                removed += 1
    if removed == 0:
        raise NoPath(f"node {failed_terminal} has no removable edge on the failed sequence")
    return g

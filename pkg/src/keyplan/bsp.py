"""Binary space partitioning of a workspace along obstacle facets.

Each split uses the supporting line of an obstacle facet. The line is
chosen by the minimum-split rule: the line cutting the fewest remaining
facet fragments wins, and ties go to the lowest ``(obstacle, facet)``
index. Recursion stops once a cell holds no facet fragment. Such a cell
is homogeneous and is labelled by testing its centroid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .geometry import (
    ConvexPolygon,
    Halfplane,
    Point2,
    Segment,
    Workspace,
    clip_halfplane_to_cell,
    clip_segment_to_polygon,
    line_polygon_interval,
    point_in_free_space,
    segment_collides,
    split_polygon,
)

# offset applied to boundary segments so they never touch a closed obstacle
EPS_OFF = 1e-6
MIN_BOUNDARY_LENGTH = 10 * EPS_OFF
# on-line classification inside the tree bookkeeping
LINE_TOL = 1e-9


@dataclass(frozen=True)
class BspLeaf:
    cell: ConvexPolygon
    free: bool


@dataclass(frozen=True)
class BspInternal:
    plane: Halfplane
    inside: "BspNode"
    outside: "BspNode"
    cell: ConvexPolygon
    facet: tuple[int, int]


BspNode = Union[BspLeaf, BspInternal]


@dataclass(frozen=True)
class FreeBoundary:
    segment: Segment
    plane: Halfplane


@dataclass(frozen=True)
class BspTree:
    root: BspNode
    workspace: Workspace
    boundaries: tuple[FreeBoundary, ...]

    @property
    def free_boundaries(self) -> tuple[Segment, ...]:
        return tuple(b.segment for b in self.boundaries)

    def leaves(self) -> list[BspLeaf]:
        """All leaves, depth-first with the inside child first."""
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, BspLeaf):
                out.append(node)
            else:
                stack.append(node.outside)
                stack.append(node.inside)
        return out

    def locate(self, p) -> BspLeaf:
        """Leaf whose cell contains ``p``; points on a plane go inside."""
        node = self.root
        while isinstance(node, BspInternal):
            node = node.inside if node.plane.signed_distance(p) <= 0.0 else node.outside
        return node

    def free_cell_index(self, p):
        """Index into :func:`leaf_cells` of the free leaf holding ``p``, else ``None``."""
        leaf = self.locate(p)
        if not leaf.free:
            return None
        return self._free_index[id(leaf)]

    @property
    def _free_index(self) -> dict:
        cache = self.__dict__.get("_free_index_cache")
        if cache is None:
            cache = {id(l): i for i, l in enumerate(l for l in self.leaves() if l.free)}
            self.__dict__["_free_index_cache"] = cache
        return cache

    def to_dict(self) -> dict:
        return {
            "tree": _node_to_dict(self.root),
            "free_boundaries": [
                [[b.segment.a.x, b.segment.a.y], [b.segment.b.x, b.segment.b.y]] for b in self.boundaries
            ],
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)


def _node_to_dict(node: BspNode) -> dict:
    if isinstance(node, BspLeaf):
        return {"cell": node.cell.to_list(), "free": node.free}
    return {
        "plane": [node.plane.normal[0], node.plane.normal[1], node.plane.offset],
        "inside": _node_to_dict(node.inside),
        "outside": _node_to_dict(node.outside),
    }


def build_bsp(w: Workspace) -> BspTree:
    """Partition ``w`` into convex leaves along obstacle facet lines."""
    facets = [[h for h in o.halfplanes] for o in w.obstacles]
    pieces = [(i, o) for i, o in enumerate(w.obstacles)]
    root = _build(w, w.bounds_polygon, pieces, facets)
    boundaries = _extract_boundaries(w, root)
    return BspTree(root, w, tuple(boundaries))


def _fragments(cell: ConvexPolygon, active: list[int], w: Workspace):
    """Facet pieces strictly inside ``cell`` (not lying on its boundary)."""
    out = []
    cell_planes = cell.halfplanes
    for oi in active:
        for a, b in w.obstacles[oi].edges():
            t = clip_segment_to_polygon(a, b, cell, tol=LINE_TOL)
            if t is None:
                continue
            t0, t1 = t
            pa = np.array(a) + t0 * (np.array(b) - np.array(a))
            pb = np.array(a) + t1 * (np.array(b) - np.array(a))
            if math.hypot(*(pb - pa)) <= LINE_TOL:
                continue
            on_edge = any(
                abs(h.signed_distance(pa)) <= LINE_TOL and abs(h.signed_distance(pb)) <= LINE_TOL
                for h in cell_planes
            )
            if not on_edge:
                out.append((pa, pb))
    return out


def _build(w: Workspace, cell: ConvexPolygon, pieces, facets) -> BspNode:
    active = [oi for oi, _ in pieces]
    frags = _fragments(cell, active, w)
    if not frags:
        return BspLeaf(cell, point_in_free_space(cell.centroid, w))

    verts = cell.array
    fa = np.array([f[0] for f in frags])
    fb = np.array([f[1] for f in frags])
    best = None
    for oi in active:
        for fi, h in enumerate(facets[oi]):
            n = np.array(h.normal)
            s = verts @ n - h.offset
            if not (s.max() > LINE_TOL and s.min() < -LINE_TOL):
                continue
            sa = fa @ n - h.offset
            sb = fb @ n - h.offset
            splits = int(np.count_nonzero(((sa > LINE_TOL) & (sb < -LINE_TOL)) | ((sa < -LINE_TOL) & (sb > LINE_TOL))))
            key = (splits, oi, fi)
            if best is None or key < best:
                best = key
    if best is None:
        # fragments exist but no facet line cuts the cell; cannot happen for valid input
        return BspLeaf(cell, point_in_free_space(cell.centroid, w))
    _, oi, fi = best
    plane = facets[oi][fi]
    inside, outside = split_polygon(cell, plane)
    if inside is None or outside is None:
        return BspLeaf(cell, point_in_free_space(cell.centroid, w))
    in_pieces, out_pieces = [], []
    for pi, poly in pieces:
        a, b = split_polygon(poly, plane)
        if a is not None:
            in_pieces.append((pi, a))
        if b is not None:
            out_pieces.append((pi, b))
    return BspInternal(
        plane,
        _build(w, inside, in_pieces, facets),
        _build(w, outside, out_pieces, facets),
        cell,
        (oi, fi),
    )


def _free_leaves(node: BspNode):
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, BspLeaf):
            if n.free:
                yield n
        else:
            stack.append(n.outside)
            stack.append(n.inside)


def _on_line_intervals(leaves, plane: Halfplane, u: np.ndarray):
    n = np.array(plane.normal)
    out = []
    for leaf in leaves:
        v = leaf.cell.array
        s = v @ n - plane.offset
        m = len(v)
        for i in range(m):
            j = (i + 1) % m
            if abs(s[i]) <= LINE_TOL and abs(s[j]) <= LINE_TOL:
                ta, tb = float(v[i] @ u), float(v[j] @ u)
                out.append((min(ta, tb), max(ta, tb)))
    return _union(out)


def _union(intervals):
    merged = []
    for a, b in sorted(intervals):
        if merged and a <= merged[-1][1] + LINE_TOL:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def _intersect(xs, ys):
    out = []
    i = j = 0
    while i < len(xs) and j < len(ys):
        a = max(xs[i][0], ys[j][0])
        b = min(xs[i][1], ys[j][1])
        if b > a:
            out.append((a, b))
        if xs[i][1] < ys[j][1]:
            i += 1
        else:
            j += 1
    return out


def _subtract(xs, cuts):
    out = list(xs)
    for c0, c1 in cuts:
        nxt = []
        for a, b in out:
            if c1 < a or c0 > b:
                nxt.append((a, b))
                continue
            if c0 > a:
                nxt.append((a, c0))
            if c1 < b:
                nxt.append((c1, b))
        out = nxt
    return out


def _extract_boundaries(w: Workspace, root: BspNode) -> list[FreeBoundary]:
    result = []
    stack = [root]
    order = []
    while stack:
        node = stack.pop()
        if isinstance(node, BspInternal):
            order.append(node)
            stack.append(node.outside)
            stack.append(node.inside)
    for node in order:
        plane = node.plane
        n = np.array(plane.normal)
        u = np.array(plane.direction())
        origin = n * plane.offset
        seg = clip_halfplane_to_cell(plane, node.cell)
        if seg is None:
            continue
        lo, hi = sorted((float(np.array(seg.a) @ u), float(np.array(seg.b) @ u)))
        ins = _on_line_intervals(_free_leaves(node.inside), plane, u)
        outs = _on_line_intervals(_free_leaves(node.outside), plane, u)
        shared = _intersect(_intersect(ins, outs), [(lo, hi)])
        cuts = []
        for o in w.obstacles:
            iv = line_polygon_interval(plane, o, tol=LINE_TOL)
            if iv is not None:
                cuts.append(iv)
        for a, b in _subtract(shared, sorted(cuts)):
            a += EPS_OFF
            b -= EPS_OFF
            if b - a < MIN_BOUNDARY_LENGTH:
                continue
            s = Segment(Point2(*(origin + a * u)), Point2(*(origin + b * u)))
            if _nudged_free(s, plane, w):
                result.append(FreeBoundary(s, plane))
    return result


def _nudged_free(s: Segment, plane: Halfplane, w: Workspace) -> bool:
    n = np.array(plane.normal) * EPS_OFF
    for shift in (np.zeros(2), n, -n):
        moved = Segment(Point2(*(np.array(s.a) + shift)), Point2(*(np.array(s.b) + shift)))
        if segment_collides(moved, w):
            return False
    return True


def leaf_cells(t: BspTree) -> list[ConvexPolygon]:
    """Free leaf cells in depth-first, inside-first order."""
    return [l.cell for l in t.leaves() if l.free]


def free_boundary_segments(t: BspTree) -> list[Segment]:
    return list(t.free_boundaries)

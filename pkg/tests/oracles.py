"""Independent reference implementations used as test oracles."""

from __future__ import annotations

import math

import numpy as np


def on_segment(p, a, b, tol=1e-12):
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if abs(cross) > tol * max(1.0, math.hypot(b[0] - a[0], b[1] - a[1])):
        return False
    return (min(a[0], b[0]) - tol <= p[0] <= max(a[0], b[0]) + tol
            and min(a[1], b[1]) - tol <= p[1] <= max(a[1], b[1]) + tol)


def ray_cast_inside(p, verts):
    """Even-odd ray casting; points on the boundary count as inside."""
    n = len(verts)
    for i in range(n):
        if on_segment(p, verts[i], verts[(i + 1) % n]):
            return True
    inside = False
    x, y = p
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


def point_free_oracle(p, bounds, obstacles):
    x0, y0, x1, y1 = bounds
    if not (x0 <= p[0] <= x1 and y0 <= p[1] <= y1):
        return False
    return not any(ray_cast_inside(p, o) for o in obstacles)


def _orient(a, b, c):
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return 0 if abs(v) <= 1e-15 else (1 if v > 0 else -1)


def segments_intersect(p1, p2, q1, q2):
    """Closed segment intersection by orientation tests."""
    o1, o2 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    o3, o4 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return ((o1 == 0 and on_segment(q1, p1, p2)) or (o2 == 0 and on_segment(q2, p1, p2))
            or (o3 == 0 and on_segment(p1, q1, q2)) or (o4 == 0 and on_segment(p2, q1, q2)))


def segment_hits_polygon(a, b, verts):
    if ray_cast_inside(a, verts) or ray_cast_inside(b, verts):
        return True
    mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
    if ray_cast_inside(mid, verts):
        return True
    n = len(verts)
    return any(segments_intersect(a, b, verts[i], verts[(i + 1) % n]) for i in range(n))


def shoelace(verts):
    return 0.5 * sum(verts[i][0] * verts[(i + 1) % len(verts)][1] - verts[(i + 1) % len(verts)][0] * verts[i][1]
                     for i in range(len(verts)))


def brute_force_shortest(n, edges, source, target):
    """Minimum total weight over all simple paths, by exhaustive depth-first enumeration.

    Weights are accumulated from the source outwards, the same order a
    label-setting search uses, so equal paths give bit-equal totals.
    """
    adj = {i: {} for i in range(n)}
    for u, v, w in edges:
        adj[u][v] = min(w, adj[u].get(v, math.inf))
        adj[v][u] = min(w, adj[v].get(u, math.inf))
    best = math.inf
    on_path = {source}

    def dfs(u, total):
        nonlocal best
        if u == target:
            best = min(best, total)
            return
        for v, w in adj[u].items():
            if v not in on_path:
                on_path.add(v)
                dfs(v, total + w)
                on_path.discard(v)

    dfs(source, 0.0)
    return best


def mlp_forward_loops(sizes, weights, biases, x):
    """Scalar-loop forward pass: tanh on hidden layers, identity output."""
    h = [float(v) for v in x]
    for li in range(len(weights)):
        W, b = weights[li], biases[li]
        out = []
        for j in range(sizes[li + 1]):
            s = b[j]
            for i in range(sizes[li]):
                s += h[i] * W[i][j]
            out.append(math.tanh(s) if li < len(weights) - 1 else s)
        h = out
    return np.array(h)


def central_difference(f, params, h=1e-5):
    """Numerical gradient of scalar ``f()`` w.r.t. each array in ``params`` (mutated and restored)."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            fp = f()
            p[idx] = old - h
            fm = f()
            p[idx] = old
            g[idx] = (fp - fm) / (2 * h)
        grads.append(g)
    return grads


def max_relative_error(a_list, b_list, floor=1e-7):
    worst = 0.0
    for a, b in zip(a_list, b_list):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
        worst = max(worst, float(np.max(np.abs(a - b) / denom)))
    return worst

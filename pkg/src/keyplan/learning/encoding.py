"""Grid encoding of a workspace together with a start and a goal point."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParams, PointOutOfBounds
from ..geometry import Workspace, points_in_obstacles


@dataclass(frozen=True)
class EnvEncoding:
    """Three ``G x G`` grids; row ``r`` covers the r-th strip from the bottom."""

    occupancy: np.ndarray
    start: np.ndarray
    goal: np.ndarray

    @property
    def grid(self) -> int:
        return self.occupancy.shape[0]

    def flat(self) -> np.ndarray:
        return np.concatenate([self.occupancy.ravel(), self.start.ravel(), self.goal.ravel()])


def cell_centers(w: Workspace, G: int) -> np.ndarray:
    x0, y0, x1, y1 = w.bounds
    xs = x0 + (np.arange(G) + 0.5) * (x1 - x0) / G
    ys = y0 + (np.arange(G) + 0.5) * (y1 - y0) / G
    X, Y = np.meshgrid(xs, ys)
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def occupancy_grid(w: Workspace, G: int) -> np.ndarray:
    if not w.obstacles:
        return np.zeros((G, G))
    return points_in_obstacles(cell_centers(w, G), w).reshape(G, G).astype(float)


def _cell_of(w: Workspace, p, G: int) -> tuple[int, int]:
    x0, y0, x1, y1 = w.bounds
    x, y = float(p[0]), float(p[1])
    if not (x0 <= x <= x1 and y0 <= y <= y1) or not np.isfinite(x + y):
        raise PointOutOfBounds(f"point ({x}, {y}) lies outside the workspace bounds")
    col = min(G - 1, int((x - x0) / (x1 - x0) * G))
    row = min(G - 1, int((y - y0) / (y1 - y0) * G))
    return row, col


def bump(w: Workspace, p, G: int) -> np.ndarray:
    """Gaussian bump with a one-cell standard deviation, peak 1 at the cell holding ``p``."""
    r, c = _cell_of(w, p, G)
    idx = np.arange(G)
    return np.exp(-0.5 * ((idx[:, None] - r) ** 2 + (idx[None, :] - c) ** 2))


def encode_environment(w: Workspace, start, goal, G: int = 16, occupancy: np.ndarray | None = None) -> EnvEncoding:
    """Occupancy of cell centres plus start and goal bumps.

    ``occupancy`` may be passed in to reuse a grid computed for the same
    workspace.
    """
    if G < 4:
        raise InvalidParams("grid size must be at least 4")
    occ = occupancy_grid(w, G) if occupancy is None else occupancy
    return EnvEncoding(occ, bump(w, start, G), bump(w, goal, G))


def normalize_point(w: Workspace, p) -> np.ndarray:
    x0, y0, x1, y1 = w.bounds
    return (np.asarray(p, dtype=float) - [x0, y0]) / [x1 - x0, y1 - y0]


def denormalize_point(w: Workspace, u) -> np.ndarray:
    x0, y0, x1, y1 = w.bounds
    return np.asarray(u, dtype=float) * [x1 - x0, y1 - y0] + [x0, y0]


def condition_vector(w: Workspace, a, b, G: int = 16, occupancy: np.ndarray | None = None) -> np.ndarray:
    """Conditioning input used by both networks: grids, then ``a`` and ``b`` in unit coordinates."""
    enc = encode_environment(w, a, b, G, occupancy)
    return np.concatenate([enc.flat(), normalize_point(w, a), normalize_point(w, b)])

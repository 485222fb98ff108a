"""Keypoint-guided learned sampling for sampling-based motion planning."""

from .bsp import BspTree, build_bsp, free_boundary_segments, leaf_cells
from .errors import KeyplanError
from .geometry import ConvexPolygon, Halfplane, Point2, Segment, Workspace, point_in_free_space, segment_collides
from .planner import PlannerParams, PlanningProblem, plan_rrt, plan_rrt_star, validate_path
from .robots import PlanarArm, PointRobot, path_cost

__all__ = [
    "BspTree", "build_bsp", "free_boundary_segments", "leaf_cells",
    "KeyplanError",
    "ConvexPolygon", "Halfplane", "Point2", "Segment", "Workspace", "point_in_free_space", "segment_collides",
    "PlannerParams", "PlanningProblem", "plan_rrt", "plan_rrt_star", "validate_path",
    "PlanarArm", "PointRobot", "path_cost",
]

__version__ = "0.1.0"

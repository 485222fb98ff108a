"""Deterministic SVG rendering of workspaces, partitions, graphs, samples and paths."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


from ..errors import IoFailure
from ..geometry import Workspace

SIZE = 600.0


@dataclass
class Scene:
    workspace: Workspace
    boundaries: Sequence = ()  # segments as ((x, y), (x, y))
    cells: Sequence = ()  # polygons as vertex lists
    graph_edges: Sequence = ()  # ((x, y), (x, y)) pairs
    candidates: Sequence = ()
    keypoints: Sequence = ()
    samples: Sequence = ()
    path: Sequence = ()
    start: tuple | None = None
    goal: tuple | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        return cls(
            Workspace.from_dict(d["env"] if "env" in d else d),
            d.get("boundaries", ()), d.get("cells", ()), d.get("graph_edges", ()), d.get("candidates", ()),
            d.get("keypoints", ()), d.get("samples", ()), d.get("path", ()), d.get("start"), d.get("goal"),
        )


def _fmt(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


class _Frame:
    def __init__(self, w: Workspace):
        x0, y0, x1, y1 = w.bounds
        self.x0, self.y1 = x0, y1
        self.s = SIZE / max(x1 - x0, y1 - y0)
        self.width = (x1 - x0) * self.s
        self.height = (y1 - y0) * self.s

    def pt(self, p) -> str:
        return f"{_fmt((p[0] - self.x0) * self.s)},{_fmt((self.y1 - p[1]) * self.s)}"

    def xy(self, p) -> tuple[str, str]:
        return _fmt((p[0] - self.x0) * self.s), _fmt((self.y1 - p[1]) * self.s)


def render_svg(scene: Scene) -> str:
    w = scene.workspace
    f = _Frame(w)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(f.width)}" height="{_fmt(f.height)}" '
        f'viewBox="0 0 {_fmt(f.width)} {_fmt(f.height)}">',
        f'<rect class="bounds" x="0" y="0" width="{_fmt(f.width)}" height="{_fmt(f.height)}" '
        'fill="white" stroke="black" stroke-width="2"/>',
    ]
    for c in scene.cells:
        pts = " ".join(f.pt(v) for v in c)
        out.append(f'<polygon class="cell" points="{pts}" fill="#e8f0ff" stroke="none"/>')
    for o in w.obstacles:
        pts = " ".join(f.pt(v) for v in o.vertices)
        out.append(f'<polygon class="obstacle" points="{pts}" fill="#555555" stroke="black"/>')
    for a, b in scene.graph_edges:
        (x1, y1), (x2, y2) = f.xy(a), f.xy(b)
        out.append(f'<line class="edge" x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="#9ab" stroke-width="0.7"/>')
    for a, b in scene.boundaries:
        (x1, y1), (x2, y2) = f.xy(a), f.xy(b)
        out.append(f'<line class="boundary" x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="#1f77b4" '
                   'stroke-width="1.5" stroke-dasharray="6,4"/>')
    for p in scene.samples:
        x, y = f.xy(p)
        out.append(f'<circle class="sample" cx="{x}" cy="{y}" r="1.5" fill="#2ca02c"/>')
    for p in scene.candidates:
        x, y = f.xy(p)
        out.append(f'<circle class="candidate" cx="{x}" cy="{y}" r="3" fill="#ff7f0e"/>')
    if len(scene.path) >= 2:
        pts = " ".join(f.pt(p) for p in scene.path)
        out.append(f'<polyline class="path" points="{pts}" fill="none" stroke="#d62728" stroke-width="2"/>')
    for p in scene.keypoints:
        x, y = f.xy(p)
        out.append(f'<circle class="keypoint" cx="{x}" cy="{y}" r="5" fill="none" stroke="#9467bd" stroke-width="2"/>')
    for name, p, color in (("start", scene.start, "#17becf"), ("goal", scene.goal, "#e377c2")):
        if p is not None:
            x, y = f.xy(p)
            out.append(f'<circle class="{name}" cx="{x}" cy="{y}" r="6" fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(scene: Scene, path) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(render_svg(scene))
    except OSError as e:
        raise IoFailure(str(e)) from e


def scene_from_tree(w: Workspace, tree=None, graph=None, **layers) -> Scene:
    """Convenience builder pulling boundaries from a BSP tree and edges from a connectivity graph."""
    bounds = []
    if tree is not None:
        bounds = [((b.segment.a.x, b.segment.a.y), (b.segment.b.x, b.segment.b.y)) for b in tree.boundaries]
    edges = []
    if graph is not None:
        edges = [(graph.nodes[u], graph.nodes[v]) for u, v, _ in graph.active_edges()]
    return Scene(w, bounds, graph_edges=edges, **layers)

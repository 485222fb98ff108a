"""Offline learning: bulk collection followed by training of both networks."""

from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import Infeasible, InsufficientData
from ..learning.cvae import CvaeModel, TrainConfig, XTransform, train_cvae
from ..learning.encoding import condition_vector, occupancy_grid
from ..learning.keypoint_net import KeypointNet, train_keypoint_net, unroll_sequence
from ..robots import PointRobot, densify
from .collect import CollectConfig, DatasetRecord, collect_training_example
from .gmm import fit_gmm_baseline
from .maze import MazeConfig, generate_maze
from .persist import load_dataset, save_dataset, save_model

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OfflineConfig:
    maze: MazeConfig = MazeConfig()
    collect: CollectConfig = CollectConfig()
    cvae: TrainConfig = TrainConfig(epochs=30, latent_dim=3)
    keypoint: TrainConfig = TrainConfig(epochs=120, batch_size=32)
    augment_keypoints: bool = True
    grid: int = 16
    cvae_envs: int = 100
    anchor_scale_frac: float = 0.02
    densify_frac: float = 0.02
    min_records: int = 10
    gmm_k: int = 8
    workers: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "OfflineConfig":
        def tc(x, default):
            if x is None:
                return default
            return TrainConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in x.items()})
        base = cls()
        return cls(
            maze=MazeConfig.from_dict(d["maze"]) if "maze" in d else base.maze,
            collect=CollectConfig.from_dict(d["collect"]) if "collect" in d else base.collect,
            cvae=tc(d.get("cvae"), base.cvae),
            keypoint=tc(d.get("keypoint"), base.keypoint),
            **{k: d[k] for k in ("grid", "cvae_envs", "anchor_scale_frac", "densify_frac", "min_records",
                                 "gmm_k", "workers", "augment_keypoints") if k in d},
        )


@dataclass
class OfflineResult:
    keypoint_net: KeypointNet
    cvae: CvaeModel
    global_cvae: CvaeModel
    gmm: object
    records: list[DatasetRecord] = field(default_factory=list)


def _collect_one(args):
    seed, config = args
    w, s, g = generate_maze(seed, config.maze)
    cc = CollectConfig(**{**config.collect.to_dict(), "seed": seed})
    try:
        return collect_training_example(w, PointRobot(), s, g, cc, env_seed=seed)
    except Infeasible:
        return None


def collect_dataset(env_seeds, config: OfflineConfig) -> list[DatasetRecord]:
    jobs = [(int(s), config) for s in env_seeds]
    if config.workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(config.workers) as ex:
            results = list(ex.map(_collect_one, jobs))
    else:
        results = [_collect_one(j) for j in jobs]
    records = [r for r in results if r is not None]
    log.info("collected %d of %d environments", len(records), len(jobs))
    return records


def anchored_transform(w, scale_frac: float) -> XTransform:
    x0, y0, x1, y1 = w.bounds
    s = scale_frac * w.diag
    return XTransform("anchored", (), (s, s), (x0, y0), (x1 - x0, y1 - y0))


def cvae_arrays(records, grid: int = 16, densify_frac: float = 0.02):
    """Per-subproblem path configurations paired with their keypoint-pair condition."""
    xs, conds = [], []
    for r in records:
        w = r.workspace
        occ = occupancy_grid(w, grid)
        step = densify_frac * w.diag
        for a, b, path in r.subproblems:
            c = condition_vector(w, a, b, grid, occ)
            pts = densify(r.robot, path, step)
            xs.append(pts)
            conds.append(np.broadcast_to(c, (len(pts), len(c))))
    return np.vstack(xs), np.vstack(conds)


def global_cvae_arrays(records, grid: int = 16, densify_frac: float = 0.02):
    """Whole-path configurations conditioned on the problem's start and goal only."""
    xs, conds = [], []
    for r in records:
        w = r.workspace
        c = condition_vector(w, r.keypoints[0], r.keypoints[-1], grid)
        full = np.vstack([r.paths[0]] + [p[1:] for p in r.paths[1:]])
        pts = densify(r.robot, full, densify_frac * w.diag)
        xs.append(pts)
        conds.append(np.broadcast_to(c, (len(pts), len(c))))
    return np.vstack(xs), np.vstack(conds)


def keypoint_arrays(records, grid: int = 16, augment: bool = False):
    """Unrolled (input, label) pairs.

    With ``augment`` every record also contributes its vertical mirror and
    its reversed sequence in the horizontal mirror (and that one's vertical
    mirror), which keeps the start on the same side as in the originals.
    """
    X, Y = [], []
    variants = [(False, False, False)]
    if augment:
        variants += [(False, True, False), (True, False, True), (True, True, True)]
    for r in records:
        for fx, fy, rev in variants:
            if fx or fy:
                w, f = mirror_workspace(r.workspace, fx, fy)
                pts = [f(p) for p in r.keypoints]
            else:
                w, pts = r.workspace, list(r.keypoints)
            if rev:
                pts = pts[::-1]
            x, y = unroll_sequence(w, pts, grid)
            X.append(x)
            Y.append(y)
    return np.vstack(X), np.vstack(Y)


def offline_learning(env_seeds, config: OfflineConfig = OfflineConfig(), out_dir=None,
                     dataset_path=None) -> OfflineResult:
    """Collect (or reload) the dataset, then train the keypoint net, the CVAEs and the GMM baseline.

    If ``dataset_path`` names an existing file, collection is skipped and
    that dataset is used. Otherwise the collected dataset is written there.
    Models are written to ``out_dir`` when given.
    """
    env_seeds = list(env_seeds)
    if dataset_path is not None and os.path.exists(dataset_path):
        records = load_dataset(dataset_path)
    else:
        if not env_seeds:
            raise InsufficientData("no environment seeds given")
        records = collect_dataset(env_seeds, config)
        if dataset_path is not None:
            save_dataset(records, dataset_path)
    if len(records) < config.min_records:
        raise InsufficientData(f"only {len(records)} records, need {config.min_records}")

    X, Y = keypoint_arrays(records, config.grid, config.augment_keypoints)
    net = train_keypoint_net(X, Y, config.keypoint, config.grid)

    cvae_records = records[: config.cvae_envs]
    transform = anchored_transform(cvae_records[0].workspace, config.anchor_scale_frac)
    xs, conds = cvae_arrays(cvae_records, config.grid, config.densify_frac)
    cvae = train_cvae(xs, conds, config.cvae, transform)
    gx, gc = global_cvae_arrays(cvae_records, config.grid, config.densify_frac)
    global_cvae = train_cvae(gx, gc, config.cvae, transform)
    gmm = fit_gmm_baseline(xs, config.gmm_k, seed=config.cvae.seed)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        save_model(net, os.path.join(out_dir, "keypoint_net.json"))
        save_model(cvae, os.path.join(out_dir, "cvae.json"))
        save_model(global_cvae, os.path.join(out_dir, "cvae_global.json"))
        save_model(gmm, os.path.join(out_dir, "gmm.json"))
    return OfflineResult(net, cvae, global_cvae, gmm, records)


def mirror_workspace(w, flip_x: bool, flip_y: bool):
    """Reflect a workspace about its bounds' centre lines."""
    from ..geometry import ConvexPolygon, Workspace

    x0, y0, x1, y1 = w.bounds

    def f(p):
        return ((x0 + x1 - p[0]) if flip_x else p[0], (y0 + y1 - p[1]) if flip_y else p[1])

    obs = tuple(ConvexPolygon.from_points([f(v) for v in o.vertices]) for o in w.obstacles)
    return Workspace(w.bounds, obs), f

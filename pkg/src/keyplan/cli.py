"""Command line interface.

Exit codes: 0 on success, 2 when a problem is infeasible or has no path,
3 on bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .bsp import build_bsp, leaf_cells
from .errors import (
    DegenerateWorkspace,
    DimensionMismatch,
    EvenResolution,
    Infeasible,
    InsufficientData,
    InvalidGeometry,
    InvalidParams,
    IoFailure,
    MissingModel,
    NoPath,
    NoTermination,
    PointOutOfBounds,
    StartOrGoalInCollision,
    Unreachable,
)
from .geometry import Workspace

EXIT_OK, EXIT_INFEASIBLE, EXIT_BAD_INPUT = 0, 2, 3
INFEASIBLE = (Infeasible, NoPath, NoTermination, InsufficientData, Unreachable)
BAD_INPUT = (DegenerateWorkspace, DimensionMismatch, EvenResolution, InvalidGeometry, InvalidParams, IoFailure,
             MissingModel, PointOutOfBounds, StartOrGoalInCollision, OSError, ValueError, KeyError)

log = logging.getLogger("keyplan")


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _write_json(obj, path):
    if path in (None, "-"):
        json.dump(obj, sys.stdout, indent=1, sort_keys=True)
        sys.stdout.write("\n")
        return
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_decompose(args) -> int:
    from .keypoints import keypoint_candidates

    w = Workspace.load(args.env)
    tree = build_bsp(w)
    out = tree.to_dict()
    out["cells"] = [c.to_list() for c in leaf_cells(tree)]
    cands = keypoint_candidates(tree.free_boundaries, args.resolution, tree=tree)
    out["candidates"] = [[c.position.x, c.position.y] for c in cands]
    _write_json(out, args.out)
    return EXIT_OK


def cmd_collect(args) -> int:
    from .pipeline.collect import CollectConfig, collect_training_example
    from .pipeline.maze import ArmWorldConfig, MazeConfig, generate_arm_world, generate_maze
    from .pipeline.persist import save_dataset
    from .robots import PointRobot

    cfg = _read_json(args.config) if args.config else {}
    maze_cfg = MazeConfig.from_dict(cfg["maze"]) if "maze" in cfg else MazeConfig()
    arm_cfg = ArmWorldConfig.from_dict(cfg["arm"]) if "arm" in cfg else ArmWorldConfig()
    base = CollectConfig.from_dict(cfg["collect"]) if "collect" in cfg else CollectConfig()
    records = []
    skipped = 0
    for i in range(args.envs):
        seed = args.seed + i
        if args.robot == "arm":
            w, robot, s, g = generate_arm_world(seed, arm_cfg)
        else:
            w, s, g = generate_maze(seed, maze_cfg)
            robot = PointRobot()
        cc = CollectConfig(**{**base.to_dict(), "seed": seed})
        try:
            records.append(collect_training_example(w, robot, s, g, cc, env_seed=seed))
        except Infeasible as e:
            skipped += 1
            log.warning("environment %d skipped: %s", seed, e)
    save_dataset(records, args.out)
    print(f"wrote {len(records)} records to {args.out} ({skipped} skipped)")
    return EXIT_OK if records else EXIT_INFEASIBLE


def cmd_train(args) -> int:
    from .pipeline.offline import OfflineConfig, offline_learning

    cfg = OfflineConfig.from_dict(_read_json(args.config)) if args.config else OfflineConfig()
    if not os.path.exists(args.data):
        raise IoFailure(f"dataset {args.data} not found")
    res = offline_learning([], cfg, out_dir=args.out_dir, dataset_path=args.data)
    print(json.dumps({
        "records": len(res.records),
        "cvae_loss": [res.cvae.history[0], res.cvae.history[-1]],
        "keypoint_loss": [res.keypoint_net.history[0], res.keypoint_net.history[-1]],
        "out_dir": args.out_dir,
    }))
    return EXIT_OK


def _load_sampler(args, problem):
    from .pipeline.bench import _LambdaMix
    from .pipeline.mixture import OnlineConfig, global_cvae_sampler, online_execute
    from .pipeline.persist import load_model

    if args.sampler == "uniform":
        return problem.uniform_sampler(args.seed)
    if not args.model:
        raise MissingModel(f"sampler {args.sampler!r} needs --model")
    lo, hi = problem.config_bounds
    if args.sampler == "mixture":
        d = args.model
        net = load_model(os.path.join(d, "keypoint_net.json"))
        cvae = load_model(os.path.join(d, "cvae.json"))
        return online_execute((net, cvae), problem, args.lam, OnlineConfig(seed=args.seed))
    model = load_model(args.model)
    if args.sampler == "gmm":
        return _LambdaMix(model.sampler(args.seed), args.lam, lo, hi, args.seed)
    return global_cvae_sampler(model, problem, args.lam, args.seed)


def cmd_plan(args) -> int:
    from .planner import PlannerParams, PlanningProblem, plan_rrt, plan_rrt_star
    from .robots import PointRobot, config_collides, robot_from_dict

    w = Workspace.load(args.env)
    robot = robot_from_dict(_read_json(args.robot)) if args.robot else PointRobot()
    start = np.array(args.start, dtype=float)
    goal = np.array(args.goal, dtype=float)
    if start.shape != (robot.dim,) or goal.shape != (robot.dim,):
        raise DimensionMismatch(f"start and goal need {robot.dim} values")
    if config_collides(robot, start, w) or config_collides(robot, goal, w):
        raise StartOrGoalInCollision("start or goal configuration is in collision")
    problem = PlanningProblem(robot, w, start, goal)
    src = _load_sampler(args, problem)
    params = PlannerParams(max_iters=args.max_iters, seed=args.seed)
    planner = plan_rrt if args.planner == "rrt" else plan_rrt_star
    res = planner(problem, src, params)
    out = res.to_dict()
    out["sampler"] = args.sampler
    _write_json(out, args.out)
    return EXIT_OK if res.success else EXIT_INFEASIBLE


def cmd_bench(args) -> int:
    from .pipeline.bench import BenchConfig, run_benchmark, write_report

    cfg = BenchConfig.load(args.config) if args.config else BenchConfig()
    if args.workers:
        from dataclasses import replace
        cfg = replace(cfg, workers=args.workers)
    report, timing = run_benchmark(cfg)
    write_report(report, args.out)
    timing_path = args.timing or os.path.splitext(args.out)[0] + ".timing.json"
    with open(timing_path, "w") as fh:
        json.dump(timing, fh)
    return EXIT_OK


def cmd_plot(args) -> int:
    from .pipeline.svg import Scene, emit_svg, scene_from_tree

    data = _read_json(args.scene)
    scene = Scene.from_dict(data)
    if args.bsp:
        tree = build_bsp(scene.workspace)
        extra = scene_from_tree(scene.workspace, tree)
        scene.boundaries = list(scene.boundaries) + list(extra.boundaries)
    emit_svg(scene, args.out)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are bad input, not the infeasible code argparse would use
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="keyplan", description="Keypoint-guided sampling for motion planning")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("decompose", help="BSP cells, free boundaries and keypoint candidates of a workspace")
    d.add_argument("--env", required=True)
    d.add_argument("--resolution", type=int, default=3)
    d.add_argument("--out", default="-")
    d.set_defaults(func=cmd_decompose)

    c = sub.add_parser("collect", help="generate environments and collect training records")
    c.add_argument("--envs", type=int, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.add_argument("--robot", choices=("point", "arm"), default="point")
    c.add_argument("--config")
    c.set_defaults(func=cmd_collect)

    t = sub.add_parser("train", help="train the keypoint net, the CVAEs and the GMM baseline")
    t.add_argument("--data", required=True)
    t.add_argument("--out-dir", required=True)
    t.add_argument("--config")
    t.set_defaults(func=cmd_train)

    pl = sub.add_parser("plan", help="plan a single problem")
    pl.add_argument("--env", required=True)
    pl.add_argument("--robot")
    pl.add_argument("--start", type=float, nargs="+", required=True)
    pl.add_argument("--goal", type=float, nargs="+", required=True)
    pl.add_argument("--sampler", choices=("uniform", "cvae", "gmm", "mixture"), default="uniform")
    pl.add_argument("--model", help="model file (cvae, gmm) or models directory (mixture)")
    pl.add_argument("--lam", type=float, default=0.5)
    pl.add_argument("--planner", choices=("rrt", "rrtstar"), default="rrtstar")
    pl.add_argument("--seed", type=int, default=0)
    pl.add_argument("--max-iters", type=int, default=3000)
    pl.add_argument("--out", default="-")
    pl.set_defaults(func=cmd_plan)

    b = sub.add_parser("bench", help="run the sampler benchmark")
    b.add_argument("--config")
    b.add_argument("--out", required=True)
    b.add_argument("--timing", help="wall-clock sidecar path (default: <out>.timing.json)")
    b.add_argument("--workers", type=int)
    b.set_defaults(func=cmd_bench)

    pt = sub.add_parser("plot", help="render a scene JSON to SVG")
    pt.add_argument("--scene", required=True)
    pt.add_argument("--out", required=True)
    pt.add_argument("--bsp", action="store_true", help="overlay the BSP free boundaries")
    pt.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except INFEASIBLE as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except BAD_INPUT as e:
        print(f"bad input: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())

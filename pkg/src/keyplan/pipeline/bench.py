"""Benchmark harness comparing samplers under RRT* on held-out mazes.

One RRT* run of the largest budget is made per (environment, sampler,
seed). Smaller budgets read the run's per-iteration traces, which is
exactly what a shorter run with the same seed would have produced. The
report holds only deterministic quantities. Planning time is stood in for
by the iteration of the first solution (the budget on failure); wall-clock
times go to a separate sidecar.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InvalidParams, MissingModel, NoTermination
from ..planner import PlannerParams, PlanningProblem, plan_rrt_star, validate_path
from ..robots import PointRobot
from .maze import MazeConfig, generate_maze
from .mixture import OnlineConfig, global_cvae_sampler, online_execute
from .persist import load_model

SAMPLERS = ("uniform", "cvae", "gmm", "mixture")
MODEL_FILES = {"mixture": ("keypoint_net.json", "cvae.json"), "cvae": ("cvae_global.json",), "gmm": ("gmm.json",)}


@dataclass(frozen=True)
class BenchConfig:
    env_seeds: tuple[int, ...] = tuple(range(1000, 1020))
    seeds: tuple[int, ...] = tuple(range(20))
    samplers: tuple[str, ...] = ("uniform", "mixture")
    budgets: tuple[int, ...] = (400, 500, 600, 700, 800)
    lam: float = 0.5
    models_dir: str = "models"
    maze: MazeConfig = MazeConfig()
    online: OnlineConfig = OnlineConfig()
    mom_groups: int = 5
    workers: int = 1

    def __post_init__(self):
        unknown = set(self.samplers) - set(SAMPLERS)
        if unknown:
            raise InvalidParams(f"unknown samplers {sorted(unknown)}")
        if not self.budgets or min(self.budgets) <= 0:
            raise InvalidParams("budgets must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        return json.loads(json.dumps(d))

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        base = cls()
        kw = {}
        for k in ("env_seeds", "seeds", "samplers", "budgets"):
            if k in d:
                kw[k] = tuple(d[k])
        for k in ("lam", "models_dir", "mom_groups", "workers"):
            if k in d:
                kw[k] = d[k]
        kw["maze"] = MazeConfig.from_dict(d["maze"]) if "maze" in d else base.maze
        kw["online"] = OnlineConfig(**d["online"]) if "online" in d else base.online
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "BenchConfig":
        with open(path) as fh:
            cfg = cls.from_dict(json.load(fh))
        if not os.path.isabs(cfg.models_dir):
            from dataclasses import replace
            cfg = replace(cfg, models_dir=os.path.join(os.path.dirname(os.path.abspath(path)), cfg.models_dir))
        return cfg


def load_models(config: BenchConfig) -> dict:
    models = {}
    for s in config.samplers:
        for name in MODEL_FILES.get(s, ()):
            path = os.path.join(config.models_dir, name)
            if not os.path.exists(path):
                raise MissingModel(f"sampler {s!r} needs {path}")
            models[name] = load_model(path)
    return models


def make_sampler(name: str, problem: PlanningProblem, models: dict, config: BenchConfig, seed: int):
    lo, hi = problem.config_bounds
    if name == "uniform":
        return problem.uniform_sampler(seed)
    if name == "gmm":
        gmm = models["gmm.json"]
        return _LambdaMix(gmm.sampler(seed), config.lam, lo, hi, seed)
    if name == "cvae":
        return global_cvae_sampler(models["cvae_global.json"], problem, config.lam, seed, config.online.grid)
    if name == "mixture":
        from dataclasses import replace
        return online_execute((models["keypoint_net.json"], models["cvae.json"]), problem, config.lam,
                              replace(config.online, seed=seed))
    raise InvalidParams(f"unknown sampler {name!r}")


class _LambdaMix:
    """Uniform with probability ``lam``, otherwise the wrapped source."""

    def __init__(self, inner, lam, low, high, seed):
        self.inner, self.lam = inner, lam
        self.low, self.high = np.asarray(low), np.asarray(high)
        self.dim = len(self.low)
        self.rng = np.random.default_rng(seed + 7919)

    def sample(self):
        if self.rng.random() < self.lam:
            return self.rng.uniform(self.low, self.high)
        return self.inner.sample()


def run_unit(env_seed: int, sampler: str, seed: int, config: BenchConfig, models: dict) -> dict:
    """One RRT* run; returns per-budget metrics plus raw timing."""
    w, s, g = generate_maze(env_seed, config.maze)
    problem = PlanningProblem(PointRobot(), w, s, g)
    budget = max(config.budgets)
    try:
        src = make_sampler(sampler, problem, models, config, seed)
        fallback = False
    except NoTermination:
        # the keypoint net did not reach the goal: plan with the uniform sampler
        src = problem.uniform_sampler(seed)
        fallback = True
    res = plan_rrt_star(problem, src, PlannerParams(max_iters=budget, seed=seed))
    per_budget = {}
    for b in config.budgets:
        k = min(b, res.iterations) - 1
        if k < 0:
            # solved before any sampling
            cost, valid, drawn = res.cost, 0, 0
        else:
            cost, valid, drawn = float(res.cost_trace[k]), int(res.valid_trace[k]), int(res.drawn_trace[k])
        ok = math.isfinite(cost)
        first = res.first_solution_iter
        per_budget[str(b)] = {
            "success": ok,
            "cost": cost if ok else None,
            "time": float(first) if (first is not None and first <= b) else float(b),
            "valid_fraction": valid / max(1, drawn),
        }
    revalid = True
    if res.success:
        revalid = validate_path(res.path, problem.robot, w)
    return {"env": env_seed, "sampler": sampler, "seed": seed, "budgets": per_budget, "fallback": fallback,
            "revalidated": revalid, "elapsed": res.elapsed}


def _unit_job(args):
    return run_unit(*args)


def _ci(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if len(v) == 0:
        return (math.nan, math.nan)
    m = float(v.mean())
    if len(v) < 2:
        return (m, 0.0)
    return (m, float(1.96 * v.std(ddof=1) / math.sqrt(len(v))))


def median_of_means(values, groups: int) -> float:
    v = np.asarray(values, dtype=float)
    if len(v) == 0:
        return math.nan
    parts = np.array_split(v, min(groups, len(v)))
    return float(np.median([p.mean() for p in parts]))


def _num(x):
    return None if (x is None or (isinstance(x, float) and not math.isfinite(x))) else x


def aggregate(units: list[dict], config: BenchConfig) -> dict:
    """Per (environment, sampler, budget) rows plus per (sampler, budget) summaries."""
    by = {}
    for u in units:
        by.setdefault((u["env"], u["sampler"]), []).append(u)
    rows = []
    summary = {}
    for b in config.budgets:
        key = str(b)
        for sampler in config.samplers:
            norm_costs, norm_times, ratios, succ = [], [], [], []
            bases = []
            for env in config.env_seeds:
                us = sorted(by.get((env, sampler), []), key=lambda u: u["seed"])
                ms = [u["budgets"][key] for u in us]
                costs = [m["cost"] for m in ms if m["success"]]
                times = [m["time"] for m in ms]
                vf = [m["valid_fraction"] for m in ms]
                row = {
                    "env": env, "sampler": sampler, "budget": b, "runs": len(ms),
                    "success_rate": sum(m["success"] for m in ms) / max(1, len(ms)),
                    "cost": _ci(costs), "time": _ci(times),
                    "time_mom": median_of_means(times, config.mom_groups),
                    "valid_fraction": _ci(vf),
                }
                # normalisation against the uniform sampler on the same environment
                base_name = "uniform"
                ref = [u["budgets"][key] for u in by.get((env, "uniform"), [])]
                ref_costs = [m["cost"] for m in ref if m["success"]]
                if not ref_costs and "cvae" in config.samplers:
                    base_name = "cvae"
                    ref = [u["budgets"][key] for u in by.get((env, "cvae"), [])]
                    ref_costs = [m["cost"] for m in ref if m["success"]]
                row["normalization_base"] = base_name if ref else None
                if ref:
                    ref_t = median_of_means([m["time"] for m in ref], config.mom_groups)
                    row["normalized_time"] = row["time_mom"] / ref_t if ref_t > 0 else None
                    ref_vf = float(np.mean([m["valid_fraction"] for m in ref]))
                    row["valid_ratio"] = row["valid_fraction"][0] / ref_vf if ref_vf > 0 else None
                    row["normalized_cost"] = (row["cost"][0] / float(np.mean(ref_costs))
                                              if costs and ref_costs else None)
                else:
                    row["normalized_time"] = row["valid_ratio"] = row["normalized_cost"] = None
                rows.append(row)
                bases.append(row["normalization_base"])
                succ.extend(m["success"] for m in ms)
                if row["normalized_cost"] is not None:
                    norm_costs.append(row["normalized_cost"])
                if row["normalized_time"] is not None:
                    norm_times.append(row["normalized_time"])
                if row["valid_ratio"] is not None:
                    ratios.append(row["valid_ratio"])
            summary.setdefault(sampler, {})[key] = {
                "success_rate": sum(succ) / max(1, len(succ)),
                "normalized_cost": _ci(norm_costs),
                "normalized_time": _ci(norm_times),
                "valid_ratio": _ci(ratios),
                "envs_valid_ratio_ge_1.3": sum(r >= 1.3 for r in ratios),
                "envs": len(config.env_seeds),
                "normalization_bases": sorted(set(x for x in bases if x is not None)),
            }
    return {"rows": rows, "summary": summary}


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float):
        return _num(obj)
    return obj


def run_benchmark(config: BenchConfig, models: dict | None = None):
    """Returns ``(report, timing)``; only ``report`` is deterministic."""
    if models is None:
        models = load_models(config)
    jobs = [(e, s, seed, config, models) for e in config.env_seeds for s in config.samplers for seed in config.seeds]
    if config.workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(config.workers) as ex:
            units = list(ex.map(_unit_job, jobs, chunksize=4))
    else:
        units = [_unit_job(j) for j in jobs]
    units.sort(key=lambda u: (u["env"], SAMPLERS.index(u["sampler"]), u["seed"]))
    timing = [{"env": u["env"], "sampler": u["sampler"], "seed": u["seed"], "elapsed": u.pop("elapsed")}
              for u in units]
    agg = aggregate(units, config)
    report = {
        "config": config.to_dict(),
        "time_metric": "iterations to first solution (budget when unsolved)",
        "revalidation_failures": sum(not u["revalidated"] for u in units),
        "keypoint_fallbacks": sum(u["fallback"] for u in units),
        "rows": agg["rows"],
        "summary": agg["summary"],
        "units": units,
    }
    return _clean(report), timing


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")

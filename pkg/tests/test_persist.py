import json

import numpy as np
import pytest

from keyplan.errors import IoFailure, MissingModel
from keyplan.pipeline.collect import CollectConfig, collect_training_example
from keyplan.pipeline.maze import generate_maze
from keyplan.pipeline.persist import load_dataset, load_model, save_dataset, save_model
from keyplan.robots import PointRobot


def _records(n=4):
    out = []
    for seed in range(n):
        w, s, g = generate_maze(seed)
        out.append(collect_training_example(w, PointRobot(), s, g, CollectConfig(seed=seed), env_seed=seed))
    return out


def test_dataset_round_trip_bit_equal(tmp_path):
    recs = _records()
    p = tmp_path / "d.jsonl"
    save_dataset(recs, p)
    back = load_dataset(p)
    assert len(back) == len(recs)
    for a, b in zip(recs, back):
        assert a.workspace == b.workspace
        assert np.array_equal(a.x_init, b.x_init) and np.array_equal(a.x_target, b.x_target)
        assert a.keypoints == b.keypoints and a.raw_keypoints == b.raw_keypoints
        assert all(np.array_equal(p, q) for p, q in zip(a.paths, b.paths))
        assert b.validate()
    # one JSON object per line
    assert len(p.read_text().splitlines()) == len(recs)


def test_persisted_paths_all_revalidate(tiny_models):
    out, res = tiny_models
    assert all(r.validate() for r in load_dataset(out / "data.jsonl"))


def test_models_round_trip(tiny_models, tmp_path):
    out, res = tiny_models
    for name in ("keypoint_net.json", "cvae.json", "cvae_global.json", "gmm.json"):
        m = load_model(out / name)
        save_model(m, tmp_path / name)
        assert json.loads((tmp_path / name).read_text()) == json.loads((out / name).read_text())


def test_missing_model(tmp_path):
    with pytest.raises(MissingModel):
        load_model(tmp_path / "nope.json")
    (tmp_path / "x.json").write_text('{"kind": "mystery"}')
    with pytest.raises(MissingModel):
        load_model(tmp_path / "x.json")


def test_io_failure(tmp_path):
    with pytest.raises(IoFailure):
        save_dataset([], tmp_path / "missing_dir" / "d.jsonl")
    with pytest.raises(IoFailure):
        load_dataset(tmp_path / "absent.jsonl")

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from keyplan.geometry import ConvexPolygon, Workspace  # noqa: E402


def random_rect_workspace(rng, n=5, bounds=(0.0, 0.0, 1.0, 1.0)):
    """Non-overlapping random rectangles inside ``bounds``."""
    x0, y0, x1, y1 = bounds
    rects = []
    tries = 0
    while len(rects) < n and tries < 500:
        tries += 1
        w, h = rng.uniform(0.05, 0.3, size=2)
        ax = rng.uniform(x0, x1 - w)
        ay = rng.uniform(y0, y1 - h)
        r = (ax, ay, ax + w, ay + h)
        if any(not (r[2] <= q[0] or q[2] <= r[0] or r[3] <= q[1] or q[3] <= r[1]) for q in rects):
            continue
        rects.append(r)
    return Workspace(bounds, tuple(ConvexPolygon.rectangle(*r) for r in rects))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_square():
    return ConvexPolygon.rectangle(0.0, 0.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def tiny_models(tmp_path_factory):
    """Quickly trained models on a handful of mazes; good enough to exercise the plumbing."""
    from keyplan.learning import TrainConfig
    from keyplan.pipeline.offline import OfflineConfig, offline_learning

    out = tmp_path_factory.mktemp("models")
    cfg = OfflineConfig(
        cvae=TrainConfig(epochs=2, hidden=(16,), latent_dim=2),
        keypoint=TrainConfig(epochs=2, hidden=(16,)),
        cvae_envs=4, min_records=3, gmm_k=2,
    )
    res = offline_learning(range(6), cfg, out_dir=out, dataset_path=out / "data.jsonl")
    return out, res


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])

"""JSON lines datasets and JSON model files.

Floats are written with Python's shortest round-trip representation, so
loading gives back bit-identical values.
"""

from __future__ import annotations

import json
import os
from typing import Iterable

from ..errors import IoFailure, MissingModel
from ..learning.cvae import CvaeModel
from ..learning.keypoint_net import KeypointNet
from .collect import DatasetRecord
from .gmm import GaussianMixture

KINDS = {"cvae": CvaeModel, "keypoint_net": KeypointNet, "gmm": GaussianMixture}


def _wrap_os(fn):
    def inner(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except OSError as e:
            raise IoFailure(str(e)) from e
    inner.__name__ = fn.__name__
    inner.__doc__ = fn.__doc__
    return inner


@_wrap_os
def save_dataset(records: Iterable[DatasetRecord], path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), separators=(",", ":")))
            fh.write("\n")


@_wrap_os
def load_dataset(path) -> list[DatasetRecord]:
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                out.append(DatasetRecord.from_dict(json.loads(line)))
    return out


@_wrap_os
def save_model(model, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, separators=(",", ":"))


def load_model(path):
    if not os.path.exists(path):
        raise MissingModel(f"model file {path} not found")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise IoFailure(str(e)) from e
    kind = data.get("kind")
    if kind not in KINDS:
        raise MissingModel(f"{path} holds no known model (kind={kind!r})")
    return KINDS[kind].from_dict(data)

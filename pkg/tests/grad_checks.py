"""Finite-difference gradient checks shared by the unit and acceptance suites."""

from __future__ import annotations

import numpy as np

from keyplan.learning.cvae import CvaeModel, elbo_loss
from keyplan.learning.mlp import Mlp
from oracles import central_difference, max_relative_error


def mlp_gradient_error(seed: int, sizes=(5, 7, 6, 3)) -> float:
    rng = np.random.default_rng(seed)
    m = Mlp.init(sizes, rng)
    for b in m.biases:
        b[:] = rng.normal(0, 0.3, size=b.shape)
    x = rng.normal(size=(4, sizes[0]))
    adj = rng.normal(size=(4, sizes[-1]))

    def f():
        return float(np.sum(adj * m.forward(x)))

    f()
    grads, _ = m.backward(adj)
    return max_relative_error(grads, central_difference(f, m.params))


def elbo_gradient_error(seed: int) -> float:
    rng = np.random.default_rng(seed)
    model = CvaeModel.init(x_dim=2, cond_dim=5, latent_dim=2, hidden=(6, 5), seed=seed)
    for p in model.params:
        p += rng.normal(0, 0.05, size=p.shape)
    x = rng.normal(size=(3, 2))
    cond = rng.normal(size=(3, 5))
    eps = rng.normal(size=(3, 2))
    _, grads = elbo_loss(model, x, cond, eps)
    num = central_difference(lambda: elbo_loss(model, x, cond, eps)[0], model.params)
    return max_relative_error(grads, num)

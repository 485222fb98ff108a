"""Conditional variational autoencoder trained on the negated ELBO.

The likelihood is a unit-variance Gaussian, so the reconstruction term is
half the squared error in model coordinates. An :class:`XTransform` maps
configurations to model coordinates. ``anchored`` centres each datum on
the midpoint of the two keypoints carried at the end of its condition and
divides by a fixed scale. That keeps the data spread well above the unit
likelihood variance so the latent code stays in use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch, EmptyDataset, InvalidParams, TrainingDiverged
from .mlp import Adam, Mlp


@dataclass(frozen=True)
class XTransform:
    kind: str = "identity"  # identity | global | anchored
    center: tuple[float, ...] = ()
    scale: tuple[float, ...] = ()
    bounds_lo: tuple[float, ...] = ()
    bounds_span: tuple[float, ...] = ()
    periodic: bool = False

    def _center(self, cond: np.ndarray) -> np.ndarray:
        if self.kind == "anchored":
            mid = 0.5 * (cond[..., -4:-2] + cond[..., -2:])
            return np.asarray(self.bounds_lo) + mid * np.asarray(self.bounds_span)
        if self.kind == "global":
            return np.asarray(self.center)
        return np.zeros(1)

    def _scale(self) -> np.ndarray:
        return np.asarray(self.scale) if self.kind != "identity" else np.ones(1)

    def to_model(self, x: np.ndarray, cond: np.ndarray) -> np.ndarray:
        return (x - self._center(cond)) / self._scale()

    def from_model(self, y: np.ndarray, cond: np.ndarray) -> np.ndarray:
        x = y * self._scale() + self._center(cond)
        if self.periodic:
            x = math.pi - np.mod(math.pi - x, 2.0 * math.pi)
        return x

    def to_dict(self) -> dict:
        return {"kind": self.kind, "center": list(self.center), "scale": list(self.scale),
                "bounds_lo": list(self.bounds_lo), "bounds_span": list(self.bounds_span),
                "periodic": self.periodic}

    @classmethod
    def from_dict(cls, d: dict) -> "XTransform":
        return cls(d["kind"], tuple(d["center"]), tuple(d["scale"]), tuple(d["bounds_lo"]),
                   tuple(d["bounds_span"]), bool(d["periodic"]))


@dataclass
class CvaeModel:
    encoder: Mlp
    decoder: Mlp
    latent_dim: int
    cond_dim: int
    x_dim: int
    transform: XTransform = XTransform()
    history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.encoder.sizes[0] != self.x_dim + self.cond_dim or self.encoder.sizes[-1] != 2 * self.latent_dim:
            raise DimensionMismatch("encoder must map (x, cond) to 2 * latent_dim outputs")
        if self.decoder.sizes[0] != self.latent_dim + self.cond_dim or self.decoder.sizes[-1] != self.x_dim:
            raise DimensionMismatch("decoder must map (z, cond) to x_dim outputs")

    @classmethod
    def init(cls, x_dim: int, cond_dim: int, latent_dim: int, hidden=(256, 256), seed: int = 0,
             transform: XTransform = XTransform()) -> "CvaeModel":
        rng = np.random.default_rng(seed)
        enc = Mlp.init((x_dim + cond_dim, *hidden, 2 * latent_dim), rng)
        dec = Mlp.init((latent_dim + cond_dim, *hidden, x_dim), rng)
        return cls(enc, dec, latent_dim, cond_dim, x_dim, transform)

    @property
    def params(self) -> list[np.ndarray]:
        return self.encoder.params + self.decoder.params

    def to_dict(self) -> dict:
        return {
            "kind": "cvae",
            "arch": {"encoder": list(self.encoder.sizes), "decoder": list(self.decoder.sizes)},
            "latent_dim": self.latent_dim,
            "cond_dim": self.cond_dim,
            "x_dim": self.x_dim,
            "transform": self.transform.to_dict(),
            "layers": self.encoder.to_dict()["layers"] + self.decoder.to_dict()["layers"],
            "history": list(self.history),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CvaeModel":
        ea, da = d["arch"]["encoder"], d["arch"]["decoder"]
        ne = len(ea) - 1
        enc = Mlp.from_dict({"arch": ea, "layers": d["layers"][:ne]})
        dec = Mlp.from_dict({"arch": da, "layers": d["layers"][ne:]})
        return cls(enc, dec, int(d["latent_dim"]), int(d["cond_dim"]), int(d["x_dim"]),
                   XTransform.from_dict(d["transform"]), list(d.get("history", [])))


def kl_standard_gaussian(mu, logvar) -> float:
    """KL divergence from N(mu, diag(exp(logvar))) to the standard normal."""
    mu = np.asarray(mu, dtype=float)
    logvar = np.asarray(logvar, dtype=float)
    if mu.shape != logvar.shape:
        raise DimensionMismatch("mu and logvar must have equal shapes")
    return float(0.5 * np.sum(mu * mu + np.exp(logvar) - 1.0 - logvar))


def elbo_loss(model: CvaeModel, x, cond, eps):
    """Negated single-sample ELBO and its gradients.

    ``x``, ``cond`` and ``eps`` are single rows or equal-length batches.
    For a batch the loss is the mean over rows. Returns
    ``(loss, grads)`` with ``grads`` aligned to :attr:`CvaeModel.params`.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    cond = np.atleast_2d(np.asarray(cond, dtype=float))
    eps = np.atleast_2d(np.asarray(eps, dtype=float))
    B = len(x)
    if x.shape[1] != model.x_dim or cond.shape != (B, model.cond_dim) or eps.shape != (B, model.latent_dim):
        raise DimensionMismatch("x, cond and eps do not match the model dimensions")
    L = model.latent_dim
    y = model.transform.to_model(x, cond)
    h = model.encoder.forward(np.concatenate([y, cond], axis=1))
    mu, lv = h[:, :L], h[:, L:]
    std = np.exp(0.5 * lv)
    z = mu + std * eps
    xh = model.decoder.forward(np.concatenate([z, cond], axis=1))
    diff = xh - y
    rec = 0.5 * np.sum(diff * diff)
    ev = np.exp(lv)
    kl = 0.5 * np.sum(mu * mu + ev - 1.0 - lv)
    loss = (rec + kl) / B

    dec_grads, d_in = model.decoder.backward(diff / B)
    dz = d_in[:, :L]
    d_mu = dz + mu / B
    d_lv = dz * eps * 0.5 * std + 0.5 * (ev - 1.0) / B
    enc_grads, _ = model.encoder.backward(np.concatenate([d_mu, d_lv], axis=1))
    return float(loss), enc_grads + dec_grads


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 40
    batch_size: int = 64
    lr: float = 1e-3
    seed: int = 0
    hidden: tuple[int, ...] = (256, 256)
    latent_dim: int = 3

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0 or self.lr <= 0:
            raise InvalidParams("epochs, batch_size and lr must be positive")


def _check_finite(value: float, epoch: int):
    if not math.isfinite(value):
        raise TrainingDiverged(f"loss became non-finite in epoch {epoch}")


def train_cvae(xs, conds, config: TrainConfig = TrainConfig(), transform: XTransform = XTransform()) -> CvaeModel:
    """Adam on minibatches; ``model.history`` holds the mean loss of each epoch."""
    xs = np.asarray(xs, dtype=float)
    conds = np.asarray(conds, dtype=float)
    if len(xs) == 0:
        raise EmptyDataset("no training configurations")
    if xs.ndim != 2 or conds.shape[0] != len(xs):
        raise DimensionMismatch("xs and conds must be 2D arrays with matching rows")
    model = CvaeModel.init(xs.shape[1], conds.shape[1], config.latent_dim, config.hidden, config.seed, transform)
    rng = np.random.default_rng(config.seed + 1)
    opt = Adam(model.params, lr=config.lr)
    n = len(xs)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, config.batch_size):
            idx = order[s:s + config.batch_size]
            eps = rng.standard_normal((len(idx), model.latent_dim))
            loss, grads = elbo_loss(model, xs[idx], conds[idx], eps)
            _check_finite(loss, epoch)
            total += loss * len(idx)
            opt.step(grads)
        model.history.append(total / n)
        _check_finite(model.history[-1], epoch)
    if not (model.encoder.is_finite() and model.decoder.is_finite()):
        raise TrainingDiverged("parameters became non-finite")
    return model


def sample_cvae(model: CvaeModel, cond, n: int, seed: int | np.random.Generator = 0) -> np.ndarray:
    """``n`` decoder outputs for standard-normal latents, in configuration coordinates."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if n <= 0:
        return np.zeros((0, model.x_dim))
    cond = np.asarray(cond, dtype=float)
    if cond.shape != (model.cond_dim,):
        raise DimensionMismatch(f"condition must have length {model.cond_dim}")
    z = rng.standard_normal((n, model.latent_dim))
    c = np.broadcast_to(cond, (n, model.cond_dim))
    y = model.decoder.forward(np.concatenate([z, c], axis=1))
    return model.transform.from_model(y, c)

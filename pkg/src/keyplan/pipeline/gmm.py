"""Gaussian mixture baseline fitted to pooled path configurations by EM."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.special import logsumexp

from ..errors import EmptyDataset, InvalidParams

REG = 1e-6


@dataclass
class GaussianMixture:
    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    log_likelihood: list[float] = field(default_factory=list)
    periodic: bool = False

    @property
    def k(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def component_log_pdf(self, X: np.ndarray) -> np.ndarray:
        """``(N, k)`` log densities of each component."""
        X = np.atleast_2d(X)
        d = X.shape[1]
        out = np.empty((len(X), self.k))
        for j in range(self.k):
            L = np.linalg.cholesky(self.covs[j])
            sol = np.linalg.solve(L, (X - self.means[j]).T)
            logdet = 2.0 * np.sum(np.log(np.diag(L)))
            out[:, j] = -0.5 * (np.sum(sol * sol, axis=0) + logdet + d * math.log(2 * math.pi))
        return out

    def mean_log_likelihood(self, X) -> float:
        return float(np.mean(logsumexp(self.component_log_pdf(X) + np.log(self.weights), axis=1)))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        comp = rng.choice(self.k, size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        L = np.linalg.cholesky(self.covs)
        x = self.means[comp] + np.einsum("nij,nj->ni", L[comp], z)
        if self.periodic:
            x = math.pi - np.mod(math.pi - x, 2 * math.pi)
        return x

    def sampler(self, seed: int = 0, batch: int = 256) -> "GmmSampler":
        return GmmSampler(self, seed, batch)

    def to_dict(self) -> dict:
        return {"kind": "gmm", "weights": self.weights.tolist(), "means": self.means.tolist(),
                "covs": self.covs.tolist(), "log_likelihood": list(self.log_likelihood),
                "periodic": self.periodic}

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianMixture":
        return cls(np.array(d["weights"]), np.array(d["means"]), np.array(d["covs"]),
                   list(d.get("log_likelihood", [])), bool(d.get("periodic", False)))


class GmmSampler:
    def __init__(self, gmm: GaussianMixture, seed: int = 0, batch: int = 256):
        self.gmm = gmm
        self.dim = gmm.dim
        self.rng = np.random.default_rng(seed)
        self.batch = batch
        self._buf = np.empty((0, self.dim))
        self._i = 0

    def sample(self) -> np.ndarray:
        if self._i >= len(self._buf):
            self._buf = self.gmm.sample(self.batch, self.rng)
            self._i = 0
        x = self._buf[self._i]
        self._i += 1
        return x


def fit_gmm(X, k: int, iters: int = 50, seed: int = 0, periodic: bool = False) -> GaussianMixture:
    """EM from a k-means++ initialisation; the mean log-likelihood of every iteration is kept."""
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise EmptyDataset("no configurations to fit")
    if k < 1:
        raise InvalidParams("k must be positive")
    n, d = X.shape
    k = min(k, n)
    rng = np.random.default_rng(seed)
    if k == 1:
        labels = np.zeros(n, dtype=int)
    else:
        _, labels = kmeans2(X, k, minit="++", rng=rng)
    reg = REG * np.eye(d)
    resp = np.zeros((n, k))
    resp[np.arange(n), labels] = 1.0
    gmm = GaussianMixture(np.full(k, 1.0 / k), np.zeros((k, d)), np.tile(np.eye(d), (k, 1, 1)), [], periodic)
    for it in range(iters + 1):
        # M step
        nk = resp.sum(axis=0) + 1e-12
        gmm.weights = nk / nk.sum()
        gmm.means = (resp.T @ X) / nk[:, None]
        for j in range(k):
            diff = X - gmm.means[j]
            gmm.covs[j] = (resp[:, j, None] * diff).T @ diff / nk[j] + reg
        # E step
        logp = gmm.component_log_pdf(X) + np.log(gmm.weights)
        norm = logsumexp(logp, axis=1)
        gmm.log_likelihood.append(float(np.mean(norm)))
        if it < iters:
            resp = np.exp(logp - norm[:, None])
    return gmm


def fit_gmm_baseline(configurations, k: int = 8, seed: int = 0, periodic: bool = False) -> GaussianMixture:
    """Mixture over pooled path configurations; ``.sampler(seed)`` gives a sample source."""
    return fit_gmm(configurations, k, iters=50, seed=seed, periodic=periodic)

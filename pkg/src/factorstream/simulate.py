"""Synthetic data generation for the three benchmark models.

Sampling is ancestral from the stated generative equations with a named,
seedable generator: every dataset derives from ``numpy``'s PCG64 via
``SeedSequence(seed)``, split into one child stream per sampled variable
group, so datasets are reproducible bit-for-bit from (config, seed).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .models import normalize_config


@dataclass
class Dataset:
    model: str
    config: dict
    observations: list  # one entry per time step
    latents: dict  # name -> array of ground-truth trajectories
    seed: int

    def to_json(self):
        return {
            "model": self.model,
            "config": _plain(self.config),
            "observations": _plain(self.observations),
            "latents": {k: _plain(v) for k, v in self.latents.items()},
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            model=obj["model"],
            config=obj["config"],
            observations=obj["observations"],
            latents=obj["latents"],
            seed=obj["seed"],
        )


def _plain(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


def _streams(seed, n_streams):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_streams)]


def simulate(config, seed=None):
    """Ancestral sample from the generative model described by ``config``."""
    cfg = normalize_config(config)
    if seed is not None:
        cfg["seed"] = int(seed)
    model = cfg["model"]
    if model == "lgssm":
        return _simulate_lgssm(cfg)
    if model == "hmm":
        return _simulate_hmm(cfg)
    return _simulate_hgf(cfg)


def _simulate_lgssm(cfg):
    n, d = cfg["n"], cfg["d"]
    A = np.asarray(cfg["A"], float)
    B = np.asarray(cfg["B"], float)
    P = np.asarray(cfg["P"], float)
    Q = np.asarray(cfg["Q"], float)
    for name, m in (("P", P), ("Q", Q)):
        vals = np.linalg.eigvalsh(0.5 * (m + m.T))
        if np.any(vals <= 0):
            raise ConfigError("config.%s must be positive definite" % name)
    x0_mean = np.asarray(cfg.get("x0_mean", np.zeros(d)), float)
    rng_state, rng_obs = _streams(cfg["seed"], 2)
    chol_p = np.linalg.cholesky(P)
    chol_q = np.linalg.cholesky(Q)
    xs = np.zeros((n, d))
    ys = np.zeros((n, B.shape[0]))
    x = x0_mean.copy()
    for t in range(n):
        if t > 0:
            x = A @ x + chol_p @ rng_state.normal(size=d)
        xs[t] = x
        ys[t] = B @ x + chol_q @ rng_obs.normal(size=B.shape[0])
    return Dataset("lgssm", cfg, ys, {"x": xs}, cfg["seed"])


def _hmm_truth_matrices(cfg):
    """Known simulation parameters: explicit A/B from the config, otherwise
    the separability-controlled default with 0.8 dominant mass."""
    M = cfg["M"]
    def default():
        m = np.full((M, M), 0.2 / (M - 1))
        np.fill_diagonal(m, 0.8)
        return m
    A = np.asarray(cfg["A"], float) if cfg.get("A") is not None else default()
    B = np.asarray(cfg["B"], float) if cfg.get("B") is not None else default()
    return A, B


def _simulate_hmm(cfg):
    n, M = cfg["n"], cfg["M"]
    A, B = _hmm_truth_matrices(cfg)
    for name, m in (("A", A), ("B", B)):
        if np.any(m < 0) or not np.allclose(m.sum(axis=0), 1.0, atol=1e-9):
            raise ConfigError("config.%s must be column-stochastic" % name)
    rng_state, rng_obs = _streams(cfg["seed"], 2)
    z = np.zeros(n, dtype=int)
    y = np.zeros(n, dtype=int)
    z[0] = rng_state.choice(M)
    for t in range(1, n):
        z[t] = rng_state.choice(M, p=A[:, z[t - 1]])
    for t in range(n):
        y[t] = rng_obs.choice(M, p=B[:, z[t]])
    onehots = np.eye(M)[y]
    return Dataset("hmm", cfg, onehots, {"z": z, "A": A, "B": B}, cfg["seed"])


def _simulate_hgf(cfg):
    n = cfg["n"]
    kappa, omega = cfg["kappa"], cfg["omega"]
    s2_w, y_w = cfg["s2_w"], cfg["y_w"]
    rng_s2, rng_s1, rng_obs = _streams(cfg["seed"], 3)
    s2 = np.zeros(n)
    s1 = np.zeros(n)
    y = np.zeros(n)
    v2 = v1 = 0.0
    for t in range(n):
        v2 = v2 + rng_s2.normal() / np.sqrt(s2_w)
        v1 = v1 + rng_s1.normal() * np.sqrt(np.exp(kappa * v2 + omega))
        s2[t] = v2
        s1[t] = v1
        y[t] = v1 + rng_obs.normal() / np.sqrt(y_w)
    return Dataset("hgf", cfg, y, {"s1": s1, "s2": s2}, cfg["seed"])

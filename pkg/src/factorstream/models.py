"""Builders for the three benchmark models and the JSON config schema.

Schema (validated by :func:`build_model_from_config`):

    {"model": "lgssm" | "hmm" | "hgf", "n": int, "seed": int,
     "vmp_iterations": int, ... model-specific keys ...}

    lgssm: d, A, B, P, Q           (matrices as nested lists)
    hmm:   M, priorA, priorB       (concentration matrices; optional known
                                    A, B point-mass parameters)
    hgf:   kappa, omega, s2_w, y_w, gh_n

Every builder returns ``(graph, refs)`` where ``refs`` gives named access to
the variables the drivers need.
"""

import numpy as np

from .distributions import Gaussian1D, MatrixDirichlet, PointMass
from .errors import ConfigError
from .graph import ModelGraph, full_joint, mean_field, structured
from .rules.gcv import DEFAULT_GH_POINTS
from .rules.linear_gaussian import prepare_metadata

DEFAULT_ITERATIONS = 15  # matches the benchmark setting used throughout


def _matrix(config, key, path, shape=None):
    try:
        m = np.asarray(config[key], float)
    except KeyError:
        raise ConfigError("missing key at %s.%s" % (path, key))
    except (TypeError, ValueError):
        raise ConfigError("%s.%s is not a numeric matrix" % (path, key))
    if shape is not None and m.shape != shape:
        raise ConfigError("%s.%s must have shape %s, got %s" % (path, key, shape, m.shape))
    return m


def _int(config, key, path, minimum=1):
    value = config.get(key)
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < minimum:
        raise ConfigError("%s.%s must be an integer >= %d" % (path, key, minimum))
    return int(value)


def _float(config, key, path):
    value = config.get(key)
    if not isinstance(value, (int, float, np.floating)) or isinstance(value, bool):
        raise ConfigError("%s.%s must be a number" % (path, key))
    return float(value)


def build_lgssm(n, A, B, P, Q, x0_mean=None, x0_cov_scale=100.0):
    """Smoothing chain for the linear Gaussian state space model: one prior
    node, n-1 transitions, n observation likelihoods."""
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    P = np.asarray(P, float)
    Q = np.asarray(Q, float)
    d = A.shape[0]
    d_obs = B.shape[0]
    g = ModelGraph()
    x = [g.random_variable("x%d" % t, dims=d) for t in range(n)]
    y = [g.data_variable("y%d" % t, dims=d_obs) for t in range(n)]
    if x0_mean is None:
        x0_mean = np.zeros(d)
    trans_meta = prepare_metadata(A, P)
    obs_meta = prepare_metadata(B, Q)
    prior_meta = prepare_metadata(np.eye(d), x0_cov_scale * np.eye(d))
    x0 = g.constant(np.asarray(x0_mean, float), name="x0_mean")
    g.add_factor("mv_linear_gaussian", out=x[0], mean=x0,
                 context=full_joint(metadata=prior_meta), name="prior")
    for t in range(1, n):
        g.add_factor("mv_linear_gaussian", out=x[t], mean=x[t - 1],
                     context=full_joint(metadata=trans_meta), name="trans%d" % t)
    for t in range(n):
        g.add_factor("mv_linear_gaussian", out=y[t], mean=x[t],
                     context=full_joint(metadata=obs_meta), name="lik%d" % t)
    return g, {"x": x, "y": y}


def build_hmm(n, M, prior_a, prior_b, known_a=None, known_b=None):
    """Hidden Markov chain with matrix-Dirichlet parameter posteriors.

    The transition chain uses the structured pairwise factorization
    q(z_prev, z_t) q(matrix); everything else is mean-field.  Known
    point-mass parameters replace the Dirichlet priors when given.
    """
    g = ModelGraph(default_factorization="mean_field")
    z = [g.random_variable("z%d" % t, dims=M) for t in range(n)]
    y = [g.data_variable("y%d" % t, dims=M) for t in range(n)]
    if known_a is None:
        A = g.random_variable("A", dims=M * M, shape=(M, M))
        g.add_factor("matrix_dirichlet_prior", out=A,
                     context=full_joint(metadata={"alpha": np.asarray(prior_a, float)}),
                     name="priorA")
        g.declare_initial_marginal(A, MatrixDirichlet(np.asarray(prior_a, float)))
        bind_a = lambda: A
    else:
        # constants terminate a single interface: one per consuming node
        known_a = np.asarray(known_a, float)
        bind_a = lambda: g.constant(known_a)
        A = None
    if known_b is None:
        B = g.random_variable("B", dims=M * M, shape=(M, M))
        g.add_factor("matrix_dirichlet_prior", out=B,
                     context=full_joint(metadata={"alpha": np.asarray(prior_b, float)}),
                     name="priorB")
        g.declare_initial_marginal(B, MatrixDirichlet(np.asarray(prior_b, float)))
        bind_b = lambda: B
    else:
        known_b = np.asarray(known_b, float)
        bind_b = lambda: g.constant(known_b)
        B = None
    g.add_factor("categorical_prior", out=z[0],
                 context=full_joint(metadata={"p": np.full(M, 1.0 / M)}), name="prior_z")
    for t in range(1, n):
        g.add_factor(
            "transition", out=z[t], **{"in": z[t - 1]}, matrix=bind_a(),
            context=structured(("out", "in"), ("matrix",)), name="trans%d" % t,
        )
    for t in range(n):
        # with out observed this clustering carries the same posterior family
        # as mean-field q(z)q(matrix), but times the parameter update after
        # the state sweep, which keeps the free-energy descent sequential
        g.add_factor("transition", out=y[t], **{"in": z[t]}, matrix=bind_b(),
                     context=structured(("out", "in"), ("matrix",)), name="lik%d" % t)
    return g, {"z": z, "y": y, "A": A, "B": B}


def build_hgf(kappa, omega, s2_w, y_w, gh_n=DEFAULT_GH_POINTS,
              s1_init=(0.0, 1.0), s2_init=(0.0, 1.0)):
    """Single time slice of the two-layer hierarchical Gaussian filter,
    intended for online filtering through chain redirection.

    Layer 2 is a fixed-precision random walk with the structured pairwise
    factorization; the controlled-variance node couples layer 2 to layer 1
    with the pairwise/volatility clustering; priors arrive as data so the
    slice can be re-primed every step.
    """
    g = ModelGraph()
    s2_prior_mean = g.data_variable("s2_prior_mean")
    s2_prior_prec = g.data_variable("s2_prior_prec")
    s1_prior_mean = g.data_variable("s1_prior_mean")
    s1_prior_prec = g.data_variable("s1_prior_prec")
    y = g.data_variable("y")
    s2_prev = g.random_variable("s2_prev")
    s1_prev = g.random_variable("s1_prev")
    s2 = g.random_variable("s2")
    s1 = g.random_variable("s1")
    w2 = g.constant(float(s2_w), name="s2_walk_precision")
    wy = g.constant(float(y_w), name="obs_precision")
    g.add_factor("gaussian_mean_precision", out=s2_prev,
                 mean=s2_prior_mean, precision=s2_prior_prec,
                 context=full_joint(), name="prior_s2")
    g.add_factor("gaussian_mean_precision", out=s1_prev,
                 mean=s1_prior_mean, precision=s1_prior_prec,
                 context=full_joint(), name="prior_s1")
    g.add_factor("gaussian_mean_precision", out=s2, mean=s2_prev, precision=w2,
                 context=structured(("out", "mean"), ("precision",)), name="walk_s2")
    g.add_factor("gcv", out=s1, mean=s1_prev, vol=s2,
                 context=structured(
                     ("out", "mean"), ("vol",),
                     metadata={"kappa": float(kappa), "omega": float(omega),
                               "gh_points": int(gh_n)},
                 ),
                 name="volatility_link")
    g.add_factor("gaussian_mean_precision", out=y, mean=s1, precision=wy,
                 context=full_joint(), name="lik_y")
    g.set_edge_form_constraint(s2, "moment_matching")
    g.declare_initial_marginal(s2, Gaussian1D.mean_precision(*s2_init))
    return g, {
        "s1": s1, "s2": s2, "s1_prev": s1_prev, "s2_prev": s2_prev, "y": y,
        "s1_prior": (s1_prior_mean, s1_prior_prec),
        "s2_prior": (s2_prior_mean, s2_prior_prec),
        "s1_init": tuple(s1_init), "s2_init": tuple(s2_init),
    }


def build_coin(n):
    """Beta-Bernoulli coin model: bias prior parameters arrive as data."""
    g = ModelGraph()
    a = g.data_variable("a")
    b = g.data_variable("b")
    theta = g.random_variable("theta")
    y = [g.data_variable("y%d" % i) for i in range(n)]
    g.add_factor("beta", out=theta, a=a, b=b, context=full_joint(), name="prior")
    for i in range(n):
        g.add_factor("bernoulli", out=y[i], p=theta, context=full_joint(), name="flip%d" % i)
    return g, {"theta": theta, "y": y, "a": a, "b": b}


def _default_lgssm_matrices(d):
    """Rotation-flavored stable dynamics with identity observation."""
    theta = np.pi / 20.0
    blocks = []
    for _ in range(d // 2):
        blocks.append(np.array([
            [np.cos(theta), -np.sin(theta)],
            [np.sin(theta), np.cos(theta)],
        ]))
    A = np.eye(d)
    for k, b in enumerate(blocks):
        A[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = b
    return {"A": A, "B": np.eye(d), "P": np.eye(d), "Q": np.eye(d)}


def normalize_config(config):
    """Fill documented defaults and validate the common keys."""
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    model = config.get("model")
    if model not in ("lgssm", "hmm", "hgf"):
        raise ConfigError("config.model must be one of lgssm/hmm/hgf, got %r" % (model,))
    cfg = dict(config)
    cfg.setdefault("seed", 0)
    cfg.setdefault("vmp_iterations", DEFAULT_ITERATIONS)
    _int(cfg, "n", "config")
    _int(cfg, "seed", "config", minimum=0)
    _int(cfg, "vmp_iterations", "config")
    if model == "lgssm":
        cfg.setdefault("d", 2)
        d = _int(cfg, "d", "config")
        defaults = _default_lgssm_matrices(d)
        for key in ("A", "B", "P", "Q"):
            cfg.setdefault(key, defaults[key].tolist())
        A = _matrix(cfg, "A", "config", (d, d))
        B = _matrix(cfg, "B", "config")
        if B.shape[1] != d:
            raise ConfigError("config.B must have %d columns" % d)
        _matrix(cfg, "P", "config", (d, d))
        _matrix(cfg, "Q", "config", (B.shape[0], B.shape[0]))
    elif model == "hmm":
        cfg.setdefault("M", 3)
        M = _int(cfg, "M", "config", minimum=2)
        cfg.setdefault("priorA", (np.ones((M, M)) + 2.0 * np.eye(M)).tolist())
        cfg.setdefault("priorB", (np.ones((M, M)) + 2.0 * np.eye(M)).tolist())
        _matrix(cfg, "priorA", "config", (M, M))
        _matrix(cfg, "priorB", "config", (M, M))
        cfg.setdefault("A", None)
        cfg.setdefault("B", None)
        if cfg["A"] is not None:
            _matrix(cfg, "A", "config", (M, M))
        if cfg["B"] is not None:
            _matrix(cfg, "B", "config", (M, M))
    else:
        cfg.setdefault("kappa", 1.0)
        cfg.setdefault("omega", -4.0)
        cfg.setdefault("s2_w", 5.0)
        cfg.setdefault("y_w", 20.0)
        cfg.setdefault("gh_n", DEFAULT_GH_POINTS)
        for key in ("kappa", "omega", "s2_w", "y_w"):
            _float(cfg, key, "config")
        _int(cfg, "gh_n", "config")
        if cfg["s2_w"] <= 0 or cfg["y_w"] <= 0:
            raise ConfigError("config.s2_w and config.y_w must be positive")
    return cfg


def build_model_from_config(config):
    """Construct the model graph described by a benchmark-model config."""
    cfg = normalize_config(config)
    model = cfg["model"]
    if model == "lgssm":
        return build_lgssm(cfg["n"], cfg["A"], cfg["B"], cfg["P"], cfg["Q"])
    if model == "hmm":
        return build_hmm(
            cfg["n"], cfg["M"], cfg["priorA"], cfg["priorB"],
            known_a=cfg.get("A"), known_b=cfg.get("B"),
        )
    return build_hgf(cfg["kappa"], cfg["omega"], cfg["s2_w"], cfg["y_w"], cfg["gh_n"])

"""Product algebra over distribution families.

``multiply_and_normalize`` implements the normalized product of two colliding
messages.  Conjugate pairs are closed under the product and return the exact
parametric result; anything else that lives on a common scalar support falls
back to a :class:`SampleGrid`.  Additional handlers (e.g. node-specific
message forms) can be registered via :func:`register_product_handler`.
"""

import numpy as np
from scipy.special import logsumexp

from .distributions import (
    Bernoulli,
    Beta,
    Categorical,
    CategoricalJoint,
    Dirichlet,
    Gamma,
    Gaussian1D,
    GaussianND,
    MatrixDirichlet,
    PointMass,
    SampleGrid,
)
from .errors import (
    DistributionError,
    IncompatibleSupportError,
    ZeroMeasureError,
)

_HANDLERS = {}


def register_product_handler(family_a, family_b, fn):
    """Register ``fn(a, b) -> Distribution`` for an ordered family pair.
    The reversed order is served automatically."""
    _HANDLERS[(family_a, family_b)] = fn


def multiply_and_normalize(a, b):
    """Normalized product of two distributions over the same support."""
    handler = _HANDLERS.get((a.family, b.family))
    if handler is not None:
        return handler(a, b)
    handler = _HANDLERS.get((b.family, a.family))
    if handler is not None:
        return handler(b, a)
    raise IncompatibleSupportError(
        "no product defined for %s x %s" % (a.family, b.family)
    )


def product_chain(dists):
    """Left fold of ``multiply_and_normalize`` over two or more factors."""
    it = iter(dists)
    acc = next(it)
    for d in it:
        acc = multiply_and_normalize(acc, d)
    return acc


# -- closed conjugate pairs -------------------------------------------------


def _gaussian_x_gaussian(a, b):
    return Gaussian1D.weighted_mean_precision(
        a.weighted_mean + b.weighted_mean, a.precision + b.precision
    )


def _mvgaussian_x_mvgaussian(a, b):
    if a.dim != b.dim:
        raise IncompatibleSupportError("Gaussian dimensions differ")
    return GaussianND.info_form(
        a.weighted_mean + b.weighted_mean, a.precision + b.precision
    )


def _beta_x_beta(a, b):
    return Beta(a.a + b.a - 1.0, a.b + b.b - 1.0)


def _gamma_x_gamma(a, b):
    return Gamma(a.shape + b.shape - 1.0, a.rate + b.rate)


def _bernoulli_x_bernoulli(a, b):
    m1 = a.p * b.p
    m0 = (1.0 - a.p) * (1.0 - b.p)
    if m1 + m0 <= 0.0:
        raise ZeroMeasureError("Bernoulli product has zero mass")
    return Bernoulli(m1 / (m1 + m0))


def _categorical_x_categorical(a, b):
    if a.dim != b.dim:
        raise IncompatibleSupportError("Categorical dimensions differ")
    log_p = a.log_p + b.log_p
    if not np.isfinite(logsumexp(log_p)):
        raise ZeroMeasureError("categorical product has zero mass")
    return Categorical(log_p=log_p)


def _dirichlet_x_dirichlet(a, b):
    return Dirichlet(a.alpha + b.alpha - 1.0)


def _matrix_dirichlet_x_matrix_dirichlet(a, b):
    if a.shape != b.shape:
        raise IncompatibleSupportError("concentration matrix shapes differ")
    return MatrixDirichlet(a.alpha + b.alpha - 1.0)


def _point_mass_x_any(pm, other):
    if isinstance(other, PointMass):
        same = np.allclose(
            np.asarray(pm.point, float), np.asarray(other.point, float)
        )
        if not same:
            raise ZeroMeasureError("disjoint point masses")
        return pm
    if other.log_pdf(pm.point) == -np.inf:
        raise ZeroMeasureError("point mass outside the support of the other factor")
    return pm


def _grid_x_grid(a, b):
    if a.points.shape != b.points.shape or not np.allclose(a.points, b.points):
        raise IncompatibleSupportError("sample grids must share their points")
    return SampleGrid(a.points, a.log_w + b.log_w)


def _grid_x_scalar(grid, other):
    log_w = grid.log_w + np.array([other.log_pdf(x) for x in grid.points])
    return SampleGrid(grid.points, log_w)


for fam_a, fam_b, fn in [
    ("gaussian", "gaussian", _gaussian_x_gaussian),
    ("mvgaussian", "mvgaussian", _mvgaussian_x_mvgaussian),
    ("beta", "beta", _beta_x_beta),
    ("gamma", "gamma", _gamma_x_gamma),
    ("bernoulli", "bernoulli", _bernoulli_x_bernoulli),
    ("categorical", "categorical", _categorical_x_categorical),
    ("dirichlet", "dirichlet", _dirichlet_x_dirichlet),
    ("matrix_dirichlet", "matrix_dirichlet", _matrix_dirichlet_x_matrix_dirichlet),
    ("sample_grid", "sample_grid", _grid_x_grid),
    ("sample_grid", "gaussian", _grid_x_scalar),
    ("sample_grid", "beta", _grid_x_scalar),
    ("sample_grid", "gamma", _grid_x_scalar),
]:
    register_product_handler(fam_a, fam_b, fn)

for fam in [
    "gaussian",
    "mvgaussian",
    "beta",
    "gamma",
    "bernoulli",
    "categorical",
    "dirichlet",
    "matrix_dirichlet",
    "sample_grid",
    "point_mass",
]:
    register_product_handler("point_mass", fam, _point_mass_x_any)


_GAUSSIANIZERS = {}


def register_gaussianizer(family, fn):
    """Register a family-specific Gaussian projection used on edges that
    carry a moment-matching form constraint."""
    _GAUSSIANIZERS[family] = fn


def as_gaussian_message(d):
    """Project a message onto a Gaussian for consumption by Gaussian-only
    rules; Gaussians and point masses pass through untouched."""
    if isinstance(d, (Gaussian1D, GaussianND, PointMass)):
        return d
    fn = _GAUSSIANIZERS.get(d.family)
    if fn is not None:
        return fn(d)
    return moment_match_gaussian(d)


# -- moment matching ---------------------------------------------------------


def moment_match_gaussian(q):
    """Project ``q`` onto a Gaussian by matching mean and (co)variance."""
    if isinstance(q, Gaussian1D):
        return q
    if isinstance(q, GaussianND):
        return GaussianND.mean_cov(q.mean, q.cov)
    m = q.mean
    if isinstance(m, np.ndarray) and m.ndim > 0:
        raise DistributionError("moment matching to a Gaussian needs scalar support")
    v = q.variance
    if not np.isfinite(m) or not np.isfinite(v) or v <= 0:
        raise DistributionError("non-finite or degenerate moments in %r" % (q,))
    return Gaussian1D.mean_variance(float(m), float(v))


# -- canonical JSON encoding --------------------------------------------------

_JSON_TAGS = {}


def to_json(q):
    """Canonical dict encoding: {"family": tag, "params": {...}}."""
    if isinstance(q, Gaussian1D):
        params = {"tag": q.tag, "values": [q.a, q.b]}
    elif isinstance(q, GaussianND):
        params = {"mean": q.mean.tolist(), "cov": q.cov.tolist()}
    elif isinstance(q, PointMass):
        p = q.point
        params = {"point": p.tolist() if isinstance(p, np.ndarray) else p}
    elif isinstance(q, Bernoulli):
        params = {"p": q.p}
    elif isinstance(q, Beta):
        params = {"a": q.a, "b": q.b}
    elif isinstance(q, Gamma):
        params = {"shape": q.shape, "rate": q.rate}
    elif isinstance(q, Categorical):
        params = {"p": q.p.tolist()}
    elif isinstance(q, CategoricalJoint):
        params = {"table": q.table.tolist()}
    elif isinstance(q, Dirichlet):
        params = {"alpha": q.alpha.tolist()}
    elif isinstance(q, MatrixDirichlet):
        params = {"alpha": q.alpha.tolist()}
    elif isinstance(q, SampleGrid):
        params = {"points": q.points.tolist(), "log_weights": q.log_w.tolist()}
    else:
        raise DistributionError("no JSON encoding for %r" % (q,))
    return {"family": q.family, "params": params}


def from_json(obj):
    family = obj["family"]
    p = obj["params"]
    if family == "gaussian":
        return Gaussian1D(p["tag"], *p["values"])
    if family == "mvgaussian":
        return GaussianND.mean_cov(p["mean"], p["cov"])
    if family == "point_mass":
        return PointMass(p["point"])
    if family == "bernoulli":
        return Bernoulli(p["p"])
    if family == "beta":
        return Beta(p["a"], p["b"])
    if family == "gamma":
        return Gamma(p["shape"], p["rate"])
    if family == "categorical":
        return Categorical(p=p["p"])
    if family == "categorical_joint":
        return CategoricalJoint(p["table"])
    if family == "dirichlet":
        return Dirichlet(p["alpha"])
    if family == "matrix_dirichlet":
        return MatrixDirichlet(p["alpha"])
    if family == "sample_grid":
        return SampleGrid(np.asarray(p["points"]), np.asarray(p["log_weights"]))
    raise DistributionError("unknown family %r" % family)

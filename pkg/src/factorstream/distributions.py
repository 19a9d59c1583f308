"""Parametric distribution families and their closed-form statistics.

Every object here is an immutable value; all operations are pure.  Messages
and marginals flowing on streams are instances of these classes.  Product
algebra and moment-matching projections live in :mod:`factorstream.algebra`.
"""

import math

import numpy as np
from scipy.special import betaln, digamma, gammaln, logsumexp

from .errors import DistributionError, UndefinedMomentError

LOG_2PI = math.log(2.0 * math.pi)

# forms a univariate Gaussian can be parametrized in
MEAN_VARIANCE = "mean_variance"
MEAN_PRECISION = "mean_precision"
WEIGHTED_MEAN_PRECISION = "weighted_mean_precision"


class Gaussian1D:
    """Univariate Gaussian carried in one of three parametrizations.

    The stored pair is interpreted according to ``tag``; accessors convert on
    demand, and conversions round-trip exactly up to float arithmetic.
    """

    family = "gaussian"
    __slots__ = ("tag", "a", "b")

    def __init__(self, tag, a, b):
        a = float(a)
        b = float(b)
        if tag == MEAN_VARIANCE:
            if not b > 0:
                raise DistributionError("variance must be positive, got %r" % b)
        elif tag in (MEAN_PRECISION, WEIGHTED_MEAN_PRECISION):
            if not b > 0:
                raise DistributionError("precision must be positive, got %r" % b)
        else:
            raise DistributionError("unknown Gaussian parametrization %r" % tag)
        self.tag = tag
        self.a = a
        self.b = b

    @classmethod
    def mean_variance(cls, mean, variance):
        return cls(MEAN_VARIANCE, mean, variance)

    @classmethod
    def mean_precision(cls, mean, precision):
        return cls(MEAN_PRECISION, mean, precision)

    @classmethod
    def weighted_mean_precision(cls, weighted_mean, precision):
        return cls(WEIGHTED_MEAN_PRECISION, weighted_mean, precision)

    @property
    def mean(self):
        if self.tag == WEIGHTED_MEAN_PRECISION:
            return self.a / self.b
        return self.a

    @property
    def variance(self):
        if self.tag == MEAN_VARIANCE:
            return self.b
        return 1.0 / self.b

    @property
    def precision(self):
        if self.tag == MEAN_VARIANCE:
            return 1.0 / self.b
        return self.b

    @property
    def weighted_mean(self):
        if self.tag == WEIGHTED_MEAN_PRECISION:
            return self.a
        return self.mean * self.precision

    def as_tag(self, tag):
        if tag == self.tag:
            return self
        if tag == MEAN_VARIANCE:
            return Gaussian1D(tag, self.mean, self.variance)
        if tag == MEAN_PRECISION:
            return Gaussian1D(tag, self.mean, self.precision)
        if tag == WEIGHTED_MEAN_PRECISION:
            return Gaussian1D(tag, self.weighted_mean, self.precision)
        raise DistributionError("unknown Gaussian parametrization %r" % tag)

    @property
    def mode(self):
        return self.mean

    def entropy(self):
        return 0.5 * (LOG_2PI + 1.0 + math.log(self.variance))

    def log_pdf(self, x):
        v = self.variance
        return -0.5 * (LOG_2PI + math.log(v) + (x - self.mean) ** 2 / v)

    def __repr__(self):
        return "Gaussian1D(%s, %.6g, %.6g)" % (self.tag, self.a, self.b)


class GaussianND:
    """Multivariate Gaussian in moment form (mean, cov) or information form
    (weighted mean, precision).

    Information-form values may carry a singular precision matrix: those arise
    as likelihood messages and only need to support products.  Converting to
    moment form requires an invertible precision.
    """

    family = "mvgaussian"
    __slots__ = ("dim", "_mean", "_cov", "_wmean", "_prec")

    def __init__(self, mean=None, cov=None, weighted_mean=None, precision=None):
        if (mean is None) == (weighted_mean is None):
            raise DistributionError("provide exactly one of mean/weighted_mean")
        if mean is not None:
            self._mean = np.atleast_1d(np.asarray(mean, float))
            self._cov = _check_square(cov, self._mean.shape[0], "covariance")
            self._wmean = None
            self._prec = None
            self.dim = self._mean.shape[0]
        else:
            self._wmean = np.atleast_1d(np.asarray(weighted_mean, float))
            self._prec = _check_square(precision, self._wmean.shape[0], "precision")
            self._mean = None
            self._cov = None
            self.dim = self._wmean.shape[0]

    @classmethod
    def mean_cov(cls, mean, cov):
        return cls(mean=mean, cov=cov)

    @classmethod
    def info_form(cls, weighted_mean, precision):
        return cls(weighted_mean=weighted_mean, precision=precision)

    @property
    def is_info_form(self):
        return self._mean is None

    @property
    def mean(self):
        if self._mean is not None:
            return self._mean
        return np.linalg.solve(self._prec, self._wmean)

    @property
    def cov(self):
        if self._cov is not None:
            return self._cov
        return fix_psd(np.linalg.inv(self._prec))

    @property
    def precision(self):
        if self._prec is not None:
            return self._prec
        return fix_psd(np.linalg.inv(self._cov))

    @property
    def weighted_mean(self):
        if self._wmean is not None:
            return self._wmean
        return np.linalg.solve(self._cov, self._mean)

    @property
    def variance(self):
        return np.diag(self.cov)

    @property
    def mode(self):
        return self.mean

    def entropy(self):
        sign, logdet = np.linalg.slogdet(self.cov)
        if sign <= 0:
            raise DistributionError("covariance is not positive definite")
        return 0.5 * (self.dim * (LOG_2PI + 1.0) + logdet)

    def log_pdf(self, x):
        x = np.asarray(x, float)
        diff = x - self.mean
        prec = self.precision
        sign, logdet = np.linalg.slogdet(self.cov)
        return float(-0.5 * (self.dim * LOG_2PI + logdet + diff @ prec @ diff))

    def __repr__(self):
        if self.is_info_form:
            return "GaussianND(info, dim=%d)" % self.dim
        return "GaussianND(mean=%s)" % np.array_str(self._mean, precision=4)


def fix_psd(matrix, floor=1e-12):
    """Symmetrize and clamp eigenvalues from below so downstream covariance
    arithmetic stays positive definite."""
    m = np.asarray(matrix, float)
    m = 0.5 * (m + m.T)
    # cheap path: already safely positive definite
    try:
        np.linalg.cholesky(m)
        return m
    except np.linalg.LinAlgError:
        pass
    vals, vecs = np.linalg.eigh(m)
    vals = np.maximum(vals, floor)
    return (vecs * vals) @ vecs.T


def _check_square(m, dim, what):
    m = np.asarray(m, float)
    if m.shape != (dim, dim):
        raise DistributionError("%s must be %dx%d, got %s" % (what, dim, dim, m.shape))
    return 0.5 * (m + m.T)


class PointMass:
    """Degenerate distribution carrying exactly one support point."""

    family = "point_mass"
    __slots__ = ("point",)

    def __init__(self, point):
        if isinstance(point, (list, tuple, np.ndarray)):
            arr = np.asarray(point, float)
            arr.setflags(write=False)
            self.point = arr
        else:
            self.point = float(point)

    @property
    def mean(self):
        return self.point

    @property
    def mode(self):
        return self.point

    @property
    def variance(self):
        if isinstance(self.point, np.ndarray):
            return np.zeros_like(self.point)
        return 0.0

    @property
    def cov(self):
        p = np.atleast_1d(np.asarray(self.point, float))
        return np.zeros((p.shape[0], p.shape[0]))

    def entropy(self):
        # convention: observed/point values contribute no entropy
        return 0.0

    def log_pdf(self, x):
        same = np.allclose(np.asarray(x, float), np.asarray(self.point, float))
        return 0.0 if same else -np.inf

    def __repr__(self):
        return "PointMass(%s)" % (self.point,)


class Bernoulli:
    family = "bernoulli"
    __slots__ = ("p",)

    def __init__(self, p):
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise DistributionError("success probability must lie in [0, 1]")
        self.p = p

    @property
    def mean(self):
        return self.p

    @property
    def variance(self):
        return self.p * (1.0 - self.p)

    @property
    def mode(self):
        if self.p == 0.5:
            raise UndefinedMomentError("Bernoulli(0.5) has no unique mode")
        return 1.0 if self.p > 0.5 else 0.0

    def entropy(self):
        return -_xlogx(self.p) - _xlogx(1.0 - self.p)

    def log_pdf(self, x):
        if x == 1:
            return math.log(self.p) if self.p > 0 else -np.inf
        if x == 0:
            return math.log(1.0 - self.p) if self.p < 1 else -np.inf
        return -np.inf

    def __repr__(self):
        return "Bernoulli(%.6g)" % self.p


class Beta:
    family = "beta"
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        a, b = float(a), float(b)
        if a <= 0 or b <= 0:
            raise DistributionError("Beta parameters must be positive")
        self.a = a
        self.b = b

    @property
    def mean(self):
        return self.a / (self.a + self.b)

    @property
    def variance(self):
        s = self.a + self.b
        return self.a * self.b / (s * s * (s + 1.0))

    @property
    def mode(self):
        if self.a > 1 and self.b > 1:
            return (self.a - 1.0) / (self.a + self.b - 2.0)
        raise UndefinedMomentError("Beta mode undefined for a<=1 or b<=1")

    def entropy(self):
        a, b = self.a, self.b
        return (
            betaln(a, b)
            - (a - 1.0) * digamma(a)
            - (b - 1.0) * digamma(b)
            + (a + b - 2.0) * digamma(a + b)
        )

    def expectation_log(self):
        """(E[log x], E[log(1-x)])."""
        return digamma(self.a) - digamma(self.a + self.b), digamma(self.b) - digamma(self.a + self.b)

    def log_pdf(self, x):
        if x < 0.0 or x > 1.0:
            return -np.inf
        val = -betaln(self.a, self.b)
        if self.a != 1.0:
            if x == 0.0:
                return np.inf if self.a < 1.0 else -np.inf
            val += (self.a - 1.0) * math.log(x)
        if self.b != 1.0:
            if x == 1.0:
                return np.inf if self.b < 1.0 else -np.inf
            val += (self.b - 1.0) * math.log(1.0 - x)
        return float(val)

    def __repr__(self):
        return "Beta(%.6g, %.6g)" % (self.a, self.b)


class Gamma:
    """Shape/rate parametrization."""

    family = "gamma"
    __slots__ = ("shape", "rate")

    def __init__(self, shape, rate):
        shape, rate = float(shape), float(rate)
        if shape <= 0 or rate <= 0:
            raise DistributionError("Gamma shape and rate must be positive")
        self.shape = shape
        self.rate = rate

    @property
    def mean(self):
        return self.shape / self.rate

    @property
    def variance(self):
        return self.shape / (self.rate * self.rate)

    @property
    def mode(self):
        if self.shape < 1.0:
            raise UndefinedMomentError("Gamma mode undefined for shape < 1")
        return (self.shape - 1.0) / self.rate

    def entropy(self):
        k = self.shape
        return k - math.log(self.rate) + gammaln(k) + (1.0 - k) * digamma(k)

    def expectation_log(self):
        """E[log x]."""
        return digamma(self.shape) - math.log(self.rate)

    def log_pdf(self, x):
        if x < 0:
            return -np.inf
        if x == 0:
            if self.shape < 1.0:
                return np.inf
            if self.shape > 1.0:
                return -np.inf
            return math.log(self.rate)
        return float(
            self.shape * math.log(self.rate)
            - gammaln(self.shape)
            + (self.shape - 1.0) * math.log(x)
            - self.rate * x
        )

    def __repr__(self):
        return "Gamma(shape=%.6g, rate=%.6g)" % (self.shape, self.rate)


class Categorical:
    """Distribution over M categories, stored as a normalized log-probability
    vector so products of many factors stay stable for large M."""

    family = "categorical"
    __slots__ = ("log_p",)

    def __init__(self, p=None, log_p=None):
        if (p is None) == (log_p is None):
            raise DistributionError("provide exactly one of p/log_p")
        if p is not None:
            p = np.asarray(p, float)
            if p.ndim != 1 or np.any(p < 0):
                raise DistributionError("probabilities must be a nonnegative vector")
            total = p.sum()
            if not np.isfinite(total) or total <= 0:
                raise DistributionError("probability vector must have positive mass")
            if abs(total - 1.0) > 1e-12:
                p = p / total
            with np.errstate(divide="ignore"):
                log_p = np.log(p)
        else:
            log_p = np.asarray(log_p, float)
            log_p = log_p - logsumexp(log_p)
        log_p.setflags(write=False)
        self.log_p = log_p

    @property
    def p(self):
        return np.exp(self.log_p)

    @property
    def dim(self):
        return self.log_p.shape[0]

    @property
    def mean(self):
        # mean of the one-hot encoding
        return self.p

    @property
    def mode(self):
        return int(np.argmax(self.log_p))

    def entropy(self):
        p = self.p
        return float(-np.sum(p * np.where(p > 0, self.log_p, 0.0)))

    def log_pdf(self, index):
        index = _as_index(index, self.dim)
        return float(self.log_p[index])

    def __repr__(self):
        return "Categorical(%s)" % np.array_str(self.p, precision=4)


class CategoricalJoint:
    """Joint distribution over an ordered pair of categorical variables,
    stored as a normalized table.  Used for structured cluster marginals."""

    family = "categorical_joint"
    __slots__ = ("table",)

    def __init__(self, table):
        table = np.asarray(table, float)
        if table.ndim != 2 or np.any(table < 0):
            raise DistributionError("joint table must be a nonnegative matrix")
        total = table.sum()
        if total <= 0 or not np.isfinite(total):
            raise DistributionError("joint table must have positive mass")
        table = table / total
        table.setflags(write=False)
        self.table = table

    def marginal(self, axis):
        """Marginal Categorical of the first (axis=0) or second (axis=1) slot."""
        return Categorical(p=self.table.sum(axis=1 - axis))

    def entropy(self):
        t = self.table
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(t > 0, np.log(t), 0.0)
        return float(-np.sum(t * logs))

    def __repr__(self):
        return "CategoricalJoint(%s)" % np.array_str(self.table, precision=4)


class Dirichlet:
    family = "dirichlet"
    __slots__ = ("alpha",)

    def __init__(self, alpha):
        alpha = np.asarray(alpha, float)
        if alpha.ndim != 1 or np.any(alpha <= 0):
            raise DistributionError("Dirichlet concentrations must be positive")
        alpha.setflags(write=False)
        self.alpha = alpha

    @property
    def dim(self):
        return self.alpha.shape[0]

    @property
    def mean(self):
        return self.alpha / self.alpha.sum()

    def expectation_log(self):
        return digamma(self.alpha) - digamma(self.alpha.sum())

    def entropy(self):
        a = self.alpha
        a0 = a.sum()
        K = a.shape[0]
        log_b = np.sum(gammaln(a)) - gammaln(a0)
        return float(log_b + (a0 - K) * digamma(a0) - np.sum((a - 1.0) * digamma(a)))

    def log_pdf(self, x):
        x = np.asarray(x, float)
        if np.any(x < 0) or abs(x.sum() - 1.0) > 1e-9:
            return -np.inf
        log_b = np.sum(gammaln(self.alpha)) - gammaln(self.alpha.sum())
        with np.errstate(divide="ignore"):
            terms = (self.alpha - 1.0) * np.log(x)
        return float(np.sum(np.where(self.alpha == 1.0, 0.0, terms)) - log_b)

    def __repr__(self):
        return "Dirichlet(%s)" % np.array_str(self.alpha, precision=4)


class MatrixDirichlet:
    """Independent Dirichlet prior per column of a column-stochastic matrix."""

    family = "matrix_dirichlet"
    __slots__ = ("alpha",)

    def __init__(self, alpha):
        alpha = np.asarray(alpha, float)
        if alpha.ndim != 2 or np.any(alpha <= 0):
            raise DistributionError("concentration matrix entries must be positive")
        alpha.setflags(write=False)
        self.alpha = alpha

    @property
    def shape(self):
        return self.alpha.shape

    @property
    def mean(self):
        return self.alpha / self.alpha.sum(axis=0, keepdims=True)

    def expectation_log(self):
        return digamma(self.alpha) - digamma(self.alpha.sum(axis=0, keepdims=True))

    def entropy(self):
        return float(sum(Dirichlet(col).entropy() for col in self.alpha.T))

    def log_pdf(self, m):
        m = np.asarray(m, float)
        if m.shape != self.alpha.shape:
            return -np.inf
        return float(
            sum(Dirichlet(a).log_pdf(col) for a, col in zip(self.alpha.T, m.T))
        )

    def __repr__(self):
        return "MatrixDirichlet(shape=%s)" % (self.alpha.shape,)


class SampleGrid:
    """Density tabulated on a fixed grid of support points.

    Numeric fallback for products with no closed form and the substrate for
    grid oracles in tests.  Log-weights are normalized so the implied density
    (trapezoid rule over the grid) integrates to one.
    """

    family = "sample_grid"
    __slots__ = ("points", "log_w")
    DEFAULT_POINTS = 1001

    def __init__(self, points, log_w):
        points = np.asarray(points, float)
        log_w = np.asarray(log_w, float)
        if points.shape != log_w.shape or points.ndim != 1:
            raise DistributionError("points and log-weights must be equal-length vectors")
        if not np.all(np.isfinite(points)):
            raise DistributionError("grid points must be finite")
        # normalize: weights are density values on the grid
        log_norm = logsumexp(log_w + np.log(_trapezoid_weights(points)))
        if not np.isfinite(log_norm):
            raise DistributionError("grid has zero or non-finite total mass")
        log_w = log_w - log_norm
        points.setflags(write=False)
        log_w.setflags(write=False)
        self.points = points
        self.log_w = log_w

    @classmethod
    def from_function(cls, log_density, lo, hi, n=DEFAULT_POINTS):
        xs = np.linspace(lo, hi, n)
        return cls(xs, np.asarray([log_density(x) for x in xs], float))

    @property
    def density(self):
        return np.exp(self.log_w)

    @property
    def mean(self):
        w = self.density * _trapezoid_weights(self.points)
        return float(np.sum(w * self.points))

    @property
    def variance(self):
        w = self.density * _trapezoid_weights(self.points)
        m = float(np.sum(w * self.points))
        return float(np.sum(w * (self.points - m) ** 2))

    @property
    def mode(self):
        return float(self.points[int(np.argmax(self.log_w))])

    def entropy(self):
        w = self.density * _trapezoid_weights(self.points)
        return float(-np.sum(np.where(w > 0, w * self.log_w, 0.0)))

    def log_pdf(self, x):
        return float(np.interp(x, self.points, self.log_w, left=-np.inf, right=-np.inf))

    def __repr__(self):
        return "SampleGrid(n=%d, [%.3g, %.3g])" % (
            self.points.shape[0],
            self.points[0],
            self.points[-1],
        )


def _trapezoid_weights(points):
    w = np.empty_like(points)
    w[1:-1] = 0.5 * (points[2:] - points[:-2])
    w[0] = 0.5 * (points[1] - points[0])
    w[-1] = 0.5 * (points[-1] - points[-2])
    return w


def _xlogx(x):
    return 0.0 if x <= 0.0 else x * math.log(x)


def _as_index(x, dim):
    """Accept an integer category or a one-hot vector."""
    if isinstance(x, (np.ndarray, list, tuple)):
        arr = np.asarray(x, float)
        idx = int(np.argmax(arr))
        return idx
    return int(x)


# ---------------------------------------------------------------------------
# Generic moment accessors over any family
# ---------------------------------------------------------------------------


def mean(q):
    m = getattr(q, "mean", None)
    if m is None:
        raise UndefinedMomentError("mean undefined for %r" % (q,))
    return m


def variance(q):
    v = getattr(q, "variance", None)
    if v is None:
        raise UndefinedMomentError("variance undefined for %r" % (q,))
    return v


def cov(q):
    if isinstance(q, GaussianND):
        return q.cov
    if isinstance(q, PointMass):
        return q.cov
    raise UndefinedMomentError("covariance matrix undefined for %r" % (q,))


def precision(q):
    if isinstance(q, Gaussian1D):
        return q.precision
    if isinstance(q, GaussianND):
        return q.precision
    v = variance(q)
    if np.any(np.asarray(v) == 0):
        raise UndefinedMomentError("precision undefined for zero variance")
    return 1.0 / v


def mode(q):
    m = getattr(q, "mode", None)
    if m is None:
        raise UndefinedMomentError("mode undefined for %r" % (q,))
    return m


def entropy(q):
    return q.entropy()


def log_pdf(q, x):
    return q.log_pdf(x)


def expectation_log(q):
    """E[log theta] elementwise for Dirichlet-type distributions; for a
    point-mass matrix/vector this degenerates to log of the value."""
    if isinstance(q, (Dirichlet, MatrixDirichlet)):
        return q.expectation_log()
    if isinstance(q, PointMass):
        val = np.asarray(q.point, float)
        if np.any(val <= 0):
            raise DistributionError("log expectation needs positive entries")
        return np.log(val)
    raise DistributionError("expectation_log not defined for %r" % (q,))

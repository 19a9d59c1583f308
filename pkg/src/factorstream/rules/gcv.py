"""Rules for the Gaussian controlled-variance node.

The node couples a random-walk step to a higher-layer state that controls its
variance: p(out | mean, vol) = N(out | mean, exp(kappa * vol + omega)).

Derivations (each checked against a quadrature oracle in tests/test_rules.py):

* Messages toward ``out``/``mean`` exponentiate the expected log density
  under q(vol).  Writing the effective precision
  w = E_q(vol)[exp(-kappa*vol - omega)], the expected log density is a
  Gaussian kernel with precision w, so the outbound message is the same
  "variance plus inverse expected precision" form as the structured Gaussian
  rule, with w evaluated by Gauss-Hermite quadrature against q(vol).
* The message toward ``vol`` exponentiates the expected log density under the
  pair marginal q(out, mean).  With psi = E[(out - mean)^2] it is the
  non-Gaussian density exp(-(kappa*vol + omega)/2
  - psi * exp(-kappa*vol - omega)/2), carried symbolically as
  :class:`VolatilityMessage`; the product with the Gaussian random-walk
  message on that edge is projected back to a Gaussian by moment matching
  under Gauss-Hermite quadrature (the moment-matching form constraint on the
  volatility edge).
"""

import math

import numpy as np
from scipy.special import digamma, polygamma

from ..algebra import register_gaussianizer, register_product_handler
from ..distributions import LOG_2PI, Gaussian1D, GaussianND, PointMass
from ..errors import DistributionError
from ..graph import register_node_kind
from ..quadrature import gauss_hermite_expectation, gauss_hermite_moments
from .gaussian import gaussian_pair_joint, pair_residual_moment, scalar_moments
from .registry import (
    MARGINALIZATION,
    register_energy,
    register_joint_rule,
    register_rule,
)

GCV = "gcv"
DEFAULT_GH_POINTS = 21


def _check_gcv(bindings, metadata):
    if metadata.get("gh_points", DEFAULT_GH_POINTS) < 1:
        raise DistributionError("gh_points must be at least 1")
    for key in ("kappa", "omega"):
        if key not in metadata:
            raise DistributionError("gcv node needs %r in its metadata" % key)


register_node_kind(GCV, ("out", "mean", "vol"), check=_check_gcv)


class VolatilityMessage:
    """Outbound message toward the variance-controlling edge.

    Unnormalized log-density  -(kappa*v + omega)/2 - psi/2 * exp(-kappa*v - omega),
    with psi the expected squared step of the controlled walk.  Not a proper
    parametric family; it only participates in moment-matched products.
    """

    family = "gcv_volatility"
    __slots__ = ("kappa", "omega", "psi", "gh_points")

    def __init__(self, kappa, omega, psi, gh_points=DEFAULT_GH_POINTS):
        if psi < 0:
            raise DistributionError("expected squared step must be nonnegative")
        self.kappa = float(kappa)
        self.omega = float(omega)
        self.psi = float(psi)
        self.gh_points = int(gh_points)

    def log_density(self, v):
        link = self.kappa * np.asarray(v, float) + self.omega
        return -0.5 * link - 0.5 * self.psi * np.exp(-link)

    def __repr__(self):
        return "VolatilityMessage(kappa=%.3g, omega=%.3g, psi=%.3g)" % (
            self.kappa,
            self.omega,
            self.psi,
        )


def gaussianize_volatility(msg):
    """Gaussian moment-match of the volatility message alone, in closed form.

    Substituting u = (psi/2) exp(-kappa v - omega) maps the message density
    onto a Gamma(1/2, 1) density in u, so v = -(omega + ln(2/psi) ... ln u)
    / kappa has exact moments through digamma/trigamma of 1/2:

        E[v]   = -(omega + ln(2/psi) + digamma(1/2)) / kappa
        Var[v] = trigamma(1/2) / kappa^2 = (pi^2 / 2) / kappa^2

    Degenerate shapes (kappa or psi near zero make the message flat over any
    bounded window) turn into a vague Gaussian instead.
    """
    kappa, omega, psi = msg.kappa, msg.omega, msg.psi
    if abs(kappa) < 1e-12 or psi < 1e-300:
        return Gaussian1D.mean_variance(0.0, 1e12)
    mean = -(omega + math.log(2.0 / psi) + _DIGAMMA_HALF) / kappa
    var = _TRIGAMMA_HALF / (kappa * kappa)
    return Gaussian1D.mean_variance(mean, var)


_DIGAMMA_HALF = float(digamma(0.5))
_TRIGAMMA_HALF = float(polygamma(1, 0.5))


def _volatility_x_gaussian(msg, gauss):
    """Moment-matched Gaussian product of the volatility message with a
    Gaussian message on the same edge.

    The quadrature is re-centered once on the first-pass moments: evaluating
    the sigma points where the product actually carries mass buys roughly two
    orders of magnitude of accuracy at the same point count.  A nonpositive
    variance (possible at tiny point counts) is floored rather than raised,
    and only a non-finite result is a fault.
    """
    m, v = gauss.mean, gauss.variance
    g0 = gauss
    for _ in range(2):
        def log_rel(x, m=m, v=v):
            target = msg.log_density(x) + g0.log_pdf(x)
            ref = -0.5 * (np.log(2.0 * np.pi * v) + (x - m) ** 2 / v)
            return target - ref

        m1, v1, _ = gauss_hermite_moments(log_rel, m, v, msg.gh_points)
        if not np.isfinite(v1) or not np.isfinite(m1):
            raise DistributionError("volatility product produced non-finite moments")
        if v1 <= 0.0:
            v1 = 1e-12
        m, v = m1, v1
    return Gaussian1D.mean_variance(m, v)


register_product_handler("gcv_volatility", "gaussian", _volatility_x_gaussian)
register_gaussianizer("gcv_volatility", gaussianize_volatility)


def expected_inverse_variance(q_vol, kappa, omega, gh_points):
    """E[exp(-kappa*vol - omega)] by Gauss-Hermite quadrature (closed form
    exists for a Gaussian q(vol); quadrature keeps the rule family uniform)."""
    if isinstance(q_vol, PointMass):
        return math.exp(-kappa * float(q_vol.point) - omega)
    return gauss_hermite_expectation(
        lambda v: np.exp(-kappa * v - omega), q_vol.mean, q_vol.variance, gh_points
    )


def _to_out(deps, meta):
    m, v = scalar_moments(deps["m_mean"])
    w = expected_inverse_variance(
        deps["q_vol"], meta["kappa"], meta["omega"], meta.get("gh_points", DEFAULT_GH_POINTS)
    )
    return Gaussian1D.mean_precision(m, 1.0 / (v + 1.0 / w))


def _to_mean(deps, meta):
    m, v = scalar_moments(deps["m_out"])
    w = expected_inverse_variance(
        deps["q_vol"], meta["kappa"], meta["omega"], meta.get("gh_points", DEFAULT_GH_POINTS)
    )
    return Gaussian1D.mean_precision(m, 1.0 / (v + 1.0 / w))


def _to_vol(deps, meta):
    joint = deps["q_out_mean"]
    if isinstance(joint, GaussianND):
        psi = pair_residual_moment(joint)
    else:
        raise DistributionError("volatility message needs the pair marginal")
    return VolatilityMessage(
        meta["kappa"], meta["omega"], psi, meta.get("gh_points", DEFAULT_GH_POINTS)
    )


def _pair_joint(deps, meta):
    w = expected_inverse_variance(
        deps["q_vol"], meta["kappa"], meta["omega"], meta.get("gh_points", DEFAULT_GH_POINTS)
    )
    return gaussian_pair_joint(w, deps["m_out"], deps["m_mean"])


_GAUSSIANISH = ("gaussian", "point_mass")

register_rule(
    GCV, "out", MARGINALIZATION,
    deps=[("m_mean", _GAUSSIANISH), ("q_vol", ("gaussian",))],
    emits="gaussian", fn=_to_out,
)
register_rule(
    GCV, "mean", MARGINALIZATION,
    deps=[("m_out", _GAUSSIANISH), ("q_vol", ("gaussian",))],
    emits="gaussian", fn=_to_mean,
)
register_rule(
    GCV, "vol", MARGINALIZATION,
    deps=[("q_out_mean", ("mvgaussian",))],
    emits="gcv_volatility", fn=_to_vol,
)
register_joint_rule(GCV, ("out", "mean"), _pair_joint)


def _energy(meta, parts):
    kappa, omega = meta["kappa"], meta["omega"]
    gh = meta.get("gh_points", DEFAULT_GH_POINTS)
    mo, vo = parts.scalar_moments("out")
    mm, vm = parts.scalar_moments("mean")
    c = parts.cross_cov("out", "mean")
    psi = (mo - mm) ** 2 + vo + vm - 2.0 * c
    q_vol = parts.dist("vol") if parts.value("vol") is None else PointMass(parts.value("vol"))
    mv, _ = scalar_moments(q_vol) if not isinstance(q_vol, PointMass) else (float(q_vol.point), 0.0)
    w = expected_inverse_variance(q_vol, kappa, omega, gh)
    neg_elogf = 0.5 * LOG_2PI + 0.5 * (kappa * mv + omega) + 0.5 * w * psi
    return neg_elogf - parts.entropy()


register_energy(GCV, _energy)

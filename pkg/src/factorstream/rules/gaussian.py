"""Update rules for the univariate Gaussian node with mean-precision
parametrization (interfaces: out, mean, precision) and for the Gamma prior
node feeding precision edges.

Each closed form below is exercised by an oracle test (grid convolution,
quadrature, or conjugate identities) in tests/test_rules.py before it is
trusted by the engine.
"""

import math

from ..distributions import LOG_2PI, Gamma, Gaussian1D, GaussianND, PointMass
from ..errors import DistributionError
from ..graph import register_node_kind
from .registry import (
    MARGINALIZATION,
    register_energy,
    register_joint_rule,
    register_rule,
)

GAUSSIAN_MEAN_PRECISION = "gaussian_mean_precision"
GAMMA_PRIOR = "gamma_prior"

register_node_kind(GAUSSIAN_MEAN_PRECISION, ("out", "mean", "precision"))
register_node_kind(GAMMA_PRIOR, ("out",))

_GAUSSIANISH = ("gaussian", "point_mass")
_PRECISIONISH = ("gamma", "point_mass")


def scalar_moments(d):
    if isinstance(d, PointMass):
        return float(d.point), 0.0
    return d.mean, d.variance


def precision_stats(d):
    """(E[w], E[log w]) of a precision-valued payload."""
    if isinstance(d, PointMass):
        w = float(d.point)
        if w <= 0:
            raise DistributionError("precision must be positive, got %r" % w)
        return w, math.log(w)
    if isinstance(d, Gamma):
        return d.mean, d.expectation_log()
    raise DistributionError("unsupported precision payload %r" % (d,))


def _guard_positive_noise(values):
    if values <= 0:
        raise DistributionError("Gaussian node needs strictly positive noise variance")


# -- sum-product rules (full within-node joint) -------------------------------


def _bp_out(deps, meta):
    # convolution of the mean message with the node noise
    m, v = scalar_moments(deps["m_mean"])
    w = float(deps["m_precision"].point)
    _guard_positive_noise(w)
    return Gaussian1D.mean_variance(m, v + 1.0 / w)


def _bp_mean(deps, meta):
    m, v = scalar_moments(deps["m_out"])
    w = float(deps["m_precision"].point)
    _guard_positive_noise(w)
    return Gaussian1D.mean_variance(m, v + 1.0 / w)


register_rule(
    GAUSSIAN_MEAN_PRECISION, "out", MARGINALIZATION,
    deps=[("m_mean", _GAUSSIANISH), ("m_precision", ("point_mass",))],
    emits="gaussian", fn=_bp_out,
)
register_rule(
    GAUSSIAN_MEAN_PRECISION, "mean", MARGINALIZATION,
    deps=[("m_out", _GAUSSIANISH), ("m_precision", ("point_mass",))],
    emits="gaussian", fn=_bp_mean,
)


# -- structured variational rules (q(out, mean) q(precision)) -----------------


def _structured_out(deps, meta):
    m, v = scalar_moments(deps["m_mean"])
    ew, _ = precision_stats(deps["q_precision"])
    return Gaussian1D.mean_precision(m, 1.0 / (v + 1.0 / ew))


def _structured_mean(deps, meta):
    m, v = scalar_moments(deps["m_out"])
    ew, _ = precision_stats(deps["q_precision"])
    return Gaussian1D.mean_precision(m, 1.0 / (v + 1.0 / ew))


def _structured_precision(deps, meta):
    # exp E_q[log f] keeps the Gamma shape: w^{1/2} exp(-w Psi / 2)
    joint = deps["q_out_mean"]
    psi = pair_residual_moment(joint)
    return Gamma(1.5, 0.5 * psi)


def pair_residual_moment(joint):
    """E[(out - mean)^2] under a bivariate Gaussian cluster marginal."""
    if not isinstance(joint, GaussianND) or joint.dim != 2:
        raise DistributionError("expected a bivariate Gaussian cluster marginal")
    mu = joint.mean
    cov = joint.cov
    return float((mu[0] - mu[1]) ** 2 + cov[0, 0] + cov[1, 1] - 2.0 * cov[0, 1])


register_rule(
    GAUSSIAN_MEAN_PRECISION, "out", MARGINALIZATION,
    deps=[("m_mean", _GAUSSIANISH), ("q_precision", _PRECISIONISH)],
    emits="gaussian", fn=_structured_out,
)
register_rule(
    GAUSSIAN_MEAN_PRECISION, "mean", MARGINALIZATION,
    deps=[("m_out", _GAUSSIANISH), ("q_precision", _PRECISIONISH)],
    emits="gaussian", fn=_structured_mean,
)
register_rule(
    GAUSSIAN_MEAN_PRECISION, "precision", MARGINALIZATION,
    deps=[("q_out_mean", ("mvgaussian",))],
    emits="gamma", fn=_structured_precision,
)


# -- mean-field variational rules ---------------------------------------------


def _mf_out(deps, meta):
    m, _ = scalar_moments(deps["q_mean"])
    ew, _ = precision_stats(deps["q_precision"])
    return Gaussian1D.mean_precision(m, ew)


def _mf_mean(deps, meta):
    m, _ = scalar_moments(deps["q_out"])
    ew, _ = precision_stats(deps["q_precision"])
    return Gaussian1D.mean_precision(m, ew)


def _mf_precision(deps, meta):
    mo, vo = scalar_moments(deps["q_out"])
    mm, vm = scalar_moments(deps["q_mean"])
    psi = (mo - mm) ** 2 + vo + vm
    return Gamma(1.5, 0.5 * psi)


register_rule(
    GAUSSIAN_MEAN_PRECISION, "out", MARGINALIZATION,
    deps=[("q_mean", _GAUSSIANISH), ("q_precision", _PRECISIONISH)],
    emits="gaussian", fn=_mf_out,
)
register_rule(
    GAUSSIAN_MEAN_PRECISION, "mean", MARGINALIZATION,
    deps=[("q_out", _GAUSSIANISH), ("q_precision", _PRECISIONISH)],
    emits="gaussian", fn=_mf_mean,
)
register_rule(
    GAUSSIAN_MEAN_PRECISION, "precision", MARGINALIZATION,
    deps=[("q_out", _GAUSSIANISH), ("q_mean", _GAUSSIANISH)],
    emits="gamma", fn=_mf_precision,
)


# -- cluster joint over (out, mean) -------------------------------------------


def gaussian_pair_joint(kernel_precision, m_out, m_mean):
    """Bivariate cluster marginal of two Gaussian-edge messages coupled by
    the kernel exp(-kernel_precision (out - mean)^2 / 2).

    An observed side enters as a zero-variance block, so downstream moment
    queries (residual second moments, slicing) stay uniform.  Such a joint is
    a moment container, not a proper density: entropy queries on it fault,
    and the engine never routes it into entropy terms (clusters with one free
    variable contribute through the edge marginal instead).
    """
    k = kernel_precision
    if isinstance(m_out, PointMass) and isinstance(m_mean, PointMass):
        raise DistributionError("both cluster edges observed; joint is degenerate")
    if isinstance(m_out, PointMass):
        y = float(m_out.point)
        g = m_mean.as_tag("weighted_mean_precision")
        cond = Gaussian1D.weighted_mean_precision(g.a + k * y, g.b + k)
        return GaussianND.mean_cov(
            [y, cond.mean], [[0.0, 0.0], [0.0, cond.variance]]
        )
    if isinstance(m_mean, PointMass):
        y = float(m_mean.point)
        g = m_out.as_tag("weighted_mean_precision")
        cond = Gaussian1D.weighted_mean_precision(g.a + k * y, g.b + k)
        return GaussianND.mean_cov(
            [cond.mean, y], [[cond.variance, 0.0], [0.0, 0.0]]
        )
    go = m_out.as_tag("weighted_mean_precision")
    gm = m_mean.as_tag("weighted_mean_precision")
    prec = [[k + go.b, -k], [-k, k + gm.b]]
    return GaussianND.info_form([go.a, gm.a], prec)


def _structured_pair_joint(deps, meta):
    ew, _ = precision_stats(deps["q_precision"])
    return gaussian_pair_joint(ew, deps["m_out"], deps["m_mean"])


register_joint_rule(GAUSSIAN_MEAN_PRECISION, ("out", "mean"), _structured_pair_joint)


def _bp_pair_joint(deps, meta):
    w = float(deps["m_precision"].point)
    return gaussian_pair_joint(w, deps["m_out"], deps["m_mean"])


register_joint_rule(GAUSSIAN_MEAN_PRECISION, ("out", "mean", "precision"), _bp_pair_joint)


# -- average energy ------------------------------------------------------------


def _energy(meta, parts):
    mo, vo = parts.scalar_moments("out")
    mm, vm = parts.scalar_moments("mean")
    c = parts.cross_cov("out", "mean")
    psi = (mo - mm) ** 2 + vo + vm - 2.0 * c
    prec_part = (
        PointMass(parts.value("precision"))
        if parts.value("precision") is not None
        else parts.dist("precision")
    )
    ew, elogw = precision_stats(prec_part)
    neg_elogf = 0.5 * LOG_2PI - 0.5 * elogw + 0.5 * ew * psi
    return neg_elogf - parts.entropy()


register_energy(GAUSSIAN_MEAN_PRECISION, _energy)


# -- Gamma prior node -----------------------------------------------------------


def _gamma_prior_out(deps, meta):
    return Gamma(meta["shape"], meta["rate"])


register_rule(GAMMA_PRIOR, "out", MARGINALIZATION, deps=[], emits="gamma", fn=_gamma_prior_out)


def _gamma_prior_energy(meta, parts):
    k0 = float(meta["shape"])
    b0 = float(meta["rate"])
    part = (
        PointMass(parts.value("out"))
        if parts.value("out") is not None
        else parts.dist("out")
    )
    ew, elogw = precision_stats(part)
    elogf = k0 * math.log(b0) - math.lgamma(k0) + (k0 - 1.0) * elogw - b0 * ew
    return -elogf - parts.entropy()


register_energy(GAMMA_PRIOR, _gamma_prior_energy)

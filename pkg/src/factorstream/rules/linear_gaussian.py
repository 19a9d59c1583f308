"""Rules for the multivariate linear-Gaussian node: p(out | mean) =
N(out | A @ mean, V) with fixed matrices A and V in the node metadata.

Covers state transitions (A, process noise), observation likelihoods
(emission matrix, measurement noise), and — with a constant mean binding —
Gaussian priors.  The backward message is computed in information form so a
rank-deficient emission matrix still yields a usable (possibly improper)
message; products with a proper forward message recover a proper marginal.
"""

import numpy as np

from ..distributions import LOG_2PI, GaussianND, PointMass, fix_psd
from ..errors import DistributionError
from ..graph import register_node_kind
from .registry import (
    MARGINALIZATION,
    register_energy,
    register_joint_rule,
    register_rule,
)

MV_LINEAR_GAUSSIAN = "mv_linear_gaussian"


def _check_linear_gaussian(bindings, metadata):
    A = np.asarray(metadata.get("transform"), float)
    V = np.asarray(metadata.get("noise_cov"), float)
    if A.ndim != 2:
        raise DistributionError("transform must be a matrix")
    if V.shape != (A.shape[0], A.shape[0]):
        raise DistributionError(
            "noise covariance %s does not match transform output dim %d"
            % (V.shape, A.shape[0])
        )
    out, mean = bindings["out"], bindings["mean"]
    if out.dims != A.shape[0] or mean.dims != A.shape[1]:
        raise DistributionError(
            "transform %s does not map mean dim %d to out dim %d"
            % (A.shape, mean.dims, out.dims)
        )
    # eigenvalue floor rejects indefinite noise early
    vals = np.linalg.eigvalsh(0.5 * (V + V.T))
    if np.any(vals <= 0):
        raise DistributionError("noise covariance must be positive definite")


register_node_kind(MV_LINEAR_GAUSSIAN, ("out", "mean"), check=_check_linear_gaussian)

_MVISH = ("mvgaussian", "point_mass")


def _moment_form(d, dim):
    if isinstance(d, PointMass):
        return np.asarray(d.point, float).reshape(dim), np.zeros((dim, dim))
    return d.mean, d.cov


def _forward_out(deps, meta):
    A = meta["transform"]
    V = meta["noise_cov"]
    m, S = _moment_form(deps["m_mean"], A.shape[1])
    return GaussianND.mean_cov(A @ m, fix_psd(A @ S @ A.T + V))


def _backward_mean(deps, meta):
    A = meta["transform"]
    W = meta["noise_prec"]  # precomputed inverse of noise_cov
    m_out = deps["m_out"]
    if isinstance(m_out, PointMass):
        y = np.asarray(m_out.point, float).reshape(A.shape[0])
        return GaussianND.info_form(A.T @ (W @ y), fix_psd(A.T @ W @ A))
    # integrate the node kernel against an information-form message:
    # lambda = A' (W - W (W + L)^-1 W) A,  xi = A' W (W + L)^-1 xi_out
    L = m_out.precision
    xi = m_out.weighted_mean
    G = np.linalg.inv(W + L)
    lam = A.T @ (W - W @ G @ W) @ A
    return GaussianND.info_form(A.T @ (W @ (G @ xi)), fix_psd(lam))


register_rule(
    MV_LINEAR_GAUSSIAN, "out", MARGINALIZATION,
    deps=[("m_mean", _MVISH)], emits="mvgaussian", fn=_forward_out,
)
register_rule(
    MV_LINEAR_GAUSSIAN, "mean", MARGINALIZATION,
    deps=[("m_out", _MVISH)], emits="mvgaussian", fn=_backward_mean,
)


def _pair_joint(deps, meta):
    """Joint over (out, mean) given the colliding messages on both edges."""
    A = meta["transform"]
    W = meta["noise_prec"]
    d_out, d_mean = A.shape
    m_out, m_mean = deps["m_out"], deps["m_mean"]
    if isinstance(m_out, PointMass):
        y = np.asarray(m_out.point, float).reshape(d_out)
        if isinstance(m_mean, PointMass):
            raise DistributionError("degenerate joint: both edges observed")
        lam = fix_psd(A.T @ W @ A + m_mean.precision)
        xi = A.T @ (W @ y) + m_mean.weighted_mean
        return GaussianND.info_form(xi, lam)
    if isinstance(m_mean, PointMass):
        m = np.asarray(m_mean.point, float).reshape(d_mean)
        lam = fix_psd(W + m_out.precision)
        xi = W @ (A @ m) + m_out.weighted_mean
        return GaussianND.info_form(xi, lam)
    lam = np.zeros((d_out + d_mean, d_out + d_mean))
    lam[:d_out, :d_out] = W + m_out.precision
    lam[:d_out, d_out:] = -W @ A
    lam[d_out:, :d_out] = -A.T @ W
    lam[d_out:, d_out:] = A.T @ W @ A + m_mean.precision
    xi = np.concatenate([m_out.weighted_mean, m_mean.weighted_mean])
    return GaussianND.info_form(xi, fix_psd(lam))


register_joint_rule(MV_LINEAR_GAUSSIAN, ("out", "mean"), _pair_joint)


def _energy(meta, parts):
    A = meta["transform"]
    V = meta["noise_cov"]
    d_out, d_mean = A.shape
    mo, So = parts.vector_moments("out", d_out)
    mm, Sm = parts.vector_moments("mean", d_mean)
    C = parts.cross_cov_matrix("out", "mean", d_out, d_mean)
    r = mo - A @ mm
    S = So - C @ A.T - A @ C.T + A @ Sm @ A.T + np.outer(r, r)
    sign, logdet = np.linalg.slogdet(V)
    neg_elogf = 0.5 * (d_out * LOG_2PI + logdet + np.trace(np.linalg.solve(V, S)))
    return float(neg_elogf) - parts.entropy()


register_energy(MV_LINEAR_GAUSSIAN, _energy)


def prepare_metadata(transform, noise_cov):
    """Normalize metadata and precompute the noise precision once per node."""
    A = np.asarray(transform, float)
    V = 0.5 * (np.asarray(noise_cov, float) + np.asarray(noise_cov, float).T)
    return {
        "transform": A,
        "noise_cov": V,
        "noise_prec": np.linalg.inv(V),
    }

"""Rules for discrete-state nodes.

``transition`` models p(out | in, matrix) with one-hot coded states and a
column-stochastic matrix: p(out=i | in=j) = matrix[i, j].  The matrix edge
can be a point mass (known parameters) or a matrix-Dirichlet posterior, in
which case the VMP rules exponentiate the expected log matrix.  All
categorical arithmetic stays in log space.
"""

import numpy as np
from scipy.special import betaln, gammaln, logsumexp

from ..distributions import (
    Bernoulli,
    Beta,
    Categorical,
    CategoricalJoint,
    Dirichlet,
    MatrixDirichlet,
    PointMass,
)
from ..errors import DistributionError
from ..graph import register_node_kind
from .registry import (
    MARGINALIZATION,
    register_energy,
    register_joint_rule,
    register_rule,
)

TRANSITION = "transition"
CATEGORICAL_PRIOR = "categorical_prior"
DIRICHLET_PRIOR = "dirichlet_prior"
MATRIX_DIRICHLET_PRIOR = "matrix_dirichlet_prior"
BERNOULLI = "bernoulli"
BETA = "beta"

register_node_kind(TRANSITION, ("out", "in", "matrix"))
register_node_kind(CATEGORICAL_PRIOR, ("out",))
register_node_kind(DIRICHLET_PRIOR, ("out",))
register_node_kind(MATRIX_DIRICHLET_PRIOR, ("out",))
register_node_kind(BERNOULLI, ("out", "p"))
register_node_kind(BETA, ("out", "a", "b"))

_CATISH = ("categorical", "point_mass")
_MATRIXISH = ("matrix_dirichlet", "point_mass")


def log_expected_matrix(q_matrix):
    """E[log matrix] under a matrix-Dirichlet posterior or a known matrix."""
    if isinstance(q_matrix, PointMass):
        m = np.asarray(q_matrix.point, float)
        with np.errstate(divide="ignore"):
            return np.log(m)
    if isinstance(q_matrix, MatrixDirichlet):
        return q_matrix.expectation_log()
    raise DistributionError("unsupported matrix payload %r" % (q_matrix,))


def _log_onehot(d, axis_dim=None):
    """Log of the categorical weights carried by a message payload."""
    if isinstance(d, PointMass):
        v = np.asarray(d.point, float)
        with np.errstate(divide="ignore"):
            return np.log(v)
    if isinstance(d, Categorical):
        return d.log_p
    raise DistributionError("unsupported categorical payload %r" % (d,))


def _expected_onehot(d):
    if isinstance(d, PointMass):
        return np.asarray(d.point, float)
    if isinstance(d, Categorical):
        return d.p
    raise DistributionError("unsupported categorical payload %r" % (d,))


# -- structured rules: cluster {out, in} with the matrix separate -------------


def _structured_to_out(deps, meta):
    lm = log_expected_matrix(deps["q_matrix"])
    lin = _log_onehot(deps["m_in"])
    return Categorical(log_p=logsumexp(lm + lin[None, :], axis=1))


def _structured_to_in(deps, meta):
    lm = log_expected_matrix(deps["q_matrix"])
    lout = _log_onehot(deps["m_out"])
    return Categorical(log_p=logsumexp(lm + lout[:, None], axis=0))


def _statistics_to_matrix(deps, meta):
    # message proportional to prod_ij matrix[i,j]^stats[i,j]
    joint = deps["q_out_in"]
    if not isinstance(joint, CategoricalJoint):
        raise DistributionError("matrix message needs the pairwise cluster marginal")
    return MatrixDirichlet(joint.table + 1.0)


def _structured_pair_joint(deps, meta):
    lm = log_expected_matrix(deps["q_matrix"])
    lout = _log_onehot(deps["m_out"])
    lin = _log_onehot(deps["m_in"])
    log_table = lm + lout[:, None] + lin[None, :]
    log_table -= logsumexp(log_table)
    return CategoricalJoint(np.exp(log_table))


register_rule(
    TRANSITION, "out", MARGINALIZATION,
    deps=[("m_in", _CATISH), ("q_matrix", _MATRIXISH)],
    emits="categorical", fn=_structured_to_out,
)
register_rule(
    TRANSITION, "in", MARGINALIZATION,
    deps=[("m_out", _CATISH), ("q_matrix", _MATRIXISH)],
    emits="categorical", fn=_structured_to_in,
)
register_rule(
    TRANSITION, "matrix", MARGINALIZATION,
    deps=[("q_out_in", ("categorical_joint",))],
    emits="matrix_dirichlet", fn=_statistics_to_matrix,
)
register_joint_rule(TRANSITION, ("out", "in"), _structured_pair_joint)


# -- mean-field rules: every interface its own cluster -------------------------


def _weighted_log_cols(lm, q):
    # sum_j q_j * lm[:, j] with the 0 * (-inf) = 0 convention
    q = np.asarray(q, float)
    keep = q > 0
    return (lm[:, keep] * q[keep]).sum(axis=1)


def _mf_to_out(deps, meta):
    lm = log_expected_matrix(deps["q_matrix"])
    return Categorical(log_p=_weighted_log_cols(lm, _expected_onehot(deps["q_in"])))


def _mf_to_in(deps, meta):
    lm = log_expected_matrix(deps["q_matrix"])
    return Categorical(log_p=_weighted_log_cols(lm.T, _expected_onehot(deps["q_out"])))


def _mf_to_matrix(deps, meta):
    stats = np.outer(_expected_onehot(deps["q_out"]), _expected_onehot(deps["q_in"]))
    return MatrixDirichlet(stats + 1.0)


register_rule(
    TRANSITION, "out", MARGINALIZATION,
    deps=[("q_in", _CATISH), ("q_matrix", _MATRIXISH)],
    emits="categorical", fn=_mf_to_out,
)
register_rule(
    TRANSITION, "in", MARGINALIZATION,
    deps=[("q_out", _CATISH), ("q_matrix", _MATRIXISH)],
    emits="categorical", fn=_mf_to_in,
)
register_rule(
    TRANSITION, "matrix", MARGINALIZATION,
    deps=[("q_out", _CATISH), ("q_in", _CATISH)],
    emits="matrix_dirichlet", fn=_mf_to_matrix,
)


def _transition_energy(meta, parts):
    q_m = (
        PointMass(parts.value("matrix"))
        if parts.value("matrix") is not None
        else parts.dist("matrix")
    )
    lm = log_expected_matrix(q_m)
    M_out, M_in = lm.shape
    table = parts.pair_table("out", "in", M_out, M_in)
    elogf = float(np.sum(np.where(table > 0, table * lm, 0.0)))
    return -elogf - parts.entropy()


register_energy(TRANSITION, _transition_energy)


# -- prior nodes ----------------------------------------------------------------


def _categorical_prior_out(deps, meta):
    return Categorical(p=meta["p"])


register_rule(CATEGORICAL_PRIOR, "out", MARGINALIZATION, deps=[], emits="categorical", fn=_categorical_prior_out)


def _categorical_prior_energy(meta, parts):
    with np.errstate(divide="ignore"):
        log_p = np.log(np.asarray(meta["p"], float))
    q = parts.one_hot("out", len(log_p))
    elogf = float(np.sum(np.where(q > 0, q * log_p, 0.0)))
    return -elogf - parts.entropy()


register_energy(CATEGORICAL_PRIOR, _categorical_prior_energy)


def _dirichlet_prior_out(deps, meta):
    return Dirichlet(meta["alpha"])


register_rule(DIRICHLET_PRIOR, "out", MARGINALIZATION, deps=[], emits="dirichlet", fn=_dirichlet_prior_out)


def _matrix_dirichlet_prior_out(deps, meta):
    return MatrixDirichlet(meta["alpha"])


register_rule(
    MATRIX_DIRICHLET_PRIOR, "out", MARGINALIZATION,
    deps=[], emits="matrix_dirichlet", fn=_matrix_dirichlet_prior_out,
)


def _log_beta_vec(alpha):
    return np.sum(gammaln(alpha), axis=0) - gammaln(np.sum(alpha, axis=0))


def _matrix_dirichlet_prior_energy(meta, parts):
    P = np.asarray(meta["alpha"], float)
    q = parts.dist("out")
    if isinstance(q, PointMass):
        elog = np.log(np.asarray(q.point, float))
    else:
        elog = q.expectation_log()
    elogf = float(np.sum((P - 1.0) * elog) - np.sum(_log_beta_vec(P)))
    return -elogf - parts.entropy()


register_energy(MATRIX_DIRICHLET_PRIOR, _matrix_dirichlet_prior_energy)


def _dirichlet_prior_energy(meta, parts):
    a = np.asarray(meta["alpha"], float)
    q = parts.dist("out")
    elog = np.log(np.asarray(q.point, float)) if isinstance(q, PointMass) else q.expectation_log()
    elogf = float(np.sum((a - 1.0) * elog) - (np.sum(gammaln(a)) - gammaln(a.sum())))
    return -elogf - parts.entropy()


register_energy(DIRICHLET_PRIOR, _dirichlet_prior_energy)


def dirichlet_posterior(prior, stats):
    """Conjugate update: add accumulated pairwise-marginal counts to the
    prior concentrations.  ``stats`` must be nonnegative."""
    stats = np.asarray(stats, float)
    if np.any(stats < 0):
        raise DistributionError("sufficient statistics must be nonnegative")
    if isinstance(prior, MatrixDirichlet):
        return MatrixDirichlet(prior.alpha + stats)
    if isinstance(prior, Dirichlet):
        return Dirichlet(prior.alpha + stats)
    raise DistributionError("prior must be Dirichlet or MatrixDirichlet")


# -- Bernoulli and Beta (conjugate coin model) -----------------------------------


def _bernoulli_to_out(deps, meta):
    m_p = deps["m_p"]
    theta = float(m_p.point) if isinstance(m_p, PointMass) else m_p.mean
    return Bernoulli(theta)


def _bernoulli_to_p(deps, meta):
    y = float(np.asarray(deps["m_out"].point).reshape(()))
    if y not in (0.0, 1.0):
        raise DistributionError("Bernoulli observation must be 0 or 1")
    return Beta(1.0 + y, 2.0 - y)


register_rule(
    BERNOULLI, "out", MARGINALIZATION,
    deps=[("m_p", ("beta", "point_mass"))], emits="bernoulli", fn=_bernoulli_to_out,
)
register_rule(
    BERNOULLI, "p", MARGINALIZATION,
    deps=[("m_out", ("point_mass",))], emits="beta", fn=_bernoulli_to_p,
)


def _beta_log_moments(part):
    if isinstance(part, PointMass):
        theta = float(part.point)
        return np.log(theta), np.log1p(-theta)
    if isinstance(part, Beta):
        return part.expectation_log()
    raise DistributionError("unsupported payload %r" % (part,))


def _bernoulli_energy(meta, parts):
    y_val = parts.value("out")
    ey = float(np.asarray(y_val).reshape(())) if y_val is not None else parts.scalar_moments("out")[0]
    p_part = PointMass(parts.value("p")) if parts.value("p") is not None else parts.dist("p")
    el1, el0 = _beta_log_moments(p_part)
    elogf = ey * el1 + (1.0 - ey) * el0
    return -float(elogf) - parts.entropy()


register_energy(BERNOULLI, _bernoulli_energy)


def _beta_to_out(deps, meta):
    a = float(np.asarray(deps["m_a"].point).reshape(()))
    b = float(np.asarray(deps["m_b"].point).reshape(()))
    return Beta(a, b)


register_rule(
    BETA, "out", MARGINALIZATION,
    deps=[("m_a", ("point_mass",)), ("m_b", ("point_mass",))],
    emits="beta", fn=_beta_to_out,
)


def _beta_energy(meta, parts):
    a = float(np.asarray(parts.value("a")).reshape(()))
    b = float(np.asarray(parts.value("b")).reshape(()))
    theta_part = parts.dist("out") if parts.value("out") is None else PointMass(parts.value("out"))
    el1, el0 = _beta_log_moments(theta_part)
    elogf = (a - 1.0) * el1 + (b - 1.0) * el0 - betaln(a, b)
    return -float(elogf) - parts.entropy()


register_energy(BETA, _beta_energy)

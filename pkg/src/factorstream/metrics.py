"""Posterior accuracy metric: the dataset- and time-averaged expected
positive-definite transform of the posterior residual.

For Gaussian posteriors the expectation has the closed form
E[(x - r)'(x - r)] = ||mu - r||^2 + tr(Sigma).  For categorical posteriors
the state is argmax-decoded first and the transform |z| applied to the
decode-mismatch indicator, so the per-step value is 0/1 mismatch.
"""

import numpy as np

from .distributions import Categorical, Gaussian1D, GaussianND, PointMass
from .errors import DistributionError


def expected_squared_residual(q, r):
    """E_q[(x - r)'(x - r)] in closed form."""
    if isinstance(q, Gaussian1D):
        return (q.mean - float(r)) ** 2 + q.variance
    if isinstance(q, GaussianND):
        diff = q.mean - np.asarray(r, float)
        return float(diff @ diff + np.trace(q.cov))
    if isinstance(q, PointMass):
        diff = np.asarray(q.point, float) - np.asarray(r, float)
        return float(np.sum(diff * diff))
    raise DistributionError("no closed-form squared residual for %r" % (q,))


def decode_mismatch(q, r):
    """0/1 indicator that the argmax decode differs from the true index."""
    if isinstance(q, Categorical):
        decoded = int(np.argmax(q.p))
    elif isinstance(q, PointMass):
        decoded = int(np.argmax(np.asarray(q.point)))
    else:
        raise DistributionError("discrete decode needs a categorical posterior")
    truth = int(np.argmax(np.asarray(r))) if np.ndim(r) else int(r)
    return 0.0 if decoded == truth else 1.0


def average_error(posteriors, truth, transform="squared"):
    """Mean over time steps of the expected transformed residual.

    ``posteriors`` and ``truth`` must have equal lengths; ``transform`` is
    "squared" (continuous states) or "decode" (discrete index mismatch).
    """
    posteriors = list(posteriors)
    truth = list(truth)
    if len(posteriors) != len(truth):
        raise DistributionError(
            "length mismatch: %d posteriors vs %d reference values"
            % (len(posteriors), len(truth))
        )
    if not posteriors:
        raise DistributionError("average error over an empty sequence")
    if transform == "squared":
        per_step = [expected_squared_residual(q, r) for q, r in zip(posteriors, truth)]
    elif transform == "decode":
        per_step = [decode_mismatch(q, r) for q, r in zip(posteriors, truth)]
    else:
        raise DistributionError("unknown transform %r" % (transform,))
    return float(np.mean(per_step))

"""Gauss-Hermite quadrature against univariate Gaussian weight functions."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def hermite_nodes(n):
    """Physicists' Gauss-Hermite nodes/weights for ∫ e^{-t^2} f(t) dt."""
    if n < 1:
        raise ValueError("need at least one quadrature point")
    t, w = np.polynomial.hermite.hermgauss(n)
    return t, w


def gauss_hermite_expectation(fn, mean, var, points):
    """E[fn(x)] for x ~ N(mean, var), exact for polynomials of degree
    <= 2*points - 1."""
    t, w = hermite_nodes(points)
    xs = mean + np.sqrt(2.0 * var) * t
    return float(np.sum(w * fn(xs)) / np.sqrt(np.pi))


def gauss_hermite_moments(log_fn, mean, var, points):
    """First two moments of the normalized density  q(x) ∝ exp(log_fn(x)) ·
    N(x | mean, var), plus the log of the normalizing constant.

    Weights are shifted by their maximum before exponentiation so very
    negative log-integrands stay stable.
    """
    t, w = hermite_nodes(points)
    xs = mean + np.sqrt(2.0 * var) * t
    log_g = np.asarray(log_fn(xs), float)
    shift = np.max(log_g)
    if not np.isfinite(shift):
        raise FloatingPointError("quadrature integrand is non-finite everywhere")
    g = np.exp(log_g - shift)
    z0 = np.sum(w * g)
    if z0 <= 0.0 or not np.isfinite(z0):
        raise FloatingPointError("quadrature mass vanished")
    m1 = np.sum(w * g * xs) / z0
    m2 = np.sum(w * g * (xs - m1) ** 2) / z0
    log_z = float(np.log(z0) + shift - 0.5 * np.log(np.pi))
    return float(m1), float(m2), log_z

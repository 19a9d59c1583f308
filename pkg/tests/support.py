"""Shared test oracles, independent of the library's computation paths."""

import itertools

import numpy as np
from scipy import integrate


def replay_combine_latest(k, script):
    """Scalar reference simulator for combineLatest gating semantics.

    ``script`` is a list of (source_index, value) emissions.  Returns the list
    of tuples a combineLatest over k sources must emit: nothing until every
    source has emitted, then the tuple of latest values on each update.
    """
    latest = [None] * k
    seen = [False] * k
    out = []
    for idx, value in script:
        latest[idx] = value
        seen[idx] = True
        if all(seen):
            out.append(tuple(latest))
    return out


def grid_quad(fn, lo, hi, n=200001):
    """Trapezoid integral of ``fn`` on [lo, hi] over a dense uniform grid."""
    xs = np.linspace(lo, hi, n)
    return np.trapezoid(fn(xs), xs)


def adaptive_quad(fn, lo, hi):
    val, _ = integrate.quad(fn, lo, hi, limit=200)
    return val


def numeric_entropy(pdf, lo, hi):
    """-∫ p log p via adaptive quadrature, guarding p=0."""

    def integrand(x):
        p = pdf(x)
        if p <= 0:
            return 0.0
        return -p * np.log(p)

    return adaptive_quad(integrand, lo, hi)


def rts_smoother(A, P, B, Q, m0, V0, ys):
    """Independent Rauch-Tung-Striebel smoother used as the exact-inference
    oracle for the linear Gaussian state space model.

    Classic two-pass form: Kalman filter forward, RTS recursion backward.
    Returns (means, covs) arrays of shape (n, d) and (n, d, d).
    """
    A = np.asarray(A, float)
    P = np.asarray(P, float)
    B = np.asarray(B, float)
    Q = np.asarray(Q, float)
    n = len(ys)
    d = A.shape[0]
    fm = np.zeros((n, d))
    fP = np.zeros((n, d, d))
    pm = np.zeros((n, d))
    pP = np.zeros((n, d, d))
    m, V = np.asarray(m0, float), np.asarray(V0, float)
    for t in range(n):
        if t > 0:
            m = A @ m
            V = A @ V @ A.T + P
        pm[t], pP[t] = m, V
        y = np.asarray(ys[t], float)
        S = B @ V @ B.T + Q
        K = np.linalg.solve(S.T, (V @ B.T).T).T
        m = m + K @ (y - B @ m)
        V = V - K @ S @ K.T
        fm[t], fP[t] = m, V
    sm = np.zeros_like(fm)
    sP = np.zeros_like(fP)
    sm[-1], sP[-1] = fm[-1], fP[-1]
    for t in range(n - 2, -1, -1):
        G = np.linalg.solve(pP[t + 1].T, (fP[t] @ A.T).T).T
        sm[t] = fm[t] + G @ (sm[t + 1] - pm[t + 1])
        sP[t] = fP[t] + G @ (sP[t + 1] - pP[t + 1]) @ G.T
    return sm, sP


def hmm_enumerate(A, B, p1, ys):
    """Exhaustive enumeration over all latent paths of a categorical HMM.

    ``A[i, j] = p(z_t = i | z_{t-1} = j)``, ``B[i, j] = p(y = i | z = j)``,
    ``p1`` the initial state distribution, ``ys`` observed category indices.
    Returns (log_evidence, singleton marginals (T, M), pairwise marginals
    (T-1, M, M) with pair[t] = p(z_t, z_{t+1} | y)).
    """
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    p1 = np.asarray(p1, float)
    T = len(ys)
    M = A.shape[0]
    paths = list(itertools.product(range(M), repeat=T))
    weights = np.zeros(len(paths))
    for k, path in enumerate(paths):
        w = p1[path[0]] * B[ys[0], path[0]]
        for t in range(1, T):
            w *= A[path[t], path[t - 1]] * B[ys[t], path[t]]
        weights[k] = w
    Z = weights.sum()
    post = weights / Z
    singles = np.zeros((T, M))
    pairs = np.zeros((T - 1, M, M))
    for k, path in enumerate(paths):
        for t in range(T):
            singles[t, path[t]] += post[k]
        for t in range(T - 1):
            pairs[t, path[t], path[t + 1]] += post[k]
    return np.log(Z), singles, pairs

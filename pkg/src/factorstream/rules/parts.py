"""Uniform view over a node's local posterior used by average-energy terms.

A node's local posterior factorizes over its clusters.  For each cluster the
engine supplies either a joint distribution over the cluster's free (random)
interfaces or nothing when every interface is observed/constant; observed
values are listed separately.  ``NodeParts`` answers moment queries per
interface without the energy formulas caring which case applies.
"""

import numpy as np

from ..distributions import (
    CategoricalJoint,
    Gaussian1D,
    GaussianND,
    PointMass,
)


class NodeParts:
    __slots__ = ("clusters", "parts", "observed", "dims", "_where")

    def __init__(self, clusters, parts, observed, dims=None):
        self.clusters = clusters  # tuple of clusters (tuples of iface names)
        self.parts = parts  # dict cluster -> Distribution over free ifaces (or None)
        self.observed = observed  # dict iface -> value
        self.dims = dims or {}  # iface -> flattened dimension
        self._where = {}
        for cluster in clusters:
            free = [i for i in cluster if i not in observed]
            for pos, iface in enumerate(free):
                self._where[iface] = (cluster, pos, len(free), tuple(free))

    def value(self, iface):
        return self.observed.get(iface)

    def dist(self, iface):
        """Distribution covering a free interface (may be a joint)."""
        cluster, _, _, _ = self._where[iface]
        return self.parts[cluster]

    def scalar_moments(self, iface):
        """(mean, variance) treating observed values as point masses."""
        if iface in self.observed:
            return float(np.asarray(self.observed[iface]).reshape(())), 0.0
        cluster, pos, nfree, _ = self._where[iface]
        d = self.parts[cluster]
        if nfree == 1:
            if isinstance(d, PointMass):
                return float(d.point), 0.0
            return float(np.asarray(d.mean).reshape(())), float(np.asarray(d.variance).reshape(()))
        if isinstance(d, GaussianND):
            return float(d.mean[pos]), float(d.cov[pos, pos])
        raise TypeError("no scalar moments for %r" % (d,))

    def cross_cov(self, a, b):
        """Scalar covariance between two interfaces; zero across clusters or
        when either is observed."""
        if a in self.observed or b in self.observed:
            return 0.0
        ca, pa, _, _ = self._where[a]
        cb, pb, _, _ = self._where[b]
        if ca != cb:
            return 0.0
        d = self.parts[ca]
        if isinstance(d, GaussianND):
            return float(d.cov[pa, pb])
        raise TypeError("no cross covariance for %r" % (d,))

    def vector_moments(self, iface, dim):
        """(mean vector, covariance matrix) for a vector-valued interface."""
        if iface in self.observed:
            v = np.asarray(self.observed[iface], float).reshape(dim)
            return v, np.zeros((dim, dim))
        cluster, pos, nfree, free = self._where[iface]
        d = self.parts[cluster]
        if isinstance(d, PointMass):
            return np.asarray(d.point, float).reshape(dim), np.zeros((dim, dim))
        if isinstance(d, GaussianND):
            if nfree == 1:
                return d.mean, d.cov
            # joint over stacked interfaces: slice this interface's block
            offset = self._block_offset(free, pos)
            sl = slice(offset, offset + dim)
            return d.mean[sl], d.cov[sl, sl]
        if isinstance(d, Gaussian1D) and dim == 1:
            return np.array([d.mean]), np.array([[d.variance]])
        raise TypeError("no vector moments for %r" % (d,))

    def cross_cov_matrix(self, a, b, dim_a, dim_b):
        if a in self.observed or b in self.observed:
            return np.zeros((dim_a, dim_b))
        ca, pa, _, free_a = self._where[a]
        cb, pb, _, free_b = self._where[b]
        if ca != cb:
            return np.zeros((dim_a, dim_b))
        d = self.parts[ca]
        if isinstance(d, GaussianND):
            oa = self._block_offset(free_a, pa)
            ob = self._block_offset(free_b, pb)
            return d.cov[oa : oa + dim_a, ob : ob + dim_b]
        raise TypeError("no cross covariance for %r" % (d,))

    def _block_offset(self, free, pos):
        # free interfaces of a joint are stacked in declaration order
        return sum(self.dims.get(i, 1) for i in free[:pos])

    def one_hot(self, iface, dim):
        """E[one-hot] for a categorical interface (observed vectors pass through)."""
        if iface in self.observed:
            return np.asarray(self.observed[iface], float).reshape(dim)
        cluster, pos, nfree, _ = self._where[iface]
        d = self.parts[cluster]
        if nfree == 1:
            if isinstance(d, PointMass):
                return np.asarray(d.point, float).reshape(dim)
            return np.asarray(d.mean, float)
        if isinstance(d, CategoricalJoint):
            return d.marginal(pos).p
        raise TypeError("no categorical expectation for %r" % (d,))

    def pair_table(self, a, b, dim_a, dim_b):
        """E[outer(one-hot a, one-hot b)]: the shared joint table when both
        live in one cluster, else the outer product of the marginals."""
        if a not in self.observed and b not in self.observed:
            ca, pa, _, _ = self._where[a]
            cb, pb, _, _ = self._where[b]
            if ca == cb:
                d = self.parts[ca]
                if not isinstance(d, CategoricalJoint):
                    raise TypeError("no pair table for %r" % (d,))
                return d.table if pa < pb else d.table.T
        return np.outer(self.one_hot(a, dim_a), self.one_hot(b, dim_b))

    def entropy(self):
        """Total entropy of the free parts (observed parts contribute zero)."""
        total = 0.0
        for cluster in self.clusters:
            d = self.parts.get(cluster)
            if d is not None:
                total += d.entropy()
        return total

import math

import numpy as np
import pytest

from factorstream.algebra import (
    from_json,
    moment_match_gaussian,
    multiply_and_normalize,
    product_chain,
    to_json,
)
from factorstream.distributions import (
    Bernoulli,
    Beta,
    Categorical,
    Dirichlet,
    Gamma,
    Gaussian1D,
    GaussianND,
    MatrixDirichlet,
    PointMass,
    SampleGrid,
)
from factorstream.errors import IncompatibleSupportError, ZeroMeasureError

from support import grid_quad


def grid_product_check(a, b, result, lo, hi, tol=1e-8):
    """Verify that ``result`` matches the renormalized pointwise product of
    the two densities by dense numeric integration."""
    f = lambda xs: np.exp([a.log_pdf(x) + b.log_pdf(x) for x in xs])
    z = grid_quad(f, lo, hi)
    xs = np.linspace(lo, hi, 2001)
    expect = f(xs) / z
    got = np.exp([result.log_pdf(x) for x in xs])
    assert np.max(np.abs(expect - got)) < tol
    # and the result itself integrates to one
    assert grid_quad(lambda xs: np.exp([result.log_pdf(x) for x in xs]), lo, hi) == pytest.approx(
        1.0, abs=1e-8
    )


class TestClosedFormProducts:
    def test_equal_standard_gaussians(self):
        r = multiply_and_normalize(
            Gaussian1D.mean_variance(0, 1), Gaussian1D.mean_variance(0, 1)
        )
        assert r.mean == pytest.approx(0.0)
        assert r.variance == pytest.approx(0.5)

    def test_weighted_mean_precision_addition(self):
        a = Gaussian1D.weighted_mean_precision(1.0, 2.0)
        b = Gaussian1D.weighted_mean_precision(3.0, 4.0)
        r = multiply_and_normalize(a, b)
        assert r.weighted_mean == pytest.approx(4.0)
        assert r.precision == pytest.approx(6.0)
        grid_product_check(a, b, r, -10, 10)

    def test_beta_product_exponent_addition(self):
        a, b = Beta(2, 3), Beta(4, 1)
        r = multiply_and_normalize(a, b)
        assert (r.a, r.b) == (5.0, 3.0)
        grid_product_check(a, b, r, 0.0, 1.0, tol=1e-6)

    def test_gamma_product(self):
        a, b = Gamma(2.0, 1.0), Gamma(3.5, 0.5)
        r = multiply_and_normalize(a, b)
        assert (r.shape, r.rate) == (4.5, 1.5)
        grid_product_check(a, b, r, 0.0, 40.0, tol=1e-6)

    def test_categorical_product(self):
        r = multiply_and_normalize(Categorical([0.2, 0.8]), Categorical([0.5, 0.5]))
        np.testing.assert_allclose(r.p, [0.2, 0.8])

    def test_dirichlet_product(self):
        r = multiply_and_normalize(Dirichlet([2, 3]), Dirichlet([4, 1]))
        np.testing.assert_allclose(r.alpha, [5, 3])

    def test_matrix_dirichlet_product(self):
        r = multiply_and_normalize(
            MatrixDirichlet(np.ones((2, 2))), MatrixDirichlet(1 + np.eye(2))
        )
        np.testing.assert_allclose(r.alpha, np.ones((2, 2)) + np.eye(2))

    def test_mvgaussian_information_addition(self):
        a = GaussianND.mean_cov([0.0, 0.0], np.eye(2))
        b = GaussianND.mean_cov([1.0, 2.0], 2 * np.eye(2))
        r = multiply_and_normalize(a, b)
        lam = np.eye(2) + 0.5 * np.eye(2)
        xi = np.zeros(2) + np.array([0.5, 1.0])
        np.testing.assert_allclose(r.precision, lam)
        np.testing.assert_allclose(r.weighted_mean, xi)

    def test_point_mass_absorbs(self):
        pm = PointMass(0.3)
        assert multiply_and_normalize(pm, Beta(2, 2)).point == 0.3
        assert multiply_and_normalize(Beta(2, 2), pm).point == 0.3

    def test_disjoint_point_masses_zero_measure(self):
        with pytest.raises(ZeroMeasureError):
            multiply_and_normalize(PointMass(0.0), PointMass(1.0))

    def test_point_mass_outside_support(self):
        with pytest.raises(ZeroMeasureError):
            multiply_and_normalize(PointMass(2.0), Beta(2, 2))

    def test_incompatible_supports_fault(self):
        with pytest.raises(IncompatibleSupportError):
            multiply_and_normalize(Beta(1, 1), Gamma(1, 1))

    def test_grid_fallback_product(self):
        g = Gaussian1D.mean_variance(0.0, 1.0)
        grid = SampleGrid.from_function(g.log_pdf, -8, 8, n=3001)
        r = multiply_and_normalize(grid, g)
        assert r.mean == pytest.approx(0.0, abs=1e-8)
        assert r.variance == pytest.approx(0.5, abs=1e-4)


class TestProductProperties:
    FAMILIES = None

    def _random_pair(self, rng):
        draws = [
            lambda: Gaussian1D.mean_variance(rng.normal(), rng.uniform(0.1, 5)),
            lambda: Beta(rng.uniform(0.5, 5), rng.uniform(0.5, 5)),
            lambda: Gamma(rng.uniform(0.8, 6), rng.uniform(0.3, 3)),
            lambda: Categorical(rng.dirichlet(np.ones(4))),
            lambda: Dirichlet(rng.uniform(0.5, 4, size=3)),
        ]
        pick = rng.integers(0, len(draws))
        return draws[pick], pick

    @staticmethod
    def _natural(d):
        if isinstance(d, Gaussian1D):
            return np.array([d.weighted_mean, d.precision])
        if isinstance(d, Beta):
            return np.array([d.a, d.b])
        if isinstance(d, Gamma):
            return np.array([d.shape, d.rate])
        if isinstance(d, Categorical):
            return d.log_p - d.log_p[0]
        if isinstance(d, Dirichlet):
            return d.alpha
        raise AssertionError

    def test_commutative_and_associative(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            make, _ = self._random_pair(rng)
            a, b, c = make(), make(), make()
            ab = multiply_and_normalize(a, b)
            ba = multiply_and_normalize(b, a)
            np.testing.assert_allclose(self._natural(ab), self._natural(ba), rtol=1e-10, atol=1e-10)
            ab_c = multiply_and_normalize(ab, c)
            a_bc = multiply_and_normalize(a, multiply_and_normalize(b, c))
            np.testing.assert_allclose(self._natural(ab_c), self._natural(a_bc), rtol=1e-10, atol=1e-10)

    def test_products_normalize_to_one(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            a = Gaussian1D.mean_variance(rng.normal(), rng.uniform(0.2, 2))
            b = Gaussian1D.mean_variance(rng.normal(), rng.uniform(0.2, 2))
            r = multiply_and_normalize(a, b)
            mass = grid_quad(lambda xs: np.exp([r.log_pdf(x) for x in xs]), -20, 20)
            assert mass == pytest.approx(1.0, abs=1e-8)
        from support import adaptive_quad

        for _ in range(10):
            # a < 1 gives an integrable endpoint singularity, so use the
            # adaptive integrator rather than a uniform grid
            a = Beta(rng.uniform(0.8, 4), rng.uniform(0.8, 4))
            b = Beta(rng.uniform(0.8, 4), rng.uniform(0.8, 4))
            r = multiply_and_normalize(a, b)
            mass = adaptive_quad(lambda x: math.exp(r.log_pdf(x)), 0, 1)
            assert mass == pytest.approx(1.0, abs=1e-8)
        # discrete products are exactly normalized
        r = multiply_and_normalize(Categorical([0.25, 0.75]), Categorical([0.9, 0.1]))
        assert r.p.sum() == pytest.approx(1.0, abs=1e-15)

    def test_product_chain_folds_left(self):
        parts = [Gaussian1D.mean_variance(i, 1.0) for i in range(4)]
        r = product_chain(parts)
        assert r.precision == pytest.approx(4.0)
        assert r.mean == pytest.approx(1.5)


class TestMomentMatching:
    def test_idempotent_on_gaussians(self):
        g = Gaussian1D.mean_variance(1, 2)
        assert moment_match_gaussian(g) is g
        projected = moment_match_gaussian(moment_match_gaussian(Gamma(4, 2)))
        once = moment_match_gaussian(Gamma(4, 2))
        assert projected.mean == once.mean and projected.variance == once.variance

    def test_gamma_projection(self):
        r = moment_match_gaussian(Gamma(4, 2))
        assert r.mean == pytest.approx(2.0)
        assert r.variance == pytest.approx(1.0)

    def test_bimodal_grid_projection(self):
        comp_var = 0.01
        def log_mix(x):
            l1 = Gaussian1D.mean_variance(-1, comp_var).log_pdf(x)
            l2 = Gaussian1D.mean_variance(1, comp_var).log_pdf(x)
            return np.logaddexp(l1, l2) + math.log(0.5)
        grid = SampleGrid.from_function(log_mix, -5, 5, n=4001)
        r = moment_match_gaussian(grid)
        assert r.mean == pytest.approx(0.0, abs=1e-10)
        assert r.variance == pytest.approx(1.01, rel=1e-4)

    def test_preserves_first_two_moments_exactly(self):
        b = Beta(3, 5)
        r = moment_match_gaussian(b)
        assert r.mean == b.mean and r.variance == b.variance


class TestJsonCodec:
    def test_roundtrip_all_families(self):
        dists = [
            Gaussian1D.mean_precision(0.5, 2.0),
            GaussianND.mean_cov([1, 2], [[2, 0.3], [0.3, 1]]),
            PointMass(1.5),
            PointMass([1.0, 2.0]),
            Bernoulli(0.25),
            Beta(2, 3),
            Gamma(4, 2),
            Categorical([0.2, 0.8]),
            Dirichlet([1, 2, 3]),
            MatrixDirichlet([[1.0, 2.0], [3.0, 4.0]]),
        ]
        for d in dists:
            obj = to_json(d)
            assert set(obj) == {"family", "params"}
            back = from_json(obj)
            assert back.family == d.family

    def test_json_is_plain_data(self):
        import json

        obj = to_json(GaussianND.mean_cov([0, 0], np.eye(2)))
        json.dumps(obj)  # must not raise

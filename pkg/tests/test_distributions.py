import math

import numpy as np
import pytest

from factorstream import distributions as fd
from factorstream.distributions import (
    Bernoulli,
    Beta,
    Categorical,
    CategoricalJoint,
    Dirichlet,
    Gamma,
    Gaussian1D,
    GaussianND,
    MatrixDirichlet,
    PointMass,
    SampleGrid,
)
from factorstream.errors import DistributionError, UndefinedMomentError

from support import numeric_entropy


class TestGaussianParametrizations:
    def test_roundtrip_all_tags(self):
        rng = np.random.default_rng(0)
        tags = [fd.MEAN_VARIANCE, fd.MEAN_PRECISION, fd.WEIGHTED_MEAN_PRECISION]
        for _ in range(50):
            g = Gaussian1D.mean_variance(rng.normal(scale=10), rng.uniform(0.01, 50))
            h = g
            for tag in tags + [fd.MEAN_VARIANCE]:
                h = h.as_tag(tag)
            assert h.mean == pytest.approx(g.mean, rel=1e-12)
            assert h.variance == pytest.approx(g.variance, rel=1e-12)

    def test_accessors_consistent(self):
        g = Gaussian1D.weighted_mean_precision(1.0, 2.0)
        assert g.mean == pytest.approx(0.5)
        assert g.variance == pytest.approx(0.5)
        assert g.precision == pytest.approx(2.0)

    def test_invalid_scale_rejected(self):
        with pytest.raises(DistributionError):
            Gaussian1D.mean_variance(0.0, 0.0)
        with pytest.raises(DistributionError):
            Gaussian1D.mean_precision(0.0, -1.0)


class TestMoments:
    def test_beta_symmetric_mean(self):
        assert Beta(2, 2).mean == pytest.approx(0.5)

    def test_dirichlet_mean(self):
        np.testing.assert_allclose(
            Dirichlet([1, 1, 2]).mean, [0.25, 0.25, 0.5], rtol=1e-12
        )

    def test_gaussian_precision(self):
        assert fd.precision(Gaussian1D.mean_variance(3.0, 4.0)) == pytest.approx(0.25)

    def test_mode_of_uniform_beta_is_error_value(self):
        with pytest.raises(UndefinedMomentError):
            fd.mode(Beta(1, 1))

    def test_gamma_moments(self):
        g = Gamma(4, 2)
        assert g.mean == pytest.approx(2.0)
        assert g.variance == pytest.approx(1.0)


class TestEntropy:
    def test_uniform_categorical(self):
        assert Categorical([1 / 3, 1 / 3, 1 / 3]).entropy() == pytest.approx(math.log(3))

    def test_unit_gaussian(self):
        expect = 0.5 * math.log(2 * math.pi * math.e)
        assert Gaussian1D.mean_variance(7.0, 1.0).entropy() == pytest.approx(expect)

    def test_unit_exponential_as_gamma(self):
        assert Gamma(1, 1).entropy() == pytest.approx(1.0)

    def test_point_mass_convention(self):
        assert PointMass(3.0).entropy() == 0.0

    @pytest.mark.parametrize("seed", range(4))
    def test_closed_forms_match_numeric_integration(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(5):
            g = Gaussian1D.mean_variance(rng.normal(), rng.uniform(0.1, 4.0))
            lo = g.mean - 12 * math.sqrt(g.variance)
            hi = g.mean + 12 * math.sqrt(g.variance)
            num = numeric_entropy(lambda x: math.exp(g.log_pdf(x)), lo, hi)
            assert g.entropy() == pytest.approx(num, abs=1e-5)

            b = Beta(rng.uniform(0.5, 6.0), rng.uniform(0.5, 6.0))
            num = numeric_entropy(lambda x: math.exp(b.log_pdf(x)), 0.0, 1.0)
            assert b.entropy() == pytest.approx(num, abs=1e-5)

            gm = Gamma(rng.uniform(0.6, 8.0), rng.uniform(0.2, 4.0))
            num = numeric_entropy(lambda x: math.exp(gm.log_pdf(x)), 0.0, gm.mean + 60 / gm.rate)
            assert gm.entropy() == pytest.approx(num, abs=1e-5)

    def test_dirichlet_entropy_beta_consistency(self):
        # Dirichlet with two components is a Beta in disguise
        rng = np.random.default_rng(3)
        for _ in range(10):
            a, b = rng.uniform(0.5, 5.0, size=2)
            assert Dirichlet([a, b]).entropy() == pytest.approx(Beta(a, b).entropy(), rel=1e-10)

    def test_matrix_dirichlet_entropy_is_column_sum(self):
        alpha = np.array([[2.0, 1.0], [1.5, 3.0]])
        md = MatrixDirichlet(alpha)
        expect = sum(Dirichlet(col).entropy() for col in alpha.T)
        assert md.entropy() == pytest.approx(expect, rel=1e-12)


class TestExpectationLog:
    def test_digamma_identity_two_ones(self):
        np.testing.assert_allclose(
            Dirichlet([1.0, 1.0]).expectation_log(), [-1.0, -1.0], rtol=1e-12
        )

    def test_symmetric_components_equal(self):
        for c in (0.3, 1.0, 4.5):
            vals = Dirichlet([c, c]).expectation_log()
            assert vals[0] == pytest.approx(vals[1])

    def test_matrix_dirichlet_all_ones(self):
        md = MatrixDirichlet(np.ones((2, 2)))
        np.testing.assert_allclose(md.expectation_log(), -np.ones((2, 2)), rtol=1e-12)

    def test_matches_monte_carlo(self):
        rng = np.random.default_rng(11)
        alpha = np.array([2.0, 3.0, 0.7])
        samples = rng.dirichlet(alpha, size=400_000)
        mc = np.log(samples).mean(axis=0)
        np.testing.assert_allclose(Dirichlet(alpha).expectation_log(), mc, atol=5e-3)


class TestLogPdf:
    def test_bernoulli_half(self):
        assert Bernoulli(0.5).log_pdf(1) == pytest.approx(math.log(0.5))

    def test_standard_normal_at_zero(self):
        assert Gaussian1D.mean_variance(0, 1).log_pdf(0.0) == pytest.approx(
            -0.5 * math.log(2 * math.pi)
        )

    def test_uniform_beta_density_one(self):
        assert Beta(1, 1).log_pdf(0.3) == pytest.approx(0.0)

    def test_outside_support_is_minus_inf(self):
        assert Beta(2, 2).log_pdf(1.5) == -np.inf
        assert Gamma(2, 1).log_pdf(-0.1) == -np.inf
        assert Bernoulli(0.3).log_pdf(0.5) == -np.inf

    def test_mvgaussian_matches_scalar(self):
        g1 = Gaussian1D.mean_variance(0.5, 2.0)
        gn = GaussianND.mean_cov([0.5], [[2.0]])
        assert gn.log_pdf([1.3]) == pytest.approx(g1.log_pdf(1.3), rel=1e-12)

    def test_densities_integrate_to_one(self):
        from support import adaptive_quad

        g = Gaussian1D.mean_variance(1.0, 0.7)
        assert adaptive_quad(lambda x: math.exp(g.log_pdf(x)), -15, 15) == pytest.approx(1.0, abs=1e-8)
        b = Beta(2.5, 1.5)
        assert adaptive_quad(lambda x: math.exp(b.log_pdf(x)), 0, 1) == pytest.approx(1.0, abs=1e-8)


class TestSampleGrid:
    def test_normalization(self):
        g = Gaussian1D.mean_variance(0.0, 1.0)
        grid = SampleGrid.from_function(g.log_pdf, -8, 8)
        w = grid.density
        assert grid.mean == pytest.approx(0.0, abs=1e-9)
        assert grid.variance == pytest.approx(1.0, abs=1e-5)
        assert np.all(np.isfinite(grid.log_w) | (grid.log_w == -np.inf))
        assert np.trapezoid(w, grid.points) == pytest.approx(1.0, abs=1e-10)

    def test_entropy_close_to_gaussian(self):
        g = Gaussian1D.mean_variance(0.0, 2.0)
        grid = SampleGrid.from_function(g.log_pdf, -12, 12, n=4001)
        assert grid.entropy() == pytest.approx(g.entropy(), abs=1e-4)


class TestCategoricalJoint:
    def test_marginals(self):
        j = CategoricalJoint([[0.1, 0.2], [0.3, 0.4]])
        np.testing.assert_allclose(j.marginal(0).p, [0.3, 0.7])
        np.testing.assert_allclose(j.marginal(1).p, [0.4, 0.6])

    def test_entropy_of_independent_table(self):
        p = np.array([0.3, 0.7])
        q = np.array([0.6, 0.4])
        j = CategoricalJoint(np.outer(p, q))
        assert j.entropy() == pytest.approx(
            Categorical(p).entropy() + Categorical(q).entropy()
        )


def test_large_categorical_stays_finite():
    # log-space storage keeps 10^4-category products well-conditioned
    from scipy.special import logsumexp

    M = 10_000
    logits = -np.linspace(0, 500, M)
    c = Categorical(log_p=logits)
    assert np.isfinite(c.entropy())
    assert c.log_pdf(0) == pytest.approx(logits[0] - logsumexp(logits), abs=1e-9)

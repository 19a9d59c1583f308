import numpy as np
import pytest

from factorstream.distributions import Categorical, Gaussian1D, GaussianND, PointMass
from factorstream.errors import ConfigError, DistributionError
from factorstream.metrics import average_error
from factorstream.simulate import Dataset, simulate


class TestSimulate:
    def test_reproducible_from_config_and_seed(self):
        cfg = {"model": "lgssm", "n": 20, "d": 2, "seed": 5}
        a = simulate(cfg)
        b = simulate(cfg)
        np.testing.assert_array_equal(np.asarray(a.observations), np.asarray(b.observations))
        np.testing.assert_array_equal(np.asarray(a.latents["x"]), np.asarray(b.latents["x"]))

    def test_different_seeds_differ(self):
        a = simulate({"model": "hgf", "n": 10, "seed": 1})
        b = simulate({"model": "hgf", "n": 10, "seed": 2})
        assert not np.allclose(a.observations, b.observations)

    def test_lgssm_near_deterministic_with_tiny_noise(self):
        d = 2
        eps = 1e-10
        cfg = {
            "model": "lgssm", "n": 12, "d": d, "seed": 0,
            "P": (eps * np.eye(d)).tolist(), "Q": (eps * np.eye(d)).tolist(),
        }
        ds = simulate(cfg)
        A = np.asarray(cfg.get("A", ds.config["A"]))
        xs = np.asarray(ds.latents["x"])
        for t in range(1, 12):
            np.testing.assert_allclose(xs[t], A @ xs[t - 1], atol=1e-4)

    def test_lgssm_rejects_non_psd_noise(self):
        with pytest.raises(ConfigError):
            simulate({
                "model": "lgssm", "n": 5, "d": 2, "seed": 0,
                "P": [[1.0, 0.0], [0.0, -1.0]], "Q": np.eye(2).tolist(),
            })

    def test_hmm_identity_transition_freezes_state(self):
        cfg = {
            "model": "hmm", "n": 30, "M": 3, "seed": 3,
            "A": np.eye(3).tolist(),
        }
        ds = simulate(cfg)
        z = np.asarray(ds.latents["z"])
        assert np.all(z == z[0])

    def test_hmm_observations_are_one_hot(self):
        ds = simulate({"model": "hmm", "n": 15, "M": 3, "seed": 0})
        obs = np.asarray(ds.observations)
        assert obs.shape == (15, 3)
        np.testing.assert_array_equal(obs.sum(axis=1), np.ones(15))

    def test_hgf_kappa_zero_is_fixed_variance_walk(self):
        # layer-1 increments have variance exp(omega) regardless of layer 2
        cfg = {"model": "hgf", "n": 40_000, "seed": 9, "kappa": 0.0, "omega": -1.0}
        ds = simulate(cfg)
        s1 = np.asarray(ds.latents["s1"])
        inc = np.diff(s1)
        assert np.var(inc) == pytest.approx(np.exp(-1.0), rel=0.05)

    def test_json_roundtrip(self):
        ds = simulate({"model": "hmm", "n": 6, "M": 2, "seed": 1})
        back = Dataset.from_json(ds.to_json())
        assert back.model == "hmm"
        np.testing.assert_array_equal(np.asarray(back.observations), np.asarray(ds.observations))

    def test_unknown_model_faults(self):
        with pytest.raises(ConfigError):
            simulate({"model": "arma", "n": 5})


class TestAverageError:
    def test_zero_mean_residual_gives_trace(self):
        qs = [GaussianND.mean_cov([1.0, 2.0], 0.5 * np.eye(2)) for _ in range(7)]
        truth = [np.array([1.0, 2.0])] * 7
        assert average_error(qs, truth) == pytest.approx(1.0)  # tr(0.5 I_2)

    def test_point_mass_equal_to_truth_is_zero(self):
        qs = [PointMass([0.5, -0.5])] * 3
        truth = [np.array([0.5, -0.5])] * 3
        assert average_error(qs, truth) == 0.0

    def test_unit_offset_identity_covariance(self):
        # ||mu - r||^2 + tr(Sigma) = 1 + 2 for a unit offset under I_2
        qs = [GaussianND.mean_cov([1.0, 0.0], np.eye(2))]
        truth = [np.array([0.0, 0.0])]
        assert average_error(qs, truth) == pytest.approx(3.0)

    def test_scalar_gaussian(self):
        qs = [Gaussian1D.mean_variance(2.0, 0.25)]
        assert average_error(qs, [1.0]) == pytest.approx(1.25)

    def test_decode_transform_counts_mismatches(self):
        qs = [Categorical([0.8, 0.2]), Categorical([0.3, 0.7]), Categorical([0.9, 0.1])]
        truth = [0, 0, 0]
        assert average_error(qs, truth, transform="decode") == pytest.approx(1 / 3)

    def test_length_mismatch_faults(self):
        with pytest.raises(DistributionError):
            average_error([PointMass(0.0)], [0.0, 1.0])

    def test_matches_monte_carlo_estimate(self):
        rng = np.random.default_rng(0)
        mu = np.array([0.4, -1.2])
        cov = np.array([[0.8, 0.2], [0.2, 0.5]])
        r = np.array([0.0, -1.0])
        q = GaussianND.mean_cov(mu, cov)
        closed = average_error([q], [r])
        samples = rng.multivariate_normal(mu, cov, size=100_000)
        mc = np.mean(np.sum((samples - r) ** 2, axis=1))
        se = np.std(np.sum((samples - r) ** 2, axis=1)) / np.sqrt(100_000)
        assert abs(closed - mc) < 3 * se

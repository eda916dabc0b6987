"""
Tests for the synthetic dataset generators and their file formats
"""
import numpy as np
import pytest
from scipy.stats import chi2_contingency
from sklearn.metrics import adjusted_rand_score

from prior_lab.core.exceptions import DimensionMismatchError, SeparationInfeasibleError
from prior_lab.schemas.priors import PriorSpec
from prior_lab.schemas.synthdata import AugmentationSpec, FactorSpec
from prior_lab.services.clustering import lloyd
from prior_lab.services.distributions import build_prior
from prior_lab.services.synthdata import (
    SynthDataset,
    default_factors,
    gaussian_mixture,
    load_binary,
    load_csv,
    load_dataset,
    make_views,
    save_binary,
    save_csv,
    two_factor_dataset,
)


def lloyd_ari(dataset: SynthDataset) -> float:
    result = lloyd(dataset.X, 2, n_init=5)
    return adjusted_rand_score(dataset.primary_labels, result.partition.assignment)


class TestGaussianMixture:
    def test_counts_sum_to_n_and_every_class_present(self):
        data = gaussian_mixture(5, PriorSpec.power_law(2.0), N=40, d=3, separation=2.0, noise_sigma=0.5, seed=1)
        counts = np.bincount(data.primary_labels, minlength=5)
        assert counts.sum() == 40
        assert np.all(counts >= 1)

    def test_one_point_per_class(self):
        data = gaussian_mixture(3, PriorSpec.uniform(), N=3, d=3, separation=5.0, noise_sigma=0.0, seed=0)
        np.testing.assert_array_equal(np.sort(data.primary_labels), [0, 1, 2])
        # noiseless: rows are the class means, pairwise `separation` apart
        distances = np.linalg.norm(data.X[:, None, :] - data.X[None, :, :], axis=2)
        np.testing.assert_allclose(distances[np.triu_indices(3, 1)], 5.0)

    def test_means_separated_beyond_dimension(self):
        data = gaussian_mixture(6, PriorSpec.uniform(), N=6, d=2, separation=3.0, noise_sigma=0.0, seed=2)
        distances = np.linalg.norm(data.X[:, None, :] - data.X[None, :, :], axis=2)
        assert distances[np.triu_indices(6, 1)].min() >= 3.0

    def test_n_below_classes(self):
        with pytest.raises(DimensionMismatchError):
            gaussian_mixture(4, PriorSpec.uniform(), N=3, d=2, separation=1.0, noise_sigma=0.1)

    def test_infeasible_separation(self, monkeypatch):
        monkeypatch.setattr("prior_lab.services.synthdata.PLACEMENT_RETRIES", 0)
        with pytest.raises(SeparationInfeasibleError):
            gaussian_mixture(5, PriorSpec.uniform(), N=5, d=1, separation=1.0, noise_sigma=0.1)

    def test_deterministic(self):
        a = gaussian_mixture(3, PriorSpec.power_law(1.0), N=50, d=2, separation=2.0, noise_sigma=1.0, seed=4)
        b = gaussian_mixture(3, PriorSpec.power_law(1.0), N=50, d=2, separation=2.0, noise_sigma=1.0, seed=4)
        assert a.X.tobytes() == b.X.tobytes()
        np.testing.assert_array_equal(a.primary_labels, b.primary_labels)

    def test_lloyd_recovers_balanced_separated_classes(self):
        data = gaussian_mixture(2, PriorSpec.uniform(), N=200, d=2, separation=12.0, noise_sigma=1.0, seed=0)
        assert lloyd_ari(data) == pytest.approx(1.0)

    def test_lloyd_splits_heavy_class(self):
        # Lloyd prefers cutting the dominant class over isolating a small one
        def phenomenon():
            for d in (2, 6):
                for separation in np.arange(2.0, 7.0, 0.5):
                    for seed in range(40):
                        skewed = gaussian_mixture(2, PriorSpec.power_law(1.5), 12, d, separation, 1.0, seed)
                        if lloyd_ari(skewed) >= 0.5:
                            continue
                        balanced = gaussian_mixture(2, PriorSpec.uniform(), 12, d, separation, 1.0, seed)
                        if lloyd_ari(balanced) > 0.9:
                            return d, separation, seed
            return None

        assert phenomenon() is not None


class TestTwoFactor:
    def test_shape_and_labels(self):
        data = two_factor_dataset(N=500, seed=0)
        assert data.X.shape == (500, 32)
        assert data.primary_labels.max() < 10
        assert data.secondary_labels.max() < 10

    def test_noiseless_limit_has_hundred_points(self):
        primary = FactorSpec(noise_sigma=1e-12)
        secondary = FactorSpec(distribution=PriorSpec.power_law(0.5), noise_sigma=1e-12)
        data = two_factor_dataset(primary, secondary, N=20_000, seed=1)
        assert np.unique(np.round(data.X, 6), axis=0).shape[0] == 100

    def test_secondary_marginal_follows_power_law(self):
        N = 100_000
        data = two_factor_dataset(N=N, seed=3)
        expected = build_prior(PriorSpec.power_law(0.5), 10).probs
        observed = np.bincount(data.secondary_labels, minlength=10) / N
        se = np.sqrt(expected * (1 - expected) / N)
        assert np.all(np.abs(observed - expected) < 4.0 * se)

    def test_factors_independent(self):
        data = two_factor_dataset(N=20_000, seed=5)
        table = np.zeros((10, 10))
        np.add.at(table, (data.primary_labels, data.secondary_labels), 1)
        _, p_value, _, _ = chi2_contingency(table)
        assert p_value > 0.01

    def test_deterministic(self):
        assert two_factor_dataset(N=100, seed=2).X.tobytes() == two_factor_dataset(N=100, seed=2).X.tobytes()

    def test_primary_factor_dominates_by_default(self):
        primary, secondary = default_factors()
        assert primary.separation == 2.0 and secondary.separation == 1.0
        assert primary.noise_sigma == secondary.noise_sigma == 0.3
        assert secondary.distribution == PriorSpec.power_law(0.5)

    def test_factor_needs_axes(self):
        with pytest.raises(ValueError):
            FactorSpec(num_values=20, embedding_dim=16)


class TestViews:
    def test_no_noise_no_mask(self, rng):
        X = rng.standard_normal((5, 4))
        anchor, target = make_views(X, AugmentationSpec(noise_sigma=0.0, mask_fraction=0.0))
        np.testing.assert_array_equal(anchor, X)
        np.testing.assert_array_equal(target, X)

    def test_mask_fraction(self):
        X = np.ones((4000, 10))
        anchor, target = make_views(X, AugmentationSpec(noise_sigma=0.0, mask_fraction=0.5), seed=1)
        assert np.mean(np.sum(anchor == 0, axis=1)) == pytest.approx(5.0, abs=0.1)
        assert np.all(target == 1.0)

    def test_seeded(self, rng):
        X = rng.standard_normal((6, 3))
        first = make_views(X, seed=7)
        second = make_views(X, seed=7)
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])


class TestFiles:
    def test_csv_round_trip(self, tmp_path):
        data = two_factor_dataset(N=50, seed=0)
        path = save_csv(data, tmp_path / "toy.csv")
        loaded = load_csv(path)
        np.testing.assert_array_equal(loaded.X, data.X)
        np.testing.assert_array_equal(loaded.secondary_labels, data.secondary_labels)

    def test_binary_layout(self, tmp_path):
        data = SynthDataset(X=np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]), primary_labels=np.array([0, 1, 1]))
        path = save_binary(data, tmp_path / "toy.bin")
        raw = path.read_bytes()
        assert len(raw) == 24 + 3 * 2 * 8 + 3 * 8
        np.testing.assert_array_equal(np.frombuffer(raw[:24], dtype="<u8"), [3, 2, 1])
        np.testing.assert_array_equal(np.frombuffer(raw[24:72], dtype="<f8"), [1, 2, 3, 4, 5, 6])
        np.testing.assert_array_equal(np.frombuffer(raw[72:], dtype="<i8"), [0, 1, 1])

    def test_binary_round_trip_by_suffix(self, tmp_path):
        data = two_factor_dataset(N=30, seed=4)
        loaded = load_dataset(save_binary(data, tmp_path / "toy.bin"))
        assert loaded.X.tobytes() == data.X.tobytes()
        np.testing.assert_array_equal(loaded.label_matrix(), data.label_matrix())

    def test_truncated_binary(self, tmp_path):
        path = save_binary(two_factor_dataset(N=10, seed=0), tmp_path / "toy.bin")
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(DimensionMismatchError):
            load_binary(path)

    def test_csv_needs_primary_column(self, tmp_path):
        path = tmp_path / "points.csv"
        path.write_text("x0,x1\n0.0,1.0\n")
        with pytest.raises(DimensionMismatchError):
            load_csv(path)

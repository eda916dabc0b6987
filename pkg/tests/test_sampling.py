"""
Tests for the mini-batch samplers and their marginal inclusion probabilities
"""
import numpy as np
import pytest

from prior_lab.core.exceptions import (
    ClassTooSmallError,
    DimensionMismatchError,
    UnsupportedStrategyError,
)
from prior_lab.schemas.sampling import LabeledIndex, SamplerConfig, SamplingStrategy
from prior_lab.services.sampling import (
    BatchSampler,
    LabeledDataset,
    SamplerState,
    class_selection_probabilities,
    compare_audits,
    empirical_marginal_audit,
    expected_inclusion,
    marginal_probability,
    next_batch,
)

BALANCED = SamplingStrategy.CLASS_BALANCED
IMBALANCED = SamplingStrategy.CLASS_IMBALANCED


def uniform_labels(classes, per_class):
    return np.repeat(np.arange(classes), per_class)


class TestConfig:
    def test_stratified_needs_classes_per_batch(self):
        with pytest.raises(ValueError):
            SamplerConfig(strategy=BALANCED, batch_size=8)

    def test_batch_size_divisible(self):
        with pytest.raises(ValueError):
            SamplerConfig(strategy=IMBALANCED, classes_per_batch=3, batch_size=8)

    def test_quota(self):
        assert SamplerConfig(strategy=IMBALANCED, classes_per_batch=2, batch_size=8).per_class_quota == 4


class TestNextBatch:
    def test_balanced_singletons_cover_every_class(self):
        items = [LabeledIndex(index=100 + c, class_id=c) for c in range(7)]
        config = SamplerConfig(strategy=BALANCED, classes_per_batch=7, batch_size=7, seed=3)
        batch, state = next_batch(config, items)
        assert sorted(batch) == list(range(100, 107))
        assert state.iteration == 1

    def test_imbalanced_two_classes_four_each(self):
        dataset = LabeledDataset.from_labels(uniform_labels(6, 5))
        config = SamplerConfig(strategy=IMBALANCED, classes_per_batch=2, batch_size=8, seed=1)
        state = SamplerState(config.seed)
        for _ in range(50):
            batch, state = next_batch(config, dataset, state)
            classes, counts = np.unique(dataset.labels[batch], return_counts=True)
            assert len(batch) == 8
            assert len(set(batch)) == 8
            assert classes.size == 2
            np.testing.assert_array_equal(counts, [4, 4])

    def test_class_too_small(self):
        dataset = LabeledDataset.from_labels([0, 0, 0, 1])
        config = SamplerConfig(strategy=BALANCED, classes_per_batch=2, batch_size=4)
        with pytest.raises(ClassTooSmallError) as exc:
            next_batch(config, dataset)
        assert exc.value.class_id == 1
        assert (exc.value.available, exc.value.quota) == (1, 2)

    def test_uniform_random_without_replacement(self):
        dataset = LabeledDataset.from_labels(uniform_labels(3, 4))
        config = SamplerConfig(batch_size=12, seed=5)
        batch, _ = next_batch(config, dataset)
        assert sorted(batch) == list(range(12))

    def test_uniform_batch_too_large(self):
        with pytest.raises(DimensionMismatchError):
            next_batch(SamplerConfig(batch_size=5), LabeledDataset.from_labels([0, 1]))

    def test_pure_function_of_seed_and_iteration(self):
        dataset = LabeledDataset.from_labels(uniform_labels(10, 10))
        config = SamplerConfig(strategy=BALANCED, classes_per_batch=5, batch_size=10, seed=9)
        sampler = BatchSampler(config, dataset)
        batches = [sampler.next_batch() for _ in range(4)]
        replay, _ = next_batch(config, dataset, SamplerState(9, iteration=2))
        assert replay == batches[2]
        assert batches[0] != batches[1]

    def test_inverse_sqrt_draws_with_replacement(self):
        dataset = LabeledDataset.from_labels([0] * 100 + [1] * 4)
        config = SamplerConfig(strategy=SamplingStrategy.INVERSE_SQRT_FREQ, batch_size=64, seed=2)
        batch, _ = next_batch(config, dataset)
        assert len(batch) == 64

    def test_duplicate_ids_rejected(self):
        with pytest.raises(DimensionMismatchError):
            LabeledDataset([LabeledIndex(index=0, class_id=0), LabeledIndex(index=0, class_id=1)])


class TestProbabilities:
    def test_inverse_sqrt_class_selection(self):
        dataset = LabeledDataset.from_labels([0] * 100 + [1] * 4)
        config = SamplerConfig(strategy=SamplingStrategy.INVERSE_SQRT_FREQ, batch_size=8)
        probs = class_selection_probabilities(config, dataset)
        assert probs[0] == pytest.approx(10 / 12, abs=1e-12)
        assert probs[1] == pytest.approx(2 / 12, abs=1e-12)

    def test_stratified_class_selection(self):
        dataset = LabeledDataset.from_labels(uniform_labels(10, 3))
        config = SamplerConfig(strategy=BALANCED, classes_per_batch=5, batch_size=10)
        assert set(class_selection_probabilities(config, dataset).values()) == {0.5}

    def test_closed_forms(self):
        # 1000 classes of 1000: 960 classes x 1 sample, or 2 classes x 480 samples
        balanced = marginal_probability(BALANCED, 1000, 1000, 960, 960)
        imbalanced = marginal_probability(IMBALANCED, 1000, 1000, 960, 2)
        assert balanced == pytest.approx(0.00096, abs=1e-15)
        assert balanced == imbalanced
        assert marginal_probability(SamplingStrategy.UNIFORM_RANDOM, 10, 10, 25) == 0.25

    @pytest.mark.parametrize(
        "C,n,B,many,few",
        [(100, 10, 100, 100, 10), (100, 10, 50, 50, 5), (1000, 5, 960, 960, 192), (12, 6, 12, 12, 2)],
    )
    def test_balanced_equals_imbalanced(self, C, n, B, many, few):
        balanced = marginal_probability(BALANCED, C, n, B, many)
        imbalanced = marginal_probability(IMBALANCED, C, n, B, few)
        assert balanced == imbalanced
        assert balanced == pytest.approx(B / (C * n), abs=1e-15)

    def test_quota_larger_than_class(self):
        with pytest.raises(DimensionMismatchError):
            marginal_probability(IMBALANCED, 10, 3, 8, 2)

    def test_inverse_sqrt_has_no_closed_form(self):
        with pytest.raises(UnsupportedStrategyError):
            marginal_probability(SamplingStrategy.INVERSE_SQRT_FREQ, 10, 10, 10)

    def test_expected_inclusion_matches_closed_form(self):
        dataset = LabeledDataset.from_labels(uniform_labels(20, 5))
        config = SamplerConfig(strategy=IMBALANCED, classes_per_batch=4, batch_size=20)
        expected = expected_inclusion(config, dataset)
        np.testing.assert_allclose(expected, marginal_probability(IMBALANCED, 20, 5, 20, 4))


class TestAudit:
    def test_uniform_random_within_bound(self):
        dataset = LabeledDataset.from_labels(uniform_labels(10, 10))
        config = SamplerConfig(batch_size=10, seed=4)
        report = empirical_marginal_audit(config, dataset, 20_000)
        assert report.max_deviation < 4.0 * float(np.max(report.standard_errors))

    def test_balanced_and_imbalanced_agree(self):
        dataset = LabeledDataset.from_labels(uniform_labels(20, 10))
        iterations = 20_000
        balanced = empirical_marginal_audit(
            SamplerConfig(strategy=BALANCED, classes_per_batch=10, batch_size=10, seed=1), dataset, iterations
        )
        imbalanced = empirical_marginal_audit(
            SamplerConfig(strategy=IMBALANCED, classes_per_batch=2, batch_size=10, seed=2), dataset, iterations
        )
        gap, bound = compare_audits(balanced, imbalanced)
        assert gap < bound
        np.testing.assert_allclose(balanced.expected, imbalanced.expected)

    def test_inverse_sqrt_audit(self):
        dataset = LabeledDataset.from_labels([0] * 100 + [1] * 4)
        config = SamplerConfig(strategy=SamplingStrategy.INVERSE_SQRT_FREQ, batch_size=8, seed=6)
        report = empirical_marginal_audit(config, dataset, 20_000)
        assert report.max_deviation < 4.0 * float(np.max(report.standard_errors))

    def test_deterministic_report(self):
        dataset = LabeledDataset.from_labels(uniform_labels(10, 4))
        config = SamplerConfig(strategy=BALANCED, classes_per_batch=5, batch_size=10, seed=8)
        a = empirical_marginal_audit(config, dataset, 500).to_frame()
        b = empirical_marginal_audit(config, dataset, 500).to_frame()
        assert a.to_csv(index=False) == b.to_csv(index=False)

    def test_frame_columns(self):
        dataset = LabeledDataset.from_labels(uniform_labels(3, 2))
        report = empirical_marginal_audit(SamplerConfig(batch_size=2), dataset, 10)
        assert list(report.to_frame().columns) == ["index", "class_id", "count", "frequency", "expected"]
        assert report.counts.sum() == 20

"""
Mini-batch samplers and their per-sample inclusion probabilities.

Every batch is a pure function of (seed, iteration): the generator for
iteration t is seeded with the pair (seed, t). Within a batch, samples are
drawn without replacement per class; across batches, classes are redrawn
independently.
"""
import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from prior_lab.core.exceptions import (
    ClassTooSmallError,
    DimensionMismatchError,
    UnsupportedStrategyError,
)
from prior_lab.schemas.sampling import LabeledIndex, SamplerConfig, SamplingStrategy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplerState:
    seed: int
    iteration: int = 0

    def rng(self) -> np.random.Generator:
        return np.random.default_rng((self.seed, self.iteration))

    def advance(self) -> "SamplerState":
        return replace(self, iteration=self.iteration + 1)


class LabeledDataset:
    """Sample ids grouped by class, built once per sampler"""

    def __init__(self, items: Sequence[LabeledIndex]):
        if not items:
            raise DimensionMismatchError("dataset is empty")
        self.ids = np.array([item.index for item in items], dtype=np.int64)
        if np.unique(self.ids).size != self.ids.size:
            raise DimensionMismatchError("sample ids must be unique")
        self.classes, self.labels = np.unique(
            np.array([item.class_id for item in items], dtype=np.int64), return_inverse=True
        )
        self.sizes = np.bincount(self.labels, minlength=self.classes.size)
        # first position of each class in a class-sorted ordering
        self._starts = np.concatenate([[0], np.cumsum(self.sizes)[:-1]])

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "LabeledDataset":
        return cls([LabeledIndex(index=i, class_id=int(c)) for i, c in enumerate(labels)])

    @property
    def N(self) -> int:
        return self.ids.size

    @property
    def C(self) -> int:
        return self.classes.size


def _as_dataset(dataset) -> LabeledDataset:
    return dataset if isinstance(dataset, LabeledDataset) else LabeledDataset(dataset)


def _stratified_positions(
    config: SamplerConfig, data: LabeledDataset, rng: np.random.Generator
) -> np.ndarray:
    c, quota = config.classes_per_batch, config.per_class_quota
    if c > data.C:
        raise DimensionMismatchError(f"{c} classes per batch but the dataset has {data.C}")

    chosen = rng.choice(data.C, size=c, replace=False)
    small = chosen[data.sizes[chosen] < quota]
    if small.size:
        k = int(small[0])
        raise ClassTooSmallError(int(data.classes[k]), int(data.sizes[k]), quota)

    # the quota smallest random keys within each chosen class
    keys = rng.random(data.N)
    order = np.lexsort((keys, data.labels))
    ranks = np.arange(data.N) - data._starts[data.labels[order]]
    selected = np.isin(data.labels[order], chosen) & (ranks < quota)
    return order[selected]


def class_selection_probabilities(config: SamplerConfig, dataset) -> Dict[int, float]:
    """
    Probability that a batch slot (uniform, inverse-sqrt) or a class slot
    (stratified) goes to each class.
    """
    data = _as_dataset(dataset)
    strategy = config.strategy
    if strategy == SamplingStrategy.UNIFORM_RANDOM:
        probs = data.sizes / data.N
    elif strategy == SamplingStrategy.INVERSE_SQRT_FREQ:
        weights = np.sqrt(data.sizes)
        probs = weights / weights.sum()
    else:
        probs = np.full(data.C, config.classes_per_batch / data.C)
    return {int(k): float(p) for k, p in zip(data.classes, probs)}


def _inverse_sqrt_weights(data: LabeledDataset) -> np.ndarray:
    """Per-sample weights: class k has mass sqrt(D_k), split evenly within the class"""
    class_mass = np.sqrt(data.sizes) / np.sqrt(data.sizes).sum()
    return class_mass[data.labels] / data.sizes[data.labels]


def _draw(config: SamplerConfig, data: LabeledDataset, rng: np.random.Generator) -> np.ndarray:
    strategy = config.strategy
    if strategy.is_stratified:
        return _stratified_positions(config, data, rng)
    if strategy == SamplingStrategy.UNIFORM_RANDOM:
        if config.batch_size > data.N:
            raise DimensionMismatchError(f"batch_size {config.batch_size} exceeds dataset size {data.N}")
        return rng.choice(data.N, size=config.batch_size, replace=False)
    return rng.choice(data.N, size=config.batch_size, replace=True, p=_inverse_sqrt_weights(data))


def next_batch(
    config: SamplerConfig,
    dataset,
    state: Optional[SamplerState] = None,
) -> Tuple[List[int], SamplerState]:
    """
    Draw one batch of sample ids.

    Args:
        config: strategy, batch size and classes per batch
        dataset: LabeledIndex items (or a prepared LabeledDataset)
        state: sampler position; defaults to iteration 0 of config.seed

    Returns:
        (batch_size sample ids, state advanced by one iteration)
    """
    data = _as_dataset(dataset)
    state = SamplerState(config.seed) if state is None else state
    positions = _draw(config, data, state.rng())
    return data.ids[positions].tolist(), state.advance()


class BatchSampler:
    """Stateful wrapper that hands out consecutive batches"""

    def __init__(self, config: SamplerConfig, dataset, state: Optional[SamplerState] = None):
        self.config = config
        self.data = _as_dataset(dataset)
        self.state = SamplerState(config.seed) if state is None else state

    def next_positions(self) -> np.ndarray:
        """Row positions (not ids) of the next batch"""
        positions = _draw(self.config, self.data, self.state.rng())
        self.state = self.state.advance()
        return positions

    def next_batch(self) -> List[int]:
        return self.data.ids[self.next_positions()].tolist()

    def __iter__(self):
        while True:
            yield self.next_batch()


def marginal_probability(
    strategy: SamplingStrategy,
    num_classes: int,
    class_size: int,
    batch_size: int,
    classes_per_batch: Optional[int] = None,
) -> float:
    """
    Exact probability that a given sample appears in one batch, for a dataset
    of num_classes classes with class_size samples each.

    Stratified strategies give (quota / class_size) * (classes_per_batch /
    num_classes), which equals batch_size / N whatever the split.
    """
    strategy = SamplingStrategy(strategy)
    if num_classes < 1 or class_size < 1 or batch_size < 1:
        raise ValueError("num_classes, class_size and batch_size must be positive")
    N = num_classes * class_size

    if strategy == SamplingStrategy.UNIFORM_RANDOM:
        if batch_size > N:
            raise DimensionMismatchError(f"batch_size {batch_size} exceeds dataset size {N}")
        return float(Fraction(batch_size, N))

    if strategy.is_stratified:
        if not classes_per_batch or batch_size % classes_per_batch:
            raise ValueError("batch_size must be a multiple of classes_per_batch")
        quota = batch_size // classes_per_batch
        if classes_per_batch > num_classes or quota > class_size:
            raise DimensionMismatchError("batch does not fit in the dataset")
        return float(Fraction(quota, class_size) * Fraction(classes_per_batch, num_classes))

    raise UnsupportedStrategyError(f"no closed-form marginal for {strategy.value}")


def expected_inclusion(config: SamplerConfig, dataset) -> np.ndarray:
    """Exact per-sample inclusion probability for any class sizes"""
    data = _as_dataset(dataset)
    B = config.batch_size
    if config.strategy == SamplingStrategy.UNIFORM_RANDOM:
        return np.full(data.N, B / data.N)
    if config.strategy.is_stratified:
        per_class = (config.per_class_quota / data.sizes) * (config.classes_per_batch / data.C)
        return per_class[data.labels]
    return 1.0 - (1.0 - _inverse_sqrt_weights(data)) ** B


@dataclass
class AuditReport:
    strategy: SamplingStrategy
    iterations: int
    ids: np.ndarray
    class_ids: np.ndarray
    counts: np.ndarray  # batches that contained each sample
    expected: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.iterations

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.frequencies - self.expected)))

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(self.expected * (1.0 - self.expected) / self.iterations)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "index": self.ids,
                "class_id": self.class_ids,
                "count": self.counts,
                "frequency": self.frequencies,
                "expected": self.expected,
            }
        )

    def summary(self) -> Dict[str, float]:
        return {
            "strategy": self.strategy.value,
            "iterations": self.iterations,
            "max_deviation": self.max_deviation,
            "max_standard_error": float(np.max(self.standard_errors)),
        }


def empirical_marginal_audit(
    config: SamplerConfig,
    dataset,
    iterations: int,
    seed: Optional[int] = None,
) -> AuditReport:
    """
    Count how often each sample appears over `iterations` batches and compare
    with its exact inclusion probability.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    sampler = BatchSampler(config, dataset, SamplerState(config.seed if seed is None else seed))
    data = sampler.data

    counts = np.zeros(data.N, dtype=np.int64)
    for _ in range(iterations):
        counts[np.unique(sampler.next_positions())] += 1

    report = AuditReport(
        strategy=config.strategy,
        iterations=iterations,
        ids=data.ids,
        class_ids=data.classes[data.labels],
        counts=counts,
        expected=expected_inclusion(config, data),
    )
    logger.info(
        f"[Sampler] {config.strategy.value} audit over {iterations} batches: "
        f"max deviation {report.max_deviation:.3e}"
    )
    return report


def compare_audits(a: AuditReport, b: AuditReport, z: float = 4.0) -> Tuple[float, float]:
    """
    Max per-sample gap between two empirical marginals and the z-standard-error
    bound for the difference of two independent binomial frequencies.
    """
    if not np.array_equal(a.ids, b.ids) or a.iterations != b.iterations:
        raise DimensionMismatchError("audits cover different samples or iteration counts")
    gap = float(np.max(np.abs(a.frequencies - b.frequencies)))
    p = np.maximum(a.expected, b.expected)
    bound = float(z * np.max(np.sqrt(2.0 * p * (1.0 - p) / a.iterations)))
    return gap, bound

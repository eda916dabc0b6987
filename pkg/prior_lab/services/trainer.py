"""
Toy Siamese trainer for MSN / PMSN on synthetic data.

An encoder (linear, or one tanh hidden layer) maps both views; prototypes are
unit-norm columns of W. The target view goes through the target encoder (an
EMA copy, or the shared encoder when EMA is off) and receives no gradient.
"""
import logging
from dataclasses import dataclass, field
from statistics import median
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import softmax
from sklearn.neighbors import NearestNeighbors

from prior_lab.core.exceptions import DimensionMismatchError, TrainingDivergedError
from prior_lab.schemas.priors import PriorSpec
from prior_lab.schemas.sampling import SamplerConfig, SamplingStrategy
from prior_lab.schemas.training import (
    EncoderKind,
    ExperimentReport,
    PairedRun,
    TrainerConfig,
    TrainMetrics,
    TrainReport,
)
from prior_lab.services.distributions import build_prior, kl_divergence
from prior_lab.services.losses import align_prior, loss_gradients, target_posteriors
from prior_lab.services.sampling import BatchSampler, LabeledDataset
from prior_lab.services.synthdata import SynthDataset, make_views, two_factor_dataset

logger = logging.getLogger(__name__)

Params = Dict[str, np.ndarray]

ENCODER_KEYS = ("W1", "b1", "W2", "b2")


def _normalize_columns(W: np.ndarray) -> np.ndarray:
    return W / np.linalg.norm(W, axis=0, keepdims=True)


def _normalize_rows(Z: np.ndarray) -> np.ndarray:
    return Z / np.linalg.norm(Z, axis=1, keepdims=True)


@dataclass
class SiameseState:
    """Encoder, prototypes, target encoder and optimizer velocity"""
    params: Params
    target: Optional[Params]  # None: the target branch shares `params`
    velocity: Params
    step: int = 0
    trajectory: List[np.ndarray] = field(default_factory=list)

    @property
    def prototypes(self) -> np.ndarray:
        return self.params["prototypes"]

    def encoder_params(self) -> Params:
        return {k: v for k, v in self.params.items() if k in ENCODER_KEYS}

    def target_params(self) -> Params:
        return self.target if self.target is not None else self.encoder_params()

    def flat(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in sorted(self.params)])


def init_state(config: TrainerConfig, input_dim: int) -> SiameseState:
    """Scaled-normal weights, zero biases, random unit-norm prototypes"""
    rng = np.random.default_rng(config.seed)
    if config.encoder == EncoderKind.MLP:
        params = {
            "W1": rng.standard_normal((input_dim, config.hidden_dim)) / np.sqrt(input_dim),
            "b1": np.zeros(config.hidden_dim),
            "W2": rng.standard_normal((config.hidden_dim, config.embed_dim)) / np.sqrt(config.hidden_dim),
            "b2": np.zeros(config.embed_dim),
        }
    else:
        params = {
            "W1": rng.standard_normal((input_dim, config.embed_dim)) / np.sqrt(input_dim),
            "b1": np.zeros(config.embed_dim),
        }
    params["prototypes"] = _normalize_columns(
        rng.standard_normal((config.embed_dim, config.num_prototypes))
    )

    target = None
    if config.ema_momentum is not None:
        target = {k: v.copy() for k, v in params.items() if k in ENCODER_KEYS}
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    return SiameseState(params=params, target=target, velocity=velocity)


def encode(params: Params, X: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Raw embeddings and the hidden activations (None for a linear encoder)"""
    if "W2" not in params:
        return X @ params["W1"] + params["b1"], None
    hidden = np.tanh(X @ params["W1"] + params["b1"])
    return hidden @ params["W2"] + params["b2"], hidden


def _encoder_backward(params: Params, X: np.ndarray, hidden: Optional[np.ndarray], dZ: np.ndarray) -> Params:
    if hidden is None:
        return {"W1": X.T @ dZ, "b1": dZ.sum(axis=0)}
    d_pre = (dZ @ params["W2"].T) * (1.0 - hidden ** 2)
    return {
        "W1": X.T @ d_pre,
        "b1": d_pre.sum(axis=0),
        "W2": hidden.T @ dZ,
        "b2": dZ.sum(axis=0),
    }


def nn_purity(embeddings, labels, k: int = 5) -> float:
    """
    Fraction of each sample's k nearest neighbours (cosine distance, self
    excluded) that share its label, averaged over samples.
    """
    Z = np.asarray(embeddings, dtype=float)
    labels = np.asarray(labels)
    N = Z.shape[0]
    if labels.shape != (N,):
        raise DimensionMismatchError(f"{labels.size} labels for {N} embeddings")
    if k < 1 or k >= N:
        raise DimensionMismatchError(f"k must satisfy 1 <= k < N = {N}, got {k}")

    index = NearestNeighbors(n_neighbors=k + 1, metric="cosine").fit(Z)
    _, neighbours = index.kneighbors(Z)

    # drop self; with duplicates self may be missing, then drop the farthest
    keep = neighbours != np.arange(N)[:, None]
    missing_self = keep.all(axis=1)
    keep[missing_self, -1] = False
    neighbours = neighbours[keep].reshape(N, k)
    return float(np.mean(labels[neighbours] == labels[:, None]))


class SiameseTrainer:
    """SGD-with-momentum training of encoder and prototypes"""

    def __init__(self, config: TrainerConfig, input_dim: int, record_trajectory: bool = False):
        self.config = config
        self.input_dim = input_dim
        self.record_trajectory = record_trajectory
        self.state = init_state(config, input_dim)

    def targets_for(self, X_target: np.ndarray) -> np.ndarray:
        """Sharpened target posteriors; constants for the update"""
        Z_target, _ = encode(self.state.target_params(), X_target)
        return target_posteriors(Z_target, self.state.prototypes, self.config.loss)

    def loss_and_gradients(self, X_anchor: np.ndarray, targets: np.ndarray) -> Tuple[float, Params]:
        params = self.state.params
        Z, hidden = encode(params, X_anchor)
        if not np.all(np.isfinite(Z)):
            raise TrainingDivergedError(self.state.step, float("nan"))
        grads = loss_gradients(Z, params["prototypes"], targets, self.config.loss, self.config.objective)
        param_grads = _encoder_backward(params, X_anchor, hidden, grads.anchor)
        param_grads["prototypes"] = grads.prototypes
        return grads.loss, param_grads

    def step(self, X_anchor: np.ndarray, X_target: np.ndarray) -> float:
        """One update from a pair of views; returns the pre-update loss"""
        state = self.state
        loss, grads = self.loss_and_gradients(X_anchor, self.targets_for(X_target))
        if not np.isfinite(loss):
            raise TrainingDivergedError(state.step, loss)

        lr, mu = self.config.learning_rate, self.config.momentum
        for name, grad in grads.items():
            state.velocity[name] = mu * state.velocity[name] + grad
            state.params[name] = state.params[name] - lr * state.velocity[name]
        state.params["prototypes"] = _normalize_columns(state.params["prototypes"])

        if state.target is not None:
            m = self.config.ema_momentum
            for name in state.target:
                state.target[name] = m * state.target[name] + (1.0 - m) * state.params[name]

        state.step += 1
        if self.record_trajectory:
            state.trajectory.append(state.flat())
        return loss

    def train(self, dataset: SynthDataset, sampler: Optional[SamplerConfig] = None) -> TrainReport:
        """Sample, augment, update; `config.steps` times"""
        if dataset.d != self.input_dim:
            raise DimensionMismatchError(f"dataset is {dataset.d}-D, encoder expects {self.input_dim}")
        sampler = sampler or SamplerConfig(
            strategy=SamplingStrategy.UNIFORM_RANDOM,
            batch_size=min(self.config.batch_size, dataset.N),
            seed=self.config.seed,
        )
        batches = BatchSampler(sampler, LabeledDataset.from_labels(dataset.primary_labels))

        losses: List[float] = []
        for step in range(self.config.steps):
            X = dataset.X[batches.next_positions()]
            view_rng = np.random.default_rng((self.config.seed, step, 1))
            X_anchor, X_target = make_views(X, self.config.augmentation, view_rng)
            losses.append(self.step(X_anchor, X_target))
            if step % 50 == 0:
                logger.debug(f"[Trainer] step {step}: loss {losses[-1]:.6f}")

        metrics = self.evaluate(dataset)
        logger.info(
            f"[Trainer] {self.config.objective.value} with prior {self.config.loss.prior.label}: "
            f"final loss {losses[-1] if losses else float('nan'):.4f}, "
            f"KL(p_bar || prior) {metrics.kl_pbar_to_prior:.4f}"
        )
        return TrainReport(losses=losses, metrics=metrics, objective=self.config.objective)

    def embed(self, X: np.ndarray) -> np.ndarray:
        Z, _ = encode(self.state.encoder_params(), np.asarray(X, dtype=float))
        return _normalize_rows(Z)

    def evaluate(self, dataset: SynthDataset) -> TrainMetrics:
        """Neighbour purity per factor, KL of p_bar to the prior, argmax cluster usage"""
        Z = self.embed(dataset.X)
        W = self.state.prototypes
        P = softmax(Z @ W / self.config.loss.sigma, axis=1)

        K = W.shape[1]
        p_bar = P.mean(axis=0)
        prior = align_prior(p_bar, build_prior(self.config.loss.prior, K).probs, self.config.loss.prior_alignment)
        usage = np.bincount(P.argmax(axis=1), minlength=K) / dataset.N

        k = self.config.eval_k
        secondary = None
        if dataset.secondary_labels is not None:
            secondary = nn_purity(Z, dataset.secondary_labels, k)
        return TrainMetrics(
            nn_purity_primary=nn_purity(Z, dataset.primary_labels, k),
            nn_purity_secondary=secondary,
            kl_pbar_to_prior=kl_divergence(p_bar / p_bar.sum(), prior),
            cluster_usage=usage.tolist(),
        )


def train(
    dataset: SynthDataset,
    config: TrainerConfig,
    sampler: Optional[SamplerConfig] = None,
) -> Tuple[TrainReport, SiameseTrainer]:
    trainer = SiameseTrainer(config, dataset.d)
    return trainer.train(dataset, sampler), trainer


def run_toy_experiment(
    prior_a: PriorSpec,
    prior_b: PriorSpec,
    seeds: Sequence[int],
    config: Optional[TrainerConfig] = None,
    N: int = 2000,
) -> ExperimentReport:
    """
    Paired runs on the two-factor dataset: per seed, one dataset and one
    initialization, trained once with each prior.
    """
    if not seeds:
        raise ValueError("at least one seed is required")
    base = config or TrainerConfig.toy()

    runs: List[PairedRun] = []
    for seed in seeds:
        dataset = two_factor_dataset(N=N, seed=seed)
        metrics = []
        for prior in (prior_a, prior_b):
            run_config = base.model_copy(
                update={"seed": seed, "loss": base.loss.model_copy(update={"prior": prior})}
            )
            report, _ = train(dataset, run_config)
            metrics.append(report.metrics)
        runs.append(PairedRun(seed=seed, metrics_a=metrics[0], metrics_b=metrics[1]))
        logger.info(f"[Experiment] seed {seed}: secondary purity gain {runs[-1].secondary_gain:+.4f}")

    return ExperimentReport(
        prior_a=prior_a,
        prior_b=prior_b,
        runs=runs,
        median_secondary_gain=float(median(r.secondary_gain for r in runs)),
        median_primary_gain=float(median(r.primary_gain for r in runs)),
        secondary_wins=sum(r.secondary_gain > 0 for r in runs),
    )

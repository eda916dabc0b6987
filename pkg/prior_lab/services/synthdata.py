"""
Synthetic datasets: Gaussian mixtures with skewed class proportions and a
two-factor dataset whose secondary factor follows a power law.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd

from prior_lab.core.exceptions import DimensionMismatchError, SeparationInfeasibleError
from prior_lab.schemas.priors import PriorSpec
from prior_lab.schemas.synthdata import AugmentationSpec, FactorSpec
from prior_lab.services.clustering import as_data_matrix
from prior_lab.services.distributions import build_prior

logger = logging.getLogger(__name__)

PLACEMENT_RETRIES = 1000
BINARY_HEADER = np.dtype("<u8")
LABEL_COLUMNS = ("primary", "secondary")


@dataclass(frozen=True)
class SynthDataset:
    X: np.ndarray
    primary_labels: np.ndarray
    secondary_labels: Optional[np.ndarray] = None

    def __post_init__(self):
        X = as_data_matrix(self.X)
        primary = np.asarray(self.primary_labels, dtype=np.int64)
        if primary.shape != (X.shape[0],):
            raise DimensionMismatchError(f"{primary.size} primary labels for {X.shape[0]} rows")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "primary_labels", primary)
        if self.secondary_labels is not None:
            secondary = np.asarray(self.secondary_labels, dtype=np.int64)
            if secondary.shape != (X.shape[0],):
                raise DimensionMismatchError(f"{secondary.size} secondary labels for {X.shape[0]} rows")
            object.__setattr__(self, "secondary_labels", secondary)

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def label_matrix(self) -> np.ndarray:
        columns = [self.primary_labels]
        if self.secondary_labels is not None:
            columns.append(self.secondary_labels)
        return np.stack(columns, axis=1)


def _class_means(classes: int, d: int, separation: float, rng: np.random.Generator) -> np.ndarray:
    """Means at pairwise distance >= separation"""
    if classes <= d:
        # scaled simplex corners: pairwise distance exactly `separation`
        return (separation / np.sqrt(2.0)) * np.eye(classes, d)

    side = 2.0 * separation * np.ceil(classes ** (1.0 / d))
    means = [rng.uniform(0.0, side, size=d)]
    attempts = 0
    while len(means) < classes:
        attempts += 1
        if attempts > PLACEMENT_RETRIES * classes:
            raise SeparationInfeasibleError(
                f"could not place {classes} means {separation} apart in {d} dimensions"
            )
        candidate = rng.uniform(0.0, side, size=d)
        if np.min(np.linalg.norm(np.asarray(means) - candidate, axis=1)) >= separation:
            means.append(candidate)
    return np.asarray(means)


def gaussian_mixture(
    classes: int,
    class_distribution: PriorSpec,
    N: int,
    d: int,
    separation: float,
    noise_sigma: float,
    seed: int = 0,
) -> SynthDataset:
    """
    Isotropic Gaussian clusters with class proportions drawn from a prior.

    Every class gets at least one point; the remaining N - classes points are
    split multinomially under `class_distribution`. Rows are shuffled.
    """
    if classes < 1 or N < classes:
        raise DimensionMismatchError(f"need N >= classes >= 1, got N={N}, classes={classes}")
    if d < 1 or separation <= 0 or noise_sigma < 0:
        raise ValueError("d must be >= 1, separation > 0 and noise_sigma >= 0")

    rng = np.random.default_rng(seed)
    proportions = build_prior(class_distribution, classes).probs
    means = _class_means(classes, d, separation, rng)

    counts = 1 + rng.multinomial(N - classes, proportions)
    labels = rng.permutation(np.repeat(np.arange(classes), counts))
    X = means[labels] + noise_sigma * rng.standard_normal((N, d))
    logger.debug(f"[SynthData] gaussian mixture with class counts {counts.tolist()}")
    return SynthDataset(X=X, primary_labels=labels)


def factor_means(spec: FactorSpec) -> np.ndarray:
    """Value v sits at separation * e_v inside the factor's own subspace"""
    return spec.separation * np.eye(spec.num_values, spec.embedding_dim)


def default_factors() -> Tuple[FactorSpec, FactorSpec]:
    """
    Uniform primary factor at separation 2 and a power-law(0.5) secondary
    factor at separation 1, both with noise 0.3.
    """
    return FactorSpec(separation=2.0), FactorSpec(distribution=PriorSpec.power_law(0.5))


def two_factor_dataset(
    primary: Optional[FactorSpec] = None,
    secondary: Optional[FactorSpec] = None,
    N: int = 2000,
    seed: int = 0,
) -> SynthDataset:
    """
    x = concat(mean_primary[a] + e1, mean_secondary[b] + e2) with a and b
    drawn independently from their factors' distributions.
    """
    default_primary, default_secondary = default_factors()
    primary = primary or default_primary
    secondary = secondary or default_secondary
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")

    rng = np.random.default_rng(seed)
    parts, labels = [], []
    for spec in (primary, secondary):
        probs = build_prior(spec.distribution, spec.num_values).probs
        values = rng.choice(spec.num_values, size=N, p=probs)
        noise = spec.noise_sigma * rng.standard_normal((N, spec.embedding_dim))
        parts.append(factor_means(spec)[values] + noise)
        labels.append(values)

    return SynthDataset(
        X=np.concatenate(parts, axis=1),
        primary_labels=labels[0],
        secondary_labels=labels[1],
    )


def make_views(
    X,
    aug: Optional[AugmentationSpec] = None,
    seed: Union[int, np.random.Generator] = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Two noisy views of every row. Only the anchor view is masked: each
    coordinate is zeroed independently with probability mask_fraction.
    """
    aug = aug or AugmentationSpec()
    X = as_data_matrix(X)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    anchor = X + aug.noise_sigma * rng.standard_normal(X.shape)
    target = X + aug.noise_sigma * rng.standard_normal(X.shape)
    keep = rng.random(X.shape) >= aug.mask_fraction
    return anchor * keep, target


def _frame(dataset: SynthDataset) -> pd.DataFrame:
    frame = pd.DataFrame(dataset.X, columns=[f"x{i}" for i in range(dataset.d)])
    frame["primary"] = dataset.primary_labels
    if dataset.secondary_labels is not None:
        frame["secondary"] = dataset.secondary_labels
    return frame


def save_csv(dataset: SynthDataset, path: Union[str, Path]) -> Path:
    """One row per sample, feature columns then label columns"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _frame(dataset).to_csv(path, index=False, float_format="%.17g")
    return path


def load_csv(path: Union[str, Path]) -> SynthDataset:
    frame = pd.read_csv(path, float_precision="round_trip")
    if "primary" not in frame.columns:
        raise DimensionMismatchError(f"{path} has no 'primary' label column")
    features = [c for c in frame.columns if c not in LABEL_COLUMNS]
    secondary = frame["secondary"].to_numpy() if "secondary" in frame.columns else None
    return SynthDataset(
        X=frame[features].to_numpy(dtype=float),
        primary_labels=frame["primary"].to_numpy(),
        secondary_labels=secondary,
    )


def save_binary(dataset: SynthDataset, path: Union[str, Path]) -> Path:
    """
    Header of three little-endian uint64 (N, d, number of label columns),
    then X as little-endian float64 rows, then each label column as int64.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    labels = dataset.label_matrix()
    header = np.array([dataset.N, dataset.d, labels.shape[1]], dtype=BINARY_HEADER)
    with open(path, "wb") as handle:
        handle.write(header.tobytes())
        handle.write(dataset.X.astype("<f8").tobytes())
        handle.write(labels.T.astype("<i8").tobytes())
    return path


def load_binary(path: Union[str, Path]) -> SynthDataset:
    raw = Path(path).read_bytes()
    N, d, L = (int(v) for v in np.frombuffer(raw, dtype=BINARY_HEADER, count=3))
    offset = 3 * BINARY_HEADER.itemsize
    expected = offset + 8 * N * d + 8 * N * L
    if len(raw) != expected or L not in (1, 2):
        raise DimensionMismatchError(f"{path}: {len(raw)} bytes, header implies {expected}")

    X = np.frombuffer(raw, dtype="<f8", count=N * d, offset=offset).reshape(N, d)
    labels = np.frombuffer(raw, dtype="<i8", count=N * L, offset=offset + 8 * N * d).reshape(L, N)
    return SynthDataset(
        X=X.astype(float),
        primary_labels=labels[0].astype(np.int64),
        secondary_labels=labels[1].astype(np.int64) if L == 2 else None,
    )


def load_dataset(path: Union[str, Path]) -> SynthDataset:
    """Read CSV or binary depending on the file suffix"""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return load_csv(path)
    return load_binary(path)

"""Services"""
from prior_lab.services.distributions import (
    ProbVector,
    build_prior,
    entropy,
    cross_entropy,
    kl_divergence,
)
from prior_lab.services.clustering import (
    ObjectiveMode,
    Partition,
    explicit_objective,
    implicit_objective,
    lloyd,
    brute_force_optimum,
)
from prior_lab.services.transport import (
    SoftAssignment,
    sinkhorn_project,
    constrained_kmeans_objective,
    swav_loss,
)
from prior_lab.services.mixture import (
    GmmModel,
    gmm_posterior,
    gmm_objective,
    simplified_objective,
    msn_zero_temp_limit,
)
from prior_lab.services.losses import (
    SimilarityMatrix,
    PosteriorBatch,
    vicreg_simplified,
    covariance_decomposition_check,
    msn_loss,
    pmsn_loss,
    posterior_from_embeddings,
    sharpen,
    pmsn_gradients,
)
from prior_lab.services.sampling import (
    next_batch,
    marginal_probability,
    empirical_marginal_audit,
)
from prior_lab.services.synthdata import (
    SynthDataset,
    gaussian_mixture,
    two_factor_dataset,
    make_views,
)
from prior_lab.services.trainer import (
    SiameseTrainer,
    train,
    nn_purity,
    run_toy_experiment,
)

__all__ = [
    "ProbVector",
    "build_prior",
    "entropy",
    "cross_entropy",
    "kl_divergence",
    "ObjectiveMode",
    "Partition",
    "explicit_objective",
    "implicit_objective",
    "lloyd",
    "brute_force_optimum",
    "SoftAssignment",
    "sinkhorn_project",
    "constrained_kmeans_objective",
    "swav_loss",
    "GmmModel",
    "gmm_posterior",
    "gmm_objective",
    "simplified_objective",
    "msn_zero_temp_limit",
    "SimilarityMatrix",
    "PosteriorBatch",
    "vicreg_simplified",
    "covariance_decomposition_check",
    "msn_loss",
    "pmsn_loss",
    "posterior_from_embeddings",
    "sharpen",
    "pmsn_gradients",
    "next_batch",
    "marginal_probability",
    "empirical_marginal_audit",
    "SynthDataset",
    "gaussian_mixture",
    "two_factor_dataset",
    "make_views",
    "SiameseTrainer",
    "train",
    "nn_purity",
    "run_toy_experiment",
]

"""
verify-props: numerical checks of the K-means views of the self-supervised
losses, plus gradient and sampler checks.

Each suite draws its random instances from one seeded generator and reports
its largest residual against a fixed tolerance.
"""
import argparse
import logging
import time
from typing import Callable, List

import numpy as np
from scipy.special import logsumexp, softmax
from scipy.stats import multivariate_normal

from prior_lab.commands.base import CommandResult, global_options, out_path
from prior_lab.schemas.losses import LossConfig
from prior_lab.schemas.priors import PriorSpec
from prior_lab.schemas.sampling import SamplerConfig, SamplingStrategy
from prior_lab.schemas.verify import SuiteResult, VerificationReport, VerifyConfig
from prior_lab.services.clustering import (
    ObjectiveMode,
    Partition,
    brute_force_optimum,
    explicit_objective,
    implicit_objective,
    lloyd,
)
from prior_lab.services.distributions import ProbVector
from prior_lab.services.losses import (
    PosteriorBatch,
    SimilarityMatrix,
    covariance_decomposition_check,
    loss_gradients,
    msn_loss,
    pmsn_loss,
    pmsn_objective,
    target_posteriors,
)
from prior_lab.services.mixture import GmmModel, gmm_posterior, msn_zero_temp_limit, scaled_msn_loss
from prior_lab.services.sampling import (
    LabeledDataset,
    compare_audits,
    empirical_marginal_audit,
    marginal_probability,
)
from prior_lab.services.transport import (
    balanced_cardinalities,
    constrained_brute_force,
    constrained_kmeans_objective,
    sinkhorn_project,
    swav_assignment,
)
from prior_lab.utils.gradcheck import central_difference_gradient, relative_error
from prior_lab.utils.serialization import write_json

logger = logging.getLogger(__name__)

ZERO_TEMP_SIGMAS = (1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001)
ZERO_TEMP_LIMIT = 0.75 * np.log(1.5) + 0.25 * np.log(0.5)
GRADIENT_INSTANCES = 50

ImplicitFn = Callable[[np.ndarray, Partition], float]


def clustering_suite(config: VerifyConfig, rng: np.random.Generator, implicit_fn: ImplicitFn = implicit_objective) -> SuiteResult:
    """Exhaustive explicit and implicit optima agree; the two objectives agree on every partition"""
    optimum_gap = identity_error = 0.0
    for _ in range(config.trials):
        K = int(rng.integers(2, config.max_k + 1))
        N = int(rng.integers(K, config.max_n + 1))
        X = rng.standard_normal((N, 2))

        best_explicit, value_explicit = brute_force_optimum(X, K, ObjectiveMode.EXPLICIT)
        _, value_implicit = brute_force_optimum(X, K, ObjectiveMode.IMPLICIT)
        optimum_gap = max(optimum_gap, abs(value_explicit - value_implicit))

        for partition in (best_explicit, Partition(rng.integers(0, K, N), K)):
            explicit = explicit_objective(X, partition)
            error = abs(explicit - implicit_fn(X, partition)) / max(abs(explicit), 1.0)
            identity_error = max(identity_error, error)

    return SuiteResult(
        name="clustering",
        passed=optimum_gap < 1e-9 and identity_error < 1e-12,
        trials=config.trials,
        max_residual=max(optimum_gap, identity_error),
        tolerance=1e-9,
        details={"optimum_gap": optimum_gap, "identity_relative_error": identity_error},
    )


def losses_suite(config: VerifyConfig, rng: np.random.Generator) -> SuiteResult:
    """Covariance split, pairwise-trace identity, and PMSN-uniform = MSN + lambda ln K"""
    decomposition = offset = 0.0
    for _ in range(config.trials):
        N = 2 * int(rng.integers(1, max(config.max_n // 2, 1) + 1))
        d = int(rng.integers(1, 4))
        Z = rng.standard_normal((N, d))
        Z -= Z.mean(axis=0)
        order = rng.permutation(N)
        G = SimilarityMatrix.from_pairs(N, zip(order[0::2], order[1::2]))
        decomposition = max(decomposition, covariance_decomposition_check(Z, G).max_residual)

        K = int(rng.integers(1, config.max_k + 2))
        lam = float(rng.uniform(0.1, 2.0))
        batch = PosteriorBatch(
            softmax(rng.standard_normal((N, K)), axis=1),
            softmax(2.0 * rng.standard_normal((N, K)), axis=1),
        )
        gap = pmsn_loss(batch, lam, ProbVector.uniform(K)) - msn_loss(batch, lam)
        offset = max(offset, abs(gap - lam * np.log(K)))

    return SuiteResult(
        name="losses",
        passed=decomposition < 1e-10 and offset < 1e-12,
        trials=config.trials,
        max_residual=max(decomposition, offset),
        tolerance=1e-10,
        details={"decomposition_residual": decomposition, "uniform_prior_offset_error": offset},
    )


def _bayes_posterior(model: GmmModel, x: np.ndarray) -> np.ndarray:
    log_joint = np.array(
        [
            multivariate_normal.logpdf(x, mean=model.W[:, k], cov=model.sigma * np.eye(model.d))
            + np.log(model.prior[k])
            for k in range(model.K)
        ]
    )
    return np.exp(log_joint - logsumexp(log_joint))


def mixture_suite(config: VerifyConfig, rng: np.random.Generator) -> SuiteResult:
    """Posterior against Bayes' rule; scaled MSN loss approaches its zero-temperature limit"""
    posterior_error = 0.0
    draws = max(config.trials, 1) * 5
    for _ in range(draws):
        d = int(rng.integers(1, 6))
        K = int(rng.integers(1, 7))
        model = GmmModel(
            W=2.0 * rng.standard_normal((d, K)),
            prior=ProbVector.from_unnormalized(rng.dirichlet(np.ones(K)) + 1e-3),
            sigma=float(rng.uniform(0.2, 3.0)),
        )
        x = 2.0 * rng.standard_normal(d)
        error = np.max(np.abs(gmm_posterior(model, x).probs - _bayes_posterior(model, x)))
        posterior_error = max(posterior_error, float(error))

    X = np.array([[-10.0], [-10.0], [-10.0], [10.0]])
    W = np.array([[-10.0, 10.0]])
    uniform = ProbVector.uniform(2)
    limit = msn_zero_temp_limit(X, X, W, uniform, lam=1.0)
    deviations = [abs(scaled_msn_loss(X, X, W, uniform, 1.0, s) - limit.sigma_limit) for s in ZERO_TEMP_SIGMAS]
    monotone = all(b <= a + 1e-15 for a, b in zip(deviations, deviations[1:]))
    limit_error = abs(limit.value - ZERO_TEMP_LIMIT)

    passed = posterior_error < 1e-10 and monotone and deviations[-1] < 1e-3 and limit_error < 1e-6
    return SuiteResult(
        name="mixture",
        passed=passed,
        trials=draws,
        max_residual=max(posterior_error, deviations[-1], limit_error),
        tolerance=1e-10,
        details={
            "posterior_error": posterior_error,
            "zero_temp_deviations": deviations,
            "zero_temp_monotone": monotone,
            "limit_value": limit.value,
        },
    )


def transport_suite(config: VerifyConfig, rng: np.random.Generator) -> SuiteResult:
    """Sinkhorn feasibility and idempotence; constrained optimum bounds the rounded relaxation"""
    violation = drift = relaxation_gap = 0.0
    for _ in range(config.trials):
        K = int(rng.integers(2, 9))
        N = int(rng.integers(K, 65))
        Q = sinkhorn_project(rng.random((K, N)) + 0.01)
        violation = max(violation, Q.violation())
        drift = max(drift, float(np.max(np.abs(sinkhorn_project(Q.P).P - Q.P))))

        n = int(rng.integers(2, config.max_n + 1))
        X = rng.standard_normal((n, 2))
        sizes = balanced_cardinalities(n, 2)
        _, optimum = constrained_brute_force(X, sizes)
        centroids = lloyd(X, 2, seed=int(rng.integers(2 ** 31))).centroids
        rounded, _ = swav_assignment(X, centroids, sigma=1.0)
        relaxed = constrained_kmeans_objective(X, rounded, sizes)
        relaxation_gap = max(relaxation_gap, optimum - relaxed)

    return SuiteResult(
        name="transport",
        passed=violation < 1e-8 and drift < 1e-8 and relaxation_gap <= 1e-9,
        trials=config.trials,
        max_residual=max(violation, drift, relaxation_gap),
        tolerance=1e-8,
        details={"constraint_violation": violation, "idempotence_drift": drift, "relaxation_gap": relaxation_gap},
    )


def gradient_suite(config: VerifyConfig, rng: np.random.Generator) -> SuiteResult:
    """Analytic PMSN gradients against central differences"""
    worst = 0.0
    instances = min(config.trials, GRADIENT_INSTANCES)
    for _ in range(instances):
        N, d, K = int(rng.integers(1, 9)), int(rng.integers(2, 7)), int(rng.integers(2, 6))
        loss_config = LossConfig(
            lam=float(rng.uniform(0.5, 2.0)),
            sigma=float(rng.uniform(0.2, 1.0)),
            prior=PriorSpec.power_law(float(rng.uniform(0.0, 1.0))),
        )
        Z_anchor = rng.standard_normal((N, d))
        W = rng.standard_normal((d, K))
        targets = target_posteriors(rng.standard_normal((N, d)), W, loss_config)

        analytic = loss_gradients(Z_anchor, W, targets, loss_config)
        numeric_z = central_difference_gradient(lambda z: pmsn_objective(z, W, targets, loss_config), Z_anchor)
        numeric_w = central_difference_gradient(lambda w: pmsn_objective(Z_anchor, w, targets, loss_config), W)
        worst = max(worst, relative_error(analytic.anchor, numeric_z), relative_error(analytic.prototypes, numeric_w))

    return SuiteResult(
        name="gradients",
        passed=worst < 1e-5,
        trials=instances,
        max_residual=worst,
        tolerance=1e-5,
    )


def sampling_suite(config: VerifyConfig, rng: np.random.Generator) -> SuiteResult:
    """Balanced and imbalanced batches give every sample the same inclusion probability"""
    grid = [(1000, 1000, 960, 960, 2), (100, 10, 100, 100, 10), (100, 10, 50, 50, 5)]
    closed_form_equal = all(
        marginal_probability(SamplingStrategy.CLASS_BALANCED, C, n, B, many)
        == marginal_probability(SamplingStrategy.CLASS_IMBALANCED, C, n, B, few)
        for C, n, B, many, few in grid
    )

    dataset = LabeledDataset.from_labels(np.repeat(np.arange(20), 10))
    iterations = max(2000, 200 * config.trials)
    seed = int(rng.integers(2 ** 31))
    balanced = empirical_marginal_audit(
        SamplerConfig(strategy=SamplingStrategy.CLASS_BALANCED, classes_per_batch=10, batch_size=10, seed=seed),
        dataset,
        iterations,
    )
    imbalanced = empirical_marginal_audit(
        SamplerConfig(strategy=SamplingStrategy.CLASS_IMBALANCED, classes_per_batch=2, batch_size=10, seed=seed + 1),
        dataset,
        iterations,
    )
    gap, bound = compare_audits(balanced, imbalanced)

    return SuiteResult(
        name="sampling",
        passed=closed_form_equal and gap < bound,
        trials=iterations,
        max_residual=gap,
        tolerance=bound,
        details={"closed_form_equal": closed_form_equal},
    )


def run_verification(config: VerifyConfig, implicit_fn: ImplicitFn = implicit_objective) -> VerificationReport:
    """Run every suite; each gets its own generator derived from config.seed"""
    children = np.random.SeedSequence(config.seed).spawn(6)
    suites = [
        lambda rng: clustering_suite(config, rng, implicit_fn),
        lambda rng: losses_suite(config, rng),
        lambda rng: mixture_suite(config, rng),
        lambda rng: transport_suite(config, rng),
        lambda rng: gradient_suite(config, rng),
        lambda rng: sampling_suite(config, rng),
    ]

    results: List[SuiteResult] = []
    for suite, child in zip(suites, children):
        started = time.perf_counter()
        result = suite(np.random.default_rng(child))
        status = "passed" if result.passed else "FAILED"
        logger.info(
            f"[Verify] {result.name} {status}: max residual {result.max_residual:.3e} "
            f"(tolerance {result.tolerance:.1e}, {time.perf_counter() - started:.2f}s)"
        )
        results.append(result)
    return VerificationReport(passed=all(r.passed for r in results), suites=results)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "verify-props", help="Run the numerical verification suites", parents=[global_options()]
    )
    parser.add_argument("--max-n", type=int, default=8, help="Largest N for exhaustive search")
    parser.add_argument("--max-k", type=int, default=3, help="Largest K for exhaustive search")
    parser.add_argument("--trials", type=int, default=100, help="Random instances per suite")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> CommandResult:
    config = VerifyConfig(max_n=args.max_n, max_k=args.max_k, trials=args.trials, seed=args.seed)
    report = run_verification(config)
    report_path = write_json(out_path(args, "verify_report.json"), report)

    summary = [
        f"{s.name:<11} {'PASS' if s.passed else 'FAIL'}  max residual {s.max_residual:.3e}"
        for s in report.suites
    ]
    return CommandResult(
        config=config.model_dump(mode="json"),
        payload=report,
        summary=summary,
        outputs=[report_path],
        failed=report.failed,
    )

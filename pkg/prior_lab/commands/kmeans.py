"""kmeans-demo: Lloyd on a class-imbalanced Gaussian mixture (or a CSV of points)"""
import argparse
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from sklearn.metrics import adjusted_rand_score

from prior_lab.commands.base import CommandResult, global_options, out_path
from prior_lab.schemas.priors import PriorSpec
from prior_lab.services.clustering import (
    ObjectiveMode,
    brute_force_optimum,
    explicit_objective,
    implicit_objective,
    lloyd,
)
from prior_lab.services.synthdata import LABEL_COLUMNS, gaussian_mixture
from prior_lab.utils.serialization import write_csv, write_json

MODES = ("explicit", "implicit", "both")


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "kmeans-demo", help="Lloyd's algorithm on imbalanced clusters", parents=[global_options()]
    )
    parser.add_argument("--input", default=None, help="CSV of points; a 'primary' column is read as labels")
    parser.add_argument("--k", type=int, default=2, help="Number of clusters")
    parser.add_argument("--mode", choices=MODES, default="both", help="Objective(s) to report")
    parser.add_argument("--brute-force", action="store_true", help="Also report the exhaustive global optimum")
    parser.add_argument("--n-init", type=int, default=1, help="k-means++ restarts")
    parser.add_argument("--classes", type=int, default=2)
    parser.add_argument("--class-tau", type=float, default=1.5, help="Power-law exponent of class sizes")
    parser.add_argument("--separation", type=float, default=4.0)
    parser.add_argument("--noise", type=float, default=1.0)
    parser.add_argument("--n", type=int, default=12)
    parser.add_argument("--d", type=int, default=2)
    parser.set_defaults(handler=run)


def read_points(path: Path) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Feature columns and, when present, the 'primary' label column"""
    frame = pd.read_csv(path, float_precision="round_trip")
    features = [c for c in frame.columns if c not in LABEL_COLUMNS]
    labels = frame["primary"].to_numpy(dtype=np.int64) if "primary" in frame.columns else None
    return frame[features].to_numpy(dtype=float), labels


def run(args: argparse.Namespace) -> CommandResult:
    if args.input:
        X, labels = read_points(Path(args.input))
        source = {"input": args.input}
    else:
        dataset = gaussian_mixture(
            classes=args.classes,
            class_distribution=PriorSpec.power_law(args.class_tau),
            N=args.n,
            d=args.d,
            separation=args.separation,
            noise_sigma=args.noise,
            seed=args.seed,
        )
        X, labels = dataset.X, dataset.primary_labels
        source = {
            "classes": args.classes,
            "class_tau": args.class_tau,
            "separation": args.separation,
            "noise": args.noise,
            "n": args.n,
            "d": args.d,
        }

    result = lloyd(X, args.k, n_init=args.n_init, seed=args.seed)
    modes = [ObjectiveMode(m) for m in MODES[:2]] if args.mode == "both" else [ObjectiveMode(args.mode)]
    objective_fns = {ObjectiveMode.EXPLICIT: explicit_objective, ObjectiveMode.IMPLICIT: implicit_objective}

    payload = {
        "objective": {m.value: objective_fns[m](X, result.partition) for m in modes},
        "assignment": result.partition.assignment,
        "centroids": result.centroids.mu,
        "iterations": result.iterations,
        "history": result.history,
        "cluster_sizes": result.partition.cluster_sizes(),
    }
    if labels is not None:
        payload["class_sizes"] = np.bincount(labels)
        payload["adjusted_rand"] = adjusted_rand_score(labels, result.partition.assignment)
    if args.brute_force:
        payload["global_optimum"] = {
            m.value: brute_force_optimum(X, args.k, m)[1] for m in modes
        }

    columns = {f"x{i}": X[:, i] for i in range(X.shape[1])}
    if labels is not None:
        columns["label"] = labels
    columns["cluster"] = result.partition.assignment
    assignments_path = write_csv(out_path(args, "kmeans_assignments.csv"), columns)
    summary_path = write_json(out_path(args, "kmeans_summary.json"), payload)

    summary = [
        f"Lloyd K={args.k} after {result.iterations} iterations: "
        + ", ".join(f"{name} {value:.6f}" for name, value in payload["objective"].items()),
        f"cluster sizes {result.partition.cluster_sizes().tolist()}",
    ]
    if labels is not None:
        summary.append(f"class sizes {np.bincount(labels).tolist()}, adjusted rand {payload['adjusted_rand']:.4f}")
    if args.brute_force:
        summary.append(
            "exhaustive optimum: " + ", ".join(f"{k} {v:.6f}" for k, v in payload["global_optimum"].items())
        )
    return CommandResult(
        config={"k": args.k, "mode": args.mode, "brute_force": args.brute_force, "n_init": args.n_init,
                "seed": args.seed, **source},
        payload=payload,
        summary=summary,
        outputs=[assignments_path, summary_path],
    )

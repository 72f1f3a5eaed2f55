"""Prometheus metrics for solver runs and numerical diagnostics."""
from pathlib import Path

from prometheus_client import (
    CollectorRegistry,
    Counter,
    Histogram,
    generate_latest,
)


# Own registry so repeated imports in tests never collide with the default one
registry = CollectorRegistry()

# Plan solves by policy kind and outcome (solved, infeasible, error)
plan_solves_total = Counter(
    "jfts_plan_solves_total",
    "Total number of policy solves",
    ["kind", "outcome"],
    registry=registry,
)

# Wall time per solve
plan_solve_seconds = Histogram(
    "jfts_plan_solve_seconds",
    "Policy solve latency in seconds",
    ["kind"],
    buckets=(0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.5, 5.0, 10.0, 30.0),
    registry=registry,
)

# Lambert-W arguments below -1/e (no real principal-branch solution)
lambert_w_domain_errors_total = Counter(
    "jfts_lambert_w_domain_errors_total",
    "Lambert-W evaluations rejected for an argument below -1/e",
    ["source"],
    registry=registry,
)

# Printed closed forms that failed back-substitution
formula_mismatch_total = Counter(
    "jfts_formula_mismatch_total",
    "Printed closed forms disagreeing with their defining identity",
    ["equation"],
    registry=registry,
)

truncation_warnings_total = Counter(
    "jfts_truncation_warnings_total",
    "Series truncation checks that failed",
    registry=registry,
)

mc_samples_total = Counter(
    "jfts_mc_samples_total",
    "SNR samples drawn by the Monte Carlo sampler",
    registry=registry,
)


def render_metrics() -> bytes:
    """
    Render the registry in Prometheus text exposition format.

    Returns:
        Encoded metrics payload
    """
    return generate_latest(registry)


def write_metrics(path: Path) -> None:
    """Write the current registry to a textfile-collector compatible file."""
    Path(path).write_bytes(render_metrics())

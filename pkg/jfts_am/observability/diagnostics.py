"""
Numerical Diagnostic Events

Structured logging for numerical events that must surface rather than
pass silently: normalization drift, series truncation, printed closed-form
mismatches and Lambert-W domain failures.
"""

from enum import Enum
from typing import Any, Optional

from jfts_am.observability.logging import logger
from jfts_am.observability import metrics


class DiagnosticEventType(str, Enum):
    """Types of numerical diagnostic events."""

    # Density
    NORMALIZATION_DRIFT = "density.normalization_drift"
    TRUNCATION = "density.truncation"

    # Printed closed forms
    FORMULA_MISMATCH = "closed_form.mismatch"
    LAMBERT_W_DOMAIN = "closed_form.lambert_w_domain"

    # Solvers
    INFEASIBLE = "solver.infeasible"
    BRACKET = "solver.bracket"
    NON_MONOTONE = "sweep.non_monotone"


class DiagnosticSeverity(str, Enum):
    """Severity levels for diagnostic events."""

    INFO = "info"
    WARNING = "warning"
    ERROR = "error"


def log_diagnostic_event(
    event_type: DiagnosticEventType,
    severity: DiagnosticSeverity,
    message: str,
    source: Optional[str] = None,
    count: int = 1,
    additional_data: Optional[dict[str, Any]] = None,
) -> None:
    """
    Log a diagnostic event and bump the matching counter.

    Args:
        event_type: Type of diagnostic event
        severity: Severity level
        message: Human-readable message
        source: Expression or component that produced the event
        count: Number of occurrences folded into this event
        additional_data: Additional context data
    """
    event_data = {
        "event_type": event_type.value,
        "severity": severity.value,
        "source": source,
        "count": count,
    }
    if additional_data:
        event_data.update(additional_data)

    if event_type is DiagnosticEventType.LAMBERT_W_DOMAIN:
        metrics.lambert_w_domain_errors_total.labels(source=source or "unknown").inc(count)
    elif event_type is DiagnosticEventType.FORMULA_MISMATCH:
        metrics.formula_mismatch_total.labels(equation=source or "unknown").inc(count)
    elif event_type is DiagnosticEventType.TRUNCATION:
        metrics.truncation_warnings_total.inc(count)

    log_method = getattr(logger, severity.value)
    log_method(message, **event_data)

"""Handover performance models for rail corridors with distributed antennas.

Analytic curves (trigger, occurrence, failure, interruption, mean RSS)
with Monte Carlo estimators, an executable handover protocol, and a CLI
that reproduces the comparison figures as CSV tables.
"""

from ._version import __version__
from .analytics import (
    MetricMode,
    PositionGrid,
    UndefinedConditionalError,
    failure_prob,
    first_crossing_masses,
    interruption_prob,
    mean_rss,
    occurrence_prob,
    trigger_prob,
)
from .channel import LinkStat, RssDistribution, path_loss, rss_distribution
from .figures import Figure, ResultTable, RunConfig, compare_schemes, run_figure
from .montecarlo import (
    Metric,
    SeedPolicy,
    estimate_first_crossing,
    estimate_pointwise,
    estimate_protocol,
)
from .protocol import HandoverState, ProtocolViolation, run_crossing, transition
from .scenario import AntennaId, CellId, Scenario, Scheme, SelectionRule

__all__ = [
    "__version__",
    "AntennaId",
    "CellId",
    "Figure",
    "HandoverState",
    "LinkStat",
    "Metric",
    "MetricMode",
    "PositionGrid",
    "ProtocolViolation",
    "ResultTable",
    "RssDistribution",
    "RunConfig",
    "Scenario",
    "Scheme",
    "SeedPolicy",
    "SelectionRule",
    "UndefinedConditionalError",
    "compare_schemes",
    "estimate_first_crossing",
    "estimate_pointwise",
    "estimate_protocol",
    "failure_prob",
    "first_crossing_masses",
    "interruption_prob",
    "mean_rss",
    "occurrence_prob",
    "path_loss",
    "rss_distribution",
    "run_crossing",
    "run_figure",
    "transition",
    "trigger_prob",
]

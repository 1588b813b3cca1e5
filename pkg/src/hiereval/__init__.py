"""Hierarchical human evaluation: tree metrics, campaigns, reports, statistics.

Evaluation metrics are decision trees of judged characteristics with early
termination; campaigns assign collected items to evaluators and journal
every judgment; reports derive composite scores, funnels, time savings,
and agreement statistics from the journal.
"""

from .campaign import (
    Campaign,
    CampaignState,
    Evaluator,
    Item,
    JudgmentRecord,
    TraversalState,
    create_campaign,
    new_state,
    replay_journal,
    replay_records,
)
from .casestudy import ReconstructionSpec, VerificationReport, reconstruct_dataset, verify_reference_counts
from .scoring import (
    EvaluatorSummary,
    FunnelReport,
    TimeSavingsReport,
    composite_outcomes,
    difficulty_distribution,
    evaluator_summaries,
    funnel,
    time_savings,
)
from .stats import (
    ContingencyTable,
    RatingsMatrix,
    TestResult,
    chi_square_2x2,
    chi_square_sf,
    cohens_kappa,
    fleiss_kappa,
    kendall_tau,
    krippendorff_alpha,
    percentage_agreement,
)
from .trees import (
    CompositeOutcome,
    MetricNode,
    MetricTree,
    RouteTarget,
    enumerate_paths,
    flat_judgment_count,
    load_bundled_tree,
    parse_tree,
    route,
    serialize_tree,
    validate_tree,
)

__version__ = "0.1.0"

__all__ = [
    "Campaign",
    "CampaignState",
    "CompositeOutcome",
    "ContingencyTable",
    "Evaluator",
    "EvaluatorSummary",
    "FunnelReport",
    "Item",
    "JudgmentRecord",
    "MetricNode",
    "MetricTree",
    "RatingsMatrix",
    "ReconstructionSpec",
    "RouteTarget",
    "TestResult",
    "TimeSavingsReport",
    "TraversalState",
    "VerificationReport",
    "chi_square_2x2",
    "chi_square_sf",
    "cohens_kappa",
    "composite_outcomes",
    "create_campaign",
    "difficulty_distribution",
    "enumerate_paths",
    "evaluator_summaries",
    "flat_judgment_count",
    "fleiss_kappa",
    "funnel",
    "kendall_tau",
    "krippendorff_alpha",
    "load_bundled_tree",
    "new_state",
    "parse_tree",
    "percentage_agreement",
    "reconstruct_dataset",
    "replay_journal",
    "replay_records",
    "route",
    "serialize_tree",
    "time_savings",
    "validate_tree",
    "verify_reference_counts",
]

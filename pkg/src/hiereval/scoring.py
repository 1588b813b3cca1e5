"""Read-side reports over judgment journals.

Everything here is a pure function of (campaign, records): composite
outcomes, per-node funnels, difficulty distributions, per-evaluator
summaries, and the hierarchical-vs-flat judgment savings.  Traversals
still in progress are excluded from all counts; only completed
evaluations are reported.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import stats
from .campaign import Campaign, CampaignState, JudgmentRecord, replay_records
from .trees import BAD, GOOD, CompositeOutcome, flat_judgment_count, route, traversal_order

REPORT_KINDS = ("funnel_input", "funnel_output", "difficulty", "evaluators", "time_savings", "chi_square")


class IncompleteCampaignError(ValueError):
    """Raised by reports that require every traversal to be terminated."""


@dataclass(frozen=True)
class FunnelEntry:
    node_id: str
    presented: int
    answer_counts: dict[str, int]
    terminated_here: int
    continued: int


@dataclass(frozen=True)
class FunnelReport:
    """Per-node presented/answer/terminate/continue counts, in traversal order."""

    tree_id: str
    tree_target: str
    entries: tuple[FunnelEntry, ...]

    def entry(self, node_id: str) -> FunnelEntry:
        for entry in self.entries:
            if entry.node_id == node_id:
                return entry
        raise KeyError(node_id)


@dataclass(frozen=True)
class EvaluatorSummary:
    """Counts and mean per-item times for one evaluator.

    Means are over terminated traversals; ``None`` flags an undefined mean
    (no terminated traversals).  The ``*_full_path`` variants average only
    traversals whose evaluation ran to a good terminal, i.e. was never cut
    short by a failing characteristic.
    """

    evaluator_id: str
    items_judged_input: int
    items_judged_output: int
    mean_elapsed_input: float | None
    mean_elapsed_output: float | None
    mean_elapsed_input_full_path: float | None
    mean_elapsed_output_full_path: float | None


@dataclass(frozen=True)
class TimeSavingsReport:
    """Judgment-count comparison against the judge-everything baseline."""

    tree_id: str
    items: int
    hierarchical_judgments: int
    flat_judgments: int
    saved: int
    saved_fraction: float


def _as_state(campaign: Campaign, records: Sequence[JudgmentRecord] | CampaignState) -> CampaignState:
    if isinstance(records, CampaignState):
        return records
    return replay_records(campaign, records)


def composite_outcomes(
    campaign: Campaign, records: Sequence[JudgmentRecord] | CampaignState
) -> dict[tuple[str, str, str], CompositeOutcome]:
    """Outcome per terminated traversal, keyed (item_id, evaluator_id, tree_target)."""
    state = _as_state(campaign, records)
    return {
        key: traversal.outcome
        for key, traversal in state.traversals.items()
        if traversal.is_terminated
    }


def funnel(
    campaign: Campaign, records: Sequence[JudgmentRecord] | CampaignState, tree_target: str
) -> FunnelReport:
    """Per-node flow counts for one metric, computed from terminated traversals."""
    state = _as_state(campaign, records)
    tree = campaign.tree_for(tree_target)
    presented = {node_id: 0 for node_id in tree.nodes}
    terminated_here = {node_id: 0 for node_id in tree.nodes}
    answer_counts = {node_id: {a: 0 for a in node.answers} for node_id, node in tree.nodes.items()}

    for traversal in state.traversals.values():
        if traversal.tree_target != tree_target or not traversal.is_terminated:
            continue
        for node_id, answer, _elapsed in traversal.history:
            presented[node_id] += 1
            answer_counts[node_id][answer] += 1
            if route(tree, node_id, answer).is_terminal:
                terminated_here[node_id] += 1

    entries = tuple(
        FunnelEntry(
            node_id=node_id,
            presented=presented[node_id],
            answer_counts=answer_counts[node_id],
            terminated_here=terminated_here[node_id],
            continued=presented[node_id] - terminated_here[node_id],
        )
        for node_id in traversal_order(tree)
    )
    return FunnelReport(tree_id=tree.id, tree_target=tree_target, entries=entries)


def difficulty_distribution(
    campaign: Campaign, records: Sequence[JudgmentRecord] | CampaignState
) -> dict[str, int]:
    """Answer counts at the input tree's difficulty node, over traversals that reached it."""
    state = _as_state(campaign, records)
    tree = campaign.input_tree
    node_id = next(
        (nid for nid in traversal_order(tree) if tree.nodes[nid].characteristic == "difficulty"),
        None,
    )
    if node_id is None:
        return {}
    counts: dict[str, int] = {}
    for traversal in state.traversals.values():
        if traversal.tree_target != "input" or not traversal.is_terminated:
            continue
        for hist_node, answer, _elapsed in traversal.history:
            if hist_node == node_id:
                counts[answer] = counts.get(answer, 0) + 1
    return counts


def evaluator_summaries(
    campaign: Campaign, records: Sequence[JudgmentRecord] | CampaignState
) -> list[EvaluatorSummary]:
    """One summary per evaluator, ordered by evaluator id."""
    state = _as_state(campaign, records)
    per_evaluator: dict[str, dict[str, list[float]]] = {
        e.id: {"input": [], "output": [], "input_full": [], "output_full": []}
        for e in campaign.evaluators
    }
    for traversal in state.traversals.values():
        if not traversal.is_terminated:
            continue
        bucket = per_evaluator[traversal.evaluator_id]
        total = traversal.total_elapsed()
        bucket[traversal.tree_target].append(total)
        if traversal.outcome.label == GOOD:
            bucket[f"{traversal.tree_target}_full"].append(total)

    def mean(values: list[float]) -> float | None:
        return sum(values) / len(values) if values else None

    return [
        EvaluatorSummary(
            evaluator_id=evaluator_id,
            items_judged_input=len(buckets["input"]),
            items_judged_output=len(buckets["output"]),
            mean_elapsed_input=mean(buckets["input"]),
            mean_elapsed_output=mean(buckets["output"]),
            mean_elapsed_input_full_path=mean(buckets["input_full"]),
            mean_elapsed_output_full_path=mean(buckets["output_full"]),
        )
        for evaluator_id, buckets in sorted(per_evaluator.items())
    ]


def time_savings(
    campaign: Campaign, records: Sequence[JudgmentRecord] | CampaignState, tree_target: str
) -> TimeSavingsReport:
    """Judgments actually taken vs the judge-every-characteristic baseline.

    Requires every traversal of the target to be terminated.  The flat
    baseline judges each node once per assigned traversal, which for
    redundancy 1 is once per item.
    """
    state = _as_state(campaign, records)
    tree = campaign.tree_for(tree_target)
    traversals = [t for t in state.traversals.values() if t.tree_target == tree_target]
    unfinished = [t for t in traversals if not t.is_terminated]
    if unfinished:
        raise IncompleteCampaignError(
            f"{len(unfinished)} {tree_target} traversals still in progress; time savings undefined"
        )
    hierarchical = sum(len(t.history) for t in traversals)
    flat = len(campaign.items) * campaign.redundancy * flat_judgment_count(tree)
    saved = flat - hierarchical
    return TimeSavingsReport(
        tree_id=tree.id,
        items=len(campaign.items),
        hierarchical_judgments=hierarchical,
        flat_judgments=flat,
        saved=saved,
        saved_fraction=saved / flat if flat else 0.0,
    )


def composite_cross_table(
    campaign: Campaign, records: Sequence[JudgmentRecord] | CampaignState
) -> stats.ContingencyTable:
    """2x2 cross-counts of output vs input outcomes over fully judged pairs.

    Rows: output good/bad; columns: input good/bad.  Only (item, evaluator)
    pairs whose input and output traversals are both terminated are counted.
    """
    outcomes = composite_outcomes(campaign, records)
    cells = {"a": 0, "b": 0, "c": 0, "d": 0}
    for (item_id, evaluator_id, tree_target), outcome in outcomes.items():
        if tree_target != "input":
            continue
        output_outcome = outcomes.get((item_id, evaluator_id, "output"))
        if output_outcome is None:
            continue
        input_good = outcome.label == GOOD
        output_good = output_outcome.label == GOOD
        if output_good and input_good:
            cells["a"] += 1
        elif output_good:
            cells["b"] += 1
        elif input_good:
            cells["c"] += 1
        else:
            cells["d"] += 1
    return stats.ContingencyTable(cells["a"], cells["b"], cells["c"], cells["d"])


# ---------------------------------------------------------------------------
# Report rendering shared by the CLI and the HTTP service.
# ---------------------------------------------------------------------------


def render_report(
    campaign: Campaign, records: Sequence[JudgmentRecord] | CampaignState, kind: str
) -> dict:
    """Structured-object form of one report kind (see REPORT_KINDS)."""
    state = _as_state(campaign, records)
    if kind in ("funnel_input", "funnel_output"):
        target = "input" if kind == "funnel_input" else "output"
        report = funnel(campaign, state, target)
        return {
            "kind": kind,
            "tree_id": report.tree_id,
            "tree_target": report.tree_target,
            "entries": [
                {
                    "node_id": entry.node_id,
                    "presented": entry.presented,
                    "answer_counts": entry.answer_counts,
                    "terminated_here": entry.terminated_here,
                    "continued": entry.continued,
                }
                for entry in report.entries
            ],
        }
    if kind == "difficulty":
        distribution = difficulty_distribution(campaign, state)
        return {"kind": kind, "counts": distribution, "total": sum(distribution.values())}
    if kind == "evaluators":
        return {
            "kind": kind,
            "evaluators": [
                {
                    "evaluator_id": s.evaluator_id,
                    "items_judged_input": s.items_judged_input,
                    "items_judged_output": s.items_judged_output,
                    "mean_elapsed_input": s.mean_elapsed_input,
                    "mean_elapsed_output": s.mean_elapsed_output,
                    "mean_elapsed_input_full_path": s.mean_elapsed_input_full_path,
                    "mean_elapsed_output_full_path": s.mean_elapsed_output_full_path,
                }
                for s in evaluator_summaries(campaign, state)
            ],
        }
    if kind == "time_savings":
        sides = {}
        for target in ("input", "output"):
            try:
                report = time_savings(campaign, state, target)
                sides[target] = {
                    "tree_id": report.tree_id,
                    "items": report.items,
                    "hierarchical_judgments": report.hierarchical_judgments,
                    "flat_judgments": report.flat_judgments,
                    "saved": report.saved,
                    "saved_fraction": report.saved_fraction,
                }
            except IncompleteCampaignError as exc:
                sides[target] = {"error": str(exc)}
        return {"kind": kind, "input": sides["input"], "output": sides["output"]}
    if kind == "chi_square":
        table = composite_cross_table(campaign, state)
        payload: dict = {
            "kind": kind,
            "table": {"a": table.a, "b": table.b, "c": table.c, "d": table.d, "n": table.n},
        }
        try:
            result = stats.chi_square_2x2(table)
        except ValueError as exc:
            payload["error"] = str(exc)
            return payload
        payload.update(
            {
                "statistic": result.statistic,
                "p_value": result.p_value,
                "dof": result.dof,
                "expected": [list(row) for row in result.expected],
                "yates_correction": result.yates_correction,
                "low_expected_warning": result.low_expected_warning,
            }
        )
        return payload
    raise ValueError(f"unknown report kind {kind!r}; expected one of {REPORT_KINDS}")


def render_report_text(payload: dict) -> str:
    """Aligned plain-text table for a report payload."""
    kind = payload["kind"]
    lines: list[str] = []
    if kind in ("funnel_input", "funnel_output"):
        lines.append(f"{kind}  tree={payload['tree_id']}")
        header = f"{'node':<24}{'presented':>10}{'stopped':>9}{'continued':>11}  answers"
        lines.append(header)
        lines.append("-" * len(header))
        for entry in payload["entries"]:
            answers = " ".join(f"{a}={c}" for a, c in entry["answer_counts"].items())
            lines.append(
                f"{entry['node_id']:<24}{entry['presented']:>10}{entry['terminated_here']:>9}"
                f"{entry['continued']:>11}  {answers}"
            )
    elif kind == "difficulty":
        lines.append(f"difficulty distribution (total {payload['total']})")
        for level, count in sorted(payload["counts"].items()):
            lines.append(f"  {level:<12}{count:>6}")
    elif kind == "evaluators":
        header = f"{'evaluator':<16}{'in':>5}{'out':>5}{'mean_in':>10}{'mean_out':>10}"
        lines.append(header)
        lines.append("-" * len(header))
        for row in payload["evaluators"]:
            mean_in = "-" if row["mean_elapsed_input"] is None else f"{row['mean_elapsed_input']:.2f}"
            mean_out = "-" if row["mean_elapsed_output"] is None else f"{row['mean_elapsed_output']:.2f}"
            lines.append(
                f"{row['evaluator_id']:<16}{row['items_judged_input']:>5}"
                f"{row['items_judged_output']:>5}{mean_in:>10}{mean_out:>10}"
            )
    elif kind == "time_savings":
        for target in ("input", "output"):
            side = payload[target]
            if "error" in side:
                lines.append(f"{target}: {side['error']}")
            else:
                lines.append(
                    f"{target}: saved {side['saved']} of {side['flat_judgments']} judgments "
                    f"({side['saved_fraction'] * 100:.1f}%), hierarchical {side['hierarchical_judgments']}"
                )
    elif kind == "chi_square":
        table = payload["table"]
        lines.append(f"contingency table: a={table['a']} b={table['b']} c={table['c']} d={table['d']} n={table['n']}")
        if "error" in payload:
            lines.append(f"test undefined: {payload['error']}")
        else:
            lines.append(
                f"chi_square={payload['statistic']:.4f}  p={payload['p_value']:.4f}  dof={payload['dof']}"
            )
            if payload["low_expected_warning"]:
                lines.append("warning: an expected cell count is below 5")
    else:
        raise ValueError(f"unknown report kind {kind!r}")
    return "\n".join(lines)

"""Two-phase evaluation campaigns.

A campaign pairs an input metric and an output metric with a set of
collected items and a roster of evaluators.  Each assigned (item,
evaluator) pair owns two traversals, input first, then output; every
submitted judgment is appended to a journal from which the full campaign
state can be replayed deterministically.

Concurrency contract: one writer per campaign journal.  All state mutation
goes through ``CampaignState``; callers that share a state across threads
must serialize submissions (see server module).  Reads over a replayed
snapshot are safe anywhere.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from hashlib import sha256
from typing import Iterable, Sequence

from . import _canon
from .trees import (
    CompositeOutcome,
    MetricNode,
    MetricTree,
    TreeSemanticError,
    UnknownAnswerError,
    route,
    validate_tree,
)

IN_PROGRESS = "in_progress"
TERMINATED = "terminated"

JOURNAL_FIELDS = (
    "campaign_id",
    "item_id",
    "evaluator_id",
    "tree_target",
    "node_id",
    "answer",
    "elapsed_seconds",
    "wall_time",
    "sequence_no",
)


class CampaignError(ValueError):
    """Base class for campaign configuration and submission problems."""


class UnknownEvaluatorError(CampaignError):
    pass


class UnknownTraversalError(CampaignError):
    """No traversal exists at the given (item, evaluator, target)."""


class StaleNodeError(CampaignError):
    """Submitted node is not the traversal's current node (duplicate or out-of-order client)."""

    def __init__(self, expected: str, got: str):
        self.expected = expected
        self.got = got
        super().__init__(f"stale node: traversal is at {expected!r}, submission names {got!r}")


class AlreadyTerminatedError(CampaignError):
    pass


class JournalError(ValueError):
    """Corrupt or inconsistent journal; points at the offending line."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"journal line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Item:
    """One collected test case: the posed question and the system's response."""

    id: str
    input_text: str
    output_text: str
    explanation_text: str | None = None
    source_tag: str | None = None

    def __post_init__(self) -> None:
        if not self.id or not self.input_text or not self.output_text:
            raise CampaignError("item id, input_text and output_text must be non-empty")


@dataclass(frozen=True)
class Evaluator:
    id: str
    display_name: str
    token: str

    def __post_init__(self) -> None:
        if not self.id or not self.token:
            raise CampaignError("evaluator id and token must be non-empty")


@dataclass(frozen=True)
class JudgmentRecord:
    """One evaluator's answer to one node for one item; the journal unit."""

    campaign_id: str
    item_id: str
    evaluator_id: str
    tree_target: str
    node_id: str
    answer: str
    elapsed_seconds: float
    wall_time: str
    sequence_no: int


@dataclass
class TraversalState:
    """Position of one (item, evaluator) pair inside one metric."""

    item_id: str
    evaluator_id: str
    tree_target: str
    current_node: str | None
    history: list[tuple[str, str, float]] = field(default_factory=list)
    status: str = IN_PROGRESS
    outcome: CompositeOutcome | None = None

    @property
    def is_terminated(self) -> bool:
        return self.status == TERMINATED

    def total_elapsed(self) -> float:
        return sum(elapsed for _, _, elapsed in self.history)


@dataclass
class Campaign:
    """Validated campaign configuration plus the derived assignment table.

    ``assignments`` maps evaluator id to that evaluator's items in
    presentation order; it is a pure function of the roster, the sorted
    item ids, redundancy, and ``shuffle_seed``.
    """

    id: str
    input_tree: MetricTree
    output_tree: MetricTree
    items: list[Item]
    evaluators: list[Evaluator]
    redundancy: int = 1
    shuffle_seed: int = 0
    assignments: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def tree_for(self, tree_target: str) -> MetricTree:
        if tree_target == "input":
            return self.input_tree
        if tree_target == "output":
            return self.output_tree
        raise CampaignError(f"tree_target must be 'input' or 'output', got {tree_target!r}")

    def item(self, item_id: str) -> Item:
        try:
            return self._items_by_id[item_id]
        except AttributeError:
            self._items_by_id = {item.id: item for item in self.items}
            return self.item(item_id)

    def evaluator(self, evaluator_id: str) -> Evaluator:
        for evaluator in self.evaluators:
            if evaluator.id == evaluator_id:
                return evaluator
        raise UnknownEvaluatorError(f"no evaluator {evaluator_id!r} in campaign {self.id!r}")

    def evaluator_by_token(self, token: str) -> Evaluator | None:
        for evaluator in self.evaluators:
            if evaluator.token == token:
                return evaluator
        return None


def create_campaign(
    campaign_id: str,
    input_tree: MetricTree,
    output_tree: MetricTree,
    items: Sequence[Item],
    evaluators: Sequence[Evaluator],
    redundancy: int = 1,
    shuffle_seed: int = 0,
) -> Campaign:
    """Validate configuration and compute the deterministic assignment table.

    Assignment: items are sorted by id and dealt round-robin, ``redundancy``
    consecutive evaluators per item, which balances loads within one item.
    Presentation order: each evaluator's assigned items are shuffled by a
    Mersenne Twister seeded with ``"<shuffle_seed>:<evaluator_id>"``, so
    orders are stable across runs and differ between evaluators.
    """
    for tree, expected in ((input_tree, "input"), (output_tree, "output")):
        violations = validate_tree(tree)
        if violations:
            raise TreeSemanticError(violations)
        if tree.target != expected:
            raise CampaignError(f"tree {tree.id!r} has target {tree.target!r}, expected {expected!r}")
    if not items:
        raise CampaignError("campaign needs at least one item")
    item_ids = [item.id for item in items]
    if len(set(item_ids)) != len(item_ids):
        dupes = sorted({i for i in item_ids if item_ids.count(i) > 1})
        raise CampaignError(f"duplicate item ids: {dupes}")
    evaluator_ids = [e.id for e in evaluators]
    if len(set(evaluator_ids)) != len(evaluator_ids):
        raise CampaignError("duplicate evaluator ids")
    tokens = [e.token for e in evaluators]
    if len(set(tokens)) != len(tokens):
        raise CampaignError("evaluator tokens must be unique within a campaign")
    if redundancy < 1:
        raise CampaignError("redundancy must be at least 1")
    if redundancy > len(evaluators):
        raise CampaignError(f"redundancy {redundancy} exceeds evaluator count {len(evaluators)}")

    assigned: dict[str, list[str]] = {e.id: [] for e in evaluators}
    n_evaluators = len(evaluators)
    for index, item_id in enumerate(sorted(item_ids)):
        for offset in range(redundancy):
            evaluator = evaluators[(index * redundancy + offset) % n_evaluators]
            assigned[evaluator.id].append(item_id)

    assignments: dict[str, tuple[str, ...]] = {}
    for evaluator in evaluators:
        order = list(assigned[evaluator.id])
        random.Random(f"{shuffle_seed}:{evaluator.id}").shuffle(order)
        assignments[evaluator.id] = tuple(order)

    return Campaign(
        id=campaign_id,
        input_tree=input_tree,
        output_tree=output_tree,
        items=list(items),
        evaluators=list(evaluators),
        redundancy=redundancy,
        shuffle_seed=shuffle_seed,
        assignments=assignments,
    )


class CampaignState:
    """Mutable traversal state of a campaign plus its in-memory journal copy.

    Constructed fresh (all traversals at their tree's root) by
    ``new_state`` or rebuilt from a journal by ``replay_journal``.
    """

    def __init__(self, campaign: Campaign):
        self.campaign = campaign
        self.records: list[JudgmentRecord] = []
        self.traversals: dict[tuple[str, str, str], TraversalState] = {}
        for evaluator_id, item_ids in campaign.assignments.items():
            for item_id in item_ids:
                for tree_target in ("input", "output"):
                    tree = campaign.tree_for(tree_target)
                    self.traversals[(item_id, evaluator_id, tree_target)] = TraversalState(
                        item_id=item_id,
                        evaluator_id=evaluator_id,
                        tree_target=tree_target,
                        current_node=tree.root,
                    )

    @property
    def last_sequence_no(self) -> int:
        return self.records[-1].sequence_no if self.records else 0

    def _work_order(self, evaluator_id: str) -> list[TraversalState]:
        if evaluator_id not in self.campaign.assignments:
            raise UnknownEvaluatorError(f"no evaluator {evaluator_id!r} in campaign {self.campaign.id!r}")
        order: list[TraversalState] = []
        for item_id in self.campaign.assignments[evaluator_id]:
            for tree_target in ("input", "output"):
                order.append(self.traversals[(item_id, evaluator_id, tree_target)])
        return order

    def next_task(self, evaluator_id: str) -> tuple[Item, str, MetricNode] | None:
        """Earliest unfinished traversal for this evaluator, input side first."""
        for traversal in self._work_order(evaluator_id):
            if traversal.status == IN_PROGRESS:
                tree = self.campaign.tree_for(traversal.tree_target)
                return (
                    self.campaign.item(traversal.item_id),
                    traversal.tree_target,
                    tree.node(traversal.current_node),
                )
        return None

    def progress(self, evaluator_id: str) -> dict[str, int]:
        work = self._work_order(evaluator_id)
        items_total = len(self.campaign.assignments[evaluator_id])
        terminated = [t for t in work if t.is_terminated]
        done_items = sum(
            1
            for item_id in self.campaign.assignments[evaluator_id]
            if self.traversals[(item_id, evaluator_id, "input")].is_terminated
            and self.traversals[(item_id, evaluator_id, "output")].is_terminated
        )
        return {
            "items_total": items_total,
            "items_done": done_items,
            "traversals_total": len(work),
            "traversals_remaining": len(work) - len(terminated),
        }

    def check_submission(
        self, evaluator_id: str, item_id: str, tree_target: str, node_id: str, answer: str
    ) -> TraversalState:
        """Validate all submission preconditions without mutating anything."""
        self.campaign.evaluator(evaluator_id)
        tree = self.campaign.tree_for(tree_target)
        traversal = self.traversals.get((item_id, evaluator_id, tree_target))
        if traversal is None:
            raise UnknownTraversalError(
                f"no {tree_target} traversal of item {item_id!r} is assigned to evaluator {evaluator_id!r}"
            )
        if traversal.is_terminated:
            raise AlreadyTerminatedError(
                f"{tree_target} traversal of item {item_id!r} by {evaluator_id!r} is already terminated"
            )
        if traversal.current_node != node_id:
            raise StaleNodeError(expected=traversal.current_node, got=node_id)
        node = tree.node(node_id)
        if answer not in node.answers:
            raise UnknownAnswerError(f"node {node_id!r} accepts {node.answers}, got {answer!r}")
        return traversal

    def make_record(
        self,
        evaluator_id: str,
        item_id: str,
        tree_target: str,
        node_id: str,
        answer: str,
        elapsed_seconds: float,
        wall_time: str | None = None,
    ) -> JudgmentRecord:
        """Build (but do not apply) the next journal record for a valid submission."""
        if elapsed_seconds < 0:
            raise CampaignError(f"elapsed_seconds must be non-negative, got {elapsed_seconds}")
        self.check_submission(evaluator_id, item_id, tree_target, node_id, answer)
        return JudgmentRecord(
            campaign_id=self.campaign.id,
            item_id=item_id,
            evaluator_id=evaluator_id,
            tree_target=tree_target,
            node_id=node_id,
            answer=answer,
            elapsed_seconds=float(elapsed_seconds),
            wall_time=wall_time if wall_time is not None else utc_now_text(),
            sequence_no=self.last_sequence_no + 1,
        )

    def apply_record(self, record: JudgmentRecord) -> TraversalState:
        """Append one record: advance or terminate the addressed traversal."""
        if record.campaign_id != self.campaign.id:
            raise JournalError(
                f"record belongs to campaign {record.campaign_id!r}, state is {self.campaign.id!r}"
            )
        if record.sequence_no != self.last_sequence_no + 1:
            raise JournalError(
                f"sequence_no {record.sequence_no} after {self.last_sequence_no} (gap or regression)"
            )
        if record.elapsed_seconds < 0:
            raise CampaignError("elapsed_seconds must be non-negative")
        traversal = self.check_submission(
            record.evaluator_id, record.item_id, record.tree_target, record.node_id, record.answer
        )
        tree = self.campaign.tree_for(record.tree_target)
        target = route(tree, record.node_id, record.answer)
        traversal.history.append((record.node_id, record.answer, record.elapsed_seconds))
        if target.is_terminal:
            traversal.current_node = None
            traversal.status = TERMINATED
            traversal.outcome = target.outcome
        else:
            traversal.current_node = target.node_id
        self.records.append(record)
        return traversal

    def submit_judgment(
        self,
        evaluator_id: str,
        item_id: str,
        tree_target: str,
        node_id: str,
        answer: str,
        elapsed_seconds: float,
        wall_time: str | None = None,
    ) -> TraversalState:
        """Record one judgment and return the updated traversal state."""
        record = self.make_record(
            evaluator_id, item_id, tree_target, node_id, answer, elapsed_seconds, wall_time
        )
        return self.apply_record(record)

    def digest(self) -> str:
        """Stable fingerprint of all traversal states (for replay-determinism checks)."""
        payload = {
            f"{item}|{evaluator}|{target}": {
                "current": t.current_node,
                "history": [[n, a, e] for n, a, e in t.history],
                "status": t.status,
                "outcome": t.outcome.as_dict() if t.outcome else None,
            }
            for (item, evaluator, target), t in self.traversals.items()
        }
        return sha256(_canon.dumps(payload).encode("utf-8")).hexdigest()


def new_state(campaign: Campaign) -> CampaignState:
    return CampaignState(campaign)


def utc_now_text() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# ---------------------------------------------------------------------------
# Journal wire format: one canonical JSON object per line, fields exactly
# those of JudgmentRecord, numbers positional (no exponent).
# ---------------------------------------------------------------------------


def record_to_line(record: JudgmentRecord) -> str:
    return _canon.dumps(
        {
            "campaign_id": record.campaign_id,
            "item_id": record.item_id,
            "evaluator_id": record.evaluator_id,
            "tree_target": record.tree_target,
            "node_id": record.node_id,
            "answer": record.answer,
            "elapsed_seconds": record.elapsed_seconds,
            "wall_time": record.wall_time,
            "sequence_no": record.sequence_no,
        }
    )


def parse_journal_line(line: str, line_no: int) -> JudgmentRecord:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise JournalError(f"not valid JSON: {exc.msg}", line_no) from None
    if not isinstance(raw, dict):
        raise JournalError("record must be a JSON object", line_no)
    missing = [f for f in JOURNAL_FIELDS if f not in raw]
    if missing:
        raise JournalError(f"missing fields {missing}", line_no)
    extra = [f for f in raw if f not in JOURNAL_FIELDS]
    if extra:
        raise JournalError(f"unexpected fields {extra}", line_no)
    if not isinstance(raw["sequence_no"], int) or isinstance(raw["sequence_no"], bool):
        raise JournalError("sequence_no must be an integer", line_no)
    if not isinstance(raw["elapsed_seconds"], (int, float)) or isinstance(raw["elapsed_seconds"], bool):
        raise JournalError("elapsed_seconds must be a number", line_no)
    if raw["elapsed_seconds"] < 0:
        raise JournalError("elapsed_seconds must be non-negative", line_no)
    for text_field in ("campaign_id", "item_id", "evaluator_id", "tree_target", "node_id", "answer", "wall_time"):
        if not isinstance(raw[text_field], str):
            raise JournalError(f"{text_field} must be a string", line_no)
    return JudgmentRecord(
        campaign_id=raw["campaign_id"],
        item_id=raw["item_id"],
        evaluator_id=raw["evaluator_id"],
        tree_target=raw["tree_target"],
        node_id=raw["node_id"],
        answer=raw["answer"],
        elapsed_seconds=float(raw["elapsed_seconds"]),
        wall_time=raw["wall_time"],
        sequence_no=raw["sequence_no"],
    )


def parse_journal(lines: Iterable[str]) -> list[JudgmentRecord]:
    records = []
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        records.append(parse_journal_line(line, line_no))
    return records


def read_journal(path: str) -> list[JudgmentRecord]:
    with open(path, encoding="utf-8") as handle:
        return parse_journal(handle)


def write_journal(path: str, records: Iterable[JudgmentRecord]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(record_to_line(record))
            handle.write("\n")


def append_journal(path: str, record: JudgmentRecord) -> None:
    with open(path, "a", encoding="utf-8") as handle:
        handle.write(record_to_line(record))
        handle.write("\n")


def replay_records(campaign: Campaign, records: Sequence[JudgmentRecord]) -> CampaignState:
    """Rebuild campaign state from parsed records; identical to the live state.

    Errors carry the 1-based ordinal of the offending record.
    """
    state = new_state(campaign)
    for index, record in enumerate(records, start=1):
        try:
            state.apply_record(record)
        except JournalError as exc:
            if exc.line_no is None:
                raise JournalError(str(exc), index) from exc
            raise
        except (CampaignError, ValueError) as exc:
            raise JournalError(str(exc), index) from exc
    return state


def replay_journal(campaign: Campaign, lines: Iterable[str]) -> CampaignState:
    """Parse and replay a journal document (sequence of lines)."""
    return replay_records(campaign, parse_journal(lines))


def records_up_to(records: Sequence[JudgmentRecord], as_of: int | None) -> list[JudgmentRecord]:
    """Snapshot selection: records with sequence_no <= as_of (all when as_of is None)."""
    if as_of is None:
        return list(records)
    return [r for r in records if r.sequence_no <= as_of]


def with_sequence(record: JudgmentRecord, sequence_no: int) -> JudgmentRecord:
    return replace(record, sequence_no=sequence_no)

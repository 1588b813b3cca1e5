"""Hierarchical evaluation metrics as early-terminating decision trees.

A metric is a rooted, acyclic routing graph over evaluation characteristics.
Each node asks one question about the item under judgment; every declared
answer either routes to another node or terminates the traversal with a
binary composite outcome (good/bad).  A bad outcome records which
characteristic failed and with which answer, so downstream reports can
explain every rejection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterator

from . import _canon

GOOD = "good"
BAD = "bad"
OUTCOME_LABELS = (GOOD, BAD)
TARGETS = ("input", "output")

#: Token type for a categorical verdict at one node (e.g. "yes", "easy").
AnswerValue = str


class TreeError(ValueError):
    """Base class for metric-tree definition problems."""


class TreeSyntaxError(TreeError):
    """The document is not well-formed; carries the offending position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class TreeSemanticError(TreeError):
    """A well-formed document that violates a tree invariant."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(v.message for v in violations))


class UnknownNodeError(TreeError):
    pass


class UnknownAnswerError(TreeError):
    pass


@dataclass(frozen=True)
class Violation:
    """One named invariant breach, pointing at the offending node."""

    kind: str  # dangling_route | cycle | unreachable | incomplete_routing | ...
    node_id: str | None
    message: str


@dataclass(frozen=True)
class CompositeOutcome:
    """Binary verdict of a finished traversal.

    ``failed_at``/``failing_answer`` are populated only for bad outcomes and
    name the characteristic (node) and answer that stopped the evaluation.
    """

    label: str
    failed_at: str | None = None
    failing_answer: AnswerValue | None = None

    def __post_init__(self) -> None:
        if self.label not in OUTCOME_LABELS:
            raise ValueError(f"outcome label must be one of {OUTCOME_LABELS}, got {self.label!r}")
        if self.label == GOOD and (self.failed_at is not None or self.failing_answer is not None):
            raise ValueError("good outcome must not carry failure details")
        if self.label == BAD and self.failed_at is None:
            raise ValueError("bad outcome must name the failing node")

    def as_dict(self) -> dict:
        if self.label == GOOD:
            return {"label": GOOD}
        return {"label": BAD, "failed_at": self.failed_at, "failing_answer": self.failing_answer}


@dataclass(frozen=True)
class RouteTarget:
    """Where one (node, answer) edge leads: another node, or a terminal outcome."""

    node_id: str | None = None
    outcome: CompositeOutcome | None = None

    def __post_init__(self) -> None:
        if (self.node_id is None) == (self.outcome is None):
            raise ValueError("route target must have exactly one of node_id/outcome")

    @property
    def kind(self) -> str:
        return "node" if self.node_id is not None else "terminal"

    @property
    def is_terminal(self) -> bool:
        return self.outcome is not None


@dataclass
class MetricNode:
    """One evaluated characteristic: a prompt, its answers, and their routes.

    ``answer_help`` optionally carries a short rubric line per answer token
    (rendered by interactive clients).  ``uses_explanation`` marks nodes that
    judge the item's explanation text rather than its primary output, so
    clients know when to display it.
    """

    id: str
    prompt: str
    characteristic: str
    answers: list[AnswerValue]
    routing: dict[AnswerValue, RouteTarget]
    answer_help: dict[AnswerValue, str] = field(default_factory=dict)
    uses_explanation: bool = False


@dataclass
class MetricTree:
    """A validated evaluation metric.

    Immutable by convention after successful validation; safe to share
    across threads.  ``target`` says whether the metric judges the system's
    inputs or outputs.
    """

    id: str
    name: str
    target: str
    root: str
    nodes: dict[str, MetricNode]
    notes: str = ""

    def node(self, node_id: str) -> MetricNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(f"tree {self.id!r} has no node {node_id!r}") from None


def route(tree: MetricTree, node_id: str, answer: AnswerValue) -> RouteTarget:
    """Pure routing query: where does `answer` at `node_id` lead."""
    node = tree.node(node_id)
    try:
        return node.routing[answer]
    except KeyError:
        raise UnknownAnswerError(
            f"node {node_id!r} accepts {node.answers}, got {answer!r}"
        ) from None


def flat_judgment_count(tree: MetricTree) -> int:
    """Judgments per item under a non-hierarchical design: every node, once."""
    return len(tree.nodes)


def enumerate_paths(tree: MetricTree) -> list[tuple[tuple[AnswerValue, ...], CompositeOutcome]]:
    """All root-to-terminal answer sequences, in depth-first document order."""
    paths: list[tuple[tuple[AnswerValue, ...], CompositeOutcome]] = []

    def walk(node_id: str, prefix: tuple[AnswerValue, ...]) -> None:
        node = tree.nodes[node_id]
        for answer in node.answers:
            target = node.routing[answer]
            if target.is_terminal:
                paths.append((prefix + (answer,), target.outcome))
            else:
                walk(target.node_id, prefix + (answer,))

    walk(tree.root, ())
    return paths


def traversal_order(tree: MetricTree) -> list[str]:
    """Node ids in depth-first first-visit order from the root."""
    seen: list[str] = []
    seen_set: set[str] = set()

    def walk(node_id: str) -> None:
        if node_id in seen_set:
            return
        seen_set.add(node_id)
        seen.append(node_id)
        for answer in tree.nodes[node_id].answers:
            target = tree.nodes[node_id].routing[answer]
            if not target.is_terminal:
                walk(target.node_id)

    walk(tree.root)
    return seen


def validate_tree(tree: MetricTree) -> list[Violation]:
    """Check every tree invariant; empty list means the tree is valid."""
    violations: list[Violation] = []

    if tree.target not in TARGETS:
        violations.append(Violation("bad_target", None, f"target must be one of {TARGETS}, got {tree.target!r}"))
    if tree.root not in tree.nodes:
        violations.append(Violation("missing_root", tree.root, f"root {tree.root!r} is not a node"))

    for node_id, node in tree.nodes.items():
        if node.id != node_id:
            violations.append(Violation("id_mismatch", node_id, f"node keyed {node_id!r} declares id {node.id!r}"))
        if len(node.answers) < 2:
            violations.append(Violation("too_few_answers", node_id, f"node {node_id!r} needs at least two answers"))
        seen_answers: set[str] = set()
        for answer in node.answers:
            if not answer:
                violations.append(Violation("empty_answer", node_id, f"node {node_id!r} has an empty answer token"))
            if answer in seen_answers:
                violations.append(Violation("duplicate_answer", node_id, f"node {node_id!r} repeats answer {answer!r}"))
            seen_answers.add(answer)

        missing = [a for a in node.answers if a not in node.routing]
        if missing:
            violations.append(
                Violation("incomplete_routing", node_id, f"node {node_id!r} has no route for answers {missing}")
            )
        extra = [a for a in node.routing if a not in seen_answers]
        if extra:
            violations.append(
                Violation("extra_routing", node_id, f"node {node_id!r} routes undeclared answers {extra}")
            )
        for answer, target in node.routing.items():
            if target.is_terminal:
                outcome = target.outcome
                if outcome.label == BAD and (outcome.failed_at != node_id or outcome.failing_answer != answer):
                    violations.append(
                        Violation(
                            "bad_terminal",
                            node_id,
                            f"bad terminal at {node_id!r}/{answer!r} must record that node and answer",
                        )
                    )
            elif target.node_id not in tree.nodes:
                violations.append(
                    Violation(
                        "dangling_route",
                        node_id,
                        f"dangling route: node {node_id!r} answer {answer!r} points to unknown id {target.node_id!r}",
                    )
                )

    if violations:
        # structural problems can confuse the graph checks below
        structural = {"missing_root", "dangling_route", "incomplete_routing", "id_mismatch"}
        if any(v.kind in structural for v in violations):
            return violations

    violations.extend(_cycle_violations(tree))
    if not any(v.kind == "cycle" for v in violations):
        reachable = set(traversal_order(tree))
        for node_id in tree.nodes:
            if node_id not in reachable:
                violations.append(
                    Violation("unreachable", node_id, f"node {node_id!r} is not reachable from root {tree.root!r}")
                )
    return violations


def _cycle_violations(tree: MetricTree) -> list[Violation]:
    WHITE, GREY, BLACK = 0, 1, 2
    color = {node_id: WHITE for node_id in tree.nodes}
    stack: list[str] = []

    def visit(node_id: str) -> list[str] | None:
        color[node_id] = GREY
        stack.append(node_id)
        for answer in tree.nodes[node_id].answers:
            target = tree.nodes[node_id].routing.get(answer)
            if target is None or target.is_terminal:
                continue
            nxt = target.node_id
            if color[nxt] == GREY:
                return stack[stack.index(nxt):] + [nxt]
            if color[nxt] == WHITE:
                found = visit(nxt)
                if found:
                    return found
        stack.pop()
        color[node_id] = BLACK
        return None

    for node_id in tree.nodes:
        if color[node_id] == WHITE:
            cycle = visit(node_id)
            if cycle:
                members = sorted(set(cycle))
                return [Violation("cycle", members[0], f"cycle through nodes {members}")]
    return []


# ---------------------------------------------------------------------------
# Tree-definition file format (one JSON document per tree)
#
# {
#   "id": "...", "name": "...", "target": "input"|"output", "root": "<node id>",
#   "notes": "...",                               (optional)
#   "nodes": {
#     "<id>": {
#       "prompt": "...", "characteristic": "...",
#       "answers": ["yes", "no"],
#       "routing": {"yes": {"node": "<id>"}, "no": {"terminal": "bad"}},
#       "answer_help": {"yes": "..."},            (optional)
#       "uses_explanation": true                  (optional)
#     }
#   }
# }
# ---------------------------------------------------------------------------


def parse_tree(document: str) -> MetricTree:
    """Parse and fully validate one tree-definition document."""
    tree = decode_tree(document)
    violations = validate_tree(tree)
    if violations:
        raise TreeSemanticError(violations)
    return tree


def decode_tree(document: str) -> MetricTree:
    """Parse a document without checking tree invariants (see validate_tree)."""
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise TreeSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    return _decode_tree(raw)


def _decode_tree(raw: object) -> MetricTree:
    def fail(message: str) -> TreeSyntaxError:
        return TreeSyntaxError(message)

    if not isinstance(raw, dict):
        raise fail("tree document must be a JSON object")
    for key in ("id", "name", "target", "root", "nodes"):
        if key not in raw:
            raise fail(f"tree document is missing field {key!r}")
    if not isinstance(raw["nodes"], dict):
        raise fail("field 'nodes' must be an object")

    nodes: dict[str, MetricNode] = {}
    for node_id, node_raw in raw["nodes"].items():
        if not isinstance(node_raw, dict):
            raise fail(f"node {node_id!r} must be an object")
        for key in ("prompt", "characteristic", "answers", "routing"):
            if key not in node_raw:
                raise fail(f"node {node_id!r} is missing field {key!r}")
        answers = node_raw["answers"]
        if not isinstance(answers, list) or not all(isinstance(a, str) for a in answers):
            raise fail(f"node {node_id!r}: 'answers' must be a list of strings")
        routing_raw = node_raw["routing"]
        if not isinstance(routing_raw, dict):
            raise fail(f"node {node_id!r}: 'routing' must be an object")
        routing: dict[str, RouteTarget] = {}
        for answer, entry in routing_raw.items():
            routing[answer] = _decode_route(node_id, answer, entry)
        nodes[node_id] = MetricNode(
            id=str(node_raw.get("id", node_id)),
            prompt=str(node_raw["prompt"]),
            characteristic=str(node_raw["characteristic"]),
            answers=list(answers),
            routing=routing,
            answer_help=dict(node_raw.get("answer_help", {})),
            uses_explanation=bool(node_raw.get("uses_explanation", False)),
        )

    return MetricTree(
        id=str(raw["id"]),
        name=str(raw["name"]),
        target=str(raw["target"]),
        root=str(raw["root"]),
        nodes=nodes,
        notes=str(raw.get("notes", "")),
    )


def _decode_route(node_id: str, answer: str, entry: object) -> RouteTarget:
    if not isinstance(entry, dict) or len(entry) != 1:
        raise TreeSyntaxError(
            f"node {node_id!r} answer {answer!r}: route must be {{'node': id}} or {{'terminal': label}}"
        )
    if "node" in entry:
        return RouteTarget(node_id=str(entry["node"]))
    if "terminal" in entry:
        label = entry["terminal"]
        if label == GOOD:
            return RouteTarget(outcome=CompositeOutcome(GOOD))
        if label == BAD:
            return RouteTarget(outcome=CompositeOutcome(BAD, failed_at=node_id, failing_answer=answer))
        raise TreeSyntaxError(f"node {node_id!r} answer {answer!r}: unknown terminal label {label!r}")
    raise TreeSyntaxError(f"node {node_id!r} answer {answer!r}: route must name 'node' or 'terminal'")


def serialize_tree(tree: MetricTree) -> str:
    """Canonical serialization: sorted node ids, canonical JSON, one trailing newline."""
    doc: dict[str, object] = {
        "id": tree.id,
        "name": tree.name,
        "target": tree.target,
        "root": tree.root,
        "nodes": {node_id: _encode_node(tree.nodes[node_id]) for node_id in sorted(tree.nodes)},
    }
    if tree.notes:
        doc["notes"] = tree.notes
    return _canon.dumps(doc) + "\n"


def _encode_node(node: MetricNode) -> dict:
    encoded: dict[str, object] = {
        "prompt": node.prompt,
        "characteristic": node.characteristic,
        "answers": list(node.answers),
        "routing": {answer: _encode_route(target) for answer, target in node.routing.items()},
    }
    if node.answer_help:
        encoded["answer_help"] = dict(node.answer_help)
    if node.uses_explanation:
        encoded["uses_explanation"] = True
    return encoded


def _encode_route(target: RouteTarget) -> dict:
    if target.is_terminal:
        return {"terminal": target.outcome.label}
    return {"node": target.node_id}


def load_tree_file(path: str) -> MetricTree:
    with open(path, encoding="utf-8") as handle:
        return parse_tree(handle.read())


def load_bundled_tree(name: str) -> MetricTree:
    """Load one of the shipped metrics: ``question_tree`` or ``answer_tree``."""
    data = resources.files("hiereval.data").joinpath(f"{name}.json").read_text("utf-8")
    return parse_tree(data)


def bundled_tree_names() -> Iterator[str]:
    for entry in resources.files("hiereval.data").iterdir():
        if entry.name.endswith(".json"):
            yield entry.name[: -len(".json")]

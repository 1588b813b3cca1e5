"""Metric-tree parsing, validation, routing, and path enumeration."""

from __future__ import annotations

import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import assert_terminal_coverage, make_tree, random_tree, single_node_tree
from hiereval.trees import (
    BAD,
    GOOD,
    CompositeOutcome,
    RouteTarget,
    TreeSemanticError,
    TreeSyntaxError,
    UnknownAnswerError,
    UnknownNodeError,
    enumerate_paths,
    flat_judgment_count,
    parse_tree,
    route,
    serialize_tree,
    traversal_order,
    validate_tree,
)

QUESTION_NODE_ORDER = ["relevant", "factoid", "answerable", "spelling_errors", "grammar_errors", "difficulty"]


class TestBundledTrees:
    def test_question_tree_shape(self, question_tree):
        assert question_tree.target == "input"
        assert question_tree.root == "relevant"
        assert traversal_order(question_tree) == QUESTION_NODE_ORDER
        assert flat_judgment_count(question_tree) == 6

    def test_answer_tree_shape(self, answer_tree):
        assert answer_tree.target == "output"
        assert answer_tree.root == "clear"
        assert flat_judgment_count(answer_tree) == 7
        assert validate_tree(answer_tree) == []

    def test_question_tree_is_valid(self, question_tree):
        assert validate_tree(question_tree) == []

    def test_explanation_nodes_are_marked(self, answer_tree):
        marked = {nid for nid, node in answer_tree.nodes.items() if node.uses_explanation}
        assert marked == {"explanation_relevant", "explanation_accuracy", "explanation_useful"}


class TestRouting:
    def test_relevant_no_terminates_bad(self, question_tree):
        target = route(question_tree, "relevant", "no")
        assert target.is_terminal
        assert target.outcome == CompositeOutcome(BAD, failed_at="relevant", failing_answer="no")

    def test_grammar_clean_proceeds_to_difficulty(self, question_tree):
        target = route(question_tree, "grammar_errors", "no")
        assert not target.is_terminal
        assert target.node_id == "difficulty"

    def test_difficulty_easy_is_good(self, question_tree):
        target = route(question_tree, "difficulty", "easy")
        assert target.is_terminal
        assert target.outcome.label == GOOD

    def test_unknown_node_rejected(self, question_tree):
        with pytest.raises(UnknownNodeError):
            route(question_tree, "nonexistent", "yes")

    def test_unknown_answer_rejected(self, question_tree):
        with pytest.raises(UnknownAnswerError):
            route(question_tree, "relevant", "maybe")

    def test_every_declared_answer_routes(self, question_tree, answer_tree):
        for tree in (question_tree, answer_tree):
            for node_id, node in tree.nodes.items():
                for answer in node.answers:
                    assert route(tree, node_id, answer) is not None

    def test_unclear_enters_explanation_branch(self, answer_tree):
        assert route(answer_tree, "clear", "no").node_id == "explanation_relevant"
        assert route(answer_tree, "answer_relevant", "no").node_id == "explanation_relevant"


class TestEnumeratePaths:
    def test_question_tree_has_eight_paths(self, question_tree):
        paths = enumerate_paths(question_tree)
        assert len(paths) == 8
        labels = Counter(outcome.label for _, outcome in paths)
        assert labels == {BAD: 5, GOOD: 3}
        # one bad path per gate characteristic
        failed_at = {outcome.failed_at for _, outcome in paths if outcome.label == BAD}
        assert failed_at == {"relevant", "factoid", "answerable", "spelling_errors", "grammar_errors"}

    def test_good_question_paths_are_full_pass(self, question_tree):
        good = [answers for answers, outcome in enumerate_paths(question_tree) if outcome.label == GOOD]
        assert sorted(good) == [
            ("yes", "yes", "yes", "no", "no", "easy"),
            ("yes", "yes", "yes", "no", "no", "hard"),
            ("yes", "yes", "yes", "no", "no", "medium"),
        ]

    def test_single_node_tree_has_two_paths(self):
        assert len(enumerate_paths(single_node_tree())) == 2

    def test_answer_tree_covers_both_branches(self, answer_tree):
        paths = enumerate_paths(answer_tree)
        first_answers = {answers[0] for answers, _ in paths}
        assert first_answers == {"yes", "no"}
        # the explanation branch is reachable from both entry points
        via_unclear = [a for a, _ in paths if a[0] == "no"]
        via_clear_irrelevant = [a for a, _ in paths if a[:2] == ("yes", "no")]
        assert via_unclear and via_clear_irrelevant
        for answers, outcome in paths:
            assert outcome.label in (GOOD, BAD)

    def test_terminal_multiset_coverage_single_parent_tree(self, question_tree):
        # with one route into every node, each terminal edge shows up exactly once
        path_terminals = Counter(outcome for _, outcome in enumerate_paths(question_tree))
        tree_terminals = Counter(
            target.outcome
            for node in question_tree.nodes.values()
            for target in node.routing.values()
            if target.is_terminal
        )
        assert path_terminals == tree_terminals

    def test_terminal_coverage_weighted_by_walk_counts(self, question_tree, answer_tree):
        # general form: a terminal edge at node u appears once per distinct
        # root-to-u walk (nodes may have several incoming routes)
        rng = random.Random(5)
        trees = [question_tree, answer_tree, single_node_tree()] + [
            random_tree(rng, f"r{k}", "input") for k in range(20)
        ]
        for tree in trees:
            assert_terminal_coverage(tree)

    def test_path_length_bounded_by_node_count(self):
        rng = random.Random(6)
        for k in range(30):
            tree = random_tree(rng, f"r{k}", "input")
            for answers, _ in enumerate_paths(tree):
                assert len(answers) <= len(tree.nodes)


class TestValidation:
    def test_dangling_route(self):
        tree = make_tree("t", "input", "grammar", {"grammar": {"yes": "gramar2", "no": BAD}})
        violations = validate_tree(tree)
        assert [v.kind for v in violations] == ["dangling_route"]
        assert "gramar2" in violations[0].message

    def test_two_node_cycle_names_both(self):
        tree = make_tree(
            "t", "input", "a",
            {"a": {"yes": "b", "no": BAD}, "b": {"yes": "a", "no": BAD}},
        )
        violations = [v for v in validate_tree(tree) if v.kind == "cycle"]
        assert len(violations) == 1
        assert "'a'" in violations[0].message and "'b'" in violations[0].message

    def test_orphan_node_is_unreachable(self):
        tree = make_tree(
            "t", "input", "a",
            {"a": {"yes": GOOD, "no": BAD}, "orphan": {"yes": GOOD, "no": BAD}},
        )
        violations = validate_tree(tree)
        assert [v.kind for v in violations] == ["unreachable"]
        assert violations[0].node_id == "orphan"

    def test_missing_root(self):
        tree = make_tree("t", "input", "ghost", {"a": {"yes": GOOD, "no": BAD}})
        assert any(v.kind == "missing_root" for v in validate_tree(tree))

    def test_too_few_answers(self):
        tree = make_tree("t", "input", "a", {"a": {"yes": GOOD}})
        assert any(v.kind == "too_few_answers" for v in validate_tree(tree))

    def test_incomplete_routing(self):
        tree = make_tree("t", "input", "a", {"a": {"yes": GOOD, "no": BAD}})
        del tree.nodes["a"].routing["no"]
        assert any(v.kind == "incomplete_routing" for v in validate_tree(tree))

    def test_bad_target_label(self):
        tree = make_tree("t", "sideways", "a", {"a": {"yes": GOOD, "no": BAD}})
        assert any(v.kind == "bad_target" for v in validate_tree(tree))

    def test_random_trees_are_valid(self):
        rng = random.Random(7)
        for k in range(50):
            assert validate_tree(random_tree(rng, f"r{k}", "output")) == []


class TestParseAndSerialize:
    def test_parse_rejects_bad_json_with_position(self):
        with pytest.raises(TreeSyntaxError) as exc_info:
            parse_tree('{"id": "x",\n  broken')
        assert exc_info.value.line == 2

    def test_parse_rejects_missing_fields(self):
        with pytest.raises(TreeSyntaxError):
            parse_tree('{"id": "x"}')

    def test_parse_rejects_semantic_violations(self):
        document = """
        {"id": "t", "name": "t", "target": "input", "root": "grammar",
         "nodes": {"grammar": {"prompt": "p", "characteristic": "c",
                    "answers": ["yes", "no"],
                    "routing": {"yes": {"node": "gramar2"}, "no": {"terminal": "bad"}}}}}
        """
        with pytest.raises(TreeSemanticError) as exc_info:
            parse_tree(document)
        assert any(v.kind == "dangling_route" for v in exc_info.value.violations)

    def test_parse_minimal_single_node_document(self):
        document = """
        {"id": "mini", "name": "mini", "target": "input", "root": "only",
         "nodes": {"only": {"prompt": "p", "characteristic": "c",
                    "answers": ["yes", "no"],
                    "routing": {"yes": {"terminal": "good"}, "no": {"terminal": "bad"}}}}}
        """
        tree = parse_tree(document)
        assert len(tree.nodes) == 1
        assert flat_judgment_count(tree) == 1

    def test_bad_terminal_materializes_failure_details(self):
        document = """
        {"id": "mini", "name": "mini", "target": "input", "root": "only",
         "nodes": {"only": {"prompt": "p", "characteristic": "c",
                    "answers": ["yes", "no"],
                    "routing": {"yes": {"terminal": "good"}, "no": {"terminal": "bad"}}}}}
        """
        tree = parse_tree(document)
        outcome = tree.nodes["only"].routing["no"].outcome
        assert outcome == CompositeOutcome(BAD, failed_at="only", failing_answer="no")

    def test_round_trip_bundled_trees(self, question_tree, answer_tree):
        for tree in (question_tree, answer_tree):
            canonical = serialize_tree(tree)
            reparsed = parse_tree(canonical)
            assert reparsed == tree
            assert serialize_tree(reparsed) == canonical

    def test_round_trip_random_trees(self):
        rng = random.Random(8)
        for k in range(30):
            tree = random_tree(rng, f"r{k}", "input")
            canonical = serialize_tree(tree)
            assert parse_tree(canonical) == tree
            assert serialize_tree(parse_tree(canonical)) == canonical

    def test_canonical_serialization_sorts_node_ids(self, answer_tree):
        canonical = serialize_tree(answer_tree)
        positions = [canonical.index(f'"{node_id}":') for node_id in sorted(answer_tree.nodes)]
        assert positions == sorted(positions)


@given(st.integers(0, 10_000))
@settings(max_examples=100, deadline=None)
def test_route_total_on_declared_answers_only(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, "prop", "input")
    for node_id, node in tree.nodes.items():
        for answer in node.answers:
            route(tree, node_id, answer)
        with pytest.raises(UnknownAnswerError):
            route(tree, node_id, "not-a-declared-answer")


def test_route_target_requires_exactly_one_side():
    with pytest.raises(ValueError):
        RouteTarget()
    with pytest.raises(ValueError):
        RouteTarget(node_id="x", outcome=CompositeOutcome(GOOD))


def test_composite_outcome_invariants():
    with pytest.raises(ValueError):
        CompositeOutcome(GOOD, failed_at="x")
    with pytest.raises(ValueError):
        CompositeOutcome(BAD)
    with pytest.raises(ValueError):
        CompositeOutcome("mediocre")

"""Shared fixtures and generators for the test suite."""

from __future__ import annotations

import random

import pytest

from hiereval.campaign import Campaign, Evaluator, Item, create_campaign
from hiereval.trees import (
    BAD,
    GOOD,
    CompositeOutcome,
    MetricNode,
    MetricTree,
    RouteTarget,
    load_bundled_tree,
    traversal_order,
)


@pytest.fixture(scope="session")
def question_tree() -> MetricTree:
    return load_bundled_tree("question_tree")


@pytest.fixture(scope="session")
def answer_tree() -> MetricTree:
    return load_bundled_tree("answer_tree")


def terminal(node_id: str, answer: str, label: str) -> RouteTarget:
    if label == GOOD:
        return RouteTarget(outcome=CompositeOutcome(GOOD))
    return RouteTarget(outcome=CompositeOutcome(BAD, failed_at=node_id, failing_answer=answer))


def make_node(node_id: str, routes: dict[str, str | RouteTarget]) -> MetricNode:
    """Node from a {answer: route} shorthand: 'good'/'bad' labels or node ids."""
    routing: dict[str, RouteTarget] = {}
    for answer, spec in routes.items():
        if isinstance(spec, RouteTarget):
            routing[answer] = spec
        elif spec in (GOOD, BAD):
            routing[answer] = terminal(node_id, answer, spec)
        else:
            routing[answer] = RouteTarget(node_id=spec)
    return MetricNode(
        id=node_id,
        prompt=f"{node_id}?",
        characteristic=node_id,
        answers=list(routes),
        routing=routing,
    )


def make_tree(tree_id: str, target: str, root: str, nodes: dict[str, dict]) -> MetricTree:
    return MetricTree(
        id=tree_id,
        name=tree_id,
        target=target,
        root=root,
        nodes={node_id: make_node(node_id, routes) for node_id, routes in nodes.items()},
    )


def single_node_tree(tree_id: str = "single", target: str = "input") -> MetricTree:
    return make_tree(tree_id, target, "only", {"only": {"yes": GOOD, "no": BAD}})


def gate_tree(tree_id: str, target: str, depth: int = 3) -> MetricTree:
    """Chain of yes-continue/no-bad gates ending in a good terminal."""
    nodes: dict[str, dict] = {}
    ids = [f"gate{i}" for i in range(depth)]
    for i, node_id in enumerate(ids):
        onward = ids[i + 1] if i + 1 < depth else GOOD
        nodes[node_id] = {"yes": onward, "no": BAD}
    return make_tree(tree_id, target, ids[0], nodes)


def random_tree(rng: random.Random, tree_id: str, target: str, max_nodes: int = 6) -> MetricTree:
    """Random valid tree: forward-only routing plus pruning of unreachable nodes."""
    n = rng.randint(1, max_nodes)
    ids = [f"n{i}" for i in range(n)]
    nodes: dict[str, MetricNode] = {}
    for i, node_id in enumerate(ids):
        answer_count = rng.randint(2, 4)
        answers = [f"a{j}" for j in range(answer_count)]
        routes: dict[str, str | RouteTarget] = {}
        later = ids[i + 1:]
        for answer in answers:
            if later and rng.random() < 0.6:
                routes[answer] = rng.choice(later)
            else:
                routes[answer] = GOOD if rng.random() < 0.5 else BAD
        nodes[node_id] = make_node(node_id, routes)
    tree = MetricTree(id=tree_id, name=tree_id, target=target, root=ids[0], nodes=nodes)
    reachable = set(traversal_order(tree))
    tree.nodes = {node_id: node for node_id, node in nodes.items() if node_id in reachable}
    return tree


def small_campaign(
    n_items: int = 3,
    n_evaluators: int = 1,
    redundancy: int = 1,
    seed: int = 7,
    input_tree: MetricTree | None = None,
    output_tree: MetricTree | None = None,
) -> Campaign:
    return create_campaign(
        campaign_id="test-campaign",
        input_tree=input_tree or load_bundled_tree("question_tree"),
        output_tree=output_tree or load_bundled_tree("answer_tree"),
        items=[
            Item(id=f"item_{k:02d}", input_text=f"question {k}", output_text=f"answer {k}",
                 explanation_text=f"passage {k}")
            for k in range(1, n_items + 1)
        ],
        evaluators=[
            Evaluator(id=f"ev_{k:02d}", display_name=f"Evaluator {k}", token=f"token-{k:02d}")
            for k in range(1, n_evaluators + 1)
        ],
        redundancy=redundancy,
        shuffle_seed=seed,
    )


def assert_funnel_conservation(campaign: Campaign, records, tree_target: str) -> None:
    """Flow-conservation invariants of a funnel report."""
    from hiereval.scoring import funnel

    report = funnel(campaign, records, tree_target)
    tree = campaign.tree_for(tree_target)
    by_id = {entry.node_id: entry for entry in report.entries}
    for entry in report.entries:
        assert entry.presented == sum(entry.answer_counts.values())
        assert entry.presented == entry.terminated_here + entry.continued
        if entry.node_id != tree.root:
            inflow = sum(
                parent.answer_counts[answer]
                for parent in report.entries
                for answer, target in tree.nodes[parent.node_id].routing.items()
                if not target.is_terminal and target.node_id == entry.node_id
            )
            assert entry.presented == inflow, entry.node_id
    assert sum(e.terminated_here for e in report.entries) == by_id[tree.root].presented


def assert_terminal_coverage(tree: MetricTree) -> None:
    """enumerate_paths hits each terminal edge once per root-to-node walk."""
    from collections import Counter

    from hiereval.trees import enumerate_paths

    indegree = {node_id: 0 for node_id in tree.nodes}
    for node in tree.nodes.values():
        for target in node.routing.values():
            if not target.is_terminal:
                indegree[target.node_id] += 1
    queue = [node_id for node_id, degree in indegree.items() if degree == 0]
    walks = {node_id: 0 for node_id in tree.nodes}
    walks[tree.root] = 1
    while queue:
        node_id = queue.pop()
        for target in tree.nodes[node_id].routing.values():
            if not target.is_terminal:
                walks[target.node_id] += walks[node_id]
                indegree[target.node_id] -= 1
                if indegree[target.node_id] == 0:
                    queue.append(target.node_id)
    expected = Counter()
    for node_id, node in tree.nodes.items():
        for target in node.routing.values():
            if target.is_terminal:
                expected[target.outcome] += walks[node_id]
    path_terminals = Counter(outcome for _, outcome in enumerate_paths(tree))
    assert path_terminals == expected


def assert_early_termination_sound(campaign: Campaign, state) -> None:
    """No judgment below a failed node; terminal steps close the history."""
    for traversal in state.traversals.values():
        tree = campaign.tree_for(traversal.tree_target)
        for position, (node_id, answer, _elapsed) in enumerate(traversal.history):
            target = tree.nodes[node_id].routing[answer]
            if target.is_terminal:
                assert position == len(traversal.history) - 1
                assert traversal.is_terminated
                assert traversal.outcome == target.outcome
        assert len(traversal.history) <= len(tree.nodes)


def random_campaign(rng: random.Random, max_items: int = 50) -> Campaign:
    input_tree = random_tree(rng, "rand_in", "input")
    output_tree = random_tree(rng, "rand_out", "output")
    n_items = rng.randint(1, max_items)
    n_evaluators = rng.randint(1, 5)
    redundancy = rng.randint(1, n_evaluators)
    return create_campaign(
        campaign_id=f"rand-{rng.randrange(10**6)}",
        input_tree=input_tree,
        output_tree=output_tree,
        items=[Item(id=f"i{k:03d}", input_text=f"q{k}", output_text=f"a{k}") for k in range(n_items)],
        evaluators=[Evaluator(id=f"e{k}", display_name=f"E{k}", token=f"t{k}") for k in range(n_evaluators)],
        redundancy=redundancy,
        shuffle_seed=rng.randrange(10**6),
    )

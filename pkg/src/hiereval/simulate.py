"""Scripted evaluator policies for testing campaigns end to end.

Policies drive every traversal of a campaign to termination:

    all_pass        at each node take the first answer that continues, or
                    the first good terminal once only terminals remain
    all_fail_root   at each node take the first bad-terminal answer when
                    one exists, otherwise the first answer
    seeded_random   uniform choice among the node's answers, from a seeded
                    generator

Runs are deterministic given the campaign and the seed: evaluators are
processed in roster order, each following their own presentation order,
and timestamps advance one second per record from a fixed base.
"""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

from .campaign import Campaign, CampaignState, new_state
from .trees import BAD, GOOD, MetricNode

POLICIES = ("all_pass", "all_fail_root", "seeded_random")

_WALL_BASE = datetime(2024, 1, 1, 0, 0, 0, tzinfo=timezone.utc)


def _wall_time(sequence_no: int) -> str:
    return (_WALL_BASE + timedelta(seconds=sequence_no)).strftime("%Y-%m-%dT%H:%M:%SZ")


def _choose_all_pass(node: MetricNode) -> str:
    for answer in node.answers:
        if not node.routing[answer].is_terminal:
            return answer
    for answer in node.answers:
        if node.routing[answer].outcome.label == GOOD:
            return answer
    return node.answers[0]


def _choose_all_fail_root(node: MetricNode) -> str:
    for answer in node.answers:
        target = node.routing[answer]
        if target.is_terminal and target.outcome.label == BAD:
            return answer
    return node.answers[0]


def run_policy(
    campaign: Campaign,
    policy: str,
    seed: int = 0,
    state: CampaignState | None = None,
) -> CampaignState:
    """Drive every remaining traversal to termination under `policy`."""
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    state = state if state is not None else new_state(campaign)
    rng = random.Random(seed)
    for evaluator in campaign.evaluators:
        while True:
            task = state.next_task(evaluator.id)
            if task is None:
                break
            item, tree_target, node = task
            if policy == "all_pass":
                answer = _choose_all_pass(node)
                elapsed = 1.0
            elif policy == "all_fail_root":
                answer = _choose_all_fail_root(node)
                elapsed = 1.0
            else:
                answer = rng.choice(node.answers)
                elapsed = round(rng.uniform(0.5, 12.0), 3)
            state.submit_judgment(
                evaluator_id=evaluator.id,
                item_id=item.id,
                tree_target=tree_target,
                node_id=node.id,
                answer=answer,
                elapsed_seconds=elapsed,
                wall_time=_wall_time(state.last_sequence_no + 1),
            )
    return state

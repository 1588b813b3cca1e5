"""Reconstruction and verification of the bundled reference campaign.

The reference campaign is a 387-item evaluation of a sleep-health
question-answering assistant by 10 coaches, with every aggregate count
pinned: the question-side funnel, the difficulty distribution, the
answer-side branch counts, the 2x2 good/bad cross table, and the derived
chi-square association.  ``reconstruct_dataset`` builds a campaign and a
journal that realize all of those counts simultaneously and
deterministically; ``verify_reference_counts`` recomputes each count through
the scoring and stats modules and reports per-claim pass/fail.

Item texts are synthetic: the pinned targets constrain only the judgment
counts, not the wording of questions or answers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import scoring, stats, store
from .campaign import Campaign, CampaignState, Evaluator, Item, JudgmentRecord, create_campaign, new_state
from .trees import load_bundled_tree

CAMPAIGN_ID = "sleep-coaching-eval"
COACH_COUNT = 10
FIXED_SEED = 20240115
WALL_BASE = "2024-01-15T09:00:00Z"

CHI_SQUARE_TARGET = 4.56
CHI_SQUARE_TOLERANCE = 0.01
P_VALUE_TARGET = 0.033
P_VALUE_TOLERANCE = 0.002

# Synthetic per-characteristic base seconds; +0.5 s per item ordinal mod 5.
ELAPSED_BASE = {
    "relevant": 4.0,
    "factoid": 3.0,
    "answerable": 6.0,
    "spelling_errors": 2.5,
    "grammar_errors": 2.5,
    "difficulty": 5.0,
    "clear": 4.0,
    "answer_relevant": 5.0,
    "answer_accuracy": 9.0,
    "answer_useful": 3.5,
    "explanation_relevant": 6.0,
    "explanation_accuracy": 10.0,
    "explanation_useful": 4.0,
}


@dataclass(frozen=True)
class ReconstructionSpec:
    """Pinned aggregate targets the reconstruction must realize."""

    question_funnel: tuple[int, ...] = (387, 383, 335, 327, 321, 247)
    difficulty: tuple[int, int, int] = (155, 74, 18)  # easy, medium, hard
    clear_yes: int = 230
    clear_no: int = 157
    clear_relevant: int = 146
    clear_accurate: int = 144
    explanation_relevant: int = 116
    explanation_accurate: int = 113
    good_answers: int = 191
    cross_table: tuple[int, int, int, int] = (132, 59, 115, 81)
    coach_count: int = COACH_COUNT
    # Recorded but not enforced: the conflicting alternative count of
    # relevant explanations among unclear short answers.
    unreproduced_explanation_relevant: int = 89

    def __post_init__(self) -> None:
        presented = self.question_funnel
        a, b, c, d = self.cross_table
        good_questions = presented[-1]
        checks = [
            presented[0] == a + b + c + d,
            sum(self.difficulty) == good_questions,
            a + c == good_questions,
            a + b == self.good_answers,
            self.clear_yes + self.clear_no == presented[0],
            self.clear_relevant <= self.clear_yes,
            self.clear_accurate <= self.clear_relevant,
            self.explanation_accurate <= self.explanation_relevant,
            self.explanation_relevant <= self.clear_no,
        ]
        if not all(checks):
            raise ValueError("reconstruction targets are arithmetically inconsistent")

    @property
    def items_total(self) -> int:
        return self.question_funnel[0]

    @property
    def good_questions(self) -> int:
        return self.question_funnel[-1]

    def good_answer_split(self) -> tuple[int, int]:
        """Good answers split between the clear and explanation paths.

        Proportional to the candidate pools (accurate short answers vs
        accurate explanations), rounded toward the clear path.
        """
        clear_pool = self.clear_accurate
        explanation_pool = self.explanation_accurate
        via_clear = round(self.good_answers * clear_pool / (clear_pool + explanation_pool))
        via_explanation = self.good_answers - via_clear
        if via_clear > clear_pool or via_explanation > explanation_pool:
            raise ValueError("good-answer split exceeds a candidate pool")
        return via_clear, via_explanation


@dataclass(frozen=True)
class ClaimCheck:
    claim: str
    expected: str
    actual: str
    ok: bool


@dataclass(frozen=True)
class VerificationReport:
    claims: tuple[ClaimCheck, ...]
    notes: tuple[str, ...] = ()

    @property
    def overall_pass(self) -> bool:
        return all(claim.ok for claim in self.claims)

    def failed_claims(self) -> list[ClaimCheck]:
        return [c for c in self.claims if not c.ok]

    def as_dict(self) -> dict:
        return {
            "overall_pass": self.overall_pass,
            "claims": [
                {"claim": c.claim, "expected": c.expected, "actual": c.actual, "ok": c.ok}
                for c in self.claims
            ],
            "notes": list(self.notes),
        }

    def as_text(self) -> str:
        lines = []
        for claim in self.claims:
            marker = "PASS" if claim.ok else "FAIL"
            lines.append(f"[{marker}] {claim.claim}: expected {claim.expected}, got {claim.actual}")
        for note in self.notes:
            lines.append(f"[note] {note}")
        lines.append(f"overall: {'PASS' if self.overall_pass else 'FAIL'}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Dataset construction
# ---------------------------------------------------------------------------

# Per-item plans: (question path kind, difficulty level or failing node) and
# answer path kinds, consumed by greedy fill in item-id order.

_GOOD_QUESTION_TEXTS = (
    "What time should I dim the lights before going to bed?",
    "How much earlier should I stop drinking coffee before bedtime?",
    "What room temperature helps people fall asleep faster?",
    "How long should an afternoon nap be to avoid grogginess?",
    "What bedtime routine helps with falling asleep quickly?",
    "Why does alcohol late in the evening make sleep worse?",
)

_QUESTION_TEXTS = {
    "relevant": "Reminder to send the weekly grocery list",
    "factoid": "Is it fine to do intense exercise in the late evening?",
    "answerable": "How does my sleep score compare with everyone else in the group?",
    "spelling": "How long befor bedtime should I stop screen time?",
    "grammar": "Why I keep waking during the night?",
}


def _question_sequences(spec: ReconstructionSpec) -> list[tuple[str, list[tuple[str, str]]]]:
    """(kind, [(node_id, answer), ...]) per item, in fill order."""
    presented = spec.question_funnel
    pass_prefix = [
        ("relevant", "yes"),
        ("factoid", "yes"),
        ("answerable", "yes"),
        ("spelling_errors", "no"),
        ("grammar_errors", "no"),
    ]
    sequences: list[tuple[str, list[tuple[str, str]]]] = []
    for level, count in zip(("easy", "medium", "hard"), spec.difficulty):
        for _ in range(count):
            sequences.append(("good", pass_prefix + [("difficulty", level)]))
    fail_counts = [presented[i] - presented[i + 1] for i in range(5)]
    fail_specs = [
        ("relevant", [("relevant", "no")]),
        ("factoid", pass_prefix[:1] + [("factoid", "no")]),
        ("answerable", pass_prefix[:2] + [("answerable", "no")]),
        ("spelling", pass_prefix[:3] + [("spelling_errors", "yes")]),
        ("grammar", pass_prefix[:4] + [("grammar_errors", "yes")]),
    ]
    for (kind, steps), count in zip(fail_specs, fail_counts):
        sequences.extend((kind, steps) for _ in range(count))
    return sequences


class _Alternator:
    """Deterministic accurate/partially_accurate alternation per accuracy node."""

    def __init__(self) -> None:
        self.counts = {"answer_accuracy": 0, "explanation_accuracy": 0}

    def next(self, node_id: str) -> str:
        index = self.counts[node_id]
        self.counts[node_id] += 1
        return "accurate" if index % 2 == 0 else "partially_accurate"


def _answer_sequences(spec: ReconstructionSpec) -> tuple[list, list]:
    """Good and bad answer-side paths, each a list of [(node_id, answer), ...]."""
    alternator = _Alternator()
    via_clear, via_explanation = spec.good_answer_split()

    good: list[list[tuple[str, str]]] = []
    for _ in range(via_clear):
        good.append(
            [
                ("clear", "yes"),
                ("answer_relevant", "yes"),
                ("answer_accuracy", alternator.next("answer_accuracy")),
                ("answer_useful", "yes"),
            ]
        )
    for _ in range(via_explanation):
        good.append(
            [
                ("clear", "no"),
                ("explanation_relevant", "yes"),
                ("explanation_accuracy", alternator.next("explanation_accuracy")),
                ("explanation_useful", "yes"),
            ]
        )

    bad: list[list[tuple[str, str]]] = []
    clear_inaccurate = spec.clear_relevant - spec.clear_accurate
    clear_not_useful = spec.clear_accurate - via_clear
    clear_not_relevant = spec.clear_yes - spec.clear_relevant
    unclear_not_relevant = spec.clear_no - spec.explanation_relevant
    explanation_inaccurate = spec.explanation_relevant - spec.explanation_accurate
    explanation_not_useful = spec.explanation_accurate - via_explanation
    for _ in range(clear_inaccurate):
        bad.append([("clear", "yes"), ("answer_relevant", "yes"), ("answer_accuracy", "inaccurate")])
    for _ in range(clear_not_useful):
        bad.append(
            [
                ("clear", "yes"),
                ("answer_relevant", "yes"),
                ("answer_accuracy", alternator.next("answer_accuracy")),
                ("answer_useful", "no"),
            ]
        )
    for _ in range(clear_not_relevant):
        bad.append([("clear", "yes"), ("answer_relevant", "no"), ("explanation_relevant", "no")])
    for _ in range(unclear_not_relevant):
        bad.append([("clear", "no"), ("explanation_relevant", "no")])
    for _ in range(explanation_inaccurate):
        bad.append([("clear", "no"), ("explanation_relevant", "yes"), ("explanation_accuracy", "inaccurate")])
    for _ in range(explanation_not_useful):
        bad.append(
            [
                ("clear", "no"),
                ("explanation_relevant", "yes"),
                ("explanation_accuracy", alternator.next("explanation_accuracy")),
                ("explanation_useful", "no"),
            ]
        )
    return good, bad


@dataclass
class _ItemPlan:
    item: Item
    input_steps: list[tuple[str, str]]
    output_steps: list[tuple[str, str]]
    ordinal: int


def _build_plans(spec: ReconstructionSpec) -> list[_ItemPlan]:
    question_sequences = _question_sequences(spec)
    good_answers, bad_answers = _answer_sequences(spec)
    a, b, c, d = spec.cross_table

    plans: list[_ItemPlan] = []
    good_iter = iter(good_answers)
    bad_iter = iter(bad_answers)
    # Joint fill: the first `a` question-good items take good answers, the
    # next `c` take bad; among question-bad items, `b` good then `d` bad.
    good_question_seen = 0
    bad_question_seen = 0
    for ordinal, (kind, input_steps) in enumerate(question_sequences, start=1):
        if kind == "good":
            good_question_seen += 1
            output_steps = next(good_iter) if good_question_seen <= a else next(bad_iter)
        else:
            bad_question_seen += 1
            output_steps = next(good_iter) if bad_question_seen <= b else next(bad_iter)
        item_id = f"item_{ordinal:03d}"
        if kind == "good":
            input_text = f"{_GOOD_QUESTION_TEXTS[(ordinal - 1) % len(_GOOD_QUESTION_TEXTS)]} (case {ordinal:03d})"
        else:
            input_text = f"{_QUESTION_TEXTS[kind]} (case {ordinal:03d})"
        plans.append(
            _ItemPlan(
                item=Item(
                    id=item_id,
                    input_text=input_text,
                    output_text=f"Short answer {ordinal:03d} produced by the reading pipeline.",
                    explanation_text=f"Passage {ordinal:03d} retrieved as supporting context.",
                    source_tag=f"coach_{(ordinal - 1) % COACH_COUNT + 1:02d}",
                ),
                input_steps=input_steps,
                output_steps=list(output_steps),
                ordinal=ordinal,
            )
        )
    leftovers = sum(1 for _ in good_iter) + sum(1 for _ in bad_iter)
    if leftovers or good_question_seen != a + c or bad_question_seen != b + d:
        raise AssertionError("joint fill did not consume the pools exactly")
    return plans


def _elapsed_for(node_id: str, ordinal: int) -> float:
    return ELAPSED_BASE[node_id] + 0.5 * (ordinal % 5)


def reconstruct_dataset(
    spec: ReconstructionSpec | None = None,
) -> tuple[Campaign, list[JudgmentRecord]]:
    """Build the reference campaign and its complete judgment journal.

    Fully deterministic: item plans are filled greedily in item-id order,
    coaches receive items round-robin by item id, each coach's journal
    segment follows their presentation order, and timestamps advance one
    second per record from a fixed base.  Running twice yields
    byte-identical journals.
    """
    spec = spec or ReconstructionSpec()
    plans = _build_plans(spec)
    evaluators = [
        Evaluator(id=f"coach_{k:02d}", display_name=f"Coach {k:02d}", token=f"coach-token-{k:02d}")
        for k in range(1, spec.coach_count + 1)
    ]
    campaign = create_campaign(
        campaign_id=CAMPAIGN_ID,
        input_tree=load_bundled_tree("question_tree"),
        output_tree=load_bundled_tree("answer_tree"),
        items=[plan.item for plan in plans],
        evaluators=evaluators,
        redundancy=1,
        shuffle_seed=FIXED_SEED,
    )
    plans_by_id = {plan.item.id: plan for plan in plans}
    state = new_state(campaign)
    for evaluator in campaign.evaluators:
        for item_id in campaign.assignments[evaluator.id]:
            plan = plans_by_id[item_id]
            for tree_target, steps in (("input", plan.input_steps), ("output", plan.output_steps)):
                for node_id, answer in steps:
                    state.submit_judgment(
                        evaluator_id=evaluator.id,
                        item_id=item_id,
                        tree_target=tree_target,
                        node_id=node_id,
                        answer=answer,
                        elapsed_seconds=_elapsed_for(node_id, plan.ordinal),
                        wall_time=_wall_time(state.last_sequence_no + 1),
                    )
    return campaign, list(state.records)


def _wall_time(sequence_no: int) -> str:
    from datetime import datetime, timedelta, timezone

    base = datetime(2024, 1, 15, 9, 0, 0, tzinfo=timezone.utc)
    return (base + timedelta(seconds=sequence_no)).strftime("%Y-%m-%dT%H:%M:%SZ")


def emit_dataset(out_dir: str) -> store.CampaignDir:
    """Write the reference campaign directory (config, trees, items, journal)."""
    campaign, records = reconstruct_dataset()
    return store.save_campaign_dir(out_dir, campaign, records)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def verify_reference_counts(
    campaign: Campaign,
    records: list[JudgmentRecord] | CampaignState,
    spec: ReconstructionSpec | None = None,
) -> VerificationReport:
    """Recompute every pinned target through scoring/stats and report per-claim results."""
    spec = spec or ReconstructionSpec()
    claims: list[ClaimCheck] = []

    def exact(claim: str, expected: int, actual: int) -> None:
        claims.append(ClaimCheck(claim, str(expected), str(actual), expected == actual))

    def within(claim: str, expected: float, tolerance: float, actual: float) -> None:
        claims.append(
            ClaimCheck(
                claim,
                f"{expected}±{tolerance}",
                f"{actual:.4f}",
                abs(actual - expected) <= tolerance,
            )
        )

    outcomes = scoring.composite_outcomes(campaign, records)
    judged_items = {item_id for (item_id, _, target) in outcomes if target == "input"}
    judging_coaches = {evaluator_id for (_, evaluator_id, _) in outcomes}
    exact("items judged", spec.items_total, len(judged_items))
    exact("judging coaches", spec.coach_count, len(judging_coaches))

    question_funnel = scoring.funnel(campaign, records, "input")
    question_nodes = ("relevant", "factoid", "answerable", "spelling_errors", "grammar_errors", "difficulty")
    for node_id, expected in zip(question_nodes, spec.question_funnel):
        exact(f"question funnel: {node_id} presented", expected, question_funnel.entry(node_id).presented)

    distribution = scoring.difficulty_distribution(campaign, records)
    for level, expected in zip(("easy", "medium", "hard"), spec.difficulty):
        exact(f"difficulty: {level}", expected, distribution.get(level, 0))

    input_good = sum(1 for (_, _, t), o in outcomes.items() if t == "input" and o.label == "good")
    input_bad = sum(1 for (_, _, t), o in outcomes.items() if t == "input" and o.label == "bad")
    exact("good questions", spec.good_questions, input_good)
    exact("bad questions", spec.items_total - spec.good_questions, input_bad)

    answer_funnel = scoring.funnel(campaign, records, "output")
    clear_entry = answer_funnel.entry("clear")
    exact("answers judged clear", spec.clear_yes, clear_entry.answer_counts.get("yes", 0))
    exact("answers judged not clear", spec.clear_no, clear_entry.answer_counts.get("no", 0))
    exact(
        "clear path: short answer relevant",
        spec.clear_relevant,
        answer_funnel.entry("answer_relevant").answer_counts.get("yes", 0),
    )
    accuracy = answer_funnel.entry("answer_accuracy").answer_counts
    exact(
        "clear path: (partly) accurate",
        spec.clear_accurate,
        accuracy.get("accurate", 0) + accuracy.get("partially_accurate", 0),
    )
    exact(
        "explanation path: explanation relevant",
        spec.explanation_relevant,
        answer_funnel.entry("explanation_relevant").answer_counts.get("yes", 0),
    )
    explanation_accuracy = answer_funnel.entry("explanation_accuracy").answer_counts
    exact(
        "explanation path: (partly) accurate",
        spec.explanation_accurate,
        explanation_accuracy.get("accurate", 0) + explanation_accuracy.get("partially_accurate", 0),
    )

    output_good = sum(1 for (_, _, t), o in outcomes.items() if t == "output" and o.label == "good")
    output_bad = sum(1 for (_, _, t), o in outcomes.items() if t == "output" and o.label == "bad")
    exact("good answers", spec.good_answers, output_good)
    exact("bad answers", spec.items_total - spec.good_answers, output_bad)

    # cross-table cells counted directly so empty/partial journals still yield claims
    cells = {"a": 0, "b": 0, "c": 0, "d": 0}
    for (item_id, evaluator_id, target), outcome in outcomes.items():
        if target != "input":
            continue
        output_outcome = outcomes.get((item_id, evaluator_id, "output"))
        if output_outcome is None:
            continue
        key = {
            ("good", "good"): "a",
            ("bad", "good"): "b",
            ("good", "bad"): "c",
            ("bad", "bad"): "d",
        }[(outcome.label, output_outcome.label)]
        cells[key] += 1
    for cell_name, expected, actual in zip(
        ("a (good/good)", "b (good answer/bad question)", "c (bad answer/good question)", "d (bad/bad)"),
        spec.cross_table,
        (cells["a"], cells["b"], cells["c"], cells["d"]),
    ):
        exact(f"cross table {cell_name}", expected, actual)

    try:
        result = stats.chi_square_2x2(stats.ContingencyTable(**cells))
        within("chi-square statistic", CHI_SQUARE_TARGET, CHI_SQUARE_TOLERANCE, result.statistic)
        within("chi-square p-value", P_VALUE_TARGET, P_VALUE_TOLERANCE, result.p_value)
    except ValueError as exc:
        claims.append(ClaimCheck("chi-square statistic", str(CHI_SQUARE_TARGET), f"undefined ({exc})", False))
        claims.append(ClaimCheck("chi-square p-value", str(P_VALUE_TARGET), "undefined", False))

    flat_per_item = len(campaign.input_tree.nodes)
    expected_hierarchical = sum(spec.question_funnel)
    expected_flat = spec.items_total * flat_per_item
    try:
        savings = scoring.time_savings(campaign, records, "input")
        exact("question-side hierarchical judgments", expected_hierarchical, savings.hierarchical_judgments)
        exact("question-side flat judgments", expected_flat, savings.flat_judgments)
        exact("question-side judgments saved", expected_flat - expected_hierarchical, savings.saved)
    except scoring.IncompleteCampaignError as exc:
        for claim, expected in (
            ("question-side hierarchical judgments", expected_hierarchical),
            ("question-side flat judgments", expected_flat),
            ("question-side judgments saved", expected_flat - expected_hierarchical),
        ):
            claims.append(ClaimCheck(claim, str(expected), f"undefined ({exc})", False))

    notes = (
        (
            f"an alternative reference count of {spec.unreproduced_explanation_relevant}/{spec.clear_no} "
            f"relevant explanations among unclear short answers conflicts with the enforced "
            f"{spec.explanation_accurate}/{spec.explanation_relevant} accuracy pool; "
            f"{spec.explanation_relevant} is enforced and "
            f"{spec.unreproduced_explanation_relevant} is recorded as unreproduced"
        ),
        "per-coach item counts and mean times are synthetic (round-robin assignment, fixed elapsed schedule); "
        "only the item total and coach count are asserted",
    )
    return VerificationReport(claims=tuple(claims), notes=notes)

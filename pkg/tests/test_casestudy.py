"""Reference-campaign reconstruction: pinned counts, determinism, verification."""

from __future__ import annotations

import pytest

from hiereval import _canon
from hiereval.campaign import record_to_line, replay_records, with_sequence
from hiereval.casestudy import (
    ReconstructionSpec,
    emit_dataset,
    reconstruct_dataset,
    verify_reference_counts,
)
from hiereval.scoring import (
    composite_cross_table,
    composite_outcomes,
    difficulty_distribution,
    funnel,
    time_savings,
)
from hiereval.stats import chi_square_2x2
from hiereval.store import load_campaign_dir

QUESTION_PRESENTED = (387, 383, 335, 327, 321, 247)
QUESTION_NODES = ("relevant", "factoid", "answerable", "spelling_errors", "grammar_errors", "difficulty")


@pytest.fixture(scope="module")
def dataset():
    return reconstruct_dataset()


class TestReconstruction:
    def test_spec_internal_consistency(self):
        spec = ReconstructionSpec()
        assert spec.items_total == 387
        assert spec.good_questions == 247
        assert spec.good_answer_split() == (107, 84)

    def test_inconsistent_spec_rejected(self):
        with pytest.raises(ValueError):
            ReconstructionSpec(difficulty=(155, 74, 17))

    def test_scale(self, dataset):
        campaign, records = dataset
        assert len(campaign.items) == 387
        assert len(campaign.evaluators) == 10
        assert campaign.redundancy == 1
        assert len(records) == 3377  # 2000 question-side + 1377 answer-side

    def test_question_funnel_counts(self, dataset):
        campaign, records = dataset
        report = funnel(campaign, records, "input")
        assert tuple(report.entry(n).presented for n in QUESTION_NODES) == QUESTION_PRESENTED

    def test_difficulty_distribution(self, dataset):
        campaign, records = dataset
        assert difficulty_distribution(campaign, records) == {"easy": 155, "medium": 74, "hard": 18}

    def test_composite_counts(self, dataset):
        campaign, records = dataset
        outcomes = composite_outcomes(campaign, records)
        input_labels = [o.label for (_, _, t), o in outcomes.items() if t == "input"]
        output_labels = [o.label for (_, _, t), o in outcomes.items() if t == "output"]
        assert input_labels.count("good") == 247 and input_labels.count("bad") == 140
        assert output_labels.count("good") == 191 and output_labels.count("bad") == 196

    def test_answer_side_branch_counts(self, dataset):
        campaign, records = dataset
        report = funnel(campaign, records, "output")
        clear = report.entry("clear")
        assert clear.presented == 387
        assert clear.answer_counts == {"yes": 230, "no": 157}
        assert report.entry("answer_relevant").answer_counts["yes"] == 146
        accuracy = report.entry("answer_accuracy").answer_counts
        assert accuracy["accurate"] + accuracy["partially_accurate"] == 144
        explanation_rel = report.entry("explanation_relevant")
        assert explanation_rel.presented == 157 + 84  # unclear plus clear-but-irrelevant
        assert explanation_rel.answer_counts["yes"] == 116
        explanation_acc = report.entry("explanation_accuracy")
        assert explanation_acc.presented == 116
        assert (
            explanation_acc.answer_counts["accurate"] + explanation_acc.answer_counts["partially_accurate"]
            == 113
        )

    def test_cross_table_and_association(self, dataset):
        campaign, records = dataset
        table = composite_cross_table(campaign, records)
        assert (table.a, table.b, table.c, table.d) == (132, 59, 115, 81)
        result = chi_square_2x2(table)
        assert result.statistic == pytest.approx(4.56, abs=0.01)
        assert result.p_value == pytest.approx(0.033, abs=0.002)

    def test_time_savings(self, dataset):
        campaign, records = dataset
        report = time_savings(campaign, records, "input")
        assert report.hierarchical_judgments == 2000
        assert report.flat_judgments == 2322
        assert report.saved == 322
        assert report.saved_fraction == pytest.approx(322 / 2322)

    def test_byte_identical_across_runs(self, dataset):
        _, first = dataset
        _, second = reconstruct_dataset()
        assert [record_to_line(r) for r in first] == [record_to_line(r) for r in second]

    def test_journal_replays_cleanly(self, dataset):
        campaign, records = dataset
        state = replay_records(campaign, records)
        assert all(t.is_terminated for t in state.traversals.values())

    def test_each_coach_judges_38_or_39_items(self, dataset):
        campaign, _ = dataset
        loads = sorted(len(v) for v in campaign.assignments.values())
        assert loads == [38, 38, 38] + [39] * 7

    def test_ten_coach_summaries_covering_all_items(self, dataset):
        from hiereval.scoring import evaluator_summaries

        campaign, records = dataset
        summaries = evaluator_summaries(campaign, records)
        assert len(summaries) == 10
        assert sum(s.items_judged_input for s in summaries) == 387
        assert sum(s.items_judged_output for s in summaries) == 387
        assert all(s.mean_elapsed_input is not None for s in summaries)


class TestVerification:
    def test_reconstruction_passes_all_claims(self, dataset):
        campaign, records = dataset
        report = verify_reference_counts(campaign, records)
        assert report.overall_pass, report.as_text()
        assert len(report.claims) == 30
        assert report.notes  # the unreproduced 89/157 figure is recorded

    def test_flipping_one_relevant_judgment_fails_named_claim(self, dataset):
        import dataclasses

        campaign, records = dataset
        mutated = []
        flipped = False
        for record in records:
            if not flipped and record.tree_target == "input" and record.node_id == "relevant" and record.answer == "no":
                mutated.append(dataclasses.replace(record, answer="yes"))
                flipped = True
            else:
                mutated.append(record)
        assert flipped
        report = verify_reference_counts(campaign, mutated)
        assert not report.overall_pass
        failed = {c.claim for c in report.failed_claims()}
        assert "question funnel: relevant presented" in failed

    def test_empty_journal_fails_every_claim(self, dataset):
        campaign, _ = dataset
        report = verify_reference_counts(campaign, [])
        assert not report.overall_pass
        assert all(not claim.ok for claim in report.claims)

    def test_report_serializations(self, dataset):
        campaign, records = dataset
        report = verify_reference_counts(campaign, records)
        payload = report.as_dict()
        assert payload["overall_pass"] is True
        assert _canon.dumps(payload)
        text = report.as_text()
        assert "overall: PASS" in text


class TestEmit:
    def test_emitted_directory_round_trips(self, tmp_path, dataset):
        campaign, records = dataset
        out = tmp_path / "casestudy"
        loaded = emit_dataset(str(out))
        assert (out / "campaign.json").exists()
        assert (out / "journal.jsonl").exists()
        reloaded = load_campaign_dir(str(out))
        assert reloaded.campaign.id == campaign.id
        assert reloaded.campaign.assignments == campaign.assignments
        assert reloaded.read_records() == records
        report = verify_reference_counts(reloaded.campaign, reloaded.read_records())
        assert report.overall_pass

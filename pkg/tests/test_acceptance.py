"""Acceptance suite: the binding criteria, one printed pass/fail line each.

Every criterion runs at its stated tolerance; a criterion test first
collects failures, prints its verdict line (visible in normal pytest
runs), and then asserts.
"""

from __future__ import annotations

import json
import random
import time

import pytest
from click.testing import CliRunner

import oracles
from conftest import (
    assert_early_termination_sound,
    assert_funnel_conservation,
    assert_terminal_coverage,
    random_campaign,
)
from hiereval.campaign import replay_records
from hiereval.cli import main
from hiereval.simulate import run_policy
from hiereval.stats import (
    ContingencyTable,
    RatingsMatrix,
    chi_square_2x2,
    chi_square_sf,
    cohens_kappa,
    fleiss_kappa,
    kendall_tau,
    krippendorff_alpha,
    percentage_agreement,
)


@pytest.fixture()
def verdict(capsys):
    def _print(name: str, failures: list[str]) -> None:
        with capsys.disabled():
            print(f"{'PASS' if not failures else 'FAIL'}: {name}")
        assert not failures, f"{name}:\n" + "\n".join(failures)

    return _print


@pytest.fixture(scope="module")
def emitted_dir(tmp_path_factory):
    """casestudy emit through the CLI, timed."""
    out = tmp_path_factory.mktemp("acceptance") / "reference"
    runner = CliRunner()
    started = time.monotonic()
    result = runner.invoke(main, ["casestudy", "emit", "--out", str(out)])
    elapsed = time.monotonic() - started
    assert result.exit_code == 0, result.output
    return out, elapsed, runner


def report_json(runner: CliRunner, campaign_dir, kind: str) -> dict:
    result = runner.invoke(main, ["report", "--campaign-dir", str(campaign_dir), "--kind", kind, "--json"])
    assert result.exit_code == 0, result.output
    return json.loads(result.output)


def test_criterion_1_case_study_funnel_reproduction(emitted_dir, verdict):
    out, emit_elapsed, runner = emitted_dir
    failures: list[str] = []
    started = time.monotonic()
    funnel = report_json(runner, out, "funnel_input")
    difficulty = report_json(runner, out, "difficulty")
    report_elapsed = time.monotonic() - started

    presented = {entry["node_id"]: entry["presented"] for entry in funnel["entries"]}
    expected = {
        "relevant": 387, "factoid": 383, "answerable": 335,
        "spelling_errors": 327, "grammar_errors": 321, "difficulty": 247,
    }
    for node_id, count in expected.items():
        if presented.get(node_id) != count:
            failures.append(f"funnel {node_id}: expected {count}, got {presented.get(node_id)}")
    if difficulty["counts"] != {"easy": 155, "medium": 74, "hard": 18}:
        failures.append(f"difficulty: {difficulty['counts']}")
    runtime = emit_elapsed + report_elapsed
    if runtime >= 5.0:
        failures.append(f"runtime {runtime:.2f}s exceeds 5s")
    verdict("case-study funnel reproduction (387/383/335/327/321/247, difficulty 155/74/18, <5s)", failures)


def test_criterion_2_answer_side_reproduction(emitted_dir, verdict):
    out, _, runner = emitted_dir
    failures: list[str] = []
    funnel = report_json(runner, out, "funnel_output")
    entries = {entry["node_id"]: entry for entry in funnel["entries"]}

    clear = entries["clear"]["answer_counts"]
    if (clear.get("yes"), clear.get("no")) != (230, 157):
        failures.append(f"clear split: {clear}")
    if entries["answer_relevant"]["answer_counts"].get("yes") != 146:
        failures.append(f"clear-and-relevant: {entries['answer_relevant']['answer_counts']}")
    accuracy = entries["answer_accuracy"]["answer_counts"]
    if accuracy.get("accurate", 0) + accuracy.get("partially_accurate", 0) != 144:
        failures.append(f"clear-path accurate: {accuracy}")
    if entries["explanation_accuracy"]["presented"] != 116:
        failures.append(f"explanation-path pool: {entries['explanation_accuracy']['presented']}")
    explanation_accuracy = entries["explanation_accuracy"]["answer_counts"]
    if explanation_accuracy.get("accurate", 0) + explanation_accuracy.get("partially_accurate", 0) != 113:
        failures.append(f"explanation-path accurate: {explanation_accuracy}")

    chi = report_json(runner, out, "chi_square")
    good_answers = chi["table"]["a"] + chi["table"]["b"]
    if good_answers != 191:
        failures.append(f"composite good answers: {good_answers}")
    verdict("answer-side reproduction (230/157, 146, 144, 113 of 116, good answers 191)", failures)


def test_criterion_3_association_test(emitted_dir, verdict):
    out, _, runner = emitted_dir
    failures: list[str] = []
    chi = report_json(runner, out, "chi_square")
    if chi["table"] != {"a": 132, "b": 59, "c": 115, "d": 81, "n": 387}:
        failures.append(f"cells: {chi['table']}")
    if abs(chi["statistic"] - 4.56) > 0.01:
        failures.append(f"statistic {chi['statistic']}")
    if abs(chi["p_value"] - 0.033) > 0.002:
        failures.append(f"p-value {chi['p_value']}")
    verdict("association test (chi-square 4.56 +/- 0.01, p 0.033 +/- 0.002, cells exact)", failures)


def test_criterion_4_time_savings(emitted_dir, verdict):
    out, _, runner = emitted_dir
    failures: list[str] = []
    payload = report_json(runner, out, "time_savings")["input"]
    if payload.get("hierarchical_judgments") != 2000:
        failures.append(f"hierarchical: {payload}")
    if payload.get("flat_judgments") != 2322:
        failures.append(f"flat: {payload}")
    if payload.get("saved") != 322:
        failures.append(f"saved: {payload}")
    if abs(payload.get("saved_fraction", 0) - 322 / 2322) > 1e-9:
        failures.append(f"fraction: {payload}")
    verdict("time savings (hierarchical 2000 vs flat 2322, saved 322 = 13.9%)", failures)


def _matrix(columns: dict[str, list[str | None]]) -> RatingsMatrix:
    raters = list(columns)
    size = len(next(iter(columns.values())))
    items = [f"u{i}" for i in range(size)]
    values = {
        (items[i], rater): column[i]
        for rater, column in columns.items()
        for i in range(size)
        if column[i] is not None
    }
    return RatingsMatrix(items=items, raters=raters, values=values)


def test_criterion_5_statistics_oracle_suite(verdict):
    failures: list[str] = []
    rng = random.Random(20240601)

    # chi_square_sf vs numerical integration: 130 instances at 1e-8
    xs = [0.05, 0.1, 0.5, 1.0, 2.0, 3.841, 4.56, 5.0, 7.5, 10.0, 20.0, 50.0, 100.0]
    for dof in range(1, 11):
        for x in xs:
            expected = oracles.chi_square_sf_by_integration(x, dof, intervals=20_000)
            if abs(chi_square_sf(x, dof) - expected) > 1e-8:
                failures.append(f"sf({x}, {dof})")

    # percentage agreement and Cohen's kappa vs counting oracles (exact arithmetic)
    checked_pct = checked_kappa = 0
    while checked_pct < 25 or checked_kappa < 25:
        size = rng.randint(1, 8)
        pairs = [(rng.choice("abc"), rng.choice("abc")) for _ in range(size)]
        matrix = _matrix({"r1": [p[0] for p in pairs], "r2": [p[1] for p in pairs]})
        units = matrix.co_rated_units()
        if abs(percentage_agreement(matrix) - oracles.percentage_agreement_pairs(units)) > 1e-12:
            failures.append(f"pct {pairs}")
        checked_pct += 1
        if abs(cohens_kappa(matrix) - oracles.cohens_kappa_confusion(pairs)) > 1e-12:
            failures.append(f"kappa {pairs}")
        checked_kappa += 1

    # Fleiss' kappa vs exact-fraction oracle
    for _ in range(25):
        raters = rng.randint(2, 5)
        width = rng.randint(2, 4)
        rows = []
        for _ in range(rng.randint(1, 6)):
            row = [0] * width
            for _ in range(raters):
                row[rng.randrange(width)] += 1
            rows.append(row)
        expected = oracles.fleiss_kappa_fractions(rows, raters)
        got = fleiss_kappa(rows, raters_per_item=raters)
        if (expected is None) != (got is None):
            failures.append(f"fleiss definedness {rows}")
        elif expected is not None and abs(got - expected) > 1e-12:
            failures.append(f"fleiss {rows}")

    # Krippendorff's alpha vs pairable-values oracle
    checked = 0
    while checked < 25:
        size = rng.randint(2, 6)
        columns = {
            f"r{j}": [rng.choice(["x", "y", "z", None, None]) for _ in range(size)]
            for j in range(rng.randint(2, 4))
        }
        matrix = _matrix(columns)
        if not matrix.co_rated_units():
            continue
        expected = oracles.krippendorff_alpha_pairable(matrix.co_rated_units())
        got = krippendorff_alpha(matrix)
        if (expected is None) != (got is None):
            failures.append(f"alpha definedness {columns}")
        elif expected is not None and abs(got - expected) > 1e-12:
            failures.append(f"alpha {columns}")
        checked += 1

    # Kendall's tau-b vs rank-form oracle
    for _ in range(25):
        size = rng.randint(2, 9)
        x = [rng.randint(1, 5) for _ in range(size)]
        y = [rng.randint(1, 5) for _ in range(size)]
        expected = oracles.kendall_tau_b_rankform(x, y)
        got = kendall_tau(x, y)
        if (expected is None) != (got is None):
            failures.append(f"tau definedness {x} {y}")
        elif expected is not None and abs(got - expected) > 1e-12:
            failures.append(f"tau {x} {y}")

    # invariance properties: 1000 seeded randomized trials each
    for trial in range(1000):
        cells = [rng.randint(1, 300) for _ in range(4)]
        table = ContingencyTable(*cells)
        base = chi_square_2x2(table).statistic
        if abs(chi_square_2x2(table.transposed()).statistic - base) > 1e-9 * max(base, 1.0):
            failures.append(f"transposition trial {trial}: {cells}")

    for trial in range(1000):
        dof = rng.randint(1, 10)
        x1 = rng.uniform(0, 80)
        x2 = x1 + rng.uniform(0, 20)
        if chi_square_sf(x2, dof) > chi_square_sf(x1, dof) + 1e-15:
            failures.append(f"sf monotonicity trial {trial}: {x1} {x2} {dof}")

    permutation = {"a": "b", "b": "c", "c": "a"}
    for trial in range(1000):
        size = rng.randint(1, 8)
        pairs = [(rng.choice("abc"), rng.choice("abc")) for _ in range(size)]
        base_matrix = _matrix({"r1": [p[0] for p in pairs], "r2": [p[1] for p in pairs]})
        permuted_matrix = _matrix(
            {"r1": [permutation[p[0]] for p in pairs], "r2": [permutation[p[1]] for p in pairs]}
        )
        if abs(cohens_kappa(base_matrix) - cohens_kappa(permuted_matrix)) > 1e-12:
            failures.append(f"kappa permutation trial {trial}")
        base_alpha = krippendorff_alpha(base_matrix)
        permuted_alpha = krippendorff_alpha(permuted_matrix)
        if (base_alpha is None) != (permuted_alpha is None):
            failures.append(f"alpha permutation definedness trial {trial}")
        elif base_alpha is not None and abs(base_alpha - permuted_alpha) > 1e-12:
            failures.append(f"alpha permutation trial {trial}")

    verdict("statistics oracle suite (>=20 instances per coefficient, 1000-trial invariances)", failures)


def test_criterion_6_engine_property_suite(verdict):
    failures: list[str] = []
    rng = random.Random(987654)
    campaigns = 0
    while campaigns < 100:
        campaign = random_campaign(rng, max_items=50)
        seed = rng.randrange(10**9)
        live = run_policy(campaign, "seeded_random", seed=seed)
        label = f"campaign {campaigns} (seed {seed})"

        # replay determinism, prefix-closed: exhaustive on small journals,
        # sampled cuts plus the full journal otherwise
        total = len(live.records)
        if total <= 60:
            cuts = list(range(total + 1))
        else:
            cuts = sorted({0, total, *(rng.randint(1, total - 1) for _ in range(5))})
        digests = {}
        replayed = replay_records(campaign, [])
        next_cut = iter(cuts)
        pending = next(next_cut)
        for applied, record in enumerate([None] + list(live.records)):
            if record is not None:
                replayed.apply_record(record)
            if applied == pending:
                digests[applied] = replayed.digest()
                try:
                    pending = next(next_cut)
                except StopIteration:
                    break
        if digests.get(total) is None:
            digests[total] = replayed.digest()
        for cut in cuts:
            fresh = replay_records(campaign, live.records[:cut])
            if fresh.digest() != digests[cut]:
                failures.append(f"{label}: prefix {cut} replay diverged")
        if replay_records(campaign, live.records).digest() != live.digest():
            failures.append(f"{label}: full replay diverged")

        try:
            for target in ("input", "output"):
                assert_funnel_conservation(campaign, live, target)
        except AssertionError as exc:
            failures.append(f"{label}: funnel conservation: {exc}")
        try:
            assert_early_termination_sound(campaign, live)
        except AssertionError as exc:
            failures.append(f"{label}: early termination: {exc}")
        try:
            assert_terminal_coverage(campaign.input_tree)
            assert_terminal_coverage(campaign.output_tree)
        except AssertionError as exc:
            failures.append(f"{label}: terminal coverage: {exc}")

        # every terminated traversal's answer sequence is an enumerated path
        from hiereval.trees import enumerate_paths

        for target in ("input", "output"):
            tree = campaign.tree_for(target)
            paths = dict(enumerate_paths(tree))
            for traversal in live.traversals.values():
                if traversal.tree_target != target or not traversal.is_terminated:
                    continue
                answers = tuple(answer for _, answer, _ in traversal.history)
                if answers not in paths:
                    failures.append(f"{label}: history {answers} is not an enumerated path")
                elif paths[answers] != traversal.outcome:
                    failures.append(f"{label}: outcome mismatch on {answers}")
        campaigns += 1

    verdict("engine property suite (100 random campaigns: replay, conservation, soundness, coverage)", failures)

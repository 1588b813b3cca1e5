"""Operator command line.

Subcommands: validate, campaign create, items import, simulate, report,
stats, serve, casestudy emit, casestudy verify.  Exit status semantics are
fixed across all subcommands: 0 success, 1 validation failure, 2 I/O
error, 3 verification failure.

The default campaign directory can be set with HIEREVAL_CAMPAIGN_DIR.
"""

from __future__ import annotations

import csv
import json
import os
import sys
from dataclasses import dataclass

import click
from filelock import Timeout

from . import _canon, casestudy, scoring, simulate, stats, store, trees
from .campaign import (
    CampaignError,
    Evaluator,
    JournalError,
    create_campaign,
    records_up_to,
    write_journal,
)
from .scoring import REPORT_KINDS

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_VERIFICATION = 3

CAMPAIGN_DIR_OPTION = dict(
    envvar="HIEREVAL_CAMPAIGN_DIR",
    required=True,
    type=click.Path(file_okay=False),
    help="Campaign directory (default: $HIEREVAL_CAMPAIGN_DIR).",
)


@dataclass
class CommandOutcome:
    """Uniform result of one subcommand run."""

    status: int
    text: str
    payload: dict | None = None


def _finish(outcome: CommandOutcome, as_json: bool = False) -> None:
    if as_json and outcome.payload is not None:
        click.echo(_canon.dumps(outcome.payload))
    elif outcome.text:
        click.echo(outcome.text)
    sys.exit(outcome.status)


def _load_dir(path: str) -> store.CampaignDir:
    try:
        return store.load_campaign_dir(path)
    except FileNotFoundError as exc:
        sys.exit(_fail_io(f"cannot load campaign dir {path}: {exc}"))
    except (trees.TreeError, CampaignError, json.JSONDecodeError, KeyError) as exc:
        click.echo(f"invalid campaign dir {path}: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)


def _fail_io(message: str) -> int:
    click.echo(message, err=True)
    return EXIT_IO


@click.group()
def main() -> None:
    """Hierarchical human-evaluation engine."""


# -- validate ---------------------------------------------------------------


@main.command()
@click.option("--tree", "tree_path", required=True, type=click.Path(dir_okay=False), help="Tree-definition file.")
def validate(tree_path: str) -> None:
    """Check a tree-definition file against every invariant."""
    try:
        with open(tree_path, encoding="utf-8") as handle:
            document = handle.read()
    except OSError as exc:
        sys.exit(_fail_io(f"cannot read {tree_path}: {exc}"))
    try:
        tree = trees.decode_tree(document)
    except trees.TreeSyntaxError as exc:
        _finish(CommandOutcome(EXIT_VALIDATION, f"syntax error: {exc}"))
        return
    violations = trees.validate_tree(tree)
    if violations:
        text = "\n".join(f"{v.kind}: {v.message}" for v in violations)
        _finish(CommandOutcome(EXIT_VALIDATION, text))
    _finish(CommandOutcome(EXIT_OK, f"ok: {tree.id} ({len(tree.nodes)} nodes)"))


# -- campaign create / items import ----------------------------------------


@main.group()
def campaign() -> None:
    """Campaign lifecycle commands."""


@campaign.command("create")
@click.option("--campaign-dir", "campaign_dir", **CAMPAIGN_DIR_OPTION)
@click.option("--input-tree", required=True, type=click.Path(dir_okay=False))
@click.option("--output-tree", required=True, type=click.Path(dir_okay=False))
@click.option("--items", "items_path", required=True, type=click.Path(dir_okay=False))
@click.option("--evaluators", "evaluators_path", required=True, type=click.Path(dir_okay=False),
              help="JSON list of {id, display_name, token} objects.")
@click.option("--redundancy", default=1, show_default=True, type=int, help="Judges per item.")
@click.option("--seed", default=0, show_default=True, type=int, help="Shuffle seed for item order.")
@click.option("--id", "campaign_id", default=None, help="Campaign id (default: directory name).")
def campaign_create(
    campaign_dir: str,
    input_tree: str,
    output_tree: str,
    items_path: str,
    evaluators_path: str,
    redundancy: int,
    seed: int,
    campaign_id: str | None,
) -> None:
    """Create a campaign directory from trees, items, and an evaluator roster."""
    try:
        input_metric = trees.load_tree_file(input_tree)
        output_metric = trees.load_tree_file(output_tree)
        items = store.load_items_file(items_path)
        with open(evaluators_path, encoding="utf-8") as handle:
            roster_raw = json.load(handle)
    except OSError as exc:
        sys.exit(_fail_io(str(exc)))
    except (trees.TreeError, json.JSONDecodeError, CampaignError, KeyError) as exc:
        _finish(CommandOutcome(EXIT_VALIDATION, f"invalid input: {exc}"))
        return
    try:
        roster = [
            Evaluator(id=e["id"], display_name=e.get("display_name", e["id"]), token=e["token"])
            for e in roster_raw
        ]
        built = create_campaign(
            campaign_id=campaign_id or os.path.basename(os.path.abspath(campaign_dir)),
            input_tree=input_metric,
            output_tree=output_metric,
            items=items,
            evaluators=roster,
            redundancy=redundancy,
            shuffle_seed=seed,
        )
    except (CampaignError, trees.TreeError, KeyError, TypeError) as exc:
        _finish(CommandOutcome(EXIT_VALIDATION, f"invalid campaign: {exc}"))
        return
    store.save_campaign_dir(campaign_dir, built)
    _finish(
        CommandOutcome(
            EXIT_OK,
            f"created campaign {built.id}: {len(built.items)} items, "
            f"{len(built.evaluators)} evaluators, redundancy {built.redundancy}",
        )
    )


@main.group()
def items() -> None:
    """Item ingestion commands."""


@items.command("import")
@click.option("--campaign-dir", "campaign_dir", **CAMPAIGN_DIR_OPTION)
@click.option("--items", "items_path", required=True, type=click.Path(dir_okay=False))
def items_import(campaign_dir: str, items_path: str) -> None:
    """Replace the campaign's item set (only while the journal is empty)."""
    loaded = _load_dir(campaign_dir)
    if loaded.read_records():
        _finish(CommandOutcome(EXIT_VALIDATION, "journal is not empty; items can no longer change"))
    try:
        new_items = store.load_items_file(items_path)
    except OSError as exc:
        sys.exit(_fail_io(str(exc)))
    except (KeyError, ValueError) as exc:
        _finish(CommandOutcome(EXIT_VALIDATION, f"invalid items file: {exc}"))
        return
    try:
        rebuilt = create_campaign(
            campaign_id=loaded.campaign.id,
            input_tree=loaded.campaign.input_tree,
            output_tree=loaded.campaign.output_tree,
            items=new_items,
            evaluators=loaded.campaign.evaluators,
            redundancy=loaded.campaign.redundancy,
            shuffle_seed=loaded.campaign.shuffle_seed,
        )
    except CampaignError as exc:
        _finish(CommandOutcome(EXIT_VALIDATION, f"invalid items: {exc}"))
        return
    store.save_campaign_dir(campaign_dir, rebuilt)
    _finish(CommandOutcome(EXIT_OK, f"imported {len(new_items)} items into {rebuilt.id}"))


# -- simulate ----------------------------------------------------------------


@main.command("simulate")
@click.option("--campaign-dir", "campaign_dir", **CAMPAIGN_DIR_OPTION)
@click.option("--policy", type=click.Choice(simulate.POLICIES), required=True)
@click.option("--seed", default=0, show_default=True, type=int)
def simulate_cmd(campaign_dir: str, policy: str, seed: int) -> None:
    """Drive every remaining traversal to termination under a scripted policy."""
    loaded = _load_dir(campaign_dir)
    try:
        state = loaded.replayed_state()
    except JournalError as exc:
        sys.exit(_fail_io(f"corrupt journal: {exc}"))
    before = len(state.records)
    simulate.run_policy(loaded.campaign, policy, seed=seed, state=state)
    try:
        with loaded.lock.acquire(timeout=10):
            write_journal(loaded.journal_path, state.records)
    except Timeout:
        _finish(CommandOutcome(EXIT_VALIDATION, "campaign journal is locked by another process"))
    _finish(
        CommandOutcome(
            EXIT_OK,
            f"simulated {len(state.records) - before} judgments under {policy} "
            f"(journal now {len(state.records)} records)",
        )
    )


# -- report ------------------------------------------------------------------


@main.command("report")
@click.option("--campaign-dir", "campaign_dir", **CAMPAIGN_DIR_OPTION)
@click.option("--kind", type=click.Choice(REPORT_KINDS), required=True)
@click.option("--as-of", "as_of", type=int, default=None, help="Snapshot at this sequence_no.")
@click.option("--json", "as_json", is_flag=True, help="Print the canonical JSON payload only.")
def report_cmd(campaign_dir: str, kind: str, as_of: int | None, as_json: bool) -> None:
    """Emit one scoring/stats report as text (or canonical JSON with --json)."""
    loaded = _load_dir(campaign_dir)
    try:
        records = records_up_to(loaded.read_records(), as_of)
        payload = scoring.render_report(loaded.campaign, records, kind)
    except JournalError as exc:
        sys.exit(_fail_io(f"corrupt journal: {exc}"))
    _finish(CommandOutcome(EXIT_OK, scoring.render_report_text(payload), payload), as_json)


# -- stats -------------------------------------------------------------------


@main.command("stats")
@click.option("--cells", default=None, help="Inline 2x2 table: a,b,c,d.")
@click.option("--campaign-dir", "campaign_dir", envvar="HIEREVAL_CAMPAIGN_DIR", default=None,
              type=click.Path(file_okay=False), help="Derive the 2x2 table from this campaign's journal.")
@click.option("--ratings", "ratings_path", default=None, type=click.Path(dir_okay=False),
              help="Delimited ratings file: first column item id, one column per rater.")
@click.option("--missing", "missing_token", default="", show_default=True,
              help="Token marking a missing rating in --ratings files.")
@click.option("--yates", is_flag=True, help="Apply the Yates continuity correction.")
@click.option("--json", "as_json", is_flag=True)
def stats_cmd(
    cells: str | None,
    campaign_dir: str | None,
    ratings_path: str | None,
    missing_token: str,
    yates: bool,
    as_json: bool,
) -> None:
    """Chi-square association test and inter-annotator agreement coefficients."""
    if ratings_path is not None:
        _finish(_stats_ratings(ratings_path, missing_token), as_json)
    if cells is not None:
        try:
            parsed = [int(part) for part in cells.split(",")]
            table = stats.contingency_from_cells(parsed)
        except ValueError as exc:
            _finish(CommandOutcome(EXIT_VALIDATION, f"invalid --cells: {exc}"))
            return
    elif campaign_dir is not None:
        loaded = _load_dir(campaign_dir)
        try:
            table = scoring.composite_cross_table(loaded.campaign, loaded.read_records())
        except JournalError as exc:
            sys.exit(_fail_io(f"corrupt journal: {exc}"))
    else:
        _finish(CommandOutcome(EXIT_VALIDATION, "one of --cells, --campaign-dir, --ratings is required"))
        return
    try:
        result = stats.chi_square_2x2(table, yates_correction=yates)
    except ValueError as exc:
        _finish(CommandOutcome(EXIT_VALIDATION, f"test undefined: {exc}"))
        return
    payload = {
        "table": {"a": table.a, "b": table.b, "c": table.c, "d": table.d, "n": table.n},
        "statistic": result.statistic,
        "p_value": result.p_value,
        "dof": result.dof,
        "expected": [list(row) for row in result.expected],
        "yates_correction": result.yates_correction,
        "low_expected_warning": result.low_expected_warning,
    }
    text = f"chi_square={result.statistic:.4f}  p={result.p_value:.4f}  dof={result.dof}"
    if result.low_expected_warning:
        text += "\nwarning: an expected cell count is below 5"
    _finish(CommandOutcome(EXIT_OK, text, payload), as_json)


def _stats_ratings(path: str, missing_token: str) -> CommandOutcome:
    try:
        with open(path, encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle, delimiter="\t" if path.endswith(".tsv") else ","))
    except OSError as exc:
        sys.exit(_fail_io(str(exc)))
    if len(rows) < 2 or len(rows[0]) < 3:
        return CommandOutcome(EXIT_VALIDATION, "ratings file needs a header and at least two rater columns")
    raters = rows[0][1:]
    items = [row[0] for row in rows[1:]]
    values: dict[tuple[str, str], str] = {}
    for row in rows[1:]:
        for rater, value in zip(raters, row[1:]):
            if value != missing_token:
                values[(row[0], rater)] = value
    matrix = stats.RatingsMatrix(items=items, raters=raters, values=values)

    payload: dict = {"raters": raters, "items": len(items)}
    try:
        payload["percentage_agreement"] = stats.percentage_agreement(matrix)
    except stats.NoCoRatedItemsError as exc:
        return CommandOutcome(EXIT_VALIDATION, f"no co-rated items: {exc}")
    payload["cohens_kappa"] = stats.cohens_kappa(matrix) if len(raters) == 2 else None
    payload["krippendorff_alpha"] = stats.krippendorff_alpha(matrix)
    complete = all((item, rater) in values for item in items for rater in raters)
    if complete:
        categories = sorted({v for v in values.values()})
        counts = [
            [sum(values[(item, rater)] == category for rater in raters) for category in categories]
            for item in items
        ]
        payload["fleiss_kappa"] = stats.fleiss_kappa(counts, raters_per_item=len(raters))
    else:
        payload["fleiss_kappa"] = None
    if len(raters) == 2:
        try:
            x = [float(values[(item, raters[0])]) for item in items if (item, raters[0]) in values and (item, raters[1]) in values]
            y = [float(values[(item, raters[1])]) for item in items if (item, raters[0]) in values and (item, raters[1]) in values]
            payload["kendall_tau"] = stats.kendall_tau(x, y) if len(x) >= 2 else None
        except ValueError:
            payload["kendall_tau"] = None
    else:
        payload["kendall_tau"] = None

    def show(value: float | None) -> str:
        return "undefined" if value is None else f"{value:.4f}"

    text = "\n".join(
        [
            f"percentage_agreement  {show(payload['percentage_agreement'])}",
            f"cohens_kappa          {show(payload['cohens_kappa'])}",
            f"fleiss_kappa          {show(payload['fleiss_kappa'])}",
            f"krippendorff_alpha    {show(payload['krippendorff_alpha'])}",
            f"kendall_tau           {show(payload['kendall_tau'])}",
        ]
    )
    return CommandOutcome(EXIT_OK, text, payload)


# -- serve -------------------------------------------------------------------


@main.command("serve")
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--campaign-dir", "campaign_dir", **CAMPAIGN_DIR_OPTION)
def serve_cmd(port: int, host: str, campaign_dir: str) -> None:
    """Serve campaigns over HTTP for live evaluator sessions."""
    import uvicorn

    from .server import app_for_directory

    try:
        app = app_for_directory(campaign_dir)
    except FileNotFoundError as exc:
        sys.exit(_fail_io(str(exc)))
    # hold each campaign's advisory journal lock for the server's lifetime,
    # so concurrent CLI writers against the same dir are refused
    for server_host in app.state.hosts.values():
        try:
            server_host.dir.lock.acquire(timeout=1)
        except Timeout:
            _finish(CommandOutcome(EXIT_VALIDATION, f"campaign {server_host.campaign.id} is locked by another process"))
    uvicorn.run(app, host=host, port=port, log_level="info")


# -- casestudy ---------------------------------------------------------------


@main.group("casestudy")
def casestudy_group() -> None:
    """Reference-campaign reconstruction and verification."""


@casestudy_group.command("emit")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def casestudy_emit(out_dir: str) -> None:
    """Write the reference campaign (config, trees, items, journal) to a directory."""
    try:
        loaded = casestudy.emit_dataset(out_dir)
    except OSError as exc:
        sys.exit(_fail_io(str(exc)))
    records = loaded.read_records()
    _finish(
        CommandOutcome(
            EXIT_OK,
            f"emitted {loaded.campaign.id}: {len(loaded.campaign.items)} items, "
            f"{len(records)} journal records -> {out_dir}",
        )
    )


@casestudy_group.command("verify")
@click.argument("campaign_dir", type=click.Path(file_okay=False))
@click.option("--json", "as_json", is_flag=True)
def casestudy_verify(campaign_dir: str, as_json: bool) -> None:
    """Re-check every pinned aggregate count against the directory's journal."""
    loaded = _load_dir(campaign_dir)
    try:
        records = loaded.read_records()
    except JournalError as exc:
        sys.exit(_fail_io(f"corrupt journal: {exc}"))
    report = casestudy.verify_reference_counts(loaded.campaign, records)
    status = EXIT_OK if report.overall_pass else EXIT_VERIFICATION
    _finish(CommandOutcome(status, report.as_text(), report.as_dict()), as_json)


if __name__ == "__main__":
    main()

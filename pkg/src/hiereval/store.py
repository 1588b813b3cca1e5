"""Campaign directory layout: configuration, trees, items, and journal on disk.

A campaign directory contains:

    campaign.json       id, redundancy, shuffle_seed, evaluator roster,
                        and the file names of the two trees and the items file
    <input tree>.json   tree-definition documents
    <output tree>.json
    items.json          list of item objects (CSV import is converted on write)
    journal.jsonl       append-only judgment journal (may be absent or empty)

Concurrent writers are serialized by an advisory lock file next to the
journal.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

from filelock import FileLock

from . import campaign as campaign_mod
from . import trees as trees_mod
from .campaign import Campaign, Evaluator, Item, JudgmentRecord

CAMPAIGN_FILE = "campaign.json"
JOURNAL_FILE = "journal.jsonl"
LOCK_FILE = "journal.lock"


@dataclass
class CampaignDir:
    path: str
    campaign: Campaign
    _lock: FileLock | None = field(default=None, repr=False, compare=False)

    @property
    def journal_path(self) -> str:
        return os.path.join(self.path, JOURNAL_FILE)

    @property
    def lock(self) -> FileLock:
        # one FileLock instance per directory handle: flock is per file
        # descriptor, so a second instance on the same path would deadlock
        if self._lock is None:
            self._lock = FileLock(os.path.join(self.path, LOCK_FILE))
        return self._lock

    def read_records(self) -> list[JudgmentRecord]:
        if not os.path.exists(self.journal_path):
            return []
        return campaign_mod.read_journal(self.journal_path)

    def replayed_state(self) -> campaign_mod.CampaignState:
        return campaign_mod.replay_records(self.campaign, self.read_records())

    def append_record(self, record: JudgmentRecord) -> None:
        campaign_mod.append_journal(self.journal_path, record)

    def write_records(self, records: list[JudgmentRecord]) -> None:
        with self.lock:
            campaign_mod.write_journal(self.journal_path, records)


def load_items_file(path: str) -> list[Item]:
    """Read items from a JSON array, JSON-lines, or delimited (CSV) file."""
    if path.endswith(".csv") or path.endswith(".tsv"):
        delimiter = "\t" if path.endswith(".tsv") else ","
        with open(path, encoding="utf-8", newline="") as handle:
            rows = list(csv.DictReader(handle, delimiter=delimiter))
        return [_item_from_raw(row) for row in rows]
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    stripped = text.lstrip()
    if stripped.startswith("["):
        raw_items = json.loads(text)
    else:
        raw_items = [json.loads(line) for line in text.splitlines() if line.strip()]
    return [_item_from_raw(raw) for raw in raw_items]


def _item_from_raw(raw: dict) -> Item:
    return Item(
        id=str(raw["id"]),
        input_text=str(raw["input_text"]),
        output_text=str(raw["output_text"]),
        explanation_text=raw.get("explanation_text") or None,
        source_tag=raw.get("source_tag") or None,
    )


def _item_to_raw(item: Item) -> dict:
    raw = {"id": item.id, "input_text": item.input_text, "output_text": item.output_text}
    if item.explanation_text is not None:
        raw["explanation_text"] = item.explanation_text
    if item.source_tag is not None:
        raw["source_tag"] = item.source_tag
    return raw


def write_items_file(path: str, items: list[Item]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump([_item_to_raw(item) for item in items], handle, indent=2, ensure_ascii=False)
        handle.write("\n")


def save_campaign_dir(
    path: str,
    campaign: Campaign,
    records: list[JudgmentRecord] | None = None,
) -> CampaignDir:
    """Write a complete campaign directory (trees, items, config, journal)."""
    os.makedirs(path, exist_ok=True)
    input_tree_file = f"{campaign.input_tree.id}.json"
    output_tree_file = f"{campaign.output_tree.id}.json"
    for tree, filename in ((campaign.input_tree, input_tree_file), (campaign.output_tree, output_tree_file)):
        with open(os.path.join(path, filename), "w", encoding="utf-8") as handle:
            handle.write(trees_mod.serialize_tree(tree))
    write_items_file(os.path.join(path, "items.json"), campaign.items)
    config = {
        "id": campaign.id,
        "input_tree": input_tree_file,
        "output_tree": output_tree_file,
        "items_file": "items.json",
        "redundancy": campaign.redundancy,
        "shuffle_seed": campaign.shuffle_seed,
        "evaluators": [
            {"id": e.id, "display_name": e.display_name, "token": e.token} for e in campaign.evaluators
        ],
    }
    with open(os.path.join(path, CAMPAIGN_FILE), "w", encoding="utf-8") as handle:
        json.dump(config, handle, indent=2, ensure_ascii=False)
        handle.write("\n")
    loaded = CampaignDir(path=path, campaign=campaign)
    if records is not None:
        loaded.write_records(records)
    elif not os.path.exists(loaded.journal_path):
        open(loaded.journal_path, "w", encoding="utf-8").close()
    return loaded


def load_campaign_dir(path: str) -> CampaignDir:
    """Load a campaign directory and recompute the assignment table."""
    config_path = os.path.join(path, CAMPAIGN_FILE)
    with open(config_path, encoding="utf-8") as handle:
        config = json.load(handle)
    input_tree = trees_mod.load_tree_file(os.path.join(path, config["input_tree"]))
    output_tree = trees_mod.load_tree_file(os.path.join(path, config["output_tree"]))
    items = load_items_file(os.path.join(path, config["items_file"]))
    evaluators = [
        Evaluator(id=e["id"], display_name=e.get("display_name", e["id"]), token=e["token"])
        for e in config["evaluators"]
    ]
    campaign = campaign_mod.create_campaign(
        campaign_id=config["id"],
        input_tree=input_tree,
        output_tree=output_tree,
        items=items,
        evaluators=evaluators,
        redundancy=int(config.get("redundancy", 1)),
        shuffle_seed=int(config.get("shuffle_seed", 0)),
    )
    return CampaignDir(path=path, campaign=campaign)

"""Line-delimited JSON persistence for the core types.

One UTF-8 JSON object per line, each carrying a top-level "schema_version"
(currently "1") and a "record_type" discriminator. Field names match the
type definitions (snake_case). Keys are sorted so reruns with a warm cache
rewrite byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

from .alignment import AlignedItems, Assignment
from .model import (
    DatasetId,
    DecisionLabel,
    Dispute,
    GroundTruth,
    LabeledItem,
    PartyRole,
    ResolutionOutput,
    Strategy,
    StrengthLabel,
    StructuralElement,
    StructuredSummary,
)

SCHEMA_VERSION = "1"


class PersistenceError(Exception):
    pass


def dumps_record(record: dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False)


def write_records(path: str | Path, records: Iterable[dict[str, Any]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(dumps_record(record) + "\n")


def read_records(path: str | Path) -> list[dict[str, Any]]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PersistenceError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            version = record.get("schema_version")
            if version != SCHEMA_VERSION:
                raise PersistenceError(
                    f"{path}:{lineno}: unsupported schema_version {version!r}"
                )
            records.append(record)
    return records


def _party_map(mapping: dict[PartyRole, Any], convert) -> dict[str, Any]:
    return {role.value: convert(value) for role, value in sorted(mapping.items(), key=lambda kv: kv[0].value)}


def _labeled_item_to_dict(item: LabeledItem) -> dict[str, Any]:
    return {
        "text": item.text,
        "label": item.label.value if item.label is not None else None,
        "justification": item.justification,
    }


def _labeled_item_from_dict(data: dict[str, Any], label_enum) -> LabeledItem:
    raw = data.get("label")
    return LabeledItem(
        text=data["text"],
        label=label_enum(raw) if raw is not None else None,
        justification=data.get("justification", ""),
    )


def dispute_to_record(dispute: Dispute) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "record_type": "dispute",
        "dispute_id": dispute.dispute_id,
        "dataset": dispute.dataset.value,
        "raw_text": dispute.raw_text,
        "sentence_roles": (
            [[text, role] for text, role in dispute.sentence_roles]
            if dispute.sentence_roles is not None
            else None
        ),
    }


def dispute_from_record(record: dict[str, Any]) -> Dispute:
    roles = record.get("sentence_roles")
    return Dispute(
        dispute_id=record["dispute_id"],
        dataset=DatasetId(record["dataset"]),
        raw_text=record["raw_text"],
        sentence_roles=[(text, role) for text, role in roles] if roles is not None else None,
    )


def summary_to_record(summary: StructuredSummary) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "record_type": "structured_summary",
        "dispute_id": summary.dispute_id,
        "source_model": summary.source_model,
        "elements": {
            el.value: text
            for el, text in sorted(summary.elements.items(), key=lambda kv: kv[0].value)
        },
        "demands": _party_map(summary.demands, list),
        "arguments": _party_map(summary.arguments, list),
        "winning_party": summary.winning_party.value if summary.winning_party else None,
        "warnings": list(summary.warnings),
    }


def summary_from_record(record: dict[str, Any]) -> StructuredSummary:
    winner = record.get("winning_party")
    return StructuredSummary(
        dispute_id=record["dispute_id"],
        source_model=record["source_model"],
        elements={
            StructuralElement(key): text for key, text in record.get("elements", {}).items()
        },
        demands={
            PartyRole(key): list(items) for key, items in record.get("demands", {}).items()
        },
        arguments={
            PartyRole(key): list(items) for key, items in record.get("arguments", {}).items()
        },
        winning_party=PartyRole(winner) if winner else None,
        warnings=list(record.get("warnings", [])),
    )


def resolution_to_record(output: ResolutionOutput) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "record_type": "resolution_output",
        "dispute_id": output.dispute_id,
        "model": output.model,
        "strategy": output.strategy.value,
        "stronger_party": output.stronger_party.value if output.stronger_party else None,
        "stronger_party_justification": output.stronger_party_justification,
        "demand_decisions": _party_map(
            output.demand_decisions, lambda items: [_labeled_item_to_dict(i) for i in items]
        ),
        "argument_evaluations": _party_map(
            output.argument_evaluations, lambda items: [_labeled_item_to_dict(i) for i in items]
        ),
        "diagnostics": list(output.diagnostics),
    }


def resolution_from_record(record: dict[str, Any]) -> ResolutionOutput:
    winner = record.get("stronger_party")
    return ResolutionOutput(
        dispute_id=record["dispute_id"],
        model=record["model"],
        strategy=Strategy(record["strategy"]),
        stronger_party=PartyRole(winner) if winner else None,
        stronger_party_justification=record.get("stronger_party_justification", ""),
        demand_decisions={
            PartyRole(key): [_labeled_item_from_dict(d, DecisionLabel) for d in items]
            for key, items in record.get("demand_decisions", {}).items()
        },
        argument_evaluations={
            PartyRole(key): [_labeled_item_from_dict(d, StrengthLabel) for d in items]
            for key, items in record.get("argument_evaluations", {}).items()
        },
        diagnostics=list(record.get("diagnostics", [])),
    )


def ground_truth_to_record(gt: GroundTruth) -> dict[str, Any]:
    def pairs(items):
        return [
            {"text": text, "label": label.value if label is not None else None}
            for text, label in items
        ]

    return {
        "schema_version": SCHEMA_VERSION,
        "record_type": "ground_truth",
        "dispute_id": gt.dispute_id,
        "winning_party": gt.winning_party.value,
        "demand_decisions": _party_map(gt.demand_decisions, pairs),
        "argument_evaluations": _party_map(gt.argument_evaluations, pairs),
    }


def aligned_items_to_record(rec: AlignedItems) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "record_type": "aligned_items",
        "dispute_id": rec.dispute_id,
        "model": rec.model,
        "strategy": rec.strategy.value,
        "kind": rec.kind,
        "party": rec.party.value,
        "gt_texts": list(rec.gt_texts),
        "pred_texts": list(rec.pred_texts),
        "pairs": [[r, c] for r, c in rec.assignment.pairs],
        "unmatched_rows": list(rec.assignment.unmatched_rows),
        "unmatched_cols": list(rec.assignment.unmatched_cols),
        "total_cost": rec.assignment.total_cost,
        "pair_distances": list(rec.assignment.pair_distances),
        "diagnostics": list(rec.assignment.diagnostics),
    }


def aligned_items_from_record(record: dict[str, Any]) -> AlignedItems:
    assignment = Assignment(
        pairs=[(r, c) for r, c in record["pairs"]],
        unmatched_rows=list(record.get("unmatched_rows", [])),
        unmatched_cols=list(record.get("unmatched_cols", [])),
        total_cost=record["total_cost"],
        pair_distances=list(record.get("pair_distances", [])),
        diagnostics=list(record.get("diagnostics", [])),
    )
    return AlignedItems(
        dispute_id=record["dispute_id"],
        model=record["model"],
        strategy=Strategy(record["strategy"]),
        kind=record["kind"],
        party=PartyRole(record["party"]),
        gt_texts=list(record["gt_texts"]),
        pred_texts=list(record["pred_texts"]),
        assignment=assignment,
    )


def ground_truth_from_record(record: dict[str, Any]) -> GroundTruth:
    def pairs(items, label_enum):
        return [
            (entry["text"], label_enum(entry["label"]) if entry["label"] is not None else None)
            for entry in items
        ]

    return GroundTruth(
        dispute_id=record["dispute_id"],
        winning_party=PartyRole(record["winning_party"]),
        demand_decisions={
            PartyRole(key): pairs(items, DecisionLabel)
            for key, items in record.get("demand_decisions", {}).items()
        },
        argument_evaluations={
            PartyRole(key): pairs(items, StrengthLabel)
            for key, items in record.get("argument_evaluations", {}).items()
        },
    )

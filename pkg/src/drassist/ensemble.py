"""Majority-vote ensemble over three models' resolution outputs.

Votes are combined at all three prediction levels. Cross-model item
correspondence is indirect: each model's items are aligned to the ground
truth, so a GT index names "the same" demand or argument across models.
Ties (possible only when a vote is absent) go to the highest-priority
model, which is simply the first voter in the given order.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

from .alignment import AlignedItems, Assignment
from .model import (
    GroundTruth,
    LabeledItem,
    PartyRole,
    ResolutionOutput,
    Strategy,
)

T = TypeVar("T")


class EnsembleError(Exception):
    """Base class for ensemble failures."""


class MisalignedAssignmentError(EnsembleError):
    """An assignment references an index outside its item lists."""


class InconsistentAlignmentError(EnsembleError):
    """Models were aligned against different ground-truth item lists."""


def majority_with_priority(votes: Sequence[T | None]) -> T | None:
    """Strict majority among present votes; on a tie, the earliest present
    vote wins (votes arrive in model-priority order); all absent -> None."""
    present = [v for v in votes if v is not None]
    if not present:
        return None
    counts: dict[T, int] = {}
    for v in present:
        counts[v] = counts.get(v, 0) + 1
    best = max(counts.values())
    leaders = [v for v in counts if counts[v] == best]
    if len(leaders) == 1:
        return leaders[0]
    return present[0]


def ensemble_party(votes: Sequence[PartyRole | None]) -> PartyRole | None:
    """Majority stronger-party vote with priority tie-break."""
    return majority_with_priority(votes)


def ensemble_items(
    gt_items: Sequence[str],
    per_model: Sequence[tuple[Sequence[LabeledItem], Assignment]],
) -> list[tuple[int, object | None]]:
    """Per-GT-index majority label across models.

    Each model contributes the label of its item assigned to that GT index,
    or an abstention when unmatched or unlabeled.
    """
    for items, assignment in per_model:
        for row, col in assignment.pairs:
            if row >= len(gt_items) or col >= len(items):
                raise MisalignedAssignmentError(
                    f"pair ({row}, {col}) outside gt={len(gt_items)} "
                    f"pred={len(items)}"
                )
    results: list[tuple[int, object | None]] = []
    for g in range(len(gt_items)):
        votes: list[object | None] = []
        for items, assignment in per_model:
            col = next((c for r, c in assignment.pairs if r == g), None)
            votes.append(items[col].label if col is not None else None)
        results.append((g, majority_with_priority(votes)))
    return results


def _representative_justification(
    votes: Sequence[T | None],
    winner: T | None,
    justifications: Sequence[str],
    sources: Sequence[str],
) -> tuple[str, str]:
    """Justification of the highest-priority model that voted with the
    majority; returns (justification, source model id)."""
    if winner is None:
        return "", ""
    for vote, justification, source in zip(votes, justifications, sources):
        if vote == winner and justification:
            return justification, source
    return "", ""


def gt_texts_from_alignments(
    aligned: Sequence[AlignedItems],
) -> dict[tuple[str, PartyRole], list[str]]:
    """Recover the shared GT item lists carried by alignment records.

    Every model was aligned against the same ground truth, so records for
    one (kind, party) must agree on gt_texts; disagreement means the inputs
    mix alignment runs and is an error.
    """
    texts: dict[tuple[str, PartyRole], list[str]] = {}
    for rec in aligned:
        key = (rec.kind, rec.party)
        if key in texts and texts[key] != list(rec.gt_texts):
            raise InconsistentAlignmentError(
                f"{rec.dispute_id}/{rec.model}: gt_texts for {rec.kind} of "
                f"{rec.party.value} differ from another model's"
            )
        texts[key] = list(rec.gt_texts)
    return texts


def build_ensemble_output(
    ground_truth: GroundTruth,
    per_model: Sequence[
        tuple[ResolutionOutput, dict[tuple[str, PartyRole], Assignment]]
    ],
) -> ResolutionOutput:
    """Combine aligned per-model outputs into one ENSEMBLE ResolutionOutput.

    per_model arrives in priority order; alignments are keyed by
    (kind, party) with kind in {"demand", "argument"}. Item texts come from
    the ground truth (the shared coordinate system); justifications are the
    representative model's, flagged in diagnostics.
    """
    gt_texts: dict[tuple[str, PartyRole], list[str]] = {}
    for kind, gt_lists in (
        ("demand", ground_truth.demand_decisions),
        ("argument", ground_truth.argument_evaluations),
    ):
        for party, gt_pairs in gt_lists.items():
            gt_texts[(kind, party)] = [text for text, _ in gt_pairs]
    return build_ensemble_from_texts(ground_truth.dispute_id, gt_texts, per_model)


def build_ensemble_from_texts(
    dispute_id: str,
    gt_texts: dict[tuple[str, PartyRole], list[str]],
    per_model: Sequence[
        tuple[ResolutionOutput, dict[tuple[str, PartyRole], Assignment]]
    ],
) -> ResolutionOutput:
    """Same combination as build_ensemble_output but with the GT item lists
    given directly, e.g. recovered from persisted alignment records."""
    outputs = [output for output, _ in per_model]
    strategies = {o.strategy for o in outputs}
    if len(strategies) != 1:
        raise ValueError(f"outputs span strategies: {sorted(s.value for s in strategies)}")
    strategy = strategies.pop()
    dispute_ids = {o.dispute_id for o in outputs}
    if dispute_ids != {dispute_id}:
        raise ValueError(
            f"outputs for {sorted(dispute_ids)} vs ground truth {dispute_id!r}"
        )

    diagnostics: list[str] = []
    models = [o.model for o in outputs]

    party_votes = [o.stronger_party for o in outputs]
    stronger = ensemble_party(party_votes)
    present = [v for v in party_votes if v is not None]
    if stronger is not None and present.count(stronger) <= len(present) - present.count(stronger):
        diagnostics.append("PARTY_TIE: broken by model priority")
    justification, source = _representative_justification(
        party_votes,
        stronger,
        [o.stronger_party_justification for o in outputs],
        models,
    )
    if source:
        diagnostics.append(f"representative party justification from {source}")

    def vote_item_lists(kind: str, getter) -> dict[PartyRole, list[LabeledItem]]:
        voted: dict[PartyRole, list[LabeledItem]] = {}
        for party in PartyRole:
            texts = gt_texts.get((kind, party), [])
            if not texts:
                continue
            contributions = []
            for output, alignments in per_model:
                assignment = alignments.get((kind, party))
                items = getter(output).get(party, [])
                if assignment is None:
                    # Model produced nothing alignable for this list.
                    assignment = Assignment(
                        pairs=[], unmatched_rows=list(range(len(texts))),
                        unmatched_cols=[], total_cost=0.0,
                    )
                    items = []
                contributions.append((items, assignment))
            combined = ensemble_items(texts, contributions)
            item_votes: list[LabeledItem] = []
            for g, label in combined:
                votes = []
                justs = []
                for items, assignment in contributions:
                    col = next((c for r, c in assignment.pairs if r == g), None)
                    votes.append(items[col].label if col is not None else None)
                    justs.append(items[col].justification if col is not None else "")
                just, jsource = _representative_justification(votes, label, justs, models)
                if jsource:
                    diagnostics.append(
                        f"representative {kind} justification for "
                        f"{party.value}[{g}] from {jsource}"
                    )
                item_votes.append(
                    LabeledItem(text=texts[g], label=label, justification=just)
                )
            voted[party] = item_votes
        return voted

    demands: dict[PartyRole, list[LabeledItem]] = {}
    arguments: dict[PartyRole, list[LabeledItem]] = {}
    if strategy in (Strategy.S2, Strategy.S3):
        demands = vote_item_lists("demand", lambda o: o.demand_decisions)
    if strategy is Strategy.S3:
        arguments = vote_item_lists("argument", lambda o: o.argument_evaluations)

    return ResolutionOutput(
        dispute_id=dispute_id,
        model="ENSEMBLE(" + ",".join(models) + ")",
        strategy=strategy,
        stronger_party=stronger,
        stronger_party_justification=justification,
        demand_decisions=demands,
        argument_evaluations=arguments,
        diagnostics=diagnostics,
    )

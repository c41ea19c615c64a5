"""Gold-label construction from resolved disputes.

Unlike resolution, the labeling model sees the full dispute text including
the final decision; it reads off what the judge actually decided per demand
and per argument. The winning party comes from the super summary's vote
(auto-insurance) or from decision-pattern matching (domain-name).
"""

from __future__ import annotations

from .gateway import ChatRequest, Gateway, ModelSpec
from .model import (
    DatasetId,
    DecisionLabel,
    Dispute,
    GroundTruth,
    PartyRole,
    StrengthLabel,
    StructuredSummary,
    party_name,
)
from .resolve import LABEL_PATTERN, parse_item_line
from .summarize import asset_text, extract_winner_by_pattern, render_template


class GroundTruthError(Exception):
    """Base class for gold-label construction failures."""


class EmptyItemListError(GroundTruthError):
    """A GT prompt was requested for a party with no items."""


class UnparseableError(GroundTruthError):
    """Labeling response contained no recognizable labeled lines."""


class NoWinnerError(GroundTruthError):
    """No winning party is derivable; the dispute is excluded from
    winner-dependent evaluation."""


_KIND_TEMPLATES = {"demand": "prompts/gt/demands.txt", "argument": "prompts/gt/arguments.txt"}
_KIND_LABELS: dict[str, type] = {"demand": DecisionLabel, "argument": StrengthLabel}


def _build_gt_prompt(
    dispute: Dispute, items: list[str], party: PartyRole, kind: str
) -> str:
    if not items:
        raise EmptyItemListError(
            f"dispute {dispute.dispute_id!r}: no {kind}s listed for "
            f"{party_name(dispute.dataset, party)}"
        )
    numbered = "\n".join(f"{i}. {item}" for i, item in enumerate(items, start=1))
    return render_template(
        asset_text(_KIND_TEMPLATES[kind]),
        {
            "party_a_name": party_name(dispute.dataset, PartyRole.PARTY_A),
            "party_b_name": party_name(dispute.dataset, PartyRole.PARTY_B),
            "party_name": party_name(dispute.dataset, party),
            "dispute_text": dispute.raw_text,
            "items": numbered,
        },
    )


def build_demand_gt_prompt(
    dispute: Dispute, demands: list[str], party: PartyRole
) -> str:
    """Prompt asking for the decided label (ACCEPTED/REJECTED) per demand."""
    return _build_gt_prompt(dispute, demands, party, "demand")


def build_argument_gt_prompt(
    dispute: Dispute, arguments: list[str], party: PartyRole
) -> str:
    """Prompt asking whether each argument was considered favourably."""
    return _build_gt_prompt(dispute, arguments, party, "argument")


def parse_gt_labels(
    llm_text: str,
    expected_count: int,
    label_kind: type,
) -> tuple[list[tuple[str, DecisionLabel | StrengthLabel | None]], list[str]]:
    """Extract (text, label) pairs from a labeling response.

    Only lines carrying the item grammar count; heading echoes and prose are
    skipped. A parsed count differing from expected_count is reported as a
    COUNT_MISMATCH diagnostic (the caller retries once); zero parseable
    lines is an error.
    """
    diagnostics: list[str] = []
    pairs: list[tuple[str, DecisionLabel | StrengthLabel | None]] = []
    for line in llm_text.splitlines():
        if not line.strip() or not LABEL_PATTERN.search(line):
            continue
        item = parse_item_line(line, label_kind, diagnostics, "gt")
        pairs.append((item.text, item.label))
    if not pairs:
        raise UnparseableError("no labeled lines recognized in response")
    if len(pairs) != expected_count:
        diagnostics.append(
            f"COUNT_MISMATCH: expected {expected_count} labeled lines, "
            f"parsed {len(pairs)}"
        )
    return pairs, diagnostics


_RETRY_NUDGE = (
    "\n\nYour previous attempt did not produce exactly one labeled line per "
    "listed item. Answer again with exactly {n} lines in the given order."
)


def _label_items(
    dispute: Dispute,
    texts: list[str],
    party: PartyRole,
    kind: str,
    gateway: Gateway,
    model: ModelSpec,
) -> tuple[list[tuple[str, DecisionLabel | StrengthLabel | None]], list[str]]:
    """Label one party's item list, retrying once on a count mismatch.

    Returned texts are the summary's items (index-aligned), not the model's
    re-writes; an unrecoverable response leaves every label None.
    """
    prompt = _build_gt_prompt(dispute, texts, party, kind)
    diagnostics: list[str] = []
    label_kind = _KIND_LABELS[kind]
    tag = f"gt:{kind}:{party.value}"

    for attempt, text in enumerate([prompt, prompt + _RETRY_NUDGE.format(n=len(texts))]):
        response = gateway.chat_complete(
            ChatRequest(model=model, prompt=text, request_tag=tag)
        )
        try:
            pairs, diags = parse_gt_labels(response.text, len(texts), label_kind)
        except UnparseableError as exc:
            diagnostics.append(f"UNPARSEABLE (attempt {attempt + 1}): {exc}")
            continue
        diagnostics.extend(diags)
        if len(pairs) == len(texts):
            return [(texts[i], pairs[i][1]) for i in range(len(texts))], diagnostics

    diagnostics.append(
        f"GT_UNLABELED: {kind}s of {party.value} left unlabeled after retry"
    )
    return [(t, None) for t in texts], diagnostics


def derive_winning_party(summary: StructuredSummary, dispute: Dispute) -> PartyRole:
    """Gold winner: summary vote for auto-insurance, decision patterns for
    domain-name."""
    if dispute.dataset is DatasetId.AUTO_INSURANCE:
        winner = summary.winning_party
    else:
        winner = extract_winner_by_pattern(dispute.raw_text, dispute.dataset)
    if winner is None:
        raise NoWinnerError(
            f"dispute {dispute.dispute_id!r}: no winning party derivable"
        )
    return winner


def build_ground_truth(
    dispute: Dispute,
    summary: StructuredSummary,
    *,
    gateway: Gateway,
    model: ModelSpec,
) -> tuple[GroundTruth, list[str]]:
    """Assemble the full gold record for one dispute from its super summary.

    Demand/argument label lists stay index-aligned with the summary's item
    lists; parties with no items simply have no entry.
    """
    if summary.dispute_id != dispute.dispute_id:
        raise ValueError(
            f"summary is for {summary.dispute_id!r}, dispute is "
            f"{dispute.dispute_id!r}"
        )
    winner = derive_winning_party(summary, dispute)
    diagnostics: list[str] = []
    gt = GroundTruth(dispute_id=dispute.dispute_id, winning_party=winner)

    for party in PartyRole:
        demands = summary.demands.get(party, [])
        if demands:
            labeled, diags = _label_items(
                dispute, demands, party, "demand", gateway, model
            )
            gt.demand_decisions[party] = labeled
            diagnostics.extend(diags)
        arguments = summary.arguments.get(party, [])
        if arguments:
            labeled, diags = _label_items(
                dispute, arguments, party, "argument", gateway, model
            )
            gt.argument_evaluations[party] = labeled
            diagnostics.extend(diags)
    return gt, diagnostics

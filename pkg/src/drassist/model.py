"""Core domain vocabulary: disputes, parties, structural elements, labels.

All types are plain value objects; construct them once and share freely
across pipeline workers. Nothing here performs I/O.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .textutil import split_sentences


class DatasetId(Enum):
    AUTO_INSURANCE = "auto_insurance"
    DOMAIN_NAME = "domain_name"


class PartyRole(Enum):
    PARTY_A = "party_a"
    PARTY_B = "party_b"


# Dataset-resolved display names used in prompts and parsed model output.
PARTY_NAMES: dict[DatasetId, dict[PartyRole, str]] = {
    DatasetId.AUTO_INSURANCE: {
        PartyRole.PARTY_A: "insurance company",
        PartyRole.PARTY_B: "insured party",
    },
    DatasetId.DOMAIN_NAME: {
        PartyRole.PARTY_A: "complainant",
        PartyRole.PARTY_B: "respondent",
    },
}


def party_name(dataset: DatasetId, role: PartyRole) -> str:
    return PARTY_NAMES[dataset][role]


def resolve_party(text: str, dataset: DatasetId) -> PartyRole | None:
    """Map free text onto a party by case-insensitive name containment.

    Returns None when the text names neither or both parties; callers treat
    that as "no winner recovered" rather than guessing.
    """
    lowered = text.lower()
    matches = [
        role
        for role in PartyRole
        if PARTY_NAMES[dataset][role].lower() in lowered
    ]
    if len(matches) == 1:
        return matches[0]
    return None


#: Closed set of sentence-level rhetorical role labels consumed as optional
#: reference material for summary scoring.
RHETORICAL_ROLES = frozenset(
    [
        "FAC",
        "ISSUE",
        "ARG_PETITIONER",
        "ARG_RESPONDENT",
        "PRE_RELIED",
        "PRE_NOT_RELIED",
        "STA",
        "ANALYSIS",
        "RLC",
        "RATIO",
        "NONE",
        "PREAMBLE",
    ]
)


class StructuralElement(Enum):
    AGREED_FACTS = "agreed_facts"
    DISAGREEMENT_ASPECTS = "disagreement_aspects"
    DEMANDS_PARTY_A = "demands_party_a"
    DEMANDS_PARTY_B = "demands_party_b"
    ARGUMENTS_PARTY_A = "arguments_party_a"
    ARGUMENTS_PARTY_B = "arguments_party_b"
    PRIOR_CASES = "prior_cases"
    STATUTES = "statutes"
    DECISION_DISTRICT = "decision_district"
    DECISION_STATE = "decision_state"
    FINAL_DECISION = "final_decision"
    JUSTIFICATION = "justification"
    WINNING_PARTY = "winning_party"


_AI_ELEMENT_ORDER = (
    StructuralElement.AGREED_FACTS,
    StructuralElement.DISAGREEMENT_ASPECTS,
    StructuralElement.DEMANDS_PARTY_A,
    StructuralElement.DEMANDS_PARTY_B,
    StructuralElement.ARGUMENTS_PARTY_A,
    StructuralElement.ARGUMENTS_PARTY_B,
    StructuralElement.PRIOR_CASES,
    StructuralElement.STATUTES,
    StructuralElement.DECISION_DISTRICT,
    StructuralElement.DECISION_STATE,
    StructuralElement.FINAL_DECISION,
    StructuralElement.JUSTIFICATION,
    StructuralElement.WINNING_PARTY,
)

# Domain-name disputes rarely cite prior cases and have no district/state
# commission stages, so those three slots are absent from the schema.
_DN_EXCLUDED = frozenset(
    [
        StructuralElement.PRIOR_CASES,
        StructuralElement.DECISION_DISTRICT,
        StructuralElement.DECISION_STATE,
    ]
)


def element_schema(dataset: DatasetId) -> tuple[StructuralElement, ...]:
    """Ordered element slots for a dataset (13 for auto-insurance, 10 for
    domain-name)."""
    if dataset is DatasetId.AUTO_INSURANCE:
        return _AI_ELEMENT_ORDER
    return tuple(e for e in _AI_ELEMENT_ORDER if e not in _DN_EXCLUDED)


#: Elements that reveal the adjudicated outcome; these must never reach a
#: resolution prompt.
DECISION_ELEMENTS = frozenset(
    [
        StructuralElement.DECISION_DISTRICT,
        StructuralElement.DECISION_STATE,
        StructuralElement.FINAL_DECISION,
        StructuralElement.JUSTIFICATION,
        StructuralElement.WINNING_PARTY,
    ]
)

DEMAND_ELEMENTS: dict[PartyRole, StructuralElement] = {
    PartyRole.PARTY_A: StructuralElement.DEMANDS_PARTY_A,
    PartyRole.PARTY_B: StructuralElement.DEMANDS_PARTY_B,
}

ARGUMENT_ELEMENTS: dict[PartyRole, StructuralElement] = {
    PartyRole.PARTY_A: StructuralElement.ARGUMENTS_PARTY_A,
    PartyRole.PARTY_B: StructuralElement.ARGUMENTS_PARTY_B,
}


class Strategy(Enum):
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"


class StrengthLabel(Enum):
    STRONG = "STRONG"
    WEAK = "WEAK"


class DecisionLabel(Enum):
    ACCEPTED = "ACCEPTED"
    REJECTED = "REJECTED"


@dataclass
class Dispute:
    """One two-party dispute: raw decision text plus optional per-sentence
    rhetorical role labels."""

    dispute_id: str
    dataset: DatasetId
    raw_text: str
    sentence_roles: list[tuple[str, str]] | None = None

    def __post_init__(self) -> None:
        if not self.raw_text or not self.raw_text.strip():
            raise ValueError(f"dispute {self.dispute_id!r}: raw_text is empty")
        if self.sentence_roles is not None:
            for _, role in self.sentence_roles:
                if role not in RHETORICAL_ROLES:
                    raise ValueError(
                        f"dispute {self.dispute_id!r}: unknown rhetorical role {role!r}"
                    )


@dataclass
class StructuredSummary:
    """Element-keyed summary of one dispute, as produced by one model or by
    the element-wise merge of several ("SUPER")."""

    dispute_id: str
    source_model: str
    elements: dict[StructuralElement, str] = field(default_factory=dict)
    demands: dict[PartyRole, list[str]] = field(default_factory=dict)
    arguments: dict[PartyRole, list[str]] = field(default_factory=dict)
    winning_party: PartyRole | None = None
    warnings: list[str] = field(default_factory=list)

    def demand_list(self, party: PartyRole) -> list[str]:
        return self.demands.get(party, [])

    def argument_list(self, party: PartyRole) -> list[str]:
        return self.arguments.get(party, [])


@dataclass
class LabeledItem:
    """A demand or argument as re-written by a model, with its label and
    justification. label is None when the parser could not normalize it;
    such items stay visible but are excluded from metrics."""

    text: str
    label: StrengthLabel | DecisionLabel | None
    justification: str = ""


@dataclass
class ResolutionOutput:
    """One model's parsed prediction for one dispute under one strategy."""

    dispute_id: str
    model: str
    strategy: Strategy
    stronger_party: PartyRole | None
    stronger_party_justification: str = ""
    demand_decisions: dict[PartyRole, list[LabeledItem]] = field(default_factory=dict)
    argument_evaluations: dict[PartyRole, list[LabeledItem]] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.strategy is Strategy.S1 and (self.demand_decisions or self.argument_evaluations):
            raise ValueError("S1 output carries no demand or argument lists")
        if self.strategy is Strategy.S2 and self.argument_evaluations:
            raise ValueError("S2 output carries no argument lists")
        for items in self.demand_decisions.values():
            for item in items:
                if item.label is not None and not isinstance(item.label, DecisionLabel):
                    raise ValueError(f"demand item {item.text!r} carries a non-decision label")
        for items in self.argument_evaluations.values():
            for item in items:
                if item.label is not None and not isinstance(item.label, StrengthLabel):
                    raise ValueError(f"argument item {item.text!r} carries a non-strength label")


@dataclass
class GroundTruth:
    """Gold labels for one dispute, index-aligned with the super summary's
    demand/argument lists. A None label marks an item set the labeling model
    failed to cover even after retry."""

    dispute_id: str
    winning_party: PartyRole
    demand_decisions: dict[PartyRole, list[tuple[str, DecisionLabel | None]]] = field(
        default_factory=dict
    )
    argument_evaluations: dict[PartyRole, list[tuple[str, StrengthLabel | None]]] = field(
        default_factory=dict
    )


@dataclass(frozen=True)
class ValidationFinding:
    element: str | None
    rule: str
    message: str


_LIST_MARKER = re.compile(r"(?:(?<=^)|(?<=\s))(?:\d{1,2}[.)]|[-*•‣●])\s+")


def itemize_element(element_text: str) -> list[str]:
    """Split an element's text into its itemized demands/arguments.

    Numbered or bulleted markers win over everything; newline-separated
    clauses come next; sentence boundaries last. Markers and surrounding
    whitespace are stripped, order is preserved, and empty items are never
    returned. Text with no recognizable boundary comes back as a single
    item.
    """
    text = element_text.strip()
    if not text:
        return []

    marker_parts = [p.strip() for p in _LIST_MARKER.split(text)]
    marker_parts = [p for p in marker_parts if p]
    # A single part still counts as a list when the text opens with a marker
    # (a one-item bulleted list); otherwise no marker was found at all.
    if len(marker_parts) >= 2 or (marker_parts and _LIST_MARKER.match(text)):
        return marker_parts

    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if len(lines) >= 2:
        return lines

    sentences = split_sentences(text)
    if len(sentences) >= 2:
        return sentences
    return [text]


def validate_summary(summary: StructuredSummary, dataset: DatasetId) -> list[ValidationFinding]:
    """Check a summary against the dataset's element schema.

    Returns one finding per violation; an empty list means the summary is
    valid for this dataset.
    """
    findings: list[ValidationFinding] = []
    schema = set(element_schema(dataset))

    for element in summary.elements:
        if element not in schema:
            findings.append(
                ValidationFinding(
                    element=element.value,
                    rule="element not in schema",
                    message=f"{element.value} is not part of the {dataset.value} schema",
                )
            )

    for party, element in DEMAND_ELEMENTS.items():
        text = summary.elements.get(element, "")
        items = summary.demands.get(party, [])
        if text.strip() and not items:
            findings.append(
                ValidationFinding(
                    element=element.value,
                    rule="itemization missing",
                    message=f"{element.value} has text but no itemized demands for {party.value}",
                )
            )
        for item in items:
            if not item.strip():
                findings.append(
                    ValidationFinding(
                        element=element.value,
                        rule="empty item",
                        message=f"empty demand item for {party.value}",
                    )
                )

    for party, element in ARGUMENT_ELEMENTS.items():
        text = summary.elements.get(element, "")
        items = summary.arguments.get(party, [])
        if text.strip() and not items:
            findings.append(
                ValidationFinding(
                    element=element.value,
                    rule="itemization missing",
                    message=f"{element.value} has text but no itemized arguments for {party.value}",
                )
            )
        for item in items:
            if not item.strip():
                findings.append(
                    ValidationFinding(
                        element=element.value,
                        rule="empty item",
                        message=f"empty argument item for {party.value}",
                    )
                )

    if StructuralElement.WINNING_PARTY in summary.elements and summary.winning_party is None:
        findings.append(
            ValidationFinding(
                element=StructuralElement.WINNING_PARTY.value,
                rule="winner unresolved",
                message="winning_party element present but no party could be resolved",
            )
        )

    return findings

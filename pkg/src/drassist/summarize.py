"""Structured summarization: prompt construction, section parsing, the
element-wise super-summary merge, winner voting, and reference-based scoring.

One structured summary is produced per (dispute, model); three of them are
merged element by element into a "SUPER" summary whose winner is decided by
majority vote. Scoring compares summary elements against rhetorical-role
reference sentences when those are available.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .evaluation import TokenEmbedder, rouge1_f1, rougeL_f1, semantic_f1
from .gateway import ChatRequest, Gateway, GatewayError, ModelSpec
from .model import (
    ARGUMENT_ELEMENTS,
    DEMAND_ELEMENTS,
    DatasetId,
    Dispute,
    PartyRole,
    RHETORICAL_ROLES,
    StructuralElement,
    StructuredSummary,
    element_schema,
    itemize_element,
    party_name,
    resolve_party,
)

_ASSET_ROOT = Path(__file__).resolve().parent

#: Section contents that mean "the model found nothing for this element".
_EMPTY_SENTINELS = frozenset({"none", "n/a", "not applicable", "not mentioned", "-"})


class SummarizeError(Exception):
    """Base class for summarization failures."""


class NoSectionsError(SummarizeError):
    """Model output contained no recognizable element headings."""


class InsufficientCandidatesError(SummarizeError):
    """Element merge needs at least two non-empty candidate texts."""


class MissingRolesError(SummarizeError):
    """Summary scoring requires per-sentence rhetorical roles."""


def asset_text(relative: str) -> str:
    """Read a packaged text asset (prompt template or pattern list)."""
    return (_ASSET_ROOT / relative).read_text(encoding="utf-8")


def render_template(template: str, values: dict[str, str]) -> str:
    # Sequential replace, not str.format: dispute texts may contain braces.
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out


# -- element headings ---------------------------------------------------------

_FIXED_HEADINGS: dict[StructuralElement, str] = {
    StructuralElement.AGREED_FACTS: "Facts agreed by both parties",
    StructuralElement.DISAGREEMENT_ASPECTS: "Aspects on which the parties disagree",
    StructuralElement.PRIOR_CASES: "Relevant prior cases referred with short summary",
    StructuralElement.STATUTES: (
        "Relevant statutes or policy terms and conditions referred with short summary"
    ),
    StructuralElement.DECISION_DISTRICT: "Decision by District Commission",
    StructuralElement.DECISION_STATE: "Decision by State Commission",
    StructuralElement.JUSTIFICATION: "Justification / rationale for the final decision",
    StructuralElement.WINNING_PARTY: "Winning party",
}


def element_heading(element: StructuralElement, dataset: DatasetId) -> str:
    """Display heading for one element, with party names resolved."""
    if element in _FIXED_HEADINGS:
        return _FIXED_HEADINGS[element]
    if element is StructuralElement.FINAL_DECISION:
        if dataset is DatasetId.AUTO_INSURANCE:
            return (
                "Final decision by the National Commission with respect to "
                "each demand of both the parties"
            )
        return "Final decision with respect to each demand of both the parties"
    for party, el in DEMAND_ELEMENTS.items():
        if el is element:
            return f"Demands of the {party_name(dataset, party)}"
    for party, el in ARGUMENT_ELEMENTS.items():
        if el is element:
            return f"Arguments of the {party_name(dataset, party)}"
    raise ValueError(f"no heading defined for {element!r}")


# -- prompt construction -------------------------------------------------------


@dataclass(frozen=True)
class SummaryPromptSpec:
    """Dataset-resolved element order and party display names for one prompt."""

    dataset: DatasetId
    element_order: tuple[StructuralElement, ...]
    role_names: dict[PartyRole, str]

    def __post_init__(self) -> None:
        expected = element_schema(self.dataset)
        if self.element_order != expected:
            raise ValueError(
                f"element_order must match the {self.dataset.value} schema "
                f"({len(expected)} elements)"
            )
        for role in PartyRole:
            if self.role_names.get(role) != party_name(self.dataset, role):
                raise ValueError(f"role_names must carry the {self.dataset.value} names")


def summary_prompt_spec(dataset: DatasetId) -> SummaryPromptSpec:
    return SummaryPromptSpec(
        dataset=dataset,
        element_order=element_schema(dataset),
        role_names={role: party_name(dataset, role) for role in PartyRole},
    )


def build_summary_prompt(dispute: Dispute, spec: SummaryPromptSpec) -> str:
    """Render the summarization prompt: full raw text plus the element list."""
    if dispute.dataset is not spec.dataset:
        raise ValueError(
            f"dispute {dispute.dispute_id!r} is {dispute.dataset.value}, "
            f"spec is {spec.dataset.value}"
        )
    element_list = "\n".join(
        f"{i}. {element_heading(el, spec.dataset)}"
        for i, el in enumerate(spec.element_order, start=1)
    )
    template = asset_text(f"prompts/summarize/{spec.dataset.value}.txt")
    return render_template(
        template,
        {"element_list": element_list, "dispute_text": dispute.raw_text},
    )


# -- parsing -------------------------------------------------------------------

#: Decoration a model may wrap around a heading line: markdown emphasis,
#: leading list numbering, trailing colon.
_HEAD_PREFIX = re.compile(r"^\s*(?:#{1,6}\s*)?(?:\d{1,2}\s*[.)]\s*)?[*_]{0,3}\s*")
_HEAD_SUFFIX = re.compile(r"\s*[*_]{0,3}\s*:?\s*$")


def _match_heading(
    line: str, headings: dict[str, StructuralElement]
) -> tuple[StructuralElement, str] | None:
    """Return (element, inline remainder) when the line opens a section."""
    stripped = _HEAD_PREFIX.sub("", line)
    for key, element in headings.items():
        if stripped.lower().startswith(key):
            rest = stripped[len(key) :]
            # Either nothing but decoration follows, or a colon introduces
            # inline content on the same line.
            if _HEAD_SUFFIX.fullmatch(rest):
                return element, ""
            m = re.match(r"[*_]{0,3}\s*:\s*", rest)
            if m:
                return element, rest[m.end() :].strip().strip("*_ ").strip()
    return None


def _section_text(lines: list[str]) -> str:
    text = "\n".join(lines).strip()
    if text.lower().strip(" .") in _EMPTY_SENTINELS:
        return ""
    return text


def parse_summary(
    llm_text: str,
    spec: SummaryPromptSpec,
    *,
    dispute_id: str,
    source_model: str,
) -> StructuredSummary:
    """Split model output into element sections by heading match.

    Heading matching is case-insensitive and tolerant of markdown bold
    markers and list numbering. Missing sections become empty elements with
    a warning; zero recognized headings is an error.
    """
    headings = {
        element_heading(el, spec.dataset).lower(): el for el in spec.element_order
    }
    # Longer headings first so "Demands of the insured party" cannot be
    # swallowed by a prefix heading.
    headings = dict(sorted(headings.items(), key=lambda kv: -len(kv[0])))

    sections: dict[StructuralElement, list[str]] = {}
    current: StructuralElement | None = None
    for line in llm_text.splitlines():
        hit = _match_heading(line, headings)
        if hit is not None:
            current, inline = hit
            sections.setdefault(current, [])
            if inline:
                sections[current].append(inline)
            continue
        if current is not None:
            sections[current].append(line)

    if not sections:
        raise NoSectionsError(
            f"dispute {dispute_id!r}: no element headings recognized in output"
        )

    summary = StructuredSummary(dispute_id=dispute_id, source_model=source_model)
    for el in spec.element_order:
        if el in sections:
            summary.elements[el] = _section_text(sections[el])
        else:
            summary.elements[el] = ""
            summary.warnings.append(f"section missing: {el.value}")

    for party, el in DEMAND_ELEMENTS.items():
        if el in spec.element_order:
            summary.demands[party] = itemize_element(summary.elements[el])
    for party, el in ARGUMENT_ELEMENTS.items():
        if el in spec.element_order:
            summary.arguments[party] = itemize_element(summary.elements[el])

    winner_text = summary.elements.get(StructuralElement.WINNING_PARTY, "")
    if winner_text:
        summary.winning_party = resolve_party(winner_text, spec.dataset)
        if summary.winning_party is None:
            summary.warnings.append("winner unresolved from winning-party section")
    return summary


# -- merging -------------------------------------------------------------------


def merge_element(
    candidates: list[tuple[str, str]],
    element: StructuralElement,
    *,
    gateway: Gateway,
    model: ModelSpec,
    dataset: DatasetId,
) -> str:
    """Merge one element's candidate texts into a majority-consistent text."""
    usable = [(mid, text.strip()) for mid, text in candidates if text.strip()]
    if len(usable) < 2:
        raise InsufficientCandidatesError(
            f"{element.value}: need >=2 non-empty candidates, got {len(usable)}"
        )
    blocks = [
        f"Candidate {i} (from {mid}):\n{text}"
        for i, (mid, text) in enumerate(usable, start=1)
    ]
    prompt = render_template(
        asset_text("prompts/merge/element.txt"),
        {
            "element_name": element_heading(element, dataset),
            "candidates": "\n\n".join(blocks),
        },
    )
    response = gateway.chat_complete(
        ChatRequest(model=model, prompt=prompt, request_tag=f"merge:{element.value}")
    )
    return response.text.strip()


def vote_winner(
    winners: list[PartyRole | None],
) -> tuple[PartyRole | None, list[str]]:
    """Majority vote over per-model winners; ties and all-absent yield None.

    With two possible parties a unique maximum among present votes is the
    same thing as a strict majority of present votes.
    """
    diagnostics: list[str] = []
    present = [w for w in winners if w is not None]
    absent = len(winners) - len(present)
    if absent:
        diagnostics.append(f"WINNER_VOTE: {absent} of {len(winners)} votes absent")
    if not present:
        diagnostics.append("WINNER_VOTE: no votes present")
        return None, diagnostics
    counts = {role: present.count(role) for role in set(present)}
    best = max(counts.values())
    leaders = [role for role, n in counts.items() if n == best]
    if len(leaders) > 1:
        diagnostics.append("WINNER_VOTE: TIE between parties")
        return None, diagnostics
    return leaders[0], diagnostics


def build_super_summary(
    per_model: list[StructuredSummary],
    *,
    gateway: Gateway,
    model: ModelSpec,
    dataset: DatasetId,
    expected_models: int = 3,
) -> StructuredSummary:
    """Merge per-model summaries element by element into one SUPER summary.

    Elements with exactly one non-empty candidate pass through unmerged;
    elements with none stay empty. Merge failures are recorded as warnings
    and do not abort the remaining elements.
    """
    if len(per_model) != expected_models:
        raise ValueError(
            f"expected {expected_models} summaries, got {len(per_model)}"
        )
    dispute_ids = {s.dispute_id for s in per_model}
    if len(dispute_ids) != 1:
        raise ValueError(f"summaries span multiple disputes: {sorted(dispute_ids)}")

    super_summary = StructuredSummary(
        dispute_id=per_model[0].dispute_id, source_model="SUPER"
    )
    for el in element_schema(dataset):
        if el is StructuralElement.WINNING_PARTY:
            continue
        candidates = [
            (s.source_model, s.elements.get(el, "")) for s in per_model
        ]
        non_empty = [(mid, t) for mid, t in candidates if t.strip()]
        if not non_empty:
            super_summary.elements[el] = ""
            super_summary.warnings.append(f"merge gap: {el.value}: no candidates")
            continue
        if len(non_empty) == 1:
            super_summary.elements[el] = non_empty[0][1].strip()
            super_summary.warnings.append(
                f"merge passthrough: {el.value}: single candidate"
            )
            continue
        try:
            super_summary.elements[el] = merge_element(
                non_empty, el, gateway=gateway, model=model, dataset=dataset
            )
        except GatewayError as exc:
            super_summary.elements[el] = ""
            super_summary.warnings.append(f"merge failed: {el.value}: {exc}")

    winner, diagnostics = vote_winner([s.winning_party for s in per_model])
    super_summary.winning_party = winner
    super_summary.warnings.extend(diagnostics)
    vote_line = ", ".join(
        party_name(dataset, s.winning_party) if s.winning_party else "absent"
        for s in per_model
    )
    super_summary.elements[StructuralElement.WINNING_PARTY] = (
        f"The {party_name(dataset, winner)}." if winner else ""
    )
    super_summary.warnings.append(f"winner votes: [{vote_line}]")

    for party, el in DEMAND_ELEMENTS.items():
        if el in super_summary.elements:
            super_summary.demands[party] = itemize_element(super_summary.elements[el])
    for party, el in ARGUMENT_ELEMENTS.items():
        if el in super_summary.elements:
            super_summary.arguments[party] = itemize_element(
                super_summary.elements[el]
            )
    return super_summary


# -- pattern-based winner extraction --------------------------------------------

_PATTERN_WINNERS = {"COMPLAINANT": PartyRole.PARTY_A, "RESPONDENT": PartyRole.PARTY_B}

#: How much of the document tail the decision patterns are applied to. The
#: operative order sits at the end of these decisions.
_DECISION_TAIL_CHARS = 2000


def load_winner_patterns(path: str | Path | None = None) -> list[tuple[PartyRole, re.Pattern[str]]]:
    """Parse the winner-pattern list: `COMPLAINANT|RESPONDENT<TAB><regex>`."""
    text = (
        Path(path).read_text(encoding="utf-8")
        if path is not None
        else asset_text("patterns/dn_winner.txt")
    )
    patterns: list[tuple[PartyRole, re.Pattern[str]]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            raise ValueError(f"pattern line {lineno}: expected '<WINNER>\\t<regex>'")
        winner, pattern = line.split("\t", 1)
        if winner not in _PATTERN_WINNERS:
            raise ValueError(f"pattern line {lineno}: unknown winner {winner!r}")
        patterns.append((_PATTERN_WINNERS[winner], re.compile(pattern, re.IGNORECASE)))
    return patterns


def extract_winner_by_pattern(
    raw_text: str,
    dataset: DatasetId,
    patterns: list[tuple[PartyRole, re.Pattern[str]]] | None = None,
) -> PartyRole | None:
    """First matching decision pattern against the document tail decides."""
    if dataset is not DatasetId.DOMAIN_NAME:
        raise ValueError("pattern extraction is defined for domain-name disputes only")
    if patterns is None:
        patterns = load_winner_patterns()
    tail = raw_text[-_DECISION_TAIL_CHARS:]
    for role, pattern in patterns:
        if pattern.search(tail):
            return role
    return None


# -- reference-based scoring -----------------------------------------------------


@dataclass(frozen=True)
class RoleGroup:
    """One scored group: summary elements vs rhetorical-role reference."""

    name: str
    elements: tuple[StructuralElement, ...]
    roles: frozenset[str]


@dataclass(frozen=True)
class RoleMapping:
    groups: tuple[RoleGroup, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for group in self.groups:
            unknown = group.roles - RHETORICAL_ROLES
            if unknown:
                raise ValueError(f"group {group.name!r}: unknown roles {sorted(unknown)}")
            overlap = group.roles & seen
            if overlap:
                raise ValueError(
                    f"group {group.name!r}: roles {sorted(overlap)} appear twice"
                )
            seen |= group.roles


DEFAULT_ROLE_MAPPING = RoleMapping(
    groups=(
        RoleGroup(
            "facts_and_issues",
            (StructuralElement.AGREED_FACTS, StructuralElement.DISAGREEMENT_ASPECTS),
            frozenset({"FAC", "ISSUE"}),
        ),
        RoleGroup(
            "arguments",
            (StructuralElement.ARGUMENTS_PARTY_A, StructuralElement.ARGUMENTS_PARTY_B),
            frozenset({"ARG_PETITIONER", "ARG_RESPONDENT"}),
        ),
        RoleGroup(
            "prior_cases",
            (StructuralElement.PRIOR_CASES,),
            frozenset({"PRE_RELIED", "PRE_NOT_RELIED"}),
        ),
        RoleGroup(
            "statutes",
            (StructuralElement.STATUTES,),
            frozenset({"STA"}),
        ),
    )
)


@dataclass(frozen=True)
class SummaryScores:
    rouge1_f1: float
    rougeL_f1: float
    semantic_f1: float


def evaluate_summary(
    summary: StructuredSummary,
    dispute: Dispute,
    embedder: TokenEmbedder,
    mapping: RoleMapping = DEFAULT_ROLE_MAPPING,
) -> tuple[dict[str, SummaryScores], list[str]]:
    """Score each role group's elements against its reference sentences.

    Returns (scores per group, names of groups skipped for lack of
    reference sentences).
    """
    if dispute.sentence_roles is None:
        raise MissingRolesError(
            f"dispute {dispute.dispute_id!r} has no rhetorical-role sentences"
        )
    scores: dict[str, SummaryScores] = {}
    skipped: list[str] = []
    for group in mapping.groups:
        reference = " ".join(
            sentence
            for sentence, role in dispute.sentence_roles
            if role in group.roles
        ).strip()
        if not reference:
            skipped.append(group.name)
            continue
        candidate = " ".join(
            summary.elements.get(el, "") for el in group.elements
        ).strip()
        scores[group.name] = SummaryScores(
            rouge1_f1=rouge1_f1(candidate, reference),
            rougeL_f1=rougeL_f1(candidate, reference),
            semantic_f1=semantic_f1(candidate, reference, embedder),
        )
    return scores, skipped

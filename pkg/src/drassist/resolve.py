"""Resolution prompting and parsing for the three strategies.

S1 asks only for the overall stronger party; S2 adds per-demand decisions;
S3 additionally evaluates each argument first (reason-then-decide). Prompts
are rendered from versioned templates; model output is parsed back into
ResolutionOutput with diagnostics instead of hard failures wherever a
stronger party is still recoverable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .gateway import FinishReason
from .model import (
    ARGUMENT_ELEMENTS,
    DECISION_ELEMENTS,
    DEMAND_ELEMENTS,
    DatasetId,
    DecisionLabel,
    LabeledItem,
    PartyRole,
    ResolutionOutput,
    Strategy,
    StrengthLabel,
    StructuralElement,
    StructuredSummary,
    party_name,
    resolve_party,
)
from .summarize import asset_text, render_template


class ResolveError(Exception):
    """Base class for resolution prompt/parse failures."""


class MissingElementError(ResolveError):
    """Summary lacks an element the strategy's prompt interpolates."""

    def __init__(self, element: StructuralElement) -> None:
        self.element = element
        super().__init__(f"summary is missing required element {element.value!r}")


class NoStrongerPartyError(ResolveError):
    """No overall stronger party could be recovered from model output."""


class IndexOutOfRangeError(ResolveError):
    """Conflict pair references a demand index that does not exist."""


# -- strategy specification ----------------------------------------------------

_DESCRIPTION_ELEMENTS = (
    StructuralElement.AGREED_FACTS,
    StructuralElement.DISAGREEMENT_ASPECTS,
    StructuralElement.ARGUMENTS_PARTY_A,
    StructuralElement.ARGUMENTS_PARTY_B,
    StructuralElement.PRIOR_CASES,
    StructuralElement.STATUTES,
)

#: Reference material that may legitimately be absent from a dispute; an
#: empty element renders as "None" instead of failing the prompt build.
_OPTIONAL_ELEMENTS = frozenset(
    {StructuralElement.PRIOR_CASES, StructuralElement.STATUTES}
)


@dataclass(frozen=True)
class StrategySpec:
    """Which elements a strategy's prompt interpolates and how many
    instructions it issues."""

    strategy: Strategy
    included_elements: tuple[StructuralElement, ...]
    instruction_count: int

    def __post_init__(self) -> None:
        decision_leak = [el for el in self.included_elements if el in DECISION_ELEMENTS]
        if decision_leak:
            raise ValueError(
                f"{self.strategy.value} prompt must not carry decision elements: "
                f"{[el.value for el in decision_leak]}"
            )
        if self.strategy is Strategy.S1:
            demand_leak = [
                el for el in self.included_elements if el in DEMAND_ELEMENTS.values()
            ]
            if demand_leak:
                raise ValueError("S1 prompt must not carry demand elements")


_INSTRUCTION_COUNTS = {Strategy.S1: 1, Strategy.S2: 2, Strategy.S3: 3}


def strategy_spec(strategy: Strategy, dataset: DatasetId) -> StrategySpec:
    elements = [
        el
        for el in _DESCRIPTION_ELEMENTS
        if not (
            el is StructuralElement.PRIOR_CASES
            and dataset is DatasetId.DOMAIN_NAME
        )
    ]
    if strategy is not Strategy.S1:
        elements += [
            StructuralElement.DEMANDS_PARTY_A,
            StructuralElement.DEMANDS_PARTY_B,
        ]
    return StrategySpec(
        strategy=strategy,
        included_elements=tuple(elements),
        instruction_count=_INSTRUCTION_COUNTS[strategy],
    )


# -- prompt construction -------------------------------------------------------


def _placeholder(element: StructuralElement, dataset: DatasetId) -> str:
    fixed = {
        StructuralElement.AGREED_FACTS: "facts",
        StructuralElement.DISAGREEMENT_ASPECTS: "disagreement_aspects",
        StructuralElement.PRIOR_CASES: "prior_cases",
        StructuralElement.STATUTES: "statutes",
    }
    if element in fixed:
        return fixed[element]
    for party, el in DEMAND_ELEMENTS.items():
        if el is element:
            return "demands_of_" + party_name(dataset, party).replace(" ", "_")
    for party, el in ARGUMENT_ELEMENTS.items():
        if el is element:
            return "arguments_of_" + party_name(dataset, party).replace(" ", "_")
    raise ValueError(f"element {element!r} has no prompt placeholder")


def _numbered(items: list[str]) -> str:
    return "\n".join(f"{i}. {item}" for i, item in enumerate(items, start=1))


def build_resolution_prompt(
    summary: StructuredSummary, spec: StrategySpec, dataset: DatasetId
) -> str:
    """Interpolate the summary's elements into the strategy's template.

    Demand and argument elements render as numbered item lists (the parser
    and aligner consume item granularity); prose elements render verbatim.
    """
    values: dict[str, str] = {}
    for el in spec.included_elements:
        if el in DEMAND_ELEMENTS.values() or el in ARGUMENT_ELEMENTS.values():
            items: list[str] = []
            for party, mapped in DEMAND_ELEMENTS.items():
                if mapped is el:
                    items = summary.demands.get(party, [])
            for party, mapped in ARGUMENT_ELEMENTS.items():
                if mapped is el:
                    items = summary.arguments.get(party, [])
            if not items:
                raise MissingElementError(el)
            values[_placeholder(el, dataset)] = _numbered(items)
        else:
            text = summary.elements.get(el, "").strip()
            if not text:
                if el not in _OPTIONAL_ELEMENTS:
                    raise MissingElementError(el)
                text = "None"
            values[_placeholder(el, dataset)] = text

    template = asset_text(
        f"prompts/resolve/{spec.strategy.value}_{dataset.value}.txt"
    )
    return render_template(template, values)


# -- parsing --------------------------------------------------------------------

_HEAD_PREFIX = re.compile(r"^\s*(?:#{1,6}\s*)?(?:\d{1,2}\s*[.)]\s*)?[*_]{0,3}\s*")
_ITEM_START = re.compile(r"^\s*(?:\d{1,2}[.)]|[-*•])\s+(?=\S)")
#: One item line: `<text>: <LABEL> : <justification>`; the label may be
#: bolded, synonym-suffixed (STRONGLY, ACCEPTS), or end the line with
#: trailing punctuation instead of a justification.
LABEL_PATTERN = re.compile(
    r":\s*[*_]{0,3}\s*(STRONG\w*|WEAK\w*|ACCEPT\w*|REJECT\w*)\s*[*_]{0,3}\s*(?:[.!]\s*)?(?::|$)",
    re.IGNORECASE,
)

_STRENGTH_PREFIXES = {"STRONG": StrengthLabel.STRONG, "WEAK": StrengthLabel.WEAK}
_DECISION_PREFIXES = {
    "ACCEPT": DecisionLabel.ACCEPTED,
    "REJECT": DecisionLabel.REJECTED,
}


def _normalize_label(token: str) -> StrengthLabel | DecisionLabel | None:
    upper = token.upper()
    for prefix, label in {**_STRENGTH_PREFIXES, **_DECISION_PREFIXES}.items():
        if upper.startswith(prefix):
            return label
    return None


def _strip_decor(text: str) -> str:
    return text.strip().strip("*_ ").strip()


def parse_item_line(
    raw: str, expected: type, diagnostics: list[str], section: str
) -> LabeledItem:
    """Split one item line into text / label / justification.

    The split keys on the first colon-delimited label token; the label is
    prefix-normalized, and a label of the wrong kind for the section is kept
    as unlabeled with a diagnostic.
    """
    body = _ITEM_START.sub("", raw).strip()
    m = LABEL_PATTERN.search(body)
    if m is None:
        diagnostics.append(f"UNKNOWN_LABEL: {section}: no label found in {body[:60]!r}")
        return LabeledItem(text=_strip_decor(body), label=None)
    text = _strip_decor(body[: m.start()])
    justification = body[m.end() :].strip()
    label = _normalize_label(m.group(1))
    if not isinstance(label, expected):
        diagnostics.append(
            f"UNKNOWN_LABEL: {section}: {m.group(1)!r} is not a valid label here"
        )
        label = None
    return LabeledItem(text=text, label=label, justification=justification)


def _section_map(dataset: DatasetId) -> dict[str, tuple[str, PartyRole | None]]:
    sections: dict[str, tuple[str, PartyRole | None]] = {
        "overall stronger party": ("party", None)
    }
    for role in PartyRole:
        name = party_name(dataset, role).lower()
        sections[f"arguments of the {name}"] = ("arguments", role)
        sections[f"demands of the {name}"] = ("demands", role)
    return dict(sorted(sections.items(), key=lambda kv: -len(kv[0])))


_HEAD_TERMINATOR = re.compile(r"\s*[*_]{0,3}\s*(:)?\s*[*_]{0,3}\s*")


def _match_section(
    line: str, sections: dict[str, tuple[str, PartyRole | None]]
) -> tuple[str, PartyRole | None, str] | None:
    stripped = _HEAD_PREFIX.sub("", line)
    for key, (kind, role) in sections.items():
        if stripped.lower().startswith(key):
            rest = stripped[len(key) :]
            m = _HEAD_TERMINATOR.match(rest)
            assert m is not None  # pattern can match empty
            if m.group(1) is None and m.end() != len(rest):
                # Heading text continues with more words: not this section.
                continue
            return kind, role, rest[m.end() :].strip()
    return None


def _gather_items(lines: list[str]) -> list[str]:
    """Group section lines into item strings: numbered/bulleted lines start
    items, unmarked lines continue the previous one."""
    items: list[str] = []
    for line in lines:
        if not line.strip():
            continue
        if _ITEM_START.match(line) or not items:
            items.append(line.strip())
        else:
            items[-1] += " " + line.strip()
    return items


def parse_resolution(
    llm_text: str,
    spec: StrategySpec,
    dataset: DatasetId,
    *,
    dispute_id: str,
    model: str,
    finish_reason: FinishReason | None = None,
) -> ResolutionOutput:
    """Parse model output into a ResolutionOutput.

    Format deviations become diagnostics; the only fatal condition is an
    unrecoverable stronger party. Sections a strategy does not expect are
    dropped (with a diagnostic) so the output schema stays strategy-legal.
    """
    diagnostics: list[str] = []
    if finish_reason is FinishReason.TRUNCATED:
        diagnostics.append("TRUNCATED: response was cut off; sections may be lost")

    sections = _section_map(dataset)
    party_lines: list[str] = []
    item_sections: dict[tuple[str, PartyRole], list[str]] = {}
    current: tuple[str, PartyRole] | None = None
    in_party = False
    for line in llm_text.splitlines():
        hit = _match_section(line, sections)
        if hit is not None:
            kind, role, inline = hit
            if kind == "party":
                in_party, current = True, None
                if inline:
                    party_lines.append(inline)
            else:
                in_party = False
                current = (kind, role)  # type: ignore[assignment]
                item_sections.setdefault(current, [])
                if inline:
                    item_sections[current].append(inline)
            continue
        if in_party:
            party_lines.append(line)
        elif current is not None:
            item_sections[current].append(line)

    stronger, justification = _parse_party(party_lines, dataset, diagnostics)
    if stronger is None:
        # Last resort: find an explicit winner phrase anywhere in the text.
        fallback = resolve_party(llm_text[:400], dataset)
        if fallback is None:
            raise NoStrongerPartyError(
                f"dispute {dispute_id!r} ({model}, {spec.strategy.value}): "
                "no stronger party recoverable"
            )
        diagnostics.append("PARTY_FALLBACK: stronger party recovered from prose")
        stronger = fallback

    demands: dict[PartyRole, list[LabeledItem]] = {}
    arguments: dict[PartyRole, list[LabeledItem]] = {}
    wants_demands = spec.strategy in (Strategy.S2, Strategy.S3)
    wants_arguments = spec.strategy is Strategy.S3
    for (kind, role), lines in item_sections.items():
        section_name = f"{kind} of {role.value}"
        if kind == "demands":
            if not wants_demands:
                diagnostics.append(f"UNEXPECTED_SECTION: {section_name}")
                continue
            demands[role] = [
                parse_item_line(raw, DecisionLabel, diagnostics, section_name)
                for raw in _gather_items(lines)
            ]
        else:
            if not wants_arguments:
                diagnostics.append(f"UNEXPECTED_SECTION: {section_name}")
                continue
            arguments[role] = [
                parse_item_line(raw, StrengthLabel, diagnostics, section_name)
                for raw in _gather_items(lines)
            ]

    return ResolutionOutput(
        dispute_id=dispute_id,
        model=model,
        strategy=spec.strategy,
        stronger_party=stronger,
        stronger_party_justification=justification,
        demand_decisions=demands,
        argument_evaluations=arguments,
        diagnostics=diagnostics,
    )


def _parse_party(
    lines: list[str], dataset: DatasetId, diagnostics: list[str]
) -> tuple[PartyRole | None, str]:
    text = " ".join(line.strip() for line in lines if line.strip()).strip()
    if not text:
        diagnostics.append("NO_PARTY_SECTION: stronger-party heading not found")
        return None, ""
    head, _, tail = text.partition(":")
    party = resolve_party(head, dataset)
    if party is not None:
        return party, _strip_decor(tail)
    # The party declaration may run into the justification unseparated.
    party = resolve_party(text[:100], dataset)
    if party is not None:
        diagnostics.append("PARTY_FORMAT: party and justification not colon-separated")
        return party, text
    diagnostics.append(f"PARTY_UNRESOLVED: {text[:80]!r}")
    return None, text


# -- rendering (round-trip support) ----------------------------------------------


def render_resolution(output: ResolutionOutput, dataset: DatasetId) -> str:
    """Render a ResolutionOutput back into the response-format text.

    parse_resolution(render_resolution(out)) preserves labels, party, and
    item order; used for review displays and round-trip tests.
    """
    parts: list[str] = []

    def item_block(title: str, items: list[LabeledItem]) -> str:
        lines = [f"**{title}**:"]
        for i, item in enumerate(items, start=1):
            label = item.label.value if item.label is not None else "UNLABELED"
            lines.append(f"{i}. {item.text}: **{label}** : {item.justification}")
        return "\n".join(lines)

    if output.strategy is Strategy.S3:
        for role in PartyRole:
            items = output.argument_evaluations.get(role, [])
            parts.append(
                item_block(f"Arguments of the {party_name(dataset, role)}", items)
            )

    party = (
        party_name(dataset, output.stronger_party)
        if output.stronger_party is not None
        else "unclear"
    )
    parts.append(
        f"**Overall Stronger Party**: {party}: {output.stronger_party_justification}"
    )

    if output.strategy in (Strategy.S2, Strategy.S3):
        for role in PartyRole:
            items = output.demand_decisions.get(role, [])
            parts.append(
                item_block(f"Demands of the {party_name(dataset, role)}", items)
            )
    return "\n\n".join(parts) + "\n"


# -- consistency check -------------------------------------------------------------


def check_demand_consistency(
    output: ResolutionOutput,
    conflict_pairs: list[tuple[int, int]],
    *,
    mirror_semantics: bool = False,
) -> list[str]:
    """Flag declared-conflicting demand pairs that received the same label.

    Both-ACCEPTED is always a conflict. Both-REJECTED is a conflict only
    when mirror_semantics is False (a judge may legitimately reject both
    sides' versions of a conflicting demand). Flags only; never mutates.
    """
    diagnostics: list[str] = []
    a_items = output.demand_decisions.get(PartyRole.PARTY_A, [])
    b_items = output.demand_decisions.get(PartyRole.PARTY_B, [])
    for ia, ib in conflict_pairs:
        if not (0 <= ia < len(a_items)) or not (0 <= ib < len(b_items)):
            raise IndexOutOfRangeError(
                f"conflict pair ({ia}, {ib}) outside demand lists "
                f"({len(a_items)}, {len(b_items)})"
            )
        la, lb = a_items[ia].label, b_items[ib].label
        if la is None or lb is None or la is not lb:
            continue
        if la is DecisionLabel.REJECTED and mirror_semantics:
            continue
        diagnostics.append(
            f"CONFLICT: party_a[{ia}] and party_b[{ib}] both {la.value}"
        )
    return diagnostics

"""Deterministic scripted chat provider for offline runs and tests.

Declared via a mock:// provider endpoint. The provider recognizes each
pipeline prompt by its sentinel phrases and answers in the exact response
format the corresponding parser expects, so the whole pipeline can run
end to end with no network.

Scripting hooks (markers inside prompt text):
  (strongly evidenced)  item labeled STRONG / ACCEPTED by every model
  (unsupported)         item labeled WEAK / REJECTED by every model
  MOCK_ALWAYS_FAIL      every call raises a transient provider error
  MOCK_FAIL_TWICE       first two calls fail, third succeeds
  MOCK_TRUNCATE         response cut in half, finish_reason = truncated
  MOCK_REFUSE           refusal text, finish_reason = refused
  MOCK_SLOW             50 ms delay (limiter tests)

Unmarked items get a parity label from a content hash, rotated by a
per-model variant so different mock models disagree on some items. Model
ids ending in -v0/-v1/-v2 pin the variant explicitly.
"""

from __future__ import annotations

import hashlib
import re
import threading
import time

from .gateway import FinishReason, ModelSpec, TransientProviderError
from .model import (
    DatasetId,
    PartyRole,
    StructuralElement,
    element_schema,
    party_name,
)
from .textutil import split_sentences

# Sentinels identifying each prompt family (must match the prompt assets).
_SUMMARIZE_SENTINEL = "Summarize the dispute into the following structural elements"
_MERGE_SENTINEL = "consistent with the majority of the candidates"
_GT_DEMANDS_SENTINEL = "The following demands were raised by"
_GT_ARGUMENTS_SENTINEL = "The following arguments were made by"
_RESOLVE_SENTINEL = "Overall Stronger Party"

_STRONG_MARKER = "(strongly evidenced)"
_WEAK_MARKER = "(unsupported)"


def _variant(model_id: str) -> int:
    m = re.search(r"-v([012])$", model_id)
    if m:
        return int(m.group(1))
    return hashlib.sha256(model_id.encode("utf-8")).digest()[0] % 3


def _norm(text: str) -> str:
    return re.sub(r"\s+", " ", text.strip().lower()).strip(" .")


def _parity(text: str, variant: int) -> int:
    digest = hashlib.sha256(_norm(text).encode("utf-8")).digest()
    return (digest[0] + variant) % 2


def _label_item(text: str, variant: int, positive: str, negative: str) -> tuple[str, str]:
    """(label, justification) for one item; markers override hash parity."""
    if _WEAK_MARKER in text:
        return negative, "The dispute record does not support this item."
    if _STRONG_MARKER in text:
        return positive, "The dispute record clearly supports this item."
    if _parity(text, variant) == 0:
        return positive, "On balance the record favours this item."
    return negative, "On balance the record does not favour this item."


class MockChatProvider:
    """Scripted ChatProvider; thread-safe, deterministic per (model, prompt)."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._fail_counts: dict[str, int] = {}
        self.in_flight = 0
        self.max_in_flight = 0

    def complete(self, model: ModelSpec, prompt: str) -> tuple[str, FinishReason]:
        with self._lock:
            self.in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self.in_flight)
        try:
            return self._respond(model, prompt)
        finally:
            with self._lock:
                self.in_flight -= 1

    def _respond(self, model: ModelSpec, prompt: str) -> tuple[str, FinishReason]:
        if "MOCK_SLOW" in prompt:
            time.sleep(0.05)
        if "MOCK_ALWAYS_FAIL" in prompt:
            raise TransientProviderError("scripted: always fail")
        if "MOCK_FAIL_TWICE" in prompt:
            key = hashlib.sha256(
                f"{model.model_id}\x00{prompt}".encode("utf-8")
            ).hexdigest()
            with self._lock:
                self._fail_counts[key] = self._fail_counts.get(key, 0) + 1
                if self._fail_counts[key] <= 2:
                    raise TransientProviderError(
                        f"scripted: failure {self._fail_counts[key]} of 2"
                    )
        if "MOCK_REFUSE" in prompt:
            return "I cannot assist with that request.", FinishReason.REFUSED

        variant = _variant(model.model_id)
        if _SUMMARIZE_SENTINEL in prompt:
            text = _summarize(prompt, variant)
        elif _MERGE_SENTINEL in prompt:
            text = _merge(prompt)
        elif _GT_DEMANDS_SENTINEL in prompt:
            text = _label_listed_items(prompt, variant, "ACCEPTED", "REJECTED")
        elif _GT_ARGUMENTS_SENTINEL in prompt:
            text = _label_listed_items(prompt, variant, "STRONG", "WEAK")
        elif _RESOLVE_SENTINEL in prompt:
            text = _resolve(prompt, variant)
        else:
            text = "UNRECOGNIZED PROMPT"

        if "MOCK_TRUNCATE" in prompt:
            return text[: len(text) // 2], FinishReason.TRUNCATED
        return text, FinishReason.COMPLETE


# -- summarization ---------------------------------------------------------------

# Classification cue -> element, checked in order; first hit wins.
_SENTENCE_CUES: list[tuple[str, StructuralElement]] = [
    ("district commission", StructuralElement.DECISION_DISTRICT),
    ("state commission", StructuralElement.DECISION_STATE),
    ("in favour of", StructuralElement.WINNING_PARTY),
    ("national commission", StructuralElement.FINAL_DECISION),
    ("panel order", StructuralElement.FINAL_DECISION),
    ("complaint is denied", StructuralElement.FINAL_DECISION),
    ("decisive consideration", StructuralElement.JUSTIFICATION),
    ("sought", StructuralElement.DEMANDS_PARTY_A),
    ("demanded", StructuralElement.DEMANDS_PARTY_A),
    ("argued", StructuralElement.ARGUMENTS_PARTY_A),
    ("contended", StructuralElement.ARGUMENTS_PARTY_A),
    ("relied on", StructuralElement.PRIOR_CASES),
    (" v. ", StructuralElement.PRIOR_CASES),
    ("section", StructuralElement.STATUTES),
    ("clause", StructuralElement.STATUTES),
    ("paragraph 4", StructuralElement.STATUTES),
    ("policy condition", StructuralElement.STATUTES),
    ("disagree", StructuralElement.DISAGREEMENT_ASPECTS),
    ("agree", StructuralElement.AGREED_FACTS),
]

_PARTY_B_FROM_A = {
    StructuralElement.DEMANDS_PARTY_A: StructuralElement.DEMANDS_PARTY_B,
    StructuralElement.ARGUMENTS_PARTY_A: StructuralElement.ARGUMENTS_PARTY_B,
}


def _detect_dataset(prompt: str) -> DatasetId:
    if party_name(DatasetId.AUTO_INSURANCE, PartyRole.PARTY_A) in prompt.lower():
        return DatasetId.AUTO_INSURANCE
    return DatasetId.DOMAIN_NAME


def _dispute_text(prompt: str) -> str:
    marker = "Dispute text:"
    pos = prompt.find(marker)
    return prompt[pos + len(marker) :].strip() if pos >= 0 else prompt


def _classify(sentence: str, dataset: DatasetId) -> StructuralElement | None:
    lowered = sentence.lower()
    for cue, element in _SENTENCE_CUES:
        if cue not in lowered:
            continue
        if element in _PARTY_B_FROM_A:
            name_b = party_name(dataset, PartyRole.PARTY_B)
            if name_b in lowered:
                return _PARTY_B_FROM_A[element]
        return element
    return None


def _apply_variant(items: list[str], variant: int) -> list[str]:
    """Variant 1 drops the last item, variant 2 the first, of lists of 3+.

    Every item survives in at least two of the three variants, so a
    majority merge reconstructs the full list.
    """
    if len(items) < 3 or variant == 0:
        return items
    return items[:-1] if variant == 1 else items[1:]


def _heading_for(element: StructuralElement, dataset: DatasetId) -> str:
    from .summarize import element_heading

    return element_heading(element, dataset)


def _format_section(heading: str, items: list[str], variant: int) -> list[str]:
    decorations = ("**{h}**:", "{h}:", "### {h}:")
    lines = [decorations[variant].format(h=heading)]
    if not items:
        lines.append("None")
    elif len(items) == 1:
        lines.append(items[0])
    else:
        marker = "-" if variant == 1 else "{i}."
        for i, item in enumerate(items, start=1):
            lines.append(f"{marker.format(i=i)} {item}")
    lines.append("")
    return lines


def _summarize(prompt: str, variant: int) -> str:
    dataset = _detect_dataset(prompt)
    buckets: dict[StructuralElement, list[str]] = {}
    for sentence in split_sentences(_dispute_text(prompt)):
        element = _classify(sentence, dataset)
        if element is not None:
            buckets.setdefault(element, []).append(sentence)

    lines: list[str] = []
    for element in element_schema(dataset):
        items = _apply_variant(buckets.get(element, []), variant)
        if element is StructuralElement.WINNING_PARTY:
            winner = _winner_from_sentences(items, dataset)
            items = [winner] if winner else []
        lines.extend(
            _format_section(_heading_for(element, dataset), items, variant)
        )
    return "\n".join(lines).strip() + "\n"


def _winner_from_sentences(sentences: list[str], dataset: DatasetId) -> str:
    for sentence in sentences:
        lowered = sentence.lower()
        for role in PartyRole:
            name = party_name(dataset, role)
            if f"in favour of the {name}" in lowered:
                return f"The {name}."
    return ""


# -- merging ----------------------------------------------------------------------

_CANDIDATE_SPLIT = re.compile(r"^Candidate \d+ \(from [^)]*\):\s*$", re.MULTILINE)
_ITEM_PREFIX = re.compile(r"^\s*(?:\d{1,2}[.)]|[-*•])\s+")


def _merge(prompt: str) -> str:
    """Majority merge: keep units appearing in at least two candidates."""
    tail = prompt[prompt.find("Candidate 1") :]
    end = tail.find("Respond with the merged text")
    if end >= 0:
        tail = tail[:end]
    chunks = [c.strip() for c in _CANDIDATE_SPLIT.split(tail) if c.strip()]
    # Each candidate's units: its item lines, or its sentences when unlisted.
    per_candidate: list[list[str]] = []
    for chunk in chunks:
        item_lines = [
            _ITEM_PREFIX.sub("", line).strip()
            for line in chunk.splitlines()
            if _ITEM_PREFIX.match(line)
        ]
        per_candidate.append(item_lines or split_sentences(chunk))

    counts: dict[str, int] = {}
    originals: dict[str, str] = {}
    order: list[str] = []
    for units in per_candidate:
        for unit in units:
            key = _norm(unit)
            if not key:
                continue
            if key not in originals:
                originals[key] = unit
                order.append(key)
            counts[key] = counts.get(key, 0) + 1

    kept = [originals[k] for k in order if counts[k] >= 2]
    if not kept:
        return chunks[0] if chunks else ""
    if len(kept) == 1:
        return kept[0]
    return "\n".join(f"{i}. {unit}" for i, unit in enumerate(kept, start=1))


# -- ground-truth labeling ----------------------------------------------------------

_GT_LIST_HEADER = re.compile(
    r"The following (?:demands were raised|arguments were made) by the .*?:\s*$",
    re.MULTILINE,
)


def _label_listed_items(prompt: str, variant: int, positive: str, negative: str) -> str:
    m = _GT_LIST_HEADER.search(prompt)
    start = m.end() if m else 0
    block = prompt[start : prompt.find("### **Instructions**")]
    items = [
        _ITEM_PREFIX.sub("", line).strip()
        for line in block.splitlines()
        if _ITEM_PREFIX.match(line)
    ]
    lines = []
    for item in items:
        label, justification = _label_item(item, variant, positive, negative)
        lines.append(f"{item}: {label} : {justification}")
    return "\n".join(lines) + "\n"


# -- resolution ----------------------------------------------------------------------

_SECTION_LINE = re.compile(r"^\*\*([^*]+)\*\*:\s*(.*)$")


def _prompt_sections(prompt: str) -> dict[str, str]:
    # First occurrence wins: response-format stubs repeat the headings.
    sections: dict[str, list[str]] = {}
    current: str | None = None
    for line in prompt.splitlines():
        if line.strip().startswith("###"):
            current = None
            continue
        m = _SECTION_LINE.match(line.strip())
        if m:
            name = m.group(1).strip().lower()
            if name in sections:
                current = None
                continue
            current = name
            sections[current] = [m.group(2)]
        elif current is not None:
            sections[current].append(line)
    return {k: "\n".join(v).strip() for k, v in sections.items()}


def _items_of(section_text: str) -> list[str]:
    items = [
        _ITEM_PREFIX.sub("", line).strip()
        for line in section_text.splitlines()
        if _ITEM_PREFIX.match(line)
    ]
    if items:
        return items
    text = section_text.strip()
    return [text] if text and text.lower() != "none" else []


def _resolve(prompt: str, variant: int) -> str:
    dataset = _detect_dataset(prompt)
    sections = _prompt_sections(prompt)
    names = {role: party_name(dataset, role) for role in PartyRole}

    arguments: dict[PartyRole, list[tuple[str, str, str]]] = {}
    demands: dict[PartyRole, list[tuple[str, str, str]]] = {}
    for role, name in names.items():
        for kind, store, pos, neg in (
            ("arguments", arguments, "STRONG", "WEAK"),
            ("demands", demands, "ACCEPTED", "REJECTED"),
        ):
            text = sections.get(f"{kind} of the {name}", "")
            store[role] = [
                (item, *_label_item(item, variant, pos, neg))
                for item in _items_of(text)
            ]

    # Stronger party: more STRONG arguments; demand acceptances break ties.
    def strong_count(role: PartyRole) -> tuple[int, int]:
        args = sum(1 for _, label, _ in arguments[role] if label == "STRONG")
        accepted = sum(1 for _, label, _ in demands[role] if label == "ACCEPTED")
        return args, accepted

    scores = {role: strong_count(role) for role in PartyRole}
    winner = max(PartyRole, key=lambda r: (scores[r], r is PartyRole.PARTY_A))
    other = next(r for r in PartyRole if r is not winner)
    justification = (
        f"The {names[winner]} presents {scores[winner][0]} strong arguments "
        f"against {scores[other][0]} for the {names[other]}."
    )

    wants_arguments = "evaluate each argument" in prompt.lower()
    wants_demands = "evaluate each demand" in prompt.lower()

    lines: list[str] = []
    if wants_arguments:
        for role in PartyRole:
            lines.append(f"**Arguments of the {names[role]}**:")
            for i, (item, label, just) in enumerate(arguments[role], start=1):
                lines.append(f"{i}. {item}: **{label}** : {just}")
            lines.append("")
    lines.append(f"**Overall Stronger Party**: {names[winner]}: {justification}")
    lines.append("")
    if wants_demands:
        for role in PartyRole:
            lines.append(f"**Demands of the {names[role]}**:")
            for i, (item, label, just) in enumerate(demands[role], start=1):
                lines.append(f"{i}. {item}: **{label}** : {just}")
            lines.append("")
    return "\n".join(lines).strip() + "\n"

"""Low-level text helpers shared by the domain model and the corpus loader."""

from __future__ import annotations

import re

# Tokens that end with "." without ending a sentence. Matching is
# case-sensitive because "No." (number) and "no." (plain word) differ.
_ABBREVIATIONS = frozenset(
    [
        "No.",
        "Nos.",
        "Rs.",
        "vs.",
        "Vs.",
        "Sec.",
        "Mr.",
        "Mrs.",
        "Ms.",
        "Dr.",
        "M/s.",
        "Ltd.",
        "Co.",
        "Hon.",
        "Exh.",
        "Ex.",
        "Smt.",
        "Sh.",
        "Art.",
    ]
)

# ".", "?" or "!" followed by whitespace and an uppercase letter or digit.
_BOUNDARY = re.compile(r"[.?!](?=\s+[A-Z0-9])")

_WORD = re.compile(r"[a-z0-9]+")


def _is_protected(text: str, dot_index: int) -> bool:
    """True when the terminator at ``dot_index`` must not split the text."""
    if text[dot_index] != ".":
        return False
    # Token ending at the dot, e.g. "Rs." in "paid Rs. 500".
    start = dot_index
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    token = text[start : dot_index + 1]
    if token in _ABBREVIATIONS:
        return True
    # Single-letter initials: "M. K. Gandhi".
    if len(token) == 2 and token[0].isupper():
        return True
    return False


def split_sentences(text: str) -> list[str]:
    """Split text into sentences.

    A boundary is ".", "?" or "!" followed by whitespace and an uppercase
    letter or digit, except after protected abbreviations ("No.", "Rs.",
    "vs.", "Sec.", ...). Dotted dates such as "29.11.2002" never match the
    boundary pattern because their dots are not followed by whitespace.
    Joining the returned sentences with single spaces reproduces the input
    up to inter-sentence whitespace.
    """
    if not text or not text.strip():
        return []
    sentences: list[str] = []
    start = 0
    for match in _BOUNDARY.finditer(text):
        end = match.start()
        if _is_protected(text, end):
            continue
        sentence = text[start : end + 1].strip()
        if sentence:
            sentences.append(sentence)
        start = end + 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on non-alphanumeric characters (for ROUGE)."""
    return _WORD.findall(text.lower())


def word_count(text: str) -> int:
    """Number of maximal non-whitespace runs."""
    return len(text.split())

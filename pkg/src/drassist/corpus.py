"""Corpus loading, inclusion filters, and descriptive statistics.

Corpus layout on disk: one plain-text file per dispute named
``<dispute_id>.txt``; optional ``<dispute_id>.roles`` with one
``<role_label>\\t<sentence_text>`` line per sentence; optional
``<dispute_id>.meta`` with ``key=value`` boolean flags consumed by the
filters. Loading is pure per file; results are merged in dispute_id order
so parallel loading stays deterministic.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import DatasetId, Dispute, RHETORICAL_ROLES
from .textutil import split_sentences, word_count

__all__ = [
    "CorpusError",
    "MissingPathError",
    "MissingFlagError",
    "EmptyCorpusError",
    "FilterConfig",
    "MeasureStats",
    "CorpusStats",
    "LoadedCorpus",
    "load_corpus",
    "apply_filters",
    "compute_stats",
    "split_sentences",
    "stats_csv",
]


class CorpusError(Exception):
    pass


class MissingPathError(CorpusError):
    pass


class MissingFlagError(CorpusError):
    pass


class EmptyCorpusError(CorpusError):
    pass


@dataclass
class FilterConfig:
    """Which inclusion predicates to enforce.

    Flags that apply only to the other dataset are ignored:
    ``require_clear_winner`` and ``sector_keyword_allowlist`` act on
    auto-insurance corpora, ``require_respondent_response`` on domain-name
    corpora. A non-empty allowlist enables the ``is_automobile`` predicate;
    the keywords document how the upstream flagging was done, the decision
    itself is read from each dispute's metadata.
    """

    dataset: DatasetId
    require_clear_winner: bool = False
    require_respondent_response: bool = False
    sector_keyword_allowlist: list[str] = field(default_factory=list)


@dataclass
class MeasureStats:
    mean: float
    std_deviation: float
    q1: float
    median: float
    q3: float


@dataclass
class CorpusStats:
    n_disputes: int
    sentences_per_doc: MeasureStats
    words_per_doc: MeasureStats


@dataclass
class LoadedCorpus:
    disputes: list[Dispute]
    flags: dict[str, dict[str, bool]]
    malformed: list[tuple[str, str]]


def _parse_roles(path: Path) -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise ValueError(f"{path.name}:{lineno}: expected '<role>\\t<sentence>'")
        role, sentence = line.split("\t", 1)
        role = role.strip()
        if role not in RHETORICAL_ROLES:
            raise ValueError(f"{path.name}:{lineno}: unknown role {role!r}")
        pairs.append((sentence.strip(), role))
    return pairs


def _parse_meta(path: Path) -> dict[str, bool]:
    flags: dict[str, bool] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path.name}:{lineno}: expected 'key=value'")
        key, value = line.split("=", 1)
        value = value.strip().lower()
        if value not in ("true", "false"):
            raise ValueError(f"{path.name}:{lineno}: value must be true or false")
        flags[key.strip()] = value == "true"
    return flags


def load_corpus(path: str | Path, dataset: DatasetId) -> LoadedCorpus:
    """Load every ``*.txt`` dispute under ``path``.

    dispute_id is the filename stem; sibling ``.roles`` and ``.meta`` files
    are attached when present. Malformed files are skipped and reported,
    loading continues with the remainder.
    """
    root = Path(path)
    if not root.is_dir():
        raise MissingPathError(f"corpus path {root} does not exist or is not a directory")
    txt_files = sorted(root.glob("*.txt"))
    if not txt_files:
        raise MissingPathError(f"corpus path {root} contains no dispute files")

    disputes: list[Dispute] = []
    flags: dict[str, dict[str, bool]] = {}
    malformed: list[tuple[str, str]] = []
    for txt in txt_files:
        dispute_id = txt.stem
        try:
            raw_text = txt.read_text(encoding="utf-8")
            sentence_roles = None
            roles_path = txt.with_suffix(".roles")
            if roles_path.exists():
                sentence_roles = _parse_roles(roles_path)
            dispute = Dispute(
                dispute_id=dispute_id,
                dataset=dataset,
                raw_text=raw_text,
                sentence_roles=sentence_roles,
            )
            meta_path = txt.with_suffix(".meta")
            if meta_path.exists():
                flags[dispute_id] = _parse_meta(meta_path)
        except (ValueError, UnicodeDecodeError) as exc:
            malformed.append((txt.name, str(exc)))
            continue
        disputes.append(dispute)

    disputes.sort(key=lambda d: d.dispute_id)
    return LoadedCorpus(disputes=disputes, flags=flags, malformed=malformed)


def _enabled_predicates(config: FilterConfig) -> list[str]:
    predicates = []
    if config.dataset is DatasetId.AUTO_INSURANCE:
        if config.sector_keyword_allowlist:
            predicates.append("is_automobile")
        if config.require_clear_winner:
            predicates.append("has_clear_winner")
    elif config.dataset is DatasetId.DOMAIN_NAME:
        if config.require_respondent_response:
            predicates.append("respondent_responded")
    return predicates


def apply_filters(
    disputes: list[Dispute],
    config: FilterConfig,
    flags: dict[str, dict[str, bool]],
) -> list[Dispute]:
    """Keep exactly the disputes whose metadata satisfies every enabled
    predicate, preserving input order."""
    predicates = _enabled_predicates(config)
    if not predicates:
        return list(disputes)

    kept = []
    for dispute in disputes:
        dispute_flags = flags.get(dispute.dispute_id, {})
        keep = True
        for predicate in predicates:
            if predicate not in dispute_flags:
                raise MissingFlagError(
                    f"dispute {dispute.dispute_id!r} has no {predicate!r} flag"
                )
            if not dispute_flags[predicate]:
                keep = False
        if keep:
            kept.append(dispute)
    return kept


def _measure_stats(values: list[int]) -> MeasureStats:
    arr = np.asarray(values, dtype=float)
    q1, median, q3 = np.percentile(arr, [25, 50, 75])
    return MeasureStats(
        mean=float(arr.mean()),
        std_deviation=float(arr.std()),  # population formula
        q1=float(q1),
        median=float(median),
        q3=float(q3),
    )


def compute_stats(disputes: list[Dispute]) -> CorpusStats:
    """Per-document sentence and word counts summarized as mean, population
    standard deviation and linearly interpolated quartiles."""
    if not disputes:
        raise EmptyCorpusError("cannot compute statistics of an empty corpus")
    sentence_counts = [len(split_sentences(d.raw_text)) for d in disputes]
    word_counts = [word_count(d.raw_text) for d in disputes]
    return CorpusStats(
        n_disputes=len(disputes),
        sentences_per_doc=_measure_stats(sentence_counts),
        words_per_doc=_measure_stats(word_counts),
    )


def stats_csv(stats: CorpusStats) -> str:
    """Two-column CSV with the standard dataset-statistics row labels."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["Statistic", "Value"])
    writer.writerow(["No. of disputes (documents)", stats.n_disputes])
    for label, measure in (
        ("No. of sentences per document", stats.sentences_per_doc),
        ("No. of words per document", stats.words_per_doc),
    ):
        writer.writerow([f"{label}: Mean", f"{measure.mean:.1f}"])
        writer.writerow([f"{label}: Std. Deviation", f"{measure.std_deviation:.1f}"])
        writer.writerow([f"{label}: First Quartile (Q1)", f"{measure.q1:.1f}"])
        writer.writerow([f"{label}: Median (Q2)", f"{measure.median:.1f}"])
        writer.writerow([f"{label}: Third Quartile (Q3)", f"{measure.q3:.1f}"])
    return buf.getvalue()

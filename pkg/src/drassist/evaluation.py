"""Metrics, baselines, and report assembly.

Label metrics (accuracy, macro-F1) pool items across disputes before
scoring (micro pooling), so each (technique, model, task) combination
yields exactly one row. Text metrics are ROUGE-1, ROUGE-L, and a
BERTScore-style greedy-matching F1 over a pluggable token embedder,
reported as "semantic-F1 (BERTScore-style)".
"""

from __future__ import annotations

import csv
import io
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Hashable, Sequence

from .alignment import AlignedItems, cosine_similarity
from .gateway import EmbeddingVector, Gateway, ModelSpec
from .model import (
    DatasetId,
    GroundTruth,
    PartyRole,
    ResolutionOutput,
    Strategy,
)
from .textutil import tokenize

TokenEmbedder = Callable[[list[str]], list[EmbeddingVector]]


class EvaluationError(Exception):
    pass


class EmptyInputError(EvaluationError):
    pass


class KeyMismatchError(EvaluationError):
    pass


class TaskKind(Enum):
    STRONGER_PARTY = "stronger_party"
    DEMAND_DECISION = "demand_decision"
    ARGUMENT_EVAL = "argument_eval"


@dataclass
class EvalRow:
    technique: str
    model: str
    task: TaskKind
    accuracy: float
    macro_f1: float
    n: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.accuracy <= 1.0 or not 0.0 <= self.macro_f1 <= 1.0:
            raise ValueError("accuracy and macro_f1 must lie in [0, 1]")
        if self.n < 1:
            raise ValueError("a row needs at least one scored pair")


@dataclass
class JustificationRow:
    technique: str
    model: str
    rouge1_f1: float
    rougeL_f1: float
    semantic_f1: float
    n_correct_used: int


@dataclass
class EvalReport:
    dataset: DatasetId
    rows: list[EvalRow] = field(default_factory=list)
    justification_rows: list[JustificationRow] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


# -- label metrics -----------------------------------------------------------


def accuracy(pairs: Sequence[tuple[Hashable | None, Hashable]]) -> float:
    """Fraction of pairs whose prediction equals gold; absent predictions
    (None) count as incorrect."""
    if not pairs:
        raise EmptyInputError("accuracy of zero pairs is undefined")
    correct = sum(1 for predicted, gold in pairs if predicted == gold)
    return correct / len(pairs)


def macro_f1(
    pairs: Sequence[tuple[Hashable | None, Hashable]],
    label_space: tuple[Hashable, Hashable],
) -> float:
    """Unweighted mean of the two per-class F1 scores.

    A class that never occurs in gold and is never predicted contributes
    F1 = 0, so an always-one-label predictor scores F1_majority / 2.
    """
    if not pairs:
        raise EmptyInputError("macro-F1 of zero pairs is undefined")
    scores = []
    for label in label_space:
        tp = sum(1 for p, g in pairs if p == label and g == label)
        fp = sum(1 for p, g in pairs if p == label and g != label)
        fn = sum(1 for p, g in pairs if p != label and g == label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        scores.append(f1)
    return sum(scores) / len(scores)


# -- text metrics ------------------------------------------------------------


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def rouge1_f1(candidate: str, reference: str) -> float:
    """Unigram multiset-overlap F1 (lowercased, punctuation-stripped)."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    overlap_counts = Counter(cand) & Counter(ref)
    overlap = sum(overlap_counts.values())
    return _f1(overlap / len(cand), overlap / len(ref))


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for token in a:
        cur = [0] * (len(b) + 1)
        for j, other in enumerate(b, start=1):
            if token == other:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rougeL_f1(candidate: str, reference: str) -> float:
    """Longest-common-subsequence F1 over token sequences."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    lcs = _lcs_length(cand, ref)
    return _f1(lcs / len(cand), lcs / len(ref))


def semantic_f1(candidate: str, reference: str, embedder: TokenEmbedder) -> float:
    """BERTScore-style greedy-matching F1 over token embeddings.

    Each candidate token contributes its maximum cosine similarity to any
    reference token (floored at 0, since negative similarity means no
    match); the mean is precision. Recall is symmetric; F1 harmonic.
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    vectors = embedder(cand + ref)
    cand_vecs, ref_vecs = vectors[: len(cand)], vectors[len(cand) :]
    sims = [[cosine_similarity(c, r) for r in ref_vecs] for c in cand_vecs]
    precision = sum(max(0.0, max(row)) for row in sims) / len(cand)
    recall = sum(max(0.0, max(sims[i][j] for i in range(len(cand)))) for j in range(len(ref))) / len(ref)
    return _f1(precision, recall)


def gateway_embedder(gateway: Gateway, model: ModelSpec) -> TokenEmbedder:
    """Adapt the gateway's embedding interface to the token-embedder shape."""

    def embed(texts: list[str]) -> list[EmbeddingVector]:
        return gateway.embed_texts(texts, model)

    return embed


# -- baselines ---------------------------------------------------------------


def run_majority_baseline(
    gold: Sequence[Hashable], label_space: tuple[Hashable, Hashable]
) -> tuple[list[Hashable], list[str]]:
    """Predict the dataset-level majority label uniformly.

    An exact 50/50 split falls back to the first label in canonical
    label-space order, with a TIE diagnostic.
    """
    if not gold:
        raise EmptyInputError("majority baseline over zero gold labels")
    counts = Counter(gold)
    first, second = label_space
    diagnostics: list[str] = []
    if counts[first] == counts[second]:
        majority = first
        diagnostics.append("TIE: gold split exactly 50/50, using canonical first label")
    else:
        majority = first if counts[first] > counts[second] else second
    return [majority] * len(gold), diagnostics


def run_random_baseline(
    gold: Sequence[Hashable], label_space: tuple[Hashable, Hashable], seed: int
) -> list[Hashable]:
    """Uniform independent label draws from a seeded generator."""
    if not gold:
        raise EmptyInputError("random baseline over zero gold labels")
    rng = random.Random(seed)
    return [rng.choice(label_space) for _ in gold]


# -- run evaluation ----------------------------------------------------------

_TASK_KINDS = {"demand": TaskKind.DEMAND_DECISION, "argument": TaskKind.ARGUMENT_EVAL}


def _technique(strategy: Strategy) -> str:
    return strategy.value


def _party_label_space(dataset: DatasetId) -> tuple[PartyRole, PartyRole]:
    del dataset  # both datasets use the same two roles
    return (PartyRole.PARTY_A, PartyRole.PARTY_B)


def _item_label_space(kind: str):
    from .model import DecisionLabel, StrengthLabel

    if kind == "demand":
        return (DecisionLabel.ACCEPTED, DecisionLabel.REJECTED)
    return (StrengthLabel.STRONG, StrengthLabel.WEAK)


def evaluate_run(
    dataset: DatasetId,
    resolutions: list[ResolutionOutput],
    ground_truths: list[GroundTruth],
    aligned: list[AlignedItems],
) -> EvalReport:
    """Score every (technique, model, task) combination present.

    Stronger-party pairs come straight from resolutions vs GT winners;
    item-level pairs are routed through each model's GT alignment, with
    unmatched or unparsed ground-truth items scored as incorrect.
    """
    gt_by_id = {gt.dispute_id: gt for gt in ground_truths}
    missing = sorted({r.dispute_id for r in resolutions} - set(gt_by_id))
    if missing:
        raise KeyMismatchError(f"disputes missing ground truth: {', '.join(missing)}")

    report = EvalReport(dataset=dataset)

    # Stronger party: one pair per (dispute, model, strategy).
    party_pairs: dict[tuple[str, str], list[tuple]] = {}
    for res in resolutions:
        gt = gt_by_id[res.dispute_id]
        key = (_technique(res.strategy), res.model)
        party_pairs.setdefault(key, []).append((res.stronger_party, gt.winning_party))

    # Items: pool over aligned (dispute, party, kind) groups.
    res_by_key = {(r.dispute_id, r.model, r.strategy): r for r in resolutions}
    item_pairs: dict[tuple[str, str, str], list[tuple]] = {}
    for rec in aligned:
        gt = gt_by_id.get(rec.dispute_id)
        if gt is None:
            raise KeyMismatchError(f"aligned items for unknown dispute {rec.dispute_id!r}")
        res = res_by_key.get((rec.dispute_id, rec.model, rec.strategy))
        if res is None:
            continue
        gold_pairs = (
            gt.demand_decisions if rec.kind == "demand" else gt.argument_evaluations
        ).get(rec.party, [])
        pred_items = (
            res.demand_decisions if rec.kind == "demand" else res.argument_evaluations
        ).get(rec.party, [])
        if any(r >= len(gold_pairs) for r, _ in rec.assignment.pairs):
            raise KeyMismatchError(
                f"alignment for {rec.dispute_id!r} references a gold index out of range"
            )
        col_by_row = {r: c for r, c in rec.assignment.pairs}
        key = (_technique(res.strategy), res.model, rec.kind)
        pool = item_pairs.setdefault(key, [])
        for row, (_, gold_label) in enumerate(gold_pairs):
            if gold_label is None:
                continue  # GT labeling failed for this item set entry
            col = col_by_row.get(row)
            predicted = None
            if col is not None and col < len(pred_items):
                predicted = pred_items[col].label
            pool.append((predicted, gold_label))

    for (technique, model), pairs in sorted(party_pairs.items()):
        report.rows.append(
            EvalRow(
                technique=technique,
                model=model,
                task=TaskKind.STRONGER_PARTY,
                accuracy=accuracy(pairs),
                macro_f1=macro_f1(pairs, _party_label_space(dataset)),
                n=len(pairs),
            )
        )
    for (technique, model, kind), pairs in sorted(item_pairs.items()):
        if not pairs:
            continue
        report.rows.append(
            EvalRow(
                technique=technique,
                model=model,
                task=_TASK_KINDS[kind],
                accuracy=accuracy(pairs),
                macro_f1=macro_f1(pairs, _item_label_space(kind)),
                n=len(pairs),
            )
        )
    return report


def _gold_pools(ground_truths: list[GroundTruth]):
    winners = [gt.winning_party for gt in ground_truths]
    demands = [
        label
        for gt in ground_truths
        for items in gt.demand_decisions.values()
        for _, label in items
        if label is not None
    ]
    arguments = [
        label
        for gt in ground_truths
        for items in gt.argument_evaluations.values()
        for _, label in items
        if label is not None
    ]
    return winners, demands, arguments


def evaluate_baseline(
    dataset: DatasetId,
    ground_truths: list[GroundTruth],
    baseline: str,
    seed: int = 0,
) -> EvalReport:
    """Baseline rows for all three tasks over a gold set.

    baseline is "majority" or "random"; tasks with no labeled gold items
    are omitted.
    """
    if baseline not in ("majority", "random"):
        raise ValueError(f"unknown baseline {baseline!r}")
    winners, demands, arguments = _gold_pools(ground_truths)
    report = EvalReport(dataset=dataset)
    model_name = "Majority Label" if baseline == "majority" else "Random Label"
    tasks = [
        (TaskKind.STRONGER_PARTY, winners, _party_label_space(dataset)),
        (TaskKind.DEMAND_DECISION, demands, _item_label_space("demand")),
        (TaskKind.ARGUMENT_EVAL, arguments, _item_label_space("argument")),
    ]
    for task, gold, label_space in tasks:
        if not gold:
            report.diagnostics.append(f"no gold labels for {task.value}, row omitted")
            continue
        if baseline == "majority":
            predictions, diagnostics = run_majority_baseline(gold, label_space)
            report.diagnostics.extend(diagnostics)
        else:
            predictions = run_random_baseline(gold, label_space, seed)
        pairs = list(zip(predictions, gold))
        report.rows.append(
            EvalRow(
                technique="Baselines",
                model=model_name,
                task=task,
                accuracy=accuracy(pairs),
                macro_f1=macro_f1(pairs, label_space),
                n=len(pairs),
            )
        )
    return report


def evaluate_justifications(
    resolutions: list[ResolutionOutput],
    ground_truths: list[GroundTruth],
    gold_justifications: dict[str, str],
    embedder: TokenEmbedder,
) -> tuple[list[JustificationRow], list[str]]:
    """Average justification quality over correctly predicted disputes only.

    For each (technique, model): keep disputes whose stronger-party
    prediction matches the GT winner and whose gold justification is
    non-empty, then average the three text metrics between the predicted
    stronger-party justification and the gold justification.
    """
    gt_by_id = {gt.dispute_id: gt for gt in ground_truths}
    groups: dict[tuple[str, str], list[ResolutionOutput]] = {}
    for res in resolutions:
        groups.setdefault((_technique(res.strategy), res.model), []).append(res)

    rows: list[JustificationRow] = []
    diagnostics: list[str] = []
    for (technique, model), outputs in sorted(groups.items()):
        scored: list[tuple[float, float, float]] = []
        for res in outputs:
            gt = gt_by_id.get(res.dispute_id)
            gold = gold_justifications.get(res.dispute_id, "")
            if gt is None or not gold.strip():
                continue
            if res.stronger_party is None or res.stronger_party != gt.winning_party:
                continue
            candidate = res.stronger_party_justification
            scored.append(
                (
                    rouge1_f1(candidate, gold),
                    rougeL_f1(candidate, gold),
                    semantic_f1(candidate, gold, embedder),
                )
            )
        if not scored:
            diagnostics.append(
                f"NO_CORRECT_PREDICTIONS: {technique}/{model} has no correctly "
                "predicted dispute with a gold justification; row omitted"
            )
            continue
        n = len(scored)
        rows.append(
            JustificationRow(
                technique=technique,
                model=model,
                rouge1_f1=sum(s[0] for s in scored) / n,
                rougeL_f1=sum(s[1] for s in scored) / n,
                semantic_f1=sum(s[2] for s in scored) / n,
                n_correct_used=n,
            )
        )
    return rows, diagnostics


# -- report emission ---------------------------------------------------------


def report_csv(report: EvalReport) -> str:
    """Label-metric rows in the results-table layout."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dataset", "technique", "model", "task", "accuracy", "macro_f1", "n"])
    for row in report.rows:
        writer.writerow(
            [
                report.dataset.value,
                row.technique,
                row.model,
                row.task.value,
                f"{row.accuracy:.4f}",
                f"{row.macro_f1:.4f}",
                row.n,
            ]
        )
    return buf.getvalue()


def justification_csv(report: EvalReport) -> str:
    """Justification-quality series (technique x model x metric), the
    plot-data export."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "dataset",
            "technique",
            "model",
            "rouge1_f1",
            "rougeL_f1",
            "semantic_f1_bertscore_style",
            "n_correct_used",
        ]
    )
    for row in report.justification_rows:
        writer.writerow(
            [
                report.dataset.value,
                row.technique,
                row.model,
                f"{row.rouge1_f1:.4f}",
                f"{row.rougeL_f1:.4f}",
                f"{row.semantic_f1:.4f}",
                row.n_correct_used,
            ]
        )
    return buf.getvalue()


def report_json(report: EvalReport) -> str:
    doc = {
        "dataset": report.dataset.value,
        "rows": [
            {
                "technique": r.technique,
                "model": r.model,
                "task": r.task.value,
                "accuracy": r.accuracy,
                "macro_f1": r.macro_f1,
                "n": r.n,
            }
            for r in report.rows
        ],
        "justification_rows": [
            {
                "technique": r.technique,
                "model": r.model,
                "rouge1_f1": r.rouge1_f1,
                "rougeL_f1": r.rougeL_f1,
                "semantic_f1_bertscore_style": r.semantic_f1,
                "n_correct_used": r.n_correct_used,
            }
            for r in report.justification_rows
        ],
        "diagnostics": list(report.diagnostics),
    }
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False)

"""Directory-based batch stages composing the full pipeline.

Each stage reads artifacts from input directories, calls the gateway as
needed, and writes self-describing outputs: line-delimited records plus a
``manifest.json`` naming the dataset and models, so downstream stages need
no repeated flags. Results are written per dispute in sorted order; with a
warm cache a rerun rewrites byte-identical trees.

Stage failures are collected, not raised: one bad dispute must not abort a
corpus run. "provider" failures are gateway/transport problems, "data"
failures are unparseable or incomplete artifacts.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .alignment import AlignedItems, Assignment, align_items
from .corpus import load_corpus
from .ensemble import build_ensemble_from_texts, gt_texts_from_alignments
from .evaluation import (
    EvalReport,
    evaluate_baseline,
    evaluate_justifications,
    evaluate_run,
    gateway_embedder,
    justification_csv,
    report_csv,
)
from .gateway import ChatRequest, Gateway, GatewayError
from .groundtruth import (
    GroundTruthError,
    build_argument_gt_prompt,
    build_demand_gt_prompt,
    build_ground_truth,
)
from .model import (
    DECISION_ELEMENTS,
    DatasetId,
    Dispute,
    GroundTruth,
    PartyRole,
    ResolutionOutput,
    Strategy,
    StructuralElement,
    StructuredSummary,
    itemize_element,
)
from .persistence import (
    SCHEMA_VERSION,
    aligned_items_from_record,
    aligned_items_to_record,
    dumps_record,
    ground_truth_from_record,
    ground_truth_to_record,
    read_records,
    resolution_from_record,
    resolution_to_record,
    summary_from_record,
    summary_to_record,
    write_records,
)
from .resolve import (
    ResolveError,
    build_resolution_prompt,
    parse_resolution,
    strategy_spec,
)
from .summarize import (
    SummarizeError,
    build_summary_prompt,
    build_super_summary,
    parse_summary,
    summary_prompt_spec,
)

__all__ = [
    "PipelineError",
    "ManifestError",
    "StageFailure",
    "StageResult",
    "DisputeRunArtifacts",
    "RunLayout",
    "demo_config_path",
    "demo_corpus_path",
    "write_manifest",
    "read_manifests",
    "dataset_of",
    "models_of",
    "load_summaries",
    "load_super_summaries",
    "load_ground_truths",
    "load_resolutions",
    "load_alignments",
    "summarize_corpus",
    "ground_truth_corpus",
    "resolve_corpus",
    "align_corpus",
    "ensemble_corpus",
    "evaluate_corpus",
    "run_dispute",
    "run_full_pipeline",
    "audit_information_barrier",
]

SUPER_MODEL_ID = "SUPER"

_ASSET_ROOT = Path(__file__).parent


class PipelineError(Exception):
    pass


class ManifestError(PipelineError):
    pass


def demo_config_path() -> Path:
    """Gateway configuration wired to the scripted mock provider."""
    return _ASSET_ROOT / "demo_config.json"


def demo_corpus_path(dataset: DatasetId) -> Path:
    """Bundled example corpus directory for a dataset."""
    return _ASSET_ROOT / "demo_corpus" / dataset.value


@dataclass
class StageFailure:
    dispute_id: str
    kind: str  # "provider" or "data"
    detail: str


@dataclass
class StageResult:
    written: list[Path] = field(default_factory=list)
    failures: list[StageFailure] = field(default_factory=list)
    #: (label, prompt text) pairs collected instead of calls on dry runs.
    prompts: list[tuple[str, str]] = field(default_factory=list)

    @property
    def failure_kinds(self) -> set[str]:
        return {f.kind for f in self.failures}


# -- manifests ---------------------------------------------------------------


def write_manifest(out_dir: str | Path, payload: dict[str, Any]) -> Path:
    path = Path(out_dir) / "manifest.json"
    record = {"schema_version": SCHEMA_VERSION, **payload}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_record(record) + "\n", encoding="utf-8")
    return path


def read_manifests(root: str | Path) -> list[dict[str, Any]]:
    return [
        json.loads(path.read_text(encoding="utf-8"))
        for path in sorted(Path(root).glob("**/manifest.json"))
    ]


def dataset_of(root: str | Path) -> DatasetId:
    """The single dataset named by the manifests under root."""
    datasets = {m["dataset"] for m in read_manifests(root) if "dataset" in m}
    if len(datasets) != 1:
        raise ManifestError(
            f"{root}: expected exactly one dataset in manifests, "
            f"found {sorted(datasets) or 'none'}"
        )
    return DatasetId(datasets.pop())


def models_of(root: str | Path, stage: str) -> list[str]:
    """Priority-ordered model ids recorded by a stage's manifest."""
    for manifest in read_manifests(root):
        if manifest.get("stage") == stage and "models" in manifest:
            return list(manifest["models"])
    raise ManifestError(f"{root}: no {stage!r} manifest with a model list")


# -- artifact loaders --------------------------------------------------------


def _records_under(root: str | Path, pattern: str, record_type: str) -> list[dict]:
    records = []
    for path in sorted(Path(root).glob(pattern)):
        records.extend(
            r for r in read_records(path) if r.get("record_type") == record_type
        )
    return records


def load_summaries(root: str | Path) -> dict[str, list[StructuredSummary]]:
    """All persisted summaries (per-model and super), grouped by dispute."""
    grouped: dict[str, list[StructuredSummary]] = {}
    for record in _records_under(root, "**/*.jsonl", "structured_summary"):
        summary = summary_from_record(record)
        grouped.setdefault(summary.dispute_id, []).append(summary)
    return grouped


def load_super_summaries(root: str | Path) -> dict[str, StructuredSummary]:
    return {
        dispute_id: next(s for s in group if s.source_model == SUPER_MODEL_ID)
        for dispute_id, group in load_summaries(root).items()
        if any(s.source_model == SUPER_MODEL_ID for s in group)
    }


def load_ground_truths(root: str | Path) -> list[GroundTruth]:
    return [
        ground_truth_from_record(r)
        for r in _records_under(root, "**/*.gt", "ground_truth")
    ]


def load_resolutions(root: str | Path) -> list[ResolutionOutput]:
    return [
        resolution_from_record(r)
        for r in _records_under(root, "**/*.jsonl", "resolution_output")
    ]


def load_alignments(root: str | Path) -> list[AlignedItems]:
    return [
        aligned_items_from_record(r)
        for r in _records_under(root, "**/*.jsonl", "aligned_items")
    ]


# -- shared stage machinery ----------------------------------------------------


def _run_per_dispute(
    disputes: list[Dispute],
    work: Callable[[Dispute], tuple[list[tuple[Path, list[dict]]], list[StageFailure]]],
    parallel: int,
    result: StageResult,
) -> None:
    """Run work() per dispute with bounded concurrency, then write every
    produced file in sorted dispute order for a stable tree."""
    ordered = sorted(disputes, key=lambda d: d.dispute_id)
    with ThreadPoolExecutor(max_workers=max(1, parallel)) as pool:
        outcomes = list(pool.map(work, ordered))
    for files, failures in outcomes:
        result.failures.extend(failures)
        for path, records in files:
            write_records(path, records)
            result.written.append(path)


def _classify(dispute_id: str, exc: Exception) -> StageFailure:
    kind = "provider" if isinstance(exc, GatewayError) else "data"
    return StageFailure(dispute_id, kind, f"{type(exc).__name__}: {exc}")


# -- stages -------------------------------------------------------------------


def summarize_corpus(
    corpus_dir: str | Path,
    dataset: DatasetId,
    model_ids: list[str],
    out_dir: str | Path,
    *,
    gateway: Gateway,
    merge_model_id: str | None = None,
    parallel: int = 4,
    dry_run: bool = False,
) -> StageResult:
    """Per-model structured summaries plus the merged SUPER summary, one
    ``<dispute_id>.summ.jsonl`` per dispute."""
    out = Path(out_dir)
    loaded = load_corpus(corpus_dir, dataset)
    spec = summary_prompt_spec(dataset)
    merge_id = merge_model_id or model_ids[0]
    result = StageResult()
    result.failures.extend(
        StageFailure(name, "data", f"malformed corpus file: {detail}")
        for name, detail in loaded.malformed
    )

    if dry_run:
        for dispute in loaded.disputes:
            result.prompts.append(
                (f"summarize {dispute.dispute_id}", build_summary_prompt(dispute, spec))
            )
        return result

    def work(dispute: Dispute):
        prompt = build_summary_prompt(dispute, spec)
        summaries: list[StructuredSummary] = []
        failures: list[StageFailure] = []
        for model_id in model_ids:
            try:
                response = gateway.chat_complete(
                    ChatRequest(
                        model=gateway.config.model(model_id),
                        prompt=prompt,
                        request_tag=f"summarize:{dispute.dispute_id}",
                    )
                )
                summaries.append(
                    parse_summary(
                        response.text,
                        spec,
                        dispute_id=dispute.dispute_id,
                        source_model=model_id,
                    )
                )
            except (GatewayError, SummarizeError) as exc:
                failures.append(_classify(dispute.dispute_id, exc))
        if not summaries:
            return [], failures
        try:
            super_summary = build_super_summary(
                summaries,
                gateway=gateway,
                model=gateway.config.model(merge_id),
                dataset=dataset,
                expected_models=len(summaries),
            )
        except (GatewayError, SummarizeError, ValueError) as exc:
            failures.append(_classify(dispute.dispute_id, exc))
            return [], failures
        records = [summary_to_record(s) for s in summaries + [super_summary]]
        return [(out / f"{dispute.dispute_id}.summ.jsonl", records)], failures

    _run_per_dispute(loaded.disputes, work, parallel, result)
    write_manifest(
        out,
        {
            "stage": "summarize",
            "dataset": dataset.value,
            "models": list(model_ids),
            "merge_model": merge_id,
        },
    )
    return result


def ground_truth_corpus(
    summaries_dir: str | Path,
    corpus_dir: str | Path,
    gt_model_id: str,
    out_dir: str | Path,
    *,
    gateway: Gateway,
    parallel: int = 4,
    dry_run: bool = False,
) -> StageResult:
    """Gold labels per dispute under ``<out>/<dataset>/<dispute_id>.gt``.

    Each file holds the ground_truth record plus an audit record naming the
    labeling model and its diagnostics; raw responses stay recoverable from
    the gateway cache via the prompts.
    """
    dataset = dataset_of(summaries_dir)
    out = Path(out_dir)
    supers = load_super_summaries(summaries_dir)
    loaded = load_corpus(corpus_dir, dataset)
    disputes = [d for d in loaded.disputes if d.dispute_id in supers]
    result = StageResult()
    result.failures.extend(
        StageFailure(d.dispute_id, "data", "no super summary; skipped")
        for d in loaded.disputes
        if d.dispute_id not in supers
    )

    if dry_run:
        for dispute in disputes:
            summary = supers[dispute.dispute_id]
            for party in PartyRole:
                if summary.demands.get(party):
                    result.prompts.append(
                        (
                            f"gt demands {dispute.dispute_id} {party.value}",
                            build_demand_gt_prompt(dispute, summary.demands[party], party),
                        )
                    )
                if summary.arguments.get(party):
                    result.prompts.append(
                        (
                            f"gt arguments {dispute.dispute_id} {party.value}",
                            build_argument_gt_prompt(
                                dispute, summary.arguments[party], party
                            ),
                        )
                    )
        return result

    def work(dispute: Dispute):
        try:
            gt, diagnostics = build_ground_truth(
                dispute,
                supers[dispute.dispute_id],
                gateway=gateway,
                model=gateway.config.model(gt_model_id),
            )
        except (GatewayError, GroundTruthError) as exc:
            return [], [_classify(dispute.dispute_id, exc)]
        records = [
            ground_truth_to_record(gt),
            {
                "schema_version": SCHEMA_VERSION,
                "record_type": "gt_audit",
                "dispute_id": dispute.dispute_id,
                "model": gt_model_id,
                "diagnostics": diagnostics,
            },
        ]
        path = out / dataset.value / f"{dispute.dispute_id}.gt"
        return [(path, records)], []

    _run_per_dispute(disputes, work, parallel, result)
    write_manifest(
        out,
        {"stage": "ground-truth", "dataset": dataset.value, "gt_model": gt_model_id},
    )
    return result


def resolve_corpus(
    summaries_dir: str | Path,
    strategy: Strategy,
    model_ids: list[str],
    out_dir: str | Path,
    *,
    gateway: Gateway,
    parallel: int = 4,
    dry_run: bool = False,
) -> StageResult:
    """Resolution outputs per dispute and model for one strategy.

    The exact prompt sent to every model is persisted next to the outputs
    (``<dispute_id>.<strategy>.prompt.txt``) so prompt audits read what ran,
    not a reconstruction.
    """
    dataset = dataset_of(summaries_dir)
    out = Path(out_dir)
    supers = load_super_summaries(summaries_dir)
    spec = strategy_spec(strategy, dataset)
    result = StageResult()

    prompts: dict[str, str] = {}
    for dispute_id in sorted(supers):
        try:
            prompts[dispute_id] = build_resolution_prompt(
                supers[dispute_id], spec, dataset
            )
        except ResolveError as exc:
            result.failures.append(_classify(dispute_id, exc))

    if dry_run:
        result.prompts = [
            (f"resolve {strategy.value} {dispute_id}", prompt)
            for dispute_id, prompt in prompts.items()
        ]
        return result

    def work(dispute_id: str):
        prompt = prompts[dispute_id]
        outputs: list[ResolutionOutput] = []
        failures: list[StageFailure] = []
        for model_id in model_ids:
            try:
                response = gateway.chat_complete(
                    ChatRequest(
                        model=gateway.config.model(model_id),
                        prompt=prompt,
                        request_tag=f"resolve:{strategy.value}:{dispute_id}",
                    )
                )
                outputs.append(
                    parse_resolution(
                        response.text,
                        spec,
                        dataset,
                        dispute_id=dispute_id,
                        model=model_id,
                        finish_reason=response.finish_reason,
                    )
                )
            except (GatewayError, ResolveError) as exc:
                failures.append(_classify(dispute_id, exc))
        if not outputs:
            return [], failures
        path = out / f"{dispute_id}.{strategy.value}.res.jsonl"
        return [(path, [resolution_to_record(o) for o in outputs])], failures

    out.mkdir(parents=True, exist_ok=True)
    ordered = sorted(prompts)
    with ThreadPoolExecutor(max_workers=max(1, parallel)) as pool:
        outcomes = list(pool.map(work, ordered))
    for dispute_id in ordered:
        prompt_path = out / f"{dispute_id}.{strategy.value}.prompt.txt"
        prompt_path.write_text(prompts[dispute_id], encoding="utf-8")
        result.written.append(prompt_path)
    for files, failures in outcomes:
        result.failures.extend(failures)
        for path, records in files:
            write_records(path, records)
            result.written.append(path)
    write_manifest(
        out,
        {"stage": "resolve", "dataset": dataset.value, "models": list(model_ids)},
    )
    return result


def _empty_assignment(n_gt: int, note: str) -> Assignment:
    return Assignment(
        pairs=[],
        unmatched_rows=list(range(n_gt)),
        unmatched_cols=[],
        total_cost=0.0,
        pair_distances=[],
        diagnostics=[note],
    )


def align_corpus(
    resolutions_dir: str | Path,
    gt_dir: str | Path,
    embed_model_id: str,
    out_dir: str | Path,
    *,
    gateway: Gateway,
    parallel: int = 4,
) -> StageResult:
    """Align every resolution's item lists onto the gold item lists.

    A prediction with no items still yields a record whose assignment leaves
    every gold row unmatched, so evaluation counts those gold items as
    misses instead of silently dropping them.
    """
    dataset = dataset_of(resolutions_dir)
    out = Path(out_dir)
    embed_model = gateway.config.model(embed_model_id)
    resolutions = load_resolutions(resolutions_dir)
    gt_by_id = {gt.dispute_id: gt for gt in load_ground_truths(gt_dir)}
    result = StageResult()

    groups: dict[tuple[str, str], list[ResolutionOutput]] = {}
    for res in resolutions:
        if res.dispute_id not in gt_by_id:
            result.failures.append(
                StageFailure(res.dispute_id, "data", "no ground truth; skipped")
            )
            continue
        groups.setdefault((res.dispute_id, res.strategy.value), []).append(res)

    def align_one(res: ResolutionOutput, gt: GroundTruth) -> list[AlignedItems]:
        # Only the item kinds the strategy asked the model for: a missing
        # list under S3 is a miss, but S1/S2 never predict arguments.
        kinds = []
        if res.strategy in (Strategy.S2, Strategy.S3):
            kinds.append(("demand", gt.demand_decisions, res.demand_decisions))
        if res.strategy is Strategy.S3:
            kinds.append(("argument", gt.argument_evaluations, res.argument_evaluations))
        records = []
        for kind, gold_map, pred_map in kinds:
            for party in PartyRole:
                gt_texts = [text for text, _ in gold_map.get(party, [])]
                if not gt_texts:
                    continue
                pred_texts = [item.text for item in pred_map.get(party, [])]
                if pred_texts:
                    assignment = align_items(gt_texts, pred_texts, gateway, embed_model)
                else:
                    assignment = _empty_assignment(len(gt_texts), "no predicted items")
                records.append(
                    AlignedItems(
                        dispute_id=res.dispute_id,
                        model=res.model,
                        strategy=res.strategy,
                        kind=kind,
                        party=party,
                        gt_texts=gt_texts,
                        pred_texts=pred_texts,
                        assignment=assignment,
                    )
                )
        return records

    def work(key: tuple[str, str]):
        dispute_id, strategy_value = key
        gt = gt_by_id[dispute_id]
        failures: list[StageFailure] = []
        records = []
        for res in sorted(groups[key], key=lambda r: r.model):
            try:
                records.extend(aligned_items_to_record(a) for a in align_one(res, gt))
            except GatewayError as exc:
                failures.append(_classify(dispute_id, exc))
        if not records:
            return [], failures
        path = out / f"{dispute_id}.{strategy_value}.align.jsonl"
        return [(path, records)], failures

    ordered = sorted(groups)
    with ThreadPoolExecutor(max_workers=max(1, parallel)) as pool:
        outcomes = list(pool.map(work, ordered))
    for files, failures in outcomes:
        result.failures.extend(failures)
        for path, records in files:
            write_records(path, records)
            result.written.append(path)
    write_manifest(
        out,
        {"stage": "align", "dataset": dataset.value, "embed_model": embed_model_id},
    )
    return result


def _identity_alignment(output: ResolutionOutput) -> list[AlignedItems]:
    """Ensemble items are already in gold order; record that as an identity
    assignment so the evaluator can route them like any model's items."""
    records = []
    for kind, item_map in (
        ("demand", output.demand_decisions),
        ("argument", output.argument_evaluations),
    ):
        for party in PartyRole:
            items = item_map.get(party, [])
            if not items:
                continue
            texts = [item.text for item in items]
            records.append(
                AlignedItems(
                    dispute_id=output.dispute_id,
                    model=output.model,
                    strategy=output.strategy,
                    kind=kind,
                    party=party,
                    gt_texts=texts,
                    pred_texts=texts,
                    assignment=Assignment(
                        pairs=[(i, i) for i in range(len(items))],
                        unmatched_rows=[],
                        unmatched_cols=[],
                        total_cost=0.0,
                        pair_distances=[0.0] * len(items),
                    ),
                )
            )
    return records


def ensemble_corpus(
    resolutions_dir: str | Path,
    alignments_dir: str | Path,
    out_dir: str | Path,
) -> StageResult:
    """Majority-vote ensemble per (dispute, strategy) over >= 3 models.

    Model priority comes from the resolve manifest's declaration order; the
    gold item lists are recovered from the alignment records, so this stage
    needs no gateway and no separate gold directory.
    """
    dataset = dataset_of(resolutions_dir)
    model_priority = models_of(resolutions_dir, "resolve")
    out = Path(out_dir)
    resolutions = load_resolutions(resolutions_dir)
    alignments = load_alignments(alignments_dir)
    result = StageResult()

    res_by_group: dict[tuple[str, Strategy], dict[str, ResolutionOutput]] = {}
    for res in resolutions:
        res_by_group.setdefault((res.dispute_id, res.strategy), {})[res.model] = res
    aligned_by_group: dict[tuple[str, Strategy], list[AlignedItems]] = {}
    for rec in alignments:
        aligned_by_group.setdefault((rec.dispute_id, rec.strategy), []).append(rec)

    for (dispute_id, strategy), by_model in sorted(
        res_by_group.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
    ):
        voters = [m for m in model_priority if m in by_model]
        if len(voters) < 3:
            result.failures.append(
                StageFailure(
                    dispute_id,
                    "data",
                    f"{strategy.value}: only {len(voters)} model outputs, "
                    "below the 3-model ensemble quorum",
                )
            )
            continue
        group_aligned = aligned_by_group.get((dispute_id, strategy), [])
        gt_texts = gt_texts_from_alignments(group_aligned)
        per_model = []
        for model_id in voters:
            model_aligned = {
                (rec.kind, rec.party): rec.assignment
                for rec in group_aligned
                if rec.model == model_id
            }
            per_model.append((by_model[model_id], model_aligned))
        output = build_ensemble_from_texts(dispute_id, gt_texts, per_model)
        records = [resolution_to_record(output)]
        records.extend(aligned_items_to_record(a) for a in _identity_alignment(output))
        path = out / f"{dispute_id}.{strategy.value}.ens.jsonl"
        write_records(path, records)
        result.written.append(path)

    write_manifest(
        out,
        {"stage": "ensemble", "dataset": dataset.value, "models": model_priority},
    )
    return result


def evaluate_corpus(
    resolutions_dir: str | Path,
    gt_dir: str | Path,
    alignments_dir: str | Path,
    report_path: str | Path,
    *,
    baseline: str | None = None,
    seed: int = 0,
    summaries_dir: str | Path | None = None,
    embed_model_id: str | None = None,
    gateway: Gateway | None = None,
    justification_report_path: str | Path | None = None,
) -> tuple[EvalReport, StageResult]:
    """Score all persisted resolutions against gold and write the report CSV.

    Baseline rows are appended to the same report when requested. The
    justification-quality CSV additionally needs the summaries (for gold
    justifications) and an embedding model.
    """
    dataset = dataset_of(resolutions_dir)
    ground_truths = load_ground_truths(gt_dir)
    gt_ids = {gt.dispute_id for gt in ground_truths}
    resolutions = load_resolutions(resolutions_dir)
    alignments = [a for a in load_alignments(alignments_dir) if a.dispute_id in gt_ids]
    result = StageResult()

    scored = [r for r in resolutions if r.dispute_id in gt_ids]
    result.failures.extend(
        StageFailure(r.dispute_id, "data", "no ground truth; excluded from scoring")
        for r in resolutions
        if r.dispute_id not in gt_ids
    )

    report = evaluate_run(dataset, scored, ground_truths, alignments)
    if baseline is not None:
        baseline_report = evaluate_baseline(dataset, ground_truths, baseline, seed)
        report.rows.extend(baseline_report.rows)
        report.diagnostics.extend(baseline_report.diagnostics)

    report_file = Path(report_path)
    report_file.parent.mkdir(parents=True, exist_ok=True)
    report_file.write_text(report_csv(report), encoding="utf-8")
    result.written.append(report_file)

    if justification_report_path is not None:
        if summaries_dir is None or embed_model_id is None or gateway is None:
            raise PipelineError(
                "justification report needs summaries_dir, embed_model_id "
                "and a gateway"
            )
        supers = load_super_summaries(summaries_dir)
        gold_justifications = {
            dispute_id: summary.elements.get(StructuralElement.JUSTIFICATION, "")
            for dispute_id, summary in supers.items()
        }
        embedder = gateway_embedder(gateway, gateway.config.model(embed_model_id))
        rows, diagnostics = evaluate_justifications(
            scored, ground_truths, gold_justifications, embedder
        )
        report.justification_rows = rows
        report.diagnostics.extend(diagnostics)
        justification_file = Path(justification_report_path)
        justification_file.parent.mkdir(parents=True, exist_ok=True)
        justification_file.write_text(justification_csv(report), encoding="utf-8")
        result.written.append(justification_file)

    return report, result


# -- single-dispute runner (service and live smoke) ---------------------------


@dataclass
class DisputeRunArtifacts:
    """Everything produced for one dispute and one strategy."""

    summaries: list[StructuredSummary]
    super_summary: StructuredSummary
    resolution_prompt: str
    resolutions: list[ResolutionOutput]
    alignments: list[AlignedItems]
    ensemble: ResolutionOutput | None
    failures: list[StageFailure]


def run_dispute(
    dispute: Dispute,
    *,
    gateway: Gateway,
    model_ids: list[str],
    strategy: Strategy,
    embed_model_id: str | None = None,
    merge_model_id: str | None = None,
) -> DisputeRunArtifacts:
    """Summarize, resolve and (with >= 3 models) ensemble one dispute.

    Without gold labels the super summary's own item lists are the shared
    coordinate system: each model's items are aligned onto them, and the
    ensemble votes per summary item.
    """
    spec = summary_prompt_spec(dispute.dataset)
    prompt = build_summary_prompt(dispute, spec)
    failures: list[StageFailure] = []
    summaries: list[StructuredSummary] = []
    for model_id in model_ids:
        response = gateway.chat_complete(
            ChatRequest(
                model=gateway.config.model(model_id),
                prompt=prompt,
                request_tag=f"summarize:{dispute.dispute_id}",
            )
        )
        try:
            summaries.append(
                parse_summary(
                    response.text,
                    spec,
                    dispute_id=dispute.dispute_id,
                    source_model=model_id,
                )
            )
        except SummarizeError as exc:
            failures.append(_classify(dispute.dispute_id, exc))
    if not summaries:
        raise PipelineError(
            f"dispute {dispute.dispute_id!r}: no model produced a parseable summary"
        )
    super_summary = build_super_summary(
        summaries,
        gateway=gateway,
        model=gateway.config.model(merge_model_id or model_ids[0]),
        dataset=dispute.dataset,
        expected_models=len(summaries),
    )
    artifacts = run_template(
        super_summary,
        dispute.dataset,
        gateway=gateway,
        model_ids=model_ids,
        strategy=strategy,
        embed_model_id=embed_model_id,
    )
    artifacts.summaries = summaries
    artifacts.failures = failures + artifacts.failures
    return artifacts


def run_template(
    summary: StructuredSummary,
    dataset: DatasetId,
    *,
    gateway: Gateway,
    model_ids: list[str],
    strategy: Strategy,
    embed_model_id: str | None = None,
) -> DisputeRunArtifacts:
    """Resolve a dispute given directly as a structured summary.

    This is the entry point for user-entered disputes: the submitted
    template takes the place of the merged summary, and its item lists are
    the coordinate system the per-model predictions are aligned onto.
    """
    failures: list[StageFailure] = []
    rspec = strategy_spec(strategy, dataset)
    resolution_prompt = build_resolution_prompt(summary, rspec, dataset)
    resolutions: list[ResolutionOutput] = []
    for model_id in model_ids:
        try:
            response = gateway.chat_complete(
                ChatRequest(
                    model=gateway.config.model(model_id),
                    prompt=resolution_prompt,
                    request_tag=f"resolve:{strategy.value}:{summary.dispute_id}",
                )
            )
            resolutions.append(
                parse_resolution(
                    response.text,
                    rspec,
                    dataset,
                    dispute_id=summary.dispute_id,
                    model=model_id,
                    finish_reason=response.finish_reason,
                )
            )
        except (GatewayError, ResolveError) as exc:
            failures.append(_classify(summary.dispute_id, exc))

    alignments: list[AlignedItems] = []
    ensemble_output: ResolutionOutput | None = None
    if resolutions and embed_model_id is not None and strategy is not Strategy.S1:
        embed_model = gateway.config.model(embed_model_id)
        reference = {
            ("demand", party): list(summary.demands.get(party, []))
            for party in PartyRole
        }
        reference.update(
            {
                ("argument", party): list(summary.arguments.get(party, []))
                for party in PartyRole
            }
        )
        for res in resolutions:
            kinds = [("demand", res.demand_decisions)]
            if strategy is Strategy.S3:
                kinds.append(("argument", res.argument_evaluations))
            for kind, pred_map in kinds:
                for party in PartyRole:
                    ref_texts = reference.get((kind, party), [])
                    if not ref_texts:
                        continue
                    pred_texts = [item.text for item in pred_map.get(party, [])]
                    if pred_texts:
                        assignment = align_items(
                            ref_texts, pred_texts, gateway, embed_model
                        )
                    else:
                        assignment = _empty_assignment(
                            len(ref_texts), "no predicted items"
                        )
                    alignments.append(
                        AlignedItems(
                            dispute_id=res.dispute_id,
                            model=res.model,
                            strategy=res.strategy,
                            kind=kind,
                            party=party,
                            gt_texts=ref_texts,
                            pred_texts=pred_texts,
                            assignment=assignment,
                        )
                    )

    if len(resolutions) >= 3:
        if strategy is Strategy.S1:
            gt_texts: dict[tuple[str, PartyRole], list[str]] = {}
        else:
            gt_texts = gt_texts_from_alignments(alignments)
        per_model = []
        for res in resolutions:
            model_aligned = {
                (rec.kind, rec.party): rec.assignment
                for rec in alignments
                if rec.model == res.model
            }
            per_model.append((res, model_aligned))
        ensemble_output = build_ensemble_from_texts(
            summary.dispute_id, gt_texts, per_model
        )

    return DisputeRunArtifacts(
        summaries=[],
        super_summary=summary,
        resolution_prompt=resolution_prompt,
        resolutions=resolutions,
        alignments=alignments,
        ensemble=ensemble_output,
        failures=failures,
    )


# -- full pipeline ------------------------------------------------------------


@dataclass
class RunLayout:
    """Directory layout of one full pipeline run."""

    root: Path

    @property
    def summaries(self) -> Path:
        return self.root / "summaries"

    @property
    def gt(self) -> Path:
        return self.root / "gt"

    @property
    def resolutions(self) -> Path:
        return self.root / "resolutions"

    @property
    def alignments(self) -> Path:
        return self.root / "alignments"

    @property
    def ensembles(self) -> Path:
        return self.root / "ensemble"

    @property
    def reports(self) -> Path:
        return self.root / "reports"

    def report_csv_path(self, dataset: DatasetId) -> Path:
        return self.reports / f"eval_{dataset.value}.csv"

    def justification_csv_path(self, dataset: DatasetId) -> Path:
        return self.reports / f"justification_{dataset.value}.csv"


def run_full_pipeline(
    corpus_dir: str | Path,
    dataset: DatasetId,
    out_root: str | Path,
    *,
    gateway: Gateway,
    model_ids: list[str],
    embed_model_id: str,
    gt_model_id: str | None = None,
    merge_model_id: str | None = None,
    strategies: tuple[Strategy, ...] = (Strategy.S1, Strategy.S2, Strategy.S3),
    baseline: str | None = "majority",
    seed: int = 0,
    parallel: int = 4,
) -> tuple[RunLayout, list[StageFailure]]:
    """All stages in order over one corpus; returns the layout and every
    stage failure."""
    layout = RunLayout(root=Path(out_root))
    failures: list[StageFailure] = []

    failures += summarize_corpus(
        corpus_dir,
        dataset,
        model_ids,
        layout.summaries,
        gateway=gateway,
        merge_model_id=merge_model_id,
        parallel=parallel,
    ).failures
    failures += ground_truth_corpus(
        layout.summaries,
        corpus_dir,
        gt_model_id or model_ids[0],
        layout.gt,
        gateway=gateway,
        parallel=parallel,
    ).failures
    for strategy in strategies:
        failures += resolve_corpus(
            layout.summaries,
            strategy,
            model_ids,
            layout.resolutions,
            gateway=gateway,
            parallel=parallel,
        ).failures
    failures += align_corpus(
        layout.resolutions,
        layout.gt,
        embed_model_id,
        layout.alignments,
        gateway=gateway,
        parallel=parallel,
    ).failures
    failures += ensemble_corpus(
        layout.resolutions, layout.alignments, layout.ensembles
    ).failures
    _, eval_result = evaluate_corpus(
        layout.root,
        layout.gt,
        layout.root,
        layout.report_csv_path(dataset),
        baseline=baseline,
        seed=seed,
        summaries_dir=layout.summaries,
        embed_model_id=embed_model_id,
        gateway=gateway,
        justification_report_path=layout.justification_csv_path(dataset),
    )
    failures += eval_result.failures
    return layout, failures


# -- information-barrier audit -------------------------------------------------


def audit_information_barrier(
    summaries_dir: str | Path, resolutions_dir: str | Path
) -> list[str]:
    """Substring audit: no persisted resolution prompt may contain text from
    any decision element of any persisted summary of its dispute.

    Returns one hit description per violation; an empty list is a pass.
    """
    summaries = load_summaries(summaries_dir)
    hits: list[str] = []
    for prompt_path in sorted(Path(resolutions_dir).glob("**/*.prompt.txt")):
        dispute_id = prompt_path.name.split(".")[0]
        prompt = prompt_path.read_text(encoding="utf-8")
        for summary in summaries.get(dispute_id, []):
            for element in sorted(DECISION_ELEMENTS, key=lambda e: e.value):
                text = summary.elements.get(element, "").strip()
                if not text:
                    continue
                fragments = {text} | set(itemize_element(text))
                for fragment in fragments:
                    # Tiny fragments ("None" remnants etc.) cannot identify
                    # a decision; require a sentence-scale match.
                    if len(fragment) >= 12 and fragment in prompt:
                        hits.append(
                            f"{prompt_path.name}: contains {element.value} text "
                            f"of {summary.source_model}: {fragment[:60]!r}"
                        )
    return hits

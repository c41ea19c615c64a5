import json
from pathlib import Path

import pytest

from drassist.gateway import Gateway, load_gateway_config
from drassist.model import (
    DatasetId,
    Dispute,
    PartyRole,
    Strategy,
    StructuralElement,
    StructuredSummary,
)
from drassist.pipeline import (
    ManifestError,
    PipelineError,
    align_corpus,
    audit_information_barrier,
    dataset_of,
    demo_config_path,
    demo_corpus_path,
    ensemble_corpus,
    evaluate_corpus,
    ground_truth_corpus,
    load_alignments,
    load_ground_truths,
    load_resolutions,
    load_summaries,
    load_super_summaries,
    models_of,
    read_manifests,
    resolve_corpus,
    run_dispute,
    run_full_pipeline,
    run_template,
    summarize_corpus,
    write_manifest,
)

AUTO = DatasetId.AUTO_INSURANCE
MODELS = ["mock-llm-v0", "mock-llm-v1", "mock-llm-v2"]
EMBED = "demo-embed"
A, B = PartyRole.PARTY_A, PartyRole.PARTY_B


@pytest.fixture()
def gateway(tmp_path):
    config = load_gateway_config(demo_config_path())
    return Gateway(config, cache_dir=tmp_path / "cache")


@pytest.fixture()
def summarized(tmp_path, gateway):
    out = tmp_path / "summaries"
    result = summarize_corpus(
        demo_corpus_path(AUTO), AUTO, MODELS, out, gateway=gateway
    )
    assert result.failures == []
    return out


def tree_bytes(root):
    return {
        p.relative_to(root): p.read_bytes()
        for p in sorted(Path(root).rglob("*"))
        if p.is_file()
    }


class TestManifests:
    def test_round_trip(self, tmp_path):
        write_manifest(tmp_path / "stage", {"stage": "x", "dataset": "auto_insurance"})
        manifests = read_manifests(tmp_path)
        assert len(manifests) == 1
        assert manifests[0]["stage"] == "x"
        assert "schema_version" in manifests[0]

    def test_dataset_of(self, tmp_path):
        write_manifest(tmp_path / "a", {"dataset": "auto_insurance"})
        write_manifest(tmp_path / "b", {"dataset": "auto_insurance"})
        assert dataset_of(tmp_path) is AUTO

    def test_dataset_of_conflicting_or_absent(self, tmp_path):
        with pytest.raises(ManifestError, match="none"):
            dataset_of(tmp_path)
        write_manifest(tmp_path / "a", {"dataset": "auto_insurance"})
        write_manifest(tmp_path / "b", {"dataset": "domain_name"})
        with pytest.raises(ManifestError):
            dataset_of(tmp_path)

    def test_models_of_finds_stage_manifest(self, tmp_path):
        write_manifest(tmp_path / "s", {"stage": "resolve", "models": MODELS})
        assert models_of(tmp_path, "resolve") == MODELS
        with pytest.raises(ManifestError):
            models_of(tmp_path, "summarize")

    def test_demo_assets_ship_with_the_package(self):
        assert demo_config_path().exists()
        for dataset in DatasetId:
            assert demo_corpus_path(dataset).is_dir()


class TestSummarizeCorpus:
    def test_writes_per_model_and_super_summaries(self, summarized):
        grouped = load_summaries(summarized)
        assert len(grouped) == 5
        for dispute_id, group in grouped.items():
            assert sorted(s.source_model for s in group) == sorted(MODELS + ["SUPER"])
        supers = load_super_summaries(summarized)
        assert set(supers) == set(grouped)
        manifest = read_manifests(summarized)[0]
        assert manifest["stage"] == "summarize"
        assert manifest["models"] == MODELS

    def test_dry_run_prints_prompts_and_writes_nothing(self, tmp_path, gateway):
        out = tmp_path / "dry"
        result = summarize_corpus(
            demo_corpus_path(AUTO), AUTO, MODELS, out, gateway=gateway, dry_run=True
        )
        assert len(result.prompts) == 5
        assert all("Dispute text:" in p for _, p in result.prompts)
        assert not out.exists()

    def test_provider_failure_collected_not_raised(self, tmp_path, gateway):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / "bad1.txt").write_text(
            "Both parties agree on the facts. MOCK_ALWAYS_FAIL", encoding="utf-8"
        )
        result = summarize_corpus(
            corpus, AUTO, MODELS, tmp_path / "out", gateway=gateway
        )
        assert result.failure_kinds == {"provider"}
        assert all(f.dispute_id == "bad1" for f in result.failures)


class TestGroundTruthCorpus:
    def test_writes_gold_and_audit_records(self, tmp_path, gateway, summarized):
        out = tmp_path / "gt"
        result = ground_truth_corpus(
            summarized, demo_corpus_path(AUTO), MODELS[0], out, gateway=gateway
        )
        assert result.failures == []
        gts = load_ground_truths(out)
        assert len(gts) == 5
        for gt in gts:
            assert gt.winning_party in (A, B)
            assert gt.demand_decisions or gt.argument_evaluations
        audit_lines = [
            json.loads(line)
            for path in out.rglob("*.gt")
            for line in path.read_text(encoding="utf-8").splitlines()
        ]
        assert any(r.get("record_type") == "gt_audit" for r in audit_lines)

    def test_dry_run_emits_labeling_prompts(self, tmp_path, gateway, summarized):
        result = ground_truth_corpus(
            summarized,
            demo_corpus_path(AUTO),
            MODELS[0],
            tmp_path / "gt",
            gateway=gateway,
            dry_run=True,
        )
        assert result.prompts
        labels = [label for label, _ in result.prompts]
        assert any(label.startswith("gt demands") for label in labels)
        assert any(label.startswith("gt arguments") for label in labels)


class TestResolveCorpus:
    def test_outputs_and_exact_prompts_persisted(self, tmp_path, gateway, summarized):
        out = tmp_path / "res"
        result = resolve_corpus(
            summarized, Strategy.S2, MODELS, out, gateway=gateway
        )
        assert result.failures == []
        resolutions = load_resolutions(out)
        assert len(resolutions) == 15  # 5 disputes x 3 models
        assert {r.strategy for r in resolutions} == {Strategy.S2}
        prompt_files = sorted(out.glob("*.prompt.txt"))
        assert len(prompt_files) == 5
        for path in prompt_files:
            text = path.read_text(encoding="utf-8")
            assert "**Overall Stronger Party**" in text

    def test_dry_run_lists_resolution_prompts(self, tmp_path, gateway, summarized):
        result = resolve_corpus(
            summarized, Strategy.S1, MODELS, tmp_path / "res",
            gateway=gateway, dry_run=True,
        )
        assert len(result.prompts) == 5
        assert all(label.startswith("resolve S1") for label, _ in result.prompts)


@pytest.fixture()
def full_run(tmp_path, gateway):
    layout, failures = run_full_pipeline(
        demo_corpus_path(AUTO),
        AUTO,
        tmp_path / "run",
        gateway=gateway,
        model_ids=MODELS,
        embed_model_id=EMBED,
    )
    assert failures == []
    return layout


class TestAlignAndEnsemble:
    def test_alignment_covers_every_model_and_kind(self, full_run):
        aligned = load_alignments(full_run.alignments)
        assert aligned
        by_model = {rec.model for rec in aligned}
        assert by_model == set(MODELS)
        s3 = [rec for rec in aligned if rec.strategy is Strategy.S3]
        assert {rec.kind for rec in s3} == {"demand", "argument"}
        for rec in aligned:
            assert len(rec.assignment.pairs) <= min(
                len(rec.gt_texts), len(rec.pred_texts)
            )

    def test_ensemble_written_per_dispute_and_strategy(self, full_run):
        outputs = load_resolutions(full_run.ensembles)
        assert len(outputs) == 15  # 5 disputes x 3 strategies
        assert all(o.model.startswith("ENSEMBLE(") for o in outputs)
        s1 = [o for o in outputs if o.strategy is Strategy.S1]
        assert all(not o.demand_decisions for o in s1)

    def test_quorum_failure_below_three_models(self, tmp_path, gateway, summarized):
        out = tmp_path / "res1"
        resolve_corpus(summarized, Strategy.S2, MODELS[:2], out, gateway=gateway)
        result = ensemble_corpus(out, tmp_path / "missing", tmp_path / "ens")
        assert result.written == []
        assert all("quorum" in f.detail for f in result.failures)


class TestEvaluateCorpus:
    def test_report_csv_with_baseline_rows(self, tmp_path, full_run):
        report_path = full_run.report_csv_path(AUTO)
        text = report_path.read_text(encoding="utf-8")
        lines = text.splitlines()
        assert lines[0] == "dataset,technique,model,task,accuracy,macro_f1,n"
        assert any(",Baselines,Majority Label," in line for line in lines)
        assert any("ENSEMBLE(" in line for line in lines)
        # Scripted models track the mock gold labels exactly.
        model_rows = [l for l in lines if ",mock-llm-v0," in l]
        assert model_rows
        for row in model_rows:
            assert row.split(",")[4] == "1.0000"

    def test_justification_report_written(self, full_run):
        path = full_run.justification_csv_path(AUTO)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == (
            "dataset,technique,model,rouge1_f1,rougeL_f1,"
            "semantic_f1_bertscore_style,n_correct_used"
        )
        assert len(lines) > 1

    def test_justification_report_requires_ingredients(self, tmp_path, full_run):
        with pytest.raises(PipelineError, match="justification report needs"):
            evaluate_corpus(
                full_run.resolutions,
                full_run.gt,
                full_run.alignments,
                tmp_path / "r.csv",
                justification_report_path=tmp_path / "j.csv",
            )

    def test_resolutions_without_gold_are_excluded(self, tmp_path, gateway, full_run):
        empty_gt = tmp_path / "no_gt"
        write_manifest(empty_gt, {"stage": "ground-truth", "dataset": AUTO.value})
        report, result = evaluate_corpus(
            full_run.resolutions,
            empty_gt,
            full_run.alignments,
            tmp_path / "r.csv",
        )
        assert report.rows == []
        assert result.failures
        assert all("no ground truth" in f.detail for f in result.failures)


class TestDeterminism:
    def test_warm_cache_reruns_are_byte_identical(self, tmp_path, gateway):
        roots = []
        for name in ("one", "two"):
            layout, failures = run_full_pipeline(
                demo_corpus_path(AUTO),
                AUTO,
                tmp_path / name,
                gateway=gateway,
                model_ids=MODELS,
                embed_model_id=EMBED,
            )
            assert failures == []
            roots.append(layout.root)
        assert tree_bytes(roots[0]) == tree_bytes(roots[1])


class TestInformationBarrier:
    def test_demo_run_has_no_decision_leaks(self, full_run):
        assert audit_information_barrier(full_run.summaries, full_run.resolutions) == []

    def test_poisoned_prompt_is_detected(self, tmp_path, full_run):
        summaries = load_super_summaries(full_run.summaries)
        dispute_id = sorted(summaries)[0]
        decision = summaries[dispute_id].elements[StructuralElement.FINAL_DECISION]
        assert len(decision) >= 12
        poisoned = tmp_path / "poisoned"
        poisoned.mkdir()
        (poisoned / f"{dispute_id}.S2.prompt.txt").write_text(
            f"leaky prompt quoting the outcome: {decision}", encoding="utf-8"
        )
        hits = audit_information_barrier(full_run.summaries, poisoned)
        assert hits
        assert "final_decision" in hits[0]


DEMANDS = {
    A: ["dismissal of the claim (unsupported)"],
    B: ["full repair costs (strongly evidenced)", "interest (unsupported)"],
}
ARGUMENTS = {
    A: ["the policy had lapsed (unsupported)"],
    B: ["the claim was timely (strongly evidenced)"],
}


def template_summary(dispute_id="t1"):
    summary = StructuredSummary(dispute_id=dispute_id, source_model="user")
    summary.elements = {
        StructuralElement.AGREED_FACTS: "The policy covered the vehicle.",
        StructuralElement.DISAGREEMENT_ASPECTS: "Whether the claim was timely.",
    }
    summary.demands = dict(DEMANDS)
    summary.arguments = dict(ARGUMENTS)
    return summary


class TestRunTemplate:
    def test_s3_run_produces_all_artifacts(self, gateway):
        artifacts = run_template(
            template_summary(),
            AUTO,
            gateway=gateway,
            model_ids=MODELS,
            strategy=Strategy.S3,
            embed_model_id=EMBED,
        )
        assert artifacts.failures == []
        assert len(artifacts.resolutions) == 3
        assert artifacts.ensemble is not None
        assert artifacts.ensemble.stronger_party is B
        labels = [
            i.label.value for i in artifacts.ensemble.demand_decisions[B]
        ]
        assert labels == ["ACCEPTED", "REJECTED"]
        assert {(rec.kind, rec.party) for rec in artifacts.alignments} >= {
            ("demand", B),
            ("argument", A),
        }

    def test_decision_text_never_enters_the_resolution_prompt(self, gateway):
        summary = template_summary()
        summary.elements[StructuralElement.FINAL_DECISION] = "SECRET-FINAL outcome"
        summary.elements[StructuralElement.JUSTIFICATION] = "SECRET-WHY reasoning"
        summary.elements[StructuralElement.WINNING_PARTY] = "SECRET-WINNER name"
        artifacts = run_template(
            summary,
            AUTO,
            gateway=gateway,
            model_ids=MODELS,
            strategy=Strategy.S2,
            embed_model_id=EMBED,
        )
        assert "SECRET" not in artifacts.resolution_prompt

    def test_s1_run_skips_items_and_alignment(self, gateway):
        artifacts = run_template(
            template_summary(),
            AUTO,
            gateway=gateway,
            model_ids=MODELS,
            strategy=Strategy.S1,
            embed_model_id=EMBED,
        )
        assert artifacts.alignments == []
        assert artifacts.ensemble is not None
        assert artifacts.ensemble.demand_decisions == {}

    def test_fewer_than_three_models_yields_no_ensemble(self, gateway):
        artifacts = run_template(
            template_summary(),
            AUTO,
            gateway=gateway,
            model_ids=MODELS[:2],
            strategy=Strategy.S2,
            embed_model_id=EMBED,
        )
        assert len(artifacts.resolutions) == 2
        assert artifacts.ensemble is None


class TestRunDispute:
    def test_single_dispute_end_to_end(self, gateway):
        dispute_text = (
            demo_corpus_path(AUTO) / "d001.txt"
        ).read_text(encoding="utf-8")
        dispute = Dispute(dispute_id="d001", dataset=AUTO, raw_text=dispute_text)
        artifacts = run_dispute(
            dispute,
            gateway=gateway,
            model_ids=MODELS,
            strategy=Strategy.S2,
            embed_model_id=EMBED,
        )
        assert [s.source_model for s in artifacts.summaries] == MODELS
        assert artifacts.super_summary.source_model == "SUPER"
        assert artifacts.ensemble is not None
        assert artifacts.resolution_prompt.startswith("Consider the following")

    def test_no_parseable_summary_is_fatal(self, gateway):
        dispute = Dispute(
            dispute_id="refused",
            dataset=AUTO,
            raw_text="Both parties agree. MOCK_REFUSE",
        )
        with pytest.raises(PipelineError, match="no model produced"):
            run_dispute(
                dispute, gateway=gateway, model_ids=MODELS, strategy=Strategy.S1
            )

import pytest
from hypothesis import given, strategies as st

from drassist.corpus import (
    EmptyCorpusError,
    FilterConfig,
    MissingFlagError,
    MissingPathError,
    apply_filters,
    compute_stats,
    load_corpus,
    stats_csv,
)
from drassist.model import DatasetId, Dispute


def write_dispute(root, dispute_id, text, meta=None, roles=None):
    (root / f"{dispute_id}.txt").write_text(text, encoding="utf-8")
    if meta is not None:
        lines = [f"{key}={'true' if value else 'false'}" for key, value in meta.items()]
        (root / f"{dispute_id}.meta").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if roles is not None:
        lines = [f"{role}\t{sentence}" for sentence, role in roles]
        (root / f"{dispute_id}.roles").write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestLoad:
    def test_loads_disputes_in_id_order(self, tmp_path):
        write_dispute(tmp_path, "d2", "Second dispute text.")
        write_dispute(tmp_path, "d1", "First dispute text.")
        loaded = load_corpus(tmp_path, DatasetId.AUTO_INSURANCE)
        assert [d.dispute_id for d in loaded.disputes] == ["d1", "d2"]
        assert all(d.dataset is DatasetId.AUTO_INSURANCE for d in loaded.disputes)
        assert loaded.malformed == []

    def test_attaches_roles_and_meta(self, tmp_path):
        write_dispute(
            tmp_path,
            "d1",
            "The claim was filed. It was allowed.",
            meta={"is_automobile": True, "has_clear_winner": False},
            roles=[("The claim was filed.", "FAC"), ("It was allowed.", "RATIO")],
        )
        loaded = load_corpus(tmp_path, DatasetId.AUTO_INSURANCE)
        dispute = loaded.disputes[0]
        assert dispute.sentence_roles == [
            ("The claim was filed.", "FAC"),
            ("It was allowed.", "RATIO"),
        ]
        assert loaded.flags["d1"] == {"is_automobile": True, "has_clear_winner": False}

    def test_missing_path_raises(self, tmp_path):
        with pytest.raises(MissingPathError):
            load_corpus(tmp_path / "nowhere", DatasetId.AUTO_INSURANCE)

    def test_empty_directory_raises(self, tmp_path):
        with pytest.raises(MissingPathError):
            load_corpus(tmp_path, DatasetId.AUTO_INSURANCE)

    def test_malformed_file_is_reported_and_skipped(self, tmp_path):
        write_dispute(tmp_path, "d1", "Good dispute text.")
        (tmp_path / "d2.txt").write_text("   ", encoding="utf-8")  # empty raw text
        write_dispute(tmp_path, "d3", "Also good.")
        loaded = load_corpus(tmp_path, DatasetId.DOMAIN_NAME)
        assert [d.dispute_id for d in loaded.disputes] == ["d1", "d3"]
        assert len(loaded.malformed) == 1
        assert loaded.malformed[0][0] == "d2.txt"

    def test_bad_roles_file_marks_dispute_malformed(self, tmp_path):
        write_dispute(tmp_path, "d1", "Text.", roles=[("sentence", "BOGUS_ROLE")])
        loaded = load_corpus(tmp_path, DatasetId.AUTO_INSURANCE)
        assert loaded.disputes == []
        assert loaded.malformed[0][0] == "d1.txt"

    def test_bad_meta_value_marks_dispute_malformed(self, tmp_path):
        write_dispute(tmp_path, "d1", "Text.")
        (tmp_path / "d1.meta").write_text("is_automobile=maybe\n", encoding="utf-8")
        loaded = load_corpus(tmp_path, DatasetId.AUTO_INSURANCE)
        assert loaded.disputes == []
        assert loaded.malformed[0][0] == "d1.txt"


def make_disputes(n, dataset=DatasetId.AUTO_INSURANCE):
    return [
        Dispute(dispute_id=f"d{i}", dataset=dataset, raw_text=f"Dispute number {i}.")
        for i in range(n)
    ]


class TestFilters:
    def test_no_enabled_predicates_keeps_everything(self):
        disputes = make_disputes(3)
        config = FilterConfig(dataset=DatasetId.AUTO_INSURANCE)
        assert apply_filters(disputes, config, {}) == disputes

    def test_automobile_filter_drops_flagged_disputes(self):
        disputes = make_disputes(6)
        flags = {d.dispute_id: {"is_automobile": True} for d in disputes}
        flags["d1"]["is_automobile"] = False
        flags["d4"]["is_automobile"] = False
        config = FilterConfig(
            dataset=DatasetId.AUTO_INSURANCE,
            sector_keyword_allowlist=["vehicle", "motor"],
        )
        kept = apply_filters(disputes, config, flags)
        assert [d.dispute_id for d in kept] == ["d0", "d2", "d3", "d5"]

    def test_clear_winner_filter(self):
        disputes = make_disputes(3)
        flags = {
            "d0": {"has_clear_winner": True},
            "d1": {"has_clear_winner": False},
            "d2": {"has_clear_winner": True},
        }
        config = FilterConfig(dataset=DatasetId.AUTO_INSURANCE, require_clear_winner=True)
        kept = apply_filters(disputes, config, flags)
        assert [d.dispute_id for d in kept] == ["d0", "d2"]

    def test_respondent_response_filter(self):
        disputes = make_disputes(2, dataset=DatasetId.DOMAIN_NAME)
        flags = {
            "d0": {"respondent_responded": False},
            "d1": {"respondent_responded": True},
        }
        config = FilterConfig(
            dataset=DatasetId.DOMAIN_NAME, require_respondent_response=True
        )
        kept = apply_filters(disputes, config, flags)
        assert [d.dispute_id for d in kept] == ["d1"]

    def test_missing_flag_raises_with_dispute_name(self):
        disputes = make_disputes(1)
        config = FilterConfig(dataset=DatasetId.AUTO_INSURANCE, require_clear_winner=True)
        with pytest.raises(MissingFlagError, match="d0"):
            apply_filters(disputes, config, {})

    def test_other_datasets_predicates_are_ignored(self):
        # a domain-name config never asks for auto-insurance flags
        disputes = make_disputes(2, dataset=DatasetId.DOMAIN_NAME)
        config = FilterConfig(
            dataset=DatasetId.DOMAIN_NAME,
            require_clear_winner=True,
            sector_keyword_allowlist=["vehicle"],
        )
        assert apply_filters(disputes, config, {}) == disputes

    @given(st.lists(st.booleans(), min_size=0, max_size=30))
    def test_filtered_output_is_an_ordered_subsequence(self, keep_flags):
        disputes = make_disputes(len(keep_flags))
        flags = {
            d.dispute_id: {"has_clear_winner": keep}
            for d, keep in zip(disputes, keep_flags)
        }
        config = FilterConfig(dataset=DatasetId.AUTO_INSURANCE, require_clear_winner=True)
        kept = apply_filters(disputes, config, flags)
        it = iter(disputes)
        assert all(any(d is k for d in it) for k in kept)
        assert len(kept) == sum(keep_flags)


class TestStats:
    def test_empty_corpus_raises(self):
        with pytest.raises(EmptyCorpusError):
            compute_stats([])

    def test_quartiles_use_linear_interpolation(self):
        # word counts 100, 200, 300, 400
        disputes = [
            Dispute(dispute_id=f"d{i}", dataset=DatasetId.AUTO_INSURANCE, raw_text=text)
            for i, text in enumerate("w " * n for n in (100, 200, 300, 400))
        ]
        stats = compute_stats(disputes)
        assert stats.n_disputes == 4
        assert stats.words_per_doc.mean == 250.0
        assert stats.words_per_doc.median == 250.0
        assert stats.words_per_doc.q1 == 175.0
        assert stats.words_per_doc.q3 == 325.0

    def test_std_is_population_formula(self):
        disputes = [
            Dispute(dispute_id=f"d{i}", dataset=DatasetId.AUTO_INSURANCE, raw_text=text)
            for i, text in enumerate("w " * n for n in (2, 4))
        ]
        stats = compute_stats(disputes)
        # population std of [2, 4] is 1.0 (sample std would be sqrt(2))
        assert stats.words_per_doc.std_deviation == 1.0

    def test_sentence_counts_use_shared_splitter(self):
        disputes = [
            Dispute(
                dispute_id="d0",
                dataset=DatasetId.AUTO_INSURANCE,
                raw_text="Mr. Rao filed on 12.05.2016. The claim was allowed.",
            )
        ]
        stats = compute_stats(disputes)
        assert stats.sentences_per_doc.mean == 2.0

    def test_csv_shape(self):
        disputes = [
            Dispute(dispute_id=f"d{i}", dataset=DatasetId.AUTO_INSURANCE, raw_text=text)
            for i, text in enumerate("w " * n for n in (100, 200, 300, 400))
        ]
        text = stats_csv(compute_stats(disputes))
        lines = text.strip().split("\n")
        assert lines[0] == "Statistic,Value"
        assert lines[1] == "No. of disputes (documents),4"
        assert len(lines) == 12  # header + count + 2 measures x 5 rows
        assert "No. of words per document: First Quartile (Q1),175.0" in lines

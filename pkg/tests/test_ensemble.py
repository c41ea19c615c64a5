import itertools

import pytest

from drassist.alignment import AlignedItems, Assignment
from drassist.ensemble import (
    InconsistentAlignmentError,
    MisalignedAssignmentError,
    build_ensemble_from_texts,
    build_ensemble_output,
    ensemble_items,
    ensemble_party,
    gt_texts_from_alignments,
    majority_with_priority,
)
from drassist.model import (
    DecisionLabel,
    GroundTruth,
    LabeledItem,
    PartyRole,
    ResolutionOutput,
    Strategy,
    StrengthLabel,
)

A, B = PartyRole.PARTY_A, PartyRole.PARTY_B
ACC, REJ = DecisionLabel.ACCEPTED, DecisionLabel.REJECTED


def oracle_majority(votes):
    """Independent statement of the voting rule, for enumeration checks."""
    present = [v for v in votes if v is not None]
    if not present:
        return None
    top = max(present.count(v) for v in set(present))
    leaders = {v for v in set(present) if present.count(v) == top}
    if len(leaders) == 1:
        return leaders.pop()
    return present[0]


class TestMajorityWithPriority:
    def test_full_enumeration_two_labels_three_voters(self):
        # All 27 vote patterns over {ACCEPTED, REJECTED, abstain}.
        for votes in itertools.product([ACC, REJ, None], repeat=3):
            assert majority_with_priority(votes) == oracle_majority(votes), votes

    def test_clear_majority(self):
        assert majority_with_priority([ACC, REJ, ACC]) is ACC

    def test_tie_goes_to_earliest_present_vote(self):
        assert majority_with_priority([REJ, ACC, None]) is REJ
        assert majority_with_priority([None, ACC, REJ]) is ACC

    def test_all_absent(self):
        assert majority_with_priority([None, None, None]) is None

    def test_party_vote_uses_same_rule(self):
        assert ensemble_party([A, B, A]) is A
        assert ensemble_party([A, B, None]) is A
        assert ensemble_party([None, None, B]) is B


def identity_assignment(n):
    return Assignment(
        pairs=[(i, i) for i in range(n)],
        unmatched_rows=[],
        unmatched_cols=[],
        total_cost=0.0,
    )


def items(*labels):
    return [LabeledItem(text=f"t{i}", label=l) for i, l in enumerate(labels)]


class TestEnsembleItems:
    GT = ["g0", "g1", "g2"]

    def test_agreement_passes_through(self):
        per_model = [
            (items(ACC, REJ, ACC), identity_assignment(3)) for _ in range(3)
        ]
        assert ensemble_items(self.GT, per_model) == [(0, ACC), (1, REJ), (2, ACC)]

    def test_majority_overrules_single_dissent(self):
        per_model = [
            (items(ACC, REJ, ACC), identity_assignment(3)),
            (items(ACC, ACC, ACC), identity_assignment(3)),
            (items(ACC, REJ, REJ), identity_assignment(3)),
        ]
        assert ensemble_items(self.GT, per_model) == [(0, ACC), (1, REJ), (2, ACC)]

    def test_unmatched_index_abstains(self):
        # Model 1 never matched g2; the other two split, so priority decides.
        short = Assignment(
            pairs=[(0, 0), (1, 1)],
            unmatched_rows=[2],
            unmatched_cols=[],
            total_cost=0.0,
        )
        per_model = [
            (items(ACC, REJ), short),
            (items(ACC, REJ, ACC), identity_assignment(3)),
            (items(ACC, REJ, REJ), identity_assignment(3)),
        ]
        combined = ensemble_items(self.GT, per_model)
        assert combined[2] == (2, ACC)  # model 2 outranks model 3

    def test_permuted_assignment_reads_labels_through_pairs(self):
        # Model's item 0 corresponds to GT index 1 and vice versa.
        swapped = Assignment(
            pairs=[(0, 1), (1, 0)],
            unmatched_rows=[],
            unmatched_cols=[],
            total_cost=0.0,
        )
        per_model = [(items(ACC, REJ), swapped)] * 3
        assert ensemble_items(["g0", "g1"], per_model) == [(0, REJ), (1, ACC)]

    def test_unlabeled_items_abstain(self):
        per_model = [
            (items(None, None, None), identity_assignment(3)),
            (items(ACC, REJ, None), identity_assignment(3)),
            (items(REJ, REJ, None), identity_assignment(3)),
        ]
        combined = ensemble_items(self.GT, per_model)
        assert combined == [(0, ACC), (1, REJ), (2, None)]

    def test_out_of_range_pair_rejected(self):
        bad = Assignment(
            pairs=[(0, 5)], unmatched_rows=[], unmatched_cols=[], total_cost=0.0
        )
        with pytest.raises(MisalignedAssignmentError):
            ensemble_items(["g0"], [(items(ACC), bad)])


def aligned_record(model, gt_texts, kind="demand", party=B):
    return AlignedItems(
        dispute_id="d1",
        model=model,
        strategy=Strategy.S2,
        kind=kind,
        party=party,
        gt_texts=list(gt_texts),
        pred_texts=list(gt_texts),
        assignment=identity_assignment(len(gt_texts)),
    )


class TestGtTextsFromAlignments:
    def test_consistent_records_recover_shared_lists(self):
        records = [
            aligned_record("m1", ["x", "y"]),
            aligned_record("m2", ["x", "y"]),
            aligned_record("m1", ["z"], kind="argument", party=A),
        ]
        texts = gt_texts_from_alignments(records)
        assert texts == {("demand", B): ["x", "y"], ("argument", A): ["z"]}

    def test_disagreeing_records_rejected(self):
        records = [
            aligned_record("m1", ["x", "y"]),
            aligned_record("m2", ["x", "different"]),
        ]
        with pytest.raises(InconsistentAlignmentError):
            gt_texts_from_alignments(records)


def s2_output(model, party, a_labels=(ACC,), b_labels=(REJ,), justification=""):
    return ResolutionOutput(
        dispute_id="d1",
        model=model,
        strategy=Strategy.S2,
        stronger_party=party,
        stronger_party_justification=justification,
        demand_decisions={
            A: items(*a_labels),
            B: items(*b_labels),
        },
    )


def alignments_for(a_n=1, b_n=1):
    return {
        ("demand", A): identity_assignment(a_n),
        ("demand", B): identity_assignment(b_n),
    }


GT_TEXTS = {("demand", A): ["a0"], ("demand", B): ["b0"]}


class TestBuildEnsemble:
    def test_identity_law_three_equal_outputs(self):
        per_model = [
            (s2_output(f"m{i}", B, justification="held"), alignments_for())
            for i in range(1, 4)
        ]
        combined = build_ensemble_from_texts("d1", GT_TEXTS, per_model)
        assert combined.model == "ENSEMBLE(m1,m2,m3)"
        assert combined.strategy is Strategy.S2
        assert combined.stronger_party is B
        assert [i.label for i in combined.demand_decisions[A]] == [ACC]
        assert [i.label for i in combined.demand_decisions[B]] == [REJ]
        # Item texts come from the shared GT coordinate system.
        assert [i.text for i in combined.demand_decisions[A]] == ["a0"]

    def test_party_majority(self):
        per_model = [
            (s2_output("m1", A), alignments_for()),
            (s2_output("m2", B), alignments_for()),
            (s2_output("m3", B), alignments_for()),
        ]
        combined = build_ensemble_from_texts("d1", GT_TEXTS, per_model)
        assert combined.stronger_party is B
        assert not any(d.startswith("PARTY_TIE") for d in combined.diagnostics)

    def test_party_tie_broken_by_priority_with_diagnostic(self):
        per_model = [
            (s2_output("m1", A), alignments_for()),
            (s2_output("m2", B), alignments_for()),
            (
                ResolutionOutput(
                    dispute_id="d1", model="m3", strategy=Strategy.S2,
                    stronger_party=None,
                ),
                {},
            ),
        ]
        combined = build_ensemble_from_texts("d1", GT_TEXTS, per_model)
        assert combined.stronger_party is A
        assert "PARTY_TIE: broken by model priority" in combined.diagnostics

    def test_representative_justification_follows_majority(self):
        per_model = [
            (s2_output("m1", A, justification="minority view"), alignments_for()),
            (s2_output("m2", B, justification="majority view"), alignments_for()),
            (s2_output("m3", B, justification="also majority"), alignments_for()),
        ]
        combined = build_ensemble_from_texts("d1", GT_TEXTS, per_model)
        assert combined.stronger_party_justification == "majority view"
        assert (
            "representative party justification from m2" in combined.diagnostics
        )

    def test_model_without_alignment_abstains(self):
        per_model = [
            (s2_output("m1", B, b_labels=(ACC,)), alignments_for()),
            (s2_output("m2", B, b_labels=(REJ,)), {("demand", A): identity_assignment(1)}),
            (s2_output("m3", B, b_labels=(ACC,)), alignments_for()),
        ]
        combined = build_ensemble_from_texts("d1", GT_TEXTS, per_model)
        assert [i.label for i in combined.demand_decisions[B]] == [ACC]

    def test_s1_outputs_combine_party_only(self):
        per_model = [
            (
                ResolutionOutput(
                    dispute_id="d1", model=f"m{i}", strategy=Strategy.S1,
                    stronger_party=B,
                ),
                {},
            )
            for i in range(1, 4)
        ]
        combined = build_ensemble_from_texts("d1", {}, per_model)
        assert combined.strategy is Strategy.S1
        assert combined.stronger_party is B
        assert combined.demand_decisions == {}
        assert combined.argument_evaluations == {}

    def test_s3_combines_arguments_too(self):
        def s3(model, strength):
            return ResolutionOutput(
                dispute_id="d1",
                model=model,
                strategy=Strategy.S3,
                stronger_party=B,
                demand_decisions={B: items(ACC)},
                argument_evaluations={B: items(strength)},
            )

        texts = {("demand", B): ["b0"], ("argument", B): ["arg0"]}
        alignment = {
            ("demand", B): identity_assignment(1),
            ("argument", B): identity_assignment(1),
        }
        per_model = [
            (s3("m1", StrengthLabel.STRONG), alignment),
            (s3("m2", StrengthLabel.WEAK), alignment),
            (s3("m3", StrengthLabel.STRONG), alignment),
        ]
        combined = build_ensemble_from_texts("d1", texts, per_model)
        assert [i.label for i in combined.argument_evaluations[B]] == [
            StrengthLabel.STRONG
        ]

    def test_mixed_strategies_rejected(self):
        per_model = [
            (s2_output("m1", A), alignments_for()),
            (
                ResolutionOutput(
                    dispute_id="d1", model="m2", strategy=Strategy.S1,
                    stronger_party=A,
                ),
                {},
            ),
        ]
        with pytest.raises(ValueError, match="strategies"):
            build_ensemble_from_texts("d1", GT_TEXTS, per_model)

    def test_foreign_dispute_rejected(self):
        per_model = [(s2_output("m1", A), alignments_for())]
        with pytest.raises(ValueError, match="ground truth"):
            build_ensemble_from_texts("other", GT_TEXTS, per_model)

    def test_ground_truth_entry_point_uses_gt_item_texts(self):
        gt = GroundTruth(
            dispute_id="d1",
            winning_party=B,
            demand_decisions={
                A: [("a0", ACC)],
                B: [("b0", REJ)],
            },
        )
        per_model = [
            (s2_output(f"m{i}", B), alignments_for()) for i in range(1, 4)
        ]
        combined = build_ensemble_output(gt, per_model)
        assert [i.text for i in combined.demand_decisions[B]] == ["b0"]
        assert combined.stronger_party is B

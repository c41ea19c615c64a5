import json

import pytest

from drassist.model import (
    DatasetId,
    DecisionLabel,
    Dispute,
    GroundTruth,
    LabeledItem,
    PartyRole,
    ResolutionOutput,
    Strategy,
    StrengthLabel,
    StructuralElement,
    StructuredSummary,
)
from drassist.persistence import (
    PersistenceError,
    dispute_from_record,
    dispute_to_record,
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


def sample_dispute():
    return Dispute(
        dispute_id="d42",
        dataset=DatasetId.AUTO_INSURANCE,
        raw_text="The insured claimed Rs. 50,000. The insurer refused.",
        sentence_roles=[("The insured claimed Rs. 50,000.", "FAC")],
    )


def sample_summary():
    return StructuredSummary(
        dispute_id="d42",
        source_model="model-a",
        elements={
            StructuralElement.AGREED_FACTS: "A policy existed.",
            StructuralElement.FINAL_DECISION: "Claim allowed.",
        },
        demands={PartyRole.PARTY_B: ["pay the insured amount", "pay costs"]},
        arguments={
            PartyRole.PARTY_A: ["the policy had lapsed"],
            PartyRole.PARTY_B: ["premium was paid in time"],
        },
        winning_party=PartyRole.PARTY_B,
        warnings=["demands_party_a empty"],
    )


def sample_resolution():
    return ResolutionOutput(
        dispute_id="d42",
        model="model-a",
        strategy=Strategy.S3,
        stronger_party=PartyRole.PARTY_B,
        stronger_party_justification="most arguments favour the insured",
        demand_decisions={
            PartyRole.PARTY_B: [
                LabeledItem("pay the insured amount", DecisionLabel.ACCEPTED, "policy live"),
                LabeledItem("pay costs", None),
            ]
        },
        argument_evaluations={
            PartyRole.PARTY_A: [LabeledItem("the policy had lapsed", StrengthLabel.WEAK)]
        },
    )


def sample_ground_truth():
    return GroundTruth(
        dispute_id="d42",
        winning_party=PartyRole.PARTY_B,
        demand_decisions={
            PartyRole.PARTY_B: [
                ("pay the insured amount", DecisionLabel.ACCEPTED),
                ("pay costs", None),
            ]
        },
        argument_evaluations={
            PartyRole.PARTY_A: [("the policy had lapsed", StrengthLabel.WEAK)]
        },
    )


@pytest.mark.parametrize(
    "value, to_record, from_record",
    [
        (sample_dispute(), dispute_to_record, dispute_from_record),
        (sample_summary(), summary_to_record, summary_from_record),
        (sample_resolution(), resolution_to_record, resolution_from_record),
        (sample_ground_truth(), ground_truth_to_record, ground_truth_from_record),
    ],
    ids=["dispute", "summary", "resolution", "ground_truth"],
)
def test_round_trip(value, to_record, from_record):
    assert from_record(to_record(value)) == value


def test_records_carry_version_and_type():
    record = summary_to_record(sample_summary())
    assert record["schema_version"] == "1"
    assert record["record_type"] == "structured_summary"


def test_unresolved_winner_survives_round_trip():
    output = ResolutionOutput(
        dispute_id="d1", model="m", strategy=Strategy.S1, stronger_party=None
    )
    assert resolution_from_record(resolution_to_record(output)) == output


def test_serialization_is_key_sorted_and_deterministic():
    record = resolution_to_record(sample_resolution())
    line = dumps_record(record)
    assert line == dumps_record(json.loads(line))
    assert list(json.loads(line)) == sorted(json.loads(line))


def test_write_then_read_is_byte_identical(tmp_path):
    path = tmp_path / "out" / "records.jsonl"
    records = [dispute_to_record(sample_dispute()), summary_to_record(sample_summary())]
    write_records(path, records)
    first = path.read_bytes()
    assert read_records(path) == records
    write_records(path, records)
    assert path.read_bytes() == first


def test_read_rejects_unknown_schema_version(tmp_path):
    path = tmp_path / "records.jsonl"
    path.write_text('{"schema_version": "999", "record_type": "dispute"}\n')
    with pytest.raises(PersistenceError, match="schema_version"):
        read_records(path)


def test_read_rejects_invalid_json(tmp_path):
    path = tmp_path / "records.jsonl"
    path.write_text("not json\n")
    with pytest.raises(PersistenceError, match="not valid JSON"):
        read_records(path)


def test_read_skips_blank_lines(tmp_path):
    path = tmp_path / "records.jsonl"
    record = dispute_to_record(sample_dispute())
    path.write_text("\n" + dumps_record(record) + "\n\n")
    assert read_records(path) == [record]

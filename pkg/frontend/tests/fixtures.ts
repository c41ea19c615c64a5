// Hand-built documents in the exact shapes the service returns, sized
// like the demo dispute (5+4 arguments, 2+3 demands, party_b winner).

import type {
  AlignmentDoc,
  DiffDoc,
  ItemKind,
  LabeledItemDoc,
  PartyKey,
  ResolutionDoc,
  RunDoc,
} from "../src/types.js";

export const MODELS = ["mock-llm-v0", "mock-llm-v1", "mock-llm-v2"];
export const ENSEMBLE_MODEL = `ENSEMBLE(${MODELS.join(",")})`;

export const DEMANDS_A = ["Dismissal of the claim", "Recovery of legal costs"];
export const DEMANDS_B = [
  "Replacement of the destroyed vehicle",
  "Reimbursement of towing charges",
  "Compensation for mental agony",
];
export const ARGUMENTS_A = [
  "The policy lapsed before the accident",
  "The premium payment was never received",
  "The driver was unlicensed at the time",
  "The damage predates the policy period",
  "The claim form was filed past the deadline",
];
export const ARGUMENTS_B = [
  "Premium was paid and acknowledged in writing",
  "The policy schedule covers the accident date",
  "The surveyor confirmed total loss",
  "The insurer accepted premiums after the alleged lapse",
];

export const DEMAND_LABELS_A = ["REJECTED", "REJECTED"];
export const DEMAND_LABELS_B = ["ACCEPTED", "ACCEPTED", "REJECTED"];
export const ARGUMENT_LABELS_A = ["WEAK", "WEAK", "WEAK", "WEAK", "WEAK"];
export const ARGUMENT_LABELS_B = ["STRONG", "STRONG", "STRONG", "STRONG"];

export function items(texts: string[], labels: (string | null)[]): LabeledItemDoc[] {
  return texts.map((text, i) => ({
    text,
    label: labels[i] ?? null,
    justification: `judged from the record: ${text}`,
  }));
}

export function resolution(model: string, overrides: Partial<ResolutionDoc> = {}): ResolutionDoc {
  return {
    model,
    strategy: "S3",
    stronger_party: "party_b",
    stronger_party_justification: "Stronger documentary support for the insured party.",
    demand_decisions: {
      party_a: items(DEMANDS_A, DEMAND_LABELS_A),
      party_b: items(DEMANDS_B, DEMAND_LABELS_B),
    },
    argument_evaluations: {
      party_a: items(ARGUMENTS_A, ARGUMENT_LABELS_A),
      party_b: items(ARGUMENTS_B, ARGUMENT_LABELS_B),
    },
    diagnostics: [],
    ...overrides,
  };
}

export function identityAlignment(
  model: string,
  kind: ItemKind,
  party: PartyKey,
  texts: string[],
): AlignmentDoc {
  return {
    model,
    kind,
    party,
    gt_texts: texts,
    pred_texts: texts,
    pairs: texts.map((_, i) => [i, i] as [number, number]),
    pair_distances: texts.map(() => 0),
    unmatched_rows: [],
    unmatched_cols: [],
    diagnostics: [],
  };
}

function allAlignments(model: string): AlignmentDoc[] {
  return [
    identityAlignment(model, "demand", "party_a", DEMANDS_A),
    identityAlignment(model, "demand", "party_b", DEMANDS_B),
    identityAlignment(model, "argument", "party_a", ARGUMENTS_A),
    identityAlignment(model, "argument", "party_b", ARGUMENTS_B),
  ];
}

export function runDoc(overrides: Partial<RunDoc> = {}): RunDoc {
  return {
    run_id: "r-fixture01",
    dispute_id: "claim-77",
    dataset: "auto_insurance",
    version: 1,
    strategy: "S3",
    models: MODELS,
    embed_model: "demo-embed",
    status: "DONE",
    error: null,
    outputs: MODELS.map((m) => resolution(m)),
    ensemble: resolution(ENSEMBLE_MODEL, { diagnostics: ["majority 3/3 on stronger party"] }),
    alignments: MODELS.flatMap(allAlignments),
    failures: [],
    ...overrides,
  };
}

export function diffDoc(overrides: Partial<DiffDoc> = {}): DiffDoc {
  return {
    against: "r-fixture00",
    stronger_party: { old: "party_b", new: "party_b", changed: false },
    items: [
      {
        kind: "demand",
        party: "party_b",
        old_text: "Compensation for mental agony",
        new_text: "Compensation for mental agony",
        old_label: "REJECTED",
        new_label: "ACCEPTED",
        label_changed: true,
        text_changed: false,
      },
    ],
    added: [],
    removed: [],
    label_changes: 1,
    ...overrides,
  };
}

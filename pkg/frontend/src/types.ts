// JSON shapes exchanged with the dispute analysis service, plus the
// dataset metadata the forms need (element schemas, party display names).

export type Dataset = "auto_insurance" | "domain_name";
export type PartyKey = "party_a" | "party_b";
export type Strategy = "S1" | "S2" | "S3";
export type ItemKind = "demand" | "argument";
export type RunStatus = "QUEUED" | "RUNNING" | "DONE" | "FAILED";

export const DATASETS: Dataset[] = ["auto_insurance", "domain_name"];
export const PARTIES: PartyKey[] = ["party_a", "party_b"];
export const STRATEGIES: Strategy[] = ["S1", "S2", "S3"];

export const DATASET_LABELS: Record<Dataset, string> = {
  auto_insurance: "Auto insurance",
  domain_name: "Domain name",
};

export const PARTY_NAMES: Record<Dataset, Record<PartyKey, string>> = {
  auto_insurance: { party_a: "insurance company", party_b: "insured party" },
  domain_name: { party_a: "complainant", party_b: "respondent" },
};

// Elements in schema order. Domain-name disputes have no prior-case or
// venue elements.
export const ELEMENT_SCHEMAS: Record<Dataset, string[]> = {
  auto_insurance: [
    "agreed_facts", "disagreement_aspects",
    "demands_party_a", "demands_party_b",
    "arguments_party_a", "arguments_party_b",
    "prior_cases", "statutes",
    "decision_district", "decision_state",
    "final_decision", "justification", "winning_party",
  ],
  domain_name: [
    "agreed_facts", "disagreement_aspects",
    "demands_party_a", "demands_party_b",
    "arguments_party_a", "arguments_party_b",
    "statutes",
    "final_decision", "justification", "winning_party",
  ],
};

// Elements withheld from resolution prompts; the entry form groups them
// under a collapsed "recorded outcome" section.
export const DECISION_ELEMENTS = new Set([
  "decision_district", "decision_state",
  "final_decision", "justification", "winning_party",
]);

export const ELEMENT_LABELS: Record<string, string> = {
  agreed_facts: "Agreed facts",
  disagreement_aspects: "Disagreement aspects",
  demands_party_a: "Demands summary",
  demands_party_b: "Demands summary",
  arguments_party_a: "Arguments summary",
  arguments_party_b: "Arguments summary",
  prior_cases: "Prior cases",
  statutes: "Statutes",
  decision_district: "Decision district",
  decision_state: "Decision state",
  final_decision: "Final decision",
  justification: "Decision justification",
  winning_party: "Winning party",
};

// ── request payloads ────────────────────────────────

export interface TemplatePayload {
  dataset: Dataset;
  dispute_id?: string;
  elements: Record<string, string>;
  demands: Record<PartyKey, string[]>;
  arguments: Record<PartyKey, string[]>;
  winning_party?: PartyKey;
  base_version?: number;
}

export interface RunRequest {
  dispute_id: string;
  strategy: Strategy;
  models: string[];
  version?: number;
  embed_model?: string;
}

// ── response documents ──────────────────────────────

export interface HealthDoc {
  status: string;
  models: string[];
  chat_models: string[];
  embed_models: string[];
  disputes: number;
  runs: number;
}

export interface Finding {
  element: string | null;
  rule: string;
  message: string;
}

export interface DisputeRef {
  dispute_id: string;
  dataset: Dataset;
  latest_version: number;
}

export interface SummaryDoc {
  dispute_id: string;
  elements: Record<string, string>;
  demands: Record<PartyKey, string[]>;
  arguments: Record<PartyKey, string[]>;
  winning_party: PartyKey | null;
  warnings: string[];
}

export interface DisputeDoc extends DisputeRef {
  versions: Array<{ version: number; summary: SummaryDoc }>;
}

export interface LabeledItemDoc {
  text: string;
  label: string | null;
  justification: string;
}

export interface ResolutionDoc {
  model: string;
  strategy: Strategy;
  stronger_party: PartyKey | null;
  stronger_party_justification: string;
  demand_decisions: Partial<Record<PartyKey, LabeledItemDoc[]>>;
  argument_evaluations: Partial<Record<PartyKey, LabeledItemDoc[]>>;
  diagnostics: string[];
}

export interface AlignmentDoc {
  model: string;
  kind: ItemKind;
  party: PartyKey;
  gt_texts: string[];
  pred_texts: string[];
  pairs: Array<[number, number]>;
  pair_distances: number[];
  unmatched_rows: number[];
  unmatched_cols: number[];
  diagnostics: string[];
}

export interface DiffItemDoc {
  kind: ItemKind;
  party: PartyKey;
  old_text: string;
  new_text: string;
  old_label: string | null;
  new_label: string | null;
  label_changed: boolean;
  text_changed: boolean;
}

export interface DiffSideDoc {
  kind: ItemKind;
  party: PartyKey;
  text: string;
}

export interface DiffDoc {
  against: string;
  stronger_party: { old: PartyKey | null; new: PartyKey | null; changed: boolean };
  items: DiffItemDoc[];
  added: DiffSideDoc[];
  removed: DiffSideDoc[];
  label_changes: number;
}

export interface RunDoc {
  run_id: string;
  dispute_id: string;
  dataset: Dataset;
  version: number;
  strategy: Strategy;
  models: string[];
  embed_model: string | null;
  status: RunStatus;
  error: string | null;
  outputs: ResolutionDoc[];
  ensemble: ResolutionDoc | null;
  alignments: AlignmentDoc[];
  failures: Array<{ stage: string; detail: string }>;
  diff?: DiffDoc;
}

export function partyName(dataset: Dataset, party: PartyKey): string {
  return PARTY_NAMES[dataset][party];
}

// Dispute entry wizard: four guided steps over the structured template
// (context, demands, arguments, extras and recorded outcome), with
// client-side validation before the template is submitted.

import { ApiError, createDispute } from "./api.js";
import { el } from "./dom.js";
import {
  DATASETS,
  DATASET_LABELS,
  ELEMENT_LABELS,
  ELEMENT_SCHEMAS,
  PARTIES,
  partyName,
  type Dataset,
  type Finding,
  type PartyKey,
  type TemplatePayload,
} from "./types.js";
import { compactElements, validateTemplate } from "./validate.js";

const STEP_TITLES = ["Dispute", "Demands", "Arguments", "Outcome & submit"];

interface WizardState {
  dataset: Dataset;
  disputeId: string;
  elements: Record<string, string>;
  items: Record<string, string>; // "demands:party_a" -> one item per line
  step: number;
  findings: Finding[];
  submitError: string;
  busy: boolean;
}

export function parseItems(text: string): string[] {
  return text
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
}

export function buildPayload(state: WizardState): TemplatePayload {
  const itemMap = (kind: "demands" | "arguments") => {
    const out = {} as Record<PartyKey, string[]>;
    for (const party of PARTIES) out[party] = parseItems(state.items[`${kind}:${party}`] ?? "");
    return out;
  };
  const payload: TemplatePayload = {
    dataset: state.dataset,
    elements: compactElements(state.elements),
    demands: itemMap("demands"),
    arguments: itemMap("arguments"),
  };
  const disputeId = state.disputeId.trim();
  if (disputeId) payload.dispute_id = disputeId;
  return payload;
}

export function renderWizard(
  container: HTMLElement,
  opts: { onCreated: (disputeId: string) => void },
): void {
  const state: WizardState = {
    dataset: "auto_insurance",
    disputeId: "",
    elements: {},
    items: {},
    step: 0,
    findings: [],
    submitError: "",
    busy: false,
  };

  const inSchema = (key: string) => ELEMENT_SCHEMAS[state.dataset].includes(key);

  const proseField = (key: string, label: string, hint?: string) =>
    el(
      "div",
      { className: "field" },
      el("label", {}, label, hint ? el("span", { className: "hint" }, ` ${hint}`) : null),
      el("textarea", {
        "data-element": key,
        oninput: (e: Event) => {
          state.elements[key] = (e.target as HTMLTextAreaElement).value;
        },
      }),
    );

  const itemsField = (kind: "demands" | "arguments", party: PartyKey) => {
    const key = `${kind}:${party}`;
    return el(
      "div",
      { className: "field" },
      el(
        "label",
        {},
        `Itemized ${kind}`,
        el("span", { className: "hint" }, " one per line"),
      ),
      el("textarea", {
        "data-items": key,
        oninput: (e: Event) => {
          state.items[key] = (e.target as HTMLTextAreaElement).value;
        },
      }),
    );
  };

  const restoreValues = (root: HTMLElement): void => {
    for (const area of root.querySelectorAll<HTMLTextAreaElement>("[data-element]")) {
      area.value = state.elements[area.dataset.element!] ?? "";
    }
    for (const area of root.querySelectorAll<HTMLTextAreaElement>("[data-items]")) {
      area.value = state.items[area.dataset.items!] ?? "";
    }
  };

  const partyColumns = (kind: "demands" | "arguments") =>
    el(
      "div",
      { className: "party-grid" },
      ...PARTIES.map((party) =>
        el(
          "div",
          { "data-party-column": party },
          el("h3", {}, partyName(state.dataset, party)),
          proseField(`${kind}_${party}`, ELEMENT_LABELS[`${kind}_${party}`]),
          itemsField(kind, party),
        ),
      ),
    );

  const stepBody = (): HTMLElement => {
    switch (state.step) {
      case 0: {
        const datasetSelect = el("select", {
          "data-field": "dataset",
          onchange: (e: Event) => {
            state.dataset = (e.target as HTMLSelectElement).value as Dataset;
            render();
          },
        }) as HTMLSelectElement;
        for (const ds of DATASETS) {
          datasetSelect.appendChild(
            el("option", { value: ds, selected: ds === state.dataset }, DATASET_LABELS[ds]),
          );
        }
        const idInput = el("input", {
          type: "text",
          "data-field": "dispute_id",
          placeholder: "generated when empty",
          oninput: (e: Event) => {
            state.disputeId = (e.target as HTMLInputElement).value;
          },
        }) as HTMLInputElement;
        idInput.value = state.disputeId;
        return el(
          "div",
          {},
          el("div", { className: "field" }, el("label", {}, "Dataset"), datasetSelect),
          el("div", { className: "field" }, el("label", {}, "Dispute id"), idInput),
          proseField("agreed_facts", ELEMENT_LABELS.agreed_facts),
          proseField("disagreement_aspects", ELEMENT_LABELS.disagreement_aspects),
        );
      }
      case 1:
        return partyColumns("demands");
      case 2:
        return partyColumns("arguments");
      default: {
        const extras = el(
          "div",
          {},
          inSchema("prior_cases")
            ? proseField("prior_cases", ELEMENT_LABELS.prior_cases, "optional")
            : null,
          proseField("statutes", ELEMENT_LABELS.statutes, "optional"),
        );
        const outcome = el(
          "details",
          { "data-section": "outcome" },
          el("summary", {}, "Recorded outcome (never shown to resolution)"),
          proseField("final_decision", ELEMENT_LABELS.final_decision, "optional"),
          proseField("justification", ELEMENT_LABELS.justification, "optional"),
          proseField("winning_party", ELEMENT_LABELS.winning_party, "optional"),
          inSchema("decision_district")
            ? proseField("decision_district", ELEMENT_LABELS.decision_district, "optional")
            : null,
          inSchema("decision_state")
            ? proseField("decision_state", ELEMENT_LABELS.decision_state, "optional")
            : null,
        );
        return el("div", {}, extras, outcome);
      }
    }
  };

  const submit = async (): Promise<void> => {
    const payload = buildPayload(state);
    state.findings = validateTemplate(payload);
    state.submitError = "";
    if (state.findings.length > 0) {
      render();
      return;
    }
    state.busy = true;
    render();
    try {
      const created = await createDispute(payload);
      opts.onCreated(created.dispute_id);
    } catch (err) {
      if (err instanceof ApiError) {
        state.findings = err.findings;
        state.submitError = err.detail;
      } else {
        state.submitError = err instanceof Error ? err.message : String(err);
      }
      state.busy = false;
      render();
    }
  };

  const render = (): void => {
    const last = state.step === STEP_TITLES.length - 1;
    const card = el(
      "div",
      { className: "card wizard" },
      el(
        "div",
        { className: "steps" },
        ...STEP_TITLES.map((title, i) =>
          el("span", { className: i === state.step ? "step-dot active" : "step-dot" }, `${i + 1}. ${title}`),
        ),
      ),
      stepBody(),
      state.findings.length > 0
        ? el(
            "ul",
            { className: "findings" },
            ...state.findings.map((f) => el("li", {}, `${f.rule}: ${f.message}`)),
          )
        : null,
      state.submitError ? el("div", { className: "error-box" }, state.submitError) : null,
      el(
        "div",
        { className: "wizard-nav" },
        state.step > 0
          ? el(
              "button",
              {
                className: "wizard-back",
                onclick: () => {
                  state.step -= 1;
                  render();
                },
              },
              "Back",
            )
          : el("span"),
        last
          ? el(
              "button",
              {
                className: "primary wizard-submit",
                disabled: state.busy,
                onclick: () => void submit(),
              },
              state.busy ? "Submitting..." : "Create dispute",
            )
          : el(
              "button",
              {
                className: "primary wizard-next",
                onclick: () => {
                  state.step += 1;
                  render();
                },
              },
              "Next",
            ),
      ),
    );
    container.innerHTML = "";
    container.appendChild(el("h2", {}, "New dispute"));
    container.appendChild(card);
    restoreValues(card);
  };

  render();
}

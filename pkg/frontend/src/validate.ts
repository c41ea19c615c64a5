// Client-side template validation. Mirrors the server's create-time
// findings (unknown element, itemization missing, empty item, winner
// unresolved) and adds a preflight for the two prose elements every
// resolution strategy requires, so the wizard blocks templates whose
// runs could only fail. The server stays authoritative; anything it
// rejects is surfaced through the same findings list.

import {
  DECISION_ELEMENTS,
  ELEMENT_SCHEMAS,
  PARTIES,
  PARTY_NAMES,
  type Dataset,
  type Finding,
  type PartyKey,
  type TemplatePayload,
} from "./types.js";

const REQUIRED_PROSE = ["agreed_facts", "disagreement_aspects"];

function itemElement(kind: "demands" | "arguments", party: PartyKey): string {
  return `${kind}_${party}`;
}

export function validateTemplate(payload: TemplatePayload): Finding[] {
  const dataset: Dataset = payload.dataset;
  const schema = new Set(ELEMENT_SCHEMAS[dataset]);
  const findings: Finding[] = [];

  for (const key of Object.keys(payload.elements)) {
    if (!schema.has(key)) {
      findings.push({
        element: key,
        rule: "unknown element",
        message: `${key} is not in the ${dataset} schema`,
      });
    }
  }

  for (const key of REQUIRED_PROSE) {
    if (!payload.elements[key]?.trim()) {
      findings.push({
        element: key,
        rule: "missing element",
        message: `${key} is required before a resolution can run`,
      });
    }
  }

  for (const kind of ["demands", "arguments"] as const) {
    for (const party of PARTIES) {
      const element = itemElement(kind, party);
      const prose = payload.elements[element]?.trim() ?? "";
      const items = payload[kind][party] ?? [];
      if (prose && items.length === 0) {
        findings.push({
          element,
          rule: "itemization missing",
          message: `${element} has text but no itemized ${kind} for ${party}`,
        });
      }
      items.forEach((text, i) => {
        if (!text.trim()) {
          findings.push({
            element,
            rule: "empty item",
            message: `${kind} item ${i + 1} for ${party} is blank`,
          });
        }
      });
    }
  }

  const winnerText = payload.elements.winning_party?.trim();
  if (winnerText && !payload.winning_party) {
    const lowered = winnerText.toLowerCase();
    const resolved = PARTIES.some(
      (p) => lowered.includes(PARTY_NAMES[dataset][p]) || lowered.includes(p.replace("_", " ")),
    );
    if (!resolved) {
      findings.push({
        element: "winning_party",
        rule: "winner unresolved",
        message: "winning_party text does not name either party",
      });
    }
  }

  return findings;
}

/** Drop empty optional elements so the payload round-trips cleanly. */
export function compactElements(elements: Record<string, string>): Record<string, string> {
  const out: Record<string, string> = {};
  for (const [key, value] of Object.entries(elements)) {
    const text = value.trim();
    if (text) out[key] = text;
  }
  return out;
}

export function isDecisionElement(key: string): boolean {
  return DECISION_ELEMENTS.has(key);
}

import { describe, expect, it } from "vitest";

import { compactElements, isDecisionElement, validateTemplate } from "../src/validate.js";
import type { TemplatePayload } from "../src/types.js";

function payload(overrides: Partial<TemplatePayload> = {}): TemplatePayload {
  return {
    dataset: "auto_insurance",
    elements: {
      agreed_facts: "A policy existed.",
      disagreement_aspects: "Whether it had lapsed.",
    },
    demands: { party_a: [], party_b: [] },
    arguments: { party_a: [], party_b: [] },
    ...overrides,
  };
}

describe("validateTemplate", () => {
  it("accepts a minimal well-formed template", () => {
    expect(validateTemplate(payload())).toEqual([]);
  });

  it("flags elements outside the dataset schema", () => {
    const p = payload();
    p.elements.prior_cases = "none";
    p.dataset = "domain_name"; // no prior_cases element there
    const findings = validateTemplate(p);
    expect(findings).toHaveLength(1);
    expect(findings[0]).toMatchObject({ element: "prior_cases", rule: "unknown element" });
  });

  it("requires both prose context elements", () => {
    const p = payload({ elements: { agreed_facts: "   " } });
    const rules = validateTemplate(p).map((f) => f.rule);
    expect(rules).toEqual(["missing element", "missing element"]);
  });

  it("flags summary prose without itemized entries", () => {
    const p = payload();
    p.elements.demands_party_b = "Wants the car replaced.";
    const findings = validateTemplate(p);
    expect(findings).toHaveLength(1);
    expect(findings[0]).toMatchObject({
      element: "demands_party_b",
      rule: "itemization missing",
    });
  });

  it("does not require items when the summary prose is absent", () => {
    const p = payload();
    p.demands.party_b = ["Replacement of the vehicle"];
    expect(validateTemplate(p)).toEqual([]);
  });

  it("flags blank items", () => {
    const p = payload();
    p.elements.arguments_party_a = "Lapse argument.";
    p.arguments.party_a = ["The policy lapsed", "   "];
    const findings = validateTemplate(p);
    expect(findings).toHaveLength(1);
    expect(findings[0]).toMatchObject({ element: "arguments_party_a", rule: "empty item" });
  });

  it("flags winner prose that names neither party", () => {
    const p = payload();
    p.elements.winning_party = "the petitioner";
    const findings = validateTemplate(p);
    expect(findings).toHaveLength(1);
    expect(findings[0]).toMatchObject({ element: "winning_party", rule: "winner unresolved" });
  });

  it("accepts winner prose naming a party by display name or key", () => {
    for (const text of ["The insured party prevails", "Party B wins"]) {
      const p = payload();
      p.elements.winning_party = text;
      expect(validateTemplate(p)).toEqual([]);
    }
  });

  it("accepts winner prose when an explicit winning_party is set", () => {
    const p = payload({ winning_party: "party_b" });
    p.elements.winning_party = "the customer";
    expect(validateTemplate(p)).toEqual([]);
  });
});

describe("compactElements", () => {
  it("drops blank entries and trims the rest", () => {
    expect(
      compactElements({ agreed_facts: " facts ", statutes: "   ", prior_cases: "" }),
    ).toEqual({ agreed_facts: "facts" });
  });
});

describe("isDecisionElement", () => {
  it("separates outcome elements from context elements", () => {
    expect(isDecisionElement("final_decision")).toBe(true);
    expect(isDecisionElement("winning_party")).toBe(true);
    expect(isDecisionElement("agreed_facts")).toBe(false);
    expect(isDecisionElement("statutes")).toBe(false);
  });
});

// Review panel rendering: ensemble verdict, per-item label badges with
// per-model votes recovered through the persisted alignments, alignment
// diagnostics, and the what-if diff between two runs.

import { el } from "./dom.js";
import {
  partyName,
  PARTIES,
  type AlignmentDoc,
  type Dataset,
  type DiffDoc,
  type ItemKind,
  type PartyKey,
  type ResolutionDoc,
  type RunDoc,
} from "./types.js";

// Matched pairs further apart than this are flagged, never dropped;
// mirrors the alignment stage's flagging threshold.
export const DISTANCE_FLAG_THRESHOLD = 0.5;

const KIND_FIELDS: Record<ItemKind, keyof Pick<ResolutionDoc, "demand_decisions" | "argument_evaluations">> = {
  demand: "demand_decisions",
  argument: "argument_evaluations",
};

const KIND_TITLES: Record<ItemKind, string> = {
  demand: "Demands",
  argument: "Arguments",
};

export function badge(label: string | null, extra = ""): HTMLElement {
  const text = label ?? "UNLABELED";
  const cls = `badge ${text.toLowerCase()}${extra ? ` ${extra}` : ""}`;
  return el("span", { className: cls, "data-label": text }, text);
}

function alignmentFor(
  run: RunDoc,
  model: string,
  kind: ItemKind,
  party: PartyKey,
): AlignmentDoc | undefined {
  return run.alignments.find(
    (a) => a.model === model && a.kind === kind && a.party === party,
  );
}

/** The label a model gave the ensemble's item at `gtIndex`, looked up
 *  through that model's alignment onto the shared reference texts. */
export function modelLabel(
  run: RunDoc,
  output: ResolutionDoc,
  kind: ItemKind,
  party: PartyKey,
  gtIndex: number,
): string | null {
  const alignment = alignmentFor(run, output.model, kind, party);
  if (!alignment) return null;
  const pair = alignment.pairs.find(([g]) => g === gtIndex);
  if (!pair) return null;
  const items = output[KIND_FIELDS[kind]][party] ?? [];
  return items[pair[1]]?.label ?? null;
}

function itemSection(run: RunDoc, kind: ItemKind): HTMLElement {
  const ensemble = run.ensemble!;
  const counts = new Map<string, number>();
  const parties = el("div", { className: "party-grid" });

  for (const party of PARTIES) {
    const items = ensemble[KIND_FIELDS[kind]][party] ?? [];
    const list = el("div", { "data-party": party }, el("h3", {}, partyName(run.dataset, party)));
    items.forEach((item, i) => {
      const label = item.label ?? "UNLABELED";
      counts.set(label, (counts.get(label) ?? 0) + 1);
      const models = el("span", { className: "models" });
      for (const output of run.outputs) {
        models.appendChild(badge(modelLabel(run, output, kind, party, i), "model"));
        models.appendChild(document.createTextNode(" "));
      }
      list.appendChild(
        el(
          "div",
          { className: "item", title: item.justification },
          el("span", { className: "text" }, item.text),
          badge(item.label, "ensemble"),
          models,
        ),
      );
    });
    if (items.length === 0) {
      list.appendChild(el("p", { className: "muted small" }, "No items."));
    }
    parties.appendChild(list);
  }

  const totals = el("div", { className: "totals" });
  for (const [label, count] of [...counts.entries()].sort()) {
    totals.appendChild(
      el(
        "span",
        { className: "chip", "data-total-label": label, "data-count": String(count) },
        `${count} ${label.toLowerCase()}`,
      ),
    );
  }

  return el(
    "section",
    { className: "card", "data-kind": kind },
    el("h2", {}, KIND_TITLES[kind]),
    parties,
    totals,
  );
}

function alignmentChips(run: RunDoc): HTMLElement[] {
  const chips: HTMLElement[] = [];
  for (const a of run.alignments) {
    a.pairs.forEach(([g], i) => {
      const d = a.pair_distances[i];
      if (d > DISTANCE_FLAG_THRESHOLD) {
        chips.push(
          el(
            "span",
            { className: "chip warn", "data-flag": "distant" },
            `${a.model}: ${a.party} ${a.kind} ${g + 1} matched at distance ${d.toFixed(2)}`,
          ),
        );
      }
    });
    for (const g of a.unmatched_rows) {
      chips.push(
        el(
          "span",
          { className: "chip warn", "data-flag": "missing" },
          `${a.model}: ${a.party} ${a.kind} ${g + 1} missing from output`,
        ),
      );
    }
    for (const p of a.unmatched_cols) {
      chips.push(
        el(
          "span",
          { className: "chip", "data-flag": "extra" },
          `${a.model}: extra ${a.party} ${a.kind} "${a.pred_texts[p] ?? ""}"`,
        ),
      );
    }
  }
  return chips;
}

export function renderRunPanel(run: RunDoc): HTMLElement {
  const root = el("div", { className: "run-panel", "data-run-id": run.run_id });

  if (run.status === "FAILED" || !run.ensemble) {
    root.appendChild(
      el(
        "div",
        { className: "error-box" },
        `Run ${run.run_id} failed: ${run.error ?? "no ensemble produced"}`,
        ...run.failures.map((f) => el("div", { className: "small" }, `${f.stage}: ${f.detail}`)),
      ),
    );
    return root;
  }

  const ensemble = run.ensemble;
  const winner = ensemble.stronger_party;
  const verdict = el(
    "section",
    { className: "card" },
    el(
      "div",
      { className: "verdict" },
      el("span", { className: "muted" }, "Stronger party:"),
      el(
        "span",
        { className: "winner", "data-winner": winner ?? "" },
        winner ? partyName(run.dataset, winner) : "unclear",
      ),
      el("span", { className: "chip" }, `${run.strategy} / version ${run.version}`),
    ),
    el("p", { className: "small" }, ensemble.stronger_party_justification),
    el(
      "div",
      { className: "models small muted" },
      "Model votes: ",
      ...run.outputs.flatMap((o) => [
        el(
          "span",
          { className: "chip", "data-model-vote": o.model },
          `${o.model}: ${o.stronger_party ? partyName(run.dataset, o.stronger_party) : "unclear"}`,
        ),
      ]),
    ),
    el(
      "div",
      { className: "diagnostics" },
      ...ensemble.diagnostics.map((d) => el("span", { className: "chip", "data-diagnostic": "" }, d)),
    ),
  );
  root.appendChild(verdict);

  if (run.strategy !== "S1") root.appendChild(itemSection(run, "demand"));
  if (run.strategy === "S3") root.appendChild(itemSection(run, "argument"));

  const chips = alignmentChips(run);
  if (chips.length > 0) {
    root.appendChild(
      el(
        "section",
        { className: "card", "data-section": "alignment" },
        el("h2", {}, "Alignment diagnostics"),
        ...chips,
      ),
    );
  }

  return root;
}

function diffBadgePair(oldLabel: string | null, newLabel: string | null): HTMLElement {
  return el(
    "span",
    {},
    badge(oldLabel),
    el("span", { className: "arrow" }, "→"),
    badge(newLabel),
  );
}

export function renderDiffPanel(diff: DiffDoc, dataset: Dataset): HTMLElement {
  const root = el(
    "section",
    { className: "card diff-panel", "data-diff-against": diff.against },
    el("h2", {}, "What-if diff"),
    el(
      "p",
      {},
      el("span", { "data-diff-stat": "label_changes" }, String(diff.label_changes)),
      ` label change${diff.label_changes === 1 ? "" : "s"} vs run ${diff.against}`,
    ),
  );

  const sp = diff.stronger_party;
  root.appendChild(
    el(
      "p",
      { className: "diff-party", "data-changed": String(sp.changed) },
      "Stronger party: ",
      sp.old ? partyName(dataset, sp.old) : "unclear",
      el("span", { className: "arrow" }, "→"),
      sp.new ? partyName(dataset, sp.new) : "unclear",
      sp.changed ? el("span", { className: "chip warn" }, "changed") : el("span", { className: "chip" }, "unchanged"),
    ),
  );

  const changed = diff.items.filter((i) => i.label_changed || i.text_changed);
  for (const item of changed) {
    const textPart = item.text_changed
      ? el(
          "span",
          { className: "text" },
          item.old_text,
          el("span", { className: "arrow" }, "→"),
          item.new_text,
        )
      : el("span", { className: "text" }, item.new_text);
    root.appendChild(
      el(
        "div",
        {
          className: "diff-row changed",
          "data-kind": item.kind,
          "data-party": item.party,
          "data-old-label": item.old_label ?? "",
          "data-new-label": item.new_label ?? "",
        },
        el("span", { className: "chip" }, `${item.kind} / ${partyName(dataset, item.party)}`),
        textPart,
        " ",
        item.label_changed ? diffBadgePair(item.old_label, item.new_label) : badge(item.new_label),
      ),
    );
  }

  for (const side of diff.added) {
    root.appendChild(
      el(
        "div",
        { className: "diff-row added", "data-kind": side.kind, "data-party": side.party },
        el("span", { className: "tag" }, "added "),
        el("span", { className: "text" }, side.text),
      ),
    );
  }
  for (const side of diff.removed) {
    root.appendChild(
      el(
        "div",
        { className: "diff-row removed", "data-kind": side.kind, "data-party": side.party },
        el("span", { className: "tag" }, "removed "),
        el("span", { className: "text" }, side.text),
      ),
    );
  }

  if (changed.length === 0 && diff.added.length === 0 && diff.removed.length === 0 && !sp.changed) {
    root.appendChild(el("p", { className: "muted" }, "No differences."));
  }

  return root;
}

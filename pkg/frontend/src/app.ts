// Application shell: hash routing between the dispute list, the entry
// wizard, and the review view with its run controls and what-if loop.

import {
  ApiError,
  addVersion,
  fetchHealth,
  getDispute,
  getRun,
  listDisputes,
  startRun,
} from "./api.js";
import { $$, el } from "./dom.js";
import { renderDiffPanel, renderRunPanel } from "./review.js";
import {
  PARTIES,
  partyName,
  STRATEGIES,
  type DisputeDoc,
  type HealthDoc,
  type PartyKey,
  type RunDoc,
  type Strategy,
  type TemplatePayload,
} from "./types.js";
import { parseItems, renderWizard } from "./wizard.js";

const POLL_INTERVAL_MS = 200;

interface AppState {
  health: HealthDoc | null;
  dispute: DisputeDoc | null;
  run: RunDoc | null;
  previousRunId: string | null;
  strategy: Strategy;
  models: string[];
  runStatus: string;
  error: string;
  whatIf: Record<string, string>; // "demands:party_a" -> textarea content
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

function currentSummary(dispute: DisputeDoc) {
  return dispute.versions[dispute.versions.length - 1].summary;
}

export function initApp(root: HTMLElement): { ready: Promise<void> } {
  const state: AppState = {
    health: null,
    dispute: null,
    run: null,
    previousRunId: null,
    strategy: "S3",
    models: [],
    runStatus: "",
    error: "",
    whatIf: {},
  };

  // ── routing ─────────────────────────────────────────

  const routeOf = (): { view: string; id?: string } => {
    const hash = location.hash.replace(/^#/, "");
    if (hash === "new") return { view: "wizard" };
    if (hash.startsWith("dispute/")) return { view: "review", id: decodeURIComponent(hash.slice(8)) };
    return { view: "disputes" };
  };

  // Routes directly as well: test DOMs don't always fire hashchange on
  // assignment, and route() is idempotent when the event does follow.
  const navigate = (hash: string): void => {
    if (location.hash !== hash) location.hash = hash;
    void route();
  };

  // ── run lifecycle ───────────────────────────────────

  const seedWhatIf = (): void => {
    if (!state.dispute) return;
    const summary = currentSummary(state.dispute);
    for (const kind of ["demands", "arguments"] as const) {
      for (const party of PARTIES) {
        state.whatIf[`${kind}:${party}`] = (summary[kind][party] ?? []).join("\n");
      }
    }
  };

  // The service refuses to diff an unfinished run, so poll plain and
  // only ask for the diff once the run lands.
  const pollToCompletion = async (runId: string, diffAgainst?: string): Promise<void> => {
    for (;;) {
      const doc = await getRun(runId);
      state.run = doc;
      state.runStatus = doc.status;
      if (doc.status === "FAILED") return;
      if (doc.status === "DONE") {
        if (diffAgainst) {
          try {
            state.run = await getRun(runId, diffAgainst);
          } catch (err) {
            state.error = err instanceof ApiError ? `${err.code}: ${err.detail}` : String(err);
          }
        }
        return;
      }
      renderStatusLine();
      await sleep(POLL_INTERVAL_MS);
    }
  };

  const launchRun = async (diffAgainst?: string): Promise<void> => {
    if (!state.dispute) return;
    state.error = "";
    state.runStatus = "QUEUED";
    render();
    try {
      const started = await startRun({
        dispute_id: state.dispute.dispute_id,
        strategy: state.strategy,
        models: state.models,
      });
      await pollToCompletion(started.run_id, diffAgainst);
    } catch (err) {
      state.error = err instanceof ApiError ? `${err.code}: ${err.detail}` : String(err);
      state.runStatus = "";
    }
    render();
  };

  const submitWhatIf = async (): Promise<void> => {
    if (!state.dispute) return;
    const summary = currentSummary(state.dispute);
    const payload: TemplatePayload = {
      dataset: state.dispute.dataset,
      elements: { ...summary.elements },
      demands: itemsFromState("demands"),
      arguments: itemsFromState("arguments"),
      base_version: state.dispute.latest_version,
    };
    if (summary.winning_party) payload.winning_party = summary.winning_party;
    state.error = "";
    try {
      await addVersion(state.dispute.dispute_id, payload);
      const previous = state.run?.status === "DONE" ? state.run.run_id : null;
      state.previousRunId = previous;
      state.dispute = await getDispute(state.dispute.dispute_id);
      seedWhatIf();
      await launchRun(previous ?? undefined);
    } catch (err) {
      state.error = err instanceof ApiError ? `${err.code}: ${err.detail}` : String(err);
      render();
    }
  };

  const itemsFromState = (kind: "demands" | "arguments"): Record<PartyKey, string[]> => {
    const out = {} as Record<PartyKey, string[]>;
    for (const party of PARTIES) out[party] = parseItems(state.whatIf[`${kind}:${party}`] ?? "");
    return out;
  };

  // ── views ───────────────────────────────────────────

  const app = root;

  const renderStatusLine = (): void => {
    const line = app.querySelector(".run-status");
    if (line) line.textContent = state.runStatus;
  };

  const renderDisputeList = async (): Promise<void> => {
    const { disputes } = await listDisputes();
    app.innerHTML = "";
    app.appendChild(el("h2", {}, "Disputes"));
    if (disputes.length === 0) {
      app.appendChild(
        el("p", { className: "muted" }, "Nothing here yet. Start with a new dispute."),
      );
      return;
    }
    const list = el("ul", { className: "dispute-list" });
    for (const d of disputes) {
      list.appendChild(
        el(
          "li",
          {},
          el("a", { href: `#dispute/${encodeURIComponent(d.dispute_id)}` }, d.dispute_id),
          el("span", { className: "muted small" }, `  ${d.dataset}, version ${d.latest_version}`),
        ),
      );
    }
    app.appendChild(list);
  };

  const runControls = (): HTMLElement => {
    const strategySelect = el("select", {
      "data-field": "strategy",
      onchange: (e: Event) => {
        state.strategy = (e.target as HTMLSelectElement).value as Strategy;
      },
    }) as HTMLSelectElement;
    for (const s of STRATEGIES) {
      strategySelect.appendChild(el("option", { value: s, selected: s === state.strategy }, s));
    }
    const modelBoxes = el(
      "span",
      {},
      ...(state.health?.chat_models ?? []).map((model) => {
        const box = el("input", {
          type: "checkbox",
          "data-model": model,
          onchange: (e: Event) => {
            const checked = (e.target as HTMLInputElement).checked;
            state.models = checked
              ? [...state.models, model]
              : state.models.filter((m) => m !== model);
          },
        }) as HTMLInputElement;
        box.checked = state.models.includes(model);
        return el("label", { className: "small" }, box, ` ${model} `);
      }),
    );
    return el(
      "section",
      { className: "card run-controls" },
      el("label", {}, "Strategy ", strategySelect),
      modelBoxes,
      el(
        "button",
        { className: "primary run-button", onclick: () => void launchRun() },
        "Run resolution",
      ),
      el("span", { className: `run-status${state.run?.status === "FAILED" ? " failed" : ""}` },
        state.runStatus),
    );
  };

  const whatIfEditor = (): HTMLElement => {
    if (!state.dispute) return el("span");
    const dataset = state.dispute.dataset;
    const grid = el(
      "div",
      { className: "party-grid" },
      ...PARTIES.map((party) =>
        el(
          "div",
          {},
          el("h3", {}, partyName(dataset, party)),
          ...(["demands", "arguments"] as const).map((kind) => {
            const key = `${kind}:${party}`;
            const area = el("textarea", {
              "data-whatif": key,
              oninput: (e: Event) => {
                state.whatIf[key] = (e.target as HTMLTextAreaElement).value;
              },
            }) as HTMLTextAreaElement;
            area.value = state.whatIf[key] ?? "";
            return el(
              "div",
              { className: "field" },
              el("label", {}, kind, el("span", { className: "hint" }, " one per line")),
              area,
            );
          }),
        ),
      ),
    );
    return el(
      "details",
      { className: "card", "data-section": "whatif" },
      el("summary", {}, "What if? Edit items and re-run"),
      el(
        "p",
        { className: "muted small" },
        "Saves a new version of this dispute, re-runs the same strategy, and diffs against the last finished run.",
      ),
      grid,
      el(
        "button",
        { className: "primary whatif-submit", onclick: () => void submitWhatIf() },
        "Save version & re-run",
      ),
    );
  };

  const renderReview = (): void => {
    if (!state.dispute) return;
    const summary = currentSummary(state.dispute);
    app.innerHTML = "";
    app.appendChild(
      el(
        "h2",
        {},
        `Dispute ${state.dispute.dispute_id}`,
        el(
          "span",
          { className: "muted small" },
          `  ${state.dispute.dataset}, version ${state.dispute.latest_version}`,
        ),
      ),
    );
    app.appendChild(
      el(
        "section",
        { className: "card", "data-section": "summary" },
        el("p", { className: "small" }, el("strong", {}, "Agreed facts: "), summary.elements.agreed_facts ?? ""),
        el(
          "p",
          { className: "small" },
          el("strong", {}, "Disagreement: "),
          summary.elements.disagreement_aspects ?? "",
        ),
      ),
    );
    app.appendChild(runControls());
    if (state.error) app.appendChild(el("div", { className: "error-box" }, state.error));
    if (state.run && (state.run.status === "DONE" || state.run.status === "FAILED")) {
      app.appendChild(renderRunPanel(state.run));
      if (state.run.diff) {
        app.appendChild(renderDiffPanel(state.run.diff, state.dispute.dataset));
      }
      app.appendChild(whatIfEditor());
    } else if (!state.runStatus) {
      app.appendChild(el("p", { className: "muted" }, "No run yet."));
    }
  };

  const render = (): void => {
    const { view } = routeOf();
    for (const a of $$(".nav a[data-view]")) {
      a.classList.toggle(
        "active",
        a.getAttribute("data-view") === (view === "review" ? "disputes" : view),
      );
    }
    if (view === "wizard") {
      app.innerHTML = "";
      const host = el("div");
      app.appendChild(host);
      renderWizard(host, {
        onCreated: (disputeId) => navigate(`#dispute/${encodeURIComponent(disputeId)}`),
      });
    } else if (view === "review") {
      renderReview();
    } else {
      void renderDisputeList().catch((err) => {
        app.innerHTML = "";
        app.appendChild(el("div", { className: "error-box" }, String(err)));
      });
    }
  };

  const route = async (): Promise<void> => {
    const { view, id } = routeOf();
    if (view === "review" && id) {
      if (state.dispute?.dispute_id !== id) {
        state.run = null;
        state.previousRunId = null;
        state.runStatus = "";
        state.error = "";
        try {
          state.dispute = await getDispute(id);
          seedWhatIf();
        } catch (err) {
          state.dispute = null;
          app.innerHTML = "";
          app.appendChild(el("div", { className: "error-box" }, String(err)));
          return;
        }
      }
    }
    render();
  };

  window.addEventListener("hashchange", () => void route());

  const boot = async (): Promise<void> => {
    state.health = await fetchHealth();
    state.models = [...state.health.chat_models];
    await route();
  };

  const ready = boot().catch((err) => {
    app.innerHTML = "";
    app.appendChild(
      el("div", { className: "error-box" }, `Service unreachable: ${String(err)}`),
    );
  });

  return { ready };
}

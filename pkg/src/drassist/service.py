"""HTTP review service: submit disputes as structured templates, trigger
resolution runs, poll results, and diff what-if re-runs.

Disputes are entered in the same element template the summarizer produces,
so a submitted dispute takes the place of the merged summary and goes
straight to the resolution stage. Edits never mutate: each edit appends a
new version, and runs reference the version they were started from.

All persisted state lives under one data directory: one line-delimited
JSON file per dispute (one record per version) and one JSON document per
run. Errors are problem-detail JSON with a machine-readable ``code``.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path
from typing import Any

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .alignment import align_items
from .gateway import Gateway, GatewayError
from .model import (
    DatasetId,
    PartyRole,
    Strategy,
    StructuralElement,
    StructuredSummary,
    ValidationFinding,
    itemize_element,
    resolve_party,
    validate_summary,
)
from .persistence import (
    SCHEMA_VERSION,
    aligned_items_to_record,
    dumps_record,
    read_records,
    resolution_to_record,
    summary_from_record,
    summary_to_record,
)
from .pipeline import run_template

_TERMINAL = {"DONE", "FAILED"}


def _problem(status: int, code: str, detail: str, **extra: Any) -> JSONResponse:
    body = {
        "type": "about:blank",
        "title": code.replace("_", " "),
        "status": status,
        "code": code,
        "detail": detail,
    }
    body.update(extra)
    return JSONResponse(body, status_code=status, media_type="application/problem+json")


def _findings_payload(findings: list[ValidationFinding]) -> list[dict[str, Any]]:
    return [
        {"element": f.element, "rule": f.rule, "message": f.message} for f in findings
    ]


class _PayloadError(Exception):
    """Template payload rejected; carries validate_summary-style findings."""

    def __init__(self, findings: list[ValidationFinding]):
        super().__init__("invalid template payload")
        self.findings = findings


def _str_list(value: Any, element: str, findings: list[ValidationFinding]) -> list[str]:
    if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
        findings.append(
            ValidationFinding(element, "bad item list", f"{element} must be a list of strings")
        )
        return []
    return list(value)


def summary_from_payload(
    payload: dict[str, Any], dispute_id: str, dataset: DatasetId
) -> StructuredSummary:
    """Build a StructuredSummary from a submitted template body.

    ``elements`` maps element names to text; ``demands``/``arguments`` map
    party roles to item lists and, when omitted, are itemized from the
    corresponding element text. The winner comes from an explicit
    ``winning_party`` role or, failing that, from the element text. Raises
    _PayloadError with one finding per problem.
    """
    findings: list[ValidationFinding] = []
    elements: dict[StructuralElement, str] = {}
    raw_elements = payload.get("elements", {})
    if not isinstance(raw_elements, dict):
        raise _PayloadError(
            [ValidationFinding(None, "bad elements", "elements must be an object")]
        )
    for key, text in raw_elements.items():
        try:
            element = StructuralElement(key)
        except ValueError:
            findings.append(
                ValidationFinding(key, "unknown element", f"{key!r} is not a structural element")
            )
            continue
        if not isinstance(text, str):
            findings.append(ValidationFinding(key, "bad element text", f"{key} must be a string"))
            continue
        elements[element] = text

    def item_map(field: str) -> dict[PartyRole, list[str]]:
        raw = payload.get(field)
        if raw is None:
            return {}
        if not isinstance(raw, dict):
            findings.append(
                ValidationFinding(None, f"bad {field}", f"{field} must map party roles to lists")
            )
            return {}
        out: dict[PartyRole, list[str]] = {}
        for key, items in raw.items():
            try:
                party = PartyRole(key)
            except ValueError:
                findings.append(
                    ValidationFinding(None, "unknown party", f"{key!r} is not a party role")
                )
                continue
            out[party] = _str_list(items, f"{field}.{key}", findings)
        return out

    demands = item_map("demands")
    arguments = item_map("arguments")
    if "demands" not in payload:
        demands = {
            party: itemize_element(elements.get(element, ""))
            for party, element in (
                (PartyRole.PARTY_A, StructuralElement.DEMANDS_PARTY_A),
                (PartyRole.PARTY_B, StructuralElement.DEMANDS_PARTY_B),
            )
            if elements.get(element, "").strip()
        }
    if "arguments" not in payload:
        arguments = {
            party: itemize_element(elements.get(element, ""))
            for party, element in (
                (PartyRole.PARTY_A, StructuralElement.ARGUMENTS_PARTY_A),
                (PartyRole.PARTY_B, StructuralElement.ARGUMENTS_PARTY_B),
            )
            if elements.get(element, "").strip()
        }

    winner_raw = payload.get("winning_party")
    winner = None
    if winner_raw is not None:
        try:
            winner = PartyRole(winner_raw)
        except ValueError:
            findings.append(
                ValidationFinding(
                    StructuralElement.WINNING_PARTY.value,
                    "unknown party",
                    f"{winner_raw!r} is not a party role",
                )
            )
    elif StructuralElement.WINNING_PARTY in elements:
        winner = resolve_party(elements[StructuralElement.WINNING_PARTY], dataset)

    if findings:
        raise _PayloadError(findings)
    return StructuredSummary(
        dispute_id=dispute_id,
        source_model=str(payload.get("source_model", "user")),
        elements=elements,
        demands=demands,
        arguments=arguments,
        winning_party=winner,
    )


class ServiceState:
    """Disk-backed dispute and run registries with per-dispute write locks."""

    def __init__(self, gateway: Gateway, data_dir: str | Path):
        self.gateway = gateway
        self.root = Path(data_dir)
        self.disputes_dir = self.root / "disputes"
        self.runs_dir = self.root / "runs"
        self.reports_dir = self.root / "reports"
        for directory in (self.disputes_dir, self.runs_dir, self.reports_dir):
            directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._dispute_locks: dict[str, threading.Lock] = {}
        self.disputes: dict[str, dict[str, Any]] = {}
        self.runs: dict[str, dict[str, Any]] = {}
        self._load()

    # -- startup recovery ---------------------------------------------------

    def _load(self) -> None:
        for path in sorted(self.disputes_dir.glob("*.jsonl")):
            records = read_records(path)
            if not records:
                continue
            first = records[0]
            self.disputes[first["dispute_id"]] = {
                "dispute_id": first["dispute_id"],
                "dataset": first["dataset"],
                "versions": [rec["summary"] for rec in records],
            }
        for path in sorted(self.runs_dir.glob("*.json")):
            doc = json.loads(path.read_text(encoding="utf-8"))
            # A run that was queued or running when the process died can
            # never complete; surface that instead of a stuck status.
            if doc.get("status") not in _TERMINAL:
                doc["status"] = "FAILED"
                doc["error"] = "interrupted by service restart"
                path.write_text(dumps_record(doc) + "\n", encoding="utf-8")
            self.runs[doc["run_id"]] = doc

    def dispute_lock(self, dispute_id: str) -> threading.Lock:
        with self._lock:
            return self._dispute_locks.setdefault(dispute_id, threading.Lock())

    # -- disputes -------------------------------------------------------------

    def create_dispute(self, dispute_id: str, dataset: DatasetId, summary: StructuredSummary) -> None:
        record = {
            "schema_version": SCHEMA_VERSION,
            "record_type": "dispute_version",
            "dispute_id": dispute_id,
            "dataset": dataset.value,
            "version": 1,
            "summary": summary_to_record(summary),
        }
        with self.dispute_lock(dispute_id):
            path = self.disputes_dir / f"{dispute_id}.jsonl"
            with path.open("a", encoding="utf-8") as handle:
                handle.write(dumps_record(record) + "\n")
            self.disputes[dispute_id] = {
                "dispute_id": dispute_id,
                "dataset": dataset.value,
                "versions": [record["summary"]],
            }

    def add_version(self, dispute_id: str, summary: StructuredSummary) -> int:
        with self.dispute_lock(dispute_id):
            entry = self.disputes[dispute_id]
            version = len(entry["versions"]) + 1
            record = {
                "schema_version": SCHEMA_VERSION,
                "record_type": "dispute_version",
                "dispute_id": dispute_id,
                "dataset": entry["dataset"],
                "version": version,
                "summary": summary_to_record(summary),
            }
            path = self.disputes_dir / f"{dispute_id}.jsonl"
            with path.open("a", encoding="utf-8") as handle:
                handle.write(dumps_record(record) + "\n")
            entry["versions"].append(record["summary"])
            return version

    # -- runs -----------------------------------------------------------------

    def save_run(self, doc: dict[str, Any]) -> None:
        with self._lock:
            self.runs[doc["run_id"]] = doc
            path = self.runs_dir / f"{doc['run_id']}.json"
            path.write_text(dumps_record(doc) + "\n", encoding="utf-8")

    def default_embed_model(self) -> str | None:
        for model_id, spec in self.gateway.config.models.items():
            if spec.embedding_dimension is not None:
                return model_id
        return None


def _execute_run(state: ServiceState, run_id: str) -> None:
    doc = dict(state.runs[run_id])
    doc["status"] = "RUNNING"
    state.save_run(doc)
    try:
        entry = state.disputes[doc["dispute_id"]]
        summary_record = entry["versions"][doc["version"] - 1]
        summary = summary_from_record(summary_record)
        artifacts = run_template(
            summary,
            DatasetId(entry["dataset"]),
            gateway=state.gateway,
            model_ids=list(doc["models"]),
            strategy=Strategy(doc["strategy"]),
            embed_model_id=doc.get("embed_model"),
        )
        doc = dict(doc)
        doc["resolution_prompt"] = artifacts.resolution_prompt
        doc["outputs"] = [resolution_to_record(res) for res in artifacts.resolutions]
        doc["ensemble"] = (
            resolution_to_record(artifacts.ensemble) if artifacts.ensemble else None
        )
        doc["alignments"] = [aligned_items_to_record(rec) for rec in artifacts.alignments]
        doc["failures"] = [
            {"kind": f.kind, "detail": f.detail} for f in artifacts.failures
        ]
        if artifacts.resolutions:
            doc["status"] = "DONE"
            doc["error"] = None
        else:
            doc["status"] = "FAILED"
            doc["error"] = (
                artifacts.failures[0].detail if artifacts.failures else "no model produced output"
            )
    except Exception as exc:  # surfaced to the client, never swallowed
        doc = dict(doc)
        doc["status"] = "FAILED"
        doc["error"] = f"{type(exc).__name__}: {exc}"
    state.save_run(doc)


def _label_value(item: dict[str, Any]) -> str | None:
    return item.get("label")


def _diff_outputs(
    state: ServiceState,
    old_doc: dict[str, Any],
    new_doc: dict[str, Any],
    embed_model_id: str,
) -> dict[str, Any]:
    """Pair the two runs' items per kind and party by embedding alignment
    and report every label or text change on matched pairs."""

    def pick(doc: dict[str, Any]) -> dict[str, Any]:
        if doc.get("ensemble"):
            return doc["ensemble"]
        return doc["outputs"][0]

    old_out, new_out = pick(old_doc), pick(new_doc)
    embed_model = state.gateway.config.model(embed_model_id)
    items: list[dict[str, Any]] = []
    added: list[dict[str, Any]] = []
    removed: list[dict[str, Any]] = []
    for kind, field in (("demand", "demand_decisions"), ("argument", "argument_evaluations")):
        for party in PartyRole:
            old_items = old_out.get(field, {}).get(party.value, [])
            new_items = new_out.get(field, {}).get(party.value, [])
            if not old_items and not new_items:
                continue
            if not old_items or not new_items:
                removed.extend(
                    {"kind": kind, "party": party.value, "text": i["text"]} for i in old_items
                )
                added.extend(
                    {"kind": kind, "party": party.value, "text": i["text"]} for i in new_items
                )
                continue
            assignment = align_items(
                [i["text"] for i in old_items],
                [i["text"] for i in new_items],
                state.gateway,
                embed_model,
            )
            for row, col in assignment.pairs:
                old_item, new_item = old_items[row], new_items[col]
                items.append(
                    {
                        "kind": kind,
                        "party": party.value,
                        "old_text": old_item["text"],
                        "new_text": new_item["text"],
                        "old_label": _label_value(old_item),
                        "new_label": _label_value(new_item),
                        "label_changed": _label_value(old_item) != _label_value(new_item),
                        "text_changed": old_item["text"] != new_item["text"],
                    }
                )
            removed.extend(
                {"kind": kind, "party": party.value, "text": old_items[row]["text"]}
                for row in assignment.unmatched_rows
            )
            added.extend(
                {"kind": kind, "party": party.value, "text": new_items[col]["text"]}
                for col in assignment.unmatched_cols
            )
    return {
        "against": old_doc["run_id"],
        "stronger_party": {
            "old": old_out.get("stronger_party"),
            "new": new_out.get("stronger_party"),
            "changed": old_out.get("stronger_party") != new_out.get("stronger_party"),
        },
        "items": items,
        "added": added,
        "removed": removed,
        "label_changes": sum(1 for i in items if i["label_changed"]),
    }


def create_app(
    gateway: Gateway,
    data_dir: str | Path,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    state = ServiceState(gateway, data_dir)
    app = FastAPI(title="drassist review service", docs_url=None, redoc_url=None)
    app.state.drassist = state

    @app.exception_handler(Exception)
    async def unhandled(request: Request, exc: Exception) -> JSONResponse:
        return _problem(500, "internal_error", f"{type(exc).__name__}: {exc}")

    @app.get("/api/health")
    def health() -> dict[str, Any]:
        specs = state.gateway.config.models
        return {
            "status": "ok",
            "models": list(specs),
            "chat_models": [m for m, s in specs.items() if s.embedding_dimension is None],
            "embed_models": [m for m, s in specs.items() if s.embedding_dimension is not None],
            "disputes": len(state.disputes),
            "runs": len(state.runs),
        }

    # -- disputes -------------------------------------------------------------

    @app.get("/api/disputes")
    def list_disputes() -> dict[str, Any]:
        return {
            "disputes": [
                {
                    "dispute_id": entry["dispute_id"],
                    "dataset": entry["dataset"],
                    "latest_version": len(entry["versions"]),
                }
                for _, entry in sorted(state.disputes.items())
            ]
        }

    @app.post("/api/disputes", status_code=201)
    def create_dispute(payload: dict[str, Any] = Body(...)):
        dataset_raw = payload.get("dataset")
        try:
            dataset = DatasetId(dataset_raw)
        except ValueError:
            return _problem(422, "unknown_dataset", f"{dataset_raw!r} is not a dataset id")
        dispute_id = str(payload.get("dispute_id") or f"web-{uuid.uuid4().hex[:8]}")
        if dispute_id in state.disputes:
            return _problem(409, "duplicate_dispute", f"dispute {dispute_id!r} already exists")
        try:
            summary = summary_from_payload(payload, dispute_id, dataset)
        except _PayloadError as exc:
            return _problem(
                422, "invalid_template", "template rejected",
                findings=_findings_payload(exc.findings),
            )
        findings = validate_summary(summary, dataset)
        if findings:
            return _problem(
                422, "invalid_template", "template rejected",
                findings=_findings_payload(findings),
            )
        state.create_dispute(dispute_id, dataset, summary)
        return {"dispute_id": dispute_id, "dataset": dataset.value, "version": 1}

    @app.get("/api/disputes/{dispute_id}")
    def get_dispute(dispute_id: str):
        entry = state.disputes.get(dispute_id)
        if entry is None:
            return _problem(404, "dispute_not_found", f"no dispute {dispute_id!r}")
        return {
            "dispute_id": dispute_id,
            "dataset": entry["dataset"],
            "latest_version": len(entry["versions"]),
            "versions": [
                {"version": i + 1, "summary": record}
                for i, record in enumerate(entry["versions"])
            ],
        }

    @app.post("/api/disputes/{dispute_id}/versions", status_code=201)
    def add_version(dispute_id: str, payload: dict[str, Any] = Body(...)):
        entry = state.disputes.get(dispute_id)
        if entry is None:
            return _problem(404, "dispute_not_found", f"no dispute {dispute_id!r}")
        base = payload.get("base_version")
        if base is not None and int(base) != len(entry["versions"]):
            return _problem(
                409, "version_conflict",
                f"base_version {base} is stale; latest is {len(entry['versions'])}",
            )
        dataset = DatasetId(entry["dataset"])
        if payload.get("dataset") not in (None, dataset.value):
            return _problem(
                422, "invalid_template", "template rejected",
                findings=[{
                    "element": None, "rule": "dataset immutable",
                    "message": "a version cannot change the dispute's dataset",
                }],
            )
        try:
            summary = summary_from_payload(payload, dispute_id, dataset)
        except _PayloadError as exc:
            return _problem(
                422, "invalid_template", "template rejected",
                findings=_findings_payload(exc.findings),
            )
        findings = validate_summary(summary, dataset)
        if findings:
            return _problem(
                422, "invalid_template", "template rejected",
                findings=_findings_payload(findings),
            )
        version = state.add_version(dispute_id, summary)
        return {"dispute_id": dispute_id, "dataset": dataset.value, "version": version}

    # -- runs -----------------------------------------------------------------

    @app.post("/api/runs", status_code=202)
    def start_run(payload: dict[str, Any] = Body(...)):
        dispute_id = payload.get("dispute_id")
        entry = state.disputes.get(dispute_id)
        if entry is None:
            return _problem(404, "dispute_not_found", f"no dispute {dispute_id!r}")
        try:
            strategy = Strategy(payload.get("strategy"))
        except ValueError:
            return _problem(
                400, "unknown_strategy", f"{payload.get('strategy')!r} is not a strategy"
            )
        models = payload.get("models")
        if not isinstance(models, list) or not models:
            return _problem(400, "unknown_model", "models must be a non-empty list")
        known = set(state.gateway.config.models)
        for model_id in models:
            if model_id not in known:
                return _problem(400, "unknown_model", f"{model_id!r} is not configured")
        version = payload.get("version") or len(entry["versions"])
        if not (1 <= int(version) <= len(entry["versions"])):
            return _problem(404, "version_not_found", f"no version {version} of {dispute_id!r}")
        embed_model = payload.get("embed_model") or state.default_embed_model()
        if embed_model is not None and embed_model not in known:
            return _problem(400, "unknown_model", f"{embed_model!r} is not configured")
        run_id = f"r-{uuid.uuid4().hex[:12]}"
        doc = {
            "schema_version": SCHEMA_VERSION,
            "record_type": "run",
            "run_id": run_id,
            "dispute_id": dispute_id,
            "dataset": entry["dataset"],
            "version": int(version),
            "strategy": strategy.value,
            "models": list(models),
            "embed_model": embed_model,
            "status": "QUEUED",
            "error": None,
            "outputs": [],
            "ensemble": None,
            "alignments": [],
            "failures": [],
        }
        state.save_run(doc)
        threading.Thread(target=_execute_run, args=(state, run_id), daemon=True).start()
        return {"run_id": run_id, "status": "QUEUED"}

    @app.get("/api/runs/{run_id}")
    def get_run(run_id: str, diff_against: str | None = None):
        doc = state.runs.get(run_id)
        if doc is None:
            return _problem(404, "run_not_found", f"no run {run_id!r}")
        if diff_against is None:
            return doc
        old = state.runs.get(diff_against)
        if old is None:
            return _problem(404, "run_not_found", f"no run {diff_against!r}")
        for candidate in (doc, old):
            if candidate["status"] != "DONE" or not (
                candidate.get("ensemble") or candidate.get("outputs")
            ):
                return _problem(
                    400, "diff_unavailable",
                    f"run {candidate['run_id']!r} has no completed outputs to diff",
                )
        embed_model = doc.get("embed_model") or state.default_embed_model()
        if embed_model is None:
            return _problem(400, "diff_unavailable", "no embedding model configured")
        try:
            diff = _diff_outputs(state, old, doc, embed_model)
        except GatewayError as exc:
            return _problem(502, "provider_error", str(exc))
        merged = dict(doc)
        merged["diff"] = diff
        return merged

    # -- reports --------------------------------------------------------------

    @app.get("/api/reports/eval")
    def eval_report(dataset: str):
        try:
            ds = DatasetId(dataset)
        except ValueError:
            return _problem(400, "unknown_dataset", f"{dataset!r} is not a dataset id")
        path = state.reports_dir / f"eval_{ds.value}.csv"
        if not path.exists():
            return _problem(404, "report_missing", f"no evaluation report for {ds.value}")
        return PlainTextResponse(path.read_text(encoding="utf-8"), media_type="text/csv")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app

"""Job model and stage execution: harvest -> extract -> reconcile -> review ->
compile -> done.

Stages advance monotonically; a failed stage leaves the job resumable at the
same stage. Compilation is gated on an empty review queue.
"""
from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Optional

from .. import frontmatter, site_facts, sparql_harvester, web_harvester
from ..kg_model import EntityRef, MappingVocabulary
from ..llm_extractor import (
    HttpProvider,
    MockProvider,
    ProviderConfig,
    SourceChunk,
    extract,
)
from ..qs_compiler import DEFAULT_SCHEMA, compile_records, validate_batch
from ..reconciler import (
    EntityIndex,
    ReconcileSubject,
    Thresholds,
    resolve_batch,
)
from .config import PipelineConfig
from .store import Store, now_iso

log = logging.getLogger(__name__)

STAGES = ("harvest", "extract", "reconcile", "review", "compile", "done")

# Record kinds that carry a person/org mention needing reconciliation.
_ENTITY_TASKS = {
    "pc_members": ("name", "person"),
    "roles": ("name", "person"),
    "awards": ("person", "person"),
    "sponsors": ("org", "org"),
}


class StageOrderViolation(RuntimeError):
    pass


class ReviewGateOpen(RuntimeError):
    """Compilation requested while records still need review."""

    def __init__(self, pending: int):
        super().__init__(f"{pending} records need review")
        self.pending = pending


def job_id_for(conference_key: str) -> str:
    return f"job-{conference_key}"


def create_job(store: Store, config: PipelineConfig, config_path=None) -> dict:
    job = {
        "id": job_id_for(config.conference.key),
        "stage": "harvest",
        "conference_key": config.conference.key,
        "created_at": now_iso(),
        "counters": {},
        "error": None,
        "config_path": str(config_path) if config_path else None,
    }
    store.put_job(job)
    store.put_conference(
        config.conference.key,
        {
            "qid": config.conference.qid,
            "label": config.conference.label,
            "series": config.conference.series,
            "year": config.conference.year,
        },
    )
    return job


def artifacts_dir(store: Store, conference_key: str) -> Path:
    path = store.root / "artifacts" / conference_key
    path.mkdir(parents=True, exist_ok=True)
    return path


def _provider_for(config: PipelineConfig):
    settings = config.provider
    if settings.kind == "mock":
        if settings.replay_dir is None:
            raise ValueError("mock provider needs a replay_dir")
        return MockProvider(settings.replay_dir)
    if config.offline:
        raise RuntimeError("http provider is not available in offline mode")
    return HttpProvider(
        ProviderConfig(
            endpoint=settings.endpoint,
            model=settings.model,
            auth_env=settings.auth_env,
            shape=settings.shape,
        )
    )


def run_stage(store: Store, job_id: str, stage: str, config: PipelineConfig) -> dict:
    """Execute one stage; rejects out-of-order and repeated stages."""
    job = store.get_job(job_id)
    if job["stage"] != stage:
        raise StageOrderViolation(f"job at {job['stage']!r}, cannot run {stage!r}")
    if stage == "done":
        raise StageOrderViolation("job already complete")
    runner = {
        "harvest": _stage_harvest,
        "extract": _stage_extract,
        "reconcile": _stage_reconcile,
        "review": _stage_review,
        "compile": _stage_compile,
    }[stage]
    try:
        counters = runner(store, job, config)
    except ReviewGateOpen:
        raise
    except Exception as exc:
        store.update_job(job_id, {"error": f"{type(exc).__name__}: {exc}"})
        raise
    merged = store.get_job(job_id)["counters"]
    merged.update(counters)
    next_stage = STAGES[STAGES.index(stage) + 1]
    store.update_job(job_id, {"stage": next_stage, "counters": merged, "error": None})
    return store.get_job(job_id)


def run_until(store: Store, job_id: str, last_stage: str, config: PipelineConfig) -> dict:
    job = store.get_job(job_id)
    while job["stage"] != "done":
        stage = job["stage"]
        job = run_stage(store, job_id, stage, config)
        if stage == last_stage:
            break
    return job


# ---------------------------------------------------------------------------
# Stage bodies


def _stage_harvest(store: Store, job: dict, config: PipelineConfig) -> dict:
    counters = {}
    key = job["conference_key"]
    out = artifacts_dir(store, key)

    if config.website is not None:
        pages = harvest_web(config)
        web_harvester.write_pages_jsonl(pages, out / "pages.jsonl")
        counters["pages"] = len(pages)

    if config.frontmatter is not None:
        doc = ingest_frontmatter(config)
        with open(out / "chunks.jsonl", "w", encoding="utf-8") as fh:
            for chunk in doc.chunks:
                fh.write(json.dumps(
                    {"conference_key": key, "heading": chunk.heading, "body": chunk.body,
                     "span": list(chunk.span), "word_count": chunk.word_count,
                     "oversized": chunk.oversized, "source_url": config.frontmatter.source_url},
                    ensure_ascii=False) + "\n")
        counters["chunks"] = len(doc.chunks)

    if config.sparql is not None:
        harvest = harvest_sparql(config)
        (out / "papers.jsonl").write_text(
            "".join(json.dumps(p.__dict__, ensure_ascii=False) + "\n" for p in harvest["papers"]),
            encoding="utf-8")
        (out / "signatures.jsonl").write_text(
            "".join(json.dumps(s.__dict__, ensure_ascii=False) + "\n"
                    for s in harvest["signatures"]),
            encoding="utf-8")
        (out / "subevents.jsonl").write_text(
            "".join(json.dumps(e.__dict__, ensure_ascii=False) + "\n"
                    for e in harvest["subevents"]),
            encoding="utf-8")
        counters["papers"] = len(harvest["papers"])
        counters["signatures"] = len(harvest["signatures"])
        counters["subevents"] = len(harvest["subevents"])
        counters["flagged_papers"] = len(harvest["flagged_papers"])
    return counters


def harvest_web(config: PipelineConfig) -> list:
    w = config.website
    limits = web_harvester.CrawlLimits(
        max_pages=w.max_pages, max_depth=w.max_depth,
        per_host_delay=0.0 if w.offline_root else w.per_host_delay,
    )
    if w.offline_root is None and config.offline:
        raise RuntimeError("offline mode without an offline website root")
    return web_harvester.crawl(w.seed_url, limits=limits, offline_root=w.offline_root)


def ingest_frontmatter(config: PipelineConfig):
    fm = config.frontmatter
    raw = frontmatter.load_text_file(fm.path)
    return frontmatter.ingest(config.conference.key, raw, source_url=fm.source_url)


def harvest_sparql(config: PipelineConfig) -> dict:
    s = config.sparql
    out = {"papers": [], "signatures": [], "subevents": [], "flagged_papers": []}
    if s.dblp_endpoint or s.replay_dir:
        client = sparql_harvester.SparqlClient(
            s.dblp_endpoint, record_dir=s.record_dir, replay_dir=s.replay_dir,
            offline=config.offline,
        )
        if s.proceedings_iri:
            out["papers"] = sparql_harvester.papers_of_proceedings(client, s.proceedings_iri)
            authors = sparql_harvester.authors_of_proceedings(client, s.proceedings_iri)
            out["signatures"] = list(authors.signatures)
            out["flagged_papers"] = list(authors.flagged_papers)
    if s.scholarlydata_endpoint or s.replay_dir:
        client = sparql_harvester.SparqlClient(
            s.scholarlydata_endpoint, record_dir=s.record_dir, replay_dir=s.replay_dir,
            offline=config.offline,
        )
        if s.conference_iri:
            harvest = sparql_harvester.subevents_of_conference(
                client, s.conference_iri, config.conference.key
            )
            out["subevents"] = list(harvest.events)
    return out


def _stage_extract(store: Store, job: dict, config: PipelineConfig) -> dict:
    key = job["conference_key"]
    out = artifacts_dir(store, key)
    provider = _provider_for(config)
    vocabulary = MappingVocabulary.load(config.vocabulary_path)
    counters = {"records": 0, "parse_errors": 0}

    pages = []
    pages_path = out / "pages.jsonl"
    if pages_path.exists():
        pages = web_harvester.read_pages_jsonl(pages_path)

    doc = ingest_frontmatter(config) if config.frontmatter is not None else None

    frontmatter_tasks = {"counts", "roles", "pc_members"}
    for task in config.tasks:
        chunks = []
        if task in frontmatter_tasks and doc is not None:
            chunks = [
                SourceChunk(text=c.body, source_url=config.frontmatter.source_url, span=c.span)
                for c in frontmatter.select_chunks(doc, task)
            ]
        elif task == "deadlines" and pages:
            chunks = [
                SourceChunk(text=text, source_url=url, span=(0, len(text)))
                for text, url in web_harvester.select_chunks(pages, task)
            ]
        if not chunks:
            continue
        batch = extract(task, chunks, provider, key)
        for record in batch.records:
            store.put_record(record)
        counters["records"] += len(batch.records)
        counters["parse_errors"] += len(batch.errors)

    if pages:
        rule_records = (
            site_facts.sponsor_records(pages, key, vocabulary)
            + site_facts.award_records(pages, key, vocabulary)
            + site_facts.participant_records(pages, key)
        )
        for record in rule_records:
            store.put_record(record)
        counters["records"] += len(rule_records)
    return counters


def _stage_reconcile(store: Store, job: dict, config: PipelineConfig) -> dict:
    key = job["conference_key"]
    index = EntityIndex.load(config.reconcile.index_path)
    thresholds = Thresholds(auto=config.reconcile.auto, review=config.reconcile.review)

    subjects = []
    subject_records = {}
    for record in store.records(conference_key=key):
        mapping = _ENTITY_TASKS.get(record["task"])
        if mapping is None:
            continue
        if record["review_state"] == "rejected":
            continue
        column, kind = mapping
        name = (record.get("edited_row") or record["row"]).get(column)
        if not name:
            continue
        subjects.append(ReconcileSubject(record_id=record["id"], name=name, kind=kind))
        subject_records[record["id"]] = record

    resolutions = resolve_batch(subjects, index, thresholds, conference_key=key)
    counters = {"auto_matched": 0, "needs_link_review": 0, "new_entities": 0}
    for resolution in resolutions:
        candidate_dicts = [c.to_dict() for c in resolution.candidates]
        for record_id in resolution.record_ids:
            store.update_record_fields(record_id, {"candidates": candidate_dicts})
            if resolution.triage.outcome == "auto":
                store.apply_entity_decision(
                    record_id, "auto_matched", decided_by="reconciler",
                    target=resolution.triage.target.qid,
                )
                counters["auto_matched"] += 1
            else:
                # review and new both wait for a human; the proposed placeholder
                # for new entities is recomputed at decision time.
                record = store.get_record(record_id)
                if record["review_state"] == "auto_ok":
                    store.update_record_fields(record_id, {"review_state": "needs_review"})
                if resolution.triage.outcome == "review":
                    counters["needs_link_review"] += 1
                else:
                    counters["new_entities"] += 1
    return counters


def _stage_review(store: Store, job: dict, config: PipelineConfig) -> dict:
    """The human gate: completes only once nothing is left to review."""
    pending = store.pending_count(conference_key=job["conference_key"])
    if pending:
        raise ReviewGateOpen(pending)
    return {"pending": 0}


def _stage_compile(store: Store, job: dict, config: PipelineConfig) -> dict:
    batch = compile_job(store, job["id"], config)
    return {"batch_id": batch["id"], "lines": len(batch["lines"]),
            "statements": batch["stats"]["statements"]}


def compile_job(store: Store, job_id: str, config: PipelineConfig) -> dict:
    """Compile a job's approved records into a stored batch + .qs file."""
    job = store.get_job(job_id)
    key = job["conference_key"]
    pending = store.pending_count(conference_key=key)
    if pending:
        raise ReviewGateOpen(pending)

    vocabulary = MappingVocabulary.load(config.vocabulary_path)
    schema = DEFAULT_SCHEMA
    if config.schema_path is not None:
        schema = json.loads(Path(config.schema_path).read_text(encoding="utf-8"))
    subjects = {key: EntityRef.resolved(config.conference.qid)}
    records = store.compilable_records(conference_key=key)
    batch = compile_records(records, schema, vocabulary, subjects)

    report = validate_batch(batch, vocabulary)
    if not report.ok:
        raise RuntimeError(f"compiled batch failed validation: {report.violations[:3]}")

    digest = hashlib.sha1("\n".join(batch.lines).encode("utf-8")).hexdigest()[:12]
    batch_id = f"{key}-{digest}"
    stored = store.put_batch(batch_id, job_id, list(batch.lines), batch.stats)
    out = artifacts_dir(store, key) / f"{batch_id}.qs"
    batch.write(out)
    return stored


def validate_edited_row(task: str, row: dict) -> Optional[str]:
    """Sanity checks for curator edits; returns an error message or None."""
    if task == "counts":
        try:
            submitted = int(row["submitted"]) if row.get("submitted") not in (None, "", "-") else None
            accepted = int(row["accepted"]) if row.get("accepted") not in (None, "", "-") else None
        except (KeyError, ValueError):
            return "submitted/accepted must be integers or absent"
        if submitted is not None and submitted < 0 or accepted is not None and accepted < 0:
            return "counts must be non-negative"
        if submitted is not None and accepted is not None and accepted > submitted:
            return "accepted exceeds submitted"
    if task == "deadlines":
        from ..llm_extractor import parse_iso_date, parse_named_date

        raw = row.get("date")
        if raw and parse_iso_date(raw) is None and parse_named_date(raw) is None:
            return f"unparseable date {raw!r}"
    return None

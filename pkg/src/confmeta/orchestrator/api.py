"""HTTP API for the curation UI and batch export.

Reads are open; every mutation requires the static token in X-Auth-Token.
Decisions carry the record version for optimistic concurrency: a stale
version gets 409 with the fresh record so the client can re-render.
"""
from __future__ import annotations

import os
import threading
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Query
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..reconciler import RecordFinalized, UnknownRecord, placeholder_id
from . import pipeline, report
from .config import PipelineConfig
from .store import StaleVersion, Store

TOKEN_ENV = "CONFMETA_TOKEN"


class JobCreate(BaseModel):
    conference_key: str
    config_path: str
    run_through: Optional[str] = None  # run stages up to here in the background
    sync: bool = False


class DecisionBody(BaseModel):
    action: str  # approve | reject | edit | link | new_entity
    version: int
    decided_by: str = "curator"
    row: Optional[dict] = None
    candidate_qid: Optional[str] = None


class BatchCreate(BaseModel):
    job_id: str


def create_app(store: Store, token: Optional[str] = None,
               config_root: Optional[Path] = None,
               ui_dist: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="confmeta", version="0.1.0")
    expected_token = token if token is not None else os.environ.get(TOKEN_ENV, "")
    config_root = Path(config_root) if config_root else Path.cwd()

    def require_token(x_auth_token: str = Header(default="")):
        if not expected_token or x_auth_token != expected_token:
            raise HTTPException(status_code=401, detail="bad or missing X-Auth-Token")

    def load_config(path_str: str) -> PipelineConfig:
        path = Path(path_str)
        if not path.is_absolute():
            path = config_root / path
        if not path.exists():
            raise HTTPException(status_code=400, detail=f"no config at {path}")
        return PipelineConfig.load(path)

    @app.get("/api/jobs")
    def list_jobs():
        return {"jobs": store.jobs()}

    @app.post("/api/jobs", dependencies=[Depends(require_token)])
    def create_job(body: JobCreate):
        config = load_config(body.config_path)
        if config.conference.key != body.conference_key:
            raise HTTPException(status_code=400, detail="conference_key mismatch")
        job = pipeline.create_job(store, config, config_path=body.config_path)
        if body.run_through:
            if body.sync:
                _run(store, job["id"], body.run_through, config)
            else:
                thread = threading.Thread(
                    target=_run, args=(store, job["id"], body.run_through, config), daemon=True
                )
                thread.start()
        return {"job": store.get_job(job["id"])}

    @app.get("/api/queue")
    def queue(state: str = Query(default="needs_review"),
              task: Optional[str] = None,
              conference: Optional[str] = None,
              limit: int = Query(default=50, ge=1, le=500),
              offset: int = Query(default=0, ge=0)):
        wanted = None if state in ("", "all") else state
        items = store.records(conference_key=conference, task=task, state=wanted)
        if wanted is None:
            order = {"needs_review": 0, "auto_ok": 1, "approved": 2, "edited": 3, "rejected": 4}
            items.sort(key=lambda r: (order.get(r["review_state"], 9), r["id"]))
        return {"total": len(items), "items": items[offset:offset + limit]}

    @app.get("/api/records/{record_id}")
    def get_record(record_id: str):
        try:
            return {"record": store.get_record(record_id)}
        except UnknownRecord:
            raise HTTPException(status_code=404, detail=record_id) from None

    @app.post("/api/records/{record_id}/decision", dependencies=[Depends(require_token)])
    def decide(record_id: str, body: DecisionBody):
        try:
            if body.action in ("approve", "reject", "edit"):
                if body.action == "edit":
                    if body.row is None:
                        raise HTTPException(status_code=422, detail="edit needs a row")
                    record = store.get_record(record_id)
                    problem = pipeline.validate_edited_row(record["task"], body.row)
                    if problem:
                        raise HTTPException(status_code=422, detail=problem)
                record = store.apply_review_decision(
                    record_id, body.action, body.decided_by,
                    edited_row=body.row, expected_version=body.version,
                )
            elif body.action == "link":
                if not body.candidate_qid:
                    raise HTTPException(status_code=422, detail="link needs candidate_qid")
                record = store.apply_entity_decision(
                    record_id, "human_linked", body.decided_by,
                    target=body.candidate_qid, expected_version=body.version,
                )
            elif body.action == "new_entity":
                current = store.get_record(record_id)
                row = current.get("edited_row") or current["row"]
                name = row.get("name") or row.get("org") or row.get("person") or record_id
                record = store.apply_entity_decision(
                    record_id, "human_new", body.decided_by,
                    placeholder=placeholder_id(name, current["conference_key"]),
                    expected_version=body.version,
                )
            else:
                raise HTTPException(status_code=422, detail=f"unknown action {body.action!r}")
        except UnknownRecord:
            raise HTTPException(status_code=404, detail=record_id) from None
        except StaleVersion:
            return JSONResponse(
                status_code=409,
                content={"conflict": "stale version", "record": store.get_record(record_id)},
            )
        except RecordFinalized:
            return JSONResponse(
                status_code=409,
                content={"conflict": "already finalized", "record": store.get_record(record_id)},
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return {"record": record}

    @app.post("/api/batches", dependencies=[Depends(require_token)])
    def make_batch(body: BatchCreate):
        try:
            job = store.get_job(body.job_id)
        except UnknownRecord:
            raise HTTPException(status_code=404, detail=body.job_id) from None
        config_path = job.get("config_path")
        if not config_path:
            raise HTTPException(status_code=400, detail="job has no config_path")
        config = load_config(config_path)
        try:
            if job["stage"] in ("review", "compile"):
                pipeline.run_until(store, job["id"], "compile", config)
                job = store.get_job(body.job_id)
                batch_id = job["counters"]["batch_id"]
                batch = store.get_batch(batch_id)
            elif job["stage"] == "done":
                batch = pipeline.compile_job(store, body.job_id, config)
            else:
                raise HTTPException(
                    status_code=409,
                    detail=f"job at stage {job['stage']!r}, not ready to compile",
                )
        except pipeline.ReviewGateOpen as exc:
            return JSONResponse(status_code=409, content={"pending": exc.pending})
        return {"batch_id": batch["id"], "stats": batch["stats"]}

    @app.get("/api/batches/{batch_id}.qs")
    def get_batch(batch_id: str):
        try:
            batch = store.get_batch(batch_id)
        except UnknownRecord:
            raise HTTPException(status_code=404, detail=batch_id) from None
        text = "\n".join(batch["lines"]) + "\n" if batch["lines"] else ""
        return PlainTextResponse(text, media_type="text/plain; charset=utf-8")

    @app.get("/api/report")
    def get_report(series: str = "", metric: str = "acceptance_rate"):
        try:
            csv_text = report.report_csv(store, series, metric)
        except KeyError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return PlainTextResponse(csv_text, media_type="text/csv; charset=utf-8")

    if ui_dist and Path(ui_dist).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dist), html=True), name="ui")

    return app


def _run(store: Store, job_id: str, last_stage: str, config: PipelineConfig):
    try:
        pipeline.run_until(store, job_id, last_stage, config)
    except pipeline.ReviewGateOpen:
        pass  # job parked at the review gate; curators take over
    except Exception as exc:  # noqa: BLE001 - surfaced via job.error
        try:
            store.update_job(job_id, {"error": f"{type(exc).__name__}: {exc}"})
        except Exception:
            pass

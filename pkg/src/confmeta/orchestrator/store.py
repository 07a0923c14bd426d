"""Append-only write-ahead-log store with periodic snapshots.

Every mutation is one fsynced JSON line; replaying the log over the last
snapshot reproduces the exact state, so a crash between stages loses nothing.
A single lock serializes writers; readers get plain dict snapshots.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from ..llm_extractor import COMPILE_STATES, ExtractionRecord, transition_review_state
from ..reconciler import RecordFinalized, UnknownRecord


class StoreLocked(RuntimeError):
    pass


def now_iso() -> str:
    fixed = os.environ.get("CONFMETA_FIXED_TIME")
    if fixed:
        return fixed
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _empty_state() -> dict:
    return {
        "records": {},
        "decisions": [],
        "batches": {},
        "jobs": {},
        "conferences": {},
    }


class Store:
    """Single-writer store over wal.jsonl + snapshot.json in one directory."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.wal_path = self.root / "wal.jsonl"
        self.snapshot_path = self.root / "snapshot.json"
        self._lock = threading.RLock()
        self._wal_lines = 0
        self.state = _empty_state()
        self._load()

    # -- persistence --------------------------------------------------------

    def _load(self):
        applied = 0
        if self.snapshot_path.exists():
            snap = json.loads(self.snapshot_path.read_text(encoding="utf-8"))
            self.state = snap["state"]
            applied = snap["wal_lines_applied"]
        self._wal_lines = applied
        if self.wal_path.exists():
            lines = self.wal_path.read_text(encoding="utf-8").splitlines()
            for i, line in enumerate(lines):
                if i < applied or not line.strip():
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError:
                    if i == len(lines) - 1:
                        break  # torn final write from a crash; drop it
                    raise
                self._apply(event)
                self._wal_lines = i + 1

    # snapshot every this-many WAL lines to bound replay time
    CHECKPOINT_EVERY = 500

    def _append(self, event: dict):
        with self._lock:
            line = json.dumps(event, sort_keys=True, ensure_ascii=False)
            with open(self.wal_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._apply(event)
            self._wal_lines += 1
            if self._wal_lines % self.CHECKPOINT_EVERY == 0:
                self.checkpoint()

    def checkpoint(self):
        with self._lock:
            payload = {"state": self.state, "wal_lines_applied": self._wal_lines}
            tmp = self.snapshot_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(payload, sort_keys=True, ensure_ascii=False),
                           encoding="utf-8")
            tmp.replace(self.snapshot_path)

    def state_hash(self) -> str:
        with self._lock:
            canonical = json.dumps(self.state, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    # -- event application ----------------------------------------------------

    def _apply(self, event: dict):
        op = event["op"]
        if op == "put_record":
            record = event["record"]
            self.state["records"][record["id"]] = record
        elif op == "update_record":
            record = self.state["records"][event["id"]]
            record.update(event["fields"])
            record["version"] = record.get("version", 0) + 1
        elif op == "decision":
            self.state["decisions"].append(event["decision"])
        elif op == "put_batch":
            self.state["batches"][event["batch"]["id"]] = event["batch"]
        elif op == "put_job":
            self.state["jobs"][event["job"]["id"]] = event["job"]
        elif op == "update_job":
            self.state["jobs"][event["id"]].update(event["fields"])
        elif op == "put_conference":
            self.state["conferences"][event["key"]] = event["meta"]
        else:
            raise ValueError(f"unknown wal op {op!r}")

    # -- records ---------------------------------------------------------------

    def put_record(self, record: ExtractionRecord):
        with self._lock:
            existing = self.state["records"].get(record.id)
            if existing is not None:
                # Idempotent re-extraction: keep human outcomes intact.
                if existing["review_state"] not in ("auto_ok", "needs_review"):
                    return
                merged = record.to_dict()
                merged["version"] = existing.get("version", 0)
                if merged != existing:
                    self._append(
                        {"op": "update_record", "id": record.id,
                         "fields": {k: v for k, v in merged.items() if k != "version"}}
                    )
                return
            self._append({"op": "put_record", "record": record.to_dict()})

    def get_record(self, record_id: str) -> dict:
        with self._lock:
            record = self.state["records"].get(record_id)
            if record is None:
                raise UnknownRecord(record_id)
            return json.loads(json.dumps(record))

    def records(self, conference_key: Optional[str] = None, task: Optional[str] = None,
                state: Optional[str] = None) -> list:
        with self._lock:
            out = []
            for record in self.state["records"].values():
                if conference_key and record["conference_key"] != conference_key:
                    continue
                if task and record["task"] != task:
                    continue
                if state and record["review_state"] != state:
                    continue
                out.append(json.loads(json.dumps(record)))
            out.sort(key=lambda r: r["id"])
            return out

    def pending_count(self, conference_key: Optional[str] = None) -> int:
        return len(self.records(conference_key=conference_key, state="needs_review"))

    def update_record_fields(self, record_id: str, fields: dict):
        with self._lock:
            if record_id not in self.state["records"]:
                raise UnknownRecord(record_id)
            self._append({"op": "update_record", "id": record_id, "fields": fields})

    # -- review / reconciliation decisions --------------------------------------

    def apply_review_decision(self, record_id: str, action: str, decided_by: str,
                              edited_row: Optional[dict] = None,
                              expected_version: Optional[int] = None) -> dict:
        """approve | reject | edit; appends the audit entry and flips the state."""
        with self._lock:
            record = self.state["records"].get(record_id)
            if record is None:
                raise UnknownRecord(record_id)
            if expected_version is not None and record.get("version", 0) != expected_version:
                raise StaleVersion(record_id)
            target_state = {"approve": "approved", "reject": "rejected", "edit": "edited"}[action]
            transition_review_state(record["review_state"], target_state)
            fields = {"review_state": target_state}
            if action == "edit":
                if edited_row is None:
                    raise ValueError("edit decision needs a row")
                fields["edited_row"] = edited_row
            self._append({"op": "update_record", "id": record_id, "fields": fields})
            self._append(
                {"op": "decision",
                 "decision": {
                     "record_id": record_id, "action": action,
                     "edited_row": edited_row,
                     "decided_by": decided_by, "decided_at": now_iso(),
                 }}
            )
            return self.get_record(record_id)

    ENTITY_OUTCOMES = ("auto_matched", "human_linked", "human_new", "human_rejected")

    def apply_entity_decision(self, record_id: str, outcome: str, decided_by: str,
                              target: Optional[str] = None,
                              placeholder: Optional[str] = None,
                              expected_version: Optional[int] = None) -> dict:
        """Record one reconciliation outcome; a second one raises RecordFinalized.

        ``target`` is the linked QID for auto_matched/human_linked; human_new
        assigns ``placeholder`` to the record but the audit entry carries no
        target.
        """
        if outcome not in self.ENTITY_OUTCOMES:
            raise ValueError(f"bad outcome {outcome!r}")
        with self._lock:
            record = self.state["records"].get(record_id)
            if record is None:
                raise UnknownRecord(record_id)
            if expected_version is not None and record.get("version", 0) != expected_version:
                raise StaleVersion(record_id)
            if any(d["record_id"] == record_id and d["action"] in self.ENTITY_OUTCOMES
                   for d in self.state["decisions"]):
                raise RecordFinalized(record_id)
            fields = {}
            if outcome in ("auto_matched", "human_linked"):
                if not target:
                    raise ValueError(f"{outcome} needs a target")
                fields["entity"] = target
            elif outcome == "human_new":
                if not placeholder:
                    raise ValueError("human_new needs a placeholder id")
                fields["entity"] = placeholder
            if outcome == "human_rejected":
                fields["review_state"] = "rejected"
            elif outcome in ("human_linked", "human_new"):
                if record["review_state"] == "needs_review" and _grounding_clean(record):
                    fields["review_state"] = "auto_ok"
            if fields:
                self._append({"op": "update_record", "id": record_id, "fields": fields})
            self._append(
                {"op": "decision",
                 "decision": {
                     "record_id": record_id, "action": outcome,
                     "target": target if outcome in ("auto_matched", "human_linked") else None,
                     "decided_by": decided_by, "decided_at": now_iso(),
                 }}
            )
            return self.get_record(record_id)

    # -- batches / jobs / conferences ------------------------------------------

    def put_batch(self, batch_id: str, job_id: str, lines: list, stats: dict) -> dict:
        batch = {"id": batch_id, "job_id": job_id, "lines": list(lines), "stats": stats,
                 "created_at": now_iso()}
        self._append({"op": "put_batch", "batch": batch})
        return batch

    def get_batch(self, batch_id: str) -> dict:
        with self._lock:
            batch = self.state["batches"].get(batch_id)
            if batch is None:
                raise UnknownRecord(batch_id)
            return json.loads(json.dumps(batch))

    def put_job(self, job: dict):
        self._append({"op": "put_job", "job": job})

    def update_job(self, job_id: str, fields: dict):
        with self._lock:
            if job_id not in self.state["jobs"]:
                raise UnknownRecord(job_id)
            self._append({"op": "update_job", "id": job_id, "fields": fields})

    def get_job(self, job_id: str) -> dict:
        with self._lock:
            job = self.state["jobs"].get(job_id)
            if job is None:
                raise UnknownRecord(job_id)
            return json.loads(json.dumps(job))

    def jobs(self) -> list:
        with self._lock:
            return sorted(
                (json.loads(json.dumps(j)) for j in self.state["jobs"].values()),
                key=lambda j: j["id"],
            )

    def put_conference(self, key: str, meta: dict):
        self._append({"op": "put_conference", "key": key, "meta": meta})

    def conferences(self) -> dict:
        with self._lock:
            return json.loads(json.dumps(self.state["conferences"]))

    def compilable_records(self, conference_key: Optional[str] = None) -> list:
        return [r for r in self.records(conference_key=conference_key)
                if r["review_state"] in COMPILE_STATES]


class StaleVersion(RuntimeError):
    """Optimistic-concurrency conflict: the record changed under the client."""


def _grounding_clean(record: dict) -> bool:
    return all(v != "ungrounded" for v in record.get("grounding", {}).values())

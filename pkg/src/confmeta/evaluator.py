"""Micro P/R/F1 scoring of extraction output against hand-built gold CSVs.

Items are pooled across documents per (task, series). Gold items flagged as
not present in the source text never count as false negatives: the system is
not penalized for skipping facts it could not have read.
"""
from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .kg_model import normalize_track_label
from .llm_extractor import ExtractionRecord, parse_iso_date, parse_named_date
from .reconciler import normalize_name


class TaskMismatch(ValueError):
    pass


class GoldFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GoldItem:
    task: str
    conference_key: str
    key: tuple
    in_text: bool = True
    note: str = ""

    def __post_init__(self):
        if not all(self.key):
            raise GoldFormatError(f"empty key field in {self.key}")
        if not self.in_text and not self.note:
            raise GoldFormatError(f"in_text=false item needs a reason note: {self.key}")


@dataclass(frozen=True)
class ScoreReport:
    task: str
    series: str
    model: str
    source: str
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


def micro_prf(tp: int, fp: int, fn: int) -> tuple:
    """(precision, recall, f1); empty denominators count as perfect."""
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be non-negative")
    precision = tp / (tp + fp) if (tp + fp) else 1.0
    recall = tp / (tp + fn) if (tp + fn) else 1.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return precision, recall, f1


# ---------------------------------------------------------------------------
# Item keys
#
# counts rows expand into one item per filled value field (submitted and
# accepted are scored separately); the other tasks are one item per row.

_PC_ROLES = {"pc": "PC", "spc": "SPC"}


def _norm_role(raw: str) -> str:
    key = raw.strip().lower()
    return _PC_ROLES.get(key, key)


def _norm_date(raw: str) -> str:
    when = parse_iso_date(raw) or parse_named_date(raw)
    return when.isoformat() if when else raw.strip()


def record_items(record: ExtractionRecord) -> list:
    """(conference_key, task-specific key tuple) items for one record row."""
    row = record.effective_row()
    return row_items(record.task, record.conference_key, row)


def row_items(task: str, conference_key: str, row: dict) -> list:
    items = []
    if task == "counts":
        track = normalize_track_label(row.get("track") or "")
        for fieldname in ("submitted", "accepted"):
            value = row.get(fieldname)
            if value not in (None, "", "-"):
                items.append((conference_key, track, fieldname, str(int(str(value)))))
    elif task == "roles":
        items.append(
            (conference_key, normalize_name(row.get("name") or ""), _norm_role(row.get("role") or ""))
        )
    elif task == "pc_members":
        items.append(
            (
                conference_key,
                normalize_name(row.get("name") or ""),
                normalize_track_label(row.get("track") or ""),
                _norm_role(row.get("role") or ""),
            )
        )
    elif task == "deadlines":
        items.append(
            (conference_key, (row.get("kind") or "").strip().lower(), _norm_date(row.get("date") or ""))
        )
    else:
        raise TaskMismatch(task)
    return items


_GOLD_COLUMNS = {
    "counts": ("conference_key", "track", "submitted", "accepted", "in_text", "note"),
    "roles": ("conference_key", "name", "role", "in_text", "note"),
    "pc_members": ("conference_key", "name", "track", "role", "in_text", "note"),
    "deadlines": ("conference_key", "kind", "date", "in_text", "note"),
}

_FALSELIKE = {"false", "0", "no", "n"}


def load_gold(gold_dir, task: str) -> list:
    """Parse gold/<task>.csv into expanded GoldItems."""
    columns = _GOLD_COLUMNS.get(task)
    if columns is None:
        raise TaskMismatch(task)
    path = Path(gold_dir) / f"{task}.csv"
    if not path.exists():
        return []
    items = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        got = tuple(name.strip() for name in reader.fieldnames or ())
        if got != columns:
            raise GoldFormatError(f"{path}: header {got} != {columns}")
        for row in reader:
            in_text = row["in_text"].strip().lower() not in _FALSELIKE
            note = row.get("note", "").strip()
            conference_key = row["conference_key"].strip()
            value_row = {k: (v.strip() or None) for k, v in row.items()
                         if k not in ("conference_key", "in_text", "note")}
            for key in row_items(task, conference_key, value_row):
                items.append(
                    GoldItem(task=task, conference_key=conference_key, key=key,
                             in_text=in_text, note=note)
                )
    return items


@dataclass
class AlignDetail:
    matched: list = field(default_factory=list)
    spurious: list = field(default_factory=list)
    missed: list = field(default_factory=list)
    waived: list = field(default_factory=list)  # gold not in text, not extracted


def align(extracted: Iterable, gold: Iterable, task: str) -> tuple:
    """(tp, fp, fn, detail) over key-tuple items.

    ``extracted`` holds ExtractionRecords (or their key items); ``gold`` holds
    GoldItems. Gold items with in_text=false never count as false negatives.
    """
    extracted_keys = set()
    for entry in extracted:
        if isinstance(entry, ExtractionRecord):
            if entry.task != task:
                raise TaskMismatch(f"record {entry.id} is {entry.task}, not {task}")
            extracted_keys.update(record_items(entry))
        else:
            extracted_keys.add(tuple(entry))

    gold_by_key = {}
    for item in gold:
        if item.task != task:
            raise TaskMismatch(f"gold item {item.key} is {item.task}, not {task}")
        gold_by_key[item.key] = item

    detail = AlignDetail()
    for key in sorted(extracted_keys):
        if key in gold_by_key:
            detail.matched.append(key)
        else:
            detail.spurious.append(key)
    for key, item in sorted(gold_by_key.items()):
        if key in extracted_keys:
            continue
        if item.in_text:
            detail.missed.append(key)
        else:
            detail.waived.append(key)
    return len(detail.matched), len(detail.spurious), len(detail.missed), detail


def series_of(conference_key: str) -> str:
    m = re.match(r"([a-z]+)", conference_key.lower())
    return m.group(1) if m else conference_key


def evaluate(records: list, gold_dir, tasks: Optional[list] = None) -> list:
    """ScoreReports per (task, series, model), pooled micro counts."""
    tasks = tasks or sorted(_GOLD_COLUMNS)
    reports = []
    for task in tasks:
        gold = load_gold(gold_dir, task)
        task_records = [r for r in records if r.task == task]
        models = {r.model or "unknown" for r in task_records} or {"unknown"}
        series_set = {series_of(r.conference_key) for r in task_records} | {
            series_of(g.conference_key) for g in gold
        }
        combos = sorted((s, m) for s in series_set for m in models)
        for series, model in combos:
            sub_records = [
                r for r in task_records
                if series_of(r.conference_key) == series and (r.model or "unknown") == model
            ]
            sub_gold = [g for g in gold if series_of(g.conference_key) == series]
            if not sub_records and not sub_gold:
                continue
            tp, fp, fn, _ = align(sub_records, sub_gold, task)
            precision, recall, f1 = micro_prf(tp, fp, fn)
            reports.append(
                ScoreReport(
                    task=task, series=series, model=model,
                    source="website" if task == "deadlines" else "frontmatter",
                    tp=tp, fp=fp, fn=fn,
                    precision=precision, recall=recall, f1=f1,
                )
            )
    return reports


def format_report(reports: list) -> str:
    """Fixed-width table, one row per (task, source, model), P/R/F1 per series."""
    series_keys = sorted({r.series for r in reports})
    header = ["task", "source", "model"]
    for series in series_keys:
        header += [f"{series}-P", f"{series}-R", f"{series}-F1"]
    rows = [header]
    combos = sorted({(r.task, r.source, r.model) for r in reports})
    for task, source, model in combos:
        row = [task, source, model]
        for series in series_keys:
            hit = next(
                (r for r in reports
                 if (r.task, r.source, r.model, r.series) == (task, source, model, series)),
                None,
            )
            if hit is None:
                row += ["-", "-", "-"]
            else:
                row += [f"{hit.precision:.2f}", f"{hit.recall:.2f}", f"{hit.f1:.2f}"]
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"


def report_json(reports: list) -> str:
    payload = [
        {
            "task": r.task, "series": r.series, "model": r.model, "source": r.source,
            "tp": r.tp, "fp": r.fp, "fn": r.fn,
            "precision": round(r.precision, 4),
            "recall": round(r.recall, 4),
            "f1": round(r.f1, 4),
        }
        for r in reports
    ]
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"

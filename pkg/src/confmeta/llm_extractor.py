"""Prompt rendering, provider calls, CSV parsing, and grounding checks.

Grounding guards against the model injecting facts from its pre-trained
knowledge: a cell only counts as grounded when its content can be located in
the exact source chunk that was sent to the provider. Any ungrounded cell
forces the record into the human review queue.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Iterable, Optional

from .keywords import EXTRACTION_TASKS
from .prompts import EXPECTED_HEADERS, SENTINEL, SYSTEM_TEMPLATE, UnknownTask, human_template

GROUNDED = "grounded"
UNGROUNDED = "ungrounded"
NOT_APPLICABLE = "not_applicable"

REVIEW_STATES = ("auto_ok", "needs_review", "approved", "rejected", "edited")
OPEN_STATES = ("auto_ok", "needs_review")
COMPILE_STATES = ("auto_ok", "approved", "edited")

# Cell kinds drive the grounding rule per column.
#   numeric  - digit string must occur as a token
#   name     - case-folded substring match
#   date     - day, year, and month name must all occur
#   category - label assigned by the model, not checked against the text
COLUMN_KINDS = {
    "counts": {"track": "name", "submitted": "numeric", "accepted": "numeric"},
    "roles": {"name": "name", "role": "category"},
    "pc_members": {"name": "name", "track": "name", "role": "category"},
    "deadlines": {"kind": "category", "date": "date"},
    # Record kinds produced by the structured-markup path are grounded by
    # construction and use these kinds for completeness.
    "sponsors": {"org": "name", "level": "category"},
    "awards": {"person": "name", "kind": "category"},
    "participants": {"count": "numeric"},
}


class MissingSentinel(ValueError):
    pass


class HeaderMismatch(ValueError):
    pass


class RaggedRow(ValueError):
    pass


class ProviderError(RuntimeError):
    pass


@dataclass(frozen=True)
class PromptPair:
    system: str
    human: str
    task: str
    shot_count: int = 2


def render_prompt(task: str, source_text: str) -> PromptPair:
    """The task's system+human messages with the source substituted once."""
    if task not in EXPECTED_HEADERS:
        raise UnknownTask(task)
    if not source_text:
        raise ValueError("source_text must be non-empty")
    template = human_template(task)
    assert template.count("{preface_text}") == 1
    human = template.replace("{preface_text}", source_text)
    return PromptPair(system=SYSTEM_TEMPLATE, human=human, task=task, shot_count=2)


# ---------------------------------------------------------------------------
# Output parsing

_MONTHS = {
    name: i + 1
    for i, name in enumerate(
        ("january", "february", "march", "april", "may", "june", "july",
         "august", "september", "october", "november", "december")
    )
}
_MONTH_ABBREV = {name[:3]: num for name, num in _MONTHS.items()}

_NAMED_DATE_RES = (
    # 9 May 2023 / 9 May, 2023
    re.compile(r"^(\d{1,2})\s+([A-Za-z]+)\.?,?\s+(\d{4})$"),
    # May 9, 2023 / May 9 2023
    re.compile(r"^([A-Za-z]+)\.?\s+(\d{1,2}),?\s+(\d{4})$"),
)
_ISO_DATE_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")


def _month_number(name: str) -> Optional[int]:
    key = name.lower()
    return _MONTHS.get(key) or _MONTH_ABBREV.get(key[:3] if len(key) >= 3 else key)


def parse_named_date(raw: str) -> Optional[date]:
    """Parse a named-month date ("9 May 2023", "May 9, 2023") or ISO date."""
    text = raw.strip()
    m = _ISO_DATE_RE.match(text)
    if m:
        try:
            return date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
        except ValueError:
            return None
    for pattern in _NAMED_DATE_RES:
        m = pattern.match(text)
        if not m:
            continue
        a, b, year = m.groups()
        if a.isdigit():
            day, month_name = int(a), b
        else:
            day, month_name = int(b), a
        month = _month_number(month_name)
        if month is None:
            continue
        try:
            return date(int(year), month, day)
        except ValueError:
            return None
    return None


def parse_iso_date(raw: str) -> Optional[date]:
    m = _ISO_DATE_RE.match(raw.strip())
    if not m:
        return None
    try:
        return date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    except ValueError:
        return None


def parse_output(raw_llm_text: str, task: str) -> list:
    """Parse the CSV block up to the sentinel into row maps.

    "-" cells parse as absent (None). Deadline dates are normalized to ISO at
    parse time; an unrecognized date is kept verbatim for the curator to fix.
    Header mismatch or a ragged row aborts the whole response.
    """
    header = EXPECTED_HEADERS.get(task)
    if header is None:
        raise UnknownTask(task)
    lines = raw_llm_text.splitlines()
    sentinel_at = next((i for i, ln in enumerate(lines) if ln.strip() == SENTINEL), None)
    if sentinel_at is None:
        raise MissingSentinel(f"no {SENTINEL!r} line in response")
    content = [ln for ln in lines[:sentinel_at] if ln.strip()]
    if not content:
        return []
    head_cells = tuple(cell.strip() for cell in content[0].split(","))
    if head_cells != header:
        raise HeaderMismatch(f"expected {header}, got {head_cells}")
    rows = []
    for line in content[1:]:
        cells = [cell.strip() for cell in line.split(",")]
        if len(cells) != len(header):
            raise RaggedRow(line)
        row = {}
        for column, cell in zip(header, cells):
            if cell in ("-", "–", "—", ""):
                row[column] = None
            else:
                row[column] = cell
        if task == "deadlines" and row.get("date"):
            parsed = parse_named_date(row["date"])
            if parsed is not None:
                row["date"] = parsed.isoformat()
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Grounding

_WS_RE = re.compile(r"\s+")


def _fold(text: str) -> str:
    return _WS_RE.sub(" ", text).casefold()


def _digits_grounded(value: str, text: str) -> bool:
    digits = value.strip()
    if not re.fullmatch(r"\d+(?:\.\d+)?", digits):
        return False
    return re.search(rf"(?<![\d.]){re.escape(digits)}(?![\d.])", text) is not None


def _date_grounded(value: str, text: str) -> bool:
    when = parse_iso_date(value) or parse_named_date(value)
    if when is None:
        return False
    folded = text.casefold()
    month_name = [k for k, v in _MONTHS.items() if v == when.month][0]
    if month_name not in folded and month_name[:3] not in folded:
        # tolerate a numeric month only when the full ISO form is present
        if when.isoformat() not in folded:
            return False
    day_ok = re.search(rf"(?<!\d){when.day}(?!\d)", text) is not None
    year_ok = re.search(rf"(?<!\d){when.year}(?!\d)", text) is not None
    return day_ok and year_ok


def ground_check(rows: list, source_text: str, task: str) -> list:
    """Per-row column -> grounded/ungrounded/not_applicable maps."""
    kinds = COLUMN_KINDS.get(task, {})
    folded_text = _fold(source_text)
    out = []
    for row in rows:
        verdicts = {}
        for column, value in row.items():
            kind = kinds.get(column, "name")
            if value is None or kind == "category":
                verdicts[column] = NOT_APPLICABLE
            elif kind == "numeric":
                verdicts[column] = GROUNDED if _digits_grounded(value, source_text) else UNGROUNDED
            elif kind == "date":
                verdicts[column] = GROUNDED if _date_grounded(value, source_text) else UNGROUNDED
            else:
                verdicts[column] = GROUNDED if _fold(value) in folded_text else UNGROUNDED
        out.append(verdicts)
    return out


# ---------------------------------------------------------------------------
# Records


@dataclass(frozen=True)
class ExtractionRecord:
    id: str
    task: str
    conference_key: str
    source_url: str
    chunk_span: tuple
    row: dict
    grounding: dict
    review_state: str = "auto_ok"
    edited_row: Optional[dict] = None
    entity: Optional[str] = None  # resolved QID or "new-…" placeholder
    candidates: tuple = ()
    snippet: str = ""
    model: str = ""
    version: int = 0

    def effective_row(self) -> dict:
        return self.edited_row if self.edited_row is not None else self.row

    def entity_ref(self):
        from .kg_model import EntityRef, QID_RE

        if self.entity is None:
            return None
        if QID_RE.match(self.entity):
            return EntityRef.resolved(self.entity)
        return EntityRef.placeholder(self.entity)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "task": self.task,
            "conference_key": self.conference_key,
            "source_url": self.source_url,
            "chunk_span": list(self.chunk_span),
            "row": dict(self.row),
            "grounding": dict(self.grounding),
            "review_state": self.review_state,
            "edited_row": dict(self.edited_row) if self.edited_row is not None else None,
            "entity": self.entity,
            "candidates": [dict(c) for c in self.candidates],
            "snippet": self.snippet,
            "model": self.model,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ExtractionRecord":
        return cls(
            id=raw["id"],
            task=raw["task"],
            conference_key=raw["conference_key"],
            source_url=raw.get("source_url", ""),
            chunk_span=tuple(raw.get("chunk_span", (0, 0))),
            row=dict(raw["row"]),
            grounding=dict(raw.get("grounding", {})),
            review_state=raw.get("review_state", "auto_ok"),
            edited_row=dict(raw["edited_row"]) if raw.get("edited_row") else None,
            entity=raw.get("entity"),
            candidates=tuple(dict(c) for c in raw.get("candidates", ())),
            snippet=raw.get("snippet", ""),
            model=raw.get("model", ""),
            version=raw.get("version", 0),
        )


def record_id(task: str, conference_key: str, row: dict) -> str:
    canonical = json.dumps(row, sort_keys=True, ensure_ascii=False)
    digest = hashlib.sha1(f"{task}|{conference_key}|{canonical}".encode("utf-8")).hexdigest()
    return f"rec-{digest[:16]}"


def review_state_for(grounding: dict) -> str:
    if any(v == UNGROUNDED for v in grounding.values()):
        return "needs_review"
    return "auto_ok"


VALID_TRANSITIONS = {
    "auto_ok": {"approved", "rejected", "edited"},
    "needs_review": {"approved", "rejected", "edited"},
}


def transition_review_state(current: str, target: str) -> str:
    allowed = VALID_TRANSITIONS.get(current, set())
    if target not in allowed:
        raise ValueError(f"illegal review transition {current} -> {target}")
    return target


# ---------------------------------------------------------------------------
# Providers


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str
    model: str
    auth_env: str
    shape: str = "openai"  # or "anthropic"
    timeout: float = 60.0
    max_retries: int = 3


class MockProvider:
    """Replays canned responses keyed by (conference_key, task); hermetic tests."""

    def __init__(self, replay_dir):
        self.replay_dir = Path(replay_dir)
        self.model = "mock"

    def complete(self, prompt: PromptPair, conference_key: str) -> str:
        path = self.replay_dir / f"{conference_key}__{prompt.task}.txt"
        if not path.exists():
            raise ProviderError(f"no canned response for ({conference_key}, {prompt.task})")
        return path.read_text(encoding="utf-8")


class HttpProvider:
    """Chat-completion HTTP client covering openai- and anthropic-shaped APIs."""

    def __init__(self, config: ProviderConfig, session=None):
        import requests

        self.config = config
        self.model = config.model
        self.session = session or requests.Session()
        token = os.environ.get(config.auth_env, "")
        if not token:
            raise ProviderError(f"auth token env var {config.auth_env} is not set")
        self._token = token

    def _request(self, prompt: PromptPair) -> dict:
        if self.config.shape == "anthropic":
            headers = {"x-api-key": self._token, "anthropic-version": "2023-06-01"}
            payload = {
                "model": self.config.model,
                "max_tokens": 4096,
                "temperature": 0,
                "system": prompt.system,
                "messages": [{"role": "user", "content": prompt.human}],
            }
        else:
            headers = {"Authorization": f"Bearer {self._token}"}
            payload = {
                "model": self.config.model,
                "temperature": 0,
                "messages": [
                    {"role": "system", "content": prompt.system},
                    {"role": "user", "content": prompt.human},
                ],
            }
        return {"headers": headers, "json": payload}

    def complete(self, prompt: PromptPair, conference_key: str) -> str:
        last_error = None
        for attempt in range(self.config.max_retries):
            try:
                req = self._request(prompt)
                resp = self.session.post(
                    self.config.endpoint,
                    timeout=self.config.timeout,
                    **req,
                )
                if resp.status_code >= 500:
                    raise ProviderError(f"server error {resp.status_code}")
                resp.raise_for_status()
                body = resp.json()
                if self.config.shape == "anthropic":
                    return body["content"][0]["text"]
                return body["choices"][0]["message"]["content"]
            except Exception as exc:  # noqa: BLE001 - retry then surface
                last_error = exc
                time.sleep(min(2 ** attempt, 8) * 0.5)
        raise ProviderError(str(last_error))


# ---------------------------------------------------------------------------
# End-to-end extraction over chunks


@dataclass(frozen=True)
class SourceChunk:
    text: str
    source_url: str
    span: tuple = (0, 0)


@dataclass
class ExtractBatch:
    records: list = field(default_factory=list)
    errors: list = field(default_factory=list)


def extract(task: str, chunks: Iterable, provider, conference_key: str) -> ExtractBatch:
    """One record per parsed row, grounded and deduplicated across chunks."""
    if task not in EXTRACTION_TASKS:
        raise UnknownTask(task)
    batch = ExtractBatch()
    by_id = {}
    for chunk in chunks:
        prompt = render_prompt(task, chunk.text)
        try:
            raw = provider.complete(prompt, conference_key)
        except ProviderError as exc:
            batch.errors.append({"source_url": chunk.source_url, "error": str(exc)})
            continue
        try:
            rows = parse_output(raw, task)
        except (MissingSentinel, HeaderMismatch, RaggedRow) as exc:
            batch.errors.append(
                {"source_url": chunk.source_url, "error": f"{type(exc).__name__}: {exc}"}
            )
            continue
        verdicts = ground_check(rows, chunk.text, task)
        for row, grounding in zip(rows, verdicts):
            rid = record_id(task, conference_key, row)
            record = ExtractionRecord(
                id=rid,
                task=task,
                conference_key=conference_key,
                source_url=chunk.source_url,
                chunk_span=tuple(chunk.span),
                row=row,
                grounding=grounding,
                review_state=review_state_for(grounding),
                snippet=chunk.text[:2000],
                model=getattr(provider, "model", ""),
            )
            if rid in by_id:
                by_id[rid] = _merge_records(by_id[rid], record)
            else:
                by_id[rid] = record
    batch.records = list(by_id.values())
    return batch


def _merge_records(a: ExtractionRecord, b: ExtractionRecord) -> ExtractionRecord:
    """Same row seen in two chunks: a cell grounded anywhere stays grounded."""
    merged = dict(a.grounding)
    for column, verdict in b.grounding.items():
        if verdict == GROUNDED or merged.get(column) is None:
            merged[column] = verdict
    return replace(a, grounding=merged, review_state=review_state_for(merged))

"""QuickStatements V1 batch compilation, value rendering, and batch validation.

The emitter writes pipe-separated V1 commands; the parser in this module
accepts both pipes and tabs and is used to re-check every emitted line.
Compilation is deterministic: the same records produce byte-identical output
regardless of input order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date
from decimal import Decimal, InvalidOperation
from typing import Iterable, Optional

from .kg_model import (
    EntityRef,
    ItemValue,
    MappingVocabulary,
    MonolingualValue,
    QuantityValue,
    Statement,
    StringValue,
    TimeValue,
    UrlValue,
    Value,
    allowed_qualifiers,
)


class UnresolvedRecord(ValueError):
    """A record's entity is still a pending review or has no target at all."""


class SchemaColumnMissing(KeyError):
    """The mapping schema references a column the record row lacks."""


class ConstraintViolation(ValueError):
    """A statement breaks the declarative qualifier pattern rules."""


class QSParseError(ValueError):
    """A line does not match the V1 grammar."""


# ---------------------------------------------------------------------------
# Value rendering / parsing (V1 grammar)

_TIME_RE = re.compile(
    r"^\+(\d{4,})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})Z/(\d+)$"
)
_QUANTITY_RE = re.compile(r"^(-?\d+(?:\.\d+)?)(?:U([1-9]\d*))?$")
_MONOLINGUAL_RE = re.compile(r'^([a-z]{2,3}(?:-[A-Za-z0-9]+)*):"(.*)"$', re.S)
_QID_TOKEN_RE = re.compile(r"^Q[1-9]\d*$")
_URLISH_RE = re.compile(r"^[a-z][a-z0-9+.-]*://\S+$", re.I)


def _escape(text: str) -> str:
    if any(ch in text for ch in "\r\n\t|"):
        raise ValueError("control characters and separators not allowed in V1 strings")
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            out.append(text[i + 1])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def render_value(value: Value) -> str:
    """Render a well-formed Value as a V1 field."""
    if isinstance(value, ItemValue):
        if not value.ref.is_resolved:
            raise UnresolvedRecord(f"placeholder {value.ref.local_id} cannot be a value")
        return value.ref.qid
    if isinstance(value, TimeValue):
        d = value.when
        return f"+{d.year:04d}-{d.month:02d}-{d.day:02d}T00:00:00Z/{value.precision}"
    if isinstance(value, QuantityValue):
        amount = format(value.amount, "f")
        if value.unit is not None:
            if not value.unit.is_resolved:
                raise UnresolvedRecord("placeholder unit")
            return f"{amount}U{value.unit.qid[1:]}"
        return amount
    if isinstance(value, MonolingualValue):
        return f'{value.language}:"{_escape(value.text)}"'
    if isinstance(value, UrlValue):
        return f'"{_escape(value.url)}"'
    if isinstance(value, StringValue):
        return f'"{_escape(value.text)}"'
    raise TypeError(f"not a Value: {value!r}")


def parse_value(text: str) -> Value:
    """Parse a V1 value field back into a Value (inverse of render_value).

    Quoted fields that look like absolute URLs decode as url values; url-shaped
    plain strings are therefore not distinguishable and are canonically urls.
    """
    if _QID_TOKEN_RE.match(text):
        return ItemValue(EntityRef.resolved(text))
    m = _TIME_RE.match(text)
    if m:
        year, month, day, hh, mm, ss, prec = (int(g) for g in m.groups())
        if (hh, mm, ss) != (0, 0, 0):
            raise QSParseError(f"non-zero time of day: {text}")
        try:
            return TimeValue(date(year, month, day), prec)
        except ValueError as exc:
            raise QSParseError(f"bad calendar date or precision: {text}") from exc
    m = _MONOLINGUAL_RE.match(text)
    if m:
        return MonolingualValue(m.group(1), _unescape(m.group(2)))
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        inner = _unescape(text[1:-1])
        if _URLISH_RE.match(inner):
            return UrlValue(inner)
        return StringValue(inner)
    m = _QUANTITY_RE.match(text)
    if m:
        try:
            amount = Decimal(m.group(1))
        except InvalidOperation as exc:  # pragma: no cover - regex guards this
            raise QSParseError(text) from exc
        unit = EntityRef.resolved(f"Q{m.group(2)}") if m.group(2) else None
        return QuantityValue(amount, unit)
    raise QSParseError(f"unparseable value field: {text!r}")


def split_fields(line: str) -> list:
    """Split a V1 line on pipes or tabs, respecting double-quoted fields."""
    fields = []
    buf = []
    in_quotes = False
    i = 0
    while i < len(line):
        ch = line[i]
        if ch == "\\" and in_quotes and i + 1 < len(line):
            buf.append(ch)
            buf.append(line[i + 1])
            i += 2
            continue
        if ch == '"':
            in_quotes = not in_quotes
            buf.append(ch)
        elif ch in "|\t" and not in_quotes:
            fields.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
        i += 1
    fields.append("".join(buf))
    return [f.strip() for f in fields]


# ---------------------------------------------------------------------------
# Statement lines


def render_statement_line(statement: Statement, subject_token: Optional[str] = None) -> str:
    """One V1 command line: subject|property|value|quals...|sources..."""
    subject = subject_token
    if subject is None:
        if not statement.subject.is_resolved:
            raise UnresolvedRecord("placeholder subject outside a CREATE group")
        subject = statement.subject.qid
    fields = [subject, statement.property.pid, render_value(statement.value)]
    for prop, value in statement.qualifiers:
        fields.append(prop.pid)
        fields.append(render_value(value))
    for prop, value in statement.references:
        fields.append("S" + prop.pid[1:])
        fields.append(render_value(value))
    return "|".join(fields)


@dataclass(frozen=True)
class ParsedLine:
    kind: str  # create | label | statement
    subject: Optional[str] = None
    property: Optional[str] = None
    value: Optional[Value] = None
    qualifiers: tuple = ()
    references: tuple = ()
    language: Optional[str] = None
    text: Optional[str] = None


_LABEL_RE = re.compile(r"^L([a-z]{2,3}(?:-[A-Za-z0-9]+)*)$")


def parse_line(line: str) -> ParsedLine:
    """Parse one batch line against the V1 grammar; raises QSParseError."""
    stripped = line.strip()
    if stripped == "CREATE":
        return ParsedLine(kind="create")
    fields = split_fields(stripped)
    if len(fields) < 3:
        raise QSParseError(f"too few fields: {line!r}")
    subject = fields[0]
    if subject != "LAST" and not _QID_TOKEN_RE.match(subject):
        raise QSParseError(f"bad subject: {subject!r}")
    label_match = _LABEL_RE.match(fields[1])
    if label_match:
        if len(fields) != 3:
            raise QSParseError(f"label line must have 3 fields: {line!r}")
        value = parse_value(fields[2])
        if not isinstance(value, (StringValue, UrlValue)):
            raise QSParseError("label value must be a quoted string")
        text = value.text if isinstance(value, StringValue) else value.url
        return ParsedLine(kind="label", subject=subject, language=label_match.group(1), text=text)
    prop = fields[1]
    if not re.match(r"^P[1-9]\d*$", prop):
        raise QSParseError(f"bad property: {prop!r}")
    value = parse_value(fields[2])
    rest = fields[3:]
    if len(rest) % 2 != 0:
        raise QSParseError(f"dangling field in {line!r}")
    qualifiers = []
    references = []
    for key, raw in zip(rest[::2], rest[1::2]):
        if re.match(r"^P[1-9]\d*$", key):
            qualifiers.append((key, parse_value(raw)))
        elif re.match(r"^S[1-9]\d*$", key):
            ref_value = parse_value(raw)
            if not isinstance(ref_value, (StringValue, UrlValue)):
                raise QSParseError(f"reference {key} must be quoted: {line!r}")
            references.append((key, ref_value))
        else:
            raise QSParseError(f"bad qualifier/source key {key!r}")
    return ParsedLine(
        kind="statement",
        subject=subject,
        property=prop,
        value=value,
        qualifiers=tuple(qualifiers),
        references=tuple(references),
    )


# ---------------------------------------------------------------------------
# Batch compilation


@dataclass(frozen=True)
class QSBatch:
    lines: tuple
    stats: dict

    def text(self) -> str:
        return "\n".join(self.lines) + "\n" if self.lines else ""

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.text())


@dataclass(frozen=True)
class CreateGroup:
    """A new item: CREATE, its labels first, then its own statements."""

    local_id: str
    labels: tuple  # of (language, text)
    statements: tuple = ()


def _statement_sort_key(statement: Statement):
    return (
        statement.property.number,
        render_value(statement.value),
        tuple((p.pid, render_value(v)) for p, v in statement.qualifiers),
    )


def compile_statements(
    statements: Iterable[Statement],
    creates: Iterable[CreateGroup] = (),
) -> QSBatch:
    """Assemble sorted statement lines plus CREATE groups into a batch."""
    resolved = []
    for st in statements:
        if not st.subject.is_resolved:
            raise UnresolvedRecord(
                f"statement subject {st.subject.local_id} needs a CREATE group"
            )
        if not st.references:
            raise ConstraintViolation("statement without a reference")
        resolved.append(st)

    resolved.sort(key=lambda st: (int(st.subject.qid[1:]),) + _statement_sort_key(st))
    lines = [render_statement_line(st) for st in resolved]

    n_creates = 0
    n_quals = sum(len(st.qualifiers) for st in resolved)
    n_refs = sum(len(st.references) for st in resolved)
    for group in sorted(creates, key=lambda g: g.local_id):
        n_creates += 1
        lines.append("CREATE")
        for language, text in group.labels:
            lines.append(f'LAST|L{language}|"{_escape(text)}"')
        for st in sorted(group.statements, key=_statement_sort_key):
            if not st.references:
                raise ConstraintViolation("statement without a reference")
            lines.append(render_statement_line(st, subject_token="LAST"))
            n_quals += len(st.qualifiers)
            n_refs += len(st.references)

    stats = {
        "creates": n_creates,
        "statements": len(resolved) + sum(len(g.statements) for g in creates),
        "qualifiers": n_quals,
        "references": n_refs,
    }
    return QSBatch(lines=tuple(lines), stats=stats)


# ---------------------------------------------------------------------------
# Record-level compilation through a mapping schema

# Maps a record kind to the logical field and the row columns feeding it.
# The schema file (JSON) selects which kinds are compiled for a target type.

DEFAULT_SCHEMA = {
    "target_type": "event",
    "bindings": {
        "counts": {"field": "admission_rate"},
        "pc_members": {"field": "pc_member"},
        "roles": {"field": "organizer"},
        "deadlines": {"field": "deadline"},
        "sponsors": {"field": "sponsor"},
        "awards": {"field": "winner"},
    },
    "label_language": "en",
}


def _require_column(row: dict, column: str, record_id: str):
    if column not in row or row[column] in (None, ""):
        raise SchemaColumnMissing(f"{record_id}: column {column!r}")
    return row[column]


def compile_records(
    records: Iterable,
    schema: dict,
    vocabulary: MappingVocabulary,
    subjects: dict,
) -> QSBatch:
    """Compile approved extraction records into a batch.

    ``subjects`` maps conference_key -> resolved EntityRef of the event item.
    Records must be approved/auto_ok/edited, with person/org entities resolved
    or placeholders. Placeholder entities become label-only CREATE groups:
    V1 cannot reference a created item as a statement value, so their event
    statements are deferred to a follow-up batch once QIDs exist.
    """
    from .llm_extractor import ExtractionRecord  # local import to avoid a cycle

    bindings = schema.get("bindings", {})
    label_language = schema.get("label_language", "en")
    statements = []
    creates = {}

    for record in records:
        if isinstance(record, dict):
            record = ExtractionRecord.from_dict(record)
        if record.review_state not in ("auto_ok", "approved", "edited"):
            raise UnresolvedRecord(f"{record.id} is {record.review_state}")
        binding = bindings.get(record.task)
        if binding is None:
            continue
        field_name = binding["field"]
        row = record.effective_row()
        subject = subjects.get(record.conference_key)
        if subject is None or not subject.is_resolved:
            raise UnresolvedRecord(f"no resolved event item for {record.conference_key}")

        payload, entity = _payload_for(field_name, row, record, vocabulary)
        if entity is not None and not entity.is_resolved:
            label = row.get("name") or row.get("org") or entity.local_id
            creates.setdefault(
                entity.local_id,
                CreateGroup(local_id=entity.local_id, labels=((label_language, label),)),
            )
            continue
        if payload is None:
            continue
        statements.append(
            build_and_check(subject, field_name, payload, vocabulary, record.source_url)
        )

    return compile_statements(statements, creates.values())


def _payload_for(field_name: str, row: dict, record, vocabulary):
    """Translate a record row into build_statement payload (entity returned separately)."""
    from .kg_model import TrackStats, admission_rate
    from .llm_extractor import parse_iso_date

    if field_name == "admission_rate":
        stats = TrackStats(
            track=_require_column(row, "track", record.id),
            submitted=_int_or_none(row.get("submitted")),
            accepted=_int_or_none(row.get("accepted")),
        )
        pct = admission_rate(stats)
        if pct is None:
            return None, None
        return {"track": stats.track, "percent": pct}, None
    if field_name == "deadline":
        raw = _require_column(row, "date", record.id)
        when = parse_iso_date(raw)
        if when is None:
            raise ConstraintViolation(f"{record.id}: unparseable date {raw!r}")
        return {"kind": _require_column(row, "kind", record.id), "date": when}, None
    if field_name in ("pc_member", "organizer", "winner"):
        entity = record.entity_ref()
        if entity is None:
            raise UnresolvedRecord(f"{record.id}: person not reconciled")
        payload = {"person": entity}
        if field_name == "pc_member":
            payload["track"] = _require_column(row, "track", record.id)
            payload["role"] = _require_column(row, "role", record.id)
        elif field_name == "organizer":
            payload["role"] = _require_column(row, "role", record.id)
        else:
            payload["kind"] = _require_column(row, "kind", record.id)
        return payload, entity
    if field_name == "sponsor":
        entity = record.entity_ref()
        if entity is None:
            raise UnresolvedRecord(f"{record.id}: org not reconciled")
        return {"org": entity, "level": _require_column(row, "level", record.id)}, entity
    raise ConstraintViolation(f"schema binds unknown field {field_name!r}")


def _int_or_none(value):
    if value in (None, "", "-"):
        return None
    return int(str(value).strip())


def build_and_check(subject, field_name, payload, vocabulary, source_url) -> Statement:
    from .kg_model import build_statement

    statement = build_statement(subject, field_name, payload, vocabulary, source_url)
    hosts = allowed_qualifiers(vocabulary)
    allowed = hosts.get(statement.property.pid)
    if allowed is not None:
        got = {p.pid for p, _ in statement.qualifiers}
        if got - allowed:
            raise ConstraintViolation(
                f"qualifiers {sorted(got - allowed)} not allowed on {statement.property.pid}"
            )
    return statement


# ---------------------------------------------------------------------------
# Batch validation


@dataclass(frozen=True)
class Violation:
    line_no: int
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_batch(batch, vocabulary: Optional[MappingVocabulary] = None) -> ValidationReport:
    """Re-parse every line and check qualifier-pattern conformance.

    Accepts a QSBatch or an iterable of lines. Violations are report entries,
    never exceptions.
    """
    lines = batch.lines if isinstance(batch, QSBatch) else list(batch)
    hosts = allowed_qualifiers(vocabulary) if vocabulary is not None else None
    pattern_quals = set().union(*hosts.values()) if hosts else set()
    violations = []
    in_create_group = False
    for idx, line in enumerate(lines, start=1):
        if not line.strip():
            violations.append(Violation(idx, "blank line"))
            continue
        try:
            parsed = parse_line(line)
        except QSParseError as exc:
            violations.append(Violation(idx, str(exc)))
            continue
        if parsed.kind == "create":
            in_create_group = True
            continue
        if parsed.subject == "LAST" and not in_create_group:
            violations.append(Violation(idx, "LAST outside a CREATE group"))
        if parsed.subject != "LAST":
            in_create_group = False
        if parsed.kind == "label":
            continue
        if not parsed.references:
            violations.append(Violation(idx, "statement without a reference"))
        if hosts is not None:
            allowed = hosts.get(parsed.property, set())
            for qual_pid, _ in parsed.qualifiers:
                if qual_pid in pattern_quals and qual_pid not in allowed:
                    violations.append(
                        Violation(idx, f"qualifier {qual_pid} not allowed on {parsed.property}")
                    )
        seen = set()
        for qual_pid, _ in parsed.qualifiers:
            if qual_pid in seen:
                violations.append(Violation(idx, f"duplicate qualifier {qual_pid}"))
            seen.add(qual_pid)
    return ValidationReport(violations=tuple(violations))

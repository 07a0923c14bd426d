"""Wikidata-shaped statement model and the conference mapping vocabulary.

Everything here is immutable after construction and safe to share across
threads. The vocabulary (role/track/sponsor-level/award/deadline entities and
property bindings) is loaded from a JSON config checked into the repo; see
configs/vocabulary.json.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import date
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path
from typing import Optional, Union
from urllib.parse import urlparse

QID_RE = re.compile(r"^Q[1-9][0-9]*$")
PID_RE = re.compile(r"^P[1-9][0-9]*$")

PRECISION_YEAR = 9
PRECISION_MONTH = 10
PRECISION_DAY = 11


class MalformedIdentifier(ValueError):
    """Raised when a string is not a well-formed Q/P identifier."""


class UnboundField(KeyError):
    """A logical field has no property binding in the vocabulary."""


class MissingQualifierOperand(KeyError):
    """The payload lacks an operand the field's qualifier pattern needs."""


class UnknownLabel(KeyError):
    """A label has no entity in the vocabulary (after normalization)."""


class VocabularyError(ValueError):
    """The vocabulary config file is malformed or incomplete."""


@dataclass(frozen=True)
class EntityRef:
    """A Wikidata item reference: either a resolved QID or a local placeholder."""

    qid: Optional[str] = None
    local_id: Optional[str] = None

    def __post_init__(self):
        if (self.qid is None) == (self.local_id is None):
            raise MalformedIdentifier("exactly one of qid/local_id must be set")
        if self.qid is not None and not QID_RE.match(self.qid):
            raise MalformedIdentifier(self.qid)
        if self.local_id is not None and not self.local_id:
            raise MalformedIdentifier("empty local_id")

    @classmethod
    def resolved(cls, qid: str) -> "EntityRef":
        return cls(qid=qid)

    @classmethod
    def placeholder(cls, local_id: str) -> "EntityRef":
        return cls(local_id=local_id)

    @property
    def kind(self) -> str:
        return "resolved" if self.qid is not None else "placeholder"

    @property
    def is_resolved(self) -> bool:
        return self.qid is not None

    def render(self) -> str:
        return self.qid if self.qid is not None else self.local_id


@dataclass(frozen=True)
class PropertyRef:
    pid: str

    def __post_init__(self):
        if not PID_RE.match(self.pid):
            raise MalformedIdentifier(self.pid)

    @property
    def number(self) -> int:
        return int(self.pid[1:])


def validate_entity_ref(raw: str) -> EntityRef:
    """Validate a raw string as a resolved item id, or raise MalformedIdentifier."""
    if not raw:
        raise MalformedIdentifier("empty identifier")
    candidate = raw.strip()
    if not QID_RE.match(candidate):
        raise MalformedIdentifier(raw)
    return EntityRef.resolved(candidate)


# ---------------------------------------------------------------------------
# Values


@dataclass(frozen=True)
class ItemValue:
    ref: EntityRef


@dataclass(frozen=True)
class QuantityValue:
    amount: Decimal
    unit: Optional[EntityRef] = None

    def __post_init__(self):
        if not isinstance(self.amount, Decimal):
            object.__setattr__(self, "amount", Decimal(str(self.amount)))


@dataclass(frozen=True)
class TimeValue:
    """A calendar date at year/month/day precision (9/10/11).

    Fields below the precision must be 1 so that equal dates have a single
    canonical representation.
    """

    when: date
    precision: int = PRECISION_DAY

    def __post_init__(self):
        if self.precision not in (PRECISION_YEAR, PRECISION_MONTH, PRECISION_DAY):
            raise ValueError(f"bad time precision {self.precision}")
        if self.precision == PRECISION_YEAR and (self.when.month != 1 or self.when.day != 1):
            raise ValueError("year precision requires month=day=1")
        if self.precision == PRECISION_MONTH and self.when.day != 1:
            raise ValueError("month precision requires day=1")


@dataclass(frozen=True)
class StringValue:
    text: str


@dataclass(frozen=True)
class MonolingualValue:
    language: str
    text: str


@dataclass(frozen=True)
class UrlValue:
    url: str

    def __post_init__(self):
        parsed = urlparse(self.url)
        if not parsed.scheme or not parsed.netloc:
            raise ValueError(f"not an absolute URL: {self.url!r}")


Value = Union[ItemValue, QuantityValue, TimeValue, StringValue, MonolingualValue, UrlValue]


# ---------------------------------------------------------------------------
# Statements


@dataclass(frozen=True)
class Statement:
    subject: EntityRef
    property: PropertyRef
    value: Value
    qualifiers: tuple = ()
    references: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "qualifiers", tuple(self.qualifiers))
        object.__setattr__(self, "references", tuple(self.references))
        seen = set()
        for prop, _ in self.qualifiers:
            if prop.pid in seen:
                raise ValueError(f"duplicate qualifier property {prop.pid}")
            seen.add(prop.pid)
        for _, value in self.references:
            if not isinstance(value, (UrlValue, StringValue)):
                raise ValueError("reference values must be url or string")


@dataclass(frozen=True)
class TrackStats:
    track: str
    submitted: Optional[int] = None
    accepted: Optional[int] = None

    def __post_init__(self):
        for n in (self.submitted, self.accepted):
            if n is not None and n < 0:
                raise ValueError("counts must be non-negative")
        if self.submitted is not None and self.accepted is not None:
            if self.accepted > self.submitted:
                raise ValueError("accepted exceeds submitted")


def admission_rate(stats: TrackStats) -> Optional[Decimal]:
    """Percent of accepted over submitted, one fractional digit; None when unknown."""
    if stats.submitted is None or stats.accepted is None or stats.submitted == 0:
        return None
    pct = Decimal(stats.accepted) * 100 / Decimal(stats.submitted)
    return pct.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)


# ---------------------------------------------------------------------------
# Label normalization

_WS_RE = re.compile(r"\s+")


def normalize_track_label(label: str) -> str:
    """Fold track labels to the vocabulary's canonical keys.

    Lowercased, trailing "track" stripped, "resources" folded to "resource"
    (prefaces use both singular and plural).
    """
    key = _WS_RE.sub(" ", label.strip().lower())
    if key.endswith(" track"):
        key = key[: -len(" track")]
    if key == "resources":
        key = "resource"
    return key


def normalize_role_label(label: str) -> str:
    key = _WS_RE.sub(" ", label.strip().lower())
    key = key.replace("program ", "programme ").replace("organisation ", "organization ")
    if key.endswith("chairs"):
        key = key[:-1]
    return key


def normalize_level_label(label: str) -> str:
    key = _WS_RE.sub(" ", label.strip().lower())
    for suffix in (" sponsors", " sponsor"):
        if key.endswith(suffix):
            key = key[: -len(suffix)]
    return key


def normalize_deadline_kind(label: str) -> str:
    key = _WS_RE.sub(" ", label.strip().lower())
    if key.endswith(" deadline"):
        key = key[: -len(" deadline")]
    return key


def normalize_award_label(label: str) -> str:
    return _WS_RE.sub(" ", label.strip().lower())


REQUIRED_DEADLINE_KINDS = (
    "abstract submission",
    "paper submission",
    "acceptance notification",
    "camera-ready submission",
)

_VOCAB_SECTIONS = {
    "role_entities",
    "track_entities",
    "sponsor_levels",
    "award_kinds",
    "deadline_kinds",
    "property_bindings",
    "percent_unit",
    "parent_entities",
    "series_entities",
}


@dataclass(frozen=True)
class MappingVocabulary:
    """Label-to-entity maps plus logical-field property bindings."""

    role_entities: dict
    track_entities: dict
    sponsor_levels: dict
    award_kinds: dict
    deadline_kinds: dict
    property_bindings: dict
    percent_unit: Optional[EntityRef] = None
    parent_entities: dict = field(default_factory=dict)
    series_entities: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "MappingVocabulary":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = {k for k in raw if not k.startswith("_")} - _VOCAB_SECTIONS
        if unknown:
            raise VocabularyError(f"unknown vocabulary sections: {sorted(unknown)}")

        def entity_map(section: str) -> dict:
            out = {}
            for label, qid in raw.get(section, {}).items():
                try:
                    out[label] = validate_entity_ref(qid)
                except MalformedIdentifier as exc:
                    raise VocabularyError(f"{section}[{label!r}]: {exc}") from exc
            return out

        bindings = {}
        for name, pid in raw.get("property_bindings", {}).items():
            if pid is None:
                bindings[name] = None
            elif isinstance(pid, str) and PID_RE.match(pid):
                bindings[name] = PropertyRef(pid)
            else:
                raise VocabularyError(f"property_bindings[{name!r}]: bad pid {pid!r}")

        deadline_kinds = entity_map("deadline_kinds")
        missing = [k for k in REQUIRED_DEADLINE_KINDS if k not in deadline_kinds]
        if missing:
            raise VocabularyError(f"missing deadline kinds: {missing}")

        percent_unit = None
        if raw.get("percent_unit"):
            percent_unit = validate_entity_ref(raw["percent_unit"])

        return cls(
            role_entities=entity_map("role_entities"),
            track_entities=entity_map("track_entities"),
            sponsor_levels=entity_map("sponsor_levels"),
            award_kinds=entity_map("award_kinds"),
            deadline_kinds=deadline_kinds,
            property_bindings=bindings,
            percent_unit=percent_unit,
            parent_entities=entity_map("parent_entities"),
            series_entities=entity_map("series_entities"),
        )

    # Lookup helpers; all raise UnknownLabel on a miss.

    def track(self, label: str) -> EntityRef:
        return self._lookup(self.track_entities, normalize_track_label(label), "track")

    def role(self, label: str) -> EntityRef:
        return self._lookup(self.role_entities, normalize_role_label(label), "role")

    def sponsor_level(self, label: str) -> EntityRef:
        return self._lookup(self.sponsor_levels, normalize_level_label(label), "sponsor level")

    def award(self, label: str) -> EntityRef:
        return self._lookup(self.award_kinds, normalize_award_label(label), "award")

    def deadline_kind(self, label: str) -> EntityRef:
        return self._lookup(self.deadline_kinds, normalize_deadline_kind(label), "deadline kind")

    def binding(self, logical_field: str) -> PropertyRef:
        prop = self.property_bindings.get(logical_field)
        if prop is None:
            raise UnboundField(logical_field)
        return prop

    @staticmethod
    def _lookup(table: dict, key: str, what: str) -> EntityRef:
        try:
            return table[key]
        except KeyError:
            raise UnknownLabel(f"unknown {what}: {key!r}") from None


# ---------------------------------------------------------------------------
# Statement building
#
# Each logical field carries the qualifier pattern used on the conference
# item: statement property, how the value is produced from the payload, and
# which qualifiers are attached. One reference (reference_url -> source URL)
# is always appended.


def _need(payload: dict, key: str):
    if key not in payload or payload[key] is None:
        raise MissingQualifierOperand(key)
    return payload[key]


def _build_pc_member(payload, vocab):
    person = _need(payload, "person")
    quals = [
        (vocab.binding("applies_to_part"), ItemValue(vocab.track(_need(payload, "track")))),
        (vocab.binding("object_role"), ItemValue(vocab.role(_need(payload, "role")))),
    ]
    return ItemValue(person), quals


def _build_organizer(payload, vocab):
    person = _need(payload, "person")
    quals = [(vocab.binding("object_role"), ItemValue(vocab.role(_need(payload, "role"))))]
    return ItemValue(person), quals


def _build_deadline(payload, vocab):
    kind = vocab.deadline_kind(_need(payload, "kind"))
    when = _need(payload, "date")
    precision = payload.get("precision", PRECISION_DAY)
    quals = [(vocab.binding("point_in_time"), TimeValue(when, precision))]
    return ItemValue(kind), quals


def _build_sponsor(payload, vocab):
    org = _need(payload, "org")
    quals = [(vocab.binding("object_role"), ItemValue(vocab.sponsor_level(_need(payload, "level"))))]
    return ItemValue(org), quals


def _build_winner(payload, vocab):
    person = _need(payload, "person")
    quals = [(vocab.binding("object_role"), ItemValue(vocab.award(_need(payload, "kind"))))]
    return ItemValue(person), quals


def _build_admission_rate(payload, vocab):
    percent = _need(payload, "percent")
    quals = [(vocab.binding("applies_to_part"), ItemValue(vocab.track(_need(payload, "track"))))]
    return QuantityValue(Decimal(str(percent)), vocab.percent_unit), quals


FIELD_BUILDERS = {
    "pc_member": _build_pc_member,
    "organizer": _build_organizer,
    "deadline": _build_deadline,
    "sponsor": _build_sponsor,
    "winner": _build_winner,
    "admission_rate": _build_admission_rate,
}


def build_statement(
    subject: EntityRef,
    logical_field: str,
    payload: dict,
    vocabulary: MappingVocabulary,
    source_url: str,
) -> Statement:
    """Build the statement for one logical field with its qualifier pattern.

    Raises UnboundField when the field has no property binding and
    MissingQualifierOperand when the payload lacks a required operand.
    """
    if logical_field not in FIELD_BUILDERS:
        raise UnboundField(logical_field)
    prop = vocabulary.binding(logical_field)
    value, qualifiers = FIELD_BUILDERS[logical_field](payload, vocabulary)
    reference = (vocabulary.binding("reference_url"), UrlValue(source_url))
    return Statement(
        subject=subject,
        property=prop,
        value=value,
        qualifiers=tuple(qualifiers),
        references=(reference,),
    )


def allowed_qualifiers(vocabulary: MappingVocabulary) -> dict:
    """Map statement pid -> set of qualifier pids permitted on it."""
    hosts: dict = {}

    def add(field_name: str, qualifier_bindings: tuple):
        prop = vocabulary.property_bindings.get(field_name)
        if prop is None:
            return
        quals = set()
        for qb in qualifier_bindings:
            q = vocabulary.property_bindings.get(qb)
            if q is not None:
                quals.add(q.pid)
        hosts[prop.pid] = quals

    add("pc_member", ("applies_to_part", "object_role"))
    add("organizer", ("object_role",))
    add("deadline", ("point_in_time",))
    add("sponsor", ("object_role",))
    add("winner", ("object_role",))
    add("admission_rate", ("applies_to_part",))
    return hosts

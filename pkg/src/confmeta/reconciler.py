"""Entity reconciliation: candidate generation, triage, and batch resolution.

Exact external ids (Wikidata, ORCID, DBLP) force a 1.0 match. Everything else
falls back to name similarity over a local entity-index snapshot, with
ambiguous or middling scores routed to human review. Placeholder ids for new
entities are content-addressed so reruns assign the same id.
"""
from __future__ import annotations

import hashlib
import json
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .kg_model import EntityRef

AUTO_THRESHOLD = 0.95
REVIEW_THRESHOLD = 0.75
AMBIGUITY_GAP = 0.1


class IndexUnavailable(RuntimeError):
    pass


class RecordFinalized(RuntimeError):
    pass


class UnknownRecord(KeyError):
    pass


_WS_RE = re.compile(r"\s+")
_PUNCT_RE = re.compile(r"[^\w\s]")


def normalize_name(name: str) -> str:
    """NFKD, diacritics stripped, lowercased, punctuation dropped, spaces collapsed."""
    decomposed = unicodedata.normalize("NFKD", name)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    cleaned = _PUNCT_RE.sub(" ", stripped.casefold())
    return _WS_RE.sub(" ", cleaned).strip()


def _trigrams(text: str) -> set:
    padded = f"  {text} "
    return {padded[i: i + 3] for i in range(len(padded) - 2)}


def trigram_jaccard(a: str, b: str) -> float:
    if not a or not b:
        return 0.0
    ta, tb = _trigrams(a), _trigrams(b)
    union = ta | tb
    return len(ta & tb) / len(union) if union else 0.0


_INITIALS_SCORE = 0.85


def _initials_compatible(short: str, full: str) -> bool:
    """"j smith" matches "john smith": same surname, initials match given names."""
    st, ft = short.split(), full.split()
    if len(st) < 2 or len(ft) < 2 or st[-1] != ft[-1]:
        return False
    if len(st) > len(ft):
        return False
    for s, f in zip(st[:-1], ft[:-1]):
        if s == f:
            continue
        if len(s) == 1 and f.startswith(s):
            continue
        return False
    return True


def name_similarity(a: str, b: str) -> float:
    """Trigram Jaccard, floored at 0.85 for initial-vs-full-name pairs.

    The floor keeps abbreviated author forms ("J. Smith") inside the human
    review band instead of dropping below the new-entity threshold.
    """
    na, nb = normalize_name(a), normalize_name(b)
    if not na or not nb:
        return 0.0
    if na == nb:
        return 1.0
    score = trigram_jaccard(na, nb)
    if _initials_compatible(na, nb) or _initials_compatible(nb, na):
        score = max(score, _INITIALS_SCORE)
    return round(min(score, 0.99), 4)


EXTERNAL_ID_KINDS = ("wikidata", "orcid", "dblp")


@dataclass(frozen=True)
class ReconcileSubject:
    """What the matcher needs to know about one record's entity mention."""

    record_id: str
    name: str
    kind: str = "person"  # person | org | event
    wikidata: Optional[str] = None
    orcid: Optional[str] = None
    dblp: Optional[str] = None

    def external_ids(self):
        for id_kind in EXTERNAL_ID_KINDS:
            value = getattr(self, id_kind)
            if value:
                yield id_kind, value


@dataclass(frozen=True)
class CandidateMatch:
    record_id: str
    candidate: EntityRef
    score: float
    evidence: tuple = ()

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score out of range: {self.score}")
        if any(tag == "exact_external_id" for tag, _ in self.evidence) and self.score != 1.0:
            raise ValueError("exact external id evidence forces score 1.0")

    def to_dict(self) -> dict:
        return {
            "qid": self.candidate.qid,
            "score": self.score,
            "evidence": [list(e) for e in self.evidence],
        }


@dataclass(frozen=True)
class ReconciliationDecision:
    record_id: str
    outcome: str  # auto_matched | human_linked | human_new | human_rejected
    target: Optional[EntityRef]
    decided_by: str
    decided_at: str

    def __post_init__(self):
        needs_target = self.outcome in ("auto_matched", "human_linked")
        if needs_target != (self.target is not None):
            raise ValueError(f"outcome {self.outcome} target mismatch")


class EntityIndex:
    """Local label/alias/external-id snapshot, one JSON object per line."""

    def __init__(self, entries: list):
        self.entries = entries
        self.by_external: dict = {}
        for entry in entries:
            for id_kind in EXTERNAL_ID_KINDS[1:]:  # orcid, dblp
                value = entry.get(id_kind)
                if value:
                    self.by_external[(id_kind, _canon_external(id_kind, value))] = entry["qid"]

    @classmethod
    def load(cls, path) -> "EntityIndex":
        path = Path(path)
        if not path.exists():
            raise IndexUnavailable(str(path))
        entries = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    entries.append(json.loads(line))
        return cls(entries)

    def lookup_external(self, id_kind: str, value: str) -> Optional[str]:
        return self.by_external.get((id_kind, _canon_external(id_kind, value)))


def _canon_external(id_kind: str, value: str) -> str:
    value = value.strip()
    if id_kind == "orcid":
        value = value.removeprefix("https://orcid.org/").removeprefix("http://orcid.org/")
    return value.casefold()


def candidates(subject: ReconcileSubject, index: EntityIndex) -> list:
    """Ranked candidate matches, score desc, ties by QID number ascending."""
    found: dict = {}

    if subject.wikidata:
        found[subject.wikidata] = CandidateMatch(
            record_id=subject.record_id,
            candidate=EntityRef.resolved(subject.wikidata),
            score=1.0,
            evidence=(("exact_external_id", "wikidata"),),
        )
    for id_kind, value in subject.external_ids():
        if id_kind == "wikidata":
            continue
        qid = index.lookup_external(id_kind, value)
        if qid is None:
            continue
        if qid in found:
            prior = found[qid]
            found[qid] = CandidateMatch(
                record_id=subject.record_id,
                candidate=prior.candidate,
                score=1.0,
                evidence=prior.evidence + (("exact_external_id", id_kind),),
            )
        else:
            found[qid] = CandidateMatch(
                record_id=subject.record_id,
                candidate=EntityRef.resolved(qid),
                score=1.0,
                evidence=(("exact_external_id", id_kind),),
            )

    if not found:
        for entry in index.entries:
            if entry.get("type", "person") != subject.kind:
                continue
            names = list(entry.get("labels", ())) + list(entry.get("aliases", ()))
            best = max((name_similarity(subject.name, n) for n in names), default=0.0)
            if best <= 0.0:
                continue
            evidence = [("name_similarity", f"{best:.3f}"), ("type_match", subject.kind)]
            conflict = _external_conflict(subject, entry)
            if conflict:
                evidence.append(("id_conflict", conflict))
            found[entry["qid"]] = CandidateMatch(
                record_id=subject.record_id,
                candidate=EntityRef.resolved(entry["qid"]),
                score=round(best, 4),
                evidence=tuple(evidence),
            )

    ranked = sorted(found.values(), key=lambda c: (-c.score, int(c.candidate.qid[1:])))
    return ranked[:10]


def _external_conflict(subject: ReconcileSubject, entry: dict) -> Optional[str]:
    for id_kind, value in subject.external_ids():
        theirs = entry.get(id_kind)
        if theirs and _canon_external(id_kind, theirs) != _canon_external(id_kind, value):
            return id_kind
    return None


@dataclass(frozen=True)
class Thresholds:
    auto: float = AUTO_THRESHOLD
    review: float = REVIEW_THRESHOLD

    def __post_init__(self):
        if not self.auto > self.review:
            raise ValueError("auto threshold must exceed review threshold")


@dataclass(frozen=True)
class Triage:
    outcome: str  # auto | review | new
    target: Optional[EntityRef] = None


def triage(matches: list, thresholds: Thresholds = Thresholds()) -> Triage:
    """auto on a confident unambiguous top match; review in the middle; new below."""
    if not matches:
        return Triage("new")
    top = matches[0]
    if top.score < thresholds.review:
        return Triage("new")
    conflicted = any(tag == "id_conflict" for tag, _ in top.evidence)
    if top.score >= thresholds.auto and not conflicted:
        unambiguous = len(matches) == 1 or top.score - matches[1].score >= AMBIGUITY_GAP
        if unambiguous:
            return Triage("auto", top.candidate)
    return Triage("review")


def placeholder_id(name: str, conference_key: str) -> str:
    digest = hashlib.sha1(f"{normalize_name(name)}|{conference_key}".encode("utf-8")).hexdigest()
    return f"new-{digest[:12]}"


@dataclass
class GroupResolution:
    record_ids: list
    triage: Triage
    candidates: list
    placeholder: Optional[str] = None


def resolve_batch(subjects: list, index: EntityIndex, thresholds: Thresholds = Thresholds(),
                  conference_key: str = "") -> list:
    """Resolve a batch with intra-batch duplicate prevention.

    Records sharing a normalized name or any external id are grouped with
    union-find; each group gets one triage outcome, so duplicates can never
    split between two targets or two placeholders.
    """
    parent = list(range(len(subjects)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        parent[find(i)] = find(j)

    by_key: dict = {}
    for i, subject in enumerate(subjects):
        keys = [("name", subject.kind, normalize_name(subject.name))]
        for id_kind, value in subject.external_ids():
            keys.append((id_kind, _canon_external(id_kind, value)))
        for key in keys:
            if key in by_key:
                union(i, by_key[key])
            else:
                by_key[key] = i

    groups: dict = {}
    for i in range(len(subjects)):
        groups.setdefault(find(i), []).append(i)

    resolutions = []
    for members in groups.values():
        merged = _merge_subjects([subjects[i] for i in members])
        ranked = candidates(merged, index)
        outcome = triage(ranked, thresholds)
        resolution = GroupResolution(
            record_ids=[subjects[i].record_id for i in members],
            triage=outcome,
            candidates=ranked,
        )
        if outcome.outcome == "new":
            resolution.placeholder = placeholder_id(merged.name, conference_key)
        resolutions.append(resolution)
    return resolutions


def _merge_subjects(members: list) -> ReconcileSubject:
    first = members[0]
    merged = {"wikidata": None, "orcid": None, "dblp": None}
    for member in members:
        for id_kind in EXTERNAL_ID_KINDS:
            value = getattr(member, id_kind)
            if value and not merged[id_kind]:
                merged[id_kind] = value
    return ReconcileSubject(
        record_id=first.record_id,
        name=first.name,
        kind=first.kind,
        **merged,
    )

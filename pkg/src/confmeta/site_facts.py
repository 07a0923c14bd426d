"""Deterministic extraction of sponsor/award/participant facts from site pages.

Sponsorship levels and award winners follow rigid presentation conventions on
conference sites (a "<level> Sponsors" heading over a list; "<award name>:
<person>" lines), so these come from rules rather than model calls. The rows
are grounded by construction: every value is literal page text.
"""
from __future__ import annotations

import re

from . import html_data
from .kg_model import MappingVocabulary, normalize_award_label, normalize_level_label
from .llm_extractor import (
    GROUNDED,
    NOT_APPLICABLE,
    ExtractionRecord,
    record_id,
)

_SPONSOR_HEADING_RE = re.compile(r"^\s*(?P<level>[A-Za-z][A-Za-z ]*?)\s+sponsors?\s*$", re.I)
_AWARD_LINE_RE = re.compile(r"^\s*(?P<kind>best\b[^:]*?award)\s*[:–—-]\s*(?P<who>.+?)\s*$", re.I)
_PARTICIPANTS_RE = re.compile(
    r"(?:more than|over|around|about)?\s*(\d{2,6})\s+(?:registered\s+)?(?:participants|attendees)\b",
    re.I,
)


def _record(task, conference_key, row, grounding, url, snippet):
    return ExtractionRecord(
        id=record_id(task, conference_key, row),
        task=task,
        conference_key=conference_key,
        source_url=url,
        chunk_span=(0, len(snippet)),
        row=row,
        grounding=grounding,
        review_state="auto_ok",
        snippet=snippet[:2000],
        model="rules",
    )


def sponsor_records(pages, conference_key: str, vocabulary: MappingVocabulary) -> list:
    out = []
    for page in pages:
        for section in html_data.extract_sections(page.html, page.url):
            m = _SPONSOR_HEADING_RE.match(section.heading)
            if not m:
                continue
            level = normalize_level_label(m.group("level"))
            if level not in vocabulary.sponsor_levels:
                continue
            # Sponsor names are the first contiguous line block under the
            # heading; whatever follows a blank line (nav links, prose) is not
            # part of the list.
            block = []
            for line in section.text.splitlines():
                if line.strip():
                    block.append(line)
                elif block:
                    break
            for line in block:
                org = line.strip().rstrip(".,;")
                if not org or len(org) > 120:
                    continue
                row = {"org": org, "level": level}
                grounding = {"org": GROUNDED, "level": NOT_APPLICABLE}
                out.append(
                    _record("sponsors", conference_key, row, grounding, page.url, section.text)
                )
    return out


def award_records(pages, conference_key: str, vocabulary: MappingVocabulary) -> list:
    out = []
    for page in pages:
        for line in page.text.splitlines():
            m = _AWARD_LINE_RE.match(line)
            if not m:
                continue
            kind = normalize_award_label(m.group("kind"))
            if kind not in vocabulary.award_kinds:
                continue
            person = m.group("who").strip().rstrip(".")
            row = {"person": person, "kind": kind}
            grounding = {"person": GROUNDED, "kind": NOT_APPLICABLE}
            out.append(_record("awards", conference_key, row, grounding, page.url, line))
    return out


def participant_records(pages, conference_key: str) -> list:
    out = []
    for page in pages:
        m = _PARTICIPANTS_RE.search(page.text)
        if not m:
            continue
        row = {"count": m.group(1)}
        out.append(
            _record(
                "participants",
                conference_key,
                row,
                {"count": GROUNDED},
                page.url,
                m.group(0),
            )
        )
    return out



"""Proceedings front-matter normalization and heading/sentence chunking.

The pipeline's contract starts at extracted text; PDF-to-text sits behind the
thin adapter at the bottom of this module.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .keywords import keyword_score

DEFAULT_BUDGET_WORDS = 1500

# Presentation-form ligatures seen in Springer front matter.
_LIGATURES = {
    0xFB00: "ff",
    0xFB01: "fi",
    0xFB02: "fl",
    0xFB03: "ffi",
    0xFB04: "ffl",
    0xFB05: "st",
    0xFB06: "st",
}

_DEHYPHEN_RE = re.compile(r"(\w)-[ \t]*\n[ \t]*(\w)")
_HSPACE_RE = re.compile(r"[ \t ]+")
_LINE_EDGE_RE = re.compile(r" ?\n ?")
_BLANK_RUN_RE = re.compile(r"\n{3,}")


def normalize_text(raw: str) -> str:
    """Expand ligatures, rejoin line-break hyphenation, collapse whitespace runs."""
    text = raw.translate(_LIGATURES)
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    text = _DEHYPHEN_RE.sub(r"\1\2", text)
    text = _HSPACE_RE.sub(" ", text)
    text = _LINE_EDGE_RE.sub("\n", text)
    text = _BLANK_RUN_RE.sub("\n\n", text)
    return text.strip()


@dataclass(frozen=True)
class Chunk:
    heading: Optional[str]
    body: str
    span: tuple
    word_count: int
    oversized: bool = False

    @classmethod
    def over(cls, text: str, start: int, end: int, heading=None, oversized=False) -> "Chunk":
        body = text[start:end]
        return cls(
            heading=heading,
            body=body,
            span=(start, end),
            word_count=len(body.split()),
            oversized=oversized,
        )


_HEADING_STOPWORDS = {"of", "and", "the", "in", "for", "on", "to", "a", "an", "at", "with"}


def _is_heading(line: str) -> bool:
    """A line of <=8 words, title-cased or all-caps, not ending in punctuation.

    Mid-line separators disqualify a line: committee rosters are full of
    title-cased lines like "Programme Chairs: A, B" that are data, not
    headings.
    """
    s = line.strip()
    if not s or s[-1] in ".,:;!?":
        return False
    if ":" in s or "," in s or ";" in s:
        return False
    words = s.split()
    if len(words) > 8:
        return False
    if not any(c.isalpha() for c in s):
        return False
    if s.isupper():
        return True
    for word in words:
        first_alpha = next((c for c in word if c.isalpha()), None)
        if first_alpha is None:
            continue
        if first_alpha.isupper():
            continue
        if word.lower() in _HEADING_STOPWORDS:
            continue
        return False
    return True


def chunk_by_headings(text: str) -> list:
    """One chunk per heading section; the preamble is its own heading-less chunk.

    Chunk bodies tile the whole text (headings included), so concatenating
    them reconstructs the input.
    """
    if not text:
        return []
    lines = text.split("\n")
    offsets = []
    pos = 0
    for line in lines:
        offsets.append(pos)
        pos += len(line) + 1
    candidate_lines = []
    for i, line in enumerate(lines):
        if not _is_heading(line):
            continue
        # Headings sit on their own: blank line (or document edge) on both
        # sides. Name lists are wall-to-wall title-cased lines; this keeps
        # them out.
        before_blank = i == 0 or not lines[i - 1].strip()
        after_blank = i == len(lines) - 1 or not lines[i + 1].strip()
        if before_blank and after_blank:
            candidate_lines.append(i)

    # A heading whose section has no content is data (e.g. the last name of a
    # roster), not a heading; demote it into the preceding section.
    kept = []
    next_kept = len(lines)
    for i in reversed(candidate_lines):
        section = lines[i + 1: next_kept]
        if any(ln.strip() for ln in section):
            kept.append(i)
            next_kept = i
    kept.reverse()
    headings = [(offsets[i], lines[i].strip()) for i in kept]

    chunks = []
    if not headings:
        return [Chunk.over(text, 0, len(text))]
    first = headings[0][0]
    if text[:first].strip():
        chunks.append(Chunk.over(text, 0, first))
    for i, (start, title) in enumerate(headings):
        end = headings[i + 1][0] if i + 1 < len(headings) else len(text)
        chunks.append(Chunk.over(text, start, end, heading=title))
    return chunks


_SENTENCE_END_RE = re.compile(r"[.!?]+(?=\s|$)")


def _sentence_spans(body: str) -> list:
    """(start, end) spans of sentences within body; tolerant of fragments."""
    spans = []
    pos = 0
    for m in _SENTENCE_END_RE.finditer(body):
        end = m.end()
        seg = body[pos:end]
        lead = len(seg) - len(seg.lstrip())
        if seg.strip():
            spans.append((pos + lead, end))
        pos = end
    tail = body[pos:]
    lead = len(tail) - len(tail.lstrip())
    if tail.strip():
        spans.append((pos + lead, len(body.rstrip())))
    return spans


def semantic_split(chunk: Chunk, budget_words: int = DEFAULT_BUDGET_WORDS) -> list:
    """Split a chunk at sentence boundaries into <=budget pieces.

    Consecutive pieces share a one-sentence overlap. A single sentence over
    budget is emitted alone with the oversized flag set.
    """
    if budget_words <= 0:
        raise ValueError("budget_words must be positive")
    if chunk.word_count <= budget_words:
        return [chunk]

    base = chunk.span[0]
    sentences = _sentence_spans(chunk.body)
    if not sentences:
        return [chunk]

    def words(span):
        return len(chunk.body[span[0]:span[1]].split())

    pieces = []
    current: list = []
    current_words = 0
    for span in sentences:
        w = words(span)
        if w > budget_words and not current:
            pieces.append((span, span, True))
            continue
        if current and current_words + w > budget_words:
            pieces.append((current[0], current[-1], False))
            overlap = current[-1]
            current = [overlap, span]
            current_words = words(overlap) + w
        else:
            current.append(span)
            current_words += w
    if current:
        pieces.append((current[0], current[-1], False))

    out = []
    for first, last, oversized in pieces:
        body = chunk.body[first[0]:last[1]]
        out.append(
            Chunk(
                heading=chunk.heading,
                body=body,
                span=(base + first[0], base + last[1]),
                word_count=len(body.split()),
                oversized=oversized,
            )
        )
    return out


@dataclass(frozen=True)
class FrontMatterDoc:
    conference_key: str
    raw_text: str
    normalized_text: str
    chunks: tuple
    source_url: str = ""


def ingest(
    conference_key: str,
    raw_text: str,
    budget_words: int = DEFAULT_BUDGET_WORDS,
    source_url: str = "",
) -> FrontMatterDoc:
    """Normalize and chunk one front-matter document."""
    normalized = normalize_text(raw_text)
    chunks = []
    for section in chunk_by_headings(normalized):
        chunks.extend(semantic_split(section, budget_words))
    return FrontMatterDoc(
        conference_key=conference_key,
        raw_text=raw_text,
        normalized_text=normalized,
        chunks=tuple(chunks),
        source_url=source_url,
    )


def select_chunks(doc: FrontMatterDoc, task: str) -> list:
    """Chunks relevant to the task, highest keyword density first."""
    scored = []
    for idx, chunk in enumerate(doc.chunks):
        text = (chunk.heading + "\n" if chunk.heading else "") + chunk.body
        score = keyword_score(text, task)
        if score > 0:
            scored.append((-score, idx, chunk))
    scored.sort(key=lambda item: (item[0], item[1]))
    return [chunk for _, _, chunk in scored]


def load_text_file(path) -> str:
    """Adapter for pre-extracted text files (the PDF path feeds this)."""
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()

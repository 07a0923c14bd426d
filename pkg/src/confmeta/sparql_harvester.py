"""SPARQL harvesting from DBLP-shaped and ScholarlyData-shaped endpoints.

Query templates live as .rq files with __name__ placeholders; substitution is
textual with IRI validation so bindings cannot inject query syntax. Raw
response bodies can be recorded to disk and replayed byte-exactly, which is
how the test suite runs with zero network access.
"""
from __future__ import annotations

import hashlib
import json
import logging
import re
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

log = logging.getLogger(__name__)


class EndpointUnreachable(RuntimeError):
    pass


class MalformedResults(ValueError):
    pass


class UnboundPlaceholder(ValueError):
    pass


@dataclass(frozen=True)
class PaperRecord:
    iri: str
    title: str
    doi: str
    pages: str
    year: int


@dataclass(frozen=True)
class PersonSignature:
    paper_iri: str
    name: str
    ordinal: int
    orcid: Optional[str] = None
    wikidata: Optional[str] = None
    scholar: Optional[str] = None


SUBEVENT_KINDS = ("workshop", "tutorial", "panel", "keynote")


@dataclass(frozen=True)
class SubEvent:
    parent_key: str
    kind: str
    title: str
    iri: str

    def __post_init__(self):
        if self.kind not in SUBEVENT_KINDS:
            raise ValueError(f"bad sub-event kind {self.kind!r}")


_PLACEHOLDER_RE = re.compile(r"__([a-z][a-z0-9_]*)__")
_IRI_RE = re.compile(r"^[a-z][a-z0-9+.-]*://[^\s<>\"{}|\\^`]+$", re.I)


def load_template(template_name: str) -> str:
    ref = resources.files("confmeta.queries").joinpath(f"{template_name}.rq")
    if not ref.is_file():
        raise UnboundPlaceholder(f"no such query template: {template_name}")
    return ref.read_text(encoding="utf-8")


def render_query(template_name: str, bindings: dict) -> str:
    """Substitute __name__ placeholders after validating every value as an IRI."""
    template = load_template(template_name)
    needed = set(_PLACEHOLDER_RE.findall(template))
    missing = needed - set(bindings)
    if missing:
        raise UnboundPlaceholder(f"unbound placeholders: {sorted(missing)}")
    query = template
    for name in needed:
        value = str(bindings[name])
        if not _IRI_RE.match(value):
            raise UnboundPlaceholder(f"binding {name!r} is not a safe IRI: {value!r}")
        query = query.replace(f"__{name}__", value)
    return query


def decode_results(body: str) -> list:
    """Standard SPARQL JSON results -> list of var->value dicts (absent -> None)."""
    try:
        payload = json.loads(body)
        variables = payload["head"]["vars"]
        bindings = payload["results"]["bindings"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise MalformedResults(str(exc)) from exc
    rows = []
    for binding in bindings:
        if not isinstance(binding, dict):
            raise MalformedResults(f"bad binding row: {binding!r}")
        row = {}
        for var in variables:
            cell = binding.get(var)
            row[var] = cell.get("value") if isinstance(cell, dict) else None
        rows.append(row)
    return rows


class SparqlClient:
    """Executes templates against one endpoint, with record/replay support.

    Responses are paged with LIMIT/OFFSET (page size 1,000) so endpoints that
    truncate large result sets still yield complete harvests; a short page
    ends the scan.
    """

    PAGE_SIZE = 1000

    def __init__(
        self,
        endpoint_url: str,
        record_dir=None,
        replay_dir=None,
        timeout: float = 30.0,
        max_retries: int = 3,
        session=None,
        offline: bool = False,
        page_size: Optional[int] = None,
    ):
        self.endpoint_url = endpoint_url
        self.record_dir = Path(record_dir) if record_dir else None
        self.replay_dir = Path(replay_dir) if replay_dir else None
        self.timeout = timeout
        self.max_retries = max_retries
        self.offline = offline
        self.page_size = page_size or self.PAGE_SIZE
        self._session = session

    def _response_key(self, template_name: str, bindings: dict, page: int = 0) -> str:
        canonical = json.dumps(bindings, sort_keys=True)
        digest = hashlib.sha1(canonical.encode("utf-8")).hexdigest()[:12]
        suffix = f"-p{page}" if page else ""
        return f"{template_name}-{digest}{suffix}.json"

    def _http_post(self, query: str) -> str:
        if self.offline:
            raise EndpointUnreachable("network egress forbidden in offline mode")
        import requests

        if self._session is None:
            self._session = requests.Session()
        last_error = None
        for attempt in range(self.max_retries):
            try:
                resp = self._session.post(
                    self.endpoint_url,
                    data={"query": query},
                    headers={"Accept": "application/sparql-results+json"},
                    timeout=self.timeout,
                )
                if resp.status_code != 200:
                    raise EndpointUnreachable(f"HTTP {resp.status_code} from {self.endpoint_url}")
                return resp.text
            except EndpointUnreachable as exc:
                last_error = exc
            except requests.RequestException as exc:
                last_error = EndpointUnreachable(str(exc))
            time.sleep(min(2 ** attempt, 8) * 0.25)
        raise last_error

    def run_query(self, template_name: str, bindings: dict) -> list:
        query = render_query(template_name, bindings)
        rows: list = []
        page = 0
        while True:
            body = self._fetch_page(template_name, bindings, query, page)
            if body is None:  # replayed run with no further recorded pages
                break
            page_rows = decode_results(body)
            rows.extend(page_rows)
            if len(page_rows) < self.page_size:
                break
            page += 1
        return rows

    def _fetch_page(self, template_name: str, bindings: dict, query: str, page: int):
        key = self._response_key(template_name, bindings, page)
        if self.replay_dir is not None:
            path = self.replay_dir / key
            if not path.exists():
                if page == 0:
                    raise EndpointUnreachable(f"no recorded response {path}")
                return None
            return path.read_text(encoding="utf-8")
        paged = f"{query}\nLIMIT {self.page_size} OFFSET {page * self.page_size}"
        body = self._http_post(paged)
        if self.record_dir is not None:
            self.record_dir.mkdir(parents=True, exist_ok=True)
            (self.record_dir / key).write_text(body, encoding="utf-8")
        return body


DOI_PREFIX = "https://doi.org/"
SCHOLAR_PREFIX = "https://scholar.google.com/"
_WIKIDATA_QID_RE = re.compile(r"(Q[1-9]\d*)$")


def papers_of_proceedings(client: SparqlClient, proceedings_iri: str) -> list:
    """PaperRecords with the DOI prefix verified client-side and IRI-deduped."""
    rows = client.run_query("dblp_papers", {"proceedings_uri": proceedings_iri})
    seen = set()
    papers = []
    for row in rows:
        iri, title, doi = row.get("paper"), row.get("title"), row.get("doi")
        if not iri or not title or not doi:
            continue
        if not doi.startswith(DOI_PREFIX):
            log.warning("dropping %s: DOI %r fails the prefix filter", iri, doi)
            continue
        if iri in seen:
            continue
        seen.add(iri)
        papers.append(
            PaperRecord(
                iri=iri,
                title=title,
                doi=doi,
                pages=row.get("pages") or "",
                year=int(row["year"]) if row.get("year") else 0,
            )
        )
    return papers


@dataclass(frozen=True)
class AuthorHarvest:
    signatures: tuple
    flagged_papers: tuple  # papers whose ordinal sequence is not 1..n


def authors_of_proceedings(client: SparqlClient, proceedings_iri: str) -> AuthorHarvest:
    rows = client.run_query("dblp_signatures", {"proceedings_uri": proceedings_iri})
    signatures = []
    seen = set()
    for row in rows:
        paper, name, ordinal = row.get("paper"), row.get("name"), row.get("ordinal")
        if not paper or not name or ordinal is None:
            continue
        try:
            ordinal_n = int(ordinal)
        except ValueError:
            continue
        key = (paper, ordinal_n, name)
        if key in seen:
            continue
        seen.add(key)
        wikidata = row.get("wikidata")
        if wikidata:
            m = _WIKIDATA_QID_RE.search(wikidata)
            wikidata = m.group(1) if m else None
        scholar = row.get("scholar")
        if scholar and not scholar.startswith(SCHOLAR_PREFIX):
            scholar = None
        signatures.append(
            PersonSignature(
                paper_iri=paper,
                name=name,
                ordinal=ordinal_n,
                orcid=row.get("orcid"),
                wikidata=wikidata,
                scholar=scholar,
            )
        )
    flagged = []
    by_paper: dict = {}
    for sig in signatures:
        by_paper.setdefault(sig.paper_iri, []).append(sig.ordinal)
    for paper, ordinals in by_paper.items():
        if sorted(ordinals) != list(range(1, len(ordinals) + 1)):
            flagged.append(paper)
            log.warning("ordinal sequence for %s has gaps or duplicates: %s", paper, ordinals)
    return AuthorHarvest(signatures=tuple(signatures), flagged_papers=tuple(sorted(flagged)))


_KIND_PATTERNS = {
    "workshop": "workshop",
    "tutorial": "tutorial",
    "panel": "panel",
    "keynote": "keynote",
    "invitedtalk": "keynote",
}


@dataclass(frozen=True)
class SubEventHarvest:
    events: tuple
    skipped: int


def subevents_of_conference(
    client: SparqlClient, conference_iri: str, parent_key: str
) -> SubEventHarvest:
    """Sub-events classified by type local name; unknown types are skipped."""
    rows = client.run_query("scholarlydata_subevents", {"conference_uri": conference_iri})
    grouped: dict = {}
    for row in rows:
        iri = row.get("event")
        if not iri:
            continue
        entry = grouped.setdefault(iri, {"types": set(), "label": ""})
        if row.get("type"):
            entry["types"].add(row["type"])
        if row.get("label"):
            entry["label"] = row["label"]
    events = []
    skipped = 0
    for iri, entry in grouped.items():
        kind = None
        for type_iri in sorted(entry["types"]):
            local = re.split(r"[#/]", type_iri.rstrip("#/"))[-1].lower()
            kind = next((k for pat, k in _KIND_PATTERNS.items() if pat in local), None)
            if kind is not None:
                break
        if kind is None:
            skipped += 1
            log.warning("skipping sub-event %s of unknown type(s) %s", iri, sorted(entry["types"]))
            continue
        events.append(SubEvent(parent_key=parent_key, kind=kind, title=entry["label"], iri=iri))
    events.sort(key=lambda ev: ev.iri)
    return SubEventHarvest(events=tuple(events), skipped=skipped)

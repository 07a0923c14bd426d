"""Conference-website crawler: sitemap-seeded BFS with embedded-data capture.

Politeness defaults are conservative (200 pages, depth 3, 1s per-host delay,
robots.txt honored); conference sites are small. Traversal never leaves the
seed's registrable domain. An offline directory root can stand in for HTTP so
fixture sites crawl identically to live ones.
"""
from __future__ import annotations

import logging
import threading
import time
import xml.etree.ElementTree as ET
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from urllib import robotparser
from urllib.parse import urlsplit

from . import html_data
from .keywords import TASK_KEYWORDS, keyword_score

log = logging.getLogger(__name__)


class SeedUnreachable(RuntimeError):
    pass


class OfflineViolation(RuntimeError):
    """Raised when an HTTP fetch is attempted under --offline."""


@dataclass(frozen=True)
class CrawlLimits:
    max_pages: int = 200
    max_depth: int = 3
    per_host_delay: float = 1.0
    concurrency: int = 4


@dataclass(frozen=True)
class PageRecord:
    url: str
    fetched_at: str
    html: str
    text: str
    embedded: tuple
    depth: int

    def to_dict(self) -> dict:
        return {
            "url": self.url,
            "fetched_at": self.fetched_at,
            "html": self.html,
            "text": self.text,
            "embedded": [
                {"syntax": it.syntax, "payload": it.payload, "source_url": it.source_url}
                for it in self.embedded
            ],
            "depth": self.depth,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "PageRecord":
        return cls(
            url=raw["url"],
            fetched_at=raw.get("fetched_at", ""),
            html=raw.get("html", ""),
            text=raw.get("text", ""),
            embedded=tuple(
                html_data.StructuredItem(
                    syntax=it["syntax"], payload=it["payload"], source_url=it["source_url"]
                )
                for it in raw.get("embedded", ())
            ),
            depth=raw.get("depth", 0),
        )


# Pragmatic multi-part public suffixes; conference hosts rarely go beyond these.
_MULTI_SUFFIXES = {
    "co.uk", "ac.uk", "org.uk", "gov.uk", "co.jp", "ac.jp", "com.au", "org.au",
    "edu.au", "ac.at", "or.at", "co.at", "co.nz", "ac.nz", "com.br", "org.br",
    "co.in", "ac.in", "edu.cn", "com.cn", "ac.be", "ac.il",
}


def registrable_domain(host: str) -> str:
    parts = host.lower().strip(".").split(".")
    if len(parts) >= 3 and ".".join(parts[-2:]) in _MULTI_SUFFIXES:
        return ".".join(parts[-3:])
    if len(parts) >= 2:
        return ".".join(parts[-2:])
    return host.lower()


def _normalize_url(url: str) -> str:
    parts = urlsplit(url)
    path = parts.path or "/"
    return f"{parts.scheme}://{parts.netloc}{path}" + (f"?{parts.query}" if parts.query else "")


class HttpFetcher:
    """requests-backed fetcher; refuses to run when offline mode is set."""

    def __init__(self, timeout: float = 20.0, offline: bool = False, session=None):
        self.timeout = timeout
        self.offline = offline
        self._session = session

    def fetch(self, url: str):
        if self.offline:
            raise OfflineViolation(f"network egress forbidden, tried {url}")
        import requests

        if self._session is None:
            self._session = requests.Session()
            self._session.headers["User-Agent"] = "confmeta-crawler/0.1"
        try:
            resp = self._session.get(url, timeout=self.timeout)
        except requests.RequestException as exc:
            return 599, "", str(exc)
        return resp.status_code, resp.headers.get("Content-Type", ""), resp.text


class DirectoryFetcher:
    """Serves a directory of fixture files as if it were the site's host."""

    def __init__(self, root):
        self.root = Path(root)

    def fetch(self, url: str):
        parts = urlsplit(url)
        rel = parts.path.lstrip("/") or "index.html"
        path = self.root / rel
        if path.is_dir():
            path = path / "index.html"
        if not path.is_file():
            return 404, "", ""
        content_type = "text/html" if path.suffix in (".html", ".htm") else "text/plain"
        if path.suffix == ".xml":
            content_type = "application/xml"
        return 200, content_type, path.read_text(encoding="utf-8")


class _HostThrottle:
    """Serializes fetches per host and enforces the per-host delay."""

    def __init__(self, delay: float):
        self.delay = delay
        self._locks: dict = {}
        self._last: dict = {}
        self._guard = threading.Lock()

    def wait(self, host: str):
        with self._guard:
            lock = self._locks.setdefault(host, threading.Lock())
        with lock:
            last = self._last.get(host)
            if last is not None and self.delay > 0:
                remaining = self.delay - (time.monotonic() - last)
                if remaining > 0:
                    time.sleep(remaining)
            self._last[host] = time.monotonic()


def _parse_sitemap(body: str) -> list:
    try:
        root = ET.fromstring(body)
    except ET.ParseError:
        return []
    urls = []
    for el in root.iter():
        if el.tag.endswith("loc") and el.text:
            urls.append(el.text.strip())
    return urls


def _now_iso() -> str:
    import os
    from datetime import datetime, timezone

    fixed = os.environ.get("CONFMETA_FIXED_TIME")
    if fixed:
        return fixed
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def crawl(
    seed_url: str,
    limits: CrawlLimits = CrawlLimits(),
    fetcher=None,
    offline_root=None,
    respect_robots: bool = True,
) -> list:
    """Breadth-first crawl from the seed; sitemap URLs are enqueued first.

    Returns at most limits.max_pages PageRecords, never two with the same URL
    and never one outside the seed's registrable domain. A robots.txt that
    disallows the seed yields an empty result with a warning, not an error.
    """
    if fetcher is None:
        fetcher = DirectoryFetcher(offline_root) if offline_root else HttpFetcher()

    seed_url = _normalize_url(seed_url)
    seed_parts = urlsplit(seed_url)
    if seed_parts.scheme not in ("http", "https"):
        raise SeedUnreachable(f"unsupported scheme in {seed_url}")
    domain = registrable_domain(seed_parts.netloc)
    origin = f"{seed_parts.scheme}://{seed_parts.netloc}"

    robots = None
    if respect_robots:
        status, _, body = fetcher.fetch(origin + "/robots.txt")
        if status == 200 and body:
            robots = robotparser.RobotFileParser()
            robots.parse(body.splitlines())

    def allowed(url: str) -> bool:
        parts = urlsplit(url)
        if parts.scheme not in ("http", "https"):
            return False
        if registrable_domain(parts.netloc) != domain:
            return False
        if robots is not None and not robots.can_fetch("confmeta-crawler", url):
            return False
        return True

    if robots is not None and not robots.can_fetch("confmeta-crawler", seed_url):
        log.warning("robots.txt disallows the seed %s; returning no pages", seed_url)
        return []

    frontier = [seed_url]
    status, _, sitemap_body = fetcher.fetch(origin + "/sitemap.xml")
    if status == 200 and sitemap_body:
        for loc in _parse_sitemap(sitemap_body):
            loc = _normalize_url(loc)
            if allowed(loc) and loc not in frontier:
                frontier.append(loc)

    throttle = _HostThrottle(limits.per_host_delay)
    visited = set(frontier)
    records = []
    seed_failed = [False]

    def fetch_one(url: str, depth: int):
        throttle.wait(urlsplit(url).netloc)
        status, content_type, body = fetcher.fetch(url)
        if status != 200:
            if url == seed_url:
                seed_failed[0] = True
            log.info("skip %s (%s)", url, status)
            return None
        if "html" not in content_type and not body.lstrip().startswith("<"):
            return None
        return PageRecord(
            url=url,
            fetched_at=_now_iso(),
            html=body,
            text=html_data.extract_text(body, url),
            embedded=tuple(html_data.extract_embedded(body, url)),
            depth=depth,
        )

    depth = 0
    current = list(frontier)
    with ThreadPoolExecutor(max_workers=max(1, limits.concurrency)) as pool:
        while current and len(records) < limits.max_pages:
            batch = current[: limits.max_pages - len(records)]
            results = list(pool.map(lambda u: fetch_one(u, depth), batch))
            next_level = []
            for url, record in zip(batch, results):
                if record is None:
                    continue
                records.append(record)
                if depth < limits.max_depth:
                    for link in html_data.extract_links(record.html, url):
                        link = _normalize_url(link)
                        if link not in visited and allowed(link):
                            visited.add(link)
                            next_level.append(link)
            current = next_level
            depth += 1

    if not records and seed_failed[0]:
        raise SeedUnreachable(seed_url)
    return records


def select_chunks(pages: list, task: str) -> list:
    """(chunk text, source URL) pairs matching the task keywords, best first."""
    if task not in TASK_KEYWORDS:
        raise KeyError(f"unknown task {task!r}")
    scored = []
    for page_idx, page in enumerate(pages):
        sections = html_data.extract_sections(page.html, page.url)
        if sections:
            candidates = [(f"{s.heading}\n{s.text}", s.heading) for s in sections]
        else:
            candidates = [(page.text, None)]
        for sec_idx, (text, _) in enumerate(candidates):
            score = keyword_score(text, task)
            if score > 0:
                scored.append((-score, page_idx, sec_idx, text, page.url))
    scored.sort(key=lambda item: item[:3])
    return [(text, url) for *_, text, url in scored]


def write_pages_jsonl(pages: list, path) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for page in pages:
            fh.write(json.dumps(page.to_dict(), ensure_ascii=False) + "\n")


def read_pages_jsonl(path) -> list:
    import json

    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(PageRecord.from_dict(json.loads(line)))
    return out

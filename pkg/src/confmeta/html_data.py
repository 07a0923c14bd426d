"""HTML text/link/section extraction and embedded structured data.

Built on html.parser, which degrades on malformed markup instead of raising;
unparseable embedded blocks are skipped and counted, never fatal.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from html.parser import HTMLParser
from urllib.parse import urljoin

_BLOCK_TAGS = {
    "p", "div", "li", "ul", "ol", "table", "tr", "br", "section", "article",
    "header", "footer", "nav", "blockquote", "pre", "h1", "h2", "h3", "h4",
    "h5", "h6", "title",
}
_SKIP_TAGS = {"script", "style", "noscript"}
_HEADING_TAGS = {"h1", "h2", "h3", "h4", "h5", "h6"}
_VOID_TAGS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link",
    "meta", "param", "source", "track", "wbr",
}


@dataclass(frozen=True)
class StructuredItem:
    syntax: str  # microdata | json_ld | rdfa | opengraph
    payload: object
    source_url: str

    def __post_init__(self):
        if self.syntax not in ("microdata", "json_ld", "rdfa", "opengraph"):
            raise ValueError(f"bad syntax tag {self.syntax!r}")


@dataclass
class Section:
    heading: str
    text: str


class _PageParser(HTMLParser):
    """Single pass collecting text, links, heading sections, and embedded data."""

    def __init__(self, base_url: str):
        super().__init__(convert_charrefs=True)
        self.base_url = base_url
        self.links: list = []
        self.text_parts: list = []
        self.sections: list = []
        self.og_tags: dict = {}
        self.json_ld_blocks: list = []
        self.micro_items: list = []
        self.rdfa_items: list = []
        self.skipped_blocks = 0

        self._depth = 0
        self._skip_depth = 0
        self._in_json_ld = False
        self._json_ld_buf: list = []
        self._heading_tag = None
        self._heading_buf: list = []
        self._section = Section(heading="", text="")
        # (content_depth, node) / (content_depth, node, prop) frames
        self._micro_scopes: list = []
        self._micro_targets: list = []
        self._rdfa_scopes: list = []
        self._rdfa_targets: list = []

    def handle_starttag(self, tag, attrs):
        attrs = dict(attrs)
        if tag in _SKIP_TAGS:
            self._depth += 1
            if tag == "script" and attrs.get("type", "").strip().lower() == "application/ld+json":
                self._in_json_ld = True
                self._json_ld_buf = []
            else:
                self._skip_depth += 1
            return
        if tag == "a" and attrs.get("href"):
            self.links.append(urljoin(self.base_url, attrs["href"]))
        if tag == "meta":
            prop = attrs.get("property", "")
            if prop.startswith("og:") and attrs.get("content") is not None:
                self.og_tags[prop] = attrs["content"]
        if tag in _HEADING_TAGS:
            self._heading_tag = tag
            self._heading_buf = []
        if tag in _BLOCK_TAGS:
            self.text_parts.append("\n")
        if tag not in _VOID_TAGS:
            self._depth += 1
        self._start_microdata(tag, attrs)
        self._start_rdfa(tag, attrs)

    def handle_endtag(self, tag):
        if tag in _VOID_TAGS:
            return
        self._depth = max(0, self._depth - 1)
        for frames in (self._micro_scopes, self._micro_targets,
                       self._rdfa_scopes, self._rdfa_targets):
            while frames and frames[-1][0] > self._depth:
                frames.pop()
        if tag in _SKIP_TAGS:
            if tag == "script" and self._in_json_ld:
                self._finish_json_ld()
            elif self._skip_depth:
                self._skip_depth -= 1
            return
        if tag in _HEADING_TAGS and self._heading_tag == tag:
            heading = " ".join("".join(self._heading_buf).split())
            self._heading_tag = None
            self._section = Section(heading=heading, text="")
            self.sections.append(self._section)
        if tag in _BLOCK_TAGS:
            self.text_parts.append("\n")

    def handle_data(self, data):
        if self._in_json_ld:
            self._json_ld_buf.append(data)
            return
        if self._skip_depth:
            return
        if self._heading_tag is not None:
            self._heading_buf.append(data)
        else:
            self._section.text += data
        self.text_parts.append(data)
        for _, node, prop in self._micro_targets:
            node["properties"][prop] += data
        for _, node, prop in self._rdfa_targets:
            node["properties"][prop] += data

    # -- JSON-LD --------------------------------------------------------------

    def _finish_json_ld(self):
        self._in_json_ld = False
        raw = "".join(self._json_ld_buf).strip()
        if not raw:
            return
        try:
            self.json_ld_blocks.append(json.loads(raw))
        except json.JSONDecodeError:
            self.skipped_blocks += 1

    # -- Microdata (simplified nested itemscope/itemprop trees) ----------------

    def _start_microdata(self, tag, attrs):
        has_scope = "itemscope" in attrs
        prop = attrs.get("itemprop")
        if has_scope:
            node = {"type": attrs.get("itemtype", ""), "properties": {}}
            if prop and self._micro_scopes:
                self._micro_scopes[-1][1]["properties"][prop] = node
            elif not self._micro_scopes:
                self.micro_items.append(node)
            if tag not in _VOID_TAGS:
                self._micro_scopes.append((self._depth, node))
        elif prop and self._micro_scopes:
            node = self._micro_scopes[-1][1]
            value = (
                attrs.get("content")
                or attrs.get("datetime")
                or (attrs.get("href") if tag in ("a", "link", "area") else None)
                or (attrs.get("src") if tag in ("img", "audio", "video", "source") else None)
            )
            if value is not None:
                if tag in ("a", "link", "area", "img"):
                    value = urljoin(self.base_url, value)
                node["properties"][prop] = value
            elif tag not in _VOID_TAGS:
                node["properties"][prop] = ""
                self._micro_targets.append((self._depth, node, prop))

    # -- RDFa (simplified typeof/property trees) --------------------------------

    def _start_rdfa(self, tag, attrs):
        typeof = attrs.get("typeof")
        prop = attrs.get("property", "")
        if typeof is not None:
            node = {"type": typeof, "properties": {}}
            if prop and self._rdfa_scopes:
                self._rdfa_scopes[-1][1]["properties"][prop] = node
            elif not self._rdfa_scopes:
                self.rdfa_items.append(node)
            if tag not in _VOID_TAGS:
                self._rdfa_scopes.append((self._depth, node))
        elif prop and not prop.startswith("og:") and self._rdfa_scopes:
            node = self._rdfa_scopes[-1][1]
            value = attrs.get("content") or attrs.get("href")
            if value is not None:
                node["properties"][prop] = value
            elif tag not in _VOID_TAGS:
                node["properties"][prop] = ""
                self._rdfa_targets.append((self._depth, node, prop))


def _squash_text(parts: list) -> str:
    text = "".join(parts)
    text = re.sub(r"[ \t]+", " ", text)
    text = re.sub(r" ?\n ?", "\n", text)
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip()


def parse_page(html: str, base_url: str) -> _PageParser:
    parser = _PageParser(base_url)
    try:
        parser.feed(html)
        parser.close()
    except Exception:  # pragma: no cover - html.parser rarely raises
        parser.skipped_blocks += 1
    return parser


def extract_text(html: str, base_url: str = "") -> str:
    return _squash_text(parse_page(html, base_url).text_parts)


def extract_links(html: str, base_url: str) -> list:
    seen = set()
    out = []
    for link in parse_page(html, base_url).links:
        link = link.split("#", 1)[0]
        if link and link not in seen:
            seen.add(link)
            out.append(link)
    return out


def extract_sections(html: str, base_url: str = "") -> list:
    """(heading, text) pairs delimited by h1..h6 elements."""
    parser = parse_page(html, base_url)
    out = []
    for section in parser.sections:
        text = re.sub(r"[ \t]+", " ", section.text)
        text = re.sub(r"\n{3,}", "\n\n", text).strip()
        if section.heading:
            out.append(Section(heading=section.heading, text=text))
    return out


def extract_embedded(html: str, base_url: str) -> list:
    """One StructuredItem per top-level embedded block, syntax tagged."""
    parser = parse_page(html, base_url)
    items = []
    for block in parser.json_ld_blocks:
        items.append(StructuredItem(syntax="json_ld", payload=block, source_url=base_url))
    for node in parser.micro_items:
        items.append(StructuredItem(syntax="microdata", payload=node, source_url=base_url))
    for node in parser.rdfa_items:
        items.append(StructuredItem(syntax="rdfa", payload=node, source_url=base_url))
    if parser.og_tags:
        items.append(
            StructuredItem(syntax="opengraph", payload=dict(parser.og_tags), source_url=base_url)
        )
    return items

"""Pipeline configuration: one JSON file, secrets via environment variables."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional


@dataclass(frozen=True)
class ConferenceMeta:
    key: str
    qid: str
    label: str
    series: str
    year: int


@dataclass(frozen=True)
class WebsiteConfig:
    seed_url: str
    offline_root: Optional[Path] = None
    max_pages: int = 200
    max_depth: int = 3
    per_host_delay: float = 1.0


@dataclass(frozen=True)
class FrontmatterConfig:
    path: Path
    source_url: str


@dataclass(frozen=True)
class SparqlConfig:
    dblp_endpoint: str = ""
    scholarlydata_endpoint: str = ""
    proceedings_iri: str = ""
    conference_iri: str = ""
    replay_dir: Optional[Path] = None
    record_dir: Optional[Path] = None


@dataclass(frozen=True)
class ProviderSettings:
    kind: str = "mock"  # mock | http
    replay_dir: Optional[Path] = None
    endpoint: str = ""
    model: str = ""
    shape: str = "openai"
    auth_env: str = "CONFMETA_LLM_TOKEN"


@dataclass(frozen=True)
class ReconcileConfig:
    index_path: Path
    auto: float = 0.95
    review: float = 0.75


@dataclass(frozen=True)
class PipelineConfig:
    conference: ConferenceMeta
    website: Optional[WebsiteConfig]
    frontmatter: Optional[FrontmatterConfig]
    sparql: Optional[SparqlConfig]
    provider: ProviderSettings
    reconcile: ReconcileConfig
    vocabulary_path: Path
    schema_path: Optional[Path] = None
    tasks: tuple = ("counts", "roles", "pc_members", "deadlines")
    offline: bool = False

    @classmethod
    def load(cls, path, offline: bool = False) -> "PipelineConfig":
        path = Path(path)
        raw = json.loads(path.read_text(encoding="utf-8"))
        base = path.parent

        def resolve(p):
            return (base / p).resolve() if p else None

        conf = raw["conference"]
        website = None
        if raw.get("website"):
            w = raw["website"]
            website = WebsiteConfig(
                seed_url=w["seed_url"],
                offline_root=resolve(w.get("offline_root")),
                max_pages=w.get("max_pages", 200),
                max_depth=w.get("max_depth", 3),
                per_host_delay=w.get("per_host_delay", 1.0),
            )
        fm = None
        if raw.get("frontmatter"):
            fm = FrontmatterConfig(
                path=resolve(raw["frontmatter"]["path"]),
                source_url=raw["frontmatter"]["source_url"],
            )
        sparql = None
        if raw.get("sparql"):
            s = raw["sparql"]
            sparql = SparqlConfig(
                dblp_endpoint=s.get("dblp_endpoint", ""),
                scholarlydata_endpoint=s.get("scholarlydata_endpoint", ""),
                proceedings_iri=s.get("proceedings_iri", ""),
                conference_iri=s.get("conference_iri", ""),
                replay_dir=resolve(s.get("replay_dir")),
                record_dir=resolve(s.get("record_dir")),
            )
        p = raw.get("provider", {})
        provider = ProviderSettings(
            kind=p.get("kind", "mock"),
            replay_dir=resolve(p.get("replay_dir")),
            endpoint=p.get("endpoint", ""),
            model=p.get("model", ""),
            shape=p.get("shape", "openai"),
            auth_env=p.get("auth_env", "CONFMETA_LLM_TOKEN"),
        )
        r = raw["reconcile"]
        reconcile = ReconcileConfig(
            index_path=resolve(r["index_path"]),
            auto=r.get("auto", 0.95),
            review=r.get("review", 0.75),
        )
        return cls(
            conference=ConferenceMeta(
                key=conf["key"], qid=conf["qid"], label=conf["label"],
                series=conf.get("series", ""), year=conf.get("year", 0),
            ),
            website=website,
            frontmatter=fm,
            sparql=sparql,
            provider=provider,
            reconcile=reconcile,
            vocabulary_path=resolve(raw["vocabulary_path"]),
            schema_path=resolve(raw.get("schema_path")),
            tasks=tuple(raw.get("tasks", ("counts", "roles", "pc_members", "deadlines"))),
            offline=offline or raw.get("offline", False),
        )

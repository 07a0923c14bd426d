#!/usr/bin/env python3
"""Build the curation-queue fixture store used by API and UI flow tests.

Seeds five pending records for the ESWC 2020 case: three submitted/accepted
rows whose per-track denominators (119/31/18) never appear in the preface, and
two website deadlines (one miscategorized). The job is parked at the review
gate, so export stays blocked until a curator clears the queue.

Usage: python scripts/make_ui_fixture.py <store_dir>
"""
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from confmeta.llm_extractor import ExtractionRecord  # noqa: E402
from confmeta.orchestrator import pipeline  # noqa: E402
from confmeta.orchestrator.config import PipelineConfig  # noqa: E402
from confmeta.orchestrator.store import Store  # noqa: E402

PREFACE = (
    "The main scientific program of ESWC 2020 contained 39 papers: 26 papers "
    "in the research track, 8 papers in the resources track, and 5 papers in "
    "the in-use track. The papers were selected out of 166 paper submissions, "
    "with a total acceptance rate of 23.5% (22% for the research track, 26% "
    "for the resources track, and 28% for the in-use track)."
)
PREFACE_URL = "https://proceedings.example/eswc2020/frontmatter"

DATES_TEXT = (
    "Important Dates. Poster and demo papers are due June 1, 2020. "
    "Full paper submission closed on March 13, 2020."
)
DATES_URL = "https://eswc2020.example/dates.html"


def counts_record(track, submitted, accepted):
    row = {"track": track, "submitted": submitted, "accepted": accepted}
    return ExtractionRecord(
        id=f"rec-eswc2020-counts-{track}",
        task="counts",
        conference_key="eswc2020",
        source_url=PREFACE_URL,
        chunk_span=(0, len(PREFACE)),
        row=row,
        grounding={"track": "grounded", "submitted": "ungrounded", "accepted": "grounded"},
        review_state="needs_review",
        snippet=PREFACE,
        model="claude-3",
    )


def deadline_record(suffix, kind, date, grounding_date):
    return ExtractionRecord(
        id=f"rec-eswc2020-deadline-{suffix}",
        task="deadlines",
        conference_key="eswc2020",
        source_url=DATES_URL,
        chunk_span=(0, len(DATES_TEXT)),
        row={"kind": kind, "date": date},
        grounding={"kind": "not_applicable", "date": grounding_date},
        review_state="needs_review",
        snippet=DATES_TEXT,
        model="claude-3",
    )


def build(store_dir) -> Store:
    store = Store(store_dir)
    config_path = REPO / "tests" / "fixtures" / "pipeline_eswc2020.json"
    config = PipelineConfig.load(config_path)
    pipeline.create_job(store, config, config_path=str(config_path))
    # No sources are configured for this conference; park the job at the gate.
    store.update_job("job-eswc2020", {"stage": "review"})

    store.put_record(counts_record("research", "119", "26"))
    store.put_record(counts_record("resources", "31", "8"))
    store.put_record(counts_record("in-use", "18", "5"))
    # The model filed the poster deadline as a full-paper one; the date itself
    # is on the page, so only a curator can catch the miscategorization.
    store.put_record(deadline_record("poster", "paper submission", "2020-06-01", "grounded"))
    # And one date that is not on the page at all.
    store.put_record(deadline_record("abstract", "abstract submission", "2020-02-28", "ungrounded"))
    return store


def main():
    if len(sys.argv) != 2:
        raise SystemExit(__doc__)
    store = build(Path(sys.argv[1]))
    pending = store.pending_count()
    print(f"fixture store at {sys.argv[1]}: {pending} pending records")


if __name__ == "__main__":
    main()

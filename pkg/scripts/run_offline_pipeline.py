#!/usr/bin/env python3
"""Run the fixture conference through the whole offline pipeline.

Usage:
    python scripts/run_offline_pipeline.py [store_dir]

Crawls the checked-in fixture site, ingests the front-matter text, replays the
recorded SPARQL responses and mock LLM outputs, reconciles against the fixture
entity index, and compiles the QuickStatements batch. Prints the batch and its
state hash. With no store_dir a temp directory is used.
"""
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from confmeta.orchestrator import pipeline  # noqa: E402
from confmeta.orchestrator.config import PipelineConfig  # noqa: E402
from confmeta.orchestrator.store import Store  # noqa: E402


def main():
    store_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp()) / "store"
    config = PipelineConfig.load(REPO / "tests" / "fixtures" / "pipeline_iswc2023.json")
    store = Store(store_dir)
    job = pipeline.create_job(store, config)
    for stage in ("harvest", "extract", "reconcile", "review", "compile"):
        job = pipeline.run_stage(store, job["id"], stage, config)
        print(f"[{stage}] -> {job['stage']}", file=sys.stderr)
    batch = store.get_batch(job["counters"]["batch_id"])
    sys.stdout.write("\n".join(batch["lines"]) + "\n")
    print(f"stats: {batch['stats']}", file=sys.stderr)
    print(f"state_hash={store.state_hash()}", file=sys.stderr)
    print(f"store: {store_dir}", file=sys.stderr)


if __name__ == "__main__":
    main()

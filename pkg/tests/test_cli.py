import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from confmeta.orchestrator.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def runner():
    return CliRunner()


def _base_args(tmp_path):
    return ["--store", str(tmp_path / "store"),
            "--config", str(FIXTURES / "pipeline_iswc2023.json"),
            "--offline"]


class TestStageVerbs:
    def test_harvest_web_writes_pages(self, runner, tmp_path):
        out = tmp_path / "pages.jsonl"
        result = runner.invoke(main, _base_args(tmp_path) + ["harvest-web", "--out", str(out)])
        assert result.exit_code == 0, result.output
        lines = out.read_text(encoding="utf-8").strip().splitlines()
        assert len(lines) == 4
        assert all("url" in json.loads(ln) for ln in lines)

    def test_ingest_frontmatter_writes_chunks(self, runner, tmp_path):
        out = tmp_path / "chunks.jsonl"
        result = runner.invoke(
            main, _base_args(tmp_path) + ["ingest-frontmatter", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        chunks = [json.loads(ln) for ln in out.read_text().strip().splitlines()]
        assert any(c["heading"] == "Preface" for c in chunks)
        assert all(c["source_url"] for c in chunks)

    def test_harvest_sparql_replays(self, runner, tmp_path):
        result = runner.invoke(main, _base_args(tmp_path) + ["harvest-sparql"])
        assert result.exit_code == 0, result.output
        assert "2 papers" in result.output

    def test_full_stage_sequence_to_batch(self, runner, tmp_path):
        args = _base_args(tmp_path)
        for verb in ("harvest", "extract", "reconcile", "review"):
            result = runner.invoke(main, args + [verb])
            assert result.exit_code == 0, f"{verb}: {result.output}"
            assert "state_hash=" in result.output
        result = runner.invoke(main, args + ["compile"])
        assert result.exit_code == 0, result.output
        assert "statements" in result.output

    def test_export_records_and_eval(self, runner, tmp_path):
        args = _base_args(tmp_path)
        for verb in ("harvest", "extract"):
            assert runner.invoke(main, args + [verb]).exit_code == 0
        pred = tmp_path / "records.jsonl"
        assert runner.invoke(main, args + ["export-records", "--out", str(pred)]).exit_code == 0

        report_base = tmp_path / "report"
        result = runner.invoke(main, [
            "eval", "--pred", str(pred), "--gold", str(FIXTURES / "gold"),
            "--report", str(report_base),
        ])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "report.txt").exists()
        payload = json.loads((tmp_path / "report.json").read_text())
        counts_rows = [r for r in payload if r["task"] == "counts"]
        assert counts_rows and all(r["f1"] == 1.0 for r in counts_rows)

    def test_report_command(self, runner, tmp_path):
        args = _base_args(tmp_path)
        for verb in ("harvest", "extract", "reconcile"):
            assert runner.invoke(main, args + [verb]).exit_code == 0
        result = runner.invoke(main, args + ["report", "--series", "iswc",
                                             "--metric", "participants"])
        assert result.exit_code == 0, result.output
        assert "ISWC 2023,2023,600" in result.output

    def test_review_verb_blocks_on_pending(self, runner, tmp_path):
        args = _base_args(tmp_path)
        for verb in ("harvest", "extract"):
            assert runner.invoke(main, args + [verb]).exit_code == 0
        # skip reconcile: entity-bearing records are still unresolved, but the
        # review gate only counts needs_review rows, so inject one
        from confmeta.orchestrator.store import Store
        from confmeta.llm_extractor import ExtractionRecord

        store = Store(tmp_path / "store")
        store.put_record(ExtractionRecord(
            id="rec-hold", task="counts", conference_key="iswc2023",
            source_url="u", chunk_span=(0, 1),
            row={"track": "x", "submitted": "1", "accepted": "1"},
            grounding={"submitted": "ungrounded"},
            review_state="needs_review",
        ))
        result = runner.invoke(main, args + ["reconcile"])
        assert result.exit_code == 0
        result = runner.invoke(main, args + ["review"])
        assert result.exit_code == 3
        assert "records need review" in result.output

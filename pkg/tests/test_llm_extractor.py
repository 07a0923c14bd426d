import pytest

from confmeta.llm_extractor import (
    GROUNDED,
    NOT_APPLICABLE,
    UNGROUNDED,
    HeaderMismatch,
    MissingSentinel,
    MockProvider,
    ProviderError,
    RaggedRow,
    SourceChunk,
    extract,
    ground_check,
    parse_named_date,
    parse_output,
    render_prompt,
    review_state_for,
)
from confmeta.prompts import SENTINEL, UnknownTask

EXAMPLE_1_OUTPUT = """track, submitted, accepted
research, 98, 19
in-use, 23, 9
resource, 46, 13
--- complete ----
"""

EXAMPLE_2_OUTPUT = """track, submitted, accepted
research, 245, 52
PhD symposium, - , 10
demo, - , 17
--- complete ----
"""

# Preface excerpt whose extraction produced per-track denominators that the
# source never states; the grounding check has to catch exactly those cells.
ESWC_2020_PREFACE = (
    "The main scientiﬁc program of ESWC 2020 contained 39 papers: 26 papers "
    "in the research track, 8 papers in the resources track, and 5 papers in "
    "the in-use track. The papers were selected out of 166 paper submissions, "
    "with a total acceptance rate of 23.5% (22% for the research track, 26% "
    "for the resources track, and 28% for the in-use track)."
)


class TestRenderPrompt:
    def test_counts_prompt_carries_header_and_shots(self):
        pair = render_prompt("counts", "some preface text")
        assert pair.shot_count == 2
        assert "track, submitted, accepted" in pair.human
        assert "ESWC 2023 contained 41 papers" in pair.human
        assert "245 full paper submissions" in pair.human
        assert pair.human.count("some preface text") == 1
        assert "data entry clerk" in pair.system

    @pytest.mark.parametrize("task", ["counts", "roles", "pc_members", "deadlines"])
    def test_sentinel_instruction_everywhere(self, task):
        pair = render_prompt(task, "text")
        assert '"--- complete ----"' in pair.human

    def test_deterministic(self):
        assert render_prompt("counts", "s") == render_prompt("counts", "s")

    def test_unknown_task(self):
        with pytest.raises(UnknownTask):
            render_prompt("recipes", "text")

    def test_empty_source_rejected(self):
        with pytest.raises(ValueError):
            render_prompt("counts", "")


class TestParseOutput:
    def test_example_1_rows(self):
        rows = parse_output(EXAMPLE_1_OUTPUT, "counts")
        assert rows == [
            {"track": "research", "submitted": "98", "accepted": "19"},
            {"track": "in-use", "submitted": "23", "accepted": "9"},
            {"track": "resource", "submitted": "46", "accepted": "13"},
        ]

    def test_example_2_rows_with_absent(self):
        rows = parse_output(EXAMPLE_2_OUTPUT, "counts")
        assert rows == [
            {"track": "research", "submitted": "245", "accepted": "52"},
            {"track": "PhD symposium", "submitted": None, "accepted": "10"},
            {"track": "demo", "submitted": None, "accepted": "17"},
        ]

    def test_missing_sentinel(self):
        with pytest.raises(MissingSentinel):
            parse_output("track, submitted, accepted\nresearch, 1, 1\n", "counts")

    def test_header_mismatch(self):
        bad = "name, role\nalice, chair\n--- complete ----\n"
        with pytest.raises(HeaderMismatch):
            parse_output(bad, "counts")

    def test_ragged_row_aborts(self):
        bad = "track, submitted, accepted\nresearch, 1\n--- complete ----\n"
        with pytest.raises(RaggedRow):
            parse_output(bad, "counts")

    def test_deadline_dates_normalized_to_iso(self):
        raw = "kind, date\npaper submission, 9 May 2023\n--- complete ----\n"
        rows = parse_output(raw, "deadlines")
        assert rows[0]["date"] == "2023-05-09"

    def test_named_date_variants(self):
        assert str(parse_named_date("May 9, 2023")) == "2023-05-09"
        assert str(parse_named_date("9 May 2023")) == "2023-05-09"
        assert str(parse_named_date("2023-05-09")) == "2023-05-09"
        assert parse_named_date("05/09/2023") is None


class TestGroundCheck:
    def test_hallucinated_denominators_ungrounded(self):
        rows = [
            {"track": "research", "submitted": "119", "accepted": "26"},
            {"track": "resources", "submitted": "31", "accepted": "8"},
            {"track": "in-use", "submitted": "18", "accepted": "5"},
        ]
        verdicts = ground_check(rows, ESWC_2020_PREFACE, "counts")
        for v in verdicts:
            assert v["submitted"] == UNGROUNDED
            assert v["accepted"] == GROUNDED
            assert v["track"] == GROUNDED
        assert all(review_state_for(v) == "needs_review" for v in verdicts)

    def test_stated_totals_grounded(self):
        rows = [{"track": "research", "submitted": "166", "accepted": "26"}]
        verdicts = ground_check(rows, ESWC_2020_PREFACE, "counts")
        assert verdicts[0] == {"track": GROUNDED, "submitted": GROUNDED, "accepted": GROUNDED}
        assert review_state_for(verdicts[0]) == "auto_ok"

    def test_empty_rows(self):
        assert ground_check([], "text", "counts") == []

    def test_absent_cells_not_applicable(self):
        rows = [{"track": "demo", "submitted": None, "accepted": "17"}]
        verdicts = ground_check(rows, "the demo track accepted 17 papers", "counts")
        assert verdicts[0]["submitted"] == NOT_APPLICABLE

    def test_category_columns_not_checked(self):
        rows = [{"kind": "paper submission", "date": "2023-05-09"}]
        verdicts = ground_check(rows, "Papers are due May 9, 2023.", "deadlines")
        assert verdicts[0]["kind"] == NOT_APPLICABLE
        assert verdicts[0]["date"] == GROUNDED

    def test_name_substring_fold(self):
        rows = [{"name": "IRENE   CELINO", "track": "research", "role": "SPC"}]
        verdicts = ground_check(rows, "pc: Irene Celino (research)", "pc_members")
        assert verdicts[0]["name"] == GROUNDED

    def test_substring_numbers_do_not_ground(self):
        rows = [{"track": "research", "submitted": "6", "accepted": None}]
        verdicts = ground_check(rows, "research: 166 submissions", "counts")
        assert verdicts[0]["submitted"] == UNGROUNDED


class TestMockProviderExtract:
    def test_counts_fixture_all_grounded(self, fixtures):
        provider = MockProvider(fixtures / "llm")
        preface = (
            "The main scientific program of ISWC 2023 contained 41 papers selected "
            "out of 167 submissions (98 research, 23 in-use, 46 resource): 19 papers "
            "in the research track, 9 in the in-use track, and 13 in the resource track."
        )
        chunks = [SourceChunk(text=preface, source_url="https://proceedings.example/x")]
        batch = extract("counts", chunks, provider, "iswc2023")
        assert len(batch.records) == 3
        assert not batch.errors
        assert all(r.review_state == "auto_ok" for r in batch.records)

    def test_missing_key_is_error(self, fixtures, tmp_path):
        provider = MockProvider(tmp_path)
        chunks = [SourceChunk(text="text", source_url="u")]
        batch = extract("counts", chunks, provider, "iswc2023")
        assert not batch.records
        assert len(batch.errors) == 1

    def test_sentinel_less_garbage_records_chunk_error(self, fixtures, tmp_path):
        (tmp_path / "x__counts.txt").write_text("no csv here at all", encoding="utf-8")
        provider = MockProvider(tmp_path)
        batch = extract("counts", [SourceChunk(text="t", source_url="u")], provider, "x")
        assert not batch.records
        assert len(batch.errors) == 1
        assert "MissingSentinel" in batch.errors[0]["error"]

    def test_merge_is_idempotent(self, fixtures):
        provider = MockProvider(fixtures / "llm")
        preface = "98 research submissions, 19 accepted; 23 in-use, 9; 46 resource, 13."
        chunk = SourceChunk(text=preface, source_url="u")
        once = extract("counts", [chunk], provider, "iswc2023")
        twice = extract("counts", [chunk, chunk], provider, "iswc2023")
        assert {r.id for r in once.records} == {r.id for r in twice.records}
        assert len(twice.records) == 3

    def test_merge_prefers_grounded(self, fixtures):
        provider = MockProvider(fixtures / "llm")
        with_numbers = SourceChunk(
            text="98 research (19 accepted), 23 in-use (9), 46 resource (13)",
            source_url="a",
        )
        without = SourceChunk(text="nothing numeric", source_url="b")
        batch = extract("counts", [without, with_numbers], provider, "iswc2023")
        assert all(r.review_state == "auto_ok" for r in batch.records)

    def test_pc_members_fixture(self, fixtures):
        provider = MockProvider(fixtures / "llm")
        chunk = SourceChunk(
            text="Senior Program Committee - Research Track\nIrene Celino\n"
                 "Miguel Santos\nProgram Committee\nWei Zhang",
            source_url="https://proceedings.example/x",
        )
        batch = extract("pc_members", [chunk], provider, "iswc2023")
        rows = {r.row["name"]: r.row for r in batch.records}
        assert rows["Irene Celino"] == {"name": "Irene Celino", "track": "research", "role": "SPC"}

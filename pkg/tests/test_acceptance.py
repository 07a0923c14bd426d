"""Acceptance criteria, one test per criterion, each printing PASS/FAIL.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. The metric-regression criterion is expected red on one row: the
published claude-3/submitted-accepted/ISWC triple (P=1.00, R=0.89, F1=0.93)
is arithmetically self-inconsistent, so no confusion counts can reproduce it
within the stated tolerance (see the note in scripts/derive_eval_counts.py).
"""
import json
import signal
import socket
import subprocess
import sys
import time
from datetime import date
from decimal import Decimal
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

REPO = Path(__file__).parent.parent
FIXTURES = Path(__file__).parent / "fixtures"


def _criterion(name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    line = f"[ACCEPTANCE] {name}: {status}"
    if detail and not ok:
        line += f" ({detail})"
    print(line)
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# 1. Prompt/parse fidelity (zero tolerance, <1s)

EXAMPLE_1 = (
    "track, submitted, accepted\n"
    "research, 98, 19\n"
    "in-use, 23, 9\n"
    "resource, 46, 13\n"
    "--- complete ----\n"
)
EXAMPLE_2 = (
    "track, submitted, accepted\n"
    "research, 245, 52\n"
    "PhD symposium, - , 10\n"
    "demo, - , 17\n"
    "--- complete ----\n"
)


def test_prompt_parse_fidelity():
    from confmeta.llm_extractor import parse_output, render_prompt

    started = time.monotonic()
    pair = render_prompt("counts", "PREFACE BODY")
    ok = (
        "track, submitted, accepted" in pair.human
        and "--- complete ----" in pair.human
        and pair.shot_count == 2
        and pair.human.count("PREFACE BODY") == 1
    )
    rows_1 = {
        (r["track"], r["submitted"], r["accepted"]) for r in parse_output(EXAMPLE_1, "counts")
    }
    rows_2 = {
        (r["track"], r["submitted"], r["accepted"]) for r in parse_output(EXAMPLE_2, "counts")
    }
    ok = ok and rows_1 == {
        ("research", "98", "19"), ("in-use", "23", "9"), ("resource", "46", "13")
    }
    ok = ok and rows_2 == {
        ("research", "245", "52"), ("PhD symposium", None, "10"), ("demo", None, "17")
    }
    elapsed = time.monotonic() - started
    _criterion("prompt/parse fidelity", ok and elapsed < 1.0,
               f"rows_1={rows_1} rows_2={rows_2} elapsed={elapsed:.3f}s")


# ---------------------------------------------------------------------------
# 2. Grounding guard (exact, <1s)

ESWC_2020_PREFACE = (
    "The main scientiﬁc program of ESWC 2020 contained 39 papers: 26 papers "
    "in the research track, 8 papers in the resources track, and 5 papers in "
    "the in-use track. The papers were selected out of 166 paper submissions, "
    "with a total acceptance rate of 23.5% (22% for the research track, 26% "
    "for the resources track, and 28% for the in-use track)."
)


def test_grounding_guard():
    from confmeta.frontmatter import normalize_text
    from confmeta.llm_extractor import ground_check, review_state_for

    started = time.monotonic()
    text = normalize_text(ESWC_2020_PREFACE)
    hallucinated = [
        {"track": "research", "submitted": "119", "accepted": "26"},
        {"track": "resources", "submitted": "31", "accepted": "8"},
        {"track": "in-use", "submitted": "18", "accepted": "5"},
    ]
    verdicts = ground_check(hallucinated, text, "counts")
    flagged = all(v["submitted"] == "ungrounded" for v in verdicts)
    forced = all(review_state_for(v) == "needs_review" for v in verdicts)
    accepted_ok = all(v["accepted"] == "grounded" for v in verdicts)

    stated = [{"track": "research", "submitted": "166", "accepted": "26"}]
    stated_verdict = ground_check(stated, text, "counts")[0]
    passes = (
        stated_verdict["submitted"] == "grounded"
        and review_state_for(stated_verdict) == "auto_ok"
    )
    elapsed = time.monotonic() - started
    _criterion(
        "grounding guard",
        flagged and forced and accepted_ok and passes and elapsed < 1.0,
        f"verdicts={verdicts} stated={stated_verdict} elapsed={elapsed:.3f}s",
    )


# ---------------------------------------------------------------------------
# 3. Metric regression: all 16 published rows within +-0.005 through micro_prf

def test_metric_regression_published_rows():
    from confmeta.evaluator import micro_prf

    rows = json.loads((FIXTURES / "published_eval_rows.json").read_text(encoding="utf-8"))
    assert len(rows) == 16
    failures = []
    for row in rows:
        _, _, f1 = micro_prf(row["tp"], row["fp"], row["fn"])
        diff = abs(f1 - row["f1"])
        if diff > 0.005:
            failures.append(
                f"{row['task']}/{row['model']}/{row['series']}: "
                f"published f1={row['f1']} best achievable={f1:.4f} (diff {diff:.4f})"
            )
    _criterion(
        "metric regression (16 published P/R/F1 rows, +-0.005)",
        not failures,
        "; ".join(failures),
    )


# ---------------------------------------------------------------------------
# 4. End-to-end offline run: byte-identical golden batch, <30s, no network


def test_end_to_end_offline_golden(tmp_path, monkeypatch):
    from confmeta.orchestrator import pipeline
    from confmeta.orchestrator.config import PipelineConfig
    from confmeta.orchestrator.store import Store

    def no_network(*args, **kwargs):
        raise AssertionError("network egress attempted during the offline run")

    monkeypatch.setattr(socket.socket, "connect", no_network)

    started = time.monotonic()
    config = PipelineConfig.load(FIXTURES / "pipeline_iswc2023.json")
    store = Store(tmp_path / "store")
    job = pipeline.create_job(store, config)
    for stage in ("harvest", "extract", "reconcile", "review", "compile"):
        job = pipeline.run_stage(store, job["id"], stage, config)
    elapsed = time.monotonic() - started

    batch_path = store.root / "artifacts" / "iswc2023" / f"{job['counters']['batch_id']}.qs"
    produced = batch_path.read_bytes()
    golden = (FIXTURES / "golden" / "iswc2023.qs").read_bytes()

    text = produced.decode("utf-8")
    patterns = {
        "P5804+P518+P3831": ("|P5804|", "|P518|", "|P3831|"),
        "P793+P585": ("|P793|", "|P585|"),
        "P859+P3831": ("|P859|", "|P3831|"),
        "P1346+P3831": ("|P1346|", "|P3831|"),
        "P5822+P518": ("|P5822|", "|P518|"),
    }
    missing = [
        name
        for name, needles in patterns.items()
        if not any(all(n in line for n in needles) for line in text.splitlines())
    ]
    _criterion(
        "end-to-end offline run (golden batch)",
        produced == golden and not missing and elapsed < 30.0,
        f"byte_equal={produced == golden} missing_patterns={missing} elapsed={elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# 5. QuickStatements round-trip property over 1,000 randomized values

from test_qs_compiler import all_values  # noqa: E402  (shared strategies)

_round_trip_failures = []


@settings(max_examples=1000, deadline=None)
@given(all_values)
def _check_round_trip(value):
    from confmeta.qs_compiler import parse_value, render_value

    if parse_value(render_value(value)) != value:
        _round_trip_failures.append(value)
        raise AssertionError(f"round trip failed for {value!r}")


def test_qs_round_trip_1000():
    _check_round_trip()
    _criterion("QS value round-trip (1,000 randomized values)",
               not _round_trip_failures, str(_round_trip_failures[:3]))


# ---------------------------------------------------------------------------
# 6. Reconciler invariants


def test_reconciler_invariants(tmp_path):
    from confmeta.kg_model import EntityRef
    from confmeta.reconciler import (
        CandidateMatch,
        EntityIndex,
        ReconcileSubject,
        candidates,
        resolve_batch,
        triage,
    )

    index = EntityIndex.load(FIXTURES / "entity_index.jsonl")

    # intra-batch duplicate prevention
    subjects = [
        ReconcileSubject(record_id="a", name="Irene Celino", orcid="0000-0001-9999-0001"),
        ReconcileSubject(record_id="b", name="IRENE  celino"),
        ReconcileSubject(record_id="c", name="Fresh Face"),
        ReconcileSubject(record_id="d", name="fresh face"),
    ]
    resolutions = resolve_batch(subjects, index, conference_key="k")
    by_record = {}
    for resolution in resolutions:
        for rid in resolution.record_ids:
            by_record[rid] = resolution
    dup_ok = (
        by_record["a"] is by_record["b"]
        and by_record["a"].triage.outcome == "auto"
        and by_record["c"].placeholder == by_record["d"].placeholder
    )

    # triage monotonicity over randomized score lists
    order = {"new": 0, "review": 1, "auto": 2}
    import random

    rng = random.Random(20230509)
    monotone_ok = True
    for _ in range(500):
        scores = sorted((round(rng.random(), 3) for _ in range(rng.randint(1, 6))),
                        reverse=True)
        matches = [
            CandidateMatch("r", EntityRef.resolved(f"Q{i+1}"), min(s, 0.99))
            for i, s in enumerate(scores)
        ]
        before = triage(matches)
        bumped = [
            CandidateMatch("r", EntityRef.resolved("Q1"),
                           min(1.0, matches[0].score + rng.random()))
        ] + matches[1:]
        after = triage(bumped)
        if order[after.outcome] < order[before.outcome]:
            monotone_ok = False
            break

    # the two-ORCID "J. Smith" ambiguity routes to review
    smith_path = tmp_path / "smith.jsonl"
    smith_path.write_text(
        '{"qid": "Q90001001", "type": "person", "labels": ["John Smith"], '
        '"orcid": "0000-0001-0000-0001"}\n'
        '{"qid": "Q90001002", "type": "person", "labels": ["Jane Smith"], '
        '"orcid": "0000-0002-0000-0002"}\n',
        encoding="utf-8",
    )
    smith_index = EntityIndex.load(smith_path)
    smith = triage(candidates(ReconcileSubject(record_id="s", name="J. Smith"), smith_index))
    smith_ok = smith.outcome == "review"

    _criterion(
        "reconciler invariants",
        dup_ok and monotone_ok and smith_ok,
        f"dup={dup_ok} monotone={monotone_ok} smith={smith.outcome}",
    )


# ---------------------------------------------------------------------------
# 7. Crash safety: SIGKILL between stages, WAL replay reproduces the state


def test_crash_safety_wal_replay(tmp_path):
    from confmeta.orchestrator.store import Store

    store_dir = tmp_path / "store"
    child_code = f"""
import sys, time
sys.path.insert(0, {str(REPO / 'src')!r})
from confmeta.orchestrator.config import PipelineConfig
from confmeta.orchestrator.store import Store
from confmeta.orchestrator import pipeline

config = PipelineConfig.load({str(FIXTURES / 'pipeline_iswc2023.json')!r})
store = Store({str(store_dir)!r})
job = pipeline.create_job(store, config)
pipeline.run_stage(store, job["id"], "harvest", config)
pipeline.run_stage(store, job["id"], "extract", config)
print("HASH", store.state_hash(), flush=True)
time.sleep(300)
"""
    proc = subprocess.Popen(
        [sys.executable, "-c", child_code],
        stdout=subprocess.PIPE, stderr=subprocess.DEVNULL, text=True,
    )
    try:
        line = ""
        deadline = time.monotonic() + 60
        while time.monotonic() < deadline:
            line = proc.stdout.readline()
            if line.startswith("HASH "):
                break
        live_hash = line.split()[1] if line.startswith("HASH ") else None
    finally:
        proc.send_signal(signal.SIGKILL)
        proc.wait()

    replayed_hash = Store(store_dir).state_hash() if live_hash else None
    _criterion(
        "crash safety (WAL replay after SIGKILL)",
        live_hash is not None and replayed_hash == live_hash,
        f"live={live_hash} replayed={replayed_hash}",
    )

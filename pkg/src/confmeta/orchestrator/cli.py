"""Command-line entry points for every pipeline stage plus eval/report/serve."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .. import evaluator, frontmatter, web_harvester
from ..llm_extractor import ExtractionRecord
from . import pipeline, report
from .config import PipelineConfig
from .store import Store


@click.group()
@click.option("--store", "store_dir", type=click.Path(), default="./store",
              help="Store directory (write-ahead log + artifacts).")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Pipeline config JSON.")
@click.option("--offline", is_flag=True, default=False,
              help="Forbid all network egress; fixtures only.")
@click.pass_context
def main(ctx, store_dir, config_path, offline):
    ctx.ensure_object(dict)
    ctx.obj["store_dir"] = Path(store_dir)
    ctx.obj["config_path"] = Path(config_path) if config_path else None
    ctx.obj["offline"] = offline


def _config(ctx) -> PipelineConfig:
    path = ctx.obj["config_path"]
    if path is None:
        raise click.UsageError("--config is required for this command")
    return PipelineConfig.load(path, offline=ctx.obj["offline"])


def _store(ctx) -> Store:
    return Store(ctx.obj["store_dir"])


def _ensure_job(store: Store, config: PipelineConfig, config_path) -> str:
    job_id = pipeline.job_id_for(config.conference.key)
    try:
        store.get_job(job_id)
    except Exception:
        pipeline.create_job(store, config, config_path=config_path)
    return job_id


def _run_stage(ctx, stage: str):
    config = _config(ctx)
    store = _store(ctx)
    job_id = _ensure_job(store, config, ctx.obj["config_path"])
    try:
        job = pipeline.run_stage(store, job_id, stage, config)
    except pipeline.ReviewGateOpen as exc:
        click.echo(f"stage {stage} blocked: {exc.pending} records need review")
        click.echo(f"state_hash={store.state_hash()}")
        sys.exit(3)
    click.echo(f"stage {stage} complete: counters={json.dumps(job['counters'], sort_keys=True)}")
    click.echo(f"state_hash={store.state_hash()}")


@main.command("harvest-web")
@click.option("--out", type=click.Path(), default=None, help="Also write pages JSONL here.")
@click.option("--offline-root", type=click.Path(exists=True), default=None,
              help="Crawl this directory of fixture files instead of HTTP.")
@click.pass_context
def harvest_web(ctx, out, offline_root):
    """Crawl the conference website (or its offline fixture root)."""
    import dataclasses

    config = _config(ctx)
    if offline_root:
        config = dataclasses.replace(
            config,
            website=dataclasses.replace(config.website, offline_root=Path(offline_root)),
        )
    pages = pipeline.harvest_web(config)
    store = _store(ctx)
    target = Path(out) if out else pipeline.artifacts_dir(store, config.conference.key) / "pages.jsonl"
    web_harvester.write_pages_jsonl(pages, target)
    click.echo(f"{len(pages)} pages -> {target}")


def _write_chunks(doc, target):
    with open(target, "w", encoding="utf-8") as fh:
        for chunk in doc.chunks:
            fh.write(json.dumps(
                {"conference_key": doc.conference_key, "heading": chunk.heading,
                 "body": chunk.body, "span": list(chunk.span),
                 "word_count": chunk.word_count, "oversized": chunk.oversized,
                 "source_url": doc.source_url}, ensure_ascii=False) + "\n")


@main.command("ingest-frontmatter")
@click.option("--out", type=click.Path(), default=None, help="Also write chunk JSONL here.")
@click.option("--manifest", type=click.Path(exists=True), default=None,
              help="JSON map of conference_key -> {path, source_url}; overrides --config input.")
@click.pass_context
def ingest_frontmatter(ctx, out, manifest):
    """Normalize and chunk proceedings front-matter text."""
    store = _store(ctx)
    if manifest:
        entries = json.loads(Path(manifest).read_text(encoding="utf-8"))
        base = Path(manifest).parent
        total = 0
        for key, entry in entries.items():
            raw = frontmatter.load_text_file(base / entry["path"])
            doc = frontmatter.ingest(key, raw, source_url=entry.get("source_url", ""))
            target = pipeline.artifacts_dir(store, key) / "chunks.jsonl"
            _write_chunks(doc, target)
            total += len(doc.chunks)
            click.echo(f"{len(doc.chunks)} chunks for {key} -> {target}")
        click.echo(f"{total} chunks total")
        return
    config = _config(ctx)
    doc = pipeline.ingest_frontmatter(config)
    target = Path(out) if out else pipeline.artifacts_dir(store, config.conference.key) / "chunks.jsonl"
    _write_chunks(doc, target)
    click.echo(f"{len(doc.chunks)} chunks -> {target}")


@main.command("harvest-sparql")
@click.option("--record", "record_dir", type=click.Path(), default=None,
              help="Capture raw response bodies into this directory.")
@click.option("--replay", "replay_dir", type=click.Path(exists=True), default=None,
              help="Replay previously recorded response bodies from this directory.")
@click.pass_context
def harvest_sparql(ctx, record_dir, replay_dir):
    """Run the SPARQL templates (live, recorded, or replayed)."""
    import dataclasses

    config = _config(ctx)
    if record_dir or replay_dir:
        sparql = dataclasses.replace(
            config.sparql,
            record_dir=Path(record_dir) if record_dir else config.sparql.record_dir,
            replay_dir=Path(replay_dir) if replay_dir else config.sparql.replay_dir,
        )
        config = dataclasses.replace(config, sparql=sparql)
    harvest = pipeline.harvest_sparql(config)
    click.echo(
        f"{len(harvest['papers'])} papers, {len(harvest['signatures'])} signatures, "
        f"{len(harvest['subevents'])} sub-events"
        + (f", {len(harvest['flagged_papers'])} papers flagged" if harvest["flagged_papers"] else "")
    )


@main.command("harvest")
@click.pass_context
def harvest(ctx):
    """Run the full harvest stage (web + front matter + SPARQL)."""
    _run_stage(ctx, "harvest")


@main.command("extract")
@click.pass_context
def extract(ctx):
    """Run prompt-based and rule-based extraction into the store."""
    _run_stage(ctx, "extract")


@main.command("reconcile")
@click.pass_context
def reconcile(ctx):
    """Link extracted entities against the entity index."""
    _run_stage(ctx, "reconcile")


@main.command("review")
@click.pass_context
def review(ctx):
    """Check the human gate (fails while records still need review)."""
    _run_stage(ctx, "review")


@main.command("compile")
@click.pass_context
def compile_cmd(ctx):
    """Compile approved records into a QuickStatements batch file."""
    config = _config(ctx)
    store = _store(ctx)
    job_id = _ensure_job(store, config, ctx.obj["config_path"])
    job = store.get_job(job_id)
    try:
        if job["stage"] in ("review", "compile"):
            pipeline.run_until(store, job_id, "compile", config)
            job = store.get_job(job_id)
            batch = store.get_batch(job["counters"]["batch_id"])
        elif job["stage"] == "done":
            batch = pipeline.compile_job(store, job_id, config)
        else:
            raise click.ClickException(f"job at stage {job['stage']!r}; run earlier stages first")
    except pipeline.ReviewGateOpen as exc:
        raise click.ClickException(f"{exc.pending} records need review") from None
    path = pipeline.artifacts_dir(store, config.conference.key) / f"{batch['id']}.qs"
    click.echo(f"batch {batch['id']} ({batch['stats']['statements']} statements) -> {path}")
    click.echo(f"state_hash={store.state_hash()}")


@main.command("eval")
@click.option("--pred", type=click.Path(exists=True), required=True,
              help="Predictions: ExtractionRecord JSONL.")
@click.option("--gold", type=click.Path(exists=True), required=True,
              help="Gold directory with per-task CSVs.")
@click.option("--report", "report_base", type=click.Path(), required=True,
              help="Output base path; writes <base>.txt and <base>.json.")
def eval_cmd(pred, gold, report_base):
    """Score extraction records against gold with micro P/R/F1."""
    records = []
    with open(pred, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(ExtractionRecord.from_dict(json.loads(line)))
    reports = evaluator.evaluate(records, gold)
    base = Path(report_base)
    base.parent.mkdir(parents=True, exist_ok=True)
    text = evaluator.format_report(reports)
    base.with_suffix(".txt").write_text(text, encoding="utf-8")
    base.with_suffix(".json").write_text(evaluator.report_json(reports), encoding="utf-8")
    click.echo(text, nl=False)


@main.command("report")
@click.option("--series", default="", help="Conference series key (e.g. iswc).")
@click.option("--metric", default="acceptance_rate",
              type=click.Choice(report.METRICS))
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def report_cmd(ctx, series, metric, out):
    """Emit a chart-ready CSV series from the store."""
    store = _store(ctx)
    csv_text = report.report_csv(store, series, metric)
    if out:
        Path(out).write_text(csv_text, encoding="utf-8")
        click.echo(f"-> {out}")
    else:
        click.echo(csv_text, nl=False)


@main.command("serve")
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8800, type=int)
@click.option("--token", default=None, help="Mutation token (default: $CONFMETA_TOKEN).")
@click.option("--ui-dist", type=click.Path(), default=None,
              help="Directory with the built curation UI.")
@click.pass_context
def serve(ctx, host, port, token, ui_dist):
    """Serve the curation API (and the UI when built)."""
    import uvicorn

    from .api import create_app

    store = _store(ctx)
    config_root = ctx.obj["config_path"].parent if ctx.obj["config_path"] else Path.cwd()
    app = create_app(store, token=token, config_root=config_root,
                     ui_dist=Path(ui_dist) if ui_dist else None)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("export-records")
@click.option("--out", type=click.Path(), required=True)
@click.option("--conference", default=None)
@click.pass_context
def export_records(ctx, out, conference):
    """Dump store records as JSONL (eval input)."""
    store = _store(ctx)
    records = store.records(conference_key=conference)
    with open(out, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    click.echo(f"{len(records)} records -> {out}")


if __name__ == "__main__":
    main()

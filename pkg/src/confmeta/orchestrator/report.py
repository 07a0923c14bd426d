"""Chart-ready CSV series over store contents (acceptance rate, participants)."""
from __future__ import annotations

import io

from ..kg_model import TrackStats, admission_rate

METRICS = ("acceptance_rate", "participants")


def report_rows(store, series_key: str, metric: str) -> list:
    """(event label, year, value) rows for one conference series, year order."""
    if metric not in METRICS:
        raise KeyError(f"unknown metric {metric!r}")
    conferences = store.conferences()
    rows = []
    for key, meta in conferences.items():
        if series_key and meta.get("series") != series_key:
            continue
        value = None
        if metric == "acceptance_rate":
            value = _overall_rate(store, key)
        else:
            value = _participants(store, key)
        if value is None:
            continue
        rows.append((meta.get("label", key), meta.get("year", 0), value))
    rows.sort(key=lambda r: (r[1], r[0]))
    return rows


def _approved(store, key):
    return [r for r in store.records(conference_key=key)
            if r["review_state"] in ("auto_ok", "approved", "edited")]


def _overall_rate(store, key):
    """Pooled accepted/submitted over tracks where both counts are known."""
    submitted = accepted = 0
    for record in _approved(store, key):
        if record["task"] != "counts":
            continue
        row = record.get("edited_row") or record["row"]
        try:
            s = int(row["submitted"]) if row.get("submitted") else None
            a = int(row["accepted"]) if row.get("accepted") else None
        except (ValueError, KeyError):
            continue
        if s is not None and a is not None:
            submitted += s
            accepted += a
    if submitted == 0:
        return None
    return str(admission_rate(TrackStats(track="all", submitted=submitted, accepted=accepted)))


def _participants(store, key):
    counts = []
    for record in _approved(store, key):
        if record["task"] != "participants":
            continue
        row = record.get("edited_row") or record["row"]
        try:
            counts.append(int(row["count"]))
        except (ValueError, KeyError, TypeError):
            continue
    return str(max(counts)) if counts else None


def report_csv(store, series_key: str, metric: str) -> str:
    out = io.StringIO()
    out.write(f"event,year,{metric}\n")
    for label, year, value in report_rows(store, series_key, metric):
        escaped = f'"{label}"' if "," in label else label
        out.write(f"{escaped},{year},{value}\n")
    return out.getvalue()

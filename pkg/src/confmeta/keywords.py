"""Task keyword sets shared by the website and front-matter chunk selectors."""
from __future__ import annotations

EXTRACTION_TASKS = ("counts", "roles", "pc_members", "deadlines")

# Terms visible in conference prefaces and standard CFP vocabulary.
TASK_KEYWORDS = {
    "counts": ("submission", "submitted", "accepted", "acceptance rate"),
    "roles": ("organizing committee", "organisation committee", "chairs"),
    "pc_members": ("program committee", "programme committee", "senior"),
    "deadlines": ("important dates", "deadline", "due"),
}


def keyword_score(text: str, task: str) -> float:
    """Keyword occurrences per 1,000 characters; 0.0 when nothing matches."""
    if task not in TASK_KEYWORDS:
        raise KeyError(f"unknown task {task!r}")
    lowered = text.lower()
    hits = sum(lowered.count(kw) for kw in TASK_KEYWORDS[task])
    if hits == 0:
        return 0.0
    return hits * 1000.0 / max(len(text), 1)

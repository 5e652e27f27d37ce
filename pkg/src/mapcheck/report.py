"""Text rendering of progress records, run statistics and verdicts."""
from __future__ import annotations

import re

from .explorer import ProgressRecord, RunStats
from .verdict import Verdict

_PROGRESS_FIELDS = (("states", "states"), ("trans", "trans"), ("rounds", "rounds"),
                    ("iters", "iters"), ("kernel-calls", "kernel_calls"))
_PROGRESS_RE = re.compile(
    r"^\[progress\] " + " ".join(rf"{label}=(\d+)" for label, _ in _PROGRESS_FIELDS) + "$"
)


def render_progress(record: ProgressRecord) -> str:
    return "[progress] " + " ".join(f"{label}={getattr(record, attr)}" for label, attr in _PROGRESS_FIELDS)


def parse_progress(line: str) -> ProgressRecord:
    m = _PROGRESS_RE.match(line.strip())
    if m is None:
        raise ValueError(f"not a progress line: {line!r}")
    return ProgressRecord(*(int(g) for g in m.groups()))


def ms(seconds: float) -> str:
    """Milliseconds with fixed precision; the table and the CSV both use this."""
    return f"{seconds * 1000:.3f}"


def render_stats(stats: RunStats) -> str:
    detection = "-" if stats.states_at_detection is None else str(stats.states_at_detection)
    return (f"[stats] states={stats.states_generated} trans={stats.transitions_generated} "
            f"rounds={stats.detection_rounds} iters={stats.map_iterations} "
            f"kernel-calls={stats.kernel_calls} states-at-detection={detection} "
            f"csr-ms={ms(stats.csr_time)} kernel-ms={ms(stats.kernel_time)} total-ms={ms(stats.total_time)}")


def render_verdict(verdict: Verdict) -> str:
    if verdict.cycle_found:
        return f"verdict={verdict.outcome.value} witness={verdict.witness}"
    return f"verdict={verdict.outcome.value}"

"""Corpus benchmark: every model under every engine, checked against the
``@manifest`` header of its file, reported as a run-time table plus
aggregate rows split by whether the model has an accepting cycle."""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

from .errors import MapcheckError
from .explorer import ExploreConfig, RunStats, explore
from .model_lang import parse_model
from .report import ms
from .verdict import Outcome, Verdict

ALGORITHMS = ("map", "owcty", "ndfs")
CSV_FIELDS = ("model", "algorithm", "verdict", "states_generated", "transitions_generated",
              "detection_rounds", "map_iterations", "kernel_calls", "states_at_detection",
              "csr_ms", "kernel_ms", "total_ms")

_MANIFEST_RE = re.compile(r"^//\s*@manifest\s+(.*)$", re.MULTILINE)


class ManifestMismatch(MapcheckError):
    def __init__(self, failures: list[str]):
        super().__init__("manifest mismatch: " + "; ".join(failures))
        self.failures = failures


@dataclass(frozen=True)
class Manifest:
    verdict: Outcome
    states: int
    processes: Optional[int] = None
    transitions: Optional[int] = None


def read_manifest(text: str) -> Manifest:
    m = _MANIFEST_RE.search(text)
    if m is None:
        raise MapcheckError("model file has no '// @manifest' header")
    fields = dict(item.split("=", 1) for item in m.group(1).split())
    return Manifest(
        verdict=Outcome(fields["verdict"]),
        states=int(fields["states"]),
        processes=int(fields["processes"]) if "processes" in fields else None,
        transitions=int(fields["transitions"]) if "transitions" in fields else None,
    )


@dataclass
class BenchRow:
    model: str
    has_accepting_cycle: bool
    results: dict[str, RunStats] = field(default_factory=dict)
    verdicts: dict[str, Verdict] = field(default_factory=dict)

    def total_time(self, algorithm: str) -> float:
        return self.results[algorithm].total_time

    def speedup(self, baseline: str, subject: str = "map") -> float:
        return _ratio(self.total_time(baseline), self.total_time(subject))


def _ratio(a: float, b: float) -> float:
    return a / b if b > 0 else float("inf")


def corpus_files(directory) -> list[Path]:
    return sorted(Path(directory).glob("*.cdve"))


def run_bench(directory, algorithms: Iterable[str] = ALGORITHMS, cfg: Optional[ExploreConfig] = None,
              csv_path=None) -> list[BenchRow]:
    algorithms = tuple(algorithms)
    cfg = cfg or ExploreConfig()
    rows, failures = [], []
    for path in corpus_files(directory):
        text = path.read_text()
        manifest = read_manifest(text)
        model = parse_model(text)
        row = BenchRow(path.stem, manifest.verdict is Outcome.CYCLE_FOUND)
        for alg in algorithms:
            verdict, stats = explore(model, replace(cfg, algorithm=alg))
            row.results[alg] = stats
            row.verdicts[alg] = verdict
            if verdict.outcome is not manifest.verdict:
                failures.append(f"{path.stem}/{alg}: verdict {verdict.outcome.value}, manifest {manifest.verdict.value}")
            elif not verdict.cycle_found and stats.states_generated != manifest.states:
                failures.append(f"{path.stem}/{alg}: {stats.states_generated} states, manifest {manifest.states}")
            elif stats.states_generated > manifest.states:
                failures.append(f"{path.stem}/{alg}: {stats.states_generated} states exceeds manifest {manifest.states}")
        rows.append(row)
    if csv_path is not None:
        write_csv(rows, csv_path)
    if failures:
        raise ManifestMismatch(failures)
    return rows


def csv_records(rows: list[BenchRow]) -> list[dict]:
    out = []
    for row in rows:
        for alg, s in row.results.items():
            out.append({
                "model": row.model, "algorithm": alg,
                "verdict": row.verdicts[alg].outcome.value,
                "states_generated": s.states_generated, "transitions_generated": s.transitions_generated,
                "detection_rounds": s.detection_rounds, "map_iterations": s.map_iterations,
                "kernel_calls": s.kernel_calls,
                "states_at_detection": "" if s.states_at_detection is None else s.states_at_detection,
                "csr_ms": ms(s.csr_time), "kernel_ms": ms(s.kernel_time), "total_ms": ms(s.total_time),
            })
    return out


def write_csv(rows: list[BenchRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        writer.writerows(csv_records(rows))


def aggregate(rows: list[BenchRow], algorithms) -> dict[str, dict[str, float]]:
    """Summed total times for the non-accepting / accepting / both groups."""
    groups = {
        "non-accepting": [r for r in rows if not r.has_accepting_cycle],
        "accepting": [r for r in rows if r.has_accepting_cycle],
        "both": rows,
    }
    return {name: {alg: sum(r.total_time(alg) for r in members) for alg in algorithms}
            for name, members in groups.items()}


def render_table(rows: list[BenchRow], algorithms=ALGORITHMS) -> str:
    algorithms = tuple(algorithms)
    header = ["model", "cycle"]
    for alg in algorithms:
        header += [f"{alg} csr-ms", f"{alg} kernel-ms", f"{alg} total-ms", f"{alg} iters"]
    body = []
    for r in rows:
        line = [r.model, "Y" if r.has_accepting_cycle else "N"]
        for alg in algorithms:
            s = r.results[alg]
            line += [ms(s.csr_time), ms(s.kernel_time), ms(s.total_time), str(s.map_iterations)]
        body.append(line)

    agg_header = ["group"] + [f"{alg} total-ms" for alg in algorithms]
    others = [a for a in algorithms if a != "map"]
    if "map" in algorithms:
        agg_header += [f"map speedup vs {a}" for a in others]
    agg_body = []
    for name, totals in aggregate(rows, algorithms).items():
        line = [name] + [ms(totals[a]) for a in algorithms]
        if "map" in algorithms:
            line += [f"{_ratio(totals[a], totals['map']):.2f}" for a in others]
        agg_body.append(line)
    return _align(header, body) + "\n\n" + _align(agg_header, agg_body)


def _align(header, body) -> str:
    widths = [max(len(str(row[i])) for row in [header, *body]) for i in range(len(header))]
    lines = []
    for k, row in enumerate([header, *body]):
        cells = [str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(row, widths))]
        lines.append("  ".join(cells).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)

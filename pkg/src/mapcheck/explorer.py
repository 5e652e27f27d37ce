"""On-the-fly pipeline: level-synchronous BFS generation feeding the edge log
while a detector thread repeatedly snapshots the log and looks for accepting
cycles.

Detection rounds fire at fixed edge-count marks (multiples of
``detection_interval_edges``) and each one sees exactly that prefix of the
log.  A round submitted at the end of BFS level ``k`` runs while level
``k + 1`` is generated; its result is collected at the next level boundary.
That keeps every reported number a function of the model and the
configuration, not of thread timing.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import ResourceLimitError
from .graph_core import EdgeLog, Orientation, build_snapshot, restrict_to_accepting_sccs
from .map_engine import run_map
from .model_lang import compiled
from .model_lang.syntax import Model
from .oracles import ndfs_verdict
from .owcty import run_owcty
from .verdict import Verdict


ALGORITHMS = ("map", "owcty", "ndfs")


@dataclass(frozen=True)
class ExploreConfig:
    algorithm: str = "map"
    detection_interval_edges: Optional[int] = 50_000  # None: final round only
    generation_workers: int = 1
    enable_relevance_pruning: bool = True
    enable_final_scc_restriction: bool = True
    max_states: int = 5_000_000
    report_every_states: int = 100_000
    early_exit: bool = True
    kernel_workers: int = 1
    map_orientation: Orientation = Orientation.TRANSPOSED

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        counts = [self.generation_workers, self.max_states, self.report_every_states, self.kernel_workers]
        if self.detection_interval_edges is not None:
            counts.append(self.detection_interval_edges)
        if any(c < 1 for c in counts):
            raise ValueError("all counts must be positive")


@dataclass
class RunStats:
    states_generated: int = 0
    transitions_generated: int = 0
    detection_rounds: int = 0
    map_iterations: int = 0
    kernel_calls: int = 0
    csr_time: float = 0.0
    kernel_time: float = 0.0
    total_time: float = 0.0
    states_at_detection: Optional[int] = None
    final_vertices: int = 0  # vertices handed to the final round (after restriction)


@dataclass(frozen=True)
class ProgressRecord:
    states: int = 0
    trans: int = 0
    rounds: int = 0
    iters: int = 0
    kernel_calls: int = 0


def progress_snapshot(stats: RunStats) -> ProgressRecord:
    return ProgressRecord(stats.states_generated, stats.transitions_generated,
                          stats.detection_rounds, stats.map_iterations, stats.kernel_calls)


@dataclass
class _RoundResult:
    verdict: Verdict
    iterations: int = 0
    kernel_calls: int = 0
    csr_time: float = 0.0
    kernel_time: float = 0.0
    vertices: int = 0


def detect(edge_log: EdgeLog, cfg: ExploreConfig, prefix: Optional[int] = None, final: bool = False) -> _RoundResult:
    """One detection round over a prefix of the log."""
    t0 = time.perf_counter()
    if cfg.algorithm == "map":
        snap = build_snapshot(edge_log, cfg.map_orientation, prefix)
    else:
        snap = build_snapshot(edge_log, Orientation.FORWARD, prefix)
    restrict = final and cfg.enable_final_scc_restriction and cfg.algorithm != "ndfs"
    if restrict:
        snap, _ = restrict_to_accepting_sccs(snap)
    out = _RoundResult(Verdict.none(), csr_time=time.perf_counter() - t0, vertices=snap.n)
    if restrict and snap.n == 0:
        return out
    t1 = time.perf_counter()
    if cfg.algorithm == "map":
        out.verdict, mstats = run_map(snap, workers=cfg.kernel_workers)
        out.iterations, out.kernel_calls = mstats.iterations, mstats.kernel_calls
        out.kernel_time = mstats.kernel_time
    elif cfg.algorithm == "owcty":
        out.verdict, ostats = run_owcty(snap)
        out.iterations = ostats.outer_iterations
        out.kernel_time = ostats.reach_time + ostats.elim_time
    else:
        if snap.n:
            out.verdict = ndfs_verdict(snap.edges(), snap.n, snap.accepting_ids(), 0)
        out.kernel_time = time.perf_counter() - t1
    return out


class _Explorer:
    def __init__(self, model: Model, cfg: ExploreConfig, on_progress):
        self.cm = compiled(model)
        self.cfg = cfg
        self.on_progress = on_progress
        self.stats = RunStats()
        self.edge_log = EdgeLog(max_vertices=cfg.max_states)
        self.states: list[bytes] = []
        self.relevant = self.cm.relevant_indices() if cfg.enable_relevance_pruning else None
        self._next_report = cfg.report_every_states

    def _absorb(self, res: _RoundResult):
        s = self.stats
        s.detection_rounds += 1
        s.map_iterations += res.iterations
        s.kernel_calls += res.kernel_calls
        s.csr_time += res.csr_time
        s.kernel_time += res.kernel_time

    def _expand(self, chunk: list[int]) -> list[list[bytes]]:
        succ = self.cm.successors
        return [succ(self.states[v]) for v in chunk]

    def _report(self):
        if self.on_progress is not None:
            self.on_progress(progress_snapshot(self.stats))

    def run(self) -> tuple[Verdict, RunStats]:
        cfg, cm, stats = self.cfg, self.cm, self.stats
        start = time.perf_counter()
        try:
            verdict = self._generate_and_detect(cm, cfg, stats)
        except ResourceLimitError as exc:
            stats.total_time = time.perf_counter() - start
            raise ResourceLimitError(str(exc), stats) from None
        stats.total_time = time.perf_counter() - start
        return verdict, stats

    def _generate_and_detect(self, cm, cfg, stats):
        init = cm.initial_state()
        self.edge_log.intern_state(init, cm.is_accepting(init))
        self.states.append(init)
        stats.states_generated = 1
        relevant = self.relevant
        frontier = [0]
        if relevant is not None and cm.property_location(init) not in relevant:
            frontier = []
        interval = cfg.detection_interval_edges if cfg.early_exit else None
        next_mark = interval
        pending = None
        workers = cfg.generation_workers
        gen_pool = ThreadPoolExecutor(workers, thread_name_prefix="gen") if workers > 1 else None
        detector = ThreadPoolExecutor(1, thread_name_prefix="detect")
        try:
            while frontier:
                if gen_pool is None:
                    expanded = self._expand(frontier)
                else:
                    size = -(-len(frontier) // workers)
                    chunks = [frontier[i:i + size] for i in range(0, len(frontier), size)]
                    expanded = [row for part in gen_pool.map(self._expand, chunks) for row in part]
                new_frontier = self._merge(frontier, expanded, relevant)
                if pending is not None:
                    res = pending.result()
                    pending = None
                    self._absorb(res)
                    if res.verdict.cycle_found:
                        stats.states_at_detection = stats.states_generated
                        self._report()
                        return res.verdict
                if interval is not None and len(self.edge_log) >= next_mark:
                    prefix = len(self.edge_log) // interval * interval
                    next_mark = prefix + interval
                    pending = detector.submit(detect, self.edge_log, cfg, prefix)
                frontier = new_frontier
            if pending is not None:
                res = pending.result()
                self._absorb(res)
                if res.verdict.cycle_found:
                    return res.verdict
            res = detector.submit(detect, self.edge_log, cfg, None, True).result()
            self._absorb(res)
            stats.final_vertices = res.vertices
            self._report()
            return res.verdict
        finally:
            detector.shutdown(wait=True, cancel_futures=True)
            if gen_pool is not None:
                gen_pool.shutdown()

    def _merge(self, frontier, expanded, relevant):
        cm, stats, edge_log = self.cm, self.stats, self.edge_log
        lookup, intern, is_acc = edge_log.lookup, edge_log.intern_state, cm.is_accepting
        prop_loc = cm.property_location
        new_frontier = []
        src_batch, dst_batch = [], []
        for src, succs in zip(frontier, expanded):
            for s in succs:
                vid = lookup(s)
                if vid is None:
                    if relevant is not None and prop_loc(s) not in relevant:
                        continue
                    vid, _ = intern(s, is_acc(s))
                    self.states.append(s)
                    new_frontier.append(vid)
                    stats.states_generated += 1
                    if stats.states_generated >= self._next_report:
                        self._next_report += self.cfg.report_every_states
                        stats.transitions_generated = len(edge_log) + len(src_batch)
                        self._report()
                src_batch.append(src)
                dst_batch.append(vid)
        edge_log.extend_edges(src_batch, dst_batch)
        stats.transitions_generated = len(edge_log)
        return new_frontier


def explore(model: Model, cfg: Optional[ExploreConfig] = None,
            on_progress: Optional[Callable[[ProgressRecord], None]] = None) -> tuple[Verdict, RunStats]:
    """Generate the product state space and decide accepting-cycle existence."""
    explorer = _Explorer(model, cfg or ExploreConfig(), on_progress)
    return explorer.run()


def explore_graph(model: Model, cfg: Optional[ExploreConfig] = None) -> tuple[Verdict, RunStats, EdgeLog]:
    """Like :func:`explore` but also hands back the edge log (tests, tooling)."""
    explorer = _Explorer(model, cfg or ExploreConfig(), None)
    verdict, stats = explorer.run()
    return verdict, stats, explorer.edge_log

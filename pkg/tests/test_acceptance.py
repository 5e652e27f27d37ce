"""Acceptance criteria, each at its stated tolerance.  Every test records one
PASS/FAIL line; the lines are repeated in the terminal summary."""
import os
import re
import statistics
import subprocess
import sys
import time

import numpy as np
import pytest

from mapcheck import CORPUS_DIR
from mapcheck.bench import corpus_files, read_manifest, run_bench
from mapcheck.explorer import ExploreConfig, explore
from mapcheck.graph_core import Orientation, snapshot_from_edges
from mapcheck.map_engine import NIL, PropagationKernel, fixpoint, run_map
from mapcheck.model_lang import parse_model
from mapcheck.oracles import scc_verdict
from mapcheck.owcty import run_owcty

from conftest import closure, graph_cases

CORPUS = {p.stem: p for p in corpus_files(CORPUS_DIR)}


@pytest.fixture(scope="module")
def bench_rows():
    t0 = time.perf_counter()
    rows = run_bench(CORPUS_DIR)  # raises ManifestMismatch on any verdict/state disagreement
    return rows, time.perf_counter() - t0


def test_1_oracle_equivalence(criterion):
    t0 = time.perf_counter()
    total = disagreements = 0
    for n, edges, acc in graph_cases(1200, seed=2024):
        m, _ = run_map(snapshot_from_edges(n, edges, acc))
        o, _ = run_owcty(snapshot_from_edges(n, edges, acc, Orientation.FORWARD))
        s = scc_verdict(edges, n, acc)
        total += 1
        disagreements += not (m.outcome is o.outcome is s.outcome)
    elapsed = time.perf_counter() - t0
    ok = total >= 1000 and disagreements == 0 and elapsed < 60
    criterion("1 oracle equivalence", ok, f"{total} graphs, {disagreements} disagreements, {elapsed:.1f}s")
    assert ok


def test_2_map_internals(criterion, monkeypatch):
    runs = []  # one list of (x, x') per fixpoint computation
    original = PropagationKernel.step

    def recording_step(self, x, acc):
        out, changed, witness = original(self, x, acc)
        if not runs or np.all(x == NIL):
            runs.append((self.snap.n, []))
        runs[-1][1].append((x.copy(), out.copy()))
        return out, changed, witness

    monkeypatch.setattr(PropagationKernel, "step", recording_step)
    value_failures = iteration_failures = 0
    graphs = 0
    for n, edges, acc in graph_cases(1500, seed=99, max_n=12):
        snap = snapshot_from_edges(n, edges, acc, Orientation.FORWARD)
        x, _, _ = fixpoint(snap, snap.accepting, early_exit=False)
        reach = closure(n, edges)
        brute = [max((u for u in acc if reach[u][v]), default=NIL) for v in range(n)]
        value_failures += x.tolist() != brute
        runs.clear()
        _, stats = run_map(snapshot_from_edges(n, edges, acc))
        iteration_failures += stats.iterations > len(acc)
        graphs += 1
    # monotonicity and step bound over every propagation run of run_map
    runs.clear()
    for n, edges, acc in graph_cases(500, seed=5, max_n=40):
        run_map(snapshot_from_edges(n, edges, acc))
    monotone = all(np.all(b >= a) for _, steps in runs for a, b in steps)
    bounded = all(len(steps) <= max(n, 1) for n, steps in runs)
    ok = value_failures == 0 and iteration_failures == 0 and monotone and bounded
    criterion("2 MAP internals", ok,
              f"{graphs} graphs n<=12: value mismatches={value_failures}, iterations>|F0|={iteration_failures}; "
              f"{len(runs)} propagation runs: monotone={monotone}, steps<=n={bounded}")
    assert ok


@pytest.mark.parametrize("name", ["philosophers_bug", "elevator_bug"])
def test_3_on_the_fly(criterion, name):
    text = CORPUS[name].read_text()
    total = read_manifest(text).states
    verdict, stats = explore(parse_model(text))
    ok = verdict.cycle_found and stats.states_at_detection is not None and stats.states_at_detection < total
    criterion(f"3 on-the-fly {name}", ok, f"detected at {stats.states_at_detection} of {total} states")
    assert ok


INVARIANCE_CONFIGS = {
    "default": ExploreConfig(),
    "cadence=1e3": ExploreConfig(detection_interval_edges=1000),
    "cadence=final": ExploreConfig(detection_interval_edges=None),
    "W=2": ExploreConfig(generation_workers=2),
    "W=4": ExploreConfig(generation_workers=4),
    "no-pruning": ExploreConfig(enable_relevance_pruning=False),
    "no-scc-restriction": ExploreConfig(enable_final_scc_restriction=False, detection_interval_edges=None),
    "forward": ExploreConfig(map_orientation=Orientation.FORWARD),
    "forward+final+no-scc": ExploreConfig(map_orientation=Orientation.FORWARD, detection_interval_edges=None,
                                          enable_final_scc_restriction=False),
    "all-off+W=4+1e3": ExploreConfig(detection_interval_edges=1000, generation_workers=4,
                                     enable_relevance_pruning=False, enable_final_scc_restriction=False),
}


def test_4_invariance(criterion):
    bad = []
    for name, path in CORPUS.items():
        text = path.read_text()
        model, expected = parse_model(text), read_manifest(text).verdict
        for label, cfg in INVARIANCE_CONFIGS.items():
            verdict, _ = explore(model, cfg)
            if verdict.outcome is not expected:
                bad.append(f"{name}/{label}")
    ok = len(CORPUS) == 8 and not bad
    criterion("4 invariance", ok, f"{len(CORPUS)} models x {len(INVARIANCE_CONFIGS)} configs, "
                                  f"mismatches: {', '.join(bad) or 'none'}")
    assert ok


_TIMING = re.compile(r" (csr|kernel|total)-ms=\S+")


def _check_run(model, *flags):
    proc = subprocess.run([sys.executable, "-m", "mapcheck", "check", str(model), *flags],
                          capture_output=True, text=True)
    return proc.returncode, [_TIMING.sub("", line) for line in proc.stdout.splitlines()]


def test_5_determinism(criterion):
    cases = [("elevator_bug", "--workers", "4", "--detect-every", "1000", "--report-every", "2000"),
             ("anderson_ok", "--report-every", "5000"),
             ("bakery_bug", "--algorithm", "owcty", "--workers", "2")]
    diffs = []
    for name, *flags in cases:
        a, b = _check_run(CORPUS[name], *flags), _check_run(CORPUS[name], *flags)
        if a != b:
            diffs.append(name)
    ok = not diffs
    criterion("5 determinism", ok, f"{len(cases)} flag sets run twice, differing: {', '.join(diffs) or 'none'}")
    assert ok


def synthetic_graph(n=200_000, m=1_200_000, seed=6):
    rng = np.random.default_rng(seed)
    src = rng.integers(0, n, m)
    dst = rng.integers(0, n, m)
    acc = rng.choice(n, n // 50, replace=False)
    return snapshot_from_edges(n, zip(src.tolist(), dst.tolist()), acc.tolist())


def test_6_parallel_kernel_and_accepting_ordering(criterion, bench_rows):
    snap = synthetic_graph()
    run_map(snap, workers=4)  # compile + warm caches
    serial, parallel = [], []
    for _ in range(5):
        v1, s1 = run_map(snap, workers=1)
        v4, s4 = run_map(snap, workers=4)
        assert v1 == v4 and s1.kernel_calls == s4.kernel_calls
        serial.append(s1.kernel_time)
        parallel.append(s4.kernel_time)
    ratio = statistics.median(parallel) / statistics.median(serial)
    rows, _ = bench_rows
    acc_total = sum(r.total_time("map") for r in rows if r.has_accepting_cycle)
    non_total = sum(r.total_time("map") for r in rows if not r.has_accepting_cycle)
    scaling_ok = ratio <= 0.67
    ordering_ok = acc_total < non_total
    criterion("6 parallel kernel scaling", scaling_ok and ordering_ok,
              f"m={snap.m}, kernel W=4/W=1 = {ratio:.2f} (need <= 0.67, cpus={os.cpu_count()}); "
              f"MAP total accepting {acc_total * 1000:.0f} ms vs non-accepting {non_total * 1000:.0f} ms")
    assert ordering_ok
    assert scaling_ok, f"W=4 kernel time is {ratio:.2f}x the W=1 time"


def test_7_bench_harness(criterion, bench_rows):
    rows, elapsed = bench_rows
    ok = len(rows) == 8 and elapsed < 300
    criterion("7 bench harness", ok, f"{len(rows)} models x 3 engines, manifests matched, {elapsed:.1f}s")
    assert ok

import random

import pytest

from mapcheck.bench import read_manifest
from mapcheck.errors import ResourceLimitError
from mapcheck.explorer import ExploreConfig, ProgressRecord, RunStats, explore, explore_graph, progress_snapshot
from mapcheck.graph_core import Orientation, build_snapshot
from mapcheck.model_lang import ModelRuntimeError, parse_model
from mapcheck.oracles import scc_verdict


def load(corpus_dir, name):
    text = (corpus_dir / f"{name}.cdve").read_text()
    return parse_model(text), read_manifest(text)


def test_peterson_ok_state_count(corpus_dir):
    model, manifest = load(corpus_dir, "peterson_ok")
    verdict, stats = explore(model)
    assert not verdict.cycle_found
    assert stats.states_generated == manifest.states
    assert stats.states_at_detection is None


def test_philosophers_bug_detected_early(corpus_dir):
    model, manifest = load(corpus_dir, "philosophers_bug")
    verdict, stats = explore(model)
    assert verdict.cycle_found
    _, full = explore(model, ExploreConfig(early_exit=False))
    assert full.states_generated == manifest.states
    assert stats.states_at_detection < full.states_generated


def test_no_cyclic_accepting_property():
    m = parse_model("""
    byte x;
    process P { state s; init s; trans s -> s { guard x < 5; effect x = x + 1; } }
    process N { state q, bad; init q; accept bad; trans q -> q { } trans q -> bad { guard x == 3; } }
    system async;
    property N;
    """)
    verdict, stats, log = explore_graph(m, ExploreConfig(detection_interval_edges=1))
    assert not verdict.cycle_found
    assert stats.detection_rounds >= 1
    assert not any(log.is_accepting(v) for v in range(log.vertex_count))
    verdict, unpruned, log = explore_graph(m, ExploreConfig(enable_relevance_pruning=False))
    assert not verdict.cycle_found
    assert any(log.is_accepting(v) for v in range(log.vertex_count))
    assert stats.states_generated < unpruned.states_generated


def test_stats_invariants(corpus_dir):
    model, _ = load(corpus_dir, "bakery_bug")
    _, s = explore(model, ExploreConfig(detection_interval_edges=1000))
    assert s.states_at_detection <= s.states_generated
    assert s.csr_time + s.kernel_time <= s.total_time
    assert s.kernel_calls >= s.map_iterations


def test_progress_records(corpus_dir):
    assert progress_snapshot(RunStats()) == ProgressRecord(0, 0, 0, 0, 0)
    model, _ = load(corpus_dir, "leader_ok")
    records = []
    explore(model, ExploreConfig(report_every_states=500, detection_interval_edges=2000), records.append)
    assert len(records) >= 5
    for a, b in zip(records, records[1:]):
        assert all(y >= x for x, y in zip(vars(a).values(), vars(b).values()))


@pytest.mark.parametrize("workers", [2, 4])
def test_reachable_set_identical_across_workers(corpus_dir, workers):
    model, _ = load(corpus_dir, "leader_ok")
    cfg = ExploreConfig(detection_interval_edges=None)
    _, s1, log1 = explore_graph(model, cfg)
    _, sw, logw = explore_graph(model, ExploreConfig(detection_interval_edges=None, generation_workers=workers))
    assert log1.keys() == logw.keys()
    assert list(build_snapshot(log1).arcs()) == list(build_snapshot(logw).arcs())
    assert (s1.states_generated, s1.transitions_generated) == (sw.states_generated, sw.transitions_generated)


def test_resource_limit_carries_partial_stats(corpus_dir):
    model, _ = load(corpus_dir, "peterson_ok")
    with pytest.raises(ResourceLimitError) as info:
        explore(model, ExploreConfig(max_states=1000))
    assert info.value.stats is not None
    assert 0 < info.value.stats.states_generated <= 1000


def test_runtime_error_propagates():
    m = parse_model("byte x = 250; process P { state s; init s; trans s -> s { effect x = x + 1; } } system async;")
    with pytest.raises(ModelRuntimeError) as info:
        explore(m)
    assert info.value.state is not None


def test_config_validation():
    with pytest.raises(ValueError):
        ExploreConfig(algorithm="bfs")
    with pytest.raises(ValueError):
        ExploreConfig(generation_workers=0)
    with pytest.raises(ValueError):
        ExploreConfig(detection_interval_edges=0)


def random_model(rng: random.Random) -> str:
    """Two counters, a few guarded moves, and a random claim over them."""
    lines = ["byte x;", "byte y;"]
    for name, var in (("A", "x"), ("B", "y")):
        k = rng.randint(2, 4)
        locs = [f"{name.lower()}{i}" for i in range(rng.randint(1, 3))]
        trans = []
        for _ in range(rng.randint(1, 4)):
            src, dst = rng.choice(locs), rng.choice(locs)
            guard = rng.choice(["", f"guard {var} < {k}; ", f"guard {var} == {rng.randrange(k)}; "])
            effect = rng.choice([f"effect {var} = ({var} + 1) % {k}; ", f"effect {var} = 0; ", ""])
            trans.append(f"trans {src} -> {dst} {{ {guard}{effect}}}")
        lines.append(f"process {name} {{ state {', '.join(locs)}; init {locs[0]}; {' '.join(trans)} }}")
    qs = [f"q{i}" for i in range(rng.randint(1, 4))]
    acc = [q for q in qs if rng.random() < 0.4] or [rng.choice(qs)]
    trans = []
    for _ in range(rng.randint(1, 6)):
        guard = rng.choice(["", "guard x == 1; ", "guard y != 0; ", "guard x > y; "])
        trans.append(f"trans {rng.choice(qs)} -> {rng.choice(qs)} {{ {guard}}}")
    lines.append(f"process N {{ state {', '.join(qs)}; init q0; accept {', '.join(acc)}; {' '.join(trans)} }}")
    lines += ["system async;", "property N;"]
    return "\n".join(lines)


def test_random_models_pruning_and_oracle():
    rng = random.Random(1234)
    pruned_cfg = ExploreConfig(detection_interval_edges=3)
    plain_cfg = ExploreConfig(enable_relevance_pruning=False, detection_interval_edges=None)
    found = 0
    for _ in range(1000):
        m = parse_model(random_model(rng))
        v1, _ = explore(m, pruned_cfg)
        v2, _, log = explore_graph(m, plain_cfg)
        snap = build_snapshot(log, Orientation.FORWARD)
        oracle = scc_verdict(list(snap.edges()), snap.n, snap.accepting_ids())
        assert v1.outcome is v2.outcome is oracle.outcome
        found += v1.cycle_found
    assert 50 < found < 950  # the generator exercises both outcomes


def test_early_exit_soundness(corpus_dir):
    for name in ("bakery_bug", "elevator_bug", "peterson_bug"):
        model, _ = load(corpus_dir, name)
        early, s = explore(model, ExploreConfig(detection_interval_edges=1000))
        final, _ = explore(model, ExploreConfig(detection_interval_edges=None))
        assert s.states_at_detection is not None
        assert early.cycle_found and final.cycle_found

import random

import pytest

from mapcheck.errors import ResourceLimitError
from mapcheck.oracles import ndfs_verdict, scc_verdict, tarjan_sccs
from mapcheck.verdict import Outcome, Verdict


def test_scc_examples():
    v = scc_verdict([(0, 0)], 1, [0])
    assert v.cycle_found and v.cyclic_accepting_vertices == {0} and v.witness == 0
    v = scc_verdict([(0, 1), (1, 2)], 3, [0, 1, 2])
    assert v.outcome is Outcome.NO_ACCEPTING_CYCLE and v.cyclic_accepting_vertices == set()
    v = scc_verdict([(0, 1), (1, 2), (2, 1)], 3, [1])
    assert v.cycle_found and v.cyclic_accepting_vertices == {1}


def test_tarjan_partition():
    sccs = tarjan_sccs([[1], [2], [1, 3], []])
    assert sorted(sorted(c) for c in sccs) == [[0], [1, 2], [3]]


def test_ndfs_examples():
    assert ndfs_verdict([(0, 0)], 1, [0], 0).cycle_found
    # accepting cycle 2<->3 lives in a component 0 cannot reach
    edges = [(0, 1), (2, 3), (3, 2)]
    assert not ndfs_verdict(edges, 4, [2], 0).cycle_found
    assert scc_verdict(edges, 4, [2]).cycle_found


def test_limits():
    with pytest.raises(ResourceLimitError):
        scc_verdict([], 11, [], limit=10)
    with pytest.raises(ResourceLimitError):
        ndfs_verdict([], 11, [], 0, limit=10)


def reachable_graph(rng, n, extra_p, acc_frac):
    edges = [(rng.randrange(v), v) for v in range(1, n)]  # spanning arborescence rooted at 0
    edges += [(u, v) for u in range(n) for v in range(n) if rng.random() < extra_p]
    rng.shuffle(edges)
    return edges, [v for v in range(n) if rng.random() < acc_frac]


def test_ndfs_agrees_with_scc_on_reachable_graphs():
    rng = random.Random(2)
    for i in range(1000):
        n = rng.randint(1, 50)
        edges, acc = reachable_graph(rng, n, (0.02, 0.05, 0.1)[i % 3], (0.1, 0.3)[(i // 3) % 2])
        assert ndfs_verdict(edges, n, acc, 0).outcome is scc_verdict(edges, n, acc).outcome


def test_deep_graph_no_recursion_limit():
    n = 50_000
    edges = [(v, v + 1) for v in range(n - 1)] + [(n - 1, 0)]
    assert scc_verdict(edges, n, [n // 2]).cycle_found
    assert ndfs_verdict(edges, n, [n // 2], 0).cycle_found


def test_verdict_invariant():
    with pytest.raises(ValueError):
        Verdict(Outcome.CYCLE_FOUND, None)
    with pytest.raises(ValueError):
        Verdict(Outcome.NO_ACCEPTING_CYCLE, 3)
    assert Verdict.found(2).cycle_found and not Verdict.none().cycle_found

import random
from pathlib import Path

import pytest

from mapcheck import CORPUS_DIR

MODELS_DIR = Path(__file__).parent / "models"


def random_digraph(rng: random.Random, n: int, p: float, acc_frac: float):
    edges = [(u, v) for u in range(n) for v in range(n) if rng.random() < p]
    accepting = sorted(v for v in range(n) if rng.random() < acc_frac)
    return edges, accepting


def graph_cases(count, seed=7, max_n=50):
    """Deterministic mix over three densities and two accepting fractions."""
    rng = random.Random(seed)
    densities, fractions = (0.02, 0.05, 0.1), (0.1, 0.3)
    for i in range(count):
        n = rng.randint(1, max_n)
        p = densities[i % 3]
        f = fractions[(i // 3) % 2]
        edges, acc = random_digraph(rng, n, p, f)
        yield n, edges, acc


def closure(n, edges):
    """reach[u][v]: path of length >= 1 from u to v (Floyd-Warshall style)."""
    reach = [[False] * n for _ in range(n)]
    for u, v in edges:
        reach[u][v] = True
    for k in range(n):
        rk = reach[k]
        for i in range(n):
            if reach[i][k]:
                ri = reach[i]
                for j in range(n):
                    if rk[j]:
                        ri[j] = True
    return reach


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS_DIR


@pytest.fixture(scope="session")
def models_dir():
    return MODELS_DIR


_ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def criterion():
    """``criterion(label, ok, detail)`` records one acceptance line and returns ``ok``."""
    def record(label, ok, detail=""):
        _ACCEPTANCE[label] = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}".rstrip(": ")
        print(_ACCEPTANCE[label])
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for label in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[label])

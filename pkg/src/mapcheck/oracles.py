"""Brute-force accepting-cycle deciders used as ground truth.

Deliberately plain Python over adjacency lists: no numpy, no shared code with
the engines they check.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import ResourceLimitError
from .verdict import Outcome, Verdict

DEFAULT_LIMIT = 100_000


@dataclass(frozen=True)
class OracleVerdict:
    outcome: Outcome
    witness: int | None = None
    cyclic_accepting_vertices: frozenset = field(default_factory=frozenset)

    @property
    def cycle_found(self) -> bool:
        return self.outcome is Outcome.CYCLE_FOUND

    def as_verdict(self) -> Verdict:
        return Verdict(self.outcome, self.witness)


def _adjacency(edges, n, limit):
    if n > limit:
        raise ResourceLimitError(f"oracle limit {limit} exceeded (n={n})")
    succ = [[] for _ in range(n)]
    for s, d in edges:
        succ[s].append(d)
    return succ


def tarjan_sccs(succ: list[list[int]]) -> list[list[int]]:
    """Iterative Tarjan; components come out in reverse topological order."""
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            if i < len(succ[v]):
                work[-1] = (v, i + 1)
                w = succ[v][i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def scc_verdict(edges: Iterable[tuple[int, int]], n: int, accepting: Iterable[int],
                limit: int = DEFAULT_LIMIT) -> OracleVerdict:
    succ = _adjacency(edges, n, limit)
    acc = set(accepting)
    found = set()
    for comp in tarjan_sccs(succ):
        cyclic = len(comp) > 1 or comp[0] in succ[comp[0]]
        if cyclic:
            found.update(v for v in comp if v in acc)
    if found:
        return OracleVerdict(Outcome.CYCLE_FOUND, min(found), frozenset(found))
    return OracleVerdict(Outcome.NO_ACCEPTING_CYCLE)


def ndfs_verdict(edges: Iterable[tuple[int, int]], n: int, accepting: Iterable[int], init: int = 0,
                 limit: int = DEFAULT_LIMIT) -> Verdict:
    """Nested DFS (blue search in post-order seeds red searches) from ``init``."""
    succ = _adjacency(edges, n, limit)
    if n == 0:
        return Verdict.none()
    acc = set(accepting)
    blue = [False] * n
    red = [False] * n

    def red_search(seed):
        stack = [iter(succ[seed])]
        red[seed] = True
        while stack:
            for w in stack[-1]:
                if w == seed:
                    return True
                if not red[w]:
                    red[w] = True
                    stack.append(iter(succ[w]))
                    break
            else:
                stack.pop()
        return False

    blue[init] = True
    stack = [(init, iter(succ[init]))]
    while stack:
        v, it = stack[-1]
        for w in it:
            if not blue[w]:
                blue[w] = True
                stack.append((w, iter(succ[w])))
                break
        else:
            stack.pop()
            if v in acc and red_search(v):
                return Verdict.found(v)
    return Verdict.none()

"""MAP accepting-cycle detection as repeated max-semiring matrix-vector steps.

Values are vertex ids; ``NIL`` (-1) sorts below every id.  A snapshot edge
``u -> v`` (row ``u`` of the stored CSR) means a value flows from ``u`` to
``v``.  Each step reads the old vector and writes a fresh one, so rows can be
split across workers without changing the result.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import ContractError
from .graph_core import CsrSnapshot
from .verdict import Verdict

NIL = _kernels.NIL


@dataclass
class MapStats:
    iterations: int = 0
    kernel_calls: int = 0
    demoted_total: int = 0
    cycle_witness: Optional[int] = None
    kernel_time: float = 0.0


def init_vector(snap: CsrSnapshot) -> np.ndarray:
    return np.full(snap.n, NIL, dtype=np.int64)


def _row_ranges(offsets: np.ndarray, workers: int) -> list[tuple[int, int]]:
    """Split rows into ``workers`` contiguous ranges of roughly equal edge count."""
    n = len(offsets) - 1
    if workers <= 1 or n <= 1:
        return [(0, n)]
    work = offsets + np.arange(n + 1)  # edges + one unit per row
    cuts = np.searchsorted(work, np.linspace(0, work[-1], workers + 1)[1:-1])
    bounds = [0, *sorted(set(int(c) for c in cuts if 0 < c < n)), n]
    return list(zip(bounds[:-1], bounds[1:]))


class PropagationKernel:
    """One 'device': pulls values along snapshot edges with W row workers."""

    def __init__(self, snap: CsrSnapshot, workers: int = 1, pool: Optional[ThreadPoolExecutor] = None):
        if workers < 1:
            raise ContractError("workers must be >= 1")
        self.snap = snap
        pred = snap.reverse  # row v of the reverse lists every u with u -> v
        self.pred_offsets = pred.row_offsets
        self.pred_cols = pred.col_indices
        self.workers = workers
        self.ranges = _row_ranges(np.asarray(self.pred_offsets), workers)
        self._pool = pool
        self._own_pool = False
        if len(self.ranges) > 1 and pool is None:
            self._pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="map-kernel")
            self._own_pool = True
        self.calls = 0
        self.elapsed = 0.0

    def close(self):
        if self._own_pool:
            self._pool.shutdown()
            self._own_pool = False

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def step(self, x: np.ndarray, accepting: np.ndarray) -> tuple[np.ndarray, bool, int]:
        """``(x', changed, witness)``; witness is the least accepting v with x'[v] == v, or NIL."""
        n = self.snap.n
        if len(x) != n or len(accepting) != n:
            raise ContractError(f"vector length {len(x)} / {len(accepting)} does not match n={n}")
        out = np.empty(n, dtype=np.int64)
        x = np.ascontiguousarray(x, dtype=np.int64)
        accepting = np.ascontiguousarray(accepting, dtype=np.bool_)
        t0 = time.perf_counter()
        if len(self.ranges) == 1:
            lo, hi = self.ranges[0]
            results = [_kernels.propagate_rows(self.pred_offsets, self.pred_cols, x, accepting, out, lo, hi)]
        else:
            futures = [
                self._pool.submit(_kernels.propagate_rows, self.pred_offsets, self.pred_cols, x, accepting, out, lo, hi)
                for lo, hi in self.ranges
            ]
            results = [f.result() for f in futures]
        self.elapsed += time.perf_counter() - t0
        self.calls += 1
        changed = any(c for c, _ in results)
        witnesses = [w for _, w in results if w != NIL]
        return out, changed, (min(witnesses) if witnesses else NIL)


def propagate_step(snap: CsrSnapshot, x: np.ndarray, accepting: np.ndarray, workers: int = 1) -> tuple[np.ndarray, bool]:
    with PropagationKernel(snap, workers) as kernel:
        out, changed, _ = kernel.step(x, accepting)
    return out, changed


def _fixpoint(kernel: PropagationKernel, accepting: np.ndarray, early_exit: bool):
    x = init_vector(kernel.snap)
    steps = 0
    while True:
        x_new, changed, witness = kernel.step(x, accepting)
        steps += 1
        x = x_new
        if early_exit and witness != NIL:
            return x, steps, int(witness)
        if not changed:
            return x, steps, None


def fixpoint(snap: CsrSnapshot, accepting: np.ndarray, *, early_exit: bool = True, workers: int = 1):
    """Iterate :func:`propagate_step` from all-NIL until nothing changes.

    Returns ``(x, steps, early_witness)``.  At a full fixpoint ``x[v]`` is the
    largest accepting ``u`` with a path of length >= 1 from ``u`` to ``v``.
    """
    with PropagationKernel(snap, workers) as kernel:
        return _fixpoint(kernel, accepting, early_exit)


def demote(x: np.ndarray, accepting: np.ndarray) -> tuple[np.ndarray, set[int]]:
    """Drop every accepting vertex that is some vertex's maximal accepting predecessor."""
    values = np.unique(x[x != NIL])
    hit = values[accepting[values]] if values.size else values
    remaining = accepting.copy()
    remaining[hit] = False
    return remaining, set(hit.tolist())


def run_map(snap: CsrSnapshot, accepting: Optional[np.ndarray] = None, *, early_exit: bool = True,
            workers: int = 1, pool: Optional[ThreadPoolExecutor] = None) -> tuple[Verdict, MapStats]:
    """Full MAP loop.  The witness is reported in ``snap``'s original ids."""
    acc = np.array(snap.accepting if accepting is None else accepting, dtype=np.bool_)
    stats = MapStats()
    kernel = PropagationKernel(snap, workers, pool)
    try:
        while acc.any():
            stats.iterations += 1
            x, _, witness = _fixpoint(kernel, acc, early_exit)
            if witness is None:
                # early exit may be off; a full fixpoint can still expose x[v] == v
                selfish = np.flatnonzero(acc & (x == np.arange(snap.n)))
                if selfish.size:
                    witness = int(selfish[0])
            if witness is not None:
                stats.cycle_witness = snap.to_original(witness)
                return Verdict.found(stats.cycle_witness), _finish(stats, kernel)
            acc, demoted = demote(x, acc)
            stats.demoted_total += len(demoted)
            if not demoted:
                break
        return Verdict.none(), _finish(stats, kernel)
    finally:
        kernel.close()


def _finish(stats: MapStats, kernel: PropagationKernel) -> MapStats:
    stats.kernel_calls = kernel.calls
    stats.kernel_time = kernel.elapsed
    return stats

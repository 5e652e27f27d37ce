"""One-Way-Catch-Them-Young: alternate proper reachability from accepting
vertices with elimination of vertices that have no predecessor in the set.
Runs on the forward orientation."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ContractError
from .graph_core import CsrSnapshot, Orientation
from .verdict import Verdict


@dataclass
class OwctyStats:
    outer_iterations: int = 0
    reach_time: float = 0.0
    elim_time: float = 0.0
    final_size: int = 0


def _forward(snap: CsrSnapshot) -> CsrSnapshot:
    if snap.orientation is not Orientation.FORWARD:
        raise ContractError("OWCTY phases expect a forward-orientation snapshot")
    return snap


def reach(snap: CsrSnapshot, members: np.ndarray, accepting: np.ndarray) -> np.ndarray:
    snap = _forward(snap)
    return _kernels.proper_reach(snap.row_offsets, snap.col_indices,
                                 np.asarray(members, dtype=np.bool_), np.asarray(accepting, dtype=np.bool_))


def elim(snap: CsrSnapshot, members: np.ndarray) -> np.ndarray:
    snap = _forward(snap)
    return _kernels.peel_sources(snap.row_offsets, snap.col_indices, np.asarray(members, dtype=np.bool_))


def run_owcty(snap: CsrSnapshot, accepting=None) -> tuple[Verdict, OwctyStats]:
    """Accepting cycle iff the set survives non-empty.  Works on either
    orientation by switching to the forward one."""
    if snap.orientation is not Orientation.FORWARD:
        snap = snap.reverse
    acc = np.asarray(snap.accepting if accepting is None else accepting, dtype=np.bool_)
    stats = OwctyStats()
    current = np.ones(snap.n, dtype=np.bool_)
    size = snap.n
    while True:
        stats.outer_iterations += 1
        t0 = time.perf_counter()
        current = reach(snap, current, acc)
        t1 = time.perf_counter()
        current = elim(snap, current)
        stats.elim_time += time.perf_counter() - t1
        stats.reach_time += t1 - t0
        new_size = int(current.sum())
        if new_size == size or new_size == 0:
            size = new_size
            break
        size = new_size
    stats.final_size = size
    survivors = np.flatnonzero(current & acc)
    if size and survivors.size:
        return Verdict.found(snap.to_original(int(survivors[0]))), stats
    return Verdict.none(), stats

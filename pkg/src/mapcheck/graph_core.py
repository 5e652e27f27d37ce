"""Append-only product-graph store and immutable CSR snapshots.

The store interns canonical state keys to dense vertex ids (discovery order,
initial state = 0) and keeps an append-only edge log.  Detection rounds never
touch the log directly; they work on a :class:`CsrSnapshot` built from a
prefix of it, in either orientation.
"""
from __future__ import annotations

import threading
from array import array
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Iterator, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ContractError, GraphFormatError, ResourceLimitError

INDEX_DTYPE = np.int64


class Orientation(str, Enum):
    FORWARD = "forward"
    TRANSPOSED = "transposed"

    def flipped(self) -> "Orientation":
        return Orientation.TRANSPOSED if self is Orientation.FORWARD else Orientation.FORWARD


def accepting_mask(n: int, members: Iterable[int] = ()) -> np.ndarray:
    """Bit-sequence form of an accepting set over ``[0, n)``."""
    mask = np.zeros(n, dtype=np.bool_)
    ids = np.fromiter(members, dtype=INDEX_DTYPE)
    if ids.size:
        if ids.min() < 0 or ids.max() >= n:
            raise ContractError(f"accepting ids must lie in [0, {n})")
        mask[ids] = True
    return mask


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class CsrSnapshot:
    orientation: Orientation
    row_offsets: np.ndarray
    col_indices: np.ndarray
    accepting: np.ndarray
    # ids in the graph this snapshot was derived from; None means identity
    original_ids: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.row_offsets) - 1

    @property
    def m(self) -> int:
        return len(self.col_indices)

    def row(self, v: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[v]:self.row_offsets[v + 1]]

    def edges(self) -> Iterator[tuple[int, int]]:
        """Logged edges ``(src, dst)`` in the ORIGINAL direction."""
        rows = np.repeat(np.arange(self.n, dtype=INDEX_DTYPE), np.diff(self.row_offsets))
        if self.orientation is Orientation.FORWARD:
            pairs = zip(rows.tolist(), self.col_indices.tolist())
        else:
            pairs = zip(self.col_indices.tolist(), rows.tolist())
        return iter(pairs)

    def arcs(self) -> Iterator[tuple[int, int]]:
        """Edges as stored: ``(row, col)``, i.e. the direction values flow in."""
        rows = np.repeat(np.arange(self.n, dtype=INDEX_DTYPE), np.diff(self.row_offsets))
        return zip(rows.tolist(), self.col_indices.tolist())

    @cached_property
    def reverse(self) -> "CsrSnapshot":
        """Same edge set stored in the other orientation."""
        rows = np.repeat(np.arange(self.n, dtype=INDEX_DTYPE), np.diff(self.row_offsets))
        return _csr_from_pairs(
            self.orientation.flipped(), self.n, self.col_indices, rows,
            self.accepting, self.original_ids, dedup=False,
        )

    def accepting_ids(self) -> list[int]:
        return np.flatnonzero(self.accepting).tolist()

    def to_original(self, v: int) -> int:
        return int(v) if self.original_ids is None else int(self.original_ids[v])


def _csr_from_pairs(orientation, n, rows, cols, accepting, original_ids=None, dedup=True):
    rows = np.asarray(rows, dtype=INDEX_DTYPE)
    cols = np.asarray(cols, dtype=INDEX_DTYPE)
    if rows.size:
        # a single sort on the packed key yields row-major order with sorted columns
        keys = rows * max(n, 1) + cols
        keys = np.unique(keys) if dedup else np.sort(keys, kind="stable")
        rows, cols = np.divmod(keys, max(n, 1))
    counts = np.bincount(rows, minlength=n) if rows.size else np.zeros(n, dtype=INDEX_DTYPE)
    offsets = np.zeros(n + 1, dtype=INDEX_DTYPE)
    np.cumsum(counts, out=offsets[1:])
    return CsrSnapshot(
        orientation=Orientation(orientation),
        row_offsets=_readonly(offsets),
        col_indices=_readonly(np.ascontiguousarray(cols, dtype=INDEX_DTYPE)),
        accepting=_readonly(np.array(accepting, dtype=np.bool_)),
        original_ids=None if original_ids is None else _readonly(np.asarray(original_ids, dtype=INDEX_DTYPE)),
    )


class EdgeLog:
    """Vertex interning plus an append-only edge log.

    One writer calls :meth:`intern_state` / :meth:`append_edge`; readers may
    call :func:`build_snapshot` at any time and see a consistent prefix.
    """

    def __init__(self, max_vertices: Optional[int] = None):
        self.max_vertices = max_vertices
        self._ids: dict[bytes, int] = {}
        self._accepting = bytearray()
        self._src = array("q")
        self._dst = array("q")
        self._lock = threading.Lock()

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], accepting: Iterable[int] = ()) -> "EdgeLog":
        log = cls()
        acc = set(accepting)
        for v in range(n):
            log.intern_state(v.to_bytes(8, "little"), v in acc)
        for s, d in edges:
            log.append_edge(s, d)
        return log

    @property
    def vertex_count(self) -> int:
        return len(self._accepting)

    def __len__(self) -> int:
        return len(self._src)

    def intern_state(self, key: bytes, accepting: bool = False) -> tuple[int, bool]:
        vid = self._ids.get(key)
        if vid is not None:
            return vid, False
        vid = len(self._accepting)
        if self.max_vertices is not None and vid >= self.max_vertices:
            raise ResourceLimitError(f"vertex capacity {self.max_vertices} exceeded")
        self._ids[key] = vid
        self._accepting.append(1 if accepting else 0)
        return vid, True

    def lookup(self, key: bytes) -> Optional[int]:
        return self._ids.get(key)

    def is_accepting(self, vid: int) -> bool:
        return bool(self._accepting[vid])

    def keys(self) -> list[bytes]:
        """Interned keys in id order."""
        return list(self._ids)

    def append_edge(self, src: int, dst: int) -> None:
        n = len(self._accepting)
        if not (0 <= src < n and 0 <= dst < n):
            raise ContractError(f"edge ({src}, {dst}) has an endpoint that was never interned")
        with self._lock:
            self._src.append(src)
            self._dst.append(dst)

    def extend_edges(self, src: Iterable[int], dst: Iterable[int]) -> None:
        src = array("q", src)
        dst = array("q", dst)
        n = len(self._accepting)
        if len(src) != len(dst):
            raise ContractError("edge batch halves differ in length")
        if src and (min(src) < 0 or max(src) >= n or min(dst) < 0 or max(dst) >= n):
            raise ContractError("edge batch references a vertex that was never interned")
        with self._lock:
            self._src.extend(src)
            self._dst.extend(dst)

    def capture(self, m: Optional[int] = None):
        """Atomically copy a prefix: ``(n, src, dst, accepting)``.

        The edge count is read before the vertex count, so every captured edge
        has both endpoints below the captured ``n``.
        """
        with self._lock:
            total = len(self._src)
            m = total if m is None else min(m, total)
            src = np.frombuffer(self._src, dtype=INDEX_DTYPE, count=m).copy()
            dst = np.frombuffer(self._dst, dtype=INDEX_DTYPE, count=m).copy()
        n = len(self._accepting)
        acc = np.frombuffer(bytes(self._accepting[:n]), dtype=np.uint8).astype(np.bool_)
        return n, src, dst, acc


def append_edge(log: EdgeLog, src: int, dst: int) -> None:
    log.append_edge(src, dst)


def build_snapshot(log: EdgeLog, orientation=Orientation.TRANSPOSED, prefix: Optional[int] = None) -> CsrSnapshot:
    """CSR view of (a prefix of) the log; duplicate edges are dropped and each
    row's column indices are sorted ascending."""
    n, src, dst, acc = log.capture(prefix)
    orientation = Orientation(orientation)
    if orientation is Orientation.FORWARD:
        return _csr_from_pairs(orientation, n, src, dst, acc)
    return _csr_from_pairs(orientation, n, dst, src, acc)


def snapshot_from_edges(n, edges, accepting=(), orientation=Orientation.TRANSPOSED) -> CsrSnapshot:
    edges = list(edges)
    src = np.array([e[0] for e in edges], dtype=INDEX_DTYPE)
    dst = np.array([e[1] for e in edges], dtype=INDEX_DTYPE)
    if edges and (src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= n):
        raise ContractError(f"edge endpoint outside [0, {n})")
    acc = accepting if isinstance(accepting, np.ndarray) else accepting_mask(n, accepting)
    if Orientation(orientation) is Orientation.FORWARD:
        return _csr_from_pairs(orientation, n, src, dst, acc)
    return _csr_from_pairs(orientation, n, dst, src, acc)


def strong_components(snap: CsrSnapshot) -> tuple[int, np.ndarray]:
    """SCC labels; orientation does not matter since transposition keeps SCCs."""
    n = snap.n
    if n == 0:
        return 0, np.zeros(0, dtype=INDEX_DTYPE)
    mat = csr_matrix(
        (np.ones(snap.m, dtype=np.int8), snap.col_indices, snap.row_offsets), shape=(n, n)
    )
    count, labels = connected_components(mat, directed=True, connection="strong")
    return count, labels.astype(INDEX_DTYPE)


def restrict_to_accepting_sccs(snap: CsrSnapshot) -> tuple[CsrSnapshot, set[int]]:
    """Keep only cyclic SCCs that contain an accepting vertex.

    Surviving vertices are renumbered densely in their original relative
    order, so the MAP vertex ordering is unchanged on them.  ``original_ids``
    of the result maps back to the ids of ``snap``'s own origin.
    """
    n = snap.n
    count, labels = strong_components(snap)
    if n == 0:
        kept_ids = np.zeros(0, dtype=INDEX_DTYPE)
    else:
        sizes = np.bincount(labels, minlength=count)
        rows = np.repeat(np.arange(n, dtype=INDEX_DTYPE), np.diff(snap.row_offsets))
        cols = snap.col_indices
        cyclic = sizes >= 2
        loops = rows[rows == cols]
        cyclic[labels[loops]] = True
        has_acc = np.zeros(count, dtype=np.bool_)
        has_acc[labels[snap.accepting]] = True
        kept_mask = (cyclic & has_acc)[labels]
        kept_ids = np.flatnonzero(kept_mask).astype(INDEX_DTYPE)

    new_id = np.full(n, -1, dtype=INDEX_DTYPE)
    new_id[kept_ids] = np.arange(kept_ids.size, dtype=INDEX_DTYPE)
    if n:
        keep_edge = (new_id[rows] >= 0) & (new_id[cols] >= 0)
        r, c = new_id[rows[keep_edge]], new_id[cols[keep_edge]]
    else:
        r = c = np.zeros(0, dtype=INDEX_DTYPE)
    if snap.original_ids is None:
        origin = kept_ids
    else:
        origin = snap.original_ids[kept_ids]
    restricted = _csr_from_pairs(
        snap.orientation, kept_ids.size, r, c, snap.accepting[kept_ids], origin, dedup=False
    )
    kept = {snap.to_original(v) for v in kept_ids.tolist()}
    return restricted, kept


# -- explicit graph text format ------------------------------------------------

def parse_graph_text(text: str) -> tuple[int, list[int], list[tuple[int, int]]]:
    """Parse ``graph <n>`` / ``accepting ...`` / ``edge <s> <d>`` lines."""
    n = None
    accepting: Optional[list[int]] = None
    edges: list[tuple[int, int]] = []

    def vertex(tok, lineno):
        try:
            v = int(tok, 10)
        except ValueError:
            raise GraphFormatError(f"bad vertex id {tok!r}", lineno) from None
        if not tok.isdigit() or v >= n:
            raise GraphFormatError(f"vertex id {tok} outside [0, {n})", lineno)
        return v

    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        head, args = toks[0], toks[1:]
        if n is None:
            if head != "graph" or len(args) != 1 or not args[0].isdigit():
                raise GraphFormatError("expected 'graph <n>' header", lineno)
            n = int(args[0])
        elif accepting is None:
            if head != "accepting":
                raise GraphFormatError("expected 'accepting' line after header", lineno)
            accepting = [vertex(t, lineno) for t in args]
        elif head == "edge":
            if len(args) != 2:
                raise GraphFormatError("edge takes exactly two ids", lineno)
            edges.append((vertex(args[0], lineno), vertex(args[1], lineno)))
        else:
            raise GraphFormatError(f"unexpected directive {head!r}", lineno)
    if n is None:
        raise GraphFormatError("missing 'graph <n>' header")
    if accepting is None:
        raise GraphFormatError("missing 'accepting' line")
    return n, accepting, edges


def format_graph_text(n: int, accepting: Iterable[int], edges: Iterable[tuple[int, int]]) -> str:
    lines = [f"graph {n}", " ".join(["accepting", *map(str, accepting)])]
    lines += [f"edge {s} {d}" for s, d in edges]
    return "\n".join(lines) + "\n"

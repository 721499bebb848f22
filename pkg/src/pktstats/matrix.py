"""Hypersparse traffic matrices: string-keyed two-level maps of packet counts.

A matrix row is a source address, a column a destination address, and each
stored entry is a positive packet count.  Entries are held as
``dict[src, dict[dst, int]]`` with lazily built column views and sorted key
caches; traversal and dumps are always in sorted key order.
"""

from __future__ import annotations

import operator
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Optional, Set, Tuple

from .fileio import open_text_read, open_text_write
from .ingest import PacketWindow, is_valid_packet


@dataclass(frozen=True)
class AggregateSummary:
    """Window-level totals derivable from one matrix."""

    valid_packets: int
    unique_links: int
    unique_sources: int
    unique_destinations: int


class TrafficMatrix:
    """Sparse nonnegative integer matrix over address-string keys.

    Mutation is only allowed during construction; ``freeze()`` (called by all
    factory methods) makes the matrix immutable.  Equality is by content, so
    any insertion order of the same multiset of triples yields equal matrices.
    """

    __slots__ = ("_rows", "_frozen", "_cols", "_row_keys", "_col_keys", "_total", "_nnz")

    def __init__(self):
        self._rows: Dict[str, Dict[str, int]] = {}
        self._frozen = False
        self._cols: Optional[Dict[str, Dict[str, int]]] = None
        self._row_keys: Optional[Tuple[str, ...]] = None
        self._col_keys: Optional[Tuple[str, ...]] = None
        self._total: Optional[int] = None
        self._nnz: Optional[int] = None

    # -- construction ------------------------------------------------------

    def accumulate(self, src: str, dst: str, count: int = 1) -> "TrafficMatrix":
        """Add ``count`` packets to entry (src, dst); creates it if missing."""
        if self._frozen:
            raise ValueError("matrix is frozen")
        if not isinstance(count, int) or count < 1:
            raise ValueError(f"count must be a positive integer, got {count!r}")
        row = self._rows.setdefault(src, {})
        row[dst] = row.get(dst, 0) + count
        return self

    def freeze(self) -> "TrafficMatrix":
        self._frozen = True
        return self

    @classmethod
    def from_window(cls, window: PacketWindow) -> "TrafficMatrix":
        """Build the matrix of one window; total entries equal window.n_valid."""
        records = window.records
        for record in records:
            if not is_valid_packet(record):
                raise ValueError(f"window contains an invalid packet: {record!r}")
        counts = Counter(map(operator.itemgetter(1, 2), records))
        m = cls()
        rows = m._rows
        for (src, dst), count in counts.items():
            rows.setdefault(src, {})[dst] = count
        m.freeze()
        if m.total != window.n_valid:
            raise AssertionError(
                f"conservation violated: {m.total} entries != {window.n_valid} packets"
            )
        return m

    @classmethod
    def from_counts(cls, counts: Dict[Tuple[str, str], int]) -> "TrafficMatrix":
        """Build from a {(src, dst): count} mapping (test/tool convenience)."""
        m = cls()
        for (src, dst), count in counts.items():
            m.accumulate(src, dst, count)
        return m.freeze()

    # -- views -------------------------------------------------------------

    @property
    def rows(self) -> Dict[str, Dict[str, int]]:
        return self._rows

    @property
    def cols(self) -> Dict[str, Dict[str, int]]:
        """Column-major view dst -> src -> count (built lazily, cached)."""
        if self._cols is None:
            cols: Dict[str, Dict[str, int]] = {}
            for src, row in self._rows.items():
                for dst, count in row.items():
                    cols.setdefault(dst, {})[src] = count
            self._cols = cols
        return self._cols

    @property
    def row_keys(self) -> Tuple[str, ...]:
        if self._row_keys is None:
            self._row_keys = tuple(sorted(self._rows))
        return self._row_keys

    @property
    def col_keys(self) -> Tuple[str, ...]:
        if self._col_keys is None:
            self._col_keys = tuple(sorted(self.cols))
        return self._col_keys

    @property
    def total(self) -> int:
        """Sum of all entries (valid packets)."""
        if self._total is None:
            self._total = sum(sum(row.values()) for row in self._rows.values())
        return self._total

    @property
    def nnz(self) -> int:
        """Number of stored entries (unique links)."""
        if self._nnz is None:
            self._nnz = sum(len(row) for row in self._rows.values())
        return self._nnz

    def entry(self, src: str, dst: str) -> int:
        return self._rows.get(src, {}).get(dst, 0)

    def entries(self) -> Iterator[Tuple[str, str, int]]:
        """All (src, dst, count) triples in sorted (src, dst) order."""
        for src in self.row_keys:
            row = self._rows[src]
            for dst in sorted(row):
                yield src, dst, row[dst]

    # -- reductions --------------------------------------------------------

    def reduce(self, axis: str, mode: str) -> Dict[str, int]:
        """Per-key reduction: axis in {row, col}, mode in {sum, nnz}."""
        if axis == "row":
            table = self._rows
        elif axis == "col":
            table = self.cols
        else:
            raise ValueError(f"axis must be 'row' or 'col', got {axis!r}")
        if mode == "sum":
            return {key: sum(line.values()) for key, line in table.items()}
        if mode == "nnz":
            return {key: len(line) for key, line in table.items()}
        raise ValueError(f"mode must be 'sum' or 'nnz', got {mode!r}")

    def submatrix(
        self, row_keys: Optional[Set[str]], col_keys: Optional[Set[str]]
    ) -> "TrafficMatrix":
        """Restriction to the given key sets (None selects everything)."""
        m = TrafficMatrix()
        rows = m._rows
        source = (
            self._rows.items()
            if row_keys is None
            else ((k, self._rows[k]) for k in row_keys if k in self._rows)
        )
        for src, row in source:
            if col_keys is None:
                kept = dict(row)
            else:
                kept = {dst: count for dst, count in row.items() if dst in col_keys}
            if kept:
                rows[src] = kept
        return m.freeze()

    def aggregates(self) -> AggregateSummary:
        return AggregateSummary(
            valid_packets=self.total,
            unique_links=self.nnz,
            unique_sources=len(self._rows),
            unique_destinations=len(self.cols),
        )

    # -- dunder ------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrafficMatrix):
            return NotImplemented
        return self._rows == other._rows

    __hash__ = None  # mutable-until-frozen; not hashable

    def __len__(self) -> int:
        return self.nnz

    def __repr__(self) -> str:
        return (
            f"TrafficMatrix(links={self.nnz}, packets={self.total}, "
            f"sources={len(self._rows)})"
        )


def write_matrix_dump(path, matrix: TrafficMatrix) -> int:
    """Write sorted ``src,dst,count`` triples; returns the row count."""
    n = 0
    with open_text_write(path) as fh:
        for src, dst, count in matrix.entries():
            fh.write(f"{src},{dst},{count}\n")
            n += 1
    return n


def read_matrix_dump(path) -> TrafficMatrix:
    """Read a triple-list dump back into a matrix."""
    counts: Dict[Tuple[str, str], int] = {}
    with open_text_read(path) as fh:
        for line_number, line in enumerate(fh, 1):
            parts = line.rstrip("\r\n").split(",")
            if len(parts) != 3:
                raise ValueError(f"line {line_number}: expected 3 fields")
            src, dst, raw = parts
            count = int(raw)
            if count < 1:
                raise ValueError(f"line {line_number}: count must be positive")
            counts[(src, dst)] = counts.get((src, dst), 0) + count
    return TrafficMatrix.from_counts(counts)

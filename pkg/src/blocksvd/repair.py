"""Lonely-row detection and the three rank-repair checkers.

A row is lonely in a block when it has no nonzero entry inside the block's
column range. Each checker inserts unit entries into lonely rows so the
block can reach the rank of the full matrix.
"""

from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .sparse import SparseMatrix


class RepairMethod(enum.Enum):
    RANDOM_CHECKER = "random"
    NEIGHBOR_CHECKER = "neighbor"
    NEIGHBOR_RANDOM_CHECKER = "neighbor-random"
    NONE = "none"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ParameterError(f"unknown repair method {value!r} (expected one of {names})") from None


class EditableMatrix:
    """Mutable adjacency view used while repairing a matrix.

    Keeps a sorted column list per row and a row set per column so both the
    lonely-row scan and the neighbour lookup are cheap.
    """

    def __init__(self, a: SparseMatrix):
        self.shape = a.shape
        self.values = a.entries()
        self.row_cols = [[] for _ in range(a.shape[0])]
        self.col_rows = {}
        for r, c in zip(a.rows.tolist(), a.cols.tolist()):
            self.row_cols[r].append(c)  # already row-major sorted
            self.col_rows.setdefault(c, set()).add(r)

    def cols_in(self, row, start, end):
        cols = self.row_cols[row]
        return cols[bisect.bisect_left(cols, start) : bisect.bisect_left(cols, end)]

    def has_entry_in(self, row, start, end):
        cols = self.row_cols[row]
        i = bisect.bisect_left(cols, start)
        return i < len(cols) and cols[i] < end

    def add(self, row, col, value=1.0):
        """Insert ``value`` at (row, col); existing entries are never overwritten."""
        if (row, col) in self.values:
            return False
        self.values[(row, col)] = value
        bisect.insort(self.row_cols[row], col)
        self.col_rows.setdefault(col, set()).add(row)
        return True

    def to_sparse(self):
        return SparseMatrix.from_entries(self.shape, self.values)


@dataclass(frozen=True)
class AddedEdge:
    block: int
    row: int
    col: int
    method: str


@dataclass
class RepairReport:
    added_edges: list = field(default_factory=list)
    lonely_counts: list = field(default_factory=list)
    fallback_count: int = 0

    def to_log(self):
        lines = [f"{e.block}\t{e.row}\t{e.col}\t{e.method}" for e in self.added_edges]
        counts = ",".join(str(c) for c in self.lonely_counts)
        lines.append(f"# lonely={counts} fallback={self.fallback_count}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_log(cls, text):
        report = cls()
        for line in text.splitlines():
            if not line:
                continue
            if line.startswith("#"):
                fields = dict(part.split("=", 1) for part in line[1:].split())
                report.lonely_counts = [int(c) for c in fields["lonely"].split(",") if c]
                report.fallback_count = int(fields["fallback"])
                continue
            block, row, col, method = line.split("\t")
            report.added_edges.append(AddedEdge(int(block), int(row), int(col), method))
        return report


def block_rng(seed, block, row):
    """Counter-based generator keyed by (seed, block, row)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block), int(row)])))


def find_lonely_rows(a, p, d):
    """Rows with no entry inside block ``d``, ascending."""
    p.check_index(d)
    start, end = p.ranges[d]
    if isinstance(a, EditableMatrix):
        return [r for r in range(a.shape[0]) if not a.has_entry_in(r, start, end)]
    inside = (a.cols >= start) & (a.cols < end)
    occupied = np.zeros(a.shape[0], dtype=bool)
    occupied[a.rows[inside]] = True
    return np.flatnonzero(~occupied).tolist()


def random_checker(work, p, d, row, rng):
    start, end = p.ranges[d]
    col = int(rng.integers(start, end))
    work.add(row, col)
    return col


def neighbor_candidates(work, p, d, row):
    """Rows sharing a column with ``row`` somewhere outside block ``d``."""
    start, end = p.ranges[d]
    candidates = set()
    for n1 in work.row_cols[row]:
        if start <= n1 < end:
            continue
        candidates.update(work.col_rows.get(n1, ()))
    candidates.discard(row)
    return candidates


def neighbor_checker(work, p, d, row, rng):
    """Copy one in-block column of a neighbouring row into ``row``.

    Returns the chosen global column, or None when no neighbour has an entry
    inside block ``d`` (the matrix is left untouched in that case).
    """
    start, end = p.ranges[d]
    neighbours = set()
    for m1 in neighbor_candidates(work, p, d, row):
        neighbours.update(work.cols_in(m1, start, end))
    if not neighbours:
        return None
    choices = sorted(neighbours)
    col = choices[int(rng.integers(len(choices)))]
    work.add(row, col)
    return col


def neighbor_random_checker(work, p, d, row, rng):
    """Neighbour step followed unconditionally by a random step."""
    added = []
    col = neighbor_checker(work, p, d, row, rng)
    if col is not None:
        added.append(col)
    col = random_checker(work, p, d, row, rng)
    if col not in added:
        added.append(col)
    return added


def repair(a, p, method, seed):
    """Return a repaired copy of ``a`` and the log of inserted entries.

    Blocks are visited in ascending order and rows in ascending order within
    each block. When the neighbour checker finds no candidate column the row
    is filled by the random checker instead, so no block is left with an
    empty row whatever the method.
    """
    method = RepairMethod.parse(method)
    report = RepairReport()
    if method is RepairMethod.NONE:
        report.lonely_counts = [len(find_lonely_rows(a, p, d)) for d in range(p.block_count)]
        return a, report

    work = EditableMatrix(a)
    for d in range(p.block_count):
        lonely = find_lonely_rows(work, p, d)
        report.lonely_counts.append(len(lonely))
        for row in lonely:
            rng = block_rng(seed, d, row)
            if method is RepairMethod.RANDOM_CHECKER:
                edges = [(random_checker(work, p, d, row, rng), "random")]
            elif method is RepairMethod.NEIGHBOR_CHECKER:
                col = neighbor_checker(work, p, d, row, rng)
                if col is None:
                    report.fallback_count += 1
                    edges = [(random_checker(work, p, d, row, rng), "random")]
                else:
                    edges = [(col, "neighbor")]
            else:
                col = neighbor_checker(work, p, d, row, rng)
                edges = [] if col is None else [(col, "neighbor")]
                rcol = random_checker(work, p, d, row, rng)
                if rcol != col:
                    edges.append((rcol, "random"))
            report.added_edges.extend(AddedEdge(d, row, c, tag) for c, tag in edges)
    return work.to_sparse(), report


def rank_equal_probability(nc, no):
    """Approximate chance that a randomly filled lonely row keeps the block at full rank.

    ``nc`` is the number of block columns and ``no`` the number of rows that
    hold exactly one entry; the estimate is ``1 - no / nc`` clamped to [0, 1].
    """
    if nc < 1:
        raise ParameterError(f"column count must be positive, got {nc}")
    if no < 0:
        raise ParameterError(f"single-entry row count must be nonnegative, got {no}")
    return min(1.0, max(0.0, 1.0 - no / nc))

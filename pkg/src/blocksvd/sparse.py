"""Coordinate-form sparse matrices, column partitioning and Matrix Market I/O."""

from __future__ import annotations

import bisect
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidPartitionError,
    MatrixMarketError,
    ParameterError,
    ShapeError,
    SizeLimitError,
)

DENSE_CAP = 2**26
MM_HEADER = "%%MatrixMarket matrix coordinate real general"


def _frozen(arr, dtype):
    arr = np.array(arr, dtype=dtype, copy=True).reshape(-1)
    arr.flags.writeable = False
    return arr


class SparseMatrix:
    """Immutable M x N matrix stored as sorted (row, col, value) triples.

    Entries are kept in row-major order, so two matrices with the same entry
    set always have identical internal arrays.
    """

    __slots__ = ("shape", "rows", "cols", "values")

    def __init__(self, shape, rows=(), cols=(), values=()):
        m, n = (int(shape[0]), int(shape[1]))
        if m < 0 or n < 0:
            raise ShapeError(f"negative dimensions {shape}")
        rows = _frozen(rows, np.int64)
        cols = _frozen(cols, np.int64)
        values = _frozen(values, np.float64)
        if not (len(rows) == len(cols) == len(values)):
            raise ShapeError("rows, cols and values must have equal length")
        if len(rows):
            if rows.min() < 0 or rows.max() >= m:
                raise ShapeError("row index out of range")
            if cols.min() < 0 or cols.max() >= n:
                raise ShapeError("column index out of range")
            if np.any(values == 0.0):
                raise ShapeError("stored values must be nonzero")
            if not np.all(np.isfinite(values)):
                raise ShapeError("stored values must be finite")
            order = np.lexsort((cols, rows))
            rows, cols, values = rows[order], cols[order], values[order]
            same = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
            if np.any(same):
                i = int(np.argmax(same))
                raise ShapeError(f"duplicate entry ({rows[i]}, {cols[i]})")
            rows.flags.writeable = False
            cols.flags.writeable = False
            values.flags.writeable = False
        object.__setattr__(self, "shape", (m, n))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("SparseMatrix is immutable")

    @classmethod
    def from_entries(cls, shape, entries):
        """Build from an iterable of ``(row, col, value)`` or a ``{(row, col): value}`` dict."""
        if isinstance(entries, dict):
            entries = [(r, c, v) for (r, c), v in entries.items()]
        entries = list(entries)
        if not entries:
            return cls(shape)
        r, c, v = zip(*entries)
        return cls(shape, r, c, v)

    @classmethod
    def from_dense(cls, dense):
        dense = np.asarray(dense, dtype=np.float64)
        if dense.ndim != 2:
            raise ShapeError("expected a 2-D array")
        r, c = np.nonzero(dense)
        return cls(dense.shape, r, c, dense[r, c])

    @property
    def nnz(self):
        return len(self.values)

    def entries(self):
        return {
            (int(r), int(c)): float(v)
            for r, c, v in zip(self.rows, self.cols, self.values)
        }

    def transpose(self):
        return SparseMatrix((self.shape[1], self.shape[0]), self.cols, self.rows, self.values)

    def matmul_dense(self, x):
        """Return ``A @ x`` for a dense ``x`` of shape (N, k)."""
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros((self.shape[0],) + x.shape[1:])
        np.add.at(out, self.rows, self.values.reshape((-1,) + (1,) * (x.ndim - 1)) * x[self.cols])
        return out

    def rmatmul_dense(self, y):
        """Return ``A.T @ y`` for a dense ``y`` of shape (M, k)."""
        return self.transpose().matmul_dense(y)

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"


@dataclass(frozen=True)
class BlockPartition:
    total_cols: int
    block_count: int
    ranges: tuple

    def __post_init__(self):
        if len(self.ranges) != self.block_count:
            raise InvalidPartitionError("range count does not match block count")
        expected = 0
        for start, end in self.ranges:
            if start != expected or end <= start:
                raise InvalidPartitionError(f"bad range [{start}, {end})")
            expected = end
        if expected != self.total_cols:
            raise InvalidPartitionError("ranges do not cover all columns")

    def width(self, d):
        start, end = self.ranges[d]
        return end - start

    def block_of(self, col):
        starts = [s for s, _ in self.ranges]
        return bisect.bisect_right(starts, col) - 1

    def check_index(self, d):
        if not 0 <= d < self.block_count:
            raise IndexError(f"block index {d} out of range for {self.block_count} blocks")


def partition_columns(n, d):
    """Split ``n`` columns into ``d`` contiguous blocks.

    The first ``d - 1`` blocks have width ``n // d``; the last one also takes
    the remainder.
    """
    n, d = int(n), int(d)
    if d < 1 or d > n:
        raise InvalidPartitionError(f"cannot split {n} columns into {d} blocks")
    w = n // d
    ranges = tuple((i * w, (i + 1) * w) for i in range(d - 1)) + (((d - 1) * w, n),)
    return BlockPartition(n, d, ranges)


def block_view(a, p, d):
    p.check_index(d)
    if p.total_cols != a.shape[1]:
        raise ShapeError(f"partition covers {p.total_cols} columns, matrix has {a.shape[1]}")
    start, end = p.ranges[d]
    mask = (a.cols >= start) & (a.cols < end)
    return SparseMatrix((a.shape[0], end - start), a.rows[mask], a.cols[mask] - start, a.values[mask])


def dense_of(a, cap=DENSE_CAP):
    m, n = a.shape
    if m * n > cap:
        raise SizeLimitError(f"{m}x{n} matrix exceeds the dense cap of {cap} values")
    out = np.zeros((m, n))
    out[a.rows, a.cols] = a.values
    return out


def synth_bipartite(m, n, density, seed):
    """Random unweighted bipartite adjacency matrix.

    Every cell is an edge independently with probability ``density``; the
    result depends only on the arguments.
    """
    if not 0.0 < density <= 1.0:
        raise ParameterError(f"density must lie in (0, 1], got {density}")
    if m < 1 or n < 1:
        raise ParameterError("matrix dimensions must be positive")
    rng = np.random.default_rng(seed)
    total = m * n
    nnz = int(rng.binomial(total, density))
    idx = np.sort(rng.choice(total, size=nnz, replace=False))
    return SparseMatrix((m, n), idx // n, idx % n, np.ones(nnz))


def format_matrix_market(a):
    lines = [MM_HEADER, f"{a.shape[0]} {a.shape[1]} {a.nnz}"]
    lines.extend(
        f"{r + 1} {c + 1} {float(v)!r}" for r, c, v in zip(a.rows.tolist(), a.cols.tolist(), a.values.tolist())
    )
    return "\n".join(lines) + "\n"


def save_matrix_market(a, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_matrix_market(a))


def parse_matrix_market(text):
    lines = text.splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket":
        raise MatrixMarketError("missing %%MatrixMarket header", 1)
    obj, fmt, field, symmetry = (h.lower() for h in header[1:])
    if (obj, fmt, symmetry) != ("matrix", "coordinate", "general") or field not in ("real", "integer"):
        raise MatrixMarketError(f"unsupported header {' '.join(header[1:])!r}", 1)

    pos = 1
    while pos < len(lines) and (lines[pos].startswith("%") or not lines[pos].strip()):
        pos += 1
    if pos == len(lines):
        raise MatrixMarketError("missing size line", pos + 1)
    try:
        m, n, nnz = (int(t) for t in lines[pos].split())
    except ValueError:
        raise MatrixMarketError(f"malformed size line {lines[pos]!r}", pos + 1) from None
    if m < 0 or n < 0 or nnz < 0:
        raise MatrixMarketError("negative size", pos + 1)

    entries = {}
    for lineno in range(pos + 2, len(lines) + 1):
        raw = lines[lineno - 1]
        if not raw.strip() or raw.startswith("%"):
            continue
        parts = raw.split()
        if len(parts) != 3:
            raise MatrixMarketError(f"expected 'row col value', got {raw!r}", lineno)
        try:
            r, c, v = int(parts[0]) - 1, int(parts[1]) - 1, float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"malformed entry {raw!r}", lineno) from None
        if not (0 <= r < m and 0 <= c < n):
            raise MatrixMarketError(f"index ({r + 1}, {c + 1}) outside {m}x{n}", lineno)
        if not np.isfinite(v):
            raise MatrixMarketError("non-finite value", lineno)
        if (r, c) in entries:
            raise MatrixMarketError(f"duplicate coordinate ({r + 1}, {c + 1})", lineno)
        if len(entries) >= nnz:
            raise MatrixMarketError(f"more than the declared {nnz} entries", lineno)
        entries[(r, c)] = v
    if len(entries) != nnz:
        raise MatrixMarketError(f"declared {nnz} entries, found {len(entries)}", len(lines))
    # explicit zeros are legal in the format but are not stored
    return SparseMatrix.from_entries((m, n), {k: v for k, v in entries.items() if v != 0.0})


def load_matrix_market(path):
    with open(os.fspath(path), encoding="ascii") as fh:
        return parse_matrix_market(fh.read())

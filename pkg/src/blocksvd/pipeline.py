"""Coordinator/worker execution of the block SVD and the block record format."""

from __future__ import annotations

import os
import struct
import zlib
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import dataclass

import numpy as np

from .errors import BlockTaskError, CorruptRecordError, ParameterError, ShapeError
from .repair import RepairMethod, RepairReport, repair
from .sparse import BlockPartition, SparseMatrix, block_view, partition_columns
from .svd import ProxyMatrix, SvdResult, block_svd, proxy_svd

MAGIC = b"RNKY"
VERSION = 1
_HEADER = struct.Struct("<4sHIII")
_CRC = struct.Struct("<I")


@dataclass(frozen=True)
class BlockTask:
    index: int
    block: SparseMatrix
    keep: int | None = None


@dataclass(frozen=True, eq=False)
class BlockResultRecord:
    """Scaled left factor ``U_i diag(sigma_i)`` of one block (M x k, float64)."""

    index: int
    payload: np.ndarray

    @property
    def m(self):
        return self.payload.shape[0]

    @property
    def k(self):
        return self.payload.shape[1]

    def payload_bytes(self):
        return np.ascontiguousarray(self.payload, dtype="<f8").tobytes()

    @property
    def checksum(self):
        return zlib.crc32(self.payload_bytes()) & 0xFFFFFFFF

    def to_bytes(self):
        body = self.payload_bytes()
        head = _HEADER.pack(MAGIC, VERSION, self.index, self.m, self.k)
        return head + body + _CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)

    @classmethod
    def from_bytes(cls, data):
        if len(data) < _HEADER.size + _CRC.size:
            raise CorruptRecordError("record truncated before end of header")
        magic, version, index, m, k = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise CorruptRecordError(f"bad magic {magic!r}")
        if version != VERSION:
            raise CorruptRecordError(f"unsupported record version {version}")
        size = 8 * m * k
        if len(data) != _HEADER.size + size + _CRC.size:
            raise CorruptRecordError(
                f"expected {size} payload bytes, file holds {len(data) - _HEADER.size - _CRC.size}"
            )
        body = data[_HEADER.size : _HEADER.size + size]
        (crc,) = _CRC.unpack_from(data, _HEADER.size + size)
        if zlib.crc32(body) & 0xFFFFFFFF != crc:
            raise CorruptRecordError("payload checksum mismatch")
        payload = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(m, k)
        return cls(index, payload)

    def __eq__(self, other):
        if not isinstance(other, BlockResultRecord):
            return NotImplemented
        return self.index == other.index and self.to_bytes() == other.to_bytes()

    __hash__ = None


def write_block_record(record, path):
    with open(os.fspath(path), "wb") as fh:
        fh.write(record.to_bytes())


def read_block_record(path):
    with open(os.fspath(path), "rb") as fh:
        return BlockResultRecord.from_bytes(fh.read())


def solve_block(task):
    res = block_svd(task.block, task.keep)
    return BlockResultRecord(task.index, res.scaled_left())


def assemble_proxy(records, m):
    """Order records by block index and concatenate their payloads.

    Arrival order is irrelevant; every index 0..D-1 must appear exactly once.
    """
    ordered = sorted(records, key=lambda r: r.index)
    if [r.index for r in ordered] != list(range(len(ordered))):
        raise ShapeError(f"block indices {[r.index for r in ordered]} are not 0..{len(ordered) - 1}")
    offsets, pos = [], 0
    for r in ordered:
        if r.m != m:
            raise ShapeError(f"block {r.index} has {r.m} rows, expected {m}")
        offsets.append(pos)
        pos += r.k
    offsets.append(pos)
    values = np.hstack([r.payload for r in ordered]) if ordered else np.zeros((m, 0))
    return ProxyMatrix(values, tuple(offsets))


def run_tasks(tasks, workers=1):
    """Run block tasks on a thread pool; the first failure aborts the run."""
    if workers < 1:
        raise ParameterError("workers must be at least 1")
    if workers == 1:
        out = []
        for task in tasks:
            try:
                out.append(solve_block(task))
            except Exception as exc:
                raise BlockTaskError(task.index, exc) from exc
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(solve_block, t): t.index for t in tasks}
        done, pending = wait(futures, return_when=FIRST_EXCEPTION)
        for fut in pending:
            fut.cancel()
        failed = sorted((futures[f], f.exception()) for f in done if f.exception() is not None)
        if failed:
            index, exc = failed[0]
            raise BlockTaskError(index, exc) from exc
        return [f.result() for f in done]


@dataclass(frozen=True, eq=False)
class PipelineResult:
    svd: SvdResult
    report: RepairReport
    repaired: SparseMatrix
    partition: BlockPartition
    proxy: ProxyMatrix
    records: tuple


def run_pipeline(a, blocks, method=RepairMethod.NONE, keep=None, seed=0, workers=1):
    """Partition, repair, factor every block, and decompose the proxy matrix.

    The result is identical for any ``workers`` value: repair uses keyed
    generators and the proxy is assembled in block-index order.
    """
    m = a.shape[0]
    partition = partition_columns(a.shape[1], blocks)
    repaired, report = repair(a, partition, method, seed)
    tasks = [BlockTask(d, block_view(repaired, partition, d), keep) for d in range(partition.block_count)]
    records = run_tasks(tasks, workers)
    proxy = assemble_proxy(records, m)
    return PipelineResult(
        proxy_svd(proxy), report, repaired, partition, proxy, tuple(sorted(records, key=lambda r: r.index))
    )

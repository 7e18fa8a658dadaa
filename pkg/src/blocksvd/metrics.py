"""Recovery error metrics and the dense-oracle evaluation harness."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, SizeLimitError
from .pipeline import run_pipeline
from .repair import RepairMethod
from .sparse import DENSE_CAP, dense_of
from .svd import dense_svd, numerical_rank  # noqa: F401  (re-exported)

CLUSTER_TOL = 1e-9
CSV_FIELDS = ("D", "M", "Ni", "method", "seed", "e_sigma", "e_u")


def e_sigma(sigma_hat, sigma_ref):
    """Sum of absolute singular value differences; the shorter list is zero-padded."""
    a = np.asarray(sigma_hat, dtype=np.float64)
    b = np.asarray(sigma_ref, dtype=np.float64)
    n = max(len(a), len(b))
    a = np.pad(a, (0, n - len(a)))
    b = np.pad(b, (0, n - len(b)))
    return float(np.abs(a - b).sum())


def degenerate_clusters(sigma, tol=CLUSTER_TOL):
    """Index groups of consecutive singular values closer than ``tol * sigma_max``."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if len(sigma) == 0:
        return []
    scale = max(float(np.max(sigma)), np.finfo(np.float64).tiny)
    groups, current = [], [0]
    for i in range(1, len(sigma)):
        if abs(sigma[i] - sigma[i - 1]) <= tol * scale:
            current.append(i)
        else:
            groups.append(current)
            current = [i]
    groups.append(current)
    return groups


def align_signs(u_hat, u_ref, sigma_ref=None):
    """Align the columns of ``u_hat`` to ``u_ref``.

    Single columns are sign-flipped to a nonnegative inner product. Columns
    belonging to a degenerate cluster of ``sigma_ref`` are only defined up to
    a rotation, so the whole cluster is mapped by the orthogonal Procrustes
    solution instead.
    """
    u_hat = np.asarray(u_hat, dtype=np.float64)
    u_ref = np.asarray(u_ref, dtype=np.float64)
    if u_hat.shape != u_ref.shape:
        raise ShapeError(f"shape mismatch {u_hat.shape} vs {u_ref.shape}")
    out = u_hat.copy()
    groups = [[j] for j in range(u_hat.shape[1])] if sigma_ref is None else degenerate_clusters(sigma_ref)
    for g in groups:
        if len(g) == 1:
            j = g[0]
            if out[:, j] @ u_ref[:, j] < 0:
                out[:, j] = -out[:, j]
            continue
        cross = dense_svd(u_hat[:, g].T @ u_ref[:, g])
        out[:, g] = u_hat[:, g] @ (cross.U @ cross.V.T)
    return out


def e_u(u_hat, u_ref, sigma_ref=None):
    """Entrywise absolute error between aligned left singular vector matrices."""
    aligned = align_signs(u_hat, u_ref, sigma_ref)
    return float(np.abs(aligned - np.asarray(u_ref, dtype=np.float64)).sum())


@dataclass(frozen=True)
class EvalRow:
    blocks: int
    m: int
    ni: int
    method: RepairMethod
    seed: int
    e_sigma: float
    e_u: float

    def csv_fields(self):
        return (
            str(self.blocks),
            str(self.m),
            str(self.ni),
            self.method.value,
            str(self.seed),
            np.format_float_scientific(self.e_sigma, unique=True),
            np.format_float_scientific(self.e_u, unique=True),
        )


def format_eval_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()


def parse_eval_csv(text):
    reader = csv.DictReader(io.StringIO(text))
    return [
        EvalRow(
            int(r["D"]),
            int(r["M"]),
            int(r["Ni"]),
            RepairMethod.parse(r["method"]),
            int(r["seed"]),
            float(r["e_sigma"]),
            float(r["e_u"]),
        )
        for r in reader
    ]


def evaluate(a, blocks, method, seed, keep=None, workers=1):
    """Run the pipeline and compare it with the dense SVD of the repaired matrix.

    All retained left vectors are compared (up to the smaller of the two
    column counts). Returns ``(row, pipeline_result, oracle)``.
    """
    method = RepairMethod.parse(method)
    if a.shape[0] * a.shape[1] > DENSE_CAP:
        raise SizeLimitError(
            f"{a.shape[0]}x{a.shape[1]} input is too large for the dense oracle (cap {DENSE_CAP} values)"
        )
    result = run_pipeline(a, blocks, method, keep=keep, seed=seed, workers=workers)
    oracle = dense_svd(dense_of(result.repaired))
    k = min(result.svd.k, oracle.k)
    row = EvalRow(
        blocks=blocks,
        m=a.shape[0],
        ni=result.partition.width(0),
        method=method,
        seed=seed,
        e_sigma=e_sigma(result.svd.sigma, oracle.sigma),
        e_u=e_u(result.svd.U[:, :k], oracle.U[:, :k], oracle.sigma[:k]),
    )
    return row, result, oracle


def evaluate_sweep(a, block_counts, method, seed, keep=None, workers=1):
    return [evaluate(a, d, method, seed, keep, workers)[0] for d in block_counts]

"""Dense one-sided Jacobi SVD, per-block factorization and proxy assembly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, NumericError, ShapeError
from .sparse import dense_of

EPS = np.finfo(np.float64).eps
RANK_TOL = 1e-10
MAX_SWEEPS = 60


@dataclass(frozen=True, eq=False)
class SvdResult:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray | None = None

    @property
    def k(self):
        return len(self.sigma)

    def truncate(self, k):
        return SvdResult(
            self.U[:, :k].copy(),
            self.sigma[:k].copy(),
            None if self.V is None else self.V[:, :k].copy(),
        )

    def scaled_left(self):
        """``U @ diag(sigma)``."""
        return self.U * self.sigma


@dataclass(frozen=True, eq=False)
class ProxyMatrix:
    values: np.ndarray
    block_offsets: tuple

    @property
    def shape(self):
        return self.values.shape


def householder_qr(x, panel=16):
    """Thin QR of a tall matrix ``x`` (r x k, r >= k) by blocked Householder reflections.

    Reflectors are accumulated per panel in compact WY form
    ``H = I - V T V.T`` so the trailing update is a few matrix products.
    """
    r_rows, k = x.shape
    work = np.array(x, dtype=np.float64, copy=True)
    panels = []
    for j0 in range(0, k, panel):
        j1 = min(j0 + panel, k)
        vs = np.zeros((r_rows - j0, j1 - j0))
        for j in range(j0, j1):
            col = work[j:, j]
            alpha = np.linalg.norm(col)
            if alpha == 0.0:
                continue
            v = col.copy()
            v[0] += alpha if v[0] >= 0 else -alpha
            v /= np.linalg.norm(v)
            work[j:, j:j1] -= 2.0 * np.outer(v, v @ work[j:, j:j1])
            vs[j - j0 :, j - j0] = v
        t = np.zeros((j1 - j0, j1 - j0))
        for i in range(j1 - j0):
            if vs[:, i].any():
                t[i, i] = 2.0
                t[:i, i] = -2.0 * t[:i, :i] @ (vs[:, :i].T @ vs[:, i])
        if j1 < k:
            trailing = work[j0:, j1:]
            trailing -= vs @ (t.T @ (vs.T @ trailing))
        panels.append((j0, vs, t))
    q = np.zeros((r_rows, k))
    q[np.arange(k), np.arange(k)] = 1.0
    for j0, vs, t in reversed(panels):
        rows = q[j0:, :]
        rows -= vs @ (t @ (vs.T @ rows))
    return q, np.triu(work[:k, :k])


def _round_robin(k):
    """Pairings covering every column pair once, as ``k - 1`` rounds of disjoint pairs."""
    players = list(range(k)) + ([-1] if k % 2 else [])
    n = len(players)
    rounds = []
    for _ in range(n - 1):
        pairs = [(players[i], players[n - 1 - i]) for i in range(n // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a >= 0 and b >= 0]
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_orthogonalize(y, tol=None, max_sweeps=MAX_SWEEPS):
    """Rotate the columns of ``y`` until they are mutually orthogonal.

    Returns ``(y @ rot, rot, sweeps)``. A pair is rotated while
    ``|<y_p, y_q>| > tol * |y_p| |y_q|`` and both columns are above roundoff.
    """
    y = np.array(y, dtype=np.float64, copy=True)
    rows, k = y.shape
    rot = np.eye(k)
    if tol is None:
        tol = max(1e-14, 4.0 * np.sqrt(rows) * EPS)
    schedule = _round_robin(k)
    # columns below roundoff of the largest one are left alone; they end up
    # in the numerical null space whatever further rotations would do
    floor = (EPS * np.linalg.norm(y, axis=0).max(initial=0.0)) ** 2
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for p, q in schedule:
            yp, yq = y[:, p], y[:, q]
            alpha = np.einsum("ij,ij->j", yp, yp)
            beta = np.einsum("ij,ij->j", yq, yq)
            gamma = np.einsum("ij,ij->j", yp, yq)
            active = (alpha > floor) & (beta > floor) & (np.abs(gamma) > tol * np.sqrt(alpha) * np.sqrt(beta))
            if not active.any():
                continue
            rotated = True
            p, q, alpha, beta, gamma = p[active], q[active], alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            for mat in (y, rot):
                mp, mq = mat[:, p], mat[:, q]
                mat[:, p] = c * mp - s * mq
                mat[:, q] = s * mp + c * mq
        if not rotated:
            return y, rot, sweep
    norms = np.linalg.norm(y, axis=0)
    gram = y.T @ y
    scale = np.outer(norms, norms)
    scale[scale == 0] = 1.0
    off = np.abs(gram / scale - np.diag(np.diag(gram / scale)))
    raise ConvergenceError(f"Jacobi sweeps did not converge in {max_sweeps} sweeps", float(off.max()))


def complete_basis(q, missing):
    """Replace columns ``missing`` of ``q`` with unit vectors orthogonal to the rest.

    Each new column is the canonical basis vector with the largest component
    outside the current basis (lowest index on ties), Gram-Schmidt
    orthogonalized twice against the basis.
    """
    q = q.copy()
    missing = list(missing)
    basis = q[:, [j for j in range(q.shape[1]) if j not in set(missing)]]
    # squared norm of e_i's component orthogonal to the basis
    outside = 1.0 - np.einsum("ij,ij->i", basis, basis)
    for j in missing:
        e = int(np.argmax(outside))
        if outside[e] <= 0.0:
            raise NumericError("cannot complete orthonormal basis")
        cand = np.zeros(q.shape[0])
        cand[e] = 1.0
        for _ in range(2):
            cand -= basis @ (basis.T @ cand)
        cand /= np.linalg.norm(cand)
        q[:, j] = cand
        basis = np.column_stack([basis, cand])
        outside -= cand * cand
    return q


def dense_svd(a, max_sweeps=MAX_SWEEPS):
    """Reduced SVD ``a = U diag(sigma) V.T`` with ``k = min(M, N)`` components.

    The matrix is first reduced to a k x k triangle by Householder QR of its
    tall orientation; one-sided Jacobi then orthogonalizes the triangle.
    Singular values come back descending (stable order for ties), and each
    column of U has its largest-magnitude entry nonnegative.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got {a.ndim} dimensions")
    if not np.all(np.isfinite(a)):
        raise NumericError("matrix contains non-finite values")
    m, n = a.shape
    k = min(m, n)
    if k == 0:
        return SvdResult(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)))

    transposed = m < n
    x = a.T if transposed else a
    q_house, r = householder_qr(x)
    y, rot, _ = jacobi_orthogonalize(r, max_sweeps=max_sweeps)

    sigma = np.linalg.norm(y, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, y, rot = sigma[order], y[:, order], rot[:, order]

    # directions of columns at roundoff level of zero are meaningless; rebuild them
    null = np.flatnonzero(sigma <= sigma[0] * max(m, n) * EPS) if sigma[0] > 0 else np.arange(k)
    safe = sigma.copy()
    safe[null] = 1.0
    tall_side = q_house @ (y / safe)
    if len(null):
        tall_side = complete_basis(tall_side, list(null))

    if transposed:
        u, v = rot, tall_side
    else:
        u, v = tall_side, rot

    pivot = np.argmax(np.abs(u), axis=0)
    flip = u[pivot, np.arange(k)] < 0
    u[:, flip] *= -1.0
    v[:, flip] *= -1.0
    return SvdResult(np.ascontiguousarray(u), sigma, np.ascontiguousarray(v))


def numerical_rank(a, tol=RANK_TOL):
    sigma = dense_svd(a).sigma
    if len(sigma) == 0 or sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > tol * sigma[0]))


def block_svd(block, keep=None):
    """Left factors of a sparse block, truncated to ``min(keep, M, N_i)`` components."""
    if keep is not None and keep < 1:
        raise ValueError("keep must be at least 1")
    res = dense_svd(dense_of(block))
    k = res.k if keep is None else min(keep, res.k)
    return SvdResult(res.U[:, :k].copy(), res.sigma[:k].copy(), None)


def build_proxy(results, m):
    """Concatenate ``U_i diag(sigma_i)`` for each block, in the given order."""
    parts, offsets, pos = [], [], 0
    for i, res in enumerate(results):
        if res.U.shape[0] != m:
            raise ShapeError(f"block {i} has {res.U.shape[0]} rows, expected {m}")
        offsets.append(pos)
        pos += res.k
        parts.append(res.scaled_left())
    offsets.append(pos)
    values = np.hstack(parts) if parts else np.zeros((m, 0))
    return ProxyMatrix(values, tuple(offsets))


def proxy_svd(proxy):
    res = dense_svd(proxy.values)
    return SvdResult(res.U, res.sigma, None)


def recover_right_vectors(a, u, sigma, tol=RANK_TOL):
    """Right singular vectors ``A.T u_j / sigma_j`` for the significant components."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if len(sigma) == 0 or sigma.max() <= 0.0:
        return np.zeros((a.shape[1], 0))
    keep = np.flatnonzero(sigma > tol * sigma.max())
    return a.rmatmul_dense(np.asarray(u)[:, keep]) / sigma[keep]

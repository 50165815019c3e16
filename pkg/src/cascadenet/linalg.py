"""Dense matrix helpers and a cyclic Jacobi eigen solver for symmetric matrices.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ShapeError

MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class EigenResult:
    """Eigen-decomposition of a symmetric matrix.

    Attributes
    ----------
    values : ndarray, shape (n,)
        Eigenvalues sorted in descending order.
    vectors : ndarray, shape (n, n)
        Unit-norm eigenvectors stored as columns, in the order of ``values``.
    sweeps : int
        Number of full Jacobi sweeps performed.
    """

    values: np.ndarray
    vectors: np.ndarray
    sweeps: int = 0


def as_matrix(a, name="matrix") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ShapeError(f"{name} contains non-finite entries")
    return a


def matmul(a, b) -> np.ndarray:
    """Matrix product ``a @ b`` with an explicit shape check."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so that its largest-magnitude entry is positive."""
    vectors = np.array(vectors, dtype=np.float64, copy=True)
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # Tournament schedule: n-1 rounds (n even) of n/2 disjoint index pairs,
    # together covering every pair exactly once per sweep.
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p, q = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=np.intp), np.array(q, dtype=np.intp)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def symmetric_eigen(a, off_diag_tol: float = 1e-13) -> EigenResult:
    """Eigenvalues and eigenvectors of a real symmetric matrix.

    Cyclic Jacobi rotations are applied until every off-diagonal entry is
    below ``off_diag_tol * ||a||_F``. Each sweep visits all index pairs in a
    round-robin order, so the rotations of one round touch disjoint rows and
    columns and are applied together.

    Raises
    ------
    ShapeError
        If ``a`` is not square or not symmetric within 1e-10.
    ConvergenceError
        If the tolerance is not met within 100 sweeps.
    """
    a = as_matrix(a, "a")
    n, m = a.shape
    if n != m:
        raise ShapeError(f"symmetric_eigen needs a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if a.size and np.max(np.abs(a - a.T)) > SYMMETRY_TOL * scale:
        raise ShapeError("symmetric_eigen needs a symmetric matrix")

    work = 0.5 * (a + a.T)
    vectors_t = np.eye(n)
    fro = float(np.linalg.norm(work))
    threshold = off_diag_tol * fro
    rounds = _round_robin(n) if n > 1 else []

    def max_off_diag():
        if n < 2:
            return 0.0
        off = work - np.diag(np.diag(work))
        return float(np.max(np.abs(off)))

    sweeps = 0
    while max_off_diag() >= threshold and fro > 0.0:
        if sweeps == MAX_SWEEPS:
            raise ConvergenceError(
                f"Jacobi did not converge in {MAX_SWEEPS} sweeps "
                f"(max off-diagonal {max_off_diag():.3e})"
            )
        for p, q in rounds:
            apq = work[p, q]
            # Pairs already under the threshold are skipped; later sweeps
            # revisit them if other rotations push them back up.
            active = np.abs(apq) >= threshold
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (work[q, q] - work[p, p]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            # A' = J^T A J as two row rotations: rows of A, then rows of
            # (J^T A)^T, which equals A J because A is symmetric. Row slices
            # are contiguous, column slices are not.
            for _ in range(2):
                row_p, row_q = work[p, :], work[q, :]
                work[p, :] = c[:, None] * row_p - s[:, None] * row_q
                work[q, :] = s[:, None] * row_p + c[:, None] * row_q
                work = np.ascontiguousarray(work.T)
            work[p, q] = 0.0
            work[q, p] = 0.0

            vec_p, vec_q = vectors_t[p, :], vectors_t[q, :]
            vectors_t[p, :] = c[:, None] * vec_p - s[:, None] * vec_q
            vectors_t[q, :] = s[:, None] * vec_p + c[:, None] * vec_q
        sweeps += 1

    values = np.diag(work).copy()
    order = np.argsort(-values, kind="stable")
    return EigenResult(values[order], fix_signs(vectors_t.T[:, order]), sweeps)

"""Rank and span primitives.

Floating-point rank decisions are cross-checked in the test-suite against
:func:`exact_rank` (fraction arithmetic) and :func:`modular_rank`.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

SPAN_RTOL = 1e-8


def default_rank_tol(shape: tuple[int, int]) -> float:
    return max(shape) * np.finfo(float).eps


def numerical_rank(M, tol: float | None = None) -> int:
    """Number of singular values above ``tol * sigma_max``.

    ``tol`` is relative; the default is ``max(rows, cols) * eps``.
    """
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        raise ValueError("rank of an empty matrix")
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    if tol is None:
        tol = default_rank_tol(M.shape)
    return int(np.count_nonzero(s > tol * s[0]))


def orth(M) -> np.ndarray:
    """Orthonormal basis of the column span of a full-column-rank matrix."""
    Q, _ = np.linalg.qr(np.asarray(M, dtype=float))
    return Q


def span_residual(v, M=None, *, basis=None) -> float:
    """Euclidean norm of the component of ``v`` orthogonal to span(M)."""
    Q = orth(M) if basis is None else basis
    v = np.asarray(v, dtype=float)
    return float(np.linalg.norm(v - Q @ (Q.T @ v)))


def in_span(v, M=None, *, basis=None, rtol: float = SPAN_RTOL) -> bool:
    v = np.asarray(v, dtype=float)
    return span_residual(v, M, basis=basis) <= rtol * max(1.0, float(np.linalg.norm(v)))


def nullspace(M, tol: float | None = None) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    rank = numerical_rank(M, tol)
    _, _, vt = np.linalg.svd(M)
    return vt[rank:].T


def to_fractions(M, limit_denominator: int | None = None) -> list[list[Fraction]]:
    """Convert a float matrix to exact fractions (binary-exact by default)."""
    rows = []
    for row in np.asarray(M, dtype=float):
        if limit_denominator is None:
            rows.append([Fraction(float(v)) for v in row])
        else:
            rows.append([Fraction(float(v)).limit_denominator(limit_denominator) for v in row])
    return rows


def exact_rank(M: Sequence[Sequence]) -> int:
    """Rank over the rationals by fraction-exact Gaussian elimination."""
    A = [[Fraction(v) for v in row] for row in M]
    if not A:
        return 0
    n_rows, n_cols = len(A), len(A[0])
    rank = 0
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if A[r][col] != 0), None)
        if pivot is None:
            continue
        A[rank], A[pivot] = A[pivot], A[rank]
        p = A[rank][col]
        for r in range(rank + 1, n_rows):
            f = A[r][col]
            if f != 0:
                f /= p
                row_r, row_p = A[r], A[rank]
                for c in range(col, n_cols):
                    row_r[c] -= f * row_p[c]
        rank += 1
        if rank == n_rows:
            break
    return rank


def exact_nullspace(M: Sequence[Sequence]) -> list[list[Fraction]]:
    """Basis of the right nullspace over the rationals (reduced row echelon)."""
    A = [[Fraction(v) for v in row] for row in M]
    n_rows, n_cols = len(A), len(A[0])
    pivots = []
    r = 0
    for col in range(n_cols):
        pivot = next((i for i in range(r, n_rows) if A[i][col] != 0), None)
        if pivot is None:
            continue
        A[r], A[pivot] = A[pivot], A[r]
        p = A[r][col]
        A[r] = [v / p for v in A[r]]
        for i in range(n_rows):
            if i != r and A[i][col] != 0:
                f = A[i][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(col)
        r += 1
        if r == n_rows:
            break
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for fcol in free:
        v = [Fraction(0)] * n_cols
        v[fcol] = Fraction(1)
        for i, pcol in enumerate(pivots):
            v[pcol] = -A[i][fcol]
        basis.append(v)
    return basis


def modular_rank(M_int: np.ndarray, p: int = 2_147_483_629) -> int:
    """Rank of an integer matrix over GF(p); never exceeds the rational rank."""
    A = np.array(M_int, dtype=object) % p
    A = np.array([[int(v) for v in row] for row in A], dtype=np.int64)
    n_rows, n_cols = A.shape
    rank = 0
    for col in range(n_cols):
        nz = np.flatnonzero(A[rank:, col]) + rank
        if nz.size == 0:
            continue
        piv = nz[0]
        A[[rank, piv]] = A[[piv, rank]]
        inv = pow(int(A[rank, col]), p - 2, p)
        A[rank] = (A[rank] * inv) % p
        rows = np.flatnonzero(A[:, col])
        rows = rows[rows != rank]
        if rows.size:
            A[rows] = (A[rows] - np.outer(A[rows, col], A[rank]) % p) % p
        rank += 1
        if rank == n_rows:
            break
    return rank


def projected_rank(Q: np.ndarray, X: np.ndarray, scale: float, tol: float | None = None) -> int:
    """Rank added to span(Q) by the columns of X.

    ``Q`` has orthonormal columns. ``scale`` is the magnitude that the
    relative tolerance refers to (typically sigma_max of the combined matrix).
    """
    if X.shape[1] == 0:
        return 0
    P = X - Q @ (Q.T @ X)
    R = scipy.linalg.qr(P, mode="r")[0]
    s = np.linalg.svd(R, compute_uv=False)
    if tol is None:
        tol = default_rank_tol((Q.shape[0], Q.shape[1] + X.shape[1]))
    return int(np.count_nonzero(s > tol * scale))

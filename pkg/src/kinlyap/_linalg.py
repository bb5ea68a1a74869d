"""Small dense linear algebra: cyclic Jacobi eigensolver, 2-norms, pivoted LU.

Everything here targets K x K matrices with K at most a few dozen, so simple
O(K^3) routines with tight tolerances beat any sparse or blocked machinery.
"""
from __future__ import annotations

import numpy as np

from .errors import SingularMatrix

#: stop sweeping when the off-diagonal Frobenius mass drops below this times ||A||_F
JACOBI_RTOL = 1e-14
_JACOBI_MAX_SWEEPS = 100


def jacobi_eigh(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition A = R diag(vals) R^T of a symmetric matrix.

    Cyclic Jacobi rotations; returns (vals, R) with R orthogonal to near
    machine precision.  Eigenvalues are left in the order the diagonal ends
    up in (callers sort as needed).
    """
    A = np.array(A, dtype=np.float64, copy=True)
    K = A.shape[0]
    if A.shape != (K, K):
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    R = np.eye(K)
    if K == 1:
        return np.array([A[0, 0]]), R
    norm_f = np.linalg.norm(A)
    tol = JACOBI_RTOL * max(norm_f, np.finfo(np.float64).tiny)
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.sqrt(max(np.sum(A**2) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol:
            break
        for p in range(K - 1):
            for q in range(p + 1, K):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # rotate rows/columns p,q of A
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                A[p, q] = 0.0
                A[q, p] = 0.0
                rp = R[:, p].copy()
                rq = R[:, q].copy()
                R[:, p] = c * rp - s * rq
                R[:, q] = s * rp + c * rq
    return np.diag(A).copy(), R


def two_norm(A: np.ndarray) -> float:
    """Largest singular value, via Jacobi on the smaller Gram matrix."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[None, :]
    if A.size == 0:
        return 0.0
    gram = A @ A.T if A.shape[0] <= A.shape[1] else A.T @ A
    vals, _ = jacobi_eigh(gram)
    return float(np.sqrt(max(float(np.max(vals)), 0.0)))


def plu_factor(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-pivoted LU factorization: returns (lu, piv) with L unit lower.

    lu stores L below the diagonal and U on/above it; piv[i] is the row swapped
    into position i at step i (LAPACK-style sequential transpositions).
    """
    lu = np.array(A, dtype=np.float64, copy=True)
    K = lu.shape[0]
    if lu.shape != (K, K):
        raise ValueError(f"expected a square matrix, got shape {lu.shape}")
    piv = np.arange(K, dtype=np.int64)
    scale = max(float(np.max(np.abs(lu))), np.finfo(np.float64).tiny)
    for j in range(K):
        p = j + int(np.argmax(np.abs(lu[j:, j])))
        if abs(lu[p, j]) <= 1e-14 * scale:
            raise SingularMatrix(f"pivot {j} is numerically zero")
        if p != j:
            lu[[j, p], :] = lu[[p, j], :]
        piv[j] = p
        for i in range(j + 1, K):
            lu[i, j] /= lu[j, j]
            for c in range(j + 1, K):
                lu[i, c] -= lu[i, j] * lu[j, c]
    return lu, piv


def plu_solve(lu: np.ndarray, piv: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b against factors from plu_factor (single right-hand side)."""
    K = lu.shape[0]
    x = np.array(b, dtype=np.float64, copy=True)
    for j in range(K):
        p = int(piv[j])
        if p != j:
            x[j], x[p] = x[p], x[j]
    for i in range(1, K):
        s = x[i]
        for j in range(i):
            s -= lu[i, j] * x[j]
        x[i] = s
    for i in range(K - 1, -1, -1):
        s = x[i]
        for j in range(i + 1, K):
            s -= lu[i, j] * x[j]
        x[i] = s / lu[i, i]
    return x


def plu_reconstruct(lu: np.ndarray, piv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (L @ U, P @ A-side permutation matrix) for factor verification."""
    K = lu.shape[0]
    L = np.tril(lu, -1) + np.eye(K)
    U = np.triu(lu)
    P = np.eye(K)
    for j in range(K):
        p = int(piv[j])
        if p != j:
            P[[j, p], :] = P[[p, j], :]
    return L @ U, P

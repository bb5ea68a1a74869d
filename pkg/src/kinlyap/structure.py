"""Structural-stability decomposition: P Q P^-1 = -diag(0, Lam) with positive Lam.

The construction is normative: whiten Lambda0 Q with Lambda0^(-1/2) on both
sides, eigendecompose the resulting symmetric negative semidefinite matrix W
with cyclic Jacobi rotations, order eigenvalues descending (zeros first), and
set P = R^T Lambda0^(1/2).  Both identities

    P Q P^-1       = -diag(0, Lam)
    Lambda0 Q      = -P^T diag(0, Lam) P

then hold by construction and are re-verified numerically.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._linalg import jacobi_eigh
from .errors import (
    DegenerateRank,
    DimensionMismatch,
    KinlyapError,
    NotSymmetric,
    PositiveEigenvalue,
)
from .model import CoplanarSteadyState, KineticModel

#: construction-time residual bound for both defining identities and P*P_inv - I
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class StructuralDecomposition:
    P: np.ndarray  # (K, K) invertible
    P_inv: np.ndarray  # (K, K)
    lambda0: np.ndarray  # (K,) positive diagonal of Lambda0
    lam: np.ndarray  # (r,) positive diagonal of Lam
    r: int  # rank of Q


class DecompositionResiduals(NamedTuple):
    residual_24: float  # || P Q P^-1 + diag(0, Lam) ||_max
    residual_25: float  # || Lambda0 Q + P^T diag(0, Lam) P ||_max
    residual_inv: float  # || P P_inv - I ||_max


def coplanar_lambda0(s: CoplanarSteadyState) -> np.ndarray:
    """The diagonal Lyapunov weight (1/f1e, 1/f2e, 1/f3e, 1/f4e) of the coplanar model."""
    s.validate()
    return np.array([1.0 / v for v in s.f_e])


def _block_diag_lam(K: int, lam: np.ndarray) -> np.ndarray:
    D = np.zeros((K, K))
    r = lam.shape[0]
    if r:
        D[K - r :, K - r :] = np.diag(lam)
    return D


def decompose(model: KineticModel, lambda0) -> StructuralDecomposition:
    """Construct the decomposition for a given positive diagonal Lambda0."""
    lambda0 = np.asarray(lambda0, dtype=np.float64)
    K = model.K
    if lambda0.shape != (K,):
        raise DimensionMismatch(f"lambda0 must have shape ({K},), got {lambda0.shape}")
    if not np.all(lambda0 > 0) or not np.all(np.isfinite(lambda0)):
        raise ValueError("lambda0 entries must be positive and finite")

    Q = model.Q
    S = lambda0[:, None] * Q
    s_scale = float(np.max(np.abs(S))) if S.size else 0.0
    asym = float(np.max(np.abs(S - S.T))) if S.size else 0.0
    if asym > 1e-10 * max(s_scale, np.finfo(np.float64).tiny) and s_scale > 0:
        raise NotSymmetric(
            f"Lambda0 Q is not symmetric: max asymmetry {asym:.3e} vs scale {s_scale:.3e}"
        )

    inv_sqrt = 1.0 / np.sqrt(lambda0)
    W = inv_sqrt[:, None] * S * inv_sqrt[None, :]
    W = 0.5 * (W + W.T)
    vals, R = jacobi_eigh(W)

    tol_rank = 1e-10 * max(1.0, float(np.max(np.abs(W))))
    if np.any(vals > tol_rank):
        raise PositiveEigenvalue(
            f"Lambda0 Q has a positive eigenvalue {float(np.max(vals)):.3e}"
        )
    # descending order: zero eigenvalues first, most negative last; stable ties
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    R = R[:, order]
    r = int(np.sum(vals < -tol_rank))
    if r == 0 and np.any(Q != 0.0):
        raise DegenerateRank("Q is nonzero but no negative eigenvalue was found")

    lam = -vals[K - r :] if r else np.zeros(0)
    sqrt_l0 = np.sqrt(lambda0)
    P = R.T * sqrt_l0[None, :]
    P_inv = inv_sqrt[:, None] * R
    dec = StructuralDecomposition(P=P, P_inv=P_inv, lambda0=lambda0.copy(), lam=lam, r=r)

    res = verify_decomposition(model, dec)
    if max(res) > RESIDUAL_TOL:
        raise KinlyapError(f"decomposition residuals exceed {RESIDUAL_TOL:g}: {res}")
    return dec


def verify_decomposition(
    model: KineticModel, dec: StructuralDecomposition
) -> DecompositionResiduals:
    """Max-norm residuals of the two defining identities and of P P_inv = I."""
    K = model.K
    if dec.P.shape != (K, K):
        raise DimensionMismatch(f"P must be {K} x {K}, got {dec.P.shape}")
    D = _block_diag_lam(K, np.asarray(dec.lam))
    r24 = float(np.max(np.abs(dec.P @ model.Q @ dec.P_inv + D)))
    r25 = float(np.max(np.abs(dec.lambda0[:, None] * model.Q + dec.P.T @ D @ dec.P)))
    rinv = float(np.max(np.abs(dec.P @ dec.P_inv - np.eye(K))))
    return DecompositionResiduals(r24, r25, rinv)

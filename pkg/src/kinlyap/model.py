"""Linear discrete-velocity kinetic models and the coplanar instance.

A model is the system  f_t + sum_i Lambda_i f_{x_i} = (Q / sigma) f  on the
unit cube, described by the K x d matrix of discrete velocities (row k is the
velocity of component k, so Lambda_i = diag of column i), the K x K collision
matrix Q and the stiffness scale sigma.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SteadyStateViolation, ZeroVelocityRow

#: relative tolerance for the coplanar steady-state identity f1*f2 = f3*f4
TOL_STEADY = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class KineticModel:
    """Immutable description of one linear discrete-velocity system."""

    velocities: np.ndarray  # (K, d); row k = velocity of component k
    Q: np.ndarray  # (K, K) collision matrix
    sigma: float  # positive stiffness scale; effective source is Q/sigma

    @property
    def K(self) -> int:
        return self.velocities.shape[0]

    @property
    def d(self) -> int:
        return self.velocities.shape[1]


@dataclass(frozen=True)
class CoplanarSteadyState:
    """Uniform steady state (f1e, f2e, f3e, f4e) of the coplanar model at speed U."""

    U: float
    f_e: tuple[float, float, float, float]

    def validate(self) -> None:
        if not (np.isfinite(self.U) and self.U > 0):
            raise SteadyStateViolation(f"speed modulus U must be positive, got {self.U!r}")
        if len(self.f_e) != 4:
            raise DimensionMismatch(f"expected 4 steady densities, got {len(self.f_e)}")
        f1, f2, f3, f4 = self.f_e
        if not all(np.isfinite(v) and v > 0 for v in self.f_e):
            raise SteadyStateViolation(f"steady densities must be positive, got {self.f_e!r}")
        if abs(f1 * f2 - f3 * f4) > TOL_STEADY * (f1 * f2):
            raise SteadyStateViolation(
                f"f1*f2={f1 * f2!r} and f3*f4={f3 * f4!r} differ beyond tolerance"
            )


def new_model(velocities, Q, sigma: float) -> KineticModel:
    """Validate and build a model; rejects zero velocity rows (static particles)."""
    velocities = np.asarray(velocities, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if velocities.ndim != 2:
        raise DimensionMismatch(f"velocities must be K x d, got shape {velocities.shape}")
    K = velocities.shape[0]
    if Q.shape != (K, K):
        raise DimensionMismatch(f"Q must be {K} x {K}, got shape {Q.shape}")
    if not (np.isfinite(sigma) and sigma > 0):
        raise ValueError(f"sigma must be a positive finite real, got {sigma!r}")
    if not np.all(np.isfinite(velocities)) or not np.all(np.isfinite(Q)):
        raise ValueError("velocities and Q must be finite")
    for k in range(K):
        if np.all(velocities[k] == 0.0):
            raise ZeroVelocityRow(k)
    return KineticModel(_frozen(velocities), _frozen(Q), float(sigma))


def coplanar_model(s: CoplanarSteadyState, sigma: float) -> KineticModel:
    """Linearize the four-velocity coplanar gas at the uniform steady state s.

    Produces d=2, K=4 with velocities (U,0), (-U,0), (0,U), (0,-U) and the
    rank-one collision matrix whose rows 1,2 are (-f2e, -f1e, f4e, f3e) and
    rows 3,4 their negation.
    """
    s.validate()
    U = float(s.U)
    f1, f2, f3, f4 = (float(v) for v in s.f_e)
    velocities = [[U, 0.0], [-U, 0.0], [0.0, U], [0.0, -U]]
    row = np.array([-f2, -f1, f4, f3])
    Q = np.vstack([row, row, -row, -row])
    return new_model(velocities, Q, sigma)


def nonlinear_collision_residual(fvals, sigma: float = 1.0) -> float:
    """Common collision magnitude (f3*f4 - f1*f2)/sigma of the coplanar gas.

    Used to verify steady states and, through its Jacobian, the linearization.
    """
    f1, f2, f3, f4 = (float(v) for v in fvals)
    return (f3 * f4 - f1 * f2) / float(sigma)


def coplanar_speed(model: KineticModel) -> float | None:
    """Return U if the model has the exact coplanar velocity layout, else None."""
    if model.d != 2 or model.K != 4:
        return None
    v = model.velocities
    U = v[0, 0]
    if U <= 0:
        return None
    expected = np.array([[U, 0.0], [-U, 0.0], [0.0, U], [0.0, -U]])
    if np.array_equal(v, expected):
        return float(U)
    return None

"""Split time stepping: upwind advection plus explicit or implicit collision.

advection_step reads all right-hand values from the previous buffer and the
incoming face values from the boundary law, so steps are Jacobi-style updates;
split_step composes advection with the chosen collision treatment and advances
the step counter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._linalg import plu_factor, plu_reconstruct
from .boundary import BoundaryLaw, extract_outgoing
from .certify import cfl_limit
from .errors import CflViolation, DimensionMismatch, SingularMatrix
from .grid import Field
from .model import KineticModel

#: relative slack on the CFL comparison (absorbs round-off in dt = dx/speed)
_CFL_SLACK = 1e-12
#: factorization residual bound ||L U - P A||_max <= this times ||A||_max
_LU_RTOL = 1e-12


@dataclass(frozen=True)
class ImplicitSolver:
    """One-time factorization of A = I - (dt/sigma) Q, reused across cells and steps."""

    lu: np.ndarray  # combined L\U factors
    piv: np.ndarray  # sequential row transpositions
    dt: float
    sigma: float
    A: np.ndarray


def advection_step(field: Field, model: KineticModel, law: BoundaryLaw, dt: float) -> Field:
    """One upwind advection sub-step; boundary values come from the law."""
    grid = field.grid
    dt_cfl = cfl_limit(model, grid.dx)
    if dt > dt_cfl * (1.0 + _CFL_SLACK):
        raise CflViolation(dt, dt_cfl)
    if field.K != model.K:
        raise DimensionMismatch(f"field has {field.K} components, model has {model.K}")
    incoming = law.apply(extract_outgoing(field, model), field.step)
    inc_lo, inc_hi = incoming.pack()
    strides, coord, tface, _, _ = _kernels.build_tables(grid.d, grid.n)
    out = np.empty_like(field.flat)
    _kernels.adv_step(
        field.flat, out, model.velocities, dt / grid.dx,
        coord, tface, strides, grid.n, inc_lo, inc_hi,
    )
    return Field(grid, field.K, out.reshape(field.values.shape), field.step)


def collision_explicit(field: Field, model: KineticModel, dt: float) -> Field:
    """Forward-Euler collision: f -> (I + (dt/sigma) Q) f per cell."""
    out = np.empty_like(field.flat)
    acc = np.empty(field.flat.shape[1])
    _kernels.coll_explicit(field.flat, out, model.Q, dt / model.sigma, acc)
    return Field(field.grid, field.K, out.reshape(field.values.shape), field.step)


def implicit_solver_build(model: KineticModel, dt: float) -> ImplicitSolver:
    """Factor A = I - (dt/sigma) Q once; verifies the reconstruction residual."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    A = np.eye(model.K) - (dt / model.sigma) * model.Q
    lu, piv = plu_factor(A)
    LU, P = plu_reconstruct(lu, piv)
    scale = max(float(np.max(np.abs(A))), np.finfo(np.float64).tiny)
    resid = float(np.max(np.abs(LU - P @ A)))
    if resid > _LU_RTOL * scale:
        raise SingularMatrix(f"factorization residual {resid:.3e} exceeds tolerance")
    return ImplicitSolver(lu=lu, piv=piv, dt=float(dt), sigma=model.sigma, A=A)


def collision_implicit(field: Field, solver: ImplicitSolver) -> Field:
    """Solve (I - (dt/sigma) Q) f_new = f per cell against the stored factors."""
    out = np.empty_like(field.flat)
    _kernels.coll_implicit(field.flat, out, solver.lu, solver.piv)
    return Field(field.grid, field.K, out.reshape(field.values.shape), field.step)


def split_step(
    field: Field,
    model: KineticModel,
    law: BoundaryLaw,
    dt: float,
    kind: str,
    solver: ImplicitSolver | None = None,
) -> Field:
    """Advection then collision; increments the step counter."""
    tilde = advection_step(field, model, law, dt)
    if kind == "explicit":
        out = collision_explicit(tilde, model, dt)
    elif kind == "implicit":
        if solver is None:
            solver = implicit_solver_build(model, dt)
        elif solver.dt != dt or solver.sigma != model.sigma:
            raise ValueError("implicit solver was built for a different dt or sigma")
        out = collision_implicit(tilde, solver)
    else:
        raise ValueError(f"unknown scheme kind {kind!r}")
    out.step = field.step + 1
    return out

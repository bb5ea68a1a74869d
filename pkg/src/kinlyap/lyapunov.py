"""Runtime diagnostics: discrete Lyapunov functional, boundary term, decay checks.

The Lyapunov weight of component k at grid point x is
alpha * lambda_k0 + exp(-sum_l lambda_kl x_l).  Reductions run through the
compiled kernels in component-major lexicographic sequential order, so values
agree bitwise with the ones a fused run records.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .boundary import FaceTrace
from .certify import StabilityCertificate
from .errors import InsufficientData, NonPositiveNorm
from .grid import Field, Grid, interior_coordinates
from .model import CoplanarSteadyState, KineticModel

#: slack, relative to L(f^0), absorbed by the per-step contraction check
DECAY_RTOL = 1e-12


@dataclass
class StepDiagnostics:
    n: int
    t: float
    l2: float
    L: float
    B: float
    per_step_ratio: float  # L(f^n) / L(f^(n-1)); nan at the first step
    bound_ok: bool  # ||f^n|| <= C_amp exp(-nu t) ||f^0||


def weight_array(model: KineticModel, lambda0, alpha: float, grid: Grid) -> np.ndarray:
    """(K, M) table of Lyapunov weights at the interior points."""
    lambda0 = np.asarray(lambda0, dtype=np.float64)
    coords = interior_coordinates(grid)
    w = np.empty((model.K, coords.shape[0]))
    for k in range(model.K):
        w[k] = alpha * lambda0[k] + np.exp(-(coords @ model.velocities[k]))
    return w


def lyapunov_value(field: Field, model: KineticModel, lambda0, alpha: float) -> float:
    """L(f) = (dx)^d sum_j sum_k f_kj^2 (alpha lambda_k0 + exp(-sum lambda_kl x_l))."""
    w = weight_array(model, lambda0, alpha, field.grid)
    raw = _kernels.lyap_raw(field.flat, w)
    return float(raw * field.grid.dx**field.grid.d)


def boundary_weight_tables(
    model: KineticModel, lambda0, alpha: float, grid: Grid
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(w_near, w_far, pref) tables for the boundary-term kernel.

    w_near holds the weight at x_i = dx and w_far at x_i = (N-1) dx, each
    times the transverse exponential factor; pref is |lambda_ki| dx^(d-1).
    """
    lambda0 = np.asarray(lambda0, dtype=np.float64)
    d, n, dx = grid.d, grid.n, grid.dx
    K = model.K
    mf = n ** (d - 1)
    _, _, _, face_lo, _ = _kernels.build_tables(d, n)
    coords = interior_coordinates(grid)
    x_far = (grid.N - 1) * dx
    w_near = np.zeros((K, d, mf))
    w_far = np.zeros((K, d, mf))
    pref = np.zeros((K, d))
    for i in range(d):
        tcoords = coords[face_lo[i]].copy()
        tcoords[:, i] = 0.0
        for k in range(K):
            lki = model.velocities[k, i]
            if lki == 0.0:
                continue
            E = np.exp(-(tcoords @ model.velocities[k]))
            w_near[k, i] = alpha * lambda0[k] + E * np.exp(-lki * dx)
            w_far[k, i] = alpha * lambda0[k] + E * np.exp(-lki * x_far)
            pref[k, i] = abs(lki) * dx ** (d - 1)
    return w_near, w_far, pref


def boundary_term(
    field: Field, incoming: FaceTrace, model: KineticModel, lambda0, alpha: float
) -> float:
    """General-d boundary part of the Lyapunov difference for one advection step.

    Incoming contributions enter with positive sign and the one-cell-shifted
    exponential weight, outgoing contributions with negative sign at the
    adjacent interior slab, each scaled by |lambda_ki| (dx)^(d-1).
    """
    grid = field.grid
    _, _, _, face_lo, face_hi = _kernels.build_tables(grid.d, grid.n)
    w_near, w_far, pref = boundary_weight_tables(model, lambda0, alpha, grid)
    inc_lo, inc_hi = incoming.pack()
    return float(
        _kernels.boundary_term_raw(
            field.flat, inc_lo, inc_hi, model.velocities, w_near, w_far, pref, face_lo, face_hi
        )
    )


def boundary_term_coplanar(
    field: Field, incoming: FaceTrace, s: CoplanarSteadyState, alpha: float
) -> float:
    """Closed-form coplanar boundary term (the six grouped face sums).

    Independent of the general evaluation: plain numpy sums over explicit
    slices of the d=2 four-velocity layout.
    """
    g = field.grid
    n, dx, U = g.n, g.dx, s.U
    f1e, f2e, f3e, f4e = s.f_e
    v = field.values
    x_near = dx
    x_far = (g.N - 1) * dx
    in1 = incoming.get(0, 0, 0)
    in2 = incoming.get(0, 1, 1)
    in3 = incoming.get(1, 0, 2)
    in4 = incoming.get(1, 1, 3)
    B = (alpha / f1e + np.exp(-U * x_near)) * np.sum(in1**2)
    B += (alpha / f3e + np.exp(-U * x_near)) * np.sum(in3**2)
    B -= (alpha / f1e + np.exp(-U * x_far)) * np.sum(v[0, n - 1, :] ** 2)
    B -= (alpha / f3e + np.exp(-U * x_far)) * np.sum(v[2, :, n - 1] ** 2)
    B -= (alpha / f2e + np.exp(U * x_near)) * np.sum(v[1, 0, :] ** 2)
    B -= (alpha / f4e + np.exp(U * x_near)) * np.sum(v[3, :, 0] ** 2)
    B += (alpha / f2e + np.exp(U * x_far)) * np.sum(in2**2)
    B += (alpha / f4e + np.exp(U * x_far)) * np.sum(in4**2)
    return float(U * dx * B)


def assert_per_step_decay(
    diag_prev: StepDiagnostics,
    diag_next: StepDiagnostics,
    cert: StabilityCertificate,
    L0: float,
) -> bool:
    """True iff L(f^(n+1)) <= (1 - mu1 dt) L(f^n) + DECAY_RTOL * L(f^0)."""
    if diag_next.n != diag_prev.n + 1:
        raise ValueError("per-step decay needs consecutive diagnostics")
    dt = diag_next.t - diag_prev.t
    return diag_next.L <= (1.0 - cert.mu1 * dt) * diag_prev.L + DECAY_RTOL * L0


def fit_decay_rate(trace) -> tuple[float, float]:
    """Least-squares decay rate of log(l2) vs t on the trailing half of the trace.

    Returns (rate, r2) with rate = -slope, so decaying traces give positive
    rates and growing ones negative.
    """
    arr = np.asarray(list(trace), dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("trace must be a sequence of (t, l2) pairs")
    if int(np.sum(arr[:, 1] > 0)) < 10:
        raise InsufficientData(
            f"need at least 10 samples with positive l2, got {int(np.sum(arr[:, 1] > 0))}"
        )
    window = arr[arr.shape[0] // 2 :]
    if np.any(window[:, 1] <= 0):
        raise NonPositiveNorm("fit window contains non-positive norms")
    t = window[:, 0]
    y = np.log(window[:, 1])
    if np.all(y == y[0]):  # constant trace: zero rate, perfect fit
        return 0.0, 1.0
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(-slope), float(r2)

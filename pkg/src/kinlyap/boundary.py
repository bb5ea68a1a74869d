"""Boundary control laws: incoming traces as functions of outgoing traces.

Faces are keyed (axis, side) with side 0 for x_axis = 0 and side 1 for
x_axis = 1.  At side 0 the incoming components are those with lambda_k,axis > 0
and the outgoing ones those with lambda_k,axis < 0; at side 1 the roles swap.
Face values are stored as flat arrays of length (N-1)^(d-1), lexicographic in
the remaining axes.  The stacking order used by the general linear law is
faces (axis ascending, side 0 before side 1), components ascending within a
face, lattice lexicographic within a component.
"""
from __future__ import annotations

import math
from typing import Protocol

import numpy as np

from .errors import DimensionMismatch, NotCoplanar
from .grid import Field, Grid
from .model import CoplanarSteadyState, KineticModel, coplanar_speed


def incoming_components(model: KineticModel, axis: int, side: int) -> list[int]:
    col = model.velocities[:, axis]
    keep = col > 0 if side == 0 else col < 0
    return [k for k in range(model.K) if keep[k]]


def outgoing_components(model: KineticModel, axis: int, side: int) -> list[int]:
    col = model.velocities[:, axis]
    keep = col < 0 if side == 0 else col > 0
    return [k for k in range(model.K) if keep[k]]


def face_point_count(grid: Grid) -> int:
    return grid.n ** (grid.d - 1)


def _face_slice(values: np.ndarray, k: int, axis: int, index: int) -> np.ndarray:
    """Flat copy of component k at fixed interior index along the given axis."""
    return np.ascontiguousarray(np.take(values[k], index, axis=axis)).ravel()


class _Trace:
    """Per-face, per-component flat value arrays plus the structure they obey."""

    def __init__(self, model: KineticModel, grid: Grid, data, components):
        mf = face_point_count(grid)
        for axis in range(grid.d):
            for side in (0, 1):
                comps = components(model, axis, side)
                got = sorted(data.get((axis, side), {}))
                if got != comps:
                    raise DimensionMismatch(
                        f"face (axis={axis}, side={side}) must carry components "
                        f"{comps}, got {got}"
                    )
                for k in comps:
                    arr = np.asarray(data[(axis, side)][k], dtype=np.float64)
                    if arr.shape != (mf,):
                        raise DimensionMismatch(
                            f"face array for component {k} must have shape ({mf},), "
                            f"got {arr.shape}"
                        )
                    if not np.all(np.isfinite(arr)):
                        raise ValueError("face values must be finite")
                    data[(axis, side)][k] = arr
        self.model = model
        self.grid = grid
        self.data = data

    def get(self, axis: int, side: int, k: int) -> np.ndarray:
        return self.data[(axis, side)][k]

    def _stack_order(self, components):
        for axis in range(self.grid.d):
            for side in (0, 1):
                for k in components(self.model, axis, side):
                    yield axis, side, k

    def stack(self) -> np.ndarray:
        parts = [self.get(a, s, k) for a, s, k in self._stack_order(self._components)]
        if not parts:
            return np.zeros(0)
        return np.concatenate(parts)


class OutgoingTrace(_Trace):
    """Outgoing numerical traces: interior values adjacent to each face."""

    _components = staticmethod(outgoing_components)

    def __init__(self, model, grid, data):
        super().__init__(model, grid, data, outgoing_components)


class FaceTrace(_Trace):
    """Incoming boundary values, exactly the incoming components per face."""

    _components = staticmethod(incoming_components)

    def __init__(self, model, grid, data):
        super().__init__(model, grid, data, incoming_components)

    @classmethod
    def zeros(cls, model: KineticModel, grid: Grid) -> "FaceTrace":
        mf = face_point_count(grid)
        data = {}
        for axis in range(grid.d):
            for side in (0, 1):
                data[(axis, side)] = {
                    k: np.zeros(mf) for k in incoming_components(model, axis, side)
                }
        return cls(model, grid, data)

    @classmethod
    def from_stacked(cls, vec: np.ndarray, model: KineticModel, grid: Grid) -> "FaceTrace":
        mf = face_point_count(grid)
        data = {}
        pos = 0
        for axis in range(grid.d):
            for side in (0, 1):
                face = {}
                for k in incoming_components(model, axis, side):
                    face[k] = np.asarray(vec[pos : pos + mf], dtype=np.float64)
                    pos += mf
                data[(axis, side)] = face
        if pos != vec.shape[0]:
            raise DimensionMismatch(f"stacked vector has {vec.shape[0]} entries, need {pos}")
        return cls(model, grid, data)

    def pack(self) -> tuple[np.ndarray, np.ndarray]:
        """(inc_lo, inc_hi) arrays of shape (K, d, (N-1)^(d-1)) for the kernels."""
        K, d, mf = self.model.K, self.grid.d, face_point_count(self.grid)
        inc_lo = np.zeros((K, d, mf))
        inc_hi = np.zeros((K, d, mf))
        for axis in range(d):
            for k in incoming_components(self.model, axis, 0):
                inc_lo[k, axis, :] = self.get(axis, 0, k)
            for k in incoming_components(self.model, axis, 1):
                inc_hi[k, axis, :] = self.get(axis, 1, k)
        return inc_lo, inc_hi


def stacked_sizes(model: KineticModel, grid: Grid) -> tuple[int, int]:
    """(incoming, outgoing) stacked vector lengths."""
    mf = face_point_count(grid)
    n_in = sum(
        len(incoming_components(model, a, s)) for a in range(grid.d) for s in (0, 1)
    )
    n_out = sum(
        len(outgoing_components(model, a, s)) for a in range(grid.d) for s in (0, 1)
    )
    return n_in * mf, n_out * mf


def extract_outgoing(field: Field, model: KineticModel) -> OutgoingTrace:
    """Adjacent-interior values per face: j_i = 1 at side 0, j_i = N-1 at side 1."""
    grid = field.grid
    data = {}
    for axis in range(grid.d):
        lo = {}
        hi = {}
        for k in outgoing_components(model, axis, 0):
            lo[k] = _face_slice(field.values, k, axis, 0)
        for k in outgoing_components(model, axis, 1):
            hi[k] = _face_slice(field.values, k, axis, grid.n - 1)
        data[(axis, 0)] = lo
        data[(axis, 1)] = hi
    return OutgoingTrace(model, grid, data)


class BoundaryLaw(Protocol):
    def apply(self, trace: OutgoingTrace, n: int) -> FaceTrace: ...


class TrivialLaw:
    """All incoming boundary values are zero."""

    def apply(self, trace: OutgoingTrace, n: int) -> FaceTrace:
        return FaceTrace.zeros(trace.model, trace.grid)


def _require_coplanar(model: KineticModel) -> float:
    U = coplanar_speed(model)
    if U is None:
        raise NotCoplanar("this law needs the 4-velocity coplanar layout")
    return U


class CoplanarGain45Law:
    """Bottom incoming f3 at (j1, 0) = k * f2 at interior (1, j1); other faces zero."""

    def __init__(self, k: float):
        self.k = float(k)

    def apply(self, trace: OutgoingTrace, n: int) -> FaceTrace:
        _require_coplanar(trace.model)
        out = FaceTrace.zeros(trace.model, trace.grid)
        # left-edge outgoing f2 is indexed by j2; feed bottom point j1 = j2
        out.data[(1, 0)][2] = self.k * trace.get(0, 0, 1)
        return out


class CoplanarGain46Law:
    """Bottom incoming f3 = k1 * f2 at (1, j1) + k2 * f4 at (j1, 1); other faces zero."""

    def __init__(self, k1: float, k2: float):
        self.k1 = float(k1)
        self.k2 = float(k2)

    def apply(self, trace: OutgoingTrace, n: int) -> FaceTrace:
        _require_coplanar(trace.model)
        out = FaceTrace.zeros(trace.model, trace.grid)
        out.data[(1, 0)][2] = self.k1 * trace.get(0, 0, 1) + self.k2 * trace.get(1, 0, 3)
        return out


class GeneralLinearLaw:
    """Incoming stack = matrix @ outgoing stack (dense or anything supporting @)."""

    def __init__(self, matrix):
        self.matrix = matrix

    def apply(self, trace: OutgoingTrace, n: int) -> FaceTrace:
        model, grid = trace.model, trace.grid
        n_in, n_out = stacked_sizes(model, grid)
        rows, cols = self.matrix.shape
        if (rows, cols) != (n_in, n_out):
            raise DimensionMismatch(
                f"law matrix is {rows} x {cols}, need {n_in} x {n_out}"
            )
        vec = self.matrix @ trace.stack()
        return FaceTrace.from_stacked(np.asarray(vec, dtype=np.float64), model, grid)


def linear_law_from_triplets(
    rows, cols, vals, model: KineticModel, grid: Grid
) -> GeneralLinearLaw:
    """Build a dense law matrix from sparse (row, col, value) triplets."""
    n_in, n_out = stacked_sizes(model, grid)
    mat = np.zeros((n_in, n_out))
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if rows.size and (rows.min() < 0 or rows.max() >= n_in or cols.min() < 0 or cols.max() >= n_out):
        raise DimensionMismatch(
            f"triplet indices out of range for a {n_in} x {n_out} law matrix"
        )
    np.add.at(mat, (rows, cols), vals)
    return GeneralLinearLaw(mat)


def admissible_gain_45(alpha: float, s: CoplanarSteadyState) -> float:
    """dx-uniform sufficient gain bound for the single-gain bottom law."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    _, f2, f3, _ = s.f_e
    return math.sqrt((alpha / f2 + 1.0) / (alpha / f3 + 1.0))


def admissible_gains_46(alpha: float, s: CoplanarSteadyState) -> tuple[float, float]:
    """dx-uniform sufficient gain bounds for the two-gain bottom law."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    _, f2, f3, f4 = s.f_e
    k1 = math.sqrt((alpha / f2 + 1.0) / (2.0 * (alpha / f3 + 1.0)))
    k2 = math.sqrt((alpha / f4 + 1.0) / (2.0 * (alpha / f3 + 1.0)))
    return k1, k2

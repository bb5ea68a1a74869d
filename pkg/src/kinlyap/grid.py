"""Uniform discretization of (0,1)^d: interior index set, fields, norms, snapshots.

Interior multi-indices run over j_i in {1, ..., N-1}.  Field values are stored
component-major (k outer) with lexicographic flattening of the interior
lattice, so the flat position of (k, j_1, ..., j_d) is
k*(N-1)^d + sum_a (j_a - 1)*(N-1)^(d-1-a).  Snapshots and all sequential
reductions follow this order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, NonFiniteSample

#: significant digits used for all floating-point text output (round-trip exact)
FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class Grid:
    d: int
    N: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")

    @property
    def dx(self) -> float:
        return 1.0 / self.N

    @property
    def n(self) -> int:
        """Interior points per direction."""
        return self.N - 1


def interior_index_count(grid: Grid) -> int:
    return grid.n**grid.d


@dataclass
class Field:
    """Interior state values f^n over the multi-index set at one time step."""

    grid: Grid
    K: int
    values: np.ndarray  # (K, n, ..., n) with d trailing axes
    step: int = 0

    def __post_init__(self):
        expected = (self.K,) + (self.grid.n,) * self.grid.d
        if self.values.shape != expected:
            raise DimensionMismatch(
                f"field values must have shape {expected}, got {self.values.shape}"
            )
        if self.values.dtype != np.float64 or not self.values.flags.c_contiguous:
            self.values = np.ascontiguousarray(self.values, dtype=np.float64)

    @property
    def flat(self) -> np.ndarray:
        """(K, M) view in canonical order."""
        return self.values.reshape(self.K, -1)

    def copy(self) -> "Field":
        return Field(self.grid, self.K, self.values.copy(), self.step)


def zeros_field(grid: Grid, K: int, step: int = 0) -> Field:
    return Field(grid, K, np.zeros((K,) + (grid.n,) * grid.d), step)


def constant_field(grid: Grid, vec, step: int = 0) -> Field:
    vec = np.asarray(vec, dtype=np.float64)
    K = vec.shape[0]
    values = np.empty((K,) + (grid.n,) * grid.d)
    for k in range(K):
        values[k] = vec[k]
    return Field(grid, K, values, step)


def interior_coordinates(grid: Grid) -> np.ndarray:
    """(M, d) coordinates of the interior points in lexicographic order."""
    axes = [np.arange(1, grid.N) * grid.dx] * grid.d
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def l2_norm(field: Field) -> float:
    """sqrt( sum_j f_j^T f_j (dx)^d ), summed in canonical sequential order."""
    raw = _kernels.l2_sq(field.flat)
    return float(np.sqrt(raw * field.grid.dx**field.grid.d))


_SIMPSON_OFFSETS = (-0.5, 0.0, 0.5)
_SIMPSON_WEIGHTS = (1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0)


def sample_initial(grid: Grid, K: int, f0, order: int = 1) -> Field:
    """Cell averages of f0 at the interior points.

    order=1 evaluates f0 at the cell center (the grid point itself; exact for
    the constant data of all shipped presets), order=3 upgrades to the
    3^d-point product Simpson average over the cell.
    """
    if order not in (1, 3):
        raise ValueError(f"quadrature order must be 1 or 3, got {order}")
    coords = interior_coordinates(grid)
    M = coords.shape[0]
    values = np.empty((K, M))
    dx = grid.dx
    for p in range(M):
        x = coords[p]
        if order == 1:
            sample = np.asarray(f0(x), dtype=np.float64).reshape(K)
        else:
            sample = np.zeros(K)
            for combo in np.ndindex(*(3,) * grid.d):
                w = 1.0
                pt = x.copy()
                for axis, c in enumerate(combo):
                    w *= _SIMPSON_WEIGHTS[c]
                    pt[axis] += _SIMPSON_OFFSETS[c] * dx
                sample += w * np.asarray(f0(pt), dtype=np.float64).reshape(K)
        if not np.all(np.isfinite(sample)):
            raise NonFiniteSample(f"initial data is not finite at x={x!r}")
        values[:, p] = sample
    return Field(grid, K, values.reshape((K,) + (grid.n,) * grid.d))


def write_field_csv(field: Field, path) -> None:
    """Snapshot CSV: header k,j1,...,jd,value; 1-based indices, canonical order."""
    g = field.grid
    idx_headers = ",".join(f"j{a + 1}" for a in range(g.d))
    flat = field.flat
    with open(path, "w", newline="") as fh:
        fh.write(f"k,{idx_headers},value\n")
        for k in range(field.K):
            for p in range(flat.shape[1]):
                rem = p
                js = []
                for a in range(g.d):
                    stride = g.n ** (g.d - 1 - a)
                    js.append(rem // stride + 1)
                    rem %= stride
                jtxt = ",".join(str(j) for j in js)
                fh.write(f"{k + 1},{jtxt},{FLOAT_FMT % flat[k, p]}\n")


def read_field_csv(path) -> Field:
    """Rebuild a Field from a snapshot written by write_field_csv."""
    with open(path, newline="") as fh:
        header = fh.readline().strip().split(",")
        if header[0] != "k" or header[-1] != "value":
            raise ValueError(f"not a field snapshot: header {header!r}")
        d = len(header) - 2
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if not rows:
        raise ValueError("empty snapshot")
    K = max(int(r[0]) for r in rows)
    n = max(int(r[1]) for r in rows)
    grid = Grid(d=d, N=n + 1)
    values = np.zeros((K,) + (n,) * d)
    for r in rows:
        k = int(r[0]) - 1
        js = tuple(int(v) - 1 for v in r[1 : 1 + d])
        values[(k,) + js] = float(r[-1])
    return Field(grid, K, values)

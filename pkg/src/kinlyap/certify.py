"""Stability certificates: the full constant chain for explicit and implicit schemes.

All constants are independent of dt, and all except the CFL bound are
independent of dx.  The supremum defining the coupling bounds C1, C2 is taken
over the closed unit cube (lattice evaluation plus a 5% safety margin); any
upper bound keeps every guarantee valid since C1, C2 only enlarge alpha.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import two_norm
from .errors import NonPositiveDamping, RankZero
from .model import KineticModel
from .structure import StructuralDecomposition

#: lattice points per axis for the C1/C2 supremum, endpoints included
C_LATTICE = 17
#: safety inflation applied to the lattice maximum
C_INFLATE = 1.05
#: sample count for the interior-damping cross-check over dx in (0, 1]
_MU_SAMPLES = 1024


@dataclass(frozen=True)
class StabilityCertificate:
    scheme_kind: str  # "explicit" | "implicit"
    M: float  # max entry of exp(-sum Lam_l x_l) over the closed cube
    m: float  # min entry, same
    lambda_M: float  # max of Lambda0
    lambda_m: float  # min of Lambda0
    mu: float  # interior damping
    C1: float  # u-q coupling bound
    C2: float  # q-q coupling bound
    M_tilde: float | None  # higher-order constant (explicit only)
    C3: float | None  # lambda_M / lambda_m (implicit only)
    epsilon: float  # Cauchy-Schwarz weight
    alpha: float  # Lyapunov weight
    dt_cfl: float  # CFL bound on dt at the given dx
    dt_source: float | None  # source bound on dt (explicit only; inf if Q = 0)
    nu: float  # guaranteed exponential rate
    C_amp: float  # amplitude constant sqrt(2 lambda_M / lambda_m)
    # diagnostic extras
    lam: float | None  # smallest entry of Lam (None when r = 0)
    norm_P: float  # ||P||_2
    norm_Q_scaled: float  # ||Q / sigma||_2
    r: int
    dx: float
    sigma: float

    @property
    def mu1(self) -> float:
        """Per-step contraction coefficient of the Lyapunov recursion."""
        return self.m * self.mu / (4.0 * self.lambda_M * self.alpha)

    def to_json_dict(self) -> dict:
        out = {
            "scheme_kind": self.scheme_kind,
            "M": self.M,
            "m": self.m,
            "lambda_M": self.lambda_M,
            "lambda_m": self.lambda_m,
            "mu": self.mu,
            "C1": self.C1,
            "C2": self.C2,
            "M_tilde": self.M_tilde,
            "C3": self.C3,
            "epsilon": self.epsilon,
            "alpha": self.alpha,
            "dt_cfl": self.dt_cfl,
            "dt_source": self.dt_source,
            "nu": self.nu,
            "C_amp": self.C_amp,
            "mu1": self.mu1,
            "lam": self.lam,
            "norm_P": self.norm_P,
            "norm_Q_scaled": self.norm_Q_scaled,
            "r": self.r,
            "dx": self.dx,
            "sigma": self.sigma,
            "c_bounds_note": (
                f"C1/C2 are suprema over the closed cube ({C_LATTICE}^d lattice, "
                f"x{C_INFLATE} margin), the dx-independent reading"
            ),
        }
        if self.dt_source is not None and math.isinf(self.dt_source):
            out["dt_source"] = None
            out["unbounded"] = True
        return out


def geometry_extrema(model: KineticModel) -> tuple[float, float]:
    """Closed-form extrema (M, m) of exp(-sum_l lambda_kl x_l) over [0,1]^d."""
    v = model.velocities
    M = float(np.max(np.exp(-np.sum(np.minimum(v, 0.0), axis=1))))
    m = float(np.min(np.exp(-np.sum(np.maximum(v, 0.0), axis=1))))
    return M, m


def _mu_tilde(v_row: np.ndarray, dx: float) -> float:
    a = np.abs(v_row[v_row != 0.0])
    return float(np.sum(a * (1.0 - np.exp(-a * dx))) / dx)


def interior_damping(model: KineticModel) -> float:
    """mu = min_k sum_{i: lambda_ki != 0} |lambda_ki| (1 - exp(-|lambda_ki|)).

    Each summand of mu_tilde_k(dx) is decreasing in dx, so the minimum over
    dx in (0, 1] sits at dx = 1; the closed form is cross-checked against a
    dense sampling of mu_tilde_k.
    """
    v = model.velocities
    a = np.abs(v)
    mu_k = np.sum(np.where(a > 0, a * (1.0 - np.exp(-a)), 0.0), axis=1)
    mu = float(np.min(mu_k))
    # cross-check: sampled minimum over dx must not undercut the closed form
    grid = np.linspace(1.0 / _MU_SAMPLES, 1.0, _MU_SAMPLES)
    for k in range(model.K):
        sampled = min(_mu_tilde(v[k], float(dx)) for dx in grid)
        if sampled < mu_k[k] * (1.0 - 1e-12):
            raise NonPositiveDamping(
                f"sampled damping {sampled!r} undercuts closed form {mu_k[k]!r} (row {k})"
            )
    if not mu > 0:
        raise NonPositiveDamping(f"computed interior damping mu={mu!r} is not positive")
    return mu


def cfl_limit(model: KineticModel, dx: float) -> float:
    """Largest dt with sum_i (dt/dx) |lambda_ki| <= 1 for every component."""
    speed = float(np.max(np.sum(np.abs(model.velocities), axis=1)))
    return dx / speed


def coupling_bounds(
    model: KineticModel, dec: StructuralDecomposition
) -> tuple[float, float]:
    """C1 = 2 sup ||Lam B21(x)||, C2 = 2 sup ||Lam B22(x)|| over the closed cube.

    B(x) = P^-T diag(exp(-sum_l lambda_kl x_l)) P^-1 split with the r x r
    block B22 in the lower right.
    """
    K, d, r = model.K, model.d, dec.r
    if r == 0:
        return 0.0, 0.0
    axes = [np.linspace(0.0, 1.0, C_LATTICE)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)  # (L, d)
    lam = np.asarray(dec.lam)
    c1 = 0.0
    c2 = 0.0
    for x in points:
        ex = np.exp(-model.velocities @ x)  # (K,)
        B = (dec.P_inv.T * ex[None, :]) @ dec.P_inv
        B21 = B[K - r :, : K - r]
        B22 = B[K - r :, K - r :]
        c1 = max(c1, two_norm(lam[:, None] * B21))
        c2 = max(c2, two_norm(lam[:, None] * B22))
    return 2.0 * c1 * C_INFLATE, 2.0 * c2 * C_INFLATE


def _common_constants(model: KineticModel, dec: StructuralDecomposition):
    lam_M = float(np.max(dec.lambda0))
    lam_m = float(np.min(dec.lambda0))
    M, m = geometry_extrema(model)
    mu = interior_damping(model)
    C1, C2 = coupling_bounds(model, dec)
    norm_P = two_norm(dec.P)
    norm_Qs = two_norm(model.Q / model.sigma)
    q_is_zero = not np.any(model.Q != 0.0)
    if dec.r == 0 and not q_is_zero:
        raise RankZero("certificate formulas need lam = min(Lam), but r = 0 with Q != 0")
    lam = float(np.min(dec.lam)) if dec.r else None
    return lam_M, lam_m, M, m, mu, C1, C2, norm_P, norm_Qs, lam


def certify_explicit(
    model: KineticModel, dec: StructuralDecomposition, dx: float
) -> StabilityCertificate:
    """Constant chain for upwind advection plus forward-Euler collision."""
    lam_M, lam_m, M, m, mu, C1, C2, norm_P, norm_Qs, lam = _common_constants(model, dec)
    M_tilde = 2.0 * lam_M * norm_Qs * norm_Qs / lam_m
    epsilon = m * mu * lam_m / (8.0 * norm_P * norm_P * lam_M)
    if lam is None:
        alpha = M / lam_M
        dt_source = math.inf
    else:
        alpha = max(
            2.0 * C1 * C1 * lam_M * norm_P * norm_P / (m * mu * lam_m * lam) + C2 / lam,
            M / lam_M,
        )
        dt_source = m * mu / (8.0 * M_tilde * lam_M * alpha)
    nu = m * mu / (8.0 * lam_M * alpha)
    return StabilityCertificate(
        scheme_kind="explicit",
        M=M,
        m=m,
        lambda_M=lam_M,
        lambda_m=lam_m,
        mu=mu,
        C1=C1,
        C2=C2,
        M_tilde=M_tilde,
        C3=None,
        epsilon=epsilon,
        alpha=alpha,
        dt_cfl=cfl_limit(model, dx),
        dt_source=dt_source,
        nu=nu,
        C_amp=math.sqrt(2.0 * lam_M / lam_m),
        lam=lam,
        norm_P=norm_P,
        norm_Q_scaled=norm_Qs,
        r=dec.r,
        dx=dx,
        sigma=model.sigma,
    )


def certify_implicit(
    model: KineticModel, dec: StructuralDecomposition, dx: float
) -> StabilityCertificate:
    """Constant chain for upwind advection plus implicit collision (dt: CFL only)."""
    lam_M, lam_m, M, m, mu, C1, C2, norm_P, norm_Qs, lam = _common_constants(model, dec)
    C3 = lam_M / lam_m
    sigma = model.sigma
    epsilon = m * mu * lam_m * sigma / (4.0 * norm_P * norm_P * lam_M * C3)
    if lam is None:
        alpha = M / lam_M
    else:
        alpha = max(
            C1 * C1 * lam_M * C3 * norm_P * norm_P / (m * mu * lam * lam_m * sigma)
            + C2 / lam,
            M / lam_M,
        )
    nu = m * mu / (8.0 * lam_M * alpha)
    return StabilityCertificate(
        scheme_kind="implicit",
        M=M,
        m=m,
        lambda_M=lam_M,
        lambda_m=lam_m,
        mu=mu,
        C1=C1,
        C2=C2,
        M_tilde=None,
        C3=C3,
        epsilon=epsilon,
        alpha=alpha,
        dt_cfl=cfl_limit(model, dx),
        dt_source=None,
        nu=nu,
        C_amp=math.sqrt(2.0 * lam_M / lam_m),
        lam=lam,
        norm_P=norm_P,
        norm_Q_scaled=norm_Qs,
        r=dec.r,
        dx=dx,
        sigma=sigma,
    )

import math

import numpy as np
import pytest

from kinlyap.certify import (
    C_INFLATE,
    C_LATTICE,
    certify_explicit,
    certify_implicit,
    cfl_limit,
    coupling_bounds,
    geometry_extrema,
    interior_damping,
    _mu_tilde,
)
from kinlyap.errors import RankZero
from kinlyap.grid import Grid, Field, l2_norm
from kinlyap.lyapunov import lyapunov_value
from kinlyap.model import coplanar_model, new_model
from kinlyap.structure import coplanar_lambda0, decompose


def test_geometry_extrema_coplanar(ref_model):
    M, m = geometry_extrema(ref_model)
    assert abs(M - math.e) <= 1e-12 * math.e
    assert abs(m - 1.0 / math.e) <= 1e-12 / math.e


def test_geometry_extrema_diagonal_velocity():
    model = new_model(np.array([[1.0, 1.0]]), np.zeros((1, 1)), 1.0)
    M, m = geometry_extrema(model)
    assert M == 1.0
    assert abs(m - math.exp(-2.0)) <= 1e-15


def test_interior_damping_closed_forms(ref_model):
    mu = interior_damping(ref_model)
    assert abs(mu - (1.0 - math.exp(-1.0))) <= 1e-12
    fast = new_model(np.array([[2.0]]), np.zeros((1, 1)), 1.0)
    assert abs(interior_damping(fast) - 2.0 * (1.0 - math.exp(-2.0))) <= 1e-12


def test_mu_tilde_small_dx_limit(ref_model):
    """mu_tilde_k(dx) -> sum_i lambda_ki^2 as dx -> 0."""
    for k in range(4):
        row = ref_model.velocities[k]
        lim = float(np.sum(row**2))
        assert abs(_mu_tilde(row, 1e-6) - lim) <= 1e-4 * lim


def test_cfl_limit(ref_model):
    assert cfl_limit(ref_model, 0.05) == 0.05
    model = new_model(np.array([[1.0, 2.0], [-0.5, 0.0]]), np.zeros((2, 2)), 1.0)
    assert cfl_limit(model, 0.3) == 0.3 / 3.0


def _lattice_oracle(model, dec):
    """Recompute C1/C2 with numpy SVD over the same lattice (independent path)."""
    K, r = model.K, dec.r
    pts = np.linspace(0.0, 1.0, C_LATTICE)
    c1 = c2 = 0.0
    for x1 in pts:
        for x2 in pts:
            ex = np.exp(-model.velocities @ np.array([x1, x2]))
            B = (dec.P_inv.T * ex[None, :]) @ dec.P_inv
            lam = np.asarray(dec.lam)[:, None]
            c1 = max(c1, np.linalg.svd(lam * B[K - r :, : K - r], compute_uv=False)[0])
            c2 = max(c2, np.linalg.svd(lam * B[K - r :, K - r :], compute_uv=False)[0])
    return 2.0 * c1 * C_INFLATE, 2.0 * c2 * C_INFLATE


def test_coupling_bounds_vs_svd_oracle(uniform_model, uniform_dec):
    C1, C2 = coupling_bounds(uniform_model, uniform_dec)
    o1, o2 = _lattice_oracle(uniform_model, uniform_dec)
    assert C1 > 0 and C2 > 0
    assert abs(C1 - o1) <= 1e-12 * o1
    assert abs(C2 - o2) <= 1e-12 * o2
    # vertex enumeration gives a lower bound on the supremum
    verts = []
    for x1 in (0.0, 1.0):
        for x2 in (0.0, 1.0):
            ex = np.exp(-uniform_model.velocities @ np.array([x1, x2]))
            B = (uniform_dec.P_inv.T * ex[None, :]) @ uniform_dec.P_inv
            verts.append(
                np.linalg.svd(
                    np.asarray(uniform_dec.lam)[:, None] * B[3:, :3], compute_uv=False
                )[0]
            )
    assert C1 >= 2.0 * max(verts)


def test_coupling_bounds_zero_collision():
    model = new_model(np.array([[1.0], [-1.0]]), np.zeros((2, 2)), 1.0)
    dec = decompose(model, np.ones(2))
    assert coupling_bounds(model, dec) == (0.0, 0.0)


def test_coupling_bounds_full_rank_diagonal():
    """P = I, Lambda0 = I, r = K: C2 reduces to 2 ||Lam|| M (times the margin)."""
    vel = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    model = new_model(vel, -np.eye(4), 1.0)
    dec = decompose(model, np.ones(4))
    assert dec.r == 4
    C1, C2 = coupling_bounds(model, dec)
    M, _ = geometry_extrema(model)
    assert C1 == 0.0
    assert abs(C2 - 2.0 * 1.0 * M * C_INFLATE) <= 1e-12 * C2


def test_certify_explicit_reference(ref_model, ref_dec):
    cert = certify_explicit(ref_model, ref_dec, 0.05)
    assert cert.dt_cfl == 0.05
    assert cert.alpha >= cert.M / cert.lambda_M
    assert cert.dt_source > 0
    assert cert.nu > 0
    # norm of P is sqrt(lambda_M) since P^T P = Lambda0
    assert abs(cert.norm_P - math.sqrt(cert.lambda_M)) <= 1e-12 * cert.norm_P
    # definition chain checks
    assert cert.C_amp == math.sqrt(2.0 * cert.lambda_M / cert.lambda_m)
    assert cert.nu == cert.m * cert.mu / (8.0 * cert.lambda_M * cert.alpha)
    assert cert.dt_source == cert.m * cert.mu / (
        8.0 * cert.M_tilde * cert.lambda_M * cert.alpha
    )


def test_alpha_formula_oracle(ref_model, ref_dec):
    """Re-evaluate the alpha formula from the certificate's own constants."""
    cert = certify_explicit(ref_model, ref_dec, 0.1)
    lam = cert.lam
    expected = max(
        2.0 * cert.C1 * cert.C1 * cert.lambda_M * cert.norm_P * cert.norm_P
        / (cert.m * cert.mu * cert.lambda_m * lam)
        + cert.C2 / lam,
        cert.M / cert.lambda_M,
    )
    assert cert.alpha == expected
    icert = certify_implicit(ref_model, ref_dec, 0.1)
    sigma = ref_model.sigma
    expected = max(
        cert.C1 * cert.C1 * cert.lambda_M * icert.C3 * cert.norm_P * cert.norm_P
        / (cert.m * cert.mu * lam * cert.lambda_m * sigma)
        + cert.C2 / lam,
        cert.M / cert.lambda_M,
    )
    assert icert.alpha == expected


def test_certificate_dx_independence(ref_model, ref_dec):
    certs = [certify_explicit(ref_model, ref_dec, dx) for dx in (0.5, 0.1, 0.02)]
    fields = [
        "M", "m", "lambda_M", "lambda_m", "mu", "C1", "C2", "M_tilde",
        "epsilon", "alpha", "dt_source", "nu", "C_amp",
    ]
    for name in fields:
        assert len({getattr(c, name) for c in certs}) == 1, name
    assert [c.dt_cfl for c in certs] == [0.5, 0.1, 0.02]


def test_implicit_sigma_monotonicity(ref_steady):
    lam0 = coplanar_lambda0(ref_steady)
    alphas = {}
    for sigma in (1.0, 0.1, 0.02):
        model = coplanar_model(ref_steady, sigma)
        cert = certify_implicit(model, decompose(model, lam0), 0.1)
        alphas[sigma] = cert.alpha
        assert cert.dt_cfl == 0.1  # independent of the source term
        assert cert.dt_source is None
    assert alphas[0.02] > alphas[0.1] > alphas[1.0]


def test_zero_collision_certificates():
    model = new_model(np.array([[1.0]]), np.zeros((1, 1)), 1.0)
    dec = decompose(model, np.ones(1))
    cert = certify_explicit(model, dec, 0.5)
    assert cert.dt_cfl == 0.5
    assert math.isinf(cert.dt_source)
    assert cert.alpha == cert.M / cert.lambda_M
    icert = certify_implicit(model, dec, 0.5)
    assert icert.alpha == cert.alpha and icert.nu == cert.nu
    d = cert.to_json_dict()
    assert d["dt_source"] is None and d["unbounded"] is True


def test_rank_zero_error(ref_model):
    model0 = new_model(ref_model.velocities, np.zeros((4, 4)), 1.0)
    dec0 = decompose(model0, np.ones(4))
    with pytest.raises(RankZero):
        certify_explicit(ref_model, dec0, 0.1)


def test_sandwich_on_random_fields(ref_model, ref_dec, ref_steady, rng):
    cert = certify_explicit(ref_model, ref_dec, 0.1)
    lam0 = coplanar_lambda0(ref_steady)
    grid = Grid(2, 10)
    for _ in range(100):
        f = Field(grid, 4, rng.standard_normal((4, 9, 9)))
        L = lyapunov_value(f, ref_model, lam0, cert.alpha)
        nsq = l2_norm(f) ** 2
        assert cert.alpha * cert.lambda_m * nsq <= L * (1.0 + 1e-12)
        assert L <= 2.0 * cert.lambda_M * cert.alpha * nsq * (1.0 + 1e-12)


def test_contraction_factor_in_unit_interval(ref_model, ref_dec):
    cert = certify_explicit(ref_model, ref_dec, 0.1)
    dt = min(cert.dt_cfl, cert.dt_source)
    assert 0.0 < 1.0 - cert.mu1 * dt < 1.0

"""Acceptance criteria, one test per criterion, each printing a PASS line.

The three simulation presets run once per session into a shared directory;
the Simulation-I runs use the certified (auto) time step and therefore take
a few minutes in total.
"""
import json
import math
import time

import numpy as np
import pytest

from kinlyap.boundary import FaceTrace, TrivialLaw, incoming_components
from kinlyap.certify import certify_explicit, geometry_extrema, interior_damping
from kinlyap.grid import Field, Grid
from kinlyap.lyapunov import boundary_term, boundary_term_coplanar
from kinlyap.output import read_trace_csv
from kinlyap.presets import SIM1_GRIDS, SIM3_SIGMAS, reproduce
from kinlyap.scheme import (
    advection_step,
    collision_explicit,
    collision_implicit,
    implicit_solver_build,
)
from kinlyap.structure import coplanar_lambda0, decompose, verify_decomposition

FE = (0.4, 0.3, 0.2, 0.6)


def _ok(n, text):
    print(f"PASS criterion {n}: {text}")


@pytest.fixture(scope="session")
def artifacts(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("presets")
    out = {"dir": outdir}
    for sim in ("sim1", "sim2", "sim3"):
        out[sim] = reproduce(sim, outdir, jobs=2)
    return out


def _summary(outdir, name):
    return json.loads((outdir / f"{name}.json").read_text())


def _trace(outdir, name):
    return read_trace_csv(outdir / f"{name}.csv")


def test_criterion_1_structural_decomposition(ref_steady, ref_model):
    t0 = time.perf_counter()
    dec = decompose(ref_model, coplanar_lambda0(ref_steady))
    res = verify_decomposition(ref_model, dec)
    elapsed = time.perf_counter() - t0
    assert res.residual_24 <= 1e-10
    assert res.residual_25 <= 1e-10
    assert res.residual_inv <= 1e-10
    assert dec.r == 1
    # independent oracle: rank-one eigenvalue q^T p
    p = np.array([1.0, 1.0, -1.0, -1.0])
    assert abs(dec.lam[0] - (-(ref_model.Q[0] @ p))) <= 1e-10
    assert abs(dec.lam[0] - 1.5) <= 1e-10
    assert elapsed < 1.0
    _ok(1, f"residuals {tuple(f'{r:.2e}' for r in res)}, r=1, Lam=1.5, {elapsed:.3f} s")


def test_criterion_2_certificate_chain(ref_model, ref_dec):
    M, m = geometry_extrema(ref_model)
    mu = interior_damping(ref_model)
    assert abs(M - math.e) <= 1e-12 * math.e
    assert abs(m - math.exp(-1.0)) <= 1e-12 * math.exp(-1.0)
    assert abs(mu - (1.0 - math.exp(-1.0))) <= 1e-12 * (1.0 - math.exp(-1.0))
    certs = {dx: certify_explicit(ref_model, ref_dec, dx) for dx in (0.5, 0.1, 0.02)}
    fields = [
        "M", "m", "lambda_M", "lambda_m", "mu", "C1", "C2", "M_tilde",
        "epsilon", "alpha", "dt_source", "nu", "C_amp", "lam", "norm_P",
    ]
    for name in fields:
        assert len({getattr(c, name) for c in certs.values()}) == 1, name
    assert {c.dt_cfl for c in certs.values()} == {0.5, 0.1, 0.02}
    _ok(2, "M=e, m=1/e, mu=1-1/e at 1e-12; certificates differ only in dt_cfl")


def test_criterion_3_per_step_contraction(artifacts):
    outdir = artifacts["dir"]
    checked = 0
    for N in SIM1_GRIDS:
        s = _summary(outdir, f"sim1_N{N}")
        # decay_violations counts every step of the run against
        # L(f^(n+1)) <= (1 - mu1 dt) L(f^n) + 1e-12 L(f^0)
        assert s["decay_violations"] == 0, (N, s["decay_violations"])
        assert s["steps_done"] * s["dt"] >= 5.0 - 1e-9
        cert = s["certificate"]
        tr = _trace(outdir, f"sim1_N{N}")
        l2_0 = tr[0, 2]
        envelope = cert["C_amp"] * np.exp(-cert["nu"] * tr[:, 1]) * l2_0
        assert np.all(tr[:, 2] <= envelope)
        checked += s["steps_done"]
    _ok(3, f"contraction held at 100% of {checked} steps; envelope at every recorded step")


def test_criterion_4_simulation_one(artifacts):
    outdir = artifacts["dir"]
    rates = {}
    for N in SIM1_GRIDS:
        s = _summary(outdir, f"sim1_N{N}")
        tr = _trace(outdir, f"sim1_N{N}")
        log_l2 = tr[:, 3]
        assert np.all(np.diff(log_l2) < 0.0), f"N={N}: trace not strictly decreasing"
        rates[N] = s["fit"]["rate"]
        assert rates[N] >= s["certificate"]["nu"]
    vals = list(rates.values())
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            ref = max(abs(vals[i]), abs(vals[j]))
            assert abs(vals[i] - vals[j]) <= 0.15 * ref, (vals[i], vals[j])
    _ok(4, f"four decaying traces; fitted rates {vals} pairwise within 15%")


def test_criterion_5_simulation_two(artifacts):
    outdir = artifacts["dir"]
    finals = {}
    for name in ("sim2_trivial", "sim2_gain45", "sim2_gain46"):
        s = _summary(outdir, name)
        assert not s["diverged"]
        assert s["final_l2"] < 0.1 * s["initial_l2"], name
        finals[name] = s["final_l2"]
    assert finals["sim2_trivial"] <= finals["sim2_gain45"]
    assert finals["sim2_trivial"] <= finals["sim2_gain46"]
    _ok(5, f"trivial law most dissipative at t=5: {finals}")


def test_criterion_6_simulation_three(artifacts):
    outdir = artifacts["dir"]
    rates = []
    for sigma in SIM3_SIGMAS:
        tag = str(sigma).replace(".", "p")
        s = _summary(outdir, f"sim3_implicit_s{tag}")
        assert not s["diverged"]
        assert s["final_l2"] < s["initial_l2"]
        rates.append(s["fit"]["rate"])
    assert rates[0] > rates[1] > rates[2], rates
    s = _summary(outdir, "sim3_explicit_s0p02")
    assert s["diverged"]
    tr = _trace(outdir, "sim3_explicit_s0p02")
    l2_0 = tr[0, 2]
    grown = tr[tr[:, 2] >= 10.0 * l2_0]
    assert grown.size and grown[0, 0] <= 200, "no 10x growth within 200 steps"
    _ok(6, f"implicit rates {rates} decrease with sigma; explicit diverged at step {int(grown[0, 0])}")


def test_criterion_7_implicit_contraction(ref_steady, ref_model, rng):
    lam0 = coplanar_lambda0(ref_steady)
    grid = Grid(2, 8)
    worst = 0.0
    for dt in (0.05, 1.0, 100.0):
        solver = implicit_solver_build(ref_model, dt)
        for _ in range(100):
            f = Field(grid, 4, rng.standard_normal((4, 7, 7)))
            out = collision_implicit(f, solver)
            before = float(np.einsum("kp,k,kp->", f.flat, lam0, f.flat))
            after = float(np.einsum("kp,k,kp->", out.flat, lam0, out.flat))
            worst = max(worst, (after - before) / before)
            assert after <= before * (1.0 + 1e-12)
    _ok(7, f"Lambda0-weighted norm never grew (worst relative excess {worst:.2e})")


def test_criterion_8_conservation(ref_steady, ref_model, ref_dec, rng):
    grid = Grid(2, 2)
    solver = implicit_solver_build(ref_model, 0.8)
    P, r = ref_dec.P, ref_dec.r
    worst = 0.0
    for _ in range(1000):
        cell = rng.standard_normal(4)
        f = Field(grid, 4, cell.reshape(4, 1, 1).copy())
        for out in (
            collision_explicit(f, ref_model, 0.8),
            collision_implicit(f, solver),
        ):
            dev = np.max(np.abs(
                (P @ out.values[:, 0, 0])[: 4 - r] - (P @ cell)[: 4 - r]
            ))
            worst = max(worst, dev)
            assert dev <= 1e-12
    _ok(8, f"u-components invariant across 1000 cells (worst deviation {worst:.2e})")


def test_criterion_9_advection_oracle(ref_model, rng):
    grid = Grid(2, 4)
    dt = 0.07
    c = dt / grid.dx
    f = Field(grid, 4, rng.standard_normal((4, 3, 3)))
    out = advection_step(f, ref_model, TrivialLaw(), dt)
    v = f.values
    expect = np.empty_like(v)
    for a in range(3):
        for b in range(3):
            left = v[0, a - 1, b] if a > 0 else 0.0
            expect[0, a, b] = v[0, a, b] - c * (1.0 * (v[0, a, b] - left))
            right = v[1, a + 1, b] if a < 2 else 0.0
            expect[1, a, b] = v[1, a, b] - c * (-1.0 * (right - v[1, a, b]))
            down = v[2, a, b - 1] if b > 0 else 0.0
            expect[2, a, b] = v[2, a, b] - c * (1.0 * (v[2, a, b] - down))
            up = v[3, a, b + 1] if b < 2 else 0.0
            expect[3, a, b] = v[3, a, b] - c * (-1.0 * (up - v[3, a, b]))
    assert np.array_equal(out.values, expect)
    for _ in range(100):
        f = Field(grid, 4, rng.standard_normal((4, 3, 3)))
        adv = advection_step(f, ref_model, TrivialLaw(), grid.dx)
        for k in range(4):
            assert np.max(np.abs(adv.values[k])) <= np.max(np.abs(f.values[k])) + 1e-14
    _ok(9, "bitwise oracle match on the 3x3 interior; max principle on 100 fields")


def test_criterion_10_dual_boundary_term(ref_steady, ref_model, rng):
    lam0 = coplanar_lambda0(ref_steady)
    grid = Grid(2, 8)
    alpha = 13.0
    worst = 0.0
    for _ in range(100):
        f = Field(grid, 4, rng.standard_normal((4, 7, 7)))
        inc = FaceTrace.zeros(ref_model, grid)
        for axis in range(2):
            for side in (0, 1):
                for k in incoming_components(ref_model, axis, side):
                    inc.data[(axis, side)][k] = rng.standard_normal(7)
        a = boundary_term(f, inc, ref_model, lam0, alpha)
        b = boundary_term_coplanar(f, inc, ref_steady, alpha)
        rel = abs(a - b) / max(1.0, abs(a), abs(b))
        worst = max(worst, rel)
        assert rel <= 1e-12
    _ok(10, f"general and closed-form boundary terms agree (worst {worst:.2e})")

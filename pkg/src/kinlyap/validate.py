"""Self-check suite behind the `validate` subcommand.

Each check re-derives an invariant from first principles (independent oracles
where possible) and prints one pass/fail line; the exit status is nonzero if
anything fails.
"""
from __future__ import annotations

import math
import traceback

import numpy as np

from .boundary import FaceTrace, TrivialLaw, incoming_components
from .certify import certify_explicit, geometry_extrema, interior_damping
from .config import CoplanarModelSpec, LawSpec, RunConfig
from .grid import Field, Grid, l2_norm
from .lyapunov import boundary_term, boundary_term_coplanar, fit_decay_rate, lyapunov_value
from .model import CoplanarSteadyState, coplanar_model
from .runner import run_simulation
from .scheme import collision_explicit, collision_implicit, implicit_solver_build, split_step
from .structure import coplanar_lambda0, decompose, verify_decomposition

_STEADY = CoplanarSteadyState(U=1.0, f_e=(0.4, 0.3, 0.2, 0.6))
_UNIFORM = CoplanarSteadyState(U=1.0, f_e=(0.25, 0.25, 0.25, 0.25))


def _setup(s=_STEADY, sigma=1.0):
    model = coplanar_model(s, sigma)
    lam0 = coplanar_lambda0(s)
    dec = decompose(model, lam0)
    return model, lam0, dec


def _random_field(rng, grid: Grid, K: int) -> Field:
    return Field(grid, K, rng.standard_normal((K,) + (grid.n,) * grid.d))


def _random_incoming(rng, model, grid) -> FaceTrace:
    ft = FaceTrace.zeros(model, grid)
    for axis in range(grid.d):
        for side in (0, 1):
            for k in incoming_components(model, axis, side):
                ft.data[(axis, side)][k] = rng.standard_normal(grid.n ** (grid.d - 1))
    return ft


def check_decomposition():
    for s in (_STEADY, _UNIFORM):
        model, lam0, dec = _setup(s)
        res = verify_decomposition(model, dec)
        assert max(res) <= 1e-10, f"residuals {res}"
        assert dec.r == 1
        # rank-one oracle: the nonzero eigenvalue of Q is q^T p
        p = np.array([1.0, 1.0, -1.0, -1.0])
        q = model.Q[0]
        assert abs(dec.lam[0] - (-(q @ p))) <= 1e-10


def check_certificate_closed_forms():
    model, lam0, dec = _setup()
    M, m = geometry_extrema(model)
    assert abs(M - math.e) <= 1e-12 * math.e
    assert abs(m - 1.0 / math.e) <= 1e-12 / math.e
    mu = interior_damping(model)
    assert abs(mu - (1.0 - 1.0 / math.e)) <= 1e-12
    certs = [certify_explicit(model, dec, dx) for dx in (0.5, 0.1, 0.02)]
    for field_name in ("M", "m", "mu", "C1", "C2", "alpha", "nu", "dt_source", "epsilon"):
        vals = {getattr(c, field_name) for c in certs}
        assert len(vals) == 1, f"{field_name} depends on dx: {vals}"
    assert len({c.dt_cfl for c in certs}) == 3


def check_sandwich():
    model, lam0, dec = _setup()
    cert = certify_explicit(model, dec, 0.1)
    rng = np.random.default_rng(7)
    grid = Grid(2, 10)
    for _ in range(100):
        f = _random_field(rng, grid, 4)
        L = lyapunov_value(f, model, lam0, cert.alpha)
        nsq = l2_norm(f) ** 2
        assert cert.alpha * cert.lambda_m * nsq <= L * (1 + 1e-12)
        assert L <= 2.0 * cert.lambda_M * cert.alpha * nsq * (1 + 1e-12)


def check_advection_oracle():
    model, lam0, dec = _setup()
    grid = Grid(2, 4)
    rng = np.random.default_rng(11)
    f = _random_field(rng, grid, 4)
    dt = 0.02
    c = dt / grid.dx
    out = split_step(f, model, TrivialLaw(), dt, "explicit")
    # hand-coded convex-combination oracle on the 3x3 interior
    tilde = np.empty_like(f.values)
    v = f.values
    for a in range(3):
        for b in range(3):
            left = v[0, a - 1, b] if a > 0 else 0.0
            tilde[0, a, b] = (1 - c) * v[0, a, b] + c * left
            right = v[1, a + 1, b] if a < 2 else 0.0
            tilde[1, a, b] = (1 - c) * v[1, a, b] + c * right
            bottom = v[2, a, b - 1] if b > 0 else 0.0
            tilde[2, a, b] = (1 - c) * v[2, a, b] + c * bottom
            top = v[3, a, b + 1] if b < 2 else 0.0
            tilde[3, a, b] = (1 - c) * v[3, a, b] + c * top
    expected = np.empty_like(tilde)
    for a in range(3):
        for b in range(3):
            cell = tilde[:, a, b]
            expected[:, a, b] = cell + dt * (model.Q @ cell)
    assert np.allclose(out.values, expected, rtol=0, atol=1e-13)
    # per-component max principle of the advection sub-step under the CFL bound
    from .scheme import advection_step

    for _ in range(100):
        f = _random_field(rng, grid, 4)
        adv = advection_step(f, model, TrivialLaw(), grid.dx)
        for k in range(4):
            assert np.max(np.abs(adv.values[k])) <= np.max(np.abs(f.values[k])) + 1e-14


def check_conservation():
    model, lam0, dec = _setup()
    rng = np.random.default_rng(3)
    grid = Grid(2, 2)
    solver = implicit_solver_build(model, 0.3)
    for _ in range(1000):
        cell = rng.standard_normal(4)
        f = Field(grid, 4, cell.reshape(4, 1, 1).copy())
        for out in (collision_explicit(f, model, 0.3), collision_implicit(f, solver)):
            u_before = (dec.P @ cell)[: 4 - dec.r]
            u_after = (dec.P @ out.values[:, 0, 0])[: 4 - dec.r]
            assert np.max(np.abs(u_after - u_before)) <= 1e-12


def check_implicit_contraction():
    model, lam0, dec = _setup()
    rng = np.random.default_rng(5)
    grid = Grid(2, 6)
    for dt in (0.05, 1.0, 100.0):
        solver = implicit_solver_build(model, dt)
        for _ in range(50):
            f = _random_field(rng, grid, 4)
            out = collision_implicit(f, solver)
            before = np.einsum("kp,k,kp->", f.flat, lam0, f.flat)
            after = np.einsum("kp,k,kp->", out.flat, lam0, out.flat)
            assert after <= before * (1 + 1e-12)


def check_dual_boundary_term():
    model, lam0, dec = _setup()
    grid = Grid(2, 8)
    cert = certify_explicit(model, dec, grid.dx)
    rng = np.random.default_rng(13)
    for _ in range(100):
        f = _random_field(rng, grid, 4)
        inc = _random_incoming(rng, model, grid)
        general = boundary_term(f, inc, model, lam0, cert.alpha)
        closed = boundary_term_coplanar(f, inc, _STEADY, cert.alpha)
        scale = max(1.0, abs(general), abs(closed))
        assert abs(general - closed) <= 1e-12 * scale


def check_per_step_decay():
    # certified explicit run, shortened; and a full certified implicit run
    cfg = RunConfig(
        model=CoplanarModelSpec(U=1.0, f_e=_STEADY.f_e, sigma=1.0),
        N=10, dt="auto", steps=1500, scheme="explicit", law=LawSpec("trivial"),
    )
    summary = run_simulation(cfg).summary
    assert summary["decay_violations"] == 0, summary["decay_violations"]
    assert summary["boundary_term_max"] <= 0.0
    cfg = RunConfig(
        model=CoplanarModelSpec(U=1.0, f_e=_STEADY.f_e, sigma=0.1),
        N=10, dt=0.05, t_final=5.0, scheme="implicit", law=LawSpec("trivial"),
    )
    summary = run_simulation(cfg).summary
    assert summary["decay_violations"] == 0
    assert summary["envelope_ok"]


def check_determinism():
    cfg = RunConfig(
        model=CoplanarModelSpec(U=1.0, f_e=_STEADY.f_e, sigma=1.0),
        N=6, dt=0.05, steps=200, scheme="explicit", law=LawSpec("gain45", k=0.5),
        force=True,
    )
    r1 = run_simulation(cfg)
    r2 = run_simulation(cfg)
    assert all(
        (a.l2 == b.l2) and (a.L == b.L) and (a.B == b.B)
        for a, b in zip(r1.rows, r2.rows)
    )
    assert np.array_equal(r1.final_field.values, r2.final_field.values)


def check_rate_fit():
    t = np.linspace(0.0, 7.0, 50)
    rate, r2 = fit_decay_rate(list(zip(t, 3.0 * np.exp(-0.7 * t))))
    assert abs(rate - 0.7) <= 1e-9
    assert abs(r2 - 1.0) <= 1e-12


CHECKS = [
    ("decomposition residuals and rank-one oracle", check_decomposition),
    ("certificate closed forms and dx-independence", check_certificate_closed_forms),
    ("Lyapunov sandwich on random fields", check_sandwich),
    ("advection oracle and max principle", check_advection_oracle),
    ("collision conservation of the u-components", check_conservation),
    ("implicit weighted-norm contraction", check_implicit_contraction),
    ("dual boundary-term equivalence", check_dual_boundary_term),
    ("per-step Lyapunov decay on certified runs", check_per_step_decay),
    ("bitwise run determinism", check_determinism),
    ("decay-rate fit on synthetic data", check_rate_fit),
]


def run_validation(verbose: bool = True) -> int:
    failures = 0
    for name, fn in CHECKS:
        try:
            fn()
        except Exception:
            failures += 1
            if verbose:
                print(f"FAIL {name}")
                traceback.print_exc()
        else:
            if verbose:
                print(f"PASS {name}")
    if verbose and failures:
        print(f"{failures} of {len(CHECKS)} checks failed")
    return 1 if failures else 0

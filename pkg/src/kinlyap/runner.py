"""Run driver: certificate resolution, fused stepping, diagnostics, summaries.

Runs with the shipped law family (trivial / coplanar gains) execute entirely
inside one compiled loop; general linear laws fall back to a per-step Python
loop built from the same kernels, so both paths share identical arithmetic.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .boundary import (
    CoplanarGain45Law,
    CoplanarGain46Law,
    TrivialLaw,
    admissible_gain_45,
    admissible_gains_46,
)
from .certify import StabilityCertificate, certify_explicit, certify_implicit
from .config import OutputSpec, RunConfig, build_law, build_model
from .errors import CflViolation, ConfigError, NotCoplanar, UncertifiedTimeStep
from .grid import Field, Grid, constant_field, sample_initial
from .lyapunov import (
    DECAY_RTOL,
    StepDiagnostics,
    boundary_weight_tables,
    weight_array,
)
from .model import KineticModel, coplanar_speed
from .output import write_summary_json, write_svg, write_trace_csv
from .scheme import implicit_solver_build
from .structure import (
    StructuralDecomposition,
    coplanar_lambda0,
    decompose,
    verify_decomposition,
)

#: a run aborts (diverged) once l2 exceeds this factor times the initial l2
DIVERGENCE_GUARD = 1e12


@dataclass
class Problem:
    """Everything resolved from a RunConfig before stepping."""

    config: RunConfig
    model: KineticModel
    steady: object | None
    grid: Grid
    lambda0: np.ndarray
    dec: StructuralDecomposition
    cert: StabilityCertificate
    law: object
    dt: float
    nsteps: int
    warnings: list[str]


@dataclass
class RunResult:
    problem: Problem
    rows: list[StepDiagnostics]
    summary: dict
    final_field: Field


def resolve_dt(cfg_dt, cert: StabilityCertificate, force: bool) -> tuple[float, list[str]]:
    warnings = []
    if cfg_dt == "auto":
        if cert.scheme_kind == "explicit" and cert.dt_source is not None:
            dt = 0.9 * min(cert.dt_cfl, cert.dt_source)
        else:
            dt = 0.9 * cert.dt_cfl
        return dt, warnings
    dt = float(cfg_dt)
    if dt > cert.dt_cfl * (1.0 + 1e-12):
        if not force:
            raise CflViolation(dt, cert.dt_cfl)
        warnings.append(f"forced: dt={dt!r} exceeds the CFL bound {cert.dt_cfl!r}")
    if (
        cert.scheme_kind == "explicit"
        and cert.dt_source is not None
        and dt > cert.dt_source * (1.0 + 1e-12)
    ):
        if not force:
            raise UncertifiedTimeStep(dt, cert.dt_source)
        warnings.append(
            f"forced: dt={dt!r} exceeds the certified source bound {cert.dt_source!r}"
        )
    return dt, warnings


def build_problem(cfg: RunConfig, config_dir: Path | None = None) -> Problem:
    model, steady = build_model(cfg.model)
    if steady is not None:
        lambda0 = coplanar_lambda0(steady)
    elif getattr(cfg.model, "lambda0", None) is not None:
        lambda0 = np.asarray(cfg.model.lambda0, dtype=np.float64)
    elif not np.any(model.Q != 0.0):
        lambda0 = np.ones(model.K)  # any positive diagonal works when Q = 0
    else:
        raise ConfigError(
            "generic models with Q != 0 need 'lambda0' making Lambda0 Q symmetric"
        )
    grid = Grid(d=model.d, N=cfg.N)
    dec = decompose(model, lambda0)
    certifier = certify_explicit if cfg.scheme == "explicit" else certify_implicit
    cert = certifier(model, dec, grid.dx)
    dt, warnings = resolve_dt(cfg.dt, cert, cfg.force)
    law = build_law(cfg.law, model, grid, config_dir)

    if steady is not None and cfg.law.kind == "gain45":
        kmax = admissible_gain_45(cert.alpha, steady)
        if abs(cfg.law.k) > kmax:
            warnings.append(
                f"gain |k|={abs(cfg.law.k)!r} exceeds the sufficient bound {kmax!r}; "
                "relying on the per-step boundary-term diagnostic"
            )
    if steady is not None and cfg.law.kind == "gain46":
        k1max, k2max = admissible_gains_46(cert.alpha, steady)
        if abs(cfg.law.k1) > k1max or abs(cfg.law.k2) > k2max:
            warnings.append(
                f"gains |k1|={abs(cfg.law.k1)!r}, |k2|={abs(cfg.law.k2)!r} exceed the "
                f"sufficient bounds ({k1max!r}, {k2max!r}); "
                "relying on the per-step boundary-term diagnostic"
            )

    if cfg.steps is not None:
        nsteps = cfg.steps
    else:
        nsteps = int(math.ceil(cfg.t_final / dt - 1e-9)) if cfg.t_final > 0 else 0
    return Problem(
        config=cfg,
        model=model,
        steady=steady,
        grid=grid,
        lambda0=lambda0,
        dec=dec,
        cert=cert,
        law=law,
        dt=dt,
        nsteps=nsteps,
        warnings=warnings,
    )


def initial_field(prob: Problem, f0=None) -> Field:
    if f0 is not None:
        return sample_initial(prob.grid, prob.model.K, f0)
    vec = prob.config.initial
    if vec is None:
        vec = np.ones(prob.model.K)
    elif len(vec) != prob.model.K:
        raise ConfigError(
            f"initial constant has {len(vec)} entries, model has {prob.model.K}"
        )
    return constant_field(prob.grid, np.asarray(vec, dtype=np.float64))


def _gain_params(prob: Problem, inc_lo: np.ndarray, face_lo: np.ndarray):
    """Kernel parameters for the coplanar bottom-edge gain family."""
    law = prob.law
    if isinstance(law, CoplanarGain45Law):
        k1, k2 = law.k, 0.0
    else:
        k1, k2 = law.k1, law.k2
    # bottom incoming f3 <- k1 * left-edge outgoing f2 + k2 * bottom-edge outgoing f4
    target = inc_lo[2, 1]
    return target, k1, 1, face_lo[0], k2, 3, face_lo[1]


def run_simulation(cfg: RunConfig, f0=None, config_dir: Path | None = None) -> RunResult:
    prob = build_problem(cfg, config_dir)
    model, grid, cert = prob.model, prob.grid, prob.cert
    field = initial_field(prob, f0)
    K, d, n = model.K, grid.d, grid.n
    mf = n ** (d - 1)

    strides, coord, tface, face_lo, face_hi = _kernels.build_tables(d, n)
    w = weight_array(model, prob.lambda0, cert.alpha, grid)
    w_near, w_far, pref = boundary_weight_tables(model, prob.lambda0, cert.alpha, grid)
    inc_lo = np.zeros((K, d, mf))
    inc_hi = np.zeros((K, d, mf))

    fused_law_kind = None
    if isinstance(prob.law, TrivialLaw):
        fused_law_kind = 0
    elif isinstance(prob.law, (CoplanarGain45Law, CoplanarGain46Law)):
        if coplanar_speed(model) is None:
            raise NotCoplanar("gain laws need the coplanar velocity layout")
        fused_law_kind = 1

    if cfg.scheme == "implicit":
        solver = implicit_solver_build(model, prob.dt)
        lu, piv = solver.lu, solver.piv
    else:
        lu, piv = np.eye(K), np.arange(K, dtype=np.int64)

    fflat = field.flat.copy()
    g = np.empty_like(fflat)
    acc = np.empty(fflat.shape[1])
    dxd = grid.dx**d
    contraction = 1.0 - cert.mu1 * prob.dt
    nrec_max = prob.nsteps // cfg.record_every + 3
    rec_step = np.zeros(nrec_max, dtype=np.int64)
    rec_l2sq = np.zeros(nrec_max)
    rec_L = np.zeros(nrec_max)
    rec_B = np.zeros(nrec_max)
    rec_Lprev = np.zeros(nrec_max)

    t0 = time.perf_counter()
    if fused_law_kind is not None:
        if fused_law_kind == 1:
            gt, gk1, s1k, s1i, gk2, s2k, s2i = _gain_params(prob, inc_lo, face_lo)
        else:
            gt = inc_lo[0, 0]
            gk1, s1k, s1i, gk2, s2k, s2i = 0.0, 0, face_lo[0], 0.0, 0, face_lo[0]
        nrec, steps_done, diverged, viol, max_excess, minB, maxB = _kernels.fused_run(
            fflat, g, model.velocities, prob.dt / grid.dx,
            model.Q, prob.dt / model.sigma, lu, piv,
            cfg.scheme == "implicit", acc,
            coord, tface, strides, n, inc_lo, inc_hi,
            fused_law_kind, gt, gk1, s1k, s1i, gk2, s2k, s2i,
            w, w_near, w_far, pref, face_lo, face_hi, dxd,
            True, contraction, DECAY_RTOL, DIVERGENCE_GUARD**2,
            prob.nsteps, cfg.record_every,
            rec_step, rec_l2sq, rec_L, rec_B, rec_Lprev,
        )
    else:
        nrec, steps_done, diverged, viol, max_excess, minB, maxB = _python_run(
            prob, fflat, g, acc, strides, coord, tface, face_lo, face_hi,
            inc_lo, inc_hi, w, w_near, w_far, pref, dxd, contraction,
            (lu, piv) if cfg.scheme == "implicit" else None,
            rec_step, rec_l2sq, rec_L, rec_B, rec_Lprev,
        )
    wall = time.perf_counter() - t0

    rows = _make_rows(prob, nrec, rec_step, rec_l2sq, rec_L, rec_B, rec_Lprev)
    summary = _make_summary(
        prob, rows, steps_done, diverged, viol, max_excess, minB, maxB, wall
    )
    final = Field(grid, K, fflat.reshape(field.values.shape), steps_done)
    return RunResult(problem=prob, rows=rows, summary=summary, final_field=final)


def _python_run(
    prob, fflat, g, acc, strides, coord, tface, face_lo, face_hi,
    inc_lo, inc_hi, w, w_near, w_far, pref, dxd, contraction, solver_lu_piv,
    rec_step, rec_l2sq, rec_L, rec_B, rec_Lprev,
):
    """Per-step loop for laws outside the fused family; mirrors fused_run."""
    from .boundary import extract_outgoing

    model, grid, cfg = prob.model, prob.grid, prob.config
    n = grid.n
    nrec = 0
    l2sq0 = 0.0
    L0 = 0.0
    Lprev = math.nan
    viol = 0
    max_excess = -math.inf
    minB = math.inf
    maxB = -math.inf
    diverged = False
    step = 0
    guard_sq = DIVERGENCE_GUARD**2
    shape = (model.K,) + (n,) * grid.d
    while True:
        field = Field(grid, model.K, fflat.reshape(shape), step)
        incoming = prob.law.apply(extract_outgoing(field, model), step)
        ilo, ihi = incoming.pack()
        inc_lo[:, :, :] = ilo
        inc_hi[:, :, :] = ihi
        raw2, rawL = _kernels.l2_and_lyap(fflat, w)
        l2v = raw2 * dxd
        Lv = rawL * dxd
        B = _kernels.boundary_term_raw(
            fflat, inc_lo, inc_hi, model.velocities, w_near, w_far, pref, face_lo, face_hi
        )
        if step == 0:
            l2sq0, L0 = l2v, Lv
        minB = min(minB, B)
        maxB = max(maxB, B)
        if step > 0:
            bound = contraction * Lprev + DECAY_RTOL * L0
            excess = (Lv - bound) / L0 if L0 > 0 else (Lv - bound)
            if Lv > bound:
                viol += 1
            max_excess = max(max_excess, excess)
        bad = not (l2v <= guard_sq * l2sq0)
        if step % cfg.record_every == 0 or step == prob.nsteps or bad:
            rec_step[nrec] = step
            rec_l2sq[nrec] = l2v
            rec_L[nrec] = Lv
            rec_B[nrec] = B
            rec_Lprev[nrec] = Lprev
            nrec += 1
        Lprev = Lv
        if bad:
            diverged = True
            break
        if step >= prob.nsteps:
            break
        _kernels.adv_step(
            fflat, g, model.velocities, prob.dt / grid.dx,
            coord, tface, strides, n, inc_lo, inc_hi,
        )
        if solver_lu_piv is not None:
            _kernels.coll_implicit(g, fflat, *solver_lu_piv)
        else:
            _kernels.coll_explicit(g, fflat, model.Q, prob.dt / model.sigma, acc)
        step += 1
    return nrec, step, diverged, viol, max_excess, minB, maxB


def _make_rows(prob, nrec, rec_step, rec_l2sq, rec_L, rec_B, rec_Lprev):
    cert = prob.cert
    l2_0 = math.sqrt(rec_l2sq[0]) if nrec else 0.0
    rows = []
    for i in range(nrec):
        step = int(rec_step[i])
        t = step * prob.dt
        l2 = math.sqrt(rec_l2sq[i])
        ratio = rec_L[i] / rec_Lprev[i] if rec_Lprev[i] > 0 else math.nan
        envelope = cert.C_amp * math.exp(-cert.nu * t) * l2_0
        rows.append(
            StepDiagnostics(
                n=step, t=t, l2=l2, L=rec_L[i], B=rec_B[i],
                per_step_ratio=ratio, bound_ok=bool(l2 <= envelope),
            )
        )
    return rows


def _admissible_gains_dict(prob) -> dict | None:
    if prob.steady is None:
        return None
    k1max, k2max = admissible_gains_46(prob.cert.alpha, prob.steady)
    return {
        "k_max_45": admissible_gain_45(prob.cert.alpha, prob.steady),
        "k1_max_46": k1max,
        "k2_max_46": k2max,
    }


def _make_summary(prob, rows, steps_done, diverged, viol, max_excess, minB, maxB, wall):
    from .lyapunov import fit_decay_rate
    from .errors import InsufficientData, NonPositiveNorm

    res = verify_decomposition(prob.model, prob.dec)
    fit = None
    if rows:
        try:
            rate, r2 = fit_decay_rate([(r.t, r.l2) for r in rows])
            fit = {
                "rate": rate,
                "r2": r2,
                "window_start_row": len(rows) // 2,
                "n_rows": len(rows),
            }
        except (InsufficientData, NonPositiveNorm):
            fit = None
    return {
        "schema": 1,
        "config": prob.config.to_dict(),
        "dt": prob.dt,
        "steps_planned": prob.nsteps,
        "steps_done": int(steps_done),
        "certificate": prob.cert.to_json_dict(),
        "admissible_gains": _admissible_gains_dict(prob),
        "decomposition_residuals": {
            "residual_24": res.residual_24,
            "residual_25": res.residual_25,
            "residual_inv": res.residual_inv,
        },
        "initial_l2": rows[0].l2 if rows else None,
        "final_l2": rows[-1].l2 if rows else None,
        "diverged": bool(diverged),
        "boundary_term_min": minB,
        "boundary_term_max": maxB,
        "decay_violations": int(viol),
        "max_decay_excess": max_excess,
        "envelope_ok": all(r.bound_ok for r in rows),
        "fit": fit,
        "wall_time_s": wall,
        "warnings": list(prob.warnings),
    }


def write_outputs(result: RunResult, outputs: OutputSpec | None = None) -> None:
    out = outputs if outputs is not None else result.problem.config.outputs
    if out.trace_csv:
        write_trace_csv(result.rows, result.problem.dt, out.trace_csv)
    if out.summary_json:
        write_summary_json(result.summary, out.summary_json)
    if out.svg:
        rows = [r for r in result.rows if r.l2 > 0]
        write_svg(
            out.svg,
            [("run", [r.t for r in rows], [math.log(r.l2) for r in rows])],
            xlabel="t",
            ylabel="log l2",
            title="log l2-norm vs time",
        )


def certify_only(cfg: RunConfig) -> dict:
    """Certificate report without stepping (the `certify` subcommand)."""
    prob = build_problem(cfg)
    res = verify_decomposition(prob.model, prob.dec)
    return {
        "schema": 1,
        "config": cfg.to_dict(),
        "certificate": prob.cert.to_json_dict(),
        "dt_auto": resolve_dt("auto", prob.cert, True)[0],
        "admissible_gains": _admissible_gains_dict(prob),
        "decomposition_residuals": {
            "residual_24": res.residual_24,
            "residual_25": res.residual_25,
            "residual_inv": res.residual_inv,
        },
        "warnings": list(prob.warnings),
    }

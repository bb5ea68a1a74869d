"""Reproduction presets for the three coplanar simulations.

All presets share U = 1, the steady state (0.4, 0.3, 0.2, 0.6), the constant
initial condition (1, 1, 1, 1) and t_final = 5.  The Simulation-I grid list
N in {10, 20, 40, 80} is a documented choice (the source figures do not state
their grids).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import (
    CoplanarModelSpec,
    LawSpec,
    OutputSpec,
    RunConfig,
)
from .output import read_trace_csv, write_svg
from .runner import run_simulation, write_outputs

STEADY = CoplanarModelSpec(U=1.0, f_e=(0.4, 0.3, 0.2, 0.6), sigma=1.0)
T_FINAL = 5.0
SIM1_GRIDS = (10, 20, 40, 80)
SIM3_SIGMAS = (1.0, 0.1, 0.02)
PRESETS = ("sim1", "sim2", "sim3")


def _out(outdir: Path, name: str) -> OutputSpec:
    return OutputSpec(
        trace_csv=str(outdir / f"{name}.csv"),
        summary_json=str(outdir / f"{name}.json"),
    )


def sim1_configs(outdir: Path) -> list[tuple[str, RunConfig]]:
    """Explicit scheme, trivial law, four spatial grids, certified dt."""
    runs = []
    for N in SIM1_GRIDS:
        name = f"sim1_N{N}"
        runs.append(
            (
                name,
                RunConfig(
                    model=STEADY,
                    N=N,
                    dt="auto",
                    t_final=T_FINAL,
                    scheme="explicit",
                    law=LawSpec("trivial"),
                    outputs=_out(outdir, name),
                    record_every=1024,
                ),
            )
        )
    return runs


def sim2_configs(outdir: Path) -> list[tuple[str, RunConfig]]:
    """Explicit scheme at dx = 0.05, dt = 0.01 with the three boundary laws.

    dt exceeds the certified source bound, so these runs carry force=True and
    rely on the recorded diagnostics, as the source experiments do.
    """
    laws = [
        ("sim2_trivial", LawSpec("trivial")),
        ("sim2_gain45", LawSpec("gain45", k=1.0)),
        ("sim2_gain46", LawSpec("gain46", k1=1.0, k2=1.0)),
    ]
    return [
        (
            name,
            RunConfig(
                model=STEADY,
                N=20,
                dt=0.01,
                t_final=T_FINAL,
                scheme="explicit",
                law=law,
                outputs=_out(outdir, name),
                force=True,
                record_every=1,
            ),
        )
        for name, law in laws
    ]


def _sigma_tag(sigma: float) -> str:
    return str(sigma).replace(".", "p")


def sim3_configs(outdir: Path) -> list[tuple[str, RunConfig]]:
    """Semi-implicit runs across sigma, plus the unstable forced explicit run."""
    runs = []
    for sigma in SIM3_SIGMAS:
        name = f"sim3_implicit_s{_sigma_tag(sigma)}"
        runs.append(
            (
                name,
                RunConfig(
                    model=CoplanarModelSpec(U=1.0, f_e=STEADY.f_e, sigma=sigma),
                    N=10,
                    dt=0.05,
                    t_final=T_FINAL,
                    scheme="implicit",
                    law=LawSpec("trivial"),
                    outputs=_out(outdir, name),
                    record_every=1,
                ),
            )
        )
    name = "sim3_explicit_s0p02"
    runs.append(
        (
            name,
            RunConfig(
                model=CoplanarModelSpec(U=1.0, f_e=STEADY.f_e, sigma=0.02),
                N=10,
                dt=0.05,
                t_final=T_FINAL,
                scheme="explicit",
                law=LawSpec("trivial"),
                outputs=_out(outdir, name),
                force=True,
                record_every=1,
            ),
        )
    )
    return runs


def preset_configs(sim: str, outdir: Path) -> list[tuple[str, RunConfig]]:
    if sim == "sim1":
        return sim1_configs(outdir)
    if sim == "sim2":
        return sim2_configs(outdir)
    if sim == "sim3":
        return sim3_configs(outdir)
    raise ValueError(f"unknown preset {sim!r}; expected one of {PRESETS}")


def _labels(sim: str, names: list[str]) -> list[str]:
    if sim == "sim1":
        return [f"N={n.split('_N')[1]}" for n in names]
    if sim == "sim2":
        return [n.split("_", 1)[1] for n in names]
    out = []
    for n in names:
        kind, tag = n.split("_")[1], n.split("_s")[1].replace("p", ".")
        out.append(f"{kind} sigma={tag}")
    return out


def _run_one(args) -> dict:
    name, cfg = args
    result = run_simulation(cfg)
    write_outputs(result)
    return result.summary


def default_jobs() -> int:
    """Fan-out for independent preset runs, capped by KINLYAP_THREADS (0 = sequential)."""
    raw = os.environ.get("KINLYAP_THREADS", "0")
    try:
        return max(0, int(raw))
    except ValueError:
        return 0


def reproduce(sim: str, outdir, jobs: int | None = None) -> list[dict]:
    """Run one preset into outdir; writes per-run CSV/JSON and a combined SVG."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    runs = preset_configs(sim, outdir)
    if jobs is None:
        jobs = default_jobs()
    if jobs > 1 and len(runs) > 1:
        # big grids first so the pool stays busy
        order = sorted(range(len(runs)), key=lambda i: -runs[i][1].N)
        with ProcessPoolExecutor(max_workers=min(jobs, len(runs))) as pool:
            done = list(pool.map(_run_one, [runs[i] for i in order]))
        summaries = [None] * len(runs)
        for pos, i in enumerate(order):
            summaries[i] = done[pos]
    else:
        summaries = [_run_one(r) for r in runs]

    series = []
    names = [name for name, _ in runs]
    for (name, cfg), label in zip(runs, _labels(sim, names)):
        data = read_trace_csv(cfg.outputs.trace_csv)
        keep = data[:, 2] > 0
        series.append((label, data[keep, 1], [math.log(v) for v in data[keep, 2]]))
    write_svg(
        outdir / f"{sim}.svg",
        series,
        xlabel="t",
        ylabel="log l2-norm",
        title=f"{sim}: time evolution of the log l2-norm",
    )
    return summaries

"""JSON run configuration: parsing, strict validation, law construction.

Schema version 1.  Unknown keys are errors so typos fail fast; the published
schema lives in config.schema.json at the repository root.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boundary import (
    CoplanarGain45Law,
    CoplanarGain46Law,
    TrivialLaw,
    linear_law_from_triplets,
)
from .errors import ConfigError
from .grid import Grid
from .model import CoplanarSteadyState, KineticModel, coplanar_model, new_model

SCHEMA_VERSION = 1


def _require_keys(d: dict, allowed: set, required: set, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


@dataclass(frozen=True)
class CoplanarModelSpec:
    U: float
    f_e: tuple[float, float, float, float]
    sigma: float = 1.0

    def to_dict(self) -> dict:
        return {"coplanar": {"U": self.U, "f_e": list(self.f_e), "sigma": self.sigma}}


@dataclass(frozen=True)
class GenericModelSpec:
    velocities: tuple
    Q: tuple
    sigma: float = 1.0
    lambda0: tuple | None = None

    def to_dict(self) -> dict:
        out = {
            "velocities": [list(r) for r in self.velocities],
            "Q": [list(r) for r in self.Q],
            "sigma": self.sigma,
        }
        if self.lambda0 is not None:
            out["lambda0"] = list(self.lambda0)
        return {"generic": out}


@dataclass(frozen=True)
class LawSpec:
    kind: str  # trivial | gain45 | gain46 | linear
    k: float = 0.0
    k1: float = 0.0
    k2: float = 0.0
    matrix_csv: str | None = None

    def to_dict(self) -> dict:
        if self.kind == "gain45":
            return {"law": "gain45", "k": self.k}
        if self.kind == "gain46":
            return {"law": "gain46", "k1": self.k1, "k2": self.k2}
        if self.kind == "linear":
            return {"law": "linear", "matrix_csv": self.matrix_csv}
        return {"law": "trivial"}


@dataclass(frozen=True)
class OutputSpec:
    trace_csv: str | None = None
    summary_json: str | None = None
    svg: str | None = None

    def to_dict(self) -> dict:
        out = {}
        for name in ("trace_csv", "summary_json", "svg"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        return out


@dataclass(frozen=True)
class RunConfig:
    model: CoplanarModelSpec | GenericModelSpec
    N: int
    dt: float | str = "auto"
    t_final: float | None = None
    steps: int | None = None
    scheme: str = "explicit"
    law: LawSpec = field(default_factory=lambda: LawSpec("trivial"))
    outputs: OutputSpec = field(default_factory=OutputSpec)
    force: bool = False
    record_every: int = 1
    initial: tuple | None = None  # constant K-vector; None means all ones

    def to_dict(self) -> dict:
        out = {
            "schema": SCHEMA_VERSION,
            "model": self.model.to_dict(),
            "N": self.N,
            "dt": self.dt,
            "scheme": self.scheme,
            "law": self.law.to_dict(),
            "force": self.force,
            "record_every": self.record_every,
        }
        if self.t_final is not None:
            out["t_final"] = self.t_final
        if self.steps is not None:
            out["steps"] = self.steps
        if self.initial is not None:
            out["initial"] = {"constant": list(self.initial)}
        o = self.outputs.to_dict()
        if o:
            out["outputs"] = o
        return out


def _parse_model(d, where: str):
    if not isinstance(d, dict) or len(d) != 1:
        raise ConfigError(f"{where}: model must be {{'coplanar': ...}} or {{'generic': ...}}")
    if "coplanar" in d:
        spec = d["coplanar"]
        _require_keys(spec, {"U", "f_e", "sigma"}, {"U", "f_e"}, f"{where}.coplanar")
        f_e = spec["f_e"]
        if not isinstance(f_e, (list, tuple)) or len(f_e) != 4:
            raise ConfigError(f"{where}.coplanar.f_e: expected 4 densities")
        return CoplanarModelSpec(
            U=float(spec["U"]),
            f_e=tuple(float(v) for v in f_e),
            sigma=float(spec.get("sigma", 1.0)),
        )
    if "generic" in d:
        spec = d["generic"]
        _require_keys(
            spec, {"velocities", "Q", "sigma", "lambda0"}, {"velocities", "Q"},
            f"{where}.generic",
        )
        lam0 = spec.get("lambda0")
        return GenericModelSpec(
            velocities=tuple(tuple(float(v) for v in row) for row in spec["velocities"]),
            Q=tuple(tuple(float(v) for v in row) for row in spec["Q"]),
            sigma=float(spec.get("sigma", 1.0)),
            lambda0=None if lam0 is None else tuple(float(v) for v in lam0),
        )
    raise ConfigError(f"{where}: model must contain 'coplanar' or 'generic'")


def _parse_law(d, where: str) -> LawSpec:
    if not isinstance(d, dict) or "law" not in d:
        raise ConfigError(f"{where}: law must be an object with a 'law' key")
    kind = d["law"]
    if kind == "trivial":
        _require_keys(d, {"law"}, {"law"}, where)
        return LawSpec("trivial")
    if kind == "gain45":
        _require_keys(d, {"law", "k"}, {"law", "k"}, where)
        return LawSpec("gain45", k=float(d["k"]))
    if kind == "gain46":
        _require_keys(d, {"law", "k1", "k2"}, {"law", "k1", "k2"}, where)
        return LawSpec("gain46", k1=float(d["k1"]), k2=float(d["k2"]))
    if kind == "linear":
        _require_keys(d, {"law", "matrix_csv"}, {"law", "matrix_csv"}, where)
        return LawSpec("linear", matrix_csv=str(d["matrix_csv"]))
    raise ConfigError(f"{where}: unknown law kind {kind!r}")


def parse_config(d: dict) -> RunConfig:
    _require_keys(
        d,
        {
            "schema", "model", "N", "dt", "t_final", "steps", "scheme", "law",
            "outputs", "force", "record_every", "initial",
        },
        {"schema", "model", "N"},
        "config",
    )
    if d["schema"] != SCHEMA_VERSION:
        raise ConfigError(f"config.schema: expected {SCHEMA_VERSION}, got {d['schema']!r}")
    model = _parse_model(d["model"], "config.model")
    N = d["N"]
    if not isinstance(N, int) or N < 2:
        raise ConfigError(f"config.N: expected an integer >= 2, got {N!r}")
    dt = d.get("dt", "auto")
    if dt != "auto":
        dt = float(dt)
        if not dt > 0:
            raise ConfigError(f"config.dt: expected 'auto' or a positive real, got {dt!r}")
    t_final = d.get("t_final")
    steps = d.get("steps")
    if (t_final is None) == (steps is None) and not (t_final is None and steps is None):
        raise ConfigError("config: exactly one of t_final / steps may be given")
    if t_final is not None:
        t_final = float(t_final)
        if not t_final >= 0:
            raise ConfigError(f"config.t_final: must be >= 0, got {t_final!r}")
    if steps is not None:
        if not isinstance(steps, int) or steps < 0:
            raise ConfigError(f"config.steps: expected an integer >= 0, got {steps!r}")
    scheme = d.get("scheme", "explicit")
    if scheme not in ("explicit", "implicit"):
        raise ConfigError(f"config.scheme: expected 'explicit' or 'implicit', got {scheme!r}")
    law = _parse_law(d.get("law", {"law": "trivial"}), "config.law")
    outputs = d.get("outputs", {})
    _require_keys(outputs, {"trace_csv", "summary_json", "svg"}, set(), "config.outputs")
    record_every = d.get("record_every", 1)
    if not isinstance(record_every, int) or record_every < 1:
        raise ConfigError(f"config.record_every: expected an integer >= 1, got {record_every!r}")
    initial = d.get("initial")
    if initial is not None:
        _require_keys(initial, {"constant"}, {"constant"}, "config.initial")
        initial = tuple(float(v) for v in initial["constant"])
    force = d.get("force", False)
    if not isinstance(force, bool):
        raise ConfigError(f"config.force: expected a boolean, got {force!r}")
    return RunConfig(
        model=model,
        N=N,
        dt=dt,
        t_final=t_final,
        steps=steps,
        scheme=scheme,
        law=law,
        outputs=OutputSpec(
            trace_csv=outputs.get("trace_csv"),
            summary_json=outputs.get("summary_json"),
            svg=outputs.get("svg"),
        ),
        force=force,
        record_every=record_every,
        initial=initial,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(data)


def build_model(spec) -> tuple[KineticModel, CoplanarSteadyState | None]:
    if isinstance(spec, CoplanarModelSpec):
        s = CoplanarSteadyState(U=spec.U, f_e=spec.f_e)
        return coplanar_model(s, spec.sigma), s
    return new_model(np.array(spec.velocities), np.array(spec.Q), spec.sigma), None


def build_law(spec: LawSpec, model: KineticModel, grid: Grid, config_dir: Path | None = None):
    if spec.kind == "trivial":
        return TrivialLaw()
    if spec.kind == "gain45":
        return CoplanarGain45Law(spec.k)
    if spec.kind == "gain46":
        return CoplanarGain46Law(spec.k1, spec.k2)
    path = Path(spec.matrix_csv)
    if config_dir is not None and not path.is_absolute():
        path = config_dir / path
    rows, cols, vals = [], [], []
    try:
        with open(path, newline="") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                a, b, c = line.split(",")
                if a == "row":  # optional header
                    continue
                rows.append(int(a))
                cols.append(int(b))
                vals.append(float(c))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read law matrix {path}: {exc}") from exc
    return linear_law_from_triplets(rows, cols, vals, model, grid)

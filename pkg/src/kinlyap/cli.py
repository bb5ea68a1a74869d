"""Command-line driver: certify, run, reproduce, validate."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .config import load_config
from .errors import KinlyapError
from .output import json_safe
from .presets import PRESETS, reproduce
from .runner import certify_only, run_simulation, write_outputs
from .validate import run_validation


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kinlyap",
        description="Certified numerical boundary stabilization for discrete-velocity kinetic models",
    )
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="compute the stability certificate for a config")
    c.add_argument("-c", "--config", required=True, help="run config JSON")
    c.add_argument("-o", "--output", help="also write the report to this JSON file")

    r = sub.add_parser("run", help="execute a simulation run")
    r.add_argument("-c", "--config", required=True, help="run config JSON")
    r.add_argument(
        "--force", action="store_true",
        help="permit an uncertified time step (unstable demos)",
    )

    rep = sub.add_parser("reproduce", help="run one of the built-in simulation presets")
    rep.add_argument("preset", choices=PRESETS)
    rep.add_argument("-o", "--outdir", required=True, help="output directory")
    rep.add_argument(
        "--jobs", type=int, default=None,
        help="independent-run fan-out (default: KINLYAP_THREADS, 0 = sequential)",
    )

    sub.add_parser("validate", help="run the built-in invariant suite")
    return p


def cmd_certify(args) -> int:
    cfg = load_config(args.config)
    report = certify_only(cfg)
    text = json.dumps(json_safe(report), indent=2, allow_nan=False)
    print(text)
    if args.output:
        Path(args.output).write_text(text + "\n")
    for w in report["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.force and not cfg.force:
        cfg = dataclasses.replace(cfg, force=True)
    result = run_simulation(cfg, config_dir=Path(args.config).resolve().parent)
    write_outputs(result)
    for w in result.summary["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    if not cfg.outputs.summary_json:
        print(json.dumps(json_safe(result.summary), indent=2, allow_nan=False))
    else:
        s = result.summary
        print(
            f"steps={s['steps_done']} final_l2={s['final_l2']!r} "
            f"diverged={s['diverged']} decay_violations={s['decay_violations']}"
        )
    return 0


def cmd_reproduce(args) -> int:
    summaries = reproduce(args.preset, args.outdir, jobs=args.jobs)
    for s in summaries:
        fit = s["fit"]
        rate = fit["rate"] if fit else None
        print(
            f"{s['config']['law']['law']:8s} N={s['config']['N']:3d} "
            f"sigma={s['config']['model']['coplanar']['sigma']:<6g} "
            f"scheme={s['config']['scheme']:8s} steps={s['steps_done']} "
            f"final_l2={s['final_l2']:.6e} diverged={s['diverged']} rate={rate}"
        )
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "certify":
            return cmd_certify(args)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "reproduce":
            return cmd_reproduce(args)
        if args.command == "validate":
            return run_validation(verbose=True)
    except KinlyapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

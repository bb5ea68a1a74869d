"""Trace CSV, summary JSON and minimal SVG emission.

All floating-point text uses 17 significant digits so files round-trip
bit-exactly and identical configs reproduce identical bytes.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .grid import FLOAT_FMT

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def write_trace_csv(rows, dt: float, path) -> None:
    """rows: iterable of StepDiagnostics; columns fixed by the trace contract."""
    with open(path, "w", newline="") as fh:
        fh.write("step,t,l2,log_l2,lyapunov,boundary_term\n")
        for r in rows:
            log_l2 = math.log(r.l2) if r.l2 > 0 else -math.inf
            fh.write(
                f"{r.n},{_fmt(r.t)},{_fmt(r.l2)},{_fmt(log_l2)},"
                f"{_fmt(r.L)},{_fmt(r.B)}\n"
            )


def read_trace_csv(path) -> np.ndarray:
    """(n, 6) array of the trace columns."""
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def json_safe(x):
    """Replace non-finite floats by None so summaries stay strict JSON."""
    if isinstance(x, dict):
        return {k: json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [json_safe(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, np.ndarray):
        return json_safe(x.tolist())
    return x


def write_summary_json(summary: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(json_safe(summary), fh, indent=2, allow_nan=False)
        fh.write("\n")


def _ticks(lo: float, hi: float, count: int = 6):
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    return np.linspace(lo, hi, count)


def write_svg(path, series, xlabel: str, ylabel: str, title: str = "") -> None:
    """Self-contained line plot: series is a list of (label, x, y) triples."""
    W, H = 760, 520
    ml, mr, mt, mb = 70, 24, 42, 54
    xs = np.concatenate([np.asarray(x, dtype=float) for _, x, _ in series])
    ys = np.concatenate([np.asarray(y, dtype=float) for _, _, y in series])
    finite = np.isfinite(xs) & np.isfinite(ys)
    if not np.any(finite):
        xs, ys = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    else:
        xs, ys = xs[finite], ys[finite]
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    y0, y1 = float(np.min(ys)), float(np.max(ys))
    if x0 == x1:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y0 == y1:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.04 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return ml + (x - x0) / (x1 - x0) * (W - ml - mr)

    def py(y):
        return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    for tx in _ticks(x0, x1):
        parts.append(
            f'<line x1="{px(tx):.2f}" y1="{H - mb}" x2="{px(tx):.2f}" '
            f'y2="{H - mb + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px(tx):.2f}" y="{H - mb + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{tx:.3g}</text>'
        )
    for ty in _ticks(y0, y1):
        parts.append(
            f'<line x1="{ml - 5}" y1="{py(ty):.2f}" x2="{ml}" y2="{py(ty):.2f}" '
            f'stroke="black"/>'
        )
        parts.append(
            f'<text x="{ml - 9}" y="{py(ty):.2f}" text-anchor="end" dy="4" '
            f'font-family="sans-serif" font-size="11">{ty:.3g}</text>'
        )
    parts.append(
        f'<rect x="{ml}" y="{mt}" width="{W - ml - mr}" height="{H - mt - mb}" '
        f'fill="none" stroke="black"/>'
    )
    parts.append(
        f'<text x="{(ml + W - mr) / 2:.1f}" y="{H - 14}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{xlabel}</text>'
    )
    parts.append(
        f'<text x="20" y="{(mt + H - mb) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 20 {(mt + H - mb) / 2:.1f})">{ylabel}</text>'
    )
    for idx, (label, x, y) in enumerate(series):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[keep], y[keep]))
        color = _COLORS[idx % len(_COLORS)]
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>'
        )
        parts.append(
            f'<text x="{W - mr - 8}" y="{mt + 18 + 16 * idx}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")

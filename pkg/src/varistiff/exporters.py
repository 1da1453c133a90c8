"""File exporters: curve CSV, planar SVG, JSON report.

All formats are deterministic: identical inputs produce byte-identical files.
CSV numbers carry 17 significant digits so binary64 values roundtrip exactly.
"""
from __future__ import annotations

import json

import numpy as np

from .curves import CurveSamples


def _fmt(x):
    return format(float(x), ".17g")


def export_curve_csv(curve, path, frame=None, profile=None):
    """Write `s,x,y,z,Tx,Ty,Tz,k1[,k2],rho` rows, one per sample (LF endings).

    Plane curves zero-fill z/Tz and omit the k2 column.  Curvature columns are
    zero when no frame is given, likewise rho without a profile.
    """
    m = curve.num_samples
    grid = curve.grid()
    zeros = np.zeros(m)
    pos = curve.positions
    tan = curve.tangents
    if curve.n == 2:
        header = "s,x,y,z,Tx,Ty,Tz,k1,rho"
        columns = [grid, pos[:, 0], pos[:, 1], zeros, tan[:, 0], tan[:, 1], zeros]
        kappa_cols = 1
    else:
        header = "s,x,y,z,Tx,Ty,Tz,k1,k2,rho"
        columns = [grid, pos[:, 0], pos[:, 1], pos[:, 2], tan[:, 0], tan[:, 1], tan[:, 2]]
        kappa_cols = 2
    if frame is None:
        columns.extend([zeros] * kappa_cols)
    else:
        for j in range(kappa_cols):
            columns.append(frame.curvature[:, j])
    columns.append(profile.values(grid)[0] if profile is not None else zeros)
    lines = [header]
    for i in range(m):
        lines.append(",".join(_fmt(col[i]) for col in columns))
    with open(path, "w", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def import_curve_csv(path):
    """Inverse of export_curve_csv.

    Returns (curve, kappa, rho); kappa is (m, 1) or (m, 2).  The dimension is
    inferred from the header (no k2 column means a plane curve whose zero-filled
    z/Tz columns are dropped).
    """
    with open(path, "r", newline="") as handle:
        rows = [line.strip() for line in handle if line.strip()]
    header = rows[0].split(",")
    if header == "s,x,y,z,Tx,Ty,Tz,k1,rho".split(","):
        n = 2
    elif header == "s,x,y,z,Tx,Ty,Tz,k1,k2,rho".split(","):
        n = 3
    else:
        raise ValueError(f"unrecognized curve CSV header: {rows[0]!r}")
    data = np.array([[float(v) for v in row.split(",")] for row in rows[1:]])
    if data.shape[0] < 2:
        raise ValueError("curve CSV needs at least two samples")
    s = data[:, 0]
    h = (s[-1] - s[0]) / (len(s) - 1)
    if n == 2:
        pos = data[:, 1:3]
        tan = data[:, 4:6]
        kappa = data[:, 7:8]
        rho = data[:, 8]
    else:
        pos = data[:, 1:4]
        tan = data[:, 4:7]
        kappa = data[:, 7:9]
        rho = data[:, 9]
    curve = CurveSamples(pos, h, s0=float(s[0]), tangents=tan)
    return curve, kappa, rho


SVG_WIDTH_RANGE = (0.5, 3.0)


def export_svg_planar(curve, path, rho_width=False, profile=None):
    """Render a plane curve as SVG (y axis flipped for display).

    The viewBox fits the curve with a 5% margin.  With rho_width the curve is
    drawn as consecutive two-point segments whose stroke width maps
    [min rho, max rho] linearly onto [0.5, 3] user units; a constant profile
    maps to the midpoint width.
    """
    if curve.n != 2:
        raise ValueError("SVG export applies to plane curves")
    x = curve.positions[:, 0]
    y = -curve.positions[:, 1]
    pad = 0.05 * max(x.max() - x.min(), y.max() - y.min(), 1e-9)
    vx, vy = x.min() - pad, y.min() - pad
    vw, vh = (x.max() - x.min()) + 2 * pad, (y.max() - y.min()) + 2 * pad
    stroke_scale = max(vw, vh) / 100.0

    def num(v):
        return format(float(v), ".8g")

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{num(vx)} {num(vy)} {num(vw)} {num(vh)}">',
    ]
    if not rho_width:
        points = " ".join(f"{num(px)},{num(py)}" for px, py in zip(x, y))
        width = num(1.0 * stroke_scale)
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="black" '
            f'stroke-width="{width}" stroke-linecap="round" stroke-linejoin="round"/>'
        )
    else:
        if profile is None:
            raise ValueError("rho_width rendering needs a profile")
        rho = profile.values(curve.grid())[0]
        lo, hi = float(rho.min()), float(rho.max())
        wlo, whi = SVG_WIDTH_RANGE
        for i in range(curve.num_samples - 1):
            mid = 0.5 * (rho[i] + rho[i + 1])
            if hi - lo < 1e-12:
                width = 0.5 * (wlo + whi)
            else:
                width = wlo + (whi - wlo) * (mid - lo) / (hi - lo)
            parts.append(
                f'<line x1="{num(x[i])}" y1="{num(y[i])}" x2="{num(x[i + 1])}" '
                f'y2="{num(y[i + 1])}" stroke="black" '
                f'stroke-width="{num(width * stroke_scale)}" stroke-linecap="round"/>'
            )
    parts.append("</svg>")
    with open(path, "w", newline="\n") as handle:
        handle.write("\n".join(parts) + "\n")


def _jsonable(value):
    if isinstance(value, dict):
        return {key: _jsonable(val) for key, val in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def write_report(report, path):
    """Serialize the run report deterministically (sorted keys, LF endings).

    Wall-clock data must live under the top-level "timing" key, which golden
    comparisons exclude.
    """
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True)
    with open(path, "w", newline="\n") as handle:
        handle.write(text + "\n")

"""Snapshot, trace, and SVG file emission.

Snapshot format: JSON object with keys "topology" ("theta"|"triod"), "mu",
"curves" (three lists of [x, y] nodes), optional "endpoints" (three [x, y]
fixed points for triods) and optional "jets" (exact endpoint derivative
data, written by the analytic scenario builders and the reparametrization
so that downstream checks keep full accuracy).  Floats are emitted in
shortest round-trip decimal form, which is lossless for doubles.
"""

from __future__ import annotations

import json

import numpy as np

from .geometry import CurveJet, CurveSample, EnergyParams
from .network import NetworkState


class SnapshotError(ValueError):
    """Malformed snapshot file."""


def _listify(arr):
    return np.asarray(arr, dtype=float).tolist()


def snapshot_dict(net: NetworkState, params: EnergyParams) -> dict:
    doc = {
        "topology": net.topology,
        "mu": params.mu,
        "curves": [_listify(c.deriv(0)) for c in net.curves],
    }
    if net.fixed_endpoints is not None:
        doc["endpoints"] = _listify(net.fixed_endpoints)
    if net.jets:
        doc["jets"] = [
            {
                "curve": i,
                "end": e,
                "data": [_listify(getattr(j, a)) for a in ("point", "d1", "d2", "d3", "d4")],
            }
            for (i, e), j in sorted(net.jets.items())
        ]
    return doc


def save_snapshot(path, net: NetworkState, params: EnergyParams):
    with open(path, "w") as fh:
        json.dump(snapshot_dict(net, params), fh, indent=1)
        fh.write("\n")


def load_snapshot(path):
    """Returns (NetworkState, EnergyParams)."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    try:
        topology = doc["topology"]
        mu = float(doc["mu"])
        curves = tuple(
            CurveSample.from_position(np.asarray(c, dtype=float))
            for c in doc["curves"]
        )
        fixed = None
        if "endpoints" in doc:
            fixed = np.asarray(doc["endpoints"], dtype=float)
        jets = {}
        for entry in doc.get("jets", []):
            data = [np.asarray(d, dtype=float) for d in entry["data"]]
            jets[(int(entry["curve"]), int(entry["end"]))] = CurveJet(*data)
        net = NetworkState(curves, topology, fixed, jets)
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"malformed snapshot {path}: {exc}") from exc
    return net, EnergyParams(mu)


CSV_HEADER = "t,energy,res_concurrency,res_angle,res_curvature,res_second,res_third,min_speed"


def save_trace_csv(path, trace):
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in trace.rows():
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


# ---------------------------------------------------------------------------
# SVG frames
# ---------------------------------------------------------------------------

_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c")


def save_svg(path, net: NetworkState, size: int = 480, margin: float = 0.1):
    """Plot the three curves with junction markers."""
    pts = np.vstack([c.deriv(0) for c in net.curves])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = max(float(np.max(hi - lo)), 1e-9)
    pad = margin * span
    lo = lo - pad
    scale = size / (span + 2 * pad)

    def to_px(p):
        q = (p - lo) * scale
        return q[..., 0], size - q[..., 1]     # flip y for screen coordinates

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for color, curve in zip(_SVG_COLORS, net.curves):
        xs, ys = to_px(curve.deriv(0))
        path_d = "M " + " L ".join(f"{x:.3f} {y:.3f}" for x, y in zip(xs, ys))
        lines.append(
            f'<path d="{path_d}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
    markers = [net.curves[0].deriv(0)[0]]
    if net.topology == "theta":
        markers.append(net.curves[0].deriv(0)[-1])
    else:
        markers.extend(net.fixed_endpoints)
    for p in markers:
        x, y = to_px(np.asarray(p, dtype=float))
        lines.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="4" fill="black"/>')
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

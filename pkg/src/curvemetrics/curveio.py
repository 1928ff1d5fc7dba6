"""File formats for curves, homotopy grids, and derived records.

All text output formats round-trip floats through repr-faithful
"%.17g" formatting so identical inputs produce bit-identical files.
"""

import json
import re

import numpy as np

from .curves import DirectionFunctionSample, SampledCurve
from .errors import InputDataError
from .homotopy import HomotopyGrid


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _parse_rows(text, path, columns=None):
    rows = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p for p in line.split(",") if p.strip() != ""]
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise InputDataError(f"{path}:{line_no}: not a numeric row: {line!r}")
        if columns is not None and len(rows[-1]) != columns:
            raise InputDataError(
                f"{path}:{line_no}: expected {columns} columns, got {len(rows[-1])}"
            )
    if not rows:
        raise InputDataError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InputDataError(f"{path}: ragged rows (widths {sorted(widths)})")
    return np.array(rows)


def save_curve_json(path, c: SampledCurve):
    payload = {"n": c.dim, "points": [[float(x) for x in p] for p in c.points]}
    with open(path, "w") as f:
        json.dump(payload, f)
        f.write("\n")


def load_curve_json(path) -> SampledCurve:
    with open(path) as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise InputDataError(f"{path}: invalid JSON ({e})")
    if not isinstance(payload, dict) or "points" not in payload:
        raise InputDataError(f"{path}: expected an object with a 'points' array")
    pts = np.asarray(payload["points"], dtype=float)
    if "n" in payload and pts.ndim == 2 and pts.shape[1] != int(payload["n"]):
        raise InputDataError(
            f"{path}: declared dimension n={payload['n']} but points have "
            f"{pts.shape[1]} coordinates"
        )
    return SampledCurve(points=pts)


def save_curve_csv(path, c: SampledCurve):
    with open(path, "w") as f:
        f.write(f"# curve: n_samples={c.n_samples} n={c.dim}\n")
        for p in c.points:
            f.write(",".join(_fmt(x) for x in p) + "\n")


def load_curve_csv(path) -> SampledCurve:
    with open(path) as f:
        data = _parse_rows(f.read(), path)
    return SampledCurve(points=data)


def load_curve(path) -> SampledCurve:
    """Load a curve from .json or .csv by extension."""
    name = str(path)
    if name.endswith(".json"):
        return load_curve_json(path)
    if name.endswith(".csv"):
        return load_curve_csv(path)
    raise InputDataError(f"{path}: unknown curve format (use .json or .csv)")


_GRID_HEADER = re.compile(
    r"#\s*homotopy grid:\s*n_v=(\d+)\s+n_theta=(\d+)\s+n=(\d+)\s+periodic=([01])"
)


def save_grid_csv(path, C: HomotopyGrid):
    """Row-major grid dump: slices in v order, samples in theta order."""
    with open(path, "w") as f:
        f.write(
            f"# homotopy grid: n_v={C.n_v} n_theta={C.n_theta} n={C.dim} "
            f"periodic={1 if C.periodic else 0}\n"
        )
        for row in C.values.reshape(-1, C.dim):
            f.write(",".join(_fmt(x) for x in row) + "\n")


def load_grid_csv(path) -> HomotopyGrid:
    with open(path) as f:
        text = f.read()
    match = _GRID_HEADER.search(text)
    if not match:
        raise InputDataError(
            f"{path}: missing grid header "
            "'# homotopy grid: n_v=.. n_theta=.. n=.. periodic=..'"
        )
    n_v, n_theta, dim, periodic = (int(g) for g in match.groups())
    data = _parse_rows(text, path, columns=dim)
    if data.shape[0] != n_v * n_theta:
        raise InputDataError(
            f"{path}: header promises {n_v * n_theta} rows, found {data.shape[0]}"
        )
    return HomotopyGrid(
        values=data.reshape(n_v, n_theta, dim), periodic=bool(periodic)
    )


def save_grid_npz(path, C: HomotopyGrid):
    np.savez(path, values=C.values, periodic=np.array(C.periodic))


def load_grid_npz(path) -> HomotopyGrid:
    try:
        with np.load(path) as data:
            values = data["values"]
            periodic = bool(data["periodic"])
    except (OSError, KeyError, ValueError) as e:
        raise InputDataError(f"{path}: not a grid archive ({e})")
    return HomotopyGrid(values=values, periodic=periodic)


def load_grid(path) -> HomotopyGrid:
    """Load a homotopy grid, .npz by extension and text otherwise.

    The text format announces itself through its header line, so any
    other extension (.csv, .grid, none at all) goes through the csv
    reader, which reports a missing header precisely.
    """
    if str(path).endswith(".npz"):
        return load_grid_npz(path)
    return load_grid_csv(path)


def save_svg(path, polylines, width: float = 640.0):
    """Plot closed polylines as an SVG drawing.

    The mathematical y axis points up, so coordinates are reflected
    into SVG's downward y inside a viewBox padded by 5 percent.
    """
    polylines = [np.asarray(p, dtype=float) for p in polylines if len(p)]
    if not polylines:
        raise InputDataError("nothing to draw")
    allpts = np.vstack(polylines)
    lo = allpts.min(axis=0)
    hi = allpts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    pad = 0.05 * float(span.max())
    x0, y0 = lo - pad
    w, h = (hi - lo) + 2 * pad
    stroke = 0.004 * max(w, h)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{width * h / w:.0f}" viewBox="{_fmt(x0)} {_fmt(y0)} '
        f'{_fmt(w)} {_fmt(h)}">',
        "<!-- mathematical y axis points up; points are emitted as "
        "(x, ymin+ymax-y) to flip into SVG screen coordinates -->",
    ]
    y_sum = 2 * y0 + h
    for poly in polylines:
        pts = " ".join(f"{_fmt(p[0])},{_fmt(y_sum - p[1])}" for p in poly)
        lines.append(
            f'<polygon points="{pts}" fill="none" stroke="black" '
            f'stroke-width="{_fmt(stroke)}"/>'
        )
    lines.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def save_energy_report(path, report, spec):
    """Text record of an energy evaluation: parameters, total, per-slice CSV."""
    with open(path, "w") as f:
        f.write(f"kind={spec.kind}\n")
        f.write(f"alpha={_fmt(spec.alpha)}\n")
        f.write(f"beta={_fmt(spec.beta)}\n")
        f.write(f"A={_fmt(spec.A)}\n")
        f.write(f"factor={spec.factor.kind}\n")
        f.write(f"factor_lam={_fmt(spec.factor.lam)}\n")
        f.write(f"quadrature={report.quadrature}\n")
        f.write(f"n_theta={report.resolution[0]}\n")
        f.write(f"n_v={report.resolution[1]}\n")
        f.write(f"total={_fmt(report.total)}\n")
        f.write("per_slice:\n")
        for j, value in enumerate(report.per_slice):
            f.write(f"{j},{_fmt(value)}\n")


def save_direction_csv(path, d: DirectionFunctionSample):
    s = d.s_grid()
    with open(path, "w") as f:
        f.write(f"# direction function: m={d.m_intervals} winding={d.winding}\n")
        for sk, tk in zip(s, d.theta_of_s):
            f.write(f"{_fmt(sk)},{_fmt(tk)}\n")


def load_direction_csv(path) -> DirectionFunctionSample:
    with open(path) as f:
        data = _parse_rows(f.read(), path, columns=2)
    theta = data[:, 1]
    winding = int(round((theta[-1] - theta[0]) / (2.0 * np.pi)))
    return DirectionFunctionSample(theta_of_s=theta, winding=winding)


def save_pointset_csv(path, points):
    points = np.asarray(points, dtype=float)
    with open(path, "w") as f:
        f.write(f"# point set: count={points.shape[0]} n={points.shape[1]}\n")
        for p in points:
            f.write(",".join(_fmt(x) for x in p) + "\n")


def load_pointset_csv(path) -> np.ndarray:
    with open(path) as f:
        return _parse_rows(f.read(), path)


def save_obj(path, C: HomotopyGrid):
    """Wavefront OBJ of the swept surface of a planar homotopy.

    Vertices are (x, y, v); each pair of neighboring slices is bridged
    by quads, wrapping in theta for periodic grids.
    """
    if C.dim != 2:
        raise InputDataError("OBJ export lifts planar homotopies only")
    n_v, n_theta = C.n_v, C.n_theta
    vs = C.v_grid()
    with open(path, "w") as f:
        f.write(f"# swept homotopy surface: n_v={n_v} n_theta={n_theta}\n")
        for j in range(n_v):
            for i in range(n_theta):
                x, y = C.values[j, i]
                f.write(f"v {_fmt(x)} {_fmt(y)} {_fmt(vs[j])}\n")
        last = n_theta if C.periodic else n_theta - 1
        for j in range(n_v - 1):
            for i in range(last):
                a = j * n_theta + i + 1
                b = j * n_theta + (i + 1) % n_theta + 1
                c = (j + 1) * n_theta + (i + 1) % n_theta + 1
                d = (j + 1) * n_theta + i + 1
                f.write(f"f {a} {b} {c} {d}\n")

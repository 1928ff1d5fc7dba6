"""Command-line interface.

Subcommands cover energies and inner products, reparameterizations,
gradient flows, the level-set geodesic solver, the counterexample
constructions, direction-function shape distances, Hausdorff
distances, and a quick self check.

Exit codes: 0 on success, 2 for usage errors (argparse), 3 for
malformed inputs (InputDataError, NotImmersedError, unreadable files),
4 for numerical failures (CFL violations, coarse grids, stalled or
blown-up flows, flat sets, level-set degeneration). The failing error
class is named on stderr.

A --config file holds key=value lines (# comments allowed) that seed
the defaults of every matching option; explicit flags override them.
"""

import argparse
import os
import sys

import numpy as np

from . import counterexamples, curveio, flows, homotopy, levelset, shapedist
from .curves import SampledCurve, arclength, theta_grid
from .energies import ConformalFactor, EnergySpec, energy, inner_product
from .errors import (
    CFLError,
    FlatSetError,
    GridTooCoarseError,
    InputDataError,
    LevelSetError,
    NotImmersedError,
    NumericalFailureError,
    StalledHomotopyError,
)

_INPUT_ERRORS = (InputDataError, NotImmersedError)
_NUMERICAL_ERRORS = (
    CFLError,
    GridTooCoarseError,
    StalledHomotopyError,
    FlatSetError,
    LevelSetError,
    NumericalFailureError,
)

MIN_CLI_SAMPLES = 16


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _read_config(path):
    config = {}
    try:
        with open(path) as f:
            for line_no, line in enumerate(f, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise InputDataError(
                        f"{path}:{line_no}: expected key=value, got {line!r}"
                    )
                key, value = line.split("=", 1)
                config[key.strip().replace("-", "_")] = value.strip()
    except OSError as e:
        raise InputDataError(f"cannot read config {path}: {e}")
    return config


def _scan_config(argv):
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            return _read_config(argv[i + 1])
        if token.startswith("--config="):
            return _read_config(token.split("=", 1)[1])
    return {}


class _ArgHelper:
    """add_argument wrapper that lets a config file reset the defaults."""

    def __init__(self, config):
        self.config = config
        self.known = set()

    def add(self, parser, *names, **kw):
        dest = kw.get("dest") or names[-1].lstrip("-").replace("-", "_")
        self.known.add(dest)
        if dest in self.config:
            raw = self.config[dest]
            if kw.get("action") == "store_true":
                kw.setdefault("default", raw.lower() in ("1", "true", "yes", "on"))
            else:
                conv = kw.get("type", str)
                try:
                    kw["default"] = conv(raw)
                except ValueError:
                    raise InputDataError(
                        f"config value {dest}={raw!r} is not a valid "
                        f"{getattr(conv, '__name__', 'value')}"
                    )
        parser.add_argument(*names, **kw)


def _load_curve(path) -> SampledCurve:
    try:
        c = curveio.load_curve(path)
    except OSError as e:
        raise InputDataError(f"cannot read {path}: {e}")
    if c.n_samples < MIN_CLI_SAMPLES:
        raise InputDataError(
            f"{path}: need at least {MIN_CLI_SAMPLES} samples, got {c.n_samples}"
        )
    return c


def _load_grid(path) -> homotopy.HomotopyGrid:
    try:
        return curveio.load_grid(path)
    except OSError as e:
        raise InputDataError(f"cannot read {path}: {e}")


def _load_array(path) -> np.ndarray:
    if str(path).endswith(".json"):
        return curveio.load_curve_json(path).points
    try:
        return curveio.load_pointset_csv(path)
    except OSError as e:
        raise InputDataError(f"cannot read {path}: {e}")


def _save_grid(path, C):
    if str(path).endswith(".npz"):
        curveio.save_grid_npz(path, C)
    else:
        curveio.save_grid_csv(path, C)


def _factor_from_args(args) -> ConformalFactor:
    name = getattr(args, "factor", "identity")
    lam = getattr(args, "factor_lam", 0.0)
    if name == "identity":
        return ConformalFactor.identity()
    if name == "exp_length":
        return ConformalFactor.exp_length(lam)
    if name == "length":
        return ConformalFactor.length()
    raise InputDataError(f"unknown conformal factor '{name}'")


def _spec_from_args(args) -> EnergySpec:
    return EnergySpec(
        kind=args.kind,
        A=getattr(args, "A", 0.0),
        alpha=getattr(args, "alpha", 2.0),
        beta=getattr(args, "beta", 1.0),
        factor=_factor_from_args(args),
    )


def _values_list(text, conv=float):
    try:
        return [conv(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise InputDataError(f"bad numeric list {text!r}")


def _unit_circle(n=256) -> SampledCurve:
    th = theta_grid(n)
    return SampledCurve(points=np.stack([np.cos(th), np.sin(th)], axis=1))


def _translating_circle(n_theta=256, n_v=64, offset=1.0):
    def fn(th, v):
        return np.stack([np.cos(th) + offset * v, np.sin(th)], axis=1)

    return homotopy.sample_homotopy(fn, n_theta, n_v)


def _write_table(out, header, rows, title):
    lines = [f"# counterexample: {title}", f"# columns: {','.join(header)}"]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as f:
            f.write(text)
    sys.stdout.write(text)


def _cmd_energy(args):
    C = _load_grid(args.grid)
    spec = _spec_from_args(args)
    report = energy(C, spec)
    print(
        f"kind={spec.kind} total={_fmt(report.total)} "
        f"n_theta={report.resolution[0]} n_v={report.resolution[1]} "
        f"quadrature={report.quadrature}"
    )
    if args.out:
        curveio.save_energy_report(args.out, report, spec)
    return 0


def _cmd_inner(args):
    c = _load_curve(args.curve)
    h = _load_array(args.h)
    k = _load_array(args.k)
    if args.metric in ("param_H0", "intermediate", "geom_H0", "MM", "conformal"):
        metric = (
            args.metric
            if args.metric in ("param_H0", "intermediate")
            else EnergySpec(
                kind=args.metric, A=args.A, factor=_factor_from_args(args)
            )
        )
    else:
        metric = args.metric
    value = inner_product(c, h, k, metric)
    print(f"inner={_fmt(value)}")
    return 0


def _cmd_reparam(args):
    C = _load_grid(args.grid)
    if args.mode == "arclength":
        result = homotopy.reparam_arclength(C)
        print(f"mode=arclength residual={_fmt(homotopy.max_tangential_speed(result))}")
    elif args.mode == "horizontal":
        res = homotopy.reparam_horizontal(C)
        result = res.grid
        print(f"mode=horizontal residual={_fmt(res.residual)}")
    else:
        phi = homotopy.optimal_unwind_shift(C)
        result = homotopy.shift_unwind(C, phi)
        print(f"mode=unwind total_shift={_fmt(phi[-1])}")
    _save_grid(args.out, result)
    return 0


def _cmd_flow(args):
    dt = None if args.dt == "auto" else float(args.dt)
    dump_every = args.dump_every
    prefix = args.out_prefix

    if args.kind in ("heat", "mm"):
        c = _load_curve(args.curve)
        lengths = [arclength(c)]
        for step in range(1, args.steps + 1):
            step_dt = flows.heat_cfl_dt(c) if dt is None else dt
            if args.kind == "heat":
                c = flows.heat_flow_step(c, step_dt)
            else:
                c = flows.mm_arclength_flow_step(c, args.A, step_dt)
            lengths.append(arclength(c))
            if prefix and dump_every and step % dump_every == 0:
                curveio.save_curve_csv(f"{prefix}{step:06d}.csv", c)
        print(
            f"kind={args.kind} steps={args.steps} "
            f"length_initial={_fmt(lengths[0])} length_final={_fmt(lengths[-1])}"
        )
        if prefix:
            curveio.save_curve_csv(f"{prefix}final.csv", c)
        return 0

    C = _load_grid(args.grid)
    factor = _factor_from_args(args)
    lam = None if args.lam == "auto" else float(args.lam)
    if lam is None:
        lam = flows.stable_lambda(C)
    chunk = dump_every if (prefix and dump_every) else args.steps
    done = 0
    energies = []
    state = None
    while done < args.steps:
        take = min(chunk, args.steps - done)
        state = flows.run_homotopy_flow(
            C,
            kind=args.kind,
            steps=take,
            dt=dt,
            factor=factor,
            lam=lam,
            drop_magnitude=args.drop_magnitude,
            renormalize_every=args.renormalize_every,
            stop_displacement=args.stop_displacement,
        )
        C = state.grid
        done += state.steps
        energies.extend(
            state.energy_trace if not energies else state.energy_trace[1:]
        )
        if prefix and dump_every:
            _save_grid(f"{prefix}{done:06d}.npz", C)
        if state.blew_up or (
            args.stop_displacement and state.last_displacement < args.stop_displacement
        ):
            break
    print(
        f"kind={args.kind} steps={done} lam={_fmt(lam)} "
        f"energy_initial={_fmt(energies[0])} energy_final={_fmt(energies[-1])} "
        f"blew_up={state.blew_up}"
    )
    if prefix:
        _save_grid(f"{prefix}final.npz", C)
    return 4 if state.blew_up else 0


def _cmd_geodesic(args):
    c0 = _load_curve(args.c0)
    c1 = _load_curve(args.c1)
    result = levelset.run_geodesic(
        c0,
        c1,
        nx=args.nx,
        ny=args.ny,
        nv=args.nv,
        max_steps=args.steps,
        tol=args.tol,
        reinit_every=args.reinit_every,
    )
    os.makedirs(args.out, exist_ok=True)
    for j, loops in enumerate(result.contours.contours):
        if loops:
            curveio.save_svg(os.path.join(args.out, f"slice_{j:03d}.svg"), loops)
    with open(os.path.join(args.out, "energy_trace.csv"), "w") as f:
        f.write("# columns: snapshot,energy,conformal_energy\n")
        rows = zip(result.energy_trace, result.conformal_trace)
        for i, (e, ec) in enumerate(rows):
            f.write(f"{i},{_fmt(e)},{_fmt(ec)}\n")
    curveio.save_obj(os.path.join(args.out, "surface.obj"), result.homotopy)
    with open(os.path.join(args.out, "summary.txt"), "w") as f:
        f.write(f"converged={result.converged}\n")
        f.write(f"steps={result.steps}\n")
        f.write(f"residual={_fmt(result.residual)}\n")
        f.write(f"lam={_fmt(result.lam)}\n")
        f.write(f"energy_initial={_fmt(result.energy_trace[0])}\n")
        f.write(f"energy_final={_fmt(result.energy_trace[-1])}\n")
    print(
        f"converged={result.converged} steps={result.steps} "
        f"residual={_fmt(result.residual)} "
        f"energy_initial={_fmt(result.energy_trace[0])} "
        f"energy_final={_fmt(result.energy_trace[-1])}"
    )
    return 0


def _cmd_counterexample(args):
    name = args.name
    if name == "winding":
        ks = [int(k) for k in _values_list(args.values or "1,2,3")]
        base = (
            _load_grid(args.grid) if args.grid else _translating_circle()
        )
        rows = []
        for k in ks:
            Ck = counterexamples.winding_family(base, k)
            geom = energy(Ck, EnergySpec(kind="geom_H0")).total
            param = energy(Ck, EnergySpec(kind="param_H0")).total
            rows.append((k, geom, param))
        _write_table(args.out, ["k", "geom_energy", "param_energy"], rows, name)
    elif name == "wiggle":
        js = [int(j) for j in _values_list(args.values or "1,2,4,8,16")]
        rows = []
        for j in js:
            C = counterexamples.graph_wiggle(j)
            e = energy(C, EnergySpec(kind="alpha_beta", alpha=2.0, beta=1.0)).total
            rows.append((j, e))
        _write_table(args.out, ["j", "energy"], rows, name)
    elif name == "tessellation":
        hs = [int(h) for h in _values_list(args.values or "1,2,4")]
        base = counterexamples.conformal_stretch(0.25, 1.0)
        rows = []
        for h in hs:
            C = counterexamples.tessellate(base, h)
            e = energy(C, EnergySpec(kind="alpha_beta", alpha=2.0, beta=1.0)).total
            rows.append((h, e))
        _write_table(args.out, ["h", "energy"], rows, name)
    elif name == "zigzag":
        ks = [int(k) for k in _values_list(args.values or "4,8,16,32")]
        c1 = _unit_circle()
        rows = []
        for k in ks:
            cone = counterexamples.zigzag_cone(k, c1)
            first = cone.first_phase_energy()
            bound = 0.8 * np.pi**2 / k
            rows.append((k, first, bound, cone.total_normal_energy()))
        _write_table(args.out, ["k", "first_phase", "bound", "total"], rows, name)
    elif name == "pulley":
        hs = [int(h) for h in _values_list(args.values or "2,4,8")]
        rows = []
        for h in hs:
            r = counterexamples.pulley(h)
            rows.append(
                (h, r.param_energy, r.max_normal_speed, r.slide_rate_max)
            )
        _write_table(
            args.out,
            ["h", "param_energy", "max_normal_speed", "slide_rate_max"],
            rows,
            name,
        )
    elif name == "stretch":
        eps_list = _values_list(args.eps)
        lam_list = _values_list(args.lam_values)
        rows = []
        for eps in eps_list:
            for lam in lam_list:
                C = counterexamples.conformal_stretch(eps, lam)
                spec = EnergySpec(kind="conformal", factor=ConformalFactor.length())
                rows.append((eps, lam, energy(C, spec).total))
        _write_table(args.out, ["eps", "lam", "energy"], rows, name)
    else:
        raise InputDataError(f"unknown counterexample '{name}'")
    return 0


def _cmd_dirshape(args):
    try:
        d1 = curveio.load_direction_csv(args.d1)
    except OSError as e:
        raise InputDataError(f"cannot read {args.d1}: {e}")
    if args.mode == "constraints":
        r = shapedist.dirfn_constraints(d1)
        print(f"residuals={_fmt(r[0])},{_fmt(r[1])},{_fmt(r[2])}")
    elif args.mode == "project":
        projected = shapedist.dirfn_project(d1)
        r = shapedist.dirfn_constraints(projected)
        print(f"residual_norm={_fmt(np.linalg.norm(r))}")
        if args.out:
            curveio.save_direction_csv(args.out, projected)
    else:
        if not args.d2:
            raise InputDataError("distance mode needs --d2")
        try:
            d2 = curveio.load_direction_csv(args.d2)
        except OSError as e:
            raise InputDataError(f"cannot read {args.d2}: {e}")
        value = shapedist.dirfn_distance(d1, d2, mode=args.distance_mode)
        print(f"distance={_fmt(value)}")
    return 0


def _cmd_hausdorff(args):
    if args.path:
        sets = [shapedist.CompactSet(_load_array(p)) for p in args.path]
        print(f"path_length={_fmt(shapedist.hausdorff_path_length(sets))}")
        return 0
    if not (args.a and args.b):
        raise InputDataError("hausdorff needs --a and --b (or --path)")
    a = shapedist.CompactSet(_load_array(args.a))
    b = shapedist.CompactSet(_load_array(args.b))
    print(f"distance={_fmt(shapedist.hausdorff_distance(a, b))}")
    return 0


def _selfcheck_battery(seed):
    rng = np.random.default_rng(seed)
    checks = []

    C = _translating_circle(n_theta=128, n_v=32)
    e = energy(C, EnergySpec(kind="geom_H0")).total
    checks.append(("translating circle normal energy", abs(e / np.pi - 1) < 0.01))

    from .energies import cross_identity_check, scaling_check

    r_en, r_j = scaling_check(C, 2.0)
    checks.append(("cubic and linear energy scaling", abs(r_en - 8.0) < 0.01 and abs(r_j - 2.0) < 0.01))

    residual = max(
        cross_identity_check(rng.normal(size=3), rng.normal(size=3))
        for _ in range(16)
    )
    checks.append(("norm splitting identity", residual < 1e-12))

    speeds = [flows.mm_normal_speed(k, 4.0) for k in (0.25, 0.5, 1.0)]
    checks.append(
        (
            "bounded-speed flow values",
            max(abs(s - t) for s, t in zip(speeds, (0.2, 0.25, 0.2))) < 1e-12,
        )
    )

    c = _unit_circle(128)
    final, lengths = flows.integrate_heat_flow(c, 0.125)
    radius = float(np.mean(np.linalg.norm(final.points, axis=1)))
    checks.append(
        (
            "heat flow radius law",
            abs(radius - np.sqrt(0.75)) < 0.01 and np.all(np.diff(lengths) < 0),
        )
    )

    res = homotopy.reparam_horizontal(C)
    checks.append(("horizontal reparameterization residual", res.residual < 1e-2))

    from .energies import holder_length_check

    checks.append(("length Holder bound", holder_length_check(C) <= 1.0 + 1e-3))
    return checks


def _cmd_selfcheck(args):
    checks = _selfcheck_battery(args.seed)
    failed = 0
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failed += 0 if ok else 1
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    if failed:
        raise NumericalFailureError(f"{failed} self checks failed")
    return 0


def build_parser(config=None):
    config = config or {}
    helper = _ArgHelper(config)
    parser = argparse.ArgumentParser(
        prog="curvemetrics",
        description="Geometries on the space of closed curves: energies, "
        "reparameterizations, flows, geodesics, counterexamples.",
    )
    parser.add_argument("--config", help="key=value defaults file")
    helper.add(parser, "--seed", type=int, default=0, help="seed for stochastic checks")
    helper.add(
        parser,
        "--threads",
        type=int,
        default=1,
        help="accepted for interface compatibility; computations are single-threaded",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("energy", help="evaluate a homotopy energy")
    helper.add(p, "--grid", "--homotopy", dest="grid", required=True)
    helper.add(p, "--kind", default="geom_H0")
    helper.add(p, "--alpha", type=float, default=2.0)
    helper.add(p, "--beta", type=float, default=1.0)
    helper.add(p, "--A", type=float, default=0.0)
    helper.add(p, "--factor", default="identity",
               choices=["identity", "exp_length", "length"])
    helper.add(p, "--factor-lam", type=float, default=0.0)
    helper.add(p, "--out")
    p.set_defaults(handler=_cmd_energy)

    p = sub.add_parser("inner", help="metric inner product of two deformations")
    helper.add(p, "--curve", required=True)
    helper.add(p, "--h", required=True)
    helper.add(p, "--k", required=True)
    helper.add(p, "--metric", default="geom_H0")
    helper.add(p, "--A", type=float, default=0.0)
    helper.add(p, "--factor", default="identity",
               choices=["identity", "exp_length", "length"])
    helper.add(p, "--factor-lam", type=float, default=0.0)
    p.set_defaults(handler=_cmd_inner)

    p = sub.add_parser("reparam", help="reparameterize a homotopy")
    helper.add(p, "--grid", required=True)
    helper.add(p, "--mode", default="horizontal",
               choices=["arclength", "horizontal", "unwind"])
    helper.add(p, "--out", required=True)
    p.set_defaults(handler=_cmd_reparam)

    p = sub.add_parser("flow", help="gradient flows of curves and homotopies")
    helper.add(p, "--kind", default="heat", choices=["heat", "mm", "h0", "conformal"])
    helper.add(p, "--curve", help="input for heat and mm kinds")
    helper.add(p, "--grid", help="input for h0 and conformal kinds")
    helper.add(p, "--steps", type=int, default=100)
    helper.add(p, "--dt", default="auto")
    helper.add(p, "--A", type=float, default=0.0)
    helper.add(p, "--lam", default="auto")
    helper.add(p, "--factor", default="identity",
               choices=["identity", "exp_length", "length"])
    helper.add(p, "--factor-lam", type=float, default=0.0)
    helper.add(p, "--drop-magnitude", action="store_true")
    helper.add(p, "--renormalize-every", type=int, default=10)
    helper.add(p, "--stop-displacement", type=float, default=0.0)
    helper.add(p, "--dump-every", type=int, default=0)
    helper.add(p, "--out-prefix")
    p.set_defaults(handler=_cmd_flow)

    p = sub.add_parser("geodesic", help="level-set geodesic between two curves")
    helper.add(p, "--c0", required=True)
    helper.add(p, "--c1", required=True)
    helper.add(p, "--nx", type=int, default=64)
    helper.add(p, "--ny", type=int, default=64)
    helper.add(p, "--nv", type=int, default=17)
    helper.add(p, "--steps", type=int, default=1500)
    helper.add(p, "--tol", type=float, default=1e-3)
    helper.add(p, "--reinit-every", type=int, default=10)
    helper.add(p, "--out", required=True)
    p.set_defaults(handler=_cmd_geodesic)

    p = sub.add_parser("counterexample", help="energy tables for the counterexamples")
    helper.add(p, "--name", "--family", dest="name", required=True,
               choices=["winding", "wiggle", "tessellation", "zigzag", "pulley", "stretch"])
    helper.add(p, "--values", "--k", dest="values",
               help="comma list of the primary parameter")
    helper.add(p, "--grid", help="optional base homotopy for winding")
    helper.add(p, "--eps", default="0.1,0.25", help="stretch: comma list of eps")
    helper.add(p, "--lam-values", default="0.5,1,2", help="stretch: comma list of lambda")
    helper.add(p, "--out")
    p.set_defaults(handler=_cmd_counterexample)

    p = sub.add_parser("dirshape", help="direction-function preshape operations")
    helper.add(p, "--mode", default="constraints",
               choices=["constraints", "project", "distance"])
    helper.add(p, "--d1", required=True)
    helper.add(p, "--d2")
    helper.add(p, "--distance-mode", default="l2", choices=["l2", "quotient_shift"])
    helper.add(p, "--out")
    p.set_defaults(handler=_cmd_dirshape)

    p = sub.add_parser("hausdorff", help="Hausdorff distances between point sets")
    helper.add(p, "--a")
    helper.add(p, "--b")
    p.add_argument("--path", nargs="+", help="point-set files forming a path")
    p.set_defaults(handler=_cmd_hausdorff)

    p = sub.add_parser("selfcheck", help="run the built-in numerical battery")
    p.set_defaults(handler=_cmd_selfcheck)

    return parser, helper


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        config = _scan_config(argv)
        parser, helper = build_parser(config)
        unknown = set(config) - helper.known
        if unknown:
            raise InputDataError(
                f"config keys {sorted(unknown)} do not match any option"
            )
        args = parser.parse_args(argv)
        return args.handler(args)
    except _INPUT_ERRORS as e:
        print(f"{e.__class__.__name__}: {e}", file=sys.stderr)
        return 3
    except _NUMERICAL_ERRORS as e:
        print(f"{e.__class__.__name__}: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

"""Gradient flows on curves and homotopies, with the v* calculus.

Single curves get the geometric heat flow and the bounded-speed
arclength flow kappa / (1 + A kappa^2). Homotopies get the normal
energy flow C_t = C_v*v* - (1/2) m C_ss and its conformal
stabilization, where v* differentiates along the normal motion:
d_v* f = d_v f - (C_v . C_s) d_s f.

The derivative checks at the bottom validate the discrete calculus:
commutation residuals shrink at second order, and the analytic energy
gradients match central finite differences of the energies themselves.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curves import (
    EPS_IMMERSED,
    SampledCurve,
    curvature_kernel,
    immersed,
    open_derivative,
    periodic_derivative,
    resample_arclength,
)
from .energies import ConformalFactor, EnergySpec, energy, stable_lambda
from .errors import CFLError, InputDataError, NotImmersedError, NumericalFailureError
from .homotopy import HomotopyGrid


def mm_normal_speed(kappa, A):
    """Normal speed kappa / (1 + A kappa^2) of the bounded arclength flow."""
    kappa = np.asarray(kappa, dtype=float)
    return kappa / (1.0 + A * kappa * kappa)


def heat_cfl_dt(c: SampledCurve) -> float:
    """Largest stable explicit step for the heat flow, 0.2 min(ds)^2."""
    deriv = periodic_derivative(c.points, c.dtheta, axis=0)
    ds_min = float(np.min(np.linalg.norm(deriv, axis=1))) * c.dtheta
    return 0.2 * ds_min * ds_min


def heat_flow_step(c: SampledCurve, dt: float) -> SampledCurve:
    """Explicit Euler step of the geometric heat flow c <- c + dt C_ss."""
    if not immersed(c):
        raise NotImmersedError("heat flow needs an immersed curve")
    dt_max = heat_cfl_dt(c)
    if dt > dt_max * (1.0 + 1e-12):
        raise CFLError(f"dt = {dt:.3e} exceeds the stable bound {dt_max:.3e}")
    H, _T, _speed = curvature_kernel(c.points, c.dtheta, c.scale_hint)
    return SampledCurve(points=c.points + dt * H, scale_hint=c.scale_hint)


def mm_arclength_flow_step(c: SampledCurve, A: float, dt: float) -> SampledCurve:
    """Explicit Euler step with normal speed kappa / (1 + A kappa^2).

    A = 0 is the heat flow; A > 0 caps the speed at 1 / (2 sqrt(A)), so
    fine necks stop collapsing faster than wide arcs.
    """
    if A < 0.0:
        raise InputDataError("the arclength flow needs A >= 0")
    if not immersed(c):
        raise NotImmersedError("the arclength flow needs an immersed curve")
    if c.dim != 2:
        raise InputDataError("the bounded arclength flow is planar")
    dt_max = heat_cfl_dt(c)
    if dt > dt_max * (1.0 + 1e-12):
        raise CFLError(f"dt = {dt:.3e} exceeds the stable bound {dt_max:.3e}")
    H, _T, _speed = curvature_kernel(c.points, c.dtheta, c.scale_hint)
    kappa_sq = np.sum(H * H, axis=1)
    step = H / (1.0 + A * kappa_sq)[:, None]
    return SampledCurve(points=c.points + dt * step, scale_hint=c.scale_hint)


def integrate_heat_flow(c: SampledCurve, t_end: float, dt: Optional[float] = None):
    """March the heat flow to t_end with adaptive CFL steps.

    Returns the final curve and the array of lengths after each step
    (index 0 is the initial length).
    """
    lengths = [float(np.sum(c.edge_lengths()))]
    t = 0.0
    while t < t_end - 1e-15:
        step = heat_cfl_dt(c) if dt is None else dt
        step = min(step, t_end - t)
        c = heat_flow_step(c, step)
        t += step
        lengths.append(float(np.sum(c.edge_lengths())))
    return c, np.array(lengths)


@dataclass
class VStarField:
    """Per-grid-point v* calculus fields of a homotopy.

    c_s, c_vstar, c_ss, c_vstar_vstar are (N_v, N_theta, n) arrays;
    m = |C_v*|^2 per point; big_m its per-slice arclength integral;
    lengths the slice lengths; l_vstar the per-slice value of
    d_v len = -int C_v* . C_ss ds. speed and tangential carry
    |d_theta C| and (C_v . C_s) for reuse by the steppers.
    """

    c_s: np.ndarray
    c_vstar: np.ndarray
    c_ss: np.ndarray
    c_vstar_vstar: np.ndarray
    m: np.ndarray
    big_m: np.ndarray
    lengths: np.ndarray
    l_vstar: np.ndarray
    speed: np.ndarray
    tangential: np.ndarray


def _speed_tangent(C: HomotopyGrid, order=2):
    W = C.d_theta(order)
    speed = np.linalg.norm(W, axis=2)
    floor = EPS_IMMERSED * C.scale_hint
    if np.any(speed <= floor):
        raise NotImmersedError("the v* calculus needs immersed slices")
    return speed, W / speed[..., None]


def d_s(C: HomotopyGrid, f, order=2, speed=None):
    """Arclength derivative of a per-grid-point field (scalar or vector)."""
    f = np.asarray(f, dtype=float)
    if speed is None:
        speed, _T = _speed_tangent(C, order)
    df = periodic_derivative(f, C.dtheta, axis=1, order=order)
    w = speed if f.ndim == 2 else speed[..., None]
    return df / w


def d_vstar(C: HomotopyGrid, f, order=2, speed=None, tangential=None):
    """Geometric v-derivative d_v f - (C_v . C_s) d_s f of a field."""
    f = np.asarray(f, dtype=float)
    if speed is None or tangential is None:
        speed, T = _speed_tangent(C, order)
        tangential = np.sum(C.d_v(order) * T, axis=2)
    fv = open_derivative(f, C.dv, axis=0, order=order)
    fs = d_s(C, f, order=order, speed=speed)
    a = tangential if f.ndim == 2 else tangential[..., None]
    return fv - a * fs


def vstar_calculus(C: HomotopyGrid, order=2) -> VStarField:
    """All v* fields of the grid by finite differences."""
    if not C.periodic:
        raise InputDataError("the v* calculus needs periodic slices")
    speed, T = _speed_tangent(C, order)
    c_v = C.d_v(order)
    tangential = np.sum(c_v * T, axis=2)
    c_vstar = c_v - tangential[..., None] * T
    c_ss = periodic_derivative(T, C.dtheta, axis=1, order=order) / speed[..., None]
    c_vstar_vstar = d_vstar(
        C, c_vstar, order=order, speed=speed, tangential=tangential
    )
    m = np.sum(c_vstar * c_vstar, axis=2)
    big_m = C.integrate_theta(m * speed)
    lengths = C.integrate_theta(speed)
    l_vstar = C.integrate_theta(-np.sum(c_vstar * c_ss, axis=2) * speed)
    return VStarField(
        c_s=T,
        c_vstar=c_vstar,
        c_ss=c_ss,
        c_vstar_vstar=c_vstar_vstar,
        m=m,
        big_m=big_m,
        lengths=lengths,
        l_vstar=l_vstar,
        speed=speed,
        tangential=tangential,
    )


def identity_residuals(C: HomotopyGrid) -> dict:
    """Max residuals of the six pointwise identities of the v* calculus.

    Expected O(grid spacing squared) on smooth arc-parameterized grids;
    the first two are exact by construction of the discrete fields.
    Rows near the v-ends are skipped so one-sided stencils do not
    dominate the interior measurement.
    """
    fields = vstar_calculus(C)
    sl = slice(2, C.n_v - 2) if C.n_v > 6 else slice(None)

    def mx(x):
        return float(np.max(np.abs(x[sl])))

    c_vstar_s = d_s(C, fields.c_vstar, speed=fields.speed)
    c_s_vstar = d_vstar(
        C, fields.c_s, speed=fields.speed, tangential=fields.tangential
    )
    return {
        "c_s.c_s=1": mx(np.sum(fields.c_s * fields.c_s, axis=2) - 1.0),
        "c_s.c_vstar=0": mx(np.sum(fields.c_s * fields.c_vstar, axis=2)),
        "c_vstar_s.c_vstar=-c_vstarvstar.c_s": mx(
            np.sum(c_vstar_s * fields.c_vstar, axis=2)
            + np.sum(fields.c_vstar_vstar * fields.c_s, axis=2)
        ),
        "c_vstar_s.c_s=-c_ss.c_vstar": mx(
            np.sum(c_vstar_s * fields.c_s, axis=2)
            + np.sum(fields.c_ss * fields.c_vstar, axis=2)
        ),
        "c_s_vstar.c_s=0": mx(np.sum(c_s_vstar * fields.c_s, axis=2)),
        "c_ss.c_s=0": mx(np.sum(fields.c_ss * fields.c_s, axis=2)),
    }


def homotopy_cfl_dt(C: HomotopyGrid, factor: Optional[ConformalFactor] = None) -> float:
    """Stable explicit step 0.2 min(ds^2, dv^2) / max coefficient."""
    fields = vstar_calculus(C)
    ds_min = float(np.min(fields.speed)) * C.dtheta
    if factor is None:
        coef = max(1.0, 0.5 * float(np.max(fields.m)))
    else:
        phi = np.atleast_1d(factor.value(fields.lengths))
        dphi = np.atleast_1d(factor.derivative(fields.lengths))
        s_coef = np.abs(
            0.5 * (dphi * fields.big_m)[:, None] - 0.5 * phi[:, None] * fields.m
        )
        coef = max(float(np.max(phi)), float(np.max(s_coef)), 1.0)
    return 0.2 * min(ds_min * ds_min, C.dv * C.dv) / coef


def _check_step_output(values, scale):
    if not np.all(np.isfinite(values)) or np.max(np.abs(values)) > 1e6 * scale:
        raise NumericalFailureError("flow blew up: field norm exceeded the cap")


def h0_homotopy_flow_step(C: HomotopyGrid, dt: float) -> HomotopyGrid:
    """Explicit Euler step of C_t = C_v*v* - (1/2) m C_ss on interior slices.

    The v* term diffuses along the homotopy direction; the arclength
    term is backward-parabolic, which is exactly the instability the
    conformal variant repairs. Endpoint slices stay pinned.
    """
    dt_max = homotopy_cfl_dt(C)
    if dt > dt_max * (1.0 + 1e-12):
        raise CFLError(f"dt = {dt:.3e} exceeds the stable bound {dt_max:.3e}")
    fields = vstar_calculus(C)
    rhs = fields.c_vstar_vstar - 0.5 * fields.m[..., None] * fields.c_ss
    values = C.values.copy()
    values[1:-1] += dt * rhs[1:-1]
    _check_step_output(values, C.scale_hint)
    return HomotopyGrid(values=values, periodic=True)


def stability_margin(C: HomotopyGrid, factor: ConformalFactor) -> float:
    """min over the grid of phi' M - phi m, nonnegative when lambda is stable."""
    fields = vstar_calculus(C)
    phi = np.atleast_1d(factor.value(fields.lengths))
    dphi = np.atleast_1d(factor.derivative(fields.lengths))
    margin = (dphi * fields.big_m)[:, None] - phi[:, None] * fields.m
    return float(np.min(margin))


def conformal_homotopy_flow_step(
    C: HomotopyGrid,
    factor: ConformalFactor,
    dt: float,
    drop_magnitude: bool = False,
) -> HomotopyGrid:
    """Explicit Euler step of the conformally stabilized flow.

    C_t = phi C_v*v* + phi' L_v* C_v* + (1/2)(phi' M - phi m) C_ss,
    with phi evaluated on slice lengths. The arclength coefficient is
    nonnegative when the factor's lambda came from stable_lambda at
    t = 0. drop_magnitude divides by phi, keeping only the shape of the
    stabilization; with the identity factor the step reduces to the
    plain flow exactly.
    """
    dt_max = homotopy_cfl_dt(C, factor)
    if dt > dt_max * (1.0 + 1e-12):
        raise CFLError(f"dt = {dt:.3e} exceeds the stable bound {dt_max:.3e}")
    fields = vstar_calculus(C)
    phi = np.atleast_1d(factor.value(fields.lengths))
    dphi = np.atleast_1d(factor.derivative(fields.lengths))
    coef_s = 0.5 * ((dphi * fields.big_m)[:, None] - phi[:, None] * fields.m)
    rhs = (
        phi[:, None, None] * fields.c_vstar_vstar
        + (dphi * fields.l_vstar)[:, None, None] * fields.c_vstar
        + coef_s[..., None] * fields.c_ss
    )
    if drop_magnitude:
        rhs = rhs / phi[:, None, None]
    values = C.values.copy()
    values[1:-1] += dt * rhs[1:-1]
    _check_step_output(values, C.scale_hint)
    return HomotopyGrid(values=values, periodic=True)


@dataclass
class FlowState:
    """Result of a homotopy flow run."""

    grid: HomotopyGrid
    t: float
    steps: int
    lam: float
    dt: float
    energy_trace: np.ndarray
    margin_trace: Optional[np.ndarray] = None
    converged: bool = False
    blew_up: bool = False
    last_displacement: float = np.inf


def _renormalize_interior(C: HomotopyGrid) -> HomotopyGrid:
    """Resample interior slices at equal arclength; endpoints stay bit-exact."""
    values = C.values.copy()
    scale = C.scale_hint
    for j in range(1, C.n_v - 1):
        curve = SampledCurve(points=values[j], scale_hint=scale)
        values[j] = resample_arclength(curve, C.n_theta).points
    return HomotopyGrid(values=values, periodic=True)


def run_homotopy_flow(
    C: HomotopyGrid,
    kind: str = "conformal",
    steps: int = 1000,
    dt: Optional[float] = None,
    factor: Optional[ConformalFactor] = None,
    lam: Optional[float] = None,
    drop_magnitude: bool = False,
    renormalize_every: int = 10,
    stop_displacement: float = 0.0,
) -> FlowState:
    """Drive the h0 or conformal homotopy flow for a number of steps.

    lambda (and with it the conformal factor, unless one is supplied)
    is frozen from stable_lambda at t = 0. Slices are re-sampled at
    equal arclength every renormalize_every steps to keep the unit
    speed assumption of the calculus honest. The run stops early when
    the per-step displacement falls below stop_displacement, and
    reports rather than raises a blow-up.
    """
    if kind not in ("h0", "conformal"):
        raise InputDataError(f"unknown homotopy flow kind {kind!r}")
    if kind == "conformal" and factor is None:
        if lam is None:
            lam = stable_lambda(C)
        factor = ConformalFactor.exp_length(lam)
    lam_value = float(lam) if lam is not None else (
        factor.lam if factor is not None else 0.0
    )
    spec = (
        EnergySpec(kind="conformal", factor=factor)
        if kind == "conformal"
        else EnergySpec(kind="geom_H0")
    )

    energies = [energy(C, spec).total]
    margins = [] if kind == "conformal" else None
    t = 0.0
    displacement = np.inf
    converged = False
    blew_up = False
    k = 0
    step_dt = dt
    for k in range(1, steps + 1):
        current_dt = homotopy_cfl_dt(C, factor if kind == "conformal" else None)
        if dt is not None:
            current_dt = min(dt, current_dt)
        try:
            if kind == "conformal":
                margins.append(stability_margin(C, factor))
                new = conformal_homotopy_flow_step(
                    C, factor, current_dt, drop_magnitude=drop_magnitude
                )
            else:
                new = h0_homotopy_flow_step(C, current_dt)
        except NumericalFailureError:
            blew_up = True
            break
        displacement = float(np.max(np.abs(new.values - C.values)))
        C = new
        t += current_dt
        step_dt = current_dt
        if renormalize_every and k % renormalize_every == 0:
            C = _renormalize_interior(C)
        energies.append(energy(C, spec).total)
        if stop_displacement and displacement < stop_displacement:
            converged = True
            break
    return FlowState(
        grid=C,
        t=t,
        steps=k,
        lam=lam_value,
        dt=step_dt if step_dt is not None else 0.0,
        energy_trace=np.array(energies),
        margin_trace=np.array(margins) if margins is not None else None,
        converged=converged,
        blew_up=blew_up,
        last_displacement=displacement,
    )


def _conformal_energy_o4(C: HomotopyGrid, factor: ConformalFactor) -> float:
    """Order-4 discretization of the conformal normal energy.

    The derivative check needs the discrete energy and the discrete
    gradient to share truncation terms beyond second order, so this
    intentionally does not reuse the order-2 energy module quadrature.
    """
    W = C.d_theta(order=4)
    V = C.d_v(order=4)
    speed = np.linalg.norm(W, axis=2)
    T = W / speed[..., None]
    tang = np.sum(V * T, axis=2)
    m = np.sum(V * V, axis=2) - tang * tang
    per_slice = np.sum(m * speed, axis=1) * C.dtheta
    lengths = np.sum(speed, axis=1) * C.dtheta
    phi = np.atleast_1d(factor.value(lengths))
    return float(np.trapezoid(phi * per_slice, dx=C.dv))


def _conformal_gradient_o4(C: HomotopyGrid, factor: ConformalFactor) -> np.ndarray:
    """Gradient field G with dE/dt = -integral of C_t . G ds dv, order 4."""
    order = 4
    speed, T = _speed_tangent(C, order)
    c_v = C.d_v(order)
    tang = np.sum(c_v * T, axis=2)
    c_vstar = c_v - tang[..., None] * T
    c_ss = periodic_derivative(T, C.dtheta, axis=1, order=order) / speed[..., None]
    c_vstar_vstar = d_vstar(C, c_vstar, order=order, speed=speed, tangential=tang)
    m = np.sum(c_vstar * c_vstar, axis=2)
    big_m = np.sum(m * speed, axis=1) * C.dtheta
    lengths = np.sum(speed, axis=1) * C.dtheta
    l_vstar = np.sum(-np.sum(c_vstar * c_ss, axis=2) * speed, axis=1) * C.dtheta
    phi = np.atleast_1d(factor.value(lengths))[:, None, None]
    dphi = np.atleast_1d(factor.derivative(lengths))[:, None, None]
    vv_dot_s = np.sum(c_vstar_vstar * T, axis=2)[..., None]
    vstar_dot_ss = np.sum(c_vstar * c_ss, axis=2)[..., None]
    return (
        2.0 * dphi * l_vstar[:, None, None] * c_vstar
        + 2.0 * phi * c_vstar_vstar
        - 2.0 * phi * vv_dot_s * T
        - 2.0 * phi * vstar_dot_ss * c_vstar
        + (phi * m[..., None] + dphi * big_m[:, None, None]) * c_ss
    )


def _smooth_perturbation(C: HomotopyGrid, rng) -> np.ndarray:
    """Random low-frequency field pinned at the v-endpoints."""
    thetas = C.theta_values()
    v = C.v_grid()
    window = np.sin(np.pi * v) ** 2
    P = np.zeros_like(C.values)
    for p in range(1, 4):
        amp = rng.normal(size=C.dim) / p
        phase = rng.uniform(0.0, 2.0 * np.pi)
        mode = np.cos(p * thetas + phase)
        P += window[:, None, None] * mode[None, :, None] * amp[None, None, :]
    return P * C.scale_hint


def energy_derivative_check(
    C: HomotopyGrid,
    flow: str = "h0",
    trials: int = 10,
    step: float = 1e-5,
    seed: int = 0,
    lam: Optional[float] = None,
) -> float:
    """Max relative error between analytic dE/dt and central differences.

    For each random pinned perturbation P, the analytic derivative
    -int P . G ds dv is compared against (E(C + hP) - E(C - hP)) / 2h,
    both in the shared order-4 discretization.
    """
    if flow == "h0":
        factor = ConformalFactor.identity()
    elif flow == "conformal":
        factor = ConformalFactor.exp_length(
            stable_lambda(C) if lam is None else lam
        )
    else:
        raise InputDataError(f"unknown flow {flow!r} for the derivative check")

    rng = np.random.default_rng(seed)
    G = _conformal_gradient_o4(C, factor)
    speed = np.linalg.norm(C.d_theta(order=4), axis=2)
    worst = 0.0
    for _ in range(trials):
        P = _smooth_perturbation(C, rng)
        integrand = np.sum(P * G, axis=2) * speed
        analytic = -float(np.trapezoid(np.sum(integrand, axis=1) * C.dtheta, dx=C.dv))
        plus = HomotopyGrid(values=C.values + step * P, periodic=True)
        minus = HomotopyGrid(values=C.values - step * P, periodic=True)
        fd = (
            _conformal_energy_o4(plus, factor)
            - _conformal_energy_o4(minus, factor)
        ) / (2.0 * step)
        denom = max(abs(fd), 1e-12)
        worst = max(worst, abs(analytic - fd) / denom)
    return worst


def _random_smooth_scalar(C: HomotopyGrid, rng):
    """A smooth scalar field from a few Fourier-in-theta, cosine-in-v modes."""
    thetas = C.theta_values()
    v = C.v_grid()
    f = np.zeros((C.n_v, C.n_theta))
    for p in range(1, 4):
        for q in range(3):
            amp = rng.normal() / (p * (q + 1))
            phase = rng.uniform(0.0, 2.0 * np.pi)
            f += amp * np.cos(p * thetas + phase)[None, :] * np.cos(
                q * np.pi * v
            )[:, None]
    return f


def commutator_check(C: HomotopyGrid, trials: int = 5, seed: int = 0) -> float:
    """Max residual of the discrete commutation rules on random fields.

    Checks d_v* d_s f = d_s d_v* f + (C_v* . C_ss) d_s f, the plain-v
    commutator d_v d_s f = d_s d_v f - (C_s . d_s C_v) d_s f, and the
    integral rule d_v int f ds = int (f_v* - f C_v* . C_ss) ds.
    Residuals are measured away from the v-ends where one-sided
    stencils would dominate; all three converge at second order.
    """
    fields = vstar_calculus(C)
    rng = np.random.default_rng(seed)
    sl = slice(2, C.n_v - 2) if C.n_v > 6 else slice(None)
    vstar_dot_ss = np.sum(fields.c_vstar * fields.c_ss, axis=2)
    c_v = C.d_v()
    c_vs = d_s(C, c_v, speed=fields.speed)
    ts_term = np.sum(fields.c_s * c_vs, axis=2)

    worst = 0.0
    for _ in range(trials):
        f = _random_smooth_scalar(C, rng)
        fs = d_s(C, f, speed=fields.speed)
        f_vstar = d_vstar(C, f, speed=fields.speed, tangential=fields.tangential)

        lhs = d_vstar(C, fs, speed=fields.speed, tangential=fields.tangential)
        rhs = d_s(C, f_vstar, speed=fields.speed) + vstar_dot_ss * fs
        worst = max(worst, float(np.max(np.abs(lhs[sl] - rhs[sl]))))

        lhs_v = open_derivative(fs, C.dv, axis=0)
        rhs_v = d_s(C, open_derivative(f, C.dv, axis=0), speed=fields.speed)
        rhs_v = rhs_v - ts_term * fs
        worst = max(worst, float(np.max(np.abs(lhs_v[sl] - rhs_v[sl]))))

        slice_int = C.integrate_theta(f * fields.speed)
        lhs_i = open_derivative(slice_int, C.dv, axis=0)
        rhs_i = C.integrate_theta((f_vstar - f * vstar_dot_ss) * fields.speed)
        worst = max(worst, float(np.max(np.abs(lhs_i[sl] - rhs_i[sl]))))
    return worst

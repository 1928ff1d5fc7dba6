"""Homotopy grids joining two curves and their reparameterizations.

A homotopy is sampled on a tensor grid: values[j, i] = C(theta_i, v_j)
with v_j = j/(N_v - 1) on [0, 1] inclusive. The theta axis is periodic
(theta_i = 2*pi*i/N_theta) for families of closed curves; a few of the
pathological families live on the open square [0, 1]^2 instead, which
the periodic flag records. Open grids use u_i = i/(N_theta - 1)
inclusive, one-sided derivatives at the u ends, and non-periodic
trapezoid quadrature.
"""

from dataclasses import dataclass

import numpy as np

from .curves import (
    SampledCurve,
    open_derivative,
    periodic_derivative,
    resample_arclength,
    theta_grid,
)
from .errors import GridTooCoarseError, InputDataError, NotImmersedError

# Same relative immersion threshold as for single curves.
from .curves import EPS_IMMERSED


@dataclass
class HomotopyGrid:
    """Sampled homotopy C(theta_i, v_j) stored as values[j, i]."""

    values: np.ndarray
    periodic: bool = True

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 3:
            raise InputDataError("homotopy values must have shape (N_v, N_theta, n)")
        if vals.shape[0] < 2:
            raise InputDataError("a homotopy needs at least 2 slices in v")
        if vals.shape[1] < 3:
            raise InputDataError("a homotopy needs at least 3 samples in theta")
        if vals.shape[2] < 2:
            raise InputDataError("homotopy values live in R^n with n >= 2")
        if not np.all(np.isfinite(vals)):
            raise InputDataError("homotopy values contain non-finite entries")
        self.values = vals

    @property
    def n_v(self):
        return self.values.shape[0]

    @property
    def n_theta(self):
        return self.values.shape[1]

    @property
    def dim(self):
        return self.values.shape[2]

    @property
    def dv(self):
        return 1.0 / (self.n_v - 1)

    @property
    def dtheta(self):
        if self.periodic:
            return 2.0 * np.pi / self.n_theta
        return 1.0 / (self.n_theta - 1)

    @property
    def scale_hint(self):
        flat = self.values.reshape(-1, self.dim)
        diag = float(np.linalg.norm(flat.max(axis=0) - flat.min(axis=0)))
        return diag if diag > 0.0 else 1.0

    def v_grid(self):
        return np.linspace(0.0, 1.0, self.n_v)

    def theta_values(self):
        if self.periodic:
            return theta_grid(self.n_theta)
        return np.linspace(0.0, 1.0, self.n_theta)

    def d_theta(self, order=2):
        if self.periodic:
            return periodic_derivative(self.values, self.dtheta, axis=1, order=order)
        return open_derivative(self.values, self.dtheta, axis=1, order=order)

    def d_v(self, order=2):
        return open_derivative(self.values, self.dv, axis=0, order=order)

    def slice_curve(self, j) -> SampledCurve:
        if not self.periodic:
            raise InputDataError("open-square grids have no closed slice curves")
        return SampledCurve(points=self.values[j].copy(), scale_hint=self.scale_hint)

    @property
    def endpoints(self):
        return self.slice_curve(0), self.slice_curve(self.n_v - 1)

    def integrate_theta(self, samples):
        """Quadrature along theta of per-sample values (..., N_theta)."""
        if self.periodic:
            return np.sum(samples, axis=-1) * self.dtheta
        return np.trapezoid(samples, dx=self.dtheta, axis=-1)

    def integrate_v(self, per_slice):
        """Trapezoid quadrature along v of per-slice values (N_v, ...)."""
        return np.trapezoid(per_slice, dx=self.dv, axis=0)


@dataclass
class LengthProfile:
    """Per-slice arclengths l_j = len(C(., v_j))."""

    l: np.ndarray


def sample_homotopy(fn, n_theta, n_v, periodic=True) -> HomotopyGrid:
    """Sample fn(thetas, v) row by row into a homotopy grid.

    fn receives the full theta (or u) grid and one v value and must
    return an (N_theta, n) array.
    """
    thetas = theta_grid(n_theta) if periodic else np.linspace(0.0, 1.0, n_theta)
    vs = np.linspace(0.0, 1.0, n_v)
    rows = [np.asarray(fn(thetas, v), dtype=float) for v in vs]
    return HomotopyGrid(values=np.stack(rows, axis=0), periodic=periodic)


def linear_homotopy(c0: SampledCurve, c1: SampledCurve, n_v: int) -> HomotopyGrid:
    """Pointwise linear interpolation C(theta, v) = (1 - v) c0 + v c1."""
    if c0.n_samples != c1.n_samples or c0.dim != c1.dim:
        raise InputDataError(
            f"endpoint curves disagree: {c0.points.shape} vs {c1.points.shape}"
        )
    if n_v < 2:
        raise InputDataError("a homotopy needs at least 2 slices in v")
    vs = np.linspace(0.0, 1.0, n_v)[:, None, None]
    values = (1.0 - vs) * c0.points[None] + vs * c1.points[None]
    return HomotopyGrid(values=values, periodic=True)


def length_profile(C: HomotopyGrid) -> LengthProfile:
    """Arclength of every slice."""
    speed = np.linalg.norm(C.d_theta(), axis=2)
    return LengthProfile(l=C.integrate_theta(speed))


def slice_speeds(C: HomotopyGrid):
    """Per-sample derivative magnitudes |d_theta C| as an (N_v, N_theta) array."""
    return np.linalg.norm(C.d_theta(), axis=2)


def _require_immersed_slices(C: HomotopyGrid, what):
    speed = slice_speeds(C)
    floor = EPS_IMMERSED * C.scale_hint
    bad = np.where(np.any(speed <= floor, axis=1))[0]
    if bad.size:
        raise NotImmersedError(f"{what} needs immersed slices; slice {bad[0]} is degenerate")


def periodic_interp(values, tau, dtheta, kind="cubic"):
    """Interpolate periodic samples values[i] = f(i * dtheta) at tau.

    kind 'cubic' uses the four-point piecewise Lagrange cubic, 'linear'
    the two-point rule. tau may be any array; it wraps periodically.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    u = np.asarray(tau, dtype=float) / dtheta
    base = np.floor(u).astype(int)
    t = u - base
    i1 = np.mod(base, n)
    if kind == "linear" or n < 8:
        i2 = np.mod(i1 + 1, n)
        w = t.reshape(t.shape + (1,) * (values.ndim - 1))
        return (1.0 - w) * values[i1] + w * values[i2]
    i0 = np.mod(i1 - 1, n)
    i2 = np.mod(i1 + 1, n)
    i3 = np.mod(i1 + 2, n)
    # Lagrange cubic on nodes at t = -1, 0, 1, 2.
    w0 = -t * (t - 1.0) * (t - 2.0) / 6.0
    w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
    w2 = -(t + 1.0) * t * (t - 2.0) / 2.0
    w3 = (t + 1.0) * t * (t - 1.0) / 6.0
    shape = t.shape + (1,) * (values.ndim - 1)
    return (
        w0.reshape(shape) * values[i0]
        + w1.reshape(shape) * values[i1]
        + w2.reshape(shape) * values[i2]
        + w3.reshape(shape) * values[i3]
    )


def reparam_arclength(C: HomotopyGrid) -> HomotopyGrid:
    """Resample every slice at equal arclength spacing.

    Slice images are unchanged up to interpolation on the sample
    polygon; the first sample of each slice stays put, which fixes the
    gauge freedom of the arc parameter.
    """
    if not C.periodic:
        raise InputDataError("arclength reparameterization needs periodic slices")
    _require_immersed_slices(C, "arclength reparameterization")
    scale = C.scale_hint
    rows = []
    for j in range(C.n_v):
        curve = SampledCurve(points=C.values[j], scale_hint=scale)
        rows.append(resample_arclength(curve, C.n_theta).points)
    return HomotopyGrid(values=np.stack(rows, axis=0), periodic=True)


@dataclass
class HorizontalResult:
    """Output of the horizontal reparameterization.

    grid is the reparameterized homotopy, phi the reparameterization
    map phi(theta_i, v_j) with phi(theta, 0) = theta, and residual the
    measured max |pi_T d_v C| of the output.
    """

    grid: HomotopyGrid
    phi: np.ndarray
    residual: float


def _tangential_rate(points, dtheta, d_v_row, scale):
    """Row field -<d_v C, T> / |dC/dtheta| used by the horizontal ODE."""
    deriv = periodic_derivative(points, dtheta, axis=0)
    speed = np.linalg.norm(deriv, axis=1)
    if np.any(speed <= EPS_IMMERSED * scale):
        raise NotImmersedError("horizontal reparameterization met a degenerate slice")
    T = deriv / speed[:, None]
    return -np.sum(d_v_row * T, axis=1) / speed


def max_tangential_speed(C: HomotopyGrid) -> float:
    """max over the grid of |<d_v C, T>|, the tangential motion magnitude."""
    deriv = C.d_theta()
    speed = np.linalg.norm(deriv, axis=2)
    floor = EPS_IMMERSED * C.scale_hint
    T = np.zeros_like(deriv)
    good = speed > floor
    T[good] = deriv[good] / speed[good][:, None]
    return float(np.max(np.abs(np.sum(C.d_v() * T, axis=2))))


def reparam_horizontal(C: HomotopyGrid) -> HorizontalResult:
    """Reparameterize so the v-motion is purely normal.

    Integrates d_v phi = -<d_v C(phi, v), T(phi, v)> / |dC/dtheta(phi, v)|
    with phi(theta, 0) = theta, classical RK4 in v with half-step fields
    from averaged adjacent slices, periodic cubic interpolation in theta
    (linear below 8 samples). Raises GridTooCoarseError when the map
    stops being monotone in theta on the grid.
    """
    if not C.periodic:
        raise InputDataError("horizontal reparameterization needs periodic slices")
    _require_immersed_slices(C, "horizontal reparameterization")
    scale = C.scale_hint
    dtheta = C.dtheta
    dv = C.dv
    thetas = theta_grid(C.n_theta)
    d_v = C.d_v()

    rate_rows = [
        _tangential_rate(C.values[j], dtheta, d_v[j], scale) for j in range(C.n_v)
    ]

    phi = np.empty((C.n_v, C.n_theta))
    phi[0] = thetas
    for j in range(C.n_v - 1):
        mid_points = 0.5 * (C.values[j] + C.values[j + 1])
        mid_dv = (C.values[j + 1] - C.values[j]) / dv
        rate_mid = _tangential_rate(mid_points, dtheta, mid_dv, scale)

        p = phi[j]
        k1 = periodic_interp(rate_rows[j], p, dtheta)
        k2 = periodic_interp(rate_mid, p + 0.5 * dv * k1, dtheta)
        k3 = periodic_interp(rate_mid, p + 0.5 * dv * k2, dtheta)
        k4 = periodic_interp(rate_rows[j + 1], p + dv * k3, dtheta)
        phi[j + 1] = p + (dv / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    # phi = theta + g with g periodic in theta, so psi = 1 + dg/dtheta.
    psi = 1.0 + periodic_derivative(phi - thetas[None, :], dtheta, axis=1)
    if np.min(psi) <= 1e-8:
        raise GridTooCoarseError(
            "reparameterization map lost monotonicity; the grid is too coarse "
            "to resolve the tangential stretching"
        )

    rows = [periodic_interp(C.values[j], phi[j], dtheta) for j in range(C.n_v)]
    grid = HomotopyGrid(values=np.stack(rows, axis=0), periodic=True)
    residual = max_tangential_speed(grid)
    return HorizontalResult(grid=grid, phi=phi, residual=residual)


def shift_unwind(C: HomotopyGrid, phi_of_v) -> HomotopyGrid:
    """Rigid per-slice shift C~(theta, v) = C(theta + phi(v), v)."""
    if not C.periodic:
        raise InputDataError("shift unwinding needs periodic slices")
    phi = np.asarray(phi_of_v, dtype=float)
    if phi.shape != (C.n_v,):
        raise InputDataError(f"phi must have one entry per slice, got shape {phi.shape}")
    thetas = theta_grid(C.n_theta)
    rows = [
        periodic_interp(C.values[j], thetas + phi[j], C.dtheta) for j in range(C.n_v)
    ]
    return HomotopyGrid(values=np.stack(rows, axis=0), periodic=True)


def optimal_unwind_shift(C: HomotopyGrid):
    """Shift profile phi(v) minimizing the tangential energy of the shifted grid.

    Minimizing int |pi_T d_v C~|^2 ds over rigid shifts gives per slice
    d_v phi = -int <d_v C, T> |dC/dtheta| dtheta / int |dC/dtheta|^2 dtheta,
    which subtracts the mean tangential speed; phi is its cumulative
    trapezoid with phi(0) = 0.
    """
    if not C.periodic:
        raise InputDataError("shift unwinding needs periodic slices")
    _require_immersed_slices(C, "optimal unwinding shift")
    deriv = C.d_theta()
    speed = np.linalg.norm(deriv, axis=2)
    T = deriv / speed[..., None]
    tangential = np.sum(C.d_v() * T, axis=2)
    numer = C.integrate_theta(tangential * speed)
    denom = C.integrate_theta(speed * speed)
    rate = -numer / denom
    phi = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * C.dv)])
    return phi

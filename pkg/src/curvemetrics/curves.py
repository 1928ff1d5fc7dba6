"""Discrete calculus on closed sampled curves.

A curve is N uniform samples on the periodic parameter grid
theta_i = 2*pi*i/N, stored without a duplicated closing point.
Derivatives use periodic central differences and quadrature is the
periodic trapezoid rule, which on a uniform periodic grid is a plain
sum times the grid spacing.

Deformations of a curve are plain (N, n) float arrays, one vector per
sample; no wrapper type is used for them.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InputDataError, NotImmersedError

# Relative immersion threshold: a discrete derivative (or edge) counts
# as zero when its length is below EPS_IMMERSED times the curve's
# scale_hint.
EPS_IMMERSED = 1e-9


def theta_grid(n):
    """Uniform periodic parameter grid theta_i = 2*pi*i/n."""
    return 2.0 * np.pi * np.arange(n) / n


def periodic_derivative(values, spacing, axis=0, order=2):
    """Central-difference derivative along a periodic axis.

    order 2 uses the classic two-neighbor stencil, order 4 the
    five-point stencil. Both wrap around the ends.
    """
    v = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    if order == 2:
        out = (np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)) / (2.0 * spacing)
    elif order == 4:
        out = (
            -np.roll(v, -2, axis=0)
            + 8.0 * np.roll(v, -1, axis=0)
            - 8.0 * np.roll(v, 1, axis=0)
            + np.roll(v, 2, axis=0)
        ) / (12.0 * spacing)
    else:
        raise InputDataError(f"unsupported stencil order {order}")
    return np.moveaxis(out, 0, axis)


def open_derivative(values, spacing, axis=0, order=2):
    """Derivative along a non-periodic axis.

    Central differences in the interior with one-sided stencils of the
    same order at both ends.
    """
    v = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    m = v.shape[0]
    out = np.empty_like(v)
    if order == 2:
        if m < 3:
            raise InputDataError("need at least 3 samples for a second-order derivative")
        out[1:-1] = (v[2:] - v[:-2]) / (2.0 * spacing)
        out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * spacing)
        out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * spacing)
    elif order == 4:
        if m < 6:
            raise InputDataError("need at least 6 samples for a fourth-order derivative")
        out[2:-2] = (-v[4:] + 8.0 * v[3:-1] - 8.0 * v[1:-3] + v[:-4]) / (12.0 * spacing)
        # One-sided fourth-order stencils for the two points at each end.
        c0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
        c1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0
        out[0] = np.tensordot(c0, v[:5], axes=(0, 0)) / spacing
        out[1] = np.tensordot(c1, v[:5], axes=(0, 0)) / spacing
        out[-1] = -np.tensordot(c0, v[-5:][::-1], axes=(0, 0)) / spacing
        out[-2] = -np.tensordot(c1, v[-5:][::-1], axes=(0, 0)) / spacing
    else:
        raise InputDataError(f"unsupported stencil order {order}")
    return np.moveaxis(out, 0, axis)


@dataclass
class SampledCurve:
    """Closed curve sampled at theta_i = 2*pi*i/N, no closing duplicate.

    scale_hint is the positive length used for relative tolerances; by
    default it is the bounding-box diagonal of the samples (1.0 for a
    fully degenerate curve).
    """

    points: np.ndarray
    scale_hint: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise InputDataError("curve points must be a 2d array of shape (N, n)")
        if pts.shape[0] < 3:
            raise InputDataError(f"need at least 3 samples, got {pts.shape[0]}")
        if pts.shape[1] < 2:
            raise InputDataError(f"curves live in R^n with n >= 2, got n = {pts.shape[1]}")
        if not np.all(np.isfinite(pts)):
            raise InputDataError("curve points contain non-finite values")
        self.points = pts
        if self.scale_hint <= 0.0:
            diag = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
            self.scale_hint = diag if diag > 0.0 else 1.0

    @property
    def n_samples(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def dtheta(self):
        return 2.0 * np.pi / self.points.shape[0]

    def thetas(self):
        return theta_grid(self.n_samples)

    def edge_lengths(self):
        """Lengths |p_{i+1} - p_i| of the N polygon edges (wrapping)."""
        return np.linalg.norm(np.roll(self.points, -1, axis=0) - self.points, axis=1)

    def derivative(self):
        """Central-difference derivative of the position samples."""
        return periodic_derivative(self.points, self.dtheta, axis=0)


@dataclass
class TangentFrame:
    """Unit tangents of a curve with the induced projectors.

    T is zero at samples whose discrete derivative is below the
    immersion threshold; there the normal projector is the identity and
    the tangential projector is zero.
    """

    T: np.ndarray
    speed: np.ndarray

    def project_normal(self, vectors):
        v = _match_deformation(vectors, self.T)
        return v - np.sum(v * self.T, axis=-1, keepdims=True) * self.T

    def project_tangent(self, vectors):
        v = _match_deformation(vectors, self.T)
        return np.sum(v * self.T, axis=-1, keepdims=True) * self.T


@dataclass
class CurvatureField:
    """Curvature data of a curve.

    H is the curvature vector (the arclength derivative of the unit
    tangent), kappa the signed planar scalar (None for n > 2), and
    total_mass the sum of absolute turning angles of the sample
    polygon, the discrete total variation of the tangent direction.
    """

    H: np.ndarray
    kappa: np.ndarray | None
    total_mass: float


@dataclass
class DirectionFunctionSample:
    """Tangent-angle function of a unit-speed planar curve.

    theta_of_s has M+1 samples at s_k = 2*pi*k/M on [0, 2*pi] inclusive;
    the last sample equals the first plus 2*pi*winding.
    """

    theta_of_s: np.ndarray
    winding: int = field(default=0)

    def __post_init__(self):
        th = np.asarray(self.theta_of_s, dtype=float)
        if th.ndim != 1 or th.shape[0] < 4:
            raise InputDataError("direction function needs a 1d array of at least 4 samples")
        self.theta_of_s = th

    @property
    def m_intervals(self):
        return self.theta_of_s.shape[0] - 1

    def s_grid(self):
        return np.linspace(0.0, 2.0 * np.pi, self.theta_of_s.shape[0])


def _match_deformation(vectors, reference):
    v = np.asarray(vectors, dtype=float)
    if v.shape != reference.shape:
        raise InputDataError(
            f"deformation shape {v.shape} does not match curve samples {reference.shape}"
        )
    return v


def immersed(c: SampledCurve) -> bool:
    """True when every polygon edge exceeds the immersion threshold."""
    return bool(np.all(c.edge_lengths() > EPS_IMMERSED * c.scale_hint))


def tangent_frame(c: SampledCurve) -> TangentFrame:
    """Unit tangents by central differences, zero below the immersion threshold."""
    deriv = c.derivative()
    speed = np.linalg.norm(deriv, axis=1)
    T = np.zeros_like(deriv)
    mask = speed > EPS_IMMERSED * c.scale_hint
    T[mask] = deriv[mask] / speed[mask][:, None]
    return TangentFrame(T=T, speed=speed)


def project(frame: TangentFrame, vectors, which: str):
    """Project per-sample vectors onto the normal or tangent space."""
    if which == "normal":
        return frame.project_normal(vectors)
    if which == "tangent":
        return frame.project_tangent(vectors)
    raise InputDataError(f"projection must be 'normal' or 'tangent', got {which!r}")


def arclength(c: SampledCurve) -> float:
    """Curve length, the periodic trapezoid of the derivative magnitude."""
    deriv = c.derivative()
    return float(np.sum(np.linalg.norm(deriv, axis=1)) * c.dtheta)


def curvature_kernel(points, dtheta, scale_hint):
    """Shared discrete curvature computation.

    Returns (H, T, speed) where H = d_s T with the convention that both
    T and H vanish at samples below the immersion threshold. The same
    kernel backs curvature(), the curve flows, and the bending energy,
    so their values agree exactly where they overlap.
    """
    deriv = periodic_derivative(points, dtheta, axis=0)
    speed = np.linalg.norm(deriv, axis=1)
    mask = speed > EPS_IMMERSED * scale_hint
    T = np.zeros_like(deriv)
    T[mask] = deriv[mask] / speed[mask][:, None]
    dT = periodic_derivative(T, dtheta, axis=0)
    H = np.zeros_like(dT)
    H[mask] = dT[mask] / speed[mask][:, None]
    return H, T, speed


def planar_normal(T):
    """Unit normal a quarter turn anticlockwise from the tangent."""
    N = np.empty_like(T)
    N[:, 0] = -T[:, 1]
    N[:, 1] = T[:, 0]
    return N


def _turning_mass(points):
    """Sum of absolute turning angles at the polygon vertices."""
    edges = np.roll(points, -1, axis=0) - points
    prev = np.roll(edges, 1, axis=0)
    dot = np.sum(prev * edges, axis=1)
    if points.shape[1] == 2:
        cross = np.abs(prev[:, 0] * edges[:, 1] - prev[:, 1] * edges[:, 0])
    else:
        n2 = np.sum(prev * prev, axis=1) * np.sum(edges * edges, axis=1) - dot * dot
        cross = np.sqrt(np.maximum(n2, 0.0))
    return float(np.sum(np.arctan2(cross, dot)))


def curvature(c: SampledCurve) -> CurvatureField:
    """Curvature vector, planar signed curvature, and turning-angle mass."""
    if not immersed(c):
        raise NotImmersedError("curvature needs an immersed curve")
    H, T, _speed = curvature_kernel(c.points, c.dtheta, c.scale_hint)
    kappa = None
    if c.dim == 2:
        kappa = np.sum(H * planar_normal(T), axis=1)
    return CurvatureField(H=H, kappa=kappa, total_mass=_turning_mass(c.points))


def lift_direction(c: SampledCurve) -> DirectionFunctionSample:
    """Continuous tangent-angle lift of a unit-speed planar curve of length 2*pi.

    The branch is chosen by accumulating per-sample angle increments
    forced into (-pi, pi], so the sampling must resolve the turning
    (less than half a turn between neighbors).
    """
    if c.dim != 2:
        raise InputDataError("direction functions are defined for planar curves only")
    if not immersed(c):
        raise NotImmersedError("direction lift needs an immersed curve")
    length = arclength(c)
    if abs(length - 2.0 * np.pi) > 0.01 * 2.0 * np.pi:
        raise InputDataError(
            f"curve length {length:.6g} is not 2*pi; normalize before lifting"
        )
    deriv = c.derivative()
    speed = np.linalg.norm(deriv, axis=1)
    mean = float(np.mean(speed))
    if (speed.max() - speed.min()) > 0.01 * mean:
        raise InputDataError("direction lift needs uniform arclength sampling")
    angles = np.arctan2(deriv[:, 1], deriv[:, 0])
    steps = np.diff(np.concatenate([angles, angles[:1]]))
    steps = np.mod(steps + np.pi, 2.0 * np.pi) - np.pi
    steps[steps == -np.pi] = np.pi
    theta = np.concatenate([[angles[0]], angles[0] + np.cumsum(steps)])
    winding = int(np.rint((theta[-1] - theta[0]) / (2.0 * np.pi)))
    return DirectionFunctionSample(theta_of_s=theta, winding=winding)


def unlift_direction(d: DirectionFunctionSample):
    """Integrate a direction function back to a polyline.

    Returns (curve, closure_defect). The integral is a cumulative
    trapezoid of (cos theta, sin theta); a direction function that does
    not satisfy the closure constraints yields an open polyline, which
    is reported through the defect rather than raised.
    """
    theta = d.theta_of_s
    ds = 2.0 * np.pi / d.m_intervals
    f = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    increments = 0.5 * (f[1:] + f[:-1]) * ds
    xi = np.vstack([np.zeros((1, 2)), np.cumsum(increments, axis=0)])
    defect = float(np.linalg.norm(xi[-1] - xi[0]))
    return SampledCurve(points=xi[:-1]), defect


def resample_arclength(c: SampledCurve, m: int) -> SampledCurve:
    """Resample to m points at equal arclength spacing.

    Piecewise-linear interpolation along the sample polygon at equal
    increments of the cumulative edge length.
    """
    if m < 3:
        raise InputDataError(f"need at least 3 output samples, got {m}")
    if not immersed(c):
        raise NotImmersedError("arclength resampling needs an immersed curve")
    edges = c.edge_lengths()
    cum = np.concatenate([[0.0], np.cumsum(edges)])
    total = cum[-1]
    targets = np.arange(m) * (total / m)
    idx = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, len(edges) - 1)
    frac = (targets - cum[idx]) / edges[idx]
    nxt = np.roll(c.points, -1, axis=0)
    newpts = c.points[idx] + frac[:, None] * (nxt[idx] - c.points[idx])
    return SampledCurve(points=newpts, scale_hint=c.scale_hint)

"""Metrics and path energies on spaces of closed curves.

The menu of kinds mirrors the metrics the library supports:

- param_H0: parametric L2 metric, no geometry, integrals in dtheta.
- intermediate: L2 weighted by arclength measure (inner products only).
- geom_H0: arclength-weighted L2 of the normal component; its path
  energy is written E^N throughout the tests.
- J: bending-weighted energy |H|^2 |pi_N d_v C|^2 ds dv (not a metric).
- MM: geom_H0 plus A times the bending term, A >= 0.
- alpha_beta: |pi_{W-perp} V|^alpha |W|^beta with W = d_theta C, the
  family behind the tessellation and wiggle examples.
- conformal: geom_H0 scaled by a positive factor phi(len(c)).

Degenerate samples (|d_theta C| = 0) contribute nothing to geometric
integrands because the arclength weight vanishes there; this lets
energies of homotopies with a collapsing slice, such as cones, be
evaluated without special casing.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .curves import (
    EPS_IMMERSED,
    SampledCurve,
    arclength,
    curvature_kernel,
    immersed,
    tangent_frame,
)
from .errors import InputDataError, NotImmersedError, StalledHomotopyError
from .homotopy import HomotopyGrid, length_profile

KIND_ALIASES = {
    "param": "param_H0",
    "param_h0": "param_H0",
    "en": "geom_H0",
    "geom_h0": "geom_H0",
    "h0": "geom_H0",
    "j": "J",
    "bend": "J",
    "mm": "MM",
    "enbend": "MM",
    "ab": "alpha_beta",
    "alpha_beta": "alpha_beta",
    "intermediate": "intermediate",
    "conformal": "conformal",
}

ENERGY_KINDS = ("param_H0", "geom_H0", "J", "MM", "alpha_beta", "conformal")
INNER_KINDS = ("param_H0", "intermediate", "geom_H0", "MM", "conformal")


def normalize_kind(kind: str) -> str:
    key = str(kind).strip()
    canonical = KIND_ALIASES.get(key.lower())
    if canonical is None:
        raise InputDataError(f"unknown energy kind {kind!r}")
    return canonical


@dataclass
class ConformalFactor:
    """Positive factor phi applied to the geom_H0 integrand, as a function
    of slice length. exp_lambda_L is the stabilized choice phi = e^(lambda L);
    custom accepts any positive length functional together with its
    derivative in L.
    """

    kind: str = "identity"
    lam: float = 0.0
    fn: Optional[Callable[[float], float]] = None
    dfn: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if self.kind not in ("identity", "exp_lambda_L", "custom"):
            raise InputDataError(f"unknown conformal factor kind {self.kind!r}")
        if self.kind == "exp_lambda_L" and self.lam < 0.0:
            raise InputDataError("exp_lambda_L needs lambda >= 0")
        if self.kind == "custom" and (self.fn is None or self.dfn is None):
            raise InputDataError("custom conformal factor needs fn and dfn")

    @classmethod
    def identity(cls):
        return cls(kind="identity")

    @classmethod
    def exp_length(cls, lam):
        return cls(kind="exp_lambda_L", lam=float(lam))

    @classmethod
    def length(cls):
        """phi(c) = len(c), the hypothesis phi >= len in the stretch example."""
        return cls(kind="custom", fn=lambda L: L, dfn=lambda L: 1.0)

    def value(self, length):
        length = np.asarray(length, dtype=float)
        if self.kind == "identity":
            out = np.ones_like(length)
        elif self.kind == "exp_lambda_L":
            out = np.exp(self.lam * length)
        else:
            out = np.asarray(np.vectorize(self.fn)(length), dtype=float)
        if np.any(out <= 0.0):
            raise InputDataError("conformal factor must stay positive")
        return out if out.ndim else float(out)

    def derivative(self, length):
        length = np.asarray(length, dtype=float)
        if self.kind == "identity":
            out = np.zeros_like(length)
        elif self.kind == "exp_lambda_L":
            out = self.lam * np.exp(self.lam * length)
        else:
            out = np.asarray(np.vectorize(self.dfn)(length), dtype=float)
        return out if out.ndim else float(out)


@dataclass
class EnergySpec:
    """Selects a metric or energy kind and its parameters."""

    kind: str = "geom_H0"
    A: float = 0.0
    alpha: float = 2.0
    beta: float = 1.0
    factor: ConformalFactor = field(default_factory=ConformalFactor.identity)

    def __post_init__(self):
        self.kind = normalize_kind(self.kind)
        if self.kind == "MM" and self.A < 0.0:
            raise InputDataError("MM needs A >= 0")
        if self.kind == "alpha_beta" and (self.alpha <= 0.0 or self.beta <= 0.0):
            raise InputDataError("alpha_beta needs alpha > 0 and beta > 0")


@dataclass
class EnergyReport:
    """Energy value with its per-slice breakdown.

    total equals the trapezoid v-quadrature of per_slice to round-off.
    """

    total: float
    per_slice: np.ndarray
    quadrature: str
    resolution: tuple


def _grid_unit_tangents(W, speed, scale):
    T = np.zeros_like(W)
    good = speed > EPS_IMMERSED * scale
    T[good] = W[good] / speed[good][:, None]
    return T


def normal_speed_squared(C: HomotopyGrid, order=2):
    """Per-sample m = |pi_N d_v C|^2 and the speeds |d_theta C|."""
    W = C.d_theta(order)
    V = C.d_v(order)
    speed = np.linalg.norm(W, axis=2)
    T = _grid_unit_tangents(W, speed, C.scale_hint)
    tang = np.sum(V * T, axis=2)
    m = np.maximum(np.sum(V * V, axis=2) - tang * tang, 0.0)
    return m, speed


def _curvature_sq_rows(C: HomotopyGrid):
    out = np.empty((C.n_v, C.n_theta))
    for j in range(C.n_v):
        H, _T, _speed = curvature_kernel(C.values[j], C.dtheta, C.scale_hint)
        out[j] = np.sum(H * H, axis=1)
    return out


def _per_slice_integrand(C: HomotopyGrid, spec: EnergySpec):
    """theta-integrals of the chosen integrand, one value per slice."""
    kind = spec.kind
    if kind == "param_H0":
        V = C.d_v()
        return C.integrate_theta(np.sum(V * V, axis=2))
    if kind == "alpha_beta":
        W = C.d_theta()
        V = C.d_v()
        w2 = np.sum(W * W, axis=2)
        v2 = np.sum(V * V, axis=2)
        dot = np.sum(V * W, axis=2)
        good = w2 > 0.0
        perp2 = np.zeros_like(w2)
        perp2[good] = np.maximum(v2[good] - dot[good] ** 2 / w2[good], 0.0)
        integrand = np.zeros_like(w2)
        integrand[good] = perp2[good] ** (spec.alpha / 2.0) * np.sqrt(w2[good]) ** (
            spec.beta
        )
        return C.integrate_theta(integrand)
    m, speed = normal_speed_squared(C)
    if kind == "geom_H0":
        return C.integrate_theta(m * speed)
    if kind in ("J", "MM") and not C.periodic:
        raise InputDataError(f"kind {kind} needs periodic slices for curvature")
    if kind == "J":
        return C.integrate_theta(_curvature_sq_rows(C) * m * speed)
    if kind == "MM":
        kappa2 = _curvature_sq_rows(C)
        return C.integrate_theta((1.0 + spec.A * kappa2) * m * speed)
    if kind == "conformal":
        phi = spec.factor.value(length_profile(C).l)
        return phi * C.integrate_theta(m * speed)
    raise InputDataError(f"kind {kind} has no homotopy energy")


def energy(C: HomotopyGrid, spec: EnergySpec) -> EnergyReport:
    """Path energy of the homotopy under the chosen kind."""
    if spec.kind == "intermediate":
        raise InputDataError("the intermediate metric has inner products only")
    per_slice = _per_slice_integrand(C, spec)
    total = float(C.integrate_v(per_slice))
    theta_rule = "riemann-theta" if C.periodic else "trapezoid-u"
    return EnergyReport(
        total=total,
        per_slice=per_slice,
        quadrature=f"{theta_rule}, trapezoid-v",
        resolution=(C.n_theta, C.n_v),
    )


def inner_product(c: SampledCurve, h, k, metric) -> float:
    """Inner product of two deformations of a single curve."""
    spec = metric if isinstance(metric, EnergySpec) else EnergySpec(kind=metric)
    kind = spec.kind
    if kind not in INNER_KINDS:
        raise InputDataError(f"kind {kind} has no inner product")
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    if h.shape != c.points.shape or k.shape != c.points.shape:
        raise InputDataError(
            f"deformations must match the curve shape {c.points.shape}"
        )
    dots = np.sum(h * k, axis=1)
    if kind == "param_H0":
        return float(np.sum(dots) * c.dtheta)
    if not immersed(c):
        raise NotImmersedError("geometric inner products need an immersed curve")
    frame = tangent_frame(c)
    if kind == "intermediate":
        return float(np.sum(dots * frame.speed) * c.dtheta)
    hn = frame.project_normal(h)
    kn = frame.project_normal(k)
    ndots = np.sum(hn * kn, axis=1)
    if kind == "geom_H0":
        return float(np.sum(ndots * frame.speed) * c.dtheta)
    if kind == "MM":
        H, _T, _speed = curvature_kernel(c.points, c.dtheta, c.scale_hint)
        kappa2 = np.sum(H * H, axis=1)
        return float(np.sum((1.0 + spec.A * kappa2) * ndots * frame.speed) * c.dtheta)
    # conformal
    base = float(np.sum(ndots * frame.speed) * c.dtheta)
    return float(spec.factor.value(arclength(c))) * base


def scaling_check(C: HomotopyGrid, eps: float):
    """Ratios E^N(eps C)/E^N(C) and J(eps C)/J(C); expected eps^3 and eps."""
    if eps <= 0.0:
        raise InputDataError("scaling factor must be positive")
    base_en = energy(C, EnergySpec(kind="geom_H0")).total
    base_j = energy(C, EnergySpec(kind="J")).total
    if base_en == 0.0 or base_j == 0.0:
        raise InputDataError("scaling check needs nonzero base energies")
    scaled = HomotopyGrid(values=eps * C.values, periodic=C.periodic)
    ratio_en = energy(scaled, EnergySpec(kind="geom_H0")).total / base_en
    ratio_j = energy(scaled, EnergySpec(kind="J")).total / base_j
    return ratio_en, ratio_j


def area_swept(C: HomotopyGrid) -> float:
    """Area swept with multiplicity, via |V x W| = sqrt(|V|^2|W|^2 - <V,W>^2)."""
    W = C.d_theta()
    V = C.d_v()
    gram = np.sum(V * V, axis=2) * np.sum(W * W, axis=2) - np.sum(V * W, axis=2) ** 2
    integrand = np.sqrt(np.maximum(gram, 0.0))
    return float(C.integrate_v(C.integrate_theta(integrand)))


def area_swept_bound_check(C: HomotopyGrid) -> bool:
    """(area swept)^2 <= E^N(C) * integral of len(C(., v)) dv, up to slack."""
    swept = area_swept(C)
    en = energy(C, EnergySpec(kind="geom_H0")).total
    lengths = length_profile(C).l
    rhs = en * float(C.integrate_v(lengths))
    return swept * swept <= rhs + 1e-9 * (1.0 + rhs)


def cross_identity_check(W, V) -> float:
    """Residual of |pi_{W-perp}V|^2 |W|^2 = |V|^2|W|^2 - <V,W>^2 (= |VxW|^2 in 3D)."""
    W = np.asarray(W, dtype=float)
    V = np.asarray(V, dtype=float)
    if W.shape != V.shape:
        raise InputDataError("V and W must have the same shape")
    w2 = float(np.dot(W, W))
    if w2 == 0.0:
        raise InputDataError("cross identity needs W != 0")
    v2 = float(np.dot(V, V))
    dot = float(np.dot(V, W))
    gram = v2 * w2 - dot * dot
    perp = V - (dot / w2) * W
    lhs = float(np.dot(perp, perp)) * w2
    scale = max(v2 * w2, 1.0)
    residual = abs(lhs - gram) / scale
    if W.shape == (3,):
        cross = np.cross(V, W)
        residual = max(residual, abs(float(np.dot(cross, cross)) - gram) / scale)
    return residual


def path_len_energy(C: HomotopyGrid, spec: EnergySpec):
    """Path length and energy (Len, E) with Len^2 <= E.

    The slice norm is the square root of the per-slice integrand
    integral, so E is the ordinary path energy and the inequality is
    the discrete Cauchy-Schwarz of the trapezoid weights.
    """
    if spec.kind == "J":
        raise InputDataError("J is not a metric kind; it has no path length")
    per_slice = _per_slice_integrand(C, spec)
    speeds = np.sqrt(np.maximum(per_slice, 0.0))
    length = float(C.integrate_v(speeds))
    total = float(C.integrate_v(per_slice))
    return length, total


def holder_length_check(C: HomotopyGrid):
    """Worst ratio of |sqrt(len(v2)) - sqrt(len(v1))| to (1/2)sqrt(J)sqrt(v2 - v1).

    The bound states the ratio never exceeds 1 on smooth grids. Pairs
    with a vanishing bound and vanishing increment count as ratio 0.
    """
    j_energy = energy(C, EnergySpec(kind="J")).total
    roots = np.sqrt(length_profile(C).l)
    vs = C.v_grid()
    ii, jj = np.triu_indices(C.n_v, k=1)
    lhs = np.abs(roots[jj] - roots[ii])
    rhs = 0.5 * np.sqrt(j_energy) * np.sqrt(vs[jj] - vs[ii])
    ratios = np.zeros_like(lhs)
    positive = rhs > 0.0
    ratios[positive] = lhs[positive] / rhs[positive]
    ratios[~positive] = np.where(lhs[~positive] <= 1e-12, 0.0, np.inf)
    return float(np.max(ratios))


def stable_lambda(C: HomotopyGrid) -> float:
    """Stabilizing exponent lambda = max over the grid of m / M.

    m is the squared normal speed per sample and M(v) its slice
    integral in arclength measure. Slices where M vanishes (a stalled
    homotopy) make the quotient meaningless and raise.
    """
    if not C.periodic:
        raise InputDataError("stable_lambda needs periodic slices")
    m, speed = normal_speed_squared(C)
    big_m = C.integrate_theta(m * speed)
    eps_m = 1e-12 * C.scale_hint**2
    if np.any(big_m <= eps_m):
        j = int(np.argmin(big_m))
        raise StalledHomotopyError(
            f"slice {j} has vanishing normal motion (M = {big_m[j]:.3e})"
        )
    return float(np.max(m / big_m[:, None]))

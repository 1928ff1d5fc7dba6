"""Tests for metric inner products, path energies, and their identities."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from curvemetrics.curves import SampledCurve, tangent_frame, theta_grid
from curvemetrics.energies import (
    ConformalFactor,
    EnergySpec,
    area_swept,
    area_swept_bound_check,
    cross_identity_check,
    energy,
    holder_length_check,
    inner_product,
    normalize_kind,
    path_len_energy,
    scaling_check,
    stable_lambda,
)
from curvemetrics.errors import InputDataError, NotImmersedError, StalledHomotopyError
from curvemetrics.homotopy import HomotopyGrid, sample_homotopy

from helpers import (
    constant_grid,
    radial_circle,
    smooth_random_grid,
    translating_circle,
    unit_circle,
    v4_cone,
)


def test_normalize_kind_aliases():
    assert normalize_kind("en") == "geom_H0"
    assert normalize_kind("H0") == "geom_H0"
    assert normalize_kind("param") == "param_H0"
    assert normalize_kind("bend") == "J"
    assert normalize_kind("enbend") == "MM"
    assert normalize_kind("AB") == "alpha_beta"
    with pytest.raises(InputDataError):
        normalize_kind("sobolev")


def test_spec_and_factor_validation():
    with pytest.raises(InputDataError):
        EnergySpec(kind="MM", A=-1.0)
    with pytest.raises(InputDataError):
        EnergySpec(kind="alpha_beta", alpha=0.0)
    with pytest.raises(InputDataError):
        ConformalFactor(kind="exp_lambda_L", lam=-0.5)
    with pytest.raises(InputDataError):
        ConformalFactor(kind="custom", fn=lambda L: L)
    shifted = ConformalFactor(kind="custom", fn=lambda L: L - 100.0, dfn=lambda L: 1.0)
    with pytest.raises(InputDataError):
        shifted.value(1.0)
    f = ConformalFactor.exp_length(0.5)
    assert f.value(2.0) == pytest.approx(np.e)
    assert f.derivative(2.0) == pytest.approx(0.5 * np.e)
    assert ConformalFactor.identity().value(7.0) == 1.0


def test_translating_circle_energies():
    C = translating_circle(n_theta=256, n_v=64)
    # The unit translation splits as cos^2(theta) normal and sin^2(theta)
    # tangential energy against a unit-speed circle.
    en = energy(C, EnergySpec(kind="geom_H0"))
    assert en.total == pytest.approx(np.pi, rel=3e-4)
    param = energy(C, EnergySpec(kind="param_H0"))
    assert param.total == pytest.approx(2.0 * np.pi, abs=1e-12)
    mm = energy(C, EnergySpec(kind="MM", A=4.0))
    # kappa = 1 on every slice, so MM = (1 + 4) * geom_H0.
    assert mm.total == pytest.approx(5.0 * en.total, rel=1e-4)
    assert en.resolution == (256, 64)
    assert en.total == pytest.approx(float(C.integrate_v(en.per_slice)), abs=1e-14)
    assert "trapezoid-v" in en.quadrature


def test_radial_circle_energies_match_closed_forms():
    # Radius 1 + v about the origin: per slice the motion is purely
    # normal with speed 1, so E^N = 2 pi int (1+v) dv = 3 pi and
    # J = 2 pi int dv / (1+v) = 2 pi ln 2.
    C = radial_circle(n_theta=256, n_v=129)
    en = energy(C, EnergySpec(kind="geom_H0"))
    assert en.total == pytest.approx(3.0 * np.pi, rel=1e-3)
    bend = energy(C, EnergySpec(kind="J"))
    assert bend.total == pytest.approx(2.0 * np.pi * np.log(2.0), rel=1e-3)
    mm = energy(C, EnergySpec(kind="MM", A=4.0))
    assert mm.total == pytest.approx(2.0 * np.pi * (1.5 + 4.0 * np.log(2.0)), rel=1e-3)


def test_cone_bending_energy():
    # Radius v^4 collapses at v = 0 with finite bending energy
    # J = 2 pi int (r')^2 / r dv = 32 pi / 3.
    C = v4_cone(n_theta=256, n_v=257)
    bend = energy(C, EnergySpec(kind="J"))
    assert bend.total == pytest.approx(32.0 * np.pi / 3.0, rel=1e-2)


def test_alpha_beta_21_equals_geom_h0():
    C = smooth_random_grid(seed=3)
    ab = energy(C, EnergySpec(kind="alpha_beta", alpha=2.0, beta=1.0))
    en = energy(C, EnergySpec(kind="geom_H0"))
    assert ab.total == pytest.approx(en.total, rel=1e-12)


def test_alpha_beta_on_open_graph_grid():
    # Graph homotopy (u, v u) over the open square: the (2, 1) integrand
    # reduces to u^2 / sqrt(1 + v^2).
    def fn(us, v):
        return np.stack([us, v * us], axis=1)

    C = sample_homotopy(fn, n_theta=129, n_v=65, periodic=False)
    ab = energy(C, EnergySpec(kind="alpha_beta", alpha=2.0, beta=1.0))
    oracle = quad(lambda v: 1.0 / (3.0 * np.sqrt(1.0 + v * v)), 0.0, 1.0)[0]
    assert ab.total == pytest.approx(oracle, rel=1e-3)
    with pytest.raises(InputDataError):
        energy(C, EnergySpec(kind="J"))


def test_energy_rejects_inner_only_kind():
    C = translating_circle(n_theta=64, n_v=9)
    with pytest.raises(InputDataError):
        energy(C, EnergySpec(kind="intermediate"))


def test_conformal_energy_scales_geom():
    C = radial_circle(n_theta=128, n_v=33)
    base = energy(C, EnergySpec(kind="geom_H0"))
    conf = energy(C, EnergySpec(kind="conformal", factor=ConformalFactor.exp_length(0.1)))
    # Slice lengths grow from 2 pi to 4 pi, so the factor is sandwiched.
    assert conf.total > np.exp(0.1 * 2.0 * np.pi) * base.total * 0.999
    assert conf.total < np.exp(0.1 * 4.0 * np.pi) * base.total * 1.001
    ident = energy(C, EnergySpec(kind="conformal", factor=ConformalFactor.identity()))
    assert ident.total == pytest.approx(base.total, rel=1e-14)


def test_inner_product_values_on_unit_circle():
    c = unit_circle(n=256)
    frame = tangent_frame(c)
    N = np.stack([-frame.T[:, 1], frame.T[:, 0]], axis=1)
    two_pi = 2.0 * np.pi
    assert inner_product(c, N, N, "param_H0") == pytest.approx(two_pi, abs=1e-12)
    assert inner_product(c, N, N, "geom_H0") == pytest.approx(two_pi, rel=3e-4)
    assert inner_product(c, N, N, "intermediate") == pytest.approx(two_pi, rel=3e-4)
    mm = EnergySpec(kind="MM", A=4.0)
    assert inner_product(c, N, N, mm) == pytest.approx(10.0 * np.pi, rel=3e-4)
    conf = EnergySpec(kind="conformal", factor=ConformalFactor.exp_length(1.0))
    assert inner_product(c, N, N, conf) == pytest.approx(
        np.exp(two_pi) * two_pi, rel=1e-3
    )
    # Tangential fields are invisible to the geometric kinds.
    assert abs(inner_product(c, frame.T, frame.T, "geom_H0")) < 1e-12
    assert abs(inner_product(c, frame.T, N, "geom_H0")) < 1e-12
    with pytest.raises(InputDataError):
        inner_product(c, N, N, "J")
    with pytest.raises(InputDataError):
        inner_product(c, N[: c.n_samples // 2], N, "geom_H0")


def test_inner_product_needs_immersion_for_geometric_kinds():
    points = unit_circle(n=64).points.copy()
    points[1] = points[0]
    pinched = SampledCurve(points=points)
    h = np.ones_like(points)
    assert inner_product(pinched, h, h, "param_H0") == pytest.approx(4.0 * np.pi)
    with pytest.raises(NotImmersedError):
        inner_product(pinched, h, h, "geom_H0")


@settings(max_examples=20, deadline=None)
@given(
    a=st.floats(min_value=-1.0, max_value=1.0),
    b=st.floats(min_value=-1.0, max_value=1.0),
    scale=st.floats(min_value=0.1, max_value=3.0),
)
def test_inner_product_is_symmetric_bilinear(a, b, scale):
    c = unit_circle(n=64)
    thetas = theta_grid(64)
    h = np.stack([np.cos(2 * thetas) + a, np.sin(thetas)], axis=1)
    k = np.stack([b * np.sin(3 * thetas), np.cos(thetas) - b], axis=1)
    for kind in ("param_H0", "intermediate", "geom_H0"):
        hk = inner_product(c, h, k, kind)
        assert inner_product(c, k, h, kind) == pytest.approx(hk, abs=1e-12)
        assert inner_product(c, scale * h, k, kind) == pytest.approx(
            scale * hk, rel=1e-12, abs=1e-12
        )
        hh = inner_product(c, h, h, kind)
        kk = inner_product(c, k, k, kind)
        assert hk * hk <= hh * kk * (1.0 + 1e-9) + 1e-12


def test_scaling_ratios_are_exact():
    C = translating_circle(n_theta=128, n_v=17)
    for eps in (0.5, 2.0):
        ratio_en, ratio_j = scaling_check(C, eps)
        assert ratio_en == pytest.approx(eps**3, rel=1e-12)
        assert ratio_j == pytest.approx(eps, rel=1e-12)
    with pytest.raises(InputDataError):
        scaling_check(C, -1.0)


def test_area_swept_translating_circle():
    # |V x W| = |cos(theta)| integrates to 4: the circle sweeps a width-2
    # band of length 1 with double cover top and bottom.
    C = translating_circle(n_theta=256, n_v=64)
    assert area_swept(C) == pytest.approx(4.0, rel=1e-3)
    assert area_swept_bound_check(C)


def test_area_swept_bound_on_random_grids():
    for seed in range(4):
        assert area_swept_bound_check(smooth_random_grid(seed=seed))


def test_cross_identity_residuals():
    rng = np.random.default_rng(7)
    for _ in range(50):
        V = rng.normal(size=3)
        W = rng.normal(size=3)
        assert cross_identity_check(W, V) < 1e-12
    assert cross_identity_check(np.array([1.0, 0.0]), np.array([0.3, 0.4])) < 1e-12
    with pytest.raises(InputDataError):
        cross_identity_check(np.zeros(3), np.ones(3))


def test_path_length_energy_inequality():
    C = translating_circle(n_theta=256, n_v=64)
    length, total = path_len_energy(C, EnergySpec(kind="geom_H0"))
    # Constant slice speed makes Cauchy-Schwarz an equality here.
    assert length**2 == pytest.approx(total, rel=1e-10)
    assert length == pytest.approx(np.sqrt(np.pi), rel=2e-4)
    for seed in range(4):
        length, total = path_len_energy(smooth_random_grid(seed=seed), EnergySpec(kind="geom_H0"))
        assert length**2 <= total * (1.0 + 1e-12)
    with pytest.raises(InputDataError):
        path_len_energy(C, EnergySpec(kind="J"))


def test_holder_length_bound_near_tight_on_radial_circle():
    ratio = holder_length_check(radial_circle(n_theta=256, n_v=129))
    assert ratio <= 1.0 + 1e-3
    # sqrt(4 pi) - sqrt(2 pi) against (1/2) sqrt(2 pi ln 2) is 0.9956.
    assert ratio == pytest.approx(0.9956, abs=2e-3)


def test_holder_length_bound_on_random_grids():
    for seed in range(4):
        assert holder_length_check(smooth_random_grid(seed=seed)) <= 1.0 + 1e-3


def test_stable_lambda_translating_circle():
    C = translating_circle(n_theta=256, n_v=64)
    assert stable_lambda(C) == pytest.approx(1.0 / np.pi, rel=5e-3)


def test_stable_lambda_stalls_on_constant_grid():
    with pytest.raises(StalledHomotopyError):
        stable_lambda(constant_grid())


def test_degenerate_slice_contributes_nothing():
    # A slice collapsed to a point has zero arclength weight, so the
    # geometric energy ignores it instead of dividing by zero.
    circle = unit_circle(n=64).points
    values = np.stack([np.zeros_like(circle), 0.5 * circle, circle], axis=0)
    C = HomotopyGrid(values=values)
    report = energy(C, EnergySpec(kind="geom_H0"))
    assert np.isfinite(report.total)
    assert report.total > 0.0

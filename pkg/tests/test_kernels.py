import math

import numpy as np
import pytest
from scipy.integrate import quad

from halfspace.errors import InputDomainError, SingularityError, TimeDomainError
from halfspace.kernels import (
    HalfSpacePoint,
    MultiIndex,
    gaussian_derivative,
    gaussian_truncation_radius,
    green_heat_d,
    green_heat_n,
    heat_kernel,
    laplace_fundamental,
    laplace_gradient,
    laplace_hessian,
)


def test_heat_kernel_origin_value():
    assert heat_kernel([0.0, 0.0], 1.0) == pytest.approx(1.0 / (4.0 * math.pi), abs=1e-15)
    assert heat_kernel([0.0, 0.0, 0.0], 2.0) == pytest.approx((8.0 * math.pi) ** -1.5, rel=1e-14)


def test_heat_kernel_zero_for_nonpositive_time():
    assert heat_kernel([0.3, -1.2], -0.5) == 0.0
    assert heat_kernel([0.3, -1.2], 0.0) == 0.0
    d = MultiIndex(l=1, m=1)
    assert heat_kernel([0.3, -1.2], -2.0, d) == 0.0


@pytest.mark.parametrize("t", [0.1, 1.0, 4.0])
def test_heat_kernel_mass_by_quadrature(t):
    # Radial oracle: mass = int_0^R 2 pi r Gamma(r, t) dr, R = 12 sqrt(t).
    R = 12.0 * math.sqrt(t)
    mass, err = quad(
        lambda r: 2.0 * math.pi * r * heat_kernel([r, 0.0], t), 0.0, R, limit=200
    )
    assert err < 1e-10
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_truncation_radius_controls_tail():
    t = 0.7
    R = gaussian_truncation_radius(t, eps=1e-14)
    tail, _ = quad(lambda r: 2.0 * math.pi * r * heat_kernel([r, 0.0], t), R, 40 * math.sqrt(t))
    assert tail < 1e-12
    with pytest.raises(TimeDomainError):
        gaussian_truncation_radius(0.0)


def test_heat_kernel_semigroup_property():
    # Quadrature of Gamma(x-z,t) Gamma(z-y,s) over z recovers Gamma(x-y,t+s).
    t, s = 0.4, 0.9
    x = np.array([0.7, -0.3])
    y = np.array([-0.5, 0.4])
    L = gaussian_truncation_radius(max(t, s)) + 2.0
    m = 220
    zs = np.linspace(-L, L, m)
    h = zs[1] - zs[0]
    Z1, Z2 = np.meshgrid(zs, zs, indexing="ij")
    z = np.stack([Z1, Z2], axis=-1)
    vals = heat_kernel(x - z, t) * heat_kernel(z - y, s)
    conv = vals.sum() * h * h
    exact = heat_kernel(x - y, t + s)
    assert conv == pytest.approx(exact, rel=1e-6)


def _fd_time(x, t, d, h):
    lo = MultiIndex(d.l, d.k, d.q, d.m - 1)
    return (heat_kernel(x, t + h, lo) - heat_kernel(x, t - h, lo)) / (2 * h)


def _fd_space(x, t, d, h, axis):
    e = np.zeros(len(x))
    e[axis] = h
    if axis == 0:
        lo = MultiIndex(d.l - 1, d.k, d.q, d.m)
    else:
        lo = MultiIndex(d.l, d.k - 1, d.q, d.m)
    return (heat_kernel(x + e, t, lo) - heat_kernel(x - e, t, lo)) / (2 * h)


@pytest.mark.parametrize(
    "d",
    [
        MultiIndex(l=1),
        MultiIndex(k=1),
        MultiIndex(m=1),
        MultiIndex(l=2),
        MultiIndex(k=2),
        MultiIndex(l=1, k=1),
        MultiIndex(l=1, m=1),
        MultiIndex(k=1, m=1),
        MultiIndex(m=2),
    ],
)
def test_heat_kernel_derivatives_match_finite_differences(d):
    x = np.array([0.6, 0.9])
    t = 0.8
    exact = heat_kernel(x, t, d)

    def fd(h):
        if d.m > 0:
            return _fd_time(x, t, d, h)
        if d.l > 0:
            return _fd_space(x, t, d, h, 0)
        return _fd_space(x, t, d, h, 1)

    errs = [abs(fd(h) - exact) for h in (0.08, 0.04, 0.02)]
    order = np.log2(errs[0] / errs[2]) / 2.0
    assert order > 1.8
    assert errs[-1] < 1e-4


def test_heat_kernel_rejects_bad_input():
    with pytest.raises(InputDomainError):
        heat_kernel([np.nan, 0.0], 1.0)
    with pytest.raises(InputDomainError):
        heat_kernel([0.0, 0.0, 0.0, 0.0], 1.0)
    with pytest.raises(InputDomainError):
        MultiIndex(l=2, m=1)
    with pytest.raises(InputDomainError):
        heat_kernel([0.0, 0.0], 1.0, MultiIndex(q=1))


def test_laplace_fundamental_values():
    # n=2: zero on the unit circle, -1/(2 pi) at radius e.
    assert laplace_fundamental([1.0, 0.0]) == pytest.approx(0.0, abs=1e-15)
    assert laplace_fundamental([math.e, 0.0]) == pytest.approx(-1.0 / (2 * math.pi), rel=1e-14)
    # n=3 with |B_1| = 4 pi / 3: E = 1/(4 pi |x|).
    assert laplace_fundamental([1.0, 0.0, 0.0]) == pytest.approx(1.0 / (4 * math.pi), rel=1e-14)
    with pytest.raises(SingularityError):
        laplace_fundamental([0.0, 0.0])


@pytest.mark.parametrize("x", [[0.8, -0.4], [1.3, 0.2, -0.7]])
def test_laplace_is_harmonic_away_from_origin(x):
    # Finite-difference Laplacian of E vanishes away from the singularity.
    x = np.array(x, dtype=float)
    h = 1e-3
    lap = 0.0
    for ax in range(len(x)):
        e = np.zeros(len(x))
        e[ax] = h
        lap += (
            laplace_fundamental(x + e) - 2 * laplace_fundamental(x) + laplace_fundamental(x - e)
        ) / h**2
    assert abs(lap) < 1e-6


def test_laplace_gradient_and_hessian_match_fd():
    x = np.array([0.9, -0.6, 0.4])
    g = laplace_gradient(x)
    Hm = laplace_hessian(x)
    h = 1e-5
    for ax in range(3):
        e = np.zeros(3)
        e[ax] = h
        fd = (laplace_fundamental(x + e) - laplace_fundamental(x - e)) / (2 * h)
        assert g[ax] == pytest.approx(fd, rel=1e-7)
        fg = (laplace_gradient(x + e) - laplace_gradient(x - e)) / (2 * h)
        np.testing.assert_allclose(Hm[ax], fg, rtol=1e-6)
    assert np.trace(Hm) == pytest.approx(0.0, abs=1e-12)


def test_green_n_normal_derivative_vanishes_on_boundary():
    rng = np.random.default_rng(7)
    for _ in range(50):
        x = HalfSpacePoint((rng.uniform(-3, 3),), 0.0)
        y = HalfSpacePoint((rng.uniform(-3, 3),), rng.uniform(0.0, 3))
        t = rng.uniform(0.05, 2.0)
        v = green_heat_n(x, y, t, MultiIndex(k=1))
        assert abs(v) < 1e-15


def test_green_d_vanishes_on_boundary_and_at_source_plane():
    rng = np.random.default_rng(8)
    for _ in range(50):
        xt, yt = rng.uniform(-3, 3, size=2)
        yn = rng.uniform(0, 3)
        t = rng.uniform(0.05, 2.0)
        assert green_heat_d(HalfSpacePoint((xt,), 0.0), HalfSpacePoint((yt,), yn), t) == 0.0
        # y_n = 0: odd symmetry in the source coordinate kills GD entirely.
        assert green_heat_d(HalfSpacePoint((xt,), yn), HalfSpacePoint((yt,), 0.0), t) == 0.0


def test_green_n_at_source_plane_doubles_heat_kernel():
    x = HalfSpacePoint((0.4,), 1.1)
    y = HalfSpacePoint((-0.2,), 0.0)
    t = 0.6
    expected = 2.0 * heat_kernel(x.coords - y.coords, t)
    assert green_heat_n(x, y, t) == pytest.approx(expected, rel=1e-14)


def test_green_d_symmetry_in_arguments():
    rng = np.random.default_rng(9)
    for _ in range(30):
        x = HalfSpacePoint((rng.uniform(-2, 2),), rng.uniform(0.01, 3))
        y = HalfSpacePoint((rng.uniform(-2, 2),), rng.uniform(0.01, 3))
        t = rng.uniform(0.05, 2.0)
        assert green_heat_d(x, y, t) == pytest.approx(green_heat_d(y, x, t), rel=1e-13)


def test_green_kernels_reject_nonpositive_time():
    x = HalfSpacePoint((0.0,), 1.0)
    with pytest.raises(TimeDomainError):
        green_heat_n(x, x, 0.0)
    with pytest.raises(TimeDomainError):
        green_heat_d(x, x, -1.0)


def test_green_n_pointwise_bound_sup_ratio_finite():
    # |GN| <= C (|x-y|^2 + t)^(-n/2): sweep a sample box, sup ratio finite.
    rng = np.random.default_rng(10)
    sup = 0.0
    for _ in range(200):
        x = np.array([rng.uniform(-4, 4), rng.uniform(0.05, 4)])
        y = np.array([rng.uniform(-4, 4), rng.uniform(0.05, 4)])
        t = rng.choice([0.05, 0.2, 1.0, 4.0])
        bound = (np.sum((x - y) ** 2) + t) ** -1.0
        sup = max(sup, abs(green_heat_n(x, y, t)) / bound)
    assert np.isfinite(sup)
    assert sup < 1.0  # 2 * (4 pi)^-1 is the sharp prefactor here


def test_green_derivative_chain_rule_through_reflection():
    # For the image term, d/dy_n flips sign relative to d/dy_n of the direct term.
    x = np.array([0.3, 0.9])
    y = np.array([-0.1, 0.6])
    t = 0.4
    dn = green_heat_n(x, y, t, MultiIndex(q=1))
    dd = green_heat_d(x, y, t, MultiIndex(q=1))
    h = 1e-6
    yp = y.copy()
    yp[1] += h
    ym = y.copy()
    ym[1] -= h
    fd_n = (green_heat_n(x, yp, t) - green_heat_n(x, ym, t)) / (2 * h)
    fd_d = (green_heat_d(x, yp, t) - green_heat_d(x, ym, t)) / (2 * h)
    assert dn == pytest.approx(fd_n, rel=1e-7)
    assert dd == pytest.approx(fd_d, rel=1e-7)


def test_gaussian_derivative_vectorizes():
    pts = np.random.default_rng(3).normal(size=(5, 7, 2))
    vals = gaussian_derivative(pts, 0.9, (1, 0), 1)
    assert vals.shape == (5, 7)
    single = gaussian_derivative(pts[2, 3], 0.9, (1, 0), 1)
    assert vals[2, 3] == pytest.approx(single, rel=1e-15)


def test_halfspace_point_validation():
    with pytest.raises(InputDomainError):
        HalfSpacePoint((0.0,), -1.0)
    with pytest.raises(InputDomainError):
        HalfSpacePoint((0.0, 0.0, 0.0), 1.0)
    p = HalfSpacePoint((1.0, 2.0), 3.0)
    np.testing.assert_allclose(p.reflected(), [1.0, 2.0, -3.0])

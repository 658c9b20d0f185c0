"""Restricted Green tensor of the nonstationary Stokes system in the half space.

The tensor splits as

    Gbreve_ij(x, y, t) = delta_ij Gamma(x - y, t) + Gstar_ij(x, y, t),

    Gstar_ij(x, y, t) = -delta_ij Gamma(x - y*, t)
        - 4 (1 - delta_jn) d/dx_j  int_{Sigma x [0, x_n]} dE/dx_i (x - z) Gamma(z - y*, t) dz,

with y* = (y', -y_n).  The outer tangential derivative (j < n) is moved onto
the Gaussian factor by integration by parts in z_j, so the evaluated
integrand is dE/dx_i (x - z) * dGamma/dz_j (z - y*, t) with an integrable
|x - z|^(1-n) singularity at the corner z = x.

Quadrature: the tangential axis gets a window graded toward the singular
line (symmetric node pairs, so odd principal-value kernels cancel exactly)
plus plain Gauss-Legendre panels resolving the Gaussian bump; the normal
axis [0, x_n] is graded toward z_n = x_n.  Rules are immutable and shareable
across threads.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import AccuracyWarning, InputDomainError, TimeDomainError
from .kernels import gaussian_derivative, reflect

__all__ = ["TensorIndex", "StripQuadrature", "g_star", "g_breve", "g_star_deriv"]


@dataclass(frozen=True)
class TensorIndex:
    """Component indices (i, j), 1-based, 1 <= i, j <= n."""

    i: int
    j: int

    def __post_init__(self):
        if self.i < 1 or self.j < 1:
            raise InputDomainError(f"tensor indices are 1-based, got ({self.i}, {self.j})")


@dataclass(frozen=True)
class StripQuadrature:
    """Graded product rule for the boundary-layer strip Sigma x [0, x_n].

    ``n_tangential`` counts nodes per graded side of the singular line and
    per auxiliary panel; ``n_normal`` counts nodes per normal segment.
    ``grading_exponent`` > 1 clusters nodes toward the corner z = x.
    When ``residual_check`` is set, every evaluation is repeated on a
    coarsened rule and an AccuracyWarning is emitted if the two disagree
    beyond ``residual_tol`` (relative).
    """

    n_tangential: int = 48
    n_normal: int = 32
    grading_exponent: float = 3.0
    truncation_factor: float = 8.0
    n_angular: int = 24
    residual_check: bool = False
    residual_tol: float = 1e-4

    def __post_init__(self):
        if self.n_tangential < 4 or self.n_normal < 4:
            raise InputDomainError("quadrature rules need at least 4 nodes per direction")
        if self.grading_exponent <= 1.0:
            raise InputDomainError("grading exponent must exceed 1")

    def refined(self, factor=2):
        return StripQuadrature(
            n_tangential=int(self.n_tangential * factor),
            n_normal=int(self.n_normal * factor),
            grading_exponent=self.grading_exponent,
            truncation_factor=self.truncation_factor,
            n_angular=int(self.n_angular * factor),
            residual_check=False,
            residual_tol=self.residual_tol,
        )

    def coarsened(self):
        return StripQuadrature(
            n_tangential=max(4, (2 * self.n_tangential) // 3),
            n_normal=max(4, (2 * self.n_normal) // 3),
            grading_exponent=self.grading_exponent,
            truncation_factor=self.truncation_factor,
            n_angular=max(4, (2 * self.n_angular) // 3),
            residual_check=False,
            residual_tol=self.residual_tol,
        )


@lru_cache(maxsize=64)
def _gauss_01(m):
    nodes, weights = np.polynomial.legendre.leggauss(m)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def _graded_segment(a, b, toward, m, p):
    """Nodes/weights on [a, b] clustered toward endpoint ``toward`` (a or b)."""
    v, w = _gauss_01(m)
    length = b - a
    if toward == b:
        nodes = b - length * v**p
    else:
        nodes = a + length * v**p
    weights = length * p * v ** (p - 1) * w
    return nodes, weights


def _plain_segment(a, b, m):
    v, w = _gauss_01(m)
    return a + (b - a) * v, (b - a) * w


def _split_panels(a, b, lo, hi, m_active, m_far):
    """GL panels on [a, b], finer where [a,b] meets the active window [lo, hi]."""
    pieces = []
    cuts = sorted({a, b, min(max(lo, a), b), min(max(hi, a), b)})
    for left, right in zip(cuts[:-1], cuts[1:]):
        if right - left <= 0:
            continue
        mid = 0.5 * (left + right)
        m = m_active if lo <= mid <= hi else m_far
        pieces.append(_plain_segment(left, right, m))
    if not pieces:
        return np.empty(0), np.empty(0)
    return np.concatenate([p[0] for p in pieces]), np.concatenate([p[1] for p in pieces])


def _tangential_rule(x1, y1, t, quad):
    """1D tangential rule: symmetric graded window at x1 + Gaussian panels."""
    p = quad.grading_exponent
    m = quad.n_tangential
    st = math.sqrt(t)
    reach = abs(x1 - y1)
    R = quad.truncation_factor * max(st, reach)
    Rs = min(R, quad.truncation_factor * st)

    v, w = _gauss_01(m)
    off = Rs * v**p
    ww = Rs * p * v ** (p - 1) * w
    nodes = [x1 - off, x1 + off]
    weights = [ww, ww]

    if R > Rs:
        Rg = 12.0 * st
        for a, b in ((x1 + Rs, x1 + R), (x1 - R, x1 - Rs)):
            zs, zw = _split_panels(a, b, y1 - Rg, y1 + Rg, m, max(4, m // 2))
            nodes.append(zs)
            weights.append(zw)
    return np.concatenate(nodes), np.concatenate(weights)


def _normal_rule(xn, t, quad):
    """Rule on [0, x_n]: Gaussian-resolving start, graded toward z_n = x_n."""
    p = quad.grading_exponent
    m = quad.n_normal
    st = math.sqrt(t)
    if xn <= 24.0 * st:
        cut = 0.5 * xn
    else:
        cut = 12.0 * st
    n1, w1 = _plain_segment(0.0, cut, m)
    n2, w2 = _graded_segment(cut, xn, xn, m, p)
    return np.concatenate([n1, n2]), np.concatenate([w1, w2])


def _grad_e_2d(w1, wn):
    r2 = w1 * w1 + wn * wn
    c = -1.0 / (2.0 * math.pi)
    return c * w1 / r2, c * wn / r2


def _strip_integral_2d(x, y, t, quad, items):
    """Strip integrals int dE/dx_i (x-z) D[Gamma](z - y*, t) dz for n = 2.

    ``items`` is a list of (i_axis, orders, m) requests sharing one node set.
    """
    x1, xn = x
    ystar = reflect(np.asarray(y, dtype=float))
    if xn <= 0.0:
        return [0.0 for _ in items]
    z1, w1 = _tangential_rule(x1, ystar[0], t, quad)
    zn, wn = _normal_rule(xn, t, quad)
    W1 = x1 - z1[:, None]
    Wn = xn - zn[None, :]
    ge1, gen = _grad_e_2d(W1, Wn)
    arg = np.stack(
        [np.broadcast_to(z1[:, None], (z1.size, zn.size)) - ystar[0],
         np.broadcast_to(zn[None, :], (z1.size, zn.size)) + y[1]],
        axis=-1,
    )
    weights = w1[:, None] * wn[None, :]
    out = []
    gamma_cache = {}
    for i_axis, orders, m in items:
        key = (orders, m)
        if key not in gamma_cache:
            gamma_cache[key] = gaussian_derivative(arg, t, orders, m)
        gam = gamma_cache[key]
        ker = ge1 if i_axis == 0 else gen
        out.append(float(np.sum(weights * ker * gam)))
    return out


def _bottom_slice_2d(i_axis, x, y, t, quad, orders, m):
    """Tangential slice at z_n = 0 arising from d/dx_n of the strip integral.

    The strip is parametrized by w_n = x_n - z_n before differentiating, so
    the Leibniz boundary term sits at the smooth height w_n = x_n.  At
    x_n = 0 the i < n kernel is an odd principal value (symmetric node pairs
    cancel) and the i = n kernel concentrates to -(1/2) delta.
    """
    x1, xn = x
    ystar = reflect(np.asarray(y, dtype=float))
    if xn <= 0.0 and i_axis == 1:
        arg = np.array([x1 - ystar[0], y[1]])
        return -0.5 * gaussian_derivative(arg, t, orders, m)
    z1, w1 = _tangential_rule(x1, ystar[0], t, quad)
    ge = _grad_e_2d(x1 - z1, np.full_like(z1, xn))[i_axis]
    arg = np.stack([z1 - ystar[0], np.full_like(z1, y[1])], axis=-1)
    gam = gaussian_derivative(arg, t, orders, m)
    return float(np.sum(w1 * ge * gam))


def _strip_integral_3d(x, y, t, quad, items):
    """Polar-tangential strip integrals for n = 3 (graded radial, uniform angular)."""
    xp = np.asarray(x[:2], dtype=float)
    xn = x[2]
    ystar = reflect(np.asarray(y, dtype=float))
    if xn <= 0.0:
        return [0.0 for _ in items]
    st = math.sqrt(t)
    reach = float(np.linalg.norm(np.asarray(x) - ystar))
    R = quad.truncation_factor * max(st, reach)
    Rs = min(R, quad.truncation_factor * st)
    r1, wr1 = _graded_segment(0.0, Rs, 0.0, quad.n_tangential, quad.grading_exponent)
    if R > Rs:
        r2, wr2 = _plain_segment(Rs, R, quad.n_tangential)
        r, wr = np.concatenate([r1, r2]), np.concatenate([wr1, wr2])
    else:
        r, wr = r1, wr1
    phi = np.linspace(0.0, 2.0 * math.pi, quad.n_angular, endpoint=False)
    wphi = 2.0 * math.pi / quad.n_angular
    zn, wn = _normal_rule(xn, t, quad)

    cz = np.cos(phi)
    sz = np.sin(phi)
    Z1 = xp[0] + r[:, None] * cz[None, :]
    Z2 = xp[1] + r[:, None] * sz[None, :]
    Wt1 = xp[0] - Z1
    Wt2 = xp[1] - Z2
    out = []
    c = -1.0 / (4.0 * math.pi)  # grad E = -x / (4 pi |x|^3) in 3D
    for i_axis, orders, m in items:
        total = 0.0
        for izn, zval in enumerate(zn):
            wnn = xn - zval
            r2 = Wt1**2 + Wt2**2 + wnn**2
            wcomp = (Wt1, Wt2, np.full_like(Wt1, wnn))[i_axis]
            ker = c * wcomp / r2**1.5
            arg = np.stack(
                [Z1 - ystar[0], Z2 - ystar[1], np.full_like(Z1, zval + y[2])], axis=-1
            )
            gam = gaussian_derivative(arg, t, orders, m)
            total += wn[izn] * np.sum(wr[:, None] * r[:, None] * wphi * ker * gam)
        out.append(float(total))
    return out


def _bottom_slice_3d(i_axis, x, y, t, quad, orders, m):
    xp = np.asarray(x[:2], dtype=float)
    xn = x[2]
    ystar = reflect(np.asarray(y, dtype=float))
    st = math.sqrt(t)
    reach = float(np.linalg.norm(np.asarray(x) - ystar))
    R = quad.truncation_factor * max(st, reach)
    r, wr = _plain_segment(0.0, R, 2 * quad.n_tangential)
    phi = np.linspace(0.0, 2.0 * math.pi, quad.n_angular, endpoint=False)
    wphi = 2.0 * math.pi / quad.n_angular
    Z1 = xp[0] + r[:, None] * np.cos(phi)[None, :]
    Z2 = xp[1] + r[:, None] * np.sin(phi)[None, :]
    W = (xp[0] - Z1, xp[1] - Z2, np.full_like(Z1, xn))
    r2 = W[0] ** 2 + W[1] ** 2 + W[2] ** 2
    ker = -W[i_axis] / (4.0 * math.pi * r2**1.5)
    arg = np.stack([Z1 - ystar[0], Z2 - ystar[1], np.full_like(Z1, y[2])], axis=-1)
    gam = gaussian_derivative(arg, t, orders, m)
    return float(np.sum(wr[:, None] * r[:, None] * wphi * ker * gam))


def _bottom_slice(i_axis, x, y, t, quad, orders, m):
    if len(x) == 2:
        return _bottom_slice_2d(i_axis, x, y, t, quad, orders, m)
    return _bottom_slice_3d(i_axis, x, y, t, quad, orders, m)


def _strip_integral(x, y, t, quad, items):
    if len(x) == 2:
        return _strip_integral_2d(x, y, t, quad, items)
    return _strip_integral_3d(x, y, t, quad, items)


def _coords(p):
    arr = p.coords if hasattr(p, "coords") else np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.shape[-1] not in (2, 3):
        raise InputDomainError("expected a single half-space point with n in {2, 3}")
    return arr


def _check_args(x, y, t):
    xc, yc = _coords(x), _coords(y)
    if xc.shape != yc.shape:
        raise InputDomainError("x and y must share a dimension")
    if float(t) <= 0.0:
        raise TimeDomainError(f"Green tensor requires t > 0, got t={t}")
    if xc[-1] < 0.0 or yc[-1] < 0.0:
        raise InputDomainError("points must lie in the closed half space")
    return xc, yc, float(t)


def _with_residual_check(value_fn, quad, label):
    value = value_fn(quad)
    if quad.residual_check:
        coarse = value_fn(quad.coarsened())
        scale = abs(value) + 1e-12
        if abs(value - coarse) > quad.residual_tol * scale:
            warnings.warn(
                f"{label}: quadrature residual estimate {abs(value - coarse):.3e} "
                f"exceeds tolerance {quad.residual_tol:.1e} * {scale:.3e}",
                AccuracyWarning,
                stacklevel=3,
            )
    return value


def _composite_items(i_axis, j_axis, extra_orders, extra_m, n):
    orders = [0] * n
    orders[j_axis] += 1
    for ax, cnt in extra_orders:
        orders[ax] += cnt
    return (i_axis, tuple(orders), extra_m)


def g_star(idx, x, y, t, quad=None):
    """Gstar_ij(x, y, t): image term plus boundary-layer strip integral."""
    xc, yc, t = _check_args(x, y, t)
    n = xc.shape[0]
    if not (1 <= idx.i <= n and 1 <= idx.j <= n):
        raise InputDomainError(f"tensor index out of range for n={n}: {idx}")
    quad = quad or StripQuadrature()
    i, j = idx.i - 1, idx.j - 1
    delta = 1.0 if idx.i == idx.j else 0.0
    image = -delta * gaussian_derivative(xc - reflect(yc), t)
    if j == n - 1:
        return float(image)

    def value(q):
        item = _composite_items(i, j, (), 0, n)
        return image - 4.0 * _strip_integral(xc, yc, t, q, [item])[0]

    return _with_residual_check(value, quad, "g_star")


def g_breve(idx, x, y, t, quad=None):
    """Full restricted tensor: delta_ij Gamma(x - y, t) + Gstar_ij(x, y, t)."""
    xc, yc, t = _check_args(x, y, t)
    delta = 1.0 if idx.i == idx.j else 0.0
    return float(delta * gaussian_derivative(xc - yc, t)) + g_star(idx, x, y, t, quad)


def g_star_deriv(idx, x, y, t, deriv, quad=None):
    """First derivative of Gstar_ij per the MultiIndex (exactly one of l,k,q,m is 1).

    Derivatives in y and t act analytically on the Gaussian factor inside the
    strip integral; the x_n derivative combines the Leibniz boundary slice at
    z_n = x_n with in-kernel differentiation of grad E.  The tangential order
    l differentiates in y_1.
    """
    if deriv.total != 1:
        raise InputDomainError("g_star_deriv handles exactly one derivative")
    xc, yc, t = _check_args(x, y, t)
    n = xc.shape[0]
    if not (1 <= idx.i <= n and 1 <= idx.j <= n):
        raise InputDomainError(f"tensor index out of range for n={n}: {idx}")
    quad = quad or StripQuadrature()
    i, j = idx.i - 1, idx.j - 1
    delta = 1.0 if idx.i == idx.j else 0.0
    wstar = xc - reflect(yc)

    def orders_one(axis, extra=1):
        o = [0] * n
        o[axis] += extra
        return tuple(o)

    if deriv.q == 1:
        image = -delta * gaussian_derivative(wstar, t, orders_one(n - 1))
        if j == n - 1:
            return float(image)

        def value(q):
            item = _composite_items(i, j, ((n - 1, 1),), 0, n)
            return image - 4.0 * _strip_integral(xc, yc, t, q, [item])[0]

        return _with_residual_check(value, quad, "g_star_deriv[q]")

    if deriv.l == 1:
        # d/dy_1: the argument z - y* carries y_1 with a minus sign.
        image = delta * gaussian_derivative(wstar, t, orders_one(0))
        if j == n - 1:
            return float(image)

        def value(q):
            item = _composite_items(i, j, ((0, 1),), 0, n)
            return image + 4.0 * _strip_integral(xc, yc, t, q, [item])[0]

        return _with_residual_check(value, quad, "g_star_deriv[l]")

    if deriv.m == 1:
        image = -delta * gaussian_derivative(wstar, t, None, 1)
        if j == n - 1:
            return float(image)

        def value(q):
            item = _composite_items(i, j, (), 1, n)
            return image - 4.0 * _strip_integral(xc, yc, t, q, [item])[0]

        return _with_residual_check(value, quad, "g_star_deriv[m]")

    # k = 1: d/dx_n.  Substituting w_n = x_n - z_n before differentiating
    # places the Leibniz slice at the smooth height w_n = x_n and moves the
    # derivative onto the Gaussian factor inside the strip.
    image = -delta * gaussian_derivative(wstar, t, orders_one(n - 1))
    if j == n - 1:
        return float(image)

    def value(q):
        slice_term = _bottom_slice(i, xc, yc, t, q, orders_one(j), 0)
        in_strip = _strip_integral(
            xc, yc, t, q, [_composite_items(i, j, ((n - 1, 1),), 0, n)]
        )[0]
        return image - 4.0 * (slice_term + in_strip)

    return _with_residual_check(value, quad, "g_star_deriv[k]")

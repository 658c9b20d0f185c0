"""Closed-form scalar kernels on R^n and the half space R^n_+.

Provides the Gaussian heat kernel

    Gamma(x, t) = (4 pi t)^(-n/2) exp(-|x|^2 / (4t))   for t > 0,  0 for t <= 0,

the fundamental solution of the Laplace equation

    E(x) = -(1/2pi) log|x|                 (n = 2)
    E(x) = |x|^(2-n) / (n (n-2) |B_1|)     (n >= 3),

and the half-space heat Green functions built by the method of images,

    GN(x, y, t) = Gamma(x - y, t) + Gamma(x - y*, t)    (Neumann)
    GD(x, y, t) = Gamma(x - y, t) - Gamma(x - y*, t)    (Dirichlet)

with y* = (y', -y_n).  Spatial and time derivatives up to total order 2 are
analytic (Gaussian times polynomial); everything is vectorized over numpy
arrays with the coordinate axis last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputDomainError, SingularityError, TimeDomainError

__all__ = [
    "HalfSpacePoint",
    "MultiIndex",
    "heat_kernel",
    "gaussian_derivative",
    "gaussian_truncation_radius",
    "laplace_fundamental",
    "laplace_gradient",
    "laplace_hessian",
    "green_heat_n",
    "green_heat_d",
    "reflect",
]

MAX_TOTAL_ORDER = 2


@dataclass(frozen=True)
class HalfSpacePoint:
    """Point (x', x_n) of the closed half space, x_n >= 0, n in {2, 3}."""

    tangential: tuple
    normal: float

    def __post_init__(self):
        tang = tuple(float(c) for c in np.atleast_1d(self.tangential))
        object.__setattr__(self, "tangential", tang)
        object.__setattr__(self, "normal", float(self.normal))
        if self.n not in (2, 3):
            raise InputDomainError(f"dimension must be 2 or 3, got n={self.n}")
        if not all(math.isfinite(c) for c in tang) or not math.isfinite(self.normal):
            raise InputDomainError("non-finite coordinate")
        if self.normal < 0:
            raise InputDomainError(f"normal coordinate must be >= 0, got {self.normal}")

    @property
    def n(self):
        return len(self.tangential) + 1

    @property
    def coords(self):
        return np.array(self.tangential + (self.normal,), dtype=float)

    def reflected(self):
        """Image point (x', -x_n) across the boundary hyperplane."""
        return np.array(self.tangential + (-self.normal,), dtype=float)


@dataclass(frozen=True)
class MultiIndex:
    """Derivative orders: l tangential, k in x_n, q in y_n, m in time."""

    l: int = 0
    k: int = 0
    q: int = 0
    m: int = 0

    def __post_init__(self):
        for name in ("l", "k", "q", "m"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise InputDomainError(f"derivative order {name}={v!r} must be a nonnegative int")
        if self.total > MAX_TOTAL_ORDER:
            raise InputDomainError(
                f"total derivative order {self.total} exceeds supported maximum {MAX_TOTAL_ORDER}"
            )

    @property
    def total(self):
        return self.l + self.k + self.q + self.m


def _as_points(x, n=None):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise InputDomainError("expected a coordinate vector, got a scalar")
    if n is not None and x.shape[-1] != n:
        raise InputDomainError(f"expected {n} coordinates on the last axis, got {x.shape[-1]}")
    if not np.all(np.isfinite(x)):
        raise InputDomainError("non-finite coordinates")
    return x


def _point_coords(p):
    if isinstance(p, HalfSpacePoint):
        return p.coords
    return _as_points(p)


# ---------------------------------------------------------------------------
# 1D Gaussian factor derivatives.
#
# gamma(s, t) = (4 pi t)^(-1/2) exp(-s^2/4t) factorizes Gamma_n, and
# d^p/ds^p gamma = H_p(s, t) gamma with H_{p+1} = dH_p/ds - (s/2t) H_p.
# H_p is stored as {(j, e): c} meaning sum of c * s^j * t^(-e).  The 1D heat
# equation gives d/dt gamma^(p) = gamma^(p+2), which is how time derivatives
# of the product are distributed over factors.
# ---------------------------------------------------------------------------

def _hermite_table(max_order):
    table = [{(0, 0): 1.0}]
    for _ in range(max_order):
        prev = table[-1]
        nxt = {}
        for (j, e), c in prev.items():
            if j >= 1:
                key = (j - 1, e)
                nxt[key] = nxt.get(key, 0.0) + j * c
            key = (j + 1, e + 1)
            nxt[key] = nxt.get(key, 0.0) - 0.5 * c
        table.append(nxt)
    return table


_H_TABLE = _hermite_table(8)


def _hermite_factor(s, t, p):
    out = np.zeros_like(s)
    for (j, e), c in _H_TABLE[p].items():
        out = out + c * s**j / t**e
    return out


def gaussian_derivative(w, t, orders=None, m=0):
    """Evaluate d^orders_w d^m_t Gamma_n(w, t), vectorized over w (..., n).

    ``orders`` is a per-axis tuple of spatial derivative orders.  Returns 0
    identically for t <= 0.  Time derivatives are routed through the heat
    equation applied factorwise, so only 1D Gaussian derivatives are needed.
    """
    w = _as_points(w)
    n = w.shape[-1]
    if orders is None:
        orders = (0,) * n
    if len(orders) != n:
        raise InputDomainError(f"orders must have length {n}")
    t = float(t)
    if not math.isfinite(t):
        raise InputDomainError("non-finite time")
    if t <= 0.0:
        return np.zeros(w.shape[:-1]) if w.ndim > 1 else 0.0

    rho2 = np.sum(w * w, axis=-1)
    base = (4.0 * math.pi * t) ** (-0.5 * n) * np.exp(-rho2 / (4.0 * t))

    h = [_hermite_factor(w[..., i], t, orders[i]) for i in range(n)]

    def bumped(i, extra):
        return _hermite_factor(w[..., i], t, orders[i] + extra)

    if m == 0:
        poly = np.prod(np.stack(h, axis=0), axis=0) if n > 1 else h[0]
    elif m == 1:
        poly = np.zeros_like(rho2)
        for i in range(n):
            term = bumped(i, 2)
            for j in range(n):
                if j != i:
                    term = term * h[j]
            poly = poly + term
    elif m == 2:
        poly = np.zeros_like(rho2)
        for i in range(n):
            term = bumped(i, 4)
            for j in range(n):
                if j != i:
                    term = term * h[j]
            poly = poly + term
        for i in range(n):
            for j in range(i + 1, n):
                term = 2.0 * bumped(i, 2) * bumped(j, 2)
                for k in range(n):
                    if k != i and k != j:
                        term = term * h[k]
                poly = poly + term
    else:
        raise InputDomainError(f"time derivative order m={m} not supported (max 2)")

    out = base * poly
    return out if out.ndim else float(out)


def heat_kernel(x, t, deriv=None):
    """Heat kernel Gamma(x, t) and its derivatives up to total order 2.

    ``deriv`` is a MultiIndex whose l component differentiates along the
    first tangential axis and k along the normal (last) axis; q must be 0
    for the free-space kernel.  Returns exactly 0 for t <= 0.
    """
    x = _as_points(x)
    n = x.shape[-1]
    if n not in (2, 3):
        raise InputDomainError(f"dimension must be 2 or 3, got n={n}")
    if deriv is None:
        deriv = MultiIndex()
    if deriv.q != 0:
        raise InputDomainError("heat_kernel has no y argument; q must be 0")
    orders = [0] * n
    orders[0] += deriv.l
    orders[-1] += deriv.k
    return gaussian_derivative(x, t, tuple(orders), deriv.m)


def gaussian_truncation_radius(t, eps=1e-14):
    """Radius R with int_{|x|>R} Gamma(x,t) dx <= O(eps): R = sqrt(4 t ln(1/eps))."""
    if t <= 0:
        raise TimeDomainError(f"t must be positive, got {t}")
    return math.sqrt(4.0 * t * math.log(1.0 / eps))


# ---------------------------------------------------------------------------
# Laplace fundamental solution.
# ---------------------------------------------------------------------------

def _unit_ball_volume(n):
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def laplace_fundamental(x, grad_order=0):
    """E(x), its gradient, or its Hessian, for n = 2 or n >= 3.

    grad_order 0 returns a scalar, 1 the gradient vector, 2 the Hessian
    matrix (trailing axes).  Evaluation at x = 0 raises SingularityError.
    """
    x = _as_points(x)
    n = x.shape[-1]
    r2 = np.sum(x * x, axis=-1)
    if np.any(r2 == 0.0):
        raise SingularityError("Laplace fundamental solution evaluated at x = 0")
    if grad_order == 0:
        if n == 2:
            return -np.log(r2) / (4.0 * math.pi)
        coef = 1.0 / (n * (n - 2) * _unit_ball_volume(n))
        return coef * r2 ** ((2.0 - n) / 2.0)
    if grad_order == 1:
        return laplace_gradient(x)
    if grad_order == 2:
        return laplace_hessian(x)
    raise InputDomainError(f"grad_order must be 0, 1 or 2, got {grad_order}")


def laplace_gradient(x):
    """grad E(x) = -x / (n |B_1| |x|^n), valid for n >= 2."""
    x = _as_points(x)
    n = x.shape[-1]
    r2 = np.sum(x * x, axis=-1)
    if np.any(r2 == 0.0):
        raise SingularityError("gradient of E evaluated at x = 0")
    coef = -1.0 / (n * _unit_ball_volume(n))
    return coef * x / r2[..., None] ** (n / 2.0)


def laplace_hessian(x):
    """Hessian of E: -(delta_ij |x|^2 - n x_i x_j) / (n |B_1| |x|^(n+2))."""
    x = _as_points(x)
    n = x.shape[-1]
    r2 = np.sum(x * x, axis=-1)
    if np.any(r2 == 0.0):
        raise SingularityError("Hessian of E evaluated at x = 0")
    coef = -1.0 / (n * _unit_ball_volume(n))
    eye = np.eye(n)
    outer = x[..., :, None] * x[..., None, :]
    return coef * (eye * r2[..., None, None] - n * outer) / r2[..., None, None] ** (n / 2.0 + 1.0)


# ---------------------------------------------------------------------------
# Half-space heat Green functions (method of images).
# ---------------------------------------------------------------------------

def reflect(y):
    """Reflection y* = (y', -y_n) across the boundary hyperplane."""
    y = _point_coords(y)
    out = y.copy()
    out[..., -1] = -out[..., -1]
    return out


def _green_heat(x, y, t, deriv, sign):
    if float(t) <= 0.0:
        raise TimeDomainError(f"half-space heat Green function requires t > 0, got t={t}")
    if deriv is None:
        deriv = MultiIndex()
    xc = _point_coords(x)
    yc = _point_coords(y)
    n = xc.shape[-1]
    orders = [0] * n
    orders[0] += deriv.l
    orders[-1] += deriv.k + deriv.q
    orders = tuple(orders)
    # d/dy_n hits (x - y)_n with -1 and (x - y*)_n with +1; every other
    # requested derivative acts with the same sign on both terms.
    direct = (-1.0) ** deriv.q * gaussian_derivative(xc - yc, t, orders, deriv.m)
    image = gaussian_derivative(xc - reflect(yc), t, orders, deriv.m)
    return direct + sign * image


def green_heat_n(x, y, t, deriv=None):
    """Neumann half-space heat Green function GN = Gamma(x-y,t) + Gamma(x-y*,t)."""
    return _green_heat(x, y, t, deriv, +1.0)


def green_heat_d(x, y, t, deriv=None):
    """Dirichlet half-space heat Green function GD = Gamma(x-y,t) - Gamma(x-y*,t)."""
    return _green_heat(x, y, t, deriv, -1.0)

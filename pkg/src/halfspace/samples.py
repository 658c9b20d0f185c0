"""Analytic test fields on half-space grids.

All velocity constructors return divergence-free fields with vanishing wall
flux; derivatives are taken analytically so the fields are resolution
independent.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InputDomainError
from .fields import ScalarField, VectorField, potential_gradient

__all__ = [
    "gaussian_bump",
    "stream_bump_velocity",
    "discrete_gradient_field",
    "discrete_curl_field",
    "multiscale_ridge_tensor",
    "director_bump",
    "decaying_envelope",
]


def gaussian_bump(grid, center=None, sigma=1.0, amplitude=1.0):
    """Scalar Gaussian bump exp(-|x - c|^2 / (2 sigma^2))."""
    coords = grid.meshgrid()
    if center is None:
        center = [0.0] * (grid.n - 1) + [0.5 * grid.normal_extent]
    r2 = sum((c - c0) ** 2 for c, c0 in zip(coords, center))
    return ScalarField(grid, amplitude * np.exp(-r2 / (2.0 * sigma**2)))


def stream_bump_velocity(grid, center=None, sigma=1.0, amplitude=1.0):
    """Analytic curl of a Gaussian stream bump (n = 2): u = (d2 psi, -d1 psi).

    Compactly supported in practice, mean-zero, divergence-free with zero
    wall trace when the bump sits well inside the box.
    """
    if grid.n != 2:
        raise InputDomainError("stream_bump_velocity is a planar constructor")
    x1, xn = grid.meshgrid()
    if center is None:
        center = (0.0, 0.5 * grid.normal_extent)
    psi = amplitude * np.exp(-((x1 - center[0]) ** 2 + (xn - center[1]) ** 2) / (2 * sigma**2))
    u1 = -(xn - center[1]) / sigma**2 * psi
    u2 = (x1 - center[0]) / sigma**2 * psi
    return VectorField(grid, np.stack([u1, u2]))


def discrete_gradient_field(grid, sigma=1.0, amplitude=1.0, center=None):
    """Gradient of a Gaussian bump taken with the projection's own stencils."""
    phi = gaussian_bump(grid, center=center, sigma=sigma, amplitude=amplitude)
    return potential_gradient(phi)


def discrete_curl_field(grid, sigma=0.6, amplitude=1.0, center=None, wall_zero=False):
    """Planar curl built from the projection-compatible operators.

    u = (Dn psi, -d1 psi) with spectral tangential and FD normal derivatives;
    the two operators act on different axes, so the discrete divergence in the
    projector's sense vanishes exactly (roundoff).  With ``wall_zero`` the
    streamfunction is damped to exactly zero on the wall, making the normal
    trace vanish identically even for bumps close to the boundary.
    """
    if grid.n != 2:
        raise InputDomainError("discrete_curl_field is a planar constructor")
    psi = gaussian_bump(grid, center=center, sigma=sigma, amplitude=amplitude)
    if wall_zero:
        xn = grid.meshgrid()[-1]
        height = center[-1] if center is not None else 0.5 * grid.normal_extent
        damp = 1.0 - np.exp(-((xn / (0.5 * height)) ** 2))
        psi = ScalarField(grid, psi.values * damp)
    full = potential_gradient(psi)
    return VectorField(grid, np.stack([full.values[1], -full.values[0]]))


def decaying_envelope(grid, a, b):
    """<x>^(-a) <x_n>^(-b) profile, the canonical Y_{a,b} unit-norm field."""
    coords = grid.meshgrid()
    xn = coords[-1]
    r2 = sum(c**2 for c in coords)
    return (1.0 + r2) ** (-a / 2.0) * (1.0 + xn**2) ** (-b / 2.0)


def multiscale_ridge_tensor(grid, a=1.0, b=0.5, octaves=5, k0=2.0, seed=4):
    """Tensor field with flat-amplitude octave content under a Y_{2a,2b} envelope.

    The superposed cosines keep O(1) variation on every dyadic scale covered,
    which is what saturates the t^(-1/2) rate of the gradient-kernel action
    in the bilinear sweeps.
    """
    if grid.n != 2:
        raise InputDomainError("multiscale_ridge_tensor is a planar constructor")
    rng = np.random.default_rng(seed)
    x1, xn = grid.meshgrid()
    env = decaying_envelope(grid, 2.0 * a, 2.0 * b)
    F = np.zeros((2, 2) + grid.shape)
    hmin = min(grid.spacing)
    for p in range(2):
        for q in range(2):
            wave = np.zeros(grid.shape)
            for j in range(octaves):
                k = k0 * 2.0**j
                if k * hmin > math.pi / 2:
                    break
                theta = rng.uniform(0.0, 2.0 * math.pi)
                phase = rng.uniform(0.0, 2.0 * math.pi)
                wave += np.cos(k * (math.cos(theta) * x1 + math.sin(theta) * xn) + phase)
            F[p, q] = env * wave
    return F


def interface_tensor(grid, a=1.0, b=0.5, delta=None):
    """Tensor field with a tangential interface under a Y_{2a,2b} envelope.

    The gradient-kernel response of a jump keeps one sign at the interface
    for every time, so Duhamel integrals of this forcing accumulate the full
    t^(1/2) growth of the t^(-1/2) bilinear rate without phase cancellation.
    """
    if grid.n != 2:
        raise InputDomainError("interface_tensor is a planar constructor")
    x1, xn = grid.meshgrid()
    if delta is None:
        delta = 2.0 * grid.spacing[0]
    env = decaying_envelope(grid, 2.0 * a, 2.0 * b)
    ridge = np.tanh(x1 / delta)
    F = np.zeros((2, 2) + grid.shape)
    F[:, :] = env * ridge
    return F


def star_solenoidal_bump(grid, center=None, sigma=1.0, amplitude=1.0):
    """Curl of an odd-extended streamfunction, exactly solenoidal in the
    mixed-parity spectral calculus (tangential components even, normal odd)."""
    from .semigroups import spectral_curl_star

    psi = gaussian_bump(grid, center=center, sigma=sigma, amplitude=amplitude)
    return spectral_curl_star(psi)


def director_bump(grid, d_far, tilt=0.3, sigma=1.0, center=None, wall_aligned=False):
    """Unit orientation field obtained by rotating d_far by a localized angle.

    |d| = 1 holds exactly at every node.  With ``wall_aligned`` the rotation
    angle vanishes on the wall, so d equals d_far there (Dirichlet data).
    """
    d_far = np.asarray(d_far, dtype=float)
    if abs(np.linalg.norm(d_far) - 1.0) > 1e-12:
        raise InputDomainError("d_far must be a unit vector")
    L = d_far.size
    coords = grid.meshgrid()
    if center is None:
        center = [0.0] * (grid.n - 1) + [0.5 * grid.normal_extent]
    r2 = sum((c - c0) ** 2 for c, c0 in zip(coords, center))
    theta = tilt * np.exp(-r2 / (2.0 * sigma**2))
    if wall_aligned:
        xn = coords[-1]
        theta = theta * (1.0 - np.exp(-((xn / max(sigma, 1e-6)) ** 2)))
    # rotate in the plane spanned by d_far and a fixed orthogonal direction
    ref = np.zeros(L)
    ref[int(np.argmin(np.abs(d_far)))] = 1.0
    perp = ref - np.dot(ref, d_far) * d_far
    perp /= np.linalg.norm(perp)
    vals = np.cos(theta)[None] * d_far.reshape((L,) + (1,) * grid.n) + np.sin(theta)[None] * perp.reshape(
        (L,) + (1,) * grid.n
    )
    return VectorField(grid, vals)

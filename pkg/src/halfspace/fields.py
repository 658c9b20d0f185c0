"""Discrete fields on a truncated half-space box, weighted norms, and the
Helmholtz-Leray projection.

The grid is a uniform tensor product: tangential axes cover [-L, L) and are
treated as periodic (fields of interest decay well inside the box), the
normal axis covers [0, H] inclusively.  Weighted sup norms use the bracket
<x> = (1 + |x|^2)^(1/2).

The Leray projection is realized spectrally in the tangential axes: for each
tangential mode the pressure potential solves the two-point boundary value
problem phi'' - |xi'|^2 phi = (modal divergence) with phi'(0) matching the
normal velocity at the wall and a decay (Robin) condition at x_n = H; the
gradient part is then subtracted.  The normal-direction derivative matrix
used in the modal solve is the same one used to measure the divergence, so
the projection is an exact projector at the discrete level.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import AccuracyWarning, InputDomainError, SolverError

__all__ = [
    "TensorGrid",
    "ScalarField",
    "VectorField",
    "WeightedNormSpec",
    "weighted_norm",
    "divergence",
    "tensor_divergence",
    "gradient",
    "boundary_trace",
    "leray_project",
    "solenoidal_residual",
    "potential_gradient",
    "save_field",
    "load_field",
]


@dataclass(frozen=True)
class TensorGrid:
    """Uniform tensor-product grid on [-L, L)^(n-1) x [0, H]."""

    n: int
    tangential_extent: float
    normal_extent: float
    shape: tuple

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if self.n not in (2, 3):
            raise InputDomainError(f"dimension must be 2 or 3, got {self.n}")
        if len(self.shape) != self.n:
            raise InputDomainError("shape must list one count per axis")
        if any(s < 8 for s in self.shape):
            raise InputDomainError("grids need at least 8 nodes per axis")
        if self.tangential_extent <= 0 or self.normal_extent <= 0:
            raise InputDomainError("box extents must be positive")

    @property
    def spacing(self):
        L, H = self.tangential_extent, self.normal_extent
        tang = tuple(2.0 * L / s for s in self.shape[:-1])
        return tang + (H / (self.shape[-1] - 1),)

    def axes(self):
        L, H = self.tangential_extent, self.normal_extent
        out = [(-L + 2.0 * L * np.arange(s) / s) for s in self.shape[:-1]]
        out.append(np.linspace(0.0, H, self.shape[-1]))
        return out

    def meshgrid(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def cell_weights(self):
        """Quadrature weights: uniform tangential, trapezoid in the normal axis."""
        w = np.ones(self.shape)
        hs = self.spacing
        for h in hs[:-1]:
            w *= h
        w *= hs[-1]
        w[..., 0] *= 0.5
        w[..., -1] *= 0.5
        return w

    @property
    def node_count(self):
        return int(np.prod(self.shape))


def _check_values(grid, values, ncomp=None):
    values = np.asarray(values, dtype=float)
    expected = (ncomp,) + grid.shape if ncomp else grid.shape
    if values.shape != expected:
        raise InputDomainError(f"values shape {values.shape} != expected {expected}")
    if not np.all(np.isfinite(values)):
        raise InputDomainError("field contains non-finite values")
    values = values.copy()
    values.flags.writeable = False
    return values


@dataclass(frozen=True)
class ScalarField:
    grid: TensorGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values))


@dataclass(frozen=True)
class VectorField:
    """Vector-valued grid field; ncomp may exceed n (orientation fields)."""

    grid: TensorGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != self.grid.n + 1:
            raise InputDomainError("vector values must be (ncomp, *grid.shape)")
        object.__setattr__(self, "values", _check_values(self.grid, vals, vals.shape[0]))

    @property
    def ncomp(self):
        return self.values.shape[0]

    def component(self, i):
        return self.values[i]

    def magnitude(self):
        return np.sqrt(np.sum(self.values**2, axis=0))


_FAMILIES = ("Lq", "Ya", "Za", "Yab", "Zaal", "Lq_uloc")


@dataclass(frozen=True)
class WeightedNormSpec:
    """Selector for the norm families Lq, Y_a, Z_a, Y_{a,b}, Z_{a,alpha}, Lq_uloc."""

    family: str
    q: float = None
    a: float = None
    b: float = None
    alpha: float = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise InputDomainError(f"unknown norm family {self.family!r}; use one of {_FAMILIES}")
        if self.family in ("Lq", "Lq_uloc"):
            if self.q is None or not (1.0 <= self.q or self.q == np.inf):
                raise InputDomainError("Lq norms need q in [1, inf]")
        if self.family in ("Ya", "Za") and (self.a is None or self.a < 0):
            raise InputDomainError("Y_a / Z_a need a >= 0")
        if self.family == "Yab":
            if self.a is None or self.b is None or self.a < 0 or self.b < 0:
                raise InputDomainError("Y_{a,b} needs a, b >= 0")
        if self.family == "Zaal":
            if self.a is None or self.alpha is None or self.a < 0 or self.alpha < 0:
                raise InputDomainError("Z_{a,alpha} needs a, alpha >= 0")
            if self.alpha > 1:
                raise InputDomainError("Z_{a,alpha} requires alpha <= 1")


def _magnitude(field):
    if isinstance(field, VectorField):
        return field.magnitude()
    if isinstance(field, ScalarField):
        return np.abs(field.values)
    raise InputDomainError("expected a ScalarField or VectorField")


def _lq_of(values_q, grid, q):
    if q == np.inf:
        return float(np.max(values_q))
    w = grid.cell_weights()
    return float(np.sum(values_q**q * w) ** (1.0 / q))


def _uloc_centers(grid, pitch=0.5):
    L, H = grid.tangential_extent, grid.normal_extent
    tang = [np.arange(-L, L + 1e-9, pitch) for _ in range(grid.n - 1)]
    norm = np.arange(0.0, H + 1e-9, pitch)
    return np.meshgrid(*tang, norm, indexing="ij")


def weighted_norm(field, spec):
    """Evaluate the selected norm of a grid field.

    Sup-type norms take the max over grid nodes of |f| times the weight;
    Lq uses the grid quadrature; Lq_uloc takes the sup over a lattice of
    unit-ball centers (pitch 0.5) of local Lq norms.  Near the truncation
    boundary the discrete uloc sup is biased low where balls stick out of
    the box; this is a known discretization caveat.
    """
    mag = _magnitude(field)
    grid = field.grid
    coords = grid.meshgrid()
    xn = coords[-1]
    r2 = sum(c**2 for c in coords)

    if spec.family == "Lq":
        return _lq_of(mag, grid, spec.q)

    if spec.family == "Ya":
        return float(np.max(mag * (1.0 + r2) ** (spec.a / 2.0)))

    if spec.family == "Za":
        return float(np.max(mag * (1.0 + xn**2) ** (spec.a / 2.0)))

    if spec.family == "Yab":
        w = (1.0 + r2) ** (spec.a / 2.0) * (1.0 + xn**2) ** (spec.b / 2.0)
        return float(np.max(mag * w))

    if spec.family == "Zaal":
        if spec.alpha == 0.0:
            return float(np.max(mag * (1.0 + r2) ** (spec.a / 2.0)))
        interior = xn > 0
        if np.max(mag[~interior], initial=0.0) > 1e-13 * max(np.max(mag), 1e-300):
            return math.inf
        w = (1.0 + r2) ** (spec.a / 2.0) * ((1.0 + xn**2) ** 0.5 / np.where(interior, xn, 1.0)) ** spec.alpha
        return float(np.max(np.where(interior, mag * w, 0.0)))

    # Lq_uloc
    centers = _uloc_centers(grid)
    pts = np.stack([c.ravel() for c in centers], axis=-1)
    node_coords = np.stack([c.ravel() for c in coords], axis=-1)
    w = grid.cell_weights().ravel()
    mflat = mag.ravel()
    best = 0.0
    for c in pts:
        mask = np.sum((node_coords - c) ** 2, axis=-1) <= 1.0
        if not np.any(mask):
            continue
        if spec.q == np.inf:
            best = max(best, float(np.max(mflat[mask])))
        else:
            best = max(best, float(np.sum(mflat[mask] ** spec.q * w[mask]) ** (1.0 / spec.q)))
    return best


# ---------------------------------------------------------------------------
# Differentiation helpers.
# ---------------------------------------------------------------------------

def _diff_periodic(arr, axis, h, order):
    if order == 2:
        return (np.roll(arr, -1, axis) - np.roll(arr, 1, axis)) / (2.0 * h)
    return (
        -np.roll(arr, -2, axis)
        + 8.0 * np.roll(arr, -1, axis)
        - 8.0 * np.roll(arr, 1, axis)
        + np.roll(arr, 2, axis)
    ) / (12.0 * h)


@lru_cache(maxsize=32)
def _normal_derivative_matrix(m, h, order=2):
    D = np.zeros((m, m))
    if order == 2:
        for i in range(1, m - 1):
            D[i, i - 1], D[i, i + 1] = -0.5, 0.5
        D[0, :3] = [-1.5, 2.0, -0.5]
        D[-1, -3:] = [0.5, -2.0, 1.5]
    else:
        for i in range(2, m - 2):
            D[i, i - 2 : i + 3] = [1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12]
        one_sided = np.array([-25.0 / 12, 4.0, -3.0, 4.0 / 3, -0.25])
        shifted = np.array([-0.25, -5.0 / 6, 1.5, -0.5, 1.0 / 12])
        D[0, :5] = one_sided
        D[1, :5] = shifted
        D[-2, -5:] = -shifted[::-1]
        D[-1, -5:] = -one_sided[::-1]
    return D / h


def _diff_normal(arr, h, order=2):
    D = _normal_derivative_matrix(arr.shape[-1], h, order)
    return arr @ D.T


def differentiate(values, grid, axis, order=2):
    """d/dx_axis of grid samples: periodic centered tangentially, one-sided ends."""
    hs = grid.spacing
    if axis < grid.n - 1:
        return _diff_periodic(values, axis - grid.n, hs[axis], order)
    return _diff_normal(values, hs[-1], order)


def divergence(u):
    """Discrete divergence: centered differences interior, one-sided at the ends."""
    if u.ncomp < u.grid.n:
        raise InputDomainError("divergence needs at least n components")
    out = np.zeros(u.grid.shape)
    for ax in range(u.grid.n):
        out += differentiate(u.values[ax], u.grid, ax)
    return ScalarField(u.grid, out)


def tensor_divergence(F, grid, order=4):
    """Row divergence (div F)_j = sum_k d_k F_kj of a (n, m, ...) tensor field."""
    F = np.asarray(F, dtype=float)
    n = grid.n
    out = np.zeros(F.shape[1:])
    for k in range(n):
        out += differentiate(F[k], grid, k, order=order)
    return out


def gradient(f, order=2):
    """Gradient of a scalar field with the divergence-compatible stencils."""
    vals = np.stack([differentiate(f.values, f.grid, ax, order) for ax in range(f.grid.n)])
    return VectorField(f.grid, vals)


def boundary_trace(u):
    """Restriction of all components to the wall x_n = 0."""
    return np.array(u.values[..., 0])


# ---------------------------------------------------------------------------
# Leray projection.
# ---------------------------------------------------------------------------

def _tangential_wavenumbers(grid):
    # Nyquist entries are zeroed: the odd-derivative symbol is ill-defined
    # there, and consistency between divergence, gradient and the modal
    # solve requires one shared convention.
    hs = grid.spacing
    ks = []
    for s, h in zip(grid.shape[:-1], hs[:-1]):
        k = 2.0 * math.pi * np.fft.fftfreq(s, d=h)
        if s % 2 == 0:
            k[s // 2] = 0.0
        ks.append(k)
    return np.meshgrid(*ks, indexing="ij") if len(ks) > 1 else [ks[0]]


def _spectral_tangential_derivative(values, grid, axis):
    k = _tangential_wavenumbers(grid)[axis]
    if grid.n == 3:
        fhat = np.fft.fft2(values, axes=(-3, -2))
        return np.real(np.fft.ifft2(1j * k[..., None] * fhat, axes=(-3, -2)))
    fhat = np.fft.fft(values, axis=-2)
    return np.real(np.fft.ifft(1j * k[:, None] * fhat, axis=-2))


def _internal_divergence(u):
    """Divergence with the projection's operators: spectral tangential, FD normal."""
    g = u.grid
    out = np.zeros(g.shape)
    for ax in range(g.n - 1):
        out += _spectral_tangential_derivative(u.values[ax], g, ax)
    out += _diff_normal(u.values[g.n - 1], g.spacing[-1])
    return out


def solenoidal_residual(u):
    """Relative divergence (interior rows) and wall-trace residuals.

    The two normal-boundary rows carry boundary conditions instead of the
    divergence equation in the modal solve, so they are excluded here.
    """
    g = u.grid
    div = _internal_divergence(u)[..., 1:-1]
    scale = 0.0
    for ax in range(g.n):
        scale = max(scale, float(np.max(np.abs(differentiate(u.values[ax], g, ax)))))
    div_rel = float(np.max(np.abs(div))) / (scale + 1e-300)
    trace = np.abs(u.values[g.n - 1][..., 0])
    trace_rel = float(np.max(trace)) / (float(np.max(np.abs(u.values[g.n - 1]))) + 1e-300)
    return div_rel, trace_rel


def potential_gradient(f):
    """Gradient with the projection's operators: spectral tangential, FD normal."""
    g = f.grid
    comps = [
        _spectral_tangential_derivative(f.values, g, ax) for ax in range(g.n - 1)
    ]
    comps.append(_diff_normal(f.values, g.spacing[-1]))
    return VectorField(g, np.stack(comps))


def _boundary_decay_check(u):
    vals = np.abs(u.values)
    interior = float(np.max(vals))
    top = float(np.max(vals[..., -1]))
    if u.grid.n == 2:
        seam = float(np.max(vals[:, 0, :]))
    else:
        seam = max(float(np.max(vals[:, 0, :, :])), float(np.max(vals[:, :, 0, :])))
    worst = max(top, seam)
    if interior > 0 and worst > 1e-6 * interior:
        warnings.warn(
            f"field does not decay at the truncation boundary "
            f"(edge max {worst:.3e} vs interior max {interior:.3e})",
            AccuracyWarning,
            stacklevel=3,
        )


def _modal_prelude(grid):
    hn = grid.spacing[-1]
    m = grid.shape[-1]
    Dn = _normal_derivative_matrix(m, hn)
    ks = _tangential_wavenumbers(grid)
    if grid.n == 2:
        k2 = ks[0] ** 2
        kabs = np.abs(ks[0])
    else:
        k2 = ks[0] ** 2 + ks[1] ** 2
        kabs = np.sqrt(k2)
    return Dn, ks, k2, kabs.ravel()


def _assemble_modal_matrices(grid):
    """Per-mode BVP matrices with the wall and decay boundary rows."""
    m = grid.shape[-1]
    Dn, ks, k2, kabs_flat = _modal_prelude(grid)
    kflat = k2.ravel()
    A = np.broadcast_to(Dn @ Dn, (kflat.size, m, m)).copy()
    A -= kflat[:, None, None] * np.eye(m)
    A[:, 0, :] = Dn[0, :]
    A[:, -1, :] = Dn[-1, :]
    A[:, -1, -1] += kabs_flat
    return A


_FACTOR_CACHE = {}
_FACTOR_CACHE_LIMIT = 12_000_000  # matrix entries per grid
_FACTOR_CACHE_SLOTS = 3


def _modal_factors(grid):
    """Cached modal systems and LU factorizations (small LRU over grids)."""
    key = (grid.n, grid.tangential_extent, grid.normal_extent, grid.shape)
    if key in _FACTOR_CACHE:
        return _FACTOR_CACHE[key]
    m = grid.shape[-1]
    nmodes = int(np.prod(grid.shape[:-1]))
    if nmodes * m * m > _FACTOR_CACHE_LIMIT:
        entry = None
    else:
        from scipy.linalg import lu_factor

        kflat = _modal_prelude(grid)[2].ravel()
        A = _assemble_modal_matrices(grid)
        factors = [
            lu_factor(A[i], check_finite=False) if kflat[i] != 0.0 else None for i in range(nmodes)
        ]
        entry = {"A": A, "lu": factors}
    if len(_FACTOR_CACHE) >= _FACTOR_CACHE_SLOTS:
        _FACTOR_CACHE.pop(next(iter(_FACTOR_CACHE)))
    _FACTOR_CACHE[key] = entry
    return entry


def leray_project(u, check_boundary=True):
    """Helmholtz-Leray projection onto divergence-free fields with zero wall flux.

    Tangential axes are handled spectrally; for each tangential mode the
    pressure potential solves phi'' - |xi'|^2 phi = (modal divergence) with
    phi'(0) = u_n(0) and a decaying Robin condition at x_n = H.  The mean
    (|xi'| = 0) mode uses a pure Neumann solve with mean-zero normalization.
    """
    g = u.grid
    n = g.n
    if u.ncomp != n:
        raise InputDomainError("leray_project expects an n-component velocity field")
    if check_boundary:
        _boundary_decay_check(u)
    m = g.shape[-1]
    cached = _modal_factors(g)
    Dn, ks, k2, _ = _modal_prelude(g)
    kflat = k2.ravel()
    A = cached["A"] if cached is not None else _assemble_modal_matrices(g)
    nmodes = kflat.size

    tang_axes = tuple(range(1, n))
    uhat = np.fft.fftn(u.values, axes=tang_axes)
    divhat = np.zeros(uhat.shape[1:], dtype=complex)
    for ax in range(n - 1):
        kax = ks[ax]
        divhat += 1j * kax[..., None] * uhat[ax]
    divhat += uhat[n - 1] @ Dn.T
    rhs = divhat.reshape(nmodes, m).copy()
    wall = uhat[n - 1].reshape(nmodes, m)[:, 0]
    rhs[:, 0] = wall
    rhs[:, -1] = 0.0

    zero = np.nonzero(kflat == 0.0)[0]
    nonzero = np.nonzero(kflat != 0.0)[0]
    phi = np.zeros((nmodes, m), dtype=complex)
    try:
        if cached is not None:
            from scipy.linalg import lu_solve

            lus = cached["lu"]
            sol = np.stack([lu_solve(lus[i], rhs[i], check_finite=False) for i in nonzero])
            resid = rhs[nonzero] - np.einsum("kij,kj->ki", A[nonzero], sol)
            sol += np.stack(
                [lu_solve(lus[i], resid[j], check_finite=False) for j, i in enumerate(nonzero)]
            )
            phi[nonzero] = sol
        else:
            An, bn = A[nonzero], rhs[nonzero]
            sol = np.linalg.solve(An, bn[..., None])[..., 0]
            # one iterative-refinement sweep; the wide-stencil system is stiff
            resid = bn - np.einsum("kij,kj->ki", An, sol)
            sol += np.linalg.solve(An, resid[..., None])[..., 0]
            phi[nonzero] = sol
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SolverError(f"modal pressure solve failed: {exc}") from exc
    for idx in zero:
        Az = np.vstack([A[idx], np.full((1, m), 1.0 / m)])
        bz = np.concatenate([rhs[idx], [0.0]])
        sol, *_ = np.linalg.lstsq(Az, bz, rcond=None)
        phi[idx] = sol

    phi = phi.reshape(k2.shape + (m,))
    grad = np.empty_like(uhat)
    for ax in range(n - 1):
        grad[ax] = 1j * ks[ax][..., None] * phi
    grad[n - 1] = phi @ Dn.T
    proj = np.real(np.fft.ifftn(uhat - grad, axes=tang_axes))
    return VectorField(g, proj)


# ---------------------------------------------------------------------------
# Serialization: CSV (node-major, metadata header) and npz.
# ---------------------------------------------------------------------------

def _meta_line(field):
    g = field.grid
    ncomp = field.values.shape[0] if isinstance(field, VectorField) else 1
    shape = ",".join(str(s) for s in g.shape)
    return (
        f"# halfspace-field n={g.n} L={g.tangential_extent!r} "
        f"H={g.normal_extent!r} shape={shape} ncomp={ncomp}"
    )


def save_field(field, path, fmt="csv"):
    """Write a field node-major with a grid-metadata header (csv or npz)."""
    vals = field.values if isinstance(field, VectorField) else field.values[None]
    if fmt == "npz":
        g = field.grid
        np.savez(
            path,
            values=vals,
            n=g.n,
            L=g.tangential_extent,
            H=g.normal_extent,
            shape=np.array(g.shape),
        )
        return
    flat = vals.reshape(vals.shape[0], -1).T
    buf = io.StringIO()
    buf.write(_meta_line(field) + "\n")
    for row in flat:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def _field_from(grid, vals):
    if vals.shape[0] == 1:
        return ScalarField(grid, vals[0])
    return VectorField(grid, vals)


def load_field(path):
    path = str(path)
    if path.endswith(".npz"):
        data = np.load(path)
        grid = TensorGrid(int(data["n"]), float(data["L"]), float(data["H"]), tuple(data["shape"]))
        return _field_from(grid, data["values"])
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# halfspace-field"):
            raise InputDomainError(f"{path} is not a halfspace field file")
        meta = dict(tok.split("=", 1) for tok in header.split()[2:])
        shape = tuple(int(s) for s in meta["shape"].split(","))
        grid = TensorGrid(int(meta["n"]), float(meta["L"]), float(meta["H"]), shape)
        flat = np.loadtxt(fh, delimiter=",", ndmin=2)
    vals = flat.T.reshape((int(meta["ncomp"]),) + shape)
    return _field_from(grid, vals)

"""Picard fixed-point construction of mild solutions.

Four systems share one iteration skeleton:

  nse      u(t)      = S(t) u0 - int_0^t S(t-s) P[div(u x u)] ds
  mhd      u as above with u x u - b x b;  b propagated by the mixed heat
           semigroup with forcing -div(u_k b_i - b_k u_i) per row
  fm_mhd   u as in mhd; b propagated by S with tensor u_k b_j - b_k u_j
  nlcf_*   u with u x u + grad d . grad d;  the shifted director dt = d - d_ref
           propagated by the Neumann (nlcf_n) or Dirichlet (nlcf_d) heat
           semigroup with forcing -u.grad dt + |grad dt|^2 (dt + d_ref)

S is the restricted-tensor Stokes semigroup and P the Leray projection.
Iterates start from zero, so iterate 1 is the linear part and iterate 2 adds
the first bilinear correction.  Histories are stored at the configured time
nodes and interpolated linearly inside Duhamel integrals; the quadratic
nonlinearities are assembled in divergence form (tensor first, discrete
divergence second), never as pointwise advection.  |d| is never renormalized
during NLCF iterations; the drift away from 1 is recorded as a validation
signal.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import CompatibilityError, InputDomainError, SolenoidalityError
from .fields import (
    VectorField,
    WeightedNormSpec,
    differentiate,
    solenoidal_residual,
    tensor_divergence,
    weighted_norm,
)
from .semigroups import (
    DuhamelSchedule,
    duhamel_heat,
    duhamel_stokes,
    heat_semigroup,
    mixed_star_semigroup,
    star_divergence_residual,
    stokes_semigroup,
)

__all__ = ["PicardConfig", "PicardTrace", "PicardResult", "picard_nse", "picard_mhd", "picard_fm_mhd", "picard_nlcf"]

SYSTEMS = ("nse", "mhd", "fm_mhd", "nlcf_n", "nlcf_d")


@dataclass(frozen=True)
class PicardConfig:
    system: str
    horizon: float
    n_time_nodes: int = 6
    norm_spec: WeightedNormSpec = field(default_factory=lambda: WeightedNormSpec("Lq", q=np.inf))
    max_iterations: int = 14
    tolerance: float = 1e-9
    duhamel_nodes: int = 14
    d_far: tuple = None
    d_wall: tuple = None
    divergence_patience: int = 3
    solenoidal_tol: float = 1e-3

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise InputDomainError(f"unknown system {self.system!r}; use one of {SYSTEMS}")
        if self.horizon <= 0:
            raise InputDomainError("horizon T must be positive")
        if self.n_time_nodes < 2 or self.max_iterations < 1:
            raise InputDomainError("need at least 2 time nodes and 1 iteration")
        for name in ("d_far", "d_wall"):
            v = getattr(self, name)
            if v is not None:
                v = tuple(float(c) for c in v)
                object.__setattr__(self, name, v)
                if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                    raise InputDomainError(f"{name} must be a unit vector")

    @property
    def times(self):
        T, K = self.horizon, self.n_time_nodes
        return tuple(T * (k + 1) / K for k in range(K))


@dataclass
class PicardTrace:
    system: str
    norms: list = field(default_factory=list)
    diffs: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    div_residuals: list = field(default_factory=list)
    trace_residuals: list = field(default_factory=list)
    b_div_residuals: list = field(default_factory=list)
    d_drift: list = field(default_factory=list)
    far_field: list = field(default_factory=list)
    verdict: str = "running"
    fixed_point_residual: float = None

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


@dataclass
class PicardResult:
    config: PicardConfig
    trace: PicardTrace
    times: tuple
    histories: dict
    linear: dict
    grid: object

    def field_at(self, name, k):
        return VectorField(self.grid, self.histories[name][k])


def _validate_nse_norm_spec(spec, n):
    if spec.family == "Yab":
        if spec.b > 1 or spec.a + spec.b > n:
            raise InputDomainError("Y_{a,b} Picard norms require b <= 1 and a + b <= n")
        if spec.a == n - 1 and spec.b == 1:
            import warnings

            warnings.warn(
                "norm spec sits at the excluded corner (a, b) = (n-1, 1); the linear "
                "estimate is not available there and the iteration is unguarded",
                stacklevel=3,
            )
    elif spec.family == "Zaal":
        if not (spec.alpha <= 1 and spec.alpha < spec.a <= n):
            raise InputDomainError("Z_{a,alpha} Picard norms require alpha <= 1, alpha < a <= n")
    elif spec.family not in ("Lq", "Ya", "Za", "Lq_uloc"):
        raise InputDomainError(f"norm family {spec.family} not supported for Picard solvers")


def _check_solenoidal(u0, tol, label):
    div_rel, trace_rel = solenoidal_residual(u0)
    if div_rel > tol or trace_rel > tol:
        raise SolenoidalityError(
            f"{label} is not solenoidal: div residual {div_rel:.3e}, trace {trace_rel:.3e}",
            div_residual=div_rel,
            trace_residual=trace_rel,
        )


class _History:
    """Per-field time histories with linear interpolation, t = 0 included."""

    def __init__(self, times, initial):
        self.times = (0.0,) + tuple(times)
        self.data = {name: [np.asarray(v0)] + [np.asarray(v0) * 0.0 for _ in times] for name, v0 in initial.items()}

    def set_all(self, name, snaps):
        self.data[name][1:] = [np.asarray(s) for s in snaps]

    def at(self, name, s):
        ts = self.times
        vals = self.data[name]
        if s <= ts[0]:
            return vals[0]
        if s >= ts[-1]:
            return vals[-1]
        j = int(np.searchsorted(ts, s)) - 1
        w = (s - ts[j]) / (ts[j + 1] - ts[j])
        return (1.0 - w) * vals[j] + w * vals[j + 1]


def _grad_components(vals, grid):
    return np.stack([differentiate(vals, grid, ax, order=4) for ax in range(grid.n)])


def _norm_of(grid, arr, spec):
    return weighted_norm(VectorField(grid, arr), spec)


def _far_field_metric(grid, arr, radius=6.0):
    coords = grid.meshgrid()
    r = np.sqrt(sum(c**2 for c in coords))
    mask = r >= radius
    if not np.any(mask):
        return None
    mag = np.sqrt(np.sum(arr**2, axis=0))
    return float(np.max(mag[mask]))


def _run_picard(cfg, grid, linear, apply_bilinear, monitors):
    """Shared Picard loop over full time histories.

    ``linear``: dict name -> list over time nodes of arrays.
    ``apply_bilinear(hist, k)``: dict name -> Duhamel correction at node k.
    ``monitors(hist)``: dict of per-iteration invariant records.
    """
    times = cfg.times
    names = [n for n in linear if not n.endswith("_init")]
    hist = _History(times, {n: linear[n + "_init"] for n in names})
    trace = PicardTrace(system=cfg.system)
    prev = {n: [hist.data[n][k + 1].copy() for k in range(len(times))] for n in names}

    bad_streak = 0
    for it in range(cfg.max_iterations):
        new = {n: [] for n in names}
        for k in range(len(times)):
            corr = apply_bilinear(hist, k)
            for n in names:
                new[n].append(linear[n][k] + corr.get(n, 0.0))
        diff = 0.0
        size = 0.0
        for n in names:
            for k in range(len(times)):
                diff = max(diff, _norm_of(grid, new[n][k] - prev[n][k], cfg.norm_spec))
                size = max(size, _norm_of(grid, new[n][k], cfg.norm_spec))
        for n in names:
            hist.set_all(n, new[n])
            prev[n] = [v.copy() for v in new[n]]
        trace.norms.append(size)
        trace.diffs.append(diff)
        if len(trace.diffs) >= 2 and trace.diffs[-2] > 0:
            trace.ratios.append(diff / trace.diffs[-2])
        for key, val in monitors(hist).items():
            getattr(trace, key).append(val)
        if len(trace.ratios) > 0 and trace.ratios[-1] >= 1.0:
            bad_streak += 1
        else:
            bad_streak = 0
        if bad_streak >= cfg.divergence_patience:
            trace.verdict = "diverged"
            break
        if diff <= cfg.tolerance * max(1.0, size):
            trace.verdict = "converged"
            break
    else:
        trace.verdict = "max_iterations"

    # fixed-point residual: one more application of the map
    resid = 0.0
    for k in range(len(times)):
        corr = apply_bilinear(hist, k)
        for n in names:
            resid = max(
                resid, _norm_of(grid, linear[n][k] + corr.get(n, 0.0) - hist.data[n][k + 1], cfg.norm_spec)
            )
    trace.fixed_point_residual = resid
    histories = {n: [hist.data[n][k + 1] for k in range(len(times))] for n in names}
    return trace, histories


def _outer(a, b):
    # (a x b)_{kj} = a_k b_j
    return a[:, None] * b[None, :]


def _scheds(cfg):
    return [DuhamelSchedule.build(t, cfg.duhamel_nodes) for t in cfg.times]


def picard_nse(u0, cfg):
    """Mild Navier-Stokes iteration; returns a PicardResult with trace and history."""
    grid = u0.grid
    _validate_nse_norm_spec(cfg.norm_spec, grid.n)
    _check_solenoidal(u0, cfg.solenoidal_tol, "u0")
    scheds = _scheds(cfg)
    linear = {
        "u": [stokes_semigroup(u0, t, check=False).values for t in cfg.times],
        "u_init": u0.values,
    }

    def bilinear(hist, k):
        def forcing(s):
            u = hist.at("u", s)
            return _outer(u, u)

        duh = duhamel_stokes(forcing, cfg.times[k], scheds[k], grid=grid)
        return {"u": -duh.values}

    def monitors(hist):
        dr, tr = solenoidal_residual(VectorField(grid, hist.data["u"][-1]))
        return {"div_residuals": dr, "trace_residuals": tr}

    trace, histories = _run_picard(cfg, grid, linear, bilinear, monitors)
    return PicardResult(cfg, trace, cfg.times, histories, {"u": linear["u"]}, grid)


def picard_mhd(u0, b0, cfg):
    """Viscous resistive MHD: velocity under S, magnetic field under the
    mixed heat semigroup with slip conditions."""
    grid = u0.grid
    _validate_nse_norm_spec(cfg.norm_spec, grid.n)
    _check_solenoidal(u0, cfg.solenoidal_tol, "u0")
    bres = star_divergence_residual(b0)
    if bres > cfg.solenoidal_tol:
        raise SolenoidalityError(
            f"b0 is not solenoidal in the slip-parity sense: residual {bres:.3e}",
            div_residual=bres,
        )
    scheds = _scheds(cfg)
    linear = {
        "u": [stokes_semigroup(u0, t, check=False).values for t in cfg.times],
        "b": [mixed_star_semigroup(b0, t).values for t in cfg.times],
        "u_init": u0.values,
        "b_init": b0.values,
    }

    def bilinear(hist, k):
        def forcing_u(s):
            u = hist.at("u", s)
            b = hist.at("b", s)
            return _outer(u, u) - _outer(b, b)

        def forcing_b(s):
            u = hist.at("u", s)
            b = hist.at("b", s)
            w = _outer(u, b) - _outer(b, u)  # w_{ki} = u_k b_i - b_k u_i
            return -tensor_divergence(w, grid)

        duh_u = duhamel_stokes(forcing_u, cfg.times[k], scheds[k], grid=grid)
        duh_b = duhamel_heat(forcing_b, cfg.times[k], "star", scheds[k], grid=grid)
        return {"u": -duh_u.values, "b": duh_b.values}

    def monitors(hist):
        dr, tr = solenoidal_residual(VectorField(grid, hist.data["u"][-1]))
        bdr = max(
            star_divergence_residual(VectorField(grid, snap)) for snap in hist.data["b"][1:]
        )
        return {"div_residuals": dr, "trace_residuals": tr, "b_div_residuals": bdr}

    trace, histories = _run_picard(cfg, grid, linear, bilinear, monitors)
    return PicardResult(cfg, trace, cfg.times, histories, {k: linear[k] for k in ("u", "b")}, grid)


def picard_fm_mhd(u0, b0, cfg):
    """Flow/magnetic-field system of MHD type: both fields no-slip, both under S."""
    grid = u0.grid
    _validate_nse_norm_spec(cfg.norm_spec, grid.n)
    _check_solenoidal(u0, cfg.solenoidal_tol, "u0")
    _check_solenoidal(b0, cfg.solenoidal_tol, "b0")
    scheds = _scheds(cfg)
    linear = {
        "u": [stokes_semigroup(u0, t, check=False).values for t in cfg.times],
        "b": [stokes_semigroup(b0, t, check=False).values for t in cfg.times],
        "u_init": u0.values,
        "b_init": b0.values,
    }

    def bilinear(hist, k):
        def forcing_u(s):
            u = hist.at("u", s)
            b = hist.at("b", s)
            return _outer(u, u) - _outer(b, b)

        def forcing_b(s):
            u = hist.at("u", s)
            b = hist.at("b", s)
            return _outer(u, b) - _outer(b, u)

        duh_u = duhamel_stokes(forcing_u, cfg.times[k], scheds[k], grid=grid)
        duh_b = duhamel_stokes(forcing_b, cfg.times[k], scheds[k], grid=grid)
        return {"u": -duh_u.values, "b": -duh_b.values}

    def monitors(hist):
        dr, tr = solenoidal_residual(VectorField(grid, hist.data["u"][-1]))
        bvals = hist.data["b"][-1]
        btrace = float(np.max(np.abs(bvals[..., 0]))) / (float(np.max(np.abs(bvals))) + 1e-300)
        return {"div_residuals": dr, "trace_residuals": tr, "b_div_residuals": btrace}

    trace, histories = _run_picard(cfg, grid, linear, bilinear, monitors)
    return PicardResult(cfg, trace, cfg.times, histories, {k: linear[k] for k in ("u", "b")}, grid)


def picard_nlcf(u0, d0, cfg):
    """Nematic liquid crystal flow, Neumann (nlcf_n) or Dirichlet (nlcf_d) director.

    Iterates the pair (u, dt) with dt = d - d_ref; the drift of |d| away from 1
    is monitored, never corrected.
    """
    grid = u0.grid
    mode = cfg.system
    if mode not in ("nlcf_n", "nlcf_d"):
        raise InputDomainError("picard_nlcf requires system nlcf_n or nlcf_d")
    _check_solenoidal(u0, cfg.solenoidal_tol, "u0")
    d_ref_raw = cfg.d_far if mode == "nlcf_n" else cfg.d_wall
    if d_ref_raw is None:
        raise InputDomainError("NLCF needs the far-field (Neumann) or wall (Dirichlet) director")
    d_ref = np.asarray(d_ref_raw, dtype=float)
    mags = d0.magnitude()
    if np.max(np.abs(mags - 1.0)) > 1e-10:
        raise InputDomainError("initial director must be unit length nodewise")
    bc = "N" if mode == "nlcf_n" else "D"
    dt0 = d0.values - d_ref.reshape((-1,) + (1,) * grid.n)
    if bc == "D":
        wall = float(np.max(np.abs(dt0[..., 0])))
        if wall > 1e-10:
            raise CompatibilityError(
                f"Dirichlet director data must equal d_wall on the boundary "
                f"(trace deviation {wall:.3e})",
                trace_magnitude=wall,
            )
    scheds = _scheds(cfg)
    dt0f = VectorField(grid, dt0)
    linear = {
        "u": [stokes_semigroup(u0, t, check=False).values for t in cfg.times],
        "dt": [heat_semigroup(dt0f, t, bc).values for t in cfg.times],
        "u_init": u0.values,
        "dt_init": dt0,
    }
    dref_shape = d_ref.reshape((-1,) + (1,) * grid.n)
    far0 = _far_field_metric(grid, dt0)

    def bilinear(hist, k):
        def forcing_u(s):
            u = hist.at("u", s)
            dt = hist.at("dt", s)
            grads = np.stack([_grad_components(c, grid) for c in dt])  # (L, n, ...)
            F = _outer(u, u)
            F += np.einsum("lk...,lj...->kj...", grads, grads)
            return F

        def forcing_d(s):
            u = hist.at("u", s)
            dt = hist.at("dt", s)
            grads = np.stack([_grad_components(c, grid) for c in dt])
            adv = np.einsum("k...,lk...->l...", u, grads)
            gsq = np.einsum("lk...,lk...->...", grads, grads)
            return -adv + gsq[None] * (dt + dref_shape)

        duh_u = duhamel_stokes(forcing_u, cfg.times[k], scheds[k], grid=grid)
        duh_d = duhamel_heat(forcing_d, cfg.times[k], bc, scheds[k], grid=grid)
        return {"u": -duh_u.values, "dt": duh_d.values}

    def monitors(hist):
        dr, tr = solenoidal_residual(VectorField(grid, hist.data["u"][-1]))
        drift = 0.0
        far = 0.0
        for snap in hist.data["dt"][1:]:
            mag = np.sqrt(np.sum((snap + dref_shape) ** 2, axis=0))
            drift = max(drift, float(np.max(np.abs(mag - 1.0))))
            fm = _far_field_metric(grid, snap)
            if fm is not None:
                far = max(far, fm)
        out = {"div_residuals": dr, "trace_residuals": tr, "d_drift": drift}
        if far0 is not None:
            out["far_field"] = far
        return out

    trace, histories = _run_picard(cfg, grid, linear, bilinear, monitors)
    return PicardResult(cfg, trace, cfg.times, histories, {k: linear[k] for k in ("u", "dt")}, grid)

import math

import numpy as np
import pytest

from halfspace.errors import CompatibilityError, InputDomainError, SolenoidalityError
from halfspace.fields import TensorGrid, VectorField, WeightedNormSpec
from halfspace.mild_solvers import (
    PicardConfig,
    picard_fm_mhd,
    picard_mhd,
    picard_nlcf,
    picard_nse,
)
from halfspace.samples import (
    director_bump,
    discrete_curl_field,
    star_solenoidal_bump,
)

GRID = TensorGrid(2, 8.0, 8.0, (64, 65))


def small_u0(amp=0.1, sigma=0.9, center=(0.0, 4.0)):
    return discrete_curl_field(GRID, center=center, sigma=sigma, amplitude=amp)


def base_cfg(system, **kw):
    defaults = dict(
        system=system,
        horizon=0.25,
        n_time_nodes=5,
        norm_spec=WeightedNormSpec("Yab", a=1.0, b=0.5),
        max_iterations=12,
        tolerance=1e-10,
        duhamel_nodes=12,
    )
    defaults.update(kw)
    return PicardConfig(**defaults)


def test_zero_data_converges_immediately():
    u0 = VectorField(GRID, np.zeros((2,) + GRID.shape))
    res = picard_nse(u0, base_cfg("nse"))
    assert res.trace.verdict == "converged"
    assert len(res.trace.diffs) == 1
    assert all(np.max(np.abs(s)) == 0.0 for s in res.histories["u"])


def test_nse_small_data_contracts():
    from halfspace.fields import VectorField as VF, weighted_norm

    res = picard_nse(small_u0(), base_cfg("nse"))
    assert res.trace.verdict == "converged"
    assert all(r < 1.0 for r in res.trace.ratios)
    # norm-class membership: the limit is controlled by the linear part
    spec = res.config.norm_spec
    lin = max(weighted_norm(VF(res.grid, v), spec) for v in res.linear["u"])
    assert res.trace.norms[-1] <= 2.0 * lin
    assert res.trace.fixed_point_residual <= 2.0 * res.trace.diffs[-1] + 1e-14


def test_nse_first_duhamel_iterate_scales_quadratically():
    # iteration 1 adds exactly B(zero-history pinned to the data at t=0),
    # a homogeneous quadratic in u0
    cfg = base_cfg("nse", max_iterations=1, tolerance=0.0)
    r1 = picard_nse(small_u0(amp=0.05), cfg)
    r2 = picard_nse(small_u0(amp=0.10), cfg)
    for k in range(len(cfg.times)):
        d1 = r1.histories["u"][k] - r1.linear["u"][k]
        d2 = r2.histories["u"][k] - r2.linear["u"][k]
        np.testing.assert_allclose(d2, 4.0 * d1, rtol=1e-11, atol=1e-16)


def test_nse_contraction_monotone_under_data_halving():
    cfg = base_cfg("nse", max_iterations=6, tolerance=0.0)
    full = picard_nse(small_u0(amp=0.2), cfg)
    half = picard_nse(small_u0(amp=0.1), cfg)
    r_full = full.trace.ratios[1]
    r_half = half.trace.ratios[1]
    assert r_half <= r_full + 0.05


def test_nse_rejects_bad_norm_spec():
    with pytest.raises(InputDomainError):
        base_cfg("nse", norm_spec=WeightedNormSpec("Yab", a=0.5, b=1.8))
        picard_nse(small_u0(), base_cfg("nse", norm_spec=WeightedNormSpec("Yab", a=0.5, b=1.8)))
    with pytest.raises(InputDomainError):
        picard_nse(small_u0(), base_cfg("nse", norm_spec=WeightedNormSpec("Zaal", a=0.5, alpha=0.9)))


def test_nse_flags_excluded_corner():
    spec = WeightedNormSpec("Yab", a=1.0, b=1.0)  # (n-1, 1) for n=2
    with pytest.warns(UserWarning):
        picard_nse(small_u0(), base_cfg("nse", norm_spec=spec, max_iterations=2, tolerance=0.0))


def test_nse_rejects_nonsolenoidal_data():
    x1, xn = GRID.meshgrid()
    bad = VectorField(GRID, np.stack([np.exp(-(x1**2) - (xn - 4) ** 2)] * 2))
    with pytest.raises(SolenoidalityError):
        picard_nse(bad, base_cfg("nse"))


def test_mhd_reduces_to_nse_when_b0_vanishes():
    cfg = base_cfg("mhd", max_iterations=5, tolerance=0.0)
    u0 = small_u0()
    b0 = VectorField(GRID, np.zeros((2,) + GRID.shape))
    res_mhd = picard_mhd(u0, b0, cfg)
    res_nse = picard_nse(u0, base_cfg("nse", max_iterations=5, tolerance=0.0))
    for k in range(len(cfg.times)):
        assert np.max(np.abs(res_mhd.histories["u"][k] - res_nse.histories["u"][k])) <= 1e-10
        assert np.max(np.abs(res_mhd.histories["b"][k])) == 0.0


def test_mhd_alfven_cancellation():
    # u0 = b0 kills the velocity nonlinearity at the first correction.
    # u0 doubles as b0 here; the slip-parity residual check is loosened since
    # the point is the algebraic cancellation, not the data class
    cfg = base_cfg("mhd", max_iterations=1, tolerance=0.0, solenoidal_tol=5e-2)
    u0 = small_u0()
    res = picard_mhd(u0, u0, cfg)
    for k in range(len(cfg.times)):
        first_corr = res.histories["u"][k] - res.linear["u"][k]
        assert np.max(np.abs(first_corr)) < 1e-14


def test_mhd_converges_and_b_stays_solenoidal():
    u0 = small_u0(amp=0.1)
    b0 = star_solenoidal_bump(GRID, center=(0.5, 4.0), sigma=1.0, amplitude=0.08)
    res = picard_mhd(u0, b0, base_cfg("mhd"))
    assert res.trace.verdict == "converged"
    assert max(res.trace.b_div_residuals) < 1e-5


def test_fm_mhd_reduces_to_nse_and_has_no_slip_b():
    cfg = base_cfg("fm_mhd", max_iterations=5, tolerance=0.0)
    u0 = small_u0()
    zero = VectorField(GRID, np.zeros((2,) + GRID.shape))
    res0 = picard_fm_mhd(u0, zero, cfg)
    res_nse = picard_nse(u0, base_cfg("nse", max_iterations=5, tolerance=0.0))
    for k in range(len(cfg.times)):
        assert np.max(np.abs(res0.histories["u"][k] - res_nse.histories["u"][k])) <= 1e-10

    b0 = discrete_curl_field(GRID, center=(0.5, 4.5), sigma=0.8, amplitude=0.08)
    res = picard_fm_mhd(u0, b0, base_cfg("fm_mhd"))
    assert res.trace.verdict == "converged"
    # no-slip for ALL components of b (unlike the slip conditions of mhd)
    assert max(res.trace.b_div_residuals) < 1e-6  # relative wall trace of b


def test_fm_mhd_swap_antisymmetry():
    # swapping (u0, b0) flips the sign of the b-equation nonlinearity
    cfg = base_cfg("fm_mhd", max_iterations=1, tolerance=0.0)
    u0 = small_u0(amp=0.1)
    b0 = discrete_curl_field(GRID, center=(0.5, 4.5), sigma=0.8, amplitude=0.07)
    r_ab = picard_fm_mhd(u0, b0, cfg)
    r_ba = picard_fm_mhd(b0, u0, cfg)
    for k in range(len(cfg.times)):
        corr_ab = r_ab.histories["b"][k] - r_ab.linear["b"][k]
        corr_ba = r_ba.histories["b"][k] - r_ba.linear["b"][k]
        np.testing.assert_allclose(corr_ab, -corr_ba, atol=1e-12)


DFAR = (0.0, 0.0, 1.0)


def test_nlcf_constant_director_is_fixed_point():
    u0 = VectorField(GRID, np.zeros((2,) + GRID.shape))
    d0 = director_bump(GRID, DFAR, tilt=0.0)
    cfg = base_cfg("nlcf_n", d_far=DFAR)
    res = picard_nlcf(u0, d0, cfg)
    assert res.trace.verdict == "converged"
    for k in range(len(cfg.times)):
        assert np.max(np.abs(res.histories["u"][k])) == 0.0
        assert np.max(np.abs(res.histories["dt"][k])) < 1e-13


@pytest.mark.parametrize("mode,wall_aligned", [("nlcf_n", False), ("nlcf_d", True)])
def test_nlcf_small_data_contracts_with_unit_director(mode, wall_aligned):
    u0 = small_u0(amp=0.08)
    d0 = director_bump(GRID, DFAR, tilt=0.12, sigma=1.2, wall_aligned=wall_aligned)
    kw = {"d_far": DFAR} if mode == "nlcf_n" else {"d_wall": DFAR}
    res = picard_nlcf(u0, d0, base_cfg(mode, **kw))
    assert res.trace.verdict == "converged"
    assert all(r < 1.0 for r in res.trace.ratios)
    assert max(res.trace.d_drift) < 1e-3
    if mode == "nlcf_n":
        # far-field monitor: deviation beyond |x| >= 6 stays controlled by the
        # initial deviation plus a grid-tail allowance
        from halfspace.mild_solvers import _far_field_metric

        dt0 = d0.values - np.array(DFAR).reshape(3, 1, 1)
        far0 = _far_field_metric(GRID, dt0)
        assert len(res.trace.far_field) > 0
        assert max(res.trace.far_field) <= 3.0 * far0 + 1e-2


def test_nlcf_dirichlet_requires_wall_compatibility():
    u0 = small_u0(amp=0.05)
    d0 = director_bump(GRID, DFAR, tilt=0.3, sigma=3.0, center=(0.0, 0.0))
    with pytest.raises(CompatibilityError):
        picard_nlcf(u0, d0, base_cfg("nlcf_d", d_wall=DFAR))


def test_nlcf_requires_unit_initial_director():
    u0 = small_u0(amp=0.05)
    bad = VectorField(GRID, 0.5 * director_bump(GRID, DFAR).values)
    with pytest.raises(InputDomainError):
        picard_nlcf(u0, bad, base_cfg("nlcf_n", d_far=DFAR))


def test_trace_serializes_to_json():
    res = picard_nse(small_u0(amp=0.05), base_cfg("nse", max_iterations=3))
    js = res.trace.to_json()
    assert '"system": "nse"' in js
    assert '"verdict"' in js

import math

import numpy as np
import pytest

from halfspace.errors import InputDomainError
from halfspace.fields import (
    ScalarField,
    TensorGrid,
    VectorField,
    WeightedNormSpec,
    boundary_trace,
    divergence,
    gradient,
    leray_project,
    load_field,
    save_field,
    solenoidal_residual,
    weighted_norm,
)
from halfspace.samples import (
    decaying_envelope,
    discrete_curl_field,
    discrete_gradient_field,
    gaussian_bump,
    stream_bump_velocity,
)

GRID = TensorGrid(2, 8.0, 8.0, (96, 97))


def test_grid_geometry():
    assert GRID.spacing == (pytest.approx(1.0 / 6.0), pytest.approx(8.0 / 96.0))
    ax1, axn = GRID.axes()
    assert ax1[0] == -8.0 and ax1[-1] < 8.0
    assert axn[0] == 0.0 and axn[-1] == 8.0
    with pytest.raises(InputDomainError):
        TensorGrid(2, 8.0, 8.0, (4, 16))
    with pytest.raises(InputDomainError):
        TensorGrid(4, 8.0, 8.0, (16, 16, 16, 16))


def test_zero_field_norms_vanish():
    zero = VectorField(GRID, np.zeros((2,) + GRID.shape))
    for spec in [
        WeightedNormSpec("Lq", q=2),
        WeightedNormSpec("Lq", q=np.inf),
        WeightedNormSpec("Ya", a=1.5),
        WeightedNormSpec("Za", a=1.0),
        WeightedNormSpec("Yab", a=1.0, b=0.5),
        WeightedNormSpec("Zaal", a=1.0, alpha=0.5),
        WeightedNormSpec("Lq_uloc", q=2),
    ]:
        assert weighted_norm(zero, spec) == 0.0


def test_yab_norm_of_matching_envelope_is_one():
    f = ScalarField(GRID, decaying_envelope(GRID, 1.2, 0.7))
    assert weighted_norm(f, WeightedNormSpec("Yab", a=1.2, b=0.7)) == pytest.approx(1.0, abs=1e-13)


def test_zaal_norm_matches_dense_grid_oracle():
    # f = x_n exp(-|x|^2): Z_{1,1} norm against a refined-grid evaluation.
    def build(shape):
        g = TensorGrid(2, 8.0, 8.0, shape)
        x1, xn = g.meshgrid()
        return ScalarField(g, xn * np.exp(-(x1**2 + xn**2)))

    spec = WeightedNormSpec("Zaal", a=1.0, alpha=1.0)
    coarse = weighted_norm(build((96, 97)), spec)
    dense = weighted_norm(build((384, 385)), spec)
    assert coarse == pytest.approx(dense, rel=0.02)


def test_zaal_norm_infinite_without_boundary_vanishing():
    f = ScalarField(GRID, np.ones(GRID.shape))
    assert weighted_norm(f, WeightedNormSpec("Zaal", a=0.0, alpha=0.5)) == math.inf
    # alpha = 0 coincides with Y_{a,0} on every field
    ya = weighted_norm(f, WeightedNormSpec("Yab", a=1.0, b=0.0))
    za0 = weighted_norm(f, WeightedNormSpec("Zaal", a=1.0, alpha=0.0))
    assert ya == za0


def test_norm_monotonicity_in_weights():
    rng = np.random.default_rng(5)
    vals = rng.normal(size=GRID.shape) * decaying_envelope(GRID, 3.0, 1.0)
    f = ScalarField(GRID, vals)
    lo = weighted_norm(f, WeightedNormSpec("Yab", a=1.0, b=0.2))
    hi = weighted_norm(f, WeightedNormSpec("Yab", a=2.0, b=0.8))
    assert lo <= hi


def test_lq_uloc_between_local_and_global():
    f = ScalarField(GRID, decaying_envelope(GRID, 2.0, 0.0))
    q2 = WeightedNormSpec("Lq", q=2)
    u2 = WeightedNormSpec("Lq_uloc", q=2)
    full = weighted_norm(f, q2)
    uloc = weighted_norm(f, u2)
    assert 0 < uloc <= full
    assert weighted_norm(f, WeightedNormSpec("Lq_uloc", q=np.inf)) == pytest.approx(
        weighted_norm(f, WeightedNormSpec("Lq", q=np.inf))
    )


def test_divergence_of_curl_field_is_small_and_second_order():
    errs = []
    for shape in ((64, 65), (128, 129)):
        g = TensorGrid(2, 8.0, 8.0, shape)
        u = stream_bump_velocity(g, center=(0.0, 4.0), sigma=1.0)
        errs.append(float(np.max(np.abs(divergence(u).values))))
    order = math.log2(errs[0] / errs[1])
    assert order >= 1.8
    assert errs[1] < 5e-3


def test_divergence_of_linear_field():
    x1, xn = GRID.meshgrid()
    u = VectorField(GRID, np.stack([x1, xn]))
    div = divergence(u).values
    # interior nodes: exact value 2 (tangential axis is periodic; exclude the seam)
    assert np.allclose(div[3:-3, 1:-1], 2.0, atol=1e-9)


def test_divergence_matches_dense_grid_oracle():
    rng = np.random.default_rng(11)
    coefs = rng.normal(size=(3, 2))

    def smooth_field(g):
        x1, xn = g.meshgrid()
        base = np.exp(-((x1 / 3) ** 2) - ((xn - 4) / 3) ** 2)
        u1 = (coefs[0, 0] * np.sin(x1) + coefs[1, 0] * xn / 8) * base
        u2 = (coefs[0, 1] * np.cos(xn) + coefs[2, 1] * x1 / 8) * base
        return VectorField(g, np.stack([u1, u2]))

    errs = []
    for shape in ((64, 65), (128, 129)):
        g = TensorGrid(2, 8.0, 8.0, shape)
        coarse = divergence(smooth_field(g)).values
        fine_grid = TensorGrid(2, 8.0, 8.0, (512, 513))
        fine = divergence(smooth_field(fine_grid)).values
        step = 512 // shape[0], 512 // (shape[1] - 1)
        errs.append(np.max(np.abs(coarse - fine[:: step[0], :: step[1]])))
    assert math.log2(errs[0] / errs[1]) >= 1.8


def test_boundary_trace_restricts_wall_row():
    u = stream_bump_velocity(GRID, center=(0.0, 4.0))
    tr = boundary_trace(u)
    assert tr.shape == (2, 96)
    np.testing.assert_allclose(tr, u.values[..., 0])


def test_leray_fixes_solenoidal_fields():
    # Input solenoidal in the projector's own discrete sense: P u = u.
    u = discrete_curl_field(GRID, center=(0.0, 4.0), sigma=0.6)
    pu = leray_project(u)
    rel = np.max(np.abs(pu.values - u.values)) / np.max(np.abs(u.values))
    assert rel < 1e-8


def test_leray_annihilates_discrete_gradients():
    u = discrete_gradient_field(GRID, sigma=0.9, center=(0.0, 2.5))
    pu = leray_project(u)
    assert np.max(np.abs(pu.values)) < 1e-6 * np.max(np.abs(u.values))


def test_leray_idempotent_and_kills_divergence():
    rng = np.random.default_rng(17)
    x1, xn = GRID.meshgrid()
    bump = np.exp(-((x1 / 2.5) ** 2) - ((xn - 4) / 2.5) ** 2)
    u = VectorField(GRID, np.stack([bump * rng.normal(), bump * np.sin(x1) * rng.normal()]))
    pu = leray_project(u)
    ppu = leray_project(pu)
    rel = np.max(np.abs(ppu.values - pu.values)) / np.max(np.abs(pu.values))
    assert rel < 1e-8
    div_rel, trace_rel = solenoidal_residual(pu)
    assert div_rel < 1e-7
    assert trace_rel < 1e-7


def test_leray_divergence_second_order_against_fd_measure():
    # The measuring stick (fields.divergence) differs from the projector's
    # internal operators tangentially, so the measured residual is O(h^2).
    errs = []
    for shape in ((48, 49), (96, 97)):
        g = TensorGrid(2, 8.0, 8.0, shape)
        x1, xn = g.meshgrid()
        bump = np.exp(-((x1 / 2) ** 2) - ((xn - 4) / 2) ** 2)
        u = VectorField(g, np.stack([bump, bump * np.sin(x1)]))
        pu = leray_project(u)
        errs.append(float(np.max(np.abs(divergence(pu).values))))
    assert math.log2(errs[0] / errs[1]) >= 1.8


def test_leray_warns_without_boundary_decay():
    x1, xn = GRID.meshgrid()
    u = VectorField(GRID, np.stack([np.ones(GRID.shape), np.zeros(GRID.shape)]))
    with pytest.warns(Warning):
        leray_project(u)


def test_field_validation_and_immutability():
    with pytest.raises(InputDomainError):
        ScalarField(GRID, np.full(GRID.shape, np.nan))
    with pytest.raises(InputDomainError):
        VectorField(GRID, np.zeros((2, 5, 5)))
    f = gaussian_bump(GRID)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_serialization_roundtrip(tmp_path):
    u = stream_bump_velocity(GRID, center=(0.5, 3.0), sigma=1.2)
    for fmt, name in (("csv", "u.csv"), ("npz", "u.npz")):
        p = tmp_path / name
        save_field(u, p, fmt=fmt)
        back = load_field(p)
        assert back.grid == u.grid
        np.testing.assert_array_equal(back.values, u.values)


def test_three_dimensional_projection_basics():
    g3 = TensorGrid(3, 4.0, 4.0, (24, 24, 25))
    phi = gaussian_bump(g3, center=(0.0, 0.0, 1.5), sigma=0.6)
    from halfspace.fields import potential_gradient

    u = potential_gradient(phi)
    pu = leray_project(u, check_boundary=False)
    assert np.max(np.abs(pu.values)) < 1e-4 * np.max(np.abs(u.values))
    rng = np.random.default_rng(4)
    bump = phi.values
    w = VectorField(g3, np.stack([bump * rng.normal(), bump * rng.normal(), bump * rng.normal()]))
    pw = leray_project(w, check_boundary=False)
    div_rel, trace_rel = solenoidal_residual(pw)
    assert div_rel < 1e-5 and trace_rel < 1e-5


def test_gradient_matches_analytic():
    g = TensorGrid(2, 8.0, 8.0, (128, 129))
    phi = gaussian_bump(g, center=(0.0, 4.0), sigma=1.5)
    gr = gradient(phi, order=4)
    x1, xn = g.meshgrid()
    exact1 = -(x1 - 0.0) / 1.5**2 * phi.values
    assert np.max(np.abs(gr.values[0] - exact1)) < 1e-5

import numpy as np
import pytest

from rieszlab.grids import GridField, RadialProfile, TGrid
from rieszlab.multipliers import k_alpha_l2_constant
from rieszlab.square import equivalence_probe, g_alpha, g_beta_spherical


def modulated_gaussian(d):
    if d == 1:
        return GridField.from_function(lambda x: np.exp(-x ** 2 / 8) * np.cos(2 * x), dim=1)
    return GridField.from_function(lambda x, y: np.exp(-(x * x + y * y) / 8) * np.cos(2 * x), dim=2)


def l2_ratio(res, f):
    return np.sum(np.abs(res.field.values) ** 2) / np.sum(np.abs(f.values) ** 2)


@pytest.mark.parametrize("alpha", [0.75, 1.5])
def test_plancherel_constant_d1(alpha):
    f = modulated_gaussian(1)
    res = g_alpha(f, alpha)
    assert res.convergence_flag
    assert l2_ratio(res, f) == pytest.approx(k_alpha_l2_constant(alpha), rel=1e-3)


def test_cell_scheme_beats_node_scheme_near_half():
    f = modulated_gaussian(1)
    cell = l2_ratio(g_alpha(f, 0.75, scheme="cell"), f)
    node = l2_ratio(g_alpha(f, 0.75, scheme="node"), f)
    want = k_alpha_l2_constant(0.75)
    assert abs(cell - want) < abs(node - want)


def test_short_tgrid_flags_missing_mass():
    f = modulated_gaussian(1)
    res = g_alpha(f, 1.0, TGrid(3, 4, 8))
    assert not res.convergence_flag
    assert res.coverage < 0.5


def test_alpha_range_checked():
    with pytest.raises(ValueError):
        g_alpha(modulated_gaussian(1), 0.5)


def test_dilation_covariance():
    # G_alpha commutes with dilations: G(f(2x))(x) = (Gf)(2x)
    f = GridField.from_function(lambda x: np.exp(-x ** 2 / 8) * np.cos(2 * x), dim=1, n=8192,
                                extent=512.0)
    g = GridField.from_function(lambda x: np.exp(-x ** 2 / 2) * np.cos(4 * x), dim=1, n=8192,
                                extent=256.0)
    a = np.abs(g_alpha(f, 1.0).field.values)
    b = np.abs(g_alpha(g, 1.0).field.values)
    assert np.max(np.abs(a - b)) < 1e-6 * a.max()


def test_radial_engine_and_equivalence():
    r = np.geomspace(1e-3, 60, 6000)
    f = RadialProfile(2, r, np.exp(-r ** 2 / 2))
    radii = np.geomspace(0.1, 6, 40)
    res = g_alpha(f, 1.0, TGrid(-6, 6, 16), radii=radii)
    assert res.convergence_flag
    sph = g_beta_spherical(f, 1.0, TGrid(-6, 6, 16), radii=radii)
    assert np.all(np.abs(sph.field.values) > 0)
    eq = equivalence_probe(f, 1.0, 1e-2, TGrid(-6, 6, 16), radii=radii)
    assert eq.spread < 1.2
    assert 0.1 < eq.ratio_min < eq.ratio_max < 0.2

import math

import numpy as np
import pytest
from scipy import integrate

from rieszlab.grids import GridField, RadialProfile, TGrid
from rieszlab.multipliers import (PsiSpec, bochner_riesz, bochner_riesz_symbol,
                                  k_alpha_cell_symbol, k_alpha_convolve, k_alpha_energy,
                                  k_alpha_l2_constant, k_alpha_symbol, riesz_kernel,
                                  spherical_mean, spherical_mean_dt_symbol,
                                  spherical_mean_symbol, sphere_symbol)
from rieszlab.special import script_j


def test_bochner_riesz_symbol_values():
    m = bochner_riesz_symbol(1.5, t=2.0)
    assert m(np.array([0.0]))[0] == 1.0
    assert m(np.array([1.0]))[0] == pytest.approx(0.75 ** 1.5)
    assert m(np.array([2.0, 3.0])).tolist() == [0.0, 0.0]
    with pytest.raises(ValueError):
        bochner_riesz_symbol(-0.1)


def test_riesz_kernel_d1_gamma0():
    # inverse transform of the indicator of [-1, 1]
    x = np.linspace(0.1, 30, 50)
    assert np.allclose(riesz_kernel(1, 0.0, x), np.sin(x) / (math.pi * x), atol=1e-12)


def test_bochner_riesz_order0_is_projection():
    f = GridField.from_radial(lambda r: np.exp(-r ** 2 / 8), n=128, extent=32.0)
    g = bochner_riesz(f, 0.0, t=1.3)
    gg = bochner_riesz(g, 0.0, t=1.3)
    assert np.max(np.abs(gg.values - g.values)) < 1e-12


def test_bochner_riesz_engines_agree():
    r = np.geomspace(1e-3, 40, 6000)
    prof = RadialProfile(2, r, np.exp(-r ** 2 / 2))
    out = bochner_riesz(prof, 2.0, t=1.5)
    f = GridField.from_radial(lambda s: np.exp(-s ** 2 / 2), n=256, extent=64.0)
    g = bochner_riesz(f, 2.0, t=1.5)
    mid = f.n // 2
    x = f.axis()[mid:mid + 40]
    want = np.interp(x[1:], out.radii, out.values.real)
    assert np.max(np.abs(g.values[mid, mid + 1:mid + 40].real - want)) < 1e-5


def test_k_alpha_l2_constant_beta_oracle():
    for a in (0.75, 1.0, 2.0):
        val, _ = integrate.quad(lambda u: (a * u * u * (1 - u * u) ** (a - 1)) ** 2 / u, 0, 1,
                                limit=200)
        assert k_alpha_l2_constant(a) == pytest.approx(val, rel=1e-8)
        assert k_alpha_energy(a, 1.0) == pytest.approx(val, rel=1e-8)
    assert k_alpha_l2_constant(0.5) == math.inf


def test_k_alpha_cell_symbols_integrate_exactly():
    tg = TGrid(-8, 8, 1)
    a = 0.75
    rho = np.array([0.3, 1.0, 2.5])
    total = np.zeros(3)
    for k in range(tg.k_min, tg.k_max + 1):
        m = k_alpha_cell_symbol(a, 2.0 ** k, 2.0 ** (k + 1))
        total += m(rho) ** 2 * math.log(2.0)
    assert np.allclose(total, k_alpha_l2_constant(a), rtol=1e-6)


def test_k_alpha_symbol_edge_average_is_finite():
    m = k_alpha_symbol(0.75, 1.0, cell=0.01)
    v = m(np.array([0.999, 1.0, 1.004]))
    assert np.all(np.isfinite(v))
    with pytest.raises(ValueError):
        k_alpha_convolve(GridField(np.zeros(16), 1.0), 0.5, strict=True)
    with pytest.warns(RuntimeWarning):
        k_alpha_convolve(GridField(np.zeros(16), 1.0), 0.5)


def test_spherical_mean_ball_volume():
    # beta = 1: plain average over the unit ball times its volume
    for d in (2, 3):
        vol = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
        assert spherical_mean_symbol(d, 1.0)(np.array([0.0]))[0] == pytest.approx(vol, rel=1e-13)


def test_spherical_mean_of_constant():
    f = GridField(np.ones((64, 64)), 16.0)
    g = spherical_mean(f, 1.0, t=2.0)
    assert np.allclose(g.values, math.pi, atol=1e-12)


def test_spherical_mean_dt_symbol_finite_difference():
    rho = np.array([0.4, 1.7, 5.0])
    h = 1e-6
    fd = (spherical_mean_symbol(3, 0.5, 1.0 + h)(rho)
          - spherical_mean_symbol(3, 0.5, 1.0 - h)(rho)) / (2 * h)
    assert np.allclose(spherical_mean_dt_symbol(3, 0.5, 1.0)(rho), fd, atol=1e-7)


def test_psi_spec_normalisation_and_vanishing():
    psi = PsiSpec(2, 1.0)
    assert psi.vanishing_order == 20 and psi.bump_power == 24
    rho = np.linspace(0.01, 6 * psi.peak_frequency, 20001)
    assert np.abs(psi.u(rho)).max() == pytest.approx(1.0, rel=1e-6)
    # order 10 d at the origin: u(2 e) / u(e) = 2^(10 d)
    e = 1e-2
    assert psi.u(2 * e) / psi.u(e) == pytest.approx(2.0 ** 20, rel=1e-3)
    with pytest.raises(ValueError):
        PsiSpec(2, 1.5)
    with pytest.raises(ValueError):
        PsiSpec(2, 1.0, bump_power=20)


def test_sphere_symbol_d3_closed_form():
    psi = PsiSpec(3, 1.0)
    r = 7.0
    rho = np.linspace(0.5, 60, 300)
    want = psi.u(rho) * r * r * 4 * math.pi * np.sin(r * rho) / (r * rho)
    assert np.allclose(sphere_symbol(psi, r)(rho), want, atol=1e-10)
    assert np.allclose(script_j(3, r * rho), 4 * math.pi * np.sin(r * rho) / (r * rho),
                       atol=1e-12)

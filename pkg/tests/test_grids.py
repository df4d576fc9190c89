import math

import numpy as np
import pytest
from scipy import integrate

from rieszlab.grids import (GridField, LorentzExponents, RadialProfile, TGrid,
                            annulus_profile, decreasing_rearrangement,
                            default_grid, loglog_fit, lorentz_norm,
                            lorentz_norm_samples, lp_norm, tgrid_integrate)


def test_gridfield_invariants():
    with pytest.raises(ValueError):
        GridField(np.zeros(100), 1.0)
    with pytest.raises(ValueError):
        GridField(np.zeros((8, 16)), 1.0)
    with pytest.raises(ValueError):
        GridField(np.zeros(8), 0.0)
    with pytest.raises(ValueError):
        GridField(np.array([np.nan] * 8), 1.0)
    g = default_grid(2)
    assert g.n == 512 and g.extent == 64.0 and g.cell_volume == pytest.approx(0.125 ** 2)
    assert default_grid(1).n == 8192
    assert not g.values.flags.writeable


def test_lp_norm_indicator_any_p():
    f = GridField.from_function(lambda x, y: ((x >= -2) & (x < 2) & (y >= -1) & (y < 1)).astype(float),
                                n=256, extent=16.0)
    m = 8.0
    for p in (1, 1.5, 2, 4, 7):
        assert lp_norm(f, p) == pytest.approx(m ** (1 / p), rel=1e-12)
    assert lp_norm(f, math.inf) == 1.0


def test_lp_norm_gaussian():
    f = GridField.from_radial(lambda r: np.exp(-r ** 2 / 2), n=512, extent=32.0)
    assert lp_norm(f, 2) == pytest.approx(math.sqrt(math.pi), abs=1e-4)


def test_lp_norm_dilation():
    lam = 2.0
    for p in (1, 2, 3):
        f = GridField.from_radial(lambda r: np.exp(-r ** 2 / 2), n=512, extent=32.0)
        g = GridField.from_radial(lambda r: np.exp(-(lam * r) ** 2 / 2), n=512, extent=32.0)
        assert lp_norm(g, p) == pytest.approx(lam ** (-2 / p) * lp_norm(f, p), rel=1e-8)


def test_lp_norm_regions():
    f = GridField.from_function(lambda x, y: np.ones_like(x), n=256, extent=16.0)
    assert lp_norm(f, 2, region=(20.0, 30.0)) == 0.0
    area = lp_norm(f, 1, region=(0.0, 4.0))
    assert area == pytest.approx(16 * math.pi, rel=1e-2)


def test_lorentz_q_equals_p():
    rng = np.random.default_rng(1)
    f = GridField(rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64)), 5.0)
    for p in (1.5, 2.0, 4.0):
        assert lorentz_norm(f, LorentzExponents(p, p)) == pytest.approx(lp_norm(f, p), rel=1e-10)


def test_lorentz_indicator():
    f = GridField.from_function(lambda x: ((x >= -1.5) & (x < 1.5)).astype(float), dim=1, n=1024, extent=16.0)
    m = 3.0
    for p, q in [(2, 1), (4, 2), (4 / 3, 3), (3, 1.2)]:
        oracle, _ = integrate.quad(lambda t: t ** (q / p - 1), 0, m)
        want = oracle ** (1 / q)
        assert want == pytest.approx((p / q) ** (1 / q) * m ** (1 / p), rel=1e-10)
        assert lorentz_norm(f, LorentzExponents(p, q)) == pytest.approx(want, rel=1e-3)
    assert lorentz_norm(f, LorentzExponents(2, math.inf)) == pytest.approx(math.sqrt(m), rel=1e-12)


def test_lorentz_invariances():
    rng = np.random.default_rng(7)
    v = rng.random(4096)
    w = 0.01
    pq = (3.0, 1.5)
    a = lorentz_norm_samples(v, w, *pq)
    assert lorentz_norm_samples(rng.permutation(v), w, *pq) == pytest.approx(a, rel=1e-13)
    assert lorentz_norm_samples(2.5 * v, w, *pq) == pytest.approx(2.5 * a, rel=1e-13)
    with pytest.raises(ValueError):
        LorentzExponents(1.0, 2.0)
    with pytest.raises(ValueError):
        LorentzExponents(2.0, 0.5)


def test_rearrangement_measure_preserving():
    rng = np.random.default_rng(3)
    v = rng.random(5000)
    w = rng.random(5000)
    levels, ends = decreasing_rearrangement(v, w)
    for lam in (0.1, 0.5, 0.9):
        dist = w[v > lam].sum()
        k = np.searchsorted(-levels, -lam, side="left")
        assert ends[k - 1] == pytest.approx(dist, rel=1e-12)


def _shell_samples(exponent, log_power, d, rmax, n=200_000):
    edges = np.concatenate(([0.0], np.geomspace(1e-6, rmax, n + 1)))
    r = 0.5 * (edges[:-1] + edges[1:])
    vol = math.pi * (edges[1:] ** 2 - edges[:-1] ** 2) if d == 2 else None
    vals = (1 + r) ** exponent * np.log(math.e + r) ** (-log_power) * np.exp(1j * r)
    return vals, vol


def test_lorentz_borderline_profile():
    # (1+r)^(-d/p'+1/2) |bhat(r)| with |bhat| = (1+r)^(-1/2) log(e+r)^(-3/4), which is in L^2(dr)
    d, pp = 2, 4.0
    g = lambda r: (1 + r) ** (-0.5) * math.log(math.e + r) ** (-0.75)
    # f*(pi r^2) = g(r) turns both Lorentz integrals into 1-D radial integrals
    oracle2 = lambda R: math.sqrt(2 * math.sqrt(math.pi) * integrate.quad(
        lambda u: g(math.exp(u)) ** 2 * math.exp(u), math.log(1e-12), math.log(R), limit=800)[0])
    oracle1 = lambda R: 2 * math.pi ** 0.25 * integrate.quad(
        lambda u: g(math.exp(u)) * math.exp(0.5 * u), math.log(1e-12), math.log(R), limit=800)[0]
    # v = log(e + r) maps int g^2 dr onto a tail that quad handles
    limit2 = math.sqrt(2 * math.sqrt(math.pi) * integrate.quad(
        lambda v: v ** -1.5 / (1 - (math.e - 1) * math.exp(-v)), 1, np.inf, limit=800)[0])
    n42, n41 = [], []
    for rmax in (1e2, 1e4, 1e8, 1e16):
        vals, vol = _shell_samples(-d / pp + 0.5 - 0.5, 0.75, d, rmax)
        n42.append(lorentz_norm_samples(vals, vol, pp, 2))
        n41.append(lorentz_norm_samples(vals, vol, pp, 1))
        assert n42[-1] == pytest.approx(oracle2(rmax), rel=1e-3)
        assert n41[-1] == pytest.approx(oracle1(rmax), rel=1e-3)
    assert np.all(np.diff(n42) > 0) and n42[-1] < limit2
    # the q = 1 norm grows like (log R)^(1/4), without bound
    assert np.all(np.diff(n41) > 0)
    assert n41[-1] > 1.5 * n41[0]
    assert oracle1(1e200) > 1.5 * n41[-1]


def test_annulus_profile():
    f = GridField.from_function(lambda x, y: 3.0 * np.ones_like(x), n=256, extent=32.0)
    for ring in annulus_profile(f, [1, 2, 4, 8]):
        assert not ring.empty and ring.l2_mean == pytest.approx(3.0, rel=1e-12)
    g = GridField.from_radial(lambda r: 1.0 / np.maximum(r, 1e-9), n=512, extent=64.0)
    for ring in annulus_profile(g, np.arange(4, 30, 2.0)):
        assert ring.l2_mean == pytest.approx(1.0 / ring.center, rel=0.02)
    h = GridField.from_radial(lambda r: np.exp(-r ** 2 / 8), n=256, extent=32.0)
    means = [s.l2_mean for s in annulus_profile(h, np.linspace(0.5, 12, 20))]
    assert np.all(np.diff(means) < 0)
    empty = annulus_profile(f, [0.01, 0.02, 1.0])
    assert empty[0].empty


def test_loglog_fit():
    x = np.geomspace(1, 100, 30)
    fit = loglog_fit(np.column_stack([x, x ** 2]))
    assert fit.slope == pytest.approx(2.0, abs=1e-12) and fit.stderr < 1e-12
    rng = np.random.default_rng(0)
    y = 7 * x ** -1.5 * (1 + 0.01 * rng.standard_normal(x.size))
    assert loglog_fit(np.column_stack([x, y])).slope == pytest.approx(-1.5, abs=0.05)
    xs = np.linspace(1, 10, 10)
    assert loglog_fit(np.column_stack([xs, np.full(10, 4.0)])).slope == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        loglog_fit([(1, 1), (2, 2)])


def test_tgrid():
    g = TGrid(0, 0, 16)
    assert g.weights.sum() == pytest.approx(math.log(2), abs=1e-12)
    assert np.all(g.weights > 0)
    w = 3.0
    grid = TGrid(-4, 4, 16)
    got = tgrid_integrate(lambda t: t ** (1j * w), grid)
    a, b = math.log(2.0 ** -4), math.log(2.0 ** 5)
    want = (np.exp(1j * w * b) - np.exp(1j * w * a)) / (1j * w)
    assert abs(got - want) < 1e-8
    smooth = lambda t: np.exp(-t) * t
    assert abs(tgrid_integrate(smooth, grid) - tgrid_integrate(smooth, grid.refined())) < 1e-10


def test_tgrid_scale_alignment():
    grid = TGrid(-3, 3, 8)
    shifted = TGrid(-2, 4, 8)
    g = lambda t: np.exp(-t * t) * t
    assert tgrid_integrate(lambda t: g(2.0 * t), grid) == pytest.approx(tgrid_integrate(g, shifted), rel=1e-14)


def test_radial_profile():
    r = np.geomspace(1e-2, 10, 400)
    prof = RadialProfile(2, r, np.exp(-r))
    assert prof(np.array([0.5]))[0] == pytest.approx(math.exp(-0.5), rel=1e-6)
    assert prof(np.array([20.0]))[0] == 0.0
    with pytest.raises(ValueError):
        RadialProfile(2, r[::-1], r)
    with pytest.raises(ValueError):
        RadialProfile(0, r, r)

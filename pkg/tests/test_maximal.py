import numpy as np
import pytest

from rieszlab.grids import GridField, TGrid
from rieszlab.maximal import (hl_maximal, m_maximal, maximal_superlevel, riesz_maximal,
                              riesz_split, smooth_step, uncentered_maximal)
from rieszlab.multipliers import bochner_riesz
from rieszlab.transforms import MultiplierSpec


def spike(n=256, dim=1):
    v = np.zeros((n,) * dim)
    v[(n // 2,) * dim] = 1.0
    return GridField(v, float(n))


def test_hl_of_spike_1d():
    f = spike()
    m = hl_maximal(f).values.real
    mid = f.n // 2
    for k in (0, 1, 2, 3, 5, 9, 100):
        r = 1 if k <= 1 else 2 ** int(np.ceil(np.log2(k)))
        r = min(r, (f.n - 1) // 2)      # the largest ball is the whole circle
        want = 1.0 if k == 0 else 1.0 / (2 * r + 1)
        assert m[mid + k] == pytest.approx(want, rel=1e-12)
        assert m[mid - k] == pytest.approx(want, rel=1e-12)


def test_hl_basic_properties():
    rng = np.random.default_rng(3)
    f = GridField(rng.standard_normal((64, 64)), 8.0)
    m = hl_maximal(f).values.real
    assert np.all(m >= np.abs(f.values) - 1e-12)
    assert np.allclose(hl_maximal(GridField(np.full((32, 32), 2.5), 1.0)).values, 2.5)
    # all radii dominate the dyadic ones
    assert np.all(hl_maximal(f, "all").values.real >= m - 1e-12)
    with pytest.raises(ValueError):
        hl_maximal(f, [0])


def test_uncentered_dominates_and_superlevel_matches():
    rng = np.random.default_rng(4)
    a = (rng.random((32, 32)) < 0.05).astype(float)
    m = uncentered_maximal(a)
    assert np.all(m >= a)
    for thr in (1e-2, 0.1, 0.3):
        assert np.array_equal(maximal_superlevel(a, thr), m > thr)
    b = (rng.random(512) < 0.02).astype(float)
    assert np.array_equal(maximal_superlevel(b, 0.05), uncentered_maximal(b) > 0.05)


def test_riesz_split_sums_to_symbol():
    s = np.linspace(0, 1.2, 501)
    u, m = riesz_split(0.7)
    assert np.allclose(u(s) + m(s), np.clip(1 - s * s, 0, None) ** 0.7, atol=1e-14)
    assert np.all(u(s[s >= 0.75]) == 0)
    assert np.all(m(s[s <= 0.5]) == 0)
    assert smooth_step(0.5) == 1.0 and smooth_step(0.75) == 0.0


def test_riesz_maximal_dominates_single_means():
    f = GridField.from_radial(lambda r: np.exp(-r ** 2 / 2), n=128, extent=32.0)
    tg = TGrid(-2, 2, 4)
    res = riesz_maximal(f, 0.5, tg)
    assert res.monotone_flag
    for t in tg.nodes[::5]:
        single = np.abs(bochner_riesz(f, 0.5, t).values)
        assert np.all(res.field.values.real >= single - 1e-12)
    with pytest.raises(ValueError):
        riesz_maximal(f, -1.0)


def test_m_maximal_support_and_flag():
    f = GridField.from_radial(lambda r: np.exp(-r ** 2 / 2), n=64, extent=16.0)
    res = m_maximal(f, MultiplierSpec.bump(0.5, 2.0), TGrid(-2, 2, 4))
    assert res.monotone_flag
    assert res.refinement_gain >= 0
    with pytest.raises(ValueError):
        m_maximal(f, MultiplierSpec.bump(0.2, 2.0))

import numpy as np
import pytest

from rieszlab.grids import GridField
from rieszlab.maximal import uncentered_maximal
from rieszlab.whitney import (DyadicCube, decompose, level_sets, littlewood_paley,
                              peetre_square, phi_hat, random_bandlimited, whitney)
from rieszlab.whitney import overlap_multiplicity, owner_map


@pytest.fixture(scope="module")
def dec():
    return decompose(random_bandlimited(3, n=2 ** 14, extent=2048.0))


def test_phi_hat_support():
    u = np.array([0.19, 0.2, 0.21, 1.0, 4.9, 5.0, 6.0])
    v = phi_hat(u)
    assert v[0] == v[1] == 0 and v[-1] == v[-2] == 0
    assert np.all(v[2:5] > 0)


def test_littlewood_paley_pieces():
    f = random_bandlimited(1, n=2 ** 12, extent=512.0)
    _, parts = peetre_square(f, return_parts=True)
    k = next(iter(parts))
    assert np.allclose(littlewood_paley(f, k), parts[k])
    # L_k f only sees the annulus 2^k (1/5, 5)
    spec = np.fft.fft(parts[k])
    rho = f.freq_radius()
    outside = (rho <= 2.0 ** k / 5) | (rho >= 2.0 ** k * 5)
    assert np.max(np.abs(spec[outside])) < 1e-9 * np.max(np.abs(spec))


def test_dyadic_cube_cells():
    c = DyadicCube(3, (8,))
    assert c.side == 8
    assert c.cells(64)[0].tolist() == list(range(8, 16))
    # the box is periodic
    assert DyadicCube(2, (62,)).cells(64)[0].tolist() == [62, 63, 0, 1]


def test_whitney_whole_box():
    assert whitney(np.ones(64, dtype=bool)) == [DyadicCube(6, (0,))]


def test_level_sets_nesting(dec):
    ls = dec.levels
    for n in ls.n_values:
        assert not np.any(ls.omega[n] & ~ls.omega_star[n])
        if n + 1 in ls.omega:
            assert not np.any(ls.omega[n + 1] & ~ls.omega[n])
            assert not np.any(ls.omega_star[n + 1] & ~ls.omega_star[n])


def test_omega_star_is_maximal_superlevel(dec):
    ls = dec.levels
    for n in ls.n_values:
        om = ls.omega[n]
        if om.mean() <= ls.threshold:
            want = uncentered_maximal(om.astype(float)) > ls.threshold
            assert np.array_equal(ls.omega_star[n], want)


def test_whitney_cubes_disjoint_and_inside(dec):
    n_cells = dec.field.n
    for n, cubes in dec.cubes.items():
        lab = owner_map(cubes, n_cells, 1)
        cover = sum((c.side for c in cubes), 0)
        assert cover == np.count_nonzero(lab >= 0)          # disjoint
        assert not np.any((lab >= 0) & ~dec.levels.omega_star[n])
        if cubes:
            mult = overlap_multiplicity(cubes, n_cells, 1)
            assert mult.max() <= 12


def test_classification_unique_and_owned(dec):
    assert dec.orphans == 0
    for k in dec.k_levels:
        seen = set()
        for n in dec.levels.n_values:
            rows = {tuple(r) for r in dec.families[(n, k)]}
            assert not rows & seen
            seen |= rows


def test_atom_energy_bounds(dec):
    cv = dec.field.cell_volume
    for k, part in dec.parts.items():
        if k not in dec.k_levels:
            continue
        total = sum(v for (n, kk, w), v in dec.atom_l2_sq.items() if kk == k)
        assert total <= np.sum(np.abs(part) ** 2) * cv * (1 + 1e-12)
    for n, e, meas, ratio, star in dec.report():
        assert ratio <= 16.0
        assert star >= 1.0


def test_atoms_have_disjoint_supports(dec):
    n0 = dec.levels.n_values
    k = next(k for k in dec.k_levels if any(dec.families[(n, k)].size for n in n0))
    support = np.zeros(dec.field.values.shape, dtype=int)
    for (n, kk, w) in dec.atom_l2_sq:
        if kk == k:
            support += dec.atom(n, k, w) != 0
    assert support.max() <= 1


def test_translation_by_coarse_cube(dec):
    f = dec.field
    side = 2 ** max(dec.k_levels.values())
    g = f.with_values(np.roll(f.values, side))
    other = decompose(g)
    for n in dec.levels.n_values:
        assert np.array_equal(np.roll(dec.levels.omega_star[n], side), other.levels.omega_star[n])
    assert [r[1] for r in dec.report()] == pytest.approx([r[1] for r in other.report()],
                                                         rel=1e-9)


def test_write_csv(dec, tmp_path):
    paths = dec.write_csv(tmp_path)
    assert paths
    head = open(paths[0]).readline().strip()
    assert head == "k,W.level,W.corner0,atom_l2_sq"


def test_empty_input():
    ls = level_sets(GridField(np.zeros(64), 8.0))
    assert ls.n_values == []

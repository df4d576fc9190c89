"""Atomic decomposition machinery on a periodic dyadic grid.

The box holds ``n = 2^K`` cells of side ``h = 2^-K0`` per axis.  A dyadic
cube of level ``ell`` spans ``2^ell`` cells along every axis and has its
corner on a multiple of ``2^ell``; its real side length is ``2^ell h``,
so a cube of side ``2^-k`` has level ``K0 - k``.

Pipeline::

    S  = peetre_square(f)                     # Peetre maximal square function
    ls = level_sets(S)                        # Omega_n, Omega_n^*
    dec = decompose(f)                        # Whitney cubes, Q^n_-k, atoms
    dec.report()                              # sum ||a||^2 / (2^2n |Omega_n|)

All set relations are checked as exact statements about cell sets.
"""
import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.ndimage import maximum_filter, maximum_filter1d

from .grids import GridField
from .maximal import maximal_superlevel

__all__ = ["DyadicCube", "LevelSets", "WhitneyDecomposition", "phi_hat",
           "littlewood_paley", "peetre_square", "level_sets", "whitney",
           "classify_cubes", "build_atoms", "decompose", "random_bandlimited",
           "cube_grid", "WHITNEY_DILATE", "OVERLAP_DILATE"]

WHITNEY_DILATE = 50
OVERLAP_DILATE = 10


class DyadicCube(NamedTuple):
    level: int
    corner: tuple

    @property
    def side(self):
        return 2 ** self.level

    def cells(self, n):
        """Index arrays (open mesh) of the cells of the cube."""
        rng = [np.arange(c, c + self.side) % n for c in self.corner]
        return np.ix_(*rng)

    def dilate_slices(self, factor, n):
        """Cells meeting the ``factor``-fold dilate (same centre)."""
        half = 0.5 * factor * self.side
        out = []
        for c in self.corner:
            centre = c + 0.5 * self.side
            lo, hi = math.floor(centre - half), math.ceil(centre + half)
            if hi - lo >= n:
                out.append(np.arange(n))
            else:
                out.append(np.arange(lo, hi) % n)
        return np.ix_(*out)


def cube_grid(n):
    """Check that ``n`` is a power of two and return ``K``."""
    k = int(round(math.log2(n)))
    if 2 ** k != n:
        raise ValueError("the box must have 2^K cells per axis")
    return k


def _scale_exponent(f):
    k0 = -math.log2(f.spacing)
    if abs(k0 - round(k0)) > 1e-12:
        raise ValueError("cell side must be a power of two")
    return int(round(k0))


# ------------------------------------------------------------ Peetre square function

def phi_hat(u):
    """Radial ``phi^(u)`` supported in ``1/5 < u < 5``, a smooth bump in ``log u``."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        x = np.log(u) / math.log(5.0)
    inside = np.abs(x) < 1
    xs = np.where(inside, x, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - xs * xs)), 0.0)


def default_k_range(f):
    """Levels whose annulus ``2^k (1/5, 5)`` lies inside the grid's frequency band."""
    k0 = _scale_exponent(f)
    lo = math.ceil(math.log2(5 * 2 * math.pi / f.extent))
    hi = min(k0, math.floor(math.log2(math.pi / f.spacing / 5)))
    return range(lo, hi + 1)


def littlewood_paley(f, k, spec=None):
    """``L_k f = phi_k * f`` with ``phi_k^(xi) = phi^(2^-k |xi|)``."""
    if spec is None:
        spec = np.fft.fftn(f.values)
    out = np.fft.ifftn(spec * phi_hat(f.freq_radius() / 2.0 ** k))
    return out.real if not np.any(f.values.imag) else out


def _check_k_range(f, k_range):
    ok = set(default_k_range(f))
    ks = [k for k in k_range if k in ok]
    if len(ks) < len(list(k_range)):
        warnings.warn("k_range exceeds the grid resolution; truncated", RuntimeWarning,
                      stacklevel=3)
    if not ks:
        raise ValueError("no admissible k")
    return ks


def peetre_square(f, k_range=None, return_parts=False):
    """``(sum_k sup_{|y| <= 100 d 2^-k} |L_k f(x + y)|^2)^(1/2)`` on the grid.

    The sup runs over grid points in the closed ball (periodic).  With
    ``return_parts`` the ``L_k f`` arrays are returned as well (dict by k).
    """
    ks = _check_k_range(f, k_range if k_range is not None else default_k_range(f))
    acc = np.zeros(f.values.shape)
    parts = {}
    spec = np.fft.fftn(f.values)
    for k in ks:
        lk = littlewood_paley(f, k, spec)
        parts[k] = lk
        rad = 100 * f.dim * 2.0 ** -k / f.spacing
        a = np.abs(lk)
        if 2 * rad >= f.n:
            sup = np.full(a.shape, a.max())
        else:
            r = int(math.floor(rad))
            if f.dim == 1:
                sup = maximum_filter1d(a, size=2 * r + 1, mode="wrap")
            else:
                off = np.arange(-r, r + 1)
                foot = off[:, None] ** 2 + off[None, :] ** 2 <= rad * rad
                sup = maximum_filter(a, footprint=foot, mode="wrap")
        acc += sup * sup
    out = f.with_values(np.sqrt(acc))
    return (out, parts) if return_parts else out


# ------------------------------------------------------------ level sets

@dataclass
class LevelSets:
    n_values: list
    omega: dict
    omega_star: dict
    threshold: float

    def measure(self, n, cell_volume, star=False):
        s = self.omega_star if star else self.omega
        return float(s[n].sum()) * cell_volume


def level_sets(sq, n_range=None):
    """``Omega_n = {S > 2^n}`` and ``Omega_n^* = {M chi_Omega_n > 100^-d}``.

    ``M`` is the uncentred cube maximal function.  The default range runs
    from the largest ``n`` with ``Omega_n`` the whole box up to the largest
    ``n`` with ``Omega_n`` nonempty.
    """
    v = np.abs(sq.values)
    if np.any(v < 0):
        raise ValueError("square function must be nonnegative")
    top = v.max()
    if top == 0:
        return LevelSets([], {}, {}, 100.0 ** -sq.dim)
    if n_range is None:
        hi = math.ceil(math.log2(top)) - 1
        lo = hi - 40
        if v.min() > 0:
            lo = max(lo, math.floor(math.log2(v.min())))
        n_range = range(lo, hi + 1)
    thr = 100.0 ** -sq.dim
    omega, star = {}, {}
    for n in n_range:
        om = v > 2.0 ** n
        omega[n] = om
        if om.mean() > thr:
            # the whole box is an admissible cube
            star[n] = np.ones_like(om)
        else:
            star[n] = maximal_superlevel(om, thr)
    return LevelSets(list(n_range), omega, star, thr)


# ------------------------------------------------------------ Whitney cubes

def _dilate_clear(bad, level, factor):
    """For every level-``level`` dyadic cube: does its dilate avoid ``bad``?"""
    n = bad.shape[0]
    side = 2 ** level
    half = 0.5 * factor * side
    starts = np.arange(0, n, side)
    lo = np.floor(starts + 0.5 * side - half).astype(int)
    length = int(np.ceil(starts[0] + 0.5 * side + half)) - lo[0]
    if length >= n:
        clear = not bad.any()
        return np.full((starts.size,) * bad.ndim, clear)
    s = bad.astype(float)
    for ax in range(bad.ndim):
        ext = np.concatenate([s, np.take(s, np.arange(length), axis=ax)], axis=ax)
        cs = np.cumsum(ext, axis=ax)
        cs = np.concatenate([np.zeros_like(np.take(cs, [0], axis=ax)), cs], axis=ax)
        idx = lo % n
        s = np.take(cs, idx + length, axis=ax) - np.take(cs, idx, axis=ax)
    return s == 0


def whitney(omega_star, factor=WHITNEY_DILATE):
    """Maximal dyadic cubes whose ``factor``-fold dilates lie in ``omega_star``.

    The property passes from a cube to its children, so the maximal cubes
    are those with the property whose parent lacks it (the box itself has
    no parent).
    """
    om = np.asarray(omega_star, dtype=bool)
    n = om.shape[0]
    kmax = cube_grid(n)
    if om.all():
        return [DyadicCube(kmax, (0,) * om.ndim)]
    bad = ~om
    cubes = []
    parent_ok = None
    for level in range(kmax, -1, -1):
        ok = _dilate_clear(bad, level, factor)
        if parent_ok is None:
            new = ok
        else:
            up = parent_ok
            for ax in range(om.ndim):
                up = np.repeat(up, 2, axis=ax)
            new = ok & ~up
        for idx in zip(*np.nonzero(new)):
            cubes.append(DyadicCube(level, tuple(int(i) * 2 ** level for i in idx)))
        parent_ok = ok
    return cubes


def owner_map(cubes, n, dim):
    """Cell -> index of the cube covering it (-1 if none)."""
    lab = np.full((n,) * dim, -1, dtype=np.int64)
    for i, c in enumerate(cubes):
        lab[c.cells(n)] = i
    return lab


def overlap_multiplicity(cubes, n, dim, factor=OVERLAP_DILATE):
    """Pointwise count of the ``factor``-fold dilates covering each cell."""
    cnt = np.zeros((n,) * dim, dtype=np.int64)
    for c in cubes:
        cnt[c.dilate_slices(factor, n)] += 1
    return cnt


# ------------------------------------------------------------ classification

def _blocks(a, level, reduce):
    """Apply ``reduce`` over every level-``level`` dyadic cube of ``a``."""
    n = a.shape[0]
    side = 2 ** level
    m = n // side
    if a.ndim == 1:
        return reduce(a.reshape(m, side), axis=1)
    return reduce(a.reshape(m, side, m, side), axis=(1, 3))


def classify_cubes(levels, k_levels):
    """``Q^n_-k``: cubes of level ``ell`` with ``|Q cap Omega_n| >= |Q|/2 > |Q cap Omega_n+1|``.

    ``k_levels`` maps ``k`` to the cube level ``ell``.  Returns a dict
    ``(n, k) -> int array`` of cube indices (corner / side), one row per cube.
    """
    out = {}
    ns = levels.n_values
    for k, ell in k_levels.items():
        fr = {n: _blocks(levels.omega[n], ell, np.mean) for n in ns}
        for n in ns:
            upper = fr[n + 1] if n + 1 in fr else np.zeros_like(fr[n])
            sel = (fr[n] >= 0.5) & (upper < 0.5)
            out[(n, k)] = np.argwhere(sel)
    return out


# ------------------------------------------------------------ atoms

@dataclass
class WhitneyDecomposition:
    field: GridField
    levels: LevelSets
    cubes: dict                      # n -> list of Whitney cubes
    families: dict                   # (n, k) -> cube indices of Q^n_-k
    parts: dict                      # k -> L_k f
    k_levels: dict                   # k -> cube level
    owners: dict = field(default_factory=dict)       # (n, k) -> Whitney index per Q
    atom_l2_sq: dict = field(default_factory=dict)   # (n, k, w) -> ||a||^2
    orphans: int = 0                 # Q outside every Whitney cube

    def family_cubes(self, n, k):
        ell = self.k_levels[k]
        return [DyadicCube(ell, tuple(int(i) * 2 ** ell for i in row))
                for row in self.families[(n, k)]]

    def atom(self, n, k, w):
        """Sampled ``a_{k,W,n}``."""
        out = np.zeros(self.field.values.shape, dtype=self.parts[k].dtype)
        own = self.owners[(n, k)]
        for q, o in zip(self.family_cubes(n, k), own):
            if o == w:
                sl = q.cells(self.field.n)
                out[sl] = self.parts[k][sl]
        return out

    def energy(self, n):
        return sum(v for (m, _, _), v in self.atom_l2_sq.items() if m == n)

    def report(self):
        """Rows ``(n, sum ||a||^2, |Omega_n|, ratio, |Omega_n^*| / |Omega_n|)``."""
        rows = []
        cv = self.field.cell_volume
        for n in self.levels.n_values:
            meas = self.levels.measure(n, cv)
            if meas == 0:
                continue
            e = self.energy(n)
            star = self.levels.measure(n, cv, star=True)
            rows.append((n, e, meas, e / (4.0 ** n * meas), star / meas))
        return rows

    def write_csv(self, directory, prefix="atoms"):
        """One CSV per ``n`` with columns ``k, W.level, W.corner..., atom_l2_sq``."""
        import os
        paths = []
        dim = self.field.dim
        for n in self.levels.n_values:
            keys = sorted(key for key in self.atom_l2_sq if key[0] == n)
            if not keys:
                continue
            path = os.path.join(directory, f"{prefix}_n{n}.csv")
            with open(path, "w", newline="") as fh:
                wr = csv.writer(fh, lineterminator="\n")
                wr.writerow(["k", "W.level"] + [f"W.corner{i}" for i in range(dim)]
                            + ["atom_l2_sq"])
                for (_, k, w) in keys:
                    cube = self.cubes[n][w]
                    wr.writerow([k, cube.level, *cube.corner, repr(self.atom_l2_sq[(n, k, w)])])
            paths.append(path)
        return paths


def build_atoms(dec):
    """Assign each ``Q in Q^n_-k`` to the Whitney cube containing it and
    record ``||a_{k,W,n}||_2^2``.

    A cube of ``Q^n_-k`` that meets no Whitney cube, or meets several, is
    counted in ``dec.orphans`` and left out of the atoms.
    """
    f = dec.field
    cv = f.cell_volume
    dec.owners.clear()
    dec.atom_l2_sq.clear()
    dec.orphans = 0
    energies = {}
    for n in dec.levels.n_values:
        lab = owner_map(dec.cubes[n], f.n, f.dim)
        extremes = {}
        for k, ell in dec.k_levels.items():
            idx = dec.families[(n, k)]
            if idx.size == 0:
                dec.owners[(n, k)] = np.empty(0, dtype=np.int64)
                continue
            if ell not in extremes:
                extremes[ell] = (_blocks(lab, ell, np.min), _blocks(lab, ell, np.max))
            if k not in energies:
                energies[k] = _blocks(np.abs(dec.parts[k]) ** 2, ell, np.sum) * cv
            lo = extremes[ell][0][tuple(idx.T)]
            hi = extremes[ell][1][tuple(idx.T)]
            good = (lo == hi) & (lo >= 0)
            own = np.where(good, lo, -1)
            dec.orphans += int(np.sum(~good))
            dec.owners[(n, k)] = own
            e = energies[k][tuple(idx.T)]
            if np.any(good):
                sums = np.bincount(own[good], weights=e[good])
                for w in np.nonzero(np.bincount(own[good]))[0]:
                    dec.atom_l2_sq[(n, k, int(w))] = float(sums[w])
    return dec


def decompose(f, k_range=None, n_range=None):
    """Run the full pipeline on ``f``."""
    k0 = _scale_exponent(f)
    kmax = cube_grid(f.n)
    sq, parts = peetre_square(f, k_range, return_parts=True)
    levels = level_sets(sq, n_range)
    cubes = {n: whitney(levels.omega_star[n]) for n in levels.n_values}
    k_levels = {k: k0 - k for k in parts if 0 <= k0 - k <= kmax}
    families = classify_cubes(levels, k_levels)
    dec = WhitneyDecomposition(f, levels, cubes, families, parts, k_levels)
    return build_atoms(dec)


def random_bandlimited(seed, dim=1, n=2 ** 19, extent=65536.0, band=(1.0, 1.5), packets=3,
                       width=4.0):
    """Seeded real test input: wave packets projected onto ``band[0] <= |xi| <= band[1]``."""
    rng = np.random.default_rng(seed)
    proto = GridField(np.zeros((n,) * dim), extent)
    coords = proto.coords()
    vals = np.zeros(proto.values.shape)
    for _ in range(packets):
        c = rng.uniform(-0.35, 0.35, dim) * extent
        amp = rng.uniform(0.5, 2.0)
        r2 = sum((x - ci) ** 2 for x, ci in zip(coords, c))
        vals += amp * np.exp(-r2 / (2 * width ** 2)) * rng.standard_normal(vals.shape)
    spec = np.fft.fftn(vals)
    rho = proto.freq_radius()
    spec[(rho < band[0]) | (rho > band[1])] = 0
    out = np.fft.ifftn(spec).real
    return GridField(out / np.abs(out).max(), extent)

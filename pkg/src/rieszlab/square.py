"""Stein's square functions ``G_alpha`` and ``script G_beta``.

``G_alpha f = (int_0^inf |K_t^alpha * f|^2 dt/t)^(1/2)`` with
``K_t^alpha^(xi) = alpha |xi/t|^2 (1 - |xi/t|^2)_+^(alpha-1)``, and
``script G_beta f = (int_0^inf |d/dt A^beta_t f|^2 t dt)^(1/2)``.

Both integrals are discretised on a :class:`~rieszlab.grids.TGrid`; the
``t dt`` measure of ``script G_beta`` becomes the weight ``t_i^2 w_i``.

For ``G_alpha`` two schemes are available.  ``"node"`` evaluates the symbol
at the quadrature nodes.  ``"cell"`` (the default) replaces it by its root
mean square over the ``dt/t`` cell of each node, which integrates the edge
singularity at ``t = |xi|`` exactly; point evaluation misses a sizeable
part of it when ``alpha < 1``.

Inputs are GridFields (FFT engine) or radial profiles (Bessel engine).  The
radial engine integrates over continuous ``|xi|`` and is the one to use for
pointwise comparisons: on a periodic grid the kernel of ``K_t^alpha`` picks
up a jump whenever ``t`` crosses a lattice radius.
"""
import math
from typing import NamedTuple, Union

import numpy as np
from scipy.integrate import trapezoid

from .grids import GridField, RadialProfile, TGrid
from .multipliers import (k_alpha_cell_symbol, k_alpha_energy, k_alpha_l2_constant,
                          k_alpha_symbol, spherical_mean_dt_symbol)
from .transforms import RadialMultiplierPlan

__all__ = ["SquareFunctionResult", "EquivalenceResult", "g_alpha",
           "g_beta_spherical", "equivalence_probe", "DEFAULT_RADII"]

COVERAGE_TOL = 1e-3
DEFAULT_RADII = np.geomspace(0.1, 40.0, 300)


class SquareFunctionResult(NamedTuple):
    field: Union[GridField, RadialProfile]
    tgrid: TGrid
    convergence_flag: bool
    coverage: float


class EquivalenceResult(NamedTuple):
    ratio_min: float
    ratio_max: float
    ratio: np.ndarray
    mask: np.ndarray

    @property
    def spread(self):
        return self.ratio_max / self.ratio_min


def _dim(f):
    if isinstance(f, GridField):
        return f.dim
    if isinstance(f, RadialProfile):
        return f.d
    raise TypeError("square functions act on GridField or RadialProfile inputs")


def _half_radius(f):
    """|xi| on the real-FFT (half-spectrum) layout."""
    last = 2 * math.pi * np.fft.rfftfreq(f.n, d=f.spacing)
    if f.dim == 1:
        return last
    first = 2 * math.pi * np.fft.fftfreq(f.n, d=f.spacing)
    return np.sqrt(first[:, None] ** 2 + last[None, :] ** 2)


def _grid_square_sum(f, symbols, weights):
    """``(sum_i w_i |T_{m_i} f|^2)^(1/2)`` for real radial symbols ``m_i``."""
    real = not np.any(f.values.imag)
    if real:
        spec = np.fft.rfftn(f.values.real)
        rho_full = _half_radius(f)
        back = lambda z: np.fft.irfftn(z, s=f.values.shape, axes=tuple(range(f.dim)))
    else:
        spec = np.fft.fftn(f.values)
        rho_full = f.freq_radius()
        back = np.fft.ifftn
    # radial symbols only need the distinct values of |xi|
    rho, inv = np.unique(rho_full, return_inverse=True)
    inv = inv.reshape(rho_full.shape)
    acc = np.zeros(f.values.shape)
    for m, w in zip(symbols, weights):
        part = back(spec * m(rho)[inv])
        acc += w * (part * part if real else part.real ** 2 + part.imag ** 2)
    return f.with_values(np.sqrt(acc))


def _spectral_weights(f, radii, breakpoints):
    """``(|xi| samples, energy weights, plan)``: Parseval data of ``f``."""
    if isinstance(f, GridField):
        return f.freq_radius().ravel(), np.abs(np.fft.fftn(f.values)).ravel() ** 2, None
    plan = RadialMultiplierPlan(f, radii, breakpoints)
    w = plan.weights * plan.rho ** (f.d - 1) * np.abs(plan.fhat) ** 2
    return plan.rho, w, plan


def _square_sum(f, plan, symbols, weights):
    if plan is None:
        return _grid_square_sum(f, symbols, weights)
    parts = plan.apply_many(symbols)
    vals = np.sqrt(np.einsum("i,ij->j", weights, np.abs(parts) ** 2))
    return RadialProfile(f.d, plan.radii, vals)


def g_alpha(f, alpha, tgrid=None, scheme="cell", radii=None):
    """Square function ``G_alpha f``.

    Parameters
    ----------
    f : GridField or RadialProfile
    alpha : float
        Must exceed 1/2.
    tgrid : TGrid, optional
        Defaults to blocks ``k = -6..6`` with 16 nodes each.
    scheme : {"cell", "node"}
        How the symbol is sampled in ``t`` (see module docstring).
    radii : array_like, optional
        Output radii for radial inputs (default ``DEFAULT_RADII``).

    Returns
    -------
    SquareFunctionResult
        ``convergence_flag`` is False when the ``t``-range misses more than
        ``COVERAGE_TOL`` of ``||G_alpha f||_2^2``; ``coverage`` is the
        captured fraction.
    """
    _dim(f)
    if alpha <= 0.5:
        raise ValueError("G_alpha needs alpha > 1/2")
    tgrid = tgrid or TGrid()
    lo, hi = tgrid.cell_edges()
    if scheme == "cell":
        symbols = [k_alpha_cell_symbol(alpha, a, b) for a, b in zip(lo, hi)]
        breaks = np.union1d(lo, hi)
    elif scheme == "node":
        cell = 2 * math.pi / f.extent if isinstance(f, GridField) else None
        symbols = [k_alpha_symbol(alpha, t, cell) for t in tgrid.nodes]
        breaks = tgrid.nodes
    else:
        raise ValueError("scheme must be 'cell' or 'node'")
    rho, energy, plan = _spectral_weights(f, DEFAULT_RADII if radii is None else radii, breaks)
    out = _square_sum(f, plan, symbols, tgrid.weights)
    # the covered share of int |K_t^(rho)|^2 dt/t is E(rho/t_min) - E(rho/t_max)
    got = k_alpha_energy(alpha, rho / tgrid.t_min) - k_alpha_energy(alpha, rho / tgrid.t_max)
    full = np.where(rho > 0, k_alpha_l2_constant(alpha), 0.0)
    total = float(np.sum(energy * full))
    cov = float(np.sum(energy * got)) / total if total > 0 else 1.0
    return SquareFunctionResult(out, tgrid, cov >= 1 - COVERAGE_TOL, cov)


def g_beta_spherical(f, beta, tgrid=None, radii=None):
    """Square function ``(int |d/dt A^beta_t f|^2 t dt)^(1/2)``.

    ``d/dt`` is taken analytically through
    ``d/dt script_j_beta(t rho) = -t rho^2 script_j_{beta+1}(t rho)``.
    The integrand is smooth in ``t``, so ``convergence_flag`` checks the
    ``t``-range: the two end blocks must carry less than ``COVERAGE_TOL``
    of the squared ``L^2`` mass.
    """
    d = _dim(f)
    if (d - 2) / 2 + beta + 1 < 0:
        raise ValueError("need (d-2)/2 + beta + 1 >= 0")
    tgrid = tgrid or TGrid()
    plan = None
    if isinstance(f, RadialProfile):
        plan = RadialMultiplierPlan(f, DEFAULT_RADII if radii is None else radii)
    symbols = [spherical_mean_dt_symbol(d, beta, t) for t in tgrid.nodes]
    weights = tgrid.weights * tgrid.nodes ** 2
    out = _square_sum(f, plan, symbols, weights)
    nb = tgrid.nodes_per_block
    ends = np.r_[np.arange(nb), np.arange(len(tgrid) - nb, len(tgrid))]
    edge = _square_sum(f, plan, [symbols[i] for i in ends], weights[ends])
    if plan is None:
        num = np.sum(np.abs(edge.values) ** 2)
        den = np.sum(np.abs(out.values) ** 2)
    else:
        r = plan.radii
        num = trapezoid(np.abs(edge.values) ** 2 * r ** (d - 1), r)
        den = trapezoid(np.abs(out.values) ** 2 * r ** (d - 1), r)
    frac = float(num / den) if den > 0 else 0.0
    return SquareFunctionResult(out, tgrid, frac < COVERAGE_TOL, 1 - frac)


def equivalence_probe(f, alpha, floor=1e-2, tgrid=None, scheme="cell", radii=None):
    """Ratio ``G_alpha f / script G_beta f`` with ``beta = alpha - (d-2)/2``.

    Only points where both square functions exceed ``floor`` times their
    global maxima are admitted.  Returns the extremes and the ratio field
    (NaN outside the admissible region).
    """
    d = _dim(f)
    tgrid = tgrid or TGrid()
    beta = alpha - (d - 2) / 2
    g1 = np.abs(g_alpha(f, alpha, tgrid, scheme, radii).field.values)
    g2 = np.abs(g_beta_spherical(f, beta, tgrid, radii).field.values)
    mask = (g1 >= floor * g1.max()) & (g2 >= floor * g2.max()) & (g2 > 0)
    if not np.any(mask):
        raise ValueError("empty admissible region")
    ratio = np.full(g1.shape, np.nan)
    ratio[mask] = g1[mask] / g2[mask]
    return EquivalenceResult(float(np.nanmin(ratio)), float(np.nanmax(ratio)), ratio, mask)

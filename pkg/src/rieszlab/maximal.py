"""Maximal functions on periodic grids.

* :func:`hl_maximal` - centred Hardy-Littlewood maximal function over
  discrete balls,
* :func:`m_maximal` - ``sup_t |T_{m(t.)} f|`` over the nodes of a TGrid,
* :func:`riesz_maximal` - the Bochner-Riesz maximal function, evaluated
  through the split ``(1-s^2)_+^lambda = u_lambda(s) + m_lambda(s)`` with
  ``u_lambda`` smooth and supported in ``[0, 3/4]`` and ``m_lambda``
  supported in ``[1/2, 1]``.

Suprema over ``t`` are taken over finitely many nodes.  Each result carries
a refinement certificate: the same supremum over the union of the nodes and
those of the refined grid, which can only be larger.
"""
import math
from typing import NamedTuple

import numpy as np
from scipy.ndimage import maximum_filter1d

from .grids import GridField, TGrid
from .transforms import MultiplierSpec

__all__ = ["MaximalResult", "hl_maximal", "uncentered_maximal", "maximal_superlevel", "m_maximal",
           "riesz_maximal", "smooth_step", "riesz_split"]


class MaximalResult(NamedTuple):
    field: GridField
    tgrid: TGrid
    monotone_flag: bool
    refinement_gain: float


# ------------------------------------------------------------ Hardy-Littlewood

def _ball_radii(f, radii):
    """Radii in cell units."""
    half = f.n // 2
    if radii == "dyadic":
        return [2 ** k for k in range(int(math.log2(half)) + 1)]
    if radii == "all":
        return list(range(1, half + 1))
    out = sorted({int(r) for r in radii})
    if not out or out[0] < 1 or out[-1] > half:
        raise ValueError("radii must lie between 1 and n/2 cells")
    return out


def hl_maximal(f, radii="dyadic"):
    """Centred maximal function ``sup_r |B_r|^-1 sum_{B_r(x)} |f|``.

    Balls are the grid cells within ``r`` cells of the centre (periodic
    wraparound), including the radius-0 ball (the cell itself).

    Parameters
    ----------
    f : GridField
    radii : "dyadic", "all" or sequence of int
        Ball radii in cell units: powers of two up to ``n/2`` (the default),
        every integer up to ``n/2``, or an explicit list.
    """
    a = np.abs(f.values)
    best = a.copy()
    rs = _ball_radii(f, radii)
    if f.dim == 1:
        n = f.n
        ext = np.concatenate([a, a, a])
        csum = np.concatenate([[0.0], np.cumsum(ext)])
        idx = np.arange(n) + n
        for r in rs:
            # cells idx-r .. idx+r, capped at the whole circle
            k = min(r, (n - 1) // 2)
            avg = (csum[idx + k + 1] - csum[idx - k]) / (2 * k + 1)
            np.maximum(best, avg, out=best)
        return f.with_values(best)
    spec = np.fft.rfft2(a)
    off = np.fft.fftfreq(f.n, d=1.0 / f.n)
    dist2 = off[:, None] ** 2 + off[None, :] ** 2
    for r in rs:
        ball = (dist2 <= r * r).astype(float)
        ball /= ball.sum()
        avg = np.fft.irfft2(spec * np.fft.rfft2(ball), s=a.shape)
        np.maximum(best, avg, out=best)
    return f.with_values(best)


def _window_sum(a, length, axis):
    """Periodic sums of ``length`` consecutive cells starting at each index."""
    n = a.shape[axis]
    ext = np.concatenate([a, np.take(a, np.arange(length), axis=axis)], axis=axis)
    cs = np.cumsum(ext, axis=axis)
    cs = np.concatenate([np.zeros_like(np.take(cs, [0], axis=axis)), cs], axis=axis)
    hi = np.take(cs, np.arange(length, length + n), axis=axis)
    lo = np.take(cs, np.arange(n), axis=axis)
    return hi - lo


def uncentered_maximal(values, ratio=1.25):
    """Uncentred cube maximal function of cell data on a periodic box.

    ``sup |Q|^-1 sum_Q |a|`` over grid cubes ``Q`` containing the cell,
    with side lengths ``ceil(ratio^i)`` cells up to the box.  Any cube of
    side ``s`` containing the cell sits inside an admissible one of side at
    most ``ratio * s + 1``.
    """
    a = np.abs(np.asarray(values, dtype=float))
    n = a.shape[0]
    best = a.copy()
    for ell in _cube_sides(n, ratio):
        s = a
        for ax in range(a.ndim):
            s = _window_sum(s, ell, ax)
        s = s / float(ell) ** a.ndim
        # cubes containing x start at x - ell + 1 .. x along each axis
        for ax in range(a.ndim):
            s = maximum_filter1d(s, size=ell, axis=ax, mode="wrap")
            s = np.roll(s, ell - 1 - ell // 2, axis=ax)
        np.maximum(best, s, out=best)
    return best


def _cube_sides(n, ratio):
    return np.unique(np.minimum(np.ceil(ratio ** np.arange(200)), n).astype(int))


def maximal_superlevel(values, threshold, ratio=1.25):
    """``{uncentered_maximal(values, ratio) > threshold}`` without forming ``M``.

    Every admissible cube whose average exceeds ``threshold`` is marked in
    a difference array; one cumulative sum then gives the union.
    """
    a = np.abs(np.asarray(values, dtype=float))
    n, dim = a.shape[0], a.ndim
    big = np.pad(a, [(0, n)] * dim, mode="wrap")
    sat = np.zeros(tuple(s + 1 for s in big.shape))
    sat[(slice(1, None),) * dim] = big
    for ax in range(dim):
        np.cumsum(sat, axis=ax, out=sat)
    mark = np.zeros(tuple(2 * n + 1 for _ in range(dim)))
    for ell in _cube_sides(n, ratio):
        if dim == 1:
            tot = sat[ell:ell + n] - sat[:n]
            good = (tot > threshold * ell).astype(float)
            mark[:n] += good
            mark[ell:ell + n] -= good
        else:
            tot = (sat[ell:ell + n, ell:ell + n] - sat[:n, ell:ell + n]
                   - sat[ell:ell + n, :n] + sat[:n, :n])
            good = (tot > threshold * ell * ell).astype(float)
            mark[:n, :n] += good
            mark[ell:ell + n, :n] -= good
            mark[:n, ell:ell + n] -= good
            mark[ell:ell + n, ell:ell + n] += good
    for ax in range(dim):
        np.cumsum(mark, axis=ax, out=mark)
    cover = mark[(slice(0, 2 * n),) * dim] > 0.5
    # fold the doubled box back onto the torus
    folded = cover[:n] | cover[n:]
    if dim == 2:
        folded = folded[:, :n] | folded[:, n:]
    return folded | (a > threshold)


# ------------------------------------------------------------ M_m

def _sup_over(f, symbols):
    axes = tuple(range(f.dim))
    spec = np.fft.fftn(f.values, axes=axes)
    rho, inv = np.unique(f.freq_radius(), return_inverse=True)
    inv = inv.reshape(spec.shape)
    best = np.zeros(spec.shape)
    for m in symbols:
        np.maximum(best, np.abs(np.fft.ifftn(spec * m(rho)[inv], axes=axes)), out=best)
    return best


def _certified(f, make_symbol, tgrid, refine):
    if len(tgrid) == 0:
        raise ValueError("empty tgrid")
    base = _sup_over(f, [make_symbol(t) for t in tgrid.nodes])
    gain = 0.0
    flag = True
    if refine:
        extra = np.setdiff1d(tgrid.refined().nodes, tgrid.nodes)
        fine = np.maximum(base, _sup_over(f, [make_symbol(t) for t in extra]))
        flag = bool(np.all(fine >= base))
        top = base.max()
        gain = float(np.max(fine - base) / top) if top > 0 else 0.0
    return MaximalResult(f.with_values(base), tgrid, flag, gain)


def m_maximal(f, m, tgrid=None, refine=True):
    """``sup_t |T_{m(t.)} f|`` over the nodes of ``tgrid``.

    ``m`` is a MultiplierSpec whose support must lie inside ``(1/2, 2)``.
    """
    if not isinstance(f, GridField):
        raise TypeError("m_maximal acts on GridField inputs")
    sup = getattr(m, "support", None)
    if sup is None or sup[0] < 0.5 or sup[1] > 2.0:
        raise ValueError("m must be supported in (1/2, 2)")
    tgrid = tgrid or TGrid()
    return _certified(f, lambda t: (lambda rho: m(t * rho)), tgrid, refine)


# ------------------------------------------------------------ Bochner-Riesz maximal

def smooth_step(s, lo=0.5, hi=0.75):
    """C-infinity function equal to 1 on ``[0, lo]`` and 0 on ``[hi, inf)``."""
    x = np.clip((np.asarray(s, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    a = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    b = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    return a / (a + b)


def riesz_split(lam):
    """``(u_lambda, m_lambda)`` with ``u + m = (1-s^2)_+^lambda``."""
    br = MultiplierSpec.bochner_riesz(lam)

    def u(s):
        return br(s) * smooth_step(s)

    def m(s):
        return br(s) * (1.0 - smooth_step(s))
    return (MultiplierSpec.from_callable(u, support=(0.0, 0.75), kind="u_lambda", lam=lam),
            MultiplierSpec.from_callable(m, singular=(1.0,), support=(0.5, 1.0),
                                         kind="m_lambda", lam=lam))


def riesz_maximal(f, lam, tgrid=None, refine=True):
    """``sup_t |R^lambda_t f|`` over the nodes of ``tgrid``.

    Each ``R^lambda_t f`` is assembled as ``T_{u(./t)} f + T_{m(./t)} f``.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if not isinstance(f, GridField):
        raise TypeError("riesz_maximal acts on GridField inputs")
    u, m = riesz_split(lam)
    tgrid = tgrid or TGrid()
    return _certified(f, lambda t: (lambda rho: u(rho / t) + m(rho / t)), tgrid, refine)

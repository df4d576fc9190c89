"""Bessel functions and the radial Bessel kernels.

Only the Bessel function of the first kind of real order ``nu >= 0`` is
provided.  Three evaluation regimes are used:

* ascending power series for small arguments,
* Miller's backward recurrence, normalised with the Neumann series
  ``sum_k lambda_k J_{nu0+2k}(s) = (s/2)**nu0 / Gamma(nu0+1)``, in the
  intermediate range,
* Hankel's large-argument expansion beyond ``regime_cut(nu)``.

Sums are accumulated with Neumaier's compensated summation.

The kernels follow the conventions

    script_j(d, s)           = c(d) * s**(-(d-2)/2) * J_{(d-2)/2}(s)
    script_j_alpha(d, a, s)  = s**(-nu) * J_nu(s),   nu = (d-2)/2 + a

where ``c(d)`` is fixed by requiring ``script_j(d, 0)`` to equal the surface
area of the unit sphere, so that ``r**(d-1) * script_j(d, r*|xi|)`` is the
Fourier transform of surface measure on the sphere of radius ``r`` for the
transform ``f^(xi) = int f(x) exp(-i x.xi) dx``.
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

__all__ = [
    "BesselKernelParams", "AsymptoticValue", "gamma_fn", "regime_cut",
    "bessel_j", "surface_area", "sphere_constant", "script_j",
    "script_j_alpha", "script_j_alpha_derivative", "asymptotic_coefficients",
    "bessel_asymptotic",
]

SERIES_CUT = 12.0
_EPS = 1e-17


def gamma_fn(x):
    """Gamma function for positive real arguments.

    Accepts a scalar or an array.  Raises ``ValueError`` for nonpositive
    input.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0) or np.any(~np.isfinite(arr)):
        raise ValueError(f"gamma_fn needs positive finite arguments, got {x!r}")
    if arr.ndim == 0:
        return math.gamma(float(arr))
    return np.vectorize(math.gamma, otypes=[float])(arr)


def regime_cut(nu):
    """Argument beyond which Hankel's expansion is used for ``J_nu``."""
    nu = float(nu)
    return max(SERIES_CUT, 2.0 * nu, 17.0, 0.5 * nu * nu)


@dataclass(frozen=True)
class BesselKernelParams:
    """Dimension/order pair of a radial Bessel kernel."""
    d: int
    alpha: float = 0.0
    regime_cut: float = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.nu < 0:
            raise ValueError(f"order (d-2)/2 + alpha = {self.nu} is negative")
        if self.regime_cut is None:
            object.__setattr__(self, "regime_cut", regime_cut(self.nu))
        elif self.regime_cut < max(12.0, 2.0 * self.nu):
            raise ValueError("regime_cut must be >= max(12, 2*nu)")

    @property
    def nu(self):
        return (self.d - 2) / 2.0 + self.alpha


def _neumaier_add(total, comp, term):
    t = total + term
    big = np.abs(total) >= np.abs(term)
    comp = comp + np.where(big, (total - t) + term, (term - t) + total)
    return t, comp


def _reduced_series(nu, s):
    """sum_k (-1)^k (s/2)^(2k) / (k! Gamma(nu+k+1)), i.e. (s/2)^-nu J_nu(s)."""
    s = np.asarray(s, dtype=float)
    q = 0.25 * s * s
    term = np.full_like(s, math.exp(-math.lgamma(nu + 1.0)))
    total = term.copy()
    comp = np.zeros_like(s)
    k = 0
    while True:
        k += 1
        term = term * (-q) / (k * (nu + k))
        total, comp = _neumaier_add(total, comp, term)
        if k > 2 and np.all(np.abs(term) <= _EPS * np.abs(total) + 1e-300):
            break
        if k > 500:
            break
    return total + comp


def _hankel_terms(nu, s_min):
    """Number of Hankel terms needed for arguments ``>= s_min``."""
    mu = 4.0 * nu * nu
    term, k = 1.0, 0
    while k < 200:
        k += 1
        new = term * abs(mu - (2 * k - 1) ** 2) / (8.0 * s_min * k)
        if new > term or new < _EPS:
            return k
        term = new
    return k


def _hankel_asymptotic(nu, s):
    """Hankel's expansion of J_nu(s), summed up to the smallest term.

    Arguments are processed in sorted chunks so that each chunk runs a
    fixed number of terms, set by its smallest argument.
    """
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    order = np.argsort(s)
    mu = 4.0 * nu * nu
    for chunk in np.array_split(order, max(1, s.size // 65536)):
        x = s[chunk]
        kmax = _hankel_terms(nu, float(x[0]))
        inv8s = 1.0 / (8.0 * x)
        sums = [np.ones_like(x), np.zeros_like(x)]      # P, Q
        comps = [np.zeros_like(x), np.zeros_like(x)]
        term = np.ones_like(x)
        for k in range(1, kmax + 1):
            term = term * ((mu - (2 * k - 1) ** 2) / k) * inv8s
            which = 0 if k % 2 == 0 else 1
            sign = 1.0 if k % 4 in (0, 1) else -1.0
            sums[which], comps[which] = _neumaier_add(sums[which], comps[which], sign * term)
        p = sums[0] + comps[0]
        q = sums[1] + comps[1]
        chi = x - (0.5 * nu + 0.25) * math.pi
        out[chunk] = np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))
    return out


def _miller(nu, s):
    """Backward recurrence for J_nu(s), s > 0."""
    s = np.asarray(s, dtype=float)
    m = int(math.floor(nu))
    nu0 = nu - m
    top = max(m, float(np.max(s)))
    start = 2 * ((int(top) + 16 + int(math.sqrt(60.0 * top))) // 2) + 2
    j_next = np.zeros_like(s)
    j_cur = np.full_like(s, 1e-30)
    norm = np.zeros_like(s)
    target = np.zeros_like(s)
    lam_cache = _neumann_weights(nu0, start // 2 + 1)
    for k in range(start, 0, -1):
        # j_cur holds J_{nu0+k}
        if k == m:
            target = j_cur.copy()
        if k % 2 == 0:
            norm = norm + lam_cache[k // 2] * j_cur
        j_prev = (2.0 * (nu0 + k) / s) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        big = np.abs(j_cur) > 1e200
        if np.any(big):
            scale = np.where(big, 1e-200, 1.0)
            j_cur *= scale
            j_next *= scale
            norm *= scale
            target *= scale
    # j_cur now holds J_{nu0}
    if m == 0:
        target = j_cur
    norm = norm + lam_cache[0] * j_cur
    exact = np.exp(nu0 * np.log(0.5 * s) - math.lgamma(nu0 + 1.0))
    return target * (exact / norm)


@lru_cache(maxsize=64)
def _neumann_weights_cached(nu0, n):
    lam = np.empty(n)
    lam[0] = 1.0
    for k in range(1, n):
        if nu0 == 0.0:
            lam[k] = 2.0
        else:
            lam[k] = math.exp(math.log(nu0 + 2 * k) + math.lgamma(nu0 + k)
                              - math.lgamma(k + 1.0) - math.lgamma(nu0 + 1.0))
    return lam


def _neumann_weights(nu0, n):
    return _neumann_weights_cached(round(float(nu0), 15), int(n))


def bessel_j(nu, s):
    """Bessel function of the first kind ``J_nu(s)`` for ``nu >= 0``, ``s >= 0``.

    Parameters
    ----------
    nu : float
        Order, nonnegative.
    s : float or array_like
        Nonnegative arguments.

    Returns
    -------
    float or ndarray
        Same shape as ``s``.
    """
    nu = float(nu)
    if nu < 0:
        raise ValueError(f"bessel_j needs nu >= 0, got {nu}")
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0):
        raise ValueError("bessel_j needs nonnegative arguments")
    flat = arr.ravel()
    out = np.empty_like(flat)
    cut = regime_cut(nu)
    small = flat <= SERIES_CUT
    large = flat >= cut
    mid = ~(small | large)
    if np.any(small):
        x = flat[small]
        out[small] = np.power(0.5 * x, nu) * _reduced_series(nu, x)
    if np.any(large):
        out[large] = _hankel_asymptotic(nu, flat[large])
    if np.any(mid):
        x = flat[mid]
        # group arguments so the recurrence length tracks the local maximum
        order = np.argsort(x)
        res = np.empty_like(x)
        for chunk in np.array_split(order, max(1, int(np.ptp(x) // 64) + 1)):
            if chunk.size:
                res[chunk] = _miller(nu, x[chunk])
        out[mid] = res
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def surface_area(d):
    """Surface area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@lru_cache(maxsize=None)
def sphere_constant(d):
    """The constant c(d) in script_j, fixed by matching at the origin.

    ``script_j(d, 0)`` must equal the surface area of S^{d-1}; since
    ``s**-nu J_nu(s) -> 2**-nu / Gamma(nu+1)`` this gives
    ``c(d) = |S^{d-1}| * 2**nu * Gamma(nu+1)`` with ``nu = (d-2)/2``.
    """
    if d < 2:
        raise ValueError("script_j is defined for d >= 2")
    nu = (d - 2) / 2.0
    limit = 2.0 ** (-nu) / math.gamma(nu + 1.0)
    return surface_area(d) / limit


def script_j_alpha(d, alpha, s):
    """Constant-free kernel ``s**-nu J_nu(s)`` with ``nu = (d-2)/2 + alpha``.

    The value at ``s = 0`` is the limit ``2**-nu / Gamma(nu+1)``.
    """
    nu = (d - 2) / 2.0 + alpha
    if nu < 0:
        raise ValueError(f"order (d-2)/2 + alpha = {nu} is negative")
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0):
        raise ValueError("script_j_alpha needs nonnegative arguments")
    flat = arr.ravel()
    out = np.empty_like(flat)
    small = flat <= SERIES_CUT
    if np.any(small):
        out[small] = 2.0 ** (-nu) * _reduced_series(nu, flat[small])
    if np.any(~small):
        x = flat[~small]
        out[~small] = bessel_j(nu, x) * np.exp(-nu * np.log(x))
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def script_j_alpha_derivative(d, alpha, s):
    """Derivative of ``script_j_alpha`` in ``s``: ``-s * script_j_alpha(d, alpha+1, s)``."""
    return -np.asarray(s, dtype=float) * script_j_alpha(d, alpha + 1.0, s)


def script_j(d, s):
    """Spherical-measure kernel: ``c(d) * script_j_alpha(d, 0, s)``."""
    if d < 2:
        raise ValueError("script_j is defined for d >= 2")
    return sphere_constant(d) * script_j_alpha(d, 0.0, s)


def asymptotic_coefficients(d, alpha):
    """Coefficients ``(c0+, c0-, c1+, c1-)`` of the two-term expansion.

    ``script_j_alpha(u) ~ u**-((d-1)/2+alpha) * sum_n u**-n (cn+ e^{iu} + cn- e^{-iu})``.
    """
    nu = (d - 2) / 2.0 + alpha
    theta = (0.5 * nu + 0.25) * math.pi
    amp = math.sqrt(2.0 / math.pi)
    mu = 4.0 * nu * nu - 1.0
    c0p = 0.5 * amp * complex(math.cos(theta), -math.sin(theta))
    c0m = c0p.conjugate()
    # -(mu/8u) sin(u - theta) = (mu/8u) * (i/2) (e^{i(u-theta)} - e^{-i(u-theta)})
    c1p = amp * (mu / 8.0) * 0.5j * complex(math.cos(theta), -math.sin(theta))
    c1m = c1p.conjugate()
    return c0p, c0m, c1p, c1m


class AsymptoticValue(NamedTuple):
    value: np.ndarray
    bound: np.ndarray


def bessel_asymptotic(d, alpha, u, n_terms=2):
    """Truncated large-argument expansion of ``script_j_alpha``.

    Returns the (real) truncated expansion and the size
    ``u**-((d-1)/2 + alpha + n_terms)`` of the first omitted order.
    """
    if n_terms not in (1, 2):
        raise ValueError("n_terms must be 1 or 2")
    u = np.asarray(u, dtype=float)
    if np.any(u < 1):
        raise ValueError("expansion requires u >= 1")
    c0p, c0m, c1p, c1m = asymptotic_coefficients(d, alpha)
    lead = (d - 1) / 2.0 + alpha
    e = np.exp(1j * u)
    acc = c0p * e + c0m * np.conj(e)
    if n_terms == 2:
        acc = acc + (c1p * e + c1m * np.conj(e)) / u
    value = (u ** (-lead) * acc).real
    bound = u ** (-lead - n_terms)
    return AsymptoticValue(value, bound)

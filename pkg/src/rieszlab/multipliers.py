"""Radial convolution operators: Bochner-Riesz means, generalised spherical
means, the square-function kernels ``K_t^alpha`` and ``psi * sigma_r``.

Every operator acts on a GridField (FFT engine) or a RadialProfile (Bessel
engine) through :func:`rieszlab.transforms.apply_radial_multiplier`.  Each
operator also has a ``*_symbol`` helper returning its multiplier as a
function of ``rho = |xi|``; the helpers are what the square functions and
experiments use directly.
"""
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import betainc

from .grids import GridField
from .special import script_j, script_j_alpha
from .transforms import MultiplierSpec, apply_radial_multiplier

__all__ = [
    "PsiSpec", "bochner_riesz", "spherical_mean", "k_alpha_convolve",
    "sphere_convolve", "bochner_riesz_symbol", "k_alpha_symbol",
    "k_alpha_l2_constant", "k_alpha_energy", "k_alpha_cell_symbol", "spherical_mean_constant", "spherical_mean_symbol",
    "spherical_mean_dt_symbol", "riesz_kernel", "sphere_symbol",
]


def _apply(f, symbol, singular=(), support=None, kind="callable"):
    spec = MultiplierSpec.from_callable(symbol, singular=singular, support=support, kind=kind)
    return apply_radial_multiplier(f, spec, 1.0)


# ------------------------------------------------------------ Bochner-Riesz

def bochner_riesz_symbol(alpha, t=1.0):
    """``rho -> (1 - rho^2/t^2)_+^alpha``."""
    if alpha < 0:
        raise ValueError("Bochner-Riesz order must be >= 0")
    base = MultiplierSpec.bochner_riesz(alpha)
    return lambda rho: base(np.asarray(rho, dtype=float) / t)


def bochner_riesz(f, alpha, t=1.0):
    """Bochner-Riesz mean ``R^alpha_t f``, multiplier ``(1 - |xi|^2/t^2)_+^alpha``."""
    if t <= 0:
        raise ValueError("t must be positive")
    return _apply(f, bochner_riesz_symbol(alpha, t), (t,), (0.0, t), "bochner_riesz")


def riesz_kernel(d, gamma, x):
    """Inverse transform of ``(1 - |xi|^2)_+^gamma`` at radius ``|x|``.

    Equals ``(2 pi)^(-d/2) 2^gamma Gamma(gamma+1) script_j_alpha(d, gamma+1, |x|)``.
    """
    c = (2 * math.pi) ** (-d / 2) * 2.0 ** gamma * math.gamma(gamma + 1)
    return c * script_j_alpha(d, gamma + 1.0, np.abs(x))


# ------------------------------------------------------------ K_t^alpha

def k_alpha_symbol(alpha, t=1.0, cell=None):
    """``rho -> alpha u^2 (1-u^2)_+^(alpha-1)`` with ``u = rho/t``.

    For ``alpha < 1`` the symbol blows up at ``u = 1``.  When ``cell`` (a
    frequency spacing) is given, samples within half a cell of the edge
    are replaced by the cell average of the singular factor, with the
    smooth factor taken at the midpoint.
    """
    def m(rho):
        u = np.asarray(rho, dtype=float) / t
        inside = u < 1.0
        base = np.where(inside, 1.0 - u * u, 1.0)
        out = np.where(inside, alpha * u * u * np.power(base, alpha - 1.0), 0.0)
        if cell is None or alpha >= 1:
            return out
        h = 0.5 * cell / t
        near = np.abs(u - 1.0) < h
        if np.any(near):
            a = np.maximum(u[near] - h, 0.0)
            b = np.minimum(u[near] + h, 1.0)
            # int_a^b u (1-u^2)^(alpha-1) du = [(1-a^2)^alpha - (1-b^2)^alpha] / (2 alpha)
            layer = np.power(1 - a * a, alpha) - np.power(1 - b * b, alpha)
            out = out.copy()
            out[near] = alpha * u[near] * layer / (2 * alpha) / (2 * h)
        return out
    return m


def k_alpha_energy(alpha, u):
    """``int_0^u |alpha v^2 (1-v^2)_+^(alpha-1)|^2 dv/v`` (incomplete Beta form)."""
    v = np.clip(np.asarray(u, dtype=float), 0.0, 1.0) ** 2
    return k_alpha_l2_constant(alpha) * betainc(2.0, 2.0 * alpha - 1.0, v)


def k_alpha_cell_symbol(alpha, t_lo, t_hi):
    """Root mean square of ``rho -> |K^alpha_t^(rho)|`` over ``t`` in ``[t_lo, t_hi]``.

    The mean is taken against ``dt/t``.  Summing the squares of these
    symbols with the cell weights ``log(t_hi/t_lo)`` reproduces the ``t``
    integral of ``|K^alpha_t^|^2`` exactly, including the edge singularity
    at ``t = rho`` that point evaluation cannot resolve for ``alpha < 1``.
    """
    if alpha <= 0.5:
        raise ValueError("cell symbols need alpha > 1/2")
    w = math.log(t_hi / t_lo)

    def m(rho):
        rho = np.asarray(rho, dtype=float)
        e = k_alpha_energy(alpha, rho / t_lo) - k_alpha_energy(alpha, rho / t_hi)
        return np.sqrt(np.clip(e, 0.0, None) / w)
    return m


def k_alpha_l2_constant(alpha):
    """``int_0^inf |K^alpha_t^(xi)|^2 dt/t = alpha / (4 (2 alpha - 1))``."""
    if alpha <= 0.5:
        return math.inf
    return alpha / (4.0 * (2.0 * alpha - 1.0))


def k_alpha_convolve(f, alpha, t=1.0, strict=False):
    """``K_t^alpha * f`` with multiplier ``alpha (|xi|/t)^2 (1 - |xi|^2/t^2)_+^(alpha-1)``.

    ``alpha <= 1/2`` is rejected when ``strict`` (square-function use) and
    allowed with a warning otherwise.
    """
    if alpha <= 0.5:
        if strict:
            raise ValueError("square functions need alpha > 1/2")
        warnings.warn("alpha <= 1/2: the dt/t integral of |K_t^alpha|^2 diverges",
                      RuntimeWarning, stacklevel=2)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    cell = None
    if isinstance(f, GridField):
        cell = 2 * math.pi / f.extent
    return _apply(f, k_alpha_symbol(alpha, t, cell), (t,), (0.0, t), "k_alpha")


# ------------------------------------------------------------ spherical means

def spherical_mean_constant(d, beta):
    """``c_{d,beta}`` with ``c * script_j_alpha(d, beta, 0) = pi^(d/2) / Gamma(beta + d/2)``."""
    nu = (d - 2) / 2.0 + beta
    if nu < 0:
        raise ValueError(f"(d-2)/2 + beta = {nu} is negative")
    return math.pi ** (d / 2.0) * 2.0 ** nu


def spherical_mean_symbol(d, beta, t=1.0):
    """``rho -> c_{d,beta} script_j_alpha(d, beta, t rho)``."""
    c = spherical_mean_constant(d, beta)
    return lambda rho: c * script_j_alpha(d, beta, t * np.asarray(rho, dtype=float))


def spherical_mean_dt_symbol(d, beta, t=1.0):
    """``rho -> d/dt [c script_j_alpha(d, beta, t rho)] = -c t rho^2 script_j_alpha(d, beta+1, t rho)``."""
    c = spherical_mean_constant(d, beta)

    def m(rho):
        rho = np.asarray(rho, dtype=float)
        return -c * t * rho * rho * script_j_alpha(d, beta + 1.0, t * rho)
    return m


def spherical_mean(f, beta, t=1.0):
    """Generalised spherical mean ``A^beta_t f``, evaluated on the Fourier side.

    For ``beta > 0`` this is
    ``Gamma(beta)^-1 int_{|y|<=1} (1-|y|^2)^(beta-1) f(x - t y) dy``; the
    multiplier ``c_{d,beta} script_j_alpha(d, beta, t|xi|)`` continues it to
    every ``beta`` with ``(d-2)/2 + beta >= 0``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    d = f.dim if isinstance(f, GridField) else f.d
    return _apply(f, spherical_mean_symbol(d, beta, t), kind="spherical_mean")


# ------------------------------------------------------------ psi * sigma_r

@dataclass(frozen=True)
class PsiSpec:
    """Radial ``psi = Laplacian^(5d) g`` with ``g(x) = (1 - |x/a|^2)_+^N``.

    ``psi^(xi) = (-|xi|^2)^(5d) g^(xi)`` vanishes to order ``10d`` at the
    origin.  The bump power ``N`` exceeds ``10d`` so ``psi`` is continuous;
    the transform is normalised to ``sup |psi^| = 1``.
    """
    d: int
    space_support_radius: float = 0.1
    bump_power: int = None
    vanishing_order: int = field(init=False)
    laplacian_count: int = field(init=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 0 < self.space_support_radius <= 1:
            raise ValueError("psi must be supported in the unit ball")
        object.__setattr__(self, "laplacian_count", 5 * self.d)
        object.__setattr__(self, "vanishing_order", 10 * self.d)
        if self.bump_power is None:
            object.__setattr__(self, "bump_power", 12 * self.d)
        if self.bump_power <= self.vanishing_order:
            raise ValueError("bump_power must exceed the vanishing order")

    def _raw(self, rho):
        rho = np.asarray(rho, dtype=float)
        a = self.space_support_radius
        lap = (-(rho * rho)) ** self.laplacian_count
        return lap * script_j_alpha(self.d, self.bump_power + 1.0, a * rho)

    @cached_property
    def _scale(self):
        # the peak of rho^(10d) J-kernel sits near sqrt(2 * 10d * (N + d/2 + 1)) / a
        a = self.space_support_radius
        guess = math.sqrt(2 * self.vanishing_order * (self.bump_power + self.d / 2 + 1)) / a
        grid = np.linspace(1e-6, 6 * guess, 4001)
        i = int(np.argmax(np.abs(self._raw(grid))))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
        res = minimize_scalar(lambda r: -abs(float(self._raw(r))), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12 * hi})
        return abs(float(self._raw(res.x)))

    @property
    def peak_frequency(self):
        a = self.space_support_radius
        return math.sqrt(2 * self.vanishing_order * (self.bump_power + self.d / 2 + 1)) / a

    def u(self, rho):
        """``psi^`` as a function of ``|xi|``, with sup norm one."""
        return self._raw(rho) / self._scale


def sphere_convolve(psi, r, f):
    """``psi * sigma_r * f`` via the multiplier ``u(|xi|) r^(d-1) script_j(d, r|xi|)``.

    A ``RuntimeWarning`` flags radii beyond a quarter of the box.
    """
    d = f.dim if isinstance(f, GridField) else f.d
    if d != psi.d:
        raise ValueError("psi and f live in different dimensions")
    if r <= 0:
        raise ValueError("r must be positive")
    if isinstance(f, GridField) and r > f.extent / 4:
        warnings.warn(f"r = {r} exceeds a quarter of the box; periodic wraparound",
                      RuntimeWarning, stacklevel=2)
    return _apply(f, sphere_symbol(psi, r), kind="psi_sigma")


def sphere_symbol(psi, r):
    """``rho -> u(rho) r^(d-1) script_j(d, r rho)``; ``d = 1`` uses ``2 cos``."""
    d = psi.d

    def m(rho):
        rho = np.asarray(rho, dtype=float)
        kern = 2 * np.cos(r * rho) if d == 1 else script_j(d, r * rho)
        return psi.u(rho) * r ** (d - 1) * kern
    return m


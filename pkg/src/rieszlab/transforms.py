"""Fourier engines: radial (Bessel-kernel) transforms and periodic grid FFTs.

Convention: ``f^(xi) = int f(x) exp(-i x.xi) dx`` and
``f(x) = (2 pi)^-d int f^(xi) exp(i x.xi) dxi``, so that
``||f^||_2^2 = (2 pi)^d ||f||_2^2``.

For a radial ``f(x) = f0(|x|)`` the transform is radial as well:
``f^(rho) = int_0^inf f0(r) r^(d-1) script_j(d, r rho) dr``.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .grids import GridField, RadialProfile
from .special import script_j

__all__ = [
    "FourierConvention", "CONVENTION", "MultiplierSpec", "panel_rule",
    "hankel_transform", "hankel_matrix", "radial_fourier", "grid_fft",
    "apply_radial_multiplier", "UndefinedMultiplierError", "RadialMultiplierPlan",
]


@dataclass(frozen=True)
class FourierConvention:
    forward_sign: int = -1
    inverse_base: float = 2.0 * math.pi

    def inverse_prefactor(self, d):
        return self.inverse_base ** (-d)

    def plancherel_constant(self, d):
        return self.inverse_base ** d


CONVENTION = FourierConvention()


class UndefinedMultiplierError(ValueError):
    """A multiplier was requested outside the range where it is defined."""


@dataclass(frozen=True, eq=False)
class MultiplierSpec:
    """Tagged radial multiplier ``m(u)``, ``u = |xi|`` (before dilation).

    ``singular`` lists points where ``m`` is not smooth (quadrature breakpoints);
    ``support`` is ``(lo, hi)`` outside of which ``m`` vanishes, or ``None``.
    ``domain`` restricts where ``m`` is defined at all (tabulated data).
    """
    kind: str
    func: Callable = field(repr=False)
    params: dict = field(default_factory=dict)
    singular: Sequence[float] = ()
    support: Optional[tuple] = None
    domain: Optional[tuple] = None

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.domain is not None:
            lo, hi = self.domain
            bad = (u < lo) | (u > hi)
            if np.any(bad):
                raise UndefinedMultiplierError(
                    f"{self.kind} multiplier undefined at |xi| = {np.unique(u[bad])[:8]}")
        return self.func(u)

    @classmethod
    def bochner_riesz(cls, alpha):
        if alpha < 0:
            raise ValueError("Bochner-Riesz order must be >= 0")

        def m(u):
            inside = u < 1.0
            return np.where(inside, np.power(np.clip(1.0 - u * u, 0.0, None), alpha), 0.0)
        return cls("bochner_riesz", m, {"alpha": alpha}, (1.0,), (0.0, 1.0))

    @classmethod
    def k_alpha(cls, alpha):
        """``alpha u^2 (1-u^2)_+^(alpha-1)``, the square-function kernel symbol."""
        def m(u):
            inside = u < 1.0
            base = np.where(inside, 1.0 - u * u, 1.0)
            return np.where(inside, alpha * u * u * np.power(base, alpha - 1.0), 0.0)
        return cls("k_alpha", m, {"alpha": alpha}, (1.0,), (0.0, 1.0))

    @classmethod
    def bump(cls, lo=0.5, hi=2.0):
        """Smooth bump ``exp(1 - 1/(1-x^2))`` on ``(lo, hi)``, peak value 1."""
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)

        def m(u):
            x = (u - mid) / half
            inside = np.abs(x) < 1.0
            xs = np.where(inside, x, 0.0)
            return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - xs * xs)), 0.0)
        return cls("bump", m, {"lo": lo, "hi": hi}, (), (lo, hi))

    @classmethod
    def tabulated(cls, u, values, zero_outside=False):
        u = np.asarray(u, dtype=float)
        v = np.asarray(values)

        def m(x):
            re = np.interp(x, u, v.real, left=0.0, right=0.0)
            if np.iscomplexobj(v):
                return re + 1j * np.interp(x, u, v.imag, left=0.0, right=0.0)
            return re
        domain = None if zero_outside else (float(u[0]), float(u[-1]))
        return cls("tabulated", m, {"n": u.size}, (), (float(u[0]), float(u[-1])), domain)

    @classmethod
    def from_callable(cls, func, singular=(), support=None, kind="callable", **params):
        return cls(kind, func, params, tuple(singular), support)

    def dilated_singular(self, t):
        return tuple(s / t for s in self.singular)


# ---------------------------------------------------------------- quadrature

def _graded_points(p, q, toward_p, levels, ratio):
    """Breakpoints on [p, q] refined geometrically toward one end."""
    h = q - p
    ks = ratio ** np.arange(levels, 0, -1)
    if toward_p:
        return np.concatenate(([p], p + h * ks, [q]))
    return np.concatenate(([p], q - h * ks[::-1], [q]))


def panel_rule(a, b, max_panel, nodes=8, breakpoints=(), singular=(),
               levels=24, ratio=0.25):
    """Composite Gauss-Legendre rule on ``[a, b]``.

    Panels never exceed ``max_panel``; ``breakpoints`` become panel ends and
    each point in ``singular`` additionally gets a geometrically graded mesh
    (``levels`` panels shrinking by ``ratio``) on both sides.
    """
    if b <= a:
        return np.empty(0), np.empty(0)
    sing = sorted({float(s) for s in singular if a <= s <= b})
    cuts = sorted({a, b, *[float(x) for x in breakpoints if a < x < b], *sing})
    # merge cuts closer than rounding level
    tol = 1e-12 * (b - a)
    merged = [cuts[0]]
    for c in cuts[1:]:
        if c - merged[-1] > tol:
            merged.append(c)
        elif c == b:
            merged[-1] = b
    cuts = merged
    sing = [c for c in cuts if c in sing]
    edges = []
    for p, q in zip(cuts[:-1], cuts[1:]):
        sp, sq = p in sing, q in sing
        if sp and sq:
            m = 0.5 * (p + q)
            seg = np.concatenate((_graded_points(p, m, True, levels, ratio)[:-1],
                                  _graded_points(m, q, False, levels, ratio)))
        elif sp or sq:
            seg = _graded_points(p, q, sp, levels, ratio)
        else:
            seg = np.array([p, q])
        edges.append(seg[:-1])
    edges.append(np.array([cuts[-1]]))
    e = np.concatenate(edges)
    # split long panels uniformly
    lengths = np.diff(e)
    counts = np.maximum(1, np.ceil(lengths / max_panel).astype(int))
    lo = np.repeat(e[:-1], counts)
    step = np.repeat(lengths / counts, counts)
    offs = np.concatenate([np.arange(c) for c in counts])
    left = lo + offs * step
    x, w = np.polynomial.legendre.leggauss(nodes)
    pts = (left[:, None] + 0.5 * step[:, None] * (x[None, :] + 1.0)).ravel()
    wts = (0.5 * step[:, None] * w[None, :]).ravel()
    return pts, wts


def _kernel(d, s):
    if d == 1:
        return 2.0 * np.cos(s)
    return script_j(d, s)


def hankel_matrix(d, rho, nodes, weights):
    """Matrix ``A[i, j] = w_j r_j^(d-1) script_j(d, rho_i r_j)``."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    return _kernel(d, np.abs(np.outer(rho, nodes))) * (weights * nodes ** (d - 1))[None, :]


def _apply_kernel(d, rho, nodes, weights, samples, chunk=2_000_000):
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    out = np.zeros(rho.shape + samples.shape[1:], dtype=np.result_type(samples, float))
    rows = max(1, chunk // max(1, nodes.size))
    for i in range(0, rho.size, rows):
        a = hankel_matrix(d, rho[i:i + rows], nodes, weights)
        out[i:i + rows] = a @ samples
    return out


def hankel_transform(func, d, rho, support, singular=(), breakpoints=(),
                     nodes=8, inverse=False, max_panel=None):
    """``int_a^b func(r) r^(d-1) script_j(d, r rho) dr`` for each ``rho``.

    With ``inverse=True`` the result is multiplied by ``(2 pi)^-d``, which
    turns a radial transform profile back into the function profile.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    a, b = support
    top = max(float(np.max(np.abs(rho))), 1.0 / max(b - a, 1e-300))
    panel = max_panel or math.pi / (2.0 * top)
    r, w = panel_rule(a, b, panel, nodes, breakpoints, singular)
    vals = np.asarray(func(r))
    out = _apply_kernel(d, rho, r, w, vals)
    if inverse:
        out = out * CONVENTION.inverse_prefactor(d)
    return out


def _effective_support(profile, tol=1e-17):
    a = np.abs(profile.values)
    top = a.max()
    if top == 0:
        return profile.radii[0]
    idx = np.nonzero(a > tol * top)[0][-1]
    return profile.radii[min(idx + 1, profile.radii.size - 1)]


def _resolution(f):
    r_end = _effective_support(f)
    inside = f.radii <= r_end
    dr = np.diff(f.radii[inside]).max() if inside.sum() > 1 else f.radii[0]
    return r_end, math.pi / (2.0 * dr)


def radial_fourier(f, rho=None, inverse=False, nodes=8):
    """Radial transform of a sampled profile.

    The profile is spline-interpolated (and extrapolated to ``r = 0``) and
    integrated with Gauss-Legendre panels no longer than ``pi/(2 rho_max)``.
    Output frequencies above the sampling resolution ``pi/(2 dr_max)`` of the
    input are marked unreliable in ``reliable``.
    """
    if f.d < 2:
        raise ValueError("radial_fourier needs d >= 2")
    r_end, rho_res = _resolution(f)
    if rho is None:
        rho = np.geomspace(f.radii[0], rho_res, 1024)
    rho = np.asarray(rho, dtype=float)
    top = min(max(float(rho.max()), 1.0 / r_end), rho_res)
    spl = f.spline()
    out = hankel_transform(spl, f.d, rho, (0.0, r_end), inverse=inverse,
                           nodes=nodes, max_panel=math.pi / (2.0 * top))
    return RadialProfile(f.d, rho, out, reliable=rho <= rho_res)


def _shifted_fft(values, inverse):
    axes = tuple(range(values.ndim))
    x = np.fft.ifftshift(values, axes=axes)
    y = np.fft.ifftn(x, axes=axes) * x.size if inverse else np.fft.fftn(x, axes=axes)
    return np.fft.fftshift(y, axes=axes)


def grid_fft(f, direction="forward"):
    """Continuum-scaled DFT between centred space and frequency grids.

    Forward: ``f^(xi_k) ~ h^d sum_j f(x_j) exp(-i x_j xi_k)`` on the centred
    frequency grid of extent ``2 pi n / L``.  Inverse adds ``(2 pi)^-d`` and
    uses the frequency cell volume.
    """
    if direction not in ("forward", "inverse"):
        raise ValueError("direction must be 'forward' or 'inverse'")
    inverse = direction == "inverse"
    vals = _shifted_fft(f.values, inverse) * f.cell_volume
    if inverse:
        vals = vals * CONVENTION.inverse_prefactor(f.dim)
    return GridField(vals, 2.0 * math.pi * f.n / f.extent)


def apply_radial_multiplier(f, m, t=1.0, radii=None, rho=None):
    """``T_{m(t.)} f``: multiply ``f^`` by ``m(t |xi|)`` and invert.

    ``f`` is a GridField or a RadialProfile; ``m`` is a MultiplierSpec or any
    callable of ``|xi|`` (arrays in, arrays out).
    """
    if t <= 0:
        raise ValueError("dilation t must be positive")
    if isinstance(f, GridField):
        axes = tuple(range(f.dim))
        spec = np.fft.fftn(f.values, axes=axes)
        rho, inv = np.unique(f.freq_radius(), return_inverse=True)
        spec *= m(t * rho)[inv.reshape(spec.shape)]
        return f.with_values(np.fft.ifftn(spec, axes=axes))
    if not isinstance(f, RadialProfile):
        raise TypeError("f must be a GridField or RadialProfile")
    if rho is None:
        top = _resolution(f)[1]
        support = getattr(m, "support", None)
        if support is not None:
            top = min(top, support[1] / t)
        rho = np.linspace(0.0, top, 2049)[1:]
    fhat = radial_fourier(f, rho=rho)
    good = fhat.reliable
    fh = RadialProfile(f.d, fhat.radii[good], fhat.values[good])
    spl = fh.spline()
    top = _effective_support(fh)
    sing = [s / t for s in getattr(m, "singular", ())]
    out_r = f.radii if radii is None else np.asarray(radii, dtype=float)
    vals = hankel_transform(lambda x: spl(x) * m(t * x), f.d, out_r, (0.0, top),
                            singular=sing, inverse=True)
    return RadialProfile(f.d, out_r, vals)


# relative level below which a sampled transform is treated as noise
TAIL_FLOOR = 1e-10


class RadialMultiplierPlan:
    """Apply many radial multipliers to one radial profile.

    The transform of ``f`` is tabulated once on a composite Gauss-Legendre
    mesh in ``rho`` (panels no longer than ``pi / (2 max(radii))``, with
    every point of ``breakpoints`` as a panel end), together with the
    inverse Bessel matrix onto ``radii``.  Each multiplier then costs one
    matrix-vector product.  The plan is immutable once built.

    Parameters
    ----------
    f : RadialProfile
    radii : array_like
        Output radii.
    breakpoints : sequence of float
        Frequencies where the multipliers are not smooth.
    rho_max : float, optional
        Upper end of the frequency mesh; by default the point beyond which
        ``|f^|`` stays below ``TAIL_FLOOR`` times its maximum (capped by the
        profile's sampling resolution).
    """

    def __init__(self, f, radii, breakpoints=(), rho_max=None, nodes=8):
        if not isinstance(f, RadialProfile) or f.d < 2:
            raise TypeError("plans need a RadialProfile with d >= 2")
        self.d = f.d
        self.radii = np.asarray(radii, dtype=float)
        r_end, rho_res = _resolution(f)
        if rho_max is None:
            probe = radial_fourier(f, np.linspace(rho_res / 512, rho_res, 512))
            a = np.abs(probe.values)
            above = np.nonzero(a > TAIL_FLOOR * a.max())[0]
            rho_max = probe.radii[min(above[-1] + 1, a.size - 1)]
        self.rho_max = float(min(rho_max, rho_res))
        panel = math.pi / (2.0 * max(float(self.radii.max()), 1.0))
        bps = [b for b in breakpoints if 0 < b < self.rho_max]
        self.rho, self.weights = panel_rule(0.0, self.rho_max, panel, nodes, bps)
        self.fhat = radial_fourier(f, self.rho).values
        self.matrix = hankel_matrix(self.d, self.radii, self.rho, self.weights)
        self.matrix *= CONVENTION.inverse_prefactor(self.d)
        for arr in (self.rho, self.weights, self.fhat, self.matrix):
            arr.setflags(write=False)

    def apply(self, m):
        """Samples of ``T_m f`` on ``radii``."""
        return self.matrix @ (np.asarray(m(self.rho)) * self.fhat)

    def apply_many(self, symbols):
        """Stack of ``T_m f`` for each symbol; shape ``(len(symbols), len(radii))``."""
        cols = np.stack([np.asarray(m(self.rho)) * self.fhat for m in symbols], axis=1)
        return (self.matrix @ cols).T

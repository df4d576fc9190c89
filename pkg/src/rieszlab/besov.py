"""Besov norms ``B^2_{alpha,q}`` of multipliers on the line, the kernel-side
norm in polar coordinates, and the Bochner-Riesz type test multipliers.

Profiles on the line are sampled on a uniform grid (:class:`LineProfile`).
Blocks use the partition ``phi_0^2 = Psi_0``,
``phi_j^2 = Psi_j - Psi_{j-1}`` with ``Psi_j(tau) = S(log2|tau| - j)`` and
``S`` the smooth step of :func:`rieszlab.maximal.smooth_step` on ``[0, 1]``.
The squares telescope to one exactly, and only the squares enter the block
norms ``||Delta_j m||_2^2 = (2 pi)^-1 int phi_j^2 |m^|^2``.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .maximal import smooth_step
from .multipliers import riesz_kernel
from .transforms import hankel_transform

__all__ = ["LineProfile", "BesovBlocks", "KernelSideNorm", "TestMultiplierSpec",
           "partition_squares", "besov_blocks", "besov_norm", "kernel_side_norm",
           "test_multiplier", "radial_embedding_check", "bump_profile",
           "localized_riesz", "lq_norm", "cutoff", "narrow_cutoff"]

LINE_N = 2 ** 20
LINE_PERIOD = 4.0


class LineProfile(NamedTuple):
    """Samples of ``m`` at ``s = s0 + k h``; ``m`` vanishes off the window."""
    s: np.ndarray
    values: np.ndarray

    @property
    def spacing(self):
        return float(self.s[1] - self.s[0])

    @classmethod
    def sample(cls, m, n=LINE_N, period=LINE_PERIOD):
        s = np.arange(n) * (period / n)
        return cls(s, np.asarray(m(s)))

    def scaled(self, c):
        return LineProfile(self.s, c * self.values)


class BesovBlocks(NamedTuple):
    j: np.ndarray
    norms: np.ndarray
    partition: str = "Psi_j(tau) = S(log2|tau| - j), S smooth step 1 -> 0 on [0, 1]"


class KernelSideNorm(NamedTuple):
    value: float
    blocks: np.ndarray
    resolved: bool


def _as_profile(m):
    return m if isinstance(m, LineProfile) else LineProfile.sample(m)


def lq_norm(x, q):
    x = np.abs(np.asarray(x, dtype=float))
    if x.size == 0:
        return 0.0
    if math.isinf(q):
        return float(x.max())
    return float(np.sum(x ** q) ** (1.0 / q))


def partition_squares(tau, j_max):
    """``phi_j(tau)^2`` for ``j = 0..j_max``, shape ``(j_max + 1, tau.size)``."""
    with np.errstate(divide="ignore"):
        lt = np.log2(np.abs(tau))
    psi = np.array([smooth_step(lt - j, 0.0, 1.0) for j in range(j_max + 1)])
    out = psi.copy()
    out[1:] -= psi[:-1]
    return out


def besov_blocks(m, j_max=None):
    """Block norms ``||Delta_j m||_2``, ``j = 0..j_max``.

    ``j_max`` defaults to the largest block whose support stays below a
    quarter of the sampling Nyquist frequency.
    """
    prof = _as_profile(m)
    h = prof.spacing
    n = prof.values.size
    spec = np.fft.fft(prof.values)
    tau = 2 * math.pi * np.fft.fftfreq(n, d=h)
    top = int(math.floor(math.log2(math.pi / h))) - 3
    if j_max is None:
        j_max = top
    elif j_max > top:
        raise ValueError(f"j_max {j_max} exceeds the sampling limit {top}")
    power = np.abs(spec) ** 2
    sq = partition_squares(tau, j_max)
    norms = np.sqrt(h / n * (sq @ power))
    return BesovBlocks(np.arange(j_max + 1), norms)


def besov_norm(m, alpha, q, j_max=None):
    """``(sum_j (2^(j alpha) ||Delta_j m||_2)^q)^(1/q)``; sup form for ``q = inf``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    b = besov_blocks(m, j_max)
    return lq_norm(2.0 ** (alpha * b.j) * b.norms, q)


# ------------------------------------------------------------ kernel side

def kernel_side_norm(m, alpha, q, d, support=(0.5, 2.0), singular=(), j_max=8,
                     tail_tol=1e-2, panels_per_period=1):
    """``(sum_j [int_{I_j} |kappa|^2 r^(2 alpha + d - 1) dr]^(q/2))^(1/q)``.

    ``kappa`` is the inverse Fourier transform of ``m(|xi|)`` on ``R^d``,
    ``I_0 = (0, 2]`` and ``I_j = [2^j, 2^(j+1)]``.  ``m`` is a callable
    vanishing off ``support``.  ``resolved`` is False when the last block
    still carries more than ``tail_tol`` of the sum.
    """
    a, b = support
    if not 0 < a < b:
        raise ValueError("support must be a compact subinterval of (0, inf)")
    x, w = np.polynomial.legendre.leggauss(16)
    edges = [0.0] + [2.0 ** j for j in range(1, j_max + 2)]
    blocks = np.zeros(j_max + 1)
    for j in range(j_max + 1):
        lo, hi = edges[j], edges[j + 1]
        # 16-node panels, one per oscillation period 2 pi / b of kappa
        npan = max(4, int(math.ceil((hi - lo) * b * panels_per_period / (2 * math.pi))))
        cuts = np.linspace(lo, hi, npan + 1)
        half = 0.5 * np.diff(cuts)
        r = ((cuts[:-1] + half)[:, None] + half[:, None] * x[None, :]).ravel()
        wr = (half[:, None] * w[None, :]).ravel()
        kap = _kernel(m, d, r, support, singular)
        blocks[j] = np.sum(wr * np.abs(kap) ** 2 * r ** (2 * alpha + d - 1))
    parts = np.sqrt(blocks)
    value = lq_norm(parts, q)
    tail = parts[-1] / value if value > 0 else 0.0
    return KernelSideNorm(value, parts, bool(tail <= tail_tol))


def _kernel(m, d, r, support, singular):
    # d = 1 uses the kernel 2 cos(r s), i.e. the even extension of m
    return hankel_transform(m, d, r, support, singular, inverse=True)


# ------------------------------------------------------------ test profiles

def bump_profile(lo=0.5, hi=2.0):
    """Smooth bump on ``(lo, hi)`` with peak value one."""
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)

    def m(s):
        x = (np.asarray(s, dtype=float) - mid) / half
        inside = np.abs(x) < 1
        xs = np.where(inside, x, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - xs * xs)), 0.0)
    return m


def cutoff(s):
    """``chi``: equal to one on ``[0.45, 2.2]``, supported in ``(0.2, 3.6)``.

    The wide plateau keeps the truncation by ``chi`` from smearing the
    coarse blocks of the test multipliers.
    """
    s = np.asarray(s, dtype=float)
    return (1.0 - smooth_step(s, 0.2, 0.45)) * smooth_step(s, 2.2, 3.6)


def narrow_cutoff(s):
    """``chi`` equal to one on ``[3/4, 5/4]``, supported in ``(1/2, 2)``."""
    s = np.asarray(s, dtype=float)
    return (1.0 - smooth_step(s, 0.55, 0.75)) * smooth_step(s, 1.25, 1.8)


def localized_riesz(lam, chi=cutoff):
    """``chi(s) (1 - s^2)_+^lambda``: the edge piece of the Bochner-Riesz symbol."""
    def m(s):
        s = np.asarray(s, dtype=float)
        return chi(s) * np.clip(1.0 - s * s, 0.0, None) ** lam
    return m


def annulus_window(x):
    """Even window: one on ``2^-1/2 <= |x| <= 2^1/2``, supported in ``1/2 < |x| < 2``."""
    a = np.abs(np.asarray(x, dtype=float))
    return (1.0 - smooth_step(a, 0.5, 2 ** -0.5)) * smooth_step(a, 2 ** 0.5, 2.0)


@dataclass(frozen=True)
class TestMultiplierSpec:
    """Bochner-Riesz type test multiplier.

    ``m = chi * sum_j c_j (B_gamma * 2^j Phi1^(2^j .))`` with
    ``B_gamma(s) = (1 - s^2)_+^gamma``, ``gamma = d(1/p - 1/2) - 1/2``;
    ``coefficients[i]`` is ``c_{i+1}``.
    """
    __test__ = False

    p: float
    coefficients: tuple
    d: int = 2
    window: object = annulus_window
    chi: object = cutoff

    def __post_init__(self):
        if not 1 < self.p < 2:
            raise ValueError("p must lie in (1, 2)")
        if len(self.coefficients) > 20:
            raise ValueError("at most 20 coefficients")
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))

    @property
    def gamma(self):
        return self.d * (1.0 / self.p - 0.5) - 0.5

    @property
    def alpha(self):
        """Critical smoothness ``d/p - d/2``."""
        return self.d / self.p - self.d / 2.0


def test_multiplier(spec, n=2 ** 22, step=math.pi / 16):
    """Sampled profile of the test multiplier on the line.

    The smoothing ``B_gamma * 2^j Phi1^(2^j .)`` is the transform of
    ``b_gamma(x) Phi1(2^-j x)``, with ``b_gamma`` the kernel of
    ``B_gamma``; the sum of the localized kernels is transformed with one
    FFT of ``n`` points spaced ``step`` in ``x``, then multiplied by ``chi``.
    """
    x = (np.arange(n) - n // 2) * step
    if 2.0 ** (len(spec.coefficients) + 2) > x[-1]:
        raise ValueError("grid too short for the requested number of blocks")
    kern = np.zeros(n)
    ax = np.abs(x)
    for j, c in enumerate(spec.coefficients, start=1):
        if c:
            sl = (ax > 2.0 ** (j - 1)) & (ax < 2.0 ** (j + 1))
            kern[sl] += c * spec.window(x[sl] / 2.0 ** j)
    live = kern != 0
    kern[live] *= riesz_kernel(1, spec.gamma, x[live])
    # m(s) = int kern(x) e^(-isx) dx
    spec_vals = step * np.fft.fft(np.fft.ifftshift(kern))
    s = 2 * math.pi * np.fft.fftfreq(n, d=step)
    keep = (s >= 0) & (s < LINE_PERIOD)
    order = np.argsort(s[keep])
    sv = s[keep][order]
    vals = spec.chi(sv) * spec_vals[keep][order].real
    return LineProfile(sv, vals)


test_multiplier.__test__ = False   # not a pytest test


def radial_embedding_check(g, zeta, alpha, q, d, support=(0.5, 2.0), singular=(), j_max=8):
    """``(lhs, rhs, lhs/rhs)``: kernel-side norm of ``zeta g`` on ``R^d`` against
    the line Besov norm of ``g``."""
    zg = lambda s: zeta(s) * g(s)
    lhs = kernel_side_norm(zg, alpha, q, d, support, singular, j_max).value
    rhs = besov_norm(g, alpha, q)
    return lhs, rhs, lhs / rhs if rhs > 0 else math.inf

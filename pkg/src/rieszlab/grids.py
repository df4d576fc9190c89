"""Sampled-function containers, norms, dt/t quadrature and exponent fits."""
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "GridField", "RadialProfile", "LorentzExponents", "TGrid", "LogLogFit",
    "RingStats", "default_grid", "log_radii", "lp_norm", "decreasing_rearrangement",
    "lorentz_norm", "lorentz_norm_samples", "annulus_profile", "loglog_fit",
    "tgrid_integrate",
]


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class GridField:
    """Complex samples on the periodic box ``[-L/2, L/2)**dim``.

    Sample ``j`` along an axis sits at ``-L/2 + j*L/n``.
    """
    values: np.ndarray
    extent: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim not in (1, 2):
            raise ValueError("GridField supports dim 1 or 2")
        if len(set(vals.shape)) != 1 or not _is_pow2(vals.shape[0]):
            raise ValueError(f"axes must have equal power-of-two length, got {vals.shape}")
        if not self.extent > 0:
            raise ValueError("extent must be positive")
        if not np.all(np.isfinite(vals)):
            raise ValueError("GridField values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self):
        return self.values.ndim

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def spacing(self):
        return self.extent / self.n

    @property
    def cell_volume(self):
        return self.spacing ** self.dim

    def axis(self):
        return -0.5 * self.extent + self.spacing * np.arange(self.n)

    def coords(self):
        """Coordinate arrays (``indexing='ij'``), one per axis."""
        ax = self.axis()
        if self.dim == 1:
            return (ax,)
        return tuple(np.meshgrid(ax, ax, indexing="ij"))

    def radius(self):
        return np.sqrt(sum(c * c for c in self.coords()))

    def freq_axis(self):
        """Angular frequencies in FFT order."""
        return 2.0 * math.pi * np.fft.fftfreq(self.n, d=self.spacing)

    def freq_radius(self):
        """|xi| on the FFT-ordered frequency lattice."""
        w = self.freq_axis()
        if self.dim == 1:
            return np.abs(w)
        return np.sqrt(w[:, None] ** 2 + w[None, :] ** 2)

    @property
    def xi_max(self):
        return math.pi / self.spacing * math.sqrt(self.dim)

    def with_values(self, values):
        return GridField(values, self.extent)

    @classmethod
    def from_function(cls, func, dim=2, n=None, extent=None):
        """Sample ``func(*coords)`` on the default or given grid."""
        n0, l0 = _DEFAULTS[dim]
        proto = cls(np.zeros((n or n0,) * dim), extent or l0)
        return cls(np.broadcast_to(func(*proto.coords()), proto.values.shape), proto.extent)

    @classmethod
    def from_radial(cls, func, dim=2, n=None, extent=None):
        """Sample a radial function ``func(|x|)``."""
        n0, l0 = _DEFAULTS[dim]
        proto = cls(np.zeros((n or n0,) * dim), extent or l0)
        return cls(func(proto.radius()), proto.extent)

    def boundary_level(self):
        """Largest |value| on the outer frame of the box, relative to the maximum."""
        a = np.abs(self.values)
        if self.dim == 1:
            edge = max(a[0], a[-1])
        else:
            edge = max(a[0].max(), a[-1].max(), a[:, 0].max(), a[:, -1].max())
        top = a.max()
        return edge / top if top > 0 else 0.0


_DEFAULTS = {1: (8192, 512.0), 2: (512, 64.0)}


def default_grid(dim=2):
    """Zero field on the default grid for ``dim``."""
    n, extent = _DEFAULTS[dim]
    return GridField(np.zeros((n,) * dim), extent)


def log_radii(rmin=1e-3, rmax=1e3, n=8192):
    return np.geomspace(rmin, rmax, n)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """A radial function sampled on a strictly increasing positive radius grid."""
    d: int
    radii: np.ndarray
    values: np.ndarray
    reliable: Optional[np.ndarray] = None

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if r.ndim != 1 or r.size < 4 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("radii must be a strictly increasing positive 1-D grid")
        if v.shape != r.shape:
            raise ValueError("values and radii must have the same length")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, func, d, radii=None):
        r = log_radii() if radii is None else np.asarray(radii, dtype=float)
        return cls(d, r, func(r))

    def spline(self):
        re = CubicSpline(self.radii, self.values.real)
        if np.any(self.values.imag != 0):
            im = CubicSpline(self.radii, self.values.imag)
            return lambda r: re(r) + 1j * im(r)
        return lambda r: re(r) + 0j

    def __call__(self, r):
        """Spline interpolation; zero beyond the last radius."""
        r = np.asarray(r, dtype=float)
        out = self.spline()(np.clip(r, 0.0, self.radii[-1]))
        return np.where(r > self.radii[-1], 0.0, out)

    @property
    def is_real(self):
        return not np.any(self.values.imag != 0)


@dataclass(frozen=True)
class LorentzExponents:
    p: float
    q: float

    def __post_init__(self):
        if not (1 < self.p < math.inf):
            raise ValueError("Lorentz p must lie in (1, inf)")
        if not (1 <= self.q <= math.inf):
            raise ValueError("Lorentz q must lie in [1, inf]")


@dataclass(frozen=True, eq=False)
class TGrid:
    """Gauss-Legendre nodes in ``log t`` on the dyadic blocks ``[2^k, 2^(k+1)]``.

    The weights integrate against ``dt/t``; one block has total weight ``ln 2``.
    """
    k_min: int = -6
    k_max: int = 6
    nodes_per_block: int = 16
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.k_max < self.k_min:
            raise ValueError("empty block range")
        if self.nodes_per_block < 1:
            raise ValueError("nodes_per_block must be positive")
        x, w = np.polynomial.legendre.leggauss(self.nodes_per_block)
        half = 0.5 * math.log(2.0)
        ks = np.arange(self.k_min, self.k_max + 1)
        logt = (ks[:, None] + 0.5) * math.log(2.0) + half * x[None, :]
        object.__setattr__(self, "nodes", np.exp(logt).ravel())
        object.__setattr__(self, "weights", np.broadcast_to(half * w, logt.shape).ravel().copy())

    @property
    def t_min(self):
        return 2.0 ** self.k_min

    @property
    def t_max(self):
        return 2.0 ** (self.k_max + 1)

    def cell_edges(self):
        """Per-node ``(t_lo, t_hi)``: consecutive weights tile each block in ``log t``.

        Gauss-Legendre nodes separate the partial sums of their weights, so
        every node lies inside its own cell.
        """
        nb = self.nodes_per_block
        w = self.weights.reshape(-1, nb)
        start = (np.arange(self.k_min, self.k_max + 1) * math.log(2.0))[:, None]
        hi = start + np.cumsum(w, axis=1)
        lo = hi - w
        return np.exp(lo).ravel(), np.exp(hi).ravel()

    def refined(self, factor=2):
        return TGrid(self.k_min, self.k_max, self.nodes_per_block * factor)

    def __len__(self):
        return self.nodes.size


class LogLogFit(NamedTuple):
    slope: float
    intercept: float
    stderr: float


class RingStats(NamedTuple):
    center: float
    l2_mean: float
    lp_mass: float
    empty: bool


def _region_mask(f, region):
    if region is None:
        return np.ones(f.values.shape, dtype=bool)
    if isinstance(region, np.ndarray):
        return region.astype(bool)
    r_in, r_out = region
    rad = f.radius()
    return (rad >= r_in) & (rad < r_out)


def lp_norm(f, p, region=None):
    """Riemann-sum ``L^p`` norm of a GridField.

    ``region`` is ``None`` (whole box), a boolean mask, or ``(r_in, r_out)``
    for the annulus ``r_in <= |x| < r_out`` (``r_in = 0`` gives a ball).
    """
    mask = _region_mask(f, region)
    a = np.abs(f.values[mask])
    if a.size == 0:
        return 0.0
    if p == math.inf:
        return float(a.max())
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((np.sum(a ** p) * f.cell_volume) ** (1.0 / p))


def decreasing_rearrangement(values, weights):
    """Sorted magnitudes and the cumulative measure at which each level ends.

    Returns ``(levels, ends)`` with ``levels`` nonincreasing; the
    rearrangement equals ``levels[i]`` on ``[ends[i-1], ends[i])``.
    """
    a = np.abs(np.asarray(values)).ravel()
    w = np.broadcast_to(np.asarray(weights, dtype=float), np.asarray(values).shape).ravel()
    order = np.argsort(-a, kind="stable")
    return a[order], np.cumsum(w[order])


def lorentz_norm_samples(values, weights, p, q):
    """Lorentz norm of a step function given by samples and cell measures.

    Uses ``(int_0^inf (t**(1/p) f*(t))**q dt/t)**(1/q)``; for ``q = inf`` the
    supremum ``sup_t t**(1/p) f*(t)``.  The layer integral is evaluated
    exactly on each step of the rearrangement.
    """
    pq = LorentzExponents(p, q)
    levels, ends = decreasing_rearrangement(values, weights)
    keep = levels > 0
    levels, ends = levels[keep], ends[keep]
    if levels.size == 0:
        return 0.0
    if pq.q == math.inf:
        # sup over each step is reached at its right end
        return float(np.max(levels * ends ** (1.0 / pq.p)))
    starts = np.concatenate(([0.0], ends[:-1]))
    r = pq.q / pq.p
    layer = (pq.p / pq.q) * (ends ** r - starts ** r)
    return float(np.sum(levels ** pq.q * layer) ** (1.0 / pq.q))


def lorentz_norm(f, pq):
    """Lorentz ``L^{p,q}`` norm of a GridField (cells weighted by volume)."""
    return lorentz_norm_samples(f.values, f.cell_volume, pq.p, pq.q)


def annulus_profile(f, ring_edges, p=2.0):
    """Per-ring L2 mean ``(avg |f|^2)^(1/2)`` and ``L^p`` mass ``int |f|^p``."""
    edges = np.asarray(ring_edges, dtype=float)
    if np.any(np.diff(edges) <= 0):
        raise ValueError("ring edges must increase")
    rad = f.radius().ravel()
    a = np.abs(f.values).ravel()
    idx = np.digitize(rad, edges) - 1
    out = []
    for i in range(edges.size - 1):
        sel = idx == i
        count = int(sel.sum())
        center = 0.5 * (edges[i] + edges[i + 1])
        if count == 0:
            out.append(RingStats(center, math.nan, 0.0, True))
            continue
        vals = a[sel]
        out.append(RingStats(center, float(np.sqrt(np.mean(vals ** 2))),
                             float(np.sum(vals ** p) * f.cell_volume), False))
    return out


def loglog_fit(points):
    """Least-squares line through ``(log x, log y)``.

    Parameters
    ----------
    points : sequence of (x, y) pairs, or an (N, 2) array
        Coordinates must be positive; at least three points.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("loglog_fit needs at least 3 points")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("loglog_fit needs positive coordinates")
    lx, ly = np.log(x), np.log(y)
    a = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(a, ly, rcond=None)
    resid = ly - a @ coef
    dof = max(1, lx.size - 2)
    sxx = np.sum((lx - lx.mean()) ** 2)
    stderr = math.sqrt(np.sum(resid ** 2) / dof / sxx) if sxx > 0 else math.inf
    return LogLogFit(float(coef[0]), float(coef[1]), stderr)


def tgrid_integrate(g, grid):
    """``sum_i w_i g(t_i)``, approximating ``int g(t) dt/t`` over the grid range.

    ``g`` may return arrays; the sum runs over nodes in increasing order.
    """
    total = 0.0
    for t, w in zip(grid.nodes, grid.weights):
        total = total + w * g(t)
    return total

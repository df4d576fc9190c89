"""Experiment harness: kernel decay, necessity and duality thresholds,
separation orthogonality, the Plancherel step of the restriction argument,
and the cancellation of ``psi * sigma_r``.

All radial kernels are evaluated through Hankel quadrature on the half
line, so the oscillation and decay at large ``|x|`` are not polluted by
periodic images.  Predicted exponents come from :func:`critical_alpha`,
:func:`kernel_decay_exponent` and :func:`ring_growth_exponent` only.
"""
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import LinearOperator, eigsh
from scipy.special import roots_jacobi

from .besov import bump_profile
from .grids import loglog_fit
from .multipliers import PsiSpec, sphere_symbol
from .special import script_j, script_j_alpha, sphere_constant, surface_area
from .transforms import CONVENTION, hankel_matrix, panel_rule

__all__ = ["SCHEMA_VERSION", "ConfigError", "ExperimentConfig", "FitReport",
           "ThresholdReport", "ConstantReport", "critical_alpha",
           "kernel_decay_exponent", "ring_growth_exponent", "kernel_profiles",
           "kernel_decay_experiment", "necessity_probe", "duality_probe",
           "orthogonality_kernel", "orthogonality_decay", "plancherel_ratio", "plancherel_spacing",
           "plancherel_sup", "plancherel_step_check", "sphere_cancellation",
           "cusp_rule", "duality_symbol", "MIN_DECADES"]

SCHEMA_VERSION = 1
MIN_DECADES = 1.5
ETA_SUPPORT = (0.5, 3.0)


# ------------------------------------------------------------ configuration

class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


_TOP_KEYS = {"schema", "experiment", "d", "grid", "params", "tgrid", "output", "seed"}
_REQUIRED = ("experiment", "d", "grid", "params", "output")
_TGRID_KEYS = {"k_min", "k_max", "nodes_per_block"}
_OUTPUT_KEYS = {"csv", "svg", "dir"}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run.

    ``grid`` holds ``n`` and ``L``; each experiment documents how it reads
    them (a periodic box for grid experiments, a radial sample count and
    outer radius for the kernel experiments).  ``params`` holds operator
    parameters, ``tgrid`` optional TGrid settings and ``output`` the CSV
    (and optional SVG) paths.
    """
    experiment: str
    d: int = 2
    grid: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    tgrid: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    seed: int = 0
    schema: int = SCHEMA_VERSION

    def param(self, name, default=None):
        return self.params.get(name, default)

    @classmethod
    def from_dict(cls, data):
        """Validate a decoded JSON object; unknown keys are rejected."""
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        for key in data:
            if key not in _TOP_KEYS:
                raise ConfigError(key, "unknown key")
        for key in _REQUIRED:
            if key not in data:
                raise ConfigError(key, "missing required key")
        schema = data.get("schema", SCHEMA_VERSION)
        if schema != SCHEMA_VERSION:
            raise ConfigError("schema", f"unsupported schema version {schema!r}")
        exp = data["experiment"]
        if not isinstance(exp, str) or not exp:
            raise ConfigError("experiment", "must be a non-empty string")
        d = data["d"]
        if isinstance(d, bool) or not isinstance(d, int) or d < 1:
            raise ConfigError("d", "must be a positive integer")
        grid = data["grid"]
        if not isinstance(grid, dict):
            raise ConfigError("grid", "must be an object with keys n and L")
        for key in grid:
            if key not in ("n", "L"):
                raise ConfigError(f"grid.{key}", "unknown key")
        for key in ("n", "L"):
            if key not in grid:
                raise ConfigError(f"grid.{key}", "missing required key")
        n, ext = grid["n"], grid["L"]
        if isinstance(n, bool) or not isinstance(n, int) or n < 4:
            raise ConfigError("grid.n", "must be an integer >= 4")
        if isinstance(ext, bool) or not isinstance(ext, (int, float)) or not ext > 0:
            raise ConfigError("grid.L", "must be a positive number")
        params = data["params"]
        if not isinstance(params, dict):
            raise ConfigError("params", "must be an object")
        tgrid = data.get("tgrid", {})
        if not isinstance(tgrid, dict):
            raise ConfigError("tgrid", "must be an object")
        for key, val in tgrid.items():
            if key not in _TGRID_KEYS:
                raise ConfigError(f"tgrid.{key}", "unknown key")
            if isinstance(val, bool) or not isinstance(val, int):
                raise ConfigError(f"tgrid.{key}", "must be an integer")
        output = data["output"]
        if not isinstance(output, dict):
            raise ConfigError("output", "must be an object with key csv")
        for key, val in output.items():
            if key not in _OUTPUT_KEYS:
                raise ConfigError(f"output.{key}", "unknown key")
            if not isinstance(val, str) or not val:
                raise ConfigError(f"output.{key}", "must be a non-empty path")
        if "csv" not in output:
            raise ConfigError("output.csv", "missing required key")
        seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed", "must be a nonnegative integer")
        return cls(exp, d, {"n": n, "L": float(ext)}, dict(params), dict(tgrid),
                   dict(output), seed, schema)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<json>", f"malformed JSON at line {exc.lineno} column {exc.colno}")
        return cls.from_dict(data)


# ------------------------------------------------------------ reports

class FitReport(NamedTuple):
    """Log-log fit with its usable range.

    ``points`` holds the ``(x, y)`` pairs that entered the fit and nothing
    else; ``inconclusive`` is set when the range spans fewer than
    ``MIN_DECADES`` decades.
    """
    slope: float
    intercept: float
    stderr: float
    fit_range: tuple
    expected: float
    points: np.ndarray
    inconclusive: bool


class ThresholdReport(NamedTuple):
    """Ring-mass growth exponents over an ``alpha`` scan.

    ``crossing`` is the zero of the linear fit of ``exponents`` against
    ``alphas``; ``predicted`` the threshold from :func:`critical_alpha` and
    ``expected`` the crossing predicted for the test data actually used.
    """
    alphas: np.ndarray
    exponents: np.ndarray
    stderrs: np.ndarray
    crossing: float
    predicted: float
    expected: float
    fit_range: tuple
    inconclusive: bool

    @property
    def growth(self):
        """Growth exponent of the truncated integral: ``max(0, exponent)``."""
        return np.maximum(self.exponents, 0.0)


class ConstantReport(NamedTuple):
    """Measured constant per block: ``rows`` are ``(j, t, sup, random_max)``."""
    rows: np.ndarray
    spread: float
    truncated: tuple


# ------------------------------------------------------------ predictions

def critical_alpha(d, p):
    """Necessary smoothness for ``G_alpha`` on ``L^p``.

    ``d(1/p - 1/2) + 1/2`` for ``1 < p < 2`` and ``d(1/2 - 1/p)`` for ``p > 2``.
    """
    if p <= 1 or p == 2:
        raise ValueError("p must lie in (1, 2) or (2, inf)")
    if p < 2:
        return d * (1.0 / p - 0.5) + 0.5
    return d * (0.5 - 1.0 / p)


def kernel_decay_exponent(d, alpha):
    """Radial decay power of ``K_t^alpha * eta``: ``-((d-1)/2 + alpha)``."""
    return -((d - 1) / 2.0 + alpha)


def ring_growth_exponent(d, p, decay):
    """Exponent of ``int_{R<|x|<2R} |x|^(p decay) dx`` in ``R``."""
    return d + p * decay


# ------------------------------------------------------------ kernel family

def _k_alpha_matrix(alpha, rho, t):
    u = rho[:, None] / t[None, :]
    inside = u < 1.0
    base = np.where(inside, 1.0 - u * u, 1.0)
    return np.where(inside, alpha * u * u * np.power(base, alpha - 1.0), 0.0)


def _t_rule(nodes):
    """Composite Gauss-Legendre rule on ``[1, 2]``, 16 nodes per panel."""
    if nodes % 16:
        raise ValueError("t_nodes must be a multiple of 16")
    x, w = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(1.0, 2.0, nodes // 16 + 1)
    half = 0.5 * np.diff(edges)
    t = ((edges[:-1] + half)[:, None] + half[:, None] * x[None, :]).ravel()
    return t, (half[:, None] * w[None, :]).ravel()


def cusp_rule(kappa, center=1.5, nodes=128):
    """Nodes and weights for ``int_1^2 g(t) |t - center|^-kappa dt``.

    Gauss-Jacobi on each side of the cusp; ``nodes`` per side.
    """
    if not 0 <= kappa < 0.5:
        raise ValueError("kappa must lie in [0, 1/2) for b to be square integrable")
    if not 1 < center < 2:
        raise ValueError("center must lie inside (1, 2)")
    x, w = roots_jacobi(nodes, -kappa, 0.0)
    ts, ws = [], []
    for h, sign in ((center - 1.0, -1.0), (2.0 - center, 1.0)):
        # |t - center| = h (1 - x) / 2
        ts.append(center + sign * h * (1.0 - x) / 2.0)
        ws.append(w * (h / 2.0) ** (1.0 - kappa))
    t, wt = np.concatenate(ts), np.concatenate(ws)
    order = np.argsort(t)
    return t[order], wt[order]


def kernel_profiles(d, alphas, t, r, t_weights=None, square=True, levels=4, chunk=256):
    """Values of ``K_t^alpha * eta`` at radii ``r`` for each ``alpha``.

    ``eta^`` is a smooth radial bump on ``(1/2, 3)``.  One frequency rule
    is shared by all ``t`` nodes: breakpoints at every ``t`` with graded
    panels on both sides, since the symbol is singular at ``|xi| = t`` for
    ``alpha < 1``.  With ``square`` the result is
    ``(sum_k w_k |K_{t_k}^alpha * eta|^2)^(1/2)``; otherwise the linear
    combination ``sum_k w_k K_{t_k}^alpha * eta`` (``w`` may be complex).

    Returns an array of shape ``(len(alphas), len(r))``.
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    wt = np.asarray(t_weights if t_weights is not None else np.full(t.size, 1.0 / t.size))
    a, b = ETA_SUPPORT
    rho, w = panel_rule(a, b, math.pi / r.max(), 8, breakpoints=t, singular=t,
                        levels=levels)
    eta = bump_profile(a, b)(rho) * CONVENTION.inverse_prefactor(d)
    mats = []
    for alpha in alphas:
        s = _k_alpha_matrix(alpha, rho, t) * eta[:, None]
        mats.append(s if square else s @ wt)
    out = np.zeros((len(alphas), r.size), dtype=float if square else complex)
    for i in range(0, r.size, chunk):
        blk = hankel_matrix(d, r[i:i + chunk], rho, w)
        for k, s in enumerate(mats):
            v = blk @ s
            out[k, i:i + chunk] = np.sqrt((v * v) @ wt) if square else v
    return out


def _radii(cfg, r_max_default, n_default):
    n = cfg.grid.get("n", n_default)
    r_max = cfg.grid.get("L", r_max_default)
    return r_max * np.arange(1, n + 1) / n


def _half_dyadic(lo, hi):
    k = int(math.floor(2 * math.log2(hi / lo) + 1e-9))
    return lo * 2.0 ** (0.5 * np.arange(k + 1))


def _ring_means(r, values, lo, hi):
    """``(geometric centre, L2 mean)`` over half-dyadic rings of ``[lo, hi]``."""
    e = _half_dyadic(lo, hi)
    pts = []
    for a, b in zip(e[:-1], e[1:]):
        sel = (r >= a) & (r < b)
        if np.any(sel):
            pts.append((math.sqrt(a * b), math.sqrt(float(np.mean(values[sel] ** 2)))))
    return np.array(pts), (float(e[0]), float(e[-1]))


def _ring_masses(d, r, values, p, lo, hi):
    """``(inner radius, int_ring |v|^p dx)`` over half-dyadic rings of ``[lo, hi]``."""
    dr = float(r[1] - r[0])
    e = _half_dyadic(lo, hi)
    area = surface_area(d)
    pts = []
    for a, b in zip(e[:-1], e[1:]):
        sel = (r >= a) & (r < b)
        if np.any(sel):
            pts.append((a, area * float(np.sum(np.abs(values[sel]) ** p * r[sel] ** (d - 1))) * dr))
    return np.array(pts), (float(e[0]), float(e[-1]))


def _decades(rng):
    return math.log10(rng[1] / rng[0])


def _fit(points, rng, expected):
    pts = np.asarray(points)
    keep = pts[:, 1] > 0
    pts = pts[keep]
    if pts.shape[0] < 3:
        return FitReport(math.nan, math.nan, math.inf, rng, expected, pts, True)
    f = loglog_fit(pts)
    return FitReport(f.slope, f.intercept, f.stderr, rng, expected, pts,
                     _decades(rng) < MIN_DECADES - 1e-9)


# ------------------------------------------------------------ kernel decay

def kernel_decay_experiment(cfg):
    """Radial decay of ``(int_1^2 |K_t^alpha * eta|^2 dt)^(1/2)``.

    ``grid.L`` is the outer radius and ``grid.n`` the number of radial
    samples.  Parameters: ``alpha`` (1.0), ``r_min`` (8.0), ``t_nodes``
    (128).  The L2 means over half-dyadic rings of ``[r_min, L]`` are
    fitted; the expected slope is ``-((d-1)/2 + alpha)``.
    """
    alpha = float(cfg.param("alpha", 1.0))
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    d = cfg.d
    if d < 2:
        raise ValueError("kernel experiments need d >= 2")
    r = _radii(cfg, 256.0, 1024)
    t, wt = _t_rule(int(cfg.param("t_nodes", 128)))
    g = kernel_profiles(d, [alpha], t, r, wt)[0]
    pts, rng = _ring_means(r, g, float(cfg.param("r_min", 8.0)), float(r[-1]))
    return _fit(pts, rng, kernel_decay_exponent(d, alpha))


def _threshold(alphas, exps, errs, predicted, expected, rng):
    slope, icpt = np.polyfit(alphas, exps, 1)
    crossing = -icpt / slope if slope != 0 else math.nan
    bad = _decades(rng) < MIN_DECADES - 1e-9 or not np.isfinite(crossing)
    return ThresholdReport(np.asarray(alphas, dtype=float), np.asarray(exps), np.asarray(errs),
                           float(crossing), predicted, expected, rng, bool(bad))


def _scan(cfg, default):
    alphas = cfg.param("alphas", default)
    if not isinstance(alphas, (list, tuple)) or len(alphas) < 2:
        raise ValueError("alphas must list at least two values")
    return [float(a) for a in alphas]


def necessity_probe(cfg):
    """Growth in ``R`` of ``int_{|x| <= R} G^p dx`` with
    ``G = (int_1^2 |K_t^alpha * eta|^2 dt)^(1/2)``, for ``1 < p < 2``.

    The exponent is read off the masses of half-dyadic rings in
    ``[r_min, L]``; the truncated integral grows like ``R^max(0, e)``.
    Parameters: ``p`` (4/3), ``alphas`` (0.5 .. 1.5), ``r_min`` (8.0),
    ``t_nodes`` (128).
    """
    p = float(cfg.param("p", 4.0 / 3.0))
    if not 1 < p < 2:
        raise ValueError("necessity_probe needs 1 < p < 2")
    d = cfg.d
    if d < 2:
        raise ValueError("kernel experiments need d >= 2")
    alphas = _scan(cfg, [0.5 + 0.1 * k for k in range(11)])
    r = _radii(cfg, 256.0, 1024)
    t, wt = _t_rule(int(cfg.param("t_nodes", 128)))
    prof = kernel_profiles(d, alphas, t, r, wt)
    lo = float(cfg.param("r_min", 8.0))
    exps, errs = [], []
    for g in prof:
        pts, rng = _ring_masses(d, r, g, p, lo, float(r[-1]))
        f = loglog_fit(pts)
        exps.append(f.slope)
        errs.append(f.stderr)
    pred = critical_alpha(d, p)
    return _threshold(alphas, exps, errs, pred, pred, rng)


@lru_cache(maxsize=None)
def _jacobi(n, right, left):
    return roots_jacobi(n, right, left)


def duality_symbol(alpha, rho, kappa=0.48, center=1.5, omega=0.0, nodes=16):
    """``m(rho) = int_1^2 b(t) K_t^alpha^(rho) dt`` with ``b = |t - center|^-kappa e^(i omega t)``.

    The ``t`` integral is done per ``rho`` with exact Gauss-Jacobi weights
    at ``t = rho`` and at the cusp, and geometric panels towards singular
    points just outside a panel.  Integrating in ``t`` first leaves a
    symbol singular only at ``rho`` in ``{1, center, 2}``.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    out = np.zeros(rho.size, dtype=complex)
    for i, r in enumerate(rho):
        a0 = max(1.0, r)
        if a0 >= 2.0:
            continue
        cuts = sorted({a0, 2.0, *([center] if a0 < center < 2.0 else [])})
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            la = (alpha - 1.0 if a == r else 0.0) + (-kappa if a == center else 0.0)
            lb = -kappa if b == center else 0.0
            if la <= -1.0:
                # rho == center with alpha <= kappa: integrable blow-up of m
                total = math.inf
                break
            near = [a - s for s in (r, center) if s < a]
            gap = min(near) if near else math.inf
            # offsets from a; distances below are formed from offsets so
            # that nodes a few ulps from a singular point keep full accuracy
            offs = [0.0]
            k = 1
            while gap < b - a and gap * (2 ** k - 1) < b - a:
                offs.append(gap * (2 ** k - 1))
                k += 1
            offs.append(b - a)
            for j, (p_, q_) in enumerate(zip(offs[:-1], offs[1:])):
                lp = la if j == 0 else 0.0
                lq = lb if j == len(offs) - 2 else 0.0
                x, w = _jacobi(nodes, lq, lp)
                h = q_ - p_
                s = p_ + h * (1.0 + x) / 2.0
                tt = a + s
                to_r = (a - r) + s
                to_c = np.abs((a - center) + s)
                f = (alpha * r * r * (tt + r) ** (alpha - 1.0) * tt ** (-2.0 * alpha)
                     * np.exp(1j * omega * tt))
                # singular factors with the exact weight divided out
                sing = to_r ** (alpha - 1.0) * to_c ** (-kappa)
                if lp:
                    sing = sing / (h * (1.0 + x) / 2.0) ** lp
                if lq:
                    sing = sing / (h * (1.0 - x) / 2.0) ** lq
                total += (h / 2.0) ** (1.0 + lp + lq) * np.sum(w * f * sing)
        out[i] = total
    return out


def duality_probe(cfg):
    """Growth in ``R`` of ``int_{|x| <= R} |int_1^2 b(t) K_t^alpha * eta dt|^p' dx``, ``p > 2``.

    ``b(t) = |t - center|^-kappa e^(i omega t)``; ``kappa = 0`` gives the
    smooth case.  The transform of ``b`` decays like ``|x|^(kappa - 1)``,
    so the crossing for this ``b`` sits ``1/2 - kappa`` below the
    threshold ``d(1/2 - 1/p)``, which is approached as ``kappa -> 1/2``.
    Rings start at ``max(r_min, 4 |omega|)`` where the shift of the
    transform of ``b`` by ``omega`` is negligible.  Parameters: ``p`` (6),
    ``alphas`` (0.3 .. 1.0), ``kappa`` (0.48), ``center`` (1.5),
    ``omega`` (0), ``r_min`` (16).  The outer radius is raised beyond
    ``grid.L`` when needed to keep ``MIN_DECADES`` of rings.
    """
    p = float(cfg.param("p", 6.0))
    if not p > 2:
        raise ValueError("duality_probe needs p > 2")
    d = cfg.d
    if d < 2:
        raise ValueError("kernel experiments need d >= 2")
    alphas = _scan(cfg, [0.3 + 0.1 * k for k in range(8)])
    kappa = float(cfg.param("kappa", 0.48))
    if not 0 <= kappa < 0.5:
        raise ValueError("kappa must lie in [0, 1/2) for b to be square integrable")
    center = float(cfg.param("center", 1.5))
    if not 1 < center < 2:
        raise ValueError("center must lie inside (1, 2)")
    omega = float(cfg.param("omega", 0.0))
    lo = max(float(cfg.param("r_min", 16.0)), 4.0 * abs(omega))
    r = _radii(cfg, 512.0, 1024)
    dr = float(r[1] - r[0])
    # ten half-dyadic rings span 1.5 decades
    top = max(float(r[-1]), 32.0 * lo)
    r = dr * np.arange(1, int(math.ceil(top / dr)) + 1)
    a, b = ETA_SUPPORT
    # 16 levels keep the innermost panel well above rounding near the cusp
    rho, w = panel_rule(a, b, math.pi / r.max(), 8, singular=(1.0, center, 2.0), levels=16)
    eta = bump_profile(a, b)(rho) * CONVENTION.inverse_prefactor(d)
    syms = [duality_symbol(al, rho, kappa, center, omega) * eta for al in alphas]
    prof = np.zeros((len(alphas), r.size), dtype=complex)
    for i in range(0, r.size, 256):
        blk = hankel_matrix(d, r[i:i + 256], rho, w)
        for k, s in enumerate(syms):
            prof[k, i:i + 256] = blk @ s
    q = p / (p - 1.0)
    exps, errs = [], []
    for h in prof:
        pts, rng = _ring_masses(d, r, h, q, lo, float(r[-1]))
        f = loglog_fit(pts)
        exps.append(f.slope)
        errs.append(f.stderr)
    pred = critical_alpha(d, p)
    return _threshold(alphas, exps, errs, pred, pred - (0.5 - kappa), rng)


# ------------------------------------------------------------ orthogonality

def _unit_bump_hat(d, radius=0.5, power=2):
    """Transform of the unit-mass radial bump ``c (1 - |y/radius|^2)_+^power``."""
    top = script_j_alpha(d, power + 1.0, 0.0)
    return lambda rho: script_j_alpha(d, power + 1.0, radius * np.asarray(rho)) / top


def _psi_band(psi, weight=lambda rho: 1.0, tol=1e-14):
    """Frequency interval outside which ``|u|^2 weight`` is below ``tol`` of its peak."""
    grid = np.linspace(1e-3, 40 * psi.peak_frequency, 40001)
    v = psi.u(grid) ** 2 * weight(grid)
    live = grid[v > tol * v.max()]
    return float(live[0]), float(live[-1])


def orthogonality_kernel(d, separation, r_center, t1=1.0, t2=1.0, half_width=0.5,
                         psi=None, bump_radius=0.5):
    """Bilinear form of the separation estimate for two point-like unit masses.

    ``f_i(r, y) = g_i(r) beta(y - y_i)`` with ``beta`` a unit-mass bump of
    radius ``bump_radius`` and ``|y_1 - y_2| = separation``; ``g_i`` lives
    on ``J = [r_center - half_width, r_center + half_width]``.  In polar
    coordinates the double ``r`` integral of the inner product is
    ``int int g_1(r_1) g_2(r_2) K(r_1, r_2) dr_1 dr_2`` with
    ``K = (2 pi)^-d int |u|^2 |beta^|^2 (r_1 t_1)^(d-1) J(r_1 t_1 rho)
    (r_2 t_2)^(d-1) J(r_2 t_2 rho) J(rho |y_1 - y_2|) rho^(d-1) d rho``.

    Returns ``(r, w, A)``: Gauss nodes and weights on ``J`` and the matrix
    ``A = D^-1/2 W K W D^-1/2`` with ``D = w r^(d-1)``, so that the
    estimate's ratio for ``g`` is ``|h_1^T A h_2| / (|h_1| |h_2|)`` with
    ``h = sqrt(D) g``.
    """
    if d < 2:
        raise ValueError("the separation estimate needs d >= 2")
    psi = psi or PsiSpec(d, 1.0)
    lo = r_center - half_width
    if lo <= 0:
        raise ValueError("J must stay inside (0, inf)")
    bh = _unit_bump_hat(d, bump_radius)
    band = _psi_band(psi, lambda rho: bh(rho) ** 2 * rho ** (d - 1))
    r, wr = panel_rule(lo, r_center + half_width, math.pi / (band[1] * max(t1, t2)), 8)
    omega = 2.0 * (r_center + half_width) * max(t1, t2) + separation
    rho, w = panel_rule(band[0], band[1], math.pi / omega, 8)
    weight = (w * psi.u(rho) ** 2 * bh(rho) ** 2 * script_j(d, rho * separation)
              * rho ** (d - 1) * CONVENTION.inverse_prefactor(d))
    k = np.zeros((r.size, r.size))
    step = 20000
    for i in range(0, rho.size, step):
        sl = slice(i, i + step)
        v1 = (r[:, None] * t1) ** (d - 1) * script_j(d, np.outer(r * t1, rho[sl]))
        v2 = v1 if t2 == t1 else (r[:, None] * t2) ** (d - 1) * script_j(d, np.outer(r * t2, rho[sl]))
        k += (v1 * weight[sl]) @ v2.T
    # the r integrals carry the quadrature weights w_r on both sides
    s = np.sqrt(wr / r ** (d - 1))
    return r, wr, s[:, None] * k * s[None, :]


def orthogonality_decay(cfg):
    """Best constant of the separation estimate as a function of ``M``.

    For each ``M`` the supports are two unit-mass bumps at distance ``M``
    (centres ``M + 2 bump_radius`` apart) and ``J_1 = J_2`` is centred at
    half the centre distance, where the two spheres can touch.  The
    constant is the largest singular value of the bilinear form, i.e. the
    maximum over all ``g_1, g_2`` of the estimate's ratio.  Parameters:
    ``M`` (8 .. 128, nine geometric steps), ``t1``, ``t2`` (1.0),
    ``half_width`` (0.5), ``psi_radius`` (1.0).  ``M`` above a quarter of
    ``grid.L`` is excluded.
    """
    d = cfg.d
    ms = cfg.param("M", [float(x) for x in np.geomspace(8.0, 128.0, 9)])
    ms = [float(m) for m in ms]
    cap = cfg.grid.get("L", 1024.0) / 4.0
    ms = [m for m in ms if 1.0 <= m <= cap]
    psi = PsiSpec(d, float(cfg.param("psi_radius", 1.0)))
    t1, t2 = float(cfg.param("t1", 1.0)), float(cfg.param("t2", 1.0))
    hw = float(cfg.param("half_width", 0.5))
    vals = []
    for m in ms:
        sep = m + 1.0
        a = orthogonality_kernel(d, sep, sep / 2.0, t1, t2, hw, psi)[2]
        vals.append(float(np.linalg.svd(a, compute_uv=False)[0]))
    pts = np.column_stack([ms, vals]) if ms else np.zeros((0, 2))
    rng = (ms[0], ms[-1]) if ms else (1.0, 1.0)
    rep = _fit(pts, rng, -(d - 1) / 2.0)
    # M spans a fixed range; the decades rule is for radial rings
    return rep._replace(inconclusive=len(ms) < 3)


# ------------------------------------------------------------ Plancherel step

_HANKEL_TERMS = 8


class _AnnulusOperator:
    """``F -> int_{I_j} r^(d-1) J(r omega) F(r) dr`` on a uniform ``omega`` grid.

    ``F`` is sampled at ``r_n = 2^j + n delta`` and integrated with the
    trapezoid rule.  ``J`` is replaced by Hankel's expansion with
    ``_HANKEL_TERMS`` terms (exact for odd ``d``; for even ``d`` the first
    omitted term is below 1e-9 once ``r omega >= 32``), which turns every
    term into one FFT of ``F(r) r^((d-1)/2 - k)``.
    """

    def __init__(self, d, j, delta, band, t_max):
        self.d = d
        r0 = 2.0 ** j
        n = int(round(r0 / delta)) + 1
        self.n = n
        self.tau = np.full(n, delta)
        self.tau[0] = self.tau[-1] = 0.5 * delta
        self.r = r0 + delta * np.arange(n)
        self.size = 1 << int(math.ceil(math.log2(4 * n)))
        om = 2 * math.pi * np.arange(self.size) / (self.size * delta)
        if band[1] * t_max >= math.pi / delta:
            raise ValueError("delta too coarse for the frequency band")
        self.keep = np.nonzero((om >= band[0]) & (om <= band[1] * t_max))[0]
        w = om[self.keep]
        self.omega = w
        self.domega = float(om[1])
        nu = (d - 2) / 2.0
        mu = 4 * nu * nu
        a = [1.0]
        for k in range(1, _HANKEL_TERMS):
            a.append(a[-1] * (mu - (2 * k - 1) ** 2) / (8.0 * k))
        theta = (0.5 * nu + 0.25) * math.pi
        c = sphere_constant(d) * math.sqrt(2.0 / math.pi)
        phase = np.exp(1j * (r0 * w - theta))
        self.coef = [c * 1j ** k * a[k] * w ** (-nu - 0.5 - k) * phase for k in range(_HANKEL_TERMS)]
        self.powers = [self.r ** ((d - 1) / 2.0 - k) for k in range(_HANKEL_TERMS)]
        self.mass = self.tau * self.r ** (d - 1)

    def forward(self, f):
        out = np.zeros(self.keep.size)
        for c, pw in zip(self.coef, self.powers):
            z = np.fft.ifft(self.tau * f * pw, n=self.size)[self.keep] * self.size
            out += np.real(c * z)
        return out

    def adjoint(self, y):
        out = np.zeros(self.n)
        z = np.zeros(self.size, dtype=complex)
        for c, pw in zip(self.coef, self.powers):
            z[:] = 0.0
            z[self.keep] = c * y
            out += self.tau * pw * np.real(np.fft.ifft(z) * self.size)[:self.n]
        return out

    def weight(self, psi, t, expo):
        rho = self.omega / t
        return psi.u(rho) ** 2 * rho ** expo * self.domega / t


def _plancherel_band(d, psi):
    p = 2.0 * (d + 1) / (d + 3)
    expo = 2.0 * d / p - d - 1
    return expo, _psi_band(psi, lambda rho: rho ** expo, tol=1e-9)


def _auto_delta(d, psi, t_max):
    """Largest ``2^-k`` whose Nyquist frequency clears the band by 10%."""
    hi = _plancherel_band(d, psi)[1][1] * t_max
    return 2.0 ** -math.ceil(math.log2(1.1 * hi / math.pi))


def _plancherel_setup(d, j, t_values, psi, delta):
    expo, band = _plancherel_band(d, psi)
    if delta is None:
        delta = _auto_delta(d, psi, 2.0)
    op = _AnnulusOperator(d, j, delta, band, max(t_values))
    weights = [op.weight(psi, t, expo) * ((op.omega >= band[0] * t) & (op.omega <= band[1] * t))
               for t in t_values]
    return op, weights


def plancherel_spacing(d, psi=None, t_max=2.0):
    """Default sample spacing of ``F`` for :func:`plancherel_ratio`."""
    return _auto_delta(d, psi or PsiSpec(d, 1.0), t_max)


def plancherel_ratio(d, j, F, t_values=(1.0,), psi=None, delta=None):
    """LHS/RHS of the fixed-``x`` Plancherel step for samples ``F`` on ``I_j``.

    LHS is ``int |u(rho)|^2 rho^(2d/p - d - 1) |int_{I_j} r^(d-1) J(r t rho) F(r) dr|^2 d rho``
    with ``p = 2(d+1)/(d+3)``, RHS is ``int_{I_j} |F|^2 r^(d-1) dr``.
    ``F`` holds real samples at ``2^j + n delta``, ``n = 0 .. 2^j/delta``;
    ``delta`` defaults to :func:`plancherel_spacing`.
    """
    psi = psi or PsiSpec(d, 1.0)
    op, weights = _plancherel_setup(d, j, t_values, psi, delta)
    F = np.asarray(F, dtype=float)
    if F.shape != (op.n,):
        raise ValueError(f"F must hold {op.n} samples")
    a = op.forward(F)
    rhs = float(np.sum(op.mass * F * F))
    return np.array([float(np.sum(w * a * a)) / rhs for w in weights])


def plancherel_sup(d, j, t, psi=None, delta=None, seed=0, tol=1e-6):
    """Supremum over ``F`` of :func:`plancherel_ratio` (Lanczos, random start)."""
    psi = psi or PsiSpec(d, 1.0)
    op, (w,) = _plancherel_setup(d, j, (t,), psi, delta)
    sd = 1.0 / np.sqrt(op.mass)
    lin = LinearOperator((op.n, op.n), dtype=float,
                         matvec=lambda g: sd * op.adjoint(w * op.forward(sd * np.ravel(g))))
    v0 = np.random.default_rng(seed).standard_normal(op.n)
    return float(eigsh(lin, k=1, which="LA", v0=v0, tol=tol)[0][0])


def _random_profile(rng, n, delta, band):
    z = np.fft.rfft(rng.standard_normal(n))
    z[2 * math.pi * np.fft.rfftfreq(n, delta) > band] = 0.0
    return np.fft.irfft(z, n)


def plancherel_step_check(cfg):
    """Constant of the fixed-``x`` Plancherel step across blocks ``I_j``.

    For each ``j`` and ``t``: the supremum over all ``F`` and the maximum
    over ``draws`` random band-limited ``F`` (seeded).  ``spread`` is the
    max/min of the per-``j`` suprema (maximised over ``t``).  Parameters:
    ``j`` (3 .. 7), ``t`` ([1, 1.5, 2]), ``draws`` (100), ``band`` (400),
    ``psi_radius`` (1.0), ``delta`` (automatic).  Blocks with ``j > 8`` are
    dropped with a warning.
    """
    d = cfg.d
    if d < 2:
        raise ValueError("the Plancherel step needs d >= 2")
    js = [int(x) for x in cfg.param("j", [3, 4, 5, 6, 7])]
    dropped = tuple(x for x in js if x > 8)
    if dropped:
        warnings.warn(f"blocks {dropped} exceed the quadrature resolution; truncated",
                      RuntimeWarning, stacklevel=2)
    js = [x for x in js if x <= 8]
    ts = [float(x) for x in cfg.param("t", [1.0, 1.5, 2.0])]
    if not ts or min(ts) < 1 or max(ts) > 2:
        raise ValueError("t values must lie in [1, 2]")
    draws = int(cfg.param("draws", 100))
    band = float(cfg.param("band", 400.0))
    delta = cfg.param("delta")
    delta = None if delta is None else float(delta)
    psi = PsiSpec(d, float(cfg.param("psi_radius", 1.0)))
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for j in js:
        op, weights = _plancherel_setup(d, j, ts, psi, delta)
        step = float(op.r[1] - op.r[0])
        best = np.zeros(len(ts))
        for _ in range(draws):
            f = _random_profile(rng, op.n, step, band)
            a = op.forward(f)
            rhs = float(np.sum(op.mass * f * f))
            best = np.maximum(best, [float(np.sum(w * a * a)) / rhs for w in weights])
        for k, t in enumerate(ts):
            sup = plancherel_sup(d, j, t, psi, step, seed=cfg.seed + j)
            rows.append((j, t, sup, best[k]))
    rows = np.array(rows)
    per_j = [rows[rows[:, 0] == j, 2].max() for j in js]
    spread = float(max(per_j) / min(per_j)) if per_j else math.nan
    return ConstantReport(rows, spread, dropped)


# ------------------------------------------------------------ sphere cancellation

def sphere_cancellation(d, radii=None, psi=None, samples_per_period=32):
    """Growth of ``sup_xi |F[psi * sigma_r](xi)|`` in ``r``; expected ``(d-1)/2``.

    The supremum over ``|xi|`` is taken on a grid with
    ``samples_per_period`` points per oscillation of ``J(r |xi|)`` and
    polished by a bounded scalar search around the best sample.  The grid
    covers the band where the envelope ``|u(rho)| rho^(-(d-1)/2)`` exceeds
    a third of its peak; elsewhere the envelope stays below values that
    are attained near the peak.
    """
    psi = psi or PsiSpec(d)
    radii = np.geomspace(2.0, 512.0, 17) if radii is None else np.asarray(radii, dtype=float)
    lo, hi = _psi_band(psi, lambda rho: rho ** (1.0 - d), tol=1.0 / 9.0)
    vals = []
    for r in radii:
        m = sphere_symbol(psi, r)
        step = 2 * math.pi / (samples_per_period * r)
        rho = np.arange(lo, hi, step)
        v = np.abs(m(rho))
        i = int(np.argmax(v))
        res = minimize_scalar(lambda x: -abs(float(m(x))), method="bounded",
                              bounds=(rho[max(i - 1, 0)], rho[min(i + 1, rho.size - 1)]))
        vals.append(max(float(v[i]), -float(res.fun)))
    pts = np.column_stack([radii, vals])
    rng = (float(radii[0]), float(radii[-1]))
    return _fit(pts, rng, (d - 1) / 2.0)

"""Command-line surface: ``rieszlab <subcommand> --config run.json [--plot out.svg]``.

Every subcommand reads one JSON config (schema in ``docs/config_schema.md``),
runs one experiment and writes one CSV.  A CSV holds a header row and the
data rows, followed by summary rows of the form ``name,value[,expected]``.
Floats are written with ``repr`` so reruns can be compared byte for byte.

Exit codes: 0 ok, 2 config error, 3 numerical-validity flag raised,
64 usage error.
"""
import argparse
import csv
import math
import os
import sys

import numpy as np

from . import experiments as ex
from .besov import (TestMultiplierSpec, besov_blocks, besov_norm, localized_riesz,
                    test_multiplier)
from .experiments import ConfigError, ExperimentConfig
from .grids import GridField, RadialProfile, TGrid
from .maximal import hl_maximal, m_maximal, riesz_maximal
from .multipliers import MultiplierSpec
from .special import bessel_j
from .square import equivalence_probe, g_alpha
from .transforms import radial_fourier
from .whitney import decompose, random_bandlimited

EXIT_OK, EXIT_CONFIG, EXIT_FLAG, EXIT_USAGE = 0, 2, 3, 64


class Table:
    """CSV payload: header, rows, summary rows and an optional plot series."""

    def __init__(self, header):
        self.header = list(header)
        self.rows = []
        self.summary = []
        self.series = []            # (label, x, y) for the SVG
        self.axes = ("x", "y")
        self.flags = []             # reasons for exit code 3

    def add(self, *row):
        self.rows.append(row)

    def note(self, name, value, expected=None):
        self.summary.append((name, value) if expected is None else (name, value, expected))

    def flag(self, reason):
        self.flags.append(reason)


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, table):
    """Write ``table`` with LF line endings."""
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(table.header)
        for row in table.rows:
            wr.writerow([_cell(v) for v in row])
        for row in table.summary:
            wr.writerow([_cell(v) for v in row])


def write_svg(path, series, axes=("x", "y"), width=640, height=420):
    """Polyline chart with log axes; nonpositive points are skipped."""
    pad = 60
    clean = []
    for label, x, y in series:
        x = np.asarray(x, dtype=float)
        y = np.abs(np.asarray(y, dtype=float))
        ok = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
        if np.count_nonzero(ok) >= 2:
            clean.append((label, np.log10(x[ok]), np.log10(y[ok])))
    if not clean:
        raise ValueError("nothing to plot on log axes")
    xs = np.concatenate([c[1] for c in clean])
    ys = np.concatenate([c[2] for c in clean])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def px(u):
        return pad + (u - x0) / (x1 - x0) * (width - 2 * pad)

    def py(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    colours = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
           'fill="none" stroke="black"/>']
    for k in range(math.floor(x0), math.ceil(x1) + 1):
        if x0 <= k <= x1:
            out.append(f'<text x="{px(k):.2f}" y="{height - pad + 18}" font-size="11" '
                       f'text-anchor="middle">1e{k}</text>')
    for k in range(math.floor(y0), math.ceil(y1) + 1):
        if y0 <= k <= y1:
            out.append(f'<text x="{pad - 6}" y="{py(k):.2f}" font-size="11" '
                       f'text-anchor="end">1e{k}</text>')
    out.append(f'<text x="{width / 2}" y="{height - 12}" font-size="12" '
               f'text-anchor="middle">{axes[0]} (log)</text>')
    out.append(f'<text x="14" y="{height / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {height / 2})">{axes[1]} (log)</text>')
    for i, (label, u, v) in enumerate(clean):
        c = colours[i % len(colours)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(u, v))
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{width - pad - 4}" y="{pad + 16 + 14 * i}" font-size="11" '
                   f'text-anchor="end" fill="{c}">{label}</text>')
    out.append("</svg>")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


# ------------------------------------------------------------ inputs

def _tgrid(cfg):
    return TGrid(**cfg.tgrid) if cfg.tgrid else None


def _grid_input(cfg, name):
    d = cfg.d
    if d not in (1, 2):
        raise ConfigError("d", "grid experiments need d in {1, 2}")
    n, ext = cfg.grid["n"], cfg.grid["L"]
    if n & (n - 1):
        raise ConfigError("grid.n", "must be a power of two for grid experiments")
    if name == "modulated_gaussian":
        func = lambda *x: np.exp(-sum(c * c for c in x) / 8.0) * np.cos(2.0 * x[0])
    elif name == "gaussian":
        func = lambda *x: np.exp(-sum(c * c for c in x) / 2.0)
    elif name == "random":
        return random_bandlimited(cfg.seed, dim=d, n=n, extent=ext)
    else:
        raise ConfigError("params.input", f"unknown input {name!r}")
    return GridField.from_function(func, dim=d, n=n, extent=ext)


def _radial_input(cfg, name):
    d = cfg.d
    n, top = cfg.grid["n"], cfg.grid["L"]
    r = np.geomspace(1e-3, top, n)
    if name == "gaussian":
        v = np.exp(-r ** 2 / 2.0)
    elif name == "ring":
        v = np.exp(-r ** 2 / 50.0) * np.cos(2.0 * r)
    else:
        raise ConfigError("params.input", f"unknown input {name!r}")
    return RadialProfile(d, r, v)


def _grid_rows(table, f, values, stride):
    coords = f.coords()
    sl = tuple(slice(None, None, stride) for _ in range(f.dim))
    cols = [c[sl].ravel() for c in coords] + [np.asarray(v)[sl].ravel() for v in values]
    for row in zip(*cols):
        table.add(*row)


def _stride(cfg, n):
    s = cfg.param("stride", max(1, n // 64))
    if isinstance(s, bool) or not isinstance(s, int) or s < 1:
        raise ConfigError("params.stride", "must be a positive integer")
    return s


# ------------------------------------------------------------ subcommands

def run_bessel_table(cfg):
    """``J_nu(s)`` on ``n`` points of ``(0, L]`` for each order in ``nu``."""
    from scipy.special import jv
    nus = cfg.param("nu", [0.0, 0.5, 1.0])
    nus = [float(v) for v in (nus if isinstance(nus, list) else [nus])]
    n, top = cfg.grid["n"], cfg.grid["L"]
    s = top * np.arange(1, n + 1) / n
    t = Table(["s", "nu", "J_nu"])
    worst = 0.0
    for nu in nus:
        v = bessel_j(nu, s)
        for a, b in zip(s, v):
            t.add(a, nu, b)
        worst = max(worst, float(np.max(np.abs(v - jv(nu, s)))))
        t.series.append((f"nu={nu}", s, v))
    t.axes = ("s", "|J_nu(s)|")
    t.note("max_abs_diff_scipy", worst)
    if worst > 1e-10:
        t.flag("Bessel values disagree with the scipy reference")
    return t


def run_transform(cfg):
    """Radial Fourier transform of a Gaussian or ring profile."""
    name = cfg.param("input", "gaussian")
    f = _radial_input(cfg, name)
    rho = np.geomspace(float(cfg.param("rho_min", 0.05)), float(cfg.param("rho_max", 8.0)),
                       int(cfg.param("count", 64)))
    out = radial_fourier(f, rho)
    t = Table(["rho", "re", "im", "reliable"])
    for a, v, ok in zip(rho, out.values, out.reliable):
        t.add(a, v.real, v.imag, bool(ok))
    t.series.append((name, rho, np.abs(out.values)))
    t.axes = ("rho", "|f^(rho)|")
    if name == "gaussian":
        exact = (2 * math.pi) ** (cfg.d / 2.0) * np.exp(-rho ** 2 / 2.0)
        t.note("max_abs_err_gaussian", float(np.max(np.abs(out.values - exact))))
    if not np.all(out.reliable):
        t.flag("some output frequencies exceed the sampling resolution")
    return t


def run_squarefn(cfg):
    """``G_alpha f`` on a grid with the L2 ratio against ``alpha / (4(2 alpha - 1))``."""
    alpha = float(cfg.param("alpha", 1.0))
    f = _grid_input(cfg, cfg.param("input", "modulated_gaussian"))
    res = g_alpha(f, alpha, _tgrid(cfg), cfg.param("scheme", "cell"))
    g = np.abs(res.field.values)
    names = ["x1", "x2"][:f.dim] + ["G_alpha"]
    t = Table(names)
    _grid_rows(t, f, [g], _stride(cfg, f.n))
    ratio = float(np.sum(g * g) / np.sum(np.abs(f.values) ** 2))
    t.note("l2_ratio", ratio, alpha / (4.0 * (2.0 * alpha - 1.0)))
    t.note("coverage", res.coverage)
    x = f.axis()
    mid = g if f.dim == 1 else g[f.n // 2]
    t.series.append(("G_alpha", x[x > 0], mid[x > 0]))
    t.axes = ("x1", "G_alpha")
    if not res.convergence_flag:
        t.flag("t-grid misses part of the L2 mass")
    return t


def run_equiv_probe(cfg):
    """Ratio ``G_alpha f / script G_beta f`` on radial inputs."""
    alpha = float(cfg.param("alpha", 1.0))
    f = _radial_input(cfg, cfg.param("input", "gaussian"))
    radii = np.geomspace(float(cfg.param("r_min", 0.1)), float(cfg.param("r_max", 40.0)),
                         int(cfg.param("count", 300)))
    res = equivalence_probe(f, alpha, float(cfg.param("floor", 1e-2)), _tgrid(cfg),
                            cfg.param("scheme", "cell"), radii)
    t = Table(["r", "ratio"])
    for a, v in zip(radii, res.ratio):
        t.add(a, float(v))
    t.note("ratio_min", res.ratio_min)
    t.note("ratio_max", res.ratio_max)
    t.note("spread", res.spread)
    t.series.append(("ratio", radii[res.mask], res.ratio[res.mask]))
    t.axes = ("r", "G_alpha / G_beta")
    return t


def run_maximal(cfg):
    """Hardy-Littlewood, ``M_m`` or Bochner-Riesz maximal function on a grid."""
    kind = cfg.param("kind", "hl")
    f = _grid_input(cfg, cfg.param("input", "gaussian"))
    if kind == "hl":
        field_ = hl_maximal(f, cfg.param("radii", "dyadic"))
        ok, gain = True, 0.0
    elif kind == "riesz":
        res = riesz_maximal(f, float(cfg.param("lam", 0.5)), _tgrid(cfg))
        field_, ok, gain = res.field, res.monotone_flag, res.refinement_gain
    elif kind == "bump":
        res = m_maximal(f, MultiplierSpec.bump(0.5, 2.0), _tgrid(cfg))
        field_, ok, gain = res.field, res.monotone_flag, res.refinement_gain
    else:
        raise ConfigError("params.kind", f"unknown maximal function {kind!r}")
    t = Table(["x1", "x2"][:f.dim] + ["f", "Mf"])
    _grid_rows(t, f, [np.abs(f.values), np.abs(field_.values)], _stride(cfg, f.n))
    t.note("refinement_gain", gain)
    t.note("max_ratio_Mf_f", float(np.abs(field_.values).max() / np.abs(f.values).max()))
    x = f.axis()
    mid = np.abs(field_.values) if f.dim == 1 else np.abs(field_.values)[f.n // 2]
    t.series.append((kind, x[x > 0], mid[x > 0]))
    t.axes = ("x1", "Mf")
    if not ok:
        t.flag("refined t-grid lowered the supremum")
    return t


def run_besov_norm(cfg):
    """Block norms and Besov norm of a localized Bochner-Riesz profile on the line."""
    lam = float(cfg.param("lam", 0.5))
    alpha = float(cfg.param("alpha", 1.0))
    q = float(cfg.param("q", 2.0))
    j_max = cfg.param("j_max")
    m = localized_riesz(lam)
    b = besov_blocks(m, j_max)
    t = Table(["j", "block_norm"])
    for j, v in zip(b.j, b.norms):
        t.add(int(j), float(v))
    t.note("besov_norm", besov_norm(m, alpha, q, j_max))
    t.series.append(("blocks", b.j + 1.0, b.norms))
    t.axes = ("j + 1", "||Delta_j m||")
    return t


def run_test_multiplier(cfg):
    """Besov blocks of the test multiplier at the critical smoothness."""
    p = float(cfg.param("p", 4.0 / 3.0))
    coeffs = cfg.param("coefficients", [1.0] * 5)
    q = float(cfg.param("q", 2.0))
    spec = TestMultiplierSpec(p, tuple(coeffs), cfg.d)
    prof = test_multiplier(spec)
    b = besov_blocks(prof, cfg.param("j_max"))
    t = Table(["j", "block_norm"])
    for j, v in zip(b.j, b.norms):
        t.add(int(j), float(v))
    t.note("alpha", spec.alpha)
    t.note("besov_norm", besov_norm(prof, spec.alpha, q, cfg.param("j_max")))
    t.note("coefficient_norm", float(np.linalg.norm(spec.coefficients, q)))
    t.series.append(("blocks", b.j + 1.0, b.norms))
    t.axes = ("j + 1", "||Delta_j m||")
    return t


def run_atoms(cfg):
    """Whitney decomposition of a seeded band-limited input and the atom estimate."""
    if cfg.d != 1:
        raise ConfigError("d", "atoms runs in d = 1")
    f = _grid_input(cfg, cfg.param("input", "random"))
    dec = decompose(f)
    bound = float(cfg.param("bound", 16.0))
    t = Table(["n", "atom_energy", "measure", "ratio", "star_ratio"])
    rows = dec.report()
    for row in rows:
        t.add(*row)
    worst = max((r[3] for r in rows), default=0.0)
    t.note("max_ratio", worst, bound)
    t.note("orphans", dec.orphans)
    if "dir" in cfg.output:
        os.makedirs(cfg.output["dir"], exist_ok=True)
        dec.write_csv(cfg.output["dir"])
    if rows:
        arr = np.array(rows)
        t.series.append(("ratio", 2.0 ** arr[:, 0], arr[:, 3]))
    t.axes = ("2^n", "energy / (4^n |Omega_n|)")
    if dec.orphans:
        t.flag("cubes outside every Whitney cube")
    if worst > bound:
        t.flag("atom estimate exceeded")
    return t


def _fit_table(rep, xname, yname):
    t = Table([xname, yname])
    for a, b in rep.points:
        t.add(float(a), float(b))
    t.note("slope", rep.slope, rep.expected)
    t.note("stderr", rep.stderr)
    t.note("fit_lo", float(rep.fit_range[0]))
    t.note("fit_hi", float(rep.fit_range[1]))
    t.series.append((yname, rep.points[:, 0], rep.points[:, 1]))
    t.axes = (xname, yname)
    if rep.inconclusive:
        t.flag("usable range too short")
    return t


def _threshold_table(rep):
    t = Table(["alpha", "exponent", "stderr", "growth"])
    for a, e, s, g in zip(rep.alphas, rep.exponents, rep.stderrs, rep.growth):
        t.add(float(a), float(e), float(s), float(g))
    t.note("crossing", rep.crossing, rep.expected)
    t.note("predicted_threshold", rep.predicted)
    t.note("fit_lo", float(rep.fit_range[0]))
    t.note("fit_hi", float(rep.fit_range[1]))
    t.series.append(("growth", rep.alphas, np.maximum(rep.growth, 1e-3)))
    t.axes = ("alpha", "growth exponent")
    if rep.inconclusive or not np.isfinite(rep.crossing):
        t.flag("usable range too short or no crossing")
    return t


def run_kernel_decay(cfg):
    return _fit_table(ex.kernel_decay_experiment(cfg), "r", "square_kernel")


def run_necessity(cfg):
    return _threshold_table(ex.necessity_probe(cfg))


def run_duality(cfg):
    return _threshold_table(ex.duality_probe(cfg))


def run_orthogonality(cfg):
    return _fit_table(ex.orthogonality_decay(cfg), "M", "best_constant")


def run_plancherel_step(cfg):
    rep = ex.plancherel_step_check(cfg)
    t = Table(["j", "t", "sup", "random_max"])
    for j, tt, s, r in rep.rows:
        t.add(int(j), float(tt), float(s), float(r))
    t.note("spread", rep.spread, 1.2)
    t.note("truncated", len(rep.truncated))
    for tt in sorted(set(rep.rows[:, 1])):
        sel = rep.rows[:, 1] == tt
        t.series.append((f"sup t={tt}", 2.0 ** rep.rows[sel, 0], rep.rows[sel, 2]))
    t.axes = ("2^j", "ratio")
    if rep.truncated:
        t.flag("blocks beyond the quadrature resolution were dropped")
    return t


def run_sphere_cancellation(cfg):
    from .multipliers import PsiSpec
    radii = np.geomspace(float(cfg.param("r_min", 2.0)), float(cfg.param("r_max", 512.0)),
                         int(cfg.param("count", 17)))
    psi = PsiSpec(cfg.d, float(cfg.param("psi_radius", 1.0)))
    rep = ex.sphere_cancellation(cfg.d, radii, psi, int(cfg.param("samples_per_period", 32)))
    return _fit_table(rep, "r", "sup_symbol")


_GRID_P = {"input", "stride", "scheme"}
COMMANDS = {
    "bessel-table": (run_bessel_table, {"nu"}),
    "transform": (run_transform, {"input", "rho_min", "rho_max", "count"}),
    "squarefn": (run_squarefn, _GRID_P | {"alpha"}),
    "equiv-probe": (run_equiv_probe, {"input", "alpha", "floor", "scheme", "r_min", "r_max",
                                      "count"}),
    "maximal": (run_maximal, {"input", "stride", "kind", "lam", "radii"}),
    "besov-norm": (run_besov_norm, {"lam", "alpha", "q", "j_max"}),
    "test-multiplier": (run_test_multiplier, {"p", "coefficients", "q", "j_max"}),
    "atoms": (run_atoms, {"input", "bound"}),
    "kernel-decay": (run_kernel_decay, {"alpha", "r_min", "t_nodes"}),
    "necessity": (run_necessity, {"p", "alphas", "r_min", "t_nodes"}),
    "duality": (run_duality, {"p", "alphas", "kappa", "center", "omega", "r_min"}),
    "orthogonality": (run_orthogonality, {"M", "t1", "t2", "half_width", "psi_radius"}),
    "plancherel-step": (run_plancherel_step, {"j", "t", "draws", "band", "psi_radius",
                                              "delta"}),
    "sphere-cancellation": (run_sphere_cancellation, {"r_min", "r_max", "count", "psi_radius",
                                                      "samples_per_period"}),
}


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


def _parser():
    p = _Parser(prog="rieszlab", description="Run one numerical experiment from a JSON config.")
    p.add_argument("command", metavar="subcommand", help=", ".join(COMMANDS))
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--plot", help="optional SVG output (overrides output.svg)")
    return p


def load_config(path, command):
    """Read and validate ``path`` for ``command``; raises ConfigError."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}")
    cfg = ExperimentConfig.from_json(text)
    if cfg.experiment != command:
        raise ConfigError("experiment", f"{cfg.experiment!r} does not match subcommand {command!r}")
    allowed = COMMANDS[command][1]
    for key in cfg.params:
        if key not in allowed:
            raise ConfigError(f"params.{key}", "unknown parameter for this experiment")
    return cfg


def run(cfg):
    """Run ``cfg`` and return the Table."""
    return COMMANDS[cfg.experiment][0](cfg)


def main(argv=None):
    """Entry point; returns the exit code."""
    parser = _parser()
    try:
        args = parser.parse_args(sys.argv[1:] if argv is None else argv)
        if args.command not in COMMANDS:
            raise _Usage(f"unknown subcommand {args.command!r}")
    except _Usage as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"rieszlab: error: {exc}", file=sys.stderr)
        print("subcommands: " + ", ".join(COMMANDS), file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config, args.command)
        table = run(cfg)
    except ConfigError as exc:
        print(f"rieszlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, TypeError) as exc:
        print(f"rieszlab: config error: params: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_csv(cfg.output["csv"], table)
    svg = args.plot or cfg.output.get("svg")
    if svg and table.series:
        write_svg(svg, table.series, table.axes)
    for reason in table.flags:
        print(f"rieszlab: numerical flag: {reason}", file=sys.stderr)
    return EXIT_FLAG if table.flags else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

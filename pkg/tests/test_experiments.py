import json

import numpy as np
import pytest
from scipy import integrate

from rieszlab import experiments as ex
from rieszlab.experiments import (ConfigError, ExperimentConfig, critical_alpha, cusp_rule,
                                  duality_symbol, kernel_decay_exponent, kernel_profiles,
                                  orthogonality_kernel, plancherel_ratio, plancherel_spacing,
                                  ring_growth_exponent, sphere_cancellation)
from rieszlab.multipliers import PsiSpec
from rieszlab.special import script_j


def base(**over):
    cfg = {"schema": 1, "experiment": "kernel-decay", "d": 2, "grid": {"n": 1024, "L": 256.0},
           "params": {}, "output": {"csv": "out.csv"}}
    cfg.update(over)
    return cfg


# ------------------------------------------------------------ configuration

def test_config_round_trip():
    cfg = ExperimentConfig.from_json(json.dumps(base(seed=7, tgrid={"k_min": -2})))
    assert cfg.seed == 7 and cfg.grid == {"n": 1024, "L": 256.0}
    assert cfg.param("alpha", 1.0) == 1.0


@pytest.mark.parametrize("mutate, key", [
    (lambda c: c.update(extra=1), "extra"),
    (lambda c: c.pop("params"), "params"),
    (lambda c: c.update(schema=2), "schema"),
    (lambda c: c["grid"].pop("n"), "grid.n"),
    (lambda c: c["grid"].update(n=3), "grid.n"),
    (lambda c: c["grid"].update(L=-1.0), "grid.L"),
    (lambda c: c["grid"].update(h=1.0), "grid.h"),
    (lambda c: c.update(tgrid={"k_min": 0.5}), "tgrid.k_min"),
    (lambda c: c.update(output={"svg": "a.svg"}), "output.csv"),
    (lambda c: c.update(seed=-1), "seed"),
    (lambda c: c.update(d=True), "d"),
])
def test_config_rejects(mutate, key):
    cfg = base()
    mutate(cfg)
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_dict(cfg)
    assert err.value.key == key
    assert str(err.value).startswith(key)


def test_malformed_json():
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_json('{"experiment": ')
    assert err.value.key == "<json>"


# ------------------------------------------------------------ predictions

def test_thresholds():
    assert critical_alpha(2, 4 / 3) == pytest.approx(1.0)
    assert critical_alpha(2, 6) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        critical_alpha(3, 2.0)
    assert kernel_decay_exponent(2, 1.0) == -1.5
    # ring mass growth vanishes exactly at the threshold
    for d, p in ((2, 4 / 3), (3, 1.2)):
        a = critical_alpha(d, p)
        assert ring_growth_exponent(d, p, kernel_decay_exponent(d, a)) == pytest.approx(0.0)


def test_cusp_rule_integrates_weight():
    for kappa in (0.0, 0.3, 0.48):
        t, w = cusp_rule(kappa)
        want = 2 * 0.5 ** (1 - kappa) / (1 - kappa)
        assert w.sum() == pytest.approx(want, rel=1e-12)
        assert np.sum(w * t) == pytest.approx(1.5 * want, rel=1e-12)
    with pytest.raises(ValueError):
        cusp_rule(0.5)


@pytest.mark.parametrize("alpha, kappa, rho", [
    (0.5, 0.48, 1.2), (0.7, 0.48, 1.501), (1.0, 0.0, 0.999), (0.4, 0.48, 0.5), (0.6, 0.3, 1.9)])
def test_duality_symbol_against_quad(alpha, kappa, rho):
    def g(t, part):
        if t <= rho:
            return 0.0
        v = (alpha * rho * rho * (t - rho) ** (alpha - 1) * (t + rho) ** (alpha - 1)
             * t ** (-2 * alpha) * abs(t - 1.5) ** (-kappa) * np.exp(3j * t))
        return v.real if part == 0 else v.imag
    pts = [p for p in (rho, 1.5) if 1 < p < 2]
    want = complex(*[integrate.quad(g, 1, 2, args=(k,), points=pts, limit=400,
                                    epsabs=1e-12)[0] for k in (0, 1)])
    got = duality_symbol(alpha, np.array([rho]), kappa, 1.5, 3.0)[0]
    assert abs(got - want) < 1e-8 * max(1.0, abs(want))


def test_kernel_profiles_shapes_and_linearity():
    t, w = cusp_rule(0.0, nodes=16)
    r = np.linspace(1, 20, 40)
    sq = kernel_profiles(2, [1.0, 2.0], t, r)
    lin = kernel_profiles(2, [1.0], t, r, 2 * w, square=False)
    lin1 = kernel_profiles(2, [1.0], t, r, w, square=False)
    assert sq.shape == (2, 40) and np.all(sq >= 0)
    assert np.allclose(lin, 2 * lin1)


# ------------------------------------------------------------ experiments

def test_kernel_decay_short_range_is_inconclusive():
    cfg = ExperimentConfig.from_dict(base(grid={"n": 256, "L": 64.0}))
    rep = ex.kernel_decay_experiment(cfg)
    assert rep.inconclusive
    assert rep.fit_range == (8.0, 64.0)
    assert np.all((rep.points[:, 0] >= 8.0) & (rep.points[:, 0] <= 64.0))


def test_duality_smooth_b_crossing():
    # b = 1: transform of b decays like 1/|x|, crossing 1/2 below the threshold
    cfg = ExperimentConfig.from_dict(base(experiment="duality", grid={"n": 1024, "L": 512.0},
                                          params={"kappa": 0.0}))
    rep = ex.duality_probe(cfg)
    assert rep.expected == pytest.approx(1 / 6)
    assert rep.crossing == pytest.approx(1 / 6, abs=0.05)
    assert rep.growth[-1] == 0.0


def test_orthogonality_control_and_bilinearity():
    psi = PsiSpec(2, 1.0)
    # M = 0 control: both masses at one point
    r, w, a = orthogonality_kernel(2, 0.0, 16.5, psi=psi)
    near = np.linalg.svd(a, compute_uv=False)[0]
    r, w, a = orthogonality_kernel(2, 33.0, 16.5, psi=psi)
    far = np.linalg.svd(a, compute_uv=False)[0]
    assert near > 10 * far
    h = np.random.default_rng(0).standard_normal(r.size)
    assert (2 * h) @ a @ (2 * h) == pytest.approx(4 * (h @ a @ h), rel=1e-12)


def test_plancherel_spike_and_scaling():
    psi = PsiSpec(2, 1.0)
    j = 3
    delta = plancherel_spacing(2, psi)
    n = int(round(2 ** j / delta)) + 1
    F = np.zeros(n)
    F[n // 3] = 1.0
    got = plancherel_ratio(2, j, F, (1.0, 2.0), psi)
    op, weights = ex._plancherel_setup(2, j, (1.0, 2.0), psi, None)
    r0 = op.r[n // 3]
    tau = op.tau[n // 3]
    for g, wt in zip(got, weights):
        want = np.sum(wt * (tau * r0 * script_j(2, r0 * op.omega)) ** 2) / (tau * r0)
        assert g == pytest.approx(want, rel=1e-8)
    G = np.random.default_rng(1).standard_normal(n)
    assert np.allclose(plancherel_ratio(2, j, 5 * G, psi=psi), plancherel_ratio(2, j, G, psi=psi),
                       rtol=1e-12)
    with pytest.raises(ValueError):
        plancherel_ratio(2, j, np.zeros(n + 1), psi=psi)


def test_plancherel_sup_dominates_random():
    psi = PsiSpec(2, 1.0)
    delta = plancherel_spacing(2, psi)
    n = int(round(8 / delta)) + 1
    sup = ex.plancherel_sup(2, 3, 1.0, psi)
    rng = np.random.default_rng(2)
    for _ in range(5):
        assert plancherel_ratio(2, 3, rng.standard_normal(n), psi=psi)[0] <= sup * (1 + 1e-6)


def test_plancherel_truncates_large_blocks():
    cfg = ExperimentConfig.from_dict(base(experiment="plancherel-step",
                                          params={"j": [3, 9], "t": [1.0], "draws": 1}))
    with pytest.warns(RuntimeWarning):
        rep = ex.plancherel_step_check(cfg)
    assert rep.truncated == (9,)
    assert set(rep.rows[:, 0]) == {3.0}


def test_sphere_cancellation_d2_quick():
    rep = sphere_cancellation(2, np.geomspace(4, 256, 7))
    assert rep.slope == pytest.approx(0.5, abs=0.05)

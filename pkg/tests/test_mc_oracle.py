import math

import numpy as np
import pytest

from refract.errors import McUnsupportedError
from refract.mc_oracle import (
    McEstimate,
    SimConfig,
    estimate_extremes,
    estimate_first_passage,
    estimate_killed_probability,
    estimate_occupation_transform,
    estimate_terminal_probability,
    sample_extremes,
    simulate_U_path,
    terminal_values,
)
from refract.model import JumpMixture, MixtureTerm, ModelSpec


def test_determinism_bitwise(kou):
    cfg = SimConfig(paths=500, dt=1e-3, horizon=5.0, seed=123)
    a = estimate_killed_probability(kou, cfg, 0.1, 0.0, 0.0)
    b = estimate_killed_probability(kou, cfg, 0.1, 0.0, 0.0)
    assert a.value == b.value and a.std_error == b.std_error


def test_determinism_across_thread_counts(kou):
    a = estimate_killed_probability(
        kou, SimConfig(paths=400, dt=1e-3, horizon=4.0, seed=9, threads=1), 0.1, 0.0, 0.0)
    b = estimate_killed_probability(
        kou, SimConfig(paths=400, dt=1e-3, horizon=4.0, seed=9, threads=2), 0.1, 0.0, 0.0)
    assert a.value == b.value


def test_seed_changes_result(kou):
    cfg1 = SimConfig(paths=400, dt=1e-3, horizon=4.0, seed=1)
    cfg2 = SimConfig(paths=400, dt=1e-3, horizon=4.0, seed=2)
    a = estimate_killed_probability(kou, cfg1, 0.1, 0.0, 0.0)
    b = estimate_killed_probability(kou, cfg2, 0.1, 0.0, 0.0)
    assert a.value != b.value


def test_path_skeleton_deterministic(kou):
    cfg = SimConfig(paths=1, dt=1e-3, seed=5)
    t1, u1 = simulate_U_path(kou, cfg, path_index=7, horizon=1.0)
    t2, u2 = simulate_U_path(kou, cfg, path_index=7, horizon=1.0)
    assert np.array_equal(u1, u2)
    t3, u3 = simulate_U_path(kou, cfg, path_index=8, horizon=1.0)
    assert not np.array_equal(u1, u3)
    assert u1[0] == 0.0 and len(u1) == 1001


def test_complex_or_signed_mixture_rejected():
    mix = JumpMixture(terms=(MixtureTerm(rate=2 + 1j, order=1, weights=(1.0,)),))
    spec = ModelSpec(mu=0.0, sigma=0.3, lambda_plus=1.0, jumps_plus=mix)
    with pytest.raises(McUnsupportedError, match="signed/complex"):
        simulate_U_path(spec, SimConfig(paths=1, dt=1e-3), horizon=0.1)
    mix2 = JumpMixture(terms=(MixtureTerm(rate=2.0, order=1, weights=(-1.0,)),))
    spec2 = ModelSpec(mu=0.0, sigma=0.3, lambda_plus=1.0, jumps_plus=mix2)
    with pytest.raises(McUnsupportedError, match="signed/complex"):
        terminal_values(spec2, SimConfig(paths=2, dt=1e-3), 0.1)


def test_delta_zero_terminal_moments(kou):
    # with no refraction the terminal mean is mu*t + lam+*E[Z+]*t - lam-*E[Z-]*t
    spec = kou.with_(delta=0.0)
    cfg = SimConfig(paths=40000, dt=1e-3, seed=11)
    t_end = 1.0
    vals = terminal_values(spec, cfg, t_end)
    expected = (spec.mu + spec.lambda_plus / 3.0 - spec.lambda_minus / 2.0) * t_end
    se = vals.std() / math.sqrt(len(vals))
    assert abs(vals.mean() - expected) < 3 * se


def test_std_error_scaling(kou):
    est1 = estimate_killed_probability(
        kou, SimConfig(paths=2000, dt=2e-3, horizon=30.0, seed=3), 0.5, 0.0, 0.0)
    est2 = estimate_killed_probability(
        kou, SimConfig(paths=4000, dt=2e-3, horizon=30.0, seed=3), 0.5, 0.0, 0.0)
    ratio = est1.std_error / est2.std_error
    assert ratio == pytest.approx(math.sqrt(2), rel=0.2)


def test_below_mode_complements_above(kou):
    cfg = SimConfig(paths=3000, dt=1e-3, horizon=30.0, seed=17)
    above = estimate_killed_probability(kou, cfg, 0.2, 0.0, 0.1, mode="above")
    below = estimate_killed_probability(kou, cfg, 0.2, 0.0, 0.1, mode="below")
    truncated_mass = 1.0 - math.exp(-0.2 * 30.0)
    assert above.value + below.value == pytest.approx(truncated_mass, abs=1e-12)


def test_occupation_estimator_consistency(kou):
    cfg = SimConfig(paths=3000, dt=1e-3, horizon=30.0, seed=17)
    occ = estimate_occupation_transform(kou, cfg, 0.2, 0.0, 0.1)
    below = estimate_killed_probability(kou, cfg, 0.2, 0.0, 0.1, mode="below")
    assert occ.value == pytest.approx(below.value / 0.04, rel=1e-12)


def test_refracted_brownian_against_analytic_pipeline():
    # pure diffusion with refraction: analytic resolvent vs MC
    from refract.charroots import solve_roots
    from refract.kernels import build_kernels
    from refract.distribution import cdf_upper
    from refract.model import QuerySpec

    bm = ModelSpec(mu=0.05, sigma=0.4, delta=0.3, b=0.0)
    q = 0.25
    roots = solve_roots(bm, q)
    ks = build_kernels(bm, roots)
    analytic = cdf_upper(bm, ks, QuerySpec(q=q, x=0.0, y=0.2))
    cfg = SimConfig(paths=30000, dt=1e-3, seed=29)
    est = estimate_killed_probability(bm, cfg, q, 0.0, 0.2)
    assert est.agrees(analytic, n_se=3.0), (est, analytic)


def test_extremes_match_factor_transform(kou, kou_roots):
    from refract.wiener_hopf import factor_sup_X, factor_inf_Y

    cfg = SimConfig(paths=20000, dt=1e-3, seed=41)
    sup_f = factor_sup_X(kou, kou_roots)
    for s, est in zip((0.5, 1.0), estimate_extremes(kou, cfg, 0.1, "supX", [0.5, 1.0])):
        target = complex(sup_f(s)).real
        # allow discretization bias on top of the statistical band
        assert abs(est.value - target) < 3 * est.std_error + 0.5 * s * kou.sigma * math.sqrt(cfg.dt)
    inf_f = factor_inf_Y(kou, kou_roots)
    est = estimate_extremes(kou, cfg, 0.1, "infY", [1.0])[0]
    target = complex(inf_f(1.0)).real
    assert abs(est.value - target) < 3 * est.std_error + 0.5 * kou.sigma * math.sqrt(cfg.dt)


def test_first_passage_estimator_brownian():
    # E[e^{-q tau_a}] = e^{-a sqrt(2q)/sigma} for driftless Brownian
    bm = ModelSpec(mu=0.0, sigma=1.0)
    cfg = SimConfig(paths=20000, dt=1e-3, horizon=60.0, seed=13)
    est = estimate_first_passage(bm, cfg, 0.5, 0.5, "up")
    target = math.exp(-0.5)
    assert abs(est.value - target) < 3 * est.std_error + 0.6 * math.sqrt(cfg.dt)


def test_estimate_agrees_helper():
    est = McEstimate(value=1.0, std_error=0.1, paths=10)
    assert est.agrees(1.25) and not est.agrees(1.5)


def test_invalid_config():
    with pytest.raises(McUnsupportedError):
        SimConfig(paths=0, dt=1e-3)
    with pytest.raises(McUnsupportedError):
        SimConfig(paths=10, dt=0.0)


@pytest.mark.slow
def test_bias_control_dt_halving(kou):
    # halving dt moves the estimate by sampling noise plus discretization bias;
    # assert the combination stays inside 3 SE of the difference
    q, horizon, paths = 0.2, 40.0, 50_000
    a = estimate_killed_probability(
        kou, SimConfig(paths=paths, dt=1e-3, horizon=horizon, seed=61), q, 0.0, 0.0)
    b = estimate_killed_probability(
        kou, SimConfig(paths=paths, dt=5e-4, horizon=horizon, seed=62), q, 0.0, 0.0)
    se_diff = math.hypot(a.std_error, b.std_error)
    assert abs(a.value - b.value) <= 3 * se_diff, (a, b)


@pytest.mark.slow
def test_kq_cdf_against_mc_convolution(kou, kou_roots, kou_kernels):
    # K_q is the law of (sup X at e(q)) + (inf Y at e(q)) for independent
    # copies: sample both extremes with independent streams and compare CDFs
    from refract.kernels import Kq_cdf

    cfg_a = SimConfig(paths=20000, dt=1e-3, seed=101)
    cfg_b = SimConfig(paths=20000, dt=1e-3, seed=202)
    sup_x = sample_extremes(kou, cfg_a, 0.1, "supX")
    inf_y = sample_extremes(kou, cfg_b, 0.1, "infY")
    total = sup_x + inf_y
    for x0 in (-0.5, 0.5):
        est = (total <= x0).mean()
        se = math.sqrt(est * (1 - est) / len(total))
        analytic = Kq_cdf(kou_kernels, kou_roots, x0)
        # grid maxima under-estimate the sup and over-estimate the inf; the two
        # discretization biases largely cancel in the sum
        assert abs(est - analytic) < 3 * se + 2e-3, (x0, est, analytic, se)


@pytest.mark.slow
def test_drift_comparison_bound(kou):
    # pointwise consequence of the integrated comparison bound: the refracted
    # law sits within |delta|*t of the fully refracted one in tail probability
    t_end, y = 1.0, 0.1
    bound = abs(kou.delta) * t_end
    for i, x in enumerate((-0.5, -0.1, 0.0, 0.2, 0.6)):
        cfg = SimConfig(paths=20000, dt=1e-3, seed=300 + i)
        p_u = estimate_terminal_probability(kou, cfg, t_end, x, y, mode="above")
        p_y = estimate_terminal_probability(kou, cfg, t_end, x, y, mode="above",
                                            b_override=-math.inf)
        se = math.hypot(p_u.std_error, p_y.std_error)
        assert abs(p_u.value - p_y.value) <= bound + 3 * se

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ols, x_factor_coefficients
from revcausal import dag as dags
from revcausal import equilibrium as eq
from revcausal import montecarlo as mc
from revcausal.scm import LinearStrategy, Scenario, objective_joint

MAIN = Scenario("main", gamma=0.5, lam=0.5)


def test_config_validation():
    with pytest.raises(ValueError):
        mc.SimConfig(draws=0)
    with pytest.raises(ValueError):
        mc.SimConfig(chunk_size=0)
    with pytest.raises(ValueError):
        mc.SimConfig(seed=-1)


def test_normals_are_standard():
    z = mc.standard_normals(7, 0, 200_000)
    assert z.shape == (200_000, 4)
    assert np.abs(z.mean(axis=0)).max() < 0.01
    assert np.abs(np.cov(z.T) - np.eye(4)).max() < 0.01


def test_draw_ranges_are_independent_of_split():
    whole = mc.standard_normals(3, 10, 100)
    parts = np.vstack([mc.standard_normals(3, 10, 37), mc.standard_normals(3, 47, 63)])
    assert np.array_equal(whole, parts)


def test_structural_draws_follow_equations():
    z = mc.standard_normals(1, 0, 5)
    s = Scenario("main", gamma=0.3, lam=0.6, var_theta=4.0, var_eps=0.25, var_eta=9.0)
    d = mc.structural_draws(s, LinearStrategy(0.7, 0.1, 0.01), z)
    theta, a, x, y = d.T
    assert np.allclose(theta, 2.0 * z[:, 0])
    assert np.allclose(a, 0.1 + 0.7 * theta + 0.1 * z[:, 1])
    assert np.allclose(x, theta - 0.3 * a + 0.5 * z[:, 2])
    assert np.allclose(y, x - 0.6 * a + 3.0 * z[:, 3])


def test_empirical_covariance_within_five_se():
    st_ = LinearStrategy(eq.benchmark_strategy(MAIN).slope, 0.0, 1e-6)
    emp = mc.simulate(MAIN, st_, mc.SimConfig(draws=1_000_000))
    exact = objective_joint(MAIN, st_)
    assert np.all(np.abs(emp.sample_covariance - exact.covariance) <= 5 * emp.covariance_se)
    assert np.all(np.abs(emp.sample_mean - exact.mean) <= 5 * emp.mean_se)


def test_one_draw_has_zero_covariance():
    emp = mc.simulate(MAIN, LinearStrategy(0.5), mc.SimConfig(draws=1))
    assert emp.draws == 1
    assert np.all(emp.sample_covariance == 0.0)


def test_same_seed_is_bit_identical():
    cfg = mc.SimConfig(draws=5000, seed=11)
    a = mc.simulate(MAIN, LinearStrategy(0.5, 0.1, 0.2), cfg)
    b = mc.simulate(MAIN, LinearStrategy(0.5, 0.1, 0.2), cfg)
    assert np.array_equal(a.sample_covariance, b.sample_covariance)
    assert np.array_equal(a.sample_mean, b.sample_mean)
    assert np.array_equal(a.covariance_se, b.covariance_se)


def test_different_seeds_differ():
    a = mc.simulate(MAIN, LinearStrategy(0.5), mc.SimConfig(draws=1000, seed=1))
    b = mc.simulate(MAIN, LinearStrategy(0.5), mc.SimConfig(draws=1000, seed=2))
    assert not np.array_equal(a.sample_covariance, b.sample_covariance)


@settings(max_examples=25)
@given(st.integers(1, 3000), st.integers(1, 500), st.integers(0, 2**63))
def test_chunking_does_not_change_results(draws, chunk, seed):
    s = LinearStrategy(0.4, -0.2, 0.3)
    a = mc.simulate(MAIN, s, mc.SimConfig(draws=draws, seed=seed, chunk_size=chunk))
    b = mc.simulate(MAIN, s, mc.SimConfig(draws=draws, seed=seed, chunk_size=draws))
    assert np.allclose(a.sample_covariance, b.sample_covariance, rtol=0, atol=1e-12)
    assert np.allclose(a.sample_mean, b.sample_mean, rtol=0, atol=1e-12)


def test_streaming_matches_two_pass():
    cfg = mc.SimConfig(draws=20_000, seed=5, chunk_size=999)
    s = LinearStrategy(0.4, 3.0, 0.3)
    emp = mc.simulate(MAIN, s, cfg)
    raw = mc.structural_draws(MAIN, s, mc.standard_normals(cfg.seed, 0, cfg.draws))
    assert np.allclose(emp.sample_covariance, np.cov(raw.T), atol=1e-12)
    assert np.allclose(emp.sample_mean, raw.mean(axis=0), atol=1e-12)


def test_empirical_fit_matches_brute_force_ols():
    cfg = mc.SimConfig(draws=50_000, seed=9)
    s = LinearStrategy(0.5, 0.0, 0.25)
    raw = mc.structural_draws(MAIN, s, mc.standard_normals(cfg.seed, 0, cfg.draws))
    _, coef, _ = ols(raw[:, 2], raw[:, 0], raw[:, 1], raw[:, 3])
    fx = mc.empirical_fit(mc.simulate(MAIN, s, cfg), dags.G).factors["x"]
    assert np.allclose(fx.coefficients, coef, atol=1e-9)


@pytest.mark.slow
def test_empirical_fit_recovers_x_factor_coefficients():
    emp = mc.simulate(MAIN, LinearStrategy(1 / 1.5, 0.0, 0.25), mc.SimConfig(draws=10_000_000))
    fx = mc.empirical_fit(emp, dags.G).factors["x"]
    assert np.allclose(fx.coefficients, x_factor_coefficients(0.5, 0.5, 0.5), atol=1e-2)
    assert np.allclose(fx.coefficients, (0.5, 0.0, 0.5), atol=1e-2)
    ftrue = mc.empirical_fit(emp, dags.G_STAR).factors["x"]
    assert np.allclose(ftrue.coefficients, (1.0, -0.5), atol=1e-2)


def test_fit_on_independent_noise():
    s = Scenario("main", gamma=0.0, lam=0.0, var_eps=1.0, var_eta=1.0)
    # with k = 0 and a pure tremble, a is independent noise; regress a on theta
    emp = mc.simulate(s, LinearStrategy(0.0, 0.0, 1.0), mc.SimConfig(draws=200_000))
    fa = mc.empirical_fit(emp, dags.G).factors["a"]
    assert abs(fa.coef("theta")) < 1e-2


def test_empirical_welfare_example():
    s = Scenario("main", gamma=1.0, lam=0.5, var_eps=1.0)
    est = mc.empirical_welfare(s, LinearStrategy(0.5), mc.SimConfig(draws=1_000_000))
    assert abs(est.value + 1.0) <= 5 * est.standard_error
    assert est.draws == 1_000_000


def test_empirical_welfare_is_exact_without_noise():
    s = Scenario("main", gamma=0.5, lam=0.5, var_eps=0.0, var_eta=0.0)
    est = mc.empirical_welfare(s, LinearStrategy(1 / 1.5), mc.SimConfig(draws=1000))
    assert est.value == pytest.approx(0.0, abs=1e-28)


def test_lambda_one_no_welfare_loss_by_simulation():
    s = Scenario("main", gamma=0.4, lam=1.0, var_eps=2.0)
    cfg = mc.SimConfig(draws=1_000_000)
    w_eq = mc.empirical_welfare(s, eq.solve_equilibrium(s).strategy, cfg)
    w_b = mc.empirical_welfare(s, eq.benchmark_strategy(s), cfg)
    assert abs(w_eq.value - w_b.value) <= 5 * max(w_eq.standard_error, 1e-15)

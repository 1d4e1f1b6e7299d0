"""Cross-checks of solver, closed forms and simulation, as a runnable matrix.

Each check returns a :class:`CheckResult` with its worst deviation and the
tolerance it was held to. ``revcausal verify`` prints them and exits nonzero
on any failure. A build in which the closed-form slope formula is off by
1e-3 in its denominator fails ``main-closed-form``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dag as dags
from . import equilibrium as eq
from . import montecarlo as mc
from .belief import compose
from .gaussian import condition
from .scm import Family, LinearStrategy, Scenario, objective_joint, subjective_dag

GRID = (0.0, 0.25, 0.5, 0.75, 1.0)
TAUS = (0.1, 0.5, 1.0, 2.0, 10.0)
UNIT = (0.25, 0.5, 0.75)
VARIANCE_GRID = tuple(itertools.product((0.5, 1.0, 2.0), (0.5, 1.0, 3.0)))  # (var_eps, var_eta)

SPOT_CHECKS = {
    Family.MAIN: [
        dict(gamma=0.5, lam=0.5),
        dict(gamma=0.0, lam=0.0, var_eps=2.0),
        dict(gamma=1.0, lam=0.25, var_theta=2.0, var_eps=0.5),
    ],
    Family.EXOGENEITY_ONLY: [
        dict(kappa=0.5, alpha=0.5, delta=0.5),
        dict(kappa=0.25, alpha=0.75, delta=0.5, var_eta=2.0),
        dict(kappa=0.75, alpha=0.25, delta=0.75, var_theta=0.5),
    ],
    Family.REVERSE_ONLY: [
        dict(gamma=0.5, lam=0.3),
        dict(gamma=0.0, lam=1.0, var_eps=0.5),
        dict(gamma=1.0, lam=0.0, var_eps=10.0),
    ],
}
# simulation needs a visibly mixed strategy for theta and a to be separable
SIM_TREMBLE = 0.25
SE_BAND = 5.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<28} worst={self.worst:.3e}  tol={self.tolerance:.1e}  {self.detail}".rstrip()


def _result(name, deviations, tol, detail=""):
    worst = max(deviations) if deviations else 0.0
    ok = bool(deviations) and all(d <= tol for d in deviations) and math.isfinite(worst)
    return CheckResult(name, ok, float(worst), tol, detail)


def main_scenario(gamma, lam, tau, var_theta=1.0, var_eta=1.0) -> Scenario:
    return Scenario(Family.MAIN, gamma=gamma, lam=lam, var_theta=var_theta, var_eps=tau * var_eta, var_eta=var_eta)


def check_main_closed_form() -> CheckResult:
    dev = []
    for g, lam, tau in itertools.product(GRID, GRID, TAUS):
        sc = main_scenario(g, lam, tau)
        k = eq.solve_equilibrium(sc).strategy.slope
        dev.append(abs(k - eq.closed_form_strategy(sc).slope))
    return _result("main-closed-form", dev, 1e-6, f"{len(dev)} points")


def check_benchmark() -> CheckResult:
    dev = []
    for g in GRID:
        for ve, vn in VARIANCE_GRID:
            sc = Scenario(Family.MAIN, gamma=g, lam=0.5, var_eps=ve, var_eta=vn)
            k = eq.solve_equilibrium(sc, dag=dags.G_STAR).strategy.slope
            dev.append(abs(k - 1.0 / (1.0 + g)))
            dev.append(abs(eq.benchmark_strategy(sc).slope - 1.0 / (1.0 + g)))
    return _result("benchmark-true-dag", dev, 1e-9)


def check_lambda_one() -> CheckResult:
    slopes, gaps = [], []
    for g, tau in itertools.product(GRID, TAUS):
        rep = eq.solve_equilibrium(main_scenario(g, 1.0, tau))
        slopes.append(abs(rep.strategy.slope - rep.benchmark_strategy.slope))
        gaps.append(rep.welfare_gap)
    res = _result("lambda-one-protection", slopes, 1e-6)
    gap_ok = max(gaps) <= 1e-9
    return CheckResult(res.name, res.passed and gap_ok, res.worst, res.tolerance, f"max welfare gap {max(gaps):.3e} (tol 1e-9)")


def check_tau_rigidity() -> CheckResult:
    dev = []
    for g, lam in itertools.product(GRID, GRID[:-1]):
        ks = [eq.solve_equilibrium(main_scenario(g, lam, t)).strategy.slope for t in TAUS]
        # positive entries mean the sweep failed to decrease
        dev.extend(max(0.0, b - a + 1e-15) for a, b in zip(ks, ks[1:]))
    k_limit = eq.solve_equilibrium(main_scenario(0.0, 0.0, 1e4)).strategy.slope
    detail = f"k(tau=1e4)={k_limit:.3e}"
    dev.append(0.0 if k_limit < 1e-3 else k_limit)
    return _result("tau-rigidity", dev, 0.0, detail)


def check_exogeneity_only() -> CheckResult:
    dev = []
    monotone_ok = True
    for kap, al in itertools.product(UNIT, UNIT):
        gaps = []
        for de in UNIT:
            ks = []
            for ve, vn in VARIANCE_GRID[::4]:
                sc = Scenario(Family.EXOGENEITY_ONLY, kappa=kap, alpha=al, delta=de, var_eps=ve, var_eta=vn)
                rep = eq.solve_equilibrium(sc)
                dev.append(abs(rep.strategy.slope - 1.0 / (1.0 + kap)))
                dev.append(abs(rep.benchmark_strategy.slope - 1.0 / (1.0 + kap - al * de)))
                ks.append(rep.strategy.slope)
            dev.append(max(ks) - min(ks))
            gaps.append(rep.welfare_gap)
        monotone_ok &= all(b > a for a, b in zip(gaps, gaps[1:]))
    res = _result("exogeneity-only", dev, 1e-9)
    if not monotone_ok:
        return CheckResult(res.name, False, res.worst, res.tolerance, "welfare gap not increasing in delta")
    return res


def check_reverse_only() -> CheckResult:
    dev = []
    most = 0
    for g, tau, k0 in itertools.product(GRID, (0.1, 1.0, 10.0), (0.0, 2.0)):
        sc = Scenario(Family.REVERSE_ONLY, gamma=g, lam=0.5, var_eps=tau)
        rep = eq.solve_equilibrium(sc, LinearStrategy(k0), tol=1e-10, max_iter=200)
        most = max(most, rep.iterations)
        dev.append(abs(rep.strategy.slope - 1.0 / (1.0 + g)))
    return _result("reverse-only-coincidence", dev, 1e-6, f"max iterations {most}")


def check_welfare_formula(seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    dev = []
    for _ in range(20):
        g, lam = rng.uniform(0, 1, 2)
        vt, ve, vn = rng.uniform(0.2, 3.0, 3)
        k, b = rng.uniform(-1, 2), rng.uniform(-1, 1)
        nu = rng.uniform(0, 0.5)
        sc = Scenario((Family.MAIN, Family.REVERSE_ONLY)[int(rng.integers(2))], gamma=g, lam=lam, var_theta=vt, var_eps=ve, var_eta=vn)
        st = LinearStrategy(k, b, nu)
        hand = -((1 - (1 + g) * k) ** 2 * vt + (1 + g) ** 2 * (b * b + nu) + ve)
        dev.append(abs(eq.objective_welfare(sc, st) - hand))
    return _result("welfare-formula", dev, 1e-12, "20 random points")


def check_equilibrium_means() -> CheckResult:
    dev = []
    for fam, points in SPOT_CHECKS.items():
        for kw in points:
            sc = Scenario(fam, **kw)
            rep = eq.solve_equilibrium(sc, LinearStrategy(0.3, 0.7))
            dev.append(abs(rep.strategy.intercept))
            dev.append(abs(objective_joint(sc, rep.strategy).mean_of("y")))
    return _result("zero-intercept-and-mean-y", dev, 1e-8)


def _sim_strategy(sc: Scenario) -> LinearStrategy:
    k = eq.closed_form_strategy(sc).slope
    return LinearStrategy(k, 0.2, SIM_TREMBLE * sc.var_theta)


def check_simulated_covariance(config: mc.SimConfig) -> CheckResult:
    dev = []
    for fam, points in SPOT_CHECKS.items():
        for kw in points:
            sc = Scenario(fam, **kw)
            st = _sim_strategy(sc)
            emp = mc.simulate(sc, st, config)
            exact = objective_joint(sc, st)
            z = np.abs(emp.sample_covariance - exact.covariance) / emp.covariance_se
            zm = np.abs(emp.sample_mean - exact.mean) / emp.mean_se
            dev.append(float(max(z.max(), zm.max())))
    return _result("simulated-covariance", dev, SE_BAND, f"{config.draws} draws, in standard errors")


def check_simulated_fit(config: mc.SimConfig) -> CheckResult:
    dev = []
    for g, lam in ((0.5, 0.5), (0.25, 0.0)):
        sc = Scenario(Family.MAIN, gamma=g, lam=lam)
        beta = sc.beta
        st = _sim_strategy(sc)
        emp = mc.simulate(sc, st, config)
        fx = mc.empirical_fit(emp, dags.G).factors["x"]
        want = {"theta": 1 - beta, "a": beta * lam + beta * g - g, "y": beta}
        dev.extend(abs(fx.coef(n) - v) for n, v in want.items())
        ftrue = mc.empirical_fit(emp, dags.G_STAR).factors["x"]
        dev.extend([abs(ftrue.coef("theta") - 1.0), abs(ftrue.coef("a") + g)])
        # learning loop: best reply computed from the fitted sample belief
        cx = condition(compose(mc.empirical_fit(emp, subjective_dag(sc))), "x", ("theta", "a"))
        k_learned = cx.coef("theta") / (1 - cx.coef("a"))
        dev.append(abs(k_learned - eq.closed_form_strategy(sc).slope))
    return _result("simulated-fit", dev, 1e-2, f"{config.draws} draws")


def check_simulated_welfare(config: mc.SimConfig) -> CheckResult:
    dev = []
    for fam, points in SPOT_CHECKS.items():
        for kw in points[:2]:
            sc = Scenario(fam, **kw)
            st = _sim_strategy(sc)
            est = mc.empirical_welfare(sc, st, config)
            dev.append(abs(est.value - eq.objective_welfare(sc, st)) / est.standard_error)
    return _result("simulated-welfare", dev, SE_BAND, f"{config.draws} draws, in standard errors")


ANALYTIC_CHECKS: tuple[Callable[[], CheckResult], ...] = (
    check_main_closed_form,
    check_benchmark,
    check_lambda_one,
    check_tau_rigidity,
    check_exogeneity_only,
    check_reverse_only,
    check_welfare_formula,
    check_equilibrium_means,
)


def run_all(draws: int = 1_000_000, seed: int = mc.DEFAULT_SEED, fit_draws: int | None = None) -> list[CheckResult]:
    results = []
    for check in ANALYTIC_CHECKS:
        results.append(_guard(check))
    cfg = mc.SimConfig(draws=draws, seed=seed)
    fit_cfg = mc.SimConfig(draws=fit_draws or 10 * draws, seed=seed)
    results.append(_guard(lambda: check_simulated_covariance(cfg), "simulated-covariance"))
    results.append(_guard(lambda: check_simulated_fit(fit_cfg), "simulated-fit"))
    results.append(_guard(lambda: check_simulated_welfare(cfg), "simulated-welfare"))
    return results


def _guard(fn, name: str | None = None) -> CheckResult:
    try:
        return fn()
    except Exception as exc:  # a crashing check is a failing check
        return CheckResult(name or fn.__name__.removeprefix("check_"), False, math.inf, 0.0, f"error: {exc}")

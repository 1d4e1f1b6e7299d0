"""Personal-equilibrium strategies, closed forms and objective welfare.

A linear strategy a = b + k*theta is a personal equilibrium when it solves
a = E_G(x | theta, a) for the belief E_G computed from the joint distribution
that the strategy itself induces. :func:`solve_personal_equilibrium` finds it
by iterating the best-reply map; :func:`solve_equilibrium` repeats that at a
ladder of tremble sizes and extrapolates to the pure-strategy limit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .belief import SubjectiveBelief, subjective_conditional
from .dag import Dag
from .errors import DegenerateFocError, NoConvergenceError
from .scm import Family, LinearStrategy, Scenario, objective_joint

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200
TREMBLE_LADDER = (1e-4, 1e-6, 1e-8)  # times var_theta
FOC_EPS = 1e-9
MIN_DAMPING = 2.0**-30
SUFFICIENT_DECREASE = 0.9


@dataclass(frozen=True)
class LevelSolution:
    tremble_variance: float
    strategy: LinearStrategy
    iterations: int
    residual: float
    c2_margin: float
    damping: float
    trace: tuple[float, ...]


@dataclass(frozen=True)
class EquilibriumReport:
    strategy: LinearStrategy
    iterations: int
    residual: float
    c2_margin: float
    welfare: float
    benchmark_strategy: LinearStrategy
    welfare_benchmark: float
    levels: tuple[LevelSolution, ...] = field(default=(), repr=False)

    @property
    def welfare_gap(self) -> float:
        return _gap(self.welfare_benchmark, self.welfare)


def benchmark_strategy(scenario: Scenario) -> LinearStrategy:
    """Optimal strategy for a decision maker who knows the true model."""
    if scenario.family is Family.EXOGENEITY_ONLY:
        return LinearStrategy(1.0 / (1.0 + scenario.kappa - scenario.alpha * scenario.delta))
    return LinearStrategy(1.0 / (1.0 + scenario.gamma))


def closed_form_strategy(scenario: Scenario) -> LinearStrategy:
    """Known analytic equilibrium slope for each family."""
    fam = scenario.family
    if fam is Family.MAIN:
        return LinearStrategy(1.0 / (1.0 + scenario.gamma + scenario.tau * (1.0 - scenario.lam)))
    if fam is Family.EXOGENEITY_ONLY:
        return LinearStrategy(1.0 / (1.0 + scenario.kappa))
    return LinearStrategy(1.0 / (1.0 + scenario.gamma))


def _reply(scenario: Scenario, current: LinearStrategy, dag: Dag | None) -> tuple[LinearStrategy, SubjectiveBelief]:
    evaluated = current
    if current.tremble_variance == 0.0:
        # a pure strategy makes (theta, a) collinear; regularize with a tremble
        evaluated = current.with_tremble(scenario.default_tremble())
    belief = subjective_conditional(scenario, objective_joint(scenario, evaluated), dag)
    c_theta, c_a = belief.c_theta, belief.c_a
    denom = 1.0 - c_a
    if not math.isfinite(denom) or abs(denom) < FOC_EPS:
        raise DegenerateFocError(f"1 - c2 = {denom:.3g}: the optimal action is not pinned down", c_a)
    reply = LinearStrategy(
        slope=c_theta / denom,
        intercept=belief.conditional_x.intercept / denom,
        tremble_variance=current.tremble_variance,
    )
    return reply, belief


def best_reply(scenario: Scenario, current: LinearStrategy, dag: Dag | None = None) -> LinearStrategy:
    """Subjectively optimal linear strategy against the belief induced by ``current``.

    Solves a = E_G(x|theta, a) = c0 + c_theta*theta + c_a*a, i.e.
    k' = c_theta/(1 - c_a) and b' = c0/(1 - c_a). ``dag`` overrides the
    scenario's subjective DAG.
    """
    return _reply(scenario, current, dag)[0]


def _distance(s: LinearStrategy, t: LinearStrategy) -> float:
    return float(abs(s.slope - t.slope) + abs(s.intercept - t.intercept))


class _ZeroSlope(Exception):
    pass


def _to_inverse(s: LinearStrategy) -> np.ndarray:
    # theta = (a - b)/k: coordinates (1/k, b/k) of the inverse strategy
    if s.slope == 0.0:
        raise _ZeroSlope
    return np.array([1.0 / s.slope, s.intercept / s.slope])


def _from_inverse(z: np.ndarray, tremble: float) -> LinearStrategy:
    if z[0] == 0.0:
        raise _ZeroSlope
    return LinearStrategy(float(1.0 / z[0]), float(z[1] / z[0]), tremble)


def _to_direct(s: LinearStrategy) -> np.ndarray:
    return np.array([s.slope, s.intercept])


def _from_direct(z: np.ndarray, tremble: float) -> LinearStrategy:
    return LinearStrategy(float(z[0]), float(z[1]), tremble)


def _representable(s: LinearStrategy, to_z) -> bool:
    try:
        return bool(np.all(np.isfinite(to_z(s))))
    except _ZeroSlope:
        return False


def _is_singular(belief) -> bool:
    return belief.fitted.singular or belief.conditional_x.singular


def _iterate(scenario, init, tol, max_iter, dag) -> LevelSolution:
    try:
        return _iterate_in(scenario, init, tol, max_iter, dag, _to_inverse, _from_inverse)
    except _ZeroSlope:
        return _iterate_in(scenario, init, tol, max_iter, dag, _to_direct, _from_direct)


def _iterate_in(scenario, init, tol, max_iter, dag, to_z, from_z) -> LevelSolution:
    """Damped iteration of the best reply in the coordinates ``to_z``.

    Inverse coordinates theta = u*a - v are the default: in them the
    reverse-only best reply is affine with slope -tau, whereas in (k, b) it
    is a Moebius map with a pole at k = beta/(1+gamma).

    Each coordinate gets its own damping 1/(1 - s) from the secant slope s
    of the map (Wegstein), clipped to (0, 1]. A step must shrink the
    coordinate residual by a fixed fraction and must not land where the belief
    is numerically singular; otherwise all damping factors are halved and the
    step retried.
    """
    tremble = init.tremble_variance
    x = init
    reply, belief = _reply(scenario, x, dag)
    it = 0
    if not _representable(x, to_z) and _distance(reply, x) > tol:
        # no finite inverse coordinates at a flat start: take one plain step
        x = reply
        reply, belief = _reply(scenario, x, dag)
        it = 1
    res = _distance(reply, x)
    trace = [res]
    z, zr = to_z(x), to_z(reply)
    zres = float(np.abs(zr - z).sum())
    w = np.ones_like(z)
    shrink = 1.0
    while res > tol:
        if it >= max_iter:
            raise NoConvergenceError(
                f"no convergence after {max_iter} iterations (residual {res:.3g})", reply, trace
            )
        while True:
            c = shrink * w
            cz = (1.0 - c) * z + c * zr  # exact at c = 1, even when |z| >> |zr|
            # trial points may be wildly off; only warnings from accepted ones count
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                try:
                    cand = from_z(cz, tremble)
                    cand_reply, cand_belief = _reply(scenario, cand, dag)
                    czr = to_z(cand_reply)
                    cz_res = float(np.abs(czr - cz).sum())
                except (DegenerateFocError, _ZeroSlope, ArithmeticError, ValueError, np.linalg.LinAlgError):
                    cz_res = math.inf
                if not math.isfinite(cz_res):
                    cz_res = math.inf
            # a trial whose belief could only be fitted through the
            # pseudoinverse (tremble swamped by a huge slope) is not evidence
            # of progress unless the current point is just as degenerate
            if cz_res < math.inf and _is_singular(cand_belief) and not _is_singular(belief):
                cz_res = math.inf
            if cz_res < math.inf and cz_res <= SUFFICIENT_DECREASE * zres:
                for rec in caught:
                    warnings.warn_explicit(rec.message, rec.category, rec.filename, rec.lineno)
                break
            shrink *= 0.5
            if shrink < MIN_DAMPING:
                raise NoConvergenceError(f"damped iteration stalled at residual {res:.3g}", reply, trace)
        dz, dg = cz - z, czr - zr
        for i in range(len(z)):
            if abs(dz[i]) > 1e-14 * (1.0 + abs(cz[i])):
                slope = dg[i] / dz[i]
                w[i] = 1.0 / (1.0 - slope) if slope < 0 else 1.0
        shrink = min(1.0, 2.0 * shrink)
        x, reply, belief = cand, cand_reply, cand_belief
        z, zr, zres = cz, czr, cz_res
        res = _distance(reply, x)
        trace.append(res)
        it += 1
        if zres == 0.0:
            break
    return LevelSolution(
        tremble_variance=tremble,
        strategy=reply,
        iterations=it,
        residual=res,
        c2_margin=abs(1.0 - belief.c_a),
        damping=float(np.min(shrink * w)),
        trace=tuple(trace),
    )


def solve_personal_equilibrium(
    scenario: Scenario,
    init: LinearStrategy | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    dag: Dag | None = None,
) -> EquilibriumReport:
    """Fixed point of :func:`best_reply` at the tremble carried by ``init``.

    A zero tremble is replaced by the scenario default. Use
    :func:`solve_equilibrium` for the tremble-extrapolated solution.
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("need tol > 0 and max_iter >= 1")
    init = init or LinearStrategy(0.0)
    if init.tremble_variance == 0.0:
        init = init.with_tremble(scenario.default_tremble())
    level = _iterate(scenario, init, tol, max_iter, dag)
    return _report(scenario, level.strategy, (level,), dag)


def solve_equilibrium(
    scenario: Scenario,
    init: LinearStrategy | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    dag: Dag | None = None,
    ladder: Sequence[float] = TREMBLE_LADDER,
) -> EquilibriumReport:
    """Equilibrium in the vanishing-tremble limit.

    Solves from ``init`` at each tremble in ``ladder`` (scaled by var_theta),
    then extrapolates slope and intercept to zero tremble with a polynomial
    through all levels. The reported strategy carries no tremble.
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("need tol > 0 and max_iter >= 1")
    init = init or LinearStrategy(0.0)
    levels = []
    for t in ladder:
        levels.append(_iterate(scenario, init.with_tremble(t * scenario.var_theta), tol, max_iter, dag))
    ts = [lv.tremble_variance for lv in levels]
    k0 = richardson_to_zero(ts, [lv.strategy.slope for lv in levels])
    b0 = richardson_to_zero(ts, [lv.strategy.intercept for lv in levels])
    return _report(scenario, LinearStrategy(k0, b0), tuple(levels), dag)


def _report(scenario, strategy, levels, dag) -> EquilibriumReport:
    bench = benchmark_strategy(scenario)
    last = levels[-1]
    return EquilibriumReport(
        strategy=strategy,
        iterations=max(lv.iterations for lv in levels),
        residual=max(lv.residual for lv in levels),
        c2_margin=last.c2_margin,
        welfare=objective_welfare(scenario, strategy),
        benchmark_strategy=bench,
        welfare_benchmark=objective_welfare(scenario, bench),
        levels=levels,
    )


def richardson_to_zero(h: Sequence[float], values: Sequence[float]) -> float:
    """Value at h = 0 of the interpolating polynomial through (h_i, values_i) (Neville)."""
    h = list(map(float, h))
    p = list(map(float, values))
    n = len(h)
    if n == 0 or n != len(p):
        raise ValueError("need matching, nonempty h and values")
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (h[i] * p[i + 1] - h[i + m] * p[i]) / (h[i] - h[i + m])
    return p[0]


def objective_welfare(scenario: Scenario, strategy: LinearStrategy) -> float:
    """E[-(x - a)^2] under the true model."""
    joint = objective_joint(scenario, strategy)
    w = np.zeros(len(joint.variables))
    ix, ia = joint.index(["x", "a"])
    w[ix], w[ia] = 1.0, -1.0
    if joint.factor is not None:
        v = w @ joint.factor
        var = float(v @ v)
    else:
        var = float(w @ joint.covariance @ w)
    m = float(w @ joint.mean)
    return -(var + m * m)


def _gap(bench: float, eq: float) -> float:
    gap = bench - eq
    # the benchmark is optimal; only floating-point noise can make this negative
    if -1e-12 * max(1.0, abs(bench)) < gap < 0:
        gap = 0.0
    return gap


def welfare_gap(scenario: Scenario, dag: Dag | None = None) -> float:
    """Welfare at the benchmark minus welfare at the equilibrium (>= 0)."""
    return solve_equilibrium(scenario, dag=dag).welfare_gap

"""Simulation oracle for the analytic results.

Draws come from a counter-based generator (Philox): draw ``i`` is the block at
counter ``i`` under key ``seed``, so any draw range can be generated on its
own and results do not depend on how draws are chunked. The four 64-bit words
of a block become (theta, nu, eps, eta) through the inverse normal CDF.

The structural equations are applied directly to the sampled shocks; nothing
here goes through the Gaussian algebra in :mod:`revcausal.gaussian`, except
:func:`empirical_fit`, which deliberately runs the ordinary fitting code on the
sample moments (finite-sample OLS).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtri

from .belief import FittedModel, fit
from .dag import CANONICAL_ORDER, Dag
from .gaussian import GaussianJoint
from .scm import Family, LinearStrategy, Scenario

DEFAULT_SEED = 20_210_917
JACKKNIFE_GROUPS = 32


@dataclass(frozen=True)
class SimConfig:
    draws: int = 1_000_000
    seed: int = DEFAULT_SEED
    chunk_size: int = 1 << 18

    def __post_init__(self):
        if self.draws < 1 or self.chunk_size < 1:
            raise ValueError("draws and chunk_size must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class EmpiricalJoint:
    variables: tuple[str, ...]
    sample_mean: np.ndarray
    sample_covariance: np.ndarray
    draws: int
    mean_se: np.ndarray
    covariance_se: np.ndarray

    def as_gaussian(self) -> GaussianJoint:
        return GaussianJoint(self.variables, self.sample_mean, self.sample_covariance)


@dataclass(frozen=True)
class Estimate:
    value: float
    standard_error: float
    draws: int


def standard_normals(seed: int, start: int, count: int) -> np.ndarray:
    """``(count, 4)`` standard normals for draws ``start .. start+count-1``."""
    raw = np.random.Philox(key=seed, counter=start).random_raw(4 * count)
    # top 53 bits, centered in their cell, so u is never 0 or 1
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u).reshape(count, 4)


def structural_draws(scenario: Scenario, strategy: LinearStrategy, shocks: np.ndarray) -> np.ndarray:
    """Apply the true equations to standard-normal shocks; columns (theta, a, x, y)."""
    theta = np.sqrt(scenario.var_theta) * shocks[:, 0]
    nu = np.sqrt(strategy.tremble_variance) * shocks[:, 1]
    eps = np.sqrt(scenario.var_eps) * shocks[:, 2]
    eta = np.sqrt(scenario.var_eta) * shocks[:, 3]
    a = strategy.intercept + strategy.slope * theta + nu
    if scenario.family is Family.EXOGENEITY_ONLY:
        y = scenario.delta * a + eta
        x = theta - scenario.kappa * a + scenario.alpha * y + eps
    else:
        x = theta - scenario.gamma * a + eps
        y = x - scenario.lam * a + eta
    return np.column_stack([theta, a, x, y])


class _Moments:
    """Count, mean and centered cross-product sum; merges exactly (Chan et al.)."""

    __slots__ = ("n", "mean", "m2")

    def __init__(self, dim: int):
        self.n = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros((dim, dim))

    def add_batch(self, X: np.ndarray) -> None:
        other = _Moments(X.shape[1])
        other.n = X.shape[0]
        other.mean = X.mean(axis=0)
        Xc = X - other.mean
        other.m2 = Xc.T @ Xc
        self.merge(other)

    def merge(self, other: "_Moments") -> None:
        if other.n == 0:
            return
        if self.n == 0:
            self.n, self.mean, self.m2 = other.n, other.mean.copy(), other.m2.copy()
            return
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.n / n)
        self.m2 = self.m2 + other.m2 + np.outer(delta, delta) * (self.n * other.n / n)
        self.n = n

    def covariance(self) -> np.ndarray:
        if self.n < 2:
            return np.zeros_like(self.m2)
        c = self.m2 / (self.n - 1)
        return 0.5 * (c + c.T)


def _group_moments(config: SimConfig, columns: Callable[[np.ndarray], np.ndarray], dim: int) -> list[_Moments]:
    # jackknife groups are contiguous draw ranges fixed by draws alone; chunking
    # only subdivides a group, never crosses a boundary
    groups = min(JACKKNIFE_GROUPS, config.draws)
    edges = [config.draws * g // groups for g in range(groups + 1)]
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        acc = _Moments(dim)
        for start in range(lo, hi, config.chunk_size):
            count = min(config.chunk_size, hi - start)
            acc.add_batch(columns(standard_normals(config.seed, start, count)))
        out.append(acc)
    return out


def _merge_all(parts: list[_Moments], skip: int | None = None) -> _Moments:
    total = _Moments(parts[0].mean.shape[0])
    for i, p in enumerate(parts):
        if i != skip:
            total.merge(p)
    return total


def _jackknife_se(parts: list[_Moments], stat: Callable[[_Moments], np.ndarray]) -> np.ndarray:
    g = len(parts)
    if g < 2:
        return np.full_like(np.asarray(stat(parts[0]), dtype=float), np.inf)
    loo = np.array([stat(_merge_all(parts, skip=i)) for i in range(g)])
    return np.sqrt((g - 1) / g * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))


def simulate(scenario: Scenario, strategy: LinearStrategy, config: SimConfig = SimConfig()) -> EmpiricalJoint:
    """Sample mean and covariance of (theta, a, x, y) with jackknife standard errors."""
    parts = _group_moments(config, lambda z: structural_draws(scenario, strategy, z), 4)
    total = _merge_all(parts)
    return EmpiricalJoint(
        variables=CANONICAL_ORDER,
        sample_mean=total.mean,
        sample_covariance=total.covariance(),
        draws=total.n,
        mean_se=_jackknife_se(parts, lambda m: m.mean),
        covariance_se=_jackknife_se(parts, lambda m: m.covariance()),
    )


def empirical_fit(empirical: EmpiricalJoint, dag: Dag) -> FittedModel:
    """OLS fit of each node on its DAG parents, from the sample moments."""
    return fit(empirical.as_gaussian(), dag)


def empirical_welfare(scenario: Scenario, strategy: LinearStrategy, config: SimConfig = SimConfig()) -> Estimate:
    """Sample mean of -(x - a)^2 with a jackknife standard error."""

    def loss(z):
        d = structural_draws(scenario, strategy, z)
        return -((d[:, 2] - d[:, 1]) ** 2)[:, None]

    parts = _group_moments(config, loss, 1)
    total = _merge_all(parts)
    se = _jackknife_se(parts, lambda m: m.mean)
    return Estimate(float(total.mean[0]), float(se[0]), total.n)

"""Fitting a DAG to a Gaussian joint and reading off the subjective belief.

Fitting a DAG to a Gaussian joint replaces each node's distribution by its
regression on the node's parents; composing those regressions back into a
joint gives the distribution the DAG "believes in". The decision maker's
forecast of x is the regression of x on (theta, a) inside that composed joint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .dag import Dag
from .gaussian import GaussianJoint, LinearConditional, condition
from .scm import Scenario, subjective_dag


@dataclass(frozen=True)
class FittedModel:
    dag: Dag
    factors: Mapping[str, LinearConditional]

    def __post_init__(self):
        if set(self.factors) != set(self.dag.nodes):
            raise ValueError("need exactly one factor per DAG node")
        for node, f in self.factors.items():
            if set(f.given) != self.dag.parents(node) or f.target != node:
                raise ValueError(f"factor for {node} does not condition on its parents")

    @property
    def singular(self) -> bool:
        return any(f.singular for f in self.factors.values())


@dataclass(frozen=True)
class SubjectiveBelief:
    joint: GaussianJoint
    conditional_x: LinearConditional
    fitted: FittedModel

    @property
    def c_theta(self) -> float:
        return self.conditional_x.coef("theta")

    @property
    def c_a(self) -> float:
        return self.conditional_x.coef("a")


def fit(joint: GaussianJoint, dag: Dag) -> FittedModel:
    """Regress every node on its parents under ``joint``."""
    joint.index(dag.nodes)
    factors = {node: condition(joint, node, dag.ordered_parents(node)) for node in dag.nodes}
    return FittedModel(dag, factors)


def compose(fitted: FittedModel) -> GaussianJoint:
    """The Gaussian joint that factorizes along ``fitted.dag`` with the fitted factors.

    Each node is written as an affine function of independent residuals,
    visiting nodes in topological order.
    """
    nodes = fitted.dag.nodes
    n = len(nodes)
    pos = {v: i for i, v in enumerate(nodes)}
    offset = np.zeros(n)
    load = np.zeros((n, n))  # row i: node i in terms of residuals
    resid_var = np.zeros(n)
    for node in fitted.dag.topological_order():
        f = fitted.factors[node]
        i = pos[node]
        offset[i] = f.intercept
        load[i, i] = 1.0
        for parent, c in zip(f.given, f.coefficients):
            j = pos[parent]
            offset[i] += c * offset[j]
            load[i] += c * load[j]
        resid_var[i] = f.residual_variance
    return GaussianJoint.from_factor(nodes, offset, load * np.sqrt(resid_var))


def subjective_conditional(scenario: Scenario, joint: GaussianJoint, dag: Dag | None = None) -> SubjectiveBelief:
    """E_G(x | theta, a) for the scenario's subjective DAG (or ``dag``)."""
    fitted = fit(joint, dag if dag is not None else subjective_dag(scenario))
    p_g = compose(fitted)
    cx = condition(p_g, "x", ("theta", "a"))
    return SubjectiveBelief(p_g, cx, fitted)

"""Behavioral consequences of reverse-causality errors in linear-Gaussian decision problems."""

from __future__ import annotations

__version__ = "0.1.0"

from .belief import FittedModel, SubjectiveBelief, compose, fit, subjective_conditional
from .dag import G, G_REVERSE, G_STAR, G_STAR_STAR, Dag, build_dag, parents, topological_order
from .equilibrium import (
    EquilibriumReport,
    benchmark_strategy,
    best_reply,
    closed_form_strategy,
    objective_welfare,
    solve_equilibrium,
    solve_personal_equilibrium,
    welfare_gap,
)
from .errors import (
    CycleError,
    DegenerateFocError,
    DegenerateNoiseError,
    NoConvergenceError,
    ParameterError,
    RevCausalError,
    SingularConditioningWarning,
    UnknownNodeError,
)
from .gaussian import GaussianJoint, LinearConditional, affine_image, condition, marginalize, signal_extraction_weight
from .montecarlo import EmpiricalJoint, Estimate, SimConfig, empirical_fit, empirical_welfare, simulate
from .scm import (
    PRESETS,
    Family,
    LinearStrategy,
    Scenario,
    load_scenario,
    objective_joint,
    preset,
    subjective_dag,
    true_dag,
)

__all__ = [name for name in dir() if not name.startswith("_") and name != "annotations"]

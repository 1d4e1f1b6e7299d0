"""Scenarios, linear strategies, and the objective joint they induce.

Three closed families of true models are supported:

``main``
    x = theta - gamma*a + eps,  y = x - lambda*a + eta   (true DAG G*, belief G)
``exogeneity-only``
    y = delta*a + eta,  x = theta - kappa*a + alpha*y + eps   (true DAG G**, belief G)
``reverse-only``
    same truth as ``main``, belief keeps a -> y (G with a -> y added)
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from . import dag as dags
from .dag import CANONICAL_ORDER, Dag
from .errors import ParameterError
from .gaussian import GaussianJoint, signal_extraction_weight

DEFAULT_TREMBLE = 1e-6  # times var_theta


class Family(str, enum.Enum):
    MAIN = "main"
    EXOGENEITY_ONLY = "exogeneity-only"
    REVERSE_ONLY = "reverse-only"

    @classmethod
    def parse(cls, text: str) -> "Family":
        key = text.strip().lower().replace("_", "-")
        aliases = {"exogeneityonly": "exogeneity-only", "reverseonly": "reverse-only", "exogeneity": "exogeneity-only", "reverse": "reverse-only"}
        key = aliases.get(key.replace("-", ""), key)
        try:
            return cls(key)
        except ValueError:
            raise ParameterError("family", f"unknown family {text!r}; expected one of {[f.value for f in cls]}") from None


_USES = {
    Family.MAIN: ("gamma", "lam"),
    Family.REVERSE_ONLY: ("gamma", "lam"),
    Family.EXOGENEITY_ONLY: ("kappa", "alpha", "delta"),
}
_STRUCTURAL = ("gamma", "lam", "kappa", "alpha", "delta")
# user-facing field names; ``lambda`` is a keyword
_PUBLIC = {"lam": "lambda"}


@dataclass(frozen=True)
class Scenario:
    family: Family
    gamma: float | None = None
    lam: float | None = None
    kappa: float | None = None
    alpha: float | None = None
    delta: float | None = None
    var_theta: float = 1.0
    var_eps: float = 1.0
    var_eta: float = 1.0
    unsafe: bool = False

    def __post_init__(self):
        fam = self.family if isinstance(self.family, Family) else Family.parse(str(self.family))
        object.__setattr__(self, "family", fam)
        used = _USES[fam]
        for name in _STRUCTURAL:
            value = getattr(self, name)
            public = _PUBLIC.get(name, name)
            if name in used:
                if value is None:
                    raise ParameterError(public, f"{public} is required for family {fam.value}")
                if not math.isfinite(value):
                    raise ParameterError(public, f"{public} must be finite")
                object.__setattr__(self, name, float(value))
            elif value is not None:
                raise ParameterError(public, f"{public} is not a parameter of family {fam.value}")
        for name in ("var_theta", "var_eps", "var_eta"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ParameterError(name, f"{name} must be a finite nonnegative variance")
            object.__setattr__(self, name, float(v))
        if self.var_theta <= 0:
            raise ParameterError("var_theta", "var_theta must be positive")
        if self.unsafe:
            return
        if fam is Family.EXOGENEITY_ONLY:
            for name in used:
                if not 0.0 < getattr(self, name) < 1.0:
                    raise ParameterError(name, f"{name} out of (0,1)")
        else:
            for name in used:
                if not 0.0 <= getattr(self, name) <= 1.0:
                    public = _PUBLIC.get(name, name)
                    raise ParameterError(public, f"{public} out of [0,1]")

    @property
    def tau(self) -> float:
        if self.var_eta == 0:
            return math.inf if self.var_eps > 0 else math.nan
        return self.var_eps / self.var_eta

    @property
    def beta(self) -> float:
        return signal_extraction_weight(self.var_eps, self.var_eta)

    @property
    def pure_prediction(self) -> bool:
        """The action has no direct effect on x (gamma = 0)."""
        return self.family is not Family.EXOGENEITY_ONLY and self.gamma == 0.0

    def with_params(self, **changes) -> "Scenario":
        """Copy with changes; accepts ``lambda`` and ``tau`` (moves var_eps, var_eta fixed)."""
        if "lambda" in changes:
            changes["lam"] = changes.pop("lambda")
        if "tau" in changes:
            tau = float(changes.pop("tau"))
            changes["var_eps"] = tau * changes.get("var_eta", self.var_eta)
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = {"family": self.family.value}
        for name in _USES[self.family]:
            out[_PUBLIC.get(name, name)] = getattr(self, name)
        out.update(var_theta=self.var_theta, var_eps=self.var_eps, var_eta=self.var_eta)
        if self.unsafe:
            out["unsafe"] = True
        return out

    def default_tremble(self) -> float:
        return DEFAULT_TREMBLE * self.var_theta


@dataclass(frozen=True)
class LinearStrategy:
    """a = intercept + slope*theta + nu, nu ~ N(0, tremble_variance)."""

    slope: float
    intercept: float = 0.0
    tremble_variance: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise ParameterError("strategy", "strategy slope and intercept must be finite")
        if not (math.isfinite(self.tremble_variance) and self.tremble_variance >= 0):
            raise ParameterError("tremble_variance", "tremble_variance must be finite and nonnegative")

    # short aliases matching the usual notation a = b + k theta
    @property
    def k(self) -> float:
        return self.slope

    @property
    def b(self) -> float:
        return self.intercept

    def with_tremble(self, tremble: float) -> "LinearStrategy":
        return replace(self, tremble_variance=float(tremble))


def true_dag(scenario: Scenario) -> Dag:
    if scenario.family is Family.EXOGENEITY_ONLY:
        return dags.G_STAR_STAR
    return dags.G_STAR


def subjective_dag(scenario: Scenario) -> Dag:
    if scenario.family is Family.REVERSE_ONLY:
        return dags.G_REVERSE
    return dags.G


SHOCKS = ("theta", "nu", "eps", "eta")


def structural_matrix(scenario: Scenario, strategy: LinearStrategy) -> tuple[np.ndarray, np.ndarray]:
    """``(offset, loading)`` with (theta, a, x, y) = offset + loading @ shocks.

    Shocks are (theta, nu, eps, eta), independent, mean zero.
    """
    k, b = strategy.slope, strategy.intercept
    theta = np.array([1.0, 0.0, 0.0, 0.0])
    a = np.array([k, 1.0, 0.0, 0.0])
    eps = np.array([0.0, 0.0, 1.0, 0.0])
    eta = np.array([0.0, 0.0, 0.0, 1.0])
    if scenario.family is Family.EXOGENEITY_ONLY:
        kap, al, de = scenario.kappa, scenario.alpha, scenario.delta
        y = de * a + eta
        x = theta - kap * a + al * y + eps
        c_y = de * b
        c_x = -kap * b + al * c_y
    else:
        g, lam = scenario.gamma, scenario.lam
        x = theta - g * a + eps
        y = x - lam * a + eta
        c_x = -g * b
        c_y = c_x - lam * b
    loading = np.vstack([theta, a, x, y])
    offset = np.array([0.0, b, c_x, c_y])
    return offset, loading


def objective_joint(scenario: Scenario, strategy: LinearStrategy) -> GaussianJoint:
    """Exact long-run joint of (theta, a, x, y) under the true equations."""
    offset, L = structural_matrix(scenario, strategy)
    shock_var = np.array([scenario.var_theta, strategy.tremble_variance, scenario.var_eps, scenario.var_eta])
    return GaussianJoint.from_factor(CANONICAL_ORDER, offset, L * np.sqrt(shock_var))


# Preset parameter values are illustrative defaults chosen for this package;
# the underlying examples come without numbers.
PRESETS: Mapping[str, Scenario] = {
    "parenting": Scenario(Family.MAIN, gamma=0.5, lam=0.3, var_theta=1.0, var_eps=1.0, var_eta=1.0),
    "quantity-setting": Scenario(Family.MAIN, gamma=0.8, lam=0.6, var_theta=1.0, var_eps=2.0, var_eta=1.0),
    "phillips": Scenario(Family.MAIN, gamma=0.0, lam=0.5, var_theta=1.0, var_eps=1.0, var_eta=1.0),
    "public-health": Scenario(Family.EXOGENEITY_ONLY, kappa=0.5, alpha=0.5, delta=0.5),
    "adolescent": Scenario(Family.REVERSE_ONLY, gamma=0.4, lam=0.5, var_theta=1.0, var_eps=1.0, var_eta=1.0),
}


def preset(name: str) -> Scenario:
    try:
        return PRESETS[name]
    except KeyError:
        raise ParameterError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# -- flat key=value scenario files ---------------------------------------

_FLOAT_KEYS = ("gamma", "lambda", "kappa", "alpha", "delta", "var_theta", "var_eps", "var_eta", "tau")


def parse_keyvalue(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError("file", f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lower().replace("-", "_")] = value
    return out


def scenario_from_mapping(values: Mapping[str, object], unsafe: bool = False) -> Scenario:
    """Build a Scenario from string or numeric values keyed by public names.

    ``preset`` seeds defaults, explicit keys override; ``tau`` sets var_eps
    relative to var_eta. Unknown keys are rejected.
    """
    values = dict(values)
    base: dict[str, object] = {}
    if "preset" in values:
        base = preset(str(values.pop("preset"))).to_dict()
        base.pop("unsafe", None)
    if "family" in values:
        fam_text = Family.parse(str(values.pop("family"))).value
        if base.get("family") != fam_text:
            # a preset of another family contributes only its variances
            base = {k: v for k, v in base.items() if k.startswith("var_")}
        base["family"] = fam_text
    if "family" not in base:
        raise ParameterError("family", "scenario needs a family or a preset")
    fam = Family.parse(str(base.pop("family")))
    unsafe = unsafe or str(values.pop("unsafe", "false")).strip().lower() in ("1", "true", "yes")
    for key, raw in values.items():
        if key not in _FLOAT_KEYS:
            raise ParameterError(key, f"unknown scenario key {key!r}")
        try:
            base[key] = float(raw)  # type: ignore[arg-type]
        except (TypeError, ValueError):
            raise ParameterError(key, f"{key} must be a number, got {raw!r}") from None
    tau = base.pop("tau", None)
    if tau is not None:
        if "var_eps" in values:
            raise ParameterError("tau", "give either tau or var_eps, not both")
        base["var_eps"] = float(tau) * float(base.get("var_eta", 1.0))  # type: ignore[arg-type]
    kwargs = {("lam" if k == "lambda" else k): v for k, v in base.items()}
    return Scenario(fam, unsafe=unsafe, **kwargs)  # type: ignore[arg-type]


def load_scenario(path, unsafe: bool = False) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_mapping(parse_keyvalue(fh.read()), unsafe=unsafe)


def dump_scenario(scenario: Scenario) -> str:
    return "".join(f"{k}={v}\n" for k, v in scenario.to_dict().items())

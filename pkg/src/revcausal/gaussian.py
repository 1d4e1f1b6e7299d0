"""Exact algebra on multivariate normal distributions."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateNoiseError, SingularConditioningWarning, UnknownNodeError

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10
SINGULAR_COND = 1e12


@dataclass(frozen=True, eq=False)
class GaussianJoint:
    """Mean vector and covariance matrix over named variables.

    The covariance is symmetrized on construction and eigenvalues in
    ``[-PSD_TOL, 0)`` are clipped to zero. Anything more negative is an error.

    ``factor``, when known, is a square root with ``covariance = factor @ factor.T``
    (rows are variables, columns independent unit shocks). Conditioning then
    works on the factor, which squares-roots the condition number of the
    problem; this matters for near-pure strategies where theta and a are almost
    collinear.
    """

    variables: tuple[str, ...]
    mean: np.ndarray
    covariance: np.ndarray
    factor: np.ndarray | None = None

    def __post_init__(self):
        variables = tuple(self.variables)
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.covariance, dtype=float)
        n = len(variables)
        if self.factor is not None:
            F = np.array(self.factor, dtype=float)
            if F.ndim != 2 or F.shape[0] != n:
                raise ValueError(f"factor must have {n} rows, got shape {F.shape}")
            F.setflags(write=False)
            object.__setattr__(self, "factor", F)
        if len(set(variables)) != n:
            raise ValueError(f"duplicate variables {variables}")
        if mean.shape != (n,) or cov.shape != (n, n):
            raise ValueError(f"shape mismatch: {n} variables, mean {mean.shape}, covariance {cov.shape}")
        scale = max(1.0, float(np.max(np.abs(cov)))) if n else 1.0
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-8 * scale:
            raise ValueError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        if n:
            w, v = np.linalg.eigh(cov)
            if w[0] < -PSD_TOL * scale:
                raise ValueError(f"covariance not positive semidefinite (min eigenvalue {w[0]:.3g})")
            if w[0] < 0:
                w = np.clip(w, 0.0, None)
                cov = (v * w) @ v.T
                cov = 0.5 * (cov + cov.T)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @classmethod
    def from_factor(cls, variables, mean, factor) -> "GaussianJoint":
        F = np.asarray(factor, dtype=float)
        return cls(tuple(variables), mean, F @ F.T, F)

    def index(self, names: Iterable[str]) -> list[int]:
        pos = {v: i for i, v in enumerate(self.variables)}
        out = []
        for n in names:
            if n not in pos:
                raise UnknownNodeError(f"unknown variable {n!r}; have {list(self.variables)}")
            out.append(pos[n])
        return out

    def mean_of(self, name: str) -> float:
        return float(self.mean[self.index([name])[0]])

    def var(self, name: str) -> float:
        i = self.index([name])[0]
        return float(self.covariance[i, i])

    def cov(self, a: str, b: str) -> float:
        i, j = self.index([a, b])
        return float(self.covariance[i, j])

    def __repr__(self) -> str:
        return f"GaussianJoint({list(self.variables)}, mean={self.mean.tolist()}, covariance={self.covariance.tolist()})"


@dataclass(frozen=True, eq=False)
class LinearConditional:
    """``target = intercept + coefficients . given + noise``, noise ~ N(0, residual_variance)."""

    target: str
    given: tuple[str, ...]
    intercept: float
    coefficients: np.ndarray
    residual_variance: float
    condition_number: float = 1.0
    singular: bool = False

    def __post_init__(self):
        coef = np.array(self.coefficients, dtype=float).reshape(-1)
        if coef.shape != (len(self.given),):
            raise ValueError("coefficients must align with given")
        if self.residual_variance < 0:
            raise ValueError("residual_variance must be nonnegative")
        coef.setflags(write=False)
        object.__setattr__(self, "given", tuple(self.given))
        object.__setattr__(self, "coefficients", coef)

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.given.index(name)])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.given, map(float, self.coefficients)))


def condition(joint: GaussianJoint, target: str, given: Sequence[str]) -> LinearConditional:
    """Affine conditional expectation of ``target`` given ``given``.

    Uses the square-root factor when the joint carries one (least squares),
    otherwise the Schur complement of the covariance. When the conditioning
    block's condition number (of its correlation matrix, so that units do not
    matter) exceeds ``SINGULAR_COND`` the minimum-norm
    solution is used, the result is flagged ``singular`` and a
    :class:`SingularConditioningWarning` is emitted.
    """
    given = tuple(given)
    if target in given:
        raise ValueError(f"target {target!r} is also conditioned on")
    (t,) = joint.index([target])
    g = joint.index(given)
    mu, S = joint.mean, joint.covariance
    if not g:
        return LinearConditional(target, (), float(mu[t]), np.zeros(0), float(S[t, t]))

    if joint.factor is not None:
        coef, resid, cond = _solve_factor(joint.factor[g], joint.factor[t])
    else:
        coef, resid, cond = _solve_cov(S[np.ix_(g, g)], S[g, t], float(S[t, t]))
    singular = not np.isfinite(cond) or cond > SINGULAR_COND
    if singular:
        warnings.warn(
            f"conditioning {target} on {given}: block condition number {cond:.3g}; using pseudoinverse",
            SingularConditioningWarning,
            stacklevel=2,
        )
    intercept = float(mu[t] - coef @ mu[g])
    scale = max(abs(float(S[t, t])), 1e-300)
    if resid < 0:
        if resid < -1e-9 * scale:
            raise ArithmeticError(f"negative residual variance {resid:.3g} conditioning {target}")
        resid = 0.0
    return LinearConditional(target, given, intercept, coef, resid, condition_number=cond, singular=singular)


def _solve_cov(S_gg, S_gt, S_tt):
    # Schur complement S_tt - S_tg S_gg^-1 S_gt
    d = np.sqrt(np.diag(S_gg))
    cond = float(np.linalg.cond(S_gg / np.outer(d, d))) if np.all(d > 0) else np.inf
    if not np.isfinite(cond) or cond > SINGULAR_COND:
        coef = np.linalg.pinv(S_gg, rcond=1e-15, hermitian=True) @ S_gt
    else:
        coef = np.linalg.solve(S_gg, S_gt)
    return coef, float(S_tt - coef @ S_gt), cond


def _solve_factor(F_g, f_t):
    # least squares  min || F_g.T c - f_t ||; the residual norm is the
    # conditional variance. Singular values below sqrt(1e-15) relative are
    # dropped, the factor-space image of the covariance pseudoinverse cutoff.
    # Rows are scaled to unit norm first, so neither the cutoff nor the
    # reported condition number depends on the variables' units.
    norms = np.linalg.norm(F_g, axis=1)
    if not np.all(norms > 0):
        coef, *_ = np.linalg.lstsq(F_g.T, f_t, rcond=np.sqrt(1e-15))
        r = f_t - F_g.T @ coef
        return coef, float(r @ r), np.inf
    G = F_g / norms[:, None]
    sv = np.linalg.svd(G, compute_uv=False)
    cond = float((sv[0] / sv[-1]) ** 2) if sv[-1] > 0 else np.inf
    scaled, *_ = np.linalg.lstsq(G.T, f_t, rcond=np.sqrt(1e-15))
    coef = scaled / norms
    r = f_t - F_g.T @ coef
    return coef, float(r @ r), cond


def marginalize(joint: GaussianJoint, keep: Iterable[str]) -> GaussianJoint:
    """Sub-joint over ``keep``, in the joint's own variable order."""
    keep = set(keep)
    if not keep:
        raise ValueError("keep must be nonempty")
    joint.index(keep)
    names = tuple(v for v in joint.variables if v in keep)
    idx = joint.index(names)
    F = None if joint.factor is None else joint.factor[idx]
    return GaussianJoint(names, joint.mean[idx], joint.covariance[np.ix_(idx, idx)], F)


def affine_image(joint: GaussianJoint, names: Sequence[str], matrix, offset=None) -> GaussianJoint:
    """Distribution of ``offset + matrix @ z`` for ``z ~ joint``."""
    A = np.asarray(matrix, dtype=float)
    c = np.zeros(A.shape[0]) if offset is None else np.asarray(offset, dtype=float)
    F = None if joint.factor is None else A @ joint.factor
    return GaussianJoint(tuple(names), c + A @ joint.mean, A @ joint.covariance @ A.T, F)


def signal_extraction_weight(var_eps: float, var_eta: float) -> float:
    """Weight on ``z = eps + eta`` in E(eps | z) for independent Gaussians."""
    if var_eps < 0 or var_eta < 0:
        raise ValueError("variances must be nonnegative")
    total = var_eps + var_eta
    if total == 0:
        raise DegenerateNoiseError("both noise variances are zero; the weight is undefined")
    return var_eps / total

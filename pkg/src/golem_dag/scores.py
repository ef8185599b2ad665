"""Penalized scores for linear DAG learning and their analytic gradients.

Three data terms are available:

* ``NV``: Gaussian profile likelihood with one noise variance per node,
  ``1/2 sum_i log(||X_i - X B_i||^2) - log|det(I - B)|``;
* ``EV``: the equal-variance profile likelihood,
  ``d/2 log(||X - X B||_F^2) - log|det(I - B)|``;
* ``LS``: least squares ``||X - X B||_F^2 / (2n)``.

Additive constants of the profile likelihoods are dropped, so values are only
comparable within one variant. The full score adds ``lambda1 * ||B||_1`` and
``lambda2 * h(B)`` with ``h(B) = tr(exp(B o B)) - d``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateResidualError
from .numlin import (
    as_square,
    expm_unchecked,
    inverse_transpose_unchecked,
    log_abs_det,
    log_abs_det_unchecked,
    matrix_exp,
)

CENTER_TOL = 1e-6


class Variant(str, Enum):
    NV = "NV"
    EV = "EV"
    LS = "LS"


@dataclass(frozen=True)
class ScoreConfig:
    variant: Variant = Variant.EV
    lambda1: float = 2e-2
    lambda2: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("penalty coefficients must be non-negative")

    @classmethod
    def golem_ev(cls, lambda1: float = 2e-2, lambda2: float = 5.0) -> ScoreConfig:
        return cls(Variant.EV, lambda1, lambda2)

    @classmethod
    def golem_nv(cls, lambda1: float = 2e-3, lambda2: float = 5.0) -> ScoreConfig:
        return cls(Variant.NV, lambda1, lambda2)


@dataclass(frozen=True)
class ScoreValue:
    total: float
    data_term: float
    l1_term: float
    dag_term: float


def _check_centered(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("data must be an n x d matrix with n >= 1")
    if not np.all(np.isfinite(x)):
        raise ValueError("data has non-finite entries")
    if np.abs(x.mean(axis=0)).max() > CENTER_TOL:
        raise ValueError("data columns must be centered (see sem.center_columns)")
    return x


def _check_pair(b, x):
    b = as_square(b, "b")
    x = _check_centered(x)
    if x.shape[1] != b.shape[0]:
        raise ValueError(f"data has {x.shape[1]} columns but graph has {b.shape[0]} nodes")
    return b, x


def _residual_sums(b, x) -> np.ndarray:
    r = x - x @ b
    return np.einsum("ki,ki->i", r, r)


def likelihood_nv(b, x) -> float:
    b, x = _check_pair(b, x)
    s = _residual_sums(b, x)
    if np.any(s <= 0):
        raise DegenerateResidualError("a residual column has zero sum of squares")
    return float(0.5 * np.log(s).sum() - log_abs_det(np.eye(b.shape[0]) - b))


def likelihood_ev(b, x) -> float:
    b, x = _check_pair(b, x)
    s = _residual_sums(b, x).sum()
    if s <= 0:
        raise DegenerateResidualError("total residual sum of squares is zero")
    d = b.shape[0]
    return float(0.5 * d * np.log(s) - log_abs_det(np.eye(d) - b))


def least_squares(b, x) -> float:
    b, x = _check_pair(b, x)
    return float(_residual_sums(b, x).sum() / (2.0 * x.shape[0]))


def l1_penalty(b) -> float:
    b = np.asarray(b, dtype=np.float64)
    return float(np.abs(b).sum() - np.abs(np.diag(b)).sum())


def dag_penalty(b) -> float:
    """h(B) = tr(exp(B o B)) - d; zero exactly when B is acyclic."""
    b = as_square(b, "b")
    if not b.any():
        return 0.0
    return float(np.trace(matrix_exp(b * b)) - b.shape[0])


def dag_penalty_grad(b) -> np.ndarray:
    """Gradient of h: ``exp(B o B)^T o 2B``."""
    b = as_square(b, "b")
    return expm_unchecked(b * b).T * 2.0 * b


_DATA_TERMS = {Variant.NV: likelihood_nv, Variant.EV: likelihood_ev, Variant.LS: least_squares}


def score(b, x, cfg: ScoreConfig) -> ScoreValue:
    data = _DATA_TERMS[cfg.variant](b, x)
    l1 = l1_penalty(b)
    h = dag_penalty(b)
    return ScoreValue(data + cfg.lambda1 * l1 + cfg.lambda2 * h, data, l1, h)


def score_gradient(b, x, cfg: ScoreConfig) -> np.ndarray:
    """Gradient of the total score with the diagonal zeroed.

    The l1 term contributes the subgradient ``sign(B)`` (0 at 0).
    """
    b, x = _check_pair(b, x)
    return ScoreObjective.from_data(x, cfg).gradient(b)


class ScoreObjective:
    """Score and gradient evaluation on fixed data, via the Gram matrix ``X^T X``.

    Used inside optimization loops; values agree with :func:`score` up to
    floating-point rounding.
    """

    def __init__(self, gram, n: int, cfg: ScoreConfig):
        self.gram = np.asarray(gram, dtype=np.float64)
        self.n = int(n)
        self.d = self.gram.shape[0]
        self.cfg = cfg
        self._eye = np.eye(self.d)

    @classmethod
    def from_data(cls, x, cfg: ScoreConfig) -> ScoreObjective:
        x = _check_centered(x)
        return cls(x.T @ x, x.shape[0], cfg)

    @classmethod
    def from_covariance(cls, sigma, cfg: ScoreConfig) -> ScoreObjective:
        """Population form: ``sigma`` stands in for ``X^T X / n``."""
        return cls(sigma, 1, cfg)

    def _sums(self, b):
        a = self._eye - b
        ga = self.gram @ a  # = X^T R
        s = np.einsum("ji,ji->i", a, ga)
        return a, ga, s

    def data_term(self, b) -> float:
        a, _, s = self._sums(b)
        v = self.cfg.variant
        if v is Variant.LS:
            return float(s.sum() / (2.0 * self.n))
        if v is Variant.NV:
            if np.any(s <= 0):
                raise DegenerateResidualError("a residual column has zero sum of squares")
            return float(0.5 * np.log(s).sum() - log_abs_det_unchecked(a))
        tot = s.sum()
        if tot <= 0:
            raise DegenerateResidualError("total residual sum of squares is zero")
        return float(0.5 * self.d * np.log(tot) - log_abs_det_unchecked(a))

    def value(self, b) -> ScoreValue:
        b = np.asarray(b, dtype=np.float64)
        data = self.data_term(b)
        l1 = l1_penalty(b)
        h = dag_penalty(b)
        return ScoreValue(data + self.cfg.lambda1 * l1 + self.cfg.lambda2 * h, data, l1, h)

    def data_gradient(self, b) -> np.ndarray:
        a, ga, s = self._sums(b)
        v = self.cfg.variant
        if v is Variant.LS:
            return -ga / self.n
        if v is Variant.NV:
            if np.any(s <= 0):
                raise DegenerateResidualError("a residual column has zero sum of squares")
            g = -ga / s
        else:
            tot = s.sum()
            if tot <= 0:
                raise DegenerateResidualError("total residual sum of squares is zero")
            g = -(self.d / tot) * ga
        return g + inverse_transpose_unchecked(a)

    def gradient(self, b) -> np.ndarray:
        """Total-score gradient, diagonal zeroed. ``b`` is trusted to be a finite square array."""
        g = self.data_gradient(b)
        if self.cfg.lambda1:
            g += self.cfg.lambda1 * np.sign(b)
        if self.cfg.lambda2:
            g += (2.0 * self.cfg.lambda2) * expm_unchecked(b * b).T * b
        np.fill_diagonal(g, 0.0)
        return g


def population_score(b, sigma, cfg: ScoreConfig) -> float:
    """Asymptotic score with the covariance ``sigma`` in place of ``X^T X / n``.

    LS: ``tr((I-B)^T sigma (I-B)) / 2``; EV: ``d/2 log tr((I-B)^T sigma (I-B)) - log|det(I-B)|``;
    NV: ``1/2 sum_i log [(I-B)^T sigma (I-B)]_ii - log|det(I-B)|``. The empirical
    likelihoods exceed these by :func:`population_offset` at that sample size.
    Penalties are added with the configured coefficients.
    """
    sigma = as_square(sigma, "sigma")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12):
        raise ValueError("sigma must be symmetric")
    try:
        np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ValueError("sigma must be positive definite") from exc
    b = as_square(b, "b")
    if b.shape != sigma.shape:
        raise ValueError("b and sigma dimensions differ")
    return ScoreObjective.from_covariance(sigma, cfg).value(b).total


def population_offset(variant, d: int, n: int) -> float:
    """Constant ``empirical - population`` for a data term at sample size ``n``."""
    variant = Variant(variant)
    return 0.0 if variant is Variant.LS else 0.5 * d * float(np.log(n))

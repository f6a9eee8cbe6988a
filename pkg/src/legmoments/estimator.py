"""Truncated Legendre series estimator and its risk decomposition."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from numpy.polynomial import legendre as npleg
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .legendre import LegendreTable, build_legendre
from .model import DEFAULT_PREC, MomentData, beta_dot, exact_moments

__all__ = [
    "DEFAULT_ALPHA",
    "DEFAULT_TAIL_INDEX",
    "CoeffEstimate",
    "MiseBreakdown",
    "MiseBound",
    "SeriesFunction",
    "truncation_level",
    "estimate_coeffs",
    "exact_coeffs",
    "reconstruct",
    "variance_term",
    "analytic_mise",
    "mise_upper_bound",
    "LegendreMomentEstimator",
]

DEFAULT_ALPHA = 1 / math.log(4)
DEFAULT_TAIL_INDEX = 10**5


@dataclass(frozen=True)
class CoeffEstimate:
    theta_hat: np.ndarray
    N: int
    epsilon: float | None = None
    alpha: float | None = None


@dataclass(frozen=True)
class MiseBreakdown:
    variance: float
    bias_sq: float
    remainder: float
    tail_index: int

    @property
    def total(self) -> float:
        return self.variance + self.bias_sq

    def to_dict(self) -> dict:
        return {"variance": self.variance, "bias_sq": self.bias_sq,
                "remainder": self.remainder, "tail_index": self.tail_index,
                "total": self.total}


@dataclass(frozen=True)
class MiseBound:
    variance: float
    bias: float

    @property
    def total(self) -> float:
        return self.variance + self.bias


def truncation_level(epsilon: float, alpha: float = DEFAULT_ALPHA) -> int:
    """N = floor(alpha * ln(1/epsilon)), clamped to at least 1."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    N = math.floor(alpha * math.log(1 / epsilon))
    if N < 1:
        warnings.warn(f"truncation level {N} clamped to 1 (epsilon={epsilon} is large)",
                      stacklevel=2)
        N = 1
    return N


def estimate_coeffs(data: MomentData, N: int, table: LegendreTable | None = None,
                    alpha: float | None = None, prec: int = DEFAULT_PREC) -> CoeffEstimate:
    if N < 0:
        raise ValueError("N must be >= 0")
    if data.K < N:
        raise ValueError(f"need moments 0..{N}, only 0..{data.K} observed")
    if table is not None:
        table.require(N)
    th = np.array([beta_dot(k, data.y, prec) for k in range(N + 1)])
    return CoeffEstimate(theta_hat=th, N=N, epsilon=data.epsilon, alpha=alpha)


def exact_coeffs(theta: Mapping[int, Fraction], N: int) -> list[Fraction]:
    """Noiseless estimates for a polynomial f with rational Legendre coefficients.

    Moments are carried exactly as rational combinations of sqrt((2k+1)/2), so
    the result is rational only if every cross term between different radicals
    cancels; anything else raises ArithmeticError.
    """
    moments = exact_moments(dict(theta), N)
    out = []
    for i in range(N + 1):
        b = build_legendre(i).rational_coeffs
        acc: dict[int, Fraction] = {}
        for j in range(i + 1):
            if b[j]:
                for k, c in moments[j].items():
                    acc[k] = acc.get(k, Fraction(0)) + b[j] * c
        val = Fraction(0)
        for k, c in acc.items():
            if k == i:
                val += c * Fraction(2 * i + 1, 2)
            elif c != 0:
                raise ArithmeticError(f"irrational cross term between P_{i} and P_{k}")
        out.append(val)
    return out


class SeriesFunction:
    """f(x) = sum_k coef[k] P_k(x) for normalized Legendre P_k."""

    def __init__(self, coef):
        self.coef = np.array(coef, dtype=float)
        self._std = self.coef * np.sqrt((2 * np.arange(len(self.coef)) + 1) / 2)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > 1):
            raise ValueError("series is defined on [-1, 1]")
        return npleg.legval(x, self._std)

    def norm_sq(self) -> float:
        return math.fsum(self.coef**2)

    @property
    def degree(self) -> int:
        return len(self.coef) - 1


def reconstruct(est: CoeffEstimate | Sequence[float], table: LegendreTable | None = None) -> SeriesFunction:
    coef = est.theta_hat if isinstance(est, CoeffEstimate) else est
    if table is not None:
        table.require(len(coef) - 1)
    return SeriesFunction(coef)


def variance_term(epsilon: float, N: int) -> float:
    """epsilon**2 * sum_{k<=N} sigma_k**2, with the sum kept exact."""
    s = sum((build_legendre(k).sigma_sq for k in range(N + 1)), Fraction(0))
    return float(Fraction(epsilon) ** 2 * s)


def analytic_mise(theta, epsilon: float, N: int, T: int | None = None,
                  tail_remainder: float | None = None) -> MiseBreakdown:
    """variance + squared bias of the truncated estimator.

    ``theta`` is a SobolevFunction (which certifies its own tail) or a plain
    coefficient vector, in which case ``tail_remainder`` bounding the
    coefficients past the end of the vector is required.
    """
    if hasattr(theta, "theta_vec"):
        T = DEFAULT_TAIL_INDEX if T is None else T
        T = max(T, N)
        vec = theta.theta_vec(T)
        rem = theta.tail_bound(T)
    else:
        if tail_remainder is None:
            raise ValueError("a tail bound is required for a finite coefficient vector")
        vec = np.asarray(theta, dtype=float)
        T = len(vec) - 1
        rem = float(tail_remainder)
    tail = vec[N + 1:]
    bias = math.fsum(tail[::-1] ** 2) + rem
    return MiseBreakdown(variance=variance_term(epsilon, N), bias_sq=bias,
                         remainder=rem, tail_index=T)


def mise_upper_bound(epsilon: float, N: int, r: float, sobolev_radius: float) -> MiseBound:
    """Explicit-constant envelope of the risk.

    Variance: sigma_k**2 <= (2k+1)/2 * 4**(2k) / sqrt(k) term by term (sigma_0**2
    = 1/2 exactly).  Bias: radius**2 * N**(-2r), where radius**2 bounds
    sum_k k**(2r) theta_k**2.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    s = 0.5 + math.fsum((2 * k + 1) / 2 * 4.0 ** (2 * k) / math.sqrt(k) for k in range(1, N + 1))
    return MiseBound(variance=epsilon**2 * s, bias=sobolev_radius**2 * N ** (-2 * r))


class LegendreMomentEstimator(BaseEstimator):
    """Estimator-API wrapper: fit on observed moments, predict f-hat(x).

    Parameters
    ----------
    epsilon : float
        Noise level of the moment observations.
    alpha : float
        Truncation constant, N = floor(alpha * ln(1/epsilon)).
    n_terms : int or None
        Overrides the truncation rule when given.
    precision_bits : int
        Extra bits carried through the exact dot products.
    """

    def __init__(self, epsilon=1e-3, alpha=DEFAULT_ALPHA, n_terms=None,
                 precision_bits=DEFAULT_PREC):
        self.epsilon = epsilon
        self.alpha = alpha
        self.n_terms = n_terms
        self.precision_bits = precision_bits

    def _level(self) -> int:
        if self.n_terms is not None:
            if self.n_terms < 0:
                raise ValueError("n_terms must be >= 0")
            return int(self.n_terms)
        return truncation_level(self.epsilon, self.alpha)

    def fit(self, X, y=None):
        """X is the vector of observed moments y_0..y_K."""
        moments = check_array(X, ensure_2d=False, dtype=float).ravel()
        N = self._level()
        data = MomentData(mu=np.full_like(moments, np.nan), y=moments,
                          epsilon=float(self.epsilon or 0.0))
        est = estimate_coeffs(data, N, alpha=self.alpha, prec=self.precision_bits)
        self.n_terms_ = N
        self.coef_ = est.theta_hat
        self.series_ = SeriesFunction(est.theta_hat)
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        x = check_array(X, ensure_2d=False, dtype=float)
        return self.series_(x.ravel() if x.ndim > 1 and x.shape[1] == 1 else x)

    def transform(self, X):
        """Sequence-model coordinates of a batch of moment vectors (one per row)."""
        check_is_fitted(self, "coef_")
        Y = check_array(X, dtype=float)
        N = self.n_terms_
        if Y.shape[1] <= N:
            raise ValueError(f"need at least {N + 1} moments per row")
        return np.array([[beta_dot(k, row, self.precision_bits) for k in range(N + 1)] for row in Y])

"""Forward problem: moments of f, noisy observations, and the sequence model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import mpmath
import numpy as np

from .legendre import LegendreTable, build_legendre, monomial_moment

__all__ = [
    "MomentData",
    "SequenceObservations",
    "QuadratureError",
    "gauss_legendre",
    "legendre_inner",
    "forward_moments",
    "exact_moments",
    "derive_seed",
    "make_rng",
    "simulate",
    "beta_dot",
    "beta_dot_rational",
    "to_sequence_model",
]

DEFAULT_PREC = 128


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class MomentData:
    mu: np.ndarray
    y: np.ndarray
    epsilon: float
    seed: int | None = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if mu.shape != y.shape or mu.ndim != 1:
            raise ValueError("mu and y must be 1-D of equal length")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "y", y)

    @property
    def K(self) -> int:
        return len(self.y) - 1


@dataclass(frozen=True)
class SequenceObservations:
    y_tilde: np.ndarray
    epsilon: float
    theta_ref: np.ndarray | None = None

    @property
    def K(self) -> int:
        return len(self.y_tilde) - 1


# -- quadrature ---------------------------------------------------------------

@lru_cache(maxsize=32)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p0, p1 = np.ones_like(x), x.copy()
        for j in range(1, n):
            p0, p1 = p1, ((2 * j + 1) * x * p1 - j * p0) / (j + 1)
        dp = n * (x * p1 - p0) / (x * x - 1)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    p0, p1 = np.ones_like(x), x.copy()
    for j in range(1, n):
        p0, p1 = p1, ((2 * j + 1) * x * p1 - j * p0) / (j + 1)
    dp = n * (x * p1 - p0) / (x * x - 1)
    w = 2.0 / ((1 - x * x) * dp * dp)
    order = np.argsort(x)
    x, w = x[order], w[order]
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].

    Nodes are the roots of P_n found by Newton iteration on the three-term
    recurrence, started from Tricomi's asymptotic guess.
    """
    if n < 1:
        raise ValueError("n must be positive")
    return _gauss_legendre(int(n))


# -- moments ------------------------------------------------------------------

@lru_cache(maxsize=None)
def legendre_inner(k: int, j: int) -> Fraction:
    """Rational part of <x**j, P_k>: the inner product is sqrt((2k+1)/2) times this."""
    if j < k or (j - k) % 2:
        return Fraction(0)
    return sum(
        (b * monomial_moment(a + j) for a, b in enumerate(build_legendre(k).rational_coeffs) if b),
        Fraction(0),
    )


def exact_moments(theta: dict[int, Fraction], K: int) -> list[dict[int, Fraction]]:
    """Moments of f = sum theta_k P_k in surd form.

    Entry j maps k to a rational c with mu_j = sum_k c * sqrt((2k+1)/2).
    """
    out = []
    for j in range(K + 1):
        terms = {}
        for k, t in theta.items():
            g = legendre_inner(k, j)
            if g and t:
                terms[k] = Fraction(t) * g
        out.append(terms)
    return out


def _moments_from_theta(theta: Sequence[float], K: int, prec: int) -> np.ndarray:
    mu = np.zeros(K + 1)
    with mpmath.workprec(prec):
        radicals = [mpmath.sqrt(mpmath.mpf(2 * k + 1) / 2) for k in range(K + 1)]
        for j in range(K + 1):
            acc = mpmath.mpf(0)
            for k in range(min(j, len(theta) - 1) + 1):
                g = legendre_inner(k, j)
                if g and theta[k]:
                    acc += mpmath.mpf(theta[k]) * radicals[k] * g.numerator / g.denominator
            mu[j] = float(acc)
    return mu


def _quadrature_moments(f: Callable, K: int, max_order: int = 1024) -> np.ndarray:
    n = max(64, K + 40)
    prev = None
    while n <= max_order:
        x, w = gauss_legendre(n)
        fx = np.asarray(f(x), dtype=float)
        mu = np.array([np.dot(w, fx * x**k) for k in range(K + 1)])
        if prev is not None:
            scale = max(1.0, float(np.max(np.abs(mu))))
            if np.max(np.abs(mu - prev)) <= 1e-12 * scale:
                return mu
        prev = mu
        n *= 2
    raise QuadratureError(f"moments did not converge up to order {max_order}")


def forward_moments(f, K: int, prec: int = DEFAULT_PREC) -> np.ndarray:
    """True moments mu_0..mu_K of ``f`` over [-1, 1].

    ``f`` with Legendre coefficients (a ``SobolevFunction`` or anything with
    ``theta_vec``) takes the closed-form route: x**j only sees P_0..P_j, so the
    sum is finite.  Any other callable is integrated by Gauss-Legendre with
    order doubling.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    if hasattr(f, "theta_vec"):
        return _moments_from_theta(f.theta_vec(K), K, prec)
    if callable(f):
        return _quadrature_moments(f, K)
    raise TypeError("f must be a SobolevFunction or a callable")


# -- noise --------------------------------------------------------------------

def derive_seed(master: int, *key: int) -> int:
    """64-bit seed for cell ``key`` (e.g. experiment, replicate) of a master seed."""
    state = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in key))
    lo, hi = state.generate_state(2, dtype=np.uint32)
    return int(hi) << 32 | int(lo)


def make_rng(seed: int) -> np.random.Generator:
    """Philox4x64 counter-based stream; normals via numpy's ziggurat."""
    return np.random.Generator(np.random.Philox(int(seed)))


def simulate(mu, epsilon: float, seed: int) -> MomentData:
    mu = np.asarray(mu, dtype=float)
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if epsilon == 0:
        return MomentData(mu=mu, y=mu.copy(), epsilon=0.0, seed=seed)
    xi = make_rng(seed).standard_normal(len(mu))
    return MomentData(mu=mu, y=mu + epsilon * xi, epsilon=float(epsilon), seed=seed)


# -- exact linear transform ---------------------------------------------------

def beta_dot_rational(k: int, values: Sequence[float]) -> Fraction:
    """Exact sum_j b_{k,j} values[j]; beta_{k,j} is this times sqrt((2k+1)/2)."""
    num, exp = _dyadic_dot(k, values)
    return Fraction(num, 1 << exp)


def _dyadic_dot(k: int, values: Sequence[float]) -> tuple[int, int]:
    # floats are dyadic and b_{k,j} = n_j / 2**k: the sum is an integer over 2**exp
    p = build_legendre(k)
    parts = []
    for n, v in zip(p.numerators, values[: k + 1]):
        if n and v:
            a, b = float(v).as_integer_ratio()
            parts.append((n * a, b.bit_length() - 1))
    if not parts:
        return 0, 0
    e_max = max(e for _, e in parts)
    return sum(num << (e_max - e) for num, e in parts), e_max + k


def beta_dot(k: int, values: Sequence[float], prec: int = DEFAULT_PREC) -> float:
    """sum_j beta_{k,j} values[j], exact until a single final rounding.

    The rational part is summed exactly and the radical sqrt((2k+1)/2) is
    applied through an integer square root carrying ``prec`` extra bits.
    """
    total, exp = _dyadic_dot(k, values)
    if total == 0:
        return 0.0
    s = prec + 2
    root = math.isqrt(total * total * (2 * k + 1) << (2 * s - 1))
    return math.copysign(float(Fraction(root, 1 << (exp + s))), total)


def to_sequence_model(data: MomentData, table: LegendreTable | None = None,
                      K: int | None = None, theta_ref=None,
                      prec: int = DEFAULT_PREC) -> SequenceObservations:
    """Transform moment observations into y~_k = sum_j beta_{k,j} y_j."""
    K = data.K if K is None else K
    if K > data.K:
        raise ValueError(f"only {data.K + 1} moments observed, need {K + 1}")
    if table is not None:
        table.require(K)
    yt = np.array([beta_dot(k, data.y, prec) for k in range(K + 1)])
    ref = None if theta_ref is None else np.asarray(theta_ref, dtype=float)[: K + 1]
    return SequenceObservations(y_tilde=yt, epsilon=data.epsilon, theta_ref=ref)

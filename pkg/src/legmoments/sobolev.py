"""Test functions with known Legendre coefficients and certified Sobolev norms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["SobolevFunction", "make_test_function", "KINDS", "CERT_INDEX"]

# partial sums for the Sobolev radius run to this index before the integral remainder
CERT_INDEX = 10**6

KINDS = {"a": "polynomial", "b": "near_extremal", "c": "power_law"}


@dataclass(frozen=True)
class SobolevFunction:
    """f = sum_k theta_k P_k with smoothness index r.

    ``radius`` is a certified upper bound of sum_{k>=1} k**(2r) theta_k**2 and
    ``tail_bound(T)`` bounds sum_{k>T} theta_k**2.
    """

    kind: str
    r: float
    theta: Callable[[np.ndarray], np.ndarray]
    radius: float
    tail_bound: Callable[[int], float]
    params: dict = field(default_factory=dict)
    degree: int | None = None

    def theta_vec(self, T: int) -> np.ndarray:
        """theta_0..theta_T."""
        return self.theta(np.arange(T + 1))

    def sobolev_norm(self) -> float:
        """sqrt of the certified radius, i.e. a bound on the W_2^r seminorm."""
        return math.sqrt(self.radius)

    def __call__(self, x):
        from .estimator import SeriesFunction

        T = self.degree if self.degree is not None else 200
        return SeriesFunction(self.theta_vec(T))(x)

    def describe(self) -> dict:
        return {"kind": self.kind, "r": self.r, **self.params}


def _polynomial(r: float, coef) -> SobolevFunction:
    coef = np.array(coef, dtype=float)
    d = len(coef) - 1

    def theta(k):
        k = np.asarray(k)
        out = np.zeros(k.shape)
        m = k <= d
        out[m] = coef[k[m]]
        return out

    ks = np.arange(1, d + 1, dtype=float)
    radius = math.fsum(ks ** (2 * r) * coef[1:] ** 2)
    return SobolevFunction("polynomial", r, theta, radius,
                           lambda T: 0.0 if T >= d else math.fsum(coef[T + 1:] ** 2),
                           {"coef": coef.tolist()}, degree=d)


def _near_extremal(r: float, c: float) -> SobolevFunction:
    # theta_k = c k^-(r+1/2) / ln(k+1): sum k^(2r) theta_k^2 = c^2 sum 1/(k ln^2(k+1)) barely converges
    def theta(k):
        k = np.asarray(k, dtype=float)
        out = np.zeros(k.shape)
        m = k >= 1
        out[m] = c * k[m] ** -(r + 0.5) / np.log(k[m] + 1)
        return out

    ks = np.arange(1, CERT_INDEX + 1, dtype=float)
    partial = math.fsum((1.0 / (ks * np.log(ks + 1) ** 2))[::-1])
    # sum_{k>T} 1/(k ln^2(k+1)) <= int_T^inf dx/(x ln^2 x) = 1/ln T
    radius = c * c * (partial + 1 / math.log(CERT_INDEX))

    def tail(T):
        T = max(int(T), 2)
        return c * c * T ** (-2 * r) / (2 * r * math.log(T) ** 2)

    return SobolevFunction("near_extremal", r, theta, radius, tail, {"c": c})


def _power_law(r: float, c: float) -> SobolevFunction:
    def theta(k):
        k = np.asarray(k, dtype=float)
        out = np.zeros(k.shape)
        m = k >= 1
        out[m] = c * k[m] ** (-r - 1)
        return out

    ks = np.arange(1, CERT_INDEX + 1, dtype=float)
    partial = math.fsum((ks**-2.0)[::-1])
    radius = c * c * (partial + 1.0 / CERT_INDEX)

    def tail(T):
        T = max(int(T), 1)
        return c * c * T ** (-2 * r - 1) / (2 * r + 1)

    return SobolevFunction("power_law", r, theta, radius, tail, {"c": c})


def make_test_function(kind: str, r: float, **params) -> SobolevFunction:
    """Build a test function.

    kind ``a``/``polynomial``: finite Legendre vector ``coef``.
    kind ``b``/``near_extremal``: theta_k = c k^-(r+1/2) / ln(k+1), k >= 1.
    kind ``c``/``power_law``: theta_k = c k^-(r+1), k >= 1.
    theta_0 = 0 for kinds b and c.
    """
    if r <= 0:
        raise ValueError("smoothness r must be positive")
    kind = KINDS.get(kind, kind)
    if kind == "polynomial":
        return _polynomial(r, params.get("coef", [0.0, 0.0, 0.0, 1.0]))
    if kind == "near_extremal":
        return _near_extremal(r, float(params.get("c", 1.0)))
    if kind == "power_law":
        return _power_law(r, float(params.get("c", 1.0)))
    raise ValueError(f"unsupported test function kind {kind!r}")

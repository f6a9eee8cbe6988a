"""Exact normalized Legendre polynomials on [-1, 1].

The orthonormal polynomial of degree ``k`` is stored as

    P_k(x) = sqrt((2k+1)/2) * sum_j b[k, j] x**j

with ``b[k, j]`` exact rationals ``numerator / 2**k``.  The radical is kept
symbolic and only applied when a float is requested.  Monomial coefficients
grow like 4**k, so any float representation of them is useless past k ~ 25.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np

__all__ = [
    "LegendrePoly",
    "LegendreTable",
    "build_legendre",
    "recurrence_coeffs",
    "evaluate",
    "monomial_moment",
    "verify_binomial_upper",
    "verify_binomial_lower",
    "verify_sigma_bounds",
    "gram_matrix",
    "gram_check",
    "coeffs_csv",
]

DEFAULT_SWEEP_CAP = 200
DEFAULT_ESTIMATION_CAP = 60


@dataclass(frozen=True)
class LegendrePoly:
    """Normalized Legendre polynomial of a given degree.

    ``numerators[j]`` is the integer numerator of ``b[k, j]`` over ``2**degree``
    (zero when ``degree - j`` is odd).
    """

    degree: int
    numerators: tuple[int, ...]
    sigma_sq: Fraction = field(compare=False)

    @property
    def denominator_log2(self) -> int:
        return self.degree

    @property
    def rational_coeffs(self) -> tuple[Fraction, ...]:
        den = 1 << self.degree
        return tuple(Fraction(n, den) for n in self.numerators)

    @property
    def norm_sq(self) -> Fraction:
        """Square of the normalizing radical, (2k+1)/2."""
        return Fraction(2 * self.degree + 1, 2)

    def beta(self, j: int, prec: int = 53) -> float:
        """Float value of the monomial coefficient beta_{k,j}."""
        with mpmath.workprec(prec + 16):
            v = mpmath.mpf(self.numerators[j]) / (1 << self.degree)
            return float(v * mpmath.sqrt(mpmath.mpf(2 * self.degree + 1) / 2))

    def betas(self) -> np.ndarray:
        return np.array([self.beta(j) for j in range(self.degree + 1)])

    def __call__(self, x, prec: int | None = None):
        return evaluate(self, x, prec=prec)


def _closed_form_numerators(k: int) -> tuple[int, ...]:
    # coefficient of x^(k-2j) is (-1)^j C(k,j) C(2k-2j,k) / 2^k
    nums = [0] * (k + 1)
    for j in range(k // 2 + 1):
        nums[k - 2 * j] = (-1) ** j * math.comb(k, j) * math.comb(2 * k - 2 * j, k)
    return tuple(nums)


def _sigma_sq(k: int, nums: Sequence[int]) -> Fraction:
    return Fraction(2 * k + 1, 2) * Fraction(sum(n * n for n in nums), 1 << (2 * k))


@lru_cache(maxsize=None)
def build_legendre(k: int) -> LegendrePoly:
    """Closed-form exact coefficients of the degree-``k`` normalized polynomial."""
    if not isinstance(k, (int, np.integer)) or k < 0:
        raise ValueError(f"degree must be a non-negative integer, got {k!r}")
    k = int(k)
    nums = _closed_form_numerators(k)
    return LegendrePoly(degree=k, numerators=nums, sigma_sq=_sigma_sq(k, nums))


def recurrence_coeffs(k_max: int) -> list[tuple[Fraction, ...]]:
    """Unnormalized Legendre coefficients from Bonnet's recurrence.

    (n+1) Q_{n+1} = (2n+1) x Q_n - n Q_{n-1}, with Q_0 = 1, Q_1 = x.  Used as an
    oracle independent of the closed form.
    """
    out: list[tuple[Fraction, ...]] = [(Fraction(1),)]
    if k_max >= 1:
        out.append((Fraction(0), Fraction(1)))
    for n in range(1, k_max):
        prev, cur = out[n - 1], out[n]
        nxt = [Fraction(0)] * (n + 2)
        for j, c in enumerate(cur):
            nxt[j + 1] += (2 * n + 1) * c
        for j, c in enumerate(prev):
            nxt[j] -= n * c
        out.append(tuple(c / (n + 1) for c in nxt))
    return out[: k_max + 1]


class LegendreTable(Sequence[LegendrePoly]):
    """Immutable table of normalized polynomials of degree 0..k_max."""

    def __init__(self, k_max: int):
        if k_max < 0:
            raise ValueError("k_max must be >= 0")
        self.k_max = int(k_max)
        self._polys = tuple(build_legendre(k) for k in range(self.k_max + 1))

    def __getitem__(self, k):
        return self._polys[k]

    def __len__(self) -> int:
        return len(self._polys)

    def sigma_sq(self) -> list[Fraction]:
        return [p.sigma_sq for p in self._polys]

    def require(self, k: int) -> None:
        if k > self.k_max:
            raise ValueError(f"Legendre table covers degrees 0..{self.k_max}, need {k}")


def _default_prec(k: int) -> int:
    # Horner partial sums reach ~4**k before cancelling to O(1).
    return 2 * k + 2 * 53 + 16


def evaluate(p: LegendrePoly, x, prec: int | None = None):
    """Evaluate ``p`` at ``x`` (scalar or array) with extended-precision Horner.

    The rational part is summed with ``prec`` bits (default grows with degree so
    that the alternating coefficients cancel safely) and the radical is applied
    once at the end.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1):
        raise ValueError("Legendre polynomials are evaluated on [-1, 1] only")
    prec = prec or _default_prec(p.degree)
    den = 1 << p.degree
    with mpmath.workprec(prec):
        scale = mpmath.sqrt(mpmath.mpf(2 * p.degree + 1) / 2) / den
        nums = [mpmath.mpf(n) for n in p.numerators]

        def one(t: float) -> float:
            t = mpmath.mpf(t)
            acc = mpmath.mpf(0)
            for c in reversed(nums):
                acc = acc * t + c
            return float(acc * scale)

        if arr.ndim == 0:
            return one(float(arr))
        return np.array([one(float(t)) for t in arr.ravel()]).reshape(arr.shape)


def monomial_moment(m: int) -> Fraction:
    """Integral of x**m over [-1, 1]."""
    return Fraction(2, m + 1) if m % 2 == 0 else Fraction(0)


def verify_binomial_upper(n_max: int) -> list[tuple[int, bool]]:
    """Exact check of C(2n,n) <= 4**n / n**(1/4), raised to the fourth power."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return [(n, math.comb(2 * n, n) ** 4 * n <= 4 ** (4 * n)) for n in range(1, n_max + 1)]


def verify_binomial_lower(n_max: int) -> list[tuple[int, bool]]:
    """Exact check of C(2n,n) >= 4**n / (2 sqrt(n)), squared."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return [(n, math.comb(2 * n, n) ** 2 * 4 * n >= 4 ** (2 * n)) for n in range(1, n_max + 1)]


def verify_sigma_bounds(k_max: int) -> list[tuple[int, bool, bool]]:
    """Exact check of 4**(k-1) <= sigma_k**2 <= (2k+1)/2 * 4**(2k) / sqrt(k)."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    out = []
    for k in range(1, k_max + 1):
        s = build_legendre(k).sigma_sq
        lower = s >= 4 ** (k - 1)
        upper = (2 * s) ** 2 * k <= (2 * k + 1) ** 2 * 4 ** (4 * k)
        out.append((k, lower, upper))
    return out


def gram_matrix(k_max: int) -> list[list[Fraction]]:
    """Exact S[j][k] = sum_ab b[j,a] b[k,b] * int x**(a+b) dx."""
    polys = [build_legendre(k).rational_coeffs for k in range(k_max + 1)]
    c = [monomial_moment(m) for m in range(2 * k_max + 1)]
    S = [[Fraction(0)] * (k_max + 1) for _ in range(k_max + 1)]
    for j in range(k_max + 1):
        for k in range(j, k_max + 1):
            s = Fraction(0)
            for a, ba in enumerate(polys[j]):
                if ba:
                    for b, bb in enumerate(polys[k]):
                        if bb:
                            s += ba * bb * c[a + b]
            S[j][k] = S[k][j] = s
    return S


def gram_check(k_max: int) -> bool:
    S = gram_matrix(k_max)
    return all(
        S[j][k] == (Fraction(2, 2 * k + 1) if j == k else 0)
        for j in range(k_max + 1)
        for k in range(k_max + 1)
    )


def coeffs_csv(k_max: int, cap: int = DEFAULT_SWEEP_CAP) -> str:
    """Coefficient dump: k, j, numerator, denominator_log2, sigma_sq_num, sigma_sq_den.

    Only parity-nonzero coefficients are written.
    """
    if k_max < 0 or k_max > cap:
        raise ValueError(f"k_max must lie in [0, {cap}]")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "j", "numerator", "denominator_log2", "sigma_sq_num", "sigma_sq_den"])
    for k in range(k_max + 1):
        p = build_legendre(k)
        for j in range(k % 2, k + 1, 2):
            # reduce numerator / 2**k to lowest terms
            fr = Fraction(p.numerators[j], 1 << k)
            w.writerow([k, j, fr.numerator, fr.denominator.bit_length() - 1,
                        p.sigma_sq.numerator, p.sigma_sq.denominator])
    return buf.getvalue()

"""Rate experiments for the upper bound and the Fano lower-bound construction."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .estimator import DEFAULT_ALPHA, analytic_mise, truncation_level
from .legendre import build_legendre
from .model import DEFAULT_PREC, beta_dot, derive_seed, forward_moments, make_rng, simulate

__all__ = [
    "MonteCarloResult",
    "monte_carlo",
    "RateRow",
    "RateTable",
    "rate_experiment",
    "hamming",
    "vg_code",
    "HypothesisFamily",
    "build_family",
    "separation",
    "kl_divergence",
    "kl_chain_bound",
    "default_c0",
    "block_length",
    "FanoReport",
    "fano_check",
]


# -- Monte Carlo ---------------------------------------------------------------

@dataclass
class MonteCarloResult:
    theta: np.ndarray       # true theta_0..theta_N
    theta_hat: np.ndarray   # reps x (N+1)
    sq_err: np.ndarray      # ||f_hat - f||^2 per replicate, by Parseval
    bias_sq: float

    @property
    def mise(self) -> float:
        return float(np.mean(self.sq_err))

    @property
    def stderr(self) -> float:
        return float(np.std(self.sq_err, ddof=1) / math.sqrt(len(self.sq_err)))


def monte_carlo(f, epsilon: float, N: int, reps: int, seed: int, cell: int = 0,
                prec: int = DEFAULT_PREC) -> MonteCarloResult:
    """Replicate the experiment; replicate i of ``cell`` uses derive_seed(seed, cell, i)."""
    if reps < 2:
        raise ValueError("need at least 2 replicates")
    mu = forward_moments(f, N, prec=prec)
    theta = f.theta_vec(N)
    bias_sq = analytic_mise(f, epsilon, N).bias_sq
    th = np.empty((reps, N + 1))
    for i in range(reps):
        data = simulate(mu, epsilon, derive_seed(seed, cell, i))
        th[i] = [beta_dot(k, data.y, prec) for k in range(N + 1)]
    sq_err = np.sum((th - theta) ** 2, axis=1) + bias_sq
    return MonteCarloResult(theta=theta, theta_hat=th, sq_err=sq_err, bias_sq=bias_sq)


# -- rate experiment -------------------------------------------------------------

@dataclass
class RateRow:
    epsilon: float
    N: int
    mise_analytic: float
    mise_mc: float | None
    stderr: float | None
    ratio: float


@dataclass
class RateTable:
    rows: list[RateRow]
    r: float
    alpha: float
    slope: float
    intercept: float

    def ratios(self) -> np.ndarray:
        return np.array([row.ratio for row in self.rows])

    def stability(self, last: int = 3) -> float:
        """max/min - 1 of the normalized risk over the last grid points."""
        tail = self.ratios()[-last:]
        return float(tail.max() / tail.min() - 1)


def rate_experiment(f, alpha: float = DEFAULT_ALPHA, eps_grid=None, reps: int = 0,
                    seed: int = 0, T: int | None = None) -> RateTable:
    """Risk of the default rule over a grid of noise levels.

    The slope is the least-squares fit of ln(analytic MISE) on ln ln(1/eps).
    """
    eps_grid = [10.0**-e for e in range(2, 11)] if eps_grid is None else list(eps_grid)
    if len(eps_grid) < 3:
        raise ValueError("need at least 3 noise levels to fit a slope")
    if any(e >= 1 or e <= 0 for e in eps_grid):
        raise ValueError("noise levels must lie in (0, 1)")
    if any(b >= a for a, b in zip(eps_grid, eps_grid[1:])):
        raise ValueError("noise grid must be strictly decreasing")
    rows = []
    for cell, eps in enumerate(eps_grid):
        N = truncation_level(eps, alpha)
        mise = analytic_mise(f, eps, N, T=T).total
        mc = se = None
        if reps > 0:
            res = monte_carlo(f, eps, N, reps, seed, cell=cell)
            mc, se = res.mise, res.stderr
        rows.append(RateRow(eps, N, mise, mc, se, mise * math.log(1 / eps) ** (2 * f.r)))
    x = np.log(np.log(1 / np.array(eps_grid)))
    y = np.log([row.mise_analytic for row in rows])
    slope, intercept = np.polyfit(x, y, 1)
    return RateTable(rows, f.r, alpha, float(slope), float(intercept))


# -- Varshamov-Gilbert code --------------------------------------------------------

def hamming(a, b) -> int:
    return sum(x != y for x, y in zip(a, b))


def vg_code(m: int, seed: int = 0, size: int | None = None,
            max_attempts: int = 10**6) -> list[tuple[int, ...]]:
    """Zero word plus ``size`` (default ceil(2**(m/8))) binary words of length m
    with all pairwise distances, zero word included, at least ceil(m/8).

    Randomized greedy: draw uniform words, keep those far from everything kept.
    Returned sorted, zero word first.
    """
    if m < 8:
        raise ValueError("block length must be >= 8")
    size = math.ceil(2 ** (m / 8)) if size is None else size
    d = math.ceil(m / 8)
    rng = make_rng(derive_seed(seed, m))
    kept = [0]
    attempts = 0
    while len(kept) <= size:
        if attempts == max_attempts:
            raise RuntimeError(f"found only {len(kept) - 1} of {size} codewords")
        attempts += 1
        w = int.from_bytes(rng.bytes((m + 7) // 8), "little") & ((1 << m) - 1)
        if all((w ^ v).bit_count() >= d for v in kept):
            kept.append(w)
    return sorted(tuple((w >> i) & 1 for i in range(m)) for w in kept)


# -- hypothesis family ----------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisFamily:
    """f_delta = c0 / m^((4r+3)/2) * sum_{l=m}^{2m-1} delta_l l^(r+1) P_l."""

    m: int
    r: float
    c0: float
    codewords: tuple[tuple[int, ...], ...]

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(self.m, 2 * self.m)

    def amplitudes(self) -> np.ndarray:
        l = self.degrees.astype(float)
        return self.c0 * l ** (self.r + 1) / self.m ** ((4 * self.r + 3) / 2)

    def theta(self, i: int) -> np.ndarray:
        """Nonzero block theta_m..theta_{2m-1} of codeword i."""
        return self.amplitudes() * np.array(self.codewords[i], dtype=float)

    def sobolev_sum(self, i: int) -> float:
        l = self.degrees.astype(float)
        return math.fsum(l ** (2 * self.r) * self.theta(i) ** 2)

    @property
    def sobolev_cap(self) -> float:
        return self.c0**2 * 2 ** (4 * self.r + 2)

    def __len__(self) -> int:
        return len(self.codewords)


def build_family(m: int, r: float, c0: float, codewords) -> HypothesisFamily:
    if m < 8:
        raise ValueError("block length must be >= 8")
    if c0 <= 0:
        raise ValueError("c0 must be positive")
    words = tuple(tuple(int(b) for b in w) for w in codewords)
    if any(len(w) != m for w in words):
        raise ValueError("codeword length must equal m")
    fam = HypothesisFamily(m, r, c0, words)
    for i in range(len(words)):
        if fam.sobolev_sum(i) > fam.sobolev_cap:
            raise ArithmeticError(f"codeword {i} violates the Sobolev cap")
    return fam


def separation(family: HypothesisFamily, i: int, j: int) -> float:
    """||f_i - f_j||^2 by Parseval."""
    diff = np.array(family.codewords[i]) - np.array(family.codewords[j])
    l = family.degrees.astype(float)
    s = math.fsum(l ** (2 * family.r + 2) * diff**2)
    return family.c0**2 / family.m ** (4 * family.r + 3) * s


def kl_divergence(family: HypothesisFamily, delta, epsilon: float) -> float:
    """KL(P_delta, P_0) = eps^-2 sum_l theta_{delta,l}^2 / sigma_l^2.

    ``delta`` is a codeword index or a 0/1 vector of length m.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    d = family.codewords[delta] if isinstance(delta, (int, np.integer)) else delta
    d = np.asarray(d, dtype=float)
    sig = np.array([float(build_legendre(int(l)).sigma_sq) for l in family.degrees])
    th = family.amplitudes() * d
    return math.fsum(th**2 / sig) / epsilon**2


def kl_chain_bound(m: int, r: float, c0: float, epsilon: float) -> float:
    """Closed-form KL cap c0^2 2^(2r+4) m / (eps^2 4^m)."""
    return c0**2 * 2 ** (2 * r + 4) * m / (epsilon**2 * 4.0**m)


def default_c0(r: float, target: float = 0.99) -> float:
    """Largest c0 with c0^2 2^(2r+7) / ln 2 <= target."""
    return math.sqrt(target * math.log(2) / 2 ** (2 * r + 7))


def block_length(epsilon: float) -> int:
    """m = floor(ln(1/eps^2) / ln 4), i.e. the largest m with 4^m <= eps^-2."""
    m = math.floor(math.log(1 / epsilon**2) / math.log(4))
    # guard against log rounding at exact powers of 4
    while 4.0 ** (m + 1) * epsilon**2 <= 1:
        m += 1
    while m > 0 and 4.0**m * epsilon**2 > 1:
        m -= 1
    return m


@dataclass
class FanoReport:
    epsilon: float
    r: float
    c0: float
    m: int
    M: int | None = None
    eta_sq: float | None = None
    min_separation: float | None = None
    kl_max: float | None = None
    kl_chain_bound: float | None = None
    H: float | None = None
    log_M: float | None = None
    c_natural: float = 0.0
    c_log10: float = 0.0
    conditions: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    lower_bound_value: float | None = None
    reference_bound: float | None = None
    codewords: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        d = asdict(self)
        d["codewords"] = ["".join(map(str, w)) for w in self.codewords]
        d["ok"] = self.ok
        return d


def fano_check(epsilon: float, r: float = 1.0, c0: float | None = None,
               seed: int = 0) -> FanoReport:
    """Build the lower-bound construction at noise level ``epsilon`` and check
    every precondition of the Fano bound.

    H is the largest KL divergence actually attained over the code.  Failed
    preconditions are listed in ``failures`` and leave the bound unset.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    c0 = default_c0(r) if c0 is None else float(c0)
    m = block_length(epsilon)
    rep = FanoReport(epsilon=epsilon, r=r, c0=c0, m=m,
                     c_natural=c0**2 * 2 ** (2 * r + 7) / math.log(2),
                     c_log10=c0**2 * 2 ** (2 * r + 7) / math.log10(2))
    rep.reference_bound = c0**2 / (96 * m ** (2 * r)) if m > 0 else None
    rep.conditions["m_at_least_8"] = m >= 8
    if m < 8:
        rep.failures.append("m_below_8")
        return rep

    code = vg_code(m, seed)
    M = len(code) - 1
    rep.M, rep.codewords = M, code
    rep.log_M = math.log(M)
    rep.conditions["family_size_at_least_6"] = M + 1 >= 6
    if M + 1 < 6:
        rep.failures.append("family_smaller_than_6")
        return rep

    fam = build_family(m, r, c0, code)
    rep.eta_sq = c0**2 / (8 * m ** (2 * r))
    seps = [separation(fam, i, j) for i, j in itertools.combinations(range(M + 1), 2)]
    rep.min_separation = min(seps)
    rep.conditions["separation"] = rep.min_separation >= rep.eta_sq

    kls = [kl_divergence(fam, i, epsilon) for i in range(1, M + 1)]
    rep.kl_max = max(kls)
    rep.kl_chain_bound = kl_chain_bound(m, r, c0, epsilon)
    rep.H = rep.kl_max
    rep.conditions["kl_within_chain_bound"] = rep.kl_max <= rep.kl_chain_bound
    rep.conditions["kl_below_log_M"] = rep.H < rep.log_M
    for name in ("separation", "kl_within_chain_bound", "kl_below_log_M"):
        if not rep.conditions[name]:
            rep.failures.append(name)
    if rep.failures:
        return rep
    rep.lower_bound_value = rep.eta_sq / 4 * (1 - max(2 / 3, rep.H / rep.log_M))
    return rep

"""Exit criteria.  Each test prints one PASS/FAIL line; the lines are repeated in
the terminal summary (see conftest.py)."""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from legmoments import cli
from legmoments.estimator import (
    DEFAULT_ALPHA,
    analytic_mise,
    estimate_coeffs,
    exact_coeffs,
    mise_upper_bound,
    truncation_level,
)
from legmoments.legendre import (
    build_legendre,
    gram_check,
    recurrence_coeffs,
    verify_binomial_lower,
    verify_binomial_upper,
    verify_sigma_bounds,
)
from legmoments.minimax import (
    build_family,
    fano_check,
    hamming,
    kl_chain_bound,
    kl_divergence,
    monte_carlo,
    rate_experiment,
    vg_code,
)
from legmoments.model import forward_moments, simulate
from legmoments.sobolev import make_test_function

RESULTS: list[str] = []


def report(name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_c1_inequality_sweeps():
    t0 = time.perf_counter()
    upper = all(h for _, h in verify_binomial_upper(200))
    lower = all(h for _, h in verify_binomial_lower(200))
    sigma = all(lo for _, lo, _ in verify_sigma_bounds(200))
    dt = time.perf_counter() - t0
    report("C1 inequality sweeps n<=200", upper and lower and sigma and dt < 5,
           f"binom_upper={upper} binom_lower={lower} sigma>=4^(n-1)={sigma} time={dt:.2f}s (<5s)")


def test_c2_orthonormality_and_recurrence():
    gram = gram_check(25)
    rec = recurrence_coeffs(50)
    same = all(build_legendre(k).rational_coeffs == rec[k] for k in range(51))
    report("C2 exact orthonormality j,k<=25 / closed form == recurrence k<=50", gram and same,
           f"gram={gram} recurrence_match={same}")


def test_c3_noiseless_roundtrip():
    N = 7
    th_exact = exact_coeffs({5: Fraction(1)}, N)
    truth = [Fraction(int(k == 5)) for k in range(N + 1)]
    err_sq = sum((a - b) ** 2 for a, b in zip(th_exact, truth))
    coef = [0.0] * 6
    coef[5] = 1.0
    f = make_test_function("a", 1.0, coef=coef)
    float_est = estimate_coeffs(simulate(forward_moments(f, N), 0.0, 0), N).theta_hat
    float_err = float(np.max(np.abs(float_est - np.eye(N + 1)[5])))
    ok = th_exact == truth and err_sq == 0 and float_err < 1e-12
    report("C3 noiseless P_5, N=7", ok,
           f"theta_hat==e_5 exactly={th_exact == truth} ||f_hat-f||^2={err_sq} float_path_maxerr={float_err:.1e}")


def test_c4_statistical_correctness():
    t0 = time.perf_counter()
    f = make_test_function("c", 1.0)
    eps, N, R = 1e-3, 6, 5000
    res = monte_carlo(f, eps, N, R, seed=2024)
    z = []
    for k in range(N + 1):
        se = eps * math.sqrt(float(build_legendre(k).sigma_sq)) / math.sqrt(R)
        z.append(abs(res.theta_hat[:, k].mean() - res.theta[k]) / se)
    analytic = analytic_mise(f, eps, N).total
    z_mise = abs(res.mise - analytic) / res.stderr
    dt = time.perf_counter() - t0
    ok = max(z) < 4 and z_mise < 4 and dt < 60
    report("C4 Monte Carlo, kind c r=1 eps=1e-3 N=6 R=5000", ok,
           f"max|mean-theta|/se={max(z):.2f} (<4) |MISE_mc-MISE|/se={z_mise:.2f} (<4) "
           f"MISE_mc={res.mise:.6e} MISE={analytic:.6e} time={dt:.1f}s (<60s)")


C5_GRID = [10.0**-e for e in range(2, 11)]


@pytest.fixture(scope="module")
def c5_tables():
    t0 = time.perf_counter()
    tables = {r: rate_experiment(make_test_function("b", r), alpha=DEFAULT_ALPHA, eps_grid=C5_GRID)
              for r in (1.0, 2.0)}
    return tables, time.perf_counter() - t0


@pytest.mark.parametrize("r", [1.0, 2.0])
def test_c5_envelope_stability(c5_tables, r):
    tables, dt = c5_tables
    t = tables[r]
    ratios = t.ratios()
    ok = bool(np.all(np.isfinite(ratios))) and t.stability() < 0.5 and dt < 10
    report(f"C5 envelope r={r:g}", ok,
           f"MISE*log(1/eps)^{2 * r:g} in [{ratios.min():.4f}, {ratios.max():.4f}] "
           f"last-3 variation={t.stability():.1%} (<50%) time={dt:.2f}s (<10s)")


@pytest.mark.parametrize("r", [1.0, 2.0])
def test_c5_slope(c5_tables, r):
    tables, _ = c5_tables
    t = tables[r]
    lo, hi = -2 * r - 0.8, -2 * r + 0.8
    report(f"C5 slope r={r:g}", lo <= t.slope <= hi,
           f"OLS slope of ln MISE on ln ln(1/eps) = {t.slope:.3f}, required [{lo:g}, {hi:g}]")


def test_c6_fano_machinery():
    t0 = time.perf_counter()
    eps, r = 1e-8, 1.0
    rep = fano_check(eps, r)
    code = vg_code(rep.m)
    fam = build_family(rep.m, r, rep.c0, code)
    dist_ok = all(hamming(a, b) >= 4 for a, b in itertools.combinations(code, 2))
    sob_ok = all(fam.sobolev_sum(i) <= rep.c0**2 * 2 ** (4 * r + 2) for i in range(len(fam)))
    kls = [kl_divergence(fam, i, eps) for i in range(1, len(fam))]
    chain = kl_chain_bound(rep.m, r, rep.c0, eps)
    kl_ok = all(k <= chain and k <= rep.H for k in kls) and rep.H < rep.log_M
    ref = rep.c0**2 / (96 * rep.m ** (2 * r))
    lb_ok = rep.lower_bound_value >= ref if rep.H / rep.log_M <= 2 / 3 else True
    fail = fano_check(1e-2, r)
    fail_ok = (not fail.ok) and fail.failures == ["m_below_8"] and fail.m < 8
    dt = time.perf_counter() - t0
    ok = (rep.ok and rep.m == 26 and rep.M >= 10 and dist_ok and sob_ok and kl_ok
          and lb_ok and fail_ok and dt < 30)
    report("C6 Fano construction eps=1e-8 r=1", ok,
           f"m={rep.m} M={rep.M} min_dist>=4={dist_ok} sobolev={sob_ok} "
           f"KL_max={rep.kl_max:.3e}<=chain {chain:.3f}, H<ln M={rep.log_M:.3f}: {kl_ok} "
           f"lower={rep.lower_bound_value:.6e}>=c0^2/(96m^2)={ref:.6e}: {lb_ok} "
           f"eps=1e-2 -> {fail.failures} time={dt:.2f}s (<30s)")


def test_c7_sandwich():
    eps, r = 1e-8, 1.0
    rep = fano_check(eps, r)
    f = make_test_function("b", r)
    N = truncation_level(eps, DEFAULT_ALPHA)
    mise = analytic_mise(f, eps, N).total
    env = mise_upper_bound(eps, N, r, f.sobolev_norm()).total
    report("C7 sandwich eps=1e-8 r=1", rep.lower_bound_value <= mise <= env,
           f"{rep.lower_bound_value:.3e} <= MISE={mise:.3e} <= envelope={env:.3e} (N={N})")


def _body(path):
    return path.read_bytes().split(b"\n", 1)[1]


def test_c8_determinism(tmp_path):
    runs = {
        "simulate": ["simulate", "--kind", "b", "--epsilon", "1e-5", "--seed", "99"],
        "rate": ["rate", "--kind", "c", "--eps-grid", "1e-2,1e-3,1e-4", "--reps", "200", "--seed", "5"],
        "coeffs": ["coeffs", "--k-max", "40"],
    }
    same = {}
    for name, argv in runs.items():
        bodies = []
        for i in range(2):
            out = tmp_path / f"{name}{i}.csv"
            assert cli.main(argv + ["--out", str(out)]) == 0
            bodies.append(_body(out))
        same[name] = bodies[0] == bodies[1]
    report("C8 determinism", all(same.values()),
           " ".join(f"{k}_identical={v}" for k, v in same.items()))
